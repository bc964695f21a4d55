//! Real 1D/2D cross-correlations through complex FFTs.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse transforms on an `mx × my` row-major buffer.
pub struct Fft2 {
    pub mx: usize,
    pub my: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(mx: usize, my: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 { mx, my, fx: p.plan_fft_forward(mx), ix: p.plan_fft_inverse(mx), fy: p.plan_fft_forward(my), iy: p.plan_fft_inverse(my) }
    }

    fn apply(&self, buf: &mut [Complex64], x: &Arc<dyn Fft<f64>>, y: &Arc<dyn Fft<f64>>) {
        x.process(buf);
        if self.my > 1 {
            let mut col = vec![Complex64::new(0.0, 0.0); self.my];
            for i in 0..self.mx {
                for j in 0..self.my {
                    col[j] = buf[j * self.mx + i];
                }
                y.process(&mut col);
                for j in 0..self.my {
                    buf[j * self.mx + i] = col[j];
                }
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.apply(buf, &self.fx, &self.fy);
    }

    /// Inverse transform including the 1/(mx·my) normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.apply(buf, &self.ix, &self.iy);
        let s = 1.0 / (self.mx * self.my) as f64;
        buf.iter_mut().for_each(|c| *c *= s);
    }

    /// Embed an `nx × ny` real array in the top-left corner (zero elsewhere)
    /// and transform.
    pub fn spectrum(&self, values: &[f64], nx: usize, ny: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.mx * self.my];
        for j in 0..ny {
            for i in 0..nx {
                buf[j * self.mx + i] = Complex64::new(values[j * nx + i], 0.0);
            }
        }
        self.forward(&mut buf);
        buf
    }
}

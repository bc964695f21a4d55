//! Cell-averaged kernel weights `w_k = ∫_{cell k} J_ε(h) dh` on the offset
//! lattice of a grid, with a small process-wide cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::fft::Fft2;
use crate::fields::Grid;
use crate::kernels::Kernel;
use crate::quad::QuadTol;

/// Offset weights for one (kernel, ε, grid) triple.
///
/// `w` is a dense table over offsets `k ∈ [−kx, kx] × [−ky, ky]` with the
/// zero offset set to 0: piecewise-constant fields have no differences
/// inside a cell, so that weight never contributes. Periodic grids fold the
/// lattice onto the torus; the mass of J_ε beyond the lattice reach enters
/// `tail_bound`.
pub struct WeightTable {
    pub grid: Grid,
    pub eps: f64,
    pub kernel: String,
    pub kx: usize,
    pub ky: usize,
    pub w: Vec<f64>,
    /// Σ over lattice images, indexed by offset mod n (periodic grids).
    pub folded: Option<Vec<f64>>,
    /// Upper bound on the kinetic energy lost to the lattice cap.
    pub tail_bound: f64,
    pub cap_radius: f64,
    spectrum: OnceLock<(Fft2, Vec<Complex64>)>,
}

/// Lattice reach for periodic grids with unbounded kernels, in periods.
pub const PERIODIC_IMAGES: usize = 4;

impl WeightTable {
    pub fn new(j: &Kernel, eps: f64, grid: &Grid) -> Self {
        let je = j.scaled(eps).expect("positive ε");
        let hx = grid.spacing(0);
        let hy = if grid.dim == 2 { grid.spacing(1) } else { 1.0 };
        let support = je.support_radius();
        let (kx, ky, cap) = if grid.periodic() {
            let reach = |n: usize, h: f64| match support {
                Some(r) => (r / h + 1.0).ceil() as usize,
                None => PERIODIC_IMAGES * n,
            };
            let kx = reach(grid.n[0], hx);
            let ky = if grid.dim == 2 { reach(grid.n[1], hy) } else { 0 };
            let cap = ((kx as f64 - 0.5) * hx).min(if grid.dim == 2 { (ky as f64 - 0.5) * hy } else { f64::INFINITY });
            (kx, ky, cap)
        } else {
            let clip = |n: usize, h: f64| match support {
                Some(r) => ((r / h + 1.0).ceil() as usize).min(n - 1),
                None => n - 1,
            };
            let ky = if grid.dim == 2 { clip(grid.n[1], hy) } else { 0 };
            (clip(grid.n[0], hx), ky, f64::INFINITY)
        };
        let (wx, wy) = (2 * kx + 1, 2 * ky + 1);
        let scale_n = eps.powi(-(grid.dim as i32));
        let tol = QuadTol { abs: 1e-14 * scale_n * grid.cell_volume(), rel: 1e-11, max_intervals: 4000 };
        let w: Vec<f64> = (0..wx * wy)
            .into_par_iter()
            .map(|idx| {
                let (a, b) = ((idx % wx) as i64 - kx as i64, (idx / wx) as i64 - ky as i64);
                if a == 0 && b == 0 {
                    return 0.0;
                }
                let lo = [(a as f64 - 0.5) * hx, (b as f64 - 0.5) * hy];
                let hi = [(a as f64 + 0.5) * hx, (b as f64 + 0.5) * hy];
                if let Some(r) = support {
                    let dx = lo[0].abs().min(hi[0].abs());
                    let dy = if grid.dim == 2 { lo[1].abs().min(hi[1].abs()) } else { 0.0 };
                    let near = [if a == 0 { 0.0 } else { dx }, if b == 0 { 0.0 } else { dy }];
                    if near[0].hypot(near[1]) >= r {
                        return 0.0;
                    }
                }
                if grid.dim == 1 {
                    je.box_integral(&lo[..1], &hi[..1], tol)
                } else {
                    je.box_integral(&lo, &hi, tol)
                }
            })
            .collect();
        let (tail_bound, folded) = if grid.periodic() {
            let (nx, ny) = (grid.n[0], grid.n[1]);
            let mut f = vec![0.0; nx * ny];
            for idx in 0..wx * wy {
                let (a, b) = ((idx % wx) as i64 - kx as i64, (idx / wx) as i64 - ky as i64);
                let (fa, fb) = (a.rem_euclid(nx as i64) as usize, b.rem_euclid(ny as i64) as usize);
                f[fb * nx + fa] += w[idx];
            }
            let tail = if cap.is_finite() {
                je.tail_mass(cap, QuadTol::default()).unwrap_or(f64::INFINITY)
            } else {
                0.0
            };
            (grid.volume() * tail / eps, Some(f))
        } else {
            (0.0, None)
        };
        WeightTable {
            grid: grid.clone(),
            eps,
            kernel: j.descriptor().to_string(),
            kx,
            ky,
            w,
            folded,
            tail_bound,
            cap_radius: cap,
            spectrum: OnceLock::new(),
        }
    }

    /// The table applies to grids of the same shape wherever they sit.
    pub fn fits(&self, g: &Grid) -> bool {
        let mut shape = g.clone();
        shape.origin = self.grid.origin;
        shape == self.grid
    }

    pub fn width(&self) -> (usize, usize) {
        (2 * self.kx + 1, 2 * self.ky + 1)
    }

    /// Weight of offset (a, b), zero outside the table.
    pub fn weight(&self, a: i64, b: i64) -> f64 {
        if a.unsigned_abs() as usize > self.kx || b.unsigned_abs() as usize > self.ky {
            return 0.0;
        }
        let wx = 2 * self.kx + 1;
        self.w[(b + self.ky as i64) as usize * wx + (a + self.kx as i64) as usize]
    }

    /// Nonzero offsets as (a, b, w), in a fixed order. Periodic grids list
    /// the folded torus offsets.
    pub fn offsets(&self) -> Vec<(i64, i64, f64)> {
        match &self.folded {
            Some(f) => {
                let nx = self.grid.n[0];
                f.iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(k, w)| ((k % nx) as i64, (k / nx) as i64, *w))
                    .collect()
            }
            None => {
                let (wx, _) = self.width();
                self.w
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(k, w)| ((k % wx) as i64 - self.kx as i64, (k / wx) as i64 - self.ky as i64, *w))
                    .collect()
            }
        }
    }

    /// Σ_k w_k.
    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }

    /// FFT layout: periodic grids use the torus itself, boxed grids pad each
    /// axis to at least 2n − 1 so the correlations are linear.
    pub fn fft_dims(&self) -> (usize, usize) {
        let g = &self.grid;
        if g.periodic() {
            (g.n[0], g.n[1])
        } else {
            let pad = |n: usize| if n == 1 { 1 } else { next_smooth(2 * n) };
            let my = if g.dim == 2 { pad(g.n[1]) } else { 1 };
            (pad(g.n[0]), my)
        }
    }

    /// Planner and spectrum of the weights laid out by offset mod (mx, my).
    pub fn spectrum(&self) -> &(Fft2, Vec<Complex64>) {
        self.spectrum.get_or_init(|| {
            let (mx, my) = self.fft_dims();
            let plan = Fft2::new(mx, my);
            let mut buf = vec![Complex64::new(0.0, 0.0); mx * my];
            match &self.folded {
                Some(f) => {
                    for (k, v) in f.iter().enumerate() {
                        buf[k] = Complex64::new(*v, 0.0);
                    }
                }
                None => {
                    for (a, b, w) in self.offsets() {
                        let (ia, ib) = (a.rem_euclid(mx as i64) as usize, b.rem_euclid(my as i64) as usize);
                        buf[ib * mx + ia] += Complex64::new(w, 0.0);
                    }
                }
            }
            plan.forward(&mut buf);
            (plan, buf)
        })
    }
}

/// Smallest m ≥ n of the form 2^a 3^b 5^c.
fn next_smooth(n: usize) -> usize {
    let mut m = n;
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

type Key = (String, u64, String);

fn cache() -> &'static Mutex<HashMap<Key, Arc<WeightTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<WeightTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

const CACHE_LIMIT: usize = 48;

/// Cached weight table for (J, ε, grid).
pub fn weights(j: &Kernel, eps: f64, grid: &Grid) -> Arc<WeightTable> {
    // Weights do not depend on where the grid sits.
    let mut shape = grid.clone();
    shape.origin = [0.0, 0.0];
    let key = (j.descriptor().to_string(), eps.to_bits(), serde_json::to_string(&shape).expect("grid serializes"));
    if let Some(t) = cache().lock().expect("cache lock").get(&key) {
        return t.clone();
    }
    let t = Arc::new(WeightTable::new(j, eps, &shape));
    let mut c = cache().lock().expect("cache lock");
    if c.len() >= CACHE_LIMIT {
        c.clear();
    }
    c.insert(key, t.clone());
    t
}

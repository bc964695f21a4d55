//! Centrally symmetric convex bodies K in the plane, stored through their
//! radial function r_K(θ) sampled on a uniform grid of [0, π).

use std::f64::consts::PI;

use super::KernelError;

#[derive(Clone, Debug, PartialEq)]
pub struct NormBall {
    radii: Vec<f64>,
    descriptor: BallDescriptor,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BallDescriptor {
    Ellipse { a: f64, b: f64, angle: f64 },
    Samples,
}

/// Default number of radial samples over [0, π).
pub const BALL_SAMPLES: usize = 720;

impl NormBall {
    /// Ellipse with semi-axes `a` (along `angle`) and `b`.
    pub fn ellipse(a: f64, b: f64, angle: f64) -> Result<Self, KernelError> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(KernelError::NotANorm("ellipse semi-axes must be positive and finite".into()));
        }
        let radii = (0..BALL_SAMPLES)
            .map(|j| {
                let t = PI * j as f64 / BALL_SAMPLES as f64 - angle;
                1.0 / ((t.cos() / a).powi(2) + (t.sin() / b).powi(2)).sqrt()
            })
            .collect();
        Ok(NormBall { radii, descriptor: BallDescriptor::Ellipse { a, b, angle } })
    }

    /// Radial samples over [0, π); the body is extended by central symmetry.
    pub fn from_radii(radii: Vec<f64>) -> Result<Self, KernelError> {
        if radii.len() < 4 {
            return Err(KernelError::NotANorm("at least 4 radial samples are required".into()));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(KernelError::NotANorm("radial samples must be positive and finite (bounded, absorbing)".into()));
        }
        let ball = NormBall { radii, descriptor: BallDescriptor::Samples };
        ball.check_convex()?;
        Ok(ball)
    }

    pub fn descriptor(&self) -> &BallDescriptor {
        &self.descriptor
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn check_convex(&self) -> Result<(), KernelError> {
        let m = self.radii.len();
        let pts: Vec<[f64; 2]> = (0..2 * m)
            .map(|j| {
                let t = PI * j as f64 / m as f64;
                let r = self.radii[j % m];
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let n = pts.len();
        let scale = self.radii.iter().cloned().fold(0.0, f64::max);
        for j in 0..n {
            let p0 = pts[(j + n - 1) % n];
            let p1 = pts[j];
            let p2 = pts[(j + 1) % n];
            let cross = (p1[0] - p0[0]) * (p2[1] - p1[1]) - (p1[1] - p0[1]) * (p2[0] - p1[0]);
            if cross < -1e-12 * scale * scale {
                return Err(KernelError::NotANorm(format!("boundary is not convex near angle {:.4}", PI * j as f64 / m as f64)));
            }
        }
        Ok(())
    }

    /// Radial function r_K(θ), linear interpolation on the sample grid.
    pub fn radius(&self, theta: f64) -> f64 {
        let m = self.radii.len();
        let u = theta.rem_euclid(PI) / PI * m as f64;
        let i = (u.floor() as usize).min(m - 1);
        let f = u - i as f64;
        let r0 = self.radii[i];
        let r1 = self.radii[(i + 1) % m];
        r0 + f * (r1 - r0)
    }

    /// Gauge ‖x‖_K.
    pub fn gauge(&self, x: [f64; 2]) -> f64 {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return 0.0;
        }
        r / self.radius(x[1].atan2(x[0]))
    }

    /// ∫_{S^1} r_K(θ)^q dθ by the periodic trapezoid rule on a refined grid.
    pub fn angular_power_integral(&self, q: f64) -> f64 {
        let n = 8 * self.radii.len();
        let h = 2.0 * PI / n as f64;
        (0..n).map(|j| self.radius(h * j as f64).powf(q)).sum::<f64>() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_gauge() {
        let k = NormBall::ellipse(2.0, 1.0, 0.0).unwrap();
        assert!((k.gauge([2.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((k.gauge([0.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((k.gauge([-4.0, 0.0]) - 2.0).abs() < 1e-12);
        let g = k.gauge([1.0, 1.0]);
        assert!((g - (0.25f64 + 1.0).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn rejects_nonconvex() {
        let mut radii = vec![1.0; 16];
        radii[3] = 0.2;
        assert!(NormBall::from_radii(radii).is_err());
        assert!(NormBall::from_radii(vec![1.0; 16]).is_ok());
        assert!(NormBall::from_radii(vec![1.0, -1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn disc_angular_integral() {
        let k = NormBall::from_radii(vec![1.0; 64]).unwrap();
        assert!((k.angular_power_integral(3.5) - 2.0 * PI).abs() < 1e-12);
    }
}

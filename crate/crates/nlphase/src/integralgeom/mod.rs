//! Numerical checks of the integral-geometric lemmas: the
//! Blaschke–Petkantschin slicing identity, the Steiner tube bound and the
//! far-field line-kernel integral.

mod farfield;
mod slicing;
mod steiner;

pub use farfield::{farfield_check, farfield_line_integral, FarfieldReport, LineIntegral};
pub use slicing::{bp_check, bp_check_with, overlap, BpReport, Region, TwoPoint, BP_TOLERANCE};
pub use steiner::{segments, steiner_check, steiner_fit, Segment, SteinerFit, SteinerReport};

use serde::{Deserialize, Serialize};

use crate::fields::InterfaceError;
use crate::kernels::KernelError;

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("slicing identity violated: lhs = {lhs}, rhs = {rhs} ± {stderr}")]
    IdentityViolation { lhs: f64, rhs: f64, stderr: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Interface(#[from] InterfaceError),
}

/// A line x₀ + ℝξ in the plane with its Monte Carlo weight under the line
/// measure (1/2)∫_{S¹}∫_{ξ^⊥} d𝓗¹ d𝓗¹.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub xi: [f64; 2],
    /// Basepoint, orthogonal to ξ.
    pub z: [f64; 2],
    pub weight: f64,
}

impl LineSample {
    /// Line through the disc of radius `radius` about `center`, at signed
    /// offset `offset ∈ [−radius, radius]` along ξ^⊥. `weight` is per sample
    /// for `count` uniform draws of (angle, offset).
    pub fn through_disc(angle: f64, offset: f64, center: [f64; 2], radius: f64, count: usize) -> Self {
        let xi = [angle.cos(), angle.sin()];
        let eta = [-xi[1], xi[0]];
        let c = center[0] * eta[0] + center[1] * eta[1] + offset;
        LineSample {
            xi,
            z: [c * eta[0], c * eta[1]],
            weight: 0.5 * std::f64::consts::TAU * 2.0 * radius / count as f64,
        }
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        [self.z[0] + t * self.xi[0], self.z[1] + t * self.xi[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basepoint_is_orthogonal() {
        for k in 0..50 {
            let a = 0.37 * k as f64;
            let l = LineSample::through_disc(a, 0.3 - 0.01 * k as f64, [0.4, -1.2], 2.0, 10);
            assert!((l.z[0] * l.xi[0] + l.z[1] * l.xi[1]).abs() < 1e-14);
            assert!((l.weight - 0.4 * std::f64::consts::PI).abs() < 1e-14);
        }
    }
}

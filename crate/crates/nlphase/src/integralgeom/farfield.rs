//! F(ξ) = ∫_{−∞}^{−1}∫_1^∞ J^ξ(t − s) dt ds with J^ξ(t) = J(tξ)|t|^{N−1},
//! its sphere integral and the bound ∫_{B₂^c} J|h| ln|h| dh.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::GeomError;
use crate::kernels::Kernel;
use crate::quad::{integrate_to_infinity, Asymptote, QuadTol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineIntegral {
    pub xi: Vec<f64>,
    pub value: f64,
    pub divergent: bool,
    /// Cumulative outer integral over dyadic shells in s.
    pub refinement: Vec<f64>,
}

fn unit(j: &Kernel, xi: &[f64]) -> Result<Vec<f64>, GeomError> {
    if xi.len() != j.dim() {
        return Err(GeomError::Precondition(format!("direction has {} components, kernel dimension is {}", xi.len(), j.dim())));
    }
    let n = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(GeomError::Precondition("direction must be nonzero".into()));
    }
    Ok(xi.iter().map(|x| x / n).collect())
}

/// F(ξ) = ∫_1^∞ ∫_{1+s}^∞ J^ξ(r) dr ds. The inner tail uses the kernel's
/// power law; the outer integral runs dyadic shells with the divergence
/// detector.
pub fn farfield_line_integral(j: &Kernel, xi: &[f64]) -> Result<LineIntegral, GeomError> {
    let xi = unit(j, xi)?;
    let n = j.dim() as f64;
    let tol = QuadTol { abs: 1e-11, rel: 1e-9, max_intervals: 2000 };
    let jxi = |r: f64| {
        let h: Vec<f64> = xi.iter().map(|x| r * x).collect();
        j.eval(&h) * r.powf(n - 1.0)
    };
    let breaks = j.radial_breaks();
    let far = breaks.iter().cloned().fold(1.0, f64::max);
    let (inner_asym, outer_asym, outer_far) = match (j.support_radius(), j.fractional_s()) {
        (Some(r), _) => (Asymptote::Zero, Asymptote::Zero, (r - 1.0).max(1.0)),
        (None, Some(s)) => (Asymptote::Power { p: 1.0 + 2.0 * s }, Asymptote::Unknown, 1.0),
        _ => (Asymptote::Unknown, Asymptote::Unknown, 1.0),
    };
    let inner = |s: f64| integrate_to_infinity(&jxi, 1.0 + s, &breaks, inner_asym, far, tol).value;
    let outer_breaks: Vec<f64> = breaks.iter().map(|b| b - 1.0).filter(|b| *b > 1.0).collect();
    let r = integrate_to_infinity(&inner, 1.0, &outer_breaks, outer_asym, outer_far, tol);
    Ok(LineIntegral { xi, value: r.value, divergent: r.divergent, refinement: r.refinement })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarfieldReport {
    pub kernel: String,
    pub dim: usize,
    pub h2_pass: bool,
    pub values: Vec<LineIntegral>,
    pub sphere_integral: f64,
    /// ∫_{B₂^c} J|h| ln|h| dh.
    pub h2_bound: f64,
    pub holds: bool,
    pub divergent: bool,
    /// Divergence under a kernel that fails (H2).
    pub expected_divergent: bool,
    /// max F / min F over the directions (1 when F vanishes).
    pub anisotropy: f64,
}

/// Sphere integral of F by the midpoint rule on `directions` angles (the
/// two points ±1 in one dimension), checked against the (H2) tail bound.
pub fn farfield_check(j: &Kernel, directions: usize, tolerance: f64) -> Result<FarfieldReport, GeomError> {
    let h2_pass = !j.h2_integral(QuadTol::default()).divergent;
    let (dirs, weight): (Vec<Vec<f64>>, f64) = match j.dim() {
        1 => (vec![vec![1.0], vec![-1.0]], 1.0),
        2 => {
            if directions < 1 {
                return Err(GeomError::Precondition("need at least one direction".into()));
            }
            let m = directions as f64;
            ((0..directions).map(|k| (k as f64 + 0.5) * TAU / m).map(|t| vec![t.cos(), t.sin()]).collect(), TAU / m)
        }
        d => return Err(GeomError::Precondition(format!("unsupported dimension {d}"))),
    };
    let values = dirs.par_iter().map(|x| farfield_line_integral(j, x)).collect::<Result<Vec<_>, _>>()?;
    let divergent = values.iter().any(|v| v.divergent);
    let sphere_integral = if divergent { f64::INFINITY } else { values.iter().map(|v| v.value).sum::<f64>() * weight };
    let b = j.radial_integral(&|r: f64| r * r.ln(), 2.0, None, 1.0, 1.0, true, QuadTol::default());
    let h2_bound = if b.divergent { f64::INFINITY } else { b.value };
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(a, c), v| (a.min(v.value), c.max(v.value)));
    let anisotropy = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(FarfieldReport {
        kernel: j.descriptor().to_string(),
        dim: j.dim(),
        h2_pass,
        values,
        sphere_integral,
        h2_bound,
        holds: !divergent && sphere_integral <= h2_bound + tolerance,
        divergent,
        expected_divergent: divergent && !h2_pass,
        anisotropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫_2^∞ (r − 2) r^{−1−2s} dr.
    fn closed_form(s: f64) -> f64 {
        2f64.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0) - 2.0 * 2f64.powf(-2.0 * s) / (2.0 * s)
    }

    #[test]
    fn fractional_matches_closed_form() {
        for (dim, s) in [(1, 0.75), (2, 0.75), (2, 0.9)] {
            let j = Kernel::fractional(dim, s).unwrap();
            let xi = if dim == 1 { vec![1.0] } else { vec![0.6, 0.8] };
            let f = farfield_line_integral(&j, &xi).unwrap();
            assert!(!f.divergent);
            assert!((f.value / closed_form(s) - 1.0).abs() < 1e-5, "{dim} {s}: {} vs {}", f.value, closed_form(s));
        }
    }

    #[test]
    fn short_compact_kernel_has_no_far_field() {
        let j = Kernel::compact_radial(2, 1.5).unwrap();
        let r = farfield_check(&j, 8, 1e-9).unwrap();
        assert!(r.values.iter().all(|v| v.value == 0.0));
        assert!(r.holds);
    }

    #[test]
    fn borderline_exponent_diverges() {
        let j = Kernel::fractional_unchecked(2, 0.5).unwrap();
        let r = farfield_check(&j, 4, 1e-6).unwrap();
        assert!(r.divergent && r.expected_divergent && !r.h2_pass);
    }
}

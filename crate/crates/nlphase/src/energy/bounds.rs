//! Interior and separation estimates for the kinetic term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_eps, kinetic_auto_pair, EnergyError};
use crate::fields::{region_distance, Field, Mask};
use crate::kernels::Kernel;
use crate::quad::{self, Asymptote, QuadTol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundReport { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) + 1e-13 }
    }
}

/// Integration domain for the interior estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrationRegion {
    Whole,
    /// Axis-aligned box; only the first `dim` coordinates are used.
    Box { lo: [f64; 2], hi: [f64; 2] },
}

fn tol() -> QuadTol {
    QuadTol { abs: 1e-13, rel: 1e-10, max_intervals: 4000 }
}

/// ∫_0^{rmax} R(r) min(c r, b)² r^{N−1} dr for the unscaled radial profile.
fn radial_segment(j: &Kernel, c: f64, b: f64, rmax: f64) -> f64 {
    if c == 0.0 || rmax <= 0.0 {
        return 0.0;
    }
    let n = j.dim() as f64;
    let kink = b / c;
    let f = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        let rad = j.radial(r);
        if rad == 0.0 {
            return 0.0;
        }
        let g = (c * r).min(b);
        rad * g * g * r.powf(n - 1.0)
    };
    let mut breaks = j.radial_breaks();
    breaks.push(kink);
    let rmax = j.support_radius().map_or(rmax, |s| s.min(rmax));
    // Below the kink and the cut the integrand is c² r^{1−2s} (times r^{N−1} R).
    let asym = match j.singularity_order() {
        Some(order) => Asymptote::Power { p: -(order + 2.0 + n - 1.0) },
        None => Asymptote::Zero,
    };
    let r0 = 1e-3 * rmax.min(kink).min(1.0);
    quad::integrate_from_zero(&f, rmax, &breaks, asym, r0, tol()).value
}

/// ∫_A J_ε(y − x) ((a|y − x|) ∧ b)² dx against a·b·M_J·ε, which bounds it
/// whenever b ≥ aε.
pub fn interior_bound(
    j: &Kernel,
    eps: f64,
    a: f64,
    b: f64,
    region: IntegrationRegion,
    y: &[f64],
) -> Result<BoundReport, EnergyError> {
    check_eps(eps)?;
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(EnergyError::Precondition(format!("a = {a} and b = {b} must be nonnegative")));
    }
    if b < a * eps {
        return Err(EnergyError::Precondition(format!("b = {b} < aε = {}", a * eps)));
    }
    let mj = j.moment_mj(tol())?;
    let rhs = a * b * mj * eps;
    if a == 0.0 {
        return Ok(BoundReport::new(0.0, rhs));
    }
    // x = y + εz turns the left side into ∫ J(z) min(aε|z|, b)² dz.
    let c = a * eps;
    let lhs = match region {
        IntegrationRegion::Whole => {
            let kink = b / c;
            let near = j.radial_integral(&|r: f64| c * c * r * r, 0.0, Some(kink), 2.0, 2.0, false, tol());
            let far = j.radial_integral(&|_| b * b, kink, None, 0.0, 0.0, false, tol());
            if far.divergent || near.divergent {
                return Err(EnergyError::Precondition("kernel violates the moment hypothesis".into()));
            }
            near.value + far.value
        }
        IntegrationRegion::Box { lo, hi } => {
            let d = j.dim();
            if (0..d).any(|k| !(lo[k] <= y[k] && y[k] <= hi[k])) {
                return Err(EnergyError::Precondition("y must lie in the box".into()));
            }
            let lo: Vec<f64> = (0..d).map(|k| (lo[k] - y[k]) / eps).collect();
            let hi: Vec<f64> = (0..d).map(|k| (hi[k] - y[k]) / eps).collect();
            if d == 1 {
                radial_segment(j, c, b, -lo[0]) + radial_segment(j, c, b, hi[0])
            } else {
                box_polar(j, c, b, &lo, &hi)
            }
        }
    };
    Ok(BoundReport::new(lhs, rhs))
}

/// Polar integration over a box containing the origin.
fn box_polar(j: &Kernel, c: f64, b: f64, lo: &[f64], hi: &[f64]) -> f64 {
    let reach = |t: f64| {
        let (ct, st) = (t.cos(), t.sin());
        let rx = if ct > 0.0 { hi[0] / ct } else if ct < 0.0 { lo[0] / ct } else { f64::INFINITY };
        let ry = if st > 0.0 { hi[1] / st } else if st < 0.0 { lo[1] / st } else { f64::INFINITY };
        rx.min(ry).max(0.0)
    };
    let mut breaks: Vec<f64> = [(hi[0], hi[1]), (lo[0], hi[1]), (lo[0], lo[1]), (hi[0], lo[1])]
        .iter()
        .map(|&(x, y): &(f64, f64)| y.atan2(x).rem_euclid(2.0 * PI))
        .collect();
    breaks.extend([0.5 * PI, PI, 1.5 * PI]);
    let f = |t: f64| j.angular(&[t.cos(), t.sin()]) * radial_segment(j, c, b, reach(t));
    quad::integrate_breaks(&f, 0.0, 2.0 * PI, &breaks, QuadTol { abs: 1e-12, rel: 1e-9, max_intervals: 2000 }).value
}

/// 𝒥_ε(u, E, F) against (1/2δ) ω₁(ε/δ) ∫_{E∪F} u², valid when d(E, F) ≥ δ.
pub fn separation_bound(u: &Field, e: &Mask, f: &Mask, j: &Kernel, eps: f64, delta: f64) -> Result<BoundReport, EnergyError> {
    check_eps(eps)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(EnergyError::Precondition(format!("δ = {delta} must be positive")));
    }
    if e.grid != u.grid || f.grid != u.grid {
        return Err(EnergyError::GridMismatch);
    }
    let d = region_distance(e, f);
    if d < delta * (1.0 - 1e-12) {
        return Err(EnergyError::Precondition(format!("d(E, F) = {d} < δ = {delta}")));
    }
    let lhs = kinetic_auto_pair(u, e, f, j, eps)?;
    let w1 = j.omega1(eps / delta, tol())?;
    let v = u.grid.cell_volume();
    let l2: f64 = u.values.iter().enumerate().filter(|(k, _)| e.cells[*k] || f.cells[*k]).map(|(_, x)| x * x * v).sum();
    Ok(BoundReport::new(lhs, w1 * l2 / (2.0 * delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn indicator_whole_line() {
        // J = 1 on |z| < 1: ∫_{-1}^{1} min(aε|z|, b)² dz with aε = 0.5 ≤ b = 1
        // gives 2 · 0.25/3, and M_J = 2 · 1/3.
        let j = Kernel::compact_radial(1, 1.0).unwrap();
        let r = interior_bound(&j, 0.5, 1.0, 1.0, IntegrationRegion::Whole, &[0.0]).unwrap();
        assert!((r.lhs - 0.5 / 3.0).abs() < 1e-12, "{}", r.lhs);
        assert!((r.rhs - 0.5 * 2.0 / 3.0).abs() < 1e-12);
        assert!(r.holds);
        let boxed = interior_bound(&j, 0.5, 1.0, 1.0, IntegrationRegion::Box { lo: [-1.0, 0.0], hi: [1.0, 0.0] }, &[0.0]).unwrap();
        assert!((boxed.lhs - r.lhs).abs() < 1e-12);
        let zero = interior_bound(&j, 0.5, 0.0, 1.0, IntegrationRegion::Whole, &[0.0]).unwrap();
        assert_eq!(zero.lhs, 0.0);
        assert!(interior_bound(&j, 0.5, 4.0, 1.0, IntegrationRegion::Whole, &[0.0]).is_err());
    }

    #[test]
    fn fractional_box_is_below_whole() {
        let j = Kernel::fractional(2, 0.75).unwrap();
        let whole = interior_bound(&j, 0.1, 2.0, 0.5, IntegrationRegion::Whole, &[0.0, 0.0]).unwrap();
        let boxed = interior_bound(&j, 0.1, 2.0, 0.5, IntegrationRegion::Box { lo: [-0.3, -0.2], hi: [0.5, 0.4] }, &[0.1, 0.0]).unwrap();
        assert!(boxed.lhs < whole.lhs && boxed.lhs > 0.0);
        assert!(whole.holds && boxed.holds);
        // A huge box recovers the whole-space value up to the tail beyond it.
        let big = interior_bound(&j, 0.1, 2.0, 0.5, IntegrationRegion::Box { lo: [-1e3, -1e3], hi: [1e3, 1e3] }, &[0.0, 0.0]).unwrap();
        assert!((big.lhs - whole.lhs).abs() < 1e-3 * whole.lhs, "{} {}", big.lhs, whole.lhs);
    }

    #[test]
    fn random_interior_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let j = Kernel::fractional(1, 0.75).unwrap();
        for _ in 0..200 {
            let eps = rng.gen_range(0.01..1.0);
            let a = rng.gen_range(0.0..5.0);
            let b = a * eps * rng.gen_range(1.0..20.0);
            let r = interior_bound(&j, eps, a, b, IntegrationRegion::Box { lo: [-1.0, 0.0], hi: [1.0, 0.0] }, &[rng.gen_range(-1.0..1.0)]).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn separation_examples() {
        let g = Grid::new_1d(4.0, 80, 0.0, Boundary::Boxed).unwrap();
        let e = Mask::rect(&g, [0.0, 0.0], [1.0, 1.0]);
        let f = Mask::rect(&g, [2.0, 0.0], [4.0, 1.0]);
        let u = Field::from_fn(&g, |c| if c[0] < 1.5 { -1.0 } else { 1.0 });
        let j = Kernel::fractional(1, 0.75).unwrap();
        let r = separation_bound(&u, &e, &f, &j, 0.2, 1.0).unwrap();
        assert!(r.holds && r.lhs > 0.0);
        let c = Field::constant(&g, 0.4);
        assert_eq!(separation_bound(&c, &e, &f, &j, 0.2, 1.0).unwrap().lhs, 0.0);
        let short = Kernel::compact_radial(1, 1.0).unwrap();
        let z = separation_bound(&u, &e, &f, &short, 0.2, 1.0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        assert!(separation_bound(&u, &e, &f, &j, 0.2, 1.5).is_err());
    }
}

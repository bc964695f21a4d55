//! Discrete evaluation of `F_ε(u, A) = 𝒥_ε(u, A, A) + 𝒲_ε(u, A)` on grid
//! fields.
//!
//! With piecewise-constant fields and cell-averaged weights `w_k` the
//! kinetic part becomes
//!
//! ```text
//! 𝒥_ε(u, A, B) = (V / 4ε) Σ_{x ∈ A} Σ_k w_k 1_B(x + k) (u_{x+k} − u_x)²
//! ```
//!
//! where V is the cell volume. The same weights feed the direct double sum,
//! the periodic spectral path (`|a − b|² = a² + b² − 2ab` turns the full
//! sum into an autocorrelation) and the masked spectral path, which writes
//! the region-restricted sum as three cross-correlations.

mod bounds;
mod fft;
mod weights;

pub use bounds::{interior_bound, separation_bound, BoundReport, IntegrationRegion};
pub use fft::Fft2;
pub use weights::{weights, WeightTable, PERIODIC_IMAGES};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fields::{Field, Mask};
use crate::kernels::{Kernel, KernelError};
use crate::potentials::DoubleWell;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnergyError {
    #[error("the spectral evaluator needs a periodic grid over the full domain")]
    NotPeriodic,
    #[error("ε must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("truncation radius must lie in (0, 1), got {0}")]
    BadRho(f64),
    #[error("region grid does not match the field grid")]
    GridMismatch,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Evaluation path recorded in a breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Path {
    Direct,
    Fast,
    MaskedFft,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub path: Path,
    pub tail_bound: f64,
    pub epsilon: f64,
    pub rho: Option<f64>,
}

impl EnergyBreakdown {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("breakdown serializes")
    }
}

fn check_eps(eps: f64) -> Result<(), EnergyError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(EnergyError::BadEpsilon(eps))
    }
}

/// Pairwise summation for reproducible totals.
fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise(a) + pairwise(b)
}

/// Direct double sum over x ∈ A and the offset lattice, restricted to B.
pub fn kinetic_direct_with(u: &Field, a: &Mask, b: &Mask, t: &WeightTable) -> Result<f64, EnergyError> {
    if a.grid != u.grid || b.grid != u.grid || !t.fits(&u.grid) {
        return Err(EnergyError::GridMismatch);
    }
    let g = &u.grid;
    let offsets = t.offsets();
    let (nx, ny) = (g.n[0] as i64, g.n[1] as i64);
    let periodic = g.periodic();
    let per_cell: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|x| {
            if !a.cells[x] {
                return 0.0;
            }
            let (i, j) = g.coords(x);
            let ux = u.values[x];
            let mut s = 0.0;
            for &(da, db, w) in &offsets {
                let (mut p, mut q) = (i as i64 + da, j as i64 + db);
                if periodic {
                    p = p.rem_euclid(nx);
                    q = q.rem_euclid(ny);
                } else if p < 0 || q < 0 || p >= nx || q >= ny {
                    continue;
                }
                let y = g.index(p as usize, q as usize);
                if b.cells[y] {
                    let d = u.values[y] - ux;
                    s += w * d * d;
                }
            }
            s
        })
        .collect();
    Ok(pairwise(&per_cell) * g.cell_volume() / (4.0 * t.eps))
}

pub fn kinetic_direct(u: &Field, a: &Mask, b: &Mask, j: &Kernel, eps: f64) -> Result<f64, EnergyError> {
    check_eps(eps)?;
    kinetic_direct_with(u, a, b, &weights(j, eps, &u.grid))
}

/// Spectral evaluation of 𝒥_ε(u, Ω, Ω) on a periodic grid.
pub fn kinetic_fast_with(u: &Field, t: &WeightTable) -> Result<f64, EnergyError> {
    let g = &u.grid;
    if !g.periodic() {
        return Err(EnergyError::NotPeriodic);
    }
    if !t.fits(g) {
        return Err(EnergyError::GridMismatch);
    }
    let (plan, _) = t.spectrum();
    let mut spec = plan.spectrum(&u.values, g.n[0], g.n[1]);
    for c in spec.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    plan.inverse(&mut spec);
    let s: f64 = u.values.iter().map(|v| v * v).sum();
    let folded = t.folded.as_ref().expect("periodic tables are folded");
    let terms: Vec<f64> = folded.iter().zip(&spec).map(|(w, c)| if *w == 0.0 { 0.0 } else { w * (2.0 * s - 2.0 * c.re) }).collect();
    Ok(pairwise(&terms) * g.cell_volume() / (4.0 * t.eps))
}

pub fn kinetic_fast(u: &Field, j: &Kernel, eps: f64) -> Result<f64, EnergyError> {
    check_eps(eps)?;
    if !u.grid.periodic() {
        return Err(EnergyError::NotPeriodic);
    }
    kinetic_fast_with(u, &weights(j, eps, &u.grid))
}

/// 𝒥_ε(u, A, B) as Σ_k w_k [C(a, b u²) − 2 C(a u, b u) + C(a u², b)](k)
/// with C(f, g)(k) = Σ_x f_x g_{x+k}.
pub fn kinetic_masked_fft_with(u: &Field, a: &Mask, b: &Mask, t: &WeightTable) -> Result<f64, EnergyError> {
    if a.grid != u.grid || b.grid != u.grid || !t.fits(&u.grid) {
        return Err(EnergyError::GridMismatch);
    }
    let g = &u.grid;
    let (plan, wspec) = t.spectrum();
    let ind = |m: &Mask, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        m.cells.iter().zip(&u.values).map(|(c, v)| if *c { f(*v) } else { 0.0 }).collect()
    };
    let (nx, ny) = (g.n[0], g.n[1]);
    let fa = plan.spectrum(&ind(a, &|_| 1.0), nx, ny);
    let fau = plan.spectrum(&ind(a, &|v| v), nx, ny);
    let fau2 = plan.spectrum(&ind(a, &|v| v * v), nx, ny);
    let fb = plan.spectrum(&ind(b, &|_| 1.0), nx, ny);
    let fbu = plan.spectrum(&ind(b, &|v| v), nx, ny);
    let fbu2 = plan.spectrum(&ind(b, &|v| v * v), nx, ny);
    // Σ_k w_k C(f, g)(k) = (1/M) Σ_ω W(ω) conj(F(ω)) G(ω) for real even w.
    let m = (plan.mx * plan.my) as f64;
    let terms: Vec<f64> = (0..wspec.len())
        .map(|k| {
            let c = fa[k].conj() * fbu2[k] - 2.0 * fau[k].conj() * fbu[k] + fau2[k].conj() * fb[k];
            (wspec[k].conj() * c).re
        })
        .collect();
    Ok(pairwise(&terms) / m * g.cell_volume() / (4.0 * t.eps))
}

pub fn kinetic_masked_fft(u: &Field, a: &Mask, b: &Mask, j: &Kernel, eps: f64) -> Result<f64, EnergyError> {
    check_eps(eps)?;
    kinetic_masked_fft_with(u, a, b, &weights(j, eps, &u.grid))
}

/// 𝒲_ε(u, A) = (1/ε) Σ_{x ∈ A} W(u_x) V.
pub fn potential_energy(u: &Field, a: Option<&Mask>, w: &DoubleWell, eps: f64) -> Result<f64, EnergyError> {
    check_eps(eps)?;
    if a.is_some_and(|m| m.grid != u.grid) {
        return Err(EnergyError::GridMismatch);
    }
    let terms: Vec<f64> = u
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| if a.is_none_or(|m| m.cells[k]) { w.eval(*v) } else { 0.0 })
        .collect();
    Ok(pairwise(&terms) * u.grid.cell_volume() / eps)
}

/// Grids at or below this many cells use the direct sum for regions.
pub const DIRECT_LIMIT: usize = 4096;

/// Kinetic energy on A × A with the cheapest exact path.
pub fn kinetic_auto(u: &Field, a: Option<&Mask>, t: &WeightTable) -> Result<(f64, Path), EnergyError> {
    let full = Mask::full(&u.grid);
    match a {
        None if u.grid.periodic() => Ok((kinetic_fast_with(u, t)?, Path::Fast)),
        _ => {
            let m = a.unwrap_or(&full);
            if u.grid.len() <= DIRECT_LIMIT {
                Ok((kinetic_direct_with(u, m, m, t)?, Path::Direct))
            } else {
                Ok((kinetic_masked_fft_with(u, m, m, t)?, Path::MaskedFft))
            }
        }
    }
}

/// 𝒥_ε(u, A, B) through the direct sum on small grids and the masked
/// spectral path otherwise.
pub fn kinetic_auto_pair(u: &Field, a: &Mask, b: &Mask, j: &Kernel, eps: f64) -> Result<f64, EnergyError> {
    check_eps(eps)?;
    let t = weights(j, eps, &u.grid);
    if u.grid.len() <= DIRECT_LIMIT {
        kinetic_direct_with(u, a, b, &t)
    } else {
        Ok(kinetic_masked_fft_with(u, a, b, &t)?.max(0.0))
    }
}

fn breakdown_with(
    u: &Field,
    a: Option<&Mask>,
    t: &WeightTable,
    w: &DoubleWell,
    eps: f64,
    rho: Option<f64>,
) -> Result<EnergyBreakdown, EnergyError> {
    let (kinetic, path) = kinetic_auto(u, a, t)?;
    let kinetic = kinetic.max(0.0);
    let potential = potential_energy(u, a, w, eps)?;
    Ok(EnergyBreakdown { kinetic, potential, total: kinetic + potential, path, tail_bound: t.tail_bound, epsilon: eps, rho })
}

/// F_ε(u, A) with A = Ω when `a` is None.
pub fn total_energy(u: &Field, a: Option<&Mask>, j: &Kernel, w: &DoubleWell, eps: f64) -> Result<EnergyBreakdown, EnergyError> {
    check_eps(eps)?;
    breakdown_with(u, a, &weights(j, eps, &u.grid), w, eps, None)
}

/// F_ε^ρ(u, A): the kernel is replaced by J^ρ before scaling.
pub fn truncated_energy(
    u: &Field,
    a: Option<&Mask>,
    j: &Kernel,
    rho: f64,
    w: &DoubleWell,
    eps: f64,
) -> Result<EnergyBreakdown, EnergyError> {
    check_eps(eps)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(EnergyError::BadRho(rho));
    }
    let jr = j.truncated(rho)?;
    breakdown_with(u, a, &weights(&jr, eps, &u.grid), w, eps, Some(rho))
}

/// Partial derivatives of F_ε(·, Ω) with respect to the cell values.
pub fn energy_gradient(u: &Field, t: &WeightTable, w: &DoubleWell) -> Vec<f64> {
    let g = &u.grid;
    let (plan, wspec) = t.spectrum();
    let (nx, ny) = (g.n[0], g.n[1]);
    let conv = |vals: &[f64]| -> Vec<f64> {
        let mut s = plan.spectrum(vals, nx, ny);
        for (c, ws) in s.iter_mut().zip(wspec) {
            *c *= ws;
        }
        plan.inverse(&mut s);
        let mut out = vec![0.0; g.len()];
        for j in 0..ny {
            for i in 0..nx {
                out[j * nx + i] = s[j * plan.mx + i].re;
            }
        }
        out
    };
    let wu = conv(&u.values);
    let mass = if g.periodic() { vec![t.folded.as_ref().expect("folded").iter().sum(); g.len()] } else { conv(&vec![1.0; g.len()]) };
    let v = g.cell_volume();
    (0..g.len()).map(|x| v / t.eps * (mass[x] * u.values[x] - wu[x] + w.deriv(u.values[x]))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Grid};
    use crate::potentials::make_quartic;

    fn frac_trunc() -> Kernel {
        Kernel::fractional(1, 0.75).unwrap().truncated(0.5).unwrap()
    }

    #[test]
    fn two_cell_hand_computed() {
        // Two cells of width 1 on a periodic line, indicator kernel of
        // radius 1.2, ε = 1. Offsets ±1 each carry ∫_{0.5}^{1.2} 1 = 0.7;
        // folded onto the torus both land on offset 1, so W_1 = 1.4.
        let g = Grid::new_1d(2.0, 2, 0.0, Boundary::Periodic).unwrap();
        let u = Field::new(g.clone(), vec![-1.0, 1.0]).unwrap();
        let j = Kernel::compact_radial(1, 1.2).unwrap();
        let full = Mask::full(&g);
        let got = kinetic_direct(&u, &full, &full, &j, 1.0).unwrap();
        // (1/4) · Σ_x V · W_1 · 4 over the two cells.
        let want = 0.25 * 2.0 * 1.4 * 4.0;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((kinetic_fast(&u, &j, 1.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn constants_and_far_regions_vanish() {
        let g = Grid::new_2d([1.0, 1.0], [16, 16], [0.0, 0.0], Boundary::Boxed).unwrap();
        let u = Field::constant(&g, 0.3);
        let j = Kernel::compact_radial(2, 1.0).unwrap();
        let full = Mask::full(&g);
        assert_eq!(kinetic_direct(&u, &full, &full, &j, 0.1).unwrap(), 0.0);
        let v = Field::from_fn(&g, |c| (9.0 * c[0] * c[1]).sin());
        let a = Mask::rect(&g, [0.0, 0.0], [0.2, 1.0]);
        let b = Mask::rect(&g, [0.6, 0.0], [1.0, 1.0]);
        assert_eq!(kinetic_direct(&v, &a, &b, &j, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn fast_matches_direct_1d() {
        let g = Grid::new_1d(1.0, 64, 0.0, Boundary::Periodic).unwrap();
        let u = Field::from_fn(&g, |c| (13.0 * c[0]).sin() * (3.0 * c[0]).cos());
        let j = frac_trunc();
        let full = Mask::full(&g);
        let d = kinetic_direct(&u, &full, &full, &j, 0.05).unwrap();
        let f = kinetic_fast(&u, &j, 0.05).unwrap();
        let m = kinetic_masked_fft(&u, &full, &full, &j, 0.05).unwrap();
        assert!((d - f).abs() <= 1e-10 * d, "{d} {f}");
        assert!((d - m).abs() <= 1e-10 * d, "{d} {m}");
    }

    #[test]
    fn masked_matches_direct_boxed_regions() {
        let g = Grid::new_2d([1.0, 0.5], [20, 10], [0.0, 0.0], Boundary::Boxed).unwrap();
        let u = Field::from_fn(&g, |c| (7.0 * c[0] + 3.0 * c[1]).sin());
        let j = Kernel::fractional(2, 0.75).unwrap();
        let a = Mask::rect(&g, [0.0, 0.0], [0.6, 0.3]);
        let b = Mask::rect(&g, [0.4, 0.1], [1.0, 0.5]);
        let d = kinetic_direct(&u, &a, &b, &j, 0.1).unwrap();
        let m = kinetic_masked_fft(&u, &a, &b, &j, 0.1).unwrap();
        assert!((d - m).abs() <= 1e-10 * d, "{d} {m}");
        let ba = kinetic_direct(&u, &b, &a, &j, 0.1).unwrap();
        assert!((d - ba).abs() <= 1e-12 * d);
    }

    #[test]
    fn potential_values() {
        let g = Grid::new_2d([2.0, 1.0], [8, 4], [0.0, 0.0], Boundary::Boxed).unwrap();
        let w = make_quartic();
        let z = Field::constant(&g, 0.0);
        assert!((potential_energy(&z, None, &w, 0.5).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(potential_energy(&Field::constant(&g, 1.0), None, &w, 0.5).unwrap(), 0.0);
        let a = Mask::rect(&g, [0.0, 0.0], [0.5, 1.0]);
        let b = a.complement();
        let sum = potential_energy(&z, Some(&a), &w, 0.5).unwrap() + potential_energy(&z, Some(&b), &w, 0.5).unwrap();
        assert!((sum - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_differences() {
        for boundary in [Boundary::Periodic, Boundary::Boxed] {
            let g = Grid::new_1d(1.0, 40, 0.0, boundary).unwrap();
            let u = Field::from_fn(&g, |c| 0.8 * (5.0 * c[0]).sin());
            let j = frac_trunc();
            let w = make_quartic();
            let eps = 0.1;
            let t = weights(&j, eps, &g);
            let grad = energy_gradient(&u, &t, &w);
            let e = |f: &Field| breakdown_with(f, None, &t, &w, eps, None).unwrap().total;
            for k in [0, 7, 20, 39] {
                let h = 1e-6;
                let mut p = u.clone();
                p.values[k] += h;
                let mut m = u.clone();
                m.values[k] -= h;
                let fd = (e(&p) - e(&m)) / (2.0 * h);
                assert!((fd - grad[k]).abs() < 1e-5 * grad[k].abs().max(1.0), "{boundary:?} {k}: {fd} vs {}", grad[k]);
            }
        }
    }

    #[test]
    fn sharp_fields_have_no_potential() {
        let g = Grid::new_1d(2.0, 64, -1.0, Boundary::Boxed).unwrap();
        let u = Field::from_fn(&g, |c| c[0].signum());
        let e = total_energy(&u, None, &frac_trunc(), &make_quartic(), 0.1).unwrap();
        assert_eq!(e.potential, 0.0);
        assert_eq!(e.total, e.kinetic);
        assert!(e.kinetic > 0.0);
        assert!(e.to_json().contains("\"path\":\"direct\""));
    }
}

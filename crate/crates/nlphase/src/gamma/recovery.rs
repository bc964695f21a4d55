//! Recovery sequences: the optimal profile laid across a flat interface, and
//! polygonal interfaces assembled from per-facet prisms glued to the
//! mollified sharp field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{region_energy, EpsilonSchedule, GammaError, Window};
use super::modify::{modify, ModifyOptions, ModifyReport};
use crate::cell::{limit_energy, surface_tension, CellOptions, Profile};
use crate::energy::total_energy;
use crate::fields::{inner_set, mollify, sharp_field, Field, Grid, Mask, PolyhedralInterface};
use crate::kernels::Kernel;
use crate::potentials::DoubleWell;

/// u(x) = γ((⟨x, ν⟩ − offset)/ε) with γ recentred at its zero crossing.
pub fn profile_field(grid: &Grid, profile: &Profile, nu: &[f64], offset: f64, eps: f64) -> Field {
    let c = profile.center();
    let n1 = nu.get(1).copied().unwrap_or(0.0);
    Field::from_fn(grid, |x| profile.sample((x[0] * nu[0] + x[1] * n1 - offset) / eps + c))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub eps: f64,
    pub cells: [usize; 2],
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    pub l1_to_sharp: f64,
    pub transition_01: f64,
    pub transition_05: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatRecovery {
    pub nu: Vec<f64>,
    pub psi: f64,
    /// H^{N−1} of the interface inside the prism.
    pub length: f64,
    pub target: f64,
    pub rows: Vec<RecoveryRow>,
    /// |F_{ε_{j+1}} − F_{ε_j}|.
    pub increments: Vec<f64>,
    #[serde(skip)]
    pub fields: Vec<Field>,
}

impl FlatRecovery {
    pub fn final_ratio(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.total / self.target)
    }
}

fn basis(nu: &[f64]) -> ([f64; 2], [f64; 2]) {
    let n = [nu[0], nu.get(1).copied().unwrap_or(0.0)];
    (n, [-n[1], n[0]])
}

/// Prism {|⟨x − c, τ⟩| < L/2, |⟨x − c, ν⟩| < thickness/2} as a grid on its
/// bounding box plus the cell mask. In 1D the prism is an interval and L = 1.
fn prism_grid(
    schedule: &EpsilonSchedule,
    eps: f64,
    dim: usize,
    nu: [f64; 2],
    center: [f64; 2],
    length: f64,
    thickness: f64,
) -> Result<(Grid, Mask), GammaError> {
    let tau = [-nu[1], nu[0]];
    if dim == 1 {
        let g = schedule.grid(eps, 1, [center[0] - 0.5 * thickness, 0.0], [center[0] + 0.5 * thickness, 1.0])?;
        let m = Mask::full(&g);
        return Ok((g, m));
    }
    let ext = |a: usize| 0.5 * (length * tau[a].abs() + thickness * nu[a].abs());
    let lo = [center[0] - ext(0), center[1] - ext(1)];
    let hi = [center[0] + ext(0), center[1] + ext(1)];
    let g = schedule.grid(eps, 2, lo, hi)?;
    let axis = nu[0] == 0.0 || nu[1] == 0.0;
    let m = if axis {
        Mask::full(&g)
    } else {
        Mask::from_fn(&g, |x| {
            let v = [x[0] - center[0], x[1] - center[1]];
            (v[0] * tau[0] + v[1] * tau[1]).abs() < 0.5 * length && (v[0] * nu[0] + v[1] * nu[1]).abs() < 0.5 * thickness
        })
    };
    Ok((g, m))
}

/// F_ε(u_ε, P) for u_ε(x) = γ*(⟨x − c, ν⟩/ε) along the schedule.
#[allow(clippy::too_many_arguments)]
pub fn recovery_flat(
    nu: &[f64],
    center: [f64; 2],
    length: f64,
    thickness: f64,
    j: &Kernel,
    w: &DoubleWell,
    schedule: &EpsilonSchedule,
    opts: &CellOptions,
) -> Result<FlatRecovery, GammaError> {
    schedule.validate()?;
    let dim = j.dim();
    if nu.len() != dim {
        return Err(GammaError::Precondition(format!("ν must have {dim} components")));
    }
    if !(thickness > 0.0 && (dim == 1 || length > 0.0)) {
        return Err(GammaError::Precondition("prism must have positive size".into()));
    }
    let st = surface_tension(nu, j, w, opts)?;
    let (n, _) = basis(nu);
    let offset = center[0] * n[0] + center[1] * n[1];
    let length = if dim == 1 { 1.0 } else { length };
    let runs: Vec<(RecoveryRow, Field)> = schedule
        .values
        .par_iter()
        .map(|&eps| {
            let (g, m) = prism_grid(schedule, eps, dim, n, center, length, thickness)?;
            let u = profile_field(&g, &st.profile, nu, offset, eps);
            let sharp = Field::from_fn(&g, |x| if x[0] * n[0] + x[1] * n[1] > offset { 1.0 } else { -1.0 });
            let all = m.cells.iter().all(|c| *c);
            let (kinetic, potential) = if all {
                let b = total_energy(&u, None, j, w, eps)?;
                (b.kinetic, b.potential)
            } else {
                let f = region_energy(&u, &m, j, w, eps)?;
                let p = crate::energy::potential_energy(&u, Some(&m), w, eps)?;
                (f - p, p)
            };
            let inside = |f: &Field| Field { grid: g.clone(), values: f.values.iter().zip(&m.cells).map(|(v, c)| if *c { *v } else { 1.0 }).collect() };
            let row = RecoveryRow {
                eps,
                cells: g.n,
                kinetic,
                potential,
                total: kinetic + potential,
                l1_to_sharp: u.l1_distance(&sharp, Some(&m))?,
                transition_01: inside(&u).transition_measure(0.1),
                transition_05: inside(&u).transition_measure(0.5),
            };
            Ok((row, u))
        })
        .collect::<Result<Vec<_>, GammaError>>()?;
    let (rows, fields): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let increments = rows.windows(2).map(|p| (p[1].total - p[0].total).abs()).collect();
    Ok(FlatRecovery { nu: nu.to_vec(), psi: st.value, length, target: st.value * length, rows, increments, fields })
}

/// Geometry of the polygonal construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralOptions {
    /// Budget σ; None means 0.05 × target.
    pub sigma: Option<f64>,
    /// σ̂: prisms stop this far from each vertex.
    pub corner: f64,
    /// Prism thickness ρ (must be below σ̂).
    pub thickness: f64,
    /// Gluing width δ inside each prism.
    pub delta: f64,
    /// Empty space around the interface's bounding box.
    pub margin: f64,
}

impl Default for PolyhedralOptions {
    fn default() -> Self {
        PolyhedralOptions { sigma: None, corner: 0.1, thickness: 0.09, delta: 0.02, margin: 0.25 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyhedralRow {
    pub recovery: RecoveryRow,
    /// F_ε of the plain mollified field, for comparison.
    pub mollified_total: f64,
    pub within: bool,
    pub prisms: Vec<ModifyReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyhedralRecovery {
    pub target: f64,
    pub sigma: f64,
    pub bound: f64,
    pub rows: Vec<PolyhedralRow>,
    #[serde(skip)]
    pub fields: Vec<Field>,
}

impl PolyhedralRecovery {
    pub fn final_ratio(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.recovery.total / self.target)
    }
}

struct Prism {
    nu: [f64; 2],
    offset: f64,
    window: Window,
    sub: Grid,
    omega: Mask,
}

fn build_prisms(sigma: &PolyhedralInterface, g: &Grid, o: &PolyhedralOptions) -> Result<Vec<Prism>, GammaError> {
    let mut out: Vec<Prism> = Vec::new();
    let mut taken = Mask::empty(g);
    for (i, f) in sigma.facets.iter().enumerate() {
        let len = f.measure(2);
        if len <= 2.0 * o.corner {
            return Err(GammaError::Prism(format!("facet {i} of length {len} is shorter than 2σ̂ = {}", 2.0 * o.corner)));
        }
        let tau = [(f.b[0] - f.a[0]) / len, (f.b[1] - f.a[1]) / len];
        let nu = f.normal;
        let m = Mask::from_fn(g, |x| {
            let v = [x[0] - f.a[0], x[1] - f.a[1]];
            let t = v[0] * tau[0] + v[1] * tau[1];
            let s = v[0] * nu[0] + v[1] * nu[1];
            t > o.corner && t < len - o.corner && s.abs() < 0.5 * o.thickness
        });
        if !m.is_disjoint(&taken) {
            return Err(GammaError::Prism(format!("prism {i} meets an earlier prism (near-parallel consecutive facets?)")));
        }
        taken = taken.union(&m);
        let window = Window::bounding(&m).ok_or_else(|| GammaError::Prism(format!("prism {i} holds no cells")))?;
        let sub = window.grid(g)?;
        let omega = window.crop_mask(&m, &sub);
        out.push(Prism { nu, offset: f.a[0] * nu[0] + f.a[1] * nu[1], window, sub, omega });
    }
    Ok(out)
}

/// Recovery sequence for a polygon: ũ_ε = u * θ_ε everywhere, replaced in
/// each facet prism by the flat profile glued to ũ_ε through `modify`.
pub fn recovery_polyhedral(
    sigma_set: &PolyhedralInterface,
    j: &Kernel,
    w: &DoubleWell,
    schedule: &EpsilonSchedule,
    o: &PolyhedralOptions,
    opts: &CellOptions,
) -> Result<PolyhedralRecovery, GammaError> {
    schedule.validate()?;
    if sigma_set.dim != 2 || j.dim() != 2 {
        return Err(GammaError::Precondition("polygonal recovery is two-dimensional".into()));
    }
    sigma_set.validate()?;
    if !(o.thickness > 0.0 && o.thickness < o.corner && o.delta > 0.0 && 4.0 * o.delta < o.thickness) {
        return Err(GammaError::Prism(format!(
            "need 0 < 4δ < ρ < σ̂, got δ = {}, ρ = {}, σ̂ = {}",
            o.delta, o.thickness, o.corner
        )));
    }
    let target = limit_energy(sigma_set, j, w, opts)?;
    let sigma = o.sigma.unwrap_or(0.05 * target);
    let profiles = sigma_set
        .facets
        .iter()
        .map(|f| surface_tension(&f.normal, j, w, opts).map(|s| s.profile))
        .collect::<Result<Vec<_>, _>>()?;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for f in &sigma_set.facets {
        for p in [f.a, f.b] {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a] - o.margin);
                hi[a] = hi[a].max(p[a] + o.margin);
            }
        }
    }
    let per_prism = sigma / (2.0 * sigma_set.facets.len().max(1) as f64);
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    for &eps in &schedule.values {
        let g = schedule.grid(eps, 2, lo, hi)?;
        let sharp = sharp_field(sigma_set, &g).field;
        let moll = mollify(&sharp, eps)?.field;
        let mut v = moll.clone();
        let prisms = build_prisms(sigma_set, &g, o)?;
        let reports = prisms
            .par_iter()
            .zip(&profiles)
            .map(|(p, prof)| {
                let u = profile_field(&p.sub, prof, &p.nu, p.offset, eps);
                let wt = p.window.crop_field(&moll, &p.sub);
                let d = inner_set(&p.omega, o.delta);
                modify(&u, &wt, &p.omega, &d, o.delta, eps, j, w, &ModifyOptions::with_sigma(per_prism))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut reports = reports;
        for (p, r) in prisms.iter().zip(reports.iter_mut()) {
            let glued = r.v.take().expect("modify returns v");
            p.window.paste(&mut v, &glued, &p.omega);
        }
        let b = total_energy(&v, None, j, w, eps)?;
        let mollified_total = total_energy(&moll, None, j, w, eps)?.total;
        let recovery = RecoveryRow {
            eps,
            cells: g.n,
            kinetic: b.kinetic,
            potential: b.potential,
            total: b.total,
            l1_to_sharp: v.l1_distance(&sharp, None)?,
            transition_01: v.transition_measure(0.1),
            transition_05: v.transition_measure(0.5),
        };
        rows.push(PolyhedralRow { within: b.total <= target + sigma, recovery, mollified_total, prisms: reports });
        fields.push(v);
    }
    Ok(PolyhedralRecovery { target, sigma, bound: target + sigma, rows, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_quartic;

    fn opts() -> CellOptions {
        CellOptions { samples: 512, ..CellOptions::default() }
    }

    #[test]
    fn constant_profile_field_has_no_energy() {
        let s = EpsilonSchedule::new(vec![0.1, 0.05], 8.0).unwrap();
        let j = Kernel::compact_radial(2, 1.0).unwrap();
        let (g, _) = prism_grid(&s, 0.05, 2, [1.0, 0.0], [0.0, 0.0], 1.0, 1.0).unwrap();
        let u = Field::constant(&g, 1.0);
        assert_eq!(total_energy(&u, None, &j, &make_quartic(), 0.05).unwrap().total, 0.0);
    }

    #[test]
    fn one_dimensional_flat_recovery() {
        // The grid energy of the embedded profile is the cell energy up to
        // the resolution change.
        let j = Kernel::compact_radial(1, 1.0).unwrap();
        let w = make_quartic();
        let s = EpsilonSchedule::new(vec![0.05, 0.025], 16.0).unwrap();
        let r = recovery_flat(&[1.0], [0.0, 0.0], 1.0, 2.0, &j, &w, &s, &opts()).unwrap();
        for row in &r.rows {
            assert!((row.total / r.target - 1.0).abs() < 0.02, "{} vs {}", row.total, r.target);
        }
        assert!(r.rows[1].l1_to_sharp < r.rows[0].l1_to_sharp);
        assert!((r.rows[0].transition_01 / r.rows[1].transition_01 - 2.0).abs() < 0.1);
    }

    #[test]
    fn degenerate_prisms_are_reported() {
        let sq = PolyhedralInterface::square([0.0, 0.0], 0.15).unwrap();
        let j = Kernel::compact_radial(2, 1.0).unwrap();
        let s = EpsilonSchedule::new(vec![0.05], 8.0).unwrap();
        let e = recovery_polyhedral(&sq, &j, &make_quartic(), &s, &PolyhedralOptions::default(), &opts());
        assert!(matches!(e, Err(GammaError::Prism(_))));
        let bad = PolyhedralOptions { thickness: 0.2, ..PolyhedralOptions::default() };
        let big = PolyhedralInterface::square([0.0, 0.0], 1.0).unwrap();
        assert!(matches!(recovery_polyhedral(&big, &j, &make_quartic(), &s, &bad, &opts()), Err(GammaError::Prism(_))));
    }
}

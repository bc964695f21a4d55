//! Gluing two fields across D ∖ D_δ by shell selection.
//!
//! With d(x) the distance to ∂D, the layer D ∖ D_δ is cut into M shells
//! {jδ̃ < d ≤ (j+1)δ̃}, δ̃ = δ/M, and the shell j carrying the least energy
//! 𝒥(u, S_j, D) + 𝒥(w, S_j, Ω ∖ D_δ) fixes D̃ = D_{jδ̃}. Inside D̃ the
//! ε-bands A_i = {iε < d̃ ≤ (i+1)ε} are scored by
//! ∫_{D̃_{iε} ∖ D̃_{δ̃}} |u − w| min{ω₁(1), ω₁(ε/d_i) ε/d_i}, and the best
//! band becomes the ramp R of a cutoff φ that is 1 deeper inside and 0
//! outside. The result is v = φu + (1 − φ)w.

use serde::{Deserialize, Serialize};

use super::{region_energy, GammaError};
use crate::energy::kinetic_auto_pair;
use crate::fields::{build_cutoff, distance_to, glue, Field, Mask};
use crate::kernels::Kernel;
use crate::potentials::DoubleWell;
use crate::quad::QuadTol;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModifyOptions {
    /// Energy budget σ per shell.
    pub sigma: f64,
    pub min_macro: usize,
    /// Upper limit on M; shells thinner than a cell are empty anyway.
    pub max_macro: usize,
}

impl ModifyOptions {
    pub fn with_sigma(sigma: f64) -> Self {
        ModifyOptions { sigma, min_macro: 8, max_macro: 4096 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModifyReport {
    #[serde(skip)]
    pub v: Option<Field>,
    /// F_ε(v, Ω).
    pub lhs: f64,
    /// F_ε(u, D) + F_ε(w, Ω ∖ D_δ).
    pub rhs: f64,
    pub slack: f64,
    pub sigma: f64,
    /// 𝒥(u, D ∖ D_δ, D) + 𝒥(w, D ∖ D_δ, Ω ∖ D_δ), the energy the shells share.
    pub layer_energy: f64,
    pub macro_shells: usize,
    pub delta_tilde: f64,
    pub shell: usize,
    pub shell_energy: f64,
    pub shell_ok: bool,
    pub micro_shells: usize,
    /// ⌊δ̃/2ε⌋ was 0 and one ε-band was used instead.
    pub micro_clamped: bool,
    pub band: usize,
    pub discrepancy: f64,
    pub discrepancy_ok: bool,
    /// ∫_{D ∖ D_δ} |u − w|.
    pub layer_l1: f64,
    pub max_gradient: f64,
    pub inner_exact: bool,
    pub outer_exact: bool,
}

/// Lookup for r ↦ min{ω₁(1), ω₁(1/r)/r} on [0, r_max].
struct BandWeight {
    w1: f64,
    logs: Vec<f64>,
    vals: Vec<f64>,
}

impl BandWeight {
    fn new(j: &Kernel, r_max: f64) -> Result<Self, GammaError> {
        let tol = QuadTol::default();
        let w1 = j.omega1(1.0, tol)?;
        let n = 160;
        let top = r_max.max(2.0).ln();
        let logs: Vec<f64> = (0..=n).map(|k| top * k as f64 / n as f64).collect();
        let vals = logs
            .iter()
            .map(|l| {
                let r = l.exp();
                Ok((j.omega1(1.0 / r, tol)? / r).min(w1))
            })
            .collect::<Result<Vec<f64>, GammaError>>()?;
        Ok(BandWeight { w1, logs, vals })
    }

    fn at(&self, r: f64) -> f64 {
        if r <= 1.0 {
            return self.w1;
        }
        let l = r.ln();
        let step = self.logs[1];
        let k = ((l / step) as usize).min(self.logs.len() - 2);
        let f = ((l - self.logs[k]) / step).clamp(0.0, 1.0);
        self.vals[k] * (1.0 - f) + self.vals[k + 1] * f
    }
}

/// Glue `u` (trusted on D) to `w` (trusted on Ω ∖ D_δ).
#[allow(clippy::too_many_arguments)]
pub fn modify(
    u: &Field,
    w: &Field,
    omega: &Mask,
    d: &Mask,
    delta: f64,
    eps: f64,
    j: &Kernel,
    pot: &DoubleWell,
    opts: &ModifyOptions,
) -> Result<ModifyReport, GammaError> {
    let g = &u.grid;
    if w.grid != *g || omega.grid != *g || d.grid != *g {
        return Err(GammaError::Precondition("u, w, Ω and D must share one grid".into()));
    }
    if !d.is_subset(omega) {
        return Err(GammaError::Precondition("D must lie inside Ω".into()));
    }
    if !(opts.sigma > 0.0 && opts.sigma.is_finite()) {
        return Err(GammaError::Precondition(format!("σ = {} must be positive", opts.sigma)));
    }
    if !(eps > 0.0 && delta > eps) {
        return Err(GammaError::Precondition(format!("need 0 < ε < δ, got ε = {eps}, δ = {delta}")));
    }
    if delta < 2.0 * g.max_spacing() {
        return Err(GammaError::Precondition(format!("δ = {delta} spans fewer than two cells")));
    }
    let h = 0.5 * (0..g.dim).map(|a| g.spacing(a)).fold(f64::INFINITY, f64::min);
    // Distance from each cell of D to ∂D, on the same convention as inner_set.
    let dist: Vec<f64> = distance_to(&d.complement(), true).iter().zip(&d.cells).map(|(x, m)| if *m { x - h } else { f64::NEG_INFINITY }).collect();
    let level = |t: f64| Mask { grid: g.clone(), cells: dist.iter().map(|x| *x > t).collect() };
    let d_delta = level(delta);
    let layer = d.minus(&d_delta);
    let outer = omega.minus(&d_delta);

    let rhs = region_energy(u, d, j, pot, eps)? + region_energy(w, &outer, j, pot, eps)?;
    let shell_energy = |s: &Mask| -> Result<f64, GammaError> {
        if s.is_empty() {
            return Ok(0.0);
        }
        Ok(kinetic_auto_pair(u, s, d, j, eps)? + kinetic_auto_pair(w, s, &outer, j, eps)?)
    };
    let layer_energy = shell_energy(&layer)?;
    let m = ((layer_energy / opts.sigma).ceil() as usize).clamp(opts.min_macro, opts.max_macro.max(opts.min_macro));
    let dt = delta / m as f64;
    let k_raw = (dt / (2.0 * eps)).floor() as usize;
    let micro_clamped = k_raw == 0;
    let k = k_raw.max(1);
    // The ramp must end inside D_δ's complement: jδ̃ + Kε ≤ δ.
    let admissible = |jj: usize| jj as f64 * dt + (k as f64) * eps <= delta * (1.0 + 1e-12);
    let mut best: Option<(usize, f64)> = None;
    for jj in (0..m).filter(|jj| admissible(*jj)) {
        let s = Mask {
            grid: g.clone(),
            cells: dist.iter().map(|x| *x > jj as f64 * dt && *x <= (jj + 1) as f64 * dt).collect(),
        };
        let e = shell_energy(&s)?;
        if best.is_none_or(|b| e < b.1) {
            best = Some((jj, e));
        }
    }
    let (shell, e_shell) = best.ok_or_else(|| GammaError::Precondition(format!("no shell leaves room for an ε-band: δ = {delta}, ε = {eps}")))?;

    // d̃ = d − jδ̃ on D̃ = D_{jδ̃}.
    let base = shell as f64 * dt;
    let dtil: Vec<f64> = dist.iter().map(|x| x - base).collect();
    let r_max = dtil.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max) / eps;
    let bw = BandWeight::new(j, r_max)?;
    let vol = g.cell_volume();
    let top = dt.max(k as f64 * eps);
    let mut scores = vec![0.0; k];
    for (x, &t) in dtil.iter().enumerate() {
        let diff = (u.values[x] - w.values[x]).abs();
        if diff == 0.0 || !(t > 0.0 && t <= top) {
            continue;
        }
        for (i, sc) in scores.iter_mut().enumerate() {
            let di = t - i as f64 * eps;
            if di > 0.0 {
                *sc += diff * bw.at(di / eps) * vol;
            }
        }
    }
    let (band, discrepancy) = scores.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, s)| if s < b.1 { (i, s) } else { b });

    let lo = band as f64 * eps;
    let hi = lo + eps;
    let pick = |f: &dyn Fn(f64) -> bool| Mask { grid: g.clone(), cells: dtil.iter().map(|t| f(*t)).collect() };
    let p = pick(&|t| t > top.max(hi));
    let q = pick(&|t| t > hi && t <= top.max(hi));
    let r = pick(&|t| t > lo && t <= hi);
    let s = p.union(&q).union(&r).complement();
    let cutoff = build_cutoff(&p, &q, &r, &s, eps)?;
    let v = glue(u, w, &cutoff)?;
    let lhs = region_energy(&v, omega, j, pot, eps)?;
    let inner_exact = (0..g.len()).filter(|x| d_delta.cells[*x]).all(|x| v.values[x] == u.values[x]);
    let outer_exact = (0..g.len()).filter(|x| omega.cells[*x] && !d.cells[*x]).all(|x| v.values[x] == w.values[x]);
    let layer_l1 = u.l1_distance(w, Some(&layer))?;
    Ok(ModifyReport {
        v: Some(v),
        lhs,
        rhs,
        slack: lhs - rhs,
        sigma: opts.sigma,
        layer_energy,
        macro_shells: m,
        delta_tilde: dt,
        shell,
        shell_energy: e_shell,
        shell_ok: e_shell <= opts.sigma,
        micro_shells: k,
        micro_clamped,
        band,
        discrepancy,
        discrepancy_ok: discrepancy <= opts.sigma * eps,
        layer_l1,
        max_gradient: cutoff.max_gradient,
        inner_exact,
        outer_exact,
    })
}

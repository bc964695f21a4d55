//! Modification on the matched flat instance: Ω = [0, 1] × [−a, a],
//! interface {x₂ = 0} with ν = e₂, u the optimal-profile field, w the
//! mollified sharp field and D = Ω_δ.

use serde::{Deserialize, Serialize};

use super::{modify, profile_field, EpsilonSchedule, GammaError, ModifyOptions};
use crate::cell::{surface_tension, CellOptions};
use crate::fields::{inner_set, mollify, sharp_field, Mask, PolyhedralInterface};
use crate::kernels::Kernel;
use crate::potentials::DoubleWell;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedOptions {
    pub half_height: f64,
    pub delta: f64,
    /// σ as a fraction of the energy scale ψ(e₂)·1.
    pub sigma_fraction: f64,
    /// Also rerun the smallest ε with σ/2.
    pub halve: bool,
}

impl Default for MatchedOptions {
    fn default() -> Self {
        MatchedOptions { half_height: 0.25, delta: 0.1, sigma_fraction: 0.05, halve: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModificationRow {
    pub eps: f64,
    pub sigma: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// slack / energy scale.
    pub scaled_slack: f64,
    pub macro_shells: usize,
    pub shell: usize,
    pub shell_ok: bool,
    pub micro_clamped: bool,
    pub discrepancy_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModificationStudy {
    pub scale: f64,
    pub sigma: f64,
    pub rows: Vec<ModificationRow>,
    pub nonincreasing: bool,
    pub final_scaled: f64,
    /// Smallest ε rerun with σ/2.
    pub halved: Option<ModificationRow>,
    pub halving_reduces: Option<bool>,
}

#[allow(clippy::too_many_arguments)]
fn matched_run(
    j: &Kernel,
    w: &DoubleWell,
    schedule: &EpsilonSchedule,
    eps: f64,
    o: &MatchedOptions,
    st: &crate::cell::SurfaceTension,
    sigma: f64,
    scale: f64,
) -> Result<ModificationRow, GammaError> {
    let (lo, hi) = ([0.0, -o.half_height], [1.0, o.half_height]);
    let g = schedule.grid(eps, 2, lo, hi)?;
    let u = profile_field(&g, &st.profile, &[0.0, 1.0], 0.0, eps);
    let flat = PolyhedralInterface::flat(2, [0.0, 1.0], 0.0, lo, hi)?;
    let wt = mollify(&sharp_field(&flat, &g).field, eps)?.field;
    let omega = Mask::full(&g);
    let d = inner_set(&omega, o.delta);
    let r = modify(&u, &wt, &omega, &d, o.delta, eps, j, w, &ModifyOptions::with_sigma(sigma))?;
    Ok(ModificationRow {
        eps,
        sigma,
        lhs: r.lhs,
        rhs: r.rhs,
        slack: r.slack,
        scaled_slack: r.slack / scale,
        macro_shells: r.macro_shells,
        shell: r.shell,
        shell_ok: r.shell_ok,
        micro_clamped: r.micro_clamped,
        discrepancy_ok: r.discrepancy_ok,
    })
}

pub fn modification_study(
    j: &Kernel,
    w: &DoubleWell,
    schedule: &EpsilonSchedule,
    o: &MatchedOptions,
    cell: &CellOptions,
) -> Result<ModificationStudy, GammaError> {
    schedule.validate()?;
    if j.dim() != 2 {
        return Err(GammaError::Precondition("the matched instance is planar".into()));
    }
    if !(o.half_height > o.delta && o.delta > 0.0 && o.sigma_fraction > 0.0) {
        return Err(GammaError::Precondition(format!("need 0 < δ < half height and σ > 0, got {o:?}")));
    }
    let st = surface_tension(&[0.0, 1.0], j, w, cell)?;
    let scale = st.value;
    let sigma = o.sigma_fraction * scale;
    let rows = schedule
        .values
        .iter()
        .map(|&eps| matched_run(j, w, schedule, eps, o, &st, sigma, scale))
        .collect::<Result<Vec<_>, _>>()?;
    let nonincreasing = rows.windows(2).all(|p| p[1].slack <= p[0].slack + 1e-12 * scale);
    let last = rows.last().expect("nonempty schedule");
    let halved = if o.halve { Some(matched_run(j, w, schedule, last.eps, o, &st, 0.5 * sigma, scale)?) } else { None };
    let halving_reduces = halved.as_ref().map(|h| h.slack < last.slack);
    Ok(ModificationStudy { scale, sigma, final_scaled: last.scaled_slack, rows, nonincreasing, halved, halving_reduces })
}

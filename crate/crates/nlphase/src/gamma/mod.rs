//! Desk-scale Γ-convergence diagnostics: recovery sequences for flat and
//! polygonal interfaces, the shell-selection gluing construction, the
//! skeleton-tube estimate, constrained minimization and compactness checks.
//!
//! Fields live on boxed grids whose resolution follows an
//! [`EpsilonSchedule`]. Prisms and shells are cell masks, so every set
//! operation is exact at the cell level.

mod liminf;
mod modify;
mod recovery;
mod skeleton;
mod study;

pub use liminf::{compactness_diagnostic, liminf_study, CompactnessReport, LiminfOptions, LiminfReport, LiminfRow};
pub use modify::{modify, ModifyOptions, ModifyReport};
pub use recovery::{
    profile_field, recovery_flat, recovery_polyhedral, FlatRecovery, PolyhedralOptions, PolyhedralRecovery, RecoveryRow,
};
pub use skeleton::{skeleton_estimate, skeleton_sweep, SkeletonPoint, SkeletonSweep};
pub use study::{modification_study, MatchedOptions, ModificationRow, ModificationStudy};

use serde::{Deserialize, Serialize};

use crate::cell::CellError;
use crate::energy::{kinetic_auto_pair, potential_energy, EnergyError};
use crate::fields::{Boundary, Field, FieldError, Grid, InterfaceError, Mask};
use crate::kernels::{Kernel, KernelError};
use crate::potentials::DoubleWell;

#[derive(Debug, thiserror::Error)]
pub enum GammaError {
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("prism construction: {0}")]
    Prism(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Interface(#[from] InterfaceError),
}

/// Least number of cells across one ε.
pub const MIN_CELLS_PER_EPS: f64 = 8.0;

/// Strictly decreasing ε_j with the grid rule h ≤ ε / cells_per_eps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub values: Vec<f64>,
    pub cells_per_eps: f64,
}

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>, cells_per_eps: f64) -> Result<Self, GammaError> {
        let s = EpsilonSchedule { values, cells_per_eps };
        s.validate()?;
        Ok(s)
    }

    /// `count` values start, start·ratio, ...
    pub fn geometric(start: f64, ratio: f64, count: usize, cells_per_eps: f64) -> Result<Self, GammaError> {
        Self::new((0..count).map(|k| start * ratio.powi(k as i32)).collect(), cells_per_eps)
    }

    pub fn validate(&self) -> Result<(), GammaError> {
        if self.values.is_empty() {
            return Err(GammaError::Schedule("empty schedule".into()));
        }
        if let Some(e) = self.values.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(GammaError::Schedule(format!("ε = {e} must be positive and finite")));
        }
        if let Some(k) = self.values.windows(2).position(|p| p[1] >= p[0]) {
            return Err(GammaError::Schedule(format!(
                "not strictly decreasing at position {}: {} then {}",
                k + 1,
                self.values[k],
                self.values[k + 1]
            )));
        }
        if !(self.cells_per_eps >= MIN_CELLS_PER_EPS && self.cells_per_eps.is_finite()) {
            return Err(GammaError::Schedule(format!(
                "cells per ε = {} is below the minimum {MIN_CELLS_PER_EPS}",
                self.cells_per_eps
            )));
        }
        Ok(())
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().expect("nonempty schedule")
    }

    /// Boxed grid on [lo, hi] (first `dim` axes) obeying the grid rule at ε.
    pub fn grid(&self, eps: f64, dim: usize, lo: [f64; 2], hi: [f64; 2]) -> Result<Grid, GammaError> {
        let cells = |a: usize| ((hi[a] - lo[a]) * self.cells_per_eps / eps).ceil().max(1.0) as usize;
        let g = if dim == 1 {
            Grid::new_1d(hi[0] - lo[0], cells(0), lo[0], Boundary::Boxed)?
        } else {
            Grid::new_2d([hi[0] - lo[0], hi[1] - lo[1]], [cells(0), cells(1)], lo, Boundary::Boxed)?
        };
        check_grid_rule(&g, eps, self.cells_per_eps)?;
        Ok(g)
    }
}

pub(crate) fn check_grid_rule(g: &Grid, eps: f64, cells_per_eps: f64) -> Result<(), GammaError> {
    if g.max_spacing() > eps / cells_per_eps * (1.0 + 1e-12) {
        return Err(GammaError::Schedule(format!(
            "spacing {} exceeds ε/{cells_per_eps} = {}",
            g.max_spacing(),
            eps / cells_per_eps
        )));
    }
    Ok(())
}

/// F_ε(u, A) = 𝒥_ε(u, A, A) + 𝒲_ε(u, A).
pub(crate) fn region_energy(u: &Field, a: &Mask, j: &Kernel, w: &DoubleWell, eps: f64) -> Result<f64, GammaError> {
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(kinetic_auto_pair(u, a, a, j, eps)? + potential_energy(u, Some(a), w, eps)?)
}

/// Index window [i0, i1) × [j0, j1) of a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Window {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Window {
    /// Smallest window holding every cell of the mask.
    pub fn bounding(m: &Mask) -> Option<Window> {
        let g = &m.grid;
        let mut w: Option<Window> = None;
        for k in (0..g.len()).filter(|k| m.cells[*k]) {
            let (i, j) = g.coords(k);
            w = Some(match w {
                None => Window { i0: i, i1: i + 1, j0: j, j1: j + 1 },
                Some(w) => Window { i0: w.i0.min(i), i1: w.i1.max(i + 1), j0: w.j0.min(j), j1: w.j1.max(j + 1) },
            });
        }
        w
    }

    pub fn grid(&self, g: &Grid) -> Result<Grid, FieldError> {
        let (hx, nx) = (g.spacing(0), self.i1 - self.i0);
        if g.dim == 1 {
            return Grid::new_1d(nx as f64 * hx, nx, g.origin[0] + self.i0 as f64 * hx, Boundary::Boxed);
        }
        let (hy, ny) = (g.spacing(1), self.j1 - self.j0);
        Grid::new_2d(
            [nx as f64 * hx, ny as f64 * hy],
            [nx, ny],
            [g.origin[0] + self.i0 as f64 * hx, g.origin[1] + self.j0 as f64 * hy],
            Boundary::Boxed,
        )
    }

    fn indices(&self, g: &Grid) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = g.n[0];
        let w = *self;
        (w.j0..w.j1).flat_map(move |j| (w.i0..w.i1).map(move |i| (j * nx + i, (j - w.j0) * (w.i1 - w.i0) + (i - w.i0))))
    }

    pub fn crop_field(&self, u: &Field, sub: &Grid) -> Field {
        let mut values = vec![0.0; sub.len()];
        for (k, s) in self.indices(&u.grid) {
            values[s] = u.values[k];
        }
        Field { grid: sub.clone(), values }
    }

    pub fn crop_mask(&self, m: &Mask, sub: &Grid) -> Mask {
        let mut cells = vec![false; sub.len()];
        for (k, s) in self.indices(&m.grid) {
            cells[s] = m.cells[k];
        }
        Mask { grid: sub.clone(), cells }
    }

    /// Copy `v` into `u` on the cells of `region` (a mask on the window).
    pub fn paste(&self, u: &mut Field, v: &Field, region: &Mask) {
        let g = u.grid.clone();
        for (k, s) in self.indices(&g) {
            if region.cells[s] {
                u.values[k] = v.values[s];
            }
        }
    }
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_rules() {
        assert!(EpsilonSchedule::new(vec![0.1, 0.05], 8.0).is_ok());
        assert!(EpsilonSchedule::new(vec![0.1, 0.1], 8.0).is_err());
        assert!(EpsilonSchedule::new(vec![0.05, 0.1], 8.0).is_err());
        assert!(EpsilonSchedule::new(vec![0.1], 4.0).is_err());
        assert!(EpsilonSchedule::new(vec![], 8.0).is_err());
        let s = EpsilonSchedule::geometric(0.1, 0.5, 3, 8.0).unwrap();
        let g = s.grid(0.025, 2, [0.0, 0.0], [1.0, 0.5]).unwrap();
        assert_eq!(g.n, [320, 160]);
        assert!(g.max_spacing() <= 0.025 / 8.0 + 1e-15);
    }

    #[test]
    fn window_round_trip() {
        let g = Grid::new_2d([1.0, 1.0], [10, 8], [0.0, 0.0], Boundary::Boxed).unwrap();
        let m = Mask::rect(&g, [0.2, 0.3], [0.5, 0.6]);
        let w = Window::bounding(&m).unwrap();
        let sub = w.grid(&g).unwrap();
        assert_eq!(sub.n, [3, 3]);
        let u = Field::from_fn(&g, |c| (c[0] - c[1]).sin());
        let cu = w.crop_field(&u, &sub);
        for k in 0..sub.len() {
            let c = sub.center(k);
            assert!(((c[0] - c[1]).sin() - cu.values[k]).abs() < 1e-12);
        }
        let mut z = Field::constant(&g, 0.0);
        w.paste(&mut z, &cu, &Mask::full(&sub));
        for k in 0..g.len() {
            assert_eq!(z.values[k], if m.cells[k] { u.values[k] } else { 0.0 });
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }
}

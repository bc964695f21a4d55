//! Constrained minimization of F_ε with ±1 boundary layers, and
//! transition-region diagnostics for sequences of fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{loglog_slope, EpsilonSchedule, GammaError};
use crate::cell::{surface_tension, CellOptions};
use crate::energy::{weights, WeightTable};
use crate::fields::{Field, Grid};
use crate::kernels::Kernel;
use crate::potentials::DoubleWell;

/// Box [lo, hi] with cells whose coordinate along `axis` lies within `layer`
/// of the low (high) end fixed to −1 (+1). `layer = 0` leaves the field free.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiminfOptions {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub axis: usize,
    pub layer: f64,
    pub random_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for LiminfOptions {
    fn default() -> Self {
        LiminfOptions { lo: [0.0, 0.0], hi: [1.0, 1.0], axis: 0, layer: 0.1, random_starts: 2, seed: 1, max_iter: 20_000, rel_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiminfRow {
    pub eps: f64,
    pub min_energy: f64,
    pub best_start: String,
    pub iterations: usize,
    pub converged: bool,
    /// (min F_ε − target) / target, or min F_ε when the target is 0.
    pub rel_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiminfReport {
    pub target: f64,
    pub rows: Vec<LiminfRow>,
    /// |gap| never grows by more than 1e−6 relative along the schedule.
    pub gap_nonincreasing: bool,
    #[serde(skip)]
    pub minimizers: Vec<Field>,
}

/// Energy and gradient sharing one convolution.
struct Objective<'a> {
    t: &'a WeightTable,
    mass: Vec<f64>,
    w: &'a DoubleWell,
    vol: f64,
}

impl<'a> Objective<'a> {
    fn new(g: &Grid, t: &'a WeightTable, w: &'a DoubleWell) -> Self {
        let mass = conv(t, g, &vec![1.0; g.len()]);
        Objective { t, mass, w, vol: g.cell_volume() }
    }

    fn eval(&self, g: &Grid, u: &[f64]) -> (f64, Vec<f64>) {
        let wu = conv(self.t, g, u);
        let eps = self.t.eps;
        let mut kin = 0.0;
        let mut pot = 0.0;
        let grad = (0..u.len())
            .map(|x| {
                kin += u[x] * (self.mass[x] * u[x] - wu[x]);
                pot += self.w.eval(u[x]);
                self.vol / eps * (self.mass[x] * u[x] - wu[x] + self.w.deriv(u[x]))
            })
            .collect();
        // The quadratic form is nonnegative; clip convolution round-off.
        ((self.vol / (2.0 * eps) * kin).max(0.0) + self.vol / eps * pot, grad)
    }
}

fn conv(t: &WeightTable, g: &Grid, vals: &[f64]) -> Vec<f64> {
    let (plan, spec) = t.spectrum();
    let (nx, ny) = (g.n[0], g.n[1]);
    let mut s = plan.spectrum(vals, nx, ny);
    for (c, ws) in s.iter_mut().zip(spec) {
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
}

struct Descent {
    values: Vec<f64>,
    energy: f64,
    iterations: usize,
    converged: bool,
}

/// Projected Barzilai–Borwein descent on [−1, 1]^cells with the fixed cells
/// held, Armijo backtracking keeping every step a decrease.
fn descend(g: &Grid, obj: &Objective, fixed: &[Option<f64>], init: Vec<f64>, max_iter: usize, rel_tol: f64) -> Descent {
    let project = |x: &mut [f64]| {
        for (v, f) in x.iter_mut().zip(fixed) {
            *v = f.unwrap_or(v.clamp(-1.0, 1.0));
        }
    };
    let mut x = init;
    project(&mut x);
    let (mut e, mut gr) = obj.eval(g, &x);
    let lip = obj.vol / obj.t.eps * (obj.mass.iter().fold(0.0, |m: f64, v| m.max(*v)) + 4.0);
    let mut alpha = 1.0 / lip;
    let window = 50;
    let mut hist = vec![e];
    let mut converged = false;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let mut a = alpha;
        let (xn, en, gn) = loop {
            let mut xn: Vec<f64> = x.iter().zip(&gr).map(|(v, d)| v - a * d).collect();
            project(&mut xn);
            let step2: f64 = xn.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum();
            let (en, gn) = obj.eval(g, &xn);
            if en <= e - 1e-4 * step2 / a || a < 1e-3 / lip {
                break (xn, en, gn);
            }
            a *= 0.5;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(p, q)| p - q).collect();
        let y: Vec<f64> = gn.iter().zip(&gr).map(|(p, q)| p - q).collect();
        let sy: f64 = s.iter().zip(&y).map(|(p, q)| p * q).sum();
        let ss: f64 = s.iter().map(|p| p * p).sum();
        let moved = ss > 0.0;
        if en <= e {
            x = xn;
            e = en;
            gr = gn;
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-3 / lip, 1e3 / lip) } else { 1.0 / lip };
        hist.push(e);
        if !moved || (hist.len() > window && hist[hist.len() - 1 - window] - e <= rel_tol * e.abs().max(1e-300)) {
            converged = true;
            break;
        }
    }
    Descent { values: x, energy: e, iterations: it, converged }
}

/// min F_ε over fields with ±1 boundary layers, best of several starts,
/// against F(u) = ψ(e_axis) × (cross-section) of the planar limit.
pub fn liminf_study(j: &Kernel, w: &DoubleWell, schedule: &EpsilonSchedule, o: &LiminfOptions, cell: &CellOptions) -> Result<LiminfReport, GammaError> {
    schedule.validate()?;
    let dim = j.dim();
    if o.axis >= dim {
        return Err(GammaError::Precondition(format!("axis {} out of range", o.axis)));
    }
    let constrained = o.layer > 0.0;
    let target = if constrained {
        let mut xi = vec![0.0; dim];
        xi[o.axis] = 1.0;
        let section = if dim == 2 { o.hi[1 - o.axis] - o.lo[1 - o.axis] } else { 1.0 };
        surface_tension(&xi, j, w, cell)?.value * section
    } else {
        0.0
    };
    let runs = schedule
        .values
        .par_iter()
        .map(|&eps| {
            let g = schedule.grid(eps, dim, o.lo, o.hi)?;
            let t = weights(j, eps, &g);
            let obj = Objective::new(&g, &t, w);
            let (a0, a1) = (o.lo[o.axis], o.hi[o.axis]);
            let mid = 0.5 * (a0 + a1);
            let fixed: Vec<Option<f64>> = (0..g.len())
                .map(|k| {
                    let c = g.center(k)[o.axis];
                    if !constrained {
                        None
                    } else if c < a0 + o.layer {
                        Some(-1.0)
                    } else if c > a1 - o.layer {
                        Some(1.0)
                    } else {
                        None
                    }
                })
                .collect();
            let coord = |k: usize| g.center(k)[o.axis];
            let mut starts: Vec<(String, Vec<f64>)> = vec![
                ("tanh".into(), (0..g.len()).map(|k| ((coord(k) - mid) / eps).tanh()).collect()),
                ("sign".into(), (0..g.len()).map(|k| if coord(k) > mid { 1.0 } else { -1.0 }).collect()),
                ("ramp".into(), (0..g.len()).map(|k| (2.0 * (coord(k) - a0) / (a1 - a0) - 1.0).clamp(-1.0, 1.0)).collect()),
                ("plus".into(), vec![1.0; g.len()]),
                ("minus".into(), vec![-1.0; g.len()]),
            ];
            let mut rng = ChaCha8Rng::seed_from_u64(o.seed ^ eps.to_bits());
            for r in 0..o.random_starts {
                starts.push((format!("random{r}"), (0..g.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect()));
            }
            let results: Vec<(String, Descent)> = starts
                .into_par_iter()
                .map(|(name, init)| {
                    let d = descend(&g, &obj, &fixed, init, o.max_iter, o.rel_tol);
                    (name, d)
                })
                .collect();
            let (name, best) = results.into_iter().min_by(|a, b| a.1.energy.total_cmp(&b.1.energy)).expect("at least one start");
            let rel_gap = if target > 0.0 { (best.energy - target) / target } else { best.energy };
            let row = LiminfRow { eps, min_energy: best.energy, best_start: name, iterations: best.iterations, converged: best.converged, rel_gap };
            Ok((row, Field { grid: g.clone(), values: best.values }))
        })
        .collect::<Result<Vec<_>, GammaError>>()?;
    let (rows, minimizers): (Vec<LiminfRow>, Vec<Field>) = runs.into_iter().unzip();
    let gap_nonincreasing = rows.windows(2).all(|p| p[1].rel_gap.abs() <= p[0].rel_gap.abs() + 1e-6);
    Ok(LiminfReport { target, rows, gap_nonincreasing, minimizers })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub eps: Vec<f64>,
    /// |{|u_j| < 0.9}|.
    pub measure_01: Vec<f64>,
    /// |{|u_j| < 0.5}|.
    pub measure_05: Vec<f64>,
    /// ∫|u_j − u_{j+1}| over the common domain.
    pub l1_consecutive: Vec<f64>,
    pub slope_01: Option<f64>,
    pub slope_05: Option<f64>,
    pub decreasing: bool,
}

/// Value of a piecewise-constant field at a point of its box.
fn sample(u: &Field, x: [f64; 2]) -> f64 {
    let g = &u.grid;
    let idx = |a: usize| (((x[a] - g.origin[a]) / g.spacing(a)).floor().max(0.0) as usize).min(g.n[a] - 1);
    let j = if g.dim == 2 { idx(1) } else { 0 };
    u.values[g.index(idx(0), j)]
}

/// ∫|u − v| integrated on the finer of the two grids.
fn l1_between(u: &Field, v: &Field) -> f64 {
    let (fine, coarse) = if u.grid.len() >= v.grid.len() { (u, v) } else { (v, u) };
    let g = &fine.grid;
    let d: Vec<f64> = (0..g.len()).into_par_iter().map(|k| (fine.values[k] - sample(coarse, g.center(k))).abs()).collect();
    d.iter().sum::<f64>() * g.cell_volume()
}

/// Transition-region measures and consecutive L¹ distances of fields u_j
/// taken at the scales ε_j.
pub fn compactness_diagnostic(eps: &[f64], fields: &[Field]) -> Result<CompactnessReport, GammaError> {
    if eps.len() != fields.len() {
        return Err(GammaError::Precondition("one field per ε".into()));
    }
    let measure_01: Vec<f64> = fields.iter().map(|u| u.transition_measure(0.1)).collect();
    let measure_05: Vec<f64> = fields.iter().map(|u| u.transition_measure(0.5)).collect();
    let l1_consecutive = fields.windows(2).map(|p| l1_between(&p[0], &p[1])).collect();
    let decreasing = measure_01.windows(2).all(|p| p[1] <= p[0]);
    Ok(CompactnessReport {
        eps: eps.to_vec(),
        slope_01: loglog_slope(eps, &measure_01),
        slope_05: loglog_slope(eps, &measure_05),
        measure_01,
        measure_05,
        l1_consecutive,
        decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_quartic;

    #[test]
    fn free_problem_relaxes_to_a_constant() {
        let j = Kernel::compact_radial(1, 1.0).unwrap();
        let s = EpsilonSchedule::new(vec![0.1], 8.0).unwrap();
        let o = LiminfOptions { layer: 0.0, random_starts: 1, ..LiminfOptions::default() };
        let r = liminf_study(&j, &make_quartic(), &s, &o, &CellOptions::default()).unwrap();
        assert_eq!(r.target, 0.0);
        assert!(r.rows[0].min_energy < 1e-8, "{:?}", r.rows[0]);
    }

    #[test]
    fn interval_with_fixed_ends() {
        let j = Kernel::compact_radial(1, 1.0).unwrap();
        let s = EpsilonSchedule::new(vec![0.1, 0.05], 16.0).unwrap();
        let o = LiminfOptions { random_starts: 1, ..LiminfOptions::default() };
        let r = liminf_study(&j, &make_quartic(), &s, &o, &CellOptions { samples: 1024, ..CellOptions::default() }).unwrap();
        for row in &r.rows {
            assert!(row.rel_gap.abs() < 0.05, "{row:?}");
        }
    }

    #[test]
    fn constant_sequence_has_no_transition() {
        let g1 = Grid::new_1d(1.0, 10, 0.0, crate::fields::Boundary::Boxed).unwrap();
        let g2 = Grid::new_1d(1.0, 20, 0.0, crate::fields::Boundary::Boxed).unwrap();
        let r = compactness_diagnostic(&[0.1, 0.05], &[Field::constant(&g1, 1.0), Field::constant(&g2, 1.0)]).unwrap();
        assert_eq!(r.measure_01, vec![0.0, 0.0]);
        assert_eq!(r.l1_consecutive, vec![0.0]);
        assert!(r.slope_01.is_none());
    }
}

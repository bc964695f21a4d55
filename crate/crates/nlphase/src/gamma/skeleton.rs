//! Kinetic energy of the mollified sharp field on a tube around the
//! vertices of a polygonal interface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{loglog_slope, GammaError, Window};
use crate::energy::kinetic_auto_pair;
use crate::fields::{mollify, sharp_field, Boundary, Grid, Mask, PolyhedralInterface};
use crate::kernels::Kernel;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkeletonPoint {
    pub delta: f64,
    pub eps: f64,
    pub vertices: usize,
    /// 𝒥_ε(ũ_ε, (Σ^{N−2})^δ).
    pub lhs: f64,
    /// Part of `lhs` from pairs in different vertex discs.
    pub cross: f64,
}

/// Disc around one vertex on its own grid, with the block summary used for
/// interactions between discs.
struct Disc {
    self_energy: f64,
    blocks: Vec<([f64; 2], f64, f64, f64)>,
}

const BLOCK: usize = 4;

fn disc(sigma: &PolyhedralInterface, v: [f64; 2], delta: f64, eps: f64, cells_per_eps: f64, j: &Kernel) -> Result<Disc, GammaError> {
    let h = eps / cells_per_eps;
    let n = ((2.0 * delta / h).ceil() as usize).max(2);
    let pad = (eps / h).ceil() as usize + 1;
    let side = (n + 2 * pad) as f64 * h;
    let lo = [v[0] - 0.5 * n as f64 * h - pad as f64 * h, v[1] - 0.5 * n as f64 * h - pad as f64 * h];
    let big = Grid::new_2d([side, side], [n + 2 * pad, n + 2 * pad], lo, Boundary::Boxed)?;
    let moll = mollify(&sharp_field(sigma, &big).field, eps)?.field;
    let win = Window { i0: pad, i1: pad + n, j0: pad, j1: pad + n };
    let g = win.grid(&big)?;
    let u = win.crop_field(&moll, &g);
    let m = Mask::from_fn(&g, |x| (x[0] - v[0]).hypot(x[1] - v[1]) < delta);
    let self_energy = kinetic_auto_pair(&u, &m, &m, j, eps)?;
    let mut blocks = Vec::new();
    let vol = g.cell_volume();
    for bj in (0..n).step_by(BLOCK) {
        for bi in (0..n).step_by(BLOCK) {
            let (mut c, mut s1, mut s2, mut cnt) = ([0.0, 0.0], 0.0, 0.0, 0usize);
            for jj in bj..(bj + BLOCK).min(n) {
                for ii in bi..(bi + BLOCK).min(n) {
                    let k = g.index(ii, jj);
                    if m.cells[k] {
                        let x = g.center(k);
                        c[0] += x[0];
                        c[1] += x[1];
                        s1 += u.values[k];
                        s2 += u.values[k] * u.values[k];
                        cnt += 1;
                    }
                }
            }
            if cnt > 0 {
                let nn = cnt as f64;
                let mean = s1 / nn;
                blocks.push(([c[0] / nn, c[1] / nn], nn * vol, mean, (s2 / nn - mean * mean).max(0.0)));
            }
        }
    }
    Ok(Disc { self_energy, blocks })
}

/// (1/4ε) ∫_{B_a} ∫_{B_b} J_ε(y − x)|u(y) − u(x)|², block by block: the
/// kernel is frozen per block pair and |u(y) − u(x)|² averages to
/// (ū_a − ū_b)² plus both block variances.
fn cross_energy(a: &Disc, b: &Disc, je: &Kernel, eps: f64) -> f64 {
    let rows: Vec<f64> = a
        .blocks
        .par_iter()
        .map(|(xa, va, ma, sa)| {
            b.blocks
                .iter()
                .map(|(xb, vb, mb, sb)| {
                    let k = je.eval(&[xb[0] - xa[0], xb[1] - xa[1]]);
                    k * va * vb * ((ma - mb).powi(2) + sa + sb)
                })
                .sum::<f64>()
        })
        .collect();
    rows.iter().sum::<f64>() / (4.0 * eps)
}

/// 𝒥_ε(ũ_ε, T) with T the union of the δ-discs around the vertices.
/// Requires the discs to be disjoint (δ below half the least vertex gap).
pub fn skeleton_estimate(
    sigma: &PolyhedralInterface,
    delta: f64,
    eps: f64,
    j: &Kernel,
    cells_per_eps: f64,
) -> Result<SkeletonPoint, GammaError> {
    if sigma.dim != 2 || j.dim() != 2 {
        return Err(GammaError::Precondition("skeleton estimate is two-dimensional".into()));
    }
    if !(eps > 0.0 && eps < delta) {
        return Err(GammaError::Precondition(format!("need 0 < ε < δ, got ε = {eps}, δ = {delta}")));
    }
    let verts = sigma.skeleton();
    for (a, p) in verts.iter().enumerate() {
        for q in &verts[a + 1..] {
            let gap = (p[0] - q[0]).hypot(p[1] - q[1]);
            if gap <= 2.0 * delta {
                return Err(GammaError::Precondition(format!("δ = {delta} exceeds half the vertex gap {gap}")));
            }
        }
    }
    let discs = verts.par_iter().map(|v| disc(sigma, *v, delta, eps, cells_per_eps, j)).collect::<Result<Vec<_>, _>>()?;
    let je = j.scaled(eps)?;
    let mut cross = 0.0;
    for a in 0..discs.len() {
        for b in a + 1..discs.len() {
            cross += 2.0 * cross_energy(&discs[a], &discs[b], &je, eps);
        }
    }
    let lhs = discs.iter().map(|d| d.self_energy).sum::<f64>() + cross;
    Ok(SkeletonPoint { delta, eps, vertices: verts.len(), lhs, cross })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkeletonSweep {
    pub points: Vec<SkeletonPoint>,
    /// Slope of log lhs against log δ.
    pub slope: f64,
    /// Mean of lhs / (δ · vertex count).
    pub c_fit: f64,
    pub linear: bool,
}

/// Sweep δ with ε = δ · `eps_ratio` and fit the scaling in δ.
pub fn skeleton_sweep(
    sigma: &PolyhedralInterface,
    deltas: &[f64],
    eps_ratio: f64,
    j: &Kernel,
    cells_per_eps: f64,
) -> Result<SkeletonSweep, GammaError> {
    let mut ds = deltas.to_vec();
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    if ds.len() < 2 {
        return Err(GammaError::Precondition("sweep needs at least two distinct δ".into()));
    }
    let points = ds.iter().map(|d| skeleton_estimate(sigma, *d, d * eps_ratio, j, cells_per_eps)).collect::<Result<Vec<_>, _>>()?;
    let lhs: Vec<f64> = points.iter().map(|p| p.lhs).collect();
    let slope = loglog_slope(&ds, &lhs).unwrap_or(f64::NAN);
    let nv = points[0].vertices.max(1) as f64;
    let c_fit = points.iter().map(|p| p.lhs / (p.delta * nv)).sum::<f64>() / points.len() as f64;
    Ok(SkeletonSweep { points, slope, c_fit, linear: (0.8..=1.2).contains(&slope) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel() -> Kernel {
        Kernel::fractional(2, 0.75).unwrap().truncated(0.25).unwrap()
    }

    #[test]
    fn no_vertices_no_energy() {
        let s = PolyhedralInterface::flat(2, [1.0, 0.0], 0.5, [0.0, 0.0], [1.0, 1.0]).unwrap();
        let p = skeleton_estimate(&s, 0.1, 0.025, &kernel(), 8.0).unwrap();
        assert_eq!((p.vertices, p.lhs), (0, 0.0));
    }

    #[test]
    fn square_scales_linearly() {
        let sq = PolyhedralInterface::square([0.0, 0.0], 1.0).unwrap();
        let s = skeleton_sweep(&sq, &[0.1, 0.2], 0.25, &kernel(), 8.0).unwrap();
        assert!(s.linear, "{s:?}");
        assert!(s.points.iter().all(|p| p.cross >= 0.0 && p.cross < 0.05 * p.lhs));
        assert!(skeleton_sweep(&sq, &[0.1], 0.25, &kernel(), 8.0).is_err());
        assert!(skeleton_estimate(&sq, 0.6, 0.1, &kernel(), 8.0).is_err());
    }
}

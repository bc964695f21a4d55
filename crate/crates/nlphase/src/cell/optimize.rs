//! Projected Barzilai–Borwein descent on monotone profiles.

use super::discrete::Discretization;
use crate::potentials::DoubleWell;

/// Euclidean projection onto {nondecreasing} ∩ [−1, 1]^n: isotonic
/// regression by pool-adjacent-violators, then clipping.
pub fn project_monotone(v: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v.iter() {
        let mut cur = (x, 1usize);
        while let Some(&(m, c)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let total = c + cur.1;
            cur = ((m * c as f64 + cur.0 * cur.1 as f64) / total as f64, total);
        }
        blocks.push(cur);
    }
    let mut k = 0;
    for (m, c) in blocks {
        for x in &mut v[k..k + c] {
            *x = m.clamp(-1.0, 1.0);
        }
        k += c;
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DescentSettings {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub window: usize,
}

pub struct DescentResult {
    pub values: Vec<f64>,
    pub energy: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Index of the first cell with γ ≥ 0.
fn crossing(g: &[f64]) -> usize {
    g.iter().position(|v| *v >= 0.0).unwrap_or(g.len())
}

fn shift(g: &[f64], k: isize) -> Vec<f64> {
    let n = g.len() as isize;
    (0..n)
        .map(|i| {
            let j = i + k;
            if j < 0 {
                -1.0
            } else if j >= n {
                1.0
            } else {
                g[j as usize]
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn descend(d: &Discretization, w: &DoubleWell, init: &[f64], s: DescentSettings) -> DescentResult {
    let n = init.len();
    let mut x = init.to_vec();
    project_monotone(&mut x);
    let (mut e, mut g) = d.energy_grad(&x, w);
    let mut trace = vec![e];
    let mut alpha = 1.0 / d.row.iter().cloned().fold(1.0, f64::max);
    let mut converged = false;
    let mut it = 0;
    while it < s.max_iter {
        it += 1;
        // Backtracking on the projected step keeps the trace monotone.
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..60 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            project_monotone(&mut y);
            let dxs: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let moved = dot(&dxs, &dxs);
            if moved == 0.0 {
                break;
            }
            let (ey, gy) = d.energy_grad(&y, w);
            if ey <= e - 1e-4 * moved / step {
                accepted = Some((y, ey, gy, dxs));
                break;
            }
            step *= 0.5;
        }
        let Some((y, ey, gy, sk)) = accepted else {
            converged = true;
            break;
        };
        let yk: Vec<f64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sk, &yk);
        alpha = if sy > 0.0 { (dot(&sk, &sk) / sy).clamp(1e-12, 1e12) } else { step * 2.0 };
        x = y;
        e = ey;
        g = gy;
        // Pin the translation: move the zero crossing back to the centre.
        if it % 25 == 0 {
            let k = crossing(&x) as isize - (n / 2) as isize;
            if k.abs() >= 2 {
                let cand = shift(&x, k);
                let (ec, gc) = d.energy_grad(&cand, w);
                if ec <= e {
                    x = cand;
                    e = ec;
                    g = gc;
                }
            }
        }
        trace.push(e);
        if trace.len() > s.window {
            let old = trace[trace.len() - 1 - s.window];
            if old - e <= s.rel_tol * e.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
    }
    DescentResult { values: x, energy: e, trace, iterations: it, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_projection(v: &[f64]) -> f64 {
        // Distance from v to its projection should not beat a few random monotone candidates.
        let mut p = v.to_vec();
        project_monotone(&mut p);
        v.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum()
    }

    #[test]
    fn pava_examples() {
        let mut v = vec![3.0, 1.0, 2.0, -0.5, -2.0];
        project_monotone(&mut v);
        assert!(v.iter().all(|x| (x - 0.7).abs() < 1e-15));
        let mut w = vec![-0.5, 0.0, 0.5];
        project_monotone(&mut w);
        assert_eq!(w, vec![-0.5, 0.0, 0.5]);
    }

    proptest! {
        #[test]
        fn projection_is_monotone_and_idempotent(v in prop::collection::vec(-3.0f64..3.0, 1..40)) {
            let mut p = v.clone();
            project_monotone(&mut p);
            prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(p.iter().all(|x| (-1.0..=1.0).contains(x)));
            let mut q = p.clone();
            project_monotone(&mut q);
            prop_assert_eq!(&p, &q);
            let d = brute_projection(&v);
            let sorted = { let mut s = v.clone(); s.sort_by(f64::total_cmp); s.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0)); s };
            let ds: f64 = v.iter().zip(&sorted).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(d <= ds + 1e-12);
        }
    }
}

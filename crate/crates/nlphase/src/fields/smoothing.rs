//! Mollification with a fixed polynomial bump, cutoff profiles and gluing.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{distance_to, Field, FieldError, Grid, Mask};

/// θ(x) = c (1 − |x|²)²₊ with unit mass on B₁ ⊂ ℝ^N.
pub fn mollifier(dim: usize, r: f64) -> f64 {
    let c = if dim == 1 { 15.0 / 16.0 } else { 3.0 / PI };
    let t = 1.0 - r * r;
    if t <= 0.0 {
        0.0
    } else {
        c * t * t
    }
}

/// sup |∇θ|, sampled on a fine radial grid.
pub fn mollifier_gradient_sup(dim: usize) -> f64 {
    let c = if dim == 1 { 15.0 / 16.0 } else { 3.0 / PI };
    (0..=100_000)
        .map(|i| {
            let r = i as f64 / 100_000.0;
            4.0 * c * r * (1.0 - r * r)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct Mollified {
    pub field: Field,
    /// τ is below the grid spacing: the input was returned unchanged.
    pub noop: bool,
}

/// ũ = u * θ_τ with discrete weights θ_τ(kΔ) normalized to unit sum. On
/// boxed grids the weights are renormalized over the cells inside the box.
pub fn mollify(u: &Field, tau: f64) -> Result<Mollified, FieldError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(FieldError::BadRadius(tau));
    }
    let g = &u.grid;
    if tau < g.max_spacing() {
        return Ok(Mollified { field: u.clone(), noop: true });
    }
    let hx = g.spacing(0);
    let hy = if g.dim == 2 { g.spacing(1) } else { 1.0 };
    let rx = (tau / hx).floor() as i64;
    let ry = if g.dim == 2 { (tau / hy).floor() as i64 } else { 0 };
    let mut stencil = Vec::new();
    for dj in -ry..=ry {
        for di in -rx..=rx {
            let x = di as f64 * hx;
            let y = if g.dim == 2 { dj as f64 * hy } else { 0.0 };
            let w = mollifier(g.dim, x.hypot(y) / tau);
            if w > 0.0 {
                stencil.push((di, dj, w));
            }
        }
    }
    let (nx, ny) = (g.n[0] as i64, g.n[1] as i64);
    let periodic = g.periodic();
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.coords(k);
            let (mut acc, mut mass) = (0.0, 0.0);
            for &(di, dj, w) in &stencil {
                let (mut a, mut b) = (i as i64 + di, j as i64 + dj);
                if periodic {
                    a = a.rem_euclid(nx);
                    b = b.rem_euclid(ny);
                } else if a < 0 || b < 0 || a >= nx || b >= ny {
                    continue;
                }
                acc += w * u.values[g.index(a as usize, b as usize)];
                mass += w;
            }
            (acc / mass).clamp(-1.0, 1.0)
        })
        .collect();
    Ok(Mollified { field: Field { grid: g.clone(), values }, noop: false })
}

/// φ ∈ [0, 1] with φ = 1 on P ∪ Q and φ = 0 on S, interpolated across R.
#[derive(Clone, Debug)]
pub struct CutoffProfile {
    pub p: Mask,
    pub q: Mask,
    pub r: Mask,
    pub s: Mask,
    pub phi: Field,
    /// Largest forward-difference slope |φ(x) − φ(y)|/|x − y| over neighbours.
    pub max_gradient: f64,
    pub bound: f64,
}

fn max_gradient(phi: &[f64], g: &Grid) -> f64 {
    let mut m = 0.0f64;
    let (nx, ny) = (g.n[0], g.n[1]);
    for k in 0..g.len() {
        let (i, j) = g.coords(k);
        let right = if i + 1 < nx { Some(i + 1) } else if g.periodic() && nx > 1 { Some(0) } else { None };
        if let Some(a) = right {
            m = m.max((phi[g.index(a, j)] - phi[k]).abs() / g.spacing(0));
        }
        if g.dim == 2 {
            let up = if j + 1 < ny { Some(j + 1) } else if g.periodic() && ny > 1 { Some(0) } else { None };
            if let Some(b) = up {
                m = m.max((phi[g.index(i, b)] - phi[k]).abs() / g.spacing(1));
            }
        }
    }
    m
}

/// Build φ = d_S / (d_S + d_{P∪Q}) from a partition of the grid. Fails when
/// the masks do not partition the grid or when the ramp is steeper than 3/ε.
pub fn build_cutoff(p: &Mask, q: &Mask, r: &Mask, s: &Mask, eps: f64) -> Result<CutoffProfile, FieldError> {
    let g = &p.grid;
    if [q, r, s].iter().any(|m| m.grid != *g) {
        return Err(FieldError::GridMismatch);
    }
    for k in 0..g.len() {
        let c = [p.cells[k], q.cells[k], r.cells[k], s.cells[k]].iter().filter(|b| **b).count();
        if c != 1 {
            return Err(FieldError::Cutoff(format!("cell {k} belongs to {c} of P, Q, R, S")));
        }
    }
    let pq = p.union(q);
    let phi: Vec<f64> = if s.is_empty() {
        vec![1.0; g.len()]
    } else if pq.is_empty() {
        vec![0.0; g.len()]
    } else {
        let ds = distance_to(s, false);
        let dpq = distance_to(&pq, false);
        ds.iter().zip(&dpq).map(|(a, b)| if a + b == 0.0 { 0.0 } else { a / (a + b) }).collect()
    };
    let mg = max_gradient(&phi, g);
    let bound = 3.0 / eps;
    if mg > bound * (1.0 + 1e-12) {
        return Err(FieldError::Cutoff(format!("transition region too thin: max gradient {mg:.4e} exceeds 3/ε = {bound:.4e}")));
    }
    Ok(CutoffProfile {
        p: p.clone(),
        q: q.clone(),
        r: r.clone(),
        s: s.clone(),
        phi: Field { grid: g.clone(), values: phi },
        max_gradient: mg,
        bound,
    })
}

/// v = φu + (1 − φ)w.
pub fn glue(u: &Field, w: &Field, cutoff: &CutoffProfile) -> Result<Field, FieldError> {
    if u.grid != w.grid || u.grid != cutoff.phi.grid {
        return Err(FieldError::GridMismatch);
    }
    let values = u
        .values
        .iter()
        .zip(&w.values)
        .zip(&cutoff.phi.values)
        .map(|((a, b), f)| if *f == 1.0 { *a } else if *f == 0.0 { *b } else { b + f * (a - b) })
        .collect();
    Ok(Field { grid: u.grid.clone(), values })
}

//! Exact Euclidean distance transforms on cell grids (separable lower
//! envelope of parabolas) and the inner/outer sets built from them.

use super::{Grid, Mask};

/// One-dimensional squared distance transform with sample spacing `h`.
fn edt_1d(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let mut first = None;
    for (q, fq) in f.iter().enumerate() {
        if fq.is_finite() {
            first = Some(q);
            break;
        }
    }
    let Some(q0) = first else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    };
    v[0] = q0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let x = |q: usize| q as f64 * h;
    for q in q0 + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + x(q) * x(q)) - (f[p] + x(p) * x(p))) / (2.0 * (x(q) - x(p)));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0: the new parabola dominates everywhere.
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while z[k + 1] < x(p) {
            k += 1;
        }
        let d = x(p) - x(v[k]);
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from every cell center to the nearest center of a cell
/// in `mask` (+∞ when the mask is empty). Periodic axes use the minimum
/// image.
pub fn edt_squared(mask: &Mask) -> Vec<f64> {
    let g = &mask.grid;
    let tile = |axis: usize| if g.periodic() && (axis < g.dim) { 3 } else { 1 };
    let (tx, ty) = (tile(0), tile(1));
    let (nx, ny) = (g.n[0], g.n[1]);
    let (mx, my) = (nx * tx, ny * ty);
    let mut buf = vec![f64::INFINITY; mx * my];
    for j in 0..my {
        for i in 0..mx {
            if mask.cells[g.index(i % nx, j % ny)] {
                buf[j * mx + i] = 0.0;
            }
        }
    }
    let hx = g.spacing(0);
    let mut row = vec![0.0; mx];
    for j in 0..my {
        edt_1d(&buf[j * mx..(j + 1) * mx], hx, &mut row);
        buf[j * mx..(j + 1) * mx].copy_from_slice(&row);
    }
    if g.dim == 2 {
        let hy = g.spacing(1);
        let mut col = vec![0.0; my];
        let mut out = vec![0.0; my];
        for i in 0..mx {
            for j in 0..my {
                col[j] = buf[j * mx + i];
            }
            edt_1d(&col, hy, &mut out);
            for j in 0..my {
                buf[j * mx + i] = out[j];
            }
        }
    }
    let (ox, oy) = ((tx / 2) * nx, (ty / 2) * ny);
    let mut res = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            res[g.index(i, j)] = buf[(j + oy) * mx + i + ox];
        }
    }
    res
}

/// Distance from each cell center to the nearest center of `mask`. With
/// `exterior`, the cells just outside a boxed grid count as members.
pub fn distance_to(mask: &Mask, exterior: bool) -> Vec<f64> {
    let g = &mask.grid;
    let mut d: Vec<f64> = edt_squared(mask).into_iter().map(f64::sqrt).collect();
    if exterior && !g.periodic() {
        for (k, dk) in d.iter_mut().enumerate() {
            let (i, j) = g.coords(k);
            let mut e = ((i + 1) as f64).min((g.n[0] - i) as f64) * g.spacing(0);
            if g.dim == 2 {
                e = e.min(((j + 1) as f64).min((g.n[1] - j) as f64) * g.spacing(1));
            }
            *dk = dk.min(e);
        }
    }
    d
}

fn half_cell(g: &Grid) -> f64 {
    0.5 * (0..g.dim).map(|a| g.spacing(a)).fold(f64::INFINITY, f64::min)
}

/// E_δ = {x ∈ E : d(x, ∂E) > δ}. Cell-level: the boundary sits half a cell
/// from the nearest complement center; on boxed grids the exterior belongs
/// to the complement.
pub fn inner_set(e: &Mask, delta: f64) -> Mask {
    let d = distance_to(&e.complement(), true);
    let h = half_cell(&e.grid);
    Mask { grid: e.grid.clone(), cells: e.cells.iter().zip(&d).map(|(&m, &dc)| m && dc - h > delta).collect() }
}

/// E^δ = {x : d(x, E) < δ}, cell-level.
pub fn outer_set(e: &Mask, delta: f64) -> Mask {
    let d = distance_to(e, false);
    let h = half_cell(&e.grid);
    Mask { grid: e.grid.clone(), cells: e.cells.iter().zip(&d).map(|(&m, &de)| m || de - h < delta).collect() }
}

/// Add every face/corner neighbour of the mask.
pub fn dilate(mask: &Mask) -> Mask {
    let g = &mask.grid;
    let (nx, ny) = (g.n[0] as i64, g.n[1] as i64);
    let ry = if g.dim == 2 { 1 } else { 0 };
    let mut out = mask.cells.clone();
    for k in 0..g.len() {
        if !mask.cells[k] {
            continue;
        }
        let (i, j) = g.coords(k);
        for dj in -ry..=ry {
            for di in -1..=1i64 {
                let (mut a, mut b) = (i as i64 + di, j as i64 + dj);
                if g.periodic() {
                    a = a.rem_euclid(nx);
                    b = b.rem_euclid(ny);
                } else if a < 0 || b < 0 || a >= nx || b >= ny {
                    continue;
                }
                out[g.index(a as usize, b as usize)] = true;
            }
        }
    }
    Mask { grid: g.clone(), cells: out }
}

/// Exact distance between the closed cell unions of `a` and `b`.
pub fn region_distance(a: &Mask, b: &Mask) -> f64 {
    let d2 = edt_squared(&dilate(a));
    b.cells.iter().zip(&d2).filter(|(m, _)| **m).map(|(_, d)| *d).fold(f64::INFINITY, f64::min).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;

    fn brute(mask: &Mask) -> Vec<f64> {
        let g = &mask.grid;
        (0..g.len())
            .map(|k| {
                let c = g.center(k);
                (0..g.len())
                    .filter(|q| mask.cells[*q])
                    .map(|q| {
                        let d = g.center(q);
                        let mut dx = (c[0] - d[0]).abs();
                        let mut dy = (c[1] - d[1]).abs();
                        if g.periodic() {
                            dx = dx.min(g.extents[0] - dx);
                            if g.dim == 2 {
                                dy = dy.min(g.extents[1] - dy);
                            }
                        }
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        for boundary in [Boundary::Boxed, Boundary::Periodic] {
            let g = Grid::new_2d([1.0, 0.7], [13, 9], [0.0, 0.0], boundary).unwrap();
            let mask = Mask::from_fn(&g, |c| ((c[0] * 7.3).sin() * (c[1] * 5.1).cos()) > 0.6);
            let a = edt_squared(&mask);
            let b = brute(&mask);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn one_dimensional() {
        let g = Grid::new_1d(1.0, 10, 0.0, Boundary::Boxed).unwrap();
        let mut m = Mask::empty(&g);
        m.cells[2] = true;
        let d = edt_squared(&m);
        assert!((d[7] - 0.25).abs() < 1e-12);
        assert_eq!(edt_squared(&Mask::empty(&g))[0], f64::INFINITY);
    }

    #[test]
    fn square_inner_and_outer() {
        let g = Grid::new_2d([2.0, 2.0], [400, 400], [-0.5, -0.5], Boundary::Boxed).unwrap();
        let sq = Mask::rect(&g, [0.0, 0.0], [1.0, 1.0]);
        let inner = inner_set(&sq, 0.1);
        assert!((inner.volume() - 0.64).abs() < 1e-9, "{}", inner.volume());
        let outer = outer_set(&sq, 0.1);
        let exact = 1.0 + 0.4 + std::f64::consts::PI * 0.01;
        assert!((outer.volume() - exact).abs() < 4.0 * 0.1 * g.spacing(0) + 1e-9, "{}", outer.volume());
        assert_eq!(inner_set(&sq, 0.0), sq);
        assert_eq!(outer_set(&sq, 0.0), sq);
    }

    #[test]
    fn region_distance_is_exact() {
        let g = Grid::new_2d([1.0, 1.0], [10, 10], [0.0, 0.0], Boundary::Boxed).unwrap();
        let a = Mask::rect(&g, [0.0, 0.0], [0.2, 0.2]);
        let b = Mask::rect(&g, [0.5, 0.6], [1.0, 1.0]);
        assert!((region_distance(&a, &b) - (0.3f64.hypot(0.4))).abs() < 1e-12);
        let c = Mask::rect(&g, [0.2, 0.0], [0.3, 0.1]);
        assert_eq!(region_distance(&a, &c), 0.0);
    }
}

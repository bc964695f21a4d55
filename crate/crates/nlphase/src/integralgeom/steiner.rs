//! Tube measure of a finite union of segments by grid counting, against the
//! Steiner bound |X^δ| ≤ 2πδ𝓗¹(X) + O(δ²).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::GeomError;
use crate::fields::PolyhedralInterface;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    fn distance(&self, x: [f64; 2]) -> f64 {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let l2 = d[0] * d[0] + d[1] * d[1];
        let t = (((x[0] - self.a[0]) * d[0] + (x[1] - self.a[1]) * d[1]) / l2).clamp(0.0, 1.0);
        (x[0] - self.a[0] - t * d[0]).hypot(x[1] - self.a[1] - t * d[1])
    }
}

/// Facets of a planar interface as segments.
pub fn segments(sigma: &PolyhedralInterface) -> Result<Vec<Segment>, GeomError> {
    if sigma.dim != 2 {
        return Err(GeomError::Precondition("tube checks need a planar interface".into()));
    }
    Ok(sigma.facets.iter().map(|f| Segment { a: f.a, b: f.b }).collect())
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Pieces must have positive length and meet in 𝓗¹-null sets, i.e. no two
/// collinear segments overlap along a subsegment.
fn validate(pieces: &[Segment]) -> Result<(), GeomError> {
    if pieces.is_empty() {
        return Err(GeomError::Precondition("no pieces".into()));
    }
    for (i, p) in pieces.iter().enumerate() {
        if !(p.length() > 0.0 && p.length().is_finite()) {
            return Err(GeomError::Precondition(format!("piece {i} is degenerate")));
        }
        let d = [p.b[0] - p.a[0], p.b[1] - p.a[1]];
        let l = p.length();
        for (k, q) in pieces.iter().enumerate().skip(i + 1) {
            let qa = [q.a[0] - p.a[0], q.a[1] - p.a[1]];
            let qb = [q.b[0] - p.a[0], q.b[1] - p.a[1]];
            if (cross(d, qa) / l).abs() > 1e-12 || (cross(d, qb) / l).abs() > 1e-12 {
                continue;
            }
            let (s, t) = ((qa[0] * d[0] + qa[1] * d[1]) / l, (qb[0] * d[0] + qb[1] * d[1]) / l);
            if s.max(t).min(l) - s.min(t).max(0.0) > 1e-12 {
                return Err(GeomError::Precondition(format!("pieces {i} and {k} overlap")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinerReport {
    pub delta: f64,
    pub pieces: usize,
    pub length: f64,
    /// Grid count of |X^δ|.
    pub tube_measure: f64,
    /// Bound on the counting error: cells cut by the tube boundary.
    pub grid_tolerance: f64,
    pub spacing: f64,
    /// 2πδ𝓗¹(X).
    pub leading: f64,
    /// Σ_k πδ², the quadratic Steiner terms of the pieces.
    pub quadratic: f64,
    pub bound: f64,
    pub holds: bool,
    /// 2δ𝓗¹(X) + Σ_k πδ².
    pub tight_bound: f64,
    pub tight_holds: bool,
    pub warning: Option<String>,
}

/// Count cells of spacing δ/`cells_per_delta` whose centers lie within δ of X.
pub fn steiner_check(pieces: &[Segment], delta: f64, cells_per_delta: f64) -> Result<SteinerReport, GeomError> {
    validate(pieces)?;
    if !(delta > 0.0 && delta.is_finite()) || !(cells_per_delta >= 2.0) {
        return Err(GeomError::Precondition(format!("need δ > 0 and at least 2 cells per δ, got {delta}, {cells_per_delta}")));
    }
    let h = delta / cells_per_delta;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pieces {
        for x in [p.a, p.b] {
            for k in 0..2 {
                lo[k] = lo[k].min(x[k] - delta);
                hi[k] = hi[k].max(x[k] + delta);
            }
        }
    }
    let n = [((hi[0] - lo[0]) / h).ceil() as usize, ((hi[1] - lo[1]) / h).ceil() as usize];
    if (n[0] as f64) * (n[1] as f64) > 5e8 {
        return Err(GeomError::Precondition(format!("counting grid {}×{} is too large", n[0], n[1])));
    }
    let count: usize = (0..n[1])
        .into_par_iter()
        .map(|j| {
            let y = lo[1] + (j as f64 + 0.5) * h;
            let near: Vec<&Segment> = pieces.iter().filter(|p| p.a[1].min(p.b[1]) - delta < y && p.a[1].max(p.b[1]) + delta > y).collect();
            (0..n[0]).filter(|i| {
                let x = [lo[0] + (*i as f64 + 0.5) * h, y];
                near.iter().any(|p| p.distance(x) < delta)
            })
            .count()
        })
        .sum();
    let tube_measure = count as f64 * h * h;
    let length: f64 = pieces.iter().map(Segment::length).sum();
    let k = pieces.len() as f64;
    let perimeter = 2.0 * length + k * 2.0 * PI * delta;
    let grid_tolerance = std::f64::consts::SQRT_2 * perimeter * h;
    let leading = 2.0 * PI * delta * length;
    let quadratic = k * PI * delta * delta;
    let tight_bound = 2.0 * delta * length + quadratic;
    let shortest = pieces.iter().map(Segment::length).fold(f64::INFINITY, f64::min);
    let warning = (delta > 0.5 * shortest).then(|| format!("δ = {delta} is large against the shortest piece {shortest}; tube overlaps dominate"));
    Ok(SteinerReport {
        delta,
        pieces: pieces.len(),
        length,
        tube_measure,
        grid_tolerance,
        spacing: h,
        leading,
        quadratic,
        bound: leading + quadratic,
        holds: tube_measure - grid_tolerance <= leading + quadratic,
        tight_bound,
        tight_holds: tube_measure - grid_tolerance <= tight_bound,
        warning,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinerFit {
    pub reports: Vec<SteinerReport>,
    /// a in |X^δ| ≈ aδ + bδ².
    pub linear: f64,
    pub quadratic: f64,
    /// a / 𝓗¹(X); 2 for disjoint flat pieces.
    pub leading_ratio: f64,
}

/// Least-squares fit of the tube measure against δ and δ².
pub fn steiner_fit(pieces: &[Segment], deltas: &[f64], cells_per_delta: f64) -> Result<SteinerFit, GeomError> {
    if deltas.len() < 2 {
        return Err(GeomError::Precondition("fit needs at least two δ".into()));
    }
    let reports = deltas.iter().map(|d| steiner_check(pieces, *d, cells_per_delta)).collect::<Result<Vec<_>, _>>()?;
    let (mut s22, mut s23, mut s33, mut s2y, mut s3y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in &reports {
        let (d, y) = (r.delta, r.tube_measure);
        s22 += d * d;
        s23 += d * d * d;
        s33 += d.powi(4);
        s2y += d * y;
        s3y += d * d * y;
    }
    let det = s22 * s33 - s23 * s23;
    if det.abs() < 1e-300 {
        return Err(GeomError::Precondition("δ values must be distinct".into()));
    }
    let linear = (s2y * s33 - s3y * s23) / det;
    let quadratic = (s22 * s3y - s23 * s2y) / det;
    let length = reports[0].length;
    Ok(SteinerFit { reports, linear, quadratic, leading_ratio: linear / length })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_segment_is_a_stadium() {
        let seg = [Segment { a: [0.0, 0.0], b: [1.0, 0.0] }];
        for d in [0.02, 0.05, 0.1] {
            let r = steiner_check(&seg, d, 40.0).unwrap();
            let exact = 2.0 * d + PI * d * d;
            assert!((r.tube_measure - exact).abs() <= r.grid_tolerance, "{r:?}");
            assert!(r.holds && r.tight_holds && r.warning.is_none());
        }
    }

    #[test]
    fn crossing_segments_subadditive() {
        let x = [Segment { a: [-0.5, 0.0], b: [0.5, 0.0] }, Segment { a: [0.0, -0.5], b: [0.0, 0.5] }];
        let r = steiner_check(&x, 0.05, 40.0).unwrap();
        let single = steiner_check(&x[..1], 0.05, 40.0).unwrap().tube_measure + steiner_check(&x[1..], 0.05, 40.0).unwrap().tube_measure;
        assert!(r.tube_measure < single);
        assert!(r.holds);
    }

    #[test]
    fn overlapping_pieces_rejected() {
        let x = [Segment { a: [0.0, 0.0], b: [1.0, 0.0] }, Segment { a: [0.5, 0.0], b: [2.0, 0.0] }];
        assert!(steiner_check(&x, 0.1, 8.0).is_err());
        let touching = [Segment { a: [0.0, 0.0], b: [1.0, 0.0] }, Segment { a: [1.0, 0.0], b: [2.0, 0.0] }];
        assert!(steiner_check(&touching, 0.1, 8.0).is_ok());
    }

    #[test]
    fn fit_recovers_stadium_coefficients() {
        let seg = [Segment { a: [0.0, 0.0], b: [1.0, 0.0] }];
        let f = steiner_fit(&seg, &[0.02, 0.04, 0.08], 40.0).unwrap();
        assert!((f.leading_ratio - 2.0).abs() < 0.02, "{f:?}");
    }
}

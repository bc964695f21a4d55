//! Polyhedral interfaces: facet lists with normals pointing into the +1
//! phase, their JSON form and the induced sharp ±1 field.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Field, Grid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterfaceError {
    #[error("interface JSON: {0}")]
    Json(String),
    #[error("facet {index}: {msg}")]
    Facet { index: usize, msg: String },
    #[error("facets {a} and {b} overlap on a set of positive length")]
    Overlap { a: usize, b: usize },
    #[error("polygon: {0}")]
    Polygon(String),
}

/// A flat piece of the interface. In 2D a segment `a → b`; in 1D a point
/// `a` (with `b = a`). `normal` points into the +1 phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub normal: [f64; 2],
}

impl Facet {
    /// H^{N−1} measure: length in 2D, 1 in 1D.
    pub fn measure(&self, dim: usize) -> f64 {
        if dim == 1 {
            1.0
        } else {
            (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
        }
    }

    /// Closest point of the facet to `x`.
    pub fn closest(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let l2 = d[0] * d[0] + d[1] * d[1];
        if l2 == 0.0 {
            return self.a;
        }
        let t = (((x[0] - self.a[0]) * d[0] + (x[1] - self.a[1]) * d[1]) / l2).clamp(0.0, 1.0);
        [self.a[0] + t * d[0], self.a[1] + t * d[1]]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralInterface {
    pub dim: usize,
    pub facets: Vec<Facet>,
    /// Value of the induced field when there are no facets.
    #[serde(default = "minus_one")]
    pub empty_value: f64,
}

fn minus_one() -> f64 {
    -1.0
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl PolyhedralInterface {
    pub fn new(dim: usize, facets: Vec<Facet>) -> Result<Self, InterfaceError> {
        let s = PolyhedralInterface { dim, facets, empty_value: -1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn empty(dim: usize, value: f64) -> Self {
        PolyhedralInterface { dim, facets: Vec::new(), empty_value: value }
    }

    /// Parse and validate the JSON facet-list form.
    pub fn from_json(text: &str) -> Result<Self, InterfaceError> {
        let s: PolyhedralInterface = serde_json::from_str(text).map_err(|e| InterfaceError::Json(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("interface serializes")
    }

    pub fn validate(&self) -> Result<(), InterfaceError> {
        if self.dim != 1 && self.dim != 2 {
            return Err(InterfaceError::Json(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if !(self.empty_value == 1.0 || self.empty_value == -1.0) {
            return Err(InterfaceError::Json("empty_value must be ±1".into()));
        }
        for (index, f) in self.facets.iter().enumerate() {
            let bad = |msg: &str| InterfaceError::Facet { index, msg: msg.into() };
            if f.a.iter().chain(&f.b).chain(&f.normal).any(|x| !x.is_finite()) {
                return Err(bad("non-finite coordinate"));
            }
            if (norm(f.normal) - 1.0).abs() > 1e-9 {
                return Err(bad("normal is not a unit vector"));
            }
            if self.dim == 1 {
                if f.a != f.b || f.a[1] != 0.0 || f.normal[1] != 0.0 {
                    return Err(bad("1D facets are points on the axis with normal ±e₁"));
                }
            } else {
                let d = [f.b[0] - f.a[0], f.b[1] - f.a[1]];
                let l = norm(d);
                if l == 0.0 {
                    return Err(bad("degenerate segment"));
                }
                if (d[0] * f.normal[0] + d[1] * f.normal[1]).abs() > 1e-9 * l {
                    return Err(bad("normal is not orthogonal to the segment"));
                }
            }
        }
        for i in 0..self.facets.len() {
            for j in i + 1..self.facets.len() {
                if self.overlap(i, j) {
                    return Err(InterfaceError::Overlap { a: i, b: j });
                }
            }
        }
        Ok(())
    }

    fn overlap(&self, i: usize, j: usize) -> bool {
        let (p, q) = (&self.facets[i], &self.facets[j]);
        if self.dim == 1 {
            return p.a == q.a;
        }
        let d = [p.b[0] - p.a[0], p.b[1] - p.a[1]];
        let l = norm(d);
        let off = |x: [f64; 2]| cross(d, [x[0] - p.a[0], x[1] - p.a[1]]).abs() / l;
        if off(q.a) > 1e-12 * l || off(q.b) > 1e-12 * l {
            return false;
        }
        let t = |x: [f64; 2]| ((x[0] - p.a[0]) * d[0] + (x[1] - p.a[1]) * d[1]) / (l * l);
        let (s0, s1) = (t(q.a).min(t(q.b)), t(q.a).max(t(q.b)));
        s1.min(1.0) - s0.max(0.0) > 1e-12
    }

    /// Σ H^{N−1}(facet).
    pub fn measure(&self) -> f64 {
        self.facets.iter().map(|f| f.measure(self.dim)).sum()
    }

    /// The (N−2)-skeleton: in 2D the endpoints shared by at least two
    /// facets; empty in 1D.
    pub fn skeleton(&self) -> Vec<[f64; 2]> {
        if self.dim == 1 {
            return Vec::new();
        }
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for f in &self.facets {
            for p in [f.a, f.b] {
                match pts.iter().position(|q| norm([q[0] - p[0], q[1] - p[1]]) < 1e-12) {
                    Some(k) => counts[k] += 1,
                    None => {
                        pts.push(p);
                        counts.push(1);
                    }
                }
            }
        }
        pts.into_iter().zip(counts).filter(|(_, c)| *c >= 2).map(|(p, _)| p).collect()
    }

    /// Hyperplane {x·ν = c} clipped to the box `[lo, hi]` (2D) or the point
    /// x = c (1D).
    pub fn flat(dim: usize, normal: [f64; 2], offset: f64, lo: [f64; 2], hi: [f64; 2]) -> Result<Self, InterfaceError> {
        if dim == 1 {
            let s = normal[0].signum();
            return Self::new(1, vec![Facet { a: [offset * s, 0.0], b: [offset * s, 0.0], normal: [s, 0.0] }]);
        }
        let n = [normal[0] / norm(normal), normal[1] / norm(normal)];
        let t = [-n[1], n[0]];
        let p0 = [n[0] * offset, n[1] * offset];
        // Clip the line p0 + s t to the box.
        let (mut s0, mut s1) = (f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..2 {
            if t[a].abs() < 1e-15 {
                if p0[a] < lo[a] || p0[a] > hi[a] {
                    return Err(InterfaceError::Polygon("hyperplane misses the box".into()));
                }
            } else {
                let (u, v) = ((lo[a] - p0[a]) / t[a], (hi[a] - p0[a]) / t[a]);
                s0 = s0.max(u.min(v));
                s1 = s1.min(u.max(v));
            }
        }
        if s1 <= s0 {
            return Err(InterfaceError::Polygon("hyperplane misses the box".into()));
        }
        let a = [p0[0] + s0 * t[0], p0[1] + s0 * t[1]];
        let b = [p0[0] + s1 * t[0], p0[1] + s1 * t[1]];
        Self::new(2, vec![Facet { a, b, normal: n }])
    }

    /// Closed polygon with vertices in counter-clockwise order; the +1 phase
    /// is the inside when `inside_positive`.
    pub fn polygon(vertices: &[[f64; 2]], inside_positive: bool) -> Result<Self, InterfaceError> {
        if vertices.len() < 3 {
            return Err(InterfaceError::Polygon("need at least 3 vertices".into()));
        }
        let n = vertices.len();
        let area: f64 = (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum::<f64>() / 2.0;
        if area <= 0.0 {
            return Err(InterfaceError::Polygon("vertices must be counter-clockwise".into()));
        }
        let sign = if inside_positive { 1.0 } else { -1.0 };
        let facets = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let l = norm(d);
                // Inward normal of a CCW polygon is the left normal.
                Facet { a, b, normal: [-sign * d[1] / l, sign * d[0] / l] }
            })
            .collect();
        let mut s = Self::new(2, facets)?;
        s.empty_value = if inside_positive { -1.0 } else { 1.0 };
        Ok(s)
    }

    /// Axis-aligned square with lower-left corner `lo`, inside +1.
    pub fn square(lo: [f64; 2], side: f64) -> Result<Self, InterfaceError> {
        Self::polygon(&[lo, [lo[0] + side, lo[1]], [lo[0] + side, lo[1] + side], [lo[0], lo[1] + side]], true)
    }

    /// Regular polygon with `k` vertices, inside +1.
    pub fn regular(k: usize, center: [f64; 2], circumradius: f64, phase: f64) -> Result<Self, InterfaceError> {
        let v: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                let t = phase + 2.0 * PI * i as f64 / k as f64;
                [center[0] + circumradius * t.cos(), center[1] + circumradius * t.sin()]
            })
            .collect();
        Self::polygon(&v, true)
    }

    /// Sign of the induced field at `x`: the side of the nearest facet,
    /// breaking ties at shared vertices by the largest normal offset.
    pub fn side(&self, x: [f64; 2]) -> f64 {
        if self.facets.is_empty() {
            return self.empty_value;
        }
        let mut best = f64::INFINITY;
        let mut best_off = 0.0f64;
        for f in &self.facets {
            let p = f.closest(x);
            let v = [x[0] - p[0], x[1] - p[1]];
            let d = if self.dim == 1 { v[0].abs() } else { norm(v) };
            let off = v[0] * f.normal[0] + v[1] * f.normal[1];
            if d < best * (1.0 - 1e-12) {
                best = d;
                best_off = off;
            } else if d <= best * (1.0 + 1e-12) && off.abs() > best_off.abs() {
                best_off = off;
            }
        }
        if best_off > 0.0 {
            1.0
        } else if best_off < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Distance from `x` to the interface.
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        self.facets
            .iter()
            .map(|f| {
                let p = f.closest(x);
                norm([x[0] - p[0], x[1] - p[1]])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed distance, positive on the +1 side.
    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        self.side(x) * self.distance(x)
    }

    /// Index of the nearest facet.
    pub fn nearest_facet(&self, x: [f64; 2]) -> Option<usize> {
        let mut best = (f64::INFINITY, None);
        for (k, f) in self.facets.iter().enumerate() {
            let p = f.closest(x);
            let d = norm([x[0] - p[0], x[1] - p[1]]);
            if d < best.0 {
                best = (d, Some(k));
            }
        }
        best.1
    }
}

/// Sharp field induced by an interface, with its recorded interface measure.
#[derive(Clone, Debug)]
pub struct SharpField {
    pub field: Field,
    pub measure: f64,
    /// Some facet is shorter than one cell.
    pub under_resolved: bool,
}

pub fn sharp_field(sigma: &PolyhedralInterface, grid: &Grid) -> SharpField {
    let field = Field::from_fn(grid, |c| sigma.side(c));
    let h = grid.max_spacing();
    let under_resolved = sigma.dim == 2 && sigma.facets.iter().any(|f| f.measure(2) < h);
    SharpField { field, measure: sigma.measure(), under_resolved }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;

    #[test]
    fn vertical_line_splits_box() {
        let g = Grid::new_2d([2.0, 1.0], [20, 10], [-1.0, 0.0], Boundary::Boxed).unwrap();
        let s = PolyhedralInterface::flat(2, [1.0, 0.0], 0.0, [-1.0, 0.0], [1.0, 1.0]).unwrap();
        assert!((s.measure() - 1.0).abs() < 1e-12);
        let u = sharp_field(&s, &g).field;
        for k in 0..g.len() {
            let c = g.center(k);
            assert_eq!(u.values[k], if c[0] > 0.0 { 1.0 } else { -1.0 });
        }
        assert!(s.skeleton().is_empty());
    }

    #[test]
    fn square_inside_positive() {
        let g = Grid::new_2d([2.0, 2.0], [40, 40], [-0.5, -0.5], Boundary::Boxed).unwrap();
        let s = PolyhedralInterface::square([0.0, 0.0], 1.0).unwrap();
        let sf = sharp_field(&s, &g);
        assert_eq!(sf.measure, 4.0);
        assert_eq!(s.skeleton().len(), 4);
        for k in 0..g.len() {
            let c = g.center(k);
            let inside = c[0] > 0.0 && c[0] < 1.0 && c[1] > 0.0 && c[1] < 1.0;
            assert_eq!(sf.field.values[k], if inside { 1.0 } else { -1.0 }, "{c:?}");
        }
    }

    #[test]
    fn empty_interface_is_constant() {
        let g = Grid::new_1d(1.0, 8, 0.0, Boundary::Boxed).unwrap();
        let u = sharp_field(&PolyhedralInterface::empty(1, 1.0), &g).field;
        assert!(u.values.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let s = PolyhedralInterface::regular(8, [0.0, 0.0], 1.0, 0.1).unwrap();
        let back = PolyhedralInterface::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        assert!(PolyhedralInterface::from_json("{\"dim\":2,\"facets\":[{\"a\":[0,0],\"b\":[1,0],\"normal\":[0,2]}]}").is_err());
        assert!(PolyhedralInterface::from_json("{\"dim\":2,\"facets\":[{\"a\":[0,0],\"b\":[1,0],\"normal\":[1,0]}]}").is_err());
        let dup = "{\"dim\":2,\"facets\":[{\"a\":[0,0],\"b\":[1,0],\"normal\":[0,1]},{\"a\":[0.5,0],\"b\":[2,0],\"normal\":[0,1]}]}";
        assert!(matches!(PolyhedralInterface::from_json(dup), Err(InterfaceError::Overlap { .. })));
        assert!(PolyhedralInterface::from_json("not json").is_err());
    }

    #[test]
    fn reentrant_corner_sides() {
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        let s = PolyhedralInterface::polygon(&l, true).unwrap();
        assert_eq!(s.side([1.5, 1.5]), -1.0);
        assert_eq!(s.side([1.1, 1.2]), -1.0);
        assert_eq!(s.side([0.9, 0.95]), 1.0);
        assert_eq!(s.side([0.5, 1.5]), 1.0);
        assert_eq!(s.skeleton().len(), 6);
    }
}

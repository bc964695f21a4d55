//! Grid fields on 1D/2D boxes, cell masks, polyhedral interfaces and the
//! geometric operations used by the recovery constructions.

mod distance;
mod interface;
mod io;
mod smoothing;

pub use distance::{dilate, distance_to, edt_squared, inner_set, outer_set, region_distance};
pub use interface::{sharp_field, Facet, InterfaceError, PolyhedralInterface, SharpField};
pub use io::{decode_field, encode_field, parse_field_header, FieldHeader};
pub use smoothing::{build_cutoff, glue, mollifier, mollifier_gradient_sup, mollify, CutoffProfile, Mollified};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("field value {value} at cell {index} lies outside [-1, 1]")]
    Range { index: usize, value: f64 },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("mollification radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("cutoff: {0}")]
    Cutoff(String),
    #[error("field encoding: {0}")]
    Encoding(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Boxed,
}

/// Uniform cell grid. Cell `(i, j)` has center
/// `origin + ((i + ½) h_x, (j + ½) h_y)`; 1D grids use `n[1] = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub extents: [f64; 2],
    pub n: [usize; 2],
    pub origin: [f64; 2],
    pub boundary: Boundary,
}

impl Grid {
    pub fn new_1d(length: f64, n: usize, origin: f64, boundary: Boundary) -> Result<Self, FieldError> {
        let g = Grid { dim: 1, extents: [length, 1.0], n: [n, 1], origin: [origin, 0.0], boundary };
        g.validate()?;
        Ok(g)
    }

    pub fn new_2d(extents: [f64; 2], n: [usize; 2], origin: [f64; 2], boundary: Boundary) -> Result<Self, FieldError> {
        let g = Grid { dim: 2, extents, n, origin, boundary };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.dim != 1 && self.dim != 2 {
            return Err(FieldError::Grid(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        for a in 0..self.dim {
            if !(self.extents[a] > 0.0 && self.extents[a].is_finite()) {
                return Err(FieldError::Grid(format!("extent along axis {a} must be positive")));
            }
            if self.n[a] == 0 {
                return Err(FieldError::Grid(format!("resolution along axis {a} must be positive")));
            }
            if !self.origin[a].is_finite() {
                return Err(FieldError::Grid("origin must be finite".into()));
            }
        }
        if self.dim == 1 && self.n[1] != 1 {
            return Err(FieldError::Grid("1D grids have a single row".into()));
        }
        if self.len() > 1 << 26 {
            return Err(FieldError::Grid("grid too large".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.n[axis] as f64
    }

    /// Largest spacing over the active axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.extents[a]).product()
    }

    pub fn periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n[0], idx / self.n[0])
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.coords(idx);
        let y = if self.dim == 2 { self.origin[1] + (j as f64 + 0.5) * self.spacing(1) } else { 0.0 };
        [self.origin[0] + (i as f64 + 0.5) * self.spacing(0), y]
    }

    /// Same geometry, different resolution.
    pub fn with_resolution(&self, n: [usize; 2]) -> Result<Self, FieldError> {
        let g = Grid { n: if self.dim == 1 { [n[0], 1] } else { n }, ..self.clone() };
        g.validate()?;
        Ok(g)
    }
}

/// Cell values on a grid, each in [−1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length { expected: grid.len(), got: values.len() });
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value.abs() <= 1.0 + 1e-12) {
                return Err(FieldError::Range { index, value });
            }
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field { grid: grid.clone(), values: vec![c.clamp(-1.0, 1.0); grid.len()] }
    }

    /// Sample `f` at cell centers, clamping to [−1, 1].
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.center(k)).clamp(-1.0, 1.0)).collect();
        Field { grid: grid.clone(), values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// ∫ |u − v| (restricted to `mask` when given).
    pub fn l1_distance(&self, other: &Field, mask: Option<&Mask>) -> Result<f64, FieldError> {
        self.lp_distance(other, mask, 1)
    }

    /// (∫ |u − v|²)^{1/2}.
    pub fn l2_distance(&self, other: &Field, mask: Option<&Mask>) -> Result<f64, FieldError> {
        self.lp_distance(other, mask, 2).map(f64::sqrt)
    }

    fn lp_distance(&self, other: &Field, mask: Option<&Mask>, p: i32) -> Result<f64, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let v = self.grid.cell_volume();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(k, _)| mask.is_none_or(|m| m.cells[*k]))
            .map(|(_, (a, b))| (a - b).abs().powi(p))
            .sum::<f64>()
            * v)
    }

    /// Volume of {|u| < 1 − θ}.
    pub fn transition_measure(&self, theta: f64) -> f64 {
        self.values.iter().filter(|v| v.abs() < 1.0 - theta).count() as f64 * self.grid.cell_volume()
    }
}

/// A set of grid cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    pub grid: Grid,
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn empty(grid: &Grid) -> Self {
        Mask { grid: grid.clone(), cells: vec![false; grid.len()] }
    }

    pub fn full(grid: &Grid) -> Self {
        Mask { grid: grid.clone(), cells: vec![true; grid.len()] }
    }

    /// Cells whose center satisfies `pred`.
    pub fn from_fn(grid: &Grid, pred: impl Fn([f64; 2]) -> bool) -> Self {
        Mask { grid: grid.clone(), cells: (0..grid.len()).map(|k| pred(grid.center(k))).collect() }
    }

    /// Axis-aligned box `[lo, hi)` by cell centers.
    pub fn rect(grid: &Grid, lo: [f64; 2], hi: [f64; 2]) -> Self {
        let dim = grid.dim;
        Mask::from_fn(grid, |c| (0..dim).all(|a| c[a] >= lo[a] && c[a] < hi[a]))
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|c| *c)
    }

    fn zip(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.grid, other.grid, "mask grids differ");
        Mask { grid: self.grid.clone(), cells: self.cells.iter().zip(&other.cells).map(|(a, b)| f(*a, *b)).collect() }
    }

    pub fn union(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && b)
    }

    pub fn minus(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Mask {
        Mask { grid: self.grid.clone(), cells: self.cells.iter().map(|c| !c).collect() }
    }

    pub fn is_subset(&self, other: &Mask) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| !a || *b)
    }

    pub fn is_disjoint(&self, other: &Mask) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| !(a & b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = Grid::new_2d([2.0, 1.0], [4, 2], [-1.0, 0.0], Boundary::Boxed).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.cell_volume(), 0.25);
        assert_eq!(g.center(g.index(3, 1)), [0.75, 0.75]);
        assert!(Grid::new_1d(0.0, 4, 0.0, Boundary::Boxed).is_err());
        assert!(Grid::new_1d(1.0, 0, 0.0, Boundary::Boxed).is_err());
    }

    #[test]
    fn field_range_checked() {
        let g = Grid::new_1d(1.0, 2, 0.0, Boundary::Periodic).unwrap();
        assert!(Field::new(g.clone(), vec![0.0, 1.5]).is_err());
        assert!(Field::new(g.clone(), vec![0.0]).is_err());
        let f = Field::new(g.clone(), vec![-1.0, 1.0]).unwrap();
        let z = Field::constant(&g, 0.0);
        assert_eq!(f.l1_distance(&z, None).unwrap(), 1.0);
        assert_eq!(f.l2_distance(&z, None).unwrap(), 1.0);
        assert_eq!(f.transition_measure(0.1), 0.0);
        assert_eq!(z.transition_measure(0.1), 1.0);
    }

    #[test]
    fn mask_algebra() {
        let g = Grid::new_2d([1.0, 1.0], [10, 10], [0.0, 0.0], Boundary::Boxed).unwrap();
        let a = Mask::rect(&g, [0.0, 0.0], [0.5, 1.0]);
        let b = a.complement();
        assert_eq!(a.count(), 50);
        assert!(a.is_disjoint(&b));
        assert_eq!(a.union(&b).count(), 100);
        assert!(a.intersect(&b).is_empty());
        assert!(a.minus(&b).is_subset(&a));
    }
}

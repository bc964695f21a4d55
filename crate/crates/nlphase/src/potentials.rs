//! # Double-well potentials
//!
//! A double well `W: ℝ → [0, ∞)` is continuous, vanishes exactly at ±1 and
//! grows at least linearly at infinity:
//!
//! ```text
//! W(z) ≥ C |z|   for |z| ≥ R
//! ```
//!
//! ## Presets
//!
//! | name      | formula              | C   | R |
//! |-----------|----------------------|-----|---|
//! | `quartic` | `(1 − z²)²`          | 1   | 2 |
//! | `dist2`   | `dist(z, {−1, 1})²`  | 1/2 | 3 |
//!
//! Continuity cannot be certified by sampling and is assumed.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 2] = ["quartic", "dist2"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("unknown potential '{name}'; did you mean one of {suggestions:?}?")]
    Unknown { name: String, suggestions: Vec<String> },
    #[error("potential scale must be positive and finite, got {0}")]
    BadScale(f64),
}

#[derive(Clone)]
enum Shape {
    Quartic,
    Dist2,
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

/// A double-well potential together with its certified growth constants.
#[derive(Clone)]
pub struct DoubleWell {
    name: String,
    shape: Shape,
    factor: f64,
    growth_c: f64,
    growth_r: f64,
}

impl fmt::Debug for DoubleWell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoubleWell")
            .field("name", &self.name)
            .field("factor", &self.factor)
            .field("growth_c", &self.growth_c)
            .field("growth_r", &self.growth_r)
            .finish()
    }
}

/// `W(z) = (1 − z²)²`.
pub fn make_quartic() -> DoubleWell {
    DoubleWell { name: "quartic".into(), shape: Shape::Quartic, factor: 1.0, growth_c: 1.0, growth_r: 2.0 }
}

/// `W(z) = dist(z, {−1, 1})²`.
pub fn make_dist2() -> DoubleWell {
    DoubleWell { name: "dist2".into(), shape: Shape::Dist2, factor: 1.0, growth_c: 0.5, growth_r: 3.0 }
}

/// Look up a named preset.
pub fn preset(name: &str) -> Result<DoubleWell, PotentialError> {
    match name {
        "quartic" => Ok(make_quartic()),
        "dist2" => Ok(make_dist2()),
        other => Err(PotentialError::Unknown { name: other.to_string(), suggestions: suggest(other, &PRESETS) }),
    }
}

/// Candidates ordered by edit distance; close matches only when any exist.
pub fn suggest(name: &str, candidates: &[&str]) -> Vec<String> {
    let mut scored: Vec<(usize, &str)> = candidates.iter().map(|c| (levenshtein(name, c), *c)).collect();
    scored.sort();
    let close: Vec<String> = scored.iter().filter(|(d, _)| *d <= 3).map(|(_, c)| c.to_string()).collect();
    if close.is_empty() {
        scored.into_iter().map(|(_, c)| c.to_string()).collect()
    } else {
        close
    }
}

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

impl DoubleWell {
    /// A user-supplied potential with claimed growth constants. Nothing is
    /// certified until [`verify_hypothesis_ii`] runs.
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        growth_c: f64,
        growth_r: f64,
    ) -> Self {
        DoubleWell { name: name.into(), shape: Shape::Custom { f: Arc::new(f) }, factor: 1.0, growth_c, growth_r }
    }

    /// `λ W`, with growth constant `λ C`.
    pub fn scaled(&self, lambda: f64) -> Result<Self, PotentialError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(PotentialError::BadScale(lambda));
        }
        Ok(DoubleWell {
            name: format!("{}*{}", lambda, self.name),
            factor: self.factor * lambda,
            growth_c: self.growth_c * lambda,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth_c(&self) -> f64 {
        self.growth_c
    }

    pub fn growth_r(&self) -> f64 {
        self.growth_r
    }

    pub fn eval(&self, z: f64) -> f64 {
        let v = match &self.shape {
            Shape::Quartic => {
                let t = 1.0 - z * z;
                t * t
            }
            Shape::Dist2 => {
                let d = z.abs() - 1.0;
                d * d
            }
            Shape::Custom { f } => f(z),
        };
        self.factor * v
    }

    /// W'(z); a one-sided value at the kink of `dist2`, central differences
    /// for custom shapes.
    pub fn deriv(&self, z: f64) -> f64 {
        let v = match &self.shape {
            Shape::Quartic => -4.0 * z * (1.0 - z * z),
            Shape::Dist2 => 2.0 * (z.abs() - 1.0) * if z >= 0.0 { 1.0 } else { -1.0 },
            Shape::Custom { f } => {
                let h = 1e-6 * z.abs().max(1.0);
                (f(z + h) - f(z - h)) / (2.0 * h)
            }
        };
        self.factor * v
    }

    /// M_W = max_{[−1, 1]} W, sampled.
    pub fn max_on_wells_interval(&self) -> f64 {
        (0..=4000).map(|i| self.eval(-1.0 + i as f64 / 2000.0)).fold(0.0, f64::max)
    }
}

/// Outcome of a single check in [`verify_hypothesis_ii`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub z: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellReport {
    pub potential: String,
    pub pass: bool,
    pub samples: usize,
    pub growth_c: f64,
    pub growth_r: f64,
    pub max_on_wells_interval: f64,
    pub first_violation: Option<Violation>,
}

/// Uniform samples over `[−R−2, R+2]` containing ±1 exactly.
pub fn default_samples(w: &DoubleWell) -> Vec<f64> {
    let half = w.growth_r() + 2.0;
    let per_unit = 1000.0;
    let n = (2.0 * half * per_unit).ceil() as usize;
    let h = 2.0 * half / n as f64;
    let mut z: Vec<f64> = (0..=n).map(|i| -half + i as f64 * h).collect();
    z.push(-1.0);
    z.push(1.0);
    z.sort_by(|a, b| a.total_cmp(b));
    z.dedup();
    z
}

/// Check nonnegativity, the wells, positivity away from the wells (beyond
/// the local sample spacing) and linear growth beyond R. Failures are
/// reported with the first offending sample.
pub fn verify_hypothesis_ii(w: &DoubleWell, samples: &[f64]) -> WellReport {
    let mut zs = samples.to_vec();
    zs.sort_by(|a, b| a.total_cmp(b));
    let spacing = zs.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
    let tol = 1e-12;
    let mut first = None;
    let mut fail = |check: &str, z: f64, value: f64| {
        if first.is_none() {
            first = Some(Violation { check: check.into(), z, value });
        }
    };
    for z in [-1.0, 1.0] {
        let v = w.eval(z);
        if v.abs() > tol {
            fail("wells: W(±1) = 0", z, v);
        }
    }
    for &z in &zs {
        let v = w.eval(z);
        if !v.is_finite() || v < -tol {
            fail("nonnegative", z, v);
        } else if (z - 1.0).abs().min((z + 1.0).abs()) > spacing && v <= tol {
            fail("vanishes at ±1 only", z, v);
        } else if z.abs() >= w.growth_r() && v < w.growth_c() * z.abs() - tol {
            fail("linear growth W(z) ≥ C|z| for |z| ≥ R", z, v);
        }
    }
    let covers = zs.first().is_some_and(|a| *a <= -w.growth_r() - 2.0 + 1e-9)
        && zs.last().is_some_and(|b| *b >= w.growth_r() + 2.0 - 1e-9);
    if !covers {
        fail("sample set covers [−R−2, R+2]", zs.first().copied().unwrap_or(0.0), 0.0);
    }
    WellReport {
        potential: w.name().into(),
        pass: first.is_none(),
        samples: zs.len(),
        growth_c: w.growth_c(),
        growth_r: w.growth_r(),
        max_on_wells_interval: w.max_on_wells_interval(),
        first_violation: first,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_values() {
        let w = make_quartic();
        assert_eq!(w.eval(1.0), 0.0);
        assert_eq!(w.eval(-1.0), 0.0);
        assert_eq!(w.eval(0.0), 1.0);
        assert_eq!(w.eval(3.0), 64.0);
        assert!((w.max_on_wells_interval() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn presets_pass() {
        for name in PRESETS {
            let w = preset(name).unwrap();
            let r = verify_hypothesis_ii(&w, &default_samples(&w));
            assert!(r.pass, "{name}: {:?}", r.first_violation);
        }
    }

    #[test]
    fn flat_bottom_counterexample_fails() {
        let w = DoubleWell::custom("flat", |z: f64| if z.abs() <= 2.0 { 0.0 } else { (1.0 - z * z).powi(2) }, 1.0, 2.0);
        let r = verify_hypothesis_ii(&w, &default_samples(&w));
        assert!(!r.pass);
        assert_eq!(r.first_violation.unwrap().check, "vanishes at ±1 only");
    }

    #[test]
    fn weak_growth_fails() {
        let w = make_dist2();
        let fake = DoubleWell { growth_c: 2.0, ..w };
        let r = verify_hypothesis_ii(&fake, &default_samples(&fake));
        assert!(r.first_violation.unwrap().check.starts_with("linear growth"));
    }

    #[test]
    fn derivatives_match_differences() {
        for w in [make_quartic(), make_dist2(), make_quartic().scaled(4.0).unwrap()] {
            for z in [-1.7, -0.4, 0.3, 0.9, 2.5] {
                let h = 1e-6;
                let fd = (w.eval(z + h) - w.eval(z - h)) / (2.0 * h);
                assert!((fd - w.deriv(z)).abs() < 1e-6, "{} at {z}", w.name());
            }
        }
    }

    #[test]
    fn unknown_names_get_suggestions() {
        match preset("quartc") {
            Err(PotentialError::Unknown { suggestions, .. }) => assert_eq!(suggestions[0], "quartic"),
            other => panic!("{other:?}"),
        }
    }
}

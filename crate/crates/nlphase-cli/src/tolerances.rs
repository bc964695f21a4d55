//! Named acceptance thresholds with defaults and file overrides.

use std::collections::BTreeMap;

use nlphase::config::parse;
use nlphase::potentials::suggest;

use crate::config::Diagnostic;

pub const DEFAULTS: [(&str, f64); 14] = [
    ("oracle_bounded", 1e-9),
    ("oracle_singular", 1e-6),
    ("farfield_margin", 1e-6),
    ("isotropy_ratio", 1.02),
    ("limsup_factor", 1.05),
    ("transition_slope_lo", 0.9),
    ("transition_slope_hi", 1.1),
    ("liminf_gap", 0.05),
    ("modify_slack", 0.1),
    ("bp_rel_err", 0.02),
    ("skeleton_slope_lo", 0.8),
    ("skeleton_slope_hi", 1.2),
    ("skeleton_ratio_rel", 0.2),
    ("steiner_grid_factor", 1.0),
];

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        *self.0.get(key).unwrap_or_else(|| panic!("undeclared tolerance {key}"))
    }

    /// Apply `key = value` overrides (top level, no sections).
    pub fn with_overrides(mut self, text: &str) -> Result<Self, Diagnostic> {
        let doc = parse(text).map_err(|e| Diagnostic { line: e.line, field: "syntax".into(), msg: e.msg })?;
        if let Some(s) = doc.sections.get(1) {
            return Err(Diagnostic { line: s.line, field: format!("[{}]", s.name), msg: "tolerance overrides take no sections".into() });
        }
        let names: Vec<&str> = DEFAULTS.iter().map(|(k, _)| *k).collect();
        for e in &doc.top().entries {
            if !self.0.contains_key(&e.key) {
                return Err(Diagnostic {
                    line: e.line,
                    field: e.key.clone(),
                    msg: format!("unknown tolerance; expected one of {}", suggest(&e.key, &names).join(", ")),
                });
            }
            let v: f64 = e
                .value
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| Diagnostic { line: e.line, field: e.key.clone(), msg: format!("expected a finite number, got '{}'", e.value) })?;
            self.0.insert(e.key.clone(), v);
        }
        Ok(self)
    }
}

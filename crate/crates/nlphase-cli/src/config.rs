//! Experiment configuration: resolution of a parsed [`Document`] into a
//! validated [`ExperimentConfig`] with field-level diagnostics.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use nlphase::cell::CellOptions;
use nlphase::config::{parse, Document, Entry, Section};
use nlphase::gamma::EpsilonSchedule;
use nlphase::kernels::{Kernel, KernelError, KernelSpec};
use nlphase::potentials::{preset, suggest, PRESETS};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    KernelInfo,
    Energy,
    CellSweep,
    GammaLimsup,
    GammaLiminf,
    ModifyDemo,
    SliceCheck,
    SteinerCheck,
    SkeletonSweep,
}

pub const COMMANDS: [&str; 9] = [
    "kernel-info",
    "energy",
    "cell-sweep",
    "gamma-limsup",
    "gamma-liminf",
    "modify-demo",
    "slice-check",
    "steiner-check",
    "skeleton-sweep",
];

impl Command {
    pub fn name(self) -> &'static str {
        COMMANDS[self as usize]
    }

    pub fn from_name(s: &str) -> Option<Command> {
        use Command::*;
        let all = [KernelInfo, Energy, CellSweep, GammaLimsup, GammaLiminf, ModifyDemo, SliceCheck, SteinerCheck, SkeletonSweep];
        all.into_iter().find(|c| c.name() == s)
    }

    /// Default kernel descriptor.
    fn kernel_default(self) -> &'static str {
        match self {
            Command::KernelInfo => "kind = fractional\ndim = 1\ns = 0.75",
            Command::GammaLiminf => "kind = compact\ndim = 1\nradius = 1",
            _ => "kind = fractional\ndim = 2\ns = 0.75\nrho = 0.25",
        }
    }

    fn schedule_default(self) -> Option<(&'static str, f64)> {
        match self {
            Command::GammaLimsup | Command::ModifyDemo => Some(("0.04, 0.02, 0.01", 8.0)),
            Command::GammaLiminf => Some(("0.1, 0.05, 0.025, 0.0125", 16.0)),
            _ => None,
        }
    }

    /// Keys accepted in [params] with their defaults.
    pub fn params(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::KernelInfo => &[("directions", "64")],
            Command::Energy => &[
                ("n", "64"),
                ("length", "1"),
                ("eps", "0.1"),
                ("field", "random"),
                ("boundary", "periodic"),
                ("angle", "0"),
                ("offset", "0.5"),
            ],
            Command::CellSweep => &[("directions", "16"), ("rho", "none")],
            Command::GammaLimsup => &[
                ("interface", "flat"),
                ("angle", "0"),
                ("length", "1"),
                ("thickness", "0.5"),
                ("corner", "0.25"),
                ("prism_thickness", "0.22"),
                ("delta", "0.05"),
                ("margin", "0.1"),
                ("sigma_fraction", "0.05"),
            ],
            Command::GammaLiminf => &[("lo", "0"), ("hi", "1"), ("layer", "0.1"), ("random_starts", "2"), ("max_iter", "20000")],
            Command::ModifyDemo => &[("delta", "0.1"), ("half_height", "0.25"), ("sigma_fraction", "0.05"), ("halve", "true")],
            Command::SliceCheck => &[("samples", "1000000"), ("region_a", "rect 0 0 1 1"), ("region_b", "rect 0 0 1 1"), ("integrands", "one, kernel")],
            Command::SteinerCheck => &[("shapes", "segment, cross, square"), ("deltas", "0.01, 0.02, 0.05"), ("cells_per_delta", "32")],
            Command::SkeletonSweep => &[
                ("interface", "square"),
                ("deltas", "0.05, 0.1, 0.2"),
                ("eps_ratio", "0.25"),
                ("cells_per_eps", "8"),
                ("compare", "octagon"),
            ],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A diagnostic pointing at a config line and field.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub field: String,
    pub msg: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}: {}", self.line, self.field, self.msg)
        } else {
            write!(f, "{}: {}", self.field, self.msg)
        }
    }
}

fn diag(line: usize, field: impl Into<String>, msg: impl Into<String>) -> Diagnostic {
    Diagnostic { line, field: field.into(), msg: msg.into() }
}

/// Parameter values of the [params] section, defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Params {
    values: BTreeMap<String, (String, usize)>,
}

impl Params {
    fn raw(&self, key: &str) -> (&str, usize) {
        let (v, l) = self.values.get(key).unwrap_or_else(|| panic!("undeclared parameter {key}"));
        (v.as_str(), *l)
    }

    pub fn f64(&self, key: &str) -> Result<f64, Diagnostic> {
        let (v, l) = self.raw(key);
        number(v, l, &format!("params.{key}"))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, Diagnostic> {
        let (v, _) = self.raw(key);
        if v == "none" {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, Diagnostic> {
        let (v, l) = self.raw(key);
        v.parse().map_err(|_| diag(l, format!("params.{key}"), format!("expected a nonnegative integer, got '{v}'")))
    }

    pub fn bool(&self, key: &str) -> Result<bool, Diagnostic> {
        let (v, l) = self.raw(key);
        v.parse().map_err(|_| diag(l, format!("params.{key}"), format!("expected true or false, got '{v}'")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, Diagnostic> {
        let (v, l) = self.raw(key);
        v.split(',').map(|p| number(p.trim(), l, &format!("params.{key}"))).collect()
    }

    pub fn words(&self, key: &str) -> Vec<String> {
        self.raw(key).0.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
    }

    pub fn str(&self, key: &str) -> &str {
        self.raw(key).0
    }

    pub fn line(&self, key: &str) -> usize {
        self.raw(key).1
    }

    /// One of `choices`, with a suggestion list otherwise.
    pub fn choice(&self, key: &str, choices: &[&str]) -> Result<String, Diagnostic> {
        let (v, l) = self.raw(key);
        if choices.contains(&v) {
            Ok(v.to_string())
        } else {
            Err(diag(l, format!("params.{key}"), format!("unknown value '{v}'; expected one of {}", choices.join(", "))))
        }
    }
}

fn number(v: &str, line: usize, field: &str) -> Result<f64, Diagnostic> {
    let x: f64 = v.parse().map_err(|_| diag(line, field, format!("expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(diag(line, field, "must be finite"));
    }
    Ok(x)
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub kernel_spec: KernelSpec,
    pub kernel: Kernel,
    pub potential: String,
    pub schedule: Option<EpsilonSchedule>,
    pub cell: CellOptions,
    pub params: Params,
    /// Resolved configuration as config text.
    pub resolved: String,
}

const TOP_KEYS: [&str; 4] = ["command", "seed", "threads", "out"];
const SECTIONS: [&str; 5] = ["kernel", "potential", "schedule", "cell", "params"];

fn unknown_key(e: &Entry, section: &str, known: &[&str]) -> Diagnostic {
    let field = if section.is_empty() { e.key.clone() } else { format!("{section}.{}", e.key) };
    diag(e.line, field, format!("unknown key; expected one of {}", suggest(&e.key, known).join(", ")))
}

fn check_keys(s: &Section, known: &[&str]) -> Result<(), Diagnostic> {
    match s.entries.iter().find(|e| !known.contains(&e.key.as_str())) {
        Some(e) => Err(unknown_key(e, &s.name, known)),
        None => Ok(()),
    }
}

fn kernel_error(e: KernelError, sec: Option<&Section>) -> Diagnostic {
    match e {
        KernelError::Parse { line, msg } => {
            let l = sec.and_then(|s| s.entries.get(line.wrapping_sub(1))).map_or(sec.map_or(0, |s| s.line), |e| e.line);
            diag(l, "kernel", msg)
        }
        other => diag(sec.map_or(0, |s| s.line), "kernel", other.to_string()),
    }
}

impl ExperimentConfig {
    /// Parse and validate config text. `command` is the subcommand given on
    /// the command line, if any; it must agree with the file.
    pub fn from_text(text: &str, command: Option<Command>) -> Result<Self, Diagnostic> {
        let doc = parse(text).map_err(|e| diag(e.line, "syntax", e.msg))?;
        Self::from_document(&doc, command)
    }

    pub fn defaults(command: Command) -> Self {
        Self::from_document(&parse("").expect("empty document"), Some(command)).expect("defaults are valid")
    }

    pub fn from_document(doc: &Document, command: Option<Command>) -> Result<Self, Diagnostic> {
        let top = doc.top();
        check_keys(top, &TOP_KEYS)?;
        for s in &doc.sections[1..] {
            if !SECTIONS.contains(&s.name.as_str()) {
                return Err(diag(s.line, format!("[{}]", s.name), format!("unknown section; expected one of {}", SECTIONS.join(", "))));
            }
        }
        let command = match (top.get("command"), command) {
            (Some(e), given) => {
                let c = Command::from_name(&e.value)
                    .ok_or_else(|| diag(e.line, "command", format!("unknown command '{}'; did you mean {}?", e.value, suggest(&e.value, &COMMANDS).join(", "))))?;
                if let Some(g) = given {
                    if g != c {
                        return Err(diag(e.line, "command", format!("config is for '{c}' but '{g}' was requested")));
                    }
                }
                c
            }
            (None, Some(g)) => g,
            (None, None) => return Err(diag(0, "command", "missing; set command = <name>")),
        };
        let seed = match top.get("seed") {
            Some(e) => e.value.parse().map_err(|_| diag(e.line, "seed", format!("expected an unsigned integer, got '{}'", e.value)))?,
            None => 1,
        };
        let threads = match top.get("threads") {
            Some(e) => Some(
                e.value
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n > 0)
                    .ok_or_else(|| diag(e.line, "threads", format!("expected a positive integer, got '{}'", e.value)))?,
            ),
            None => None,
        };
        let out = top.get("out").map(|e| PathBuf::from(&e.value));

        let ksec = doc.section("kernel");
        let ktext = match ksec {
            Some(s) => s.entries.iter().map(|e| format!("{} = {}", e.key, e.value)).collect::<Vec<_>>().join("\n"),
            None => command.kernel_default().to_string(),
        };
        let kernel_spec = KernelSpec::parse(&ktext).map_err(|e| kernel_error(e, ksec))?;
        let kernel = kernel_spec.build().map_err(|e| kernel_error(e, ksec))?;

        let potential = match doc.section("potential") {
            Some(s) => {
                check_keys(s, &["name"])?;
                let e = s.get("name").ok_or_else(|| diag(s.line, "potential.name", "missing"))?;
                preset(&e.value).map_err(|_| {
                    diag(e.line, "potential.name", format!("unknown potential '{}'; did you mean {}?", e.value, suggest(&e.value, &PRESETS).join(", ")))
                })?;
                e.value.clone()
            }
            None => "quartic".to_string(),
        };

        let schedule = match (doc.section("schedule"), command.schedule_default()) {
            (Some(s), _) => {
                check_keys(s, &["eps", "cells_per_eps"])?;
                let e = s.get("eps").ok_or_else(|| diag(s.line, "schedule.eps", "missing"))?;
                let values = e.value.split(',').map(|p| number(p.trim(), e.line, "schedule.eps")).collect::<Result<Vec<_>, _>>()?;
                let cpe = match s.get("cells_per_eps") {
                    Some(c) => number(&c.value, c.line, "schedule.cells_per_eps")?,
                    None => command.schedule_default().map_or(8.0, |d| d.1),
                };
                Some(EpsilonSchedule::new(values, cpe).map_err(|err| {
                    let msg = err.to_string();
                    match s.get("cells_per_eps").filter(|_| msg.contains("cells per")) {
                        Some(c) => diag(c.line, "schedule.cells_per_eps", msg),
                        None => diag(e.line, "schedule.eps", msg),
                    }
                })?)
            }
            (None, Some((v, cpe))) => Some(EpsilonSchedule::new(v.split(',').map(|p| p.trim().parse().expect("default")).collect(), cpe).expect("default")),
            (None, None) => None,
        };

        let mut cell = CellOptions::default();
        if let Some(s) = doc.section("cell") {
            check_keys(s, &["samples", "half_window", "max_iter", "rel_tol"])?;
            for e in &s.entries {
                let field = format!("cell.{}", e.key);
                match e.key.as_str() {
                    "samples" => {
                        cell.samples = e
                            .value
                            .parse()
                            .ok()
                            .filter(|n: &usize| *n >= 8 && n % 2 == 0)
                            .ok_or_else(|| diag(e.line, field, "expected an even integer ≥ 8"))?
                    }
                    "half_window" => {
                        let h = number(&e.value, e.line, &field)?;
                        if h <= 0.0 {
                            return Err(diag(e.line, field, "must be positive"));
                        }
                        cell.half_window = Some(h)
                    }
                    "max_iter" => cell.max_iter = e.value.parse().map_err(|_| diag(e.line, field, "expected an integer"))?,
                    _ => cell.rel_tol = number(&e.value, e.line, &field)?,
                }
            }
        }

        let declared = command.params();
        let mut values: BTreeMap<String, (String, usize)> = declared.iter().map(|(k, v)| (k.to_string(), (v.to_string(), 0))).collect();
        if let Some(s) = doc.section("params") {
            let keys: Vec<&str> = declared.iter().map(|(k, _)| *k).collect();
            check_keys(s, &keys)?;
            for e in &s.entries {
                values.insert(e.key.clone(), (e.value.clone(), e.line));
            }
        }
        let params = Params { values };

        let cfg = ExperimentConfig { command, seed, threads, out, kernel_spec, kernel, potential, schedule, cell, params, resolved: String::new() };
        crate::commands::check_params(&cfg)?;
        let resolved = cfg.resolve_text();
        Ok(ExperimentConfig { resolved, ..cfg })
    }

    fn resolve_text(&self) -> String {
        let mut s = format!("command = {}\nseed = {}\n", self.command, self.seed);
        if let Some(t) = self.threads {
            s += &format!("threads = {t}\n");
        }
        s += "\n[kernel]\n";
        for part in self.kernel_spec.to_string().split(';') {
            if let Some((k, v)) = part.split_once('=') {
                s += &format!("{} = {}\n", k.trim(), v.trim());
            }
        }
        s += &format!("\n[potential]\nname = {}\n", self.potential);
        if let Some(sc) = &self.schedule {
            let eps: Vec<String> = sc.values.iter().map(|e| e.to_string()).collect();
            s += &format!("\n[schedule]\neps = {}\ncells_per_eps = {}\n", eps.join(", "), sc.cells_per_eps);
        }
        s += &format!("\n[cell]\nsamples = {}\nmax_iter = {}\nrel_tol = {}\n", self.cell.samples, self.cell.max_iter, self.cell.rel_tol);
        if let Some(h) = self.cell.half_window {
            s += &format!("half_window = {h}\n");
        }
        s += "\n[params]\n";
        for (k, (v, _)) in &self.params.values {
            s += &format!("{k} = {v}\n");
        }
        s
    }

    pub fn schedule(&self) -> &EpsilonSchedule {
        self.schedule.as_ref().expect("command with a schedule")
    }
}

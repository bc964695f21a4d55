//! One function per experiment command. Each returns an [`Outcome`] holding
//! the JSON result, CSV tables and named checks; failures after partial
//! progress keep what was computed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nlphase::cell::{direction_sweep, surface_tension, surface_tension_truncated, sweep_csv, SurfaceTension};
use nlphase::energy::{kinetic_direct, kinetic_fast, total_energy, DIRECT_LIMIT};
use nlphase::fields::{Boundary, Field, Grid, Mask, PolyhedralInterface};
use nlphase::gamma::{
    compactness_diagnostic, liminf_study, modification_study, recovery_flat, recovery_polyhedral, skeleton_estimate, skeleton_sweep,
    LiminfOptions, MatchedOptions, PolyhedralOptions,
};
use nlphase::integralgeom::{bp_check_with, farfield_check, segments, steiner_check, steiner_fit, Region, Segment, TwoPoint};
use nlphase::kernels::check_hypotheses;
use nlphase::potentials::preset;
use nlphase::quad::QuadTol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Diagnostic, ExperimentConfig};
use crate::tolerances::Tolerances;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub threshold: Vec<f64>,
    pub pass: bool,
}

impl Check {
    fn le(name: &str, value: f64, t: f64) -> Self {
        Check { name: name.into(), value, relation: "<=".into(), threshold: vec![t], pass: value <= t }
    }

    fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, relation: "in".into(), threshold: vec![lo, hi], pass: value >= lo && value <= hi }
    }

    fn flag(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, relation: "true".into(), threshold: vec![], pass: ok }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub result: Value,
    /// (file name, CSV text).
    pub tables: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl Outcome {
    fn failed(e: impl ToString) -> Self {
        Outcome { result: Value::Null, error: Some(e.to_string()), ..Default::default() }
    }
}

type Res<T> = Result<T, String>;

fn err<E: ToString>(e: E) -> String {
    e.to_string()
}

fn bad(cfg: &ExperimentConfig, key: &str, msg: impl Into<String>) -> Diagnostic {
    Diagnostic { line: cfg.params.line(key), field: format!("params.{key}"), msg: msg.into() }
}

fn positive(cfg: &ExperimentConfig, key: &str) -> Result<f64, Diagnostic> {
    let v = cfg.params.f64(key)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(bad(cfg, key, format!("must be positive, got {v}")))
    }
}

fn need_dim(cfg: &ExperimentConfig, dims: &[usize]) -> Result<(), Diagnostic> {
    if dims.contains(&cfg.kernel.dim()) {
        Ok(())
    } else {
        Err(Diagnostic { line: 0, field: "kernel.dim".into(), msg: format!("{} needs a kernel of dimension {dims:?}", cfg.command) })
    }
}

fn parse_region(cfg: &ExperimentConfig, key: &str) -> Result<Region, Diagnostic> {
    let words: Vec<&str> = cfg.params.str(key).split_whitespace().collect();
    let nums: Result<Vec<f64>, _> = words.iter().skip(1).map(|w| w.parse::<f64>()).collect();
    let nums = nums.map_err(|_| bad(cfg, key, "expected 'rect x0 y0 x1 y1' or 'disc cx cy r'"))?;
    let r = match (words.first().copied(), nums.len()) {
        (Some("rect"), 4) => Region::Rect { lo: [nums[0], nums[1]], hi: [nums[2], nums[3]] },
        (Some("disc"), 3) => Region::Disc { center: [nums[0], nums[1]], radius: nums[2] },
        _ => return Err(bad(cfg, key, "expected 'rect x0 y0 x1 y1' or 'disc cx cy r'")),
    };
    r.validate().map_err(|e| bad(cfg, key, e.to_string()))?;
    Ok(r)
}

/// Named interface, or a JSON file when the value ends in `.json`.
fn interface(cfg: &ExperimentConfig, key: &str) -> Result<PolyhedralInterface, Diagnostic> {
    let v = cfg.params.str(key);
    let r = match v {
        "square" => PolyhedralInterface::square([0.0, 0.0], 1.0),
        "octagon" => PolyhedralInterface::regular(8, [0.5, 0.5], 1.0, 0.0),
        p if p.ends_with(".json") => {
            let text = std::fs::read_to_string(p).map_err(|e| bad(cfg, key, format!("cannot read {p}: {e}")))?;
            PolyhedralInterface::from_json(&text)
        }
        other => return Err(bad(cfg, key, format!("unknown interface '{other}'; expected square, octagon or a .json file"))),
    };
    r.map_err(|e| bad(cfg, key, e.to_string()))
}

fn shape(cfg: &ExperimentConfig, name: &str) -> Result<Vec<Segment>, Diagnostic> {
    let unit = |a: [f64; 2], b: [f64; 2]| Segment { a, b };
    Ok(match name {
        "segment" => vec![unit([0.0, 0.0], [1.0, 0.0])],
        "cross" => vec![unit([-0.5, 0.0], [0.5, 0.0]), unit([0.0, -0.5], [0.0, 0.5])],
        "square" => segments(&PolyhedralInterface::square([0.0, 0.0], 1.0).expect("square")).expect("planar"),
        p if p.ends_with(".json") => {
            let text = std::fs::read_to_string(p).map_err(|e| bad(cfg, "shapes", format!("cannot read {p}: {e}")))?;
            let s = PolyhedralInterface::from_json(&text).map_err(|e| bad(cfg, "shapes", e.to_string()))?;
            segments(&s).map_err(|e| bad(cfg, "shapes", e.to_string()))?
        }
        other => return Err(bad(cfg, "shapes", format!("unknown shape '{other}'; expected segment, cross, square or a .json file"))),
    })
}

/// Typed validation of [params] without running anything.
pub fn check_params(cfg: &ExperimentConfig) -> Result<(), Diagnostic> {
    let p = &cfg.params;
    match cfg.command {
        Command::KernelInfo => {
            if p.usize("directions")? == 0 {
                return Err(bad(cfg, "directions", "must be positive"));
            }
        }
        Command::Energy => {
            if p.usize("n")? < 2 {
                return Err(bad(cfg, "n", "need at least 2 cells per axis"));
            }
            positive(cfg, "length")?;
            positive(cfg, "eps")?;
            p.f64("angle")?;
            p.f64("offset")?;
            p.choice("field", &["random", "tanh", "sharp"])?;
            p.choice("boundary", &["periodic", "boxed"])?;
        }
        Command::CellSweep => {
            if p.usize("directions")? == 0 {
                return Err(bad(cfg, "directions", "must be positive"));
            }
            if let Some(r) = p.opt_f64("rho")? {
                if !(r > 0.0 && r < 1.0) {
                    return Err(bad(cfg, "rho", "must lie in (0, 1)"));
                }
            }
        }
        Command::GammaLimsup => {
            match p.choice("interface", &["flat", "square"])?.as_str() {
                "flat" => {
                    p.f64("angle")?;
                    positive(cfg, "length")?;
                    positive(cfg, "thickness")?;
                }
                _ => {
                    need_dim(cfg, &[2])?;
                    for k in ["corner", "prism_thickness", "delta", "margin", "sigma_fraction"] {
                        positive(cfg, k)?;
                    }
                }
            }
        }
        Command::GammaLiminf => {
            let (lo, hi) = (p.f64("lo")?, p.f64("hi")?);
            if hi <= lo {
                return Err(bad(cfg, "hi", "must exceed lo"));
            }
            p.f64("layer")?;
            p.usize("random_starts")?;
            p.usize("max_iter")?;
        }
        Command::ModifyDemo => {
            need_dim(cfg, &[2])?;
            for k in ["delta", "half_height", "sigma_fraction"] {
                positive(cfg, k)?;
            }
            p.bool("halve")?;
        }
        Command::SliceCheck => {
            if p.usize("samples")? < 2 {
                return Err(bad(cfg, "samples", "need at least 2"));
            }
            parse_region(cfg, "region_a")?;
            parse_region(cfg, "region_b")?;
            for w in p.words("integrands") {
                match w.as_str() {
                    "one" => {}
                    "kernel" => need_dim(cfg, &[2])?,
                    other => return Err(bad(cfg, "integrands", format!("unknown integrand '{other}'; expected one or kernel"))),
                }
            }
        }
        Command::SteinerCheck => {
            for s in p.words("shapes") {
                shape(cfg, &s)?;
            }
            if p.list("deltas")?.iter().any(|d| *d <= 0.0) {
                return Err(bad(cfg, "deltas", "must be positive"));
            }
            if p.f64("cells_per_delta")? < 2.0 {
                return Err(bad(cfg, "cells_per_delta", "need at least 2"));
            }
        }
        Command::SkeletonSweep => {
            need_dim(cfg, &[2])?;
            interface(cfg, "interface")?;
            if p.str("compare") != "none" {
                interface(cfg, "compare")?;
            }
            if p.list("deltas")?.iter().any(|d| *d <= 0.0) {
                return Err(bad(cfg, "deltas", "must be positive"));
            }
            positive(cfg, "eps_ratio")?;
            positive(cfg, "cells_per_eps")?;
        }
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, tol: &Tolerances) -> Outcome {
    let r = match cfg.command {
        Command::KernelInfo => kernel_info(cfg, tol),
        Command::Energy => energy(cfg, tol),
        Command::CellSweep => cell_sweep(cfg, tol),
        Command::GammaLimsup => gamma_limsup(cfg, tol),
        Command::GammaLiminf => gamma_liminf(cfg, tol),
        Command::ModifyDemo => modify_demo(cfg, tol),
        Command::SliceCheck => Ok(slice_check(cfg, tol)),
        Command::SteinerCheck => Ok(steiner(cfg, tol)),
        Command::SkeletonSweep => skeleton(cfg, tol),
    };
    r.unwrap_or_else(Outcome::failed)
}

fn kernel_info(cfg: &ExperimentConfig, tol: &Tolerances) -> Res<Outcome> {
    let j = &cfg.kernel;
    let q = QuadTol::default();
    let m_j = j.moment_mj(q).ok();
    let omega1 = j.omega1(1.0, q).ok();
    let h = check_hypotheses(j);
    let mut csv = String::from("level,h2_partial,h2star_window\n");
    for k in 0..h.h2.refinement.len().max(h.h2star.window_sums.len()) {
        let f = |v: Option<&f64>| v.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(csv, "{},{},{}", k + 1, f(h.h2.refinement.get(k)), f(h.h2star.window_sums.get(k)));
    }
    let mut checks = vec![Check::flag("h1", h.h1.pass), Check::flag("h2", h.h2.pass), Check::flag("h2star", h.h2star.pass), Check::flag("h2_h2star_agree", h.agree)];
    let mut tables = vec![("hypotheses.csv".to_string(), csv)];
    let ff = if j.dim() <= 2 {
        let f = farfield_check(j, cfg.params.usize("directions").map_err(err)?, tol.get("farfield_margin")).map_err(err)?;
        let mut c = String::from("xi_x,xi_y,F\n");
        for v in &f.values {
            let _ = writeln!(c, "{},{},{}", v.xi[0], v.xi.get(1).copied().unwrap_or(0.0), v.value);
        }
        tables.push(("farfield.csv".into(), c));
        if h.h2.pass {
            checks.push(Check::le("farfield_sphere_integral", f.sphere_integral, f.h2_bound + tol.get("farfield_margin")));
        }
        Some(f)
    } else {
        None
    };
    let result = json!({
        "kernel": cfg.kernel_spec.to_string(),
        "m_j": m_j,
        "omega1_at_1": omega1,
        "h2_integral": h.h2.integral,
        "hypotheses": h,
        "farfield": ff,
    });
    Ok(Outcome { result, tables, checks, error: None })
}

fn energy(cfg: &ExperimentConfig, tol: &Tolerances) -> Res<Outcome> {
    let p = &cfg.params;
    let (n, length, eps) = (p.usize("n").map_err(err)?, p.f64("length").map_err(err)?, p.f64("eps").map_err(err)?);
    let boundary = if p.str("boundary") == "periodic" { Boundary::Periodic } else { Boundary::Boxed };
    let g = match cfg.kernel.dim() {
        1 => Grid::new_1d(length, n, 0.0, boundary),
        _ => Grid::new_2d([length, length], [n, n], [0.0, 0.0], boundary),
    }
    .map_err(err)?;
    let a = p.f64("angle").map_err(err)?;
    let nu = [a.cos(), a.sin()];
    let off = p.f64("offset").map_err(err)? * length;
    let side = |x: [f64; 2]| if g.dim == 1 { x[0] - off } else { x[0] * nu[0] + x[1] * nu[1] - off };
    let u = match p.str("field") {
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let values = (0..g.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            Field::new(g.clone(), values).map_err(err)?
        }
        "tanh" => Field::from_fn(&g, |x| (side(x) / eps).tanh()),
        _ => Field::from_fn(&g, |x| if side(x) > 0.0 { 1.0 } else { -1.0 }),
    };
    let w = preset(&cfg.potential).map_err(err)?;
    let b = total_energy(&u, None, &cfg.kernel, &w, eps).map_err(err)?;
    let mut csv = format!("quantity,value\nkinetic,{}\npotential,{}\ntotal,{}\ntail_bound,{}\n", b.kinetic, b.potential, b.total, b.tail_bound);
    let mut checks = Vec::new();
    let mut oracle = Value::Null;
    if g.periodic() && g.len() <= DIRECT_LIMIT {
        let full = Mask::full(&g);
        let direct = kinetic_direct(&u, &full, &full, &cfg.kernel, eps).map_err(err)?;
        let fast = kinetic_fast(&u, &cfg.kernel, eps).map_err(err)?;
        let rel = (fast - direct).abs() / direct.abs().max(f64::MIN_POSITIVE);
        let key = if cfg.kernel.is_bounded() { "oracle_bounded" } else { "oracle_singular" };
        checks.push(Check::le("fast_vs_direct", rel, tol.get(key)));
        let _ = writeln!(csv, "kinetic_direct,{direct}\nkinetic_fast,{fast}");
        oracle = json!({ "direct": direct, "fast": fast, "rel_err": rel });
    }
    Ok(Outcome { result: json!({ "breakdown": b, "cells": g.len(), "oracle": oracle }), tables: vec![("energy.csv".into(), csv)], checks, error: None })
}

fn cell_sweep(cfg: &ExperimentConfig, tol: &Tolerances) -> Res<Outcome> {
    let j = &cfg.kernel;
    let w = preset(&cfg.potential).map_err(err)?;
    let rho = cfg.params.opt_f64("rho").map_err(err)?;
    let rows: Vec<SurfaceTension> = if j.dim() == 1 {
        [[1.0], [-1.0]]
            .iter()
            .map(|xi| match rho {
                Some(r) => surface_tension_truncated(xi, j, r, &w, &cfg.cell),
                None => surface_tension(xi, j, &w, &cfg.cell),
            })
            .collect::<Result<_, _>>()
            .map_err(err)?
    } else {
        direction_sweep(j, &w, cfg.params.usize("directions").map_err(err)?, rho, &cfg.cell).map_err(err)?
    };
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.value), b.max(r.value)));
    let ratio = hi / lo;
    let monotone = rows.iter().all(|r| r.trace.windows(2).all(|p| p[1] <= p[0]));
    let mut checks = vec![Check::flag("traces_nonincreasing", monotone)];
    if j.is_radial() {
        checks.push(Check::le("isotropy_ratio", ratio, tol.get("isotropy_ratio")));
    }
    let values: Vec<Value> = rows.iter().map(|r| json!({ "xi": r.xi, "psi": r.value, "iterations": r.iterations, "converged": r.converged })).collect();
    Ok(Outcome {
        result: json!({ "rho": rho, "max_over_min": ratio, "directions": values }),
        tables: vec![("sweep.csv".into(), sweep_csv(&rows))],
        checks,
        error: None,
    })
}

fn gamma_limsup(cfg: &ExperimentConfig, tol: &Tolerances) -> Res<Outcome> {
    let p = &cfg.params;
    let w = preset(&cfg.potential).map_err(err)?;
    let s = cfg.schedule();
    let factor = tol.get("limsup_factor");
    let mut csv = String::from("eps,cells_x,cells_y,kinetic,potential,total,l1_to_sharp,transition_01,transition_05\n");
    let row = |csv: &mut String, r: &nlphase::gamma::RecoveryRow| {
        let _ = writeln!(csv, "{},{},{},{},{},{},{},{},{}", r.eps, r.cells[0], r.cells[1], r.kinetic, r.potential, r.total, r.l1_to_sharp, r.transition_01, r.transition_05);
    };
    if p.str("interface") == "flat" {
        let a = p.f64("angle").map_err(err)?;
        let nu: Vec<f64> = if cfg.kernel.dim() == 1 { vec![1.0] } else { vec![a.cos(), a.sin()] };
        let r = recovery_flat(&nu, [0.5, 0.5], p.f64("length").map_err(err)?, p.f64("thickness").map_err(err)?, &cfg.kernel, &w, s, &cfg.cell).map_err(err)?;
        for x in &r.rows {
            row(&mut csv, x);
        }
        let c = compactness_diagnostic(&s.values, &r.fields).map_err(err)?;
        let mut checks = vec![Check::le("limsup_ratio", r.final_ratio(), factor)];
        checks.push(Check::within("transition_slope", c.slope_05.unwrap_or(f64::NAN), tol.get("transition_slope_lo"), tol.get("transition_slope_hi")));
        let result = json!({ "interface": "flat", "psi": r.psi, "target": r.target, "final_ratio": r.final_ratio(), "rows": r.rows, "compactness": c });
        Ok(Outcome { result, tables: vec![("recovery.csv".into(), csv)], checks, error: None })
    } else {
        let sq = PolyhedralInterface::square([0.0, 0.0], 1.0).map_err(err)?;
        let target = nlphase::cell::limit_energy(&sq, &cfg.kernel, &w, &cfg.cell).map_err(err)?;
        let o = PolyhedralOptions {
            sigma: Some(p.f64("sigma_fraction").map_err(err)? * target),
            corner: p.f64("corner").map_err(err)?,
            thickness: p.f64("prism_thickness").map_err(err)?,
            delta: p.f64("delta").map_err(err)?,
            margin: p.f64("margin").map_err(err)?,
        };
        let r = recovery_polyhedral(&sq, &cfg.kernel, &w, s, &o, &cfg.cell).map_err(err)?;
        for x in &r.rows {
            row(&mut csv, &x.recovery);
        }
        let last = r.rows.last().map_or(f64::NAN, |x| x.recovery.total);
        let checks = vec![Check::le("limsup_ratio", last / (r.target + r.sigma), factor)];
        let rows: Vec<Value> = r.rows.iter().map(|x| json!({ "recovery": x.recovery, "mollified_total": x.mollified_total, "within": x.within })).collect();
        let result = json!({ "interface": "square", "target": r.target, "sigma": r.sigma, "bound": r.bound, "rows": rows });
        Ok(Outcome { result, tables: vec![("recovery.csv".into(), csv)], checks, error: None })
    }
}

fn gamma_liminf(cfg: &ExperimentConfig, tol: &Tolerances) -> Res<Outcome> {
    let p = &cfg.params;
    let w = preset(&cfg.potential).map_err(err)?;
    let (lo, hi) = (p.f64("lo").map_err(err)?, p.f64("hi").map_err(err)?);
    let o = LiminfOptions {
        lo: [lo, lo],
        hi: [hi, hi],
        axis: 0,
        layer: p.f64("layer").map_err(err)?,
        random_starts: p.usize("random_starts").map_err(err)?,
        seed: cfg.seed,
        max_iter: p.usize("max_iter").map_err(err)?,
        ..LiminfOptions::default()
    };
    let r = liminf_study(&cfg.kernel, &w, cfg.schedule(), &o, &cfg.cell).map_err(err)?;
    let mut csv = String::from("eps,min_energy,rel_gap,best_start,iterations,converged\n");
    for x in &r.rows {
        let _ = writeln!(csv, "{},{},{},{},{},{}", x.eps, x.min_energy, x.rel_gap, x.best_start, x.iterations, x.converged);
    }
    let gap = r.rows.last().map_or(f64::NAN, |x| x.rel_gap.abs());
    let checks = vec![Check::le("final_rel_gap", gap, tol.get("liminf_gap")), Check::flag("gap_nonincreasing", r.gap_nonincreasing)];
    Ok(Outcome { result: json!({ "target": r.target, "rows": r.rows, "gap_nonincreasing": r.gap_nonincreasing }), tables: vec![("liminf.csv".into(), csv)], checks, error: None })
}

fn modify_demo(cfg: &ExperimentConfig, tol: &Tolerances) -> Res<Outcome> {
    let p = &cfg.params;
    let w = preset(&cfg.potential).map_err(err)?;
    let o = MatchedOptions {
        half_height: p.f64("half_height").map_err(err)?,
        delta: p.f64("delta").map_err(err)?,
        sigma_fraction: p.f64("sigma_fraction").map_err(err)?,
        halve: p.bool("halve").map_err(err)?,
    };
    let r = modification_study(&cfg.kernel, &w, cfg.schedule(), &o, &cfg.cell).map_err(err)?;
    let mut csv = String::from("eps,sigma,lhs,rhs,slack,scaled_slack,macro_shells,shell,shell_ok,micro_clamped,discrepancy_ok\n");
    for x in r.rows.iter().chain(r.halved.iter()) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            x.eps, x.sigma, x.lhs, x.rhs, x.slack, x.scaled_slack, x.macro_shells, x.shell, x.shell_ok, x.micro_clamped, x.discrepancy_ok
        );
    }
    let mut checks = vec![Check::flag("slack_nonincreasing", r.nonincreasing), Check::le("final_scaled_slack", r.final_scaled, tol.get("modify_slack"))];
    if let Some(h) = r.halving_reduces {
        checks.push(Check::flag("halving_sigma_reduces_slack", h));
    }
    Ok(Outcome { result: serde_json::to_value(&r).map_err(err)?, tables: vec![("modify.csv".into(), csv)], checks, error: None })
}

fn slice_check(cfg: &ExperimentConfig, tol: &Tolerances) -> Outcome {
    let p = &cfg.params;
    let (a, b) = match (parse_region(cfg, "region_a"), parse_region(cfg, "region_b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::failed(e),
    };
    let samples = p.usize("samples").unwrap_or(0);
    let t = tol.get("bp_rel_err");
    let mut out = Outcome::default();
    let mut csv = String::from("integrand,lhs,rhs,stderr,rel_err,samples,seed\n");
    let mut reports = Vec::new();
    for name in p.words("integrands") {
        let f = if name == "one" { TwoPoint::Constant(1.0) } else { TwoPoint::Kernel(cfg.kernel.clone()) };
        match bp_check_with(&f, &a, &b, samples, cfg.seed, t) {
            Ok(r) => {
                let _ = writeln!(csv, "{name},{},{},{},{},{},{}", r.lhs, r.rhs_mc, r.stderr, r.rel_err, r.samples, r.seed);
                out.checks.push(Check::le(&format!("bp_{name}"), r.rel_err, t));
                reports.push(json!({ "integrand": name, "report": r }));
            }
            Err(e) => {
                out.error = Some(format!("{name}: {e}"));
                break;
            }
        }
    }
    out.result = json!({ "region_a": a, "region_b": b, "cases": reports });
    out.tables.push(("slice.csv".into(), csv));
    out
}

fn steiner(cfg: &ExperimentConfig, tol: &Tolerances) -> Outcome {
    let p = &cfg.params;
    let deltas = p.list("deltas").unwrap_or_default();
    let cpd = p.f64("cells_per_delta").unwrap_or(32.0);
    let factor = tol.get("steiner_grid_factor");
    let mut out = Outcome::default();
    let mut csv = String::from("shape,delta,tube_measure,grid_tolerance,bound,tight_bound,holds,tight_holds\n");
    let mut shapes = Vec::new();
    'outer: for name in p.words("shapes") {
        let pieces = match shape(cfg, &name) {
            Ok(s) => s,
            Err(e) => {
                out.error = Some(e.to_string());
                break;
            }
        };
        let mut reports = Vec::new();
        for d in &deltas {
            match steiner_check(&pieces, *d, cpd) {
                Ok(r) => {
                    let _ = writeln!(csv, "{name},{},{},{},{},{},{},{}", r.delta, r.tube_measure, r.grid_tolerance, r.bound, r.tight_bound, r.holds, r.tight_holds);
                    out.checks.push(Check::flag(&format!("steiner_{name}_{d}"), r.holds));
                    if name == "segment" {
                        let exact = 2.0 * d + PI * d * d;
                        out.checks.push(Check::le(&format!("stadium_{d}"), (r.tube_measure - exact).abs(), factor * r.grid_tolerance));
                    }
                    reports.push(r);
                }
                Err(e) => {
                    out.error = Some(format!("{name}, δ = {d}: {e}"));
                    break 'outer;
                }
            }
        }
        let fit = if deltas.len() >= 2 { steiner_fit(&pieces, &deltas, cpd).ok().map(|f| json!({ "linear": f.linear, "quadratic": f.quadratic, "leading_ratio": f.leading_ratio })) } else { None };
        shapes.push(json!({ "shape": name, "reports": reports, "fit": fit }));
    }
    out.result = json!({ "shapes": shapes });
    out.tables.push(("steiner.csv".into(), csv));
    out
}

fn skeleton(cfg: &ExperimentConfig, tol: &Tolerances) -> Res<Outcome> {
    let p = &cfg.params;
    let main = interface(cfg, "interface").map_err(err)?;
    let deltas = p.list("deltas").map_err(err)?;
    let ratio = p.f64("eps_ratio").map_err(err)?;
    let cpe = p.f64("cells_per_eps").map_err(err)?;
    let s = skeleton_sweep(&main, &deltas, ratio, &cfg.kernel, cpe).map_err(err)?;
    let mut csv = String::from("shape,delta,eps,vertices,lhs,cross\n");
    for x in &s.points {
        let _ = writeln!(csv, "{},{},{},{},{},{}", p.str("interface"), x.delta, x.eps, x.vertices, x.lhs, x.cross);
    }
    let mut checks = vec![Check::within("skeleton_slope", s.slope, tol.get("skeleton_slope_lo"), tol.get("skeleton_slope_hi"))];
    let mut compare = Value::Null;
    if p.str("compare") != "none" {
        let other = interface(cfg, "compare").map_err(err)?;
        let mid = &s.points[s.points.len() / 2];
        let q = skeleton_estimate(&other, mid.delta, mid.eps, &cfg.kernel, cpe).map_err(err)?;
        let _ = writeln!(csv, "{},{},{},{},{},{}", p.str("compare"), q.delta, q.eps, q.vertices, q.lhs, q.cross);
        let measured = q.lhs / mid.lhs;
        let expected = q.vertices as f64 / mid.vertices as f64;
        let rel = tol.get("skeleton_ratio_rel");
        checks.push(Check::within("vertex_ratio", measured, expected * (1.0 - rel), expected * (1.0 + rel)));
        compare = json!({ "point": q, "ratio": measured, "expected": expected });
    }
    Ok(Outcome { result: json!({ "sweep": s, "compare": compare }), tables: vec![("skeleton.csv".into(), csv)], checks, error: None })
}

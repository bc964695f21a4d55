//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does. Runs sequentially so the timings mean
//! something.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nlphase::cell::{optimize_profile, surface_tension, surface_tension_truncated, direction_sweep, CellOptions, Profile};
use nlphase::energy::{interior_bound, kinetic_direct, kinetic_fast, separation_bound, total_energy, truncated_energy, IntegrationRegion};
use nlphase::fields::{region_distance, Boundary, Field, Grid, Mask, PolyhedralInterface};
use nlphase::gamma::{
    compactness_diagnostic, liminf_study, modification_study, recovery_flat, recovery_polyhedral, skeleton_estimate, skeleton_sweep,
    EpsilonSchedule, LiminfOptions, MatchedOptions, PolyhedralOptions,
};
use nlphase::integralgeom::{bp_check, farfield_check, segments, steiner_check, Region, Segment, TwoPoint};
use nlphase::kernels::{check_hypotheses, Kernel, Kernel1d, NormBall};
use nlphase::potentials::make_quartic;
use nlphase::quad::QuadTol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Verdict { pass, detail }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn within_time(v: Verdict, took: Duration, limit: Option<f64>) -> Verdict {
    match limit {
        Some(l) if took.as_secs_f64() > l => Verdict::new(false, format!("{}; runtime {:.1}s over {l}s", v.detail, took.as_secs_f64())),
        _ => v,
    }
}

fn truncated_2d() -> Kernel {
    Kernel::fractional(2, 0.75).unwrap().truncated(0.25).unwrap()
}

fn kernel_closed_forms() -> Verdict {
    let j = Kernel::fractional(1, 0.75).unwrap();
    let tol = QuadTol::default();
    let mj = j.moment_mj(tol).unwrap();
    let w1 = j.omega1(1.0, tol).unwrap();
    let h2 = check_hypotheses(&j).h2.integral.unwrap_or(f64::NAN);
    // ∫ min(|h|, |h|²)|h|^{-5/2} = 4 + 4, ∫_{|h|>1} |h|^{-3/2} = 4, 2∫_1^∞ r^{-3/2} ln r = 8.
    let errs = [rel(mj, 8.0), rel(w1, 4.0), rel(h2, 8.0)];
    Verdict::new(errs.iter().all(|e| *e <= 1e-6), format!("M_J = {mj:.9}, omega1(1) = {w1:.9}, H2 = {h2:.9}, max rel err {:.1e}", errs.iter().cloned().fold(0.0, f64::max)))
}

fn h2_equivalence() -> Verdict {
    let kernels = [
        Kernel::fractional(1, 0.55).unwrap(),
        Kernel::fractional(1, 0.75).unwrap(),
        Kernel::fractional(1, 0.95).unwrap(),
        Kernel::fractional(2, 0.75).unwrap(),
        Kernel::compact_radial(2, 1.0).unwrap(),
        truncated_2d(),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for j in &kernels {
        let r = check_hypotheses(j);
        ok &= r.agree && r.h2.pass;
        notes.push(format!("{}:{}", r.kernel, if r.agree { "agree" } else { "DISAGREE" }));
    }
    let crit = check_hypotheses(&Kernel::fractional_unchecked(1, 0.5).unwrap());
    let log = !crit.h2.pass && !crit.h2star.pass && crit.h2.growth == "logarithmic" && crit.h2star.growth == "logarithmic";
    ok &= log;
    Verdict::new(ok, format!("{}; s = 0.5 divergent with log growth: {log}", notes.join(", ")))
}

fn random_field(g: &Grid, rng: &mut ChaCha8Rng) -> Field {
    Field::new(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect()).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grids = [Grid::new_1d(1.0, 256, 0.0, Boundary::Periodic).unwrap(), Grid::new_2d([1.0, 1.0], [64, 64], [0.0, 0.0], Boundary::Periodic).unwrap()];
    let mut worst = [0.0f64; 2];
    for g in &grids {
        let d = g.dim;
        let bounded = [Kernel::compact_radial(d, 1.0).unwrap(), Kernel::fractional(d, 0.75).unwrap().truncated(0.25).unwrap()];
        let singular = Kernel::fractional(d, 0.75).unwrap();
        let full = Mask::full(g);
        for k in 0..20 {
            let u = random_field(g, &mut rng);
            let eps = 0.05;
            let j = &bounded[k % 2];
            worst[0] = worst[0].max(rel(kinetic_fast(&u, j, eps).unwrap(), kinetic_direct(&u, &full, &full, j, eps).unwrap()));
            worst[1] = worst[1].max(rel(kinetic_fast(&u, &singular, eps).unwrap(), kinetic_direct(&u, &full, &full, &singular, eps).unwrap()));
        }
    }
    Verdict::new(worst[0] <= 1e-9 && worst[1] <= 1e-6, format!("bounded max rel err {:.1e}, singular {:.1e}", worst[0], worst[1]))
}

fn random_kernel(rng: &mut ChaCha8Rng, dim: usize) -> Kernel {
    let s = rng.gen_range(0.55..0.95);
    match rng.gen_range(0..3) {
        0 => Kernel::fractional(dim, s).unwrap(),
        1 => Kernel::compact_radial(dim, rng.gen_range(0.3..2.0)).unwrap(),
        _ => Kernel::fractional(dim, s).unwrap().truncated(rng.gen_range(0.05..0.8)).unwrap(),
    }
}

fn bound_lemmas() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut interior_violations = 0;
    for _ in 0..1000 {
        let dim = rng.gen_range(1..=2);
        let j = random_kernel(&mut rng, dim);
        let eps = rng.gen_range(0.01..0.5);
        let a = rng.gen_range(0.0..5.0);
        let b = a * eps * rng.gen_range(1.0..20.0);
        let region = if rng.gen_bool(0.3) {
            IntegrationRegion::Whole
        } else {
            let lo = [rng.gen_range(-1.0..0.0), rng.gen_range(-1.0..0.0)];
            let hi = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            IntegrationRegion::Box { lo, hi }
        };
        let y = match region {
            IntegrationRegion::Box { lo, hi } => [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])],
            IntegrationRegion::Whole => [0.0, 0.0],
        };
        let r = interior_bound(&j, eps, a, b, region, &y[..dim]).unwrap();
        interior_violations += usize::from(!r.holds);
    }
    let mut separation_violations = 0;
    let mut instances = 0;
    while instances < 1000 {
        let dim = rng.gen_range(1..=2);
        let g = if dim == 1 {
            Grid::new_1d(1.0, 64, 0.0, Boundary::Boxed).unwrap()
        } else {
            Grid::new_2d([1.0, 1.0], [16, 16], [0.0, 0.0], Boundary::Boxed).unwrap()
        };
        let j = random_kernel(&mut rng, dim);
        let u = random_field(&g, &mut rng);
        let cut = rng.gen_range(0.1..0.6);
        let gap = rng.gen_range(0.05..0.35);
        let e = Mask::from_fn(&g, |x| x[0] < cut);
        let f = Mask::from_fn(&g, |x| x[0] > cut + gap);
        let d = region_distance(&e, &f);
        if e.is_empty() || f.is_empty() || d <= 0.0 {
            continue;
        }
        instances += 1;
        let delta = d * rng.gen_range(0.5..1.0);
        let r = separation_bound(&u, &e, &f, &j, rng.gen_range(0.01..0.3), delta).unwrap();
        separation_violations += usize::from(!r.holds);
    }
    Verdict::new(interior_violations + separation_violations == 0, format!("interior violations {interior_violations}/1000, separation violations {separation_violations}/1000"))
}

fn truncation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grid::new_1d(1.0, 256, 0.0, Boundary::Periodic).unwrap();
    let j = Kernel::fractional(1, 0.75).unwrap();
    let w = make_quartic();
    let eps = 0.05;
    let mut mono = true;
    let mut worst_gap = 0.0f64;
    for _ in 0..10 {
        let u = random_field(&g, &mut rng);
        let full = total_energy(&u, None, &j, &w, eps).unwrap().total;
        let seq: Vec<f64> = (1..=8).map(|k| truncated_energy(&u, None, &j, 0.5f64.powi(k), &w, eps).unwrap().total).collect();
        mono &= seq.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-12));
        worst_gap = worst_gap.max(rel(seq[7], full));
    }
    let opts = CellOptions::default();
    let psi_of = |dim: usize| {
        let j = Kernel::fractional(dim, 0.75).unwrap();
        let xi: Vec<f64> = (0..dim).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
        let psi = surface_tension(&xi, &j, &w, &opts).unwrap().value;
        let seq: Vec<f64> = (1..=8).map(|k| surface_tension_truncated(&xi, &j, 0.5f64.powi(k), &w, &opts).unwrap().value).collect();
        (psi, seq)
    };
    let (psi, seq) = psi_of(2);
    let psi_mono = seq.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-9));
    let psi_gap = rel(seq[7], psi);
    let (psi1, seq1) = psi_of(1);
    let ok = mono && worst_gap <= 0.01 && psi_mono && psi_gap <= 0.01;
    Verdict::new(
        ok,
        format!(
            "F monotone {mono}, F gap {worst_gap:.2e}; N=2 psi = {psi:.5}, monotone {psi_mono}, gap {:.3}% (N=1 for reference: gap {:.3}%)",
            100.0 * psi_gap,
            100.0 * rel(seq1[7], psi1)
        ),
    )
}

fn cell_problem() -> Verdict {
    let k = Kernel1d::boxed(1.0, 1.0);
    let w = make_quartic();
    let opts = CellOptions::default();
    let run = |l: f64, n: usize| optimize_profile(&k, &w, &Profile::tanh(l, n, 0.5), &opts).unwrap();
    let base = run(20.0, 2048);
    let window = run(40.0, 4096);
    let grid = run(20.0, 4096);
    let trace_ok = base.trace.windows(2).all(|p| p[1] <= p[0]);
    let drift = rel(window.value, base.value).max(rel(grid.value, base.value));
    let ok = base.value <= 1.0 + 1e-6 && trace_ok && drift < 0.01;
    Verdict::new(ok, format!("psi = {:.8} (bound 1), trace nonincreasing {trace_ok}, window/grid doubling drift {drift:.1e}", base.value))
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    hi / lo
}

fn isotropy() -> Verdict {
    let w = make_quartic();
    let opts = CellOptions::default();
    let radial: Vec<f64> = direction_sweep(&truncated_2d(), &w, 16, None, &opts).unwrap().iter().map(|s| s.value).collect();
    let aniso_kernel = Kernel::anisotropic(0.75, NormBall::ellipse(2.0, 1.0, 0.0).unwrap()).unwrap();
    let aniso: Vec<f64> = direction_sweep(&aniso_kernel, &w, 16, None, &opts).unwrap().iter().map(|s| s.value).collect();
    let (r, a) = (spread(&radial), spread(&aniso));
    Verdict::new(r <= 1.02 && a >= 1.05, format!("radial max/min {r:.6}, elongated ball max/min {a:.4}"))
}

fn liminf_trend() -> Verdict {
    let j = Kernel::compact_radial(1, 1.0).unwrap();
    let s = EpsilonSchedule::new(vec![0.1, 0.05, 0.025, 0.0125], 16.0).unwrap();
    let r = liminf_study(&j, &make_quartic(), &s, &LiminfOptions::default(), &CellOptions::default()).unwrap();
    let last = r.rows.last().unwrap().rel_gap;
    let gaps: Vec<String> = r.rows.iter().map(|x| format!("{:.2e}", x.rel_gap)).collect();
    Verdict::new(last.abs() <= 0.05 && r.gap_nonincreasing, format!("psi = {:.6}, relative gaps [{}], monotone {}", r.target, gaps.join(", "), r.gap_nonincreasing))
}

fn limsup_and_compactness() -> (Verdict, Verdict) {
    let j = truncated_2d();
    let w = make_quartic();
    let cell = CellOptions::default();
    let s = EpsilonSchedule::new(vec![0.04, 0.02, 0.01], 8.0).unwrap();
    let flat = recovery_flat(&[1.0, 0.0], [0.5, 0.5], 1.0, 0.5, &j, &w, &s, &cell).unwrap();
    let flat_ratio = flat.final_ratio();

    let sq = PolyhedralInterface::square([0.0, 0.0], 1.0).unwrap();
    let o = PolyhedralOptions { sigma: None, corner: 0.25, thickness: 0.22, delta: 0.05, margin: 0.1 };
    let poly = recovery_polyhedral(&sq, &j, &w, &s, &o, &cell).unwrap();
    let last = poly.rows.last().unwrap().recovery.total;
    let sq_ratio = last / (poly.target + poly.sigma);
    let limsup = Verdict::new(
        flat_ratio <= 1.05 && sq_ratio <= 1.05,
        format!("flat F/(psi L) = {flat_ratio:.4}; square F = {last:.4} vs (sum psi A + sigma) = {:.4}, ratio {sq_ratio:.4}", poly.target + poly.sigma),
    );

    let c = compactness_diagnostic(&s.values, &flat.fields).unwrap();
    let slope = c.slope_05.unwrap_or(f64::NAN);
    let compact = Verdict::new((0.9..=1.1).contains(&slope), format!("transition measure slope {slope:.4} (|u| < 0.5), {:?}", c.measure_05));
    (limsup, compact)
}

fn modification() -> Verdict {
    let s = EpsilonSchedule::new(vec![0.04, 0.02, 0.01], 8.0).unwrap();
    let r = modification_study(&truncated_2d(), &make_quartic(), &s, &MatchedOptions::default(), &CellOptions::default()).unwrap();
    let halves = r.halving_reduces == Some(true);
    let slacks: Vec<String> = r.rows.iter().map(|x| format!("{:.4}", x.scaled_slack)).collect();
    let halved = r.halved.as_ref().map_or(f64::NAN, |h| h.scaled_slack);
    Verdict::new(
        r.nonincreasing && r.final_scaled <= 0.1 && halves,
        format!(
            "scaled slack [{}] nonincreasing {}, final {:.4} <= 0.1; sigma/2 gives {halved:.4} (reduces: {halves})",
            slacks.join(", "),
            r.nonincreasing,
            r.final_scaled
        ),
    )
}

fn skeleton() -> Verdict {
    let j = truncated_2d();
    let sq = PolyhedralInterface::square([0.0, 0.0], 1.0).unwrap();
    let s = skeleton_sweep(&sq, &[0.05, 0.1, 0.2], 0.25, &j, 8.0).unwrap();
    let oct = PolyhedralInterface::regular(8, [0.5, 0.5], 1.0, 0.0).unwrap();
    let p = skeleton_estimate(&oct, 0.1, 0.025, &j, 8.0).unwrap();
    let ratio = p.lhs / s.points[1].lhs;
    Verdict::new((0.8..=1.2).contains(&s.slope) && (1.6..=2.4).contains(&ratio), format!("slope {:.4}, octagon/square {ratio:.4}", s.slope))
}

fn integral_geometry() -> Verdict {
    let j = truncated_2d();
    let sq = Region::unit_square();
    let constant = bp_check(&TwoPoint::Constant(1.0), &sq, &sq, 1_000_000, 1).unwrap();
    let right = Region::Rect { lo: [1.0, 0.0], hi: [2.0, 1.0] };
    let kernel = bp_check(&TwoPoint::Kernel(j.clone()), &sq, &right, 1_000_000, 1).unwrap();
    // Cross-module oracle: the same double integral from the energy module.
    let g = Grid::new_2d([2.0, 1.0], [128, 64], [0.0, 0.0], Boundary::Boxed).unwrap();
    let u = Field::from_fn(&g, |x| if x[0] < 1.0 { 1.0 } else { -1.0 });
    let a = Mask::from_fn(&g, |x| x[0] < 1.0);
    let energy = kinetic_direct(&u, &a, &a.complement(), &j, 1.0).unwrap();
    let cross = rel(kernel.lhs, energy);
    let bp_ok = constant.rel_err <= 0.02 && kernel.rel_err <= 0.02 && cross <= 0.02;

    let shapes: [(&str, Vec<Segment>); 3] = [
        ("segment", vec![Segment { a: [0.0, 0.0], b: [1.0, 0.0] }]),
        ("cross", vec![Segment { a: [-0.5, 0.0], b: [0.5, 0.0] }, Segment { a: [0.0, -0.5], b: [0.0, 0.5] }]),
        ("square", segments(&PolyhedralInterface::square([0.0, 0.0], 1.0).unwrap()).unwrap()),
    ];
    let mut steiner_ok = true;
    let mut stadium = 0.0f64;
    for (name, pieces) in &shapes {
        for d in [0.01, 0.02, 0.05] {
            let r = steiner_check(pieces, d, 32.0).unwrap();
            steiner_ok &= r.holds;
            if *name == "segment" {
                let exact = 2.0 * d + PI * d * d;
                steiner_ok &= (r.tube_measure - exact).abs() <= r.grid_tolerance;
                stadium = stadium.max((r.tube_measure - exact).abs() / r.grid_tolerance);
            }
        }
    }
    let ff = farfield_check(&Kernel::fractional(2, 0.75).unwrap(), 64, 1e-6).unwrap();
    Verdict::new(
        bp_ok && steiner_ok && ff.holds,
        format!(
            "BP rel err {:.1e} (constant), {:.1e} (kernel), energy-module gap {cross:.1e}; Steiner holds {steiner_ok}, stadium error {stadium:.2} x grid tol; far field {:.4} <= {:.4}",
            constant.rel_err, kernel.rel_err, ff.sphere_integral, ff.h2_bound
        ),
    )
}

fn report(n: usize, v: &Verdict, took: Duration) {
    println!("{} criterion {n}: {} [{:.1}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail, took.as_secs_f64());
}

fn timed(n: usize, limit: Option<f64>, f: fn() -> Verdict) -> (usize, Verdict) {
    let t = Instant::now();
    let v = within_time(f(), t.elapsed(), limit);
    report(n, &v, t.elapsed());
    (n, v)
}

#[test]
fn acceptance() {
    let mut verdicts = vec![
        timed(1, Some(1.0), kernel_closed_forms),
        timed(2, Some(10.0), h2_equivalence),
        timed(3, Some(60.0), oracle_equivalence),
        timed(4, Some(120.0), bound_lemmas),
        timed(5, None, truncation),
        timed(6, Some(60.0), cell_problem),
        timed(7, Some(600.0), isotropy),
        timed(8, Some(600.0), liminf_trend),
    ];

    let t = Instant::now();
    let (limsup, compact) = limsup_and_compactness();
    let took = t.elapsed();
    for (n, v, limit) in [(9, limsup, Some(1800.0)), (13, compact, None)] {
        let v = within_time(v, took, limit);
        report(n, &v, took);
        verdicts.push((n, v));
    }

    verdicts.push(timed(10, None, modification));
    verdicts.push(timed(11, None, skeleton));
    verdicts.push(timed(12, Some(300.0), integral_geometry));

    verdicts.sort_by_key(|(n, _)| *n);
    let failed: Vec<usize> = verdicts.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    println!("{} of {} criteria pass", verdicts.len() - failed.len(), verdicts.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

//! Adaptive one-dimensional quadrature.
//!
//! Global adaptive Gauss-Kronrod (7/15) on finite intervals, dyadic
//! refinement toward singular endpoints and toward infinity, and the
//! divergence detector used by the hypothesis checks: a refinement sequence
//! is declared divergent when its increments fail to contract by a factor of
//! at least 2 across 5 successive levels.

use std::collections::BinaryHeap;

/// Error tolerances for adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { abs: 1e-8, rel: 1e-6, max_intervals: 2000 }
    }
}

impl QuadTol {
    /// Tight tolerance used for derived tables (cell weights, marginals).
    pub fn tight() -> Self {
        QuadTol { abs: 1e-15, rel: 1e-11, max_intervals: 4000 }
    }

    pub fn with_abs(self, abs: f64) -> Self {
        QuadTol { abs, ..self }
    }
}

/// Result of a finite-interval integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 panel: (kronrod value, error estimate).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Global adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: QuadTol) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, evals: 0, converged: true };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a: lo, b: hi, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut evals = 15;
    let mut converged = false;
    while heap.len() < tol.max_intervals {
        if err <= tol.abs.max(tol.rel * total.abs()) {
            converged = true;
            break;
        }
        let p = heap.pop().expect("nonempty heap");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        evals += 30;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
    }
    // Re-sum to avoid drift from the running updates.
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.iter() {
        value += p.value;
        error += p.error;
    }
    if !converged {
        converged = error <= tol.abs.max(tol.rel * value.abs());
    }
    QuadResult { value: sign * value, error, evals, converged }
}

/// Integrate over `[a, b]` splitting at interior `breaks` (discontinuities or kinks).
pub fn integrate_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: QuadTol,
) -> QuadResult {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    let mut out = QuadResult { value: 0.0, error: 0.0, evals: 0, converged: true };
    let n = (pts.len() - 1) as f64;
    for w in pts.windows(2) {
        let piece_tol = QuadTol { abs: tol.abs / n, ..tol };
        let r = integrate(f, w[0], w[1], piece_tol);
        out.value += r.value;
        out.error += r.error;
        out.evals += r.evals;
        out.converged &= r.converged;
    }
    out
}

/// Asymptotic model of an integrand, used for analytic tail and origin pieces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Asymptote {
    /// The integrand vanishes identically beyond (or before) the cut point.
    Zero,
    /// f(r) = c r^{-p} exactly in the asymptotic region.
    Power { p: f64 },
    /// f(r) = c r^{-p} ln r exactly in the asymptotic region.
    PowerLog { p: f64 },
    /// Unknown; use dyadic refinement with the divergence detector.
    Unknown,
}

/// Outcome of an improper integral.
#[derive(Clone, Debug, PartialEq)]
pub struct Improper {
    pub value: f64,
    pub divergent: bool,
    /// Cumulative values after each dyadic refinement level.
    pub refinement: Vec<f64>,
    pub converged: bool,
}

/// Levels used by the divergence detector.
pub const DETECTOR_WINDOW: usize = 5;
/// Required contraction of the increments over one detector window.
pub const DETECTOR_FACTOR: f64 = 2.0;

/// Apply the divergence rule to a sequence of refinement increments.
///
/// Returns true when the last full window of increments fails to contract
/// by `DETECTOR_FACTOR`.
pub fn increments_diverge(increments: &[f64], floor: f64) -> bool {
    let n = increments.len();
    if n <= DETECTOR_WINDOW {
        return false;
    }
    let last = increments[n - 1].abs();
    let first = increments[n - 1 - DETECTOR_WINDOW].abs();
    last > floor && last * DETECTOR_FACTOR > first
}

/// ∫_a^∞ f with dyadic shells `[a 2^k, a 2^{k+1}]` and an analytic continuation
/// beyond `r_far` when the asymptote is known. `breaks` are interior kinks.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    breaks: &[f64],
    asym: Asymptote,
    r_far: f64,
    tol: QuadTol,
) -> Improper {
    assert!(a > 0.0, "dyadic tails need a positive start");
    let mut total = 0.0;
    let mut refinement = Vec::new();
    let mut increments = Vec::new();
    let mut converged = true;
    let mut lo = a;
    let max_levels = 200;
    for _ in 0..max_levels {
        let hi = match asym {
            Asymptote::Unknown => 2.0 * lo,
            _ => (2.0 * lo).min(r_far.max(a)),
        };
        if hi <= lo {
            break;
        }
        let r = integrate_breaks(f, lo, hi, breaks, tol.with_abs(tol.abs * 1e-3));
        converged &= r.converged;
        total += r.value;
        increments.push(r.value);
        refinement.push(total);
        lo = hi;
        match asym {
            Asymptote::Unknown => {
                if increments_diverge(&increments, tol.abs * 1e-3) {
                    return Improper { value: f64::INFINITY, divergent: true, refinement, converged: false };
                }
                let n = increments.len();
                if n > DETECTOR_WINDOW && r.value.abs() <= tol.abs.max(tol.rel * total.abs()) * 1e-2 {
                    let prev = increments[n - 2].abs();
                    let q = if prev > 0.0 { (r.value.abs() / prev).min(0.5) } else { 0.0 };
                    total += r.value * q / (1.0 - q);
                    break;
                }
            }
            _ => {
                if lo >= r_far {
                    break;
                }
            }
        }
    }
    let tail = match asym {
        Asymptote::Zero | Asymptote::Unknown => 0.0,
        Asymptote::Power { p } => {
            if p <= 1.0 {
                return divergent_power(f, lo, refinement, total);
            }
            f(lo) * lo / (p - 1.0)
        }
        Asymptote::PowerLog { p } => {
            if p <= 1.0 {
                return divergent_power(f, lo, refinement, total);
            }
            let q = p - 1.0;
            f(lo) * lo * (1.0 / q + 1.0 / (q * q * lo.ln()))
        }
    };
    Improper { value: total + tail, divergent: false, refinement, converged }
}

fn divergent_power<F: Fn(f64) -> f64>(f: &F, lo: f64, mut refinement: Vec<f64>, mut total: f64) -> Improper {
    // Continue the dyadic refinement so callers can inspect the growth.
    let mut r = lo;
    for _ in 0..40 {
        let step = integrate(f, r, 2.0 * r, QuadTol::default());
        total += step.value;
        refinement.push(total);
        r *= 2.0;
    }
    Improper { value: f64::INFINITY, divergent: true, refinement, converged: false }
}

/// ∫_0^b f where f may be singular at 0 with f(r) = c r^{-α} on (0, r0].
pub fn integrate_from_zero<F: Fn(f64) -> f64>(
    f: &F,
    b: f64,
    breaks: &[f64],
    asym: Asymptote,
    r0: f64,
    tol: QuadTol,
) -> Improper {
    match asym {
        Asymptote::Zero => {
            let r = integrate_breaks(f, 0.0, b, breaks, tol);
            Improper { value: r.value, divergent: false, refinement: vec![r.value], converged: r.converged }
        }
        Asymptote::Power { p } => {
            let r0 = r0.min(b);
            if p >= 1.0 {
                return Improper { value: f64::INFINITY, divergent: true, refinement: vec![], converged: false };
            }
            let head = f(r0) * r0 / (1.0 - p);
            let r = integrate_breaks(f, r0, b, breaks, tol);
            Improper { value: head + r.value, divergent: false, refinement: vec![r.value], converged: r.converged }
        }
        Asymptote::PowerLog { .. } | Asymptote::Unknown => {
            // Graded refinement toward the origin.
            let mut total = 0.0;
            let mut hi = b;
            let mut increments = Vec::new();
            let mut refinement = Vec::new();
            let mut converged = true;
            for _ in 0..200 {
                let lo = 0.5 * hi;
                let r = integrate_breaks(f, lo, hi, breaks, tol.with_abs(tol.abs * 1e-3));
                converged &= r.converged;
                total += r.value;
                increments.push(r.value);
                refinement.push(total);
                if increments_diverge(&increments, tol.abs * 1e-3) {
                    return Improper { value: f64::INFINITY, divergent: true, refinement, converged: false };
                }
                if increments.len() > DETECTOR_WINDOW && r.value.abs() <= tol.abs.max(tol.rel * total.abs()) * 1e-2 {
                    break;
                }
                hi = lo;
            }
            Improper { value: total, divergent: false, refinement, converged }
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

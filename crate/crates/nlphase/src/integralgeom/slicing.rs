//! Slicing identity
//! ∫_A∫_B f(x, y) = ∫_{lines} ∫_{A∩L}∫_{B∩L} f(x, y)|y − x| d𝓗¹ d𝓗¹ dλ(L)
//! in the plane, for translation-invariant f(x, y) = φ(y − x).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::{GeomError, LineSample};
use crate::kernels::Kernel;
use crate::quad::{gauss_legendre, integrate_breaks, QuadTol};

/// Relative error accepted by the slicing check.
pub const BP_TOLERANCE: f64 = 0.02;

const CHUNK: usize = 1 << 14;
const LINE_NODES: usize = 16;

/// Convex planar region with exact chords.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Rect { lo: [f64; 2], hi: [f64; 2] },
    Disc { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn unit_square() -> Self {
        Region::Rect { lo: [0.0, 0.0], hi: [1.0, 1.0] }
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        let ok = match self {
            Region::Rect { lo, hi } => (0..2).all(|a| lo[a].is_finite() && hi[a].is_finite() && hi[a] > lo[a]),
            Region::Disc { center, radius } => center.iter().all(|c| c.is_finite()) && radius.is_finite() && *radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(GeomError::Precondition(format!("degenerate region {self:?}")))
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Region::Rect { lo, hi } => (hi[0] - lo[0]) * (hi[1] - lo[1]),
            Region::Disc { radius, .. } => PI * radius * radius,
        }
    }

    fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Region::Rect { lo, hi } => (*lo, *hi),
            Region::Disc { center: c, radius: r } => ([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]),
        }
    }

    /// Parameter interval of L ∩ region along the line.
    fn chord(&self, l: &LineSample) -> Option<(f64, f64)> {
        match self {
            Region::Rect { lo, hi } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for a in 0..2 {
                    if l.xi[a].abs() < 1e-300 {
                        if l.z[a] < lo[a] || l.z[a] > hi[a] {
                            return None;
                        }
                    } else {
                        let (p, q) = ((lo[a] - l.z[a]) / l.xi[a], (hi[a] - l.z[a]) / l.xi[a]);
                        t0 = t0.max(p.min(q));
                        t1 = t1.min(p.max(q));
                    }
                }
                (t1 > t0).then_some((t0, t1))
            }
            Region::Disc { center: c, radius: r } => {
                let d = [l.z[0] - c[0], l.z[1] - c[1]];
                let b = d[0] * l.xi[0] + d[1] * l.xi[1];
                let disc = b * b - (d[0] * d[0] + d[1] * d[1] - r * r);
                (disc > 0.0).then(|| (-b - disc.sqrt(), -b + disc.sqrt()))
            }
        }
    }

    /// y-interval of the vertical slice at x.
    #[cfg(test)]
    fn slice(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            Region::Rect { lo, hi } => (x >= lo[0] && x <= hi[0]).then_some((lo[1], hi[1])),
            Region::Disc { center: c, radius: r } => {
                let q = r * r - (x - c[0]).powi(2);
                (q > 0.0).then(|| (c[1] - q.sqrt(), c[1] + q.sqrt()))
            }
        }
    }

    fn shifted(&self, h: [f64; 2]) -> Region {
        match self {
            Region::Rect { lo, hi } => Region::Rect { lo: [lo[0] - h[0], lo[1] - h[1]], hi: [hi[0] - h[0], hi[1] - h[1]] },
            Region::Disc { center: c, radius } => Region::Disc { center: [c[0] - h[0], c[1] - h[1]], radius: *radius },
        }
    }
}

/// |A ∩ (B − h)|.
pub fn overlap(a: &Region, b: &Region, h: [f64; 2]) -> f64 {
    let b = b.shifted(h);
    match (a, &b) {
        (Region::Rect { lo: l1, hi: h1 }, Region::Rect { lo: l2, hi: h2 }) => {
            (0..2).map(|k| (h1[k].min(h2[k]) - l1[k].max(l2[k])).max(0.0)).product()
        }
        (Region::Disc { center: c1, radius: r1 }, Region::Disc { center: c2, radius: r2 }) => {
            let d = (c2[0] - c1[0]).hypot(c2[1] - c1[1]);
            let (r1, r2) = (*r1, *r2);
            if d >= r1 + r2 {
                0.0
            } else if d <= (r1 - r2).abs() {
                PI * r1.min(r2).powi(2)
            } else {
                let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
                let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
                let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
                r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k
            }
        }
        (Region::Rect { lo, hi }, Region::Disc { center, radius }) | (Region::Disc { center, radius }, Region::Rect { lo, hi }) => {
            let c = |x: f64, y: f64| disc_corner(x - center[0], y - center[1], *radius);
            (c(hi[0], hi[1]) - c(lo[0], hi[1]) - c(hi[0], lo[1]) + c(lo[0], lo[1])).max(0.0)
        }
    }
}

/// Area of the part of the disc of radius r at the origin left of x.
fn disc_left(x: f64, r: f64) -> f64 {
    2.0 * disc_primitive(x, r) + 0.5 * PI * r * r
}

/// ∫_0^x √(r² − t²) dt.
fn disc_primitive(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// |{(u, v) : u² + v² < r², u ≤ x, v ≤ y}|.
fn disc_corner(x: f64, y: f64, r: f64) -> f64 {
    if y > 0.0 {
        return disc_left(x, r) - disc_corner(x, -y, r);
    }
    if x > 0.0 {
        return disc_left(y, r) - disc_corner(-x, y, r);
    }
    if x * x + y * y >= r * r {
        return 0.0;
    }
    // u from −√(r² − y²) to x, v from −√(r² − u²) to y.
    let w = (r * r - y * y).sqrt();
    (y * (x + w) + disc_primitive(x, r) - disc_primitive(-w, r)).max(0.0)
}

/// Translation-invariant two-point integrand f(x, y) = φ(y − x).
#[derive(Clone, Debug)]
pub enum TwoPoint {
    Constant(f64),
    Kernel(Kernel),
}

impl TwoPoint {
    fn eval(&self, h: [f64; 2]) -> f64 {
        match self {
            TwoPoint::Constant(c) => *c,
            TwoPoint::Kernel(j) => j.eval(&h),
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match self {
            TwoPoint::Constant(_) => Vec::new(),
            TwoPoint::Kernel(j) => j.radial_breaks(),
        }
    }

    fn bounded(&self) -> bool {
        match self {
            TwoPoint::Constant(c) => c.is_finite(),
            TwoPoint::Kernel(j) => j.is_bounded(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpReport {
    pub lhs: f64,
    #[serde(rename = "rhs")]
    pub rhs_mc: f64,
    pub stderr: f64,
    pub rel_err: f64,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub verdict: String,
}

impl BpReport {
    pub fn pass(&self) -> bool {
        self.verdict == "pass"
    }
}

/// Per axis, the offsets h_k where |A ∩ (B − h)| can change slope.
fn kinks(a: &Region, b: &Region) -> [Vec<f64>; 2] {
    let (la, ha) = a.bbox();
    let (lb, hb) = b.bbox();
    let center = |r: &Region| {
        let (lo, hi) = r.bbox();
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]
    };
    let (ca, cb) = (center(a), center(b));
    [0, 1].map(|k| vec![lb[k] - ha[k], lb[k] - la[k], hb[k] - ha[k], hb[k] - la[k], cb[k] - ca[k]])
}

/// ∫_A∫_B φ(y − x) dy dx = ∫ φ(h)|A ∩ (B − h)| dh in polar coordinates,
/// split at the rays and radii where the overlap has kinks.
fn direct_side(f: &TwoPoint, a: &Region, b: &Region) -> Result<f64, GeomError> {
    if !f.bounded() && overlap(a, b, [0.0, 0.0]) > 0.0 {
        return Err(GeomError::Precondition("singular integrand on overlapping regions".into()));
    }
    let (la, ha) = a.bbox();
    let (lb, hb) = b.bbox();
    let r_max = (0..2).map(|k| (hb[k] - la[k]).abs().max((ha[k] - lb[k]).abs()).powi(2)).sum::<f64>().sqrt();
    let kernel_breaks: Vec<f64> = f.breaks().into_iter().filter(|r| *r < r_max).collect();
    let [kx, ky] = kinks(a, b);
    let mut rays: Vec<f64> = (0..4).map(|k| k as f64 * PI / 2.0).collect();
    for x in &kx {
        for y in &ky {
            if x.hypot(*y) > 0.0 {
                rays.push(y.atan2(*x).rem_euclid(2.0 * PI));
            }
        }
    }
    let tol = QuadTol { abs: 1e-13, rel: 1e-9, max_intervals: 4000 };
    let angular = |t: f64| {
        let e = [t.cos(), t.sin()];
        let mut breaks = kernel_breaks.clone();
        for (k, ks) in [&kx, &ky].into_iter().enumerate() {
            if e[k].abs() > 1e-12 {
                breaks.extend(ks.iter().map(|v| v / e[k]).filter(|r| *r > 0.0 && *r < r_max));
            }
        }
        let radial = |r: f64| {
            let h = [r * e[0], r * e[1]];
            let g = overlap(a, b, h);
            if g == 0.0 {
                0.0
            } else {
                f.eval(h) * g * r
            }
        };
        integrate_breaks(&radial, 0.0, r_max, &breaks, tol).value
    };
    Ok(integrate_breaks(&angular, 0.0, 2.0 * PI, &rays, tol).value)
}

/// ∫_{A∩L}∫_{B∩L} φ(y − x)|y − x| with y − x = rξ: the chord pair reduces to
/// ∫ φ(rξ)|r| K(r) dr with K the trapezoid overlap length.
fn line_side(f: &TwoPoint, l: &LineSample, ca: (f64, f64), cb: (f64, f64), breaks: &[f64], gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (a0, a1) = ca;
    let (b0, b1) = cb;
    let (lo, hi) = (b0 - a1, b1 - a0);
    let mut pts = vec![lo, hi, b0 - a0, b1 - a1, 0.0];
    for r in breaks {
        pts.push(*r);
        pts.push(-r);
    }
    pts.retain(|p| *p >= lo && *p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut s = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q - p <= 0.0 {
            continue;
        }
        let (m, half) = (0.5 * (p + q), 0.5 * (q - p));
        for (x, wt) in gl.0.iter().zip(&gl.1) {
            let r = m + half * x;
            let k = (a1.min(b1 - r) - a0.max(b0 - r)).max(0.0);
            if k > 0.0 {
                s += wt * half * f.eval([r * l.xi[0], r * l.xi[1]]) * r.abs() * k;
            }
        }
    }
    s
}

pub fn bp_check(f: &TwoPoint, a: &Region, b: &Region, samples: usize, seed: u64) -> Result<BpReport, GeomError> {
    bp_check_with(f, a, b, samples, seed, BP_TOLERANCE)
}

/// Quadrature of the area side against Monte Carlo over lines meeting the
/// bounding disc of A ∪ B. Chunks of lines draw from independent streams
/// of the master seed and are summed in chunk order.
pub fn bp_check_with(f: &TwoPoint, a: &Region, b: &Region, samples: usize, seed: u64, tolerance: f64) -> Result<BpReport, GeomError> {
    a.validate()?;
    b.validate()?;
    if let TwoPoint::Kernel(j) = f {
        if j.dim() != 2 {
            return Err(GeomError::Precondition("slicing check is two-dimensional".into()));
        }
    }
    if samples < 2 {
        return Err(GeomError::Precondition("need at least two line samples".into()));
    }
    let lhs = direct_side(f, a, b)?;

    let (la, ha) = a.bbox();
    let (lb, hb) = b.bbox();
    let (lo, hi) = ([la[0].min(lb[0]), la[1].min(lb[1])], [ha[0].max(hb[0]), ha[1].max(hb[1])]);
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let radius = 0.5 * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    let breaks = f.breaks();
    let gl = gauss_legendre(LINE_NODES);
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let l = LineSample::through_disc(rng.gen::<f64>() * TAU, (2.0 * rng.gen::<f64>() - 1.0) * radius, center, radius, samples);
                if let (Some(ca), Some(cb)) = (a.chord(&l), b.chord(&l)) {
                    let x = line_side(f, &l, ca, cb, &breaks, &gl);
                    s1 += x;
                    s2 += x * x;
                }
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let n = samples as f64;
    let measure = PI * 2.0 * radius;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    let rhs = measure * mean;
    let stderr = measure * (var / n).sqrt();

    let rel_err = if lhs != 0.0 {
        (rhs - lhs).abs() / lhs.abs()
    } else if rhs.abs() > 3.0 * stderr && rhs != 0.0 {
        return Err(GeomError::IdentityViolation { lhs, rhs, stderr });
    } else {
        0.0
    };
    Ok(BpReport {
        lhs,
        rhs_mc: rhs,
        stderr,
        rel_err,
        samples,
        seed,
        tolerance,
        verdict: if rel_err <= tolerance { "pass" } else { "fail" }.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn overlap_closed_forms_agree_with_slices() {
        let sq = Region::unit_square();
        let d = Region::Disc { center: [0.5, 0.5], radius: 0.4 };
        assert!((overlap(&sq, &sq, [0.25, -0.5]) - 0.375).abs() < 1e-15);
        assert!((overlap(&sq, &d, [0.0, 0.0]) - d.area()).abs() < 1e-8);
        let d2 = Region::Disc { center: [0.9, 0.5], radius: 0.3 };
        // Lens via the slice integral on a rect-free pair.
        let lens = overlap(&d, &d2, [0.0, 0.0]);
        let (la, ha) = d.bbox();
        let f = |x: f64| match (d.slice(x), d2.slice(x)) {
            (Some(p), Some(q)) => (p.1.min(q.1) - p.0.max(q.0)).max(0.0),
            _ => 0.0,
        };
        let num = integrate(&f, la[0], ha[0], QuadTol::tight()).value;
        assert!((lens - num).abs() < 1e-7, "{lens} {num}");
    }

    #[test]
    fn rect_disc_closed_form_matches_slices() {
        let d = Region::Disc { center: [0.1, -0.2], radius: 0.35 };
        for (lo, hi) in [([-1.0, -1.0], [1.0, 1.0]), ([0.0, -0.3], [0.5, 0.0]), ([-0.3, -0.1], [0.05, 0.9]), ([0.3, 0.1], [0.7, 0.4]), ([2.0, 2.0], [3.0, 3.0])] {
            let r = Region::Rect { lo, hi };
            let f = |x: f64| match (r.slice(x), d.slice(x)) {
                (Some(p), Some(q)) => (p.1.min(q.1) - p.0.max(q.0)).max(0.0),
                _ => 0.0,
            };
            let num = integrate(&f, -0.25, 0.45, QuadTol::tight()).value;
            let closed = overlap(&r, &d, [0.0, 0.0]);
            assert!((closed - num).abs() < 1e-9, "{lo:?} {hi:?}: {closed} {num}");
            assert!((overlap(&d, &r, [0.0, 0.0]) - closed).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_integrand_direct_side() {
        let sq = Region::unit_square();
        let v = direct_side(&TwoPoint::Constant(1.0), &sq, &sq).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn chords() {
        let l = LineSample { xi: [1.0, 0.0], z: [0.0, 0.5], weight: 1.0 };
        assert_eq!(Region::unit_square().chord(&l), Some((0.0, 1.0)));
        let d = Region::Disc { center: [2.0, 0.5], radius: 0.5 };
        let (t0, t1) = d.chord(&l).unwrap();
        assert!((t0 - 1.5).abs() < 1e-12 && (t1 - 2.5).abs() < 1e-12);
        let miss = LineSample { xi: [0.0, 1.0], z: [3.0, 0.0], weight: 1.0 };
        assert!(Region::unit_square().chord(&miss).is_none());
    }

    #[test]
    fn small_run_is_reproducible_and_close() {
        let sq = Region::unit_square();
        let r1 = bp_check(&TwoPoint::Constant(1.0), &sq, &sq, 50_000, 7).unwrap();
        let r2 = bp_check(&TwoPoint::Constant(1.0), &sq, &sq, 50_000, 7).unwrap();
        assert_eq!(r1, r2);
        assert!((r1.rhs_mc - 1.0).abs() < 4.0 * r1.stderr + 1e-3, "{r1:?}");
    }

    #[test]
    fn separated_support_gives_zero() {
        let j = Kernel::compact_radial(2, 0.5).unwrap();
        let a = Region::unit_square();
        let b = Region::Rect { lo: [2.0, 0.0], hi: [3.0, 1.0] };
        let r = bp_check(&TwoPoint::Kernel(j), &a, &b, 20_000, 3).unwrap();
        assert_eq!((r.lhs, r.rhs_mc), (0.0, 0.0));
        assert!(r.pass());
    }
}

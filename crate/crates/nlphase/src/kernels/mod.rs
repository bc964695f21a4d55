//! Interaction kernels J: construction, scaling, truncation, moments and
//! directional reductions.
//!
//! Every supported kernel factors in polar coordinates as
//! `J(h) = R(|h|) Θ(h/|h|)`, where the radial part carries the power law or
//! indicator together with the scale ε and the truncation radius ρ, and the
//! angular part is 1 for radial kernels and `r_K(θ)^{N+2s}` for anisotropic
//! ones. Radial integrals therefore reduce to one-dimensional quadrature
//! times an angular mass.

mod ball;
mod descriptor;
mod hypotheses;
mod oned;

pub use ball::{BallDescriptor, NormBall, BALL_SAMPLES};
pub use descriptor::KernelSpec;
pub use hypotheses::{check_hypotheses, check_hypotheses_with, H1Report, H2Report, H2StarReport, HypothesisReport};
pub use oned::{line_kernel, marginal, Kernel1d};

use std::f64::consts::PI;

use crate::quad::{self, Asymptote, Improper, QuadTol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("fractional exponent s = {s} rejected: {reason}")]
    InvalidExponent { s: f64, reason: String },
    #[error("radius must be positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("unsupported dimension {dim}: {reason}")]
    Dimension { dim: usize, reason: String },
    #[error("norm-ball descriptor does not define a norm: {0}")]
    NotANorm(String),
    #[error("direction must be a unit vector of the kernel dimension")]
    BadDirection,
    #[error("descriptor line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown kernel kind '{kind}'; expected one of {expected:?}")]
    UnknownKind { kind: String, expected: Vec<String> },
    #[error("{what} diverges")]
    Divergent { what: String },
}

/// Base family of a kernel before scaling and truncation.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// J(h) = |h|^{-N-2s}.
    Fractional { s: f64 },
    /// J(h) = ‖h‖_K^{-N-2s}, planar only.
    AnisoFractional { s: f64, ball: NormBall },
    /// J(h) = 1 on the open ball of the given radius.
    CompactRadial { radius: f64 },
}

/// An even, nonnegative interaction kernel, possibly scaled and truncated.
///
/// Evaluates to `ε^{-N} J(h/ε) 1_{|h| > ρ}` where ε is `scale` and ρ is the
/// truncation radius in the kernel's own (scaled) coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    dim: usize,
    family: Family,
    scale: f64,
    cut: f64,
}

/// Measure of the unit sphere S^{N-1} (counting measure for N = 1).
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // 2 π^{N/2} / Γ(N/2) via the recursion σ_{N+1} = 2π σ_{N-1} / N... for N ≥ 4.
            let mut s = if dim % 2 == 0 { 2.0 * PI } else { 4.0 * PI };
            let mut n = if dim % 2 == 0 { 2 } else { 3 };
            while n < dim {
                s *= 2.0 * PI / n as f64;
                n += 2;
            }
            s
        }
    }
}

fn check_s(s: f64) -> Result<(), KernelError> {
    if !s.is_finite() || s >= 1.0 || s <= 0.0 {
        return Err(KernelError::InvalidExponent { s, reason: "s must lie in (1/2, 1)".into() });
    }
    if s <= 0.5 {
        return Err(KernelError::InvalidExponent {
            s,
            reason: "the fractional kernel satisfies (H2*) only for s > 1/2".into(),
        });
    }
    Ok(())
}

fn check_dim(dim: usize) -> Result<(), KernelError> {
    if dim == 0 || dim > 3 {
        return Err(KernelError::Dimension { dim, reason: "supported dimensions are 1, 2 and 3".into() });
    }
    Ok(())
}

/// Build a kernel from a parsed descriptor.
pub fn make_kernel(spec: &KernelSpec) -> Result<Kernel, KernelError> {
    spec.build()
}

/// `J_ε(h) = ε^{-N} J(h/ε)`.
pub fn scale(j: &Kernel, eps: f64) -> Result<Kernel, KernelError> {
    j.scaled(eps)
}

/// Truncated kernel `J^ρ = 1_{|h| > ρ} J`.
pub fn truncate(j: &Kernel, rho: f64) -> Result<Kernel, KernelError> {
    j.truncated(rho)
}

/// (H1) moment M_J = ∫ J(h)(|h| ∧ |h|²) dh.
pub fn moment_mj(j: &Kernel) -> Result<f64, KernelError> {
    j.moment_mj(QuadTol::default())
}

/// ω₁(t) = ∫_{|h| ≥ 1/t} J(h)|h| dh.
pub fn omega1(j: &Kernel, t: f64) -> Result<f64, KernelError> {
    j.omega1(t, QuadTol::default())
}

impl Kernel {
    pub fn fractional(dim: usize, s: f64) -> Result<Self, KernelError> {
        check_dim(dim)?;
        check_s(s)?;
        Ok(Kernel { dim, family: Family::Fractional { s }, scale: 1.0, cut: 0.0 })
    }

    /// Fractional kernel without the admissibility check on s.
    ///
    /// Only for studying hypothesis failures (for instance s = 1/2, where
    /// (H1), (H2) and (H2*) all fail); energies built on such kernels diverge.
    pub fn fractional_unchecked(dim: usize, s: f64) -> Result<Self, KernelError> {
        check_dim(dim)?;
        if !(s > 0.0 && s < 1.0) {
            return Err(KernelError::InvalidExponent { s, reason: "s must lie in (0, 1)".into() });
        }
        Ok(Kernel { dim, family: Family::Fractional { s }, scale: 1.0, cut: 0.0 })
    }

    pub fn anisotropic(s: f64, ball: NormBall) -> Result<Self, KernelError> {
        check_s(s)?;
        Ok(Kernel { dim: 2, family: Family::AnisoFractional { s, ball }, scale: 1.0, cut: 0.0 })
    }

    pub fn compact_radial(dim: usize, radius: f64) -> Result<Self, KernelError> {
        check_dim(dim)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(KernelError::NonPositiveRadius(radius));
        }
        Ok(Kernel { dim, family: Family::CompactRadial { radius }, scale: 1.0, cut: 0.0 })
    }

    pub fn scaled(&self, eps: f64) -> Result<Self, KernelError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(KernelError::NonPositiveScale(eps));
        }
        Ok(Kernel { scale: self.scale * eps, cut: self.cut * eps, ..self.clone() })
    }

    pub fn truncated(&self, rho: f64) -> Result<Self, KernelError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(KernelError::NonPositiveRadius(rho));
        }
        Ok(Kernel { cut: self.cut.max(rho), ..self.clone() })
    }

    /// Drop any truncation.
    pub fn untruncated(&self) -> Self {
        Kernel { cut: 0.0, ..self.clone() }
    }

    /// Drop scaling and truncation.
    pub fn base(&self) -> Self {
        Kernel { scale: 1.0, cut: 0.0, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    /// Truncation radius ρ (0 when untruncated).
    pub fn cut(&self) -> f64 {
        self.cut
    }

    /// Kind tag: the truncated wrapper takes precedence over the base family.
    pub fn kind_tag(&self) -> &'static str {
        if self.cut > 0.0 {
            return "truncated";
        }
        self.family_tag()
    }

    pub fn family_tag(&self) -> &'static str {
        match self.family {
            Family::Fractional { .. } => "fractional",
            Family::AnisoFractional { .. } => "anisotropic-fractional",
            Family::CompactRadial { .. } => "compact-radial",
        }
    }

    pub fn fractional_s(&self) -> Option<f64> {
        match self.family {
            Family::Fractional { s } | Family::AnisoFractional { s, .. } => Some(s),
            Family::CompactRadial { .. } => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.family, Family::AnisoFractional { .. })
    }

    /// Support radius (None when unbounded).
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            Family::CompactRadial { radius } => Some(radius * self.scale),
            _ => None,
        }
    }

    /// Power-law exponent at the origin (−N−2s), or None for bounded kernels.
    pub fn singularity_order(&self) -> Option<f64> {
        if self.cut > 0.0 {
            return None;
        }
        self.fractional_s().map(|s| -(self.dim as f64) - 2.0 * s)
    }

    /// Decay exponent p with J(h) ∝ |h|^{-p} at infinity (None for compact support).
    pub fn decay_exponent(&self) -> Option<f64> {
        self.fractional_s().map(|s| self.dim as f64 + 2.0 * s)
    }

    /// True when J is bounded (so all cell integrals are finite).
    pub fn is_bounded(&self) -> bool {
        self.singularity_order().is_none()
    }

    /// Radii where the radial part is discontinuous.
    pub fn radial_breaks(&self) -> Vec<f64> {
        let mut b = Vec::new();
        if self.cut > 0.0 {
            b.push(self.cut);
        }
        if let Some(r) = self.support_radius() {
            if r > self.cut {
                b.push(r);
            }
        }
        b
    }

    /// Radial part R(r) in physical coordinates.
    pub fn radial(&self, r: f64) -> f64 {
        if r <= self.cut {
            return 0.0;
        }
        let n = self.dim as f64;
        let t = r / self.scale;
        let g = match self.family {
            Family::Fractional { s } | Family::AnisoFractional { s, .. } => {
                if t == 0.0 {
                    return f64::INFINITY;
                }
                t.powf(-n - 2.0 * s)
            }
            Family::CompactRadial { radius } => {
                if t < radius {
                    1.0
                } else {
                    0.0
                }
            }
        };
        g * self.scale.powf(-n)
    }

    /// Angular factor Θ(θ) at the unit direction `dir`.
    pub fn angular(&self, dir: &[f64]) -> f64 {
        match &self.family {
            Family::AnisoFractional { s, ball } => ball.radius(dir[1].atan2(dir[0])).powf(2.0 + 2.0 * s),
            _ => 1.0,
        }
    }

    /// ∫_{S^{N-1}} Θ.
    pub fn angular_mass(&self) -> f64 {
        match &self.family {
            Family::AnisoFractional { s, ball } => ball.angular_power_integral(2.0 + 2.0 * s),
            _ => sphere_measure(self.dim),
        }
    }

    /// Evaluate J(h), h ∈ ℝ^N \ {0}. Returns +∞ at the origin for singular kernels.
    pub fn eval(&self, h: &[f64]) -> f64 {
        debug_assert_eq!(h.len(), self.dim);
        let r = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rad = self.radial(r);
        if rad == 0.0 || !rad.is_finite() {
            return rad;
        }
        match &self.family {
            Family::AnisoFractional { .. } => rad * self.angular(&[h[0] / r, h[1] / r]),
            _ => rad,
        }
    }

    /// Kernel-specific characteristic length (support radius or scale).
    pub fn char_length(&self) -> f64 {
        match self.family {
            Family::CompactRadial { radius } => radius * self.scale,
            _ => self.scale,
        }
    }

    /// A · ∫_{lo}^{hi} R(r) w(r) r^{N-1} dr with asymptotic information on w:
    /// w(r) = r^{zero_pow} near the origin, w(r) = r^{inf_pow} (ln r)^{inf_log} at infinity.
    pub(crate) fn radial_integral(
        &self,
        w: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: Option<f64>,
        zero_pow: f64,
        inf_pow: f64,
        inf_log: bool,
        tol: QuadTol,
    ) -> Improper {
        let n = self.dim as f64;
        let a = self.angular_mass();
        let f = |r: f64| {
            if r <= 0.0 {
                return 0.0;
            }
            let rad = self.radial(r);
            if rad == 0.0 {
                return 0.0;
            }
            rad * w(r) * r.powf(n - 1.0)
        };
        let mut breaks = self.radial_breaks();
        breaks.push(1.0);
        let mut hi = hi;
        if let Some(rs) = self.support_radius() {
            hi = Some(hi.map_or(rs, |h| h.min(rs)));
        }
        let scale_tol = QuadTol { abs: tol.abs / a, ..tol };
        let mut total = 0.0;
        let mut refinement = Vec::new();
        let mut converged = true;
        // Singular part near the origin.
        let mut start = lo;
        if lo == 0.0 {
            let first = breaks.iter().cloned().fold(f64::INFINITY, f64::min).min(1.0);
            let upto = hi.map_or(first, |h| h.min(first));
            let asym = match self.singularity_order() {
                Some(order) => Asymptote::Power { p: -(order + zero_pow + n - 1.0) },
                None => Asymptote::Zero,
            };
            let head = quad::integrate_from_zero(&f, upto, &breaks, asym, upto * 1e-3, scale_tol);
            if head.divergent {
                return Improper { value: f64::INFINITY, divergent: true, refinement: head.refinement, converged: false };
            }
            total += head.value;
            converged &= head.converged;
            start = upto;
        }
        match hi {
            Some(h) => {
                if h > start {
                    let r = quad::integrate_breaks(&f, start, h, &breaks, scale_tol);
                    total += r.value;
                    converged &= r.converged;
                }
                refinement.push(total * a);
            }
            None => {
                let pow = match self.decay_exponent() {
                    Some(p) => p - inf_pow - (n - 1.0),
                    None => 0.0,
                };
                let asym = if self.decay_exponent().is_none() {
                    Asymptote::Zero
                } else if inf_log {
                    Asymptote::PowerLog { p: pow }
                } else {
                    Asymptote::Power { p: pow }
                };
                let last = breaks.iter().cloned().fold(start.max(1.0), f64::max);
                let tail = quad::integrate_to_infinity(&f, start, &breaks, asym, 64.0 * last, scale_tol);
                refinement = tail.refinement.iter().map(|v| (v + total) * a).collect();
                if tail.divergent {
                    return Improper { value: f64::INFINITY, divergent: true, refinement, converged: false };
                }
                total += tail.value;
                converged &= tail.converged;
            }
        }
        Improper { value: total * a, divergent: false, refinement, converged }
    }

    pub fn moment_mj(&self, tol: QuadTol) -> Result<f64, KernelError> {
        let r = self.radial_integral(&|r: f64| r.min(r * r), 0.0, None, 2.0, 1.0, false, tol);
        if r.divergent {
            return Err(KernelError::Divergent { what: "(H1) moment".into() });
        }
        Ok(r.value)
    }

    pub fn omega1(&self, t: f64, tol: QuadTol) -> Result<f64, KernelError> {
        if !(t > 0.0) {
            return Err(KernelError::NonPositiveRadius(t));
        }
        let r = self.radial_integral(&|r: f64| r, 1.0 / t, None, 1.0, 1.0, false, tol);
        if r.divergent {
            return Err(KernelError::Divergent { what: format!("omega1({t}) tail") });
        }
        Ok(r.value)
    }

    /// ∫_{|h| ≥ 1/t, |h| < r_max} J|h| dh.
    pub fn omega1_window(&self, t: f64, r_max: f64, tol: QuadTol) -> f64 {
        let lo = 1.0 / t;
        if r_max <= lo {
            return 0.0;
        }
        self.radial_integral(&|r: f64| r, lo, Some(r_max), 1.0, 1.0, false, tol).value
    }

    /// (H2) integral ∫_{B₁^c} J|h| ln|h| dh, with its dyadic refinement sequence.
    pub fn h2_integral(&self, tol: QuadTol) -> Improper {
        self.radial_integral(&|r: f64| r * r.ln(), 1.0, None, 1.0, 1.0, true, tol)
    }

    /// ∫_{|h| > a} J(h) dh.
    pub fn tail_mass(&self, a: f64, tol: QuadTol) -> Result<f64, KernelError> {
        if a <= 0.0 && !self.is_bounded() {
            return Err(KernelError::Divergent { what: "kernel mass near the origin".into() });
        }
        let r = if a > 0.0 {
            self.radial_integral(&|_| 1.0, a, None, 0.0, 0.0, false, tol)
        } else {
            self.radial_integral(&|_| 1.0, 0.0, None, 0.0, 0.0, false, tol)
        };
        if r.divergent {
            return Err(KernelError::Divergent { what: "kernel tail mass".into() });
        }
        Ok(r.value)
    }

    /// Total mass ∫ J (bounded, integrable kernels only).
    pub fn mass(&self, tol: QuadTol) -> Result<f64, KernelError> {
        self.tail_mass(0.0, tol)
    }

    /// ∫ over the axis-aligned box [lo, hi] of J. The box must avoid the
    /// origin unless the kernel is bounded.
    pub fn box_integral(&self, lo: &[f64], hi: &[f64], tol: QuadTol) -> f64 {
        match self.dim {
            1 => {
                let mut br: Vec<f64> = self.radial_breaks().iter().flat_map(|&b| [b, -b]).collect();
                br.push(0.0);
                quad::integrate_breaks(&|x: f64| self.eval(&[x]), lo[0], hi[0], &br, tol).value
            }
            2 => self.box_integral_2d(lo, hi, tol),
            _ => panic!("box integrals are implemented for N ≤ 2"),
        }
    }

    fn box_integral_2d(&self, lo: &[f64], hi: &[f64], tol: QuadTol) -> f64 {
        let rb = self.radial_breaks();
        // Far from the origin and from every break circle: tensor Gauss-Legendre.
        let dx = [lo[0].abs().min(hi[0].abs()), lo[1].abs().min(hi[1].abs())];
        let near_x = if lo[0] <= 0.0 && hi[0] >= 0.0 { 0.0 } else { dx[0] };
        let near_y = if lo[1] <= 0.0 && hi[1] >= 0.0 { 0.0 } else { dx[1] };
        let rmin = near_x.hypot(near_y);
        let rmax = lo[0].abs().max(hi[0].abs()).hypot(lo[1].abs().max(hi[1].abs()));
        let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        let crosses = rb.iter().any(|&b| b >= rmin && b <= rmax);
        let aniso = !self.is_radial();
        if !crosses && rmin > 4.0 * diag && !aniso {
            return gl_box(&|x, y| self.eval(&[x, y]), lo, hi, 6);
        }
        if !crosses && rmin > 8.0 * diag {
            return gl_box(&|x, y| self.eval(&[x, y]), lo, hi, 8);
        }
        let mut xb: Vec<f64> = rb.iter().flat_map(|&b| [b, -b]).collect();
        xb.push(0.0);
        let inner_tol = QuadTol { abs: tol.abs / (hi[0] - lo[0]).max(1e-300), ..tol };
        let g = |x: f64| {
            let mut yb = vec![0.0];
            for &b in &rb {
                if b > x.abs() {
                    let y = (b * b - x * x).sqrt();
                    yb.push(y);
                    yb.push(-y);
                }
            }
            quad::integrate_breaks(&|y: f64| self.eval(&[x, y]), lo[1], hi[1], &yb, inner_tol).value
        };
        quad::integrate_breaks(&g, lo[0], hi[0], &xb, tol).value
    }

    /// Canonical descriptor for manifests.
    pub fn descriptor(&self) -> KernelSpec {
        KernelSpec::from_kernel(self)
    }
}

fn gl_box(f: &dyn Fn(f64, f64) -> f64, lo: &[f64], hi: &[f64], n: usize) -> f64 {
    let (x, w) = quad::gauss_legendre(n);
    let cx = 0.5 * (lo[0] + hi[0]);
    let hx = 0.5 * (hi[0] - lo[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    let hy = 0.5 * (hi[1] - lo[1]);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += w[i] * w[j] * f(cx + hx * x[i], cy + hy * x[j]);
        }
    }
    s * hx * hy
}

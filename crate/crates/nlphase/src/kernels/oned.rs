//! One-dimensional kernels: directional marginals J̃_ξ and line kernels J^ξ.

use super::{Family, Kernel, KernelError};
use crate::quad::{self, Asymptote, QuadTol};

/// An even, nonnegative kernel on ℝ \ {0}.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel1d {
    /// c |r|^q on cut < |r| < support.
    Monomial { c: f64, q: f64, cut: f64, support: f64 },
    /// c |r|^{-p} on |r| > cut.
    Power { c: f64, p: f64, cut: f64 },
    /// Transverse integral r ↦ ∫_{ξ⊥} J(rξ + z) dz of a planar kernel,
    /// evaluated numerically where no closed form applies; `power = (c, p)`
    /// holds on |r| ≥ `r_pow`.
    Marginal { kernel: Kernel, xi: [f64; 2], power: Option<(f64, f64)>, r_pow: f64, support: Option<f64> },
}

fn unit(xi: &[f64], dim: usize) -> Result<(), KernelError> {
    if xi.len() != dim {
        return Err(KernelError::BadDirection);
    }
    let n = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(KernelError::BadDirection);
    }
    Ok(())
}

/// Directional marginal J̃_ξ(r) = ∫_{ξ⊥} J(z + rξ) dH^{N-1}(z).
pub fn marginal(j: &Kernel, xi: &[f64]) -> Result<Kernel1d, KernelError> {
    unit(xi, j.dim())?;
    match j.dim() {
        1 => line_kernel(j, xi),
        2 => {
            let xi2 = [xi[0], xi[1]];
            let power = match j.family() {
                Family::CompactRadial { .. } => None,
                _ => {
                    let s = j.fractional_s().expect("power family");
                    let c = transverse(&j.untruncated(), xi2, 1.0)?;
                    Some((c, 1.0 + 2.0 * s))
                }
            };
            Ok(Kernel1d::Marginal { kernel: j.clone(), xi: xi2, power, r_pow: j.cut(), support: j.support_radius() })
        }
        d => Err(KernelError::Dimension { dim: d, reason: "marginals are implemented for N ≤ 2".into() }),
    }
}

/// Line kernel J^ξ(t) = J(tξ)|t|^{N-1}.
pub fn line_kernel(j: &Kernel, xi: &[f64]) -> Result<Kernel1d, KernelError> {
    unit(xi, j.dim())?;
    let n = j.dim() as f64;
    let theta = j.angular(xi);
    match j.family() {
        Family::CompactRadial { radius } => Ok(Kernel1d::Monomial {
            c: j.scale_factor().powf(-n) * theta,
            q: n - 1.0,
            cut: j.cut(),
            support: radius * j.scale_factor(),
        }),
        _ => {
            let s = j.fractional_s().expect("power family");
            Ok(Kernel1d::Power { c: theta * j.scale_factor().powf(2.0 * s), p: 1.0 + 2.0 * s, cut: j.cut() })
        }
    }
}

/// ∫ J(rξ + zξ⊥) dz for planar kernels.
fn transverse(j: &Kernel, xi: [f64; 2], r: f64) -> Result<f64, KernelError> {
    let perp = [-xi[1], xi[0]];
    let at = |z: f64| j.eval(&[r * xi[0] + z * perp[0], r * xi[1] + z * perp[1]]);
    let ar = r.abs();
    if ar == 0.0 && !j.is_bounded() {
        return Ok(f64::INFINITY);
    }
    let mut zb = vec![0.0];
    for &b in &j.radial_breaks() {
        if b > ar {
            let z = (b * b - ar * ar).sqrt();
            zb.push(z);
            zb.push(-z);
        }
    }
    let tol = QuadTol::tight();
    if let Some(rs) = j.support_radius() {
        if ar >= rs {
            return Ok(0.0);
        }
        let zmax = (rs * rs - ar * ar).sqrt();
        return Ok(quad::integrate_breaks(&at, -zmax, zmax, &zb, tol).value);
    }
    let zfar = zb.iter().cloned().fold(ar.max(1.0), |a, b| a.max(b.abs()));
    let mid = quad::integrate_breaks(&at, -zfar, zfar, &zb, tol).value;
    let p = j.decay_exponent().expect("unbounded kernels decay as a power");
    let right = quad::integrate_to_infinity(&at, zfar, &[], Asymptote::Power { p }, 1e3 * zfar, tol);
    let left = quad::integrate_to_infinity(&|z: f64| at(-z), zfar, &[], Asymptote::Power { p }, 1e3 * zfar, tol);
    if right.divergent || left.divergent {
        return Err(KernelError::Divergent { what: "transverse marginal integral".into() });
    }
    Ok(mid + right.value + left.value)
}

impl Kernel1d {
    /// Box kernel `height · 1_{|r| < half_width}`.
    pub fn boxed(half_width: f64, height: f64) -> Self {
        Kernel1d::Monomial { c: height, q: 0.0, cut: 0.0, support: half_width }
    }

    /// `c |r|^{-p}`.
    pub fn power(c: f64, p: f64) -> Self {
        Kernel1d::Power { c, p, cut: 0.0 }
    }

    /// Zero the kernel on |r| ≤ ρ.
    pub fn truncated(&self, rho: f64) -> Self {
        match self.clone() {
            Kernel1d::Monomial { c, q, cut, support } => Kernel1d::Monomial { c, q, cut: cut.max(rho), support },
            Kernel1d::Power { c, p, cut } => Kernel1d::Power { c, p, cut: cut.max(rho) },
            Kernel1d::Marginal { kernel, xi, .. } => {
                let k = kernel.truncated(rho).expect("positive truncation radius");
                marginal(&k, &xi).expect("marginal of a valid kernel")
            }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let a = r.abs();
        match self {
            Kernel1d::Monomial { c, q, cut, support } => {
                if a > *cut && a < *support {
                    c * a.powf(*q)
                } else {
                    0.0
                }
            }
            Kernel1d::Power { c, p, cut } => {
                if a <= *cut {
                    0.0
                } else if a == 0.0 {
                    f64::INFINITY
                } else {
                    c * a.powf(-p)
                }
            }
            Kernel1d::Marginal { kernel, xi, power, r_pow, support } => {
                if let Some(s) = support {
                    if a >= *s {
                        return 0.0;
                    }
                }
                if let Some((c, p)) = power {
                    if a >= *r_pow && a > 0.0 {
                        return c * a.powf(-p);
                    }
                }
                transverse(kernel, *xi, a).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Positive radii where the kernel is discontinuous or changes form.
    pub fn breaks(&self) -> Vec<f64> {
        let mut b = match self {
            Kernel1d::Monomial { cut, support, .. } => vec![*cut, *support],
            Kernel1d::Power { cut, .. } => vec![*cut],
            Kernel1d::Marginal { r_pow, support, kernel, .. } => {
                let mut v = vec![*r_pow];
                v.extend(support.iter().copied());
                v.extend(kernel.radial_breaks());
                v
            }
        };
        b.retain(|x| *x > 0.0 && x.is_finite());
        b.sort_by(|x, y| x.total_cmp(y));
        b.dedup();
        b
    }

    pub fn support(&self) -> Option<f64> {
        match self {
            Kernel1d::Monomial { support, .. } => Some(*support),
            Kernel1d::Power { .. } => None,
            Kernel1d::Marginal { support, .. } => *support,
        }
    }

    /// True when the kernel is bounded near the origin.
    pub fn is_bounded(&self) -> bool {
        match self {
            Kernel1d::Monomial { q, cut, .. } => *q >= 0.0 || *cut > 0.0,
            Kernel1d::Power { cut, .. } => *cut > 0.0,
            Kernel1d::Marginal { kernel, .. } => kernel.is_bounded(),
        }
    }

    /// Characteristic length: support radius, or 1 for scale-free kernels.
    pub fn char_length(&self) -> f64 {
        self.support().unwrap_or(1.0)
    }

    /// Power law (c, p, from) valid on |r| ≥ from, if any.
    fn power_region(&self) -> Option<(f64, f64, f64)> {
        match self {
            Kernel1d::Power { c, p, cut } => Some((*c, *p, *cut)),
            Kernel1d::Marginal { power: Some((c, p)), r_pow, .. } => Some((*c, *p, *r_pow)),
            _ => None,
        }
    }

    /// ∫_a^b r^k J̃(r) dr for 0 ≤ a < b ≤ ∞ and k ∈ {0, 1}.
    pub fn moment(&self, k: i32, a: f64, b: f64) -> f64 {
        assert!(a >= 0.0 && b >= a);
        if b == a {
            return 0.0;
        }
        let kf = k as f64;
        match self {
            Kernel1d::Monomial { c, q, cut, support } => {
                let lo = a.max(*cut);
                let hi = b.min(*support);
                if hi <= lo {
                    return 0.0;
                }
                let e = q + kf + 1.0;
                if e == 0.0 {
                    c * (hi / lo).ln()
                } else {
                    c * (hi.powf(e) - lo.powf(e)) / e
                }
            }
            _ => {
                let mut total = 0.0;
                let mut hi_num = b;
                if let Some((c, p, from)) = self.power_region() {
                    let lo = a.max(from);
                    if b > lo {
                        let e = 1.0 + kf - p;
                        let part = if b.is_infinite() {
                            if e >= 0.0 {
                                return f64::INFINITY;
                            }
                            if lo == 0.0 {
                                return f64::INFINITY;
                            }
                            -c * lo.powf(e) / e
                        } else if lo == 0.0 {
                            if e <= 0.0 {
                                return f64::INFINITY;
                            }
                            c * b.powf(e) / e
                        } else if e == 0.0 {
                            c * (b / lo).ln()
                        } else {
                            c * (b.powf(e) - lo.powf(e)) / e
                        };
                        total += part;
                    }
                    hi_num = b.min(from);
                }
                if let Some(s) = self.support() {
                    hi_num = hi_num.min(s);
                }
                if hi_num > a {
                    if hi_num.is_infinite() {
                        return f64::INFINITY;
                    }
                    if a == 0.0 && !self.is_bounded() {
                        return f64::INFINITY;
                    }
                    let f = |r: f64| r.powi(k) * self.eval(r);
                    total += quad::integrate_breaks(&f, a, hi_num, &self.breaks(), QuadTol::tight()).value;
                }
                total
            }
        }
    }

    /// ∫_a^b J̃ for a < b (either sign), using evenness.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a >= 0.0 {
            self.moment(0, a, b)
        } else if b <= 0.0 {
            self.moment(0, -b, -a)
        } else {
            self.moment(0, 0.0, -a) + self.moment(0, 0.0, b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_disc_marginal_is_chord() {
        let j = Kernel::compact_radial(2, 1.0).unwrap();
        let m = marginal(&j, &[1.0, 0.0]).unwrap();
        for r in [0.0, 0.3, 0.7, 0.99] {
            let exact = 2.0 * (1.0f64 - r * r).sqrt();
            assert!((m.eval(r) - exact).abs() < 1e-9, "r={r}");
        }
        assert_eq!(m.eval(1.2), 0.0);
        // ∫ J̃ = area of the disc.
        assert!((m.integral(-1.0, 1.0) - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn radial_marginals_are_direction_free() {
        let j = Kernel::fractional(2, 0.75).unwrap().truncated(0.25).unwrap();
        let a = marginal(&j, &[1.0, 0.0]).unwrap();
        let t: f64 = 0.7;
        let b = marginal(&j, &[t.cos(), t.sin()]).unwrap();
        for r in [0.05, 0.2, 0.5, 2.0] {
            let (x, y) = (a.eval(r), b.eval(r));
            assert!((x - y).abs() <= 1e-9 * x, "r={r}: {x} vs {y}");
        }
    }

    #[test]
    fn fractional_marginal_power_law() {
        let s: f64 = 0.75;
        let j = Kernel::fractional(2, s).unwrap();
        let m = marginal(&j, &[0.0, 1.0]).unwrap();
        // c(s) = ∫ (1 + u²)^{-1-s} du = √π Γ(s + 1/2) / Γ(s + 1); for s = 3/4 use the Beta form numerically.
        let c = quad::integrate_to_infinity(&|u: f64| (1.0 + u * u).powf(-1.0 - s), 1.0, &[], Asymptote::Unknown, 0.0, QuadTol::tight()).value * 2.0
            + 2.0 * quad::integrate(&|u: f64| (1.0 + u * u).powf(-1.0 - s), 0.0, 1.0, QuadTol::tight()).value;
        let fit = (m.eval(0.5) / m.eval(2.0)).ln() / 4f64.ln();
        assert!((fit - (1.0 + 2.0 * s)).abs() < 1e-9);
        assert!((m.eval(1.0) - c).abs() < 1e-6 * c);
    }

    #[test]
    fn line_kernel_examples() {
        let j = Kernel::compact_radial(2, 1.0).unwrap();
        let l = line_kernel(&j, &[0.6, 0.8]).unwrap();
        assert!((l.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(l.eval(1.5), 0.0);
        let f = Kernel::fractional(2, 0.75).unwrap();
        let l = line_kernel(&f, &[1.0, 0.0]).unwrap();
        assert!((l.eval(2.0) - 2f64.powf(-2.5)).abs() < 1e-15);
        assert_eq!(l.eval(-2.0), l.eval(2.0));
    }

    #[test]
    fn power_moments() {
        let k = Kernel1d::power(1.0, 2.5);
        assert!((k.moment(1, 1.0, f64::INFINITY) - 2.0).abs() < 1e-14);
        assert!(k.moment(1, 0.0, 1.0).is_infinite());
        assert!((Kernel1d::power(1.0, 1.5).moment(1, 0.0, 1.0) - 2.0).abs() < 1e-14);
        assert!(Kernel1d::power(1.0, 2.0).moment(1, 1.0, f64::INFINITY).is_infinite());
        let b = Kernel1d::boxed(1.0, 1.0);
        assert!((b.moment(1, 0.0, f64::INFINITY) - 0.5).abs() < 1e-15);
        assert!((b.integral(-2.0, 0.5) - 1.5).abs() < 1e-15);
    }
}

//! Verification of (H1), (H2) and (H2*).
//!
//! (H2) is evaluated as a radial integral of J|h| ln|h| over B₁^c. (H2*) is
//! evaluated independently from quadrature values of ω₁ on unit shells:
//! with c_m = ∫_{m ≤ |h| < m+1} J|h| we have ω₁(1/n) = Σ_{m ≥ n} c_m, so the
//! partial sums of Σ ω₁(1/n)/n only need the shell masses and one tail value.
//! Summing over n first gives Σ ω₁(1/n)/n = ∫_{B₁^c} J|h| H_{⌊|h|⌋} dh with
//! harmonic numbers H_m ∈ [ln|h|, 1 + ln|h|], hence the sandwich
//! H2 ≤ H2* ≤ H2 + ω₁(1) whenever both are finite.

use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::quad::QuadTol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub pass: bool,
    pub m_j: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2Report {
    pub pass: bool,
    pub integral: Option<f64>,
    /// Cumulative integral over B_{2^k} \ B₁.
    pub refinement: Vec<f64>,
    pub growth: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2StarReport {
    pub pass: bool,
    pub sum: Option<f64>,
    /// Whether every ω₁(1/n) is finite.
    pub terms_finite: bool,
    /// Σ_{n ≤ 2^L} ω₁(1/n)/n for L = 1, 2, ... (only when the terms are finite).
    pub partial_sums: Vec<f64>,
    /// Σ_{n ≤ 2^L} ω₁^{(2^L)}(1/n)/n with the tail cut at |h| < 2^L.
    pub window_sums: Vec<f64>,
    /// Fitted p in ω₁(1/n)/n ≈ c n^{-p}.
    pub fitted_decay: Option<f64>,
    pub growth: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub kernel: String,
    pub h1: H1Report,
    pub h2: H2Report,
    pub h2star: H2StarReport,
    /// The (H2) and (H2*) verdicts coincide.
    pub agree: bool,
    /// H2 ≤ H2* ≤ H2 + ω₁(1), when both are finite.
    pub sandwich: Option<bool>,
    pub note: String,
}

/// Default number of unit shells used for the (H2*) series.
pub const H2STAR_SHELLS: usize = 1 << 15;

/// Margin on the fitted decay exponent: the series passes when p > 1 + margin.
pub const H2STAR_DECAY_MARGIN: f64 = 0.02;

pub fn check_hypotheses(j: &Kernel) -> HypothesisReport {
    check_hypotheses_with(j, QuadTol::default(), H2STAR_SHELLS)
}

/// Classify a monotone refinement sequence by the ratio of its increments.
pub fn classify_growth(seq: &[f64]) -> String {
    let d: Vec<f64> = seq.windows(2).map(|w| w[1] - w[0]).collect();
    if d.len() < 6 {
        return "undetermined".into();
    }
    let tail = &d[d.len() - 5..];
    if tail.iter().all(|x| x.abs() < 1e-300) {
        return "bounded".into();
    }
    let ratios: Vec<f64> = tail.windows(2).filter(|w| w[0].abs() > 0.0).map(|w| w[1] / w[0]).collect();
    if ratios.is_empty() {
        return "bounded".into();
    }
    let q = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if q < 0.9 {
        "bounded".into()
    } else if q < 1.3 {
        "logarithmic".into()
    } else {
        "power".into()
    }
}

pub fn check_hypotheses_with(j: &Kernel, tol: QuadTol, shells: usize) -> HypothesisReport {
    let shells = shells.next_power_of_two().max(64);
    let m_j = j.moment_mj(tol).ok();
    let h1 = H1Report { pass: m_j.is_some(), m_j };

    let h2i = j.h2_integral(tol);
    let h2 = H2Report {
        pass: !h2i.divergent,
        integral: if h2i.divergent { None } else { Some(h2i.value) },
        growth: if h2i.divergent { classify_growth(&h2i.refinement) } else { "bounded".into() },
        refinement: h2i.refinement,
    };

    // Unit-shell masses c_m, m = 1 .. shells-1.
    let c: Vec<f64> = (1..shells)
        .map(|m| j.radial_integral(&|r: f64| r, m as f64, Some(m as f64 + 1.0), 1.0, 1.0, false, tol).value)
        .collect();
    let cm = |m: usize| c[m - 1];

    // Window sums with the tail cut at 2^L.
    let mut window_sums = Vec::new();
    let mut l = 1;
    while (1usize << l) <= shells {
        let top = 1usize << l;
        let mut omega = 0.0;
        let mut sum = 0.0;
        for n in (1..top).rev() {
            omega += cm(n);
            sum += omega / n as f64;
        }
        window_sums.push(sum);
        l += 1;
    }

    let tail = j.omega1(1.0 / shells as f64, tol);
    let (h2star, sum) = match tail {
        Err(_) => {
            let growth = classify_growth(&window_sums);
            (
                H2StarReport {
                    pass: false,
                    sum: None,
                    terms_finite: false,
                    partial_sums: Vec::new(),
                    window_sums,
                    fitted_decay: None,
                    growth,
                },
                None,
            )
        }
        Ok(tail) => {
            let mut terms = vec![0.0; shells + 1];
            let mut omega = tail;
            terms[shells] = omega / shells as f64;
            for n in (1..shells).rev() {
                omega += cm(n);
                terms[n] = omega / n as f64;
            }
            let mut partial_sums = Vec::new();
            let mut acc = 0.0;
            for (n, t) in terms.iter().enumerate().skip(1) {
                acc += t;
                if n.is_power_of_two() && n > 1 {
                    partial_sums.push(acc);
                }
            }
            let a_n = terms[shells];
            let a_m = terms[shells / 8];
            let (pass, fitted, total) = if a_n <= 0.0 {
                (true, None, acc)
            } else {
                let p = -(a_n / a_m).ln() / 8f64.ln();
                if p > 1.0 + H2STAR_DECAY_MARGIN {
                    let n = shells as f64;
                    (true, Some(p), acc + a_n * n / (p - 1.0) - 0.5 * a_n)
                } else {
                    (false, Some(p), f64::INFINITY)
                }
            };
            let growth = if pass { "bounded".to_string() } else { classify_growth(&partial_sums) };
            (
                H2StarReport {
                    pass,
                    sum: if pass { Some(total) } else { None },
                    terms_finite: true,
                    partial_sums,
                    window_sums,
                    fitted_decay: fitted,
                    growth,
                },
                if pass { Some(total) } else { None },
            )
        }
    };

    let agree = h2.pass == h2star.pass;
    let sandwich = match (h2.integral, sum, j.omega1(1.0, tol).ok()) {
        (Some(a), Some(b), Some(w)) => {
            let slack = 1e-4 * (a.abs() + w.abs()).max(1e-12);
            Some(b >= a - slack && b <= a + w + slack)
        }
        _ => None,
    };
    let note = if !agree {
        "(H2) and (H2*) verdicts disagree: quadrature failure".to_string()
    } else if sandwich == Some(false) {
        "H2* sum outside [H2, H2 + omega1(1)]: quadrature failure".to_string()
    } else {
        String::new()
    };
    HypothesisReport {
        kernel: j.descriptor().to_string(),
        h1,
        h2,
        h2star,
        agree,
        sandwich,
        note,
    }
}

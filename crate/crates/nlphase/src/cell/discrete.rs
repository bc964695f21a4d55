//! Discrete profile energy on a window with constant tails.
//!
//! Cells `i = 0..n` of width Δ cover [−L, L]; the profile is −1 on every
//! cell left of the window and +1 on every cell right of it. With offset
//! weights `w_m` the energy per unit interface area is
//!
//! ```text
//! E(γ) = (Δ/4) Σ_{i,j} w_{j−i} (γ_j − γ_i)²                     (window × window)
//!      + (Δ/2) Σ_i [(1 + γ_i)² TL_i + (1 − γ_i)² TR_i]           (window × tails)
//!      + z Σ_{i=−1}^{n−1} (γ_{i+1} − γ_i)²                       (same-cell pairs)
//!      + TT + Δ Σ_i W(γ_i)
//! ```
//!
//! where `TL_i = Σ_{m > i} w_m`, `TR_i = Σ_{m ≥ n−i} w_m` and TT is the
//! constant left-tail/right-tail interaction.
//!
//! Two weight rules are used. Kernels of compact type take first-moment
//! weights `w_m = ∫_{cell m} |r| J̃ / (|m|Δ)` with `z = ∫_{|r|<Δ/2} |r| J̃ / 4`,
//! which integrate a single jump exactly. Power-law kernels, truncated or
//! not, take second-moment weights `w_m = ∫_{cell m} r² J̃ / (mΔ)²` with
//! `z = ∫_{|r|<Δ/2} r² J̃ / (4Δ)`, which are consistent on smooth profiles;
//! a jump has infinite energy there anyway.

use rustfft::num_complex::Complex64;

use crate::energy::Fft2;
use crate::kernels::Kernel1d;
use crate::potentials::DoubleWell;

/// Explicit offsets beyond the window, in multiples of the sample count.
const FAR_FACTOR: usize = 8;

pub(crate) struct Discretization {
    pub n: usize,
    pub dx: f64,
    /// w_m for m = 0..n (w_0 = 0).
    pub w: Vec<f64>,
    pub row: Vec<f64>,
    pub tl: Vec<f64>,
    pub tr: Vec<f64>,
    pub zero: f64,
    pub tail_tail: f64,
    plan: Fft2,
    spectrum: Vec<Complex64>,
}

fn second_moment_rule(k: &Kernel1d) -> bool {
    match k {
        Kernel1d::Power { .. } => true,
        Kernel1d::Monomial { .. } => false,
        Kernel1d::Marginal { power, .. } => power.is_some(),
    }
}

impl Discretization {
    pub fn new(k: &Kernel1d, n: usize, half_length: f64) -> Self {
        let dx = 2.0 * half_length / n as f64;
        let second = second_moment_rule(k);
        let order = if second { 2 } else { 1 };
        let cell = |m: usize| {
            let (a, b) = ((m as f64 - 0.5) * dx, (m as f64 + 0.5) * dx);
            k.moment(order, a, b) / (m as f64 * dx).powi(order)
        };
        let reach = match k.support() {
            Some(s) => ((s / dx + 0.5).ceil() as usize + 1).min(FAR_FACTOR * n),
            None => FAR_FACTOR * n,
        };
        let far: Vec<f64> = (0..=reach).map(|m| if m == 0 { 0.0 } else { cell(m) }).collect();
        let r_far = (reach as f64 + 0.5) * dx;
        // Beyond the explicit range the cell sums become integrals.
        let rest0 = k.moment(0, r_far, f64::INFINITY);
        let rest1 = k.moment(1, r_far, f64::INFINITY);
        // suffix[m] = Σ_{m' ≥ m} w_{m'}.
        let mut suffix = vec![0.0; reach + 2];
        suffix[reach + 1] = rest0;
        for m in (1..=reach).rev() {
            suffix[m] = suffix[m + 1] + far[m];
        }
        // Compact kernels end before the explicit range does.
        let tail = |m: usize| suffix.get(m).copied().unwrap_or(0.0);
        let tl: Vec<f64> = (0..n).map(|i| tail(i + 1)).collect();
        let tr: Vec<f64> = (0..n).map(|i| tail(n - i)).collect();
        // Ordered tail pairs at offset m > n: 2(m − n) of them, each with |Δγ|² = 4.
        let mut tt = 0.0;
        for (m, w) in far.iter().enumerate().skip(n + 1) {
            tt += (m - n) as f64 * w;
        }
        tt = 2.0 * dx * tt + 2.0 * (rest1 - n as f64 * dx * rest0);
        let zero = if second { 2.0 * k.moment(2, 0.0, 0.5 * dx) / (4.0 * dx) } else { 2.0 * k.moment(1, 0.0, 0.5 * dx) / 4.0 };
        let w: Vec<f64> = far[..n.min(far.len())].iter().copied().chain(std::iter::repeat(0.0)).take(n).collect();
        let total: f64 = w.iter().skip(1).sum();
        let mut row = vec![0.0; n];
        // row_i = Σ_{j in window} w_{|j−i|}, accumulated from the prefix sums.
        let mut prefix = vec![0.0; n + 1];
        for m in 0..n {
            prefix[m + 1] = prefix[m] + w[m];
        }
        for (i, r) in row.iter_mut().enumerate() {
            *r = prefix[i + 1] + prefix[n - i] - w[0];
        }
        debug_assert!(row.iter().all(|r| *r <= 2.0 * total + 1e-9));
        let m = (2 * n).next_power_of_two();
        let plan = Fft2::new(m, 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for d in 0..n {
            buf[d] = Complex64::new(w[d], 0.0);
            if d > 0 {
                buf[m - d] = Complex64::new(w[d], 0.0);
            }
        }
        plan.forward(&mut buf);
        Discretization { n, dx, w, row, tl, tr, zero, tail_tail: tt.max(0.0), plan, spectrum: buf }
    }

    /// (w * γ)_i over the window.
    fn convolve(&self, g: &[f64]) -> Vec<f64> {
        let mut s = self.plan.spectrum(g, self.n, 1);
        for (c, w) in s.iter_mut().zip(&self.spectrum) {
            *c *= w;
        }
        self.plan.inverse(&mut s);
        s[..self.n].iter().map(|c| c.re).collect()
    }

    /// Energy and its gradient.
    pub fn energy_grad(&self, g: &[f64], w: &DoubleWell) -> (f64, Vec<f64>) {
        let n = self.n;
        let dx = self.dx;
        let conv = self.convolve(g);
        let mut lap = vec![0.0; n];
        let mut terms = vec![0.0; n];
        let mut grad = vec![0.0; n];
        for i in 0..n {
            lap[i] = self.row[i] * g[i] - conv[i];
            let (l, r) = (1.0 + g[i], 1.0 - g[i]);
            let left = if i == 0 { -1.0 } else { g[i - 1] };
            let right = if i + 1 == n { 1.0 } else { g[i + 1] };
            let d = g[i] - left;
            terms[i] = 0.5 * dx * g[i] * lap[i] + 0.5 * dx * (l * l * self.tl[i] + r * r * self.tr[i]) + self.zero * d * d + dx * w.eval(g[i]);
            grad[i] = dx * lap[i] + dx * (l * self.tl[i] - r * self.tr[i]) + 2.0 * self.zero * (2.0 * g[i] - left - right) + dx * w.deriv(g[i]);
        }
        let last = 1.0 - g[n - 1];
        let e = pairwise(&terms) + self.zero * last * last + self.tail_tail;
        (e, grad)
    }

    /// O(n²) evaluation of the same energy, for testing.
    #[cfg(test)]
    pub fn energy_direct(&self, g: &[f64], w: &DoubleWell) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                let m = i.abs_diff(j);
                e += 0.25 * self.dx * self.w[m] * (g[j] - g[i]).powi(2);
            }
            e += 0.5 * self.dx * ((1.0 + g[i]).powi(2) * self.tl[i] + (1.0 - g[i]).powi(2) * self.tr[i]);
            e += self.dx * w.eval(g[i]);
        }
        let mut prev = -1.0;
        for v in g.iter().chain(std::iter::once(&1.0)) {
            e += self.zero * (v - prev).powi(2);
            prev = *v;
        }
        e + self.tail_tail
    }
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise(a) + pairwise(b)
}

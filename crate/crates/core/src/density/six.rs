//! Series for the absolutely-continuous density in R^6.
//!
//! With intensity a (= λt or its limit) and u = r²/R², the density is
//! e^{-a}/(π³R⁶) · B(a, u) where
//!
//! B = 16a(1 − 5u/6)
//!   + ½ Σ_{n≥2} aⁿ (n+1)! Σ_{k=0}^{n+1} (k+1)(k+2)(n+2k+1) / (3^k (n−k+1)! (n+k−2)!)
//!     · F(−(n+k−2), k+3; 3; u).
//!
//! The hypergeometric polynomials are evaluated through Euler's
//! transformation F(−(n+k−2), k+3; 3; u) = (1−u)^{n−2} F(−k, n+k+1; 3; u):
//! the original form cancels catastrophically as u → 1, the transformed
//! one has degree k and stays accurate to a few ulps.

use crate::specfun::f_terminating_unchecked;

/// Truncation control for the outer series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tail_tol: f64,
    pub n_max: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tail_tol: 1e-12,
            n_max: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BracketValue {
    /// e^{-a} · B(a, u)
    pub value: f64,
    /// estimate of the neglected tail, same scale as `value`
    pub tail: f64,
    pub terms: usize,
}

/// e^{-a} B(a, u), all exponentials combined in log space.
pub(crate) fn damped_bracket(a: f64, u: f64, ctl: &SeriesControl) -> BracketValue {
    let ln_a = a.ln();
    let lead = (ln_a + 16f64.ln() - a).exp() * (1.0 - 5.0 / 6.0 * u);
    let ln_one_minus_u = if u < 1.0 { (1.0 - u).ln() } else { f64::NEG_INFINITY };

    let mut sum = lead;
    let mut ln_fact = 0.0; // ln (n−2)!
    let mut small_run = 0;
    let mut last = f64::INFINITY;
    let mut prev = f64::INFINITY;
    let mut n_used = 1;
    for n in 2..=ctl.n_max.max(2) {
        if n > 2 {
            ln_fact += ((n - 2) as f64).ln();
        }
        let nf = n as f64;
        let power = if n == 2 { 0.0 } else { (nf - 2.0) * ln_one_minus_u };
        let ln_weight = -a + nf * ln_a - ln_fact + power;
        let term = if ln_weight == f64::NEG_INFINITY {
            0.0
        } else {
            0.5 * ln_weight.exp() * inner_sum(n, u)
        };
        sum += term;
        n_used = n;
        prev = last;
        last = term.abs();
        if last < ctl.rel_tail_tol * sum.abs() {
            small_run += 1;
            if small_run == 3 {
                return BracketValue {
                    value: sum,
                    tail: last,
                    terms: n_used,
                };
            }
        } else {
            small_run = 0;
        }
    }
    // cap reached: geometric bound from the last ratio when the terms decay
    let q = if prev.is_finite() && prev > 0.0 { last / prev } else { f64::INFINITY };
    let tail = if q < 1.0 { last * q / (1.0 - q) } else { f64::INFINITY };
    BracketValue {
        value: sum,
        tail,
        terms: n_used,
    }
}

/// Σ_k (n−2)!(n+1)! / (3^k (n−k+1)! (n+k−2)!) · (k+1)(k+2)(n+2k+1) · F(−k, n+k+1; 3; u)
///
/// The factorial ratio starts at 1 for k = 0 and is advanced by
/// (n−k+1) / (3(n+k−1)), so no factorial is ever formed.
fn inner_sum(n: usize, u: f64) -> f64 {
    let nf = n as f64;
    let mut ratio = 1.0;
    let mut acc = 0.0;
    for k in 0..=n + 1 {
        let kf = k as f64;
        let poly = f_terminating_unchecked(k as u32, nf + kf + 1.0, 3.0, u);
        acc += ratio * (kf + 1.0) * (kf + 2.0) * (nf + 2.0 * kf + 1.0) * poly;
        ratio *= (nf - kf + 1.0) / (3.0 * (nf + kf - 1.0));
    }
    acc
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dd::DoubleDouble as Dd;

    /// Untransformed double sum in double-double, n ≤ n_max, factorials built directly.
    pub(crate) fn brute_force_bracket(a: f64, u: f64, n_max: usize) -> f64 {
        let fact = |n: usize| (1..=n).fold(Dd::from(1.0), |acc, i| acc * Dd::from(i as f64));
        let ad = Dd::from(a);
        let ud = Dd::from(u);
        let mut total = Dd::from(16.0) * ad * (Dd::from(1.0) - Dd::from(5.0) / Dd::from(6.0) * ud);
        let mut a_pow = ad;
        for n in 2..=n_max {
            a_pow = a_pow * ad;
            let mut inner = Dd::from(0.0);
            for k in 0..=n + 1 {
                let big_m = n + k - 2;
                let mut term = Dd::from(1.0);
                let mut f = Dd::from(1.0);
                for j in 0..big_m {
                    term = term * Dd::from(j as f64 - big_m as f64) * Dd::from((k + 3 + j) as f64)
                        / Dd::from((3 + j) as f64)
                        / Dd::from((j + 1) as f64)
                        * ud;
                    f = f + term;
                }
                let coef = Dd::from(((k + 1) * (k + 2) * (n + 2 * k + 1)) as f64)
                    / (Dd::from(3f64.powi(k as i32)) * fact(n + 1 - k) * fact(n + k - 2));
                inner = inner + coef * f;
            }
            total = total + Dd::from(0.5) * a_pow * fact(n + 1) * inner;
        }
        total.to_f64() * (-a).exp()
    }

    #[test]
    fn matches_brute_force() {
        let ctl = SeriesControl::default();
        for a in [0.5, 1.0, 4.0, 8.0] {
            for i in 0..20 {
                let u = ((i as f64 + 0.5) / 20.0).powi(2);
                let got = damped_bracket(a, u, &ctl);
                let want = brute_force_bracket(a, u, 60);
                assert!(
                    (got.value - want).abs() <= 1e-10 * want.abs(),
                    "a={a} u={u}: {} vs {want}",
                    got.value
                );
            }
        }
    }

    #[test]
    fn frozen_exact_values() {
        // From exact rational evaluation of the untransformed double sum
        // (n < 60) multiplied by e^{-a}.
        let ctl = SeriesControl::default();
        let b = damped_bracket(1.0, 0.5, &ctl).value / (-1f64).exp();
        assert!((b - 19.234778803096038).abs() < 1e-13 * 19.23);
        let b = damped_bracket(8.0, 0.99, &ctl).value / (-8f64).exp();
        assert!((b - 24.26300024596366).abs() < 1e-12 * 24.26);
    }

    #[test]
    fn boundary_keeps_only_low_order_terms() {
        let ctl = SeriesControl::default();
        let at_one = damped_bracket(3.0, 1.0, &ctl);
        assert!(at_one.value > 0.0);
        assert!(at_one.terms <= 5);
    }

    #[test]
    fn cap_reports_tail() {
        let ctl = SeriesControl {
            rel_tail_tol: 1e-12,
            n_max: 6,
        };
        let b = damped_bracket(8.0, 0.1, &ctl);
        assert!(b.tail > 0.0);
        assert_eq!(b.terms, 6);
    }
}

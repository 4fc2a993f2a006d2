//! Special-function kernel: modified Bessel functions of order 0 and 1,
//! terminating Gauss hypergeometric polynomials and Γ at half-integers.
//!
//! Everything here is pure and reentrant.

use crate::error::{Error, Result};

/// Accuracy controls for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 500,
        }
    }
}

impl Accuracy {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !rel_tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive and finite, got {rel_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be >= 1".into()));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

/// Below this argument the power series is used, above it the asymptotic expansion.
const SERIES_LIMIT: f64 = 20.0;

fn check_arg(z: f64) -> Result<()> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite, got {z}")));
    }
    if z < 0.0 {
        return Err(Error::Domain(format!(
            "Bessel argument must be nonnegative, got {z}"
        )));
    }
    Ok(())
}

/// Σ_k (z/2)^{2k+ν} / (k! (k+ν)!) for ν ∈ {0, 1}. All terms are positive.
fn power_series(z: f64, order: u32, acc: &Accuracy) -> f64 {
    let half = 0.5 * z;
    let q = half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    for k in 1..acc.max_terms {
        let k = k as f64;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term <= acc.rel_tol * 1e-4 * sum {
            break;
        }
    }
    sum
}

/// e^{-z} I_ν(z) from the large-argument expansion
/// 1/√(2πz) · Σ_k (-1)^k Π_{j≤k} (4ν² - (2j-1)²) / (k! (8z)^k).
fn asymptotic_scaled(z: f64, order: u32, acc: &Accuracy) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev_abs = f64::INFINITY;
    for k in 1..acc.max_terms {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * k as f64 * z);
        let abs = term.abs();
        // divergent tail: stop before the terms start growing
        if abs > prev_abs {
            break;
        }
        sum += term;
        if abs <= acc.rel_tol * 1e-4 * sum.abs() {
            break;
        }
        prev_abs = abs;
    }
    sum / (2.0 * std::f64::consts::PI).sqrt() / z.sqrt()
}

/// Modified Bessel function I₀(z) = Σ (z/2)^{2k} / (k!)².
///
/// Overflows to infinity for z beyond roughly 713; use [`bessel_i0_scaled`] there.
pub fn bessel_i0(z: f64) -> Result<f64> {
    bessel_i0_with(z, &Accuracy::default())
}

pub fn bessel_i0_with(z: f64, acc: &Accuracy) -> Result<f64> {
    check_arg(z)?;
    if z <= SERIES_LIMIT {
        Ok(power_series(z, 0, acc))
    } else {
        Ok(asymptotic_scaled(z, 0, acc) * z.exp())
    }
}

/// Modified Bessel function I₁(z) = Σ (z/2)^{2k+1} / (k! (k+1)!).
pub fn bessel_i1(z: f64) -> Result<f64> {
    bessel_i1_with(z, &Accuracy::default())
}

pub fn bessel_i1_with(z: f64, acc: &Accuracy) -> Result<f64> {
    check_arg(z)?;
    if z <= SERIES_LIMIT {
        Ok(power_series(z, 1, acc))
    } else {
        Ok(asymptotic_scaled(z, 1, acc) * z.exp())
    }
}

/// Exponentially scaled e^{-z} I₀(z); finite for every representable z ≥ 0.
pub fn bessel_i0_scaled(z: f64) -> Result<f64> {
    check_arg(z)?;
    let acc = Accuracy::default();
    if z <= SERIES_LIMIT {
        Ok(power_series(z, 0, &acc) * (-z).exp())
    } else {
        Ok(asymptotic_scaled(z, 0, &acc))
    }
}

/// Exponentially scaled e^{-z} I₁(z).
pub fn bessel_i1_scaled(z: f64) -> Result<f64> {
    check_arg(z)?;
    let acc = Accuracy::default();
    if z <= SERIES_LIMIT {
        Ok(power_series(z, 1, &acc) * (-z).exp())
    } else {
        Ok(asymptotic_scaled(z, 1, &acc))
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Terminating Gauss hypergeometric polynomial
/// F(-M, b; γ; z) = Σ_{k=0}^{M} (-M)_k (b)_k / (γ)_k · z^k / k!.
///
/// Terms follow the recurrence
/// `term_{k+1} = term_k · (k - M)(b + k) z / ((γ + k)(k + 1))`,
/// evaluated in double-double arithmetic. The alternating terms can cancel
/// far beyond what double-double resolves; when the running error bound
/// exceeds 1e-14 of the result the polynomial is re-evaluated exactly in
/// rational arithmetic (every finite f64 is a dyadic rational).
pub fn gauss_f_terminating(m: u32, b: f64, gamma: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!(
            "hypergeometric argument must lie in [0, 1], got {z}"
        )));
    }
    if !b.is_finite() || !gamma.is_finite() {
        return Err(Error::Domain("hypergeometric parameters must be finite".into()));
    }
    for k in 0..m {
        if gamma + k as f64 == 0.0 {
            return Err(Error::Domain(format!(
                "pole of (γ)_k at k={k} for γ={gamma}"
            )));
        }
    }
    let (value, bound) = f_terminating_dd(m, b, gamma, z);
    if bound <= 1e-14 * value.abs() {
        Ok(value)
    } else {
        Ok(f_terminating_exact(m, b, gamma, z))
    }
}

/// Double-double evaluation together with an a-priori bound on its absolute error.
fn f_terminating_dd(m: u32, b: f64, gamma: f64, z: f64) -> (f64, f64) {
    use crate::dd::DoubleDouble as Dd;
    // unit roundoff of double-double, with headroom for the few operations per step
    const U: f64 = 1.3e-32;
    let mf = m as f64;
    let zd = Dd::from(z);
    let mut term = Dd::from(1.0);
    let mut sum = term;
    let mut bound = 0.0;
    for k in 0..m {
        let kf = k as f64;
        let num = Dd::from(kf - mf) * Dd::from(b) + Dd::from(kf - mf) * Dd::from(kf);
        let den = Dd::from(gamma) * Dd::from(kf + 1.0) + Dd::from(kf) * Dd::from(kf + 1.0);
        term = term * num * zd / den;
        sum = sum + term;
        bound += term.abs().to_f64() * (8.0 * (kf + 1.0) + 2.0) * U;
    }
    let value = sum.to_f64();
    (value, bound + f64::EPSILON * 0.5 * value.abs())
}

fn f_terminating_exact(m: u32, b: f64, gamma: f64, z: f64) -> f64 {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};
    let exact = |x: f64| BigRational::from_float(x).expect("finite f64 converts exactly");
    let (b, gamma, z) = (exact(b), exact(gamma), exact(z));
    let mut term = BigRational::from_integer(BigInt::from(1));
    let mut sum = term.clone();
    for k in 0..m {
        let kr = BigRational::from_integer(BigInt::from(k));
        let mr = BigRational::from_integer(BigInt::from(m));
        let k1 = BigRational::from_integer(BigInt::from(k + 1));
        term = term * (&kr - mr) * (&b + &kr) * &z / ((&gamma + &kr) * k1);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    sum.to_f64().unwrap_or(f64::NAN)
}

/// Fast path for well-conditioned polynomials: plain recurrence with compensated summation.
pub(crate) fn f_terminating_unchecked(m: u32, b: f64, gamma: f64, z: f64) -> f64 {
    let mf = m as f64;
    let mut term = 1.0;
    let mut acc = CompensatedSum::default();
    acc.add(term);
    for k in 0..m {
        let kf = k as f64;
        term *= (kf - mf) * (b + kf) * z / ((gamma + kf) * (kf + 1.0));
        if term == 0.0 {
            break;
        }
        acc.add(term);
    }
    acc.value()
}

/// Γ(two_n / 2) by the recurrence Γ(x + 1) = x Γ(x) from Γ(1/2) = √π or Γ(1) = 1.
///
/// `two_n = 0` is the pole of Γ at zero and yields +∞.
pub fn gamma_half_integer(two_n: u32) -> f64 {
    if two_n == 0 {
        return f64::INFINITY;
    }
    let (mut g, mut x) = if two_n % 2 == 1 {
        (std::f64::consts::PI.sqrt(), 0.5)
    } else {
        (1.0, 1.0)
    };
    let target = two_n as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area of the unit sphere in R^m, 2π^{m/2} / Γ(m/2).
pub fn unit_sphere_area(m: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(m as f64 / 2.0) / gamma_half_integer(m as u32)
}

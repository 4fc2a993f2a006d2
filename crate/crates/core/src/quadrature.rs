//! Boundary-aware integration of isotropic densities over balls in R^m.
//!
//! Everything reduces to one-dimensional adaptive Gauss–Kronrod (7/15)
//! integration in the radius. Densities with an inverse-square-root blowup
//! at the boundary are integrated after the substitution r = r_max·sin θ,
//! which turns the 1/√(r_max² − r²) factor into a bounded one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::specfun::unit_sphere_area;

/// Outcome of a successful integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub nodes_used: usize,
}

/// Subdivision cap for the adaptive driver.
pub const MAX_INTERVALS: usize = 4000;

// Kronrod abscissae and weights; odd-indexed abscissae are the Gauss 7-point nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with the QUADPACK error rescaling.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let (res_k, res_abs, res_asc) = (res_k * half, res_abs * half.abs(), res_asc * half.abs());
    let mut err = (res_k - res_g * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel {
        a,
        b,
        value: res_k,
        error: err,
    }
}

/// Adaptive Gauss–Kronrod integration of `f` over [a, b].
///
/// Succeeds once the summed error estimate is at most `tol`, or once it has
/// reached the floating-point floor of the summed panel values.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            nodes_used: 0,
        });
    }
    let first = kronrod15(&f, a, b);
    let mut nodes = 15;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut value = first.value;
    let mut error = first.error;
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonConvergence {
                estimate: value,
                abs_error: error,
                tol,
            });
        }
        let floor = 64.0 * f64::EPSILON * value.abs();
        if error <= tol || error <= floor {
            return Ok(QuadResult {
                value,
                abs_error_estimate: error,
                nodes_used: nodes,
            });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::NonConvergence {
                estimate: value,
                abs_error: error,
                tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // panel can no longer be split
            return Err(Error::NonConvergence {
                estimate: value,
                abs_error: error,
                tol,
            });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        nodes += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // re-sum periodically so the running totals do not drift
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// ∫₀^{r_max} f(r) · S_m r^{m−1} dr with S_m = 2π^{m/2}/Γ(m/2).
///
/// For m = 1 the surface factor is 2: the integral covers (−r_max, r_max) for even `f`.
pub fn integrate_radial<F: Fn(f64) -> f64>(
    f: F,
    m: usize,
    r_max: f64,
    singular_boundary: bool,
    tol: f64,
) -> Result<QuadResult> {
    integrate_radial_to(f, m, r_max, r_max, singular_boundary, tol)
}

/// Like [`integrate_radial`] but over [0, upper] with `upper ≤ r_max`; the
/// substitution, when requested, stays anchored at `r_max`.
pub fn integrate_radial_to<F: Fn(f64) -> f64>(
    f: F,
    m: usize,
    r_max: f64,
    upper: f64,
    singular_boundary: bool,
    tol: f64,
) -> Result<QuadResult> {
    if m == 0 {
        return Err(Error::InvalidParameter("dimension m must be >= 1".into()));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidParameter(format!("r_max must be positive, got {r_max}")));
    }
    if !(0.0..=r_max).contains(&upper) {
        return Err(Error::Domain(format!(
            "upper limit {upper} outside [0, {r_max}]"
        )));
    }
    let area = unit_sphere_area(m);
    let power = (m - 1) as i32;
    if singular_boundary {
        let theta_max = if upper == r_max {
            std::f64::consts::FRAC_PI_2
        } else {
            (upper / r_max).asin()
        };
        integrate(
            |theta: f64| {
                let (s, c) = theta.sin_cos();
                let r = r_max * s;
                f(r) * area * r.powi(power) * r_max * c
            },
            0.0,
            theta_max,
            tol,
        )
    } else {
        integrate(|r: f64| f(r) * area * r.powi(power), 0.0, upper, tol)
    }
}

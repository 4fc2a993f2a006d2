//! Transition densities p(x, t) and stationary densities q(x) of the
//! symmetric random flight, their radial profiles and radial CDFs.
//!
//! Every density is isotropic, so queries take the radius r = ‖x‖ (for
//! m = 1, r = |x|). The singular part is reported as a boundary mass.
//! Transition formulas are written in (λ, c, t) and stationary formulas in
//! (a, ρ); Bessel factors are always combined as e^{z − λt}·(e^{-z} I_ν(z)).

mod six;

use std::f64::consts::PI;

use rayon::prelude::*;

pub use six::SeriesControl;

use crate::error::{Error, Result};
use crate::model::{DensityEval, FlightParams, Law, RadialProfile, StationaryParams};
use crate::quadrature::{integrate, QuadResult};
use crate::specfun::{bessel_i0_scaled, bessel_i1_scaled, unit_sphere_area};

/// Largest intensity a for which the R^3 small-intensity expansion is accepted.
pub const R3_MAX_INTENSITY: f64 = 0.1;

/// Relative width of the saturation band at a divergent boundary.
pub const BOUNDARY_BAND: f64 = 1e-12;

/// Absolute tolerance used when integrating densities.
pub const DENSITY_QUAD_TOL: f64 = 1e-12;

fn check_dimension(m: usize) -> Result<()> {
    match m {
        1 | 2 | 3 | 4 | 6 => Ok(()),
        _ => Err(Error::UnsupportedDimension(m)),
    }
}

/// Whether the absolutely-continuous density tends to +∞ at the boundary.
pub fn diverges_at_boundary(m: usize) -> bool {
    matches!(m, 2 | 3)
}

/// Dimensions whose AC density is written with a 1/√(R² − r²) factor.
fn has_chord_factor(m: usize) -> bool {
    matches!(m, 1 | 2 | 3)
}

/// √(R² − r²) without cancellation.
#[inline]
fn chord(big_r: f64, r: f64) -> f64 {
    ((big_r - r) * (big_r + r)).sqrt()
}

/// ln((R + r)/(R − r)) / r given s = √(R² − r²), with its limit 2/R at the origin.
#[inline]
fn log_ratio_over_r(big_r: f64, r: f64, s: f64) -> f64 {
    if r == 0.0 {
        2.0 / big_r
    } else if r < 0.5 * big_r {
        2.0 * (r / big_r).atanh() / r
    } else {
        // (R + r)/(R − r) = (R + r)²/s², free of cancellation near the edge
        2.0 * ((big_r + r) / s).ln() / r
    }
}

/// e^{z−shift}·[s·I₀(z) + R·I₁(z)] with z ≥ 0.
#[inline]
fn telegraph_bracket(z: f64, shift: f64, big_r: f64, s: f64) -> f64 {
    let i0 = bessel_i0_scaled(z).expect("finite nonnegative argument");
    let i1 = bessel_i1_scaled(z).expect("finite nonnegative argument");
    (z - shift).exp() * (s * i0 + big_r * i1)
}

/// AC transition density at 0 ≤ r < ct, literal in (λ, c, t), with s = √((ct)² − r²).
///
/// For m ∈ {1, 2, 3} the value returned is s·p, which stays finite at the edge.
fn transition_ac(fp: &FlightParams, r: f64, s: f64, ctl: &SeriesControl) -> (f64, f64) {
    let FlightParams { m, c, lambda, t } = *fp;
    let ct = c * t;
    let lt = lambda * t;
    match m {
        1 => {
            let z = lambda / c * s;
            (lambda / (2.0 * c) * telegraph_bracket(z, lt, ct, s), 0.0)
        }
        2 => (lambda / (2.0 * PI * c) * (-lt + lambda / c * s).exp(), 0.0),
        3 => {
            let v = (-lt).exp()
                * (lambda / (4.0 * PI * c * c * t) * log_ratio_over_r(ct, r, s) * s
                    + lambda * lambda / (2.0 * PI * PI * c * c)
                    + lambda.powi(3) / (8.0 * PI * c.powi(3)) * s);
            (v, 0.0)
        }
        4 => {
            let frac = (ct - r) * (ct + r) / (ct * ct);
            let v = lt / (PI * PI * ct.powi(4))
                * (2.0 + lt * frac)
                * (-lambda / (c * c * t) * r * r).exp();
            (v, 0.0)
        }
        6 => {
            let u = (r / ct).powi(2);
            let b = six::damped_bracket(lt, u, ctl);
            let scale = 1.0 / (PI.powi(3) * ct.powi(6));
            (scale * b.value, scale * b.tail)
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

/// AC stationary density at 0 ≤ r < ρ, literal in (a, ρ); same convention as [`transition_ac`].
fn stationary_ac(sp: &StationaryParams, r: f64, s: f64, ctl: &SeriesControl) -> (f64, f64) {
    let StationaryParams { m, a, rho } = *sp;
    match m {
        1 => {
            let z = a / rho * s;
            (a / (2.0 * rho) * telegraph_bracket(z, a, rho, s), 0.0)
        }
        2 => (a / (2.0 * PI * rho) * (-a + a / rho * s).exp(), 0.0),
        3 => {
            let v = (-a).exp()
                * (a / (4.0 * PI * rho * rho) * log_ratio_over_r(rho, r, s) * s
                    + a * a / (2.0 * PI * PI * rho * rho)
                    + a.powi(3) / (8.0 * PI * rho.powi(3)) * s);
            (v, 0.0)
        }
        4 => {
            let frac = (rho - r) * (rho + r) / (rho * rho);
            let v = a / (PI * PI * rho.powi(4))
                * (2.0 + a * frac)
                * (-a / (rho * rho) * r * r).exp();
            (v, 0.0)
        }
        6 => {
            let u = (r / rho).powi(2);
            let b = six::damped_bracket(a, u, ctl);
            let scale = 1.0 / (PI.powi(3) * rho.powi(6));
            (scale * b.value, scale * b.tail)
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

/// A validated law ready for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator {
    law: Law,
    ctl: SeriesControl,
}

impl Evaluator {
    pub fn new(law: &Law) -> Result<Self> {
        Self::with_control(law, SeriesControl::default())
    }

    pub fn with_control(law: &Law, ctl: SeriesControl) -> Result<Self> {
        law.validate()?;
        check_dimension(law.dim())?;
        if let Law::Stationary(sp) = law {
            if sp.m == 3 && sp.a > R3_MAX_INTENSITY {
                return Err(Error::AsymptoticValidity {
                    a: sp.a,
                    limit: R3_MAX_INTENSITY,
                });
            }
        }
        Ok(Self { law: *law, ctl })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    /// Formula value at (r, s): s·p for m ∈ {1, 2, 3}, p otherwise, plus a tail estimate.
    fn formula(&self, r: f64, s: f64) -> (f64, f64) {
        match &self.law {
            Law::Transition(fp) => transition_ac(fp, r, s, &self.ctl),
            Law::Stationary(sp) => stationary_ac(sp, r, s, &self.ctl),
        }
    }

    /// Raw AC value and tail estimate; `r` must lie in [0, R).
    fn ac_raw(&self, r: f64) -> (f64, f64) {
        let big_r = self.law.support_radius();
        let s = chord(big_r, r);
        let (v, tail) = self.formula(r, s);
        if !has_chord_factor(self.law.dim()) {
            return (v, tail);
        }
        if s > 0.0 {
            (v / s, tail / s)
        } else {
            // only m = 1 reaches here unsaturated; I₁(z)/s → λ/(2c) as s → 0
            let a = self.law.intensity();
            (a / (2.0 * big_r) * (-a).exp() * (1.0 + a / 2.0), 0.0)
        }
    }

    /// AC density; zero outside the open ball, saturated near a divergent edge.
    pub fn ac(&self, r: f64) -> f64 {
        let big_r = self.law.support_radius();
        if !(r < big_r) {
            return 0.0;
        }
        let m = self.law.dim();
        let r = if diverges_at_boundary(m) {
            r.min(big_r * (1.0 - BOUNDARY_BAND))
        } else {
            r
        };
        self.ac_raw(r.abs()).0
    }

    /// Radial mass element in θ = arcsin(r/R): dP/dθ of the AC component.
    ///
    /// Uses s = R cos θ directly, so it is bounded and exact up to the edge.
    pub fn polar_mass_density(&self, theta: f64) -> f64 {
        let m = self.law.dim();
        let big_r = self.law.support_radius();
        let (sin, cos) = theta.sin_cos();
        let (r, s) = (big_r * sin, (big_r * cos).max(0.0));
        let area = unit_sphere_area(m) * r.powi(m as i32 - 1);
        let (v, _) = self.formula(r, s);
        if has_chord_factor(m) {
            area * v
        } else {
            area * v * big_r * cos
        }
    }

    /// AC mass of the shell between θ₀ and θ₁ with θ = arcsin(r/R).
    pub fn polar_mass(&self, theta0: f64, theta1: f64, tol: f64) -> Result<QuadResult> {
        integrate(|th| self.polar_mass_density(th), theta0, theta1, tol)
    }

    pub fn eval(&self, r: f64) -> Result<DensityEval> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be finite and >= 0, got {r}")));
        }
        let m = self.law.dim();
        let big_r = self.law.support_radius();
        let mut out = DensityEval {
            radius: r,
            ac_density: 0.0,
            singular_mass: self.law.singular_mass(),
            support_radius: big_r,
            in_support: r < big_r,
            boundary_singular: false,
            asymptotic: m == 3,
            truncation_error: 0.0,
        };
        if !out.in_support {
            return Ok(out);
        }
        let edge = big_r * (1.0 - BOUNDARY_BAND);
        let query = if diverges_at_boundary(m) && r >= edge {
            out.boundary_singular = true;
            edge
        } else {
            r
        };
        let (v, tail) = self.ac_raw(query);
        out.ac_density = v.max(0.0);
        out.truncation_error = tail;
        Ok(out)
    }

    /// ∫ AC over the ball, i.e. the probability of at least one switch.
    pub fn ac_mass(&self) -> Result<QuadResult> {
        self.polar_mass(0.0, std::f64::consts::FRAC_PI_2, DENSITY_QUAD_TOL)
    }
}

/// Transition density p(x, t) at ‖x‖ = r.
pub fn transition_density(fp: &FlightParams, r: f64) -> Result<DensityEval> {
    Evaluator::new(&Law::Transition(*fp))?.eval(r)
}

/// Stationary density q(x) at ‖x‖ = r.
pub fn stationary_density(sp: &StationaryParams, r: f64) -> Result<DensityEval> {
    Evaluator::new(&Law::Stationary(*sp))?.eval(r)
}

/// Density of either law at radius r.
pub fn density(law: &Law, r: f64) -> Result<DensityEval> {
    Evaluator::new(law)?.eval(r)
}

/// AC density on the open grid r_i = (i + ½)·R/N, i = 0..N.
pub fn radial_profile(law: &Law, grid_size: usize) -> Result<RadialProfile> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid_size must be >= 2, got {grid_size}"
        )));
    }
    let ev = Evaluator::new(law)?;
    let big_r = law.support_radius();
    let step = big_r / grid_size as f64;
    let radii: Vec<f64> = (0..grid_size).map(|i| (i as f64 + 0.5) * step).collect();
    let values = radii
        .par_iter()
        .map(|&r| ev.eval(r).map(|d| d.ac_density))
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile {
        m: law.dim(),
        radii,
        values,
        singular_mass: law.singular_mass(),
        support_radius: big_r,
        boundary_divergent: diverges_at_boundary(law.dim()),
    })
}

/// Normalization of the radial CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMode {
    /// P(‖X‖ ≤ r, at least one switch)
    Joint,
    /// P(‖X‖ ≤ r | at least one switch)
    Conditional,
}

/// Radial CDF of the absolutely-continuous component.
pub fn radial_cdf(law: &Law, r: f64, mode: CdfMode) -> Result<f64> {
    let ev = Evaluator::new(law)?;
    let big_r = law.support_radius();
    if !(0.0..=big_r).contains(&r) {
        return Err(Error::Domain(format!("radius {r} outside [0, {big_r}]")));
    }
    let theta = if r == big_r {
        std::f64::consts::FRAC_PI_2
    } else {
        (r / big_r).asin()
    };
    let joint = ev.polar_mass(0.0, theta, DENSITY_QUAD_TOL)?.value;
    match mode {
        CdfMode::Joint => Ok(joint),
        CdfMode::Conditional => Ok(joint / ev.ac_mass()?.value),
    }
}

/// Radial CDF tabulated on a uniform grid in θ = arcsin(r/R) for bulk lookups.
///
/// Each panel is integrated adaptively; lookups interpolate in θ,
/// where the CDF is smooth even for densities that diverge at the boundary.
#[derive(Debug, Clone)]
pub struct RadialCdfTable {
    support_radius: f64,
    step: f64,
    cumulative: Vec<f64>,
    slope: Vec<f64>,
}

impl RadialCdfTable {
    pub fn new(law: &Law, panels: usize) -> Result<Self> {
        let ev = Evaluator::new(law)?;
        let panels = panels.max(1);
        let big_r = law.support_radius();
        let step = std::f64::consts::FRAC_PI_2 / panels as f64;
        let pieces = (0..panels)
            .into_par_iter()
            .map(|i| {
                let lo = i as f64 * step;
                let hi = if i + 1 == panels {
                    std::f64::consts::FRAC_PI_2
                } else {
                    (i + 1) as f64 * step
                };
                ev.polar_mass(lo, hi, DENSITY_QUAD_TOL / panels as f64)
                    .map(|q| q.value)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for p in pieces {
            acc += p;
            cumulative.push(acc);
        }
        let slope = (0..=panels)
            .map(|i| ev.polar_mass_density((i as f64 * step).min(std::f64::consts::FRAC_PI_2)))
            .collect();
        Ok(Self {
            support_radius: big_r,
            step,
            cumulative,
            slope,
        })
    }

    /// Total AC mass, the table's value at the support radius.
    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("table is nonempty")
    }

    pub fn joint(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.support_radius {
            return self.total();
        }
        let theta = (r / self.support_radius).asin();
        let pos = theta / self.step;
        let i = (pos.floor() as usize).min(self.cumulative.len() - 2);
        // cubic Hermite with the exact slopes dF/dθ at the nodes
        let w = pos - i as f64;
        let (w2, w3) = (w * w, w * w * w);
        let h00 = 2.0 * w3 - 3.0 * w2 + 1.0;
        let h10 = w3 - 2.0 * w2 + w;
        let h01 = -2.0 * w3 + 3.0 * w2;
        let h11 = w3 - w2;
        h00 * self.cumulative[i]
            + h10 * self.step * self.slope[i]
            + h01 * self.cumulative[i + 1]
            + h11 * self.step * self.slope[i + 1]
    }

    pub fn conditional(&self, r: f64) -> f64 {
        self.joint(r) / self.total()
    }
}

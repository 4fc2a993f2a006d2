//! Experiment drivers: the Kac (fast diffusion) and slow-diffusion limits,
//! and goodness-of-fit of simulated flights against the analytic laws.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::density::{radial_profile, Evaluator, RadialCdfTable, R3_MAX_INTENSITY};
use crate::error::{Error, Result};
use crate::model::{FlatRecord, FlightParams, Law, StationaryParams};
use crate::simulate::{run, SampleSummary, SimConfig};
use crate::specfun::{gamma_half_integer, unit_sphere_area};

/// Significance level of every statistical test in this module.
pub const SIGNIFICANCE: f64 = 1e-3;

/// Two-sided standard normal quantile at [`SIGNIFICANCE`].
pub const Z_CRITICAL: f64 = 3.290526731491895;

/// Fewest non-singular samples a goodness-of-fit test will accept.
pub const MIN_NONSINGULAR: usize = 100;

/// θ-panels used to tabulate the analytic radial CDF.
pub const CDF_PANELS: usize = 4096;

/// Radii per t in the slow-diffusion check.
pub const SDC_RADII: usize = 50;

/// Kolmogorov survival function Q(k) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²k²}.
pub fn kolmogorov_q(k: f64) -> f64 {
    if k <= 0.0 {
        return 1.0;
    }
    if k < 0.2 {
        // the alternating series converges slowly here and Q is 1 to double precision
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * k * k).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// k with Q(k) = alpha, by bisection.
pub fn kolmogorov_critical(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_q(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided KS distance between a sorted sample and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64 + Sync>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .reduce(|| 0.0, f64::max)
        .clamp(0.0, 1.0)
}

/// Goodness-of-fit of a simulated sample against an analytic law.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub m: usize,
    pub ks_statistic: f64,
    pub ks_threshold: f64,
    pub ks_p_value: f64,
    pub singular_z_score: f64,
    pub z_threshold: f64,
    pub n_paths: u64,
    pub n_nonsingular: usize,
    pub ks_pass: bool,
    pub singular_pass: bool,
}

impl GofReport {
    pub fn passed(&self) -> bool {
        self.ks_pass && self.singular_pass
    }
}

impl FlatRecord for GofReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("m", self.m.to_string()),
            ("n_paths", self.n_paths.to_string()),
            ("n_nonsingular", self.n_nonsingular.to_string()),
            ("ks_statistic", format!("{:.6e}", self.ks_statistic)),
            ("ks_threshold", format!("{:.6e}", self.ks_threshold)),
            ("ks_p_value", format!("{:.4}", self.ks_p_value)),
            ("ks_pass", self.ks_pass.to_string()),
            ("singular_z", format!("{:.4}", self.singular_z_score)),
            ("z_threshold", format!("{:.4}", self.z_threshold)),
            ("singular_pass", self.singular_pass.to_string()),
        ]
    }
}

/// KS test of the conditional radial law plus a binomial test of the zero-switch count.
///
/// For m = 3 the analytic reference is the small-intensity expansion, so λt ≤ 0.1 is required.
pub fn gof_against_analytic(summary: &SampleSummary, fp: &FlightParams) -> Result<GofReport> {
    fp.validate()?;
    if summary.fp.m != fp.m {
        return Err(Error::InvalidParameter(format!(
            "sample dimension {} does not match reference dimension {}",
            summary.fp.m, fp.m
        )));
    }
    if fp.m == 3 && fp.mean_switches() > R3_MAX_INTENSITY {
        return Err(Error::AsymptoticValidity {
            a: fp.mean_switches(),
            limit: R3_MAX_INTENSITY,
        });
    }
    let n1 = summary.n_nonsingular();
    if n1 < MIN_NONSINGULAR {
        return Err(Error::Underpowered {
            got: n1,
            need: MIN_NONSINGULAR,
        });
    }
    let table = RadialCdfTable::new(&Law::Transition(*fp), CDF_PANELS)?;
    let ks = ks_statistic(&summary.radii_sorted, |r| table.conditional(r));
    let ks_threshold = kolmogorov_critical(SIGNIFICANCE) / (n1 as f64).sqrt();
    let ks_p_value = kolmogorov_q((n1 as f64).sqrt() * ks);

    let n = summary.n_paths as f64;
    let p = fp.singular_mass();
    let sd = (n * p * (1.0 - p)).sqrt();
    let z = if sd > 0.0 {
        (summary.n_zero_switch as f64 - n * p) / sd
    } else if summary.n_zero_switch as f64 == n * p {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(GofReport {
        m: fp.m,
        ks_statistic: ks,
        ks_threshold,
        ks_p_value,
        singular_z_score: z,
        z_threshold: Z_CRITICAL,
        n_paths: summary.n_paths,
        n_nonsingular: n1,
        ks_pass: ks <= ks_threshold,
        singular_pass: z.abs() <= Z_CRITICAL,
    })
}

/// Distances from the flight to its Brownian limit along a ladder of intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitTrace {
    pub m: usize,
    pub rho2: f64,
    pub t: f64,
    /// (λ, c) with c = √(ρ²λ), ordered by increasing λ
    pub ladder: Vec<(f64, f64)>,
    /// sup over the grid of |p(x) − φ(x)| for the point densities
    pub distances: Vec<f64>,
    /// sup over the grid of |f_R(r) − χ(r)| for the radial densities
    pub radial_distances: Vec<f64>,
    /// e^{−λt} at each rung
    pub singular_masses: Vec<f64>,
    pub grid_max: f64,
    pub target: String,
}

impl LimitTrace {
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }
}

impl fmt::Display for LimitTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m={} target: {}", self.m, self.target)?;
        writeln!(
            f,
            "{:>12} {:>14} {:>14} {:>14} {:>12}",
            "lambda", "c", "sup|p-phi|", "radial sup", "e^-lt"
        )?;
        for i in 0..self.ladder.len() {
            writeln!(
                f,
                "{:>12} {:>14.6} {:>14.6e} {:>14.6e} {:>12.3e}",
                self.ladder[i].0,
                self.ladder[i].1,
                self.distances[i],
                self.radial_distances[i],
                self.singular_masses[i]
            )?;
        }
        Ok(())
    }
}

/// Points on the comparison grid r ∈ [0, `KAC_GRID_MAX`].
pub const KAC_GRID_POINTS: usize = 301;
pub const KAC_GRID_MAX: f64 = 3.0;
/// Largest series truncation error tolerated on the comparison grid.
pub const KAC_TRUNCATION_TOL: f64 = 1e-9;

/// Per-axis variance of the Brownian limit: ρ²t for the telegraph process, 2ρ²t/m otherwise.
pub fn kac_variance(m: usize, rho2: f64, t: f64) -> f64 {
    if m == 1 {
        rho2 * t
    } else {
        2.0 * rho2 * t / m as f64
    }
}

/// Isotropic Gaussian density in R^m at ‖x‖ = r.
pub fn gaussian_density(m: usize, var: f64, r: f64) -> f64 {
    (2.0 * PI * var).powf(-(m as f64) / 2.0) * (-r * r / (2.0 * var)).exp()
}

/// Density of ‖X‖ for X isotropic Gaussian (chi law scaled by √var); for m = 1, the half-normal.
pub fn chi_density(m: usize, var: f64, r: f64) -> f64 {
    let mf = m as f64;
    2.0 * r.powi(m as i32 - 1) * (-r * r / (2.0 * var)).exp()
        / ((2.0 * var).powf(mf / 2.0) * gamma_half_integer(m as u32))
}

/// Follows c = √(ρ²λ) up the ladder and records the distance to the Brownian limit.
pub fn kac_limit_trace(rho2: f64, t: f64, ladder: &[f64], m: usize) -> Result<LimitTrace> {
    if !(rho2 > 0.0) || !rho2.is_finite() {
        return Err(Error::InvalidParameter(format!("rho2 must be positive, got {rho2}")));
    }
    if !matches!(m, 1 | 2 | 4 | 6) {
        return Err(Error::UnsupportedDimension(m));
    }
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "ladder must be nonempty and strictly increasing".into(),
        ));
    }
    let var = kac_variance(m, rho2, t);
    let area = unit_sphere_area(m);
    let grid: Vec<f64> = (0..KAC_GRID_POINTS)
        .map(|i| KAC_GRID_MAX * i as f64 / (KAC_GRID_POINTS - 1) as f64)
        .collect();
    let mut trace = LimitTrace {
        m,
        rho2,
        t,
        ladder: Vec::new(),
        distances: Vec::new(),
        radial_distances: Vec::new(),
        singular_masses: Vec::new(),
        grid_max: KAC_GRID_MAX,
        target: format!("isotropic Gaussian in R^{m}, per-axis variance {var}"),
    };
    for &lambda in ladder {
        let c = (rho2 * lambda).sqrt();
        let fp = FlightParams::new(m, c, lambda, t)?;
        let ev = Evaluator::new(&Law::Transition(fp))?;
        let rows = grid
            .par_iter()
            .map(|&r| {
                let e = ev.eval(r)?;
                if e.truncation_error > KAC_TRUNCATION_TOL {
                    return Err(Error::NonConvergence {
                        estimate: e.ac_density,
                        abs_error: e.truncation_error,
                        tol: KAC_TRUNCATION_TOL,
                    });
                }
                let p = e.ac_density;
                let radial_scale = area * r.powi(m as i32 - 1);
                Ok((
                    (p - gaussian_density(m, var, r)).abs(),
                    (radial_scale * p - chi_density(m, var, r)).abs(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let d = rows.iter().map(|x| x.0).fold(0.0, f64::max);
        let dr = rows.iter().map(|x| x.1).fold(0.0, f64::max);
        trace.ladder.push((lambda, c));
        trace.distances.push(d);
        trace.radial_distances.push(dr);
        trace.singular_masses.push(fp.singular_mass());
    }
    Ok(trace)
}

/// Largest relative gap between p(r; λ = a/t, c = ρ/t, t) and q(r; a, ρ) over
/// the radii (i + ½)ρ/50 and the given times.
pub fn sdc_invariance_check(sp: &StationaryParams, t_values: &[f64]) -> Result<f64> {
    sp.validate()?;
    let stationary = Evaluator::new(&Law::Stationary(*sp))?;
    let mut worst = 0.0f64;
    for &t in t_values {
        let fp = sp.flight_at(t);
        let transition = Evaluator::new(&Law::Transition(fp))?;
        for i in 0..SDC_RADII {
            let r = (i as f64 + 0.5) * sp.rho / SDC_RADII as f64;
            let q = stationary.ac(r);
            let p = transition.ac(r);
            let gap = (p - q).abs() / q.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

/// Sensitivity of q to (a, ρ) → (a(1+ε), ρ(1+ε)): max over the SDC radii of
/// |Δq| / (ε·q). Bounded values show the stationary law is continuous in its parameters.
pub fn sdc_continuity(sp: &StationaryParams, eps: f64) -> Result<f64> {
    let base = Evaluator::new(&Law::Stationary(*sp))?;
    let moved = StationaryParams::new(sp.m, sp.a * (1.0 + eps), sp.rho * (1.0 + eps))?;
    let moved = Evaluator::new(&Law::Stationary(moved))?;
    let mut worst = 0.0f64;
    for i in 0..SDC_RADII {
        let r = (i as f64 + 0.5) * sp.rho / SDC_RADII as f64;
        let q = base.ac(r);
        worst = worst.max((moved.ac(r) - q).abs() / (eps * q));
    }
    Ok(worst)
}

/// One radial bin of the R^3 histogram comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinCheck {
    pub lo: f64,
    pub hi: f64,
    pub observed: u64,
    pub expected: f64,
    pub z: f64,
}

/// Outcome of the R^3 small-intensity check.
#[derive(Debug, Clone, PartialEq)]
pub struct R3Report {
    pub a: f64,
    pub rho: f64,
    pub gof: GofReport,
    pub bins: Vec<BinCheck>,
    pub max_abs_z: f64,
    /// sup over bins of |observed fraction − expected fraction|
    pub sup_deviation: f64,
    pub mass_gap: f64,
    pub minimal_at_origin: bool,
    pub increasing: bool,
}

/// Number of radial bins in the R^3 histogram comparison.
pub const R3_BINS: usize = 20;
/// Per-bin agreement in standard deviations.
pub const R3_BIN_SIGMAS: f64 = 3.0;
/// Allowed |∫ac − (1 − e^{−a})|.
pub const R3_MASS_GAP_TOL: f64 = 1e-5;

impl R3Report {
    pub fn bins_pass(&self) -> bool {
        self.max_abs_z <= R3_BIN_SIGMAS
    }

    pub fn mass_pass(&self) -> bool {
        self.mass_gap <= R3_MASS_GAP_TOL
    }

    pub fn shape_pass(&self) -> bool {
        self.minimal_at_origin && self.increasing
    }

    pub fn passed(&self) -> bool {
        self.bins_pass() && self.mass_pass() && self.shape_pass()
    }
}

/// Simulates R^3 flights at (λ = a, c = ρ, t = 1) and compares them with the
/// small-intensity density: per-bin z-scores over 20 radial bins, the KS test,
/// the mass gap of the expansion and the shape of its profile.
pub fn r3_asymptotic_check(a: f64, rho: f64, n_paths: u64, seed: u64) -> Result<R3Report> {
    let sp = StationaryParams::new(3, a, rho)?;
    let law = Law::Stationary(sp);
    let ev = Evaluator::new(&law)?;
    let fp = sp.flight_at(1.0);
    let summary = run(&SimConfig::new(fp, n_paths, seed)?)?;
    let gof = gof_against_analytic(&summary, &fp)?;

    let table = RadialCdfTable::new(&Law::Transition(fp), CDF_PANELS)?;
    let n1 = summary.n_nonsingular() as f64;
    let width = rho / R3_BINS as f64;
    let radii = &summary.radii_sorted;
    let mut bins = Vec::with_capacity(R3_BINS);
    let mut start = 0usize;
    for i in 0..R3_BINS {
        let lo = i as f64 * width;
        let hi = if i + 1 == R3_BINS { rho } else { (i + 1) as f64 * width };
        let end = if i + 1 == R3_BINS {
            radii.len()
        } else {
            start + radii[start..].partition_point(|&r| r < hi)
        };
        let observed = (end - start) as u64;
        start = end;
        let prob = table.conditional(hi) - table.conditional(lo);
        let expected = n1 * prob;
        let sd = (n1 * prob * (1.0 - prob)).sqrt();
        let z = (observed as f64 - expected) / sd;
        bins.push(BinCheck {
            lo,
            hi,
            observed,
            expected,
            z,
        });
    }
    let max_abs_z = bins.iter().map(|b| b.z.abs()).fold(0.0, f64::max);
    let sup_deviation = bins
        .iter()
        .map(|b| ((b.observed as f64 - b.expected) / n1).abs())
        .fold(0.0, f64::max);

    let mass = ev.ac_mass()?.value;
    let mass_gap = (mass - (1.0 - (-a).exp())).abs();

    let profile = radial_profile(&law, 1000)?;
    let origin = ev.ac(0.0);
    let minimal_at_origin = profile.values.iter().all(|&v| v >= origin);
    let increasing = profile.values.windows(2).all(|w| w[1] > w[0]);

    Ok(R3Report {
        a,
        rho,
        gof,
        bins,
        max_abs_z,
        sup_deviation,
        mass_gap,
        minimal_at_origin,
        increasing,
    })
}

/// Aligned plain-text table from rows of key/value fields.
pub fn text_table(rows: &[Vec<(&'static str, String)>]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut widths: Vec<usize> = first.iter().map(|(k, _)| k.len()).collect();
    for row in rows {
        for (w, (_, v)) in widths.iter_mut().zip(row) {
            *w = (*w).max(v.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    out.push_str(&line(first.iter().map(|(k, _)| *k).collect()));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(|(_, v)| v.as_str()).collect()));
        out.push('\n');
    }
    out
}

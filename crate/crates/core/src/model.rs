//! Parameter and result types shared by the density engine, the simulator
//! and the validation drivers.

use crate::error::{Error, Result};

/// Dimensions with a closed-form (or, for m = 3, asymptotic) density.
pub const ANALYTIC_DIMENSIONS: [usize; 5] = [1, 2, 3, 4, 6];

/// Full parameterization of a transition density: dimension, speed,
/// switching rate and elapsed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightParams {
    pub m: usize,
    pub c: f64,
    pub lambda: f64,
    pub t: f64,
}

impl FlightParams {
    pub fn new(m: usize, c: f64, lambda: f64, t: f64) -> Result<Self> {
        let fp = Self { m, c, lambda, t };
        fp.validate()?;
        Ok(fp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("dimension m must be >= 1".into()));
        }
        positive("c", self.c)?;
        positive("lambda", self.lambda)?;
        positive("t", self.t)
    }

    /// Radius of the ball the particle cannot leave, c·t.
    pub fn support_radius(&self) -> f64 {
        self.c * self.t
    }

    /// Expected number of direction switches, λ·t.
    pub fn mean_switches(&self) -> f64 {
        self.lambda * self.t
    }

    /// Probability of no switch on (0, t), e^{-λt}.
    pub fn singular_mass(&self) -> f64 {
        (-self.lambda * self.t).exp()
    }
}

/// Limit constants of the slow-diffusion regime: a = lim λt, ρ = lim ct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryParams {
    pub m: usize,
    pub a: f64,
    pub rho: f64,
}

impl StationaryParams {
    pub fn new(m: usize, a: f64, rho: f64) -> Result<Self> {
        let sp = Self { m, a, rho };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("dimension m must be >= 1".into()));
        }
        positive("a", self.a)?;
        positive("rho", self.rho)
    }

    pub fn singular_mass(&self) -> f64 {
        (-self.a).exp()
    }

    /// The flight on the exact ray λ = a/t, c = ρ/t at time t.
    pub fn flight_at(&self, t: f64) -> FlightParams {
        FlightParams {
            m: self.m,
            c: self.rho / t,
            lambda: self.a / t,
            t,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Limit constants (a, ρ) = (λt, ct) of a flight.
pub fn sdc_limit_of(fp: &FlightParams) -> StationaryParams {
    StationaryParams {
        m: fp.m,
        a: fp.lambda * fp.t,
        rho: fp.c * fp.t,
    }
}

/// Either a transition law at finite time or a stationary law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Transition(FlightParams),
    Stationary(StationaryParams),
}

impl Law {
    pub fn dim(&self) -> usize {
        match self {
            Law::Transition(fp) => fp.m,
            Law::Stationary(sp) => sp.m,
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            Law::Transition(fp) => fp.support_radius(),
            Law::Stationary(sp) => sp.rho,
        }
    }

    pub fn singular_mass(&self) -> f64 {
        match self {
            Law::Transition(fp) => fp.singular_mass(),
            Law::Stationary(sp) => sp.singular_mass(),
        }
    }

    /// Dimensionless switching intensity, λt or a.
    pub fn intensity(&self) -> f64 {
        match self {
            Law::Transition(fp) => fp.mean_switches(),
            Law::Stationary(sp) => sp.a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Law::Transition(fp) => fp.validate(),
            Law::Stationary(sp) => sp.validate(),
        }
    }
}

impl From<FlightParams> for Law {
    fn from(fp: FlightParams) -> Self {
        Law::Transition(fp)
    }
}

impl From<StationaryParams> for Law {
    fn from(sp: StationaryParams) -> Self {
        Law::Stationary(sp)
    }
}

/// Decomposition of a distribution at one query radius.
///
/// The singular part is never evaluated pointwise: it is carried as the
/// total probability sitting uniformly on the boundary sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEval {
    pub radius: f64,
    pub ac_density: f64,
    pub singular_mass: f64,
    pub support_radius: f64,
    pub in_support: bool,
    /// Query fell within 1e-12·support of a boundary where the density diverges;
    /// `ac_density` holds a saturated finite value.
    pub boundary_singular: bool,
    /// Value comes from the small-intensity expansion in R^3 (error o(a³)).
    pub asymptotic: bool,
    /// Estimated magnitude of the neglected series tail (R^6 only, else 0).
    pub truncation_error: f64,
}

/// Absolutely-continuous density sampled on an open radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub m: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub singular_mass: f64,
    pub support_radius: f64,
    /// The density tends to +∞ as r approaches the support radius.
    pub boundary_divergent: bool,
}

/// Terminal state of one simulated particle.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightSample {
    pub position: Vec<f64>,
    pub switch_count: u64,
    pub radius: f64,
}

/// Flat key=value and CSV-row views of a record.
pub trait FlatRecord {
    fn fields(&self) -> Vec<(&'static str, String)>;

    fn to_kv(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn csv_header(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, _)| k)
            .collect::<Vec<_>>()
            .join(",")
    }

    fn csv_row(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(_, v)| v)
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FlatRecord for FlightParams {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("m", self.m.to_string()),
            ("c", self.c.to_string()),
            ("lambda", self.lambda.to_string()),
            ("t", self.t.to_string()),
        ]
    }
}

impl FlatRecord for StationaryParams {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("m", self.m.to_string()),
            ("a", self.a.to_string()),
            ("rho", self.rho.to_string()),
        ]
    }
}

impl FlatRecord for Law {
    fn fields(&self) -> Vec<(&'static str, String)> {
        match self {
            Law::Transition(fp) => fp.fields(),
            Law::Stationary(sp) => sp.fields(),
        }
    }
}

impl FlatRecord for DensityEval {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("r", self.radius.to_string()),
            ("ac_density", self.ac_density.to_string()),
            ("singular_mass", self.singular_mass.to_string()),
            ("support_radius", self.support_radius.to_string()),
        ]
    }
}

impl FlatRecord for FlightSample {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("switches", self.switch_count.to_string()),
            ("radius", self.radius.to_string()),
        ]
    }
}

//! Symmetric Markov random flights in low-dimensional Euclidean spaces.
//!
//! A particle starts at the origin, moves at constant speed `c` and picks a
//! fresh uniformly distributed direction at every event of a Poisson process
//! of rate `λ` (in one dimension it reverses direction instead). This crate
//! provides:
//!
//! * [`density`]: exact transition densities for m ∈ {1, 2, 4, 6}, the
//!   small-intensity expansion for m = 3, and the stationary laws reached
//!   when λ → 0, c → 0, t → ∞ with λt → a and ct → ρ;
//! * [`simulate`]: a reproducible parallel Monte Carlo simulator;
//! * [`limits`]: drivers checking the fast-diffusion (Brownian) and
//!   slow-diffusion (stationary) regimes and goodness of fit.

mod dd;
pub mod density;
pub mod error;
pub mod limits;
pub mod model;
pub mod quadrature;
pub mod simulate;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{
    sdc_limit_of, DensityEval, FlatRecord, FlightParams, FlightSample, Law, RadialProfile,
    StationaryParams,
};

//! Finite Markov chain numerics.

mod chain;
pub(crate) mod dense;
mod hitting;
mod spectral;
mod tilt;

pub use chain::StochasticMatrix;
pub use hitting::{hitting_times, kernel_power_kl, HittingTimes};
pub use spectral::{
    default_k_max, pseudo_spectral_gap, stationarity_residual, stationary_distribution,
    SpectralReport,
};
pub use tilt::{check_assumptions, tilt_and_normalize, AssumptionReport, PerronPair};

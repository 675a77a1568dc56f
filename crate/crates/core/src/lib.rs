//! Exact OFDM channel and inter-carrier-interference (ICI) coefficients for
//! deterministic doubly-selective channels, the Gaussian-approximation bit
//! error probability and capacity bound built on them, and the Monte-Carlo
//! and normality tooling used to validate that approximation.

pub mod analytic;
pub mod channel;
pub mod error;
pub mod modem;
pub mod montecarlo;
pub mod ofdm;
pub mod rng;
pub mod stats;

pub use analytic::{awgn_qam_bep, capacity_lower_bound, ici_variance, sinr_ratio, symbol_bep, LinkMetrics};
pub use channel::{builtin_profile, load_realization, realize, save_realization, DopplerConfig, TapProfile};
pub use error::{Error, Result};
pub use modem::{build_constellation, Constellation};
pub use ofdm::{
    channel_coefficient, coefficient_set, dirichlet_kernel, ici_coefficient, ChannelRealization,
    CoefficientSet, OfdmConfig, PathParams,
};

//! Differentially private test statistics and study planning.
//!
//! - [`dpcore`]: privacy parameters, Gaussian/Laplace calibration, budget accounting
//! - [`distributions`]: Normal, Student-t, chi-square and F CDFs and quantiles
//! - [`stattests`]: z, chi-square, OLS / partial F and sample standard deviation
//! - [`privstats`]: Gaussian-noised versions of those statistics
//! - [`samplesize`]: sample sizes that restore power under privacy noise
//! - [`powersim`]: reproducible Monte Carlo power estimation
//! - [`privhist`]: the bootstrapped noisy-histogram estimator (PrivHistogram)

pub mod distributions;
pub mod dpcore;
pub mod error;
pub mod powersim;
pub mod privhist;
pub mod privstats;
pub mod samplesize;
pub mod stattests;

pub use distributions::DistSpec;
pub use dpcore::{
    Mechanism, NoiseRng, NoiseSource, NoisyStatistic, PinnedNoise, PrivacyParams, Sensitivity,
};
pub use error::{Error, Result};
pub use powersim::{PowerEstimate, SimPlan, SimPrivacy, SimTest};
pub use privhist::{PrivHistPlan, PrivHistResult, SensitivityMode, Statistic};
pub use privstats::BigOConstants;
pub use samplesize::{DerivationMode, PowerSpec, SampleSizeResult};
pub use stattests::{BoundedSample, ChiSquareInput, FTestInput, LinearModel};

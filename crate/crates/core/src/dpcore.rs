//! Privacy parameters, noise calibration, and budget accounting.
//!
//! The Gaussian mechanism releases `f(x) + N(0, sigma^2)` with
//!
//! ```text
//! sigma = c * sqrt(q) * l2_sensitivity / epsilon,   c = sqrt(2 ln(1.25 / delta))
//! ```
//!
//! where `q` is the number of queries answered jointly. Neighbouring datasets
//! differ by replacing a single record, so the sensitivity of a mean over `n`
//! values bounded by `|x| <= s` is `2 s / n`.
//!
//! Noise is drawn through [`NoiseSource`]. [`NoiseRng`] is the seeded,
//! counter-based production source; [`PinnedNoise`] returns a fixed standard
//! deviate so callers can check the noiseless path exactly.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::normal_quantile_fast;
use crate::error::{ensure_positive, invalid, Result};

/// Computes `c = sqrt(2 ln(1.25 / delta))` for `delta` in `(0, 1)`.
pub fn derive_c(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok((2.0 * (1.25 / delta).ln()).sqrt())
}

/// Privacy side of every computation: per-release budget, failure
/// probability, and the number of queries composed into one noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
    q: u32,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, q: u32) -> Result<Self> {
        ensure_positive("epsilon", epsilon)?;
        derive_c(delta)?;
        if q < 1 {
            return Err(invalid("q", "at least one query is required"));
        }
        Ok(Self { epsilon, delta, q })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn c(&self) -> f64 {
        // validated in `new`
        (2.0 * (1.25 / self.delta).ln()).sqrt()
    }

    /// `c * sqrt(q)`, the multiplier shared by every Gaussian scale.
    pub fn c_star(&self) -> f64 {
        self.c() * f64::from(self.q).sqrt()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.delta, self.q)
    }

    pub fn with_q(&self, q: u32) -> Result<Self> {
        Self::new(self.epsilon, self.delta, q)
    }
}

/// Sensitivity of a query under the replace-one neighbouring relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub l2: f64,
    pub l1: f64,
    pub description: String,
}

impl Sensitivity {
    /// Sensitivity of a scalar-valued query, where L1 and L2 coincide.
    pub fn scalar(value: f64, description: impl Into<String>) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(invalid("sensitivity", format!("must be finite and >= 0, got {value}")));
        }
        Ok(Self {
            l2: value,
            l1: value,
            description: description.into(),
        })
    }

    pub fn new(l2: f64, l1: f64, description: impl Into<String>) -> Result<Self> {
        if !(l2.is_finite() && l1.is_finite() && l2 >= 0.0 && l1 >= 0.0) {
            return Err(invalid("sensitivity", "l1 and l2 must be finite and >= 0"));
        }
        if l2 > l1 * (1.0 + 1e-12) {
            return Err(invalid("sensitivity", format!("l2 ({l2}) cannot exceed l1 ({l1})")));
        }
        Ok(Self {
            l2,
            l1,
            description: description.into(),
        })
    }
}

/// Sensitivity of the mean of `n` values bounded by `|x| <= bound_s`: `2 s / n`.
pub fn mean_sensitivity(bound_s: f64, n: usize) -> Result<Sensitivity> {
    ensure_positive("bound_s", bound_s)?;
    if n < 1 {
        return Err(invalid("n", "must be at least 1"));
    }
    Sensitivity::scalar(2.0 * bound_s / n as f64, format!("mean of {n} values in [-{bound_s}, {bound_s}]"))
}

/// Gaussian standard deviation `c * sqrt(q) * l2 / epsilon`.
pub fn gaussian_noise_scale(sens: &Sensitivity, p: &PrivacyParams) -> f64 {
    p.c_star() * sens.l2 / p.epsilon
}

/// Laplace scale `q * l1 / epsilon`, i.e. linear rather than square-root
/// growth in the number of composed queries.
pub fn laplace_noise_scale(sens: &Sensitivity, p: &PrivacyParams) -> f64 {
    f64::from(p.q) * sens.l1 / p.epsilon
}

/// Linear budget accounting: a point sampled `k` times pays `k` times.
pub fn compose_budget(per_query_epsilon: f64, k: u32) -> Result<f64> {
    ensure_positive("per_query_epsilon", per_query_epsilon)?;
    if k < 1 {
        return Err(invalid("k", "must be at least 1"));
    }
    Ok(per_query_epsilon * f64::from(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Gaussian,
    Laplace,
    /// Released without noise.
    NoNoise,
}

/// A privatized value together with how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyStatistic {
    pub value: f64,
    /// Standard deviation of the injected noise (Laplace: scale `b`).
    pub noise_sigma: f64,
    pub mechanism: Mechanism,
    /// Budget of the query batch this release belongs to.
    pub epsilon_spent: f64,
    /// Set when the noise scale was computed from the private data itself,
    /// which voids the formal guarantee.
    pub heuristic_dp: bool,
}

impl NoisyStatistic {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            noise_sigma: 0.0,
            mechanism: Mechanism::NoNoise,
            epsilon_spent: 0.0,
            heuristic_dp: false,
        }
    }

    pub fn heuristic(mut self) -> Self {
        self.heuristic_dp = true;
        self
    }
}

/// A stream of standard noise deviates.
pub trait NoiseSource {
    /// Uniform draw on the open interval `(0, 1)`.
    fn uniform_open(&mut self) -> f64;

    fn standard_normal(&mut self) -> f64 {
        normal_quantile_fast(self.uniform_open())
    }

    /// Laplace deviate with unit scale.
    fn standard_laplace(&mut self) -> f64 {
        let u = self.uniform_open() - 0.5;
        -u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}

/// Seeded ChaCha8 stream. Distinct `stream` ids give independent sequences
/// under the same seed, which is how parallel work stays reproducible.
#[derive(Debug, Clone)]
pub struct NoiseRng {
    inner: ChaCha8Rng,
}

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

impl NoiseSource for NoiseRng {
    fn uniform_open(&mut self) -> f64 {
        // 53 random bits, shifted half a step off zero
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Test stub: every standard deviate equals the pinned value.
#[derive(Debug, Clone, Copy)]
pub struct PinnedNoise(pub f64);

impl NoiseSource for PinnedNoise {
    fn uniform_open(&mut self) -> f64 {
        0.5
    }

    fn standard_normal(&mut self) -> f64 {
        self.0
    }

    fn standard_laplace(&mut self) -> f64 {
        self.0
    }
}

/// Adds noise of the given scale. A zero scale returns the value untouched
/// and records [`Mechanism::NoNoise`].
pub fn add_noise<N: NoiseSource + ?Sized>(
    value: f64,
    scale: f64,
    mechanism: Mechanism,
    epsilon_spent: f64,
    noise: &mut N,
) -> Result<NoisyStatistic> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(invalid("scale", format!("must be finite and >= 0, got {scale}")));
    }
    if scale == 0.0 || mechanism == Mechanism::NoNoise {
        return Ok(NoisyStatistic::exact(value));
    }
    let draw = match mechanism {
        Mechanism::Gaussian => noise.standard_normal(),
        Mechanism::Laplace => noise.standard_laplace(),
        Mechanism::NoNoise => unreachable!(),
    };
    Ok(NoisyStatistic {
        value: value + scale * draw,
        noise_sigma: scale,
        mechanism,
        epsilon_spent,
        heuristic_dp: false,
    })
}

/// Gaussian release calibrated from a registered sensitivity.
pub fn gaussian_release<N: NoiseSource + ?Sized>(
    value: f64,
    sens: &Sensitivity,
    p: &PrivacyParams,
    noise: &mut N,
) -> Result<NoisyStatistic> {
    add_noise(value, gaussian_noise_scale(sens, p), Mechanism::Gaussian, p.epsilon(), noise)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64, q: u32) -> PrivacyParams {
        PrivacyParams::new(eps, 1e-5, q).unwrap()
    }

    #[test]
    fn derive_c_values() {
        // 2 ln(125000) = 23.47..., 2 ln(25) = 6.437...
        assert!((derive_c(1e-5).unwrap() - 4.844_805_262_605_389).abs() < 1e-9);
        assert!((derive_c(0.05).unwrap() - 2.537_272_482_359_039).abs() < 1e-9);
    }

    #[test]
    fn derive_c_rejects_out_of_range() {
        for d in [0.0, 1.0, 1.25, -0.1, f64::NAN] {
            assert!(derive_c(d).is_err(), "delta={d}");
        }
    }

    #[test]
    fn privacy_params_validate() {
        assert!(PrivacyParams::new(0.0, 1e-5, 1).is_err());
        assert!(PrivacyParams::new(1.0, 1e-5, 0).is_err());
        assert!(PrivacyParams::new(1.0, 1.0, 1).is_err());
        let p = params(1.0, 4);
        assert!((p.c_star() - 2.0 * p.c()).abs() < 1e-15);
    }

    #[test]
    fn mean_sensitivity_cases() {
        assert_eq!(mean_sensitivity(1.0, 1).unwrap().l2, 2.0);
        assert!((mean_sensitivity(1.0, 100).unwrap().l2 - 0.02).abs() < 1e-15);
        assert!(mean_sensitivity(0.0, 10).is_err());
        assert!(mean_sensitivity(1.0, 0).is_err());
    }

    #[test]
    fn gaussian_scale_cases() {
        let zero = Sensitivity::scalar(0.0, "const").unwrap();
        assert_eq!(gaussian_noise_scale(&zero, &params(1.0, 1)), 0.0);

        let sens = mean_sensitivity(1.0, 100).unwrap();
        let s = gaussian_noise_scale(&sens, &params(1.0, 1));
        assert!((s - 0.096_896_105_252_107_78).abs() < 1e-12, "{s}");
        assert!((s - 0.0969).abs() < 1e-4);
    }

    #[test]
    fn composition_ratio_laws() {
        let sens = Sensitivity::scalar(0.3, "x").unwrap();
        let base_g = gaussian_noise_scale(&sens, &params(0.7, 1));
        let base_l = laplace_noise_scale(&sens, &params(0.7, 1));
        for q in [1u32, 4, 9, 16] {
            let g = gaussian_noise_scale(&sens, &params(0.7, q));
            let l = laplace_noise_scale(&sens, &params(0.7, q));
            assert!((g / base_g - f64::from(q).sqrt()).abs() < 1e-12);
            assert!((l / base_l - f64::from(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn laplace_identity_at_unit_epsilon() {
        let sens = Sensitivity::scalar(0.02, "mean").unwrap();
        assert_eq!(laplace_noise_scale(&sens, &params(1.0, 1)), 0.02);
        let zero = Sensitivity::scalar(0.0, "const").unwrap();
        assert_eq!(laplace_noise_scale(&zero, &params(1.0, 1)), 0.0);
    }

    #[test]
    fn sensitivity_rejects_l2_above_l1() {
        assert!(Sensitivity::new(2.0, 1.0, "bad").is_err());
        assert!(Sensitivity::new(1.0, 2.0, "vector").is_ok());
    }

    #[test]
    fn compose_budget_cases() {
        assert_eq!(compose_budget(0.5, 1).unwrap(), 0.5);
        assert_eq!(compose_budget(0.25, 4).unwrap(), 1.0);
        assert_eq!(compose_budget(1.0, 3).unwrap(), 3.0);
        assert!(compose_budget(1.0, 0).is_err());
    }

    #[test]
    fn add_noise_zero_scale_is_identity() {
        let mut rng = NoiseRng::new(1);
        let out = add_noise(3.25, 0.0, Mechanism::Gaussian, 1.0, &mut rng).unwrap();
        assert_eq!(out.value, 3.25);
        assert_eq!(out.mechanism, Mechanism::NoNoise);
        assert_eq!(out.noise_sigma, 0.0);
        assert!(add_noise(0.0, -1.0, Mechanism::Gaussian, 1.0, &mut rng).is_err());
    }

    #[test]
    fn add_noise_is_deterministic() {
        let a = add_noise(1.0, 2.0, Mechanism::Gaussian, 1.0, &mut NoiseRng::new(99)).unwrap();
        let b = add_noise(1.0, 2.0, Mechanism::Gaussian, 1.0, &mut NoiseRng::new(99)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = add_noise(1.0, 2.0, Mechanism::Gaussian, 1.0, &mut NoiseRng::with_stream(99, 1)).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn gaussian_draws_calibrated() {
        let mut rng = NoiseRng::new(2024);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| add_noise(0.0, 1.0, Mechanism::Gaussian, 1.0, &mut rng).unwrap().value)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 0.02, "mean={mean}");
        assert!((0.99..=1.01).contains(&sd), "sd={sd}");
    }

    #[test]
    fn laplace_draws_calibrated() {
        // Laplace(b) has variance 2 b^2.
        let mut rng = NoiseRng::new(7);
        let n = 100_000;
        let b = 0.5;
        let draws: Vec<f64> = (0..n)
            .map(|_| add_noise(0.0, b, Mechanism::Laplace, 1.0, &mut rng).unwrap().value)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02);
        assert!((var / (2.0 * b * b) - 1.0).abs() < 0.03, "var={var}");
    }

    #[test]
    fn pinned_noise_scales_deviate() {
        let out = add_noise(1.0, 0.5, Mechanism::Gaussian, 1.0, &mut PinnedNoise(2.0)).unwrap();
        assert_eq!(out.value, 2.0);
    }
}

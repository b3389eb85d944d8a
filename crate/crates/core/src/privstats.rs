//! Gaussian-noised versions of the statistics in [`crate::stattests`].
//!
//! | statistic | noise standard deviation |
//! |-----------|--------------------------|
//! | z         | `2 c s sqrt(q) / (N eps)` |
//! | chi-square| `C_chi * D_j* / (eps * E_j* * max(chi2, floor))` (data dependent) |
//! | partial F | `C_f * D* / eps` on the RSS ratio |
//! | std dev   | `2 c s sqrt(q) / (eps sqrt(N - 1))` |
//!
//! The big-O constants `C_chi` and `C_f` have no published values. They are
//! explicit configuration ([`BigOConstants`], default 1.0) and every result
//! echoes them.

use serde::{Deserialize, Serialize};

use crate::dpcore::{
    add_noise, gaussian_release, mean_sensitivity, Mechanism, NoiseSource, NoisyStatistic, PrivacyParams,
    Sensitivity,
};
use crate::error::{ensure_positive, invalid, Result};
use crate::stattests::{self, BoundedSample, ChiSquareInput, FTestInput};

/// Implied constants of the chi-square and F-test noise scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigOConstants {
    pub chi_sq_const: f64,
    pub f_const: f64,
    /// Lower bound on the chi-square value in the chi-square scale denominator.
    pub chi_sq_floor: f64,
}

impl Default for BigOConstants {
    fn default() -> Self {
        Self {
            chi_sq_const: 1.0,
            f_const: 1.0,
            chi_sq_floor: 1e-6,
        }
    }
}

impl BigOConstants {
    pub fn new(chi_sq_const: f64, f_const: f64, chi_sq_floor: f64) -> Result<Self> {
        ensure_positive("chi_sq_const", chi_sq_const)?;
        ensure_positive("f_const", f_const)?;
        ensure_positive("chi_sq_floor", chi_sq_floor)?;
        Ok(Self {
            chi_sq_const,
            f_const,
            chi_sq_floor,
        })
    }
}

/// Sensitivity of the sample standard deviation used by the std mechanism,
/// `2 s / sqrt(N - 1)`.
pub fn std_sensitivity(bound_s: f64, n: usize) -> Result<Sensitivity> {
    ensure_positive("bound_s", bound_s)?;
    if n < 2 {
        return Err(invalid("n", "standard deviation needs at least two values"));
    }
    Sensitivity::scalar(
        2.0 * bound_s / ((n - 1) as f64).sqrt(),
        format!("sample std of {n} values in [-{bound_s}, {bound_s}]"),
    )
}

/// Noise standard deviation of the private z statistic.
pub fn z_noise_scale(bound_s: f64, n: usize, p: &PrivacyParams) -> Result<f64> {
    Ok(crate::dpcore::gaussian_noise_scale(&mean_sensitivity(bound_s, n)?, p))
}

/// z statistic of the sample mean plus Gaussian noise at `2 c s sqrt(q) / (N eps)`.
pub fn private_z_statistic<N: NoiseSource + ?Sized>(
    sample: &BoundedSample,
    mu: f64,
    sigma: f64,
    p: &PrivacyParams,
    noise: &mut N,
) -> Result<NoisyStatistic> {
    let z = stattests::z_statistic(sample.mean(), mu, sigma)?;
    let sens = mean_sensitivity(sample.bound_s(), sample.len())?;
    gaussian_release(z, &sens, p, noise)
}

/// Which chi-square value enters the data-dependent scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ChiSquareReference {
    /// The statistic computed from the data being released.
    Realized,
    /// A value fixed in advance, e.g. from a private pilot.
    Pilot(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateChiSquare {
    pub statistic: NoisyStatistic,
    /// Zero-based index of the group with the largest excess.
    pub j_star: usize,
    pub delta_j_star: f64,
    pub expected_j_star: f64,
    /// Chi-square value used in the scale denominator, after flooring.
    pub chi_sq_used: f64,
    pub constants: BigOConstants,
    pub warnings: Vec<String>,
}

/// Data-dependent noise scale for the chi-square statistic.
pub fn chi_square_noise_scale(
    delta_j_star: f64,
    expected_j_star: f64,
    chi_sq: f64,
    consts: &BigOConstants,
    epsilon: f64,
) -> f64 {
    consts.chi_sq_const * delta_j_star.abs() / (epsilon * expected_j_star * chi_sq.max(consts.chi_sq_floor))
}

/// Chi-square statistic with noise added to the statistic rather than to
/// the cell counts. The output is flagged heuristic-DP because the scale
/// depends on the data.
pub fn private_chi_square<N: NoiseSource + ?Sized>(
    inp: &ChiSquareInput,
    consts: &BigOConstants,
    reference: ChiSquareReference,
    p: &PrivacyParams,
    noise: &mut N,
) -> Result<PrivateChiSquare> {
    let chi_sq = stattests::chi_square_statistic(inp);
    let (j_star, delta) = inp.max_excess();
    let e = inp.expected()[j_star];
    let reference_value = match reference {
        ChiSquareReference::Realized => chi_sq,
        ChiSquareReference::Pilot(v) => {
            ensure_positive("pilot chi-square", v)?;
            v
        }
    };
    let scale = chi_square_noise_scale(delta, e, reference_value, consts, p.epsilon());
    let mut warnings: Vec<String> = inp.small_expected_warning().into_iter().collect();
    if delta < 0.0 {
        warnings.push(format!("every group is below expectation; using |max excess| = {}", delta.abs()));
    }
    let statistic = add_noise(chi_sq, scale, Mechanism::Gaussian, p.epsilon(), noise)?.heuristic();
    Ok(PrivateChiSquare {
        statistic,
        j_star,
        delta_j_star: delta,
        expected_j_star: e,
        chi_sq_used: reference_value.max(consts.chi_sq_floor),
        constants: *consts,
        warnings,
    })
}

/// How the noisy RSS ratio is turned into an F value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FStatisticForm {
    /// `(ratio + g - 1) * (n - p) / (p - r)`; equals the partial F at zero noise.
    #[default]
    DegreesOfFreedom,
    /// `(ratio + g - 1) * n`.
    TimesN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateFStatistic {
    /// `noise_sigma` is the scale of the noise on the RSS ratio, `C_f D* / eps`.
    pub statistic: NoisyStatistic,
    pub multiplier: f64,
    pub form: FStatisticForm,
    pub constants: BigOConstants,
}

impl PrivateFStatistic {
    /// Standard deviation of `value - partial_F`.
    pub fn statistic_noise_sigma(&self) -> f64 {
        self.statistic.noise_sigma * self.multiplier
    }
}

pub fn f_noise_scale(delta_star: f64, consts: &BigOConstants, epsilon: f64) -> f64 {
    consts.f_const * delta_star / epsilon
}

/// Partial F statistic with Gaussian noise on the RSS ratio.
pub fn private_f_statistic<N: NoiseSource + ?Sized>(
    inp: &FTestInput,
    delta_star: f64,
    consts: &BigOConstants,
    form: FStatisticForm,
    p: &PrivacyParams,
    noise: &mut N,
) -> Result<PrivateFStatistic> {
    if !(delta_star.is_finite() && delta_star >= 0.0) {
        return Err(invalid("delta_star", format!("must be finite and >= 0, got {delta_star}")));
    }
    let scale = f_noise_scale(delta_star, consts, p.epsilon());
    let noisy_ratio = add_noise(inp.ratio(), scale, Mechanism::Gaussian, p.epsilon(), noise)?;
    let multiplier = match form {
        FStatisticForm::DegreesOfFreedom => inp.df_multiplier(),
        FStatisticForm::TimesN => inp.n as f64,
    };
    let statistic = NoisyStatistic {
        value: (noisy_ratio.value - 1.0) * multiplier,
        ..noisy_ratio
    };
    Ok(PrivateFStatistic {
        statistic,
        multiplier,
        form,
        constants: *consts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateStd {
    pub statistic: NoisyStatistic,
    /// `sigma_tilde^2 / N`.
    pub variance_of_mean: f64,
    /// Stated noise variance of `sigma_tilde^2 / N`: `4 c^2 q s^2 / (eps^2 (N - 1) N)`.
    pub variance_of_mean_noise_var: f64,
}

/// Sample standard deviation plus Gaussian noise at `2 c s sqrt(q) / (eps sqrt(N - 1))`.
pub fn private_sample_std<N: NoiseSource + ?Sized>(
    sample: &BoundedSample,
    p: &PrivacyParams,
    noise: &mut N,
) -> Result<PrivateStd> {
    let sigma = stattests::sample_std(sample)?;
    let n = sample.len();
    let sens = std_sensitivity(sample.bound_s(), n)?;
    let statistic = gaussian_release(sigma, &sens, p, noise)?;
    let s = sample.bound_s();
    let nf = n as f64;
    Ok(PrivateStd {
        variance_of_mean: statistic.value * statistic.value / nf,
        variance_of_mean_noise_var: 4.0 * p.c() * p.c() * f64::from(p.q()) * s * s
            / (p.epsilon() * p.epsilon() * (nf - 1.0) * nf),
        statistic,
    })
}

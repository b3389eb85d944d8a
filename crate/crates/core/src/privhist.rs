//! PrivHistogram: private statistics from a noisy histogram of subset statistics.
//!
//! 1. Shuffle the data and cut it into `S` disjoint subsets of `floor(N/S)`
//!    points; the remainder is dropped.
//! 2. Compute the statistic on every subset.
//! 3. Histogram the subset statistics over the public range `[lo, hi]` with
//!    `B` equal bins, clamping anything outside into the edge bins.
//! 4. Add Gaussian noise to every bin height.
//! 5. Reconstruct `mu_hat = sum(H_j M_j) / sum(H_j)`.
//!
//! Each point lands in exactly one subset (`k = 1`), so the release costs
//! `eps_total = eps * k = eps`. Bin representatives `M_j` default to bin
//! centers: within-bin means of subset statistics depend on the data and
//! mark the release heuristic-DP.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpcore::{
    add_noise, compose_budget, derive_c, gaussian_release, Mechanism, NoiseRng, NoiseSource, NoisyStatistic,
    PrivacyParams, Sensitivity,
};
use crate::error::{ensure_positive, invalid, Error, Result};
use crate::stattests::{self, BoundedSample, ChiSquareInput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    StdDev,
    /// Goodness-of-fit chi-square of category labels `0..k` against `null_probs`.
    ChiSquarePilot { null_probs: Vec<f64> },
}

impl Statistic {
    pub fn compute(&self, values: &[f64]) -> Result<f64> {
        match self {
            Statistic::Mean => {
                if values.is_empty() {
                    return Err(invalid("values", "mean of an empty subset"));
                }
                Ok(stattests::mean(values))
            }
            Statistic::StdDev => stattests::std_dev(values),
            Statistic::ChiSquarePilot { null_probs } => {
                let k = null_probs.len();
                let mut counts = vec![0.0; k];
                for &v in values {
                    let j = v.round();
                    if (v - j).abs() > 1e-9 || j < 0.0 || j >= k as f64 {
                        return Err(invalid("values", format!("{v} is not a category label in 0..{k}")));
                    }
                    counts[j as usize] += 1.0;
                }
                let n = values.len() as f64;
                let expected = null_probs.iter().map(|p| p * n).collect();
                Ok(stattests::chi_square_statistic(&ChiSquareInput::new(counts, expected)?))
            }
        }
    }
}

/// L2 sensitivity assumed for the vector of bin heights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "h", rename_all = "snake_case")]
pub enum SensitivityMode {
    /// Scale `c h / eps`, as in the published pseudocode.
    PaperH(u32),
    /// Changing one point moves one subset statistic between two bins:
    /// sensitivity `sqrt(2)`, scale `c sqrt(2) / eps`.
    #[default]
    SwapOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinRepresentative {
    #[default]
    Center,
    /// Mean of the subset statistics in the bin; data dependent.
    WithinBinMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivHistPlan {
    pub s_datasets: usize,
    pub bins: usize,
    /// Public range of the subset statistic.
    pub range: (f64, f64),
    pub statistic: Statistic,
    /// Per-release budget.
    pub epsilon: f64,
    pub delta: f64,
    pub sensitivity_mode: SensitivityMode,
    pub bin_representative: BinRepresentative,
}

impl PrivHistPlan {
    pub fn new(s_datasets: usize, bins: usize, range: (f64, f64), statistic: Statistic, epsilon: f64, delta: f64) -> Result<Self> {
        let plan = Self {
            s_datasets,
            bins,
            range,
            statistic,
            epsilon,
            delta,
            sensitivity_mode: SensitivityMode::default(),
            bin_representative: BinRepresentative::default(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_datasets < 2 {
            return Err(invalid("s_datasets", format!("need at least 2, got {}", self.s_datasets)));
        }
        if self.bins < 2 {
            return Err(invalid("bins", format!("need at least 2, got {}", self.bins)));
        }
        let (lo, hi) = self.range;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(invalid("range", format!("need finite lo < hi, got ({lo}, {hi})")));
        }
        ensure_positive("epsilon", self.epsilon)?;
        derive_c(self.delta)?;
        if let SensitivityMode::PaperH(0) = self.sensitivity_mode {
            return Err(invalid("sensitivity_mode", "h must be at least 1"));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.range.1 - self.range.0) / self.bins as f64
    }

    /// Standard deviation of the noise on each bin height.
    pub fn height_noise_scale(&self) -> Result<f64> {
        let c = derive_c(self.delta)?;
        let sens = match self.sensitivity_mode {
            SensitivityMode::PaperH(h) => f64::from(h),
            SensitivityMode::SwapOne => std::f64::consts::SQRT_2,
        };
        Ok(c * sens / self.epsilon)
    }

    fn center(&self, j: usize) -> f64 {
        self.range.0 + (j as f64 + 0.5) * self.bin_width()
    }

    /// Bin of `v` and whether it had to be clamped.
    fn bin_of(&self, v: f64) -> (usize, bool) {
        let (lo, hi) = self.range;
        if v < lo {
            return (0, true);
        }
        if v > hi {
            return (self.bins - 1, true);
        }
        let j = ((v - lo) / self.bin_width()).floor() as usize;
        (j.min(self.bins - 1), false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub subsets: Vec<Vec<f64>>,
    /// Points left over after cutting `S` equal subsets.
    pub dropped: usize,
    /// Largest number of subsets any one point appears in.
    pub k: u32,
}

/// Shuffles and cuts the data into `s` disjoint subsets of `floor(N / s)` points.
pub fn partition_disjoint(data: &BoundedSample, s: usize, rng: &mut NoiseRng) -> Result<Partition> {
    let n = data.len();
    if s == 0 || s > n {
        return Err(invalid("s_datasets", format!("need 1 <= S <= N = {n}, got {s}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng.rng());
    let size = n / s;
    let mut appearances = vec![0u32; n];
    let subsets = order
        .chunks_exact(size)
        .take(s)
        .map(|idx| {
            idx.iter()
                .map(|&i| {
                    appearances[i] += 1;
                    data.values()[i]
                })
                .collect()
        })
        .collect();
    Ok(Partition {
        subsets,
        dropped: n - s * size,
        k: appearances.iter().copied().max().unwrap_or(0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivHistResult {
    /// Non-private global statistic; kept for error measurement and never serialized.
    #[serde(skip)]
    mu_star: f64,
    pub noisy_heights: Vec<f64>,
    pub bin_means: Vec<f64>,
    pub mu_hat: f64,
    pub epsilon_total: f64,
    pub k: u32,
    pub height_noise_scale: f64,
    pub clamped: usize,
    pub dropped: usize,
    pub heuristic_dp: bool,
    pub warnings: Vec<String>,
}

impl PrivHistResult {
    /// The non-private statistic of the whole dataset. For evaluation only.
    pub fn non_private_statistic(&self) -> f64 {
        self.mu_star
    }

    pub fn abs_error(&self) -> f64 {
        (self.mu_hat - self.mu_star).abs()
    }
}

/// Runs PrivHistogram with Gaussian height noise drawn from `rng`.
pub fn priv_histogram_statistic(data: &BoundedSample, plan: &PrivHistPlan, rng: &mut NoiseRng) -> Result<PrivHistResult> {
    let mut noise = NoiseRng::new(rng.rng().next_u64());
    priv_histogram_with_noise(data, plan, rng, &mut noise)
}

/// PrivHistogram with separate shuffling and noise sources, so tests can pin the noise.
pub fn priv_histogram_with_noise<N: NoiseSource + ?Sized>(
    data: &BoundedSample,
    plan: &PrivHistPlan,
    shuffle: &mut NoiseRng,
    noise: &mut N,
) -> Result<PrivHistResult> {
    plan.validate()?;
    let mu_star = plan.statistic.compute(data.values())?;
    let part = partition_disjoint(data, plan.s_datasets, shuffle)?;

    let mut heights = vec![0.0; plan.bins];
    let mut sums = vec![0.0; plan.bins];
    let mut clamped = 0;
    for subset in &part.subsets {
        let stat = plan.statistic.compute(subset)?;
        let (j, was_clamped) = plan.bin_of(stat);
        clamped += usize::from(was_clamped);
        heights[j] += 1.0;
        sums[j] += stat.clamp(plan.range.0, plan.range.1);
    }

    let bin_means: Vec<f64> = match plan.bin_representative {
        BinRepresentative::Center => (0..plan.bins).map(|j| plan.center(j)).collect(),
        BinRepresentative::WithinBinMean => (0..plan.bins)
            .map(|j| if heights[j] > 0.0 { sums[j] / heights[j] } else { plan.center(j) })
            .collect(),
    };

    let scale = plan.height_noise_scale()?;
    let noisy_heights = heights
        .iter()
        .map(|&h| add_noise(h, scale, Mechanism::Gaussian, plan.epsilon, noise).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;

    let total: f64 = noisy_heights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EstimateUndefined(format!(
            "noisy bin heights sum to {total}; retry with a larger epsilon or fewer bins"
        )));
    }
    let mu_hat = noisy_heights.iter().zip(&bin_means).map(|(h, m)| h * m).sum::<f64>() / total;

    let mut warnings = Vec::new();
    if part.dropped > 0 {
        warnings.push(format!("{} points dropped so that S divides N", part.dropped));
    }
    if clamped > 0 {
        warnings.push(format!("{clamped} subset statistics fell outside the range and were clamped"));
    }
    if plan.statistic == Statistic::StdDev {
        let size = part.subsets[0].len();
        warnings.push(format!("subset standard deviations use {size} points each and are biased low for small subsets"));
    }

    Ok(PrivHistResult {
        mu_star,
        noisy_heights,
        bin_means,
        mu_hat,
        epsilon_total: compose_budget(plan.epsilon, part.k)?,
        k: part.k,
        height_noise_scale: scale,
        clamped,
        dropped: part.dropped,
        heuristic_dp: plan.bin_representative == BinRepresentative::WithinBinMean,
        warnings,
    })
}

/// Sensitivity of the vanilla baseline, from the observed data range.
pub fn vanilla_sensitivity(data: &BoundedSample, statistic: &Statistic) -> Result<Sensitivity> {
    let values = data.values();
    if values.is_empty() {
        return Err(invalid("data", "empty sample"));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    let n = values.len();
    match statistic {
        Statistic::Mean => Sensitivity::scalar(range / n as f64, format!("observed range {range} / N")),
        Statistic::StdDev => {
            if n < 2 {
                return Err(invalid("data", "standard deviation needs at least two values"));
            }
            Sensitivity::scalar(range / ((n - 1) as f64).sqrt(), format!("observed range {range} / sqrt(N - 1)"))
        }
        Statistic::ChiSquarePilot { .. } => Err(invalid("statistic", "the vanilla baseline covers Mean and StdDev")),
    }
}

/// Statistic plus Gaussian noise calibrated to the observed data range.
/// Flagged heuristic-DP: the range is read from the data.
pub fn vanilla_private_statistic<N: NoiseSource + ?Sized>(
    data: &BoundedSample,
    statistic: &Statistic,
    epsilon: f64,
    delta: f64,
    noise: &mut N,
) -> Result<NoisyStatistic> {
    let sens = vanilla_sensitivity(data, statistic)?;
    let value = statistic.compute(data.values())?;
    let p = PrivacyParams::new(epsilon, delta, 1)?;
    Ok(gaussian_release(value, &sens, &p, noise)?.heuristic())
}

/// Synthetic data for the comparison harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataGenerator {
    Uniform { lo: f64, hi: f64, n: usize },
}

impl DataGenerator {
    pub fn sample<N: NoiseSource + ?Sized>(&self, rng: &mut N) -> Result<BoundedSample> {
        match *self {
            DataGenerator::Uniform { lo, hi, n } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) || n == 0 {
                    return Err(invalid("generator", format!("need lo < hi and n > 0, got ({lo}, {hi}), n={n}")));
                }
                let values = (0..n).map(|_| lo + (hi - lo) * rng.uniform_open()).collect();
                BoundedSample::new(values, lo.abs().max(hi.abs()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PrivHistogram,
    Vanilla,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::PrivHistogram => "priv_histogram",
            Method::Vanilla => "vanilla",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub trial: usize,
    pub n: usize,
    pub epsilon_total: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_abs_error: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub summaries: Vec<MethodSummary>,
    /// Fraction of trials where PrivHistogram's error is below vanilla's.
    pub win_rate: f64,
    /// Paired t statistic of `vanilla_error - priv_histogram_error`;
    /// positive when PrivHistogram is more accurate.
    pub paired_t: f64,
    /// Trials dropped because the noisy heights summed to a non-positive value.
    pub undefined_trials: usize,
}

impl ComparisonTable {
    /// Plot-ready CSV: `method,trial,n,epsilon_total,abs_error`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "method,trial,n,epsilon_total,abs_error")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{:e},{:e}", r.method.as_str(), r.trial, r.n, r.epsilon_total, r.abs_error)?;
        }
        Ok(())
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub generator: DataGenerator,
    pub trials: usize,
    pub plan: PrivHistPlan,
    pub seed: u64,
}

pub const MIN_TRIALS: usize = 50;

fn run_trial(cfg: &CompareConfig, trial: usize) -> Result<Option<(f64, f64, f64, usize)>> {
    let mut rng = NoiseRng::with_stream(cfg.seed, trial as u64);
    let data = cfg.generator.sample(&mut rng)?;
    let hist = match priv_histogram_statistic(&data, &cfg.plan, &mut rng) {
        Ok(h) => h,
        Err(Error::EstimateUndefined(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    // vanilla spends the same total budget in a single release
    let vanilla = vanilla_private_statistic(&data, &cfg.plan.statistic, hist.epsilon_total, cfg.plan.delta, &mut rng)?;
    let truth = hist.non_private_statistic();
    Ok(Some((hist.abs_error(), (vanilla.value - truth).abs(), hist.epsilon_total, data.len())))
}

/// Paired trials of PrivHistogram against the vanilla baseline on fresh
/// synthetic data. Trial `t` uses stream `t` of the seed.
pub fn compare_errors(cfg: &CompareConfig, workers: usize) -> Result<ComparisonTable> {
    if cfg.trials < MIN_TRIALS {
        return Err(invalid("trials", format!("need at least {MIN_TRIALS}, got {}", cfg.trials)));
    }
    cfg.plan.validate()?;
    let outcomes: Vec<_> = if workers <= 1 {
        (0..cfg.trials).map(|t| run_trial(cfg, t)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Solver(format!("could not start worker pool: {e}")))?;
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<_>>())?
    };

    let mut rows = Vec::with_capacity(2 * cfg.trials);
    let mut hist_err = Vec::new();
    let mut van_err = Vec::new();
    for (trial, out) in outcomes.iter().enumerate() {
        if let Some((h, v, eps_total, n)) = *out {
            rows.push(ComparisonRow { method: Method::PrivHistogram, trial, n, epsilon_total: eps_total, abs_error: h });
            rows.push(ComparisonRow { method: Method::Vanilla, trial, n, epsilon_total: eps_total, abs_error: v });
            hist_err.push(h);
            van_err.push(v);
        }
    }
    let undefined_trials = cfg.trials - hist_err.len();
    if hist_err.len() < 2 {
        return Err(Error::EstimateUndefined("fewer than two trials produced an estimate".into()));
    }
    let summarize = |method, errs: &[f64]| MethodSummary {
        method,
        mean_abs_error: stattests::mean(errs),
        std_err: stattests::std_dev(errs).unwrap_or(0.0) / (errs.len() as f64).sqrt(),
    };
    let diffs: Vec<f64> = van_err.iter().zip(&hist_err).map(|(v, h)| v - h).collect();
    let sd = stattests::std_dev(&diffs).unwrap_or(0.0);
    let mean_diff = stattests::mean(&diffs);
    let paired_t = if sd > 0.0 {
        mean_diff / (sd / (diffs.len() as f64).sqrt())
    } else {
        mean_diff.signum() * f64::INFINITY
    };
    let wins = diffs.iter().filter(|&&d| d > 0.0).count();
    Ok(ComparisonTable {
        summaries: vec![summarize(Method::PrivHistogram, &hist_err), summarize(Method::Vanilla, &van_err)],
        rows,
        win_rate: wins as f64 / diffs.len() as f64,
        paired_t,
        undefined_trials,
    })
}

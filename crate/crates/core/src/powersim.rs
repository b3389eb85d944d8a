//! Monte Carlo power for private and non-private tests.
//!
//! Reps are grouped in fixed chunks of [`CHUNK`]; chunk `i` draws from
//! ChaCha stream `i` of the plan's seed. Rejection counts are summed in
//! chunk order, so a plan gives the same estimate for any worker count.
//!
//! The z test draws the sample mean directly, `x_bar ~ N(mu0 + gamma,
//! sigma^2 / N)`, since it is sufficient; the t test draws all `N` values.
//! Privacy noise enters the mean difference at `2 c s sqrt(q) / (N eps)`,
//! and the private critical value uses the total variance
//! `V = sigma^2 / N + sigma_noise^2`:
//!
//! * `StandardError`: reject when `|D| > z_{1-alpha/2} sqrt(V)`;
//! * `PaperFaithful`: reject when `|D| > z_{1-alpha/2} V`, the literal form.
//!
//! Private chi-square and F tests are compared against the noiseless
//! reference distribution; the inflated Type I rate this causes is part of
//! what the simulation reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{quantile, DistSpec};
use crate::dpcore::{NoiseRng, NoiseSource, PrivacyParams};
use crate::error::{ensure_positive, ensure_unit_open, invalid, Error, Result};
use crate::privstats::{
    private_chi_square, private_f_statistic, z_noise_scale, BigOConstants, ChiSquareReference, FStatisticForm,
};
use crate::samplesize::{DerivationMode, PowerSpec};
use crate::stattests::{nested_f_input, ChiSquareInput, Design};

/// Reps per random stream.
pub const CHUNK: u64 = 4096;
pub const MIN_REPS: u64 = 1000;

/// One-sample location test against `mu0`, with truth `mu0 + gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTest {
    /// True effect; zero simulates the null.
    pub gamma: f64,
    pub sigma: f64,
    pub alpha: f64,
    /// Data bound entering the noise scale.
    pub bound_s: f64,
    pub mode: DerivationMode,
}

impl From<&PowerSpec> for MeanTest {
    fn from(spec: &PowerSpec) -> Self {
        Self {
            gamma: spec.gamma,
            sigma: spec.sigma,
            alpha: spec.alpha,
            bound_s: spec.bound_s,
            mode: spec.mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimTest {
    ZTest(MeanTest),
    TTest(MeanTest),
    /// Goodness of fit: counts drawn from `true_probs`, tested against `null_probs`.
    ChiSquare {
        null_probs: Vec<f64>,
        true_probs: Vec<f64>,
        alpha: f64,
    },
    /// Intercept plus `beta.len() - 1` standard normal covariates; the test
    /// drops every column after the first `r`.
    PartialF {
        beta: Vec<f64>,
        r: usize,
        noise_sd: f64,
        alpha: f64,
    },
}

/// Privacy settings for a simulated test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPrivacy {
    pub params: PrivacyParams,
    pub constants: BigOConstants,
    /// Sensitivity of the RSS ratio; used by the F test only.
    pub delta_star: f64,
}

impl SimPrivacy {
    pub fn new(params: PrivacyParams) -> Self {
        Self {
            params,
            constants: BigOConstants::default(),
            delta_star: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub test: SimTest,
    pub privacy: Option<SimPrivacy>,
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
}

impl SimPlan {
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    /// Smallest `n` the configured test accepts.
    pub fn min_n(&self) -> usize {
        match &self.test {
            SimTest::PartialF { beta, .. } => beta.len() + 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(invalid("reps", format!("need at least {MIN_REPS}, got {}", self.reps)));
        }
        if self.n < self.min_n() {
            return Err(invalid("n", format!("need at least {}, got {}", self.min_n(), self.n)));
        }
        match &self.test {
            SimTest::ZTest(m) | SimTest::TTest(m) => {
                ensure_unit_open("alpha", m.alpha)?;
                ensure_positive("sigma", m.sigma)?;
                ensure_positive("bound_s", m.bound_s)?;
                if !m.gamma.is_finite() {
                    return Err(invalid("gamma", "must be finite"));
                }
            }
            SimTest::ChiSquare { null_probs, true_probs, alpha } => {
                ensure_unit_open("alpha", *alpha)?;
                if null_probs.len() < 2 || null_probs.len() != true_probs.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "need matching probability vectors of length >= 2, got {} and {}",
                        null_probs.len(),
                        true_probs.len()
                    )));
                }
                check_probs("null_probs", null_probs, true)?;
                check_probs("true_probs", true_probs, false)?;
            }
            SimTest::PartialF { beta, r, noise_sd, alpha } => {
                ensure_unit_open("alpha", *alpha)?;
                ensure_positive("noise_sd", *noise_sd)?;
                if *r < 1 || *r >= beta.len() {
                    return Err(invalid("r", format!("need 1 <= r < {}, got {r}", beta.len())));
                }
                if beta.iter().any(|b| !b.is_finite()) {
                    return Err(invalid("beta", "must be finite"));
                }
            }
        }
        Ok(())
    }
}

fn check_probs(name: &'static str, probs: &[f64], strictly_positive: bool) -> Result<()> {
    let bad = probs
        .iter()
        .any(|&p| !p.is_finite() || p < 0.0 || (strictly_positive && p == 0.0));
    let total: f64 = probs.iter().sum();
    if bad || (total - 1.0).abs() > 1e-9 {
        return Err(invalid(name, format!("must be a probability vector, got sum {total}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power_hat: f64,
    /// Binomial standard error `sqrt(p (1 - p) / reps)`.
    pub std_err: f64,
    pub rejections: u64,
    pub reps: u64,
    pub n: usize,
    pub seed: u64,
}

/// Per-plan constants shared by every rep.
struct Prepared<'a> {
    plan: &'a SimPlan,
    critical: f64,
    noise_sd: f64,
    cumulative: Vec<f64>,
}

impl<'a> Prepared<'a> {
    fn new(plan: &'a SimPlan) -> Result<Self> {
        plan.validate()?;
        let n = plan.n as f64;
        let (critical, noise_sd, cumulative) = match &plan.test {
            SimTest::ZTest(m) => {
                let sd = match &plan.privacy {
                    Some(pr) => z_noise_scale(m.bound_s, plan.n, &pr.params)?,
                    None => 0.0,
                };
                (quantile(&DistSpec::Normal, 1.0 - m.alpha / 2.0)?, sd, Vec::new())
            }
            SimTest::TTest(m) => {
                let sd = match &plan.privacy {
                    Some(pr) => z_noise_scale(m.bound_s, plan.n, &pr.params)?,
                    None => 0.0,
                };
                let t = quantile(&DistSpec::StudentT { df: n - 1.0 }, 1.0 - m.alpha / 2.0)?;
                (t, sd, Vec::new())
            }
            SimTest::ChiSquare { null_probs, true_probs, alpha } => {
                let df = (null_probs.len() - 1) as f64;
                let crit = quantile(&DistSpec::ChiSquare { df }, 1.0 - alpha)?;
                let cumulative = true_probs
                    .iter()
                    .scan(0.0, |acc, p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect();
                (crit, 0.0, cumulative)
            }
            SimTest::PartialF { beta, r, alpha, .. } => {
                let d1 = (beta.len() - r) as f64;
                let d2 = n - beta.len() as f64;
                (quantile(&DistSpec::F { d1, d2 }, 1.0 - alpha)?, 0.0, Vec::new())
            }
        };
        Ok(Self { plan, critical, noise_sd, cumulative })
    }

    /// One rep: the statistic on the scale of `critical`, and whether it rejects.
    fn rep(&self, rng: &mut NoiseRng, scratch: &mut Vec<f64>) -> Result<(f64, bool)> {
        let plan = self.plan;
        let n = plan.n as f64;
        match &plan.test {
            SimTest::ZTest(m) => {
                let diff = m.gamma + m.sigma / n.sqrt() * rng.standard_normal();
                Ok(self.mean_decision(m, diff, m.sigma, rng))
            }
            SimTest::TTest(m) => {
                scratch.clear();
                scratch.extend((0..plan.n).map(|_| m.gamma + m.sigma * rng.standard_normal()));
                let mean = scratch.iter().sum::<f64>() / n;
                let ss: f64 = scratch.iter().map(|x| (x - mean) * (x - mean)).sum();
                let sd = (ss / (n - 1.0)).sqrt();
                Ok(self.mean_decision(m, mean, sd, rng))
            }
            SimTest::ChiSquare { null_probs, .. } => {
                let k = null_probs.len();
                let mut counts = vec![0.0; k];
                for _ in 0..plan.n {
                    let u = rng.uniform_open();
                    let j = self.cumulative.partition_point(|&c| c < u).min(k - 1);
                    counts[j] += 1.0;
                }
                let expected = null_probs.iter().map(|p| p * n).collect();
                let inp = ChiSquareInput::new(counts, expected)?;
                let stat = match &plan.privacy {
                    Some(pr) => {
                        private_chi_square(&inp, &pr.constants, ChiSquareReference::Realized, &pr.params, rng)?
                            .statistic
                            .value
                    }
                    None => crate::stattests::chi_square_statistic(&inp),
                };
                Ok((stat, stat > self.critical))
            }
            SimTest::PartialF { beta, r, noise_sd, .. } => {
                let p = beta.len();
                scratch.clear();
                let mut y = Vec::with_capacity(plan.n);
                for _ in 0..plan.n {
                    let start = scratch.len();
                    scratch.push(1.0);
                    scratch.extend((1..p).map(|_| rng.standard_normal()));
                    let mean: f64 = scratch[start..].iter().zip(beta).map(|(x, b)| x * b).sum();
                    y.push(mean + noise_sd * rng.standard_normal());
                }
                let design = Design::from_row_major(plan.n, p, scratch.clone())?;
                let inp = nested_f_input(&design, &y, *r)?;
                let stat = match &plan.privacy {
                    Some(pr) => {
                        private_f_statistic(
                            &inp,
                            pr.delta_star,
                            &pr.constants,
                            FStatisticForm::DegreesOfFreedom,
                            &pr.params,
                            rng,
                        )?
                        .statistic
                        .value
                    }
                    None => crate::stattests::partial_f_statistic(&inp),
                };
                Ok((stat, stat > self.critical))
            }
        }
    }

    fn mean_decision(&self, m: &MeanTest, diff: f64, sd: f64, rng: &mut NoiseRng) -> (f64, bool) {
        let n = self.plan.n as f64;
        if self.plan.privacy.is_none() {
            let stat = diff / (sd / n.sqrt());
            return (stat, stat.abs() > self.critical);
        }
        let noisy = diff + self.noise_sd * rng.standard_normal();
        let v = sd * sd / n + self.noise_sd * self.noise_sd;
        let scale = match m.mode {
            DerivationMode::StandardError => v.sqrt(),
            DerivationMode::PaperFaithful => v,
        };
        let stat = noisy / scale;
        (stat, stat.abs() > self.critical)
    }

    fn chunk_count(&self) -> u64 {
        self.plan.reps.div_ceil(CHUNK)
    }

    fn run_chunk<T>(&self, chunk: u64, mut each: impl FnMut(f64, bool) -> T) -> Result<Vec<T>> {
        let start = chunk * CHUNK;
        let len = CHUNK.min(self.plan.reps - start);
        let mut rng = NoiseRng::with_stream(self.plan.seed, chunk);
        let mut scratch = Vec::new();
        (0..len)
            .map(|_| self.rep(&mut rng, &mut scratch).map(|(s, r)| each(s, r)))
            .collect()
    }
}

fn run_chunks<T: Send>(
    prepared: &Prepared<'_>,
    workers: usize,
    job: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let chunks = prepared.chunk_count();
    if workers <= 1 {
        return (0..chunks).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Solver(format!("could not start worker pool: {e}")))?;
    pool.install(|| (0..chunks).into_par_iter().map(job).collect())
}

/// Fraction of reps in which the test rejects.
pub fn simulate_power(plan: &SimPlan, workers: usize) -> Result<PowerEstimate> {
    let prepared = Prepared::new(plan)?;
    let counts = run_chunks(&prepared, workers, |c| {
        Ok(prepared.run_chunk(c, |_, reject| reject)?.into_iter().filter(|&r| r).count() as u64)
    })?;
    let rejections: u64 = counts.iter().sum();
    let power_hat = rejections as f64 / plan.reps as f64;
    Ok(PowerEstimate {
        power_hat,
        std_err: (power_hat * (1.0 - power_hat) / plan.reps as f64).sqrt(),
        rejections,
        reps: plan.reps,
        n: plan.n,
        seed: plan.seed,
    })
}

/// Simulated test statistics in rep order, on the scale of the critical value.
pub fn simulate_statistics(plan: &SimPlan, workers: usize) -> Result<Vec<f64>> {
    let prepared = Prepared::new(plan)?;
    let chunks = run_chunks(&prepared, workers, |c| prepared.run_chunk(c, |s, _| s))?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Critical value the plan's statistic is compared against.
pub fn critical_value(plan: &SimPlan) -> Result<f64> {
    Ok(Prepared::new(plan)?.critical)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSearch {
    pub n: usize,
    pub estimate: PowerEstimate,
    pub target_power: f64,
}

/// Smallest `n` in `[plan.min_n(), n_max]` whose estimated power reaches
/// `target - 2 std_err`, by bisection with the plan's seed held fixed.
pub fn empirical_sample_size(
    template: &SimPlan,
    target_power: f64,
    n_max: usize,
    workers: usize,
) -> Result<SampleSearch> {
    ensure_unit_open("target_power", target_power)?;
    let meets = |n: usize| -> Result<(bool, PowerEstimate)> {
        let est = simulate_power(&template.with_n(n), workers)?;
        Ok((est.power_hat >= target_power - 2.0 * est.std_err, est))
    };
    let mut lo = template.min_n();
    if n_max < lo {
        return Err(invalid("n_max", format!("must be at least {lo}")));
    }
    let (ok_hi, mut best) = meets(n_max)?;
    if !ok_hi {
        return Err(Error::Infeasible(format!(
            "power {:.4} at n_max = {n_max} is below the target {target_power}",
            best.power_hat
        )));
    }
    let (ok_lo, est_lo) = meets(lo)?;
    if ok_lo {
        return Ok(SampleSearch { n: lo, estimate: est_lo, target_power });
    }
    let mut hi = n_max;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let (ok, est) = meets(mid)?;
        if ok {
            hi = mid;
            best = est;
        } else {
            lo = mid;
        }
    }
    Ok(SampleSearch { n: hi, estimate: best, target_power })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::normal_cdf;

    fn z_plan(gamma: f64, n: usize, reps: u64) -> SimPlan {
        SimPlan {
            test: SimTest::ZTest(MeanTest {
                gamma,
                sigma: 1.0,
                alpha: 0.05,
                bound_s: 1.0,
                mode: DerivationMode::StandardError,
            }),
            privacy: None,
            n,
            reps,
            seed: 7,
        }
    }

    #[test]
    fn worker_count_does_not_change_estimate() {
        let plan = z_plan(0.5, 32, 20_000);
        let one = simulate_power(&plan, 1).unwrap();
        let four = simulate_power(&plan, 4).unwrap();
        assert_eq!(one.rejections, four.rejections);
        assert_eq!(one.power_hat.to_bits(), four.power_hat.to_bits());
    }

    #[test]
    fn analytic_power() {
        let est = simulate_power(&z_plan(0.5, 32, 50_000), 2).unwrap();
        let analytic = normal_cdf(0.5 * 32f64.sqrt() - 1.959_963_984_540_054);
        assert!((est.power_hat - analytic).abs() < 4.0 * est.std_err, "{est:?} vs {analytic}");
        let se = (est.power_hat * (1.0 - est.power_hat) / est.reps as f64).sqrt();
        assert_eq!(est.std_err, se);
    }

    #[test]
    fn privacy_lowers_power() {
        let plain = z_plan(0.5, 32, 20_000);
        let private = SimPlan {
            privacy: Some(SimPrivacy::new(PrivacyParams::new(1.0, 1e-5, 1).unwrap())),
            ..plain.clone()
        };
        let a = simulate_power(&plain, 1).unwrap();
        let b = simulate_power(&private, 1).unwrap();
        assert!(a.power_hat - b.power_hat > 3.0 * (a.std_err.powi(2) + b.std_err.powi(2)).sqrt());
    }

    #[test]
    fn validation() {
        assert!(simulate_power(&z_plan(0.5, 32, 999), 1).is_err());
        assert!(simulate_power(&z_plan(0.5, 1, 1000), 1).is_err());
        let chi = SimPlan {
            test: SimTest::ChiSquare { null_probs: vec![0.5, 0.5], true_probs: vec![0.7, 0.2], alpha: 0.05 },
            ..z_plan(0.0, 10, 1000)
        };
        assert!(simulate_power(&chi, 1).is_err());
        let f = SimPlan {
            test: SimTest::PartialF { beta: vec![1.0, 0.0], r: 2, noise_sd: 1.0, alpha: 0.05 },
            ..z_plan(0.0, 10, 1000)
        };
        assert!(simulate_power(&f, 1).is_err());
    }

    #[test]
    fn chi_square_null_and_alternative() {
        let base = SimPlan {
            test: SimTest::ChiSquare { null_probs: vec![0.25; 4], true_probs: vec![0.25; 4], alpha: 0.05 },
            privacy: None,
            n: 200,
            reps: 8000,
            seed: 11,
        };
        let null = simulate_power(&base, 2).unwrap();
        assert!((null.power_hat - 0.05).abs() < 4.0 * null.std_err + 0.005, "{null:?}");
        let alt = SimPlan {
            test: SimTest::ChiSquare { null_probs: vec![0.25; 4], true_probs: vec![0.4, 0.2, 0.2, 0.2], alpha: 0.05 },
            ..base
        };
        assert!(simulate_power(&alt, 2).unwrap().power_hat > 0.9);
    }

    #[test]
    fn f_test_null_rate() {
        let plan = SimPlan {
            test: SimTest::PartialF { beta: vec![1.0, 0.0, 0.0], r: 1, noise_sd: 1.0, alpha: 0.05 },
            privacy: None,
            n: 30,
            reps: 5000,
            seed: 3,
        };
        let est = simulate_power(&plan, 2).unwrap();
        assert!((est.power_hat - 0.05).abs() < 4.0 * est.std_err, "{est:?}");
    }

    #[test]
    fn sample_size_search() {
        let found = empirical_sample_size(&z_plan(0.5, 2, 20_000), 0.8, 200, 2).unwrap();
        assert!((30..=34).contains(&found.n), "{found:?}");
        assert!(matches!(
            empirical_sample_size(&z_plan(0.05, 2, 2000), 0.8, 20, 1),
            Err(Error::Infeasible(_))
        ));
    }
}

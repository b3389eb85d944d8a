//! Sample sizes that restore power when test statistics carry privacy noise.
//!
//! For the z/t test the noisy mean difference has variance
//! `sigma^2 / N + 4 c^2 q s^2 / (N^2 eps^2)` under both hypotheses. Two
//! derivations are offered:
//!
//! * [`DerivationMode::PaperFaithful`] multiplies the quantiles by that
//!   variance, which gives the quadratic
//!   `gamma eps^2 N^2 - eps^2 sigma^2 z* N - 4 c^2 q s^2 z* = 0` and the closed
//!   form `N = N_og * (1 + sqrt(1 + k gamma / (eps^2 sigma^4))) / 2` with
//!   `N_og = z* sigma^2 / gamma` and `k = 16 c^2 q s^2 / z*`.
//! * [`DerivationMode::StandardError`] multiplies by the standard deviation,
//!   `z* sqrt(sigma^2 / N + 4 c^2 q s^2 / (N^2 eps^2)) = gamma`, solved
//!   numerically. Only this mode reproduces simulated power.
//!
//! Results stay real-valued; rounding up to whole participants is left to
//! presentation code ([`SampleSizeResult::n_required`]).

use serde::{Deserialize, Serialize};

use crate::distributions::{quantile, DistSpec};
use crate::dpcore::PrivacyParams;
use crate::error::{ensure_positive, ensure_unit_open, invalid, Error, Result};
use crate::privstats::BigOConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivationMode {
    PaperFaithful,
    StandardError,
}

/// Study-design side of a power calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    /// Two-sided significance level.
    pub alpha: f64,
    /// Target power `1 - beta`.
    pub power: f64,
    /// Effect size `x - x0`.
    pub gamma: f64,
    pub sigma: f64,
    /// Data bound `|x| <= s`.
    pub bound_s: f64,
    pub mode: DerivationMode,
}

impl PowerSpec {
    pub fn new(alpha: f64, power: f64, gamma: f64, sigma: f64, bound_s: f64, mode: DerivationMode) -> Result<Self> {
        let spec = Self { alpha, power, gamma, sigma, bound_s, mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_unit_open("alpha", self.alpha)?;
        ensure_unit_open("power", self.power)?;
        ensure_positive("gamma", self.gamma)?;
        ensure_positive("sigma", self.sigma)?;
        ensure_positive("bound_s", self.bound_s)
    }

    pub fn with_mode(self, mode: DerivationMode) -> Self {
        Self { mode, ..self }
    }
}

/// Where a chi-square planning value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiSquareProvenance {
    PilotPrivate,
    UserSupplied,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Relative residual of the defining equation at `n_corrected`.
    pub solver_residual: Option<f64>,
    /// Independent solution of the same equation.
    pub oracle_n: Option<f64>,
    /// `|n_corrected - oracle_n| / oracle_n`.
    pub oracle_rel_diff: Option<f64>,
    /// Degrees of freedom used for t quantiles.
    pub df: Option<f64>,
    pub z_star: Option<f64>,
    /// Loose upper bound on the chi-square correction.
    pub correction_upper_bound: Option<f64>,
    pub chi_sq_provenance: Option<ChiSquareProvenance>,
    pub constants: Option<BigOConstants>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeResult {
    pub n_baseline: f64,
    pub correction: f64,
    pub n_corrected: f64,
    pub mode: Option<DerivationMode>,
    pub diagnostics: Diagnostics,
}

impl SampleSizeResult {
    /// Whole participants: `ceil(n_corrected)`.
    pub fn n_required(&self) -> u64 {
        // guard against 31.000000000000004
        let snapped = (self.n_corrected * (1.0 - 1e-12)).ceil();
        snapped.max(1.0) as u64
    }
}

/// `quantile(1 - alpha/2) + quantile(power)` for a Normal or Student-t reference.
pub fn z_star(alpha: f64, power: f64, dist: &DistSpec) -> Result<f64> {
    ensure_unit_open("alpha", alpha)?;
    ensure_unit_open("power", power)?;
    match dist {
        DistSpec::Normal | DistSpec::StudentT { .. } => {
            Ok(quantile(dist, 1.0 - alpha / 2.0)? + quantile(dist, power)?)
        }
        other => Err(invalid("dist", format!("z* needs a Normal or Student-t reference, got {other:?}"))),
    }
}

/// Non-private sample size: `z* sigma^2 / gamma` (PaperFaithful) or
/// `(z* sigma / gamma)^2` (StandardError).
pub fn baseline_n(spec: &PowerSpec) -> Result<f64> {
    spec.validate()?;
    let zs = z_star(spec.alpha, spec.power, &DistSpec::Normal)?;
    Ok(baseline_from_z(spec, zs))
}

fn baseline_from_z(spec: &PowerSpec, zs: f64) -> f64 {
    match spec.mode {
        DerivationMode::PaperFaithful => zs * spec.sigma * spec.sigma / spec.gamma,
        DerivationMode::StandardError => (zs * spec.sigma / spec.gamma).powi(2),
    }
}

/// `4 c^2 q s^2 / eps^2`, the noise variance of the mean times `N^2`.
fn noise_numerator(spec: &PowerSpec, p: &PrivacyParams) -> f64 {
    let cs = p.c_star() * spec.bound_s / p.epsilon();
    4.0 * cs * cs
}

/// Closed-form correction factor of the PaperFaithful derivation.
pub fn paper_correction(spec: &PowerSpec, p: &PrivacyParams, zs: f64) -> f64 {
    let k = 16.0 * p.c() * p.c() * f64::from(p.q()) * spec.bound_s * spec.bound_s / zs;
    let eps = p.epsilon();
    0.5 * (1.0 + (1.0 + k * spec.gamma / (eps * eps * spec.sigma.powi(4))).sqrt())
}

/// Bisection on a sign change of `f` over `[lo, hi]`, to relative width `rel_tol`.
fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= rel_tol * mid.abs() {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Positive root of `gamma eps^2 N^2 - eps^2 sigma^2 z* N - 4 c^2 q s^2 z* = 0`
/// by bracketing and bisection. Independent of the closed form.
pub fn critical_size_quadratic_oracle(spec: &PowerSpec, p: &PrivacyParams) -> Result<f64> {
    spec.validate()?;
    let zs = z_star(spec.alpha, spec.power, &DistSpec::Normal)?;
    let noise = 4.0 * p.c() * p.c() * f64::from(p.q()) * spec.bound_s * spec.bound_s;
    quadratic_root(spec.gamma, p.epsilon(), spec.sigma, zs, noise)
}

fn quadratic_root(gamma: f64, eps: f64, sigma: f64, zs: f64, noise: f64) -> Result<f64> {
    let e2 = eps * eps;
    let g = |n: f64| gamma * e2 * n * n - e2 * sigma * sigma * zs * n - noise * zs;
    let mut hi = (zs * sigma * sigma / gamma).max(1e-300);
    let mut tries = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 2000 || !hi.is_finite() {
            return Err(Error::Solver("no positive root of the critical-size quadratic".into()));
        }
    }
    let root = bisect(g, 0.0, hi, 1e-16);
    let scale = gamma * e2 * root * root + e2 * sigma * sigma * zs * root + noise * zs;
    let resid = g(root).abs() / scale;
    debug_assert!(resid <= 1e-10, "quadratic residual {resid}");
    Ok(root)
}

/// Relative residual of the PaperFaithful critical-size equation at `n`.
pub fn paper_equation_residual(spec: &PowerSpec, p: &PrivacyParams, n: f64) -> Result<f64> {
    let zs = z_star(spec.alpha, spec.power, &DistSpec::Normal)?;
    let v = spec.sigma * spec.sigma / n + noise_numerator(spec, p) / (n * n);
    let za = quantile(&DistSpec::Normal, 1.0 - spec.alpha / 2.0)?;
    let zb = quantile(&DistSpec::Normal, spec.power)?;
    Ok(((za * v) - (spec.gamma - zb * v)).abs() / spec.gamma.max(zs * v))
}

/// Numerical solution of `z* sqrt(sigma^2/N + 4 c^2 q s^2 / (N^2 eps^2)) = gamma`.
fn standard_error_root(spec: &PowerSpec, zs: f64, noise_num: f64) -> Result<(f64, f64)> {
    let s2 = spec.sigma * spec.sigma;
    let f = |n: f64| zs * (s2 / n + noise_num / (n * n)).sqrt() - spec.gamma;
    let mut hi = (zs * spec.sigma / spec.gamma).powi(2).max(1e-12);
    let mut tries = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 2000 || !hi.is_finite() {
            return Err(Error::Solver("no bracket for the standard-error critical size".into()));
        }
    }
    let mut lo = hi;
    while f(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Solver("no lower bracket for the standard-error critical size".into()));
        }
    }
    let n = bisect(f, lo, hi, 1e-16);
    Ok((n, f(n).abs() / spec.gamma))
}

/// Corrected z-test sample size under Gaussian privacy noise.
pub fn corrected_n_ztest(spec: &PowerSpec, p: &PrivacyParams) -> Result<SampleSizeResult> {
    corrected_with_quantiles(spec, p, &DistSpec::Normal)
}

fn corrected_with_quantiles(spec: &PowerSpec, p: &PrivacyParams, dist: &DistSpec) -> Result<SampleSizeResult> {
    spec.validate()?;
    let zs = z_star(spec.alpha, spec.power, dist)?;
    let n_baseline = baseline_from_z(spec, zs);
    let noise_num = noise_numerator(spec, p);
    let mut diagnostics = Diagnostics {
        z_star: Some(zs),
        ..Default::default()
    };
    let (correction, n_corrected) = match spec.mode {
        DerivationMode::PaperFaithful => {
            let correction = paper_correction(spec, p, zs);
            let n = n_baseline * correction;
            let noise = 4.0 * p.c() * p.c() * f64::from(p.q()) * spec.bound_s * spec.bound_s;
            let oracle = quadratic_root(spec.gamma, p.epsilon(), spec.sigma, zs, noise)?;
            let e2 = p.epsilon() * p.epsilon();
            let g = spec.gamma * e2 * n * n - e2 * spec.sigma * spec.sigma * zs * n - noise * zs;
            let scale = spec.gamma * e2 * n * n + e2 * spec.sigma * spec.sigma * zs * n + noise * zs;
            diagnostics.solver_residual = Some(g.abs() / scale);
            diagnostics.oracle_n = Some(oracle);
            diagnostics.oracle_rel_diff = Some((n - oracle).abs() / oracle);
            (correction, n)
        }
        DerivationMode::StandardError => {
            let (n, resid) = standard_error_root(spec, zs, noise_num)?;
            // squaring gives a quadratic with a closed-form root
            let a = (spec.gamma / zs).powi(2);
            let s2 = spec.sigma * spec.sigma;
            let closed = (s2 + (s2 * s2 + 4.0 * a * noise_num).sqrt()) / (2.0 * a);
            diagnostics.solver_residual = Some(resid);
            diagnostics.oracle_n = Some(closed);
            diagnostics.oracle_rel_diff = Some((n - closed).abs() / closed);
            (n / n_baseline, n)
        }
    };
    if let Some(d) = diagnostics.oracle_rel_diff {
        if d > 1e-9 {
            diagnostics
                .warnings
                .push(format!("closed form and numerical root disagree by {d:e} (relative); the numerical root is authoritative"));
        }
    }
    Ok(SampleSizeResult {
        n_baseline,
        correction: correction.max(1.0),
        n_corrected,
        mode: Some(spec.mode),
        diagnostics,
    })
}

/// t-test variant: quantiles from Student-t with `N - 1` degrees of freedom,
/// iterated to a fixed point in `N`.
pub fn corrected_n_ttest(spec: &PowerSpec, p: &PrivacyParams) -> Result<SampleSizeResult> {
    let mut result = corrected_n_ztest(spec, p)?;
    for _ in 0..200 {
        let df = (result.n_corrected - 1.0).max(1.0);
        let next = corrected_with_quantiles(spec, p, &DistSpec::StudentT { df })?;
        let done = (next.n_corrected - result.n_corrected).abs() <= 1e-12 * result.n_corrected;
        result = next;
        result.diagnostics.df = Some(df);
        if done {
            return Ok(result);
        }
    }
    Err(Error::Solver("t-test sample size did not reach a fixed point".into()))
}

/// Chi-square correction `1 + C Delta_j* / (eps E_j* chi2_N)` applied to a
/// non-private sample size, with the loose bound `1 + C / (eps Delta_j*)`.
pub fn corrected_n_chisquare(
    n_nonprivate: f64,
    delta_j_star: f64,
    e_j_star: f64,
    chi_sq_n: f64,
    provenance: ChiSquareProvenance,
    consts: &BigOConstants,
    p: &PrivacyParams,
) -> Result<SampleSizeResult> {
    ensure_positive("n_nonprivate", n_nonprivate)?;
    ensure_positive("delta_j_star", delta_j_star)?;
    ensure_positive("e_j_star", e_j_star)?;
    ensure_positive("chi_sq_n", chi_sq_n)?;
    let eps = p.epsilon();
    let correction = 1.0 + consts.chi_sq_const * delta_j_star / (eps * e_j_star * chi_sq_n);
    let bound = 1.0 + consts.chi_sq_const / (eps * delta_j_star);
    let mut warnings = Vec::new();
    if bound < correction {
        warnings.push(format!(
            "loose upper bound {bound} is below the correction {correction}: Delta_j*^2 > E_j* chi2_N for these inputs"
        ));
    }
    Ok(SampleSizeResult {
        n_baseline: n_nonprivate,
        correction,
        n_corrected: n_nonprivate * correction,
        mode: None,
        diagnostics: Diagnostics {
            correction_upper_bound: Some(bound),
            chi_sq_provenance: Some(provenance),
            constants: Some(*consts),
            warnings,
            ..Default::default()
        },
    })
}

/// F-test correction `1 / (1 - C_f Delta* / eps)`, infeasible once the
/// ratio reaches one.
pub fn corrected_n_ftest(
    n_nonprivate: f64,
    delta_star: f64,
    consts: &BigOConstants,
    p: &PrivacyParams,
) -> Result<SampleSizeResult> {
    ensure_positive("n_nonprivate", n_nonprivate)?;
    if !(delta_star.is_finite() && delta_star >= 0.0) {
        return Err(invalid("delta_star", format!("must be finite and >= 0, got {delta_star}")));
    }
    let ratio = consts.f_const * delta_star / p.epsilon();
    if ratio >= 1.0 {
        return Err(Error::Infeasible(format!(
            "no finite sample size restores power at this budget (f_const * delta_star / epsilon = {ratio} >= 1)"
        )));
    }
    let correction = 1.0 / (1.0 - ratio);
    Ok(SampleSizeResult {
        n_baseline: n_nonprivate,
        correction,
        n_corrected: n_nonprivate * correction,
        mode: None,
        diagnostics: Diagnostics {
            constants: Some(*consts),
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Z_STAR: f64 = 2.801_585_218_112_968_3;

    fn spec(mode: DerivationMode) -> PowerSpec {
        PowerSpec::new(0.05, 0.8, 0.5, 1.0, 1.0, mode).unwrap()
    }

    fn params(eps: f64) -> PrivacyParams {
        PrivacyParams::new(eps, 1e-5, 1).unwrap()
    }

    #[test]
    fn z_star_values() {
        let zs = z_star(0.05, 0.8, &DistSpec::Normal).unwrap();
        assert!((zs - Z_STAR).abs() < 1e-12);
        let half = z_star(0.05, 0.5, &DistSpec::Normal).unwrap();
        assert!((half - quantile(&DistSpec::Normal, 0.975).unwrap()).abs() < 1e-15);
        let t = z_star(0.05, 0.8, &DistSpec::StudentT { df: 1e7 }).unwrap();
        assert!((t - zs).abs() < 1e-4);
        assert!(z_star(0.05, 0.8, &DistSpec::ChiSquare { df: 3.0 }).is_err());
    }

    #[test]
    fn baselines() {
        let pf = baseline_n(&spec(DerivationMode::PaperFaithful)).unwrap();
        let se = baseline_n(&spec(DerivationMode::StandardError)).unwrap();
        assert!((pf - 5.603_170_436_225_937).abs() < 1e-10);
        assert!((se - 31.395_518_937_396_353).abs() < 1e-9);
        let unit = PowerSpec::new(0.05, 0.8, Z_STAR, 1.0, 1.0, DerivationMode::PaperFaithful).unwrap();
        assert!((baseline_n(&unit).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theorem_example() {
        let r = corrected_n_ztest(&spec(DerivationMode::PaperFaithful), &params(1.0)).unwrap();
        assert!((r.correction - 4.623_872_730_524_758).abs() < 1e-9, "{}", r.correction);
        assert!(r.diagnostics.oracle_rel_diff.unwrap() < 1e-9);
        assert!((r.n_corrected - r.n_baseline * r.correction).abs() < 1e-12 * r.n_corrected);
    }

    #[test]
    fn noiseless_limit() {
        for mode in [DerivationMode::PaperFaithful, DerivationMode::StandardError] {
            let r = corrected_n_ztest(&spec(mode), &params(1e9)).unwrap();
            assert!((r.correction - 1.0).abs() < 1e-9, "{mode:?} {}", r.correction);
        }
    }

    #[test]
    fn oracle_degenerate_cases() {
        let s = spec(DerivationMode::PaperFaithful);
        let big = critical_size_quadratic_oracle(&s, &params(1e9)).unwrap();
        assert!((big / (Z_STAR / 0.5) - 1.0).abs() < 1e-9);
        let root = quadratic_root(0.5, 1.0, 1.0, Z_STAR, 0.0).unwrap();
        assert!((root - Z_STAR / 0.5).abs() <= 1e-14 * root);
    }

    #[test]
    fn correction_decreasing_in_epsilon() {
        let s = spec(DerivationMode::PaperFaithful);
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let eps = 0.1 * i as f64;
            let c = corrected_n_ztest(&s, &params(eps)).unwrap().correction;
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn standard_error_matches_closed_form_and_equation() {
        let r = corrected_n_ztest(&spec(DerivationMode::StandardError), &params(1.0)).unwrap();
        assert!(r.diagnostics.oracle_rel_diff.unwrap() < 1e-12);
        assert!(r.diagnostics.solver_residual.unwrap() < 1e-12);
        // (gamma/z*)^2 N^2 - N - 4 c^2 = 0, solved in Python
        assert!((r.n_corrected / 72.214_124_078_852_4 - 1.0).abs() < 1e-9, "{}", r.n_corrected);
    }

    #[test]
    fn paper_residual_vanishes_at_solution() {
        let s = spec(DerivationMode::PaperFaithful);
        let r = corrected_n_ztest(&s, &params(0.7)).unwrap();
        assert!(paper_equation_residual(&s, &params(0.7), r.n_corrected).unwrap() < 1e-12);
    }

    #[test]
    fn ttest_exceeds_ztest() {
        let s = spec(DerivationMode::StandardError);
        let z = corrected_n_ztest(&s, &params(1.0)).unwrap();
        let t = corrected_n_ttest(&s, &params(1.0)).unwrap();
        assert!(t.n_corrected > z.n_corrected);
        let df = t.diagnostics.df.unwrap();
        assert!((df - (t.n_corrected - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn chisquare_cases() {
        let consts = BigOConstants::default();
        let r = corrected_n_chisquare(100.0, 10.0, 20.0, 10.0, ChiSquareProvenance::UserSupplied, &consts, &params(1.0)).unwrap();
        assert!((r.correction - 1.05).abs() < 1e-15);
        assert!((r.n_corrected - 105.0).abs() < 1e-12);
        assert!(r.diagnostics.warnings.is_empty());
        let loose = corrected_n_chisquare(100.0, 10.0, 1.0, 1.0, ChiSquareProvenance::UserSupplied, &consts, &params(1.0)).unwrap();
        assert!((loose.correction - 11.0).abs() < 1e-12);
        assert_eq!(loose.diagnostics.warnings.len(), 1);
        let tiny = corrected_n_chisquare(100.0, 1e-12, 20.0, 10.0, ChiSquareProvenance::PilotPrivate, &consts, &params(1.0)).unwrap();
        assert!((tiny.correction - 1.0).abs() < 1e-12);
        let e2 = corrected_n_chisquare(100.0, 10.0, 20.0, 10.0, ChiSquareProvenance::UserSupplied, &consts, &params(2.0)).unwrap();
        assert!(((e2.correction - 1.0) * 2.0 - (r.correction - 1.0)).abs() < 1e-15);
        assert!(corrected_n_chisquare(100.0, 0.0, 20.0, 10.0, ChiSquareProvenance::UserSupplied, &consts, &params(1.0)).is_err());
    }

    #[test]
    fn ftest_cases() {
        let consts = BigOConstants::default();
        assert_eq!(corrected_n_ftest(50.0, 0.0, &consts, &params(1.0)).unwrap().correction, 1.0);
        assert!((corrected_n_ftest(50.0, 0.5, &consts, &params(1.0)).unwrap().correction - 2.0).abs() < 1e-15);
        assert!(matches!(corrected_n_ftest(50.0, 1.0, &consts, &params(1.0)), Err(Error::Infeasible(_))));
        assert!(matches!(corrected_n_ftest(50.0, 3.0, &consts, &params(1.0)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn n_required_rounds_up() {
        let r = SampleSizeResult { n_baseline: 1.0, correction: 1.0, n_corrected: 31.3955, mode: None, diagnostics: Diagnostics::default() };
        assert_eq!(r.n_required(), 32);
        let exact = SampleSizeResult { n_corrected: 31.000000000000004, ..r };
        assert_eq!(exact.n_required(), 31);
    }

    proptest! {
        #[test]
        fn mode_ratio_is_z_over_gamma(gamma in 0.05f64..2.0, sigma in 0.1f64..10.0, alpha in prop::sample::select(vec![0.01, 0.05]), power in prop::sample::select(vec![0.8, 0.9])) {
            let pf = PowerSpec::new(alpha, power, gamma, sigma, 1.0, DerivationMode::PaperFaithful).unwrap();
            let ratio = baseline_n(&pf.with_mode(DerivationMode::StandardError)).unwrap() / baseline_n(&pf).unwrap();
            let zs = z_star(alpha, power, &DistSpec::Normal).unwrap();
            prop_assert!((ratio / (zs / gamma) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn corrections_monotone(
            eps in 0.1f64..10.0, s in 0.1f64..10.0, q in 1u32..10,
            mode in prop::sample::select(vec![DerivationMode::PaperFaithful, DerivationMode::StandardError]),
        ) {
            let sp = PowerSpec::new(0.05, 0.8, 0.4, 1.3, s, mode).unwrap();
            let p = PrivacyParams::new(eps, 1e-6, q).unwrap();
            let base = corrected_n_ztest(&sp, &p).unwrap();
            prop_assert!(base.correction >= 1.0);
            let more_eps = corrected_n_ztest(&sp, &p.with_epsilon(eps * 1.5).unwrap()).unwrap();
            prop_assert!(more_eps.correction <= base.correction);
            let more_q = corrected_n_ztest(&sp, &p.with_q(q + 1).unwrap()).unwrap();
            prop_assert!(more_q.correction >= base.correction);
            let more_s = corrected_n_ztest(&PowerSpec { bound_s: s * 1.5, ..sp }, &p).unwrap();
            prop_assert!(more_s.correction >= base.correction);
        }

        #[test]
        fn f_and_chi_monotone(eps in 0.5f64..10.0, d in 0.01f64..0.4, delta in 0.1f64..50.0) {
            let consts = BigOConstants::default();
            let p = PrivacyParams::new(eps, 1e-6, 1).unwrap();
            let f1 = corrected_n_ftest(10.0, d, &consts, &p).unwrap().correction;
            let f2 = corrected_n_ftest(10.0, d * 1.1, &consts, &p).unwrap().correction;
            prop_assert!(f1 >= 1.0 && f2 >= f1);
            let c1 = corrected_n_chisquare(10.0, delta, 20.0, 5.0, ChiSquareProvenance::UserSupplied, &consts, &p).unwrap().correction;
            let c2 = corrected_n_chisquare(10.0, delta * 1.1, 20.0, 5.0, ChiSquareProvenance::UserSupplied, &consts, &p).unwrap().correction;
            prop_assert!(c1 >= 1.0 && c2 >= c1);
        }
    }
}

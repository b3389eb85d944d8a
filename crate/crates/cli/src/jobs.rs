//! The four jobs. Each reads its parameters from a [`JobConfig`], calls the
//! core library and returns a result record plus optional plot CSV.

use std::path::PathBuf;

use serde_json::Value;

use dpower::dpcore::{gaussian_release, mean_sensitivity, NoiseRng, PrivacyParams};
use dpower::powersim::{self, MeanTest, SimPlan, SimPrivacy, SimTest};
use dpower::privhist::{
    self, BinRepresentative, CompareConfig, DataGenerator, PrivHistPlan, SensitivityMode, Statistic,
};
use dpower::privstats::{self, BigOConstants, ChiSquareReference, FStatisticForm};
use dpower::samplesize::{self, ChiSquareProvenance, DerivationMode, PowerSpec};
use dpower::stattests::{nested_f_input, ChiSquareInput, Design};

use crate::config::{Job, JobConfig};
use crate::ingest::{ingest_csv, read_column};
use crate::record::{to_value, ResultRecord};
use crate::CliError;

pub struct JobOutput {
    pub record: Value,
    pub plot_csv: Option<Vec<u8>>,
}

pub fn run_job(cfg: &JobConfig) -> Result<JobOutput, CliError> {
    let (record, plot) = match cfg.job {
        Job::SampleSize => samplesize_job(cfg)?,
        Job::Power => power_job(cfg)?,
        Job::PrivStat => privstat_job(cfg)?,
        Job::Compare => compare_job(cfg)?,
    };
    cfg.check_all_used()?;
    Ok(JobOutput { record: record.finish(cfg), plot_csv: plot })
}

fn mode(cfg: &JobConfig) -> Result<DerivationMode, CliError> {
    match cfg.raw("mode").unwrap_or("stderr") {
        "paper" => Ok(DerivationMode::PaperFaithful),
        "stderr" => Ok(DerivationMode::StandardError),
        other => Err(CliError::Config(format!("mode: expected `paper` or `stderr`, got `{other}`"))),
    }
}

fn privacy_params(cfg: &JobConfig) -> Result<PrivacyParams, CliError> {
    let (eps, delta) = cfg.privacy()?;
    Ok(PrivacyParams::new(eps, delta, cfg.get_or("q", 1u32)?)?)
}

fn constants(cfg: &JobConfig) -> Result<BigOConstants, CliError> {
    let d = BigOConstants::default();
    Ok(BigOConstants::new(
        cfg.get_or("chi_sq_const", d.chi_sq_const)?,
        cfg.get_or("f_const", d.f_const)?,
        cfg.get_or("chi_sq_floor", d.chi_sq_floor)?,
    )?)
}

fn test_kind(cfg: &JobConfig) -> String {
    cfg.raw("test").unwrap_or("z").to_string()
}

fn unknown(key: &str, got: &str, choices: &str) -> CliError {
    CliError::Config(format!("{key}: expected one of {choices}, got `{got}`"))
}

fn samplesize_job(cfg: &JobConfig) -> Result<(ResultRecord, Option<Vec<u8>>), CliError> {
    let p = privacy_params(cfg)?;
    let mut rec = ResultRecord::default();
    rec.provenance("privacy", to_value(&p)?);
    let test = test_kind(cfg);
    let result = match test.as_str() {
        "z" | "t" => {
            let spec = PowerSpec::new(
                cfg.get_or("alpha", 0.05)?,
                cfg.get_or("power", 0.8)?,
                cfg.require("gamma")?,
                cfg.get_or("sigma", 1.0)?,
                cfg.get_or("s", 1.0)?,
                mode(cfg)?,
            )?;
            rec.provenance("mode", to_value(&spec.mode)?);
            if test == "z" {
                samplesize::corrected_n_ztest(&spec, &p)?
            } else {
                samplesize::corrected_n_ttest(&spec, &p)?
            }
        }
        "chisquare" => {
            let consts = constants(cfg)?;
            let provenance = match cfg.raw("chi_sq_source").unwrap_or("user") {
                "user" => ChiSquareProvenance::UserSupplied,
                "pilot" => ChiSquareProvenance::PilotPrivate,
                other => return Err(unknown("chi_sq_source", other, "user, pilot")),
            };
            rec.provenance("constants", to_value(&consts)?);
            samplesize::corrected_n_chisquare(
                cfg.require("n_nonprivate")?,
                cfg.require("delta_j_star")?,
                cfg.require("e_j_star")?,
                cfg.require("chi_sq")?,
                provenance,
                &consts,
                &p,
            )?
        }
        "f" => {
            let consts = constants(cfg)?;
            rec.provenance("constants", to_value(&consts)?);
            samplesize::corrected_n_ftest(cfg.require("n_nonprivate")?, cfg.require("delta_star")?, &consts, &p)?
        }
        other => return Err(unknown("test", other, "z, t, chisquare, f")),
    };
    rec.output("n_baseline", result.n_baseline);
    rec.output("correction", result.correction);
    rec.output("n_corrected", result.n_corrected);
    rec.output("n_required", result.n_required());
    rec.output("diagnostics", to_value(&result.diagnostics)?);
    Ok((rec, None))
}

fn sim_plan(cfg: &JobConfig, n: usize) -> Result<SimPlan, CliError> {
    let alpha = cfg.get_or("alpha", 0.05)?;
    let test = match test_kind(cfg).as_str() {
        kind @ ("z" | "t") => {
            let m = MeanTest {
                gamma: cfg.require("gamma")?,
                sigma: cfg.get_or("sigma", 1.0)?,
                alpha,
                bound_s: cfg.get_or("s", 1.0)?,
                mode: mode(cfg)?,
            };
            if kind == "z" {
                SimTest::ZTest(m)
            } else {
                SimTest::TTest(m)
            }
        }
        "chisquare" => SimTest::ChiSquare {
            null_probs: cfg.require_list("null_probs")?,
            true_probs: cfg.require_list("true_probs")?,
            alpha,
        },
        "f" => SimTest::PartialF {
            beta: cfg.require_list("beta")?,
            r: cfg.require("r")?,
            noise_sd: cfg.get_or("noise_sd", 1.0)?,
            alpha,
        },
        other => return Err(unknown("test", other, "z, t, chisquare, f")),
    };
    let privacy = if cfg.get_or("private", true)? {
        Some(SimPrivacy {
            params: privacy_params(cfg)?,
            constants: constants(cfg)?,
            delta_star: cfg.get_or("delta_star", 0.0)?,
        })
    } else {
        None
    };
    Ok(SimPlan { test, privacy, n, reps: cfg.get_or("reps", 10_000u64)?, seed: cfg.seed })
}

fn power_job(cfg: &JobConfig) -> Result<(ResultRecord, Option<Vec<u8>>), CliError> {
    let mut rec = ResultRecord::default();
    let target: Option<f64> = cfg.get("target_power")?;
    let grid: Option<Vec<usize>> = cfg.list("n_grid")?;
    let n = match (target, &grid) {
        (Some(_), _) => cfg.get_or("n", 2usize)?,
        (None, Some(g)) => cfg.get("n")?.unwrap_or_else(|| g.first().copied().unwrap_or(2)),
        (None, None) => cfg.require("n")?,
    };
    let plan = sim_plan(cfg, n)?;
    rec.provenance("test", to_value(&plan.test)?);
    rec.provenance("privacy", to_value(&plan.privacy)?);
    if matches!(plan.test, SimTest::ChiSquare { .. } | SimTest::PartialF { .. }) && plan.privacy.is_some() {
        rec.provenance("critical_value_reference", "noiseless");
    }

    let mut points = Vec::new();
    if let Some(target) = target {
        let search = powersim::empirical_sample_size(&plan, target, cfg.get_or("n_max", 100_000usize)?, cfg.workers)?;
        rec.output("search", to_value(&search)?);
        points.push(search.estimate);
    } else {
        let est = powersim::simulate_power(&plan, cfg.workers)?;
        rec.output("critical_value", powersim::critical_value(&plan)?);
        rec.output("estimate", to_value(&est)?);
        points.push(est);
    }
    if let Some(grid) = grid {
        points.clear();
        for n in grid {
            points.push(powersim::simulate_power(&plan.with_n(n), cfg.workers)?);
        }
        rec.output("grid", to_value(&points)?);
    }
    let plot = match cfg.plot_csv {
        Some(_) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(["n", "power_hat", "std_err", "reps", "seed"]).map_err(io)?;
            for e in &points {
                w.write_record([
                    e.n.to_string(),
                    format!("{:.16e}", e.power_hat),
                    format!("{:.16e}", e.std_err),
                    e.reps.to_string(),
                    e.seed.to_string(),
                ])
                .map_err(io)?;
            }
            Some(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)
        }
        None => None,
    };
    Ok((rec, plot))
}

fn sensitivity_mode(cfg: &JobConfig) -> Result<SensitivityMode, CliError> {
    match cfg.raw("sensitivity_mode").unwrap_or("swap") {
        "swap" => Ok(SensitivityMode::SwapOne),
        "paper" => Ok(SensitivityMode::PaperH(cfg.get_or("h", 1u32)?)),
        other => Err(unknown("sensitivity_mode", other, "swap, paper")),
    }
}

fn hist_statistic(cfg: &JobConfig, key: &str) -> Result<Statistic, CliError> {
    match cfg.raw(key).unwrap_or("mean") {
        "mean" => Ok(Statistic::Mean),
        "std" => Ok(Statistic::StdDev),
        "chisquare" => Ok(Statistic::ChiSquarePilot { null_probs: cfg.require_list("null_probs")? }),
        other => Err(unknown(key, other, "mean, std, chisquare")),
    }
}

fn hist_plan(cfg: &JobConfig, statistic: Statistic, default_range: (f64, f64), eps: f64, delta: f64) -> Result<PrivHistPlan, CliError> {
    let mut plan = PrivHistPlan::new(
        cfg.get_or("s_datasets", 100usize)?,
        cfg.get_or("bins", 20usize)?,
        (cfg.get_or("range_lo", default_range.0)?, cfg.get_or("range_hi", default_range.1)?),
        statistic,
        eps,
        delta,
    )?;
    plan.sensitivity_mode = sensitivity_mode(cfg)?;
    plan.bin_representative = match cfg.raw("bin_representative").unwrap_or("center") {
        "center" => BinRepresentative::Center,
        "within" => BinRepresentative::WithinBinMean,
        other => return Err(unknown("bin_representative", other, "center, within")),
    };
    plan.validate()?;
    Ok(plan)
}

fn privstat_job(cfg: &JobConfig) -> Result<(ResultRecord, Option<Vec<u8>>), CliError> {
    let p = privacy_params(cfg)?;
    let path = PathBuf::from(cfg.require::<String>("data")?);
    let mut rng = NoiseRng::new(cfg.seed);
    let mut rec = ResultRecord::default();
    rec.provenance("privacy", to_value(&p)?);
    let statistic: String = cfg.require("statistic")?;
    match statistic.as_str() {
        "z" | "mean" | "std" | "histogram" => {
            let column: String = cfg.require("column")?;
            let sample = ingest_csv(&path, &column, cfg.require("s")?)?;
            rec.output("n", sample.len());
            match statistic.as_str() {
                "z" => {
                    let r = privstats::private_z_statistic(&sample, cfg.require("mu")?, cfg.require("sigma")?, &p, &mut rng)?;
                    rec.output("statistic", to_value(&r)?);
                }
                "mean" => {
                    let sens = mean_sensitivity(sample.bound_s(), sample.len())?;
                    rec.output("statistic", to_value(&gaussian_release(sample.mean(), &sens, &p, &mut rng)?)?);
                    rec.provenance("sensitivity", to_value(&sens)?);
                }
                "std" => {
                    let r = privstats::private_sample_std(&sample, &p, &mut rng)?;
                    rec.output("statistic", to_value(&r.statistic)?);
                    rec.output("variance_of_mean", r.variance_of_mean);
                    rec.output("variance_of_mean_noise_var", r.variance_of_mean_noise_var);
                }
                _ => {
                    let stat = hist_statistic(cfg, "hist_statistic")?;
                    let s = sample.bound_s();
                    let default_range = match stat {
                        Statistic::StdDev => (0.0, s),
                        _ => (-s, s),
                    };
                    let plan = hist_plan(cfg, stat, default_range, p.epsilon(), p.delta())?;
                    let r = privhist::priv_histogram_statistic(&sample, &plan, &mut rng)?;
                    rec.output("histogram", to_value(&r)?);
                    rec.provenance("plan", to_value(&plan)?);
                }
            }
        }
        "chisquare" => {
            let observed = read_column(&path, &cfg.require::<String>("observed_column")?)?;
            let expected = read_column(&path, &cfg.require::<String>("expected_column")?)?;
            let consts = constants(cfg)?;
            let reference = match cfg.get::<f64>("pilot_chi_sq")? {
                Some(v) => ChiSquareReference::Pilot(v),
                None => ChiSquareReference::Realized,
            };
            let inp = ChiSquareInput::new(observed, expected)?;
            let r = privstats::private_chi_square(&inp, &consts, reference, &p, &mut rng)?;
            rec.output("result", to_value(&r)?);
            rec.provenance("constants", to_value(&consts)?);
        }
        "f" => {
            let y = read_column(&path, &cfg.require::<String>("column")?)?;
            let covariates: Vec<String> = cfg.require_list("covariates")?;
            let mut cols = Vec::new();
            if cfg.get_or("intercept", true)? {
                cols.push(vec![1.0; y.len()]);
            }
            for c in &covariates {
                cols.push(read_column(&path, c)?);
            }
            let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
            let design = Design::from_rows(&rows)?;
            let inp = nested_f_input(&design, &y, cfg.require("r")?)?;
            let consts = constants(cfg)?;
            let form = match cfg.raw("form").unwrap_or("df") {
                "df" => FStatisticForm::DegreesOfFreedom,
                "n" => FStatisticForm::TimesN,
                other => return Err(unknown("form", other, "df, n")),
            };
            let r = privstats::private_f_statistic(&inp, cfg.require("delta_star")?, &consts, form, &p, &mut rng)?;
            rec.output("result", to_value(&r)?);
            rec.output("f_input", to_value(&inp)?);
            rec.provenance("constants", to_value(&consts)?);
        }
        other => return Err(unknown("statistic", other, "z, mean, std, histogram, chisquare, f")),
    }
    Ok((rec, None))
}

fn compare_job(cfg: &JobConfig) -> Result<(ResultRecord, Option<Vec<u8>>), CliError> {
    let (eps, delta) = cfg.privacy()?;
    let lo = cfg.get_or("lo", 0.0)?;
    let hi = cfg.get_or("hi", 1.0)?;
    let statistic = hist_statistic(cfg, "statistic")?;
    let default_range = match statistic {
        Statistic::StdDev => (0.0, (hi - lo) / 2.0),
        _ => (lo, hi),
    };
    let plan = hist_plan(cfg, statistic, default_range, eps, delta)?;
    let compare = CompareConfig {
        generator: DataGenerator::Uniform { lo, hi, n: cfg.get_or("n", 10_000usize)? },
        trials: cfg.get_or("trials", 200usize)?,
        plan,
        seed: cfg.seed,
    };
    let table = privhist::compare_errors(&compare, cfg.workers)?;
    let mut rec = ResultRecord::default();
    rec.output("summaries", to_value(&table.summaries)?);
    rec.output("win_rate", table.win_rate);
    rec.output("paired_t", table.paired_t);
    rec.output("undefined_trials", table.undefined_trials);
    rec.output("rows", table.rows.len());
    rec.provenance("plan", to_value(&compare.plan)?);
    rec.provenance("generator", to_value(&compare.generator)?);
    let plot = match cfg.plot_csv {
        Some(_) => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
            Some(buf)
        }
        None => None,
    };
    Ok((rec, plot))
}

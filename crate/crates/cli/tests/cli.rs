use std::path::Path;
use std::process::{Command, Output};

use dpower_cli::ingest_csv;
use serde_json::Value;

fn dpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpower")).args(args).output().unwrap()
}

fn record(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_class(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error_class"].as_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn ingest_examples() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.csv", "id,x\na,1\nb,2\nc,3\n");
    assert_eq!(ingest_csv(Path::new(&ok), "x", 5.0).unwrap().len(), 3);

    let bad = write(dir.path(), "bad.csv", "x\n1\n7\n2\n");
    let msg = ingest_csv(Path::new(&bad), "x", 5.0).unwrap_err().to_string();
    assert!(msg.contains("row 2"), "{msg}");

    let empty = write(dir.path(), "empty.csv", "x\n");
    assert!(ingest_csv(Path::new(&empty), "x", 5.0).unwrap_err().to_string().contains("no data rows"));

    let text = write(dir.path(), "text.csv", "x\n1\nabc\n");
    let msg = ingest_csv(Path::new(&text), "x", 5.0).unwrap_err().to_string();
    assert!(msg.contains("row 2") && msg.contains("abc"), "{msg}");
    assert!(ingest_csv(Path::new(&ok), "y", 5.0).unwrap_err().to_string().contains("no column"));
}

#[test]
fn samplesize_record() {
    let out = dpower(&["samplesize", "--epsilon", "1", "--delta", "1e-5", "--mode", "paper", "--set", "gamma=0.5"]);
    let v = record(&out);
    let correction = v["outputs"]["correction"].as_f64().unwrap();
    assert!((correction - 4.6238727305247584).abs() < 1e-9);
    assert!(v["outputs"]["diagnostics"]["oracle_rel_diff"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["outputs"]["n_required"], 26);
    assert_eq!(v["provenance"]["mode"], "paper_faithful");
    assert_eq!(v["inputs"]["gamma"], "0.5");
    assert!(v["tool_version"].as_str().unwrap().starts_with("dpower-cli"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "job.cfg", "# theorem inputs\nepsilon = 0.5\ndelta = 1e-5\ngamma = 0.5\nmode = paper\n");
    let from_file = record(&dpower(&["samplesize", "--config", &cfg]));
    let overridden = record(&dpower(&["samplesize", "--config", &cfg, "--epsilon", "1"]));
    assert_eq!(overridden["inputs"]["epsilon"], "1");
    let a = from_file["outputs"]["correction"].as_f64().unwrap();
    let b = overridden["outputs"]["correction"].as_f64().unwrap();
    assert!(a > b);
    assert!((b - 4.6238727305247584).abs() < 1e-9);
}

#[test]
fn privacy_parameters_are_mandatory() {
    for job in ["samplesize", "power", "privstat", "compare"] {
        let out = dpower(&[job, "--epsilon", "1", "--set", "gamma=0.5", "--set", "n=10"]);
        assert_eq!(out.status.code(), Some(2), "{job}");
        assert_eq!(error_class(&out), "config");
    }
    // a non-private power run needs no budget
    let out = dpower(&["power", "--set", "private=false", "--set", "gamma=0.5", "--set", "n=32", "--set", "reps=2000"]);
    assert!(out.status.success());
}

#[test]
fn infeasible_exit_class() {
    let out = dpower(&["samplesize", "--epsilon", "0.5", "--delta", "1e-5", "--set", "test=f", "--set", "n_nonprivate=40", "--set", "delta_star=0.5"]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(error_class(&out), "infeasible");
}

#[test]
fn unknown_keys_rejected() {
    let out = dpower(&["samplesize", "--epsilon", "1", "--delta", "1e-5", "--set", "gamma=0.5", "--set", "gamme=0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamme"));
}

#[test]
fn compare_emits_two_rows_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig.csv");
    let out = dpower(&[
        "compare", "--epsilon", "1", "--delta", "1e-5", "--seed", "3", "--plot-csv", csv.to_str().unwrap(),
        "--set", "n=2000", "--set", "trials=50", "--set", "s_datasets=100",
    ]);
    let v = record(&out);
    assert_eq!(v["outputs"]["undefined_trials"], 0);
    assert_eq!(v["outputs"]["rows"], 100);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,trial,n,epsilon_total,abs_error");
    assert_eq!(lines.len(), 101);
    assert_eq!(lines.iter().filter(|l| l.starts_with("vanilla,")).count(), 50);
}

#[test]
fn privstat_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x,obs,exp,y,x1\n");
    for i in 0..40 {
        let x = (i as f64 / 39.0) * 2.0 - 1.0;
        text.push_str(&format!("{x},{},{},{},{}\n", 10 + i % 3, 11, 0.5 * x + ((i * 7) % 5) as f64 * 0.1, x));
    }
    let data = write(dir.path(), "d.csv", &text);
    let data_arg = format!("data={data}");
    let base = ["privstat", "--epsilon", "1", "--delta", "1e-5", "--seed", "4", "--set", &data_arg];
    let run = |extra: &[&str]| {
        let mut args: Vec<&str> = base.to_vec();
        args.extend_from_slice(extra);
        record(&dpower(&args))
    };
    let z = run(&["--set", "statistic=z", "--set", "column=x", "--set", "s=1", "--set", "mu=0", "--set", "sigma=0.5"]);
    assert_eq!(z["outputs"]["statistic"]["mechanism"], "gaussian");
    let sd = run(&["--set", "statistic=std", "--set", "column=x", "--set", "s=1"]);
    assert!(sd["outputs"]["variance_of_mean_noise_var"].as_f64().unwrap() > 0.0);
    let hist = run(&["--set", "statistic=histogram", "--set", "column=x", "--set", "s=1", "--set", "s_datasets=4", "--set", "bins=8"]);
    assert_eq!(hist["outputs"]["histogram"]["k"], 1);
    assert!(hist["outputs"]["histogram"].get("mu_star").is_none());
    let chi = run(&["--set", "statistic=chisquare", "--set", "observed_column=obs", "--set", "expected_column=exp"]);
    assert_eq!(chi["outputs"]["result"]["statistic"]["heuristic_dp"], true);
    let f = run(&["--set", "statistic=f", "--set", "column=y", "--set", "covariates=x1", "--set", "r=1", "--set", "delta_star=0.1"]);
    assert!(f["outputs"]["f_input"]["rss_r"].as_f64().unwrap() >= f["outputs"]["f_input"]["rss_f"].as_f64().unwrap());

    let out = dpower(&["privstat", "--epsilon", "1", "--delta", "1e-5", "--set", &data_arg, "--set", "statistic=mean", "--set", "column=x", "--set", "s=0.5"]);
    assert_eq!(error_class(&out), "data");
}

#[test]
fn power_search_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    let v = record(&dpower(&[
        "power", "--set", "private=false", "--set", "gamma=0.5", "--set", "target_power=0.8", "--set", "reps=20000", "--set", "n_max=200",
    ]));
    let n = v["outputs"]["search"]["n"].as_u64().unwrap();
    assert!((30..=34).contains(&n), "{n}");
    record(&dpower(&[
        "power", "--epsilon", "1", "--delta", "1e-5", "--set", "gamma=0.5", "--set", "n_grid=30,60,90", "--set", "reps=5000",
        "--plot-csv", csv.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
}

#[test]
fn rerun_is_byte_identical() {
    let args = ["power", "--epsilon", "1", "--delta", "1e-5", "--seed", "11", "--workers", "1", "--set", "gamma=0.4", "--set", "n=50", "--set", "test=t", "--set", "reps=3000"];
    let a = dpower(&args);
    let b = dpower(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut four = args.to_vec();
    four[8] = "4";
    let c = record(&dpower(&four));
    let a = record(&a);
    assert_eq!(a["outputs"], c["outputs"]);
}

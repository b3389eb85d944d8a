//! Checks the distribution kernel against `data/dist_reference.csv`, a table
//! produced by 40-digit mpmath root finding (see `data/gen_dist_reference.py`).

use dpower::distributions::{cdf, quantile, sf};
use dpower::DistSpec;

pub struct RefRow {
    pub dist: DistSpec,
    pub p: f64,
    pub x: f64,
}

pub fn load_reference() -> Vec<RefRow> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/dist_reference.csv");
    let mut rdr = csv::Reader::from_path(path).expect("reference table present");
    rdr.records()
        .map(|rec| {
            let rec = rec.unwrap();
            let params: Vec<f64> = rec[1].split(';').filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
            let dist = match &rec[0] {
                "normal" => DistSpec::Normal,
                "student_t" => DistSpec::StudentT { df: params[0] },
                "chi_square" => DistSpec::ChiSquare { df: params[0] },
                "f" => DistSpec::F { d1: params[0], d2: params[1] },
                other => panic!("unknown family {other}"),
            };
            RefRow { dist, p: rec[2].parse().unwrap(), x: rec[3].parse().unwrap() }
        })
        .collect()
}

#[test]
fn table_covers_four_families() {
    let rows = load_reference();
    assert!(rows.len() >= 200);
    for fam in ["Normal", "StudentT", "ChiSquare", "F"] {
        assert!(rows.iter().any(|r| format!("{:?}", r.dist).starts_with(fam)));
    }
}

#[test]
fn quantiles_match_reference() {
    for r in load_reference() {
        let x = quantile(&r.dist, r.p).unwrap();
        // real-line families are centred at zero, so scale by max(|x|, 1)
        let err = match r.dist {
            DistSpec::Normal => (x - r.x).abs(),
            DistSpec::StudentT { .. } => (x - r.x).abs() / r.x.abs().max(1.0),
            _ => (x - r.x).abs() / r.x.abs(),
        };
        let tol = if r.dist == DistSpec::Normal { 1e-10 } else { 1e-8 };
        assert!(err <= tol, "{:?} p={} got {x} want {} err {err:e}", r.dist, r.p, r.x);
    }
}

#[test]
fn cdf_matches_reference() {
    for r in load_reference() {
        let (got, want) = if r.p <= 0.5 {
            (cdf(&r.dist, r.x).unwrap(), r.p)
        } else {
            (sf(&r.dist, r.x).unwrap(), 1.0 - r.p)
        };
        let err = if r.dist == DistSpec::Normal { (got - want).abs() } else { (got - want).abs() / want };
        let tol = if r.dist == DistSpec::Normal { 1e-10 } else { 1e-8 };
        assert!(err <= tol, "{:?} x={} got {got:e} want {want:e}", r.dist, r.x);
    }
}

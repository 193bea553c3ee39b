use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dppmap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dppmap"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DPP_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = dppmap(args, cwd);
    assert!(
        out.status.success(),
        "dppmap {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn run_writes_a_complete_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "gen", "--n", "60", "--d", "20", "--seed", "3", "--out", "B.dppm1",
        ],
        dir.path(),
    );
    ok(
        &[
            "run",
            "--algo",
            "lazyfast",
            "--input",
            "B.dppm1",
            "--input-kind",
            "B",
            "--k",
            "5",
            "--seed",
            "1",
            "--out",
            "r.json",
            "--check",
        ],
        dir.path(),
    );
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    for field in [
        "algo",
        "input_kind",
        "n",
        "d",
        "k",
        "selection",
        "objective",
        "offdiag",
        "kernel_evals",
        "pq_ops",
        "termination",
        "t_stop",
        "timings",
    ] {
        assert!(r.get(field).is_some(), "missing {field}");
    }
    assert_eq!(r["algo"], "lazyfast");
    assert_eq!(
        (r["n"].as_u64(), r["d"].as_u64(), r["k"].as_u64()),
        (Some(60), Some(20), Some(5))
    );
    assert_eq!(r["selection"].as_array().unwrap().len(), 5);
    let t = &r["timings"];
    for field in ["setup_ms", "greedy_ms", "total_ms"] {
        assert!(t[field].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn same_seed_gives_same_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["gen", "--n", "40", "--seed", "9", "--out", "B.dppm1"],
        dir.path(),
    );
    for algo in ["random", "stochastic", "double-fast"] {
        let run = || {
            let mut v: Value = serde_json::from_str(&ok(
                &[
                    "run", "--algo", algo, "--input", "B.dppm1", "--k", "6", "--seed", "4",
                ],
                dir.path(),
            ))
            .unwrap();
            v.as_object_mut().unwrap().remove("timings");
            v
        };
        assert_eq!(run(), run(), "{algo}");
    }
}

#[test]
fn run_on_kernel_input_and_ingested_ratings() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "gen", "--n", "30", "--seed", "2", "--kernel", "--out", "L.csv",
        ],
        dir.path(),
    );
    let r: Value = serde_json::from_str(&ok(
        &[
            "run",
            "--algo",
            "fast",
            "--input",
            "L.csv",
            "--input-kind",
            "L",
            "--k",
            "4",
            "--check",
        ],
        dir.path(),
    ))
    .unwrap();
    assert_eq!(r["input_kind"], "L");

    std::fs::write(
        dir.path().join("t.csv"),
        "user,item,rating\nu1,m1,5\nu1,m2,3\nu2,m1,4\nu3,m3,4.5\n",
    )
    .unwrap();
    ok(
        &["ingest", "--input", "t.csv", "--out", "t.dpps1"],
        dir.path(),
    );
    let ids: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("t.dpps1.idmap.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(ids["items"], serde_json::json!(["m1", "m3"]));
    assert_eq!(ids["users"], serde_json::json!(["u1", "u2", "u3"]));
    let r: Value = serde_json::from_str(&ok(
        &[
            "run", "--algo", "lazyfast", "--input", "t.dpps1", "--k", "2", "--check",
        ],
        dir.path(),
    ))
    .unwrap();
    // m1 has two ones (L₀₀ = 2); m3 has one (L₁₁ = 1), so adding it gains
    // ln 1 = 0 and the run stops there.
    assert_eq!(r["selection"], serde_json::json!([0]));
    assert_eq!(r["termination"]["non_positive_gain"]["boundary"], true);
}

#[test]
fn ingest_reads_netflix_layout() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("mv.txt"),
        "7:\n11,5,2005-01-01\n12,2,2005-01-02\n8:\n12,4,2005-02-02\n",
    )
    .unwrap();
    ok(
        &[
            "ingest",
            "--netflix",
            "--input",
            "mv.txt",
            "--out",
            "nf.dpps1",
        ],
        dir.path(),
    );
    let ids: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("nf.dpps1.idmap.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(ids["items"], serde_json::json!(["7", "8"]));
    assert_eq!(ids["users"], serde_json::json!(["11", "12"]));
}

#[test]
fn bench_lazyfast_computes_fewer_off_diagonals() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        &[
            "bench",
            "--algos",
            "fast,lazyfast",
            "--n",
            "2000",
            "--d",
            "2000",
            "--k",
            "100",
            "--seed",
            "1",
        ],
        dir.path(),
    );
    let rows = csv_rows(&out);
    assert_eq!(
        rows[0].join(","),
        "algo,input_kind,n,d,k,seed,epsilon,time_ms,greedy_ms,U,kernel_evals,logdet,terminated_early"
    );
    let u = |algo: &str| -> u64 {
        rows.iter().find(|r| r[0] == algo).unwrap()[9]
            .parse()
            .unwrap()
    };
    assert!(u("lazyfast") <= u("fast"), "{out}");
    // Fast computes (k−1)(2n−k)/2 off-diagonals when it runs all k steps.
    assert_eq!(u("fast"), 99 * (4000 - 100) / 2);
    let logdet = |algo: &str| -> f64 {
        rows.iter().find(|r| r[0] == algo).unwrap()[11]
            .parse()
            .unwrap()
    };
    assert!((logdet("fast") - logdet("lazyfast")).abs() <= 1e-8 * logdet("fast").abs());
}

#[test]
fn bench_appends_rows_and_records_bad_cells() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench",
        "--algos",
        "lazyfast,stochastic,double-fast",
        "--n",
        "30,40",
        "--k",
        "3,50",
        "--seed",
        "5",
        "--out",
        "g.csv",
    ];
    ok(&args, dir.path());
    ok(&args, dir.path());
    let text = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.iter().filter(|r| r[0] == "algo").count(), 1);
    // Per run: 2 instances × (2 constrained algos × 2 k + 1 double greedy).
    assert_eq!(rows.len(), 1 + 2 * 10);
    let bad: Vec<_> = rows.iter().filter(|r| r[12] == "error").collect();
    assert_eq!(bad.len(), 2 * 4);
    assert!(bad.iter().all(|r| r[4] == "50"));
    assert!(rows
        .iter()
        .filter(|r| r[0] == "stochastic")
        .all(|r| r[6] == "0.5"));
    assert!(rows
        .iter()
        .filter(|r| r[0] == "double-fast")
        .all(|r| r[4].is_empty()));
}

#[test]
fn bench_timeout_is_recorded_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        &[
            "bench",
            "--algos",
            "naive",
            "--n",
            "1500",
            "--k",
            "300",
            "--timeout-s",
            "0.05",
        ],
        dir.path(),
    );
    let rows = csv_rows(&out);
    assert_eq!(rows[1][12], "timeout");
}

#[test]
fn bench_runs_on_a_worker_pool() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dppmap"))
        .args([
            "bench",
            "--algos",
            "fast,lazy",
            "--n",
            "50,60,70",
            "--k",
            "4",
            "--seed",
            "1,2",
        ])
        .current_dir(dir.path())
        .env("DPP_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 1 + 3 * 2 * 2);
    // Cells come out in grid order regardless of which worker ran them.
    let ns: Vec<&str> = rows[1..].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(
        ns,
        ["50", "50", "50", "50", "60", "60", "60", "60", "70", "70", "70", "70"]
    );
}

#[test]
fn verify_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dppmap(&["verify", "--quick"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS 01 ")));
    assert!(text.lines().any(|l| l.starts_with("PASS 10 ")));
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!dppmap(
        &["run", "--algo", "greedy", "--input", "x", "--k", "1"],
        dir.path()
    )
    .status
    .success());
    assert!(!dppmap(
        &[
            "run",
            "--algo",
            "fast",
            "--input",
            "missing.dppm1",
            "--k",
            "1"
        ],
        dir.path()
    )
    .status
    .success());
    ok(&["gen", "--n", "5", "--out", "B.dppm1"], dir.path());
    let out = dppmap(&["run", "--algo", "fast", "--input", "B.dppm1"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs a cardinality bound"));
}

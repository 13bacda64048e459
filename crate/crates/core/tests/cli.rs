use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 7
cv_repeats = 0
repeats = 2

[scenario]
n = 300
n_noise = 10
preset = "Y20_overall40"

[selection]
m_imputations = 2
b_bootstrap = 10
n_perm = 20

[selection.bart]
n_draws = 100
burn_in = 50

[selection.impute.forest]
n_trees = 20

[selection.rfe.gbt]
rounds = 30

[predict.bart]
n_trees = 20
n_draws = 100
burn_in = 50

[predict.impute.forest]
n_trees = 20
"#;

fn rrbart(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("tiny.toml");
    if !cfg.exists() {
        std::fs::write(&cfg, TINY).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_rrbart"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn generate_is_seeded_and_lists_the_useful_set() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&rrbart(d, &["generate", "--config", "tiny.toml", "--out", "a"]));
    ok(&rrbart(d, &["generate", "--config", "tiny.toml", "--out", "b"]));
    let cell = "n300_noise10_Y20_overall40";
    assert_eq!(
        read(d.join("a").join(cell).join("rep1.csv")),
        read(d.join("b").join(cell).join("rep1.csv"))
    );
    let truth = read(d.join("a").join(cell).join("rep1.csv.truth.csv"));
    assert_eq!(
        truth.lines().next().unwrap(),
        "# useful: x1,x2,x3,x4,x5,x6,x7,x8,x9,x10"
    );
    ok(&rrbart(d, &["generate", "--seed", "8", "--grid", "--out", "grid"]));
    let cells = std::fs::read_dir(d.join("grid"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_dir())
        .count();
    assert_eq!(cells, 26);
}

#[test]
fn select_replays_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&rrbart(d, &["select", "--config", "tiny.toml", "--out", "first"]));
    let manifest = read(d.join("first/manifest.toml"));
    assert!(manifest.contains("alpha = 0.05"), "{manifest}");
    assert!(manifest.contains("command = \"select\""));
    ok(&rrbart(
        d,
        &["select", "--config", "first/manifest.toml", "--out", "again"],
    ));
    assert_eq!(
        read(d.join("first/report_rr-bart.txt")),
        read(d.join("again/report_rr-bart.txt"))
    );
    assert_eq!(read(d.join("first/vip_draws.csv")), read(d.join("again/vip_draws.csv")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // no seed
    assert_eq!(rrbart(d, &["select", "--out", "x"]).status.code(), Some(2));
    // bootstrap selection without pi
    let out = rrbart(d, &["select", "--config", "tiny.toml", "--method", "bi-bart"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pi"));
    // unknown method
    assert_eq!(
        rrbart(d, &["select", "--seed", "1", "--method", "lasso"]).status.code(),
        Some(2)
    );
    // unreadable data
    std::fs::write(
        d.join("schema.txt"),
        "name=x1 kind=continuous role=predictor\nname=y kind=binary role=outcome\n",
    )
    .unwrap();
    let out = rrbart(
        d,
        &[
            "select",
            "--seed",
            "1",
            "--input",
            "missing.csv",
            "--schema",
            "schema.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_is_worker_invariant_and_sweeps_pi() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pis = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    let args = |out: &'static str, workers: &'static str| {
        vec![
            "simulate",
            "--config",
            "tiny.toml",
            "--replications",
            "2",
            "--method",
            "rr-bart,bi-xgb",
            "--pi",
            pis,
            "--out",
            out,
            "--workers",
            workers,
        ]
    };
    ok(&rrbart(d, &args("one", "1")));
    ok(&rrbart(d, &args("two", "2")));
    let metrics = read(d.join("one/metrics.csv"));
    assert_eq!(metrics, read(d.join("two/metrics.csv")));
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows.iter().filter(|r| r.contains("bi-xgb(pi=")).count(), 10);
    let header = metrics.lines().next().unwrap();
    for col in [
        "auc_mean",
        "precision_mean",
        "recall_mean",
        "f1_mean",
        "type_i_mean",
        "failed",
    ] {
        assert!(header.split(',').any(|c| c == col));
    }
    let reps = read(d.join("one/replications.csv"));
    assert_eq!(reps.lines().count(), 1 + 2 * 11);
    let manifest = read(d.join("one/manifest.toml"));
    assert_eq!(manifest.matches("[[seeds]]").count(), 2);
}

#[test]
fn evaluate_impute_and_ampute_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&rrbart(
        d,
        &[
            "evaluate",
            "--config",
            "tiny.toml",
            "--method",
            "xgb,rr-bart",
            "--out",
            "ev",
        ],
    ));
    let summary = read(d.join("ev/evaluate.csv"));
    let header = summary.lines().next().unwrap();
    for col in ["auc_mean", "auc_lower", "auc_upper", "empty_selections"] {
        assert!(header.split(',').any(|c| c == col), "{header}");
    }
    assert_eq!(summary.lines().count(), 3);
    assert_eq!(read(d.join("ev/cv_auc_rr-bart.csv")).lines().count(), 3);

    ok(&rrbart(d, &["ampute", "--config", "tiny.toml", "--out", "amp"]));
    let cell = d.join("amp/n300_noise10_Y20_overall40");
    assert!(read(cell.join("rep1_amputed.csv")).contains(",,") || read(cell.join("rep1_amputed.csv")).contains("NA"));
    let input = cell.join("rep1_amputed.csv");
    let schema = cell.join("schema.txt");
    ok(&rrbart(
        d,
        &[
            "impute",
            "--config",
            "tiny.toml",
            "--input",
            input.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--out",
            "imp",
        ],
    ));
    assert!(d.join("imp/imputation_1.csv").exists() && d.join("imp/imputation_2.csv").exists());
    assert!(!d.join("imp/imputation_3.csv").exists());
}

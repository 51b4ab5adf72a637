use std::path::Path;
use std::process::{Command, Output};

fn pacdist(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pacdist"))
        .args(args)
        .current_dir(cwd)
        .env("PACDIST_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn pipeline_and_replay_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&pacdist(&["gen-tree", "--d", "8", "--depth", "2", "--samples", "3000", "--seed", "4", "--out", "gen"], d));
    assert_ok(&pacdist(
        &["train", "--data", "gen/dataset.csv", "--layers", "2", "--width", "16", "--epochs", "4", "--lr", "0.01", "--out", "train"],
        d,
    ));
    assert_ok(&pacdist(
        &["distill-tree", "--source", "train/model.json", "--depth", "2", "--k", "20", "--tau", "10", "--leaf-samples", "4000", "--out", "dt"],
        d,
    ));
    assert_ok(&pacdist(&["eval", "--f", "dt/tree.json", "--g", "gen/target.json", "--out", "ev"], d));
    let eval: serde_json::Value = serde_json::from_slice(&read(d, "ev/eval.json")).unwrap();
    assert_eq!(eval["method"], "exact");
    let agreement = eval["agreement"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&agreement));

    for (cmd, first, second, files) in [
        ("gen-tree", "gen", "gen2", &["target.json", "dataset.csv"][..]),
        ("train", "train", "train2", &["model.json", "train_report.json"][..]),
        ("distill-tree", "dt", "dt2", &["tree.json", "report.json"][..]),
        ("eval", "ev", "ev2", &["eval.json"][..]),
    ] {
        let cfg = format!("{first}/config.json");
        assert_ok(&pacdist(&[cmd, "--config", &cfg, "--out", second], d));
        for f in files.iter().chain(&["config.json"]) {
            assert_eq!(read(d, &format!("{first}/{f}")), read(d, &format!("{second}/{f}")), "{cmd} {f}");
        }
    }
}

#[test]
fn junta_distillation_from_planted_junta() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&pacdist(&["gen-tree", "--d", "40", "--junta-k", "3", "--samples", "0", "--seed", "9", "--out", "gen"], d));
    assert!(!d.join("gen/dataset.csv").exists());
    assert_ok(&pacdist(&["distill-junta", "--source", "gen/target.json", "--k-max", "4", "--out", "dj"], d));
    let planted: serde_json::Value = serde_json::from_slice(&read(d, "gen/target.json")).unwrap();
    let found: serde_json::Value = serde_json::from_slice(&read(d, "dj/junta.json")).unwrap();
    assert_eq!(planted["S"], found["S"]);
    let report: serde_json::Value = serde_json::from_slice(&read(d, "dj/report.json")).unwrap();
    assert_eq!(report["samples"], 0);
    assert!(report["learning_queries"].as_u64().unwrap() <= report["budget"].as_u64().unwrap());
}

#[test]
fn suite_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = pacdist(&["suite", "dp-oracle", "--out", "s"], d);
    assert_ok(&ok);
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
    assert_eq!(pacdist(&["suite", "no-such-suite"], d).status.code(), Some(2));
    assert_eq!(pacdist(&["frobnicate"], d).status.code(), Some(2));
}

#[test]
fn corrupted_model_reports_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = "{\"format\": \"pacdist-mlp\",\n \"seed\": ?}";
    std::fs::write(d.join("bad.json"), text).unwrap();
    let offset = text.find('?').unwrap();
    assert_ok(&pacdist(&["gen-tree", "--d", "6", "--samples", "0", "--out", "gen"], d));
    let out = pacdist(&["eval", "--f", "bad.json", "--g", "gen/target.json"], d);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains(&format!("at byte {offset}:")), "{err}");
    let missing = pacdist(&["eval", "--f", "nope.json", "--g", "gen/target.json"], d);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn stats_csv_matches_header() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&pacdist(&["stats", "threshold", "--trials", "2000", "--out", "st"], d));
    let text = String::from_utf8(read(d, "st/threshold.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,delta,n,trials,failure_rate"));
    assert_eq!(lines.next().unwrap().split(',').count(), 5);

    std::fs::write(d.join("all2.csv"), "a,b\n0,0\n0,1\n1,0\n1,1\n").unwrap();
    assert_ok(&pacdist(&["stats", "vc", "all2.csv", "--out", "vc"], d));
    let vc: serde_json::Value = serde_json::from_slice(&read(d, "vc/stats.json")).unwrap();
    assert_eq!(vc["vc_dimension"], 2);
    assert_ok(&pacdist(&["stats", "pf", "all2.csv", "--out", "pf"], d));
    assert_eq!(String::from_utf8(read(d, "pf/pf.csv")).unwrap(), "a,b\n0,0\n");
}

#[test]
fn replay_rejects_config_of_another_command() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&pacdist(&["gen-tree", "--d", "6", "--samples", "0", "--out", "gen"], d));
    let out = pacdist(&["train", "--config", "gen/config.json"], d);
    assert_eq!(out.status.code(), Some(2));
}

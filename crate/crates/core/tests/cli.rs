use std::path::Path;
use std::process::Command;

fn rids(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rids")).args(args).env("RIDS_LOG", "error").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_train_replay() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train");
    let models = dir.path().join("models");
    let report = dir.path().join("replay");

    let out = rids(&["generate", "--preset", "training", "--out", s(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["frames.bin", "frames.csv", "manifest.txt", "scenario.cfg"] {
        assert!(data.join(f).exists(), "{f}");
    }

    let out = rids(&["train", "--data", s(&data), "--model", "tree", "--out", s(&models)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Decision Tree"));
    let model = models.join("tree.model");
    assert!(model.exists());
    assert!(std::fs::read_to_string(models.join("report.csv")).unwrap().starts_with("classifier,"));

    let out = rids(&["eval", "--data", s(&data), "--model-file", s(&model)]);
    assert!(out.status.success());

    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/deauth.cfg");
    let out = rids(&["replay", "--config", s(&cfg), "--model-file", s(&model), "--assert", "--out", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(report.join("alarms.log")).unwrap();
    assert!(log.lines().count() >= 1);
    assert!(log.lines().all(|l| l.contains(",Deauth,")));

    let out = rids(&["inspect", "--data", s(&data), "--limit", "2"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("corp-wpa3"));
}

#[test]
fn invalid_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "duration_s = 5\nseed = 1\nstation = nonsense\n").unwrap();
    let out = rids(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_model_file_fails() {
    let out = rids(&["replay", "--preset", "deauth", "--model-file", "/nonexistent/model"]);
    assert_eq!(out.status.code(), Some(2));
}

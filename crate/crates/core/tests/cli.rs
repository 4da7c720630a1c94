use std::path::Path;
use std::process::{Command, Output};

use einsel::experiments::Manifest;

fn einsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_einsel"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("thm4");
    let o = einsel(&[
        "verify",
        "thm4",
        "--d-s",
        "2",
        "--d-b",
        "4,8",
        "--samples",
        "20",
        "--seed",
        "5",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in ["manifest.json", "results.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let manifest = Manifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.config.seed, 5);
    assert_eq!(manifest.config.d_b, vec![4, 8]);
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let header: Vec<&str> = results.lines().next().unwrap().split(',').collect();
    assert_eq!(manifest.columns["results.csv"], header);
    assert!(manifest.files.iter().any(|f| f.starts_with("trajectory_")));
}

#[test]
fn replay_is_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = einsel(&[
        "sweep",
        "--d-b",
        "8",
        "--trials",
        "3",
        "--samples",
        "30",
        "--workers",
        "1",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let manifest = out.join("manifest.json");
    let o = einsel(&["replay", path_str(&manifest), "--workers", "8"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let recorded = Manifest::load(&manifest).unwrap();
    for f in &recorded.files {
        assert_eq!(
            std::fs::read(out.join(f)).unwrap(),
            std::fs::read(out.join("replay").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn replay_flags_an_edited_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lemma");
    let o = einsel(&[
        "verify",
        "lemma1",
        "--trials",
        "30",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let path = out.join("manifest.json");
    let mut manifest = Manifest::load(&path).unwrap();
    manifest.config.seed += 1;
    manifest.write(&out).unwrap();
    let o = einsel(&["replay", path_str(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("results.csv"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"trials": 12, "seed": 9, "d_s": [2, 3]}"#).unwrap();
    let out = dir.path().join("run");
    let o = einsel(&[
        "verify",
        "lemma1",
        "--config",
        path_str(&cfg),
        "--seed",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m = Manifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(m.config.trials, 12);
    assert_eq!(m.config.seed, 4);
    assert_eq!(m.config.d_s, vec![2, 3]);
    assert_eq!(m.trial_seeds[3], 4 ^ 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = einsel(&["verify", "thm1", "--trials", "0", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = einsel(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"trails": 3}"#).unwrap();
    let o = einsel(&["verify", "thm1", "--config", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let o = einsel(&["replay", path_str(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(3));
    let o = einsel(&[
        "verify",
        "thm1",
        "--config",
        path_str(&dir.path().join("absent.json")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

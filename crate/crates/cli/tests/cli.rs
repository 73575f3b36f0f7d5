use std::path::Path;
use std::process::{Command, Output};

fn edgelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgelab")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_gallery() {
    let o = edgelab(&["gallery"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("beta-lattice-0.3-0.35"));
}

#[test]
fn unknown_chain_is_an_error() {
    let o = edgelab(&["validate", "--gallery", "nope"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coin-half"));
}

#[test]
fn monte_carlo_budget_is_refused() {
    let o = edgelab(&["berry-esseen", "--gallery", "random-m3-s42", "--n-sweep", "64", "--mc", "--n-paths", "10"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("needs n_paths >= "));
}

#[test]
fn gallery_file_feeds_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&edgelab(&["gallery", "--name", "coin-half", "--n", "16", "--out", out])), 0);
    let file = dir.path().join("coin-half.json");
    let o = edgelab(&["char-fn", "--chain", file.to_str().unwrap(), "--xi", "1"]);
    assert_eq!(code(&o), 0);
    // 16 fair coins of size 1/2: cos(1/2)^16
    let want = 0.5f64.cos().powi(16);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let re: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((re - want).abs() < 1e-14, "{line}");
}

fn write_config(path: &Path, band_factor: f64) {
    let cfg = serde_json::json!({
        "experiment": "berry-esseen",
        "chain": {"kind": "gallery", "name": "coin-half"},
        "n_sweep": [64, 256, 1024],
        "mode": "exact",
        "thresholds": {"band_factor": band_factor}
    });
    std::fs::write(path, cfg.to_string()).unwrap();
}

#[test]
fn threshold_outcome_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write_config(&cfg, 2.0);
    let o = edgelab(&["berry-esseen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    write_config(&cfg, 1.0 + 1e-9);
    let o = edgelab(&["berry-esseen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = edgelab(&[
            "berry-esseen",
            "--gallery",
            "random-m3-s42",
            "--n-sweep",
            "64,128",
            "--mc",
            "--n-paths",
            "20000",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "manifest.json"));
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

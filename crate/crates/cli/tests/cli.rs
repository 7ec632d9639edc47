//! CLI-level checks: exit codes, the corrupt negative control, and
//! byte-identical reruns under a fixed seed.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crackq"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crackq-cli-{}-{}", name, std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_passes_and_corrupt_fails() {
    let out = scratch("verify");
    let ok = bin()
        .args(["--seed", "1", "--out"])
        .arg(out.join("good"))
        .arg("verify")
        .output()
        .unwrap();
    assert!(ok.status.success(), "verify failed: {}", String::from_utf8_lossy(&ok.stdout));

    let bad = bin()
        .args(["--seed", "1", "--out"])
        .arg(out.join("bad"))
        .args(["verify", "--corrupt"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1), "corrupted run must exit nonzero");
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("FAIL"), "corrupted run must name the failing check: {text}");
}

#[test]
fn vqa_run_is_deterministic() {
    let out = scratch("vqa");
    let config = out.join("run.toml");
    fs::write(
        &config,
        "seed = 7\n\
         [problem]\n\
         n_x = 2\n\
         n_y = 1\n\
         nu = 0.3\n\
         [vqa]\n\
         layers = 2\n\
         cost = \"quotient\"\n\
         [optimizer]\n\
         max_iterations = 12\n\
         initial_spread = 0.8\n",
    )
    .unwrap();

    for run in ["a", "b"] {
        let st = bin()
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(out.join(run))
            .arg("vqa-run")
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    }
    for file in ["report.json", "trace.csv"] {
        let a = fs::read(out.join("a").join(file)).unwrap();
        let b = fs::read(out.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    // manifests agree except for the output directory they record
    let mut manifests = ["a", "b"].map(|run| {
        serde_json::from_str::<serde_json::Value>(
            &fs::read_to_string(out.join(run).join("manifest.json")).unwrap(),
        )
        .unwrap()
    });
    for m in &mut manifests {
        m["config"]["out"] = serde_json::Value::Null;
    }
    assert_eq!(manifests[0], manifests[1], "manifest differs beyond the out path");
}

#[test]
fn solve_classical_writes_observables() {
    let out = scratch("classical");
    let st = bin()
        .args(["--seed", "3", "--out"])
        .arg(&out)
        .arg("solve-classical")
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let obs: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("observables.json")).unwrap()).unwrap();
    assert!(obs["sif_integral"].as_f64().unwrap().is_finite());
    assert!(obs["cod"].as_f64().unwrap().is_finite());
    assert!(out.join("solution.csv").exists());
}

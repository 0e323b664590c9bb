//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::Command;

fn permdtc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_permdtc"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const GAP: &str = r#"
analysis = "gap-scaling"
samples = 4
seed = 9
[model]
sites = 4
mode = "tuple"
n = 4
[sweep]
lambda = [0.04, 0.02, 0.01]
"#;

#[test]
fn missing_config_is_a_config_error() {
    let out = permdtc().arg("gap-scaling").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn malformed_and_invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "analysis = \"gap-scaling\"\n[model\n");
    let out = permdtc().args(["gap-scaling", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let unknown = write(dir.path(), "unknown.toml", &format!("{GAP}\nbogus = 1\n").replace("[sweep]", "bogus = 1\n[sweep]"));
    let out = permdtc().args(["gap-scaling", "--config"]).arg(&unknown).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let good = write(dir.path(), "gap.toml", GAP);
    let out = permdtc().args(["gap-scaling", "--samples", "0", "--config"]).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gap_scaling_run_writes_its_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gap.toml", GAP);
    let out_dir = dir.path().join("out");
    let run = || {
        let out = permdtc()
            .args(["gap-scaling", "--threads", "1", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let first = run();
    assert!(first.contains("fit L=4 slope="));
    for f in ["manifest.json", "summary.csv", "analysis.json"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(run(), first);
    assert_eq!(std::fs::read_to_string(out_dir.join("summary.csv")).unwrap(), summary);
}

#[test]
fn uptt_validate_needs_no_config() {
    let out = permdtc().args(["uptt-validate", "--samples", "3", "--seed", "4"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("slopes="));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = permdtc::harness::ExperimentSpec::from_toml(&std::fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        spec.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 7);
}

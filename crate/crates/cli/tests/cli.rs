use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn curvslip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvslip"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn small_config(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("flat.toml")).unwrap();
    let text = text
        .replace("eps_list = [0.25, 0.125, 0.0625]", "eps_list = [0.25]")
        .replace("h_micro_per_pore = 0.125", "h_micro_per_pore = 0.25");
    let path = dir.join("config.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

#[test]
fn stages_run_and_rerun_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |s| s);
    let out = dir.path().join("out");
    let (cfg, out) = (cfg.to_str().unwrap(), out.to_str().unwrap());

    let o = curvslip(&["verify-transform", "--config", cfg, "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("transform") && text.contains("identity"), "{text}");

    let o = curvslip(&["bl", "--config", cfg, "--out", out]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    assert!(text.lines().next().unwrap().contains("cached"), "{text}");
    assert!(text.contains("boundary_layer   ran"), "{text}");

    let o = curvslip(&["sweep", "--config", cfg, "--out", out]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("err_u_L2_O1"), "{text}");

    let o = curvslip(&["pipeline", "--config", cfg, "--out", out]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.contains("cached")).count(), 7, "{text}");

    let o = curvslip(&["export-plots", "--out", out]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 3);
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |s| s.replace("eps_list = [0.25]", "eps_list = [0.3]"));
    let out = dir.path().join("out");
    let o = curvslip(&["cell", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not an integer multiple"));
    assert!(!out.join("cell").exists());

    let o = curvslip(&["cell", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = curvslip(&["export-plots", "--out", dir.path().join("empty").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dns/errors.csv"));
}

#[test]
fn quality_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |s| s + "\n[tolerances]\nslip = 0.0\n");
    let out = dir.path().join("out");
    let o = curvslip(&["effective", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("effective"));
    assert!(out.join("FAILED").exists());
}

#[test]
fn fine_and_deep_flags_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |s| s);
    let cfg = cfg.to_str().unwrap();
    let base = dir.path().join("base");
    let deep = dir.path().join("deep");
    assert!(curvslip(&["cell", "--config", cfg, "--out", base.to_str().unwrap()]).status.success());
    let o = curvslip(&["bl", "--config", cfg, "--out", deep.to_str().unwrap(), "--deep-strip", "--fine"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = std::fs::read(base.join("cell/permeability.csv")).unwrap();
    let b = std::fs::read(deep.join("cell/permeability.csv")).unwrap();
    assert_ne!(a, b, "--fine halves h_cell");
}

use super::*;
use crate::force::BodyForce;

const SMALL: &str = r#"
schema_version = 1

[inclusion]
kind = "circle"
center = [0.5, 0.5]
radius = 0.25

[box]
L = 1.0
h_free = 1.0
K_depth = 0.5

[force]
kind = "constant"
value = [1.0, 0.0]

[discretization]
h_cell = 0.125
h_strip = 0.125
h_macro = 0.125
h_micro_per_pore = 0.25

[strip]
n_pore_layers = 4
top_height = 2

[sampling]
x1_points = 4

[sweep]
eps_list = [0.25]
"#;

fn small() -> WorkbenchConfig {
    WorkbenchConfig::from_toml(SMALL).unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for s in Stage::ALL {
        for rel in s.outputs() {
            out.push((rel.to_string(), std::fs::read(dir.join(rel)).unwrap()));
        }
    }
    out
}

#[test]
fn flat_smoke_run_is_cached_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let wb = Workbench::new(small(), dir.path()).unwrap();
    let first = wb.run_pipeline().unwrap();
    assert_eq!(first.len(), 7);
    assert!(first.iter().all(|r| !r.cached));
    let slip = Table::read(&dir.path().join("effective/slip.csv")).unwrap();
    let s = slip.get("slip_tangential").unwrap();
    assert!(s.iter().any(|v| v.abs() > 1e-6), "{s:?}");
    let snap = snapshot(dir.path());

    let again = wb.run_pipeline().unwrap();
    assert!(again.iter().all(|r| r.cached));
    assert_eq!(snapshot(dir.path()), snap);

    // A fresh directory reproduces every byte.
    let other = tempfile::tempdir().unwrap();
    Workbench::new(small(), other.path()).unwrap().run_pipeline().unwrap();
    assert_eq!(snapshot(other.path()), snap);

    let plots = export_plots(dir.path()).unwrap();
    assert_eq!(plots.len(), 3);
    let conv = std::fs::read_to_string(dir.path().join("plots/eps_convergence.dat")).unwrap();
    assert!(conv.starts_with("# eps err_u_L2_O1"));
    assert_eq!(conv.lines().count(), 2);
    let decay = std::fs::read_to_string(dir.path().join("plots/decay_curves.dat")).unwrap();
    for line in decay.lines().skip(1) {
        let v: f64 = line.split(' ').nth(2).unwrap().parse().unwrap();
        assert!(v > 0.0);
    }
}

#[test]
fn keys_follow_the_dependency_table() {
    let a = Workbench::new(small(), "unused").unwrap();
    let mut cfg = small();
    cfg.force = BodyForce::constant([2.0, 0.0]);
    let b = Workbench::new(cfg, "unused").unwrap();
    let changed: Vec<Stage> = Stage::ALL.into_iter().filter(|&s| a.key(s) != b.key(s)).collect();
    assert_eq!(
        changed,
        vec![Stage::FreeFlow, Stage::BoundaryLayer, Stage::Effective, Stage::Darcy, Stage::Dns]
    );

    let mut cfg = small();
    cfg.discretization.h_cell = 0.1;
    let b = Workbench::new(cfg, "unused").unwrap();
    let changed: Vec<Stage> = Stage::ALL.into_iter().filter(|&s| a.key(s) != b.key(s)).collect();
    assert_eq!(changed, vec![Stage::Cell, Stage::Effective, Stage::Darcy, Stage::Dns]);

    let mut cfg = small();
    cfg.discretization.h_micro_per_pore = 0.2;
    let b = Workbench::new(cfg, "unused").unwrap();
    let changed: Vec<Stage> = Stage::ALL.into_iter().filter(|&s| a.key(s) != b.key(s)).collect();
    assert_eq!(changed, vec![Stage::Dns]);
}

#[test]
fn tampered_output_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let wb = Workbench::new(small(), dir.path()).unwrap();
    wb.run_through(Stage::Cell).unwrap();
    let path = dir.path().join("cell/permeability.csv");
    let good = std::fs::read(&path).unwrap();
    std::fs::write(&path, "x1\n0\n").unwrap();
    assert!(!wb.is_cached(Stage::Cell));
    let r = wb.run_through(Stage::Cell).unwrap();
    assert!(r[0].cached && !r[1].cached);
    assert_eq!(std::fs::read(&path).unwrap(), good);
}

#[test]
fn failing_stage_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let wb = Workbench::new(small(), dir.path()).unwrap();
    let e = wb.run_stage_for_test(Stage::BoundaryLayer).unwrap_err();
    match &e {
        Error::MissingArtifact { stage, .. } => assert_eq!(stage, "free_flow"),
        e => panic!("{e}"),
    }
    let mut cfg = small();
    cfg.inclusion.radius = 0.6;
    assert!(Workbench::new(cfg, dir.path()).unwrap_err().is_validation());
}

#[test]
fn quality_failure_halts_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.tolerances.slip = 0.0;
    let wb = Workbench::new(cfg, dir.path()).unwrap();
    let e = wb.run_pipeline().unwrap_err();
    assert!(e.is_numerical_quality());
    assert!(matches!(&e, Error::Stage { stage, .. } if stage == "effective"), "{e}");
    let failed = std::fs::read_to_string(dir.path().join(FAILURE_FILE)).unwrap();
    assert!(failed.starts_with("effective"));
    assert!(dir.path().join("effective/slip.csv").exists());
    assert!(wb.is_cached(Stage::BoundaryLayer));
    assert!(!wb.is_cached(Stage::Effective));
}

#[test]
fn invalid_config_fails_before_any_solve() {
    let text = SMALL.replace("eps_list = [0.25]", "eps_list = [0.3]");
    let e = WorkbenchConfig::from_toml(&text).unwrap_err();
    assert!(e.is_validation());
}

#[test]
fn plots_need_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    match export_plots(dir.path()).unwrap_err() {
        Error::MissingArtifact { expected, .. } => {
            assert_eq!(expected.len(), 3);
            assert!(expected.contains(&"dns/errors.csv".to_string()));
        }
        e => panic!("{e}"),
    }
}

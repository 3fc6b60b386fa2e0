use super::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn circle() -> InclusionSpec {
    InclusionSpec::centered_circle(0.25)
}

const STRIP: StripSpec = StripSpec {
    n_pore_layers: 6,
    top_height: 3,
    h: 0.125,
};

fn strip() -> Arc<PeriodicMesh> {
    static MESH: OnceLock<Arc<PeriodicMesh>> = OnceLock::new();
    MESH.get_or_init(|| Arc::new(STRIP.build(&circle()).unwrap())).clone()
}

fn sine() -> CurveSpec {
    CurveSpec::sine(1.0, 0.2)
}

#[test]
fn zero_jump_gives_zero_layer() {
    let s = solve_bl(&CurveSpec::flat(1.0), 0.0, [0.0, 0.0], strip()).unwrap();
    assert_eq!(s.field.max_velocity(), 0.0);
    assert!(s.field.pressure.iter().all(|p| *p == 0.0));
    assert_eq!(s.cbl, [0.0, 0.0]);
    assert_eq!(s.cbl_omega, 0.0);
    assert_eq!(s.decay.rate, f64::INFINITY);
    assert_eq!(s.decay.r2, 1.0);
    assert_eq!(decay_constants(&s).unwrap(), ([0.0, 0.0], 0.0));
}

#[test]
fn flat_tangential_jump_slips_backwards() {
    let s = solve_bl(&CurveSpec::flat(1.0), 0.0, [1.0, 0.0], strip()).unwrap();
    assert!(s.cbl[1].abs() < 1e-12, "{:?}", s.cbl);
    assert!(s.cbl[0] < 0.0, "{:?}", s.cbl);
    // Fine-strip oracle: the value is converged to a fraction of a percent.
    let fine = Arc::new(StripSpec { h: 1.0 / 16.0, ..STRIP }.build(&circle()).unwrap());
    let f = solve_bl(&CurveSpec::flat(1.0), 0.0, [1.0, 0.0], fine).unwrap();
    assert!(f.cbl[0] < 0.0);
    assert!((f.cbl[0] - s.cbl[0]).abs() < 2e-3 * f.cbl[0].abs(), "{:?} {:?}", s.cbl, f.cbl);
}

#[test]
fn doubling_the_jump_doubles_everything() {
    let spec = sine();
    let a = solve_bl(&spec, 0.1, [0.7, -0.3], strip()).unwrap();
    let b = solve_bl(&spec, 0.1, [1.4, -0.6], strip()).unwrap();
    for (u, v) in a.field.velocity.iter().zip(&b.field.velocity) {
        assert!((2.0 * u[0] - v[0]).abs() < 1e-12 && (2.0 * u[1] - v[1]).abs() < 1e-12);
    }
    for k in 0..2 {
        assert!((2.0 * a.cbl[k] - b.cbl[k]).abs() < 1e-12);
    }
    assert!((2.0 * a.cbl_omega - b.cbl_omega).abs() < 1e-12);
}

#[test]
fn exact_identities_hold() {
    let spec = sine();
    for x1 in [0.0, 0.1, 0.25, 0.6] {
        let s = solve_bl(&spec, x1, [1.0, 0.2], strip()).unwrap();
        assert!(s.normal_residual < 1e-6, "x1 {x1}: {:e}", s.normal_residual);
        assert_eq!(s.fluxes.len(), FLUX_DEPTHS);
        for f in &s.fluxes {
            assert!(f.variational.abs() < 1e-9, "x1 {x1}: {f:?}");
        }
        let ff = s.far_field;
        assert!((ff.omega[0] - ff.omega[1]).abs() < 1e-6, "x1 {x1}: {ff:?}");
        assert!((ff.omega[0] - s.cbl_omega).abs() < 1e-6, "x1 {x1}: {ff:?} {}", s.cbl_omega);
        decay_constants(&s).unwrap();
    }
}

#[test]
fn tangential_trace_is_height_independent() {
    let spec = sine();
    let s = solve_bl(&spec, 0.05, [1.0, 0.0], strip()).unwrap();
    let gp = s.gprime;
    let reference = s.cbl[0] + gp * s.cbl[1];
    for k in 0..=16 {
        let y = k as f64 / 8.0;
        let b = measure::velocity_line_average(&s.field, y);
        assert!((b[0] + gp * b[1] - reference).abs() < 1e-12, "y {y}");
    }
}

#[test]
fn layer_norms_decay_exponentially() {
    let s = solve_bl(&sine(), 0.1, [1.0, 0.0], strip()).unwrap();
    assert_eq!(s.pore_layer_norms.len(), 6);
    assert!(s.decay.rate > 0.0);
    assert!(s.decay.r2 > 0.99, "{:?}", s.decay);
    assert!(s.pore_layer_norms.windows(2).all(|w| w[1] < w[0]));
    assert!(s.free_layer_norms.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn decay_fit_of_geometric_sequence() {
    let norms: Vec<f64> = (0..6).map(|k| 3.0 * (-2.5 * k as f64).exp()).collect();
    let f = decay_rate_fit(&norms);
    assert!((f.rate - 2.5).abs() < 1e-12);
    assert!((f.r2 - 1.0).abs() < 1e-12);
    assert_eq!(f.used, vec![1, 2, 3, 4]);
    let floor: Vec<f64> = vec![1.0, 1e-3, 1e-6, 1e-9, 1e-13, 1e-15];
    assert_eq!(decay_rate_fit(&floor).used, vec![1, 2, 3]);
}

#[test]
fn canonical_combination_matches_direct_solve() {
    let spec = sine();
    let x1 = 0.3;
    let p = BoundaryLayerProblem::solve(strip(), spec.gprime(x1)).unwrap();
    let k = [0.4, -1.3];
    let a = p.solution(x1, k);
    let b = solve_bl(&spec, x1, k, strip()).unwrap();
    for (u, v) in a.field.velocity.iter().zip(&b.field.velocity) {
        assert!((u[0] - v[0]).abs() < 1e-12 && (u[1] - v[1]).abs() < 1e-12);
    }
    assert!((a.cbl_omega - b.cbl_omega).abs() < 1e-12);
}

#[test]
fn equal_slopes_give_equal_constants() {
    let spec = sine();
    // g′(x) = 0.4π cos(2πx) takes equal values at x and 1 − x.
    let a = solve_bl(&spec, 0.15, [1.0, 0.5], strip()).unwrap();
    let b = solve_bl(&spec, 0.85, [1.0, 0.5], strip()).unwrap();
    assert!((a.gprime - b.gprime).abs() < 1e-14);
    assert!(relative_change(a.cbl, b.cbl) < 1e-10);
}

#[test]
fn pipeline_groups_slopes_and_measures_truncation() {
    let spec = sine();
    let deep = Arc::new(STRIP.deepened().build(&circle()).unwrap());
    let samples = [(0.15, [1.0, 0.0]), (0.85, [2.0, 0.0]), (0.4, [0.5, 0.1])];
    let sols = boundary_layers(&spec, &samples, strip(), Some(deep)).unwrap();
    assert_eq!(sols.len(), 3);
    for k in 0..2 {
        assert!((2.0 * sols[0].cbl[k] - sols[1].cbl[k]).abs() < 1e-12);
    }
    for s in &sols {
        assert!(s.truncation_delta.unwrap() < 1e-5);
    }
}

#[test]
fn truncation_study_improves_with_depth() {
    let spec = sine();
    let shallow = truncation_study(&spec, 0.1, [1.0, 0.0], &circle(), STRIP, &[2, 4]).unwrap();
    let deep = truncation_study(&spec, 0.1, [1.0, 0.0], &circle(), STRIP, &[4, 8]).unwrap();
    let (ds, dd) = (shallow.delta.unwrap(), deep.delta.unwrap());
    assert!(dd < 1e-5, "{dd}");
    assert!(ds > dd, "{ds} {dd}");
    let one = truncation_study(&spec, 0.1, [1.0, 0.0], &circle(), STRIP, &[3]).unwrap();
    assert_eq!(one.rows.len(), 1);
    assert!(one.delta.is_none());
}

#[test]
fn inconsistent_far_field_is_reported() {
    let mut s = solve_bl(&sine(), 0.1, [1.0, 0.0], strip()).unwrap();
    s.truncation_delta = Some(1e-9);
    s.far_field.beta[0] += 1e-3;
    assert!(matches!(decay_constants(&s), Err(Error::TruncationTooShallow { .. })));
}

#[test]
fn non_finite_jump_is_rejected() {
    let err = solve_bl(&sine(), 0.1, [f64::NAN, 0.0], strip()).unwrap_err();
    assert!(matches!(err, Error::Data(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn superposition(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64) {
        let spec = sine();
        let p = BoundaryLayerProblem::solve(strip(), spec.gprime(0.2)).unwrap();
        let s1 = p.cbl([a, b]);
        let s2 = p.cbl([c, d]);
        let s12 = p.cbl([a + c, b + d]);
        for k in 0..2 {
            prop_assert!((s1[k] + s2[k] - s12[k]).abs() < 1e-12);
        }
    }
}

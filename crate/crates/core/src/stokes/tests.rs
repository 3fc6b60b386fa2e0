use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::fem::norms::{integrate, velocity_l2};
use crate::geometry::{build_box_mesh, build_strip_mesh, InclusionSpec};
use crate::transform::metric_eigenvalues;

fn channel(n: usize) -> Arc<PeriodicMesh> {
    Arc::new(build_box_mesh(1.0, 0.0, 1.0, n, n, BoundaryTag::Bottom, BoundaryTag::Top).unwrap())
}

fn walls(gauge: Gauge) -> StokesSetup {
    StokesSetup {
        dirichlet: vec![BoundaryTag::Bottom, BoundaryTag::Top],
        gauge,
    }
}

#[test]
fn poiseuille_is_exact() {
    let mesh = channel(4);
    let f = |_: [f64; 2]| [1.0, 0.0];
    let sol = solve_transformed_stokes(
        mesh.clone(),
        Metric::identity(),
        walls(Gauge::ZeroMean),
        &Forcing {
            body: Some(&f),
            ..Default::default()
        },
    )
    .unwrap();
    let err = integrate(&mesh, |t, _, l, x| {
        let u = sol.velocity_at(t, l);
        (u[0] - x[1] * (1.0 - x[1]) / 2.0).powi(2) + u[1].powi(2)
    })
    .sqrt();
    assert!(err < 1e-10, "{err}");
    assert!(sol.pressure.iter().all(|p| p.abs() < 1e-10));
    assert!(sol.residual < 1e-10);
}

#[test]
fn zero_data_gives_zero_solution() {
    let mesh = channel(3);
    let sol = solve_transformed_stokes(
        mesh,
        Metric::Curve(CurveSpec::sine(1.0, 0.2)),
        walls(Gauge::ZeroMean),
        &Forcing::default(),
    )
    .unwrap();
    assert_eq!(sol.max_velocity(), 0.0);
    assert!(sol.pressure.iter().all(|p| *p == 0.0));
}

#[test]
fn manufactured_rates_flat_and_curved() {
    for spec in [CurveSpec::flat(1.0), CurveSpec::sine(1.0, 0.2)] {
        let table = manufactured_convergence(&spec, 3).unwrap();
        let vr = table.velocity_rate.unwrap();
        let pr = table.pressure_rate.unwrap();
        assert!(vr >= 2.7, "velocity rate {vr} for {spec:?}");
        assert!(pr >= 1.7, "pressure rate {pr} for {spec:?}");
        for w in table.levels.windows(2) {
            assert!(w[1].velocity_l2 < w[0].velocity_l2 / 6.0);
            assert!(w[1].pressure_l2 < w[0].pressure_l2 / 3.0);
        }
    }
}

#[test]
fn single_level_reports_no_rate() {
    let table = manufactured_convergence(&CurveSpec::flat(1.0), 1).unwrap();
    assert_eq!(table.levels.len(), 1);
    assert!(table.levels[0].velocity_l2.is_finite());
    assert!(table.velocity_rate.is_none() && table.pressure_rate.is_none());
}

/// Textbook P2 gradients from the reference element, mapped affinely.
fn reference_p2_grads(v: [[f64; 2]; 3], xi: f64, eta: f64) -> [[f64; 2]; 6] {
    let l0 = 1.0 - xi - eta;
    let r = [
        [-(4.0 * l0 - 1.0), -(4.0 * l0 - 1.0)],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 * (l0 - xi), -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 * (l0 - eta)],
    ];
    let j = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // ∇φ = J⁻ᵀ ∇̂φ.
    let jit = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
    let mut out = [[0.0; 2]; 6];
    for i in 0..6 {
        out[i] = [
            jit[0][0] * r[i][0] + jit[0][1] * r[i][1],
            jit[1][0] * r[i][0] + jit[1][1] * r[i][1],
        ];
    }
    out
}

#[test]
fn flat_metric_reduces_to_classical_stokes_matrix() {
    let inc = InclusionSpec::centered_circle(0.25);
    let mesh = Arc::new(build_strip_mesh(&inc, 2, 1, 0.25).unwrap());
    let setup = StokesSetup {
        dirichlet: vec![BoundaryTag::Pore, BoundaryTag::Bottom],
        gauge: Gauge::None,
    };
    let sys = StokesSystem::assemble(mesh.clone(), Metric::Curve(CurveSpec::flat(1.0)), setup).unwrap();
    let rule = crate::fem::quadrature::degree4();
    let mut oracle: HashMap<(usize, usize), f64> = HashMap::new();
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangles[t];
        let v = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
        let area = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
        let (v1, v2, p) = local_indices(&mesh, &sys.vdofs, &sys.pdofs, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let d = reference_p2_grads(v, l[1], l[2]);
            let w = w * area;
            for i in 0..6 {
                for j in 0..6 {
                    let kij = w * (d[i][0] * d[j][0] + d[i][1] * d[j][1]);
                    for blk in [&v1, &v2] {
                        if let (Some(r), Some(c)) = (blk[i], blk[j]) {
                            *oracle.entry((r, c)).or_default() += kij;
                        }
                    }
                }
            }
            for q in 0..3 {
                let Some(pq) = p[q] else { continue };
                for j in 0..6 {
                    for (blk, comp) in [(&v1, 0), (&v2, 1)] {
                        if let Some(c) = blk[j] {
                            let bij = -w * l[q] * d[j][comp];
                            *oracle.entry((pq, c)).or_default() += bij;
                            *oracle.entry((c, pq)).or_default() += bij;
                        }
                    }
                }
            }
        }
    }
    let m = &sys.matrix;
    let mut worst = 0.0f64;
    for c in 0..m.n {
        for k in m.col_ptr[c]..m.col_ptr[c + 1] {
            let r = m.row_idx[k];
            let o = oracle.get(&(r, c)).copied().unwrap_or(0.0);
            worst = worst.max((m.values[k] - o).abs());
        }
    }
    for (&(r, c), &o) in &oracle {
        worst = worst.max((m.get(r, c) - o).abs());
    }
    assert!(worst < 1e-14, "max entry difference {worst:e}");
}

#[test]
fn kernels_are_reported() {
    let mesh = channel(2);
    let none = StokesSystem::assemble(
        mesh.clone(),
        Metric::identity(),
        StokesSetup {
            dirichlet: vec![],
            gauge: Gauge::ZeroMean,
        },
    );
    assert!(matches!(none, Err(Error::Singular(m)) if m.contains("velocity kernel")));
    let closed = StokesSystem::assemble(mesh.clone(), Metric::identity(), walls(Gauge::None));
    assert!(matches!(closed, Err(Error::Singular(m)) if m.contains("pressure kernel")));
    let open = StokesSystem::assemble(
        mesh,
        Metric::identity(),
        StokesSetup {
            dirichlet: vec![BoundaryTag::Bottom],
            gauge: Gauge::ZeroMean,
        },
    );
    assert!(matches!(open, Err(Error::Config(_))));
}

#[test]
fn pinned_and_zero_mean_gauges_agree_up_to_constant() {
    let mesh = channel(3);
    let f = |x: [f64; 2]| [1.0 + x[1], (2.0 * PI_F * x[0]).sin()];
    let forcing = Forcing {
        body: Some(&f),
        ..Default::default()
    };
    let metric = Metric::Curve(CurveSpec::sine(1.0, 0.1));
    let a = solve_transformed_stokes(mesh.clone(), metric.clone(), walls(Gauge::ZeroMean), &forcing).unwrap();
    let mut b = solve_transformed_stokes(mesh, metric, walls(Gauge::Pinned), &forcing).unwrap();
    assert!(a.pressure_integral().abs() < 1e-12);
    b.normalize_pressure();
    for (x, y) in a.pressure.iter().zip(&b.pressure) {
        assert!((x - y).abs() < 1e-10, "{x} {y}");
    }
    for (x, y) in a.velocity.iter().zip(&b.velocity) {
        assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
    }
}

const PI_F: f64 = std::f64::consts::PI;

#[test]
fn natural_top_conserves_mass() {
    // Bottom wall, traction-free top: all mass entering through the force
    // must leave through nothing, so the top flux vanishes.
    let mesh = Arc::new(build_box_mesh(1.0, -1.0, 1.0, 6, 8, BoundaryTag::Bottom, BoundaryTag::Top).unwrap());
    let metric = Metric::Frozen(0.7);
    let f = |x: [f64; 2]| [(2.0 * PI_F * x[0]).cos() + x[1], (2.0 * PI_F * x[0]).sin() * x[1]];
    let sol = solve_transformed_stokes(
        mesh.clone(),
        metric.clone(),
        StokesSetup {
            dirichlet: vec![BoundaryTag::Bottom],
            gauge: Gauge::None,
        },
        &Forcing {
            body: Some(&f),
            ..Default::default()
        },
    )
    .unwrap();
    let top = forms::line_flux(&sol, &metric, 1.0);
    assert!(top.abs() < 1e-10, "top flux {top:e}");
    // Discretely divergence free against every linear pressure.
    let q: Vec<f64> = mesh.nodes.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
    let q = periodic_vertex_values(&mesh, q);
    assert!(forms::q_div_piola(&sol, &metric, &q).abs() < 1e-10);
}

fn periodic_vertex_values(mesh: &PeriodicMesh, mut q: Vec<f64>) -> Vec<f64> {
    let d = DofMap::linear(mesh);
    for v in 0..q.len() {
        q[v] = q[d.class[v]];
    }
    q
}

#[test]
fn interface_source_is_linear_and_reuses_factorization() {
    let mesh = Arc::new(build_box_mesh(1.0, -1.0, 1.0, 4, 8, BoundaryTag::Bottom, BoundaryTag::Top).unwrap());
    let sys = StokesSystem::assemble(
        mesh,
        Metric::Frozen(0.3),
        StokesSetup {
            dirichlet: vec![BoundaryTag::Bottom, BoundaryTag::Top],
            gauge: Gauge::ZeroMean,
        },
    )
    .unwrap();
    let s1 = |_: f64| [1.0, 0.0];
    let s2 = |_: f64| [2.0, 0.0];
    let a = sys
        .solve(&Forcing {
            interface: Some(&s1),
            ..Default::default()
        })
        .unwrap();
    let b = sys
        .solve(&Forcing {
            interface: Some(&s2),
            ..Default::default()
        })
        .unwrap();
    assert!(a.max_velocity() > 1e-3);
    let diff = b.difference(&a.scaled(2.0));
    assert!(velocity_l2(&diff) < 1e-13);
}

fn random_field(mesh: &PeriodicMesh, seed: &[f64]) -> Vec<[f64; 2]> {
    let d = DofMap::quadratic(mesh, &[BoundaryTag::Bottom, BoundaryTag::Top]);
    (0..mesh.n_p2_nodes())
        .map(|n| {
            if d.is_constrained(n) {
                return [0.0, 0.0];
            }
            let c = d.class[n] as f64;
            [
                (c * seed[0] + seed[1]).sin(),
                (c * seed[2] + seed[3]).cos(),
            ]
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn coercivity_and_continuity(
        a in 0.0..0.3f64,
        s in prop::array::uniform4(0.1..10.0f64),
        r in prop::array::uniform4(0.1..10.0f64),
    ) {
        let mesh = channel(3);
        let spec = CurveSpec::sine(1.0, a);
        let metric = Metric::Curve(spec.clone());
        let gmax = 2.0 * PI_F * a;
        let (k_f, _) = metric_eigenvalues(gmax);
        let (_, big_k) = metric_eigenvalues(gmax);
        let u = random_field(&mesh, &s);
        let v = random_field(&mesh, &r);
        let auu = forms::bilinear_a(&mesh, &metric, &u, &u);
        let guu = forms::grad_inner(&mesh, &u, &u);
        let gvv = forms::grad_inner(&mesh, &v, &v);
        prop_assert!(auu >= k_f * guu * (1.0 - 1e-12));
        let auv = forms::bilinear_a(&mesh, &metric, &u, &v);
        prop_assert!(auv.abs() <= big_k * (guu * gvv).sqrt() * (1.0 + 1e-12));
    }
}

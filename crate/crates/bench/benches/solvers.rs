use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use curvslip_bench::{cell_mesh, curve, inclusion};
use curvslip_core::boundary_layer::{BoundaryLayerProblem, StripSpec};
use curvslip_core::cell::solve_cell_pair;
use curvslip_core::dns::{solve_eps_problem, MicroParams};
use curvslip_core::effective::{macro_meshes, FreeFlow};
use curvslip_core::force::BodyForce;
use curvslip_core::transform::verify_identities;

fn cell(c: &mut Criterion) {
    let mesh = cell_mesh(1.0 / 16.0);
    c.bench_function("cell pair h=1/16", |b| {
        b.iter(|| solve_cell_pair(mesh.clone(), 0.4).unwrap())
    });
}

fn boundary_layer(c: &mut Criterion) {
    let strip = StripSpec {
        n_pore_layers: 6,
        top_height: 3,
        h: 0.125,
    };
    let mesh = Arc::new(strip.build(&inclusion()).unwrap());
    c.bench_function("boundary layer pair, 6 layers", |b| {
        b.iter(|| BoundaryLayerProblem::solve(mesh.clone(), 0.4).unwrap())
    });
}

fn free_flow(c: &mut Criterion) {
    let spec = curve();
    let (free, _) = macro_meshes(&spec, 1.0, 0.5, 1.0 / 16.0).unwrap();
    let force = BodyForce::constant([1.0, 0.0]);
    c.bench_function("free flow assemble + solve h=1/16", |b| {
        b.iter(|| FreeFlow::new(&spec, free.clone()).unwrap().solve_u0(&force).unwrap())
    });
}

fn microscale(c: &mut Criterion) {
    let spec = curve();
    let params = MicroParams {
        height: 1.0,
        k_depth: 0.5,
        h_micro: 0.125,
        h_macro: 1.0 / 16.0,
        band_layers: 2,
    };
    let force = BodyForce::constant([1.0, 0.0]);
    let mut g = c.benchmark_group("microscale");
    g.sample_size(10);
    g.bench_function("eps=1/4", |b| {
        b.iter(|| solve_eps_problem(&spec, &force, &inclusion(), 0.25, &params).unwrap())
    });
    g.finish();
}

fn identities(c: &mut Criterion) {
    let spec = curve();
    c.bench_function("transform identities 64", |b| b.iter(|| verify_identities(&spec, 64).unwrap()));
}

criterion_group!(benches, cell, boundary_layer, free_flow, microscale, identities);
criterion_main!(benches);

//! The coefficient chain through the public API, without the workbench.

use std::path::Path;
use std::sync::Arc;

use curvslip_core::boundary_layer::{boundary_layers, StripSpec};
use curvslip_core::cell::{permeability, uniform_grid};
use curvslip_core::effective::{macro_meshes, recovery::stress_jump, solve_effective, EffectiveCoefficients, FreeFlow};
use curvslip_core::force::BodyForce;
use curvslip_core::geometry::InclusionSpec;
use curvslip_core::workbench::WorkbenchConfig;
use curvslip_core::CurveSpec;

#[test]
fn curved_chain_satisfies_the_slip_law() {
    let spec = CurveSpec::sine(1.0, 0.1);
    let inc = InclusionSpec::centered_circle(0.25);
    let force = BodyForce::constant([1.0, 0.0]);
    let grid = uniform_grid(1.0, 6);

    let perm = permeability(&spec, &grid, &inc, 0.125).unwrap();
    let (free, porous) = macro_meshes(&spec, 1.0, 0.5, 0.125).unwrap();
    let flow = FreeFlow::new(&spec, free).unwrap();
    let u0 = flow.solve_u0(&force).unwrap();
    let k = stress_jump(&u0, &spec, &grid);
    let samples: Vec<(f64, [f64; 2])> = grid.iter().copied().zip(k).collect();
    let strip = StripSpec {
        n_pore_layers: 5,
        top_height: 3,
        h: 0.125,
    };
    let mesh = Arc::new(strip.build(&inc).unwrap());
    let layers = boundary_layers(&spec, &samples, mesh, None).unwrap();
    let coeffs = Arc::new(EffectiveCoefficients::from_stages(&spec, &perm, &layers).unwrap());
    coeffs.check_compatibility().unwrap();

    let eff = solve_effective(&flow, &u0, &force, coeffs.clone(), 0.125, porous).unwrap();
    assert!(eff.slip_defect() < 1e-10, "{}", eff.slip_defect());
    // Forward flow drags the interface forward: the slip increases the
    // mass flow over the no-slip reference.
    let m0 = curvslip_core::effective::mass_flow(&u0, &spec);
    assert!(eff.m_eff > m0, "{} vs {m0}", eff.m_eff);
    assert!(eff.darcy.sigma_flux.abs() < 1e-12);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["default.toml", "flat.toml"] {
        let cfg = WorkbenchConfig::load(&dir.join(name)).unwrap();
        assert_eq!(cfg.sweep.eps_list, vec![0.25, 0.125, 0.0625]);
        assert!(cfg.sampling.x1_points >= 4);
    }
}

mod common;

use perovsim_core::assembly::{assemble_system, AssemblyOptions, State, TimeTerm};
use perovsim_core::device::parent_cells;
use perovsim_core::diagnostics::species_mass;
use perovsim_core::solver::{self, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn jacobian_matches_finite_differences() {
    let device = common::pin_device(60);
    let x0 = solver::initial_state(&device)
        .unwrap()
        .to_vector(&device.layout);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let x = common::perturbed_state(&device, &x0, &mut rng);
        let transient = TimeTerm::Transient { old: &x0, dt: 0.05 };
        let d = common::jacobian_discrepancy(&device, &x, transient);
        assert!(d <= 1e-5, "transient discrepancy {d:e}");
    }
}

#[test]
fn jacobian_matches_finite_differences_for_boltzmann_carriers() {
    let device = common::boltzmann_device(40);
    let x0 = solver::initial_state(&device)
        .unwrap()
        .to_vector(&device.layout);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = common::perturbed_state(&device, &x0, &mut rng);
    let d = common::jacobian_discrepancy(&device, &x, TimeTerm::Transient { old: &x0, dt: 1.0 });
    assert!(d <= 1e-5, "discrepancy {d:e}");
}

#[test]
fn equilibrium_is_a_zero_of_the_residual() {
    let device = common::pin_device(60);
    let init = solver::initial_state(&device).unwrap();
    let config = SolverConfig::default();
    let eq = solver::equilibrium_state(&device, &init, &config).unwrap();
    let x = eq.to_vector(&device.layout);
    let res = assemble_system(
        &device,
        &x,
        0.0,
        TimeTerm::Transient { old: &x, dt: 0.1 },
        &AssemblyOptions::default(),
    )
    .unwrap();
    assert!(res.norm() <= config.newton_tol, "{:e}", res.norm());
    // All quasi Fermi potentials coincide with the contact value.
    for i in 0..device.species.len() {
        if device.species[i].is_carrier() {
            for phi in eq.quasi_fermi(&device, i).unwrap() {
                assert!(phi.abs() < 1e-10, "{phi:e}");
            }
        }
    }
}

#[test]
fn refinement_preserves_volume_and_constant_mass() {
    let coarse = common::pin_device(20);
    let fine = coarse.refine(3).unwrap();
    assert_eq!(fine.n_cells(), 60);
    assert!((fine.mesh.total_volume() - coarse.mesh.total_volume()).abs() < 1e-14);
    let parents = parent_cells(&coarse.mesh, &fine.mesh);
    for (k, &p) in parents.iter().enumerate() {
        let [a, b] = fine.mesh.cell_interval(k, perovsim_core::device::Axis::X);
        let [pa, pb] = coarse.mesh.cell_interval(p, perovsim_core::device::Axis::X);
        assert!(a >= pa - 1e-15 && b <= pb + 1e-15);
    }
    let uniform = |d: &perovsim_core::device::Device| State {
        t: 0.0,
        psi: vec![0.0; d.n_cells()],
        densities: d
            .layout
            .region
            .iter()
            .map(|r| vec![0.25; r.len()])
            .collect(),
    };
    for i in 0..coarse.species.len() {
        let (mc, mf) = (
            species_mass(&coarse, &uniform(&coarse), i),
            species_mass(&fine, &uniform(&fine), i),
        );
        assert!((mc - mf).abs() < 1e-14, "species {i}: {mc} vs {mf}");
    }
}

#[test]
fn residual_rejects_wrong_dimension() {
    let device = common::pin_device(20);
    let x = vec![0.0; device.layout.n_unknowns + 1];
    let r = assemble_system(
        &device,
        &x,
        0.0,
        TimeTerm::Transient { old: &x, dt: 0.1 },
        &AssemblyOptions::default(),
    );
    assert!(r.is_err());
}

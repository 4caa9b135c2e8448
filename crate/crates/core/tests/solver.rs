mod common;

use perovsim_core::device::{build_device, Device, GenerationSpec};
use perovsim_core::diagnostics::{
    self as diag, bounds_report, energy_decay_check, free_energy, species_mass, EnergyReference,
    Tolerances,
};
use perovsim_core::solver::{self, PathVariant, SolverConfig};
use proptest::prelude::*;

fn perturbed_pin(cells: usize, amplitude: f64) -> Device {
    let mut cfg = common::pin_config(cells);
    cfg.initial.perturbation = amplitude;
    build_device(&cfg).unwrap()
}

fn uniform_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt).round() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

#[test]
fn dark_transient_decays_and_conserves() {
    let device = perturbed_pin(40, 0.3);
    let config = SolverConfig::default();
    let init = solver::initial_state(&device).unwrap();
    let reference = EnergyReference::for_device(&device, &init, &config).unwrap();
    assert!(reference.equilibrium);
    let (traj, fallbacks) = solver::run_on_grid(
        &device,
        &init,
        &uniform_grid(1.0, 0.05),
        &config,
        &PathVariant::baseline(),
    )
    .unwrap();
    assert_eq!(fallbacks, 0);

    let energies: Vec<f64> = traj
        .states
        .iter()
        .map(|s| free_energy(&device, &reference, s).unwrap())
        .collect();
    assert!(energies[0] > 0.0);
    for w in energies.windows(2) {
        assert!(
            w[1] - w[0] <= 1e-10 * w[0].abs().max(1.0),
            "{} -> {}",
            w[0],
            w[1]
        );
    }
    assert!(energies.last().unwrap() < &energies[0]);

    let vac = device.vacancy_indices().next().unwrap();
    let m0 = species_mass(&device, &init, vac);
    for s in &traj.states {
        assert!(((species_mass(&device, s, vac) - m0) / m0).abs() <= 1e-12);
        assert!(bounds_report(&device, s)
            .iter()
            .all(|b| !b.breach && b.margin > 0.0));
    }
    for step in &traj.steps {
        assert!(
            step.balance_defect.iter().all(|d| d.abs() <= 1e-10),
            "{:?}",
            step.balance_defect
        );
    }

    let tol = Tolerances::default();
    let reports = diag::analyze(&device, &traj, &reference, &tol, &[]).unwrap();
    let decay = energy_decay_check(&reports, true, tol.energy);
    assert!(decay.passed && decay.monotone_required);
    assert!(reports.iter().all(|r| !r.flags.any()));
}

#[test]
fn identical_paths_are_bitwise_reproducible() {
    let device = perturbed_pin(30, 0.2);
    let config = SolverConfig::default();
    let init = solver::initial_state(&device).unwrap();
    let grid = uniform_grid(0.2, 0.05);
    let a = solver::run_on_grid(&device, &init, &grid, &config, &PathVariant::baseline())
        .unwrap()
        .0;
    let b = solver::run_on_grid(&device, &init, &grid, &config, &PathVariant::baseline())
        .unwrap()
        .0;
    assert_eq!(a.states, b.states);
}

#[test]
fn perturbed_solver_paths_reach_the_same_states() {
    let mut cfg = common::pin_config(40);
    cfg.initial.perturbation = 0.3;
    cfg.generation = Some(GenerationSpec {
        photon_flux: 0.5,
        absorption: 3.0,
        axis: Default::default(),
        surface: Default::default(),
    });
    let device = build_device(&cfg).unwrap();
    let config = SolverConfig::default();
    let init = solver::initial_state(&device).unwrap();
    let variants = solver::probe_variants(device.species.len(), 3, 42);
    let report = solver::uniqueness_probe(&device, &init, 1.0, &config, &variants).unwrap();
    assert_eq!(report.pairs.len(), 6);
    assert!(
        report.max_discrepancy <= 10.0 * config.newton_tol,
        "{:e}",
        report.max_discrepancy
    );
}

#[test]
fn stationary_states_along_a_bias_sweep() {
    let device = common::pin_device(40);
    let config = SolverConfig::default();
    let mut state = solver::initial_state(&device).unwrap();
    let vac = device.vacancy_indices().next().unwrap();
    let m0 = species_mass(&device, &state, vac);
    for bias in [0.0, 1.0, 3.0, -1.0] {
        state = solver::solve_stationary(&device, &state, &config, bias).unwrap();
        assert!(((species_mass(&device, &state, vac) - m0) / m0).abs() <= 1e-12);
        assert!(bounds_report(&device, &state).iter().all(|b| !b.breach));
    }
}

#[test]
fn convergence_orders() {
    let spatial = diag::poisson_manufactured_study(&[16, 32, 64]).unwrap();
    for l in spatial.iter().skip(1) {
        assert!((l.order.unwrap() - 2.0).abs() <= 0.2, "{l:?}");
    }
    let device = perturbed_pin(30, 0.3);
    let init = solver::initial_state(&device).unwrap();
    let temporal = diag::temporal_study(
        &device,
        &init,
        0.2,
        &[0.04, 0.02, 0.01, 0.005],
        &SolverConfig::default(),
    )
    .unwrap();
    let last = temporal.last().unwrap().order.unwrap();
    assert!((last - 1.0).abs() <= 0.2, "{temporal:?}");
}

#[test]
fn invalid_solver_configs_are_rejected() {
    let bad = SolverConfig {
        dt_min: 1.0,
        dt_initial: 0.1,
        ..SolverConfig::default()
    };
    assert!(bad.validate().is_err());
    let bad = SolverConfig {
        newton_tol: 0.0,
        ..SolverConfig::default()
    };
    assert!(bad.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_never_increases(amplitude in 0.05f64..0.45, dt in prop::sample::select(vec![0.01, 0.1, 0.5])) {
        let device = perturbed_pin(20, amplitude);
        let config = SolverConfig::default();
        let init = solver::initial_state(&device).unwrap();
        let reference = EnergyReference::for_device(&device, &init, &config).unwrap();
        let traj = solver::run_on_grid(&device, &init, &uniform_grid(1.0, dt), &config, &PathVariant::baseline()).unwrap().0;
        let mut last = f64::INFINITY;
        for s in &traj.states {
            let e = free_energy(&device, &reference, s).unwrap();
            prop_assert!(e >= -1e-12);
            prop_assert!(e - last <= 1e-10 * last.abs().max(1.0));
            last = e;
        }
    }
}

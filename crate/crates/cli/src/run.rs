//! Scenario execution: runs the solver, evaluates the invariants and writes
//! every artifact into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use perovsim_core::assembly::{self, State, TimeTerm};
use perovsim_core::device::Device;
use perovsim_core::diagnostics::{self as diag, EnergyReference};
use perovsim_core::solver::{self, PathVariant, SolverError, Trajectory, TransientFailure};
use perovsim_core::statistics::{fermi_dirac_half_quadrature, verify_axioms, StatisticsKind};
use rayon::prelude::*;

use crate::checkpoint;
use crate::config::{resolved_toml, ConfigError, ScenarioKind, ScenarioSpec};
use crate::output::{self, banner, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Io { .. } => EXIT_ABORT,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Result of a scenario run; the verdict has also been written to disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub output: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verdict.aborted.is_some() {
            EXIT_ABORT
        } else if self.verdict.passed {
            EXIT_OK
        } else {
            EXIT_INVARIANT
        }
    }
}

struct Sink {
    dir: PathBuf,
}

impl Sink {
    fn write(&self, name: &str, text: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| RunError::Io { path, source })
    }
}

/// Solver abort inside a scenario: message plus the last good state.
struct Abort {
    message: String,
    last: Option<State>,
}

impl From<SolverError> for Abort {
    fn from(e: SolverError) -> Self {
        Abort {
            message: e.to_string(),
            last: None,
        }
    }
}

impl From<TransientFailure> for Abort {
    fn from(f: TransientFailure) -> Self {
        Abort {
            message: f.error.to_string(),
            last: f.partial.states.last().cloned(),
        }
    }
}

impl From<diag::DiagnosticsError> for Abort {
    fn from(e: diag::DiagnosticsError) -> Self {
        Abort {
            message: e.to_string(),
            last: None,
        }
    }
}

impl From<assembly::AssemblyError> for Abort {
    fn from(e: assembly::AssemblyError) -> Self {
        Abort {
            message: e.to_string(),
            last: None,
        }
    }
}

/// Which operation to run on a scenario; `Kind` follows the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Kind,
    Sweep,
    Probe { n: usize, seed: u64 },
    Study { levels: usize },
    Axioms,
}

pub fn kind_name(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::EquilibriumDecay => "equilibrium_decay",
        ScenarioKind::Transient => "transient",
        ScenarioKind::StationarySweep => "stationary_sweep",
        ScenarioKind::UniquenessProbe => "uniqueness_probe",
        ScenarioKind::ConvergenceStudy => "convergence_study",
        ScenarioKind::AxiomCheck => "axiom_check",
        ScenarioKind::RegularityProbe => "regularity_probe",
    }
}

/// Runs `spec` in the given mode, writing artifacts into `spec.output`.
pub fn run_scenario(spec: &ScenarioSpec, mode: Mode) -> Result<Outcome, RunError> {
    let mut spec = spec.clone();
    let kind = match mode {
        Mode::Kind => spec.kind,
        Mode::Sweep => ScenarioKind::StationarySweep,
        Mode::Probe { n, seed } => {
            spec.params.perturbations = n;
            spec.seed = seed;
            ScenarioKind::UniquenessProbe
        }
        Mode::Study { levels } => {
            if levels < 3 {
                return Err(ConfigError::Invalid {
                    key: "levels".into(),
                    reason: "need at least 3 levels".into(),
                }
                .into());
            }
            spec.params.levels = levels;
            ScenarioKind::ConvergenceStudy
        }
        Mode::Axioms => ScenarioKind::AxiomCheck,
    };
    let device = spec.build_device()?;
    if kind == ScenarioKind::EquilibriumDecay
        && !(device.equilibrium_compatible() && device.generation.is_none())
    {
        return Err(ConfigError::Invalid {
            key: "kind".into(),
            reason: "equilibrium_decay needs a dark device whose contacts share one constant quasi Fermi level".into(),
        }
        .into());
    }
    fs::create_dir_all(&spec.output).map_err(|source| RunError::Io {
        path: spec.output.clone(),
        source,
    })?;
    let sink = Sink {
        dir: spec.output.clone(),
    };
    let resolved = resolved_toml(&spec, &device).map_err(|e| ConfigError::Invalid {
        key: "<resolved>".into(),
        reason: e.to_string(),
    })?;
    sink.write("resolved.toml", &resolved)?;

    let mut verdict = Verdict::new(&spec.name, kind_name(kind), spec.seed);
    let result = match kind {
        ScenarioKind::EquilibriumDecay | ScenarioKind::Transient => {
            transient(&spec, &device, &sink, &mut verdict, kind)
        }
        ScenarioKind::StationarySweep => sweep(&spec, &device, &sink, &mut verdict),
        ScenarioKind::UniquenessProbe => probe(&spec, &device, &sink, &mut verdict),
        ScenarioKind::ConvergenceStudy => study(&spec, &device, &sink, &mut verdict),
        ScenarioKind::AxiomCheck => axioms(&spec, &device, &sink, &mut verdict),
        ScenarioKind::RegularityProbe => regularity(&spec, &device, &sink, &mut verdict),
    };
    match result {
        Ok(Ok(())) => {}
        Ok(Err(abort)) => {
            verdict.passed = false;
            verdict.aborted = Some(abort.message);
            if let Some(last) = abort.last {
                sink.write("abort_checkpoint.txt", &checkpoint::save(&device, &last))?;
            }
        }
        Err(e) => return Err(e),
    }
    sink.write("verdict.json", &verdict.to_json())?;
    Ok(Outcome {
        verdict,
        output: spec.output.clone(),
    })
}

type Step = Result<Result<(), Abort>, RunError>;

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return Ok(Err(Abort::from(e))),
        }
    };
}

fn uniform_grid(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let steps = ((t_end - t0) / dt).round().max(1.0) as usize;
    (0..=steps)
        .map(|s| t0 + (t_end - t0) * s as f64 / steps as f64)
        .collect()
}

/// Aggregated invariant witnesses over several runs.
#[derive(Default)]
struct Witness {
    worst_energy_increase: f64,
    energy_failed: bool,
    max_vacancy_drift: f64,
    max_carrier_defect: f64,
    min_margin: f64,
    min_carrier: f64,
    breaches: usize,
    max_lower_bound: f64,
    fitted_rates: Vec<(String, f64)>,
}

fn record_run(device: &Device, reports: &[diag::DiagnosticsReport], w: &mut Witness) {
    let vac: Vec<usize> = device.vacancy_indices().collect();
    let m0 = &reports[0].masses;
    for r in reports {
        for &i in &vac {
            w.max_vacancy_drift = w
                .max_vacancy_drift
                .max((r.masses[i] - m0[i]).abs() / m0[i].abs());
        }
        for (i, sp) in device.species.iter().enumerate() {
            if sp.is_carrier() {
                w.max_carrier_defect = w.max_carrier_defect.max(r.balance_defect[i].abs());
                w.min_carrier = w.min_carrier.min(r.bounds[i].min);
            }
            w.min_margin = w.min_margin.min(r.bounds[i].margin);
        }
        w.breaches += usize::from(r.flags.bounds_breach);
        w.max_lower_bound = w.max_lower_bound.max(r.lower_bound_constant);
    }
}

fn transient(
    spec: &ScenarioSpec,
    device: &Device,
    sink: &Sink,
    verdict: &mut Verdict,
    kind: ScenarioKind,
) -> Step {
    let initial = attempt!(solver::initial_state(device));
    let monotone = device.equilibrium_compatible() && device.generation.is_none();
    let tol = &spec.tolerances;
    let (reference, eq) = if device.equilibrium_compatible() {
        let eq = attempt!(solver::equilibrium_state(device, &initial, &spec.solver));
        (
            attempt!(EnergyReference::from_equilibrium(device, &eq)),
            Some(eq),
        )
    } else {
        (EnergyReference::from_boundary(device, initial.t), None)
    };
    let runs: Vec<(String, Option<f64>)> =
        if kind == ScenarioKind::EquilibriumDecay && !spec.params.dt_sweep.is_empty() {
            spec.params
                .dt_sweep
                .iter()
                .map(|dt| (format!("dt={dt:e}"), Some(*dt)))
                .collect()
        } else {
            vec![("adaptive".to_string(), None)]
        };
    let mut csv = banner("diagnostics", &spec.name, spec.seed);
    csv.push_str(&output::diagnostics_header(device));
    let mut w = Witness {
        min_margin: f64::INFINITY,
        min_carrier: f64::INFINITY,
        ..Default::default()
    };
    let mut last: Option<Trajectory> = None;
    for (label, dt) in &runs {
        let traj = match dt {
            Some(dt) => {
                let grid = uniform_grid(initial.t, spec.params.t_end, *dt);
                match solver::run_on_grid(
                    device,
                    &initial,
                    &grid,
                    &spec.solver,
                    &PathVariant::baseline(),
                ) {
                    Ok((t, _)) => t,
                    Err(f) => {
                        sink.write("diagnostics.csv", &csv)?;
                        return Ok(Err(Abort::from(f)));
                    }
                }
            }
            None => {
                match solver::run_transient(device, &initial, spec.params.t_end, &spec.solver) {
                    Ok(t) => t,
                    Err(f) => {
                        sink.write("diagnostics.csv", &csv)?;
                        return Ok(Err(Abort::from(f)));
                    }
                }
            }
        };
        let reports = attempt!(diag::analyze(device, &traj, &reference, tol, &[]));
        output::diagnostics_rows(&mut csv, device, label, &traj, &reports);
        let decay = diag::energy_decay_check(&reports, monotone, tol.energy);
        w.worst_energy_increase = w.worst_energy_increase.max(decay.worst_increase);
        w.energy_failed |= !decay.passed;
        w.fitted_rates.push((label.clone(), decay.fitted_rate));
        record_run(device, &reports, &mut w);
        last = Some(traj);
    }
    sink.write("diagnostics.csv", &csv)?;
    let traj = last.expect("at least one run");
    let final_state = traj.states.last().unwrap();
    sink.write("checkpoint.txt", &checkpoint::save(device, final_state))?;
    let profile = output::profile_csv(
        device,
        final_state,
        &[],
        &banner("profile", &spec.name, spec.seed),
    )
    .expect("all fields");
    sink.write("profile.csv", &profile)?;

    if let Some(eq) = &eq {
        let psi_eq = attempt!(diag::free_energy(device, &reference, eq));
        verdict.check(
            "equilibrium_zero",
            psi_eq.abs() <= 1e-12,
            psi_eq.abs(),
            Some(1e-12),
            "free energy of the discrete equilibrium",
        );
    }
    if monotone {
        verdict.check(
            "energy_decay",
            !w.energy_failed,
            w.worst_energy_increase,
            Some(tol.energy),
            format!("largest relative step increase over {} run(s)", runs.len()),
        );
    } else {
        let rates: Vec<String> = w
            .fitted_rates
            .iter()
            .map(|(l, r)| format!("{l}: {r:.6e}"))
            .collect();
        let finite = w.fitted_rates.iter().all(|(_, r)| r.is_finite());
        verdict.check(
            "energy_growth",
            finite,
            w.fitted_rates
                .iter()
                .map(|r| r.1)
                .fold(f64::NEG_INFINITY, f64::max),
            None,
            format!("fitted rate of ln(1+Psi): {}", rates.join("; ")),
        );
    }
    if device.vacancy_indices().next().is_some() {
        verdict.check(
            "vacancy_mass_conservation",
            w.max_vacancy_drift <= tol.vacancy_mass,
            w.max_vacancy_drift,
            Some(tol.vacancy_mass),
            "relative drift from the initial mass",
        );
    }
    verdict.check(
        "carrier_balance",
        w.max_carrier_defect <= tol.carrier_balance,
        w.max_carrier_defect,
        Some(tol.carrier_balance),
        "per-step mass change minus time-integrated sources and outflow",
    );
    verdict.check(
        "bounds",
        w.breaches == 0,
        w.min_margin,
        Some(0.0),
        format!(
            "{} breaching snapshot(s); smallest carrier density {:.6e}",
            w.breaches, w.min_carrier
        ),
    );
    verdict.check(
        "energy_lower_bound",
        w.max_lower_bound.is_finite(),
        w.max_lower_bound,
        None,
        "empirical constant c with L1 masses + |psi|_H1^2 <= c (1 + Psi)",
    );
    Ok(Ok(()))
}

fn sweep(spec: &ScenarioSpec, device: &Device, sink: &Sink, verdict: &mut Verdict) -> Step {
    let mut state = attempt!(solver::initial_state(device));
    let initial_x = state.to_vector(&device.layout);
    let mass0 = solver::vacancy_masses(device, &initial_x);
    let mut csv = banner("sweep", &spec.name, spec.seed);
    let mut header = String::from("bias,free_energy,max_splitting,residual");
    for c in &device.contacts {
        header.push_str(&format!(",current_{}", c.name));
    }
    for sp in &device.species {
        header.push_str(&format!(",mass_{0},min_{0},max_{0}", sp.id));
    }
    csv.push_str(&header);
    csv.push('\n');
    let (mut drift, mut worst_res, mut breaches, mut min_margin) =
        (0.0f64, 0.0f64, 0usize, f64::INFINITY);
    for &bias in &spec.params.biases {
        state = match solver::solve_stationary(device, &state, &spec.solver, bias) {
            Ok(s) => s,
            Err(e) => {
                sink.write("sweep.csv", &csv)?;
                return Ok(Err(Abort {
                    message: format!("bias {bias}: {e}"),
                    last: Some(state),
                }));
            }
        };
        let biased = device.with_bias(bias);
        let x = state.to_vector(&biased.layout);
        let res = attempt!(assembly::assemble_system(
            &biased,
            &x,
            state.t,
            TimeTerm::Stationary {
                vacancy_mass: &mass0
            },
            &assembly::AssemblyOptions {
                jacobian: false,
                ..Default::default()
            }
        ));
        let reference = EnergyReference::from_boundary(&biased, state.t);
        let psi = attempt!(diag::free_energy(&biased, &reference, &state));
        let split = attempt!(diag::quasi_fermi_splitting(&biased, &state));
        let currents = attempt!(assembly::contact_currents(&biased, &x, state.t));
        let bounds = diag::bounds_report(&biased, &state);
        let mut row = format!("{bias:.16e},{psi:.16e},{split:.16e},{:.6e}", res.norm());
        for c in currents {
            row.push_str(&format!(",{c:.16e}"));
        }
        for (i, b) in bounds.iter().enumerate() {
            let m = diag::species_mass(&biased, &state, i);
            row.push_str(&format!(",{m:.16e},{:.16e},{:.16e}", b.min, b.max));
            if !biased.species[i].is_carrier() {
                drift = drift.max((m - mass0[i]).abs() / mass0[i]);
            }
            min_margin = min_margin.min(b.margin);
            breaches += usize::from(b.breach);
        }
        csv.push_str(&row);
        csv.push('\n');
        worst_res = worst_res.max(res.norm());
    }
    sink.write("sweep.csv", &csv)?;
    sink.write("checkpoint.txt", &checkpoint::save(device, &state))?;
    let last = device.with_bias(*spec.params.biases.last().unwrap_or(&0.0));
    let profile = output::profile_csv(
        &last,
        &state,
        &[],
        &banner("profile", &spec.name, spec.seed),
    )
    .expect("all fields");
    sink.write("profile.csv", &profile)?;
    let tol = &spec.tolerances;
    verdict.check(
        "stationary_residual",
        worst_res <= spec.solver.newton_tol,
        worst_res,
        Some(spec.solver.newton_tol),
        "largest residual norm over the sweep",
    );
    if device.vacancy_indices().next().is_some() {
        verdict.check(
            "vacancy_mass_conservation",
            drift <= tol.vacancy_mass,
            drift,
            Some(tol.vacancy_mass),
            "relative drift from the initial mass",
        );
    }
    verdict.check(
        "bounds",
        breaches == 0,
        min_margin,
        Some(0.0),
        format!("{breaches} breaching state(s)"),
    );
    Ok(Ok(()))
}

fn probe(spec: &ScenarioSpec, device: &Device, sink: &Sink, verdict: &mut Verdict) -> Step {
    let initial = attempt!(solver::initial_state(device));
    let t_end = spec.probe_t_end();
    let baseline = attempt!(solver::run_transient(device, &initial, t_end, &spec.solver));
    let times = baseline.times();
    let variants =
        solver::probe_variants(device.species.len(), spec.params.perturbations, spec.seed);
    let results: Vec<Result<(Trajectory, usize), TransientFailure>> = variants
        .par_iter()
        .map(|v| solver::run_on_grid(device, &initial, &times, &spec.solver, v))
        .collect();
    let mut runs = vec![baseline];
    let mut fallbacks = 0;
    for r in results {
        let (t, f) = attempt!(r);
        fallbacks += f;
        runs.push(t);
    }
    let (worst, pairs) = solver::max_pairwise_discrepancy(device, &runs);
    let mut csv = banner("probe", &spec.name, spec.seed);
    csv.push_str("run_a,run_b,max_discrepancy\n");
    for (a, b, d) in &pairs {
        csv.push_str(&format!("{a},{b},{d:.6e}\n"));
    }
    sink.write("probe.csv", &csv)?;
    verdict.check(
        "uniqueness",
        worst <= spec.params.probe_tolerance,
        worst,
        Some(spec.params.probe_tolerance),
        format!(
            "{} paths over {} accepted times; {fallbacks} fallback step(s)",
            runs.len(),
            times.len()
        ),
    );
    Ok(Ok(()))
}

fn study(spec: &ScenarioSpec, device: &Device, sink: &Sink, verdict: &mut Verdict) -> Step {
    let p = &spec.params;
    let cells: Vec<usize> = (0..p.levels).map(|j| p.study_cells << j).collect();
    let spatial = attempt!(diag::poisson_manufactured_study(&cells));
    let dts: Vec<f64> = (0..p.levels)
        .map(|j| p.study_dt / f64::from(1u32 << j))
        .collect();
    let initial = attempt!(solver::initial_state(device));
    let temporal = attempt!(diag::temporal_study(
        device,
        &initial,
        p.study_t_end,
        &dts,
        &spec.solver
    ));
    let b = banner("study", &spec.name, spec.seed);
    sink.write(
        "orders.csv",
        &output::study_csv(
            &b,
            &[
                ("poisson_space", &spatial),
                ("backward_euler_time", &temporal),
            ],
        ),
    )?;
    let band = |levels: &[diag::StudyLevel], target: f64| {
        let orders: Vec<f64> = levels.iter().filter_map(|l| l.order).collect();
        let worst = orders
            .iter()
            .map(|o| (o - target).abs())
            .fold(0.0, f64::max);
        (!orders.is_empty() && worst <= 0.2, orders)
    };
    let (ok_s, os) = band(&spatial, 2.0);
    let (ok_t, ot) = band(&temporal, 1.0);
    verdict.check(
        "spatial_order",
        ok_s,
        os.last().copied().unwrap_or(f64::NAN),
        Some(0.2),
        format!("observed orders {os:?}, expected 2"),
    );
    verdict.check(
        "temporal_order",
        ok_t,
        ot.last().copied().unwrap_or(f64::NAN),
        Some(0.2),
        format!("observed orders {ot:?}, expected 1"),
    );
    Ok(Ok(()))
}

/// Statistics families and z-grids checked by `check-axioms`.
pub fn axiom_grids() -> Vec<(&'static str, StatisticsKind, Vec<f64>)> {
    let grid = |a: f64, b: f64, n: usize| {
        (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect::<Vec<_>>()
    };
    vec![
        (
            "boltzmann",
            StatisticsKind::Boltzmann,
            grid(-30.0, 30.0, 601),
        ),
        (
            "fermi_dirac_half",
            StatisticsKind::FermiDiracHalf,
            grid(-30.0, 30.0, 601),
        ),
        (
            "blakemore_1",
            StatisticsKind::Blakemore { gamma: 1.0 },
            grid(0.0, 30.0, 301),
        ),
    ]
}

fn axioms(spec: &ScenarioSpec, device: &Device, sink: &Sink, verdict: &mut Verdict) -> Step {
    let mut csv = banner("axioms", &spec.name, spec.seed);
    csv.push_str("statistics,axiom,z,value,passed\n");
    let mut families = axiom_grids();
    for sp in &device.species {
        if !families.iter().any(|f| f.1 == sp.statistics.kind) {
            let lo = if sp.statistics.kind.is_bounded() {
                0.0
            } else {
                -30.0
            };
            let grid = (0..=300)
                .map(|k| lo + (30.0 - lo) * k as f64 / 300.0)
                .collect();
            families.push(("device_species", sp.statistics.kind, grid));
        }
    }
    for (label, kind, grid) in &families {
        let report = verify_axioms(*kind, grid);
        for e in &report.entries {
            csv.push_str(&format!(
                "{label},{},{:.6e},{:.6e},{}\n",
                e.axiom.label(),
                e.z,
                e.value,
                u8::from(e.passed)
            ));
        }
        let failures = report.failures().count();
        let name = format!("axioms_{label}");
        if verdict.get(&name).is_none() {
            verdict.check(
                &name,
                report.passed(),
                failures as f64,
                Some(0.0),
                format!(
                    "{} checks, constant {:?}",
                    report.entries.len(),
                    report.empirical_constant
                ),
            );
        }
    }
    let fd = StatisticsKind::FermiDiracHalf;
    let worst = (0..50)
        .map(|k| -30.0 + 60.0 * k as f64 / 49.0)
        .map(|z| {
            let q = fermi_dirac_half_quadrature(z);
            ((fd.eval(z).unwrap_or(f64::NAN) - q) / q).abs()
        })
        .fold(0.0, f64::max);
    verdict.check(
        "fermi_dirac_oracle",
        worst <= 1e-10,
        worst,
        Some(1e-10),
        "relative error against adaptive quadrature at 50 points",
    );
    sink.write("axioms.csv", &csv)?;
    Ok(Ok(()))
}

fn regularity(spec: &ScenarioSpec, device: &Device, sink: &Sink, verdict: &mut Verdict) -> Step {
    let (mut breaches, mut min_margin) = (0usize, f64::INFINITY);
    let solve = |d: &Device| -> Result<State, SolverError> {
        let init = solver::initial_state(d)?;
        let state = solver::solve_stationary(d, &init, &spec.solver, d.config.bias)?;
        for b in diag::bounds_report(d, &state) {
            breaches += usize::from(b.breach);
            min_margin = min_margin.min(b.margin);
        }
        Ok(state)
    };
    let report = attempt!(diag::regularity_probe(
        device,
        spec.params.refinements,
        &spec.params.gradient_q,
        solve
    ));
    let mut csv = banner("regularity", &spec.name, spec.seed);
    csv.push_str("level,cells,species,q,norm\n");
    for (level, row) in report.norms.iter().enumerate() {
        for g in row {
            csv.push_str(&format!(
                "{level},{},{},{},{:.16e}\n",
                report.cells[level], device.species[g.species].id, g.q, g.value
            ));
        }
    }
    sink.write("regularity.csv", &csv)?;
    verdict.check(
        "regularity_bounded",
        report.passed,
        report.max_ratio,
        Some(2.0),
        format!(
            "largest norm ratio between levels; successive changes decreasing: {}",
            report.changes_decreasing
        ),
    );
    verdict.check(
        "bounds",
        breaches == 0,
        min_margin,
        Some(0.0),
        format!(
            "{breaches} breaching level(s) over {} steady states",
            report.cells.len()
        ),
    );
    Ok(Ok(()))
}

/// Output directory for a run of `spec` under a mode-specific subdirectory.
pub fn output_dir(spec: &ScenarioSpec, sub: Option<&str>) -> PathBuf {
    match sub {
        Some(s) => Path::new(&spec.output).join(s),
        None => spec.output.clone(),
    }
}

//! Damped Newton solver for implicit Euler steps, adaptive time stepping,
//! stationary states and the solution-uniqueness probe.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    self, assemble_system, AssemblyError, AssemblyOptions, FluxScheme, State, TimeTerm,
};
use crate::device::{perturbation_factor, CarrierInit, Device};
use crate::linalg::{self, LinalgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("Newton iteration diverged: residual {residual:e} not reduced after damping (iteration {iteration})")]
    NewtonDiverged { residual: f64, iteration: usize },
    #[error(
        "Newton iteration did not converge in {iterations} iterations (residual {residual:e})"
    )]
    MaxIterations { residual: f64, iterations: usize },
    #[error("density safeguard cannot keep unknown {index} inside its range")]
    BoundsBreach { index: usize },
    #[error("step failed at t = {t} with dt = {dt} at the minimal step size: {reason}")]
    StepFailure { t: f64, dt: f64, reason: String },
    #[error("pseudo-transient continuation failed: {0}")]
    ContinuationFailed(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linear(#[from] LinalgError),
}

/// Line-search damping factors `first · factor^k`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSchedule {
    pub first: f64,
    pub factor: f64,
    pub steps: u32,
}

impl Default for DampingSchedule {
    fn default() -> Self {
        Self {
            first: 1.0,
            factor: 0.5,
            steps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Residual 2-norm accepted as converged.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Relative step size below which a Newton iterate within `newton_tol` is final.
    pub step_tol: f64,
    pub damping: DampingSchedule,
    /// Largest fraction of the distance to a range boundary one update may cover.
    pub density_safeguard: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_grow: f64,
    pub dt_shrink: f64,
    /// Consecutive successes before the step grows.
    pub grow_after: usize,
    /// Run Gummel sweeps as a predictor before every coupled Newton solve.
    pub gummel: bool,
    pub gummel_tol: f64,
    pub gummel_max_iters: usize,
    pub scheme: FluxScheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton_iters: 50,
            step_tol: 1e-10,
            damping: DampingSchedule::default(),
            density_safeguard: 0.9,
            dt_initial: 1e-3,
            dt_min: 1e-10,
            dt_max: 1.0,
            dt_grow: 1.5,
            dt_shrink: 0.5,
            grow_after: 3,
            gummel: false,
            gummel_tol: 1e-8,
            gummel_max_iters: 30,
            scheme: FluxScheme::ExcessChemicalPotential,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if !(self.newton_tol > 0.0 && self.step_tol > 0.0 && self.gummel_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_initial && self.dt_initial <= self.dt_max)
        {
            return bad("time steps must satisfy 0 < dt_min <= dt_initial <= dt_max");
        }
        if !(self.density_safeguard > 0.0 && self.density_safeguard < 1.0) {
            return bad("density_safeguard must lie in (0, 1)");
        }
        if !(self.dt_grow >= 1.0 && self.dt_shrink > 0.0 && self.dt_shrink < 1.0) {
            return bad("need dt_grow >= 1 and 0 < dt_shrink < 1");
        }
        let d = self.damping;
        if !(d.first > 0.0 && d.first <= 1.0 && d.factor > 0.0 && d.factor < 1.0) {
            return bad("damping needs 0 < first <= 1 and 0 < factor < 1");
        }
        if self.max_newton_iters == 0 {
            return bad("max_newton_iters must be positive");
        }
        Ok(())
    }

    fn options(&self) -> AssemblyOptions {
        AssemblyOptions {
            scheme: self.scheme,
            ..Default::default()
        }
    }
}

/// A solver path: how the Newton iteration is started and globalized.
/// Different paths must converge to the same discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathVariant {
    /// Amplitude of the multiplicative density noise on the initial guess.
    pub noise: f64,
    pub seed: u64,
    pub damping: Option<DampingSchedule>,
    /// Species order of Gummel predictor sweeps; `None` disables the predictor.
    pub gummel_order: Option<Vec<usize>>,
}

impl PathVariant {
    pub fn baseline() -> Self {
        Self {
            noise: 0.0,
            seed: 0,
            damping: None,
            gummel_order: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonStats {
    pub iterations: usize,
    /// Residual 2-norm before each iteration and after the last.
    pub residuals: Vec<f64>,
    pub gummel_sweeps: usize,
}

impl NewtonStats {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    /// Ratios `r_{k+1} / r_k` of successive residuals.
    pub fn ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Per-unknown admissible ranges.
struct Ranges {
    upper: Vec<f64>,
    density: Vec<bool>,
}

impl Ranges {
    fn new(device: &Device) -> Self {
        let l = &device.layout;
        let mut upper = vec![f64::INFINITY; l.n_unknowns];
        let mut density = vec![false; l.n_unknowns];
        for (i, sp) in device.species.iter().enumerate() {
            let lim = sp.statistics.density_limit().unwrap_or(f64::INFINITY);
            for &k in &l.region[i] {
                upper[l.density[i][k]] = lim;
                density[l.density[i][k]] = true;
            }
        }
        Self { upper, density }
    }

    /// Largest λ ≤ 1 keeping `x + λδ` within `fraction` of the distance to each bound.
    fn step_cap(&self, x: &[f64], dx: &[f64], fraction: f64) -> f64 {
        let mut cap = 1.0f64;
        for i in 0..x.len() {
            if !self.density[i] || dx[i] == 0.0 {
                continue;
            }
            let room = if dx[i] < 0.0 {
                x[i]
            } else {
                self.upper[i] - x[i]
            };
            if room.is_finite() {
                cap = cap.min(fraction * room / dx[i].abs());
            }
        }
        cap
    }

    fn admissible(&self, x: &[f64]) -> bool {
        (0..x.len()).all(|i| !self.density[i] || (x[i] > 0.0 && x[i] < self.upper[i]))
    }
}

fn norm(v: &[f64]) -> f64 {
    crate::math::sqrt(v.iter().map(|a| a * a).sum::<f64>())
}

/// Damped Newton on the unknowns `subset` (all unknowns when `None`), others frozen.
#[allow(clippy::too_many_arguments)]
fn newton(
    device: &Device,
    x: &mut [f64],
    t: f64,
    time: TimeTerm<'_>,
    config: &SolverConfig,
    damping: &DampingSchedule,
    subset: Option<&[usize]>,
    max_iters: usize,
    tol: f64,
) -> Result<NewtonStats, SolverError> {
    let ranges = Ranges::new(device);
    let opts = config.options();
    let residual_opts = AssemblyOptions {
        jacobian: false,
        ..opts
    };
    let restrict = |v: &[f64]| -> Vec<f64> {
        match subset {
            Some(s) => s.iter().map(|&i| v[i]).collect(),
            None => v.to_vec(),
        }
    };
    let mut stats = NewtonStats::default();
    let mut small_step = false;
    // Full assembly of the accepted trial point, reused by the next iteration.
    let mut cached = None;
    for iteration in 0..=max_iters {
        let res = match cached.take() {
            Some(r) => r,
            None => assemble_system(device, x, t, time, &opts)?,
        };
        let r = restrict(&res.values);
        let rn = norm(&r);
        stats.residuals.push(rn);
        if rn <= 1e-3 * tol || (rn <= tol && small_step) {
            stats.iterations = iteration;
            return Ok(stats);
        }
        if iteration == max_iters {
            if rn <= tol {
                stats.iterations = iteration;
                return Ok(stats);
            }
            return Err(SolverError::MaxIterations {
                residual: rn,
                iterations: iteration,
            });
        }
        let jac = res.jacobian.expect("jacobian requested");
        let (jac, dense) = match subset {
            Some(s) => {
                let dense: Vec<usize> = res
                    .dense_rows
                    .iter()
                    .filter_map(|d| s.binary_search(d).ok())
                    .collect();
                (jac.submatrix(s), dense)
            }
            None => (jac, res.dense_rows.clone()),
        };
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta_sub = linalg::solve_with_dense_rows(&jac, &rhs, &dense)?;
        let mut delta = vec![0.0; x.len()];
        match subset {
            Some(s) => {
                for (&i, d) in s.iter().zip(&delta_sub) {
                    delta[i] = *d;
                }
            }
            None => delta.copy_from_slice(&delta_sub),
        }
        let cap = ranges.step_cap(x, &delta, config.density_safeguard);
        if !(cap > 0.0) {
            return Err(SolverError::BoundsBreach { index: 0 });
        }
        let mut accepted = None;
        let mut lambda = damping.first;
        for attempt in 0..=damping.steps {
            let step = lambda * cap;
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            if ranges.admissible(&trial) {
                let o = if attempt == 0 { &opts } else { &residual_opts };
                if let Ok(tr) = assemble_system(device, &trial, t, time, o) {
                    let tn = norm(&restrict(&tr.values));
                    if tn.is_finite() && tn <= (1.0 - 1e-4 * step) * rn {
                        if tr.jacobian.is_some() {
                            cached = Some(tr);
                        }
                        accepted = Some((trial, step));
                        break;
                    }
                }
            }
            lambda *= damping.factor;
        }
        let Some((trial, step)) = accepted else {
            if rn <= tol {
                stats.iterations = iteration;
                return Ok(stats);
            }
            return Err(SolverError::NewtonDiverged {
                residual: rn,
                iteration,
            });
        };
        small_step = delta.iter().enumerate().all(|(i, d)| {
            let scale = if ranges.density[i] { x[i].abs() } else { 1.0 };
            (step * d).abs() <= config.step_tol * scale
        });
        x.copy_from_slice(&trial);
    }
    unreachable!()
}

/// Gummel sweeps: Poisson, then each species in `order`, each with the others frozen.
fn gummel(
    device: &Device,
    x: &mut [f64],
    t: f64,
    time: TimeTerm<'_>,
    config: &SolverConfig,
    order: &[usize],
) -> usize {
    let layout = &device.layout;
    let mut psi: Vec<usize> = layout.psi.clone();
    psi.sort_unstable();
    let blocks: Vec<Vec<usize>> = order
        .iter()
        .map(|&i| {
            let mut b: Vec<usize> = layout.region[i]
                .iter()
                .map(|&k| layout.density[i][k])
                .collect();
            b.sort_unstable();
            b
        })
        .collect();
    let damping = config.damping;
    for sweep in 0..config.gummel_max_iters {
        let before = x.to_vec();
        let mut ok = newton(
            device,
            x,
            t,
            time,
            config,
            &damping,
            Some(&psi),
            20,
            config.newton_tol,
        )
        .is_ok();
        for b in &blocks {
            ok &= newton(
                device,
                x,
                t,
                time,
                config,
                &damping,
                Some(b),
                20,
                config.newton_tol,
            )
            .is_ok();
        }
        if !ok {
            x.copy_from_slice(&before);
            return sweep;
        }
        let change = (0..x.len())
            .map(|i| {
                let scale = if layout.is_density(i) {
                    before[i].abs()
                } else {
                    1.0
                };
                (x[i] - before[i]).abs() / scale
            })
            .fold(0.0, f64::max);
        if change < config.gummel_tol {
            return sweep + 1;
        }
    }
    config.gummel_max_iters
}

/// Applies multiplicative noise of relative amplitude `amp` to all densities,
/// staying inside the statistics ranges.
fn perturb_guess(device: &Device, x: &mut [f64], amp: f64, rng: &mut ChaCha8Rng) {
    let layout = &device.layout;
    for (i, sp) in device.species.iter().enumerate() {
        let lim = sp.statistics.density_limit();
        for &k in &layout.region[i] {
            let j = layout.density[i][k];
            let xi: f64 = rng.gen_range(-1.0..1.0);
            let room = match lim {
                Some(l) => x[j].min(l - x[j]),
                None => x[j],
            };
            x[j] += amp * xi * room;
        }
    }
}

/// One implicit Euler step from `old` (flat) over `dt`, ending at time `t`.
pub fn solve_step(
    device: &Device,
    old: &[f64],
    t: f64,
    dt: f64,
    config: &SolverConfig,
    variant: &PathVariant,
) -> Result<(Vec<f64>, NewtonStats), SolverError> {
    let mut x = old.to_vec();
    if variant.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(variant.seed ^ t.to_bits());
        perturb_guess(device, &mut x, variant.noise, &mut rng);
    }
    let time = TimeTerm::Transient { old, dt };
    let mut sweeps = 0;
    let order: Option<Vec<usize>> = variant
        .gummel_order
        .clone()
        .or_else(|| config.gummel.then(|| (0..device.species.len()).collect()));
    if let Some(order) = order {
        sweeps = gummel(device, &mut x, t, time, config, &order);
    }
    let damping = variant.damping.unwrap_or(config.damping);
    let mut stats = newton(
        device,
        &mut x,
        t,
        time,
        config,
        &damping,
        None,
        config.max_newton_iters,
        config.newton_tol,
    )?;
    stats.gummel_sweeps = sweeps;
    Ok((x, stats))
}

/// Flat initial guess from the contact data: ψ = ψ^D, carriers at the
/// configured quasi Fermi level, vacancies at their initial density.
pub fn contact_guess(device: &Device) -> Vec<f64> {
    let layout = &device.layout;
    let psi_d = device.psi_extension(0.0);
    let phi0 = device.config.initial.phi;
    let mut x = vec![0.0; layout.n_unknowns];
    for (k, &i) in layout.psi.iter().enumerate() {
        x[i] = psi_d[k];
    }
    for (i, sp) in device.species.iter().enumerate() {
        for &k in &layout.region[i] {
            let u = if sp.is_carrier() {
                sp.statistics
                    .carrier_density(sp.z() * (phi0 - psi_d[k]))
                    .unwrap_or(sp.statistics.n_states)
            } else {
                sp.initial.unwrap_or(0.5 * sp.statistics.n_states)
            };
            x[layout.density[i][k]] = u;
        }
    }
    x
}

/// Solves the linear Poisson problem for the given densities (ψ entries of `x` are overwritten).
pub fn solve_potential(device: &Device, x: &mut [f64], t: f64) -> Result<(), SolverError> {
    let layout = &device.layout;
    let mut charge = device.doping.clone();
    for (i, sp) in device.species.iter().enumerate() {
        for &k in &layout.region[i] {
            charge[k] += sp.z() * x[layout.density[i][k]];
        }
    }
    let (a, b) = assembly::poisson_system(device, &charge, t);
    let psi = linalg::solve(&a, &b)?;
    for (k, &i) in layout.psi.iter().enumerate() {
        x[i] = psi[k];
    }
    Ok(())
}

/// Initial data per the device configuration, with ψ solving Poisson.
pub fn initial_state(device: &Device) -> Result<State, SolverError> {
    let layout = &device.layout;
    let mut x = contact_guess(device);
    let cfg = &device.config.initial;
    for (i, sp) in device.species.iter().enumerate() {
        for &k in &layout.region[i] {
            let j = layout.density[i][k];
            if sp.is_carrier() && cfg.carriers == CarrierInit::Uniform {
                x[j] = sp.initial.expect("validated");
            }
            x[j] *= perturbation_factor(&device.mesh, cfg.perturbation, i + 1, k);
        }
    }
    solve_potential(device, &mut x, 0.0)?;
    Ok(State::from_vector(layout, 0.0, &x))
}

/// Accepted step of a transient run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub newton: NewtonStats,
    /// Per species: mass change minus `dt (∫(G − R) − outflow)`.
    pub balance_defect: Vec<f64>,
    /// Residual 2-norm of the accepted state.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub steps: Vec<StepRecord>,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct TransientFailure {
    pub partial: Trajectory,
    pub error: SolverError,
}

fn mass_bookkeeping(
    device: &Device,
    old: &[f64],
    new: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<f64>, SolverError> {
    let layout = &device.layout;
    let terms = assembly::balance_terms(device, new, t)?;
    Ok(device
        .species
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let change: f64 = layout.region[i]
                .iter()
                .map(|&k| {
                    device.mesh.volumes[k] * (new[layout.density[i][k]] - old[layout.density[i][k]])
                })
                .sum();
            change - dt * (terms[i].source - terms[i].outflow)
        })
        .collect())
}

fn accept(
    device: &Device,
    traj: &mut Trajectory,
    old: &[f64],
    x: &[f64],
    t: f64,
    dt: f64,
    stats: NewtonStats,
) -> Result<(), SolverError> {
    let balance_defect = mass_bookkeeping(device, old, x, t, dt)?;
    let residual = stats.final_residual();
    traj.steps.push(StepRecord {
        t,
        dt,
        newton: stats,
        balance_defect,
        residual,
    });
    traj.states.push(State::from_vector(&device.layout, t, x));
    Ok(())
}

/// Integrates from `initial` to `t_end` with adaptive implicit Euler steps.
pub fn run_transient(
    device: &Device,
    initial: &State,
    t_end: f64,
    config: &SolverConfig,
) -> Result<Trajectory, TransientFailure> {
    run_transient_with(device, initial, t_end, config, &PathVariant::baseline())
}

pub fn run_transient_with(
    device: &Device,
    initial: &State,
    t_end: f64,
    config: &SolverConfig,
    variant: &PathVariant,
) -> Result<Trajectory, TransientFailure> {
    let mut traj = Trajectory {
        states: vec![initial.clone()],
        steps: Vec::new(),
        rejected_steps: 0,
    };
    let fail = |traj: Trajectory, error| {
        Err(TransientFailure {
            partial: traj,
            error,
        })
    };
    if let Err(e) = config.validate() {
        return fail(traj, e);
    }
    if !(t_end > initial.t) {
        return fail(
            traj,
            SolverError::InvalidConfig("final time must exceed the initial time".into()),
        );
    }
    let mut x = initial.to_vector(&device.layout);
    let mut t = initial.t;
    let mut dt = config.dt_initial;
    let mut streak = 0;
    let end_tol = 1e-12 * t_end.abs().max(1.0);
    while t < t_end - end_tol {
        let step = dt.min(t_end - t);
        let t_new = if t_end - (t + step) <= end_tol {
            t_end
        } else {
            t + step
        };
        match solve_step(device, &x, t_new, t_new - t, config, variant) {
            Ok((xn, stats)) => {
                if let Err(e) = accept(device, &mut traj, &x, &xn, t_new, t_new - t, stats) {
                    return fail(traj, e);
                }
                x = xn;
                t = t_new;
                streak += 1;
                if streak >= config.grow_after {
                    dt = (dt * config.dt_grow).min(config.dt_max);
                    streak = 0;
                }
            }
            Err(e) => {
                traj.rejected_steps += 1;
                streak = 0;
                dt *= config.dt_shrink;
                if dt < config.dt_min {
                    let reason = alloc::format!("{e}");
                    return fail(
                        traj,
                        SolverError::StepFailure {
                            t,
                            dt: dt / config.dt_shrink,
                            reason,
                        },
                    );
                }
            }
        }
    }
    Ok(traj)
}

/// Re-runs the accepted time grid `times` (starting at `initial.t`) along a
/// different solver path. A step whose perturbed path fails is retried once
/// along the baseline path on the same grid.
pub fn run_on_grid(
    device: &Device,
    initial: &State,
    times: &[f64],
    config: &SolverConfig,
    variant: &PathVariant,
) -> Result<(Trajectory, usize), TransientFailure> {
    let mut traj = Trajectory {
        states: vec![initial.clone()],
        steps: Vec::new(),
        rejected_steps: 0,
    };
    let mut x = initial.to_vector(&device.layout);
    let mut fallbacks = 0;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let attempt = solve_step(device, &x, t1, t1 - t0, config, variant).or_else(|_| {
            fallbacks += 1;
            solve_step(device, &x, t1, t1 - t0, config, &PathVariant::baseline())
        });
        match attempt {
            Ok((xn, stats)) => {
                if let Err(error) = accept(device, &mut traj, &x, &xn, t1, t1 - t0, stats) {
                    return Err(TransientFailure {
                        partial: traj,
                        error,
                    });
                }
                x = xn;
            }
            Err(error) => {
                return Err(TransientFailure {
                    partial: traj,
                    error,
                })
            }
        }
    }
    Ok((traj, fallbacks))
}

/// Vacancy masses `∫ u_i` of a flat state, indexed by species (zero for carriers).
pub fn vacancy_masses(device: &Device, x: &[f64]) -> Vec<f64> {
    let layout = &device.layout;
    device
        .species
        .iter()
        .enumerate()
        .map(|(i, sp)| {
            if sp.is_carrier() {
                0.0
            } else {
                layout.region[i]
                    .iter()
                    .map(|&k| device.mesh.volumes[k] * x[layout.density[i][k]])
                    .sum()
            }
        })
        .collect()
}

/// Stationary state of `device` at the given bias, reached by pseudo-transient
/// continuation from `initial` followed by a stationary Newton solve. The
/// vacancy masses of `initial` are preserved.
pub fn solve_stationary(
    device: &Device,
    initial: &State,
    config: &SolverConfig,
    bias: f64,
) -> Result<State, SolverError> {
    config.validate()?;
    let device = device.with_bias(bias);
    let layout = &device.layout;
    let t = initial.t;
    let mut x = initial.to_vector(layout);
    let masses = vacancy_masses(&device, &x);
    let stationary = |x: &mut Vec<f64>| -> Result<NewtonStats, SolverError> {
        let mut trial = x.clone();
        let stats = newton(
            &device,
            &mut trial,
            t,
            TimeTerm::Stationary {
                vacancy_mass: &masses,
            },
            config,
            &config.damping,
            None,
            config.max_newton_iters,
            config.newton_tol,
        )?;
        *x = trial;
        Ok(stats)
    };
    if stationary(&mut x).is_ok() {
        return Ok(State::from_vector(layout, t, &x));
    }
    let mut dt = config.dt_initial;
    let mut last_error = String::new();
    for _ in 0..400 {
        match solve_step(&device, &x, t, dt, config, &PathVariant::baseline()) {
            Ok((xn, _)) => {
                x = xn;
                dt *= 2.0;
                if dt > 1e3 * config.dt_max.max(1.0) {
                    match stationary(&mut x) {
                        Ok(_) => return Ok(State::from_vector(layout, t, &x)),
                        Err(e) => last_error = alloc::format!("{e}"),
                    }
                    dt = config.dt_max;
                }
            }
            Err(e) => {
                last_error = alloc::format!("{e}");
                dt *= 0.25;
                if dt < config.dt_min {
                    break;
                }
            }
        }
    }
    Err(SolverError::ContinuationFailed(last_error))
}

/// Thermodynamic equilibrium reached from `initial` in the dark at zero bias.
pub fn equilibrium_state(
    device: &Device,
    initial: &State,
    config: &SolverConfig,
) -> Result<State, SolverError> {
    let dark = device.dark();
    let mut d = dark.clone();
    d.config.bias_ramp = 0.0;
    solve_stationary(&d, initial, config, 0.0)
}

/// Result of the solution-uniqueness probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub variants: Vec<PathVariant>,
    /// Largest `|x_a − x_b|` over all pairs of runs, accepted times and unknowns.
    pub max_discrepancy: f64,
    /// `(a, b, discrepancy)` for each pair; index 0 is the baseline run.
    pub pairs: Vec<(usize, usize, f64)>,
    pub accepted_times: usize,
    /// Steps where a perturbed path failed and the baseline path was used.
    pub fallbacks: usize,
}

/// Standard probe variants: noisy guesses, alternative damping schedules and
/// permuted Gummel predictor ordering.
pub fn probe_variants(n_species: usize, n: usize, seed: u64) -> Vec<PathVariant> {
    let schedules = [
        DampingSchedule {
            first: 1.0,
            factor: 0.5,
            steps: 10,
        },
        DampingSchedule {
            first: 0.8,
            factor: 0.3,
            steps: 12,
        },
        DampingSchedule {
            first: 1.0,
            factor: 0.7,
            steps: 20,
        },
    ];
    (0..n)
        .map(|k| {
            let mut order: Vec<usize> = (0..n_species).collect();
            order.rotate_left(k % n_species.max(1));
            if k % 2 == 1 {
                order.reverse();
            }
            PathVariant {
                noise: 0.1,
                seed: seed
                    .wrapping_add(k as u64)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15),
                damping: Some(schedules[k % schedules.len()]),
                gummel_order: (k % 2 == 1).then_some(order),
            }
        })
        .collect()
}

/// Max pairwise L∞ difference between trajectories on the same time grid.
pub fn max_pairwise_discrepancy(
    device: &Device,
    runs: &[Trajectory],
) -> (f64, Vec<(usize, usize, f64)>) {
    let flat: Vec<Vec<Vec<f64>>> = runs
        .iter()
        .map(|r| {
            r.states
                .iter()
                .map(|s| s.to_vector(&device.layout))
                .collect()
        })
        .collect();
    let mut pairs = Vec::new();
    let mut worst = 0.0f64;
    for a in 0..flat.len() {
        for b in a + 1..flat.len() {
            let mut d = 0.0f64;
            for (sa, sb) in flat[a].iter().zip(&flat[b]) {
                for (p, q) in sa.iter().zip(sb) {
                    d = d.max((p - q).abs());
                }
            }
            if flat[a].len() != flat[b].len() {
                d = f64::INFINITY;
            }
            worst = worst.max(d);
            pairs.push((a, b, d));
        }
    }
    (worst, pairs)
}

/// Runs the baseline transient, replays its accepted grid along each variant
/// path and reports the largest discrepancy.
pub fn uniqueness_probe(
    device: &Device,
    initial: &State,
    t_end: f64,
    config: &SolverConfig,
    variants: &[PathVariant],
) -> Result<ProbeReport, TransientFailure> {
    let baseline = run_transient(device, initial, t_end, config)?;
    let times = baseline.times();
    let mut runs = vec![baseline];
    let mut fallbacks = 0;
    for v in variants {
        let (traj, f) = run_on_grid(device, initial, &times, config, v)?;
        fallbacks += f;
        runs.push(traj);
    }
    let (max_discrepancy, pairs) = max_pairwise_discrepancy(device, &runs);
    Ok(ProbeReport {
        variants: variants.to_vec(),
        max_discrepancy,
        pairs,
        accepted_times: times.len(),
        fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_device, RecombinationSpec};
    use crate::testing::pin_config;

    fn quick() -> SolverConfig {
        SolverConfig {
            dt_initial: 1e-2,
            ..Default::default()
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let d = build_device(&pin_config(60)).unwrap();
        let init = initial_state(&d).unwrap();
        let eq = equilibrium_state(&d, &init, &quick()).unwrap();
        let x = eq.to_vector(&d.layout);
        let (xn, _) = solve_step(&d, &x, 0.1, 0.1, &quick(), &PathVariant::baseline()).unwrap();
        for (a, b) in x.iter().zip(&xn) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
        for i in 0..2 {
            let phi = eq.quasi_fermi(&d, i).unwrap();
            assert!(phi.iter().all(|p| p.abs() < 1e-10), "{phi:?}");
        }
    }

    #[test]
    fn frozen_carriers_need_one_iteration() {
        let mut cfg = pin_config(40);
        for s in cfg.species.iter_mut() {
            s.mobility = 0.0;
        }
        cfg.recombination = RecombinationSpec::Constant { rate: 0.0 };
        cfg.initial.perturbation = 0.2;
        let d = build_device(&cfg).unwrap();
        let mut x = initial_state(&d).unwrap().to_vector(&d.layout);
        // Offset ψ so the first residual is not already zero.
        for &i in &d.layout.psi {
            x[i] += 0.3;
        }
        let (_, stats) = solve_step(&d, &x, 0.1, 0.1, &quick(), &PathVariant::baseline()).unwrap();
        assert_eq!(stats.iterations, 1, "{:?}", stats.residuals);
    }

    #[test]
    fn identical_paths_are_bitwise_identical() {
        let mut cfg = pin_config(30);
        cfg.initial.perturbation = 0.2;
        let d = build_device(&cfg).unwrap();
        let init = initial_state(&d).unwrap();
        let v = probe_variants(3, 1, 7).remove(0);
        let report = uniqueness_probe(&d, &init, 0.05, &quick(), &[v.clone(), v]).unwrap();
        assert_eq!(
            report
                .pairs
                .iter()
                .find(|p| p.0 == 1 && p.1 == 2)
                .unwrap()
                .2,
            0.0
        );
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            dt_min: 1.0,
            dt_initial: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}

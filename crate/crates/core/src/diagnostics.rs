//! Discrete free energy, conservation and bound witnesses, gradient norms,
//! convergence studies and the gradient-integrability probe.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::assembly::{self, AssemblyError, State};
use crate::device::{parent_cells, Axis, ContactConfig, ContactPsi, Device, DeviceConfig, Side};
use crate::math::{ln, powf, sqrt};
use crate::quadrature::integrate;
use crate::solver::{self, PathVariant, SolverConfig, SolverError, Trajectory};
use crate::statistics::{ShiftedStatistics, StatisticsKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("level {level}: {source}")]
    Level { level: usize, source: SolverError },
    #[error("study needs at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Reference state `(ψ^ref, v_i^ref)` the free energy is measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReference {
    /// Per cell.
    pub psi: Vec<f64>,
    /// Per species over its region.
    pub chemical: Vec<Vec<f64>>,
    /// True when the reference is a discrete equilibrium of the device.
    pub equilibrium: bool,
}

impl EnergyReference {
    /// Reference built from a discrete equilibrium state; Ψ vanishes there.
    pub fn from_equilibrium(device: &Device, eq: &State) -> Result<Self, AssemblyError> {
        let chemical = (0..device.species.len())
            .map(|i| eq.chemical_potential(device, i))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            psi: eq.psi.clone(),
            chemical,
            equilibrium: true,
        })
    }

    /// Reference from the extended boundary data at time `t`:
    /// `v^ref = z(φ^D − ψ^D)` for carriers and `−z ψ^D` for vacancies.
    pub fn from_boundary(device: &Device, t: f64) -> Self {
        let psi = device.psi_extension(t);
        let phi = device.phi_extension(t);
        let chemical = device
            .species
            .iter()
            .enumerate()
            .map(|(i, sp)| {
                device.layout.region[i]
                    .iter()
                    .map(|&k| {
                        if sp.is_carrier() {
                            sp.z() * (phi[k] - psi[k])
                        } else {
                            -sp.z() * psi[k]
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            psi,
            chemical,
            equilibrium: false,
        }
    }

    /// Equilibrium reference when the boundary data admit one (computed from
    /// `initial`, whose vacancy masses it inherits), boundary reference otherwise.
    pub fn for_device(
        device: &Device,
        initial: &State,
        config: &SolverConfig,
    ) -> Result<Self, DiagnosticsError> {
        if device.equilibrium_compatible() {
            let eq = solver::equilibrium_state(device, initial, config)?;
            Ok(Self::from_equilibrium(device, &eq)?)
        } else {
            Ok(Self::from_boundary(device, initial.t))
        }
    }
}

/// `Φ(u) = ∫_{v_ref}^{v(u)} (u − N e(y)) dy ≥ 0`.
pub fn chemical_energy_density(
    st: &ShiftedStatistics,
    u: f64,
    v: f64,
    v_ref: f64,
) -> Result<f64, AssemblyError> {
    if let (Some(p), Some(p_ref)) = (st.primitive(v), st.primitive(v_ref)) {
        return Ok(u * (v - v_ref) - st.n_states * (p - p_ref));
    }
    let failed = core::cell::Cell::new(None);
    let g = |y: f64| match st.carrier_density(y) {
        Ok(e) => u - e,
        Err(err) => {
            failed.set(Some(err));
            0.0
        }
    };
    let value = integrate(&g, v_ref, v, 1e-13, 1e-18 * u.abs().max(1e-300));
    match failed.get() {
        Some(source) => Err(AssemblyError::Statistics {
            species: usize::MAX,
            cell: usize::MAX,
            source,
        }),
        None => Ok(value),
    }
}

fn sq(x: f64) -> f64 {
    x * x
}

/// Discrete free energy of `state` relative to `reference`.
pub fn free_energy(
    device: &Device,
    reference: &EnergyReference,
    state: &State,
) -> Result<f64, AssemblyError> {
    let mesh = &device.mesh;
    let mut electric = 0.0;
    let d = |k: usize| state.psi[k] - reference.psi[k];
    for e in &mesh.edges {
        let [k, l] = e.cells;
        let c = assembly::edge_coefficient(
            e.area,
            e.half,
            [device.permittivity[k], device.permittivity[l]],
        );
        electric += 0.5 * c * sq(d(k) - d(l));
    }
    for (f, face) in mesh.boundary_faces.iter().enumerate() {
        if device.face_contact[f].is_some() {
            electric +=
                0.5 * device.permittivity[face.cell] * face.transmissibility() * sq(d(face.cell));
        }
    }
    let mut chemical = 0.0;
    for (i, sp) in device.species.iter().enumerate() {
        let v = state.chemical_potential(device, i)?;
        for (r, &k) in device.layout.region[i].iter().enumerate() {
            let phi = chemical_energy_density(
                &sp.statistics,
                state.densities[i][r],
                v[r],
                reference.chemical[i][r],
            )
            .map_err(|e| match e {
                AssemblyError::Statistics { source, .. } => AssemblyError::Statistics {
                    species: i,
                    cell: k,
                    source,
                },
                other => other,
            })?;
            chemical += mesh.volumes[k] * phi;
        }
    }
    Ok(electric + chemical)
}

/// `Σ |K| u_i` over the region of species `i`.
pub fn species_mass(device: &Device, state: &State, species: usize) -> f64 {
    device.layout.region[species]
        .iter()
        .zip(&state.densities[species])
        .map(|(&k, u)| device.mesh.volumes[k] * u)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesBounds {
    pub min: f64,
    pub max: f64,
    /// Distance of the extrema to the admissible range: `min(min, limit − max)`.
    pub margin: f64,
    pub breach: bool,
}

/// Extrema of each species; a breach is any `u ≤ 0` or vacancy `u ≥ N/γ`.
pub fn bounds_report(device: &Device, state: &State) -> Vec<SpeciesBounds> {
    device
        .species
        .iter()
        .enumerate()
        .map(|(i, sp)| {
            let u = &state.densities[i];
            let min = u.iter().copied().fold(f64::INFINITY, f64::min);
            let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let upper = sp
                .statistics
                .density_limit()
                .map_or(f64::INFINITY, |l| l - max);
            let margin = min.min(upper);
            let breach = !(margin > 0.0) || u.iter().any(|v| !v.is_finite());
            SpeciesBounds {
                min,
                max,
                margin,
                breach,
            }
        })
        .collect()
}

/// Per-cell gradient of `field` (defined on the cells in `cells`) reconstructed
/// from the two-point differences of the adjacent edges inside the set, averaged per axis.
fn cell_gradients(device: &Device, cells: &[usize], field: &[f64]) -> Vec<[f64; 2]> {
    let n = device.n_cells();
    let mut pos = vec![usize::MAX; n];
    for (r, &k) in cells.iter().enumerate() {
        pos[k] = r;
    }
    let mut sum = vec![[0.0f64; 2]; cells.len()];
    let mut count = vec![[0u32; 2]; cells.len()];
    for e in &device.mesh.edges {
        let [k, l] = e.cells;
        let (a, b) = (pos[k], pos[l]);
        if a == usize::MAX || b == usize::MAX {
            continue;
        }
        let ax = match e.axis {
            Axis::X => 0,
            Axis::Y => 1,
        };
        let g = (field[b] - field[a]) / e.distance();
        for r in [a, b] {
            sum[r][ax] += g;
            count[r][ax] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, c)| {
            let avg = |j: usize| {
                if c[j] > 0 {
                    s[j] / f64::from(c[j])
                } else {
                    0.0
                }
            };
            [avg(0), avg(1)]
        })
        .collect()
}

/// Discrete `‖∇u_i‖_{L^q}` over the species region.
pub fn gradient_norm(
    device: &Device,
    state: &State,
    species: usize,
    q: f64,
) -> Result<f64, DiagnosticsError> {
    if !(q >= 1.0) {
        return Err(DiagnosticsError::Invalid(alloc::format!(
            "q must be at least 1, got {q}"
        )));
    }
    let cells = &device.layout.region[species];
    let grads = cell_gradients(device, cells, &state.densities[species]);
    let mut acc = 0.0;
    for (g, &k) in grads.iter().zip(cells) {
        let m = sqrt(g[0] * g[0] + g[1] * g[1]);
        acc += device.mesh.volumes[k] * powf(m, q);
    }
    Ok(powf(acc, 1.0 / q))
}

/// Constant `c = (Σ‖u_i‖_{L¹} + ‖ψ‖²_{H¹}) / (1 + Ψ)` of the energy lower bound.
pub fn lower_bound_constant(device: &Device, state: &State, psi_energy: f64) -> f64 {
    let mesh = &device.mesh;
    let l1: f64 = (0..device.species.len())
        .map(|i| species_mass(device, state, i))
        .sum();
    let mut h1 = 0.0;
    for k in 0..mesh.n_cells() {
        h1 += mesh.volumes[k] * state.psi[k] * state.psi[k];
    }
    for e in &mesh.edges {
        let [k, l] = e.cells;
        h1 += e.transmissibility() * sq(state.psi[k] - state.psi[l]);
    }
    (l1 + h1) / (1.0 + psi_energy)
}

/// `max |φ_n − φ_p|` over the cells.
pub fn quasi_fermi_splitting(device: &Device, state: &State) -> Result<f64, AssemblyError> {
    let n = device
        .species_index(crate::device::SpeciesRole::Electron)
        .expect("validated");
    let p = device
        .species_index(crate::device::SpeciesRole::Hole)
        .expect("validated");
    let phin = state.quasi_fermi(device, n)?;
    let phip = state.quasi_fermi(device, p)?;
    Ok(phin
        .iter()
        .zip(&phip)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed step increase of Ψ, relative to `max(1, |Ψ|)`.
    pub energy: f64,
    /// Relative drift of vacancy masses from the initial value.
    pub vacancy_mass: f64,
    /// Per-step carrier balance defect.
    pub carrier_balance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy: 1e-10,
            vacancy_mass: 1e-12,
            carrier_balance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub energy_increase: bool,
    pub mass_drift: bool,
    pub bounds_breach: bool,
}

impl Flags {
    pub fn any(&self) -> bool {
        self.energy_increase || self.mass_drift || self.bounds_breach
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientNorm {
    pub species: usize,
    pub q: f64,
    pub value: f64,
}

/// Per-snapshot diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub t: f64,
    pub free_energy: f64,
    pub masses: Vec<f64>,
    pub bounds: Vec<SpeciesBounds>,
    pub max_splitting: f64,
    /// Residual norm of the accepted step (zero for the initial state).
    pub residual: f64,
    /// Per-species balance defect of the step ending here.
    pub balance_defect: Vec<f64>,
    pub lower_bound_constant: f64,
    pub flags: Flags,
    pub gradient_norms: Vec<GradientNorm>,
}

/// Diagnostics of every snapshot of `trajectory`. Energy monotonicity is only
/// enforced when the reference is an equilibrium and the device is dark.
pub fn analyze(
    device: &Device,
    trajectory: &Trajectory,
    reference: &EnergyReference,
    tol: &Tolerances,
    gradient_q: &[f64],
) -> Result<Vec<DiagnosticsReport>, DiagnosticsError> {
    let monotone = reference.equilibrium && device.generation.is_none();
    let initial_mass: Vec<f64> = (0..device.species.len())
        .map(|i| species_mass(device, &trajectory.states[0], i))
        .collect();
    let mut out: Vec<DiagnosticsReport> = Vec::with_capacity(trajectory.states.len());
    for (s, state) in trajectory.states.iter().enumerate() {
        let psi = free_energy(device, reference, state)?;
        let masses: Vec<f64> = (0..device.species.len())
            .map(|i| species_mass(device, state, i))
            .collect();
        let bounds = bounds_report(device, state);
        let step = s.checked_sub(1).map(|j| &trajectory.steps[j]);
        let balance_defect = step
            .map(|r| r.balance_defect.clone())
            .unwrap_or_else(|| vec![0.0; masses.len()]);
        let mut flags = Flags {
            bounds_breach: bounds.iter().any(|b| b.breach),
            ..Flags::default()
        };
        if let Some(prev) = out.last() {
            flags.energy_increase =
                monotone && psi - prev.free_energy > tol.energy * prev.free_energy.abs().max(1.0);
        }
        for (i, sp) in device.species.iter().enumerate() {
            let drift = if sp.is_carrier() {
                balance_defect[i].abs() > tol.carrier_balance
            } else {
                (masses[i] - initial_mass[i]).abs() > tol.vacancy_mass * initial_mass[i].abs()
            };
            flags.mass_drift |= drift;
        }
        let mut gradient_norms = Vec::new();
        for &q in gradient_q {
            for i in 0..device.species.len() {
                gradient_norms.push(GradientNorm {
                    species: i,
                    q,
                    value: gradient_norm(device, state, i, q)?,
                });
            }
        }
        out.push(DiagnosticsReport {
            t: state.t,
            free_energy: psi,
            masses,
            bounds,
            max_splitting: quasi_fermi_splitting(device, state)?,
            residual: step.map_or(0.0, |r| r.residual),
            balance_defect,
            lower_bound_constant: lower_bound_constant(device, state, psi),
            flags,
            gradient_norms,
        });
    }
    Ok(out)
}

/// Outcome of the free-energy check over a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecay {
    /// Monotonicity was required (equilibrium reference, dark device).
    pub monotone_required: bool,
    pub passed: bool,
    /// Largest `Ψ_{k+1} − Ψ_k`, with `max(1, |Ψ_k|)` scaling applied.
    pub worst_increase: f64,
    /// Least-squares slope of `ln(Ψ + 1)` against `t`.
    pub fitted_rate: f64,
    /// Smallest `c` with `Ψ(t) + 1 ≤ (Ψ(0) + 1) e^{ct}` on the trajectory.
    pub envelope_rate: f64,
}

pub fn energy_decay_check(
    reports: &[DiagnosticsReport],
    monotone_required: bool,
    tol: f64,
) -> EnergyDecay {
    let worst_increase = reports
        .windows(2)
        .map(|w| (w[1].free_energy - w[0].free_energy) / w[0].free_energy.abs().max(1.0))
        .fold(0.0, f64::max);
    let passed = !monotone_required || worst_increase <= tol;
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.t, ln(r.free_energy.max(0.0) + 1.0)))
        .collect();
    let n = pts.len() as f64;
    let (mt, my) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mt) * (p.1 - my), a.1 + sq(p.0 - mt))
    });
    let fitted_rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let envelope_rate = match pts.first() {
        Some(&(t0, y0)) => pts
            .iter()
            .filter(|p| p.0 > t0)
            .map(|p| (p.1 - y0) / (p.0 - t0))
            .fold(0.0, f64::max),
        None => 0.0,
    };
    EnergyDecay {
        monotone_required,
        passed,
        worst_increase,
        fitted_rate,
        envelope_rate,
    }
}

/// One level of a convergence study. `error` is the distance to the next
/// finer level (or to the exact solution when one is known).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyLevel {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub error: f64,
    /// Observed order against the previous level; `None` if undefined.
    pub order: Option<f64>,
}

fn observed_orders(levels: &mut [StudyLevel], ratio_of: impl Fn(&StudyLevel) -> f64) {
    for j in 1..levels.len() {
        let (a, b) = (levels[j - 1].error, levels[j].error);
        let r = ratio_of(&levels[j - 1]) / ratio_of(&levels[j]);
        levels[j].order = (a > 0.0 && b > 0.0 && r > 1.0).then(|| ln(a / b) / ln(r));
    }
}

/// 1D Poisson problem `−ψ'' = 1` on `(0, 1)` with `ψ(0) = ψ(1) = 0`, solved
/// on `cells[j]` cells; errors are maximum nodal errors against `x(1−x)/2`.
pub fn poisson_manufactured_study(cells: &[usize]) -> Result<Vec<StudyLevel>, DiagnosticsError> {
    if cells.len() < 3 {
        return Err(DiagnosticsError::TooFewLevels {
            needed: 3,
            got: cells.len(),
        });
    }
    let mut levels = Vec::new();
    for (level, &n) in cells.iter().enumerate() {
        let device = crate::device::build_device(&manufactured_config(n))
            .map_err(|e| DiagnosticsError::Invalid(alloc::format!("{e}")))?;
        let charge = vec![1.0; n];
        let (a, b) = assembly::poisson_system(&device, &charge, 0.0);
        let psi = crate::linalg::solve(&a, &b).map_err(|e| DiagnosticsError::Level {
            level,
            source: e.into(),
        })?;
        let error = device
            .mesh
            .centers
            .iter()
            .zip(&psi)
            .map(|(c, p)| (p - 0.5 * c[0] * (1.0 - c[0])).abs())
            .fold(0.0, f64::max);
        levels.push(StudyLevel {
            level,
            h: 1.0 / n as f64,
            dt: 0.0,
            error,
            order: None,
        });
    }
    observed_orders(&mut levels, |l| l.h);
    Ok(levels)
}

fn manufactured_config(cells: usize) -> DeviceConfig {
    use crate::device::{AxisConfig, GeometryConfig, MaterialConfig, SpeciesConfig, SpeciesRole};
    let carrier = |id: &str, role| SpeciesConfig {
        id: id.into(),
        role,
        charge: None,
        mobility: 1.0,
        statistics: StatisticsKind::Boltzmann,
        zeta: 0.0,
        n_states: 1.0,
        initial: Some(0.5),
    };
    let contact = |name: &str, side| ContactConfig {
        name: name.into(),
        side,
        span: None,
        psi: ContactPsi::Value(0.0),
        phi: 0.0,
        biased: false,
    };
    DeviceConfig {
        geometry: GeometryConfig {
            x: AxisConfig { length: 1.0, cells },
            y: None,
        },
        materials: vec![MaterialConfig {
            name: "bulk".into(),
            x: [0.0, 1.0],
            y: None,
            permittivity: 1.0,
            doping: 1.0,
            perovskite: false,
            mobility: Default::default(),
        }],
        species: vec![
            carrier("n", SpeciesRole::Electron),
            carrier("p", SpeciesRole::Hole),
        ],
        contacts: vec![contact("left", Side::Left), contact("right", Side::Right)],
        generation: None,
        recombination: Default::default(),
        initial: Default::default(),
        bias: 0.0,
        bias_ramp: 0.0,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Backward-Euler time refinement: fixed steps `dts[j]` up to `t_end`;
/// errors are Richardson differences `‖x_j(T) − x_{j+1}(T)‖_∞`.
pub fn temporal_study(
    device: &Device,
    initial: &State,
    t_end: f64,
    dts: &[f64],
    config: &SolverConfig,
) -> Result<Vec<StudyLevel>, DiagnosticsError> {
    if dts.len() < 3 {
        return Err(DiagnosticsError::TooFewLevels {
            needed: 3,
            got: dts.len(),
        });
    }
    let mut finals = Vec::new();
    for (level, &dt) in dts.iter().enumerate() {
        let steps = libm::round((t_end - initial.t) / dt) as usize;
        if steps == 0 {
            return Err(DiagnosticsError::Invalid(alloc::format!(
                "dt {dt} exceeds the horizon"
            )));
        }
        let times: Vec<f64> = (0..=steps)
            .map(|s| initial.t + (t_end - initial.t) * s as f64 / steps as f64)
            .collect();
        let (traj, _) =
            solver::run_on_grid(device, initial, &times, config, &PathVariant::baseline())
                .map_err(|f| DiagnosticsError::Level {
                    level,
                    source: f.error,
                })?;
        finals.push(traj.states.last().unwrap().to_vector(&device.layout));
    }
    let mut levels: Vec<StudyLevel> = (0..dts.len() - 1)
        .map(|j| StudyLevel {
            level: j,
            h: 0.0,
            dt: dts[j],
            error: max_abs_diff(&finals[j], &finals[j + 1]),
            order: None,
        })
        .collect();
    observed_orders(&mut levels, |l| l.dt);
    Ok(levels)
}

/// Averages a fine cell field onto the coarse mesh.
pub fn restrict_to(
    coarse: &Device,
    fine: &Device,
    field: &[f64],
    cells_fine: &[usize],
    cells_coarse: &[usize],
) -> Vec<f64> {
    let parent = parent_cells(&coarse.mesh, &fine.mesh);
    let mut sum = vec![0.0; coarse.n_cells()];
    let mut vol = vec![0.0; coarse.n_cells()];
    for (v, &k) in field.iter().zip(cells_fine) {
        let p = parent[k];
        sum[p] += fine.mesh.volumes[k] * v;
        vol[p] += fine.mesh.volumes[k];
    }
    cells_coarse
        .iter()
        .map(|&k| if vol[k] > 0.0 { sum[k] / vol[k] } else { 0.0 })
        .collect()
}

/// Mesh refinement of a stationary solve: level `j` refines the base device
/// `2^j` times per axis; errors are L∞ distances of successive levels after
/// averaging onto the coarser mesh.
pub fn spatial_study<S>(
    device: &Device,
    levels: usize,
    mut solve: S,
) -> Result<Vec<StudyLevel>, DiagnosticsError>
where
    S: FnMut(&Device) -> Result<State, SolverError>,
{
    if levels < 3 {
        return Err(DiagnosticsError::TooFewLevels {
            needed: 3,
            got: levels,
        });
    }
    let mut devices = vec![device.clone()];
    for _ in 1..levels {
        let next = devices
            .last()
            .unwrap()
            .refine(2)
            .map_err(|e| DiagnosticsError::Invalid(alloc::format!("{e}")))?;
        devices.push(next);
    }
    let mut states = Vec::new();
    for (level, d) in devices.iter().enumerate() {
        states.push(solve(d).map_err(|source| DiagnosticsError::Level { level, source })?);
    }
    let h = |d: &Device| d.mesh.x_faces[1] - d.mesh.x_faces[0];
    let mut out = Vec::new();
    for j in 0..levels - 1 {
        let (c, f) = (&devices[j], &devices[j + 1]);
        let all_c: Vec<usize> = (0..c.n_cells()).collect();
        let all_f: Vec<usize> = (0..f.n_cells()).collect();
        let mut err = max_abs_diff(
            &states[j].psi,
            &restrict_to(c, f, &states[j + 1].psi, &all_f, &all_c),
        );
        for i in 0..c.species.len() {
            let r = restrict_to(
                c,
                f,
                &states[j + 1].densities[i],
                &f.layout.region[i],
                &c.layout.region[i],
            );
            err = err.max(max_abs_diff(&states[j].densities[i], &r));
        }
        out.push(StudyLevel {
            level: j,
            h: h(c),
            dt: 0.0,
            error: err,
            order: None,
        });
    }
    observed_orders(&mut out, |l| l.h);
    Ok(out)
}

/// Gradient-integrability probe over a refinement sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub cells: Vec<usize>,
    /// `norms[level]` lists every `(species, q)` combination.
    pub norms: Vec<Vec<GradientNorm>>,
    /// Largest ratio between the norms of successive levels.
    pub max_ratio: f64,
    /// Successive relative changes decrease for every `(species, q)`.
    pub changes_decreasing: bool,
    pub passed: bool,
}

/// Solves the stationary problem on `device` refined `refinements` times
/// (factor 2 each) and compares `‖∇u_i‖_{L^q}` across levels. Passes when no
/// norm grows by more than a factor of 2 between levels.
pub fn regularity_probe<S>(
    device: &Device,
    refinements: usize,
    qs: &[f64],
    mut solve: S,
) -> Result<RegularityReport, DiagnosticsError>
where
    S: FnMut(&Device) -> Result<State, SolverError>,
{
    let mut d = device.clone();
    let mut cells = Vec::new();
    let mut norms = Vec::new();
    for level in 0..=refinements {
        if level > 0 {
            d = d
                .refine(2)
                .map_err(|e| DiagnosticsError::Invalid(alloc::format!("{e}")))?;
        }
        let state = solve(&d).map_err(|source| DiagnosticsError::Level { level, source })?;
        let mut row = Vec::new();
        for i in 0..d.species.len() {
            for &q in qs {
                row.push(GradientNorm {
                    species: i,
                    q,
                    value: gradient_norm(&d, &state, i, q)?,
                });
            }
        }
        cells.push(d.n_cells());
        norms.push(row);
    }
    let mut max_ratio = 0.0f64;
    let mut changes_decreasing = true;
    for c in 0..norms[0].len() {
        let series: Vec<f64> = norms.iter().map(|r| r[c].value).collect();
        for w in series.windows(2) {
            let ratio = if w[0] > 0.0 {
                w[1] / w[0]
            } else if w[1] > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            max_ratio = max_ratio.max(ratio);
        }
        let changes: Vec<f64> = series
            .windows(2)
            .map(|w| ((w[1] - w[0]) / w[0]).abs())
            .collect();
        changes_decreasing &= changes.windows(2).all(|w| w[1] <= w[0]);
    }
    Ok(RegularityReport {
        cells,
        norms,
        max_ratio,
        changes_decreasing,
        passed: max_ratio <= 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::build_device;
    use crate::testing::pin_config;

    #[test]
    fn blakemore_half_filling_has_zero_chemical_energy() {
        let st =
            ShiftedStatistics::new(StatisticsKind::Blakemore { gamma: 1.0 }, 0.0, 1.0).unwrap();
        let v = st.chemical_potential(0.5).unwrap();
        assert!(v.abs() < 1e-15);
        // Closed form u ln u + (1 − u) ln(1 − u) + ln 2 at u = 1/2.
        let closed = 0.5 * ln(0.5) + 0.5 * ln(0.5) + ln(2.0);
        assert!(chemical_energy_density(&st, 0.5, v, 0.0).unwrap().abs() < 1e-15);
        assert!(closed.abs() < 1e-15);
    }

    #[test]
    fn blakemore_closed_form_matches_quadrature() {
        let st =
            ShiftedStatistics::new(StatisticsKind::Blakemore { gamma: 1.0 }, -0.7, 2.0).unwrap();
        for &(u, v_ref) in &[(0.3, 0.1), (1.9, -2.0), (0.01, 1.0)] {
            let v = st.chemical_potential(u).unwrap();
            let quad = integrate(
                &|y: f64| u - st.carrier_density(y).unwrap(),
                v_ref,
                v,
                1e-14,
                0.0,
            );
            let closed = chemical_energy_density(&st, u, v, v_ref).unwrap();
            assert!(
                (closed - quad).abs() <= 1e-12 * quad.abs().max(1e-3),
                "{closed} vs {quad}"
            );
            assert!(closed >= 0.0);
        }
    }

    #[test]
    fn fermi_dirac_energy_density_is_positive_and_smooth() {
        let st = ShiftedStatistics::new(StatisticsKind::FermiDiracHalf, -4.0, 1.0).unwrap();
        let v_ref = 1.0;
        let u_ref = st.carrier_density(v_ref).unwrap();
        assert_eq!(
            chemical_energy_density(&st, u_ref, v_ref, v_ref).unwrap(),
            0.0
        );
        for &u in &[1e-6, 1e-3, 0.5, 3.0] {
            let v = st.chemical_potential(u).unwrap();
            let phi = chemical_energy_density(&st, u, v, v_ref).unwrap();
            assert!(phi > 0.0);
        }
        // Second-order behaviour near the reference: Φ ≈ (u − u_ref)² / (2 N e').
        let du = 1e-4 * u_ref;
        let u = u_ref + du;
        let v = st.chemical_potential(u).unwrap();
        let h = 1e-6;
        let de = (st.carrier_density(v_ref + h).unwrap() - st.carrier_density(v_ref - h).unwrap())
            / (2.0 * h);
        let approx = du * du / (2.0 * de);
        let phi = chemical_energy_density(&st, u, v, v_ref).unwrap();
        assert!((phi - approx).abs() < 1e-3 * approx, "{phi} vs {approx}");
    }

    #[test]
    fn mass_of_uniform_state() {
        let d = build_device(&pin_config(20)).unwrap();
        let mut s = solver::initial_state(&d).unwrap();
        for u in s.densities[2].iter_mut() {
            *u = 2.0 * 0.25;
        }
        // Perovskite layer has volume 0.4.
        assert!((species_mass(&d, &s, 2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn saturated_vacancy_is_a_breach() {
        let d = build_device(&pin_config(20)).unwrap();
        let mut s = solver::initial_state(&d).unwrap();
        assert!(bounds_report(&d, &s).iter().all(|b| !b.breach));
        s.densities[2][3] = 1.0;
        assert!(bounds_report(&d, &s)[2].breach);
    }

    #[test]
    fn gradient_norm_of_linear_and_constant_fields() {
        let d = build_device(&pin_config(20)).unwrap();
        let mut s = solver::initial_state(&d).unwrap();
        for (r, &k) in d.layout.region[0].iter().enumerate() {
            s.densities[0][r] = 1.0 + 0.7 * d.mesh.centers[k][0];
        }
        for u in s.densities[1].iter_mut() {
            *u = 0.3;
        }
        for &q in &[1.0, 2.25, 2.5, 3.0] {
            assert!((gradient_norm(&d, &s, 0, q).unwrap() - 0.7).abs() < 1e-13);
            assert_eq!(gradient_norm(&d, &s, 1, q).unwrap(), 0.0);
        }
    }

    #[test]
    fn equilibrium_has_zero_energy() {
        let d = build_device(&pin_config(40)).unwrap();
        let init = solver::initial_state(&d).unwrap();
        let cfg = SolverConfig::default();
        let eq = solver::equilibrium_state(&d, &init, &cfg).unwrap();
        let reference = EnergyReference::from_equilibrium(&d, &eq).unwrap();
        assert!(free_energy(&d, &reference, &eq).unwrap().abs() < 1e-12);
        assert!(free_energy(&d, &reference, &init).unwrap() > 0.0);
    }

    #[test]
    fn constant_trajectory_passes_decay_check() {
        let r = |t: f64| DiagnosticsReport {
            t,
            free_energy: 0.25,
            masses: vec![],
            bounds: vec![],
            max_splitting: 0.0,
            residual: 0.0,
            balance_defect: vec![],
            lower_bound_constant: 0.0,
            flags: Flags::default(),
            gradient_norms: vec![],
        };
        let check = energy_decay_check(&[r(0.0), r(1.0), r(2.0)], true, 1e-10);
        assert!(check.passed);
        assert_eq!(check.worst_increase, 0.0);
    }

    #[test]
    fn identical_levels_have_undefined_order() {
        let mut levels = vec![
            StudyLevel {
                level: 0,
                h: 0.1,
                dt: 0.0,
                error: 0.0,
                order: None,
            },
            StudyLevel {
                level: 1,
                h: 0.05,
                dt: 0.0,
                error: 0.0,
                order: None,
            },
        ];
        observed_orders(&mut levels, |l| l.h);
        assert_eq!(levels[1].order, None);
    }
}

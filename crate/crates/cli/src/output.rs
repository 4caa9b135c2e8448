//! CSV tables, profiles and the verdict file.

use std::fmt::Write as _;

use perovsim_core::assembly::{reaction_q, State};
use perovsim_core::device::Device;
use perovsim_core::diagnostics::{DiagnosticsReport, StudyLevel};
use perovsim_core::solver::Trajectory;
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OutputError {
    #[error("unknown profile field {0:?}")]
    UnknownField(String),
}

/// Header line shared by every CSV file.
pub fn banner(kind: &str, scenario: &str, seed: u64) -> String {
    format!(
        "# perovsim {} {kind} scenario={scenario} seed={seed}\n",
        env!("CARGO_PKG_VERSION")
    )
}

/// Appends the per-step diagnostics of one run.
pub fn diagnostics_rows(
    out: &mut String,
    device: &Device,
    run: &str,
    traj: &Trajectory,
    reports: &[DiagnosticsReport],
) {
    for (s, r) in reports.iter().enumerate() {
        let (dt, iters) = s.checked_sub(1).map_or((0.0, 0), |j| {
            (traj.steps[j].dt, traj.steps[j].newton.iterations)
        });
        let _ = write!(
            out,
            "{run},{:.16e},{dt:.16e},{iters},{:.6e},{:.16e},{:.16e},{:.6e}",
            r.t, r.residual, r.free_energy, r.max_splitting, r.lower_bound_constant
        );
        for i in 0..device.species.len() {
            let b = &r.bounds[i];
            let _ = write!(
                out,
                ",{:.16e},{:.16e},{:.16e},{:.16e},{:.6e}",
                r.masses[i], b.min, b.max, b.margin, r.balance_defect[i]
            );
        }
        let f = r.flags;
        let _ = writeln!(
            out,
            ",{},{},{}",
            u8::from(f.energy_increase),
            u8::from(f.mass_drift),
            u8::from(f.bounds_breach)
        );
    }
}

pub fn diagnostics_header(device: &Device) -> String {
    let mut h = String::from(
        "run,t,dt,newton_iterations,residual,free_energy,max_splitting,lower_bound_constant",
    );
    for sp in &device.species {
        let id = &sp.id;
        let _ = write!(h, ",mass_{id},min_{id},max_{id},margin_{id},defect_{id}");
    }
    h.push_str(",energy_increase,mass_drift,bounds_breach\n");
    h
}

pub const PROFILE_FIELDS: [&str; 4] = ["psi", "phi", "u", "rates"];

/// Cell profile at one snapshot. `fields` selects among [`PROFILE_FIELDS`];
/// all of them when empty.
pub fn profile_csv(
    device: &Device,
    state: &State,
    fields: &[String],
    banner: &str,
) -> Result<String, OutputError> {
    for f in fields {
        if !PROFILE_FIELDS.contains(&f.as_str()) {
            return Err(OutputError::UnknownField(f.clone()));
        }
    }
    let want = |f: &str| fields.is_empty() || fields.iter().any(|g| g == f);
    let two_d = device.mesh.dimension == 2;
    let carriers: Vec<usize> = (0..device.species.len())
        .filter(|&i| device.species[i].is_carrier())
        .collect();
    let phis: Vec<Vec<f64>> = carriers
        .iter()
        .map(|&i| state.quasi_fermi(device, i).unwrap_or_default())
        .collect();
    let generation = device.generation_profile();
    let n = device
        .species_index(perovsim_core::device::SpeciesRole::Electron)
        .expect("validated");
    let p = device
        .species_index(perovsim_core::device::SpeciesRole::Hole)
        .expect("validated");

    let mut out = String::from(banner);
    let _ = writeln!(
        out,
        "# t={:.16e} cells ordered row-major: k = i + nx*j with x fastest (nx={})",
        state.t,
        device.mesh.nx()
    );
    let mut cols = vec!["x".to_string()];
    if two_d {
        cols.push("y".into());
    }
    if want("psi") {
        cols.push("psi".into());
    }
    if want("phi") {
        cols.extend(
            carriers
                .iter()
                .map(|&i| format!("phi_{}", device.species[i].id)),
        );
    }
    if want("u") {
        cols.extend(device.species.iter().map(|s| format!("u_{}", s.id)));
    }
    if want("rates") {
        cols.extend(["G".to_string(), "R".to_string()]);
    }
    let _ = writeln!(out, "{}", cols.join(","));
    let mut pos = vec![vec![usize::MAX; device.n_cells()]; device.species.len()];
    for (i, cells) in device.layout.region.iter().enumerate() {
        for (r, &k) in cells.iter().enumerate() {
            pos[i][k] = r;
        }
    }
    for k in 0..device.n_cells() {
        let c = device.mesh.centers[k];
        let mut row = vec![format!("{:.16e}", c[0])];
        if two_d {
            row.push(format!("{:.16e}", c[1]));
        }
        if want("psi") {
            row.push(format!("{:.16e}", state.psi[k]));
        }
        if want("phi") {
            for (j, &i) in carriers.iter().enumerate() {
                row.push(
                    phis[j]
                        .get(pos[i][k])
                        .map_or(String::new(), |v| format!("{v:.16e}")),
                );
            }
        }
        if want("u") {
            for i in 0..device.species.len() {
                let r = pos[i][k];
                row.push(if r == usize::MAX {
                    String::new()
                } else {
                    format!("{:.16e}", state.densities[i][r])
                });
            }
        }
        if want("rates") {
            let (un, up) = (state.densities[n][pos[n][k]], state.densities[p][pos[p][k]]);
            let r = reaction_q(device, un, up, 0.0).map_or(String::new(), |v| format!("{v:.16e}"));
            row.push(format!("{:.16e}", generation[k]));
            row.push(r);
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

pub fn study_csv(banner: &str, rows: &[(&str, &[StudyLevel])]) -> String {
    let mut out = String::from(banner);
    out.push_str("study,level,h,dt,error,order\n");
    for (name, levels) in rows {
        for l in levels.iter() {
            let order = l
                .order
                .map_or("undefined".to_string(), |o| format!("{o:.6}"));
            let _ = writeln!(
                out,
                "{name},{},{:.6e},{:.6e},{:.6e},{order}",
                l.level, l.h, l.dt, l.error
            );
        }
    }
    out
}

/// One invariant in the verdict file.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    /// Witnessed value (worst case over all runs).
    pub value: f64,
    /// Threshold the value was compared against, if any.
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Verdict {
    pub scenario: String,
    pub kind: String,
    pub seed: u64,
    pub passed: bool,
    pub aborted: Option<String>,
    pub invariants: Vec<Invariant>,
}

impl Verdict {
    pub fn new(scenario: &str, kind: &str, seed: u64) -> Self {
        Self {
            scenario: scenario.into(),
            kind: kind.into(),
            seed,
            passed: true,
            aborted: None,
            invariants: Vec::new(),
        }
    }

    /// Records an invariant; each name may appear only once.
    pub fn check(
        &mut self,
        name: &str,
        passed: bool,
        value: f64,
        tolerance: Option<f64>,
        detail: impl Into<String>,
    ) {
        assert!(
            self.invariants.iter().all(|i| i.name != name),
            "invariant {name} recorded twice"
        );
        self.passed &= passed;
        self.invariants.push(Invariant {
            name: name.into(),
            passed,
            value,
            tolerance,
            detail: detail.into(),
        });
    }

    pub fn get(&self, name: &str) -> Option<&Invariant> {
        self.invariants.iter().find(|i| i.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

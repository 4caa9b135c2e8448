//! Discrete residual and Jacobian of the coupled Poisson / continuity system.
//!
//! Residual rows, per cell `K`:
//!
//! * Poisson: `Σ ε_σ T_σ (ψ_K − ψ_L) − |K| (C + Σ z_i u_i)`
//! * continuity: `|K| (u_K − u_K^old)/Δt + Σ F_KL + |K| (R − G)` (reaction terms
//!   for electrons and holes only)
//!
//! Two-point fluxes use the excess-chemical-potential form of the
//! Scharfetter–Gummel flux: with `u = N exp(v + ζ + η)`, the degeneracy
//! exponent `η` is folded into the drift potential, so the flux vanishes exactly
//! whenever the quasi Fermi potential is constant across the edge.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::device::{Device, Layout, Species};
use crate::linalg::CsrMatrix;
use crate::math::{exp, exp_m1};
use crate::statistics::{LocalStatistics, StatisticsError, StatisticsKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssemblyError {
    #[error("species {species} in cell {cell}: {source}")]
    Statistics {
        species: usize,
        cell: usize,
        source: StatisticsError,
    },
    #[error("classical Scharfetter–Gummel flux requires Boltzmann statistics (species {0})")]
    SchemeRequiresBoltzmann(usize),
    #[error("state has {got} unknowns, device expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    /// Bernoulli flux on the electrostatic potential alone (Boltzmann only).
    ClassicalSg,
    #[default]
    ExcessChemicalPotential,
}

/// Time-derivative treatment.
#[derive(Debug, Clone, Copy)]
pub enum TimeTerm<'a> {
    /// Backward Euler from the flat state `old`.
    Transient { old: &'a [f64], dt: f64 },
    /// No time derivative. Vacancy masses are fixed to `vacancy_mass[i]`.
    Stationary { vacancy_mass: &'a [f64] },
}

/// Snapshot of the discrete fields. Densities are stored per species over the
/// cells of its region, in increasing cell order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub psi: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
}

impl State {
    pub fn from_vector(layout: &Layout, t: f64, x: &[f64]) -> State {
        let psi = layout.psi.iter().map(|&i| x[i]).collect();
        let densities = layout
            .region
            .iter()
            .enumerate()
            .map(|(s, cells)| cells.iter().map(|&k| x[layout.density[s][k]]).collect())
            .collect();
        State { t, psi, densities }
    }

    pub fn to_vector(&self, layout: &Layout) -> Vec<f64> {
        let mut x = vec![0.0; layout.n_unknowns];
        for (k, &i) in layout.psi.iter().enumerate() {
            x[i] = self.psi[k];
        }
        for (s, cells) in layout.region.iter().enumerate() {
            for (r, &k) in cells.iter().enumerate() {
                x[layout.density[s][k]] = self.densities[s][r];
            }
        }
        x
    }

    /// Chemical potentials `v_i` over the species region.
    pub fn chemical_potential(
        &self,
        device: &Device,
        species: usize,
    ) -> Result<Vec<f64>, AssemblyError> {
        let st = &device.species[species].statistics;
        let cells = &device.layout.region[species];
        self.densities[species]
            .iter()
            .zip(cells)
            .map(|(&u, &cell)| {
                st.chemical_potential(u)
                    .map_err(|source| AssemblyError::Statistics {
                        species,
                        cell,
                        source,
                    })
            })
            .collect()
    }

    /// Quasi Fermi potentials `φ_i = ψ + v_i / z_i` over the species region.
    pub fn quasi_fermi(&self, device: &Device, species: usize) -> Result<Vec<f64>, AssemblyError> {
        let z = device.species[species].z();
        let v = self.chemical_potential(device, species)?;
        Ok(device.layout.region[species]
            .iter()
            .zip(v)
            .map(|(&k, v)| self.psi[k] + v / z)
            .collect())
    }
}

/// Bernoulli function `B(x) = x / (e^x − 1)`.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 - 0.5 * x + x2 / 12.0 * (1.0 - x2 / 60.0 * (1.0 - x2 / 42.0))
    } else {
        x / exp_m1(x)
    }
}

/// `B'(x)`.
pub fn bernoulli_deriv(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        -0.5 + x / 6.0 * (1.0 - x2 / 30.0 * (1.0 - x2 / 28.0))
    } else {
        let b = bernoulli(x);
        b * (1.0 - bernoulli(-x)) / x
    }
}

/// Edge flux from `K` to `L` and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxEval {
    pub flux: f64,
    pub d_uk: f64,
    pub d_ul: f64,
    pub d_psik: f64,
    pub d_psil: f64,
}

/// One endpoint of a two-point flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxNode {
    pub psi: f64,
    pub u: f64,
    /// Degeneracy exponent `η = ln(u/N) − (v + ζ)`.
    pub eta: f64,
    pub deta_du: f64,
}

impl FluxNode {
    pub fn new(psi: f64, u: f64, local: &LocalStatistics) -> Self {
        Self {
            psi,
            u,
            eta: local.log_degeneracy,
            deta_du: local.log_degeneracy_du,
        }
    }
}

/// `F = μT [B(x) u_K − B(−x) u_L]` with `x = z(ψ_L − ψ_K) − (η_L − η_K)`.
pub fn two_point_flux(mu_t: f64, z: f64, k: &FluxNode, l: &FluxNode) -> FluxEval {
    let x = z * (l.psi - k.psi) - (l.eta - k.eta);
    let (b_pos, b_neg) = (bernoulli(x), bernoulli(-x));
    let d = bernoulli_deriv(x) * k.u + bernoulli_deriv(-x) * l.u;
    FluxEval {
        flux: mu_t * (b_pos * k.u - b_neg * l.u),
        d_uk: mu_t * (b_pos + d * k.deta_du),
        d_ul: mu_t * (-b_neg - d * l.deta_du),
        d_psik: -mu_t * d * z,
        d_psil: mu_t * d * z,
    }
}

/// Harmonic edge average of a cell coefficient times the transmissibility:
/// `area / (h_K / a_K + h_L / a_L)`.
pub fn edge_coefficient(area: f64, half: [f64; 2], a: [f64; 2]) -> f64 {
    if a[0] <= 0.0 || a[1] <= 0.0 {
        return 0.0;
    }
    area / (half[0] / a[0] + half[1] / a[1])
}

/// Flux of `species` across mesh edge `edge` of the device in `state`.
pub fn edge_flux(
    device: &Device,
    species: usize,
    edge: usize,
    state: &State,
    scheme: FluxScheme,
) -> Result<f64, AssemblyError> {
    let sp = &device.species[species];
    if scheme == FluxScheme::ClassicalSg && sp.statistics.kind != StatisticsKind::Boltzmann {
        return Err(AssemblyError::SchemeRequiresBoltzmann(species));
    }
    let e = &device.mesh.edges[edge];
    let region = &device.layout.region[species];
    let mut nodes = [FluxNode {
        psi: 0.0,
        u: 0.0,
        eta: 0.0,
        deta_du: 0.0,
    }; 2];
    for (node, &cell) in nodes.iter_mut().zip(&e.cells) {
        let Ok(r) = region.binary_search(&cell) else {
            return Ok(0.0);
        };
        let u = state.densities[species][r];
        let local = sp
            .statistics
            .local(u)
            .map_err(|source| AssemblyError::Statistics {
                species,
                cell,
                source,
            })?;
        *node = FluxNode::new(state.psi[cell], u, &local);
    }
    let mu_t = edge_coefficient(
        e.area,
        e.half,
        [sp.mobility[e.cells[0]], sp.mobility[e.cells[1]]],
    );
    Ok(two_point_flux(mu_t, sp.z(), &nodes[0], &nodes[1]).flux)
}

/// Net reaction `R − G` at a point, with
/// `R = r₀ (u_n u_p − N_n N_p exp(ζ_n + ζ_p + η_n + η_p))`, the overflow-free
/// form of `r₀ u_n u_p (1 − exp(−v_n − v_p))`.
pub fn reaction_q(
    device: &Device,
    un: f64,
    up: f64,
    generation: f64,
) -> Result<f64, AssemblyError> {
    let (n, p) = carrier_indices(device);
    let ln =
        device.species[n]
            .statistics
            .local(un)
            .map_err(|source| AssemblyError::Statistics {
                species: n,
                cell: 0,
                source,
            })?;
    let lp =
        device.species[p]
            .statistics
            .local(up)
            .map_err(|source| AssemblyError::Statistics {
                species: p,
                cell: 0,
                source,
            })?;
    Ok(reaction(device, un, up, &ln, &lp).0 - generation)
}

fn carrier_indices(device: &Device) -> (usize, usize) {
    use crate::device::SpeciesRole;
    (
        device.species_index(SpeciesRole::Electron).unwrap(),
        device.species_index(SpeciesRole::Hole).unwrap(),
    )
}

/// `(R, ∂R/∂u_n, ∂R/∂u_p)`.
fn reaction(
    device: &Device,
    un: f64,
    up: f64,
    ln: &LocalStatistics,
    lp: &LocalStatistics,
) -> (f64, f64, f64) {
    let (n, p) = carrier_indices(device);
    let (sn, sp) = (&device.species[n].statistics, &device.species[p].statistics);
    let e =
        sn.n_states * sp.n_states * exp(sn.zeta + sp.zeta + ln.log_degeneracy + lp.log_degeneracy);
    let mass_action = un * up - e;
    let (r0, dr0_dn, dr0_dp) = device.recombination.prefactor(un, up);
    (
        r0 * mass_action,
        r0 * (up - e * ln.log_degeneracy_du) + dr0_dn * mass_action,
        r0 * (un - e * lp.log_degeneracy_du) + dr0_dp * mass_action,
    )
}

/// Residual vector and (optionally) its Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub values: Vec<f64>,
    pub jacobian: Option<CsrMatrix>,
    /// Rows coupling a whole species region (global mass balances).
    pub dense_rows: Vec<usize>,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.values.iter().map(|v| v * v).sum::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub scheme: FluxScheme,
    /// Replace one continuity row per vacancy species by its global mass balance.
    pub vacancy_mass_rows: bool,
    pub jacobian: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            scheme: FluxScheme::ExcessChemicalPotential,
            vacancy_mass_rows: true,
            jacobian: true,
        }
    }
}

struct Sink {
    values: Vec<f64>,
    triplets: Option<Vec<(usize, usize, f64)>>,
    replaced: Vec<bool>,
}

impl Sink {
    #[inline]
    fn res(&mut self, row: usize, v: f64) {
        if !self.replaced[row] {
            self.values[row] += v;
        }
    }

    #[inline]
    fn jac(&mut self, row: usize, col: usize, v: f64) {
        if self.replaced[row] {
            return;
        }
        if let Some(t) = self.triplets.as_mut() {
            t.push((row, col, v));
        }
    }
}

/// Per-cell statistics of every species, from one inversion per density.
fn local_statistics(
    device: &Device,
    x: &[f64],
) -> Result<Vec<Vec<Option<LocalStatistics>>>, AssemblyError> {
    let layout = &device.layout;
    device
        .species
        .iter()
        .enumerate()
        .map(|(i, sp)| {
            (0..device.n_cells())
                .map(|k| {
                    if !layout.has(i, k) {
                        return Ok(None);
                    }
                    let u = x[layout.density[i][k]];
                    sp.statistics
                        .local(u)
                        .map(Some)
                        .map_err(|source| AssemblyError::Statistics {
                            species: i,
                            cell: k,
                            source,
                        })
                })
                .collect()
        })
        .collect()
}

/// Dirichlet data of a carrier species on a contact face: `(ψ^D, flux node)`.
fn contact_node(
    sp: &Species,
    species: usize,
    cell: usize,
    psi_d: f64,
    phi_d: f64,
) -> Result<FluxNode, AssemblyError> {
    let st = &sp.statistics;
    let err = |source| AssemblyError::Statistics {
        species,
        cell,
        source,
    };
    let u = st.carrier_density(sp.z() * (phi_d - psi_d)).map_err(err)?;
    let local = st.local(u).map_err(err)?;
    Ok(FluxNode::new(psi_d, u, &local))
}

/// Assembles the full system at the flat state `x` and time `t`.
pub fn assemble_system(
    device: &Device,
    x: &[f64],
    t: f64,
    time: TimeTerm<'_>,
    opts: &AssemblyOptions,
) -> Result<Residual, AssemblyError> {
    let layout = &device.layout;
    let n = layout.n_unknowns;
    if x.len() != n {
        return Err(AssemblyError::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    if let TimeTerm::Transient { old, dt } = time {
        if !(dt > 0.0) {
            return Err(AssemblyError::NonPositiveStep(dt));
        }
        if old.len() != n {
            return Err(AssemblyError::Dimension {
                expected: n,
                got: old.len(),
            });
        }
    }
    if opts.scheme == FluxScheme::ClassicalSg {
        if let Some(i) = device
            .species
            .iter()
            .position(|s| s.statistics.kind != StatisticsKind::Boltzmann)
        {
            return Err(AssemblyError::SchemeRequiresBoltzmann(i));
        }
    }
    let local = local_statistics(device, x)?;
    let mut replaced = vec![false; n];
    let constrained: Vec<usize> = if opts.vacancy_mass_rows {
        device
            .vacancy_indices()
            .map(|i| layout.density[i][layout.region[i][0]])
            .collect()
    } else {
        Vec::new()
    };
    for &r in &constrained {
        replaced[r] = true;
    }
    let mut sink = Sink {
        values: vec![0.0; n],
        triplets: opts.jacobian.then(|| Vec::with_capacity(12 * n)),
        replaced,
    };
    let mesh = &device.mesh;
    let contacts = device.contact_values(t);
    let generation = device.generation_profile();

    // Interior edges.
    for e in &mesh.edges {
        let [k, l] = e.cells;
        let (pk, pl) = (layout.psi[k], layout.psi[l]);
        let eps_t = edge_coefficient(
            e.area,
            e.half,
            [device.permittivity[k], device.permittivity[l]],
        );
        let dpsi = x[pk] - x[pl];
        sink.res(pk, eps_t * dpsi);
        sink.res(pl, -eps_t * dpsi);
        sink.jac(pk, pk, eps_t);
        sink.jac(pk, pl, -eps_t);
        sink.jac(pl, pl, eps_t);
        sink.jac(pl, pk, -eps_t);
        for (i, sp) in device.species.iter().enumerate() {
            let (Some(lk), Some(ll)) = (&local[i][k], &local[i][l]) else {
                continue;
            };
            let mu_t = edge_coefficient(e.area, e.half, [sp.mobility[k], sp.mobility[l]]);
            if mu_t == 0.0 {
                continue;
            }
            let (ik, il) = (layout.density[i][k], layout.density[i][l]);
            let mut nk = FluxNode::new(x[pk], x[ik], lk);
            let mut nl = FluxNode::new(x[pl], x[il], ll);
            if opts.scheme == FluxScheme::ClassicalSg {
                nk.eta = 0.0;
                nk.deta_du = 0.0;
                nl.eta = 0.0;
                nl.deta_du = 0.0;
            }
            let f = two_point_flux(mu_t, sp.z(), &nk, &nl);
            sink.res(ik, f.flux);
            sink.res(il, -f.flux);
            for (row, sign) in [(ik, 1.0), (il, -1.0)] {
                sink.jac(row, ik, sign * f.d_uk);
                sink.jac(row, il, sign * f.d_ul);
                sink.jac(row, pk, sign * f.d_psik);
                sink.jac(row, pl, sign * f.d_psil);
            }
        }
    }

    // Dirichlet faces.
    for (f, face) in mesh.boundary_faces.iter().enumerate() {
        let Some(c) = device.face_contact[f] else {
            continue;
        };
        let k = face.cell;
        let pk = layout.psi[k];
        let tr = face.transmissibility();
        let eps_t = device.permittivity[k] * tr;
        let cv = contacts[c];
        sink.res(pk, eps_t * (x[pk] - cv.psi));
        sink.jac(pk, pk, eps_t);
        for (i, sp) in device.species.iter().enumerate() {
            if !sp.is_carrier() {
                continue;
            }
            let mu_t = sp.mobility[k] * tr;
            if mu_t == 0.0 {
                continue;
            }
            let ik = layout.density[i][k];
            let lk = local[i][k].as_ref().unwrap();
            let nk = FluxNode::new(x[pk], x[ik], lk);
            let mut nd = contact_node(sp, i, k, cv.psi, cv.phi)?;
            let mut nk = nk;
            if opts.scheme == FluxScheme::ClassicalSg {
                nk.eta = 0.0;
                nk.deta_du = 0.0;
                nd.eta = 0.0;
            }
            let fl = two_point_flux(mu_t, sp.z(), &nk, &nd);
            sink.res(ik, fl.flux);
            sink.jac(ik, ik, fl.d_uk);
            sink.jac(ik, pk, fl.d_psik);
        }
    }

    // Cell terms.
    let (ni, pi) = carrier_indices(device);
    for k in 0..mesh.n_cells() {
        let vol = mesh.volumes[k];
        let pk = layout.psi[k];
        let mut charge = device.doping[k];
        for (i, sp) in device.species.iter().enumerate() {
            if layout.has(i, k) {
                let ik = layout.density[i][k];
                charge += sp.z() * x[ik];
                sink.jac(pk, ik, -vol * sp.z());
                if let TimeTerm::Transient { old, dt } = time {
                    sink.res(ik, vol * (x[ik] - old[ik]) / dt);
                    sink.jac(ik, ik, vol / dt);
                }
            }
        }
        sink.res(pk, -vol * charge);
        let (in_, ip) = (layout.density[ni][k], layout.density[pi][k]);
        let (r, dr_dn, dr_dp) = reaction(
            device,
            x[in_],
            x[ip],
            local[ni][k].as_ref().unwrap(),
            local[pi][k].as_ref().unwrap(),
        );
        for row in [in_, ip] {
            sink.res(row, vol * (r - generation[k]));
            sink.jac(row, in_, vol * dr_dn);
            sink.jac(row, ip, vol * dr_dp);
        }
    }

    // Global vacancy mass rows.
    let vacancies: Vec<usize> = device.vacancy_indices().collect();
    for (&row, &i) in constrained.iter().zip(&vacancies) {
        let mut value = 0.0;
        let mut entries = Vec::new();
        for &k in &layout.region[i] {
            let ik = layout.density[i][k];
            let vol = mesh.volumes[k];
            match time {
                TimeTerm::Transient { old, dt } => {
                    value += vol * (x[ik] - old[ik]) / dt;
                    entries.push((row, ik, vol / dt));
                }
                TimeTerm::Stationary { .. } => {
                    value += vol * x[ik];
                    entries.push((row, ik, vol));
                }
            }
        }
        if let TimeTerm::Stationary { vacancy_mass } = time {
            value -= vacancy_mass[i];
        }
        sink.values[row] = value;
        if let Some(t) = sink.triplets.as_mut() {
            t.extend(entries);
        }
    }

    let jacobian = sink.triplets.map(|t| CsrMatrix::from_triplets(n, t));
    Ok(Residual {
        values: sink.values,
        jacobian,
        dense_rows: constrained,
    })
}

/// Poisson rows only, for a prescribed space charge `C + Σ z u` per cell.
/// Returns the linear system `A ψ = b`.
pub fn poisson_system(device: &Device, charge: &[f64], t: f64) -> (CsrMatrix, Vec<f64>) {
    let mesh = &device.mesh;
    let order = mesh.band_order();
    let n = mesh.n_cells();
    let mut pos = vec![0; n];
    for (p, &k) in order.iter().enumerate() {
        pos[k] = p;
    }
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    for e in &mesh.edges {
        let [k, l] = e.cells;
        let c = edge_coefficient(
            e.area,
            e.half,
            [device.permittivity[k], device.permittivity[l]],
        );
        let (a, b) = (pos[k], pos[l]);
        trip.extend([(a, a, c), (a, b, -c), (b, b, c), (b, a, -c)]);
    }
    let contacts = device.contact_values(t);
    for (f, face) in mesh.boundary_faces.iter().enumerate() {
        if let Some(c) = device.face_contact[f] {
            let k = face.cell;
            let coef = device.permittivity[k] * face.transmissibility();
            trip.push((pos[k], pos[k], coef));
            rhs[pos[k]] += coef * contacts[c].psi;
        }
    }
    for k in 0..n {
        rhs[pos[k]] += mesh.volumes[k] * charge[k];
    }
    let a = CsrMatrix::from_triplets(n, trip);
    // Return in natural cell order by permuting back.
    let mut inv = vec![0; n];
    for (p, &k) in order.iter().enumerate() {
        inv[p] = k;
    }
    let mut trip_nat = Vec::with_capacity(a.nnz());
    for p in 0..n {
        for (q, v) in a.row(p) {
            trip_nat.push((inv[p], inv[q], v));
        }
    }
    let b = (0..n).map(|k| rhs[pos[k]]).collect();
    (CsrMatrix::from_triplets(n, trip_nat), b)
}

/// Mass bookkeeping terms of a species at a state: `∫(G − R)` and the total
/// flux leaving through contacts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BalanceTerms {
    pub source: f64,
    pub outflow: f64,
}

pub fn balance_terms(
    device: &Device,
    x: &[f64],
    t: f64,
) -> Result<Vec<BalanceTerms>, AssemblyError> {
    let layout = &device.layout;
    let local = local_statistics(device, x)?;
    let mut out = vec![BalanceTerms::default(); device.species.len()];
    let contacts = device.contact_values(t);
    for (f, face) in device.mesh.boundary_faces.iter().enumerate() {
        let Some(c) = device.face_contact[f] else {
            continue;
        };
        let k = face.cell;
        for (i, sp) in device.species.iter().enumerate() {
            if !sp.is_carrier() {
                continue;
            }
            let mu_t = sp.mobility[k] * face.transmissibility();
            let nk = FluxNode::new(
                x[layout.psi[k]],
                x[layout.density[i][k]],
                local[i][k].as_ref().unwrap(),
            );
            let nd = contact_node(sp, i, k, contacts[c].psi, contacts[c].phi)?;
            out[i].outflow += two_point_flux(mu_t, sp.z(), &nk, &nd).flux;
        }
    }
    let generation = device.generation_profile();
    let (ni, pi) = carrier_indices(device);
    for k in 0..device.n_cells() {
        let (in_, ip) = (layout.density[ni][k], layout.density[pi][k]);
        let r = reaction(
            device,
            x[in_],
            x[ip],
            local[ni][k].as_ref().unwrap(),
            local[pi][k].as_ref().unwrap(),
        )
        .0;
        let s = device.mesh.volumes[k] * (generation[k] - r);
        out[ni].source += s;
        out[pi].source += s;
    }
    Ok(out)
}

/// Electric current `Σ_i z_i F_i` leaving the domain through each contact.
pub fn contact_currents(device: &Device, x: &[f64], t: f64) -> Result<Vec<f64>, AssemblyError> {
    let layout = &device.layout;
    let contacts = device.contact_values(t);
    let mut out = vec![0.0; device.contacts.len()];
    for (f, face) in device.mesh.boundary_faces.iter().enumerate() {
        let Some(c) = device.face_contact[f] else {
            continue;
        };
        let k = face.cell;
        for (i, sp) in device.species.iter().enumerate() {
            if !sp.is_carrier() {
                continue;
            }
            let u = x[layout.density[i][k]];
            let local = sp
                .statistics
                .local(u)
                .map_err(|source| AssemblyError::Statistics {
                    species: i,
                    cell: k,
                    source,
                })?;
            let nk = FluxNode::new(x[layout.psi[k]], u, &local);
            let nd = contact_node(sp, i, k, contacts[c].psi, contacts[c].phi)?;
            out[c] += sp.z()
                * two_point_flux(sp.mobility[k] * face.transmissibility(), sp.z(), &nk, &nd).flux;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_device, SpeciesRole};
    use crate::testing::pin_config;
    use proptest::prelude::*;

    fn boltzmann_device() -> Device {
        let mut cfg = pin_config(20);
        for s in cfg.species.iter_mut().take(2) {
            s.statistics = StatisticsKind::Boltzmann;
            s.zeta = 0.0;
        }
        build_device(&cfg).unwrap()
    }

    #[test]
    fn bernoulli_basics() {
        assert_eq!(bernoulli(0.0), 1.0);
        assert!((bernoulli(-1.0) - bernoulli(1.0) - 1.0).abs() < 1e-15);
        let x: f64 = 50.0;
        let reference = x * (-x).exp() / (1.0 - (-x).exp());
        assert!(((bernoulli(x) - reference) / reference).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_branches_meet() {
        for x in [1e-2, -1e-2] {
            let below = x * (1.0 - 1e-12);
            assert!((bernoulli(below) - bernoulli(x)).abs() < 1e-14);
            assert!((bernoulli_deriv(below) - bernoulli_deriv(x)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn bernoulli_reflection(x in -60.0f64..60.0) {
            let lhs = bernoulli(-x);
            let rhs = bernoulli(x) + x;
            // `B(x) + x` cancels to roundoff of size ε|x|.
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0));
        }

        #[test]
        fn bernoulli_derivative_matches_difference(x in -30.0f64..30.0) {
            let h = 1e-6;
            let fd = (bernoulli(x + h) - bernoulli(x - h)) / (2.0 * h);
            prop_assert!((fd - bernoulli_deriv(x)).abs() < 1e-8);
        }

        #[test]
        fn flux_antisymmetric(psi_k in -5.0f64..5.0, psi_l in -5.0f64..5.0, uk in 1e-3f64..10.0, ul in 1e-3f64..10.0) {
            let k = FluxNode { psi: psi_k, u: uk, eta: -0.1, deta_du: 0.0 };
            let l = FluxNode { psi: psi_l, u: ul, eta: -0.4, deta_du: 0.0 };
            let a = two_point_flux(0.7, -1.0, &k, &l).flux;
            let b = two_point_flux(0.7, -1.0, &l, &k).flux;
            prop_assert_eq!(a, -b);
        }
    }

    #[test]
    fn classical_sg_closed_form() {
        let d = boltzmann_device();
        let (psi_k, psi_l, uk, ul) = (0.3, -0.2, 2.0, 0.5);
        let k = FluxNode {
            psi: psi_k,
            u: uk,
            eta: 0.0,
            deta_du: 0.0,
        };
        let l = FluxNode {
            psi: psi_l,
            u: ul,
            eta: 0.0,
            deta_du: 0.0,
        };
        let z = d.species[0].z();
        let delta = psi_k - psi_l;
        let expected = 1.5 * (bernoulli(-z * delta) * uk - bernoulli(z * delta) * ul);
        assert_eq!(two_point_flux(1.5, z, &k, &l).flux, expected);
    }

    #[test]
    fn classical_scheme_rejects_degenerate_statistics() {
        let d = build_device(&pin_config(20)).unwrap();
        let x = crate::solver::contact_guess(&d);
        let s = State::from_vector(&d.layout, 0.0, &x);
        assert_eq!(
            edge_flux(&d, 0, 0, &s, FluxScheme::ClassicalSg),
            Err(AssemblyError::SchemeRequiresBoltzmann(0))
        );
        assert!(edge_flux(&d, 0, 0, &s, FluxScheme::ExcessChemicalPotential).is_ok());
    }

    #[test]
    fn reaction_boltzmann_closed_form() {
        let d = boltzmann_device();
        let (un, up) = (2.0, 3.0);
        let q = reaction_q(&d, un, up, 0.25).unwrap();
        assert!((q - (un * up - 1.0 - 0.25)).abs() < 1e-14);
    }

    #[test]
    fn reaction_vanishes_at_equilibrium() {
        let d = build_device(&pin_config(20)).unwrap();
        let n = &d.species[0].statistics;
        let p = &d.species[1].statistics;
        for v in [-3.0, 0.0, 2.5] {
            let (un, up) = (
                n.carrier_density(v).unwrap(),
                p.carrier_density(-v).unwrap(),
            );
            assert!(reaction_q(&d, un, up, 0.0).unwrap().abs() < 1e-12 * un * up);
        }
    }

    #[test]
    fn zero_rate_leaves_generation() {
        let mut cfg = pin_config(20);
        cfg.recombination = crate::device::RecombinationSpec::Constant { rate: 0.0 };
        let d = build_device(&cfg).unwrap();
        assert_eq!(reaction_q(&d, 0.3, 0.2, 0.7).unwrap(), -0.7);
    }

    #[test]
    fn vacancy_rows_telescope() {
        let d = build_device(&pin_config(30)).unwrap();
        let vac = d.species_index(SpeciesRole::Vacancy).unwrap();
        let x0 = crate::solver::contact_guess(&d);
        let mut x = x0.clone();
        for (j, &k) in d.layout.region[vac].iter().enumerate() {
            x[d.layout.density[vac][k]] *= 1.0 + 0.3 * ((j as f64) * 0.7).sin();
        }
        let opts = AssemblyOptions {
            vacancy_mass_rows: false,
            ..Default::default()
        };
        let dt = 0.1;
        let r = assemble_system(&d, &x, 0.0, TimeTerm::Transient { old: &x0, dt }, &opts).unwrap();
        let rows: f64 = d.layout.region[vac]
            .iter()
            .map(|&k| r.values[d.layout.density[vac][k]])
            .sum();
        let mass_change: f64 = d.layout.region[vac]
            .iter()
            .map(|&k| {
                d.mesh.volumes[k] * (x[d.layout.density[vac][k]] - x0[d.layout.density[vac][k]])
                    / dt
            })
            .sum();
        assert!((rows - mass_change).abs() < 1e-13);
    }
}

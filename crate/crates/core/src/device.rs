//! Device description: tensor-product finite-volume mesh, material layout,
//! species roster, contacts and initial data.
//!
//! Unknowns are cell-centred. Dirichlet data live on the boundary faces of the
//! contacts; every other boundary face is a homogeneous Neumann face.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CsrMatrix};
use crate::math::{cos, exp};
use crate::statistics::{ShiftedStatistics, StatisticsError, StatisticsKind};

/// Relative tolerance for aligning material boxes and contact spans with faces.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("statistics of `{field}`: {source}")]
    Statistics {
        field: String,
        source: StatisticsError,
    },
    #[error("no Dirichlet contact: at least one boundary face must carry a contact")]
    NoDirichletBoundary,
    #[error("linear solve failed while building `{0}`")]
    Linear(String),
}

fn invalid(field: impl Into<String>, reason: impl fmt::Display) -> DeviceError {
    DeviceError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub x: AxisConfig,
    /// Present for two-dimensional devices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<AxisConfig>,
}

/// An axis-aligned box of material; later entries override earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub name: String,
    pub x: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
    /// Scaled permittivity ε.
    pub permittivity: f64,
    /// Scaled net doping C.
    #[serde(default)]
    pub doping: f64,
    /// Marks the box as part of the perovskite layer Ω₀ hosting vacancies.
    #[serde(default)]
    pub perovskite: bool,
    /// Per-species mobility overrides keyed by species id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mobility: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeciesRole {
    Electron,
    Hole,
    Vacancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub id: String,
    pub role: SpeciesRole,
    /// Charge number z; fixed to −1 / +1 for electrons / holes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<i32>,
    /// Default scaled mobility μ (may be overridden per material).
    pub mobility: f64,
    pub statistics: StatisticsKind,
    /// Band-edge shift ζ.
    #[serde(default)]
    pub zeta: f64,
    /// Density of states N.
    pub n_states: f64,
    /// Uniform initial density; required for vacancies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiRule {
    /// ψ^D chosen so that the space charge vanishes at the contact.
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContactPsi {
    Value(f64),
    Rule(PsiRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactConfig {
    pub name: String,
    pub side: Side,
    /// Sub-interval of the side covered by the contact; whole side if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<[f64; 2]>,
    /// Electrostatic potential ψ^D.
    pub psi: ContactPsi,
    /// Quasi Fermi potential φ^D shared by electrons and holes.
    #[serde(default)]
    pub phi: f64,
    /// Whether the applied bias is added to ψ^D and φ^D of this contact.
    #[serde(default)]
    pub biased: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    /// Light enters at coordinate 0 of the vertical axis.
    #[default]
    Low,
    /// Light enters at the far end of the vertical axis.
    High,
}

/// Beer–Lambert generation `G = F_ph α exp(−α x_vert)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSpec {
    /// Photon flux F_ph.
    pub photon_flux: f64,
    /// Absorption coefficient α_G.
    pub absorption: f64,
    #[serde(default)]
    pub axis: Axis,
    #[serde(default)]
    pub surface: Surface,
}

impl GenerationSpec {
    /// Pointwise profile at depth `x_vert` below the illuminated surface.
    pub fn at_depth(&self, x_vert: f64) -> f64 {
        self.photon_flux * self.absorption * exp(-self.absorption * x_vert)
    }

    /// Mean of the profile over the depth interval `[a, b]`.
    pub fn mean_over(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return self.at_depth(a);
        }
        let ea = exp(-self.absorption * a);
        let eb = exp(-self.absorption * b);
        if self.absorption * (b - a) < 1e-8 {
            return self.at_depth(0.5 * (a + b));
        }
        self.photon_flux * (ea - eb) / (b - a)
    }
}

/// Recombination prefactor r₀ in `R = r₀ (u_n u_p − N_n N_p e^{...})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecombinationSpec {
    Constant {
        rate: f64,
    },
    Srh {
        rate_max: f64,
        n_ref: f64,
        p_ref: f64,
    },
}

impl Default for RecombinationSpec {
    fn default() -> Self {
        RecombinationSpec::Constant { rate: 1.0 }
    }
}

impl RecombinationSpec {
    /// r₀ and its partial derivatives with respect to u_n and u_p.
    pub fn prefactor(&self, un: f64, up: f64) -> (f64, f64, f64) {
        match *self {
            RecombinationSpec::Constant { rate } => (rate, 0.0, 0.0),
            RecombinationSpec::Srh {
                rate_max,
                n_ref,
                p_ref,
            } => {
                let d = 1.0 + un / n_ref + up / p_ref;
                let r = rate_max / d;
                (r, -r / (d * n_ref), -r / (d * p_ref))
            }
        }
    }

    /// Upper bound r̄ of the prefactor.
    pub fn bound(&self) -> f64 {
        match *self {
            RecombinationSpec::Constant { rate } => rate,
            RecombinationSpec::Srh { rate_max, .. } => rate_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierInit {
    /// `u = N e(z(φ₀ − ψ^D))` with ψ^D the extension of the contact data.
    #[default]
    Contact,
    /// Uniform values taken from each species' `initial` entry.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub carriers: CarrierInit,
    /// Quasi Fermi level φ₀ used by `CarrierInit::Contact`.
    #[serde(default)]
    pub phi: f64,
    /// Amplitude a of the multiplicative perturbation `1 + a cos(...)`.
    #[serde(default)]
    pub perturbation: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            carriers: CarrierInit::Contact,
            phi: 0.0,
            perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub geometry: GeometryConfig,
    pub materials: Vec<MaterialConfig>,
    pub species: Vec<SpeciesConfig>,
    pub contacts: Vec<ContactConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationSpec>,
    #[serde(default)]
    pub recombination: RecombinationSpec,
    #[serde(default)]
    pub initial: InitialConfig,
    /// Applied bias added to the biased contacts.
    #[serde(default)]
    pub bias: f64,
    /// Rate of change of the applied bias per unit time.
    #[serde(default)]
    pub bias_ramp: f64,
}

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub cells: [usize; 2],
    /// Interface measure.
    pub area: f64,
    /// Distances from each cell centre to the interface.
    pub half: [f64; 2],
    pub axis: Axis,
}

impl Edge {
    pub fn distance(&self) -> f64 {
        self.half[0] + self.half[1]
    }

    /// Geometric transmissibility `area / distance`.
    pub fn transmissibility(&self) -> f64 {
        self.area / self.distance()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub side: Side,
    pub area: f64,
    /// Distance from the cell centre to the face.
    pub distance: f64,
    /// Face midpoint.
    pub center: [f64; 2],
}

impl BoundaryFace {
    pub fn transmissibility(&self) -> f64 {
        self.area / self.distance
    }
}

/// Tensor-product cell-centred mesh on `[0, Lx] × [0, Ly]`. One-dimensional
/// meshes use a unit cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct FvMesh {
    pub dimension: usize,
    pub x_faces: Vec<f64>,
    pub y_faces: Vec<f64>,
    pub volumes: Vec<f64>,
    pub centers: Vec<[f64; 2]>,
    pub edges: Vec<Edge>,
    pub boundary_faces: Vec<BoundaryFace>,
}

fn linspace(length: f64, cells: usize) -> Vec<f64> {
    (0..=cells)
        .map(|i| length * i as f64 / cells as f64)
        .collect()
}

impl FvMesh {
    pub fn tensor(x_faces: Vec<f64>, y_faces: Option<Vec<f64>>) -> Self {
        let dimension = if y_faces.is_some() { 2 } else { 1 };
        let y_faces = y_faces.unwrap_or_else(|| vec![0.0, 1.0]);
        let (nx, ny) = (x_faces.len() - 1, y_faces.len() - 1);
        let mut volumes = Vec::with_capacity(nx * ny);
        let mut centers = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let hx = x_faces[i + 1] - x_faces[i];
                let hy = y_faces[j + 1] - y_faces[j];
                volumes.push(hx * hy);
                centers.push([
                    0.5 * (x_faces[i] + x_faces[i + 1]),
                    0.5 * (y_faces[j] + y_faces[j + 1]),
                ]);
            }
        }
        let hx = |i: usize| x_faces[i + 1] - x_faces[i];
        let hy = |j: usize| y_faces[j + 1] - y_faces[j];
        let mut edges = Vec::new();
        let mut boundary_faces = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = i + nx * j;
                if i + 1 < nx {
                    edges.push(Edge {
                        cells: [k, k + 1],
                        area: hy(j),
                        half: [0.5 * hx(i), 0.5 * hx(i + 1)],
                        axis: Axis::X,
                    });
                }
                if j + 1 < ny {
                    edges.push(Edge {
                        cells: [k, k + nx],
                        area: hx(i),
                        half: [0.5 * hy(j), 0.5 * hy(j + 1)],
                        axis: Axis::Y,
                    });
                }
            }
        }
        for j in 0..ny {
            let yc = 0.5 * (y_faces[j] + y_faces[j + 1]);
            boundary_faces.push(BoundaryFace {
                cell: nx * j,
                side: Side::Left,
                area: hy(j),
                distance: 0.5 * hx(0),
                center: [x_faces[0], yc],
            });
            boundary_faces.push(BoundaryFace {
                cell: nx - 1 + nx * j,
                side: Side::Right,
                area: hy(j),
                distance: 0.5 * hx(nx - 1),
                center: [x_faces[nx], yc],
            });
        }
        if dimension == 2 {
            for i in 0..nx {
                let xc = 0.5 * (x_faces[i] + x_faces[i + 1]);
                boundary_faces.push(BoundaryFace {
                    cell: i,
                    side: Side::Bottom,
                    area: hx(i),
                    distance: 0.5 * hy(0),
                    center: [xc, y_faces[0]],
                });
                boundary_faces.push(BoundaryFace {
                    cell: i + nx * (ny - 1),
                    side: Side::Top,
                    area: hx(i),
                    distance: 0.5 * hy(ny - 1),
                    center: [xc, y_faces[ny]],
                });
            }
        }
        Self {
            dimension,
            x_faces,
            y_faces,
            volumes,
            centers,
            edges,
            boundary_faces,
        }
    }

    pub fn nx(&self) -> usize {
        self.x_faces.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y_faces.len() - 1
    }

    pub fn n_cells(&self) -> usize {
        self.volumes.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Extent of cell `k` along `axis`.
    pub fn cell_interval(&self, k: usize, axis: Axis) -> [f64; 2] {
        let nx = self.nx();
        match axis {
            Axis::X => [self.x_faces[k % nx], self.x_faces[k % nx + 1]],
            Axis::Y => [self.y_faces[k / nx], self.y_faces[k / nx + 1]],
        }
    }

    /// Cell ordering that keeps the Jacobian bandwidth proportional to the
    /// shorter mesh dimension.
    pub fn band_order(&self) -> Vec<usize> {
        let (nx, ny) = (self.nx(), self.ny());
        if nx <= ny {
            (0..nx * ny).collect()
        } else {
            (0..nx)
                .flat_map(|i| (0..ny).map(move |j| i + nx * j))
                .collect()
        }
    }

    /// Two-point admissibility: every edge joins neighbours across a shared
    /// face perpendicular to the line of centres, with positive measures.
    pub fn is_admissible(&self) -> bool {
        let positive = self.volumes.iter().all(|&v| v > 0.0)
            && self
                .edges
                .iter()
                .all(|e| e.area > 0.0 && e.half[0] > 0.0 && e.half[1] > 0.0);
        let orthogonal = self.edges.iter().all(|e| {
            let (a, b) = (self.centers[e.cells[0]], self.centers[e.cells[1]]);
            match e.axis {
                Axis::X => a[1] == b[1] && b[0] > a[0],
                Axis::Y => a[0] == b[0] && b[1] > a[1],
            }
        });
        positive && orthogonal
    }
}

// ---------------------------------------------------------------------------
// Device
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub id: String,
    pub role: SpeciesRole,
    pub charge: i32,
    pub statistics: ShiftedStatistics,
    /// Mobility per cell (zero outside the species region).
    pub mobility: Vec<f64>,
    pub initial: Option<f64>,
}

impl Species {
    pub fn is_carrier(&self) -> bool {
        self.role != SpeciesRole::Vacancy
    }

    pub fn z(&self) -> f64 {
        self.charge as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub name: String,
    /// ψ^D at zero bias.
    pub psi: f64,
    /// φ^D at zero bias.
    pub phi: f64,
    pub biased: bool,
}

/// Positions of the unknowns in the flat solution vector. Each cell carries
/// ψ followed by the densities of the species present in the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub n_unknowns: usize,
    pub psi: Vec<usize>,
    /// `density[i][k]`: unknown of species `i` in cell `k`, `usize::MAX` outside its region.
    pub density: Vec<Vec<usize>>,
    /// Cells of each species region in increasing cell order.
    pub region: Vec<Vec<usize>>,
    psi_unknown: Vec<bool>,
}

impl Layout {
    pub fn has(&self, species: usize, cell: usize) -> bool {
        self.density[species][cell] != usize::MAX
    }

    pub fn is_density(&self, index: usize) -> bool {
        !self.psi_unknown[index]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub config: DeviceConfig,
    pub mesh: FvMesh,
    pub cell_material: Vec<usize>,
    pub perovskite: Vec<bool>,
    pub permittivity: Vec<f64>,
    pub doping: Vec<f64>,
    pub species: Vec<Species>,
    pub contacts: Vec<Contact>,
    /// Contact index of each boundary face; `None` for Neumann faces.
    pub face_contact: Vec<Option<usize>>,
    pub generation: Option<GenerationSpec>,
    pub recombination: RecombinationSpec,
    pub layout: Layout,
    /// Discrete harmonic extension of each contact's indicator function.
    pub extension_basis: Vec<Vec<f64>>,
}

/// Dirichlet values of one contact at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactValues {
    pub psi: f64,
    pub phi: f64,
}

impl Device {
    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    pub fn species_index(&self, role: SpeciesRole) -> Option<usize> {
        self.species.iter().position(|s| s.role == role)
    }

    pub fn vacancy_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.species
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role == SpeciesRole::Vacancy)
            .map(|(i, _)| i)
    }

    /// Applied bias at time `t`.
    pub fn bias_at(&self, t: f64) -> f64 {
        self.config.bias + self.config.bias_ramp * t
    }

    pub fn contact_values(&self, t: f64) -> Vec<ContactValues> {
        let b = self.bias_at(t);
        self.contacts
            .iter()
            .map(|c| {
                let shift = if c.biased { b } else { 0.0 };
                ContactValues {
                    psi: c.psi + shift,
                    phi: c.phi + shift,
                }
            })
            .collect()
    }

    /// True when every contact shares one φ^D and the data do not change in
    /// time, so that thermodynamic equilibrium is compatible with the boundary.
    pub fn equilibrium_compatible(&self) -> bool {
        let v = self.contact_values(0.0);
        self.config.bias_ramp == 0.0 && v.windows(2).all(|w| w[0].phi == w[1].phi)
    }

    /// Cell field extending the per-contact values `values` into the domain.
    pub fn extend(&self, values: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cells()];
        for (c, basis) in self.extension_basis.iter().enumerate() {
            let v = values(c);
            for (o, b) in out.iter_mut().zip(basis) {
                *o += v * b;
            }
        }
        out
    }

    pub fn psi_extension(&self, t: f64) -> Vec<f64> {
        let v = self.contact_values(t);
        self.extend(|c| v[c].psi)
    }

    pub fn phi_extension(&self, t: f64) -> Vec<f64> {
        let v = self.contact_values(t);
        self.extend(|c| v[c].phi)
    }

    /// Same device with a different applied bias.
    pub fn with_bias(&self, bias: f64) -> Device {
        let mut d = self.clone();
        d.config.bias = bias;
        d
    }

    /// Same device without illumination.
    pub fn dark(&self) -> Device {
        let mut d = self.clone();
        d.generation = None;
        d.config.generation = None;
        d
    }

    /// Cell averages of the generation profile; zeros in the dark.
    pub fn generation_profile(&self) -> Vec<f64> {
        generation_profile(self)
    }

    /// Uniformly refined copy: each cell is split into `factor` (per axis).
    pub fn refine(&self, factor: usize) -> Result<Device, DeviceError> {
        refine(self, factor)
    }
}

impl Layout {
    fn build(mesh: &FvMesh, species: &[Species], perovskite: &[bool]) -> Self {
        let n = mesh.n_cells();
        let mut psi = vec![usize::MAX; n];
        let mut density = vec![vec![usize::MAX; n]; species.len()];
        let mut next = 0;
        for k in mesh.band_order() {
            psi[k] = next;
            next += 1;
            for (i, s) in species.iter().enumerate() {
                if s.is_carrier() || perovskite[k] {
                    density[i][k] = next;
                    next += 1;
                }
            }
        }
        let region = density
            .iter()
            .map(|d| (0..n).filter(|&k| d[k] != usize::MAX).collect())
            .collect();
        let mut psi_unknown = vec![false; next];
        for &p in &psi {
            psi_unknown[p] = true;
        }
        Layout {
            n_unknowns: next,
            psi,
            density,
            region,
            psi_unknown,
        }
    }
}

fn aligned(value: f64, faces: &[f64]) -> bool {
    let scale = faces.last().copied().unwrap_or(1.0).abs().max(1.0);
    faces
        .iter()
        .any(|&f| (f - value).abs() <= ALIGN_TOL * scale)
}

fn inside(c: f64, range: [f64; 2]) -> bool {
    c > range[0] && c < range[1]
}

fn check_positive(field: &str, v: f64) -> Result<(), DeviceError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            field,
            format_args!("must be positive and finite, got {v}"),
        ))
    }
}

/// Validates the configuration and assembles the device.
pub fn build_device(config: &DeviceConfig) -> Result<Device, DeviceError> {
    let g = &config.geometry;
    check_positive("geometry.x.length", g.x.length)?;
    if g.x.cells == 0 {
        return Err(invalid("geometry.x.cells", "must be at least 1"));
    }
    let x_faces = linspace(g.x.length, g.x.cells);
    let y_faces = match &g.y {
        Some(y) => {
            check_positive("geometry.y.length", y.length)?;
            if y.cells == 0 {
                return Err(invalid("geometry.y.cells", "must be at least 1"));
            }
            Some(linspace(y.length, y.cells))
        }
        None => None,
    };
    let two_d = y_faces.is_some();
    let mesh = FvMesh::tensor(x_faces, y_faces);
    let n = mesh.n_cells();

    // Materials.
    if config.materials.is_empty() {
        return Err(invalid("materials", "at least one material is required"));
    }
    let mut cell_material = vec![usize::MAX; n];
    for (m, mat) in config.materials.iter().enumerate() {
        let field = |s: &str| alloc::format!("materials[{m}].{s}");
        check_positive(&field("permittivity"), mat.permittivity)?;
        if !mat.doping.is_finite() {
            return Err(invalid(field("doping"), "must be finite"));
        }
        let boxes: [(Option<[f64; 2]>, &[f64], &str); 2] = [
            (Some(mat.x), &mesh.x_faces, "x"),
            (mat.y, &mesh.y_faces, "y"),
        ];
        for (range, faces, name) in boxes {
            let Some(r) = range else { continue };
            if name == "y" && !two_d {
                return Err(invalid(
                    field("y"),
                    "only valid for two-dimensional geometry",
                ));
            }
            let len = *faces.last().unwrap();
            if !(r[0] < r[1]) || r[0] < -ALIGN_TOL * len || r[1] > len * (1.0 + ALIGN_TOL) {
                return Err(invalid(
                    field(name),
                    format_args!("interval {r:?} must lie inside [0, {len}]"),
                ));
            }
            if !aligned(r[0], faces) || !aligned(r[1], faces) {
                return Err(invalid(
                    field(name),
                    format_args!("interval {r:?} does not coincide with cell faces"),
                ));
            }
        }
        for (k, c) in mesh.centers.iter().enumerate() {
            if inside(c[0], mat.x) && mat.y.map_or(true, |y| inside(c[1], y)) {
                cell_material[k] = m;
            }
        }
    }
    if let Some(k) = cell_material.iter().position(|&m| m == usize::MAX) {
        let c = mesh.centers[k];
        return Err(invalid(
            "materials",
            format_args!("cell centred at ({}, {}) is not covered", c[0], c[1]),
        ));
    }
    for (m, mat) in config.materials.iter().enumerate() {
        let count = cell_material.iter().filter(|&&c| c == m).count();
        if count < 2 {
            return Err(invalid(
                alloc::format!("materials[{m}]"),
                format_args!(
                    "material `{}` is resolved by {count} cell(s); at least 2 are required",
                    mat.name
                ),
            ));
        }
    }
    let perovskite: Vec<bool> = cell_material
        .iter()
        .map(|&m| config.materials[m].perovskite)
        .collect();
    let permittivity = cell_material
        .iter()
        .map(|&m| config.materials[m].permittivity)
        .collect();
    let doping = cell_material
        .iter()
        .map(|&m| config.materials[m].doping)
        .collect();

    // Species.
    let mut species = Vec::new();
    for (i, s) in config.species.iter().enumerate() {
        let field = |f: &str| alloc::format!("species[{i}].{f}");
        if config.species[..i].iter().any(|o| o.id == s.id) {
            return Err(invalid(
                field("id"),
                format_args!("duplicate species id `{}`", s.id),
            ));
        }
        let charge = match (s.role, s.charge) {
            (SpeciesRole::Electron, None | Some(-1)) => -1,
            (SpeciesRole::Hole, None | Some(1)) => 1,
            (SpeciesRole::Electron | SpeciesRole::Hole, Some(c)) => {
                return Err(invalid(
                    field("charge"),
                    format_args!("electrons carry −1 and holes +1, got {c}"),
                ))
            }
            (SpeciesRole::Vacancy, Some(c)) if c != 0 => c,
            (SpeciesRole::Vacancy, _) => {
                return Err(invalid(
                    field("charge"),
                    "vacancies need a nonzero charge number",
                ))
            }
        };
        let stats = ShiftedStatistics::new(s.statistics, s.zeta, s.n_states).map_err(|source| {
            DeviceError::Statistics {
                field: field("statistics"),
                source,
            }
        })?;
        match (s.role, s.statistics) {
            (SpeciesRole::Vacancy, StatisticsKind::Blakemore { .. }) => {}
            (SpeciesRole::Vacancy, _) => {
                return Err(invalid(
                    field("statistics"),
                    "vacancies require Blakemore statistics",
                ))
            }
            (_, StatisticsKind::Blakemore { .. }) => {
                return Err(invalid(
                    field("statistics"),
                    "electrons and holes require Boltzmann or Fermi–Dirac statistics",
                ))
            }
            _ => {}
        }
        if !(s.mobility >= 0.0 && s.mobility.is_finite()) {
            return Err(invalid(
                field("mobility"),
                format_args!("must be nonnegative and finite, got {}", s.mobility),
            ));
        }
        let in_region = |k: usize| s.role != SpeciesRole::Vacancy || perovskite[k];
        let mobility = (0..n)
            .map(|k| {
                if !in_region(k) {
                    return Ok(0.0);
                }
                let mat = &config.materials[cell_material[k]];
                let mu = mat.mobility.get(&s.id).copied().unwrap_or(s.mobility);
                if mu >= 0.0 && mu.is_finite() {
                    Ok(mu)
                } else {
                    Err(invalid(
                        alloc::format!("materials.{}.mobility.{}", mat.name, s.id),
                        "must be nonnegative",
                    ))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        match (s.role, s.initial) {
            (SpeciesRole::Vacancy, None) => {
                return Err(invalid(
                    field("initial"),
                    "vacancies need an initial density",
                ))
            }
            (_, Some(u0)) => {
                let hi = (1.0 + config.initial.perturbation.abs()) * u0;
                let lo = (1.0 - config.initial.perturbation.abs()) * u0;
                if !(lo > 0.0) {
                    return Err(invalid(
                        field("initial"),
                        format_args!("initial density must stay positive, got {lo}"),
                    ));
                }
                if s.role == SpeciesRole::Vacancy {
                    let cap = stats
                        .density_limit()
                        .unwrap_or(f64::INFINITY)
                        .min(s.n_states);
                    if !(hi < cap) {
                        return Err(invalid(
                            field("initial"),
                            format_args!(
                                "initial vacancy density {hi} must lie strictly below N = {cap}"
                            ),
                        ));
                    }
                }
            }
            _ => {}
        }
        species.push(Species {
            id: s.id.clone(),
            role: s.role,
            charge,
            statistics: stats,
            mobility,
            initial: s.initial,
        });
    }
    for role in [SpeciesRole::Electron, SpeciesRole::Hole] {
        let count = species.iter().filter(|s| s.role == role).count();
        if count != 1 {
            return Err(invalid(
                "species",
                format_args!("exactly one {role:?} species is required, found {count}"),
            ));
        }
    }
    let has_vacancy = species.iter().any(|s| s.role == SpeciesRole::Vacancy);
    if has_vacancy && perovskite.iter().filter(|&&p| p).count() == 0 {
        return Err(invalid(
            "materials",
            "vacancy species present but no material is marked perovskite",
        ));
    }
    if config.initial.perturbation.abs() >= 1.0 || !config.initial.perturbation.is_finite() {
        return Err(invalid(
            "initial.perturbation",
            "amplitude must lie in (−1, 1)",
        ));
    }
    if config.initial.carriers == CarrierInit::Uniform {
        for (i, s) in config.species.iter().enumerate() {
            if s.initial.is_none() {
                return Err(invalid(
                    alloc::format!("species[{i}].initial"),
                    "required for uniform carrier initialization",
                ));
            }
        }
    }

    // Generation and recombination.
    if let Some(gen) = &config.generation {
        if !(gen.photon_flux >= 0.0 && gen.photon_flux.is_finite()) {
            return Err(invalid("generation.photon_flux", "must be nonnegative"));
        }
        if !(gen.absorption >= 0.0 && gen.absorption.is_finite()) {
            return Err(invalid("generation.absorption", "must be nonnegative"));
        }
        if gen.axis == Axis::Y && !two_d {
            return Err(invalid(
                "generation.axis",
                "axis y requires a two-dimensional geometry",
            ));
        }
    }
    match config.recombination {
        RecombinationSpec::Constant { rate } if !(rate >= 0.0 && rate.is_finite()) => {
            return Err(invalid("recombination.rate", "must be nonnegative"));
        }
        RecombinationSpec::Srh {
            rate_max,
            n_ref,
            p_ref,
        } if !(rate_max >= 0.0 && rate_max.is_finite() && n_ref > 0.0 && p_ref > 0.0) => {
            return Err(invalid(
                "recombination",
                "srh needs rate_max ≥ 0 and positive reference densities",
            ));
        }
        _ => {}
    }
    if !config.bias.is_finite() || !config.bias_ramp.is_finite() {
        return Err(invalid("bias", "must be finite"));
    }

    // Contacts.
    let mut face_contact = vec![None; mesh.boundary_faces.len()];
    for (c, contact) in config.contacts.iter().enumerate() {
        let field = |f: &str| alloc::format!("contacts[{c}].{f}");
        if config.contacts[..c].iter().any(|o| o.name == contact.name) {
            return Err(invalid(
                field("name"),
                format_args!("duplicate contact `{}`", contact.name),
            ));
        }
        if !two_d && matches!(contact.side, Side::Bottom | Side::Top) {
            return Err(invalid(
                field("side"),
                "bottom/top contacts require a two-dimensional geometry",
            ));
        }
        let (along, faces) = match contact.side {
            Side::Left | Side::Right => (1, &mesh.y_faces),
            Side::Bottom | Side::Top => (0, &mesh.x_faces),
        };
        let span = contact.span.unwrap_or([faces[0], *faces.last().unwrap()]);
        if contact.span.is_some() {
            if !two_d {
                return Err(invalid(
                    field("span"),
                    "spans are only meaningful in two dimensions",
                ));
            }
            if !(span[0] < span[1]) || !aligned(span[0], faces) || !aligned(span[1], faces) {
                return Err(invalid(
                    field("span"),
                    format_args!("span {span:?} must be an interval of cell faces"),
                ));
            }
        }
        if !contact.phi.is_finite() {
            return Err(invalid(field("phi"), "must be finite"));
        }
        let mut hits = 0;
        for (f, face) in mesh.boundary_faces.iter().enumerate() {
            if face.side == contact.side && inside(face.center[along], span) {
                if let Some(other) = face_contact[f] {
                    return Err(invalid(
                        field("span"),
                        format_args!("overlaps contact {other}"),
                    ));
                }
                face_contact[f] = Some(c);
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(invalid(field("span"), "covers no boundary face"));
        }
    }
    if face_contact.iter().all(Option::is_none) {
        return Err(DeviceError::NoDirichletBoundary);
    }

    let layout = Layout::build(&mesh, &species, &perovskite);
    let mut device = Device {
        config: config.clone(),
        mesh,
        cell_material,
        perovskite,
        permittivity,
        doping,
        species,
        contacts: Vec::new(),
        face_contact,
        generation: config.generation,
        recombination: config.recombination,
        layout,
        extension_basis: Vec::new(),
    };
    let mut contacts = Vec::new();
    for (c, contact) in config.contacts.iter().enumerate() {
        let psi = match contact.psi {
            ContactPsi::Value(v) if v.is_finite() => v,
            ContactPsi::Value(_) => {
                return Err(invalid(
                    alloc::format!("contacts[{c}].psi"),
                    "must be finite",
                ))
            }
            ContactPsi::Rule(PsiRule::Neutral) => neutral_potential(&device, c, contact.phi)?,
        };
        contacts.push(Contact {
            name: contact.name.clone(),
            psi,
            phi: contact.phi,
            biased: contact.biased,
        });
    }
    device.contacts = contacts;
    device.extension_basis = (0..config.contacts.len())
        .map(|c| harmonic_extension(&device.mesh, &device.face_contact, c))
        .collect::<Result<_, _>>()?;
    Ok(device)
}

/// ψ solving local charge neutrality `C + Σ z N e(z(φ − ψ)) = 0` with the
/// area-weighted doping under contact `c`.
fn neutral_potential(device: &Device, c: usize, phi: f64) -> Result<f64, DeviceError> {
    let (mut area, mut charge) = (0.0, 0.0);
    for (f, face) in device.mesh.boundary_faces.iter().enumerate() {
        if device.face_contact[f] == Some(c) {
            area += face.area;
            charge += face.area * device.doping[face.cell];
        }
    }
    let doping = charge / area;
    let carriers: Vec<&Species> = device.species.iter().filter(|s| s.is_carrier()).collect();
    let space_charge = |psi: f64| -> f64 {
        doping
            + carriers
                .iter()
                .map(|s| {
                    s.z()
                        * s.statistics
                            .carrier_density(s.z() * (phi - psi))
                            .unwrap_or(f64::INFINITY)
                })
                .sum::<f64>()
    };
    // Space charge is strictly decreasing in ψ; expand a bracket, then bisect.
    let (mut lo, mut hi) = (phi - 1.0, phi + 1.0);
    let mut expand = 0;
    while space_charge(lo) < 0.0 || space_charge(hi) > 0.0 {
        lo -= (hi - lo) * 0.5;
        hi += (hi - lo) * 0.5;
        expand += 1;
        if expand > 60 {
            return Err(invalid(
                alloc::format!("contacts[{c}].psi"),
                "no charge-neutral potential found",
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if space_charge(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves the discrete Laplace equation with value 1 on the faces of contact
/// `target`, 0 on the other contacts and no flux elsewhere.
fn harmonic_extension(
    mesh: &FvMesh,
    face_contact: &[Option<usize>],
    target: usize,
) -> Result<Vec<f64>, DeviceError> {
    let n = mesh.n_cells();
    let order = mesh.band_order();
    let mut pos = vec![0; n];
    for (p, &k) in order.iter().enumerate() {
        pos[k] = p;
    }
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    for e in &mesh.edges {
        let t = e.transmissibility();
        let (a, b) = (pos[e.cells[0]], pos[e.cells[1]]);
        trip.extend([(a, a, t), (a, b, -t), (b, b, t), (b, a, -t)]);
    }
    for (f, face) in mesh.boundary_faces.iter().enumerate() {
        if let Some(c) = face_contact[f] {
            let t = face.transmissibility();
            let a = pos[face.cell];
            trip.push((a, a, t));
            if c == target {
                rhs[a] += t;
            }
        }
    }
    let m = CsrMatrix::from_triplets(n, trip);
    let sol =
        linalg::solve(&m, &rhs).map_err(|_| DeviceError::Linear("contact extension".into()))?;
    Ok((0..n).map(|k| sol[pos[k]]).collect())
}

pub fn generation_profile(device: &Device) -> Vec<f64> {
    let Some(gen) = device.generation else {
        return vec![0.0; device.n_cells()];
    };
    let total = match gen.axis {
        Axis::X => *device.mesh.x_faces.last().unwrap(),
        Axis::Y => *device.mesh.y_faces.last().unwrap(),
    };
    (0..device.n_cells())
        .map(|k| {
            let [a, b] = device.mesh.cell_interval(k, gen.axis);
            let (d0, d1) = match gen.surface {
                Surface::Low => (a, b),
                Surface::High => (total - b, total - a),
            };
            gen.mean_over(d0, d1)
        })
        .collect()
}

pub fn refine(device: &Device, factor: usize) -> Result<Device, DeviceError> {
    if factor < 2 {
        return Err(invalid("factor", "refinement factor must be at least 2"));
    }
    let mut cfg = device.config.clone();
    cfg.geometry.x.cells *= factor;
    if let Some(y) = cfg.geometry.y.as_mut() {
        y.cells *= factor;
    }
    let mut refined = build_device(&cfg)?;
    refined.generation = device.generation;
    refined.config.generation = device.generation;
    Ok(refined)
}

/// For every fine cell, the coarse cell containing it.
pub fn parent_cells(coarse: &FvMesh, fine: &FvMesh) -> Vec<usize> {
    let locate =
        |faces: &[f64], c: f64| faces[1..].partition_point(|&f| f <= c).min(faces.len() - 2);
    fine.centers
        .iter()
        .map(|c| {
            let i = locate(&coarse.x_faces, c[0]);
            let j = locate(&coarse.y_faces, c[1]);
            i + coarse.nx() * j
        })
        .collect()
}

/// Smooth multiplicative perturbation profile `1 + a cos(2π m x / Lx) cos(π m y / Ly)`.
pub fn perturbation_factor(mesh: &FvMesh, amplitude: f64, mode: usize, k: usize) -> f64 {
    let [x, y] = mesh.centers[k];
    let lx = *mesh.x_faces.last().unwrap();
    let ly = *mesh.y_faces.last().unwrap();
    let m = mode as f64;
    let fy = if mesh.dimension == 2 {
        cos(core::f64::consts::PI * m * y / ly)
    } else {
        1.0
    };
    1.0 + amplitude * cos(2.0 * core::f64::consts::PI * m * x / lx + 0.3 * m) * fy
}

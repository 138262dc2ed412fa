//! Case configuration files (TOML) and their translation into a
//! mixed-dimensional [`Problem`].
//!
//! Heads are in metres, conductivities in m/s and lengths in metres; files
//! carry plain numbers. Fault permeabilities are equi-dimensional values and
//! are scaled by the aperture when the problem is built.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{Formulation, Problem, SolverKind, SolverOptions, SubdomainData};
use crate::discretize::{BoundaryCondition, BoundaryKind, Scheme};
use crate::geometry::{PermTensor, Vec3};
use crate::mesh::{refine, BoundaryTag, BoxDomain, FaultSpec, MeshError, MixedDimMesh, SideMaterial, SubdomainKind};
use crate::semilocal::{scale_to_mixed_dim, EquiDimFaultPerm, InterfaceLaw, SemiLocalError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Scalar (isotropic) or full-tensor permeability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Perm {
    Scalar(f64),
    Tensor(Vec<Vec<f64>>),
}

impl Perm {
    pub fn tensor(&self, dim: usize) -> Result<PermTensor, ConfigError> {
        match self {
            Perm::Scalar(k) => Ok(PermTensor::isotropic(dim, *k)),
            Perm::Tensor(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return invalid(format!("permeability tensor must be {dim}x{dim}"));
                }
                Ok(PermTensor::from_rows(rows))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cells per axis at refinement level 0.
    pub resolution: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub permeability: Perm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub permeability: Perm,
    /// Boxes overriding the permeability of cells whose centroid they contain;
    /// later entries win.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RegionConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideConfig {
    /// Off-diagonal permeability along the fault's tangent axes.
    pub k_t: Vec<f64>,
    pub k_perp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub id: String,
    /// 0 = x, 1 = y, 2 = z. The fault normal points along `+normal_axis`.
    pub normal_axis: usize,
    pub position: f64,
    /// One `[start, end]` per tangent axis, tangent axes in increasing order.
    pub extent: Vec<[f64; 2]>,
    pub aperture: f64,
    pub k_parallel: Perm,
    /// Side the normal points into.
    pub plus: SideConfig,
    pub minus: SideConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    /// `x-`, `x+`, `y-`, `y+`, `z-` or `z+`.
    pub side: String,
    pub kind: BcKind,
    /// Head for Dirichlet, outward flux density for Neumann.
    pub value: f64,
    /// Optional `[start, end]` per tangent axis of the side (increasing axis
    /// order); a face is selected when its centroid lies inside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeConfig {
    Tpfa,
    Mpfa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationConfig {
    Local,
    Semilocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKindConfig {
    Direct,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_solver_kind")]
    pub kind: SolverKindConfig,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeConfig,
    #[serde(default = "default_formulation")]
    pub formulation: FormulationConfig,
}

fn default_solver_kind() -> SolverKindConfig {
    SolverKindConfig::Direct
}
fn default_rel_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    20_000
}
fn default_scheme() -> SchemeConfig {
    SchemeConfig::Mpfa
}
fn default_formulation() -> FormulationConfig {
    FormulationConfig::Semilocal
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: default_solver_kind(),
            rel_tol: default_rel_tol(),
            max_iter: default_max_iter(),
            scheme: default_scheme(),
            formulation: default_formulation(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub directory: String,
}

fn default_output_dir() -> String {
    "output".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_output_dir() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    pub domain: DomainConfig,
    pub matrix: MatrixConfig,
    #[serde(default)]
    pub faults: Vec<FaultConfig>,
    #[serde(default)]
    pub boundary: Vec<BoundaryConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_side(side: &str, dim: usize) -> Option<(usize, bool)> {
    let mut chars = side.chars();
    let axis = match chars.next()? {
        'x' => 0,
        'y' => 1,
        'z' => 2,
        _ => return None,
    };
    let upper = match chars.next()? {
        '-' => false,
        '+' => true,
        _ => return None,
    };
    (chars.next().is_none() && axis < dim).then_some((axis, upper))
}

impl CaseConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: CaseConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        cfg.validate().map_err(|e| match e {
            ConfigError::Invalid(msg) => {
                // point at the first line mentioning the offending key when possible
                ConfigError::Invalid(msg)
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is serializable")
    }

    pub fn dim(&self) -> usize {
        self.domain.lower.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = self.dim();
        if !(d == 2 || d == 3) {
            return invalid("domain must be 2- or 3-dimensional");
        }
        if self.domain.upper.len() != d || self.domain.resolution.len() != d {
            return invalid("domain lower, upper and resolution must have equal length");
        }
        if self.domain.resolution.contains(&0) {
            return invalid("resolution entries must be positive");
        }
        if (0..d).any(|a| !(self.domain.upper[a] > self.domain.lower[a])) {
            return invalid("domain upper corner must exceed the lower corner");
        }
        let km = self.matrix.permeability.tensor(d)?;
        if !km.is_positive_definite() {
            return invalid("matrix permeability must be symmetric positive definite");
        }
        for (i, r) in self.matrix.regions.iter().enumerate() {
            if r.lower.len() != d || r.upper.len() != d {
                return invalid(format!("matrix region {i} must have {d} coordinates per corner"));
            }
            if !r.permeability.tensor(d)?.is_positive_definite() {
                return invalid(format!("matrix region {i} permeability must be positive definite"));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for f in &self.faults {
            if !ids.insert(f.id.as_str()) {
                return invalid(format!("duplicate fault id '{}'", f.id));
            }
            if !(f.aperture > 0.0) {
                return invalid(format!("fault '{}': aperture must be positive", f.id));
            }
            if f.normal_axis >= d {
                return invalid(format!("fault '{}': normal_axis must be below {d}", f.id));
            }
            if f.extent.len() != d - 1 {
                return invalid(format!("fault '{}': extent needs {} ranges", f.id, d - 1));
            }
            for side in [&f.plus, &f.minus] {
                if side.k_t.len() != d - 1 {
                    return invalid(format!("fault '{}': k_t needs {} components", f.id, d - 1));
                }
            }
            let perm = self.fault_perm(f)?;
            perm.validate().map_err(|e| ConfigError::Invalid(format!("fault '{}': {e}", f.id)))?;
        }
        for b in &self.boundary {
            if parse_side(&b.side, d).is_none() {
                return invalid(format!("unknown boundary side '{}'", b.side));
            }
            if let Some(r) = &b.range {
                if r.len() != d - 1 {
                    return invalid(format!("boundary range on '{}' needs {} entries", b.side, d - 1));
                }
            }
        }
        if !(self.solver.rel_tol > 0.0) {
            return invalid("solver rel_tol must be positive");
        }
        Ok(())
    }

    pub fn box_domain(&self) -> BoxDomain {
        BoxDomain {
            lower: self.domain.lower.clone(),
            upper: self.domain.upper.clone(),
        }
    }

    pub fn fault_perm(&self, f: &FaultConfig) -> Result<EquiDimFaultPerm, ConfigError> {
        let side = |s: &SideConfig| SideMaterial { k_t: s.k_t.clone(), k_perp: s.k_perp };
        Ok(EquiDimFaultPerm {
            k_parallel: f.k_parallel.tensor(self.dim() - 1)?,
            plus: side(&f.plus),
            minus: side(&f.minus),
        })
    }

    pub fn fault_specs(&self) -> Vec<FaultSpec> {
        self.faults
            .iter()
            .map(|f| {
                let perm = self.fault_perm(f).expect("validated configuration");
                FaultSpec {
                    id: f.id.clone(),
                    normal_axis: f.normal_axis,
                    position: f.position,
                    extent: f.extent.clone(),
                    aperture: f.aperture,
                    k_parallel: perm.k_parallel,
                    plus: perm.plus,
                    minus: perm.minus,
                }
            })
            .collect()
    }

    pub fn formulation(&self) -> Formulation {
        match self.solver.formulation {
            FormulationConfig::Local => Formulation::Local,
            FormulationConfig::Semilocal => Formulation::SemiLocal,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.solver.scheme {
            SchemeConfig::Tpfa => Scheme::Tpfa,
            SchemeConfig::Mpfa => Scheme::Mpfa,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            kind: match self.solver.kind {
                SolverKindConfig::Direct => SolverKind::Direct,
                SolverKindConfig::Iterative => SolverKind::Iterative,
            },
            rel_tol: self.solver.rel_tol,
            max_iter: self.solver.max_iter,
        }
    }

    /// Boundary condition kind and value at ambient point `x` on a side.
    pub fn boundary_at(&self, axis: usize, upper: bool, x: &Vec3) -> (BoundaryKind, f64) {
        let d = self.dim();
        let tangent: Vec<usize> = (0..d).filter(|&a| a != axis).collect();
        let tol = 1e-12
            * (0..d)
                .map(|a| self.domain.upper[a] - self.domain.lower[a])
                .fold(0.0, f64::max);
        let mut out = (BoundaryKind::Neumann, 0.0);
        for b in &self.boundary {
            if parse_side(&b.side, d) != Some((axis, upper)) {
                continue;
            }
            let inside = match &b.range {
                None => true,
                Some(r) => tangent
                    .iter()
                    .zip(r)
                    .all(|(&a, [lo, hi])| x[a] >= lo - tol && x[a] <= hi + tol),
            };
            if inside {
                let kind = match b.kind {
                    BcKind::Dirichlet => BoundaryKind::Dirichlet,
                    BcKind::Neumann => BoundaryKind::Neumann,
                };
                out = (kind, b.value);
            }
        }
        out
    }

    pub fn matrix_perm(&self, x: &Vec3) -> PermTensor {
        let d = self.dim();
        let mut k = &self.matrix.permeability;
        for r in &self.matrix.regions {
            if (0..d).all(|a| x[a] >= r.lower[a] && x[a] <= r.upper[a]) {
                k = &r.permeability;
            }
        }
        k.tensor(d).expect("validated configuration")
    }

    pub fn build_mesh(&self, level: u32) -> Result<MixedDimMesh, MeshError> {
        refine(self, level)
    }

    /// Mesh at `level` with scaled materials, interface laws and boundary
    /// data attached.
    pub fn build_problem(&self, level: u32, formulation: Formulation) -> Result<Problem, crate::Error> {
        let mesh = self.build_mesh(level)?;
        problem_on_mesh(self, mesh, formulation)
    }
}

/// Ambient axes spanned by a grid, read off its frame.
fn spanned_axes(frame_axes: &[Vec3]) -> Vec<usize> {
    frame_axes
        .iter()
        .map(|e| (0..3).find(|&a| e[a] != 0.0).expect("axis-aligned frame"))
        .collect()
}

/// Unscaled in-plane data of a lower-dimensional subdomain.
#[derive(Clone, Debug)]
struct LowerMaterial {
    aperture: f64,
    /// In-plane permeability in the grid's local basis.
    k_parallel: PermTensor,
    axes: Vec<usize>,
}

impl LowerMaterial {
    fn along(&self, ambient_axis: usize) -> f64 {
        let k = self.axes.iter().position(|&a| a == ambient_axis).expect("axis inside object");
        self.k_parallel.get(k, k)
    }
}

fn scaling_error(e: SemiLocalError) -> crate::Error {
    crate::Error::Config(ConfigError::Invalid(e.to_string()))
}

pub fn problem_on_mesh(cfg: &CaseConfig, mesh: MixedDimMesh, formulation: Formulation) -> Result<Problem, crate::Error> {
    let d = mesh.ambient_dim;
    let specs = cfg.fault_specs();
    let perms: Vec<EquiDimFaultPerm> = specs
        .iter()
        .map(|f| EquiDimFaultPerm {
            k_parallel: f.k_parallel,
            plus: f.plus.clone(),
            minus: f.minus.clone(),
        })
        .collect();

    // underlying faults of every subdomain
    let mut faults_of: Vec<Vec<usize>> = vec![Vec::new(); mesh.subdomains.len()];
    for sd in &mesh.subdomains {
        faults_of[sd.id] = match &sd.kind {
            SubdomainKind::Matrix => Vec::new(),
            SubdomainKind::Fault { index } => vec![*index],
            SubdomainKind::Intersection { parents } => {
                let mut v: Vec<usize> = parents.iter().flat_map(|&p| faults_of[p].clone()).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        };
    }

    let mut lower: Vec<Option<LowerMaterial>> = vec![None; mesh.subdomains.len()];
    for sd in &mesh.subdomains {
        let axes = spanned_axes(&sd.grid.frame.axes);
        lower[sd.id] = match &sd.kind {
            SubdomainKind::Matrix => None,
            SubdomainKind::Fault { index } => Some(LowerMaterial {
                aperture: specs[*index].aperture,
                k_parallel: specs[*index].k_parallel,
                axes,
            }),
            SubdomainKind::Intersection { .. } => {
                let fs = &faults_of[sd.id];
                let aperture = fs.iter().map(|&i| specs[i].aperture).sum::<f64>() / fs.len() as f64;
                let mut k = PermTensor::zero(axes.len());
                for (q, &a) in axes.iter().enumerate() {
                    let mean = fs
                        .iter()
                        .map(|&i| {
                            let t = specs[i].tangent_axes(d);
                            let k_idx = t.iter().position(|&x| x == a).expect("intersection inside fault");
                            specs[i].k_parallel.get(k_idx, k_idx)
                        })
                        .sum::<f64>()
                        / fs.len() as f64;
                    k.set(q, q, mean);
                }
                Some(LowerMaterial { aperture, k_parallel: k, axes })
            }
        };
    }

    let mut data = Vec::with_capacity(mesh.subdomains.len());
    for sd in &mesh.subdomains {
        let g = &sd.grid;
        let (kappa, cross_section) = match &lower[sd.id] {
            None => (None, 1.0),
            Some(m) => {
                let c = sd.codim as i32;
                (Some(m.k_parallel.scaled(m.aperture.powi(c))), m.aperture.powi(c))
            }
        };
        let perm: Vec<PermTensor> = (0..g.num_cells())
            .map(|c| match kappa {
                Some(k) => k,
                None => cfg.matrix_perm(&g.cell_centroid_ambient(c)),
            })
            .collect();
        let mut bc = BoundaryCondition::all_neumann(g.num_faces());
        let mut vals = vec![0.0; g.num_faces()];
        for (f, face) in g.faces.iter().enumerate() {
            if let BoundaryTag::Domain { axis, upper } = face.tag {
                let (kind, v) = cfg.boundary_at(axis, upper, &g.face_centroid_ambient(f));
                bc.kind[f] = kind;
                vals[f] = match kind {
                    BoundaryKind::Dirichlet => v,
                    BoundaryKind::Neumann => v * face.area * cross_section,
                };
            }
        }
        data.push(SubdomainData {
            perm,
            bc,
            bc_values: vals,
            sources: vec![0.0; g.num_cells()],
        });
    }

    let mut laws = Vec::with_capacity(mesh.interfaces.len());
    for intf in &mesh.interfaces {
        let lsd = &mesh.subdomains[intf.lower];
        let scaled = match &lsd.kind {
            SubdomainKind::Fault { index } => {
                scale_to_mixed_dim(&perms[*index], specs[*index].aperture, 1).map_err(scaling_error)?
            }
            SubdomainKind::Intersection { .. } => {
                let lm = lower[intf.lower].as_ref().expect("intersection material");
                let hsd = &mesh.subdomains[intf.higher];
                let h_axes = spanned_axes(&hsd.grid.frame.axes);
                let split = *h_axes
                    .iter()
                    .find(|a| !lm.axes.contains(a))
                    .expect("intersection is one dimension lower");
                let k_n = lower[intf.higher].as_ref().expect("higher object is a fault").along(split);
                let side = SideMaterial { k_t: vec![0.0; lm.axes.len()], k_perp: k_n };
                let perm = EquiDimFaultPerm {
                    k_parallel: lm.k_parallel,
                    plus: side.clone(),
                    minus: side,
                };
                scale_to_mixed_dim(&perm, lm.aperture, lsd.codim).map_err(scaling_error)?
            }
            SubdomainKind::Matrix => unreachable!("matrix is never a lower subdomain"),
        };
        let law: InterfaceLaw = if intf.side_sign > 0 { scaled.plus } else { scaled.minus };
        laws.push(law);
    }

    Ok(Problem {
        mesh,
        data,
        laws,
        scheme: cfg.scheme(),
        formulation,
    })
}

fn side(k_t: Vec<f64>, k_perp: f64) -> SideConfig {
    SideConfig { k_t, k_perp }
}

fn bc(side: &str, kind: BcKind, value: f64, range: Option<Vec<[f64; 2]>>) -> BoundaryConfig {
    BoundaryConfig { side: side.into(), kind, value, range }
}

impl CaseConfig {
    fn single_fault(name: &str, aperture: f64, kt_plus: f64, kt_minus: f64) -> Self {
        CaseConfig {
            name: name.into(),
            domain: DomainConfig {
                lower: vec![0.0, 0.0],
                upper: vec![1.0, 1.0],
                resolution: vec![4, 4],
            },
            matrix: MatrixConfig { permeability: Perm::Scalar(1.0), regions: Vec::new() },
            faults: vec![FaultConfig {
                id: "fault".into(),
                normal_axis: 1,
                position: 0.5,
                extent: vec![[0.0, 1.0]],
                aperture,
                k_parallel: Perm::Scalar(100.0),
                plus: side(vec![kt_plus], 100.0),
                minus: side(vec![kt_minus], 100.0),
            }],
            boundary: vec![
                bc("y-", BcKind::Dirichlet, 10.0, Some(vec![[0.25, 0.75]])),
                bc("y+", BcKind::Dirichlet, 1.0, Some(vec![[0.0, 0.25]])),
                bc("y+", BcKind::Dirichlet, 1.0, Some(vec![[0.75, 1.0]])),
            ],
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Horizontal fault with the same off-diagonal permeability on both sides.
    pub fn case1() -> Self {
        Self::single_fault("case1", 0.01, 80.0, 80.0)
    }

    /// Horizontal fault with `k_t = 50` above and `k_t = 80` below.
    pub fn case2() -> Self {
        Self::single_fault("case2", 0.02, 50.0, 80.0)
    }

    /// Five-fault network with conductive and blocking faults.
    pub fn network2d() -> Self {
        let fault = |id: &str, axis: usize, pos: f64, ext: [f64; 2], conductive: bool| {
            let (kp, kn, kt) = if conductive { (100.0, 100.0, 10.0) } else { (0.01, 0.01, 0.001) };
            FaultConfig {
                id: id.into(),
                normal_axis: axis,
                position: pos,
                extent: vec![ext],
                aperture: 0.01,
                k_parallel: Perm::Scalar(kp),
                plus: side(vec![kt], kn),
                minus: side(vec![kt], kn),
            }
        };
        CaseConfig {
            name: "network2d".into(),
            domain: DomainConfig {
                lower: vec![0.0, 0.0],
                upper: vec![1.0, 1.0],
                resolution: vec![8, 8],
            },
            matrix: MatrixConfig { permeability: Perm::Scalar(1.0), regions: Vec::new() },
            faults: vec![
                fault("F1", 1, 0.5, [0.0, 1.0], true),
                fault("F2", 0, 0.5, [0.5, 1.0], true),
                fault("F3", 1, 0.75, [0.25, 0.75], false),
                fault("F4", 0, 0.25, [0.0, 0.5], false),
                fault("F5", 1, 0.25, [0.25, 1.0], false),
            ],
            boundary: vec![
                bc("y+", BcKind::Dirichlet, 1.0, None),
                bc("y-", BcKind::Dirichlet, 0.0, None),
            ],
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Unit cube cut by the three mid-planes.
    pub fn cube3d() -> Self {
        let full = vec![[0.0, 1.0], [0.0, 1.0]];
        let fault = |id: &str, axis: usize| FaultConfig {
            id: id.into(),
            normal_axis: axis,
            position: 0.5,
            extent: full.clone(),
            aperture: 1e-4,
            k_parallel: Perm::Scalar(1e4),
            plus: side(vec![1e3, 1e3], 1e4),
            minus: side(vec![1e3, 1e3], 1e4),
        };
        let low = Some(vec![[0.0, 0.25], [0.0, 0.25]]);
        let high = Some(vec![[0.875, 1.0], [0.875, 1.0]]);
        CaseConfig {
            name: "cube3d".into(),
            domain: DomainConfig {
                lower: vec![0.0; 3],
                upper: vec![1.0; 3],
                resolution: vec![8, 8, 8],
            },
            matrix: MatrixConfig {
                permeability: Perm::Scalar(1.0),
                regions: vec![RegionConfig {
                    lower: vec![0.5, 0.0, 0.0],
                    upper: vec![1.0, 0.5, 1.0],
                    permeability: Perm::Scalar(0.1),
                }],
            },
            faults: vec![fault("X", 0), fault("Y", 1), fault("Z", 2)],
            boundary: vec![
                bc("x-", BcKind::Neumann, -1.0, low.clone()),
                bc("y-", BcKind::Neumann, -1.0, low.clone()),
                bc("z-", BcKind::Neumann, -1.0, low),
                bc("x+", BcKind::Dirichlet, 1.0, high.clone()),
                bc("y+", BcKind::Dirichlet, 1.0, high.clone()),
                bc("z+", BcKind::Dirichlet, 1.0, high),
            ],
            solver: SolverConfig {
                scheme: SchemeConfig::Mpfa,
                ..SolverConfig::default()
            },
            output: OutputConfig::default(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "case1" => Some(Self::case1()),
            "case2" => Some(Self::case2()),
            "network2d" => Some(Self::network2d()),
            "cube3d" => Some(Self::cube3d()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_cases_round_trip() {
        for cfg in [CaseConfig::case1(), CaseConfig::case2(), CaseConfig::network2d(), CaseConfig::cube3d()] {
            cfg.validate().unwrap();
            let text = cfg.to_toml();
            assert_eq!(CaseConfig::parse(&text).unwrap(), cfg, "{}", cfg.name);
        }
    }

    #[test]
    fn empty_fault_list_is_valid() {
        let text = r#"
name = "plain"
[domain]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
resolution = [3, 3]
[matrix]
permeability = 1.0
"#;
        let cfg = CaseConfig::parse(text).unwrap();
        assert!(cfg.faults.is_empty());
        assert_eq!(cfg.solver, SolverConfig::default());
    }

    #[test]
    fn negative_aperture_is_rejected() {
        let text = CaseConfig::case1().to_toml().replace("aperture = 0.01", "aperture = -0.01");
        assert!(matches!(CaseConfig::parse(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = "name = \"x\"\nbogus = 1\n";
        match CaseConfig::parse(text) {
            Err(ConfigError::Parse { line, msg }) => {
                assert_eq!(line, 2, "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_key_is_a_parse_error() {
        let text = "name = \"x\"\n[domain]\nlower = [0.0, 0.0]\nupper = [1.0, 1.0]\n";
        assert!(matches!(CaseConfig::parse(text), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn partial_boundary_ranges() {
        let cfg = CaseConfig::case1();
        assert_eq!(cfg.boundary_at(1, false, &[0.5, 0.0, 0.0]), (BoundaryKind::Dirichlet, 10.0));
        assert_eq!(cfg.boundary_at(1, false, &[0.1, 0.0, 0.0]), (BoundaryKind::Neumann, 0.0));
        assert_eq!(cfg.boundary_at(1, true, &[0.9, 1.0, 0.0]), (BoundaryKind::Dirichlet, 1.0));
        assert_eq!(cfg.boundary_at(0, true, &[1.0, 0.5, 0.0]), (BoundaryKind::Neumann, 0.0));
    }

    #[test]
    fn case1_problem_has_scaled_materials() {
        let p = CaseConfig::case1().build_problem(0, Formulation::SemiLocal).unwrap();
        assert_eq!(p.mesh.subdomains[1].grid.num_cells(), 4);
        assert!((p.data[1].perm[0].get(0, 0) - 1.0).abs() < 1e-14);
        for law in &p.laws {
            assert!((law.kappa_perp - 20000.0).abs() < 1e-9);
            assert_eq!(law.kappa_t[0], 80.0);
        }
    }

    #[test]
    fn network_intersections_use_local_laws() {
        let p = CaseConfig::network2d().build_problem(0, Formulation::SemiLocal).unwrap();
        let points: Vec<usize> =
            p.mesh.subdomains.iter().filter(|s| s.grid.dim == 0).map(|s| s.id).collect();
        assert_eq!(points.len(), 4);
        for (j, intf) in p.mesh.interfaces.iter().enumerate() {
            if points.contains(&intf.lower) {
                assert!(!p.laws[j].has_tangential());
                assert!(p.laws[j].kappa_perp > 0.0);
            }
        }
    }
}

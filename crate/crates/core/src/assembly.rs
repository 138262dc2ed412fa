//! Global block system over all subdomain pressures and mortar fluxes.
//!
//! Unknowns are ordered `[p of subdomain 0, p of subdomain 1, ..., Λ of
//! interface 0, Λ of interface 1, ...]`. Every intermediate quantity of a
//! subdomain (boundary data, vector source, face flux, trace, gradient) is an
//! affine function of the unknown vector and is represented as a sparse
//! matrix plus a constant.

use std::time::Instant;

use faer::prelude::*;
use faer::Mat;
use thiserror::Error;

use crate::discretize::{discretize, gradient_reconstruction, BoundaryCondition, BoundaryKind, DiscreteOperator,
                        DiscretizationError, Scheme};
use crate::geometry::PermTensor;
use crate::mesh::{BoundaryTag, MixedDimMesh};
use crate::semilocal::{check_wellposed, gradient_coupling, schur_effective_tensor, vector_source_from_mortar,
                       InterfaceLaw, SemiLocalError};
use crate::sparse::{CsrMatrix, Ilu0};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("no Dirichlet face anywhere: pressure is determined only up to a constant")]
    NoDirichlet,
    #[error("subdomain {subdomain} fails the well-posedness check (side margin {side_margin:e}, effective eigenvalue {eigenvalue:e})")]
    IllPosed { subdomain: usize, side_margin: f64, eigenvalue: f64 },
    #[error("problem data does not match the mesh: {0}")]
    Shape(String),
    #[error("subdomain {subdomain}: {source}")]
    Discretization {
        subdomain: usize,
        #[source]
        source: DiscretizationError,
    },
    #[error("subdomain {subdomain}: {source}")]
    SemiLocal {
        subdomain: usize,
        #[source]
        source: SemiLocalError,
    },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("solution contains non-finite values")]
    NonFinite,
    #[error("iterative solver stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64, history: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formulation {
    /// Exchange flux depends on the pressure jump only (`κ_t` ignored).
    Local,
    SemiLocal,
}

impl Formulation {
    pub fn label(&self) -> &'static str {
        match self {
            Formulation::Local => "local",
            Formulation::SemiLocal => "semilocal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Direct,
    Iterative,
}

impl SolverKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Some(SolverKind::Direct),
            "iterative" => Some(SolverKind::Iterative),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual target of the iterative solver.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { kind: SolverKind::Direct, rel_tol: 1e-10, max_iter: 20_000 }
    }
}

/// Material, boundary and source data of one subdomain.
#[derive(Clone, Debug)]
pub struct SubdomainData {
    /// Scaled in-plane permeability per cell (before any Schur correction).
    pub perm: Vec<PermTensor>,
    /// Boundary kinds; coupled faces are treated as Neumann regardless.
    pub bc: BoundaryCondition,
    /// Dirichlet pressure or outward integrated Neumann flux per face.
    pub bc_values: Vec<f64>,
    /// Integrated source per cell, positive for injection.
    pub sources: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub mesh: MixedDimMesh,
    pub data: Vec<SubdomainData>,
    /// One law per interface, uniform over its mortar cells.
    pub laws: Vec<InterfaceLaw>,
    pub scheme: Scheme,
    pub formulation: Formulation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unknown {
    Cell { subdomain: usize, cell: usize },
    Mortar { interface: usize, cell: usize },
}

/// Affine map `M x + c` from the global unknowns.
#[derive(Clone, Debug)]
struct Affine {
    m: CsrMatrix,
    c: Vec<f64>,
}

impl Affine {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.m.matvec(x);
        for (a, b) in y.iter_mut().zip(&self.c) {
            *a += b;
        }
        y
    }
}

#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub index: Vec<Unknown>,
    pub cell_offsets: Vec<usize>,
    pub mortar_offsets: Vec<usize>,
    pub operators: Vec<DiscreteOperator>,
    /// Installed lower-dimensional tensors (`A_Ω` or `κ_∥`) per subdomain.
    pub effective: Vec<Vec<PermTensor>>,
    face_flux: Vec<Affine>,
    mesh: MixedDimMesh,
    sources: Vec<Vec<f64>>,
}

impl GlobalSystem {
    pub fn num_unknowns(&self) -> usize {
        self.rhs.len()
    }

    pub fn mesh(&self) -> &MixedDimMesh {
        &self.mesh
    }
}

#[derive(Clone, Debug)]
pub struct MdSolution {
    pub pressure: Vec<Vec<f64>>,
    pub mortar_flux: Vec<Vec<f64>>,
    /// Face fluxes per subdomain, oriented along face normals.
    pub face_flux: Vec<Vec<f64>>,
    /// `|A x - b| / |b|` of the accepted solution.
    pub relative_residual: f64,
    /// Iterative residual history (empty for the direct solver).
    pub residual_history: Vec<f64>,
    pub solve_seconds: f64,
}

fn check_shapes(p: &Problem) -> Result<(), AssemblyError> {
    let mesh = &p.mesh;
    if p.data.len() != mesh.subdomains.len() || p.laws.len() != mesh.interfaces.len() {
        return Err(AssemblyError::Shape("subdomain or interface count".into()));
    }
    for (s, (sd, d)) in mesh.subdomains.iter().zip(&p.data).enumerate() {
        let (nc, nf) = (sd.grid.num_cells(), sd.grid.num_faces());
        if d.perm.len() != nc || d.sources.len() != nc || d.bc.kind.len() != nf || d.bc_values.len() != nf {
            return Err(AssemblyError::Shape(format!("data of subdomain {s}")));
        }
    }
    for (j, (intf, law)) in mesh.interfaces.iter().zip(&p.laws).enumerate() {
        if law.side_sign != intf.side_sign {
            return Err(AssemblyError::Shape(format!("side sign of interface {j}")));
        }
    }
    Ok(())
}

pub fn assemble_global(problem: &Problem) -> Result<GlobalSystem, AssemblyError> {
    check_shapes(problem)?;
    let mesh = &problem.mesh;
    let ns = mesh.subdomains.len();
    let semi = problem.formulation == Formulation::SemiLocal;

    let has_dirichlet = mesh.subdomains.iter().zip(&problem.data).any(|(sd, d)| {
        sd.grid
            .faces
            .iter()
            .enumerate()
            .any(|(f, face)| face.is_boundary() && face.tag != BoundaryTag::Coupled && d.bc.kind[f] == BoundaryKind::Dirichlet)
    });
    if !has_dirichlet {
        return Err(AssemblyError::NoDirichlet);
    }

    let mut cell_offsets = Vec::with_capacity(ns + 1);
    let mut index = Vec::new();
    for (s, sd) in mesh.subdomains.iter().enumerate() {
        cell_offsets.push(index.len());
        index.extend((0..sd.grid.num_cells()).map(|cell| Unknown::Cell { subdomain: s, cell }));
    }
    let mut mortar_offsets = Vec::with_capacity(mesh.interfaces.len());
    for (j, intf) in mesh.interfaces.iter().enumerate() {
        mortar_offsets.push(index.len());
        index.extend((0..intf.num_cells()).map(|cell| Unknown::Mortar { interface: j, cell }));
    }
    let n = index.len();

    // mortar cells attached to each lower cell
    let mut cell_mortars: Vec<Vec<Vec<(usize, usize)>>> =
        mesh.subdomains.iter().map(|sd| vec![Vec::new(); sd.grid.num_cells()]).collect();
    for (j, intf) in mesh.interfaces.iter().enumerate() {
        for (m, &c) in intf.lower_cells.iter().enumerate() {
            cell_mortars[intf.lower][c].push((j, m));
        }
    }

    let mut effective = Vec::with_capacity(ns);
    for (s, sd) in mesh.subdomains.iter().enumerate() {
        let data = &problem.data[s];
        let mut cells = Vec::with_capacity(sd.grid.num_cells());
        for c in 0..sd.grid.num_cells() {
            let laws: Vec<&InterfaceLaw> = cell_mortars[s][c].iter().map(|&(j, _)| &problem.laws[j]).collect();
            let kappa = &data.perm[c];
            if laws.is_empty() || sd.grid.dim == 0 {
                cells.push(*kappa);
                continue;
            }
            if semi {
                let w = check_wellposed(kappa, &laws);
                if !w.passed() {
                    return Err(AssemblyError::IllPosed {
                        subdomain: s,
                        side_margin: w.side_margin,
                        eigenvalue: w.effective_min_eigenvalue,
                    });
                }
                let a = schur_effective_tensor(kappa, &laws)
                    .map_err(|source| AssemblyError::SemiLocal { subdomain: s, source })?;
                cells.push(a);
            } else {
                if let Some(l) = laws.iter().find(|l| !(l.kappa_perp > 0.0)) {
                    return Err(AssemblyError::SemiLocal {
                        subdomain: s,
                        source: SemiLocalError::NormalPerm(l.kappa_perp),
                    });
                }
                cells.push(*kappa);
            }
        }
        effective.push(cells);
    }

    let mut operators = Vec::with_capacity(ns);
    let mut face_flux = Vec::with_capacity(ns);
    let mut traces = Vec::with_capacity(ns);
    let mut gradients = Vec::with_capacity(ns);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0; n];

    for (s, sd) in mesh.subdomains.iter().enumerate() {
        let grid = &sd.grid;
        let data = &problem.data[s];
        let (nc, nf, d) = (grid.num_cells(), grid.num_faces(), grid.dim);
        let mut bc = data.bc.clone();
        let face_mortar = mesh.face_mortar_map(s);
        for (f, fm) in face_mortar.iter().enumerate() {
            if fm.is_some() {
                bc.kind[f] = BoundaryKind::Neumann;
            }
        }
        let op = discretize(grid, &effective[s], &bc, problem.scheme)
            .map_err(|source| AssemblyError::Discretization { subdomain: s, source })?;

        let off = cell_offsets[s];
        let p_sel = CsrMatrix::from_triplets(nc, n, &(0..nc).map(|c| (c, off + c, 1.0)).collect::<Vec<_>>());
        let mut g_trip = Vec::new();
        let mut g0 = vec![0.0; nf];
        for (f, face) in grid.faces.iter().enumerate() {
            if !face.is_boundary() {
                continue;
            }
            match face_mortar[f] {
                Some((j, m)) => g_trip.push((f, mortar_offsets[j] + m, 1.0)),
                None => g0[f] = data.bc_values[f],
            }
        }
        let g_sel = CsrMatrix::from_triplets(nf, n, &g_trip);
        let mut x_trip = Vec::new();
        if semi && d > 0 {
            for c in 0..nc {
                for &(j, m) in &cell_mortars[s][c] {
                    let law = &problem.laws[j];
                    let measure = mesh.interfaces[j].measures[m];
                    let v = vector_source_from_mortar(&effective[s][c], law, measure)
                        .map_err(|source| AssemblyError::SemiLocal { subdomain: s, source })?;
                    for (k, &vk) in v.iter().enumerate().take(d) {
                        if vk != 0.0 {
                            x_trip.push((c * d + k, mortar_offsets[j] + m, vk));
                        }
                    }
                }
            }
        }
        let x_sel = CsrMatrix::from_triplets(d * nc, n, &x_trip);

        let flux_m = op
            .flux
            .matmul(&p_sel)
            .add_scaled(&op.bound_flux.matmul(&g_sel), 1.0)
            .add_scaled(&op.vector_source.matmul(&x_sel), 1.0);
        let flux = Affine { m: flux_m, c: op.bound_flux.matvec(&g0) };
        let trace_m = op
            .bound_pressure_cell
            .matmul(&p_sel)
            .add_scaled(&op.bound_pressure_face.matmul(&g_sel), 1.0)
            .add_scaled(&op.bound_pressure_vector_source.matmul(&x_sel), 1.0);
        let trace = Affine { m: trace_m, c: op.bound_pressure_face.matvec(&g0) };

        // cell balance: div F - Σ Λ_in = Q
        let div_m = op.div.matmul(&flux.m);
        let div_c = op.div.matvec(&flux.c);
        for (r, c, v) in div_m.triplets() {
            triplets.push((off + r, c, v));
        }
        for c in 0..nc {
            rhs[off + c] = data.sources[c] - div_c[c];
            for &(j, m) in &cell_mortars[s][c] {
                triplets.push((off + c, mortar_offsets[j] + m, -1.0));
            }
        }

        let gradient = if semi && d > 0 && cell_mortars[s].iter().any(|v| !v.is_empty()) {
            let r = gradient_reconstruction(grid, &effective[s])
                .map_err(|source| AssemblyError::Discretization { subdomain: s, source })?;
            Some(Affine {
                m: r.matmul(&flux.m).add_scaled(&x_sel, -1.0),
                c: r.matvec(&flux.c),
            })
        } else {
            None
        };

        operators.push(op);
        face_flux.push(flux);
        traces.push(trace);
        gradients.push(gradient);
    }

    for (j, intf) in mesh.interfaces.iter().enumerate() {
        let law = &problem.laws[j];
        let (h, l) = (intf.higher, intf.lower);
        let d = mesh.subdomains[l].grid.dim;
        let w = gradient_coupling(law);
        for m in 0..intf.num_cells() {
            let row = mortar_offsets[j] + m;
            let (f, c) = (intf.higher_faces[m], intf.lower_cells[m]);
            triplets.push((row, row, 1.0 / (law.kappa_perp * intf.measures[m])));
            triplets.push((row, cell_offsets[l] + c, 1.0));
            for (col, v) in traces[h].m.row(f) {
                triplets.push((row, col, -v));
            }
            let mut b = traces[h].c[f];
            if semi && law.has_tangential() {
                if let Some(grad) = &gradients[l] {
                    for (k, &wk) in w.iter().enumerate().take(d) {
                        if wk == 0.0 {
                            continue;
                        }
                        for (col, v) in grad.m.row(c * d + k) {
                            triplets.push((row, col, wk * v));
                        }
                        b -= wk * grad.c[c * d + k];
                    }
                }
            }
            rhs[row] = b;
        }
    }

    Ok(GlobalSystem {
        matrix: CsrMatrix::from_triplets(n, n, &triplets),
        rhs,
        index,
        cell_offsets,
        mortar_offsets,
        operators,
        effective,
        face_flux,
        mesh: mesh.clone(),
        sources: problem.data.iter().map(|d| d.sources.clone()).collect(),
    })
}

fn residual_norm(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    let lu = a
        .to_faer()
        .sp_lu()
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let out: Vec<f64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    Ok(out)
}

/// BiCGSTAB preconditioned with ILU(0), falling back to Jacobi when the
/// incomplete factorization breaks down.
pub(crate) fn solve_bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    order: Vec<usize>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
    let n = b.len();
    let ilu = Ilu0::with_order(a, order).ok();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> {
        match &ilu {
            Some(f) => f.apply(v),
            None => v.iter().zip(&inv_diag).map(|(x, d)| x * d).collect(),
        }
    };
    let dotp = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(a, b)| a * b).sum() };
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut history = vec![1.0];
    for it in 0..opts.max_iter {
        let rho_new = dotp(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precond(&p);
        v = a.matvec(&y);
        let denom = dotp(&r_hat, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm2(&s) / bnorm <= opts.rel_tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            history.push(norm2(&s) / bnorm);
            return Ok((x, history));
        }
        let z = precond(&s);
        let t = a.matvec(&z);
        let tt = dotp(&t, &t);
        omega = if tt > 0.0 { dotp(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= opts.rel_tol {
            // confirm against the true residual
            let true_rel = residual_norm(a, &x, b) / bnorm;
            if true_rel <= opts.rel_tol * 10.0 {
                return Ok((x, history));
            }
            r = b.iter().zip(a.matvec(&x)).map(|(bi, axi)| bi - axi).collect();
        }
        if !rel.is_finite() {
            return Err(SolveError::NotConverged { iterations: it + 1, residual: rel, history });
        }
    }
    let residual = *history.last().unwrap();
    Err(SolveError::NotConverged { iterations: history.len() - 1, residual, history })
}

/// Subdomains from the highest dimension down, each preceded by the mortars
/// that feed it. Eliminating a mortar before its lower cell turns the
/// pure-Neumann block of that cell into a definite one.
fn elimination_order(system: &GlobalSystem) -> Vec<usize> {
    let mesh = &system.mesh;
    let mut order = Vec::with_capacity(system.num_unknowns());
    let mut sds: Vec<usize> = (0..mesh.subdomains.len()).collect();
    sds.sort_by_key(|&s| std::cmp::Reverse(mesh.subdomains[s].grid.dim));
    for s in sds {
        for (j, intf) in mesh.interfaces.iter().enumerate() {
            if intf.lower == s {
                order.extend(system.mortar_offsets[j]..system.mortar_offsets[j] + intf.num_cells());
            }
        }
        let start = system.cell_offsets[s];
        order.extend(start..start + mesh.subdomains[s].grid.num_cells());
    }
    order
}

pub fn solve(system: &GlobalSystem, opts: &SolverOptions) -> Result<MdSolution, SolveError> {
    let start = Instant::now();
    let (x, history) = match opts.kind {
        SolverKind::Direct => (solve_direct(&system.matrix, &system.rhs)?, Vec::new()),
        SolverKind::Iterative => solve_bicgstab(&system.matrix, &system.rhs, elimination_order(system), opts)?,
    };
    let bnorm = norm2(&system.rhs).max(f64::MIN_POSITIVE);
    let relative_residual = residual_norm(&system.matrix, &x, &system.rhs) / bnorm;
    let mesh = &system.mesh;
    let pressure = mesh
        .subdomains
        .iter()
        .enumerate()
        .map(|(s, sd)| x[system.cell_offsets[s]..system.cell_offsets[s] + sd.grid.num_cells()].to_vec())
        .collect();
    let mortar_flux = mesh
        .interfaces
        .iter()
        .enumerate()
        .map(|(j, m)| x[system.mortar_offsets[j]..system.mortar_offsets[j] + m.num_cells()].to_vec())
        .collect();
    let face_flux = system.face_flux.iter().map(|a| a.eval(&x)).collect();
    Ok(MdSolution {
        pressure,
        mortar_flux,
        face_flux,
        relative_residual,
        residual_history: history,
        solve_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubdomainBalance {
    pub subdomain: usize,
    pub dim: usize,
    /// Largest per-cell residual divided by the global flux scale.
    pub max_cell_residual: f64,
    /// Net outward flux through the outer domain boundary.
    pub boundary_outflow: f64,
    /// Net flux received from higher-dimensional neighbours.
    pub mortar_inflow: f64,
    pub source: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassBalance {
    pub subdomains: Vec<SubdomainBalance>,
    pub max_cell_residual: f64,
    pub inflow: f64,
    pub outflow: f64,
    pub total_source: f64,
    /// `|outflow - inflow - sources|` divided by the flux scale.
    pub global_imbalance: f64,
    /// Largest `|F_f - Λ|` over coupled faces.
    pub continuity_defect: f64,
    pub flux_scale: f64,
}

pub fn mass_balance_report(system: &GlobalSystem, sol: &MdSolution) -> MassBalance {
    let mesh = &system.mesh;
    let mut scale = 0.0_f64;
    for v in sol.face_flux.iter().chain(&sol.mortar_flux) {
        scale = v.iter().fold(scale, |a, x| a.max(x.abs()));
    }
    for v in &system.sources {
        scale = v.iter().fold(scale, |a, x| a.max(x.abs()));
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    let mut mortar_in: Vec<Vec<f64>> = mesh.subdomains.iter().map(|sd| vec![0.0; sd.grid.num_cells()]).collect();
    let mut continuity = 0.0_f64;
    for (j, intf) in mesh.interfaces.iter().enumerate() {
        for m in 0..intf.num_cells() {
            let lam = sol.mortar_flux[j][m];
            mortar_in[intf.lower][intf.lower_cells[m]] += lam;
            let ff = sol.face_flux[intf.higher][intf.higher_faces[m]];
            continuity = continuity.max((ff - lam).abs());
        }
    }
    let (mut inflow, mut outflow, mut total_source) = (0.0, 0.0, 0.0);
    let mut subdomains = Vec::new();
    for (s, sd) in mesh.subdomains.iter().enumerate() {
        let g = &sd.grid;
        let flux = &sol.face_flux[s];
        let div = system.operators[s].div.matvec(flux);
        let mut worst = 0.0_f64;
        for c in 0..g.num_cells() {
            let r = div[c] - mortar_in[s][c] - system.sources[s][c];
            worst = worst.max(r.abs() / scale);
        }
        let mut out = 0.0;
        for (f, face) in g.faces.iter().enumerate() {
            if matches!(face.tag, BoundaryTag::Domain { .. } | BoundaryTag::Tip) {
                out += flux[f];
                if flux[f] > 0.0 {
                    outflow += flux[f];
                } else {
                    inflow -= flux[f];
                }
            }
        }
        let src: f64 = system.sources[s].iter().sum();
        total_source += src;
        subdomains.push(SubdomainBalance {
            subdomain: s,
            dim: g.dim,
            max_cell_residual: worst,
            boundary_outflow: out,
            mortar_inflow: mortar_in[s].iter().sum(),
            source: src,
        });
    }
    let max_cell_residual = subdomains.iter().fold(0.0_f64, |a, b| a.max(b.max_cell_residual));
    MassBalance {
        subdomains,
        max_cell_residual,
        inflow,
        outflow,
        total_source,
        global_imbalance: (outflow - inflow - total_source).abs() / scale,
        continuity_defect: continuity,
        flux_scale: scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian_md_mesh, BoxDomain, FaultSpec, SideMaterial};

    /// Horizontal fault at y = 1/2 on an `n x n` unit square, head 1 at the
    /// bottom and 0 at the top, no flow on the sides.
    fn layered(n: usize, kt: f64, formulation: Formulation) -> Problem {
        let side = SideMaterial { k_t: vec![kt], k_perp: 1.0 };
        let fault = FaultSpec {
            id: "f".into(),
            normal_axis: 1,
            position: 0.5,
            extent: vec![[0.0, 1.0]],
            aperture: 0.1,
            k_parallel: PermTensor::isotropic(1, 1.0),
            plus: side.clone(),
            minus: side,
        };
        let mesh = build_cartesian_md_mesh(&BoxDomain::unit(2), &[n, n], &[fault]).unwrap();
        let mut data = Vec::new();
        for sd in &mesh.subdomains {
            let g = &sd.grid;
            let mut bc = BoundaryCondition::all_neumann(g.num_faces());
            let mut vals = vec![0.0; g.num_faces()];
            for (f, face) in g.faces.iter().enumerate() {
                if let BoundaryTag::Domain { axis: 1, upper } = face.tag {
                    bc.kind[f] = BoundaryKind::Dirichlet;
                    vals[f] = if upper { 0.0 } else { 1.0 };
                }
            }
            let k = if g.dim == 2 { 1.0 } else { 0.1 };
            data.push(SubdomainData {
                perm: vec![PermTensor::isotropic(g.dim, k); g.num_cells()],
                bc,
                bc_values: vals,
                sources: vec![0.0; g.num_cells()],
            });
        }
        let laws = mesh
            .interfaces
            .iter()
            .map(|m| InterfaceLaw { kappa_perp: 20.0, kappa_t: [kt, 0.0, 0.0], side_sign: m.side_sign })
            .collect();
        Problem { mesh, data, laws, scheme: Scheme::Mpfa, formulation }
    }

    #[test]
    fn series_resistance_flux() {
        // resistances: matrix 1/2 + 1/2, fault 2 * 1/20
        let p = layered(4, 0.0, Formulation::SemiLocal);
        let sys = assemble_global(&p).unwrap();
        let sol = solve(&sys, &SolverOptions::default()).unwrap();
        let expected = 1.0 / (1.0 + 0.1);
        for (j, intf) in p.mesh.interfaces.iter().enumerate() {
            for &lam in &sol.mortar_flux[j] {
                let want = if intf.side_sign < 0 { expected } else { -expected } * 0.25;
                assert!((lam - want).abs() < 1e-12, "{lam} vs {want}");
            }
        }
        let mb = mass_balance_report(&sys, &sol);
        assert!(mb.max_cell_residual < 1e-12);
        assert!(mb.global_imbalance < 1e-12);
        assert!(mb.continuity_defect < 1e-12);
    }

    #[test]
    fn unknown_count() {
        let p = layered(4, 0.5, Formulation::SemiLocal);
        let sys = assemble_global(&p).unwrap();
        assert_eq!(sys.num_unknowns(), 16 + 4 + 2 * 4);
        assert_eq!(sys.index[20], Unknown::Mortar { interface: 0, cell: 0 });
    }

    #[test]
    fn zero_coupling_matches_local_matrix() {
        let a = assemble_global(&layered(4, 0.0, Formulation::SemiLocal)).unwrap();
        let b = assemble_global(&layered(4, 0.0, Formulation::Local)).unwrap();
        assert!(a.matrix.max_abs_diff(&b.matrix) <= 1e-14);
        let c = assemble_global(&layered(4, 0.5, Formulation::SemiLocal)).unwrap();
        assert!(a.matrix.max_abs_diff(&c.matrix) > 1e-6);
    }

    #[test]
    fn missing_dirichlet_is_rejected() {
        let mut p = layered(2, 0.0, Formulation::Local);
        for d in &mut p.data {
            d.bc = BoundaryCondition::all_neumann(d.bc.kind.len());
        }
        assert!(matches!(assemble_global(&p), Err(AssemblyError::NoDirichlet)));
    }

    #[test]
    fn iterative_solver_agrees_with_direct() {
        let sys = assemble_global(&layered(8, 0.3, Formulation::SemiLocal)).unwrap();
        let a = solve(&sys, &SolverOptions::default()).unwrap();
        let opts = SolverOptions { kind: SolverKind::Iterative, ..Default::default() };
        let b = solve(&sys, &opts).unwrap();
        assert!(!b.residual_history.is_empty());
        for (pa, pb) in a.pressure.iter().flatten().zip(b.pressure.iter().flatten()) {
            assert!((pa - pb).abs() < 1e-7);
        }
    }

    #[test]
    fn iterative_failure_reports_history() {
        let sys = assemble_global(&layered(8, 0.3, Formulation::SemiLocal)).unwrap();
        let opts = SolverOptions { kind: SolverKind::Iterative, rel_tol: 1e-14, max_iter: 3 };
        match solve(&sys, &opts) {
            Err(SolveError::NotConverged { history, .. }) => assert_eq!(history.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}

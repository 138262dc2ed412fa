//! Cell-centred finite volumes on a single [`CellGrid`].
//!
//! The integrated face flux, oriented along the face normal, is linear in
//! cell pressures, boundary data and a cell-wise vector source `chi`:
//!
//! `F = flux p + bound_flux g + vector_source chi`
//!
//! for the flux law `q = -K (grad p + chi)`. Boundary data `g` holds the
//! pressure on Dirichlet faces and the outward integrated flux on Neumann
//! faces. The pressure trace on boundary faces has the same structure.

use nalgebra::{DMatrix, Matrix2, Vector2};
use thiserror::Error;

use crate::geometry::{dot, scale, sub, PermTensor, Vec3};
use crate::mesh::CellGrid;
use crate::sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum DiscretizationError {
    #[error("cell {cell}: permeability has dimension {found}, grid has {expected}")]
    PermDimension { cell: usize, found: usize, expected: usize },
    #[error("cell {cell}: permeability is not symmetric positive definite")]
    NotPositiveDefinite { cell: usize },
    #[error("singular interaction region around node {node}")]
    SingularInteraction { node: usize },
    #[error("cell {cell}: gradient reconstruction is singular")]
    SingularReconstruction { cell: usize },
    #[error("expected {expected} entries, got {found}")]
    Length { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Two-point flux approximation.
    Tpfa,
    /// MPFA-O on two-dimensional grids; other dimensions fall back to TPFA.
    Mpfa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Per-face boundary types; entries for interior faces are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    pub kind: Vec<BoundaryKind>,
}

impl BoundaryCondition {
    /// No-flow on every boundary face.
    pub fn all_neumann(num_faces: usize) -> Self {
        Self { kind: vec![BoundaryKind::Neumann; num_faces] }
    }

    pub fn all_dirichlet(num_faces: usize) -> Self {
        Self { kind: vec![BoundaryKind::Dirichlet; num_faces] }
    }

    pub fn is_dirichlet(&self, grid: &CellGrid, face: usize) -> bool {
        grid.faces[face].is_boundary() && self.kind[face] == BoundaryKind::Dirichlet
    }

    pub fn is_neumann(&self, grid: &CellGrid, face: usize) -> bool {
        grid.faces[face].is_boundary() && self.kind[face] == BoundaryKind::Neumann
    }
}

/// Discrete flux and trace operators of one grid.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub dim: usize,
    /// `nf x nc`
    pub flux: CsrMatrix,
    /// `nf x nf`
    pub bound_flux: CsrMatrix,
    /// `nf x (dim nc)`, source component `k` of cell `c` at column `c dim + k`.
    pub vector_source: CsrMatrix,
    /// Boundary pressure trace, `nf x nc`; rows of interior faces are empty.
    pub bound_pressure_cell: CsrMatrix,
    /// `nf x nf`
    pub bound_pressure_face: CsrMatrix,
    /// `nf x (dim nc)`
    pub bound_pressure_vector_source: CsrMatrix,
    /// Signed face-to-cell sum, `nc x nf`.
    pub div: CsrMatrix,
}

impl DiscreteOperator {
    pub fn face_flux(&self, p: &[f64], g: &[f64], chi: &[f64]) -> Vec<f64> {
        combine(&self.flux, &self.bound_flux, &self.vector_source, p, g, chi)
    }

    pub fn trace(&self, p: &[f64], g: &[f64], chi: &[f64]) -> Vec<f64> {
        combine(
            &self.bound_pressure_cell,
            &self.bound_pressure_face,
            &self.bound_pressure_vector_source,
            p,
            g,
            chi,
        )
    }
}

fn combine(a: &CsrMatrix, b: &CsrMatrix, c: &CsrMatrix, p: &[f64], g: &[f64], chi: &[f64]) -> Vec<f64> {
    let mut out = a.matvec(p);
    for (o, v) in out.iter_mut().zip(b.matvec(g)) {
        *o += v;
    }
    if c.ncols() > 0 {
        for (o, v) in out.iter_mut().zip(c.matvec(chi)) {
            *o += v;
        }
    }
    out
}

fn check_perm(grid: &CellGrid, perm: &[PermTensor]) -> Result<(), DiscretizationError> {
    if perm.len() != grid.num_cells() {
        return Err(DiscretizationError::Length {
            expected: grid.num_cells(),
            found: perm.len(),
        });
    }
    for (cell, k) in perm.iter().enumerate() {
        if k.dim() != grid.dim {
            return Err(DiscretizationError::PermDimension {
                cell,
                found: k.dim(),
                expected: grid.dim,
            });
        }
        if grid.dim > 0 && !k.is_positive_definite() {
            return Err(DiscretizationError::NotPositiveDefinite { cell });
        }
    }
    Ok(())
}

fn divergence(grid: &CellGrid) -> CsrMatrix {
    let mut t = Vec::new();
    for (c, faces) in grid.cell_faces.iter().enumerate() {
        for &f in faces {
            t.push((c, f, grid.face_sign(c, f)));
        }
    }
    CsrMatrix::from_triplets(grid.num_cells(), grid.num_faces(), &t)
}

pub fn discretize(
    grid: &CellGrid,
    perm: &[PermTensor],
    bc: &BoundaryCondition,
    scheme: Scheme,
) -> Result<DiscreteOperator, DiscretizationError> {
    check_perm(grid, perm)?;
    if bc.kind.len() != grid.num_faces() {
        return Err(DiscretizationError::Length {
            expected: grid.num_faces(),
            found: bc.kind.len(),
        });
    }
    match scheme {
        Scheme::Mpfa if grid.dim == 2 => mpfa(grid, perm, bc),
        _ => Ok(tpfa(grid, perm, bc)),
    }
}

#[derive(Default)]
struct Triplets {
    flux: Vec<(usize, usize, f64)>,
    bflux: Vec<(usize, usize, f64)>,
    vsrc: Vec<(usize, usize, f64)>,
    bpc: Vec<(usize, usize, f64)>,
    bpf: Vec<(usize, usize, f64)>,
    bpv: Vec<(usize, usize, f64)>,
}

impl Triplets {
    fn finish(self, grid: &CellGrid) -> DiscreteOperator {
        let (nc, nf, d) = (grid.num_cells(), grid.num_faces(), grid.dim);
        DiscreteOperator {
            dim: d,
            flux: CsrMatrix::from_triplets(nf, nc, &self.flux),
            bound_flux: CsrMatrix::from_triplets(nf, nf, &self.bflux),
            vector_source: CsrMatrix::from_triplets(nf, d * nc, &self.vsrc),
            bound_pressure_cell: CsrMatrix::from_triplets(nf, nc, &self.bpc),
            bound_pressure_face: CsrMatrix::from_triplets(nf, nf, &self.bpf),
            bound_pressure_vector_source: CsrMatrix::from_triplets(nf, d * nc, &self.bpv),
            div: divergence(grid),
        }
    }
}

/// Half transmissibility `|f| n.K n / d` and the unit normal `n` oriented
/// out of cell `c`.
fn half_trans(grid: &CellGrid, k: &PermTensor, c: usize, f: usize) -> (f64, Vec3) {
    let face = &grid.faces[f];
    let n = grid.outward_normal(c, f);
    let dist = dot(&sub(&face.centroid, &grid.cell_centroids[c]), &n);
    (face.area * dot(&n, &k.apply(&n)) / dist, n)
}

fn tpfa(grid: &CellGrid, perm: &[PermTensor], bc: &BoundaryCondition) -> DiscreteOperator {
    let d = grid.dim;
    let mut t = Triplets::default();
    for (f, face) in grid.faces.iter().enumerate() {
        let c0 = face.cells.0;
        // b = |f| n.K chi, n the face normal
        let src = |c: usize| -> Vec<f64> {
            let kn = perm[c].apply(&face.normal);
            (0..d).map(|i| face.area * kn[i]).collect()
        };
        let (t0, _) = half_trans(grid, &perm[c0], c0, f);
        match face.cells.1 {
            Some(c1) => {
                let (t1, _) = half_trans(grid, &perm[c1], c1, f);
                let tsum = t0 + t1;
                let tt = t0 * t1 / tsum;
                t.flux.push((f, c0, tt));
                t.flux.push((f, c1, -tt));
                for (i, b) in src(c0).iter().enumerate() {
                    t.vsrc.push((f, c0 * d + i, -t1 * b / tsum));
                }
                for (i, b) in src(c1).iter().enumerate() {
                    t.vsrc.push((f, c1 * d + i, -t0 * b / tsum));
                }
            }
            None if bc.kind[f] == BoundaryKind::Dirichlet => {
                t.flux.push((f, c0, t0));
                t.bflux.push((f, f, -t0));
                for (i, b) in src(c0).iter().enumerate() {
                    t.vsrc.push((f, c0 * d + i, -b));
                }
                t.bpf.push((f, f, 1.0));
            }
            None => {
                t.bflux.push((f, f, 1.0));
                t.bpc.push((f, c0, 1.0));
                t.bpf.push((f, f, -1.0 / t0));
                for (i, b) in src(c0).iter().enumerate() {
                    t.bpv.push((f, c0 * d + i, -b / t0));
                }
            }
        }
    }
    t.finish(grid)
}

/// Linear form in the local unknowns of one interaction region.
#[derive(Clone)]
struct Form {
    u: Vec<f64>,
    p: Vec<f64>,
    g: Vec<f64>,
    chi: Vec<f64>,
}

impl Form {
    fn zeros(nu: usize, nc: usize, ns: usize) -> Self {
        Self {
            u: vec![0.0; nu],
            p: vec![0.0; nc],
            g: vec![0.0; ns],
            chi: vec![0.0; 2 * nc],
        }
    }

    fn add(&mut self, other: &Form) {
        for (a, b) in [
            (&mut self.u, &other.u),
            (&mut self.p, &other.p),
            (&mut self.g, &other.g),
            (&mut self.chi, &other.chi),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// MPFA-O with node interaction regions and continuity at face centroids.
fn mpfa(grid: &CellGrid, perm: &[PermTensor], bc: &BoundaryCondition) -> Result<DiscreteOperator, DiscretizationError> {
    let mut node_faces: Vec<Vec<usize>> = vec![Vec::new(); grid.nodes.len()];
    for (f, face) in grid.faces.iter().enumerate() {
        for &v in &face.nodes {
            node_faces[v].push(f);
        }
    }
    let mut t = Triplets::default();
    for (node, subs) in node_faces.iter().enumerate() {
        if subs.is_empty() {
            continue;
        }
        let ns = subs.len();
        let mut cells: Vec<usize> = Vec::new();
        for &f in subs {
            let face = &grid.faces[f];
            for c in std::iter::once(face.cells.0).chain(face.cells.1) {
                if !cells.contains(&c) {
                    cells.push(c);
                }
            }
        }
        let nc = cells.len();
        let local_cell = |c: usize| cells.iter().position(|&x| x == c).unwrap();

        let mut unknown = vec![None; ns];
        let mut nu = 0;
        for (s, &f) in subs.iter().enumerate() {
            if !bc.is_dirichlet(grid, f) {
                unknown[s] = Some(nu);
                nu += 1;
            }
        }

        // outward flux of each (cell, subface) pair
        let mut pair_flux: Vec<Vec<Option<Form>>> = vec![vec![None; ns]; nc];
        for (lc, &c) in cells.iter().enumerate() {
            let own: Vec<usize> = (0..ns)
                .filter(|&s| {
                    let fc = grid.faces[subs[s]].cells;
                    fc.0 == c || fc.1 == Some(c)
                })
                .collect();
            if own.len() != 2 {
                return Err(DiscretizationError::SingularInteraction { node });
            }
            let xc = grid.cell_centroids[c];
            let da = sub(&grid.faces[subs[own[0]]].centroid, &xc);
            let db = sub(&grid.faces[subs[own[1]]].centroid, &xc);
            let m = Matrix2::new(da[0], da[1], db[0], db[1]);
            let minv = m.try_inverse().ok_or(DiscretizationError::SingularInteraction { node })?;
            for &s in &own {
                let f = subs[s];
                let face = &grid.faces[f];
                let area = face.area / face.nodes.len() as f64;
                let w = scale(&perm[c].apply(&grid.outward_normal(c, f)), area);
                let coef = -(Vector2::new(w[0], w[1]).transpose() * minv);
                let mut form = Form::zeros(nu, nc, ns);
                for (q, &sq) in own.iter().enumerate() {
                    match unknown[sq] {
                        Some(k) => form.u[k] += coef[q],
                        None => form.g[sq] += coef[q],
                    }
                    form.p[lc] -= coef[q];
                }
                form.chi[2 * lc] -= w[0];
                form.chi[2 * lc + 1] -= w[1];
                pair_flux[lc][s] = Some(form);
            }
        }
        let flux_of = |c: usize, s: usize| pair_flux[local_cell(c)][s].clone().unwrap();

        let mut a = DMatrix::<f64>::zeros(nu, nu);
        let mut rhs = DMatrix::<f64>::zeros(nu, nc + ns + 2 * nc);
        for (s, &f) in subs.iter().enumerate() {
            let Some(row) = unknown[s] else { continue };
            let face = &grid.faces[f];
            let mut eq = flux_of(face.cells.0, s);
            match face.cells.1 {
                Some(c1) => eq.add(&flux_of(c1, s)),
                None => eq.g[s] -= 1.0 / face.nodes.len() as f64,
            }
            for k in 0..nu {
                a[(row, k)] = eq.u[k];
            }
            let rest = eq.p.iter().chain(&eq.g).chain(&eq.chi);
            for (k, v) in rest.enumerate() {
                rhs[(row, k)] = -v;
            }
        }
        let sol = if nu > 0 {
            a.lu().solve(&rhs).ok_or(DiscretizationError::SingularInteraction { node })?
        } else {
            rhs
        };

        // substitute the local unknowns into a form
        let eliminate = |form: &Form| -> Vec<f64> {
            let mut out: Vec<f64> = form.p.iter().chain(&form.g).chain(&form.chi).copied().collect();
            for k in 0..nu {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += form.u[k] * sol[(k, j)];
                }
            }
            out
        };
        let scatter = |row: &[f64], f: usize, weight: f64, pc: &mut Vec<_>, pg: &mut Vec<_>, pv: &mut Vec<_>| {
            for (j, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                if j < nc {
                    pc.push((f, cells[j], weight * v));
                } else if j < nc + ns {
                    pg.push((f, subs[j - nc], weight * v));
                } else {
                    let q = j - nc - ns;
                    pv.push((f, cells[q / 2] * 2 + q % 2, weight * v));
                }
            }
        };
        for (s, &f) in subs.iter().enumerate() {
            let face = &grid.faces[f];
            if bc.is_neumann(grid, f) {
                continue;
            }
            let row = eliminate(&flux_of(face.cells.0, s));
            scatter(&row, f, 1.0, &mut t.flux, &mut t.bflux, &mut t.vsrc);
        }
        for (s, &f) in subs.iter().enumerate() {
            let face = &grid.faces[f];
            if !face.is_boundary() {
                continue;
            }
            let Some(k) = unknown[s] else { continue };
            let row: Vec<f64> = (0..nc + ns + 2 * nc).map(|j| sol[(k, j)]).collect();
            let w = 1.0 / face.nodes.len() as f64;
            scatter(&row, f, w, &mut t.bpc, &mut t.bpf, &mut t.bpv);
        }
    }
    for (f, face) in grid.faces.iter().enumerate() {
        if !face.is_boundary() {
            continue;
        }
        if bc.kind[f] == BoundaryKind::Neumann {
            t.bflux.push((f, f, 1.0));
        } else {
            t.bpf.push((f, f, 1.0));
        }
    }
    Ok(t.finish(grid))
}

/// Least-squares reconstruction of `K`-weighted cell gradients from face
/// fluxes: returns `R` with `(grad p + chi)_c = sum_f R[c dim + k, f] F_f`.
pub fn gradient_reconstruction(grid: &CellGrid, perm: &[PermTensor]) -> Result<CsrMatrix, DiscretizationError> {
    check_perm(grid, perm)?;
    let d = grid.dim;
    let mut t = Vec::new();
    for c in 0..grid.num_cells() {
        if d == 0 {
            continue;
        }
        let faces = &grid.cell_faces[c];
        // minimise sum_f (w_f . G + sign_f F_f / |f|)^2, w_f = K n_out
        let w: Vec<Vec3> = faces.iter().map(|&f| perm[c].apply(&grid.outward_normal(c, f))).collect();
        let mut normal = DMatrix::<f64>::zeros(d, d);
        for wf in &w {
            for i in 0..d {
                for j in 0..d {
                    normal[(i, j)] += wf[i] * wf[j];
                }
            }
        }
        let inv = normal
            .try_inverse()
            .ok_or(DiscretizationError::SingularReconstruction { cell: c })?;
        for (q, &f) in faces.iter().enumerate() {
            let s = grid.face_sign(c, f) / grid.faces[f].area;
            for i in 0..d {
                let v: f64 = (0..d).map(|j| inv[(i, j)] * w[q][j]).sum::<f64>() * -s;
                if v != 0.0 {
                    t.push((c * d + i, f, v));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(d * grid.num_cells(), grid.num_faces(), &t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian_md_mesh, BoxDomain};

    fn unit_grid(n: usize, dim: usize) -> CellGrid {
        let res = vec![n; dim];
        build_cartesian_md_mesh(&BoxDomain::unit(dim), &res, &[]).unwrap().subdomains.remove(0).grid
    }

    fn line_grid(n: usize) -> CellGrid {
        // the fault grid of a single horizontal fault is a 1-D chain
        use crate::mesh::{FaultSpec, SideMaterial};
        let side = SideMaterial { k_t: vec![0.0], k_perp: 1.0 };
        let f = FaultSpec {
            id: "f".into(),
            normal_axis: 1,
            position: 0.5,
            extent: vec![[0.0, 1.0]],
            aperture: 0.1,
            k_parallel: PermTensor::isotropic(1, 1.0),
            plus: side.clone(),
            minus: side,
        };
        build_cartesian_md_mesh(&BoxDomain::unit(2), &[n, 2], &[f]).unwrap().subdomains.remove(1).grid
    }

    #[test]
    fn two_cell_tpfa_transmissibility() {
        let g = line_grid(2);
        let op = discretize(&g, &[PermTensor::isotropic(1, 1.0); 2], &BoundaryCondition::all_neumann(3), Scheme::Tpfa)
            .unwrap();
        let interior = (0..3).find(|&f| !g.faces[f].is_boundary()).unwrap();
        let flux = op.face_flux(&[1.0, 0.0], &[0.0; 3], &[0.0; 2]);
        // half cells of length 1/4: t = 4 per side, harmonic mean 2
        assert!((flux[interior] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tpfa_vector_source_on_two_cells() {
        let g = line_grid(2);
        let op = discretize(&g, &[PermTensor::isotropic(1, 1.0); 2], &BoundaryCondition::all_neumann(3), Scheme::Tpfa)
            .unwrap();
        let interior = (0..3).find(|&f| !g.faces[f].is_boundary()).unwrap();
        let chi = [1.0, 1.0];
        // source part alone
        let f_src = op.face_flux(&[0.0, 0.0], &[0.0; 3], &chi)[interior];
        assert!((f_src + 1.0).abs() < 1e-14);
        // p = -x - const balances chi = 1, so the total flux vanishes
        let p = [0.25, -0.25];
        let f_tot = op.face_flux(&p, &[0.0; 3], &chi)[interior];
        assert!(f_tot.abs() < 1e-14);
    }

    fn linear_patch(scheme: Scheme, k: PermTensor) -> f64 {
        let g = unit_grid(5, 2);
        let perm = vec![k; g.num_cells()];
        let bc = BoundaryCondition::all_dirichlet(g.num_faces());
        let op = discretize(&g, &perm, &bc, scheme).unwrap();
        let exact = |x: &Vec3| 1.0 + 2.0 * x[0] - 3.0 * x[1];
        let mut gvals = vec![0.0; g.num_faces()];
        for (f, face) in g.faces.iter().enumerate() {
            if face.is_boundary() {
                gvals[f] = exact(&face.centroid);
            }
        }
        let p: Vec<f64> = g.cell_centroids.iter().map(exact).collect();
        let flux = op.face_flux(&p, &gvals, &vec![0.0; 2 * g.num_cells()]);
        let grad = [2.0, -3.0, 0.0];
        let kg = k.apply(&grad);
        let mut worst = 0.0_f64;
        for (f, face) in g.faces.iter().enumerate() {
            let expect = -face.area * dot(&kg, &face.normal);
            worst = worst.max((flux[f] - expect).abs());
        }
        worst
    }

    #[test]
    fn linear_fields_are_reproduced() {
        assert!(linear_patch(Scheme::Tpfa, PermTensor::isotropic(2, 3.0)) < 1e-12);
        let full = PermTensor::from_rows(&[vec![2.0, 0.7], vec![0.7, 1.0]]);
        assert!(linear_patch(Scheme::Mpfa, full) < 1e-12);
    }

    #[test]
    fn mpfa_reduces_to_tpfa_for_diagonal_tensor() {
        let g = unit_grid(4, 2);
        let k = PermTensor::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]);
        let perm = vec![k; g.num_cells()];
        let mut bc = BoundaryCondition::all_neumann(g.num_faces());
        for (f, face) in g.faces.iter().enumerate() {
            if face.is_boundary() && face.centroid[0] < 1e-12 {
                bc.kind[f] = BoundaryKind::Dirichlet;
            }
        }
        let a = discretize(&g, &perm, &bc, Scheme::Tpfa).unwrap();
        let b = discretize(&g, &perm, &bc, Scheme::Mpfa).unwrap();
        assert!(a.flux.max_abs_diff(&b.flux) < 1e-12);
        assert!(a.bound_flux.max_abs_diff(&b.bound_flux) < 1e-12);
        assert!(a.vector_source.max_abs_diff(&b.vector_source) < 1e-12);
        assert!(a.bound_pressure_cell.max_abs_diff(&b.bound_pressure_cell) < 1e-12);
        assert!(a.bound_pressure_face.max_abs_diff(&b.bound_pressure_face) < 1e-12);
    }

    #[test]
    fn neumann_trace_recovers_linear_pressure() {
        let g = unit_grid(3, 2);
        let k = PermTensor::from_rows(&[vec![1.0, 0.3], vec![0.3, 2.0]]);
        let perm = vec![k; g.num_cells()];
        let bc = BoundaryCondition::all_neumann(g.num_faces());
        let op = discretize(&g, &perm, &bc, Scheme::Mpfa).unwrap();
        let exact = |x: &Vec3| 0.5 - x[0] + 0.25 * x[1];
        let kg = k.apply(&[-1.0, 0.25, 0.0]);
        let gvals: Vec<f64> = g
            .faces
            .iter()
            .map(|f| if f.is_boundary() { -f.area * dot(&kg, &f.normal) } else { 0.0 })
            .collect();
        let p: Vec<f64> = g.cell_centroids.iter().map(exact).collect();
        let tr = op.trace(&p, &gvals, &vec![0.0; 2 * g.num_cells()]);
        for (f, face) in g.faces.iter().enumerate() {
            if face.is_boundary() {
                assert!((tr[f] - exact(&face.centroid)).abs() < 1e-12, "face {f}");
            }
        }
    }

    #[test]
    fn reconstruction_is_exact_for_linear_fields() {
        let g = unit_grid(3, 2);
        let k = PermTensor::from_rows(&[vec![1.5, 0.2], vec![0.2, 0.8]]);
        let r = gradient_reconstruction(&g, &vec![k; g.num_cells()]).unwrap();
        let grad = [0.3, -1.2, 0.0];
        let kg = k.apply(&grad);
        let fluxes: Vec<f64> = g.faces.iter().map(|f| -f.area * dot(&kg, &f.normal)).collect();
        let out = r.matvec(&fluxes);
        for c in 0..g.num_cells() {
            assert!((out[2 * c] - grad[0]).abs() < 1e-12);
            assert!((out[2 * c + 1] - grad[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_permeability_is_rejected() {
        let g = unit_grid(2, 2);
        let k = PermTensor::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let e = discretize(&g, &vec![k; 4], &BoundaryCondition::all_neumann(g.num_faces()), Scheme::Tpfa);
        assert!(matches!(e, Err(DiscretizationError::NotPositiveDefinite { cell: 0 })));
    }
}

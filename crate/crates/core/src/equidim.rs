//! Equi-dimensional reference: the fault is meshed as a thin strip of
//! full-tensor cells inside a fine planar grid and solved with MPFA.

use crate::assembly::{solve_direct, SolveError};
use crate::config::CaseConfig;
use crate::discretize::{discretize, BoundaryCondition, BoundaryKind, DiscretizationError, Scheme};
use crate::geometry::PermTensor;
use crate::mesh::{tensor_product_grid, BoundaryTag, CellGrid};
use crate::sparse::CsrMatrix;
use crate::Error;

/// Planar strip model: one horizontal fault of aperture `aperture` centred
/// at `center`, spanning the full width of the domain.
#[derive(Clone, Debug)]
pub struct EquiDimCase {
    pub config: CaseConfig,
    /// Columns across the domain.
    pub nx: usize,
    /// Matrix rows below and above the strip (each).
    pub matrix_rows: usize,
    /// Strip rows, bottom to top; even, the lower half carries the minus
    /// side tensor and the upper half the plus side tensor.
    pub strip_rows: usize,
    pub center: f64,
    pub aperture: f64,
    pub strip_minus: PermTensor,
    pub strip_plus: PermTensor,
}

impl EquiDimCase {
    /// Strip model of a 2D case with a single full-width fault normal to `y`.
    pub fn from_config(cfg: &CaseConfig, nx: usize, matrix_rows: usize, strip_rows: usize) -> Result<Self, Error> {
        let unsupported = |m: &str| Error::Study(format!("equi-dimensional reference: {m}"));
        if cfg.dim() != 2 || cfg.faults.len() != 1 {
            return Err(unsupported("needs a 2D case with exactly one fault"));
        }
        let f = &cfg.faults[0];
        let (x0, x1) = (cfg.domain.lower[0], cfg.domain.upper[0]);
        if f.normal_axis != 1 || f.extent[0] != [x0, x1] {
            return Err(unsupported("the fault must be horizontal and span the domain"));
        }
        if strip_rows < 2 || strip_rows % 2 != 0 {
            return Err(unsupported("the strip needs an even number of at least two rows"));
        }
        let (y0, y1) = (cfg.domain.lower[1], cfg.domain.upper[1]);
        if !(f.position - 0.5 * f.aperture > y0 && f.position + 0.5 * f.aperture < y1) {
            return Err(unsupported("the strip must lie inside the domain"));
        }
        let perm = cfg.fault_perm(f)?;
        let to_tensor = |m: nalgebra::DMatrix<f64>| PermTensor::from_rows(&[vec![m[(0, 0)], m[(0, 1)]], vec![m[(1, 0)], m[(1, 1)]]]);
        Ok(Self {
            config: cfg.clone(),
            nx,
            matrix_rows,
            strip_rows,
            center: f.position,
            aperture: f.aperture,
            strip_minus: to_tensor(perm.full_tensor(&perm.minus)),
            strip_plus: to_tensor(perm.full_tensor(&perm.plus)),
        })
    }

    /// Node coordinates; the strip is bounded exactly by `center ± a/2`.
    pub fn node_coordinates(&self) -> (Vec<f64>, Vec<f64>) {
        let d = &self.config.domain;
        let linspace = |a: f64, b: f64, n: usize| (0..=n).map(move |k| a + (b - a) * k as f64 / n as f64);
        let xs: Vec<f64> = linspace(d.lower[0], d.upper[0], self.nx).collect();
        let lo = self.center - 0.5 * self.aperture;
        let hi = self.center + 0.5 * self.aperture;
        let mut ys: Vec<f64> = linspace(d.lower[1], lo, self.matrix_rows).collect();
        ys.extend(linspace(lo, hi, self.strip_rows).skip(1));
        ys.extend(linspace(hi, d.upper[1], self.matrix_rows).skip(1));
        (xs, ys)
    }
}

#[derive(Clone, Debug)]
pub struct EquiDimSolution {
    pub grid: CellGrid,
    pub pressure: Vec<f64>,
    pub face_flux: Vec<f64>,
    pub nx: usize,
    /// Row indices of the strip cells, bottom to top.
    pub strip_rows: Vec<usize>,
}

pub fn solve_equidim(case: &EquiDimCase) -> Result<EquiDimSolution, Error> {
    let (xs, ys) = case.node_coordinates();
    let grid = tensor_product_grid(&xs, &ys)?;
    let nx = case.nx;
    let first_strip = case.matrix_rows;
    let half = case.strip_rows / 2;
    let perm: Vec<PermTensor> = (0..grid.num_cells())
        .map(|c| {
            let row = c / nx;
            if row >= first_strip && row < first_strip + half {
                case.strip_minus
            } else if row >= first_strip + half && row < first_strip + case.strip_rows {
                case.strip_plus
            } else {
                case.config.matrix_perm(&grid.cell_centroids[c])
            }
        })
        .collect();

    let mut bc = BoundaryCondition::all_neumann(grid.num_faces());
    let mut g = vec![0.0; grid.num_faces()];
    for (f, face) in grid.faces.iter().enumerate() {
        if let BoundaryTag::Domain { axis, upper } = face.tag {
            let (kind, v) = case.config.boundary_at(axis, upper, &face.centroid);
            bc.kind[f] = kind;
            g[f] = if kind == BoundaryKind::Neumann { v * face.area } else { v };
        }
    }
    if !bc.kind.iter().any(|k| *k == BoundaryKind::Dirichlet) {
        return Err(Error::Study("equi-dimensional reference needs a Dirichlet boundary".into()));
    }
    let op = discretize(&grid, &perm, &bc, Scheme::Mpfa).map_err(|e: DiscretizationError| Error::Discretization(e))?;
    let a: CsrMatrix = op.div.matmul(&op.flux);
    let bf = op.div.matmul(&op.bound_flux).matvec(&g);
    let rhs: Vec<f64> = bf.iter().map(|v| -v).collect();
    let pressure = solve_direct(&a, &rhs).map_err(|e: SolveError| Error::Solve(e))?;
    let face_flux = op.face_flux(&pressure, &g, &vec![0.0; 2 * grid.num_cells()]);
    Ok(EquiDimSolution {
        grid,
        pressure,
        face_flux,
        nx,
        strip_rows: (first_strip..first_strip + case.strip_rows).collect(),
    })
}

impl EquiDimSolution {
    /// Column centres and the arithmetic mean of the strip rows per column.
    pub fn average_fault_pressure(&self) -> Vec<(f64, f64)> {
        let n = self.strip_rows.len() as f64;
        (0..self.nx)
            .map(|i| {
                let x = self.grid.cell_centroids[i][0];
                let p = self.strip_rows.iter().map(|r| self.pressure[r * self.nx + i]).sum::<f64>() / n;
                (x, p)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BcKind, BoundaryConfig, Perm, SideConfig};

    fn uniform_drop(k_strip: f64) -> CaseConfig {
        let mut cfg = CaseConfig::case1();
        cfg.faults[0].k_parallel = Perm::Scalar(k_strip);
        cfg.faults[0].plus = SideConfig { k_t: vec![0.0], k_perp: k_strip };
        cfg.faults[0].minus = SideConfig { k_t: vec![0.0], k_perp: k_strip };
        cfg.boundary = vec![
            BoundaryConfig { side: "y-".into(), kind: BcKind::Dirichlet, value: 1.0, range: None },
            BoundaryConfig { side: "y+".into(), kind: BcKind::Dirichlet, value: 0.0, range: None },
        ];
        cfg
    }

    #[test]
    fn matching_strip_gives_linear_profile() {
        let case = EquiDimCase::from_config(&uniform_drop(1.0), 6, 5, 2).unwrap();
        let sol = solve_equidim(&case).unwrap();
        for (c, x) in sol.grid.cell_centroids.iter().enumerate() {
            assert!((sol.pressure[c] - (1.0 - x[1])).abs() < 1e-12);
        }
        for (_, p) in sol.average_fault_pressure() {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn strip_thickness_is_the_aperture() {
        let case = EquiDimCase::from_config(&CaseConfig::case1(), 4, 3, 2).unwrap();
        let (_, ys) = case.node_coordinates();
        assert_eq!(ys.len(), 2 * 3 + 2 + 1);
        assert!((ys[3] - 0.495).abs() < 1e-15 && (ys[5] - 0.505).abs() < 1e-15);
    }

    #[test]
    fn zero_tangential_strip_is_symmetric() {
        let mut cfg = CaseConfig::case1();
        cfg.faults[0].plus.k_t = vec![0.0];
        cfg.faults[0].minus.k_t = vec![0.0];
        let case = EquiDimCase::from_config(&cfg, 40, 20, 2).unwrap();
        let prof = solve_equidim(&case).unwrap().average_fault_pressure();
        let n = prof.len();
        for i in 0..n {
            assert!((prof[i].1 - prof[n - 1 - i].1).abs() < 1e-8);
        }
    }

    #[test]
    fn tangential_strip_is_asymmetric() {
        let case = EquiDimCase::from_config(&CaseConfig::case1(), 40, 20, 2).unwrap();
        let prof = solve_equidim(&case).unwrap().average_fault_pressure();
        let n = prof.len();
        let asym = (0..n).map(|i| (prof[i].1 - prof[n - 1 - i].1).abs()).fold(0.0, f64::max);
        assert!(asym > 1e-2, "{asym}");
    }

    #[test]
    fn odd_strip_rows_are_rejected() {
        assert!(EquiDimCase::from_config(&CaseConfig::case1(), 4, 3, 3).is_err());
    }
}

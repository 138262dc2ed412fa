//! Small fixed-size geometry helpers and the permeability tensor type.
//!
//! All grids store coordinates as `[f64; 3]`; a grid of topological
//! dimension `d` only uses the first `d` components of its local
//! coordinates.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric `dim x dim` tensor, `dim <= 3`, in the local basis of the grid
/// it belongs to. Entries beyond `dim` are kept at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermTensor {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl PermTensor {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= 3, "tensor dimension {dim} > 3");
        Self { dim, m: [[0.0; 3]; 3] }
    }

    pub fn isotropic(dim: usize, k: f64) -> Self {
        let mut t = Self::zero(dim);
        for i in 0..dim {
            t.m[i][i] = k;
        }
        t
    }

    /// Builds a tensor from row slices; all rows must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut t = Self::zero(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "tensor row {i} has wrong length");
            for (j, v) in row.iter().enumerate() {
                t.m[i][j] = *v;
            }
        }
        t
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.m[i][..self.dim].to_vec()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim && j < self.dim);
        self.m[i][j] = v;
    }

    /// `K v`, using the first `dim` components of `v`.
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut t = *self;
        for row in t.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        t
    }

    /// `self - s * v v^T`.
    pub fn minus_outer(&self, v: &Vec3, s: f64) -> Self {
        let mut t = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.m[i][j] -= s * v[i] * v[j];
            }
        }
        t
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        match self.dim {
            0 => 1.0,
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.dim == 0 {
            return Some(*self);
        }
        let inv = self.to_dmatrix().try_inverse()?;
        let mut t = Self::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.m[i][j] = inv[(i, j)];
            }
        }
        Some(t)
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.dim).all(|i| {
            (0..self.dim).all(|j| (self.m[i][j] - self.m[j][i]).abs() <= rel_tol * scale)
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 0 {
            return f64::INFINITY;
        }
        let a = self.to_dmatrix();
        let sym = (&a + a.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.is_symmetric(1e-12) && self.min_eigenvalue() > 0.0
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.m[i][j])
    }
}

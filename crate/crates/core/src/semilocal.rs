//! Semi-local interface law: mixed-dimensional scaling of fault
//! permeabilities, the well-posedness margin, the Schur-complement in-plane
//! tensor and the mortar-to-vector-source map.
//!
//! Sign conventions. The mortar flux `Λ` is integrated over its mortar cell
//! and positive for flow from the higher-dimensional side into the lower
//! subdomain. Per unit measure, with `λ = Λ / |m|`,
//!
//! ```text
//! λ_j = κ⊥ (tr_j p_h - p_l) + ε_j κ_t · ∇p_l
//! q_l = -κ_∥ ∇p_l - Σ_j ε_j κ_t (tr_j p_h - p_l)
//!     = -A_Ω (∇p_l + χ),   A_Ω = κ_∥ - Σ_j κ_t κ_tᵀ / κ⊥,
//!                          χ   = A_Ω⁻¹ Σ_j ε_j κ_t λ_j / κ⊥.
//! ```

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geometry::{dot, PermTensor, Vec3};
use crate::mesh::SideMaterial;

#[derive(Debug, Error)]
pub enum SemiLocalError {
    #[error("aperture must be positive, got {0}")]
    Aperture(f64),
    #[error("codimension must be at least 1")]
    Codim,
    #[error("normal permeability must be positive, got {0}")]
    NormalPerm(f64),
    #[error("tangential coupling has {found} components, expected {expected}")]
    TangentLength { found: usize, expected: usize },
    #[error("full fault tensor on the {side} side is not positive definite")]
    NotPositiveDefinite { side: &'static str },
    #[error("effective in-plane tensor is singular")]
    SingularEffective,
}

/// Equi-dimensional fault permeability, split into in-plane, off-diagonal and
/// normal parts, with independent off-diagonal and normal parts per side.
#[derive(Clone, Debug, PartialEq)]
pub struct EquiDimFaultPerm {
    pub k_parallel: PermTensor,
    pub plus: SideMaterial,
    pub minus: SideMaterial,
}

impl EquiDimFaultPerm {
    /// The full `d x d` tensor `[K_∥, k_t; k_tᵀ, k⊥]` of one side.
    pub fn full_tensor(&self, side: &SideMaterial) -> DMatrix<f64> {
        let n = self.k_parallel.dim();
        DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
            (true, true) => self.k_parallel.get(i, j),
            (true, false) => side.k_t[i],
            (false, true) => side.k_t[j],
            (false, false) => side.k_perp,
        })
    }

    pub fn validate(&self) -> Result<(), SemiLocalError> {
        let n = self.k_parallel.dim();
        for (name, side) in [("plus", &self.plus), ("minus", &self.minus)] {
            if side.k_t.len() != n {
                return Err(SemiLocalError::TangentLength { found: side.k_t.len(), expected: n });
            }
            let full = self.full_tensor(side);
            let eig = nalgebra::SymmetricEigen::new(full).eigenvalues.min();
            if !(eig > 0.0) {
                return Err(SemiLocalError::NotPositiveDefinite { side: name });
            }
        }
        Ok(())
    }
}

/// Coupling coefficients of one interface, uniform over its mortar cells.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceLaw {
    pub kappa_perp: f64,
    /// In the lower grid's tangent basis; components past its dimension are 0.
    pub kappa_t: Vec3,
    pub side_sign: i32,
}

impl InterfaceLaw {
    pub fn local(kappa_perp: f64, side_sign: i32) -> Self {
        Self { kappa_perp, kappa_t: [0.0; 3], side_sign }
    }

    pub fn has_tangential(&self) -> bool {
        self.kappa_t.iter().any(|&v| v != 0.0)
    }
}

/// Scaled in-plane tensor and the laws of both sides.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledFault {
    pub kappa_parallel: PermTensor,
    pub plus: InterfaceLaw,
    pub minus: InterfaceLaw,
}

/// Mixed-dimensional scaling. Codimension 1: `κ_∥ = a K_∥`,
/// `κ⊥ = 2 k⊥ / a`, `κ_t = k_t`. Codimension `c ≥ 2`: `κ_∥ = a^c K_∥`,
/// `κ⊥ = 2 a^(c-2) k⊥` with `k⊥` the in-plane permeability of the adjoining
/// object across the intersection, and `κ_t = 0`.
pub fn scale_to_mixed_dim(perm: &EquiDimFaultPerm, aperture: f64, codim: usize) -> Result<ScaledFault, SemiLocalError> {
    if !(aperture > 0.0 && aperture.is_finite()) {
        return Err(SemiLocalError::Aperture(aperture));
    }
    if codim == 0 {
        return Err(SemiLocalError::Codim);
    }
    let kappa_parallel = perm.k_parallel.scaled(aperture.powi(codim as i32));
    let law = |side: &SideMaterial, sign: i32| -> Result<InterfaceLaw, SemiLocalError> {
        if !(side.k_perp > 0.0) {
            return Err(SemiLocalError::NormalPerm(side.k_perp));
        }
        let mut kappa_t = [0.0; 3];
        if codim == 1 {
            if side.k_t.len() != perm.k_parallel.dim() {
                return Err(SemiLocalError::TangentLength {
                    found: side.k_t.len(),
                    expected: perm.k_parallel.dim(),
                });
            }
            kappa_t[..side.k_t.len()].copy_from_slice(&side.k_t);
        }
        let kappa_perp = if codim == 1 {
            2.0 * side.k_perp / aperture
        } else {
            2.0 * aperture.powi(codim as i32 - 2) * side.k_perp
        };
        Ok(InterfaceLaw { kappa_perp, kappa_t, side_sign: sign })
    };
    Ok(ScaledFault {
        kappa_parallel,
        plus: law(&perm.plus, 1)?,
        minus: law(&perm.minus, -1)?,
    })
}

/// Outcome of the well-posedness check.
#[derive(Clone, Debug, PartialEq)]
pub struct WellPosedness {
    /// `min_j κ⊥ det κ_∥ - κ_tᵀ adj(κ_∥) κ_t`, the per-side margin (for a
    /// one-dimensional fault this is `κ⊥ κ_∥ - κ_t²`).
    pub side_margin: f64,
    /// Smallest eigenvalue of `A_Ω` over all sides together.
    pub effective_min_eigenvalue: f64,
}

impl WellPosedness {
    pub fn passed(&self) -> bool {
        self.side_margin > 0.0 && self.effective_min_eigenvalue > 0.0
    }
}

fn adjugate_form(k: &PermTensor, v: &Vec3) -> f64 {
    match k.dim() {
        0 => 0.0,
        1 => v[0] * v[0],
        _ => {
            // adj(K) = det(K) K⁻¹ for invertible K; fall back to cofactors
            let n = k.dim();
            let m = DMatrix::from_fn(n, n, |i, j| k.get(i, j));
            let mut adj = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let minor = m.clone().remove_row(j).remove_column(i);
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    adj[(i, j)] = sign * minor.determinant();
                }
            }
            let x = nalgebra::DVector::from_fn(n, |i, _| v[i]);
            (x.transpose() * adj * &x)[(0, 0)]
        }
    }
}

pub fn check_wellposed(kappa_parallel: &PermTensor, laws: &[&InterfaceLaw]) -> WellPosedness {
    let side_margin = laws
        .iter()
        .map(|l| l.kappa_perp * kappa_parallel.det() - adjugate_form(kappa_parallel, &l.kappa_t))
        .fold(f64::INFINITY, f64::min);
    let effective_min_eigenvalue = if laws.iter().any(|l| !(l.kappa_perp > 0.0)) {
        f64::NEG_INFINITY
    } else {
        schur_tensor(kappa_parallel, laws).min_eigenvalue()
    };
    WellPosedness { side_margin, effective_min_eigenvalue }
}

fn schur_tensor(kappa_parallel: &PermTensor, laws: &[&InterfaceLaw]) -> PermTensor {
    laws.iter()
        .fold(*kappa_parallel, |acc, l| acc.minus_outer(&l.kappa_t, 1.0 / l.kappa_perp))
}

/// Per-cell Schur-complement tensors of a lower-dimensional subdomain.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveTensor {
    pub cells: Vec<PermTensor>,
}

/// `A_Ω = κ_∥ - Σ_j κ_t κ_tᵀ / κ⊥` over the interfaces of one cell.
pub fn schur_effective_tensor(kappa_parallel: &PermTensor, laws: &[&InterfaceLaw]) -> Result<PermTensor, SemiLocalError> {
    for l in laws {
        if !(l.kappa_perp > 0.0) {
            return Err(SemiLocalError::NormalPerm(l.kappa_perp));
        }
    }
    Ok(schur_tensor(kappa_parallel, laws))
}

/// Coefficients of `χ_c = A_Ω⁻¹ Σ_j ε_j κ_t Λ_j / (κ⊥ |m_j|)`: one vector per
/// mortar cell paired to the lower cell, multiplying that cell's `Λ`.
pub fn vector_source_from_mortar(a_omega: &PermTensor, law: &InterfaceLaw, measure: f64) -> Result<Vec3, SemiLocalError> {
    if !law.has_tangential() {
        return Ok([0.0; 3]);
    }
    let inv = a_omega.inverse().ok_or(SemiLocalError::SingularEffective)?;
    let s = law.side_sign as f64 / (law.kappa_perp * measure);
    let v = inv.apply(&law.kappa_t);
    Ok([v[0] * s, v[1] * s, v[2] * s])
}

/// Coefficient vector of `∇p_l` in the λ row, which reads
/// `Λ/(κ⊥|m|) + p_l - tr p_h - (ε/κ⊥) κ_t·∇p_l = 0`.
pub fn gradient_coupling(law: &InterfaceLaw) -> Vec3 {
    let s = -(law.side_sign as f64) / law.kappa_perp;
    [law.kappa_t[0] * s, law.kappa_t[1] * s, law.kappa_t[2] * s]
}

/// Normal flux density predicted by the law for given traces and gradient,
/// used by tests as a direct evaluation.
pub fn normal_flux_density(law: &InterfaceLaw, trace_high: f64, p_low: f64, grad_low: &Vec3) -> f64 {
    law.kappa_perp * (trace_high - p_low) + law.side_sign as f64 * dot(&law.kappa_t, grad_low)
}

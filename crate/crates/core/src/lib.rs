//! Mixed-dimensional single-phase Darcy flow in porous media with thin,
//! full-tensor permeability inclusions (faults).
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`] and [`sparse`]: small dense tensors and CSR matrices.
//! - [`mesh`]: fixed-dimensional cell grids glued together by mortar
//!   interfaces, plus a Cartesian mesher for axis-aligned fault networks.
//! - [`discretize`]: cell-centred finite volumes (TPFA, MPFA-O) with vector
//!   sources, pressure traces and gradient reconstruction.
//! - [`semilocal`]: permeability scaling, the well-posedness margin, the
//!   Schur-complement tensor and the interface coupling blocks.
//! - [`assembly`]: the global block system, its solution and mass balance.
//! - [`equidim`]: the equi-dimensional thin-strip reference solver.
//! - [`verify`]: error norms, convergence orders and the built-in studies.
//! - [`config`] and [`output`]: case files, VTK and CSV writers.

pub mod assembly;
pub mod config;
pub mod discretize;
pub mod equidim;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod output;
pub mod semilocal;
pub mod sparse;
pub mod verify;

pub use assembly::{
    assemble_global, mass_balance_report, solve, Formulation, GlobalSystem, MassBalance,
    MdSolution, Problem, SolverKind, SolverOptions,
};
pub use config::CaseConfig;
pub use discretize::{BoundaryCondition, BoundaryKind, DiscreteOperator, Scheme};
pub use error::{Error, Result};
pub use geometry::{PermTensor, Vec3};
pub use mesh::{CellGrid, FaultSpec, MixedDimMesh, MortarInterface};
pub use semilocal::{EffectiveTensor, EquiDimFaultPerm, InterfaceLaw};
pub use verify::{CaseId, StudyResult};

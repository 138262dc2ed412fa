//! Benchmark fixtures.

use mdflow_core::assembly::{assemble_global, Formulation, GlobalSystem, Problem};
use mdflow_core::config::CaseConfig;

/// Case 1 problem at the given refinement level.
pub fn case1_problem(level: u32, formulation: Formulation) -> Problem {
    CaseConfig::case1().build_problem(level, formulation).expect("built-in case builds")
}

/// Assembled system of a built-in case.
pub fn assembled(cfg: &CaseConfig, level: u32, formulation: Formulation) -> GlobalSystem {
    let problem = cfg.build_problem(level, formulation).expect("built-in case builds");
    assemble_global(&problem).expect("built-in case assembles")
}

//! Frozen oracles for the interface law, well-posedness and symmetries.

use approx::assert_relative_eq;
use mdflow_core::assembly::{assemble_global, mass_balance_report, solve, Formulation, SolverOptions};
use mdflow_core::config::CaseConfig;
use mdflow_core::geometry::PermTensor;
use mdflow_core::mesh::SubdomainKind;
use mdflow_core::semilocal::{check_wellposed, schur_effective_tensor, vector_source_from_mortar, InterfaceLaw};
use mdflow_core::verify::{oracle_profile, run_case_with_reference, CaseId};
use nalgebra::{Matrix3, Vector3};

/// One fault cell between two matrix cells, written as the monolithic
/// system of the thin strip: unknowns are the two interface jumps
/// `μ± = tr± - p` and the tangential flux `q`, for a prescribed tangential
/// gradient `g` and prescribed normal fluxes `λ±`.
///
/// Integrating each half of the strip across its thickness gives
/// `λ± = κ⊥ μ± + ε± κ_t g` and `q = -κ∥ g - Σ ε κ_t μ`.
fn micro_flux(kpar: f64, kperp: f64, kt: f64, g: f64, lam_plus: f64, lam_minus: f64) -> f64 {
    let m = Matrix3::new(
        kperp, 0.0, 0.0, //
        0.0, kperp, 0.0, //
        kt, -kt, 1.0,
    );
    let rhs = Vector3::new(lam_plus - kt * g, lam_minus + kt * g, -kpar * g);
    m.lu().solve(&rhs).unwrap()[2]
}

#[test]
fn schur_elimination_matches_micro_problem() {
    let (kpar, kperp, kt) = (1.0, 20000.0, 80.0);
    let plus = InterfaceLaw { kappa_perp: kperp, kappa_t: [kt, 0.0, 0.0], side_sign: 1 };
    let minus = InterfaceLaw { kappa_perp: kperp, kappa_t: [kt, 0.0, 0.0], side_sign: -1 };
    let a = schur_effective_tensor(&PermTensor::isotropic(1, kpar), &[&plus, &minus]).unwrap();
    // zero normal flux isolates the effective tensor
    let q = micro_flux(kpar, kperp, kt, 1.0, 0.0, 0.0);
    assert_relative_eq!(a.get(0, 0), -q, max_relative = 1e-14);
    assert_relative_eq!(a.get(0, 0), 0.36, max_relative = 1e-14);

    // with normal fluxes the remainder is the vector source: q = -A (g + χ)
    let (g, lp, lm, measure) = (0.7, 3.0, -1.5, 0.25);
    let q = micro_flux(kpar, kperp, kt, g, lp, lm);
    let vp = vector_source_from_mortar(&a, &plus, measure).unwrap()[0];
    let vm = vector_source_from_mortar(&a, &minus, measure).unwrap()[0];
    let chi = vp * lp * measure + vm * lm * measure;
    assert_relative_eq!(q, -a.get(0, 0) * (g + chi), max_relative = 1e-13);
}

#[test]
fn installed_fault_tensor_is_the_schur_complement() {
    let problem = CaseConfig::case1().build_problem(1, Formulation::SemiLocal).unwrap();
    let system = assemble_global(&problem).unwrap();
    for k in &system.effective[1] {
        assert_relative_eq!(k.get(0, 0), 0.36, max_relative = 1e-13);
    }
    let local = CaseConfig::case1().build_problem(1, Formulation::Local).unwrap();
    let system = assemble_global(&local).unwrap();
    for k in &system.effective[1] {
        assert_relative_eq!(k.get(0, 0), 1.0, max_relative = 1e-13);
    }
}

fn all_laws_pass(cfg: &CaseConfig) -> bool {
    let problem = cfg.build_problem(0, Formulation::SemiLocal).unwrap();
    problem.mesh.subdomains.iter().all(|sd| {
        if sd.codim == 0 {
            return true;
        }
        let laws: Vec<&InterfaceLaw> = problem
            .mesh
            .interfaces
            .iter()
            .enumerate()
            .filter(|(_, m)| m.lower == sd.id)
            .map(|(j, _)| &problem.laws[j])
            .collect();
        problem.data[sd.id].perm.iter().all(|k| check_wellposed(k, &laws).passed())
    })
}

#[test]
fn builtin_data_is_well_posed() {
    for cfg in [CaseConfig::case1(), CaseConfig::case2(), CaseConfig::network2d(), CaseConfig::cube3d()] {
        assert!(all_laws_pass(&cfg), "{}", cfg.name);
    }
}

#[test]
fn strong_tangential_coupling_is_rejected() {
    let k = PermTensor::isotropic(1, 1.0);
    let law = InterfaceLaw { kappa_perp: 1.0, kappa_t: [2.0, 0.0, 0.0], side_sign: 1 };
    assert!(!check_wellposed(&k, &[&law]).passed());
}

#[test]
fn zero_coupling_makes_formulations_identical() {
    for mut cfg in [CaseConfig::case1(), CaseConfig::network2d(), CaseConfig::cube3d()] {
        for f in &mut cfg.faults {
            f.plus.k_t.iter_mut().for_each(|v| *v = 0.0);
            f.minus.k_t.iter_mut().for_each(|v| *v = 0.0);
        }
        let a = assemble_global(&cfg.build_problem(0, Formulation::SemiLocal).unwrap()).unwrap();
        let b = assemble_global(&cfg.build_problem(0, Formulation::Local).unwrap()).unwrap();
        assert!(a.matrix.max_abs_diff(&b.matrix) <= 1e-14, "{}", cfg.name);
    }
}

#[test]
fn zero_coupling_in_both_models_gives_equal_errors() {
    let mut cfg = CaseConfig::case1();
    cfg.faults[0].plus.k_t = vec![0.0];
    cfg.faults[0].minus.k_t = vec![0.0];
    let reference = oracle_profile(&cfg, 2).unwrap();
    let opts = SolverOptions::default();
    let semi = run_case_with_reference(CaseId::Case1, &cfg, Formulation::SemiLocal, 3, &reference, &opts).unwrap();
    let local = run_case_with_reference(CaseId::Case1, &cfg, Formulation::Local, 3, &reference, &opts).unwrap();
    for (a, b) in semi.levels.iter().zip(&local.levels) {
        assert!((a.error - b.error).abs() <= 1e-10);
    }
}

/// Reflecting Case 1 about `x = 1/2` and negating `k_t` must reflect the
/// solution; the boundary data are themselves symmetric.
#[test]
fn mirrored_geometry_with_negated_coupling_mirrors_the_field() {
    let cfg = CaseConfig::case1();
    let mut mirrored = cfg.clone();
    mirrored.faults[0].plus.k_t = vec![-80.0];
    mirrored.faults[0].minus.k_t = vec![-80.0];
    let solve_case = |c: &CaseConfig| {
        let p = c.build_problem(3, Formulation::SemiLocal).unwrap();
        let s = assemble_global(&p).unwrap();
        (p, solve(&s, &SolverOptions::default()).unwrap())
    };
    let (pa, sa) = solve_case(&cfg);
    let (_, sb) = solve_case(&mirrored);
    let scale = sa.pressure.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    for sd in &pa.mesh.subdomains {
        let g = &sd.grid;
        for c in 0..g.num_cells() {
            let x = g.cell_centroid_ambient(c);
            let target = [1.0 - x[0], x[1], x[2]];
            let twin = (0..g.num_cells())
                .find(|&d| {
                    let y = g.cell_centroid_ambient(d);
                    (y[0] - target[0]).abs() < 1e-12 && (y[1] - target[1]).abs() < 1e-12
                })
                .expect("mirror cell");
            let diff = (sa.pressure[sd.id][c] - sb.pressure[sd.id][twin]).abs();
            assert!(diff <= 1e-8 * scale, "subdomain {} cell {c}: {diff}", sd.id);
        }
    }
    // without the sign flip the field is not symmetric
    let fault = pa.mesh.subdomains.iter().find(|s| matches!(s.kind, SubdomainKind::Fault { .. })).unwrap();
    let p = &sa.pressure[fault.id];
    assert!((p[0] - p[p.len() - 1]).abs() > 1e-3);
}

#[test]
fn every_builtin_case_balances_mass() {
    for cfg in [CaseConfig::case1(), CaseConfig::case2(), CaseConfig::network2d(), CaseConfig::cube3d()] {
        for formulation in [Formulation::SemiLocal, Formulation::Local] {
            let problem = cfg.build_problem(0, formulation).unwrap();
            let system = assemble_global(&problem).unwrap();
            let sol = solve(&system, &SolverOptions::default()).unwrap();
            let mb = mass_balance_report(&system, &sol);
            assert!(mb.max_cell_residual <= 1e-10, "{} {}", cfg.name, mb.max_cell_residual);
            assert!(mb.global_imbalance <= 1e-10, "{} {}", cfg.name, mb.global_imbalance);
            assert!(mb.continuity_defect <= 1e-10 * mb.flux_scale, "{}", cfg.name);
        }
    }
}

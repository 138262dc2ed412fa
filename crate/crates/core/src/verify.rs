//! Error norms, convergence orders and the built-in refinement studies.

use std::fmt::Write as _;
use std::time::Instant;

use crate::assembly::{assemble_global, solve, Formulation, MdSolution, SolverKind, SolverOptions};
use crate::config::{problem_on_mesh, CaseConfig};
use crate::equidim::{solve_equidim, EquiDimCase};
use crate::geometry::{norm, sub, Vec3};
use crate::mesh::{build_cartesian_md_mesh, MixedDimMesh, SubdomainKind};
use crate::Error;

fn study_err<T>(msg: impl Into<String>) -> Result<T, Error> {
    Err(Error::Study(msg.into()))
}

/// `sqrt(Σ Δ (p - p_ref)²) / sqrt(Σ Δ p_ref²)`.
pub fn l2_fault_error(p: &[f64], p_ref: &[f64], delta: &[f64]) -> Result<f64, Error> {
    if p.len() != p_ref.len() || p.len() != delta.len() {
        return study_err("error norm inputs differ in length");
    }
    let num: f64 = p.iter().zip(p_ref).zip(delta).map(|((a, b), d)| d * (a - b) * (a - b)).sum();
    let den: f64 = p_ref.iter().zip(delta).map(|(b, d)| d * b * b).sum();
    if !(den > 0.0) {
        return study_err("reference has zero norm");
    }
    Ok((num / den).sqrt())
}

/// Order between consecutive levels, `log(ε_k/ε_{k+1}) / log(h_k/h_{k+1})`.
pub fn eoc(errors: &[f64], h: &[f64]) -> Result<Vec<f64>, Error> {
    if errors.len() < 2 || errors.len() != h.len() {
        return study_err("convergence order needs at least two levels");
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return study_err("convergence order of a zero error");
    }
    Ok(errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Least-squares slope of `log ε` against `log h`.
pub fn fitted_eoc(errors: &[f64], h: &[f64]) -> Result<f64, Error> {
    eoc(errors, h)?;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Value of the nearest reference point for every target; equidistant
/// reference points (as happens on nested grids) are averaged.
pub fn sample_nearest(targets: &[Vec3], points: &[Vec3], values: &[f64]) -> Vec<f64> {
    targets
        .iter()
        .map(|t| {
            let dist: Vec<f64> = points.iter().map(|p| norm(&sub(p, t))).collect();
            let best = dist.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-9 * best.max(1e-12) + 1e-12;
            let (sum, count) = dist
                .iter()
                .zip(values)
                .filter(|(d, _)| **d <= best + tol)
                .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
            sum / count as f64
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    Case1,
    Case2,
    Network2d,
    Cube3d,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Case1, CaseId::Case2, CaseId::Network2d, CaseId::Cube3d];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == s)
    }

    pub fn label(&self) -> &'static str {
        match self {
            CaseId::Case1 => "case1",
            CaseId::Case2 => "case2",
            CaseId::Network2d => "network2d",
            CaseId::Cube3d => "cube3d",
        }
    }

    pub fn config(&self) -> CaseConfig {
        CaseConfig::builtin(self.label()).expect("built-in case")
    }

    pub fn default_levels(&self) -> usize {
        match self {
            CaseId::Case1 | CaseId::Case2 => 5,
            CaseId::Network2d => 4,
            CaseId::Cube3d => 3,
        }
    }

    /// Multipliers of the base resolution for `levels` study levels.
    pub fn factors(&self, levels: usize) -> Vec<usize> {
        (0..levels).map(|k| 1 << k).collect()
    }

    /// Multiplier of the self-reference level, one refinement past the
    /// finest study level.
    pub fn reference_factor(&self, levels: usize) -> usize {
        1 << levels
    }

    /// Solver for the self-reference. A direct factorization of the 3D
    /// reference does not fit in a few gigabytes; ILU-preconditioned
    /// BiCGSTAB does.
    pub fn reference_options(&self, opts: &SolverOptions) -> SolverOptions {
        match self {
            CaseId::Cube3d => SolverOptions { kind: SolverKind::Iterative, ..opts.clone() },
            _ => opts.clone(),
        }
    }

    /// Strip rows of the equi-dimensional reference; a wider aperture gets
    /// more rows.
    pub fn strip_rows(&self) -> usize {
        match self {
            CaseId::Case2 => 4,
            _ => 2,
        }
    }

    pub fn has_oracle(&self) -> bool {
        matches!(self, CaseId::Case1 | CaseId::Case2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyLevel {
    pub level: usize,
    pub h: f64,
    /// Cells of all subdomains.
    pub n: usize,
    /// Cells of codimension-one faults.
    pub n_f: usize,
    pub error: f64,
    /// Order with respect to the previous level.
    pub eoc: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub case: CaseId,
    pub formulation: Formulation,
    pub levels: Vec<StudyLevel>,
}

impl StudyResult {
    pub fn errors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.error).collect()
    }

    pub fn h(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.h).collect()
    }

    /// Fitted order over the `pairs + 1` finest levels.
    pub fn fitted_eoc_finest(&self, pairs: usize) -> Result<f64, Error> {
        let n = self.levels.len();
        if pairs + 1 > n {
            return study_err("not enough levels for the requested fit");
        }
        let e = self.errors();
        let h = self.h();
        fitted_eoc(&e[n - pairs - 1..], &h[n - pairs - 1..])
    }

    pub fn mean_eoc(&self) -> Result<f64, Error> {
        let orders = eoc(&self.errors(), &self.h())?;
        Ok(orders.iter().sum::<f64>() / orders.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,h,N,N_f,error,eoc,formulation,case\n");
        for l in &self.levels {
            let eoc = l.eoc.map(|v| format!("{v:.6}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:.6e},{},{},{:.10e},{},{},{}",
                l.level,
                l.h,
                l.n,
                l.n_f,
                l.error,
                eoc,
                self.formulation.label(),
                self.case.label()
            )
            .unwrap();
        }
        out
    }
}

/// Fault-cell centroids, measures and pressures of one solution, grouped by
/// fault index.
#[derive(Clone, Debug, Default)]
pub struct FaultSamples {
    pub faults: Vec<(usize, Vec<Vec3>, Vec<f64>, Vec<f64>)>,
}

impl FaultSamples {
    pub fn collect(mesh: &MixedDimMesh, sol: &MdSolution) -> Self {
        let faults = mesh
            .subdomains
            .iter()
            .filter_map(|sd| match sd.kind {
                SubdomainKind::Fault { index } => {
                    let g = &sd.grid;
                    let pts = (0..g.num_cells()).map(|c| g.cell_centroid_ambient(c)).collect();
                    Some((index, pts, g.cell_volumes.clone(), sol.pressure[sd.id].clone()))
                }
                _ => None,
            })
            .collect();
        Self { faults }
    }

    pub fn num_cells(&self) -> usize {
        self.faults.iter().map(|f| f.1.len()).sum()
    }

    /// Error of `self` against `reference` sampled at this solution's
    /// fault-cell centroids.
    pub fn error_against(&self, reference: &Reference) -> Result<f64, Error> {
        let (mut p, mut r, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for (index, pts, vol, pressure) in &self.faults {
            let sampled = match reference {
                Reference::Profile { x, p } => {
                    let ref_pts: Vec<Vec3> = x.iter().map(|&x| [x, 0.0, 0.0]).collect();
                    let tgt: Vec<Vec3> = pts.iter().map(|q| [q[0], 0.0, 0.0]).collect();
                    sample_nearest(&tgt, &ref_pts, p)
                }
                Reference::Fine(fine) => {
                    let Some((_, fp, _, fv)) = fine.faults.iter().find(|f| f.0 == *index) else {
                        return study_err(format!("reference lacks fault {index}"));
                    };
                    sample_nearest(pts, fp, fv)
                }
            };
            p.extend_from_slice(pressure);
            r.extend(sampled);
            d.extend_from_slice(vol);
        }
        l2_fault_error(&p, &r, &d)
    }
}

#[derive(Clone, Debug)]
pub enum Reference {
    /// Equi-dimensional fault profile: column centres and mean strip pressure.
    Profile { x: Vec<f64>, p: Vec<f64> },
    /// Reduced-model solution on a finer nested grid.
    Fine(FaultSamples),
}

/// Columns and matrix rows of the equi-dimensional reference grid.
pub const ORACLE_COLUMNS: usize = 512;
pub const ORACLE_MATRIX_ROWS: usize = 256;

pub fn oracle_profile(cfg: &CaseConfig, strip_rows: usize) -> Result<Reference, Error> {
    let case = EquiDimCase::from_config(cfg, ORACLE_COLUMNS, ORACLE_MATRIX_ROWS, strip_rows)?;
    let prof = solve_equidim(&case)?.average_fault_pressure();
    Ok(Reference::Profile {
        x: prof.iter().map(|v| v.0).collect(),
        p: prof.iter().map(|v| v.1).collect(),
    })
}

/// Mesh of `cfg` with its base resolution multiplied by `factor`.
pub fn mesh_at(cfg: &CaseConfig, factor: usize) -> Result<MixedDimMesh, Error> {
    let res: Vec<usize> = cfg.domain.resolution.iter().map(|n| n * factor).collect();
    Ok(build_cartesian_md_mesh(&cfg.box_domain(), &res, &cfg.fault_specs())?)
}

/// One reduced-model solve of `cfg` at resolution multiplier `factor`.
pub fn solve_at(
    cfg: &CaseConfig,
    factor: usize,
    formulation: Formulation,
    opts: &SolverOptions,
) -> Result<(MixedDimMesh, MdSolution), Error> {
    let mesh = mesh_at(cfg, factor)?;
    let problem = problem_on_mesh(cfg, mesh, formulation)?;
    let system = assemble_global(&problem)?;
    let sol = solve(&system, opts)?;
    Ok((problem.mesh, sol))
}

/// Reference for a study of `case` with `levels` levels: the equi-dimensional
/// oracle when one exists, otherwise the semi-local solution one level
/// beyond the finest.
pub fn case_reference(case: CaseId, cfg: &CaseConfig, levels: usize, opts: &SolverOptions) -> Result<Reference, Error> {
    if case.has_oracle() {
        oracle_profile(cfg, case.strip_rows())
    } else {
        let ref_opts = case.reference_options(opts);
        let (mesh, sol) = solve_at(cfg, case.reference_factor(levels), Formulation::SemiLocal, &ref_opts)?;
        Ok(Reference::Fine(FaultSamples::collect(&mesh, &sol)))
    }
}

pub fn run_case_with_reference(
    case: CaseId,
    cfg: &CaseConfig,
    formulation: Formulation,
    levels: usize,
    reference: &Reference,
    opts: &SolverOptions,
) -> Result<StudyResult, Error> {
    if levels == 0 {
        return study_err("a study needs at least one level");
    }
    let mut out: Vec<StudyLevel> = Vec::with_capacity(levels);
    for (level, factor) in case.factors(levels).into_iter().enumerate() {
        let start = Instant::now();
        let (mesh, sol) = solve_at(cfg, factor, formulation, opts)?;
        let samples = FaultSamples::collect(&mesh, &sol);
        let error = samples.error_against(reference)?;
        let res = cfg.domain.resolution[0] * factor;
        let h = (cfg.domain.upper[0] - cfg.domain.lower[0]) / res as f64;
        let eoc = match out.last() {
            Some(prev) if prev.error > 0.0 && error > 0.0 => Some((prev.error / error).ln() / (prev.h / h).ln()),
            _ => None,
        };
        out.push(StudyLevel {
            level,
            h,
            n: mesh.num_cells(),
            n_f: samples.num_cells(),
            error,
            eoc,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(StudyResult { case, formulation, levels: out })
}

pub fn run_case(case: CaseId, formulation: Formulation, levels: usize, opts: &SolverOptions) -> Result<StudyResult, Error> {
    let cfg = case.config();
    let reference = case_reference(case, &cfg, levels, opts)?;
    run_case_with_reference(case, &cfg, formulation, levels, &reference, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_norm_examples() {
        let r = [1.0, 2.0, 3.0];
        let d = [0.1, 0.2, 0.3];
        assert_eq!(l2_fault_error(&r, &r, &d).unwrap(), 0.0);
        let twice: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert!((l2_fault_error(&twice, &r, &d).unwrap() - 1.0).abs() < 1e-15);
        assert!((l2_fault_error(&[1.0; 4], &[2.0; 4], &[0.25; 4]).unwrap() - 0.5).abs() < 1e-15);
        assert!(l2_fault_error(&[1.0], &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn error_norm_ignores_ordering() {
        let p = [1.0, 1.5, 2.5];
        let r = [1.1, 1.4, 2.0];
        let d = [0.2, 0.3, 0.5];
        let a = l2_fault_error(&p, &r, &d).unwrap();
        let b = l2_fault_error(&[p[2], p[0], p[1]], &[r[2], r[0], r[1]], &[d[2], d[0], d[1]]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn order_examples() {
        assert!((eoc(&[0.1, 0.05], &[0.2, 0.1]).unwrap()[0] - 1.0).abs() < 1e-14);
        assert!((eoc(&[0.1, 0.025], &[0.2, 0.1]).unwrap()[0] - 2.0).abs() < 1e-14);
        assert_eq!(eoc(&[0.1, 0.1], &[0.2, 0.1]).unwrap()[0], 0.0);
        assert!(eoc(&[0.1], &[0.2]).is_err());
        assert!(eoc(&[0.1, 0.0], &[0.2, 0.1]).is_err());
        let h = [0.4, 0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        assert!((fitted_eoc(&e, &h).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_sampling_averages_ties() {
        let pts = [[0.25, 0.0, 0.0], [0.75, 0.0, 0.0]];
        let vals = [1.0, 3.0];
        assert_eq!(sample_nearest(&[[0.5, 0.0, 0.0], [0.3, 0.0, 0.0]], &pts, &vals), vec![2.0, 1.0]);
    }

    #[test]
    fn self_reference_error_vanishes() {
        let cfg = CaseConfig::network2d();
        let opts = SolverOptions::default();
        let (mesh, sol) = solve_at(&cfg, 1, Formulation::SemiLocal, &opts).unwrap();
        let s = FaultSamples::collect(&mesh, &sol);
        assert_eq!(s.error_against(&Reference::Fine(s.clone())).unwrap(), 0.0);
    }

    #[test]
    fn case_labels_round_trip() {
        for c in CaseId::ALL {
            assert_eq!(CaseId::parse(c.label()), Some(c));
        }
        assert_eq!(CaseId::parse("case9"), None);
    }

    #[test]
    fn csv_has_header_and_blank_first_order() {
        let r = StudyResult {
            case: CaseId::Case1,
            formulation: Formulation::SemiLocal,
            levels: vec![StudyLevel { level: 0, h: 0.25, n: 20, n_f: 4, error: 0.1, eoc: None, seconds: 0.0 }],
        };
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("level,h,N,N_f,error,eoc,formulation,case"));
        assert_eq!(lines.next(), Some("0,2.500000e-1,20,4,1.0000000000e-1,,semilocal,case1"));
    }
}

//! `mdflow`: run mixed-dimensional flow cases and convergence studies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mdflow_core::assembly::{assemble_global, mass_balance_report, solve, Formulation, SolverKind, SolverOptions};
use mdflow_core::config::{problem_on_mesh, CaseConfig};
use mdflow_core::mesh::io::export_text;
use mdflow_core::output::{
    compare_table, fault_pressure_csv, mass_balance_text, matrix_dump, mortar_flux_csv, write_subdomain_vtk,
};
use mdflow_core::verify::{case_reference, run_case_with_reference, CaseId};
use mdflow_core::Error;

#[derive(Parser)]
#[command(name = "mdflow", version, about = "Mixed-dimensional Darcy flow with full-tensor faults")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    #[value(name = "SL", alias = "semilocal", alias = "sl")]
    SemiLocal,
    #[value(name = "L", alias = "local", alias = "l")]
    Local,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::SemiLocal => Formulation::SemiLocal,
            FormulationArg::Local => Formulation::Local,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and write VTK fields, mortar fluxes and a mass balance.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the one named in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refinement level (base resolution times 2^level).
        #[arg(long, default_value_t = 0)]
        level: u32,
        #[arg(long, value_enum)]
        formulation: Option<FormulationArg>,
        /// Also write the global matrix as `row col value` lines.
        #[arg(long)]
        dump_matrix: bool,
    },
    /// Refinement study of a built-in case; prints the study CSV.
    Converge {
        case: String,
        #[arg(long, value_enum, default_value = "SL")]
        formulation: FormulationArg,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
        levels: Option<u32>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semi-local and local studies of a built-in case side by side.
    Compare {
        case: String,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
        levels: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the mixed-dimensional mesh of a config and export it as text.
    Mesh {
        config: PathBuf,
        #[arg(long)]
        export: PathBuf,
        #[arg(long, default_value_t = 0)]
        level: u32,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Solver(format!("cannot write {}: {e}", path.display()))
}

fn solver_options(base: SolverOptions) -> Result<SolverOptions, Failure> {
    match std::env::var("MDFLOW_SOLVER") {
        Ok(v) => match SolverKind::parse(&v) {
            Some(kind) => Ok(SolverOptions { kind, ..base }),
            None => Err(Failure::Usage(format!("MDFLOW_SOLVER must be 'direct' or 'iterative', got '{v}'"))),
        },
        Err(_) => Ok(base),
    }
}

fn parse_case(name: &str) -> Result<CaseId, Failure> {
    CaseId::parse(name).ok_or_else(|| {
        let known: Vec<&str> = CaseId::ALL.iter().map(|c| c.label()).collect();
        Failure::Usage(format!("unknown case '{name}' (known: {})", known.join(", ")))
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<CaseConfig, Failure> {
    CaseConfig::from_file(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, level, formulation, dump_matrix } => {
            let cfg = load(&config)?;
            let opts = solver_options(cfg.solver_options())?;
            let formulation = formulation.map(Formulation::from).unwrap_or_else(|| cfg.formulation());
            let mesh = cfg.build_mesh(level).map_err(Error::from)?;
            let problem = problem_on_mesh(&cfg, mesh, formulation)?;
            let system = assemble_global(&problem).map_err(Error::from)?;
            let sol = solve(&system, &opts).map_err(Error::from)?;
            let mb = mass_balance_report(&system, &sol);

            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let files = write_subdomain_vtk(&dir, &cfg.name, &problem.mesh, &sol).map_err(|e| io_failure(&dir, e))?;
            write(&dir.join(format!("{}_mortar_flux.csv", cfg.name)), &mortar_flux_csv(&problem.mesh, &sol))?;
            write(&dir.join(format!("{}_fault_pressure.csv", cfg.name)), &fault_pressure_csv(&problem.mesh, &sol))?;
            write(&dir.join(format!("{}_mass_balance.txt", cfg.name)), &mass_balance_text(&mb))?;
            if dump_matrix {
                write(&dir.join(format!("{}_matrix.txt", cfg.name)), &matrix_dump(&system.matrix))?;
            }
            eprintln!(
                "{}: {} unknowns, {} subdomain files in {}, relative residual {:.2e}, max cell residual {:.2e}",
                cfg.name,
                system.num_unknowns(),
                files.len(),
                dir.display(),
                sol.relative_residual,
                mb.max_cell_residual
            );
            Ok(())
        }
        Command::Converge { case, formulation, levels, out } => {
            let id = parse_case(&case)?;
            let cfg = id.config();
            let opts = solver_options(cfg.solver_options())?;
            let levels = levels.map_or(id.default_levels(), |l| l as usize);
            let reference = case_reference(id, &cfg, levels, &opts)?;
            let study = run_case_with_reference(id, &cfg, formulation.into(), levels, &reference, &opts)?;
            emit(out.as_deref(), &study.to_csv())
        }
        Command::Compare { case, levels, out } => {
            let id = parse_case(&case)?;
            let cfg = id.config();
            let opts = solver_options(cfg.solver_options())?;
            let levels = levels.map_or(id.default_levels(), |l| l as usize);
            let reference = case_reference(id, &cfg, levels, &opts)?;
            let semi = run_case_with_reference(id, &cfg, Formulation::SemiLocal, levels, &reference, &opts)?;
            let local = run_case_with_reference(id, &cfg, Formulation::Local, levels, &reference, &opts)?;
            emit(out.as_deref(), &compare_table(&semi, &local))
        }
        Command::Mesh { config, export, level } => {
            let cfg = load(&config)?;
            let mesh = cfg.build_mesh(level).map_err(Error::from)?;
            write(&export, &export_text(&mesh))?;
            eprintln!(
                "{}: {} subdomains, {} interfaces, {} cells written to {}",
                cfg.name,
                mesh.subdomains.len(),
                mesh.interfaces.len(),
                mesh.num_cells(),
                export.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

//! Writers for cell fields (legacy VTK), mortar fluxes, fault profiles,
//! mass-balance reports, study tables and matrix dumps. All numbers are
//! printed with a fixed format so repeated runs produce identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::assembly::{MassBalance, MdSolution};
use crate::mesh::{CellGrid, MixedDimMesh, SubdomainKind};
use crate::sparse::CsrMatrix;
use crate::verify::StudyResult;

fn vtk_cell_type(dim: usize) -> u8 {
    match dim {
        0 => 1,
        1 => 3,
        2 => 9,
        _ => 12,
    }
}

/// Legacy ASCII unstructured grid with one scalar cell field per entry of
/// `fields`. Points are written in ambient coordinates.
pub fn vtk_string(grid: &CellGrid, title: &str, fields: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{title}").unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", grid.nodes.len()).unwrap();
    for x in &grid.nodes {
        let a = grid.frame.to_ambient(x);
        writeln!(s, "{:.12e} {:.12e} {:.12e}", a[0], a[1], a[2]).unwrap();
    }
    let nc = grid.num_cells();
    let size: usize = grid.cell_nodes.iter().map(|c| c.len() + 1).sum();
    writeln!(s, "CELLS {nc} {size}").unwrap();
    for nodes in &grid.cell_nodes {
        write!(s, "{}", nodes.len()).unwrap();
        for n in nodes {
            write!(s, " {n}").unwrap();
        }
        s.push('\n');
    }
    writeln!(s, "CELL_TYPES {nc}").unwrap();
    for _ in 0..nc {
        writeln!(s, "{}", vtk_cell_type(grid.dim)).unwrap();
    }
    if !fields.is_empty() {
        writeln!(s, "CELL_DATA {nc}").unwrap();
        for (name, values) in fields {
            writeln!(s, "SCALARS {name} double 1").unwrap();
            writeln!(s, "LOOKUP_TABLE default").unwrap();
            for v in values.iter() {
                writeln!(s, "{v:.12e}").unwrap();
            }
        }
    }
    s
}

/// One `.vtk` file per subdomain, named `<prefix>_sd<id>_<dim>d.vtk`.
pub fn write_subdomain_vtk(dir: &Path, prefix: &str, mesh: &MixedDimMesh, sol: &MdSolution) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for sd in &mesh.subdomains {
        let path = dir.join(format!("{prefix}_sd{}_{}d.vtk", sd.id, sd.grid.dim));
        let title = format!("{prefix} subdomain {}", sd.id);
        std::fs::write(&path, vtk_string(&sd.grid, &title, &[("pressure", &sol.pressure[sd.id])]))?;
        out.push(path);
    }
    Ok(out)
}

/// Mortar fluxes, one row per mortar cell, located at the lower cell
/// centroid. Positive flux runs from the higher into the lower subdomain.
pub fn mortar_flux_csv(mesh: &MixedDimMesh, sol: &MdSolution) -> String {
    let mut s = String::from("interface,higher,lower,side,cell,x,y,z,measure,flux\n");
    for (j, intf) in mesh.interfaces.iter().enumerate() {
        let lg = &mesh.subdomains[intf.lower].grid;
        for m in 0..intf.num_cells() {
            let x = lg.cell_centroid_ambient(intf.lower_cells[m]);
            writeln!(
                s,
                "{j},{},{},{},{m},{:.10e},{:.10e},{:.10e},{:.10e},{:.12e}",
                intf.higher, intf.lower, intf.side_sign, x[0], x[1], x[2], intf.measures[m], sol.mortar_flux[j][m]
            )
            .unwrap();
        }
    }
    s
}

/// Pressure in every codimension-one fault cell.
pub fn fault_pressure_csv(mesh: &MixedDimMesh, sol: &MdSolution) -> String {
    let mut s = String::from("fault,subdomain,cell,x,y,z,pressure\n");
    for sd in &mesh.subdomains {
        if let SubdomainKind::Fault { index } = sd.kind {
            for c in 0..sd.grid.num_cells() {
                let x = sd.grid.cell_centroid_ambient(c);
                writeln!(
                    s,
                    "{index},{},{c},{:.10e},{:.10e},{:.10e},{:.12e}",
                    sd.id, x[0], x[1], x[2], sol.pressure[sd.id][c]
                )
                .unwrap();
            }
        }
    }
    s
}

pub fn mass_balance_text(mb: &MassBalance) -> String {
    let mut s = String::new();
    writeln!(s, "flux scale            {:.6e}", mb.flux_scale).unwrap();
    writeln!(s, "boundary inflow       {:.12e}", mb.inflow).unwrap();
    writeln!(s, "boundary outflow      {:.12e}", mb.outflow).unwrap();
    writeln!(s, "total source          {:.12e}", mb.total_source).unwrap();
    writeln!(s, "global imbalance      {:.3e}", mb.global_imbalance).unwrap();
    writeln!(s, "max cell residual     {:.3e}", mb.max_cell_residual).unwrap();
    writeln!(s, "continuity defect     {:.3e}", mb.continuity_defect).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "subdomain dim boundary_outflow mortar_inflow source max_cell_residual").unwrap();
    for b in &mb.subdomains {
        writeln!(
            s,
            "{} {} {:.12e} {:.12e} {:.12e} {:.3e}",
            b.subdomain, b.dim, b.boundary_outflow, b.mortar_inflow, b.source, b.max_cell_residual
        )
        .unwrap();
    }
    s
}

/// Side-by-side errors of a semi-local and a local study on the same levels.
pub fn compare_table(semi: &StudyResult, local: &StudyResult) -> String {
    let mut s = String::from("level,h,N_f,error_semilocal,eoc_semilocal,error_local,eoc_local,case\n");
    let fmt_eoc = |e: Option<f64>| e.map(|v| format!("{v:.6}")).unwrap_or_default();
    for (a, b) in semi.levels.iter().zip(&local.levels) {
        writeln!(
            s,
            "{},{:.6e},{},{:.10e},{},{:.10e},{},{}",
            a.level,
            a.h,
            a.n_f,
            a.error,
            fmt_eoc(a.eoc),
            b.error,
            fmt_eoc(b.eoc),
            semi.case.label()
        )
        .unwrap();
    }
    s
}

/// `row col value` per stored entry, rows in order.
pub fn matrix_dump(m: &CsrMatrix) -> String {
    let mut s = String::new();
    writeln!(s, "# {} {} {}", m.nrows(), m.ncols(), m.nnz()).unwrap();
    for (r, c, v) in m.triplets() {
        writeln!(s, "{r} {c} {v:.17e}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tensor_product_grid;

    #[test]
    fn vtk_layout() {
        let g = tensor_product_grid(&[0.0, 0.5, 1.0], &[0.0, 1.0]).unwrap();
        let s = vtk_string(&g, "t", &[("pressure", &[1.0, 2.0])]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[4], "POINTS 6 double");
        assert!(s.contains("CELLS 2 10\n4 0 1 4 3\n4 1 2 5 4\n"));
        assert!(s.contains("CELL_TYPES 2\n9\n9\n"));
        assert!(s.contains("CELL_DATA 2\nSCALARS pressure double 1\nLOOKUP_TABLE default\n1.000000000000e0\n"));
    }

    #[test]
    fn matrix_dump_lists_triplets() {
        let m = CsrMatrix::from_triplets(2, 2, &[(1, 0, 2.5), (0, 1, -1.0)]);
        let s = matrix_dump(&m);
        assert_eq!(s, "# 2 2 2\n0 1 -1.00000000000000000e0\n1 0 2.50000000000000000e0\n");
    }
}

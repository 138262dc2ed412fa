//! Mixed-dimensional geometry: fixed-dimensional cell grids (matrix, faults,
//! intersections) linked by mortar interfaces.

mod cartesian;
pub mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{add, dot, norm, scale, PermTensor, Vec3};

pub use cartesian::{build_cartesian_md_mesh, tensor_product_grid};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("fault '{fault}' is not grid-representable: {reason}")]
    NotRepresentable { fault: String, reason: String },
    #[error("fault surfaces '{a}' and '{b}' overlap")]
    Overlap { a: String, b: String },
    #[error("invalid fault '{fault}': {reason}")]
    InvalidFault { fault: String, reason: String },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("mesh file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("inconsistent mesh: {0}")]
    Inconsistent(String),
}

/// Classification of a grid face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    Interior,
    /// On the outer boundary of the domain box, normal to ambient `axis`.
    Domain { axis: usize, upper: bool },
    /// Paired with a mortar cell of some interface.
    Coupled,
    /// Boundary of an immersed object away from the domain boundary.
    Tip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub area: f64,
    pub centroid: Vec3,
    /// Unit normal; for interior faces it points from `cells.0` to `cells.1`,
    /// for boundary faces outward.
    pub normal: Vec3,
    pub cells: (usize, Option<usize>),
    pub nodes: Vec<usize>,
    pub tag: BoundaryTag,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

/// Affine embedding of a grid's local coordinates into ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub origin: Vec3,
    pub axes: Vec<Vec3>,
}

impl Frame {
    pub fn to_ambient(&self, local: &Vec3) -> Vec3 {
        self.axes
            .iter()
            .enumerate()
            .fold(self.origin, |acc, (k, axis)| add(&acc, &scale(axis, local[k])))
    }
}

/// A grid of fixed topological dimension in its own local coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGrid {
    pub dim: usize,
    pub frame: Frame,
    pub nodes: Vec<Vec3>,
    pub cell_volumes: Vec<f64>,
    pub cell_centroids: Vec<Vec3>,
    pub cell_faces: Vec<Vec<usize>>,
    /// Cell corner nodes in VTK order.
    pub cell_nodes: Vec<Vec<usize>>,
    pub faces: Vec<Face>,
}

impl CellGrid {
    pub fn num_cells(&self) -> usize {
        self.cell_volumes.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// +1 if the face normal points out of `cell`, -1 otherwise.
    pub fn face_sign(&self, cell: usize, face: usize) -> f64 {
        if self.faces[face].cells.0 == cell {
            1.0
        } else {
            -1.0
        }
    }

    pub fn outward_normal(&self, cell: usize, face: usize) -> Vec3 {
        scale(&self.faces[face].normal, self.face_sign(cell, face))
    }

    pub fn cell_centroid_ambient(&self, cell: usize) -> Vec3 {
        self.frame.to_ambient(&self.cell_centroids[cell])
    }

    pub fn face_centroid_ambient(&self, face: usize) -> Vec3 {
        self.frame.to_ambient(&self.faces[face].centroid)
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volumes.iter().sum()
    }

    /// Checks the neighbour, unit-normal and closed-cell invariants.
    pub fn validate(&self) -> Result<(), MeshError> {
        let err = |m: String| Err(MeshError::Inconsistent(m));
        if self.cell_faces.len() != self.num_cells() || self.cell_centroids.len() != self.num_cells() {
            return err("cell arrays differ in length".into());
        }
        for (f, face) in self.faces.iter().enumerate() {
            if let Some(c1) = face.cells.1 {
                if c1 == face.cells.0 {
                    return err(format!("interior face {f} has identical neighbours"));
                }
                if face.tag != BoundaryTag::Interior {
                    return err(format!("interior face {f} carries a boundary tag"));
                }
            } else if face.tag == BoundaryTag::Interior {
                return err(format!("boundary face {f} tagged interior"));
            }
            if (norm(&face.normal) - 1.0).abs() > 1e-12 {
                return err(format!("face {f} normal is not unit length"));
            }
        }
        for (c, faces) in self.cell_faces.iter().enumerate() {
            let mut sum = [0.0; 3];
            for &f in faces {
                let face = &self.faces[f];
                if face.cells.0 != c && face.cells.1 != Some(c) {
                    return err(format!("cell {c} lists face {f} that does not bound it"));
                }
                sum = add(&sum, &scale(&self.outward_normal(c, f), face.area));
            }
            let scale_ref: f64 = faces.iter().map(|&f| self.faces[f].area).sum::<f64>().max(1e-300);
            if norm(&sum) > 1e-10 * scale_ref {
                return err(format!("cell {c} is not closed"));
            }
            if self.dim > 0 {
                for &f in faces {
                    let d = dot(
                        &crate::geometry::sub(&self.faces[f].centroid, &self.cell_centroids[c]),
                        &self.outward_normal(c, f),
                    );
                    if d <= 0.0 {
                        return err(format!("face {f} normal is not outward from cell {c}"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SubdomainKind {
    Matrix,
    /// A user fault, by its index in the fault list.
    Fault { index: usize },
    /// Intersection of the listed higher-dimensional subdomains.
    Intersection { parents: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subdomain {
    pub id: usize,
    pub kind: SubdomainKind,
    /// Ambient dimension minus grid dimension.
    pub codim: usize,
    pub grid: CellGrid,
}

/// Mortar grid between a lower-dimensional subdomain and one side of its
/// higher-dimensional neighbour. Matching grids: mortar cell `m` coincides
/// with face `higher_faces[m]` of the higher grid and cell `lower_cells[m]` of
/// the lower grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MortarInterface {
    pub id: usize,
    pub higher: usize,
    pub lower: usize,
    /// +1 on the side the lower object's normal points into, -1 otherwise.
    pub side_sign: i32,
    pub measures: Vec<f64>,
    pub higher_faces: Vec<usize>,
    pub lower_cells: Vec<usize>,
}

impl MortarInterface {
    pub fn num_cells(&self) -> usize {
        self.measures.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionTarget {
    Higher,
    Lower,
}

/// Signed permutation between mortar cells and subdomain entities; with
/// matching grids every weight is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionTable {
    pub target: ProjectionTarget,
    /// `(mortar cell, face or cell id, weight)`.
    pub entries: Vec<(usize, usize, f64)>,
}

impl ProjectionTable {
    /// Inverse map, entity id -> mortar cell.
    pub fn inverse(&self) -> Vec<(usize, usize, f64)> {
        self.entries.iter().map(|&(m, e, w)| (e, m, 1.0 / w)).collect()
    }
}

pub fn mortar_projection(interface: &MortarInterface, target: ProjectionTarget) -> ProjectionTable {
    let map = match target {
        ProjectionTarget::Higher => &interface.higher_faces,
        ProjectionTarget::Lower => &interface.lower_cells,
    };
    ProjectionTable {
        target,
        entries: map.iter().enumerate().map(|(m, &e)| (m, e, 1.0)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedDimMesh {
    pub ambient_dim: usize,
    pub domain: BoxDomain,
    pub subdomains: Vec<Subdomain>,
    pub interfaces: Vec<MortarInterface>,
}

impl MixedDimMesh {
    /// Ŝ: higher-dimensional neighbours of subdomain `i`.
    pub fn higher_neighbors(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.interfaces.iter().filter(|m| m.lower == i).map(|m| m.higher).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Š: lower-dimensional neighbours of subdomain `i`.
    pub fn lower_neighbors(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.interfaces.iter().filter(|m| m.higher == i).map(|m| m.lower).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn num_cells(&self) -> usize {
        self.subdomains.iter().map(|s| s.grid.num_cells()).sum()
    }

    pub fn num_mortar_cells(&self) -> usize {
        self.interfaces.iter().map(|m| m.num_cells()).sum()
    }

    /// Subdomains holding user faults, in fault order.
    pub fn fault_subdomains(&self) -> Vec<&Subdomain> {
        let mut v: Vec<&Subdomain> = self
            .subdomains
            .iter()
            .filter(|s| matches!(s.kind, SubdomainKind::Fault { .. }))
            .collect();
        v.sort_by_key(|s| match s.kind {
            SubdomainKind::Fault { index } => index,
            _ => unreachable!(),
        });
        v
    }

    /// For every face of subdomain `sd`, the `(interface, mortar cell)` it is
    /// paired with, if any.
    pub fn face_mortar_map(&self, sd: usize) -> Vec<Option<(usize, usize)>> {
        let mut map = vec![None; self.subdomains[sd].grid.num_faces()];
        for intf in self.interfaces.iter().filter(|m| m.higher == sd) {
            for (m, &f) in intf.higher_faces.iter().enumerate() {
                map[f] = Some((intf.id, m));
            }
        }
        map
    }

    /// Checks grid invariants, the dimension-ordered DAG and mortar matching.
    pub fn validate(&self) -> Result<(), MeshError> {
        let err = |m: String| Err(MeshError::Inconsistent(m));
        for (i, sd) in self.subdomains.iter().enumerate() {
            if sd.id != i {
                return err(format!("subdomain {i} carries id {}", sd.id));
            }
            if sd.grid.dim + sd.codim != self.ambient_dim {
                return err(format!("subdomain {i} has dim {} and codim {}", sd.grid.dim, sd.codim));
            }
            sd.grid.validate()?;
            if sd.codim == 0 && !self.higher_neighbors(i).is_empty() {
                return err(format!("top-dimensional subdomain {i} has a higher neighbour"));
            }
        }
        let mut paired = vec![Vec::new(); self.subdomains.len()];
        for (k, intf) in self.interfaces.iter().enumerate() {
            if intf.id != k {
                return err(format!("interface {k} carries id {}", intf.id));
            }
            let hi = &self.subdomains[intf.higher].grid;
            let lo = &self.subdomains[intf.lower].grid;
            if hi.dim != lo.dim + 1 {
                return err(format!("interface {k} connects dimensions {} and {}", hi.dim, lo.dim));
            }
            if intf.side_sign.abs() != 1 {
                return err(format!("interface {k} has side sign {}", intf.side_sign));
            }
            let n = intf.num_cells();
            if intf.higher_faces.len() != n || intf.lower_cells.len() != n {
                return err(format!("interface {k} has inconsistent mortar tables"));
            }
            for m in 0..n {
                let f = intf.higher_faces[m];
                let c = intf.lower_cells[m];
                let face = &hi.faces[f];
                if !face.is_boundary() || face.tag != BoundaryTag::Coupled {
                    return err(format!("interface {k} mortar {m} maps to a non-coupled face"));
                }
                let (fa, ca, ma) = (face.area, lo.cell_volumes[c], intf.measures[m]);
                if (fa - ma).abs() > 1e-12 * ma || (ca - ma).abs() > 1e-12 * ma {
                    return err(format!("interface {k} mortar {m} measures differ"));
                }
                paired[intf.higher].push(f);
            }
        }
        for (i, faces) in paired.iter_mut().enumerate() {
            let coupled = self.subdomains[i]
                .grid
                .faces
                .iter()
                .filter(|f| f.tag == BoundaryTag::Coupled)
                .count();
            let n = faces.len();
            faces.sort_unstable();
            faces.dedup();
            if faces.len() != n || n != coupled {
                return err(format!("coupled faces of subdomain {i} are not paired exactly once"));
            }
        }
        Ok(())
    }
}

/// Axis-aligned box `[lower, upper]` in 2 or 3 dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Material of one fault side, before mixed-dimensional scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideMaterial {
    /// Off-diagonal permeability in the fault's tangent basis.
    pub k_t: Vec<f64>,
    pub k_perp: f64,
}

/// Axis-aligned planar fault. The fault normal is `+e_{normal_axis}`; the
/// "plus" side is where that normal points.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultSpec {
    pub id: String,
    pub normal_axis: usize,
    pub position: f64,
    /// Extent along each tangent axis, tangent axes in increasing order.
    pub extent: Vec<[f64; 2]>,
    pub aperture: f64,
    pub k_parallel: PermTensor,
    pub plus: SideMaterial,
    pub minus: SideMaterial,
}

impl FaultSpec {
    pub fn tangent_axes(&self, ambient_dim: usize) -> Vec<usize> {
        (0..ambient_dim).filter(|&a| a != self.normal_axis).collect()
    }
}

/// Rebuilds the mesh of `spec` with its base resolution scaled by `2^level`.
pub fn refine(spec: &crate::config::CaseConfig, level: u32) -> Result<MixedDimMesh, MeshError> {
    let factor = 1usize << level;
    let resolution: Vec<usize> = spec.domain.resolution.iter().map(|n| n * factor).collect();
    build_cartesian_md_mesh(&spec.box_domain(), &resolution, &spec.fault_specs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fault(id: &str, normal_axis: usize, position: f64, extent: Vec<[f64; 2]>) -> FaultSpec {
        let d = extent.len();
        FaultSpec {
            id: id.into(),
            normal_axis,
            position,
            extent,
            aperture: 0.01,
            k_parallel: PermTensor::isotropic(d, 1.0),
            plus: SideMaterial { k_t: vec![0.0; d], k_perp: 1.0 },
            minus: SideMaterial { k_t: vec![0.0; d], k_perp: 1.0 },
        }
    }

    #[test]
    fn single_fault_entity_counts() {
        let mesh = build_cartesian_md_mesh(&BoxDomain::unit(2), &[4, 4], &[fault("f", 1, 0.5, vec![[0.0, 1.0]])])
            .unwrap();
        assert_eq!(mesh.subdomains.len(), 2);
        let matrix = &mesh.subdomains[0].grid;
        assert_eq!(matrix.num_cells(), 16);
        // 2*4*5 faces of a 4x4 grid plus one duplicate per slit face
        assert_eq!(matrix.num_faces(), 40 + 4);
        assert_eq!(matrix.faces.iter().filter(|f| f.tag == BoundaryTag::Coupled).count(), 8);
        assert_eq!(mesh.subdomains[1].grid.num_cells(), 4);
        assert_eq!(mesh.interfaces.len(), 2);
        assert!(mesh.interfaces.iter().all(|m| m.num_cells() == 4));
        let signs: Vec<i32> = mesh.interfaces.iter().map(|m| m.side_sign).collect();
        assert!(signs.contains(&1) && signs.contains(&-1));
        assert_eq!(mesh.higher_neighbors(1), vec![0]);
        assert_eq!(mesh.lower_neighbors(0), vec![1]);
        assert!(mesh.higher_neighbors(0).is_empty());
    }

    #[test]
    fn no_faults_gives_single_subdomain() {
        for n in [1, 3, 8] {
            let mesh = build_cartesian_md_mesh(&BoxDomain::unit(2), &[n, n], &[]).unwrap();
            assert_eq!(mesh.subdomains.len(), 1);
            assert!(mesh.interfaces.is_empty());
        }
    }

    #[test]
    fn t_junction_entity_counts() {
        let faults = [
            fault("h", 1, 0.5, vec![[0.0, 1.0]]),
            fault("v", 0, 0.5, vec![[0.5, 1.0]]),
        ];
        let mesh = build_cartesian_md_mesh(&BoxDomain::unit(2), &[8, 8], &faults).unwrap();
        assert_eq!(mesh.subdomains.len(), 4);
        assert_eq!(mesh.subdomains[1].grid.num_cells(), 8);
        assert_eq!(mesh.subdomains[2].grid.num_cells(), 4);
        let point = &mesh.subdomains[3];
        assert_eq!(point.grid.dim, 0);
        assert_eq!(point.grid.cell_centroid_ambient(0), [0.5, 0.5, 0.0]);
        // the horizontal fault grid is slit at the intersection node
        let h = &mesh.subdomains[1].grid;
        assert_eq!(h.faces.iter().filter(|f| f.tag == BoundaryTag::Coupled).count(), 2);
        assert_eq!(h.num_faces(), 9 + 1);
        // two sides per fault plus one per adjoining branch of the point
        let fault_ifaces = mesh.interfaces.iter().filter(|m| m.higher == 0).count();
        let point_ifaces: Vec<_> = mesh.interfaces.iter().filter(|m| m.lower == 3).collect();
        assert_eq!(fault_ifaces, 4);
        assert_eq!(point_ifaces.len(), 3);
        assert!(point_ifaces.iter().all(|m| m.num_cells() == 1));
        assert_eq!(mesh.higher_neighbors(3), vec![1, 2]);
    }

    #[test]
    fn fault_off_grid_is_rejected() {
        let e = build_cartesian_md_mesh(&BoxDomain::unit(2), &[4, 4], &[fault("bad", 1, 0.3, vec![[0.0, 1.0]])])
            .unwrap_err();
        assert!(matches!(e, MeshError::NotRepresentable { ref fault, .. } if fault == "bad"));
        let e = build_cartesian_md_mesh(&BoxDomain::unit(2), &[4, 4], &[fault("tip", 1, 0.5, vec![[0.1, 1.0]])])
            .unwrap_err();
        assert!(matches!(e, MeshError::NotRepresentable { .. }));
    }

    #[test]
    fn overlapping_faults_are_rejected() {
        let faults = [
            fault("a", 1, 0.5, vec![[0.0, 0.75]]),
            fault("b", 1, 0.5, vec![[0.5, 1.0]]),
        ];
        let e = build_cartesian_md_mesh(&BoxDomain::unit(2), &[4, 4], &faults).unwrap_err();
        assert!(matches!(e, MeshError::Overlap { .. }));
    }

    #[test]
    fn projections_are_one_to_one_and_measure_preserving() {
        let mesh = build_cartesian_md_mesh(&BoxDomain::unit(2), &[4, 4], &[fault("f", 1, 0.5, vec![[0.0, 1.0]])])
            .unwrap();
        let intf = &mesh.interfaces[0];
        let hi = mortar_projection(intf, ProjectionTarget::Higher);
        let lo = mortar_projection(intf, ProjectionTarget::Lower);
        assert_eq!(hi.entries.len(), 4);
        let mut cells: Vec<usize> = lo.entries.iter().map(|e| e.1).collect();
        cells.sort_unstable();
        assert_eq!(cells, vec![0, 1, 2, 3]);
        // round trip mortar -> entity -> mortar is the identity
        for (&(m, e, w), &(e2, m2, w2)) in hi.entries.iter().zip(hi.inverse().iter()) {
            assert_eq!((m, e, w * w2), (m2, e2, 1.0));
        }
        let grid = &mesh.subdomains[0].grid;
        let fault_grid = &mesh.subdomains[1].grid;
        for m in 0..intf.num_cells() {
            assert_eq!(intf.measures[m], grid.faces[intf.higher_faces[m]].area);
            assert_eq!(intf.measures[m], fault_grid.cell_volumes[intf.lower_cells[m]]);
            let xf = grid.face_centroid_ambient(intf.higher_faces[m]);
            let xc = fault_grid.cell_centroid_ambient(intf.lower_cells[m]);
            assert!(crate::geometry::norm(&crate::geometry::sub(&xf, &xc)) < 1e-14);
        }
    }

    #[test]
    fn three_planes_in_a_cube() {
        let full = vec![[0.0, 1.0], [0.0, 1.0]];
        let faults = [
            fault("x", 0, 0.5, full.clone()),
            fault("y", 1, 0.5, full.clone()),
            fault("z", 2, 0.5, full),
        ];
        let mesh = build_cartesian_md_mesh(&BoxDomain::unit(3), &[4, 4, 4], &faults).unwrap();
        let dims: Vec<usize> = mesh.subdomains.iter().map(|s| s.grid.dim).collect();
        assert_eq!(dims, vec![3, 2, 2, 2, 1, 1, 1, 0]);
        // 2 sides per fault, 4 branches per line, 2 branches per line at the point
        assert_eq!(mesh.interfaces.len(), 6 + 12 + 6);
        for line in 4..7 {
            assert_eq!(mesh.higher_neighbors(line).len(), 2);
            assert_eq!(mesh.subdomains[line].grid.num_cells(), 4);
        }
        assert_eq!(mesh.higher_neighbors(7), vec![4, 5, 6]);
    }

    #[test]
    fn construction_is_deterministic() {
        let faults = [
            fault("h", 1, 0.5, vec![[0.0, 1.0]]),
            fault("v", 0, 0.5, vec![[0.5, 1.0]]),
        ];
        let a = build_cartesian_md_mesh(&BoxDomain::unit(2), &[8, 8], &faults).unwrap();
        let b = build_cartesian_md_mesh(&BoxDomain::unit(2), &[8, 8], &faults).unwrap();
        assert_eq!(a, b);
    }
}

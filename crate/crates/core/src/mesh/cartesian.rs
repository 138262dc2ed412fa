//! Conforming Cartesian mesher for networks of axis-aligned faults.
//!
//! Every object (matrix, fault, intersection line or point) is an integer box
//! on the lattice of the background grid. Objects of dimension `k - 1` that
//! lie inside an object of dimension `k` become slits of its patch grid:
//! faces on a slit interior are duplicated, faces on a slit at the object's
//! own boundary are coupled once.

use std::collections::BTreeMap;

use super::{BoundaryTag, BoxDomain, CellGrid, Face, FaultSpec, Frame, MeshError, MixedDimMesh, MortarInterface,
            Subdomain, SubdomainKind};

#[derive(Clone, Debug)]
struct Obj {
    lo: [i64; 3],
    hi: [i64; 3],
    name: String,
    kind: SubdomainKind,
}

impl Obj {
    fn span(&self, d: usize) -> Vec<usize> {
        (0..d).filter(|&a| self.hi[a] > self.lo[a]).collect()
    }

    fn contains(&self, other: &Obj) -> bool {
        (0..3).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    fn same_box(&self, other: &Obj) -> bool {
        self.lo == other.lo && self.hi == other.hi
    }

    fn intersect(&self, other: &Obj) -> Option<([i64; 3], [i64; 3])> {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for a in 0..3 {
            lo[a] = self.lo[a].max(other.lo[a]);
            hi[a] = self.hi[a].min(other.hi[a]);
            if lo[a] > hi[a] {
                return None;
            }
        }
        Some((lo, hi))
    }
}

fn box_dim(lo: &[i64; 3], hi: &[i64; 3]) -> usize {
    (0..3).filter(|&a| hi[a] > lo[a]).count()
}

/// All multi-indices of `counts`, first axis fastest.
fn multi_indices(counts: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut m = vec![0usize; counts.len()];
    for _ in 0..total {
        out.push(m.clone());
        for (k, c) in counts.iter().enumerate() {
            m[k] += 1;
            if m[k] < *c {
                break;
            }
            m[k] = 0;
        }
    }
    out
}

fn linear(m: &[usize], counts: &[usize]) -> usize {
    m.iter().zip(counts).rev().fold(0, |acc, (i, n)| acc * n + i)
}

fn unit(a: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[a] = 1.0;
    e
}

struct Lattice {
    d: usize,
    lower: [f64; 3],
    h: [f64; 3],
    n: [i64; 3],
}

impl Lattice {
    fn coord(&self, a: usize, idx: i64) -> f64 {
        if a < self.d {
            self.lower[a] + idx as f64 * self.h[a]
        } else {
            0.0
        }
    }

    fn index(&self, a: usize, x: f64) -> Option<i64> {
        let t = (x - self.lower[a]) / self.h[a];
        let r = t.round();
        ((t - r).abs() <= 1e-8 * t.abs().max(1.0)).then_some(r as i64)
    }
}

/// A coupled face of a patch: its face id, the slit object and the side of
/// the slit the owning cell lies on.
struct CoupledFace {
    face: usize,
    slit: usize,
    side: i32,
    lower_cell: usize,
}

fn build_patch(obj: &Obj, slits: &[(usize, &Obj)], lat: &Lattice) -> (CellGrid, Vec<CoupledFace>) {
    let d = lat.d;
    let span = obj.span(d);
    let dim = span.len();
    let n: Vec<usize> = span.iter().map(|&a| (obj.hi[a] - obj.lo[a]) as usize).collect();
    let node_counts: Vec<usize> = n.iter().map(|c| c + 1).collect();

    let mut origin = [0.0; 3];
    for a in 0..d {
        if !span.contains(&a) {
            origin[a] = lat.coord(a, obj.lo[a]);
        }
    }
    let frame = Frame {
        origin,
        axes: span.iter().map(|&a| unit(a)).collect(),
    };

    let nodes: Vec<[f64; 3]> = multi_indices(&node_counts)
        .iter()
        .map(|m| {
            let mut x = [0.0; 3];
            for (k, &a) in span.iter().enumerate() {
                x[k] = lat.coord(a, obj.lo[a] + m[k] as i64);
            }
            x
        })
        .collect();
    let node_id = |m: &[usize]| linear(m, &node_counts);

    let volume: f64 = span.iter().map(|&a| lat.h[a]).product();
    let cells = multi_indices(&n);
    let mut cell_centroids = Vec::with_capacity(cells.len());
    let mut cell_nodes = Vec::with_capacity(cells.len());
    for m in &cells {
        let mut x = [0.0; 3];
        for (k, &a) in span.iter().enumerate() {
            x[k] = lat.coord(a, obj.lo[a] + m[k] as i64) + 0.5 * lat.h[a];
        }
        cell_centroids.push(x);
        let shifted = |offs: &[usize]| {
            let mm: Vec<usize> = m.iter().zip(offs).map(|(i, o)| i + o).collect();
            node_id(&mm)
        };
        let corners: Vec<usize> = match dim {
            0 => vec![0],
            1 => vec![shifted(&[0]), shifted(&[1])],
            2 => [[0, 0], [1, 0], [1, 1], [0, 1]].iter().map(|o| shifted(o)).collect(),
            _ => [
                [0, 0, 0],
                [1, 0, 0],
                [1, 1, 0],
                [0, 1, 0],
                [0, 0, 1],
                [1, 0, 1],
                [1, 1, 1],
                [0, 1, 1],
            ]
            .iter()
            .map(|o| shifted(o))
            .collect(),
        };
        cell_nodes.push(corners);
    }

    let mut faces = Vec::new();
    let mut cell_faces = vec![Vec::new(); cells.len()];
    let mut coupled = Vec::new();
    for k in 0..dim {
        let a = span[k];
        let mut counts = n.clone();
        counts[k] += 1;
        let others: Vec<usize> = (0..dim).filter(|&l| l != k).collect();
        let area: f64 = others.iter().map(|&l| lat.h[span[l]]).product();
        for m in multi_indices(&counts) {
            let j = m[k];
            let g = obj.lo[a] + j as i64;
            let mut flo = obj.lo;
            let mut fhi = obj.hi;
            flo[a] = g;
            fhi[a] = g;
            for &l in &others {
                flo[span[l]] = obj.lo[span[l]] + m[l] as i64;
                fhi[span[l]] = flo[span[l]] + 1;
            }
            let mut centroid = [0.0; 3];
            centroid[k] = lat.coord(a, g);
            for &l in &others {
                centroid[l] = lat.coord(span[l], flo[span[l]]) + 0.5 * lat.h[span[l]];
            }
            let face_nodes: Vec<usize> = {
                let corner_offsets: Vec<Vec<usize>> = match others.len() {
                    0 => vec![vec![]],
                    1 => vec![vec![0], vec![1]],
                    _ => vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![0, 1]],
                };
                corner_offsets
                    .iter()
                    .map(|off| {
                        let mut mm = m.clone();
                        for (q, &l) in others.iter().enumerate() {
                            mm[l] += off[q];
                        }
                        node_id(&mm)
                    })
                    .collect()
            };
            let probe = Obj {
                lo: flo,
                hi: fhi,
                name: String::new(),
                kind: SubdomainKind::Matrix,
            };
            let slit = slits
                .iter()
                .find(|(_, p)| p.lo[a] == g && p.hi[a] == g && p.contains(&probe));
            let lower_cell = |p: &Obj| {
                let ps = p.span(d);
                let pn: Vec<usize> = ps.iter().map(|&b| (p.hi[b] - p.lo[b]) as usize).collect();
                let pm: Vec<usize> = ps.iter().map(|&b| (flo[b] - p.lo[b]) as usize).collect();
                linear(&pm, &pn)
            };
            let cell_at = |jj: usize| {
                let mut mm = m.clone();
                mm[k] = jj;
                linear(&mm, &n)
            };
            let minus = (j > 0).then(|| cell_at(j - 1));
            let plus = (j < n[k]).then(|| cell_at(j));
            let ek = unit(k);
            let neg_ek = [-ek[0], -ek[1], -ek[2]];
            let domain_tag = || {
                if g == 0 || g == lat.n[a] {
                    BoundaryTag::Domain { axis: a, upper: g == lat.n[a] }
                } else {
                    BoundaryTag::Tip
                }
            };
            let mut push = |cells: (usize, Option<usize>), normal: [f64; 3], tag: BoundaryTag| {
                let id = faces.len();
                faces.push(Face {
                    area,
                    centroid,
                    normal,
                    cells,
                    nodes: face_nodes.clone(),
                    tag,
                });
                cell_faces[cells.0].push(id);
                if let Some(c1) = cells.1 {
                    cell_faces[c1].push(id);
                }
                id
            };
            match (minus, plus, slit) {
                (Some(cm), Some(cp), None) => {
                    push((cm, Some(cp)), ek, BoundaryTag::Interior);
                }
                (Some(cm), Some(cp), Some(&(s, p))) => {
                    let lc = lower_cell(p);
                    let f = push((cm, None), ek, BoundaryTag::Coupled);
                    coupled.push(CoupledFace { face: f, slit: s, side: -1, lower_cell: lc });
                    let f = push((cp, None), neg_ek, BoundaryTag::Coupled);
                    coupled.push(CoupledFace { face: f, slit: s, side: 1, lower_cell: lc });
                }
                (None, Some(cp), slit) => {
                    let tag = if slit.is_some() { BoundaryTag::Coupled } else { domain_tag() };
                    let f = push((cp, None), neg_ek, tag);
                    if let Some(&(s, p)) = slit {
                        coupled.push(CoupledFace { face: f, slit: s, side: 1, lower_cell: lower_cell(p) });
                    }
                }
                (Some(cm), None, slit) => {
                    let tag = if slit.is_some() { BoundaryTag::Coupled } else { domain_tag() };
                    let f = push((cm, None), ek, tag);
                    if let Some(&(s, p)) = slit {
                        coupled.push(CoupledFace { face: f, slit: s, side: -1, lower_cell: lower_cell(p) });
                    }
                }
                (None, None, _) => unreachable!("face without cells"),
            }
        }
    }

    let grid = CellGrid {
        dim,
        frame,
        nodes,
        cell_volumes: vec![volume; cells.len()],
        cell_centroids,
        cell_faces,
        cell_nodes,
        faces,
    };
    (grid, coupled)
}

fn fault_box(f: &FaultSpec, lat: &Lattice) -> Result<Obj, MeshError> {
    let d = lat.d;
    let invalid = |reason: &str| MeshError::InvalidFault {
        fault: f.id.clone(),
        reason: reason.into(),
    };
    let unrep = |reason: String| MeshError::NotRepresentable {
        fault: f.id.clone(),
        reason,
    };
    if f.normal_axis >= d {
        return Err(invalid("normal axis outside the domain dimension"));
    }
    if f.extent.len() != d - 1 {
        return Err(invalid("extent must list one range per tangent axis"));
    }
    if !(f.aperture > 0.0 && f.aperture.is_finite()) {
        return Err(invalid("aperture must be positive"));
    }
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    let p = lat
        .index(f.normal_axis, f.position)
        .ok_or_else(|| unrep(format!("position {} is not on a grid line", f.position)))?;
    if p <= 0 || p >= lat.n[f.normal_axis] {
        return Err(unrep("fault lies on or outside the domain boundary".into()));
    }
    lo[f.normal_axis] = p;
    hi[f.normal_axis] = p;
    for (q, &a) in f.tangent_axes(d).iter().enumerate() {
        let [x0, x1] = f.extent[q];
        if x1 <= x0 {
            return Err(invalid("empty extent"));
        }
        let i0 = lat
            .index(a, x0)
            .ok_or_else(|| unrep(format!("end point {x0} is not on a grid line")))?;
        let i1 = lat
            .index(a, x1)
            .ok_or_else(|| unrep(format!("end point {x1} is not on a grid line")))?;
        if i0 < 0 || i1 > lat.n[a] {
            return Err(unrep("fault extends outside the domain".into()));
        }
        lo[a] = i0;
        hi[a] = i1;
    }
    Ok(Obj {
        lo,
        hi,
        name: f.id.clone(),
        kind: SubdomainKind::Matrix,
    })
}

/// Builds the conforming mixed-dimensional mesh of `faults` on a
/// `resolution` Cartesian grid of `domain`.
pub fn build_cartesian_md_mesh(
    domain: &BoxDomain,
    resolution: &[usize],
    faults: &[FaultSpec],
) -> Result<MixedDimMesh, MeshError> {
    let d = domain.dim();
    if !(d == 2 || d == 3) || domain.upper.len() != d {
        return Err(MeshError::InvalidDomain(format!("dimension must be 2 or 3, got {d}")));
    }
    if resolution.len() != d || resolution.contains(&0) {
        return Err(MeshError::InvalidDomain(format!(
            "resolution must list {d} positive cell counts"
        )));
    }
    let mut lat = Lattice {
        d,
        lower: [0.0; 3],
        h: [1.0; 3],
        n: [0; 3],
    };
    for a in 0..d {
        let (x0, x1) = (domain.lower[a], domain.upper[a]);
        if !(x1 > x0) {
            return Err(MeshError::InvalidDomain(format!("axis {a} has empty extent")));
        }
        lat.lower[a] = x0;
        lat.h[a] = (x1 - x0) / resolution[a] as f64;
        lat.n[a] = resolution[a] as i64;
    }

    let mut matrix_hi = [0i64; 3];
    matrix_hi[..d].copy_from_slice(&lat.n[..d]);
    let mut levels: Vec<Vec<Obj>> = vec![Vec::new(); d + 1];
    levels[d].push(Obj {
        lo: [0; 3],
        hi: matrix_hi,
        name: "matrix".into(),
        kind: SubdomainKind::Matrix,
    });
    for (i, f) in faults.iter().enumerate() {
        let mut o = fault_box(f, &lat)?;
        o.kind = SubdomainKind::Fault { index: i };
        levels[d - 1].push(o);
    }
    for (i, a) in levels[d - 1].iter().enumerate() {
        for b in &levels[d - 1][i + 1..] {
            if let Some((lo, hi)) = a.intersect(b) {
                if box_dim(&lo, &hi) == d - 1 {
                    return Err(MeshError::Overlap {
                        a: a.name.clone(),
                        b: b.name.clone(),
                    });
                }
            }
        }
    }
    for k in (0..d - 1).rev() {
        let mut found: Vec<Obj> = Vec::new();
        let parents = &levels[k + 1];
        for (i, a) in parents.iter().enumerate() {
            for b in &parents[i + 1..] {
                let Some((lo, hi)) = a.intersect(b) else { continue };
                let dim = box_dim(&lo, &hi);
                if dim > k {
                    return Err(MeshError::Overlap {
                        a: a.name.clone(),
                        b: b.name.clone(),
                    });
                }
                if dim < k {
                    continue;
                }
                let o = Obj {
                    lo,
                    hi,
                    name: format!("{}&{}", a.name, b.name),
                    kind: SubdomainKind::Intersection { parents: Vec::new() },
                };
                if !found.iter().any(|x| x.same_box(&o)) {
                    found.push(o);
                }
            }
        }
        found.sort_by_key(|o| (o.lo, o.hi));
        levels[k] = found;
    }

    // ids: matrix, faults in input order, then decreasing dimension
    let mut objs: Vec<Obj> = Vec::new();
    let mut level_ids: Vec<Vec<usize>> = vec![Vec::new(); d + 1];
    for k in (0..=d).rev() {
        for o in &levels[k] {
            level_ids[k].push(objs.len());
            objs.push(o.clone());
        }
    }
    for k in 0..d - 1 {
        for &id in &level_ids[k] {
            let parents: Vec<usize> = level_ids[k + 1]
                .iter()
                .copied()
                .filter(|&p| objs[p].contains(&objs[id]))
                .collect();
            objs[id].kind = SubdomainKind::Intersection { parents };
        }
    }

    let mut subdomains = Vec::with_capacity(objs.len());
    let mut interfaces = Vec::new();
    for k in (0..=d).rev() {
        for &id in &level_ids[k] {
            let slits: Vec<(usize, &Obj)> = if k == 0 {
                Vec::new()
            } else {
                level_ids[k - 1]
                    .iter()
                    .filter(|&&p| objs[id].contains(&objs[p]))
                    .map(|&p| (p, &objs[p]))
                    .collect()
            };
            let (grid, coupled) = build_patch(&objs[id], &slits, &lat);
            let mut groups: BTreeMap<(usize, i32), Vec<&CoupledFace>> = BTreeMap::new();
            for c in &coupled {
                groups.entry((c.slit, c.side)).or_default().push(c);
            }
            for ((slit, side), members) in groups {
                interfaces.push(MortarInterface {
                    id: interfaces.len(),
                    higher: id,
                    lower: slit,
                    side_sign: side,
                    measures: members.iter().map(|c| grid.faces[c.face].area).collect(),
                    higher_faces: members.iter().map(|c| c.face).collect(),
                    lower_cells: members.iter().map(|c| c.lower_cell).collect(),
                });
            }
            subdomains.push(Subdomain {
                id,
                kind: objs[id].kind.clone(),
                codim: d - k,
                grid,
            });
        }
    }

    let mesh = MixedDimMesh {
        ambient_dim: d,
        domain: domain.clone(),
        subdomains,
        interfaces,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Planar tensor-product grid with node coordinates `xs` and `ys` (both
/// strictly increasing). Cells are numbered with `x` fastest; faces normal to
/// `x` come first.
pub fn tensor_product_grid(xs: &[f64], ys: &[f64]) -> Result<CellGrid, MeshError> {
    let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
    if !increasing(xs) || !increasing(ys) {
        return Err(MeshError::InvalidDomain("node coordinates must be strictly increasing".into()));
    }
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let cell = |i: usize, j: usize| j * nx + i;
    let nodes = (0..=ny).flat_map(|j| (0..=nx).map(move |i| [xs[i], ys[j], 0.0])).collect();
    let mut cell_volumes = Vec::with_capacity(nx * ny);
    let mut cell_centroids = Vec::with_capacity(nx * ny);
    let mut cell_nodes = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cell_volumes.push((xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]));
            cell_centroids.push([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]), 0.0]);
            cell_nodes.push(vec![node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
        }
    }
    let mut faces = Vec::new();
    let mut cell_faces = vec![Vec::new(); nx * ny];
    let mut add = |face: Face, cell_faces: &mut Vec<Vec<usize>>| {
        let id = faces.len();
        cell_faces[face.cells.0].push(id);
        if let Some(c1) = face.cells.1 {
            cell_faces[c1].push(id);
        }
        faces.push(face);
    };
    for j in 0..ny {
        for i in 0..=nx {
            let (cells, normal, tag) = match i {
                0 => ((cell(0, j), None), [-1.0, 0.0, 0.0], BoundaryTag::Domain { axis: 0, upper: false }),
                _ if i == nx => ((cell(nx - 1, j), None), [1.0, 0.0, 0.0], BoundaryTag::Domain { axis: 0, upper: true }),
                _ => ((cell(i - 1, j), Some(cell(i, j))), [1.0, 0.0, 0.0], BoundaryTag::Interior),
            };
            let face = Face {
                area: ys[j + 1] - ys[j],
                centroid: [xs[i], 0.5 * (ys[j] + ys[j + 1]), 0.0],
                normal,
                cells,
                nodes: vec![node(i, j), node(i, j + 1)],
                tag,
            };
            add(face, &mut cell_faces);
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            let (cells, normal, tag) = match j {
                0 => ((cell(i, 0), None), [0.0, -1.0, 0.0], BoundaryTag::Domain { axis: 1, upper: false }),
                _ if j == ny => ((cell(i, ny - 1), None), [0.0, 1.0, 0.0], BoundaryTag::Domain { axis: 1, upper: true }),
                _ => ((cell(i, j - 1), Some(cell(i, j))), [0.0, 1.0, 0.0], BoundaryTag::Interior),
            };
            let face = Face {
                area: xs[i + 1] - xs[i],
                centroid: [0.5 * (xs[i] + xs[i + 1]), ys[j], 0.0],
                normal,
                cells,
                nodes: vec![node(i, j), node(i + 1, j)],
                tag,
            };
            add(face, &mut cell_faces);
        }
    }
    let grid = CellGrid {
        dim: 2,
        frame: Frame {
            origin: [0.0; 3],
            axes: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        },
        nodes,
        cell_volumes,
        cell_centroids,
        cell_faces,
        cell_nodes,
        faces,
    };
    grid.validate()?;
    Ok(grid)
}

//! Plain-text mesh format.
//!
//! Line-oriented, whitespace separated, floats written in shortest
//! round-trip form so that export followed by import is lossless:
//!
//! ```text
//! mdflow-mesh 1
//! ambient_dim <D>
//! domain <lower_1..lower_D> <upper_1..upper_D>
//! subdomains <S>
//! subdomain <id> <dim> <codim> <kind>
//! frame <ox> <oy> <oz> <n_axes> [<ax> <ay> <az>]...
//! nodes <N>
//! <x> <y> <z>                                       (N lines)
//! cells <C>
//! <volume> <cx> <cy> <cz> <n> <node>... <m> <face>... (C lines)
//! faces <F>
//! <area> <cx> <cy> <cz> <nx> <ny> <nz> <cell0> <cell1|-1> <tag> <n> <node>...
//! ...                                               (repeat per subdomain)
//! interfaces <I>
//! interface <id> <higher> <lower> <side_sign> <M>
//! <measure> <higher_face> <lower_cell>              (M lines)
//! end
//! ```
//!
//! `kind` is `matrix`, `fault:<index>` or `intersection:<p,q,...>`; `tag` is
//! `interior`, `coupled`, `tip` or `domain:<axis>:<lo|hi>`. Coordinates are
//! local to the subdomain frame.

use std::fmt::Write as _;

use super::{BoundaryTag, BoxDomain, CellGrid, Face, Frame, MeshError, MixedDimMesh, MortarInterface, Subdomain,
            SubdomainKind};

pub fn export_text(mesh: &MixedDimMesh) -> String {
    let mut s = String::new();
    let v3 = |v: &[f64; 3]| format!("{} {} {}", v[0], v[1], v[2]);
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(s, "mdflow-mesh 1").unwrap();
    writeln!(s, "ambient_dim {}", mesh.ambient_dim).unwrap();
    let dom: Vec<String> = mesh.domain.lower.iter().chain(&mesh.domain.upper).map(|x| x.to_string()).collect();
    writeln!(s, "domain {}", dom.join(" ")).unwrap();
    writeln!(s, "subdomains {}", mesh.subdomains.len()).unwrap();
    for sd in &mesh.subdomains {
        let kind = match &sd.kind {
            SubdomainKind::Matrix => "matrix".to_string(),
            SubdomainKind::Fault { index } => format!("fault:{index}"),
            SubdomainKind::Intersection { parents } => format!(
                "intersection:{}",
                parents.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
            ),
        };
        let g = &sd.grid;
        writeln!(s, "subdomain {} {} {} {}", sd.id, g.dim, sd.codim, kind).unwrap();
        let axes: Vec<String> = g.frame.axes.iter().map(v3).collect();
        write!(s, "frame {} {}", v3(&g.frame.origin), axes.len()).unwrap();
        for a in axes {
            write!(s, " {a}").unwrap();
        }
        s.push('\n');
        writeln!(s, "nodes {}", g.nodes.len()).unwrap();
        for x in &g.nodes {
            writeln!(s, "{}", v3(x)).unwrap();
        }
        writeln!(s, "cells {}", g.num_cells()).unwrap();
        for c in 0..g.num_cells() {
            writeln!(
                s,
                "{} {} {} {} {} {}",
                g.cell_volumes[c],
                v3(&g.cell_centroids[c]),
                g.cell_nodes[c].len(),
                join(&g.cell_nodes[c]),
                g.cell_faces[c].len(),
                join(&g.cell_faces[c])
            )
            .unwrap();
        }
        writeln!(s, "faces {}", g.num_faces()).unwrap();
        for f in &g.faces {
            let tag = match f.tag {
                BoundaryTag::Interior => "interior".to_string(),
                BoundaryTag::Coupled => "coupled".to_string(),
                BoundaryTag::Tip => "tip".to_string(),
                BoundaryTag::Domain { axis, upper } => format!("domain:{axis}:{}", if upper { "hi" } else { "lo" }),
            };
            let c1 = f.cells.1.map_or("-1".to_string(), |c| c.to_string());
            writeln!(
                s,
                "{} {} {} {} {} {} {} {}",
                f.area,
                v3(&f.centroid),
                v3(&f.normal),
                f.cells.0,
                c1,
                tag,
                f.nodes.len(),
                join(&f.nodes)
            )
            .unwrap();
        }
    }
    writeln!(s, "interfaces {}", mesh.interfaces.len()).unwrap();
    for m in &mesh.interfaces {
        writeln!(s, "interface {} {} {} {} {}", m.id, m.higher, m.lower, m.side_sign, m.num_cells()).unwrap();
        for k in 0..m.num_cells() {
            writeln!(s, "{} {} {}", m.measures[k], m.higher_faces[k], m.lower_cells[k]).unwrap();
        }
    }
    s.push_str("end\n");
    s
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
            line: 0,
            tokens: Vec::new(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, MeshError> {
        Err(MeshError::Parse { line: self.line, msg: msg.into() })
    }

    /// Advances to the next non-empty line.
    fn next_line(&mut self) -> Result<(), MeshError> {
        for (i, l) in self.lines.by_ref() {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if !toks.is_empty() {
                self.line = i + 1;
                self.tokens = toks;
                self.pos = 0;
                return Ok(());
            }
        }
        self.err("unexpected end of file")
    }

    fn token(&mut self) -> Result<&'a str, MeshError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t)
            }
            None => self.err("line ends early"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), MeshError> {
        self.next_line()?;
        let t = self.token()?;
        if t != kw {
            return self.err(format!("expected '{kw}', found '{t}'"));
        }
        Ok(())
    }

    fn usize(&mut self) -> Result<usize, MeshError> {
        let t = self.token()?;
        t.parse().or_else(|_| self.err(format!("expected a non-negative integer, found '{t}'")))
    }

    fn f64(&mut self) -> Result<f64, MeshError> {
        let t = self.token()?;
        t.parse().or_else(|_| self.err(format!("expected a number, found '{t}'")))
    }

    fn vec3(&mut self) -> Result<[f64; 3], MeshError> {
        Ok([self.f64()?, self.f64()?, self.f64()?])
    }

    fn usizes(&mut self, n: usize) -> Result<Vec<usize>, MeshError> {
        (0..n).map(|_| self.usize()).collect()
    }

    fn end_of_line(&self) -> Result<(), MeshError> {
        if self.pos != self.tokens.len() {
            return self.err("trailing tokens");
        }
        Ok(())
    }
}

pub fn import_text(text: &str) -> Result<MixedDimMesh, MeshError> {
    let mut r = Reader::new(text);
    r.keyword("mdflow-mesh")?;
    if r.usize()? != 1 {
        return r.err("unsupported format version");
    }
    r.keyword("ambient_dim")?;
    let d = r.usize()?;
    if !(d == 2 || d == 3) {
        return r.err("ambient_dim must be 2 or 3");
    }
    r.keyword("domain")?;
    let lower = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    let upper = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    r.end_of_line()?;
    r.keyword("subdomains")?;
    let ns = r.usize()?;
    let mut subdomains = Vec::with_capacity(ns);
    for _ in 0..ns {
        r.keyword("subdomain")?;
        let id = r.usize()?;
        let dim = r.usize()?;
        let codim = r.usize()?;
        let kind_tok = r.token()?;
        let kind = if kind_tok == "matrix" {
            SubdomainKind::Matrix
        } else if let Some(i) = kind_tok.strip_prefix("fault:") {
            match i.parse() {
                Ok(index) => SubdomainKind::Fault { index },
                Err(_) => return r.err("bad fault index"),
            }
        } else if let Some(list) = kind_tok.strip_prefix("intersection:") {
            let parents: Result<Vec<usize>, _> = list.split(',').map(|p| p.parse()).collect();
            match parents {
                Ok(parents) => SubdomainKind::Intersection { parents },
                Err(_) => return r.err("bad intersection parent list"),
            }
        } else {
            return r.err(format!("unknown subdomain kind '{kind_tok}'"));
        };
        r.keyword("frame")?;
        let origin = r.vec3()?;
        let na = r.usize()?;
        let axes = (0..na).map(|_| r.vec3()).collect::<Result<Vec<_>, _>>()?;
        r.end_of_line()?;
        r.keyword("nodes")?;
        let nn = r.usize()?;
        let mut nodes = Vec::with_capacity(nn);
        for _ in 0..nn {
            r.next_line()?;
            nodes.push(r.vec3()?);
            r.end_of_line()?;
        }
        r.keyword("cells")?;
        let nc = r.usize()?;
        let (mut vols, mut cents, mut cnodes, mut cfaces) = (vec![], vec![], vec![], vec![]);
        for _ in 0..nc {
            r.next_line()?;
            vols.push(r.f64()?);
            cents.push(r.vec3()?);
            let k = r.usize()?;
            cnodes.push(r.usizes(k)?);
            let k = r.usize()?;
            cfaces.push(r.usizes(k)?);
            r.end_of_line()?;
        }
        r.keyword("faces")?;
        let nf = r.usize()?;
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            r.next_line()?;
            let area = r.f64()?;
            let centroid = r.vec3()?;
            let normal = r.vec3()?;
            let c0 = r.usize()?;
            let c1_tok = r.token()?;
            let c1 = if c1_tok == "-1" {
                None
            } else {
                Some(c1_tok.parse().or_else(|_| r.err("bad neighbour cell"))?)
            };
            let tag_tok = r.token()?;
            let tag = match tag_tok {
                "interior" => BoundaryTag::Interior,
                "coupled" => BoundaryTag::Coupled,
                "tip" => BoundaryTag::Tip,
                t => {
                    let parts: Vec<&str> = t.split(':').collect();
                    match parts.as_slice() {
                        ["domain", axis, side] if *side == "lo" || *side == "hi" => match axis.parse() {
                            Ok(axis) => BoundaryTag::Domain { axis, upper: *side == "hi" },
                            Err(_) => return r.err("bad boundary axis"),
                        },
                        _ => return r.err(format!("unknown face tag '{t}'")),
                    }
                }
            };
            let k = r.usize()?;
            let fnodes = r.usizes(k)?;
            r.end_of_line()?;
            faces.push(Face {
                area,
                centroid,
                normal,
                cells: (c0, c1),
                nodes: fnodes,
                tag,
            });
        }
        let bad_ref = cnodes.iter().flatten().any(|&n| n >= nn)
            || cfaces.iter().flatten().any(|&f| f >= nf)
            || faces.iter().any(|f| {
                f.cells.0 >= nc || f.cells.1.is_some_and(|c| c >= nc) || f.nodes.iter().any(|&n| n >= nn)
            });
        if bad_ref {
            return r.err(format!("subdomain {id} references a missing entity"));
        }
        subdomains.push(Subdomain {
            id,
            kind,
            codim,
            grid: CellGrid {
                dim,
                frame: Frame { origin, axes },
                nodes,
                cell_volumes: vols,
                cell_centroids: cents,
                cell_faces: cfaces,
                cell_nodes: cnodes,
                faces,
            },
        });
    }
    r.keyword("interfaces")?;
    let ni = r.usize()?;
    let mut interfaces = Vec::with_capacity(ni);
    for _ in 0..ni {
        r.keyword("interface")?;
        let id = r.usize()?;
        let higher = r.usize()?;
        let lower = r.usize()?;
        let side_tok = r.token()?;
        let side_sign: i32 = side_tok.parse().or_else(|_| r.err("bad side sign"))?;
        let m = r.usize()?;
        if higher >= ns || lower >= ns {
            return r.err("interface references a missing subdomain");
        }
        let (mut measures, mut hf, mut lc) = (vec![], vec![], vec![]);
        for _ in 0..m {
            r.next_line()?;
            measures.push(r.f64()?);
            let f = r.usize()?;
            let c = r.usize()?;
            if f >= subdomains[higher].grid.num_faces() || c >= subdomains[lower].grid.num_cells() {
                return r.err("mortar cell references a missing entity");
            }
            hf.push(f);
            lc.push(c);
            r.end_of_line()?;
        }
        interfaces.push(MortarInterface {
            id,
            higher,
            lower,
            side_sign,
            measures,
            higher_faces: hf,
            lower_cells: lc,
        });
    }
    r.keyword("end")?;
    let mesh = MixedDimMesh {
        ambient_dim: d,
        domain: BoxDomain { lower, upper },
        subdomains,
        interfaces,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PermTensor;
    use crate::mesh::{build_cartesian_md_mesh, FaultSpec, SideMaterial};

    fn t_junction() -> MixedDimMesh {
        let side = SideMaterial { k_t: vec![0.0], k_perp: 1.0 };
        let f = |id: &str, axis, pos, ext| FaultSpec {
            id: id.into(),
            normal_axis: axis,
            position: pos,
            extent: vec![ext],
            aperture: 0.1,
            k_parallel: PermTensor::isotropic(1, 1.0),
            plus: side.clone(),
            minus: side.clone(),
        };
        build_cartesian_md_mesh(
            &BoxDomain::unit(2),
            &[4, 4],
            &[f("h", 1, 0.5, [0.0, 1.0]), f("v", 0, 0.5, [0.5, 1.0])],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let mesh = t_junction();
        let text = export_text(&mesh);
        let back = import_text(&text).unwrap();
        assert_eq!(back, mesh);
        assert_eq!(export_text(&back), text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = export_text(&t_junction());
        let broken = text.replacen("ambient_dim 2", "ambient_dim x", 1);
        match import_text(&broken) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(import_text("mdflow-mesh 1\n"), Err(MeshError::Parse { .. })));
    }
}

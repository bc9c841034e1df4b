//! Gmsh MSH v4.1 ASCII reader and writer.
//!
//! Only linear simplices are accepted: points (15) and lines (1) are read as
//! lower-dimensional entities, triangles (2) and tetrahedra (4) as cells.
//! Facets of dimension `d - 1` belonging to a physical group become boundary
//! facets tagged with the group's name.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, Result, SimplicialMesh};
use crate::Vec3;

fn element_info(type_id: u32) -> std::result::Result<(usize, usize), &'static str> {
    // (dimension, node count)
    match type_id {
        15 => Ok((0, 1)),
        1 => Ok((1, 2)),
        2 => Ok((2, 3)),
        4 => Ok((3, 4)),
        3 => Err("4-node quadrangle"),
        5 => Err("8-node hexahedron"),
        6 => Err("6-node prism"),
        7 => Err("5-node pyramid"),
        8 => Err("3-node second order line"),
        9 => Err("6-node second order triangle"),
        10 => Err("9-node second order quadrangle"),
        11 => Err("10-node second order tetrahedron"),
        _ => Err("unknown element type"),
    }
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { iter: text.lines().enumerate(), line: 0 }
    }

    fn err(&self, message: impl Into<String>) -> MeshError {
        MeshError::Parse { line: self.line, message: message.into() }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        for (i, l) in self.iter.by_ref() {
            let t = l.trim();
            if !t.is_empty() {
                self.line = i + 1;
                return Some(t);
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<&'a str> {
        self.next_line().ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn numbers<T: std::str::FromStr>(&mut self, what: &str) -> Result<Vec<T>> {
        let line = self.expect_line(what)?;
        line.split_whitespace()
            .map(|tok| tok.parse::<T>().map_err(|_| self.err(format!("invalid {what}: {tok:?}"))))
            .collect()
    }

    fn expect_end(&mut self, section: &str) -> Result<()> {
        let end = format!("$End{section}");
        let line = self.expect_line(&end)?;
        if line != end {
            return Err(self.err(format!("expected {end}, found {line:?}")));
        }
        Ok(())
    }
}

fn take<T: Copy>(v: &[T], n: usize, lines: &Lines, what: &str) -> Result<Vec<T>> {
    if v.len() < n {
        return Err(lines.err(format!("{what}: expected at least {n} values, found {}", v.len())));
    }
    Ok(v[..n].to_vec())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<SimplicialMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_msh(&text)
}

pub fn parse_msh(text: &str) -> Result<SimplicialMesh> {
    let mut lines = Lines::new(text);
    let mut physical_names: Option<HashMap<(usize, i64), String>> = None;
    // (dim, entity tag) -> physical tags
    let mut entity_physicals: HashMap<(usize, i64), Vec<i64>> = HashMap::new();
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut coords: Vec<Vec3> = Vec::new();
    // (dim, entity tag, node tags)
    let mut elements: Vec<(usize, i64, Vec<u64>)> = Vec::new();
    let mut saw_format = false;

    while let Some(line) = lines.next_line() {
        match line {
            "$MeshFormat" => {
                let header = lines.expect_line("format header")?;
                let toks: Vec<&str> = header.split_whitespace().collect();
                if toks.len() < 3 {
                    return Err(lines.err("malformed $MeshFormat header"));
                }
                if !toks[0].starts_with("4.1") {
                    return Err(lines.err(format!("unsupported MSH version {}", toks[0])));
                }
                if toks[1] != "0" {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                lines.expect_end("MeshFormat")?;
                saw_format = true;
            }
            "$PhysicalNames" => {
                let n = lines.numbers::<usize>("physical name count")?;
                let n = take(&n, 1, &lines, "physical name count")?[0];
                let mut names = HashMap::new();
                for _ in 0..n {
                    let l = lines.expect_line("physical name")?;
                    let mut parts = l.splitn(3, char::is_whitespace);
                    let dim = parts.next().and_then(|t| t.parse::<usize>().ok());
                    let tag = parts.next().and_then(|t| t.parse::<i64>().ok());
                    let name = parts.next().map(|t| t.trim().trim_matches('"').to_string());
                    match (dim, tag, name) {
                        (Some(d), Some(t), Some(nm)) => {
                            names.insert((d, t), nm);
                        }
                        _ => return Err(lines.err(format!("malformed physical name entry {l:?}"))),
                    }
                }
                lines.expect_end("PhysicalNames")?;
                physical_names = Some(names);
            }
            "$Entities" => {
                let counts = lines.numbers::<usize>("entity counts")?;
                let counts = take(&counts, 4, &lines, "entity counts")?;
                for (dim, &count) in counts.iter().enumerate() {
                    for _ in 0..count {
                        let vals = lines.numbers::<f64>("entity")?;
                        // points: tag x y z nPhys ...; others: tag 6 bbox values nPhys ...
                        let phys_at = if dim == 0 { 4 } else { 7 };
                        if vals.len() <= phys_at {
                            return Err(lines.err("truncated entity record"));
                        }
                        let tag = vals[0] as i64;
                        let np = vals[phys_at] as usize;
                        if vals.len() < phys_at + 1 + np {
                            return Err(lines.err("truncated physical tag list"));
                        }
                        let phys = vals[phys_at + 1..phys_at + 1 + np].iter().map(|&x| x as i64).collect();
                        entity_physicals.insert((dim, tag), phys);
                    }
                }
                lines.expect_end("Entities")?;
            }
            "$Nodes" => {
                let head = lines.numbers::<u64>("node header")?;
                let head = take(&head, 2, &lines, "node header")?;
                let blocks = head[0] as usize;
                for _ in 0..blocks {
                    let bh = lines.numbers::<i64>("node block header")?;
                    let bh = take(&bh, 4, &lines, "node block header")?;
                    if bh[2] != 0 {
                        return Err(lines.err("parametric node coordinates are not supported"));
                    }
                    let n = bh[3] as usize;
                    let mut tags = Vec::with_capacity(n);
                    for _ in 0..n {
                        let t = lines.numbers::<u64>("node tag")?;
                        tags.push(take(&t, 1, &lines, "node tag")?[0]);
                    }
                    for tag in tags {
                        let xyz = lines.numbers::<f64>("node coordinates")?;
                        let xyz = take(&xyz, 3, &lines, "node coordinates")?;
                        node_index.insert(tag, coords.len());
                        coords.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
                    }
                }
                lines.expect_end("Nodes")?;
            }
            "$Elements" => {
                let head = lines.numbers::<u64>("element header")?;
                let head = take(&head, 2, &lines, "element header")?;
                for _ in 0..head[0] {
                    let bh = lines.numbers::<i64>("element block header")?;
                    let bh = take(&bh, 4, &lines, "element block header")?;
                    let (edim, etag, etype, n) = (bh[0] as usize, bh[1], bh[2] as u32, bh[3] as usize);
                    let (tdim, nn) = element_info(etype)
                        .map_err(|name| MeshError::UnsupportedElement { type_id: etype, name })?;
                    if tdim != edim {
                        return Err(lines.err(format!("element type {etype} in entity of dimension {edim}")));
                    }
                    for _ in 0..n {
                        let vals = lines.numbers::<u64>("element")?;
                        let vals = take(&vals, nn + 1, &lines, "element")?;
                        elements.push((edim, etag, vals[1..].to_vec()));
                    }
                }
                lines.expect_end("Elements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // skip unknown sections
                let end = format!("$End{}", &other[1..]);
                loop {
                    let l = lines.expect_line(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content {other:?}"))),
        }
    }

    if !saw_format {
        return Err(MeshError::Parse { line: 1, message: "missing $MeshFormat section".into() });
    }
    let names = physical_names.ok_or(MeshError::MissingPhysicalNames)?;
    let dim = elements.iter().map(|e| e.0).max().unwrap_or(0);
    if dim < 2 {
        return Err(MeshError::Invalid("mesh contains no triangles or tetrahedra".into()));
    }

    let resolve = |tag: &u64| {
        node_index
            .get(tag)
            .copied()
            .ok_or_else(|| MeshError::Invalid(format!("element references unknown node {tag}")))
    };
    let mut simplices = Vec::new();
    let mut facets = Vec::new();
    for (edim, etag, nodes) in &elements {
        if *edim == dim {
            for n in nodes {
                simplices.push(resolve(n)?);
            }
        } else if *edim + 1 == dim {
            let Some(phys) = entity_physicals.get(&(*edim, *etag)) else { continue };
            let Some(name) = phys.iter().find_map(|p| names.get(&(*edim, *p))) else { continue };
            let f = nodes.iter().map(resolve).collect::<Result<Vec<_>>>()?;
            facets.push((f, name.clone()));
        }
    }
    if dim == 2 {
        for p in &coords {
            if p.z != 0.0 {
                return Err(MeshError::Invalid("2D mesh with non-zero z coordinate".into()));
            }
        }
    }
    SimplicialMesh::new(dim, coords, simplices, facets)
}

/// Serializes a mesh as MSH 4.1 ASCII.
///
/// Output depends only on the mesh: one top-dimensional entity carries all
/// nodes and cells, and one facet entity per marker, in marker order.
pub fn write_msh(mesh: &SimplicialMesh) -> String {
    let dim = mesh.dim();
    let markers = mesh.markers();
    let mut out = String::new();
    out.push_str("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");

    let _ = writeln!(out, "$PhysicalNames\n{}", markers.len() + 1);
    for (k, m) in markers.iter().enumerate() {
        let _ = writeln!(out, "{} {} \"{}\"", dim - 1, k + 1, m);
    }
    let _ = writeln!(out, "{} {} \"domain\"", dim, markers.len() + 1);
    out.push_str("$EndPhysicalNames\n");

    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for p in mesh.vertices() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let bbox = format!("{} {} {} {} {} {}", lo.x, lo.y, lo.z, hi.x, hi.y, hi.z);
    out.push_str("$Entities\n");
    let mut counts = [0usize; 4];
    counts[dim - 1] = markers.len();
    counts[dim] = 1;
    let _ = writeln!(out, "{} {} {} {}", counts[0], counts[1], counts[2], counts[3]);
    for k in 0..markers.len() {
        let _ = writeln!(out, "{} {} 1 {} 0", k + 1, bbox, k + 1);
    }
    let _ = write!(out, "1 {} 1 {} {}", bbox, markers.len() + 1, markers.len());
    for k in 0..markers.len() {
        let _ = write!(out, " {}", k + 1);
    }
    out.push_str("\n$EndEntities\n");

    let nv = mesh.vertex_count();
    out.push_str("$Nodes\n");
    let _ = writeln!(out, "1 {nv} 1 {nv}");
    let _ = writeln!(out, "{dim} 1 0 {nv}");
    for i in 0..nv {
        let _ = writeln!(out, "{}", i + 1);
    }
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out.push_str("$EndNodes\n");

    let facet_type = if dim == 2 { 1 } else { 2 };
    let cell_type = if dim == 2 { 2 } else { 4 };
    let total = mesh.facet_count() + mesh.element_count();
    out.push_str("$Elements\n");
    let _ = writeln!(out, "{} {} 1 {}", markers.len() + 1, total, total);
    let mut tag = 1;
    for (k, m) in markers.iter().enumerate() {
        let members: Vec<usize> = (0..mesh.facet_count()).filter(|&f| mesh.facet_marker(f) == m).collect();
        let _ = writeln!(out, "{} {} {} {}", dim - 1, k + 1, facet_type, members.len());
        for f in members {
            let _ = write!(out, "{tag}");
            for v in mesh.facet(f) {
                let _ = write!(out, " {}", v + 1);
            }
            out.push('\n');
            tag += 1;
        }
    }
    let _ = writeln!(out, "{} 1 {} {}", dim, cell_type, mesh.element_count());
    for s in mesh.simplices() {
        let _ = write!(out, "{tag}");
        for v in s {
            let _ = write!(out, " {}", v + 1);
        }
        out.push('\n');
        tag += 1;
    }
    out.push_str("$EndElements\n");
    out
}

pub fn save_mesh(mesh: &SimplicialMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_msh(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const UNIT_SQUARE: &str = "\
$MeshFormat
4.1 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 \"outer\"
2 2 \"fluid\"
$EndPhysicalNames
$Entities
4 4 1 0
1 0 0 0 0
2 1 0 0 0
3 1 1 0 0
4 0 1 0 0
1 0 0 0 1 0 0 1 1 2 1 -2
2 1 0 0 1 1 0 1 1 2 2 -3
3 0 1 0 1 1 0 1 1 2 3 -4
4 0 0 0 0 1 0 1 1 2 4 -1
1 0 0 0 1 1 0 1 2 4 1 2 3 4
$EndEntities
$Nodes
1 4 1 4
2 1 0 4
1
2
3
4
0 0 0
1 0 0
1 1 0
0 1 0
$EndNodes
$Elements
5 6 1 6
1 1 1 1
1 1 2
1 2 1 1
2 2 3
1 3 1 1
3 3 4
1 4 1 1
4 4 1
2 1 2 2
5 1 2 3
6 1 3 4
$EndElements
";

    #[test]
    fn loads_minimal_square() {
        let m = parse_msh(UNIT_SQUARE).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.element_count(), 2);
        assert_eq!(m.facet_count(), 4);
        assert_eq!(m.boundary_vertices("outer").unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn quadrilateral_is_unsupported() {
        let text = UNIT_SQUARE.replace("2 1 2 2\n5 1 2 3\n6 1 3 4", "2 1 3 1\n5 1 2 3 4").replace("5 6 1 6", "5 5 1 5");
        match parse_msh(&text) {
            Err(MeshError::UnsupportedElement { type_id: 3, name }) => assert!(name.contains("quadrangle")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_physical_names() {
        let start = UNIT_SQUARE.find("$PhysicalNames").unwrap();
        let end = UNIT_SQUARE.find("$Entities").unwrap();
        let text = format!("{}{}", &UNIT_SQUARE[..start], &UNIT_SQUARE[end..]);
        assert!(matches!(parse_msh(&text), Err(MeshError::MissingPhysicalNames)));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = UNIT_SQUARE.replace("1 1 0\n0 1 0", "1 x 0\n0 1 0");
        match parse_msh(&text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 30),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn writer_is_stable_and_reloads() {
        let m = super::super::generate_annulus(0.3, 1.0, 0.1).unwrap();
        let a = write_msh(&m);
        let b = write_msh(&parse_msh(&a).unwrap());
        assert_eq!(a, b);
    }
}

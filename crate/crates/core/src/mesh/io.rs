//! Plain-text mesh format.
//!
//! ```text
//! fusemesh 1
//! vertices <n>
//! <x> <y>                         (n lines)
//! quads <m>
//! <v0> <v1> <v2> <v3> [tag ...]   (m lines)
//! geometry <p_geo>
//! <x> <y>                         (m·(p_geo+1)² lines, element-major, ξ1 fastest)
//! periods <px|-> <py|->           (optional)
//! curves <k>                      (optional)
//! <tag> circle <cx> <cy> <r>
//! adjacency <f>                   (optional, checked against the rebuilt table)
//! <va> <vb> <e> <lf> [<e> <lf>]
//! boundary <b>                    (optional)
//! <face-id> <tag>
//! end
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::quad::{build_adjacency, BoundaryCurve, QuadMesh};
use crate::error::{FuseError, Result};
use crate::Vec2;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialises a mesh to the text format.
pub fn write_mesh(mesh: &QuadMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fusemesh 1");
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {}", real(v[0]), real(v[1]));
    }
    let _ = writeln!(s, "quads {}", mesh.quads.len());
    for (q, tag) in mesh.quads.iter().zip(&mesh.element_tags) {
        let _ = write!(s, "{} {} {} {}", q[0], q[1], q[2], q[3]);
        if !tag.is_empty() {
            let _ = write!(s, " {tag}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "geometry {}", mesh.p_geo);
    for g in &mesh.geometry {
        for x in g {
            let _ = writeln!(s, "{} {}", real(x[0]), real(x[1]));
        }
    }
    if mesh.periods.iter().any(Option::is_some) {
        let f = |p: Option<f64>| p.map_or("-".to_string(), real);
        let _ = writeln!(s, "periods {} {}", f(mesh.periods[0]), f(mesh.periods[1]));
    }
    if !mesh.curves.is_empty() {
        let _ = writeln!(s, "curves {}", mesh.curves.len());
        for (tag, c) in &mesh.curves {
            match c {
                BoundaryCurve::Circle { center, radius } => {
                    let _ = writeln!(
                        s,
                        "{tag} circle {} {} {}",
                        real(center[0]),
                        real(center[1]),
                        real(*radius)
                    );
                }
            }
        }
    }
    let _ = writeln!(s, "adjacency {}", mesh.faces.len());
    for f in &mesh.faces {
        let _ = write!(s, "{} {}", f.vertices[0], f.vertices[1]);
        for (e, lf) in &f.sides {
            let _ = write!(s, " {e} {lf}");
        }
        s.push('\n');
    }
    if !mesh.boundary_tags.is_empty() {
        let _ = writeln!(s, "boundary {}", mesh.boundary_tags.len());
        for (f, tag) in &mesh.boundary_tags {
            let _ = writeln!(s, "{f} {tag}");
        }
    }
    s.push_str("end\n");
    s
}

/// Writes the mesh atomically (temporary file in the same directory, then rename).
pub fn save_mesh(mesh: &QuadMesh, path: &Path) -> Result<()> {
    let text = write_mesh(mesh);
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| FuseError::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(text.as_bytes())?;
    f.sync_all()?;
    drop(f);
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<QuadMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<Vec<&'a str>> {
        loop {
            match self.it.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if l.is_empty() || l.starts_with('#') {
                        continue;
                    }
                    return Ok(l.split_whitespace().collect());
                }
                None => {
                    return Err(FuseError::Parse {
                        line: self.line + 1,
                        msg: format!("unexpected end of file, expected {what}"),
                    })
                }
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> FuseError {
        FuseError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn num<T: std::str::FromStr>(&self, tok: &str, what: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(format!("invalid {what} '{tok}'")))
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let t = self.next(name)?;
        if t.len() != 2 || t[0] != name {
            return Err(self.err(format!("expected '{name} <count>'")));
        }
        self.num(t[1], "count")
    }

    fn point(&mut self, what: &str) -> Result<Vec2> {
        let t = self.next(what)?;
        if t.len() != 2 {
            return Err(self.err(format!("expected two coordinates for {what}")));
        }
        Ok([self.num(t[0], "coordinate")?, self.num(t[1], "coordinate")?])
    }
}

/// Parses the text format. Any malformed or truncated input is an error; no
/// partial mesh is returned.
pub fn parse_mesh(text: &str) -> Result<QuadMesh> {
    let mut ln = Lines {
        it: text.lines().enumerate(),
        line: 0,
    };
    let h = ln.next("header")?;
    if h != ["fusemesh", "1"] {
        return Err(ln.err("expected header 'fusemesh 1'"));
    }
    let nv = ln.header("vertices")?;
    let vertices = (0..nv).map(|_| ln.point("vertex")).collect::<Result<Vec<_>>>()?;
    let nq = ln.header("quads")?;
    let mut quads = Vec::with_capacity(nq);
    let mut element_tags = Vec::with_capacity(nq);
    for _ in 0..nq {
        let t = ln.next("quad")?;
        if t.len() < 4 {
            return Err(ln.err("a quad needs four vertex ids"));
        }
        let mut q = [0usize; 4];
        for k in 0..4 {
            q[k] = ln.num(t[k], "vertex id")?;
        }
        quads.push(q);
        element_tags.push(t[4..].join(" "));
    }
    let p_geo = ln.header("geometry")?;
    let ng = (p_geo + 1) * (p_geo + 1);
    let mut geometry = Vec::with_capacity(nq);
    for _ in 0..nq {
        geometry.push((0..ng).map(|_| ln.point("geometry node")).collect::<Result<Vec<_>>>()?);
    }

    let mut periods = [None, None];
    let mut curves = BTreeMap::new();
    let mut stored_adjacency = None;
    let mut tags: BTreeMap<usize, String> = BTreeMap::new();
    loop {
        let t = ln.next("section or 'end'")?;
        match t[0] {
            "end" => break,
            "periods" if t.len() == 3 => {
                for c in 0..2 {
                    periods[c] = if t[c + 1] == "-" {
                        None
                    } else {
                        Some(ln.num::<f64>(t[c + 1], "period")?)
                    };
                }
            }
            "curves" if t.len() == 2 => {
                let k: usize = ln.num(t[1], "count")?;
                for _ in 0..k {
                    let c = ln.next("curve")?;
                    if c.len() != 5 || c[1] != "circle" {
                        return Err(ln.err("expected '<tag> circle <cx> <cy> <r>'"));
                    }
                    curves.insert(
                        c[0].to_string(),
                        BoundaryCurve::Circle {
                            center: [ln.num(c[2], "cx")?, ln.num(c[3], "cy")?],
                            radius: ln.num(c[4], "radius")?,
                        },
                    );
                }
            }
            "adjacency" if t.len() == 2 => {
                let k: usize = ln.num(t[1], "count")?;
                let mut faces = Vec::with_capacity(k);
                for _ in 0..k {
                    let a = ln.next("adjacency entry")?;
                    if a.len() != 4 && a.len() != 6 {
                        return Err(ln.err("expected '<va> <vb> <e> <lf> [<e> <lf>]'"));
                    }
                    let v: Vec<usize> = a
                        .iter()
                        .map(|s| ln.num(s, "index"))
                        .collect::<Result<_>>()?;
                    faces.push((v[..2].to_vec(), v[2..].chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>()));
                }
                stored_adjacency = Some((faces, ln.line));
            }
            "boundary" if t.len() == 2 => {
                let k: usize = ln.num(t[1], "count")?;
                for _ in 0..k {
                    let b = ln.next("boundary entry")?;
                    if b.len() != 2 {
                        return Err(ln.err("expected '<face-id> <tag>'"));
                    }
                    tags.insert(ln.num(b[0], "face id")?, b[1].to_string());
                }
            }
            other => return Err(ln.err(format!("unknown or malformed section '{other}'"))),
        }
    }

    let (faces, _) = build_adjacency(vertices.len(), &quads)?;
    if let Some((stored, line)) = stored_adjacency {
        let rebuilt: Vec<(Vec<usize>, Vec<(usize, usize)>)> = faces
            .iter()
            .map(|f| (f.vertices.to_vec(), f.sides.clone()))
            .collect();
        if stored != rebuilt {
            return Err(FuseError::Parse {
                line,
                msg: "stored adjacency does not match the table rebuilt from quads".into(),
            });
        }
    }
    for f in tags.keys() {
        if faces.get(*f).is_none_or(|face| !face.is_boundary()) {
            return Err(FuseError::Parse {
                line: ln.line,
                msg: format!("boundary tag on face {f}, which is not a boundary face"),
            });
        }
    }
    let mut mesh = QuadMesh::from_parts(
        vertices,
        quads,
        p_geo,
        geometry,
        |_, _| None,
        curves,
        periods,
    )?;
    mesh.boundary_tags = tags;
    mesh.element_tags = element_tags;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{circle_mesh, perturbed_mesh, structured_mesh, Rect};

    #[test]
    fn round_trip_is_exact() {
        let meshes = [
            structured_mesh(4, 4, Rect::unit(), [false, false], 3).unwrap(),
            structured_mesh(4, 4, Rect::square(0.0, std::f64::consts::TAU), [true, true], 3).unwrap(),
            perturbed_mesh(4, Rect::square(-1.0, 1.0), 11, 3).unwrap(),
            circle_mesh(3).unwrap().refine_uniform(),
        ];
        for m in meshes {
            let back = parse_mesh(&write_mesh(&m)).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn adjacency_optional_but_checked() {
        let m = structured_mesh(2, 2, Rect::unit(), [false, false], 2).unwrap();
        let text = write_mesh(&m);
        let start = text.find("adjacency").unwrap();
        let end = text.find("boundary").unwrap();
        let without = format!("{}{}", &text[..start], &text[end..]);
        assert_eq!(parse_mesh(&without).unwrap(), m);
        let tampered = text.replacen("\n0 1 0 0\n", "\n0 1 1 0\n", 1);
        assert_ne!(tampered, text);
        assert!(matches!(parse_mesh(&tampered), Err(FuseError::Parse { .. })));
    }

    #[test]
    fn truncated_is_error() {
        let m = circle_mesh(2).unwrap();
        let text = write_mesh(&m);
        for cut in [10, text.len() / 2, text.len() - 4] {
            assert!(matches!(parse_mesh(&text[..cut]), Err(FuseError::Parse { .. })));
        }
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fmesh");
        let m = perturbed_mesh(3, Rect::unit(), 1, 2).unwrap();
        save_mesh(&m, &path).unwrap();
        assert_eq!(load_mesh(&path).unwrap(), m);
    }
}

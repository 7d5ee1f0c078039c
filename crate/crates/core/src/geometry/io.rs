//! Text mesh formats.
//!
//! Surfaces use OFF: an `OFF` line, a `V F 0` counts line, `V` lines of
//! `x y z` and `F` lines of `3 a b c`. Curves use a closed-polyline format:
//! a `POLYLINE N` header followed by `N` lines of `x y` in loop order.
//! Lines starting with `#` are ignored. Coordinates are written with the
//! shortest representation that round-trips.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{Cells, GeometryError, Hypersurface, Vec3};

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub fn to_off(mesh: &Hypersurface) -> String {
    let tris = match mesh.cells() {
        Cells::Triangles(t) => t,
        Cells::Edges(_) => panic!("to_off called on a curve"),
    };
    let mut s = String::new();
    s.push_str("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.len(), tris.len());
    for p in mesh.positions() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    for t in tris {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Serializes a curve given as a single loop in vertex order.
pub fn to_polyline(mesh: &Hypersurface) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "POLYLINE {}", mesh.len());
    for v in loop_order(mesh) {
        let p = mesh.position(v);
        let _ = writeln!(s, "{} {}", p.x, p.y);
    }
    s
}

/// Vertex order of the loop(s) starting at vertex 0.
fn loop_order(mesh: &Hypersurface) -> Vec<usize> {
    let topo = mesh.topology();
    let mut seen = vec![false; mesh.len()];
    let mut order = Vec::with_capacity(mesh.len());
    for start in 0..mesh.len() {
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            order.push(v);
            v = topo.loop_neighbors(v).1;
        }
    }
    order
}

/// Writes the mesh in the format matching its dimension.
pub fn to_text(mesh: &Hypersurface) -> String {
    match mesh.dim() {
        1 => to_polyline(mesh),
        _ => to_off(mesh),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(tok: Option<&str>, what: &str) -> Result<f64, MeshIoError> {
    tok.ok_or_else(|| MeshIoError::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|e| MeshIoError::Parse(format!("bad {what}: {e}")))
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize, MeshIoError> {
    tok.ok_or_else(|| MeshIoError::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|e| MeshIoError::Parse(format!("bad {what}: {e}")))
}

pub fn parse_off(text: &str) -> Result<Hypersurface, MeshIoError> {
    let mut lines = data_lines(text);
    if lines.next() != Some("OFF") {
        return Err(MeshIoError::Parse("missing OFF header".into()));
    }
    let mut counts = lines
        .next()
        .ok_or_else(|| MeshIoError::Parse("missing counts".into()))?
        .split_whitespace();
    let nv = parse_usize(counts.next(), "vertex count")?;
    let nf = parse_usize(counts.next(), "face count")?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| MeshIoError::Parse("truncated vertices".into()))?;
        let mut t = line.split_whitespace();
        positions.push(Vec3::new(
            parse_f64(t.next(), "x")?,
            parse_f64(t.next(), "y")?,
            parse_f64(t.next(), "z")?,
        ));
    }
    let mut tris = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = lines.next().ok_or_else(|| MeshIoError::Parse("truncated faces".into()))?;
        let mut t = line.split_whitespace();
        if parse_usize(t.next(), "face arity")? != 3 {
            return Err(MeshIoError::Parse("only triangles are supported".into()));
        }
        tris.push([
            parse_usize(t.next(), "index")?,
            parse_usize(t.next(), "index")?,
            parse_usize(t.next(), "index")?,
        ]);
    }
    Ok(Hypersurface::new(positions, Cells::Triangles(tris))?)
}

pub fn parse_polyline(text: &str) -> Result<Hypersurface, MeshIoError> {
    let mut lines = data_lines(text);
    let header = lines.next().ok_or_else(|| MeshIoError::Parse("empty input".into()))?;
    let mut h = header.split_whitespace();
    if h.next() != Some("POLYLINE") {
        return Err(MeshIoError::Parse("missing POLYLINE header".into()));
    }
    let n = parse_usize(h.next(), "vertex count")?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| MeshIoError::Parse("truncated vertices".into()))?;
        let mut t = line.split_whitespace();
        points.push([parse_f64(t.next(), "x")?, parse_f64(t.next(), "y")?]);
    }
    Ok(Hypersurface::closed_curve(&points)?)
}

/// Parses either format, chosen by the header line.
pub fn parse_mesh(text: &str) -> Result<Hypersurface, MeshIoError> {
    match data_lines(text).next() {
        Some(l) if l.starts_with("POLYLINE") => parse_polyline(text),
        _ => parse_off(text),
    }
}

pub fn write_mesh(path: &Path, mesh: &Hypersurface) -> Result<(), MeshIoError> {
    fs::write(path, to_text(mesh)).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_mesh(path: &Path) -> Result<Hypersurface, MeshIoError> {
    let text = fs::read_to_string(path).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mesh(&text)
}

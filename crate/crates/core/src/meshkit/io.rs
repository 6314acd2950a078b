use std::fmt::Write as _;

use super::{build_complex, SimplicialComplex};
use crate::{Error, Point, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(tokens: &[&str], line: usize) -> Result<Vec<T>> {
    tokens
        .iter()
        .map(|t| t.parse::<T>().map_err(|_| parse_err(line, format!("bad number `{t}`"))))
        .collect()
}

/// Parses the line-oriented mesh format:
///
/// ```text
/// mesh3d <nverts> <ncells>
/// v x y z
/// c i0 i1 i2 i3
/// ```
///
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_mesh(text: &str) -> Result<SimplicialComplex> {
    let mut header: Option<(usize, usize)> = None;
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() || tokens[0].starts_with('#') {
            continue;
        }
        match tokens[0] {
            "mesh3d" if header.is_none() => {
                let v: Vec<usize> = numbers(&tokens[1..], line)?;
                if v.len() != 2 {
                    return Err(parse_err(line, "header needs vertex and cell counts"));
                }
                header = Some((v[0], v[1]));
            }
            _ if header.is_none() => return Err(parse_err(line, "missing `mesh3d` header")),
            "v" => {
                let x: Vec<f64> = numbers(&tokens[1..], line)?;
                if x.len() != 3 {
                    return Err(parse_err(line, "vertex needs three coordinates"));
                }
                vertices.push(Point::new(x[0], x[1], x[2]));
            }
            "c" => {
                let c: Vec<usize> = numbers(&tokens[1..], line)?;
                if c.len() != 4 {
                    return Err(parse_err(line, "cell needs four vertex ids"));
                }
                cells.push([c[0], c[1], c[2], c[3]]);
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }
    let (nv, nc) = header.ok_or_else(|| parse_err(0, "empty mesh file"))?;
    if nv != vertices.len() || nc != cells.len() {
        return Err(parse_err(
            0,
            format!(
                "header announces {nv} vertices and {nc} cells, found {} and {}",
                vertices.len(),
                cells.len()
            ),
        ));
    }
    build_complex(vertices, &cells)
}

pub fn write_mesh(complex: &SimplicialComplex) -> String {
    let mut out = format!("mesh3d {} {}\n", complex.num_vertices(), complex.num_cells());
    for p in complex.vertices() {
        let _ = writeln!(out, "v {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    for c in complex.cells() {
        let _ = writeln!(out, "c {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    out
}

/// Parses a list of face vertex triples (one per line) into face ids.
pub fn parse_gamma(text: &str, complex: &SimplicialComplex) -> Result<Vec<usize>> {
    let mut faces = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() || tokens[0].starts_with('#') {
            continue;
        }
        let v: Vec<usize> = numbers(&tokens, line)?;
        if v.len() != 3 {
            return Err(parse_err(line, "face needs three vertex ids"));
        }
        let f = complex
            .face_id([v[0], v[1], v[2]])
            .ok_or_else(|| parse_err(line, format!("{v:?} is not a face of the mesh")))?;
        faces.push(f);
    }
    Ok(faces)
}

pub fn write_gamma(complex: &SimplicialComplex, faces: &[usize]) -> String {
    let mut out = String::new();
    for &f in faces {
        let v = complex.faces()[f];
        let _ = writeln!(out, "{} {} {}", v[0], v[1], v[2]);
    }
    out
}

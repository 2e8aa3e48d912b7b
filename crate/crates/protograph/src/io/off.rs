//! OFF mesh reader. Accepts the counts on the header line or the line
//! after it, skips comments and blank lines, and requires triangles.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first_no, first) = lines
        .next()
        .ok_or_else(|| Error::EmptyStructure("empty OFF input".into()))?;
    let counts_str = if let Some(rest) = first.strip_prefix("OFF") {
        let rest = rest.trim();
        if rest.is_empty() {
            let (no, l) = lines
                .next()
                .ok_or_else(|| Error::BadCountsLine("missing counts line".into()))?;
            (no, l.to_string())
        } else {
            (first_no, rest.to_string())
        }
    } else {
        // Headerless variant: counts on the first line.
        (first_no, first.to_string())
    };

    let counts: Vec<usize> = counts_str
        .1
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::BadCountsLine(counts_str.1.clone()))?;
    if counts.len() < 2 {
        return Err(Error::BadCountsLine(counts_str.1));
    }
    let (n_vertices, n_faces) = (counts[0], counts[1]);
    if n_vertices == 0 {
        return Err(Error::EmptyStructure("OFF mesh has no vertices".into()));
    }

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (no, line) = lines.next().ok_or_else(|| Error::MalformedRecord {
            line: counts_str.0,
            reason: format!("expected {n_vertices} vertex lines"),
        })?;
        let xyz: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MalformedRecord { line: no, reason: format!("bad vertex {line:?}") })?;
        if xyz.len() != 3 {
            return Err(Error::MalformedRecord { line: no, reason: format!("bad vertex {line:?}") });
        }
        vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (no, line) = lines.next().ok_or_else(|| Error::MalformedRecord {
            line: counts_str.0,
            reason: format!("expected {n_faces} face lines"),
        })?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let arity: usize = tokens
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedRecord { line: no, reason: format!("bad face {line:?}") })?;
        if arity != 3 {
            return Err(Error::NonTriangleFace { line: no, arity });
        }
        if tokens.len() < 4 {
            return Err(Error::MalformedRecord { line: no, reason: format!("bad face {line:?}") });
        }
        let mut face = [0usize; 3];
        for (k, t) in tokens[1..4].iter().enumerate() {
            face[k] = t.parse().map_err(|_| Error::MalformedRecord {
                line: no,
                reason: format!("bad face index {t:?}"),
            })?;
            if face[k] >= n_vertices {
                return Err(Error::IndexOutOfRange { index: face[k], len: n_vertices });
            }
        }
        faces.push(face);
    }

    TriMesh::from_parts(vertices, faces)
}

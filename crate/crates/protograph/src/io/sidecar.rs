//! Two-column sidecar files that annotate a structure or mesh:
//! `.ss` overrides secondary-structure labels per residue, `.charges`
//! replaces the per-vertex charge feature, `.atoms` maps mesh vertices
//! to atom indices. All share one line format: index<TAB>value, with
//! '#' comments and blank lines ignored.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

fn two_columns(text: &str) -> impl Iterator<Item = (usize, &str, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(no, l)| {
            let mut it = l.split_whitespace();
            (no, it.next().unwrap_or(""), it.next().unwrap_or(""))
        })
}

fn parse_pairs<T>(text: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<(usize, T)>> {
    let mut out: Vec<(usize, T)> = Vec::new();
    for (no, a, b) in two_columns(text) {
        let index: usize = a.parse().map_err(|_| Error::MalformedRecord {
            line: no,
            reason: format!("bad index {a:?}"),
        })?;
        let value = parse(b).ok_or_else(|| Error::MalformedRecord {
            line: no,
            reason: format!("bad {what} {b:?}"),
        })?;
        if out.iter().any(|(i, _)| *i == index) {
            return Err(Error::MalformedRecord {
                line: no,
                reason: format!("duplicate index {index}"),
            });
        }
        out.push((index, value));
    }
    Ok(out)
}

pub const SS_LABELS: [char; 8] = ['H', 'G', 'I', 'E', 'B', 'T', 'C', '-'];

/// residue_index<TAB>label, label one of H G I E B T C or '-' for unknown.
pub fn read_ss_sidecar(text: &str) -> Result<Vec<(usize, char)>> {
    parse_pairs(text, "label", |b| {
        let mut chars = b.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if SS_LABELS.contains(&c) => Some(c),
            _ => None,
        }
    })
}

/// vertex_index<TAB>value, finite floats only.
pub fn read_scalar_sidecar(text: &str) -> Result<Vec<(usize, f64)>> {
    parse_pairs(text, "value", |b| b.parse::<f64>().ok().filter(|v| v.is_finite()))
}

/// vertex_index<TAB>atom_index.
pub fn read_index_sidecar(text: &str) -> Result<Vec<(usize, usize)>> {
    parse_pairs(text, "atom index", |b| b.parse::<usize>().ok())
}

/// Sidecars live next to the file they annotate, same stem, different
/// extension ("a.off" -> "a.atoms"). Returns the path only if present.
pub fn sidecar_path(main: &Path, extension: &str) -> Option<PathBuf> {
    let p = main.with_extension(extension);
    p.exists().then_some(p)
}

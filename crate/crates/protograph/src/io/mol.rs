//! MDL MOL (V2000) reader for small-molecule ligands.

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::tables;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondKind {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondKind {
    /// Contribution to an atom's explicit valence.
    pub fn order(self) -> f64 {
        match self {
            BondKind::Single => 1.0,
            BondKind::Double => 2.0,
            BondKind::Triple => 3.0,
            BondKind::Aromatic => 1.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MolAtom {
    pub symbol: String,
    pub pos: Point3<f64>,
    pub charge: i32,
}

#[derive(Debug, Clone, Copy)]
pub struct MolBond {
    pub a: usize,
    pub b: usize,
    pub kind: BondKind,
}

/// A parsed connection table, before any feature computation.
#[derive(Debug, Clone)]
pub struct LigandRaw {
    pub name: String,
    pub atoms: Vec<MolAtom>,
    pub bonds: Vec<MolBond>,
}

/// 1-based column slice, clamped and trimmed. Missing columns yield "".
fn field(line: &str, lo: usize, hi: usize) -> &str {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    if lo > chars.len() {
        return "";
    }
    let start = chars[lo - 1].0;
    let end = if hi >= chars.len() { line.len() } else { chars[hi].0 };
    line[start..end].trim()
}

fn old_style_charge(code: i32) -> i32 {
    match code {
        1 => 3,
        2 => 2,
        3 => 1,
        5 => -1,
        6 => -2,
        7 => -3,
        _ => 0,
    }
}

pub fn parse_mol(text: &str) -> Result<LigandRaw> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.iter().all(|l| l.trim().is_empty()) {
        return Err(Error::EmptyStructure("empty MOL input".into()));
    }
    if lines.len() < 4 {
        return Err(Error::MalformedRecord {
            line: lines.len(),
            reason: "missing counts line".into(),
        });
    }
    let name = lines[0].trim().to_string();

    let counts = lines[3];
    let n_atoms: usize = field(counts, 1, 3)
        .parse()
        .map_err(|_| Error::BadCountsLine(counts.to_string()))?;
    let n_bonds: usize = field(counts, 4, 6)
        .parse()
        .map_err(|_| Error::BadCountsLine(counts.to_string()))?;
    if n_atoms == 0 {
        return Err(Error::EmptyStructure("MOL file has no atoms".into()));
    }

    let mut atoms = Vec::with_capacity(n_atoms);
    for k in 0..n_atoms {
        let no = 5 + k;
        let line = lines.get(no - 1).ok_or(Error::MalformedRecord {
            line: lines.len(),
            reason: format!("expected {n_atoms} atom lines"),
        })?;
        let coord = |lo, hi| {
            field(line, lo, hi)
                .parse::<f64>()
                .map_err(|_| Error::MalformedRecord { line: no, reason: format!("bad atom line {line:?}") })
        };
        let (x, y, z) = (coord(1, 10)?, coord(11, 20)?, coord(21, 30)?);
        let symbol = tables::normalize_element(field(line, 32, 34));
        if tables::atomic_number(&symbol).is_none() {
            return Err(Error::UnknownElement(symbol));
        }
        let charge_code: i32 = field(line, 37, 39).parse().unwrap_or(0);
        atoms.push(MolAtom {
            symbol,
            pos: Point3::new(x, y, z),
            charge: old_style_charge(charge_code),
        });
    }

    let mut bonds = Vec::with_capacity(n_bonds);
    for k in 0..n_bonds {
        let no = 5 + n_atoms + k;
        let line = lines.get(no - 1).ok_or(Error::MalformedRecord {
            line: lines.len(),
            reason: format!("expected {n_bonds} bond lines"),
        })?;
        let index = |lo, hi| -> Result<usize> {
            let raw: usize = field(line, lo, hi)
                .parse()
                .map_err(|_| Error::MalformedRecord { line: no, reason: format!("bad bond line {line:?}") })?;
            if raw == 0 || raw > n_atoms {
                return Err(Error::IndexOutOfRange { index: raw, len: n_atoms });
            }
            Ok(raw - 1)
        };
        let (a, b) = (index(1, 3)?, index(4, 6)?);
        if a == b {
            return Err(Error::MalformedRecord { line: no, reason: "self bond".into() });
        }
        if bonds.iter().any(|e: &MolBond| (e.a.min(e.b), e.a.max(e.b)) == (a.min(b), a.max(b))) {
            return Err(Error::MalformedRecord { line: no, reason: "duplicate bond".into() });
        }
        let kind = match field(line, 7, 9) {
            "1" => BondKind::Single,
            "2" => BondKind::Double,
            "3" => BondKind::Triple,
            "4" => BondKind::Aromatic,
            other => {
                return Err(Error::MalformedRecord {
                    line: no,
                    reason: format!("unsupported bond type {other:?}"),
                })
            }
        };
        bonds.push(MolBond { a, b, kind });
    }

    // An M CHG block supersedes every charge column in the atom block.
    let mut saw_chg = false;
    for (k, line) in lines.iter().enumerate().skip(4 + n_atoms + n_bonds) {
        let no = k + 1;
        if line.starts_with("M  END") {
            break;
        }
        if !line.starts_with("M  CHG") {
            continue;
        }
        if !saw_chg {
            for atom in &mut atoms {
                atom.charge = 0;
            }
            saw_chg = true;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        for pair in tokens.get(3..).unwrap_or(&[]).chunks(2) {
            let [idx, value] = pair else {
                return Err(Error::MalformedRecord { line: no, reason: "odd M  CHG entry".into() });
            };
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::MalformedRecord { line: no, reason: "bad M  CHG index".into() })?;
            if idx == 0 || idx > atoms.len() {
                return Err(Error::IndexOutOfRange { index: idx, len: atoms.len() });
            }
            atoms[idx - 1].charge = value
                .parse()
                .map_err(|_| Error::MalformedRecord { line: no, reason: "bad M  CHG value".into() })?;
        }
    }

    Ok(LigandRaw { name, atoms, bonds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn methane_is_one_atom_no_bonds() {
        let m = parse_mol(&synth::methane_mol()).unwrap();
        assert_eq!(m.name, "methane");
        assert_eq!(m.atoms.len(), 1);
        assert_eq!(m.atoms[0].symbol, "C");
        assert!(m.bonds.is_empty());
    }

    #[test]
    fn benzene_ring_is_aromatic() {
        let m = parse_mol(&synth::benzene_mol()).unwrap();
        assert_eq!(m.atoms.len(), 6);
        assert_eq!(m.bonds.len(), 6);
        assert!(m.bonds.iter().all(|b| b.kind == BondKind::Aromatic));
    }

    #[test]
    fn aspirin_mixes_bond_kinds() {
        let m = parse_mol(&synth::aspirin_mol()).unwrap();
        assert_eq!(m.atoms.len(), 13);
        assert_eq!(m.bonds.len(), 13);
        let doubles = m.bonds.iter().filter(|b| b.kind == BondKind::Double).count();
        let aromatic = m.bonds.iter().filter(|b| b.kind == BondKind::Aromatic).count();
        assert_eq!((doubles, aromatic), (2, 6));
        assert_eq!(m.atoms.iter().filter(|a| a.symbol == "O").count(), 4);
    }

    #[test]
    fn chg_property_overrides_atom_block() {
        let m = parse_mol(&synth::acetate_mol()).unwrap();
        assert_eq!(m.atoms[3].charge, -1);
        assert!(m.atoms[..3].iter().all(|a| a.charge == 0));
    }

    #[test]
    fn old_style_charge_codes_translate() {
        let text = "ion\n  x\n\n  1  0  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 N   0  3  0  0  0  0  0  0  0  0  0  0\nM  END\n";
        let m = parse_mol(text).unwrap();
        assert_eq!(m.atoms[0].charge, 1);
    }

    #[test]
    fn lowercase_symbols_are_normalized() {
        let text = "salt\n  x\n\n  1  0  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 CL  0  5  0  0  0  0  0  0  0  0  0  0\nM  END\n";
        let m = parse_mol(text).unwrap();
        assert_eq!(m.atoms[0].symbol, "Cl");
        assert_eq!(m.atoms[0].charge, -1);
    }

    #[test]
    fn zero_atoms_is_empty_structure() {
        let text = "nothing\n  x\n\n  0  0  0  0  0  0  0  0  0  0999 V2000\nM  END\n";
        assert!(matches!(parse_mol(text).unwrap_err(), Error::EmptyStructure(_)));
    }

    #[test]
    fn bond_to_missing_atom_is_rejected() {
        let text = "bad\n  x\n\n  2  1  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n    1.5000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n  1  9  1  0\nM  END\n";
        assert!(matches!(
            parse_mol(text).unwrap_err(),
            Error::IndexOutOfRange { index: 9, len: 2 }
        ));
    }

    #[test]
    fn fantasy_symbols_are_rejected() {
        let text = "bad\n  x\n\n  1  0  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 Xx  0  0  0  0  0  0  0  0  0  0  0  0\nM  END\n";
        assert!(matches!(parse_mol(text).unwrap_err(), Error::UnknownElement(_)));
    }

    #[test]
    fn duplicate_bonds_are_rejected() {
        let text = "bad\n  x\n\n  2  2  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n    1.5000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n  1  2  1  0\n  2  1  1  0\nM  END\n";
        assert!(matches!(parse_mol(text).unwrap_err(), Error::MalformedRecord { .. }));
    }

    #[test]
    fn query_bond_types_are_rejected() {
        let text = "bad\n  x\n\n  2  1  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n    1.5000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0\n  1  2  8  0\nM  END\n";
        assert!(matches!(parse_mol(text).unwrap_err(), Error::MalformedRecord { .. }));
    }

    #[test]
    fn truncations_never_panic() {
        let text = synth::aspirin_mol();
        for cut in 0..text.len() {
            let _ = parse_mol(&text[..cut]);
        }
    }
}

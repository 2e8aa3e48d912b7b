//! Fixed-column PDB v3 reader.
//!
//! Only polymer ATOM records are kept: waters and ligand HETATM records
//! are skipped (ligands arrive separately as MOL files). Alternate
//! locations are resolved to the highest-occupancy atom, ties to the
//! lexically smallest altLoc. Only the first model of multi-model files
//! is read.

use std::collections::HashMap;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::protein::{Atom, Chain, ProteinStructure, Residue};
use crate::tables;

pub fn parse_pdb(text: &str) -> Result<ProteinStructure> {
    let mut chains: Vec<Chain> = Vec::new();
    let mut chain_index: HashMap<char, usize> = HashMap::new();
    // (chain, seq, icode) -> candidate slot; atoms keyed by name with the
    // current best (occupancy, altloc) candidate.
    let mut residue_index: HashMap<(char, i32, char), usize> = HashMap::new();
    let mut candidates: Vec<Vec<(String, f64, char, Atom)>> = Vec::new();
    let mut placements: Vec<(usize, usize)> = Vec::new(); // (chain slot, residue slot)

    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let record = field(line, 1, 6);
        match record.trim_end() {
            "ENDMDL" => break, // first model only
            "ATOM" => {}
            _ => continue, // HETATM (waters and ligands), TER, headers
        }

        if line.len() < 54 {
            return Err(Error::MalformedRecord {
                line: line_number,
                reason: format!("ATOM record is {} chars, coordinates need 54", line.len()),
            });
        }
        let name = field(line, 13, 16);
        let alt_loc = field(line, 17, 17).chars().next().unwrap_or(' ');
        let res_name = field(line, 18, 20).trim().to_string();
        let chain_id = field(line, 22, 22).chars().next().unwrap_or(' ');
        let seq: i32 = field(line, 23, 26).trim().parse().map_err(|_| Error::MalformedRecord {
            line: line_number,
            reason: format!("bad residue number {:?}", field(line, 23, 26)),
        })?;
        let icode = field(line, 27, 27).chars().next().unwrap_or(' ');
        let mut coords = [0.0f64; 3];
        for (k, (lo, hi)) in [(31, 38), (39, 46), (47, 54)].into_iter().enumerate() {
            coords[k] =
                field(line, lo, hi).trim().parse().map_err(|_| Error::MalformedRecord {
                    line: line_number,
                    reason: format!("bad coordinate {:?}", field(line, lo, hi)),
                })?;
        }
        let occupancy: f64 = field(line, 55, 60).trim().parse().unwrap_or(1.0);

        if matches!(res_name.as_str(), "HOH" | "WAT" | "DOD") {
            continue;
        }

        let element = parse_element(line, name).ok_or_else(|| Error::MalformedRecord {
            line: line_number,
            reason: format!("cannot determine element for atom {:?}", name.trim()),
        })?;

        let atom = Atom {
            name: name.trim().to_string(),
            element,
            pos: Point3::new(coords[0], coords[1], coords[2]),
        };

        let chain_slot = *chain_index.entry(chain_id).or_insert_with(|| {
            chains.push(Chain { id: chain_id, residues: Vec::new() });
            chains.len() - 1
        });
        let res_key = (chain_id, seq, icode);
        let cand_slot = *residue_index.entry(res_key).or_insert_with(|| {
            chains[chain_slot].residues.push(Residue {
                name: res_name.clone(),
                seq_number: seq,
                insertion_code: if icode == ' ' { None } else { Some(icode) },
                atoms: Vec::new(),
            });
            candidates.push(Vec::new());
            placements.push((chain_slot, chains[chain_slot].residues.len() - 1));
            candidates.len() - 1
        });

        // Altloc resolution: highest occupancy wins, ties to smallest altLoc.
        let slot = &mut candidates[cand_slot];
        match slot.iter_mut().find(|(n, _, _, _)| *n == atom.name) {
            Some(existing) => {
                let better = (occupancy, std::cmp::Reverse(alt_loc))
                    > (existing.1, std::cmp::Reverse(existing.2));
                if better {
                    *existing = (atom.name.clone(), occupancy, alt_loc, atom);
                }
            }
            None => slot.push((atom.name.clone(), occupancy, alt_loc, atom)),
        }
    }

    // Install resolved atoms in encounter order.
    for (list, (chain_slot, res_slot)) in candidates.into_iter().zip(placements) {
        chains[chain_slot].residues[res_slot].atoms =
            list.into_iter().map(|(_, _, _, a)| a).collect();
    }

    let protein = ProteinStructure { chains };
    if protein.residue_count() == 0 {
        return Err(Error::EmptyStructure("no ATOM records".into()));
    }
    Ok(protein)
}

/// 1-based inclusive column slice, clamped to line length.
fn field(line: &str, lo: usize, hi: usize) -> &str {
    let bytes = line.as_bytes();
    let lo = (lo - 1).min(bytes.len());
    let hi = hi.min(bytes.len());
    // PDB is ASCII; fall back to empty on a bad boundary rather than panic.
    std::str::from_utf8(&bytes[lo..hi]).unwrap_or("")
}

/// Element from columns 77-78, or derived from the atom name field.
fn parse_element(line: &str, raw_name: &str) -> Option<String> {
    let col = tables::normalize_element(field(line, 77, 78));
    if !col.is_empty() && tables::atomic_number(&col).is_some() {
        return Some(col);
    }
    // Two-letter elements occupy column 13; everything else starts at 14.
    let chars: Vec<char> = raw_name.chars().collect();
    if chars.first().map_or(false, |c| c.is_ascii_alphabetic()) && chars.len() >= 2 {
        let two = tables::normalize_element(&chars[..2].iter().collect::<String>());
        if two.len() == 2 && tables::atomic_number(&two).is_some() {
            return Some(two);
        }
    }
    let first = chars.iter().find(|c| c.is_ascii_alphabetic())?;
    let one = tables::normalize_element(&first.to_string());
    tables::atomic_number(&one).map(|_| one)
}

//! Parsed protein structure: chains of residues of atoms.

use nalgebra::Point3;

use crate::tables;

#[derive(Debug, Clone)]
pub struct Atom {
    /// PDB atom name, e.g. "CA", "OG1".
    pub name: String,
    /// Normalized element symbol, e.g. "C", "Fe".
    pub element: String,
    pub pos: Point3<f64>,
}

impl Atom {
    /// Heavy means not hydrogen or deuterium.
    pub fn is_heavy(&self) -> bool {
        self.element != "H" && self.element != "D"
    }
}

#[derive(Debug, Clone)]
pub struct Residue {
    /// Three-letter code, upper case.
    pub name: String,
    pub seq_number: i32,
    pub insertion_code: Option<char>,
    pub atoms: Vec<Atom>,
}

impl Residue {
    pub fn atom(&self, name: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.name == name)
    }

    pub fn ca(&self) -> Option<&Atom> {
        self.atom("CA")
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub id: char,
    pub residues: Vec<Residue>,
}

/// A protein as parsed from a PDB file: polymer chains only, waters and
/// ligand heteroatoms already dropped, alternate locations resolved.
#[derive(Debug, Clone, Default)]
pub struct ProteinStructure {
    pub chains: Vec<Chain>,
}

impl ProteinStructure {
    pub fn residue_count(&self) -> usize {
        self.chains.iter().map(|c| c.residues.len()).sum()
    }

    pub fn atom_count(&self) -> usize {
        self.chains.iter().flat_map(|c| &c.residues).map(|r| r.atoms.len()).sum()
    }

    /// Residues of all chains in file order, with their global ordinal.
    /// The ordinal is the residue id used to join the surface and
    /// structure layers.
    pub fn residues(&self) -> impl Iterator<Item = (usize, &Residue)> {
        self.chains.iter().flat_map(|c| &c.residues).enumerate()
    }

    /// One-letter sequence per chain, unknown residues as 'X'.
    pub fn sequences(&self) -> Vec<(char, String)> {
        self.chains
            .iter()
            .map(|c| (c.id, c.residues.iter().map(|r| tables::three_to_one(&r.name)).collect()))
            .collect()
    }

    /// Heavy atoms across all chains with their (global residue ordinal,
    /// atom) pairs, in file order.
    pub fn heavy_atoms(&self) -> Vec<(usize, &Atom)> {
        let mut out = Vec::new();
        for (rid, res) in self.residues() {
            for atom in &res.atoms {
                if atom.is_heavy() {
                    out.push((rid, atom));
                }
            }
        }
        out
    }

    /// All atoms (any element) with global residue ordinals, in file order.
    pub fn all_atoms(&self) -> Vec<(usize, &Atom)> {
        let mut out = Vec::new();
        for (rid, res) in self.residues() {
            for atom in &res.atoms {
                out.push((rid, atom));
            }
        }
        out
    }

    /// Residue by global ordinal.
    pub fn residue(&self, rid: usize) -> Option<&Residue> {
        self.residues().nth(rid).map(|(_, r)| r)
    }
}

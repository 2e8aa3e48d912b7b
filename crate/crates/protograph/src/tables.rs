//! Residue and element lookup tables used across the feature builders.
//!
//! Element symbols are normalized to "C", "Cl", "Fe" style: first letter
//! upper case, the rest lower case. Residue codes are the upper-case
//! three-letter PDB codes.

/// One-hot order for residue identity: the twenty standard amino acids in
/// alphabetical three-letter order, then the ambiguous codes ASX and GLX,
/// then UNK for everything else.
pub const RESIDUE_CODES: [&str; 23] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL", "ASX", "GLX", "UNK",
];

/// Slot of `code` in [`RESIDUE_CODES`]; unknown codes land on the UNK slot.
pub fn residue_one_hot_index(code: &str) -> usize {
    RESIDUE_CODES.iter().position(|&c| c == code).unwrap_or(RESIDUE_CODES.len() - 1)
}

/// Three-letter to one-letter residue code, 'X' when unknown.
pub fn three_to_one(code: &str) -> char {
    match code {
        "ALA" => 'A',
        "ARG" => 'R',
        "ASN" => 'N',
        "ASP" => 'D',
        "CYS" => 'C',
        "GLN" => 'Q',
        "GLU" => 'E',
        "GLY" => 'G',
        "HIS" => 'H',
        "ILE" => 'I',
        "LEU" => 'L',
        "LYS" => 'K',
        "MET" => 'M',
        "PHE" => 'F',
        "PRO" => 'P',
        "SER" => 'S',
        "THR" => 'T',
        "TRP" => 'W',
        "TYR" => 'Y',
        "VAL" => 'V',
        "ASX" => 'B',
        "GLX" => 'Z',
        _ => 'X',
    }
}

/// Kyte-Doolittle hydropathy, raw scale (ILE +4.5 ... ARG -4.5). The
/// ambiguous codes take the value shared by their parent residues.
pub fn hydropathy_raw(code: &str) -> Option<f64> {
    Some(match code {
        "ILE" => 4.5,
        "VAL" => 4.2,
        "LEU" => 3.8,
        "PHE" => 2.8,
        "CYS" => 2.5,
        "MET" => 1.9,
        "ALA" => 1.8,
        "GLY" => -0.4,
        "THR" => -0.7,
        "SER" => -0.8,
        "TRP" => -0.9,
        "TYR" => -1.3,
        "PRO" => -1.6,
        "HIS" => -3.2,
        "GLU" | "GLN" | "ASP" | "ASN" | "ASX" | "GLX" => -3.5,
        "LYS" => -3.9,
        "ARG" => -4.5,
        _ => return None,
    })
}

/// Largest magnitude on the hydropathy scale, used for normalization.
pub const HYDROPATHY_SCALE: f64 = 4.5;

/// Integer-style side-chain charge at physiological pH: ASP/GLU -1,
/// LYS/ARG +1, HIS +0.1 for its partial protonation, 0 otherwise.
pub fn sidechain_charge(code: &str) -> f64 {
    match code {
        "ASP" | "GLU" => -1.0,
        "LYS" | "ARG" => 1.0,
        "HIS" => 0.1,
        _ => 0.0,
    }
}

/// Whether `atom_name` of residue `code` is a hydrogen-bond donor heavy
/// atom: the backbone amide nitrogen (absent in proline) and the polar
/// side-chain N/O atoms that carry hydrogens.
pub fn is_donor_atom(code: &str, atom_name: &str) -> bool {
    if atom_name == "N" {
        return code != "PRO";
    }
    matches!(
        (code, atom_name),
        ("SER", "OG")
            | ("THR", "OG1")
            | ("TYR", "OH")
            | ("ASN", "ND2")
            | ("GLN", "NE2")
            | ("LYS", "NZ")
            | ("ARG", "NE")
            | ("ARG", "NH1")
            | ("ARG", "NH2")
            | ("HIS", "ND1")
            | ("HIS", "NE2")
            | ("TRP", "NE1")
    )
}

/// Van der Waals radius in angstroms (Bondi set plus a few common ions).
pub fn vdw_radius(element: &str) -> Option<f64> {
    Some(match element {
        "H" | "D" => 1.20,
        "C" => 1.70,
        "N" => 1.55,
        "O" => 1.52,
        "F" => 1.47,
        "P" => 1.80,
        "S" => 1.80,
        "Cl" => 1.75,
        "Br" => 1.85,
        "I" => 1.98,
        "Se" => 1.90,
        "B" => 1.92,
        "Si" => 2.10,
        "Na" => 2.27,
        "K" => 2.75,
        "Mg" => 1.73,
        "Ca" => 2.31,
        "Zn" => 1.39,
        "Fe" => 2.00,
        "Mn" => 2.00,
        "Cu" => 1.40,
        "Ni" => 1.63,
        "Co" => 2.00,
        _ => return None,
    })
}

/// The periodic table through oganesson, indexed by atomic number - 1.
pub const ELEMENT_SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu",
    "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt",
    "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np",
    "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Atomic number of a normalized symbol, 1-based. None for non-elements.
pub fn atomic_number(element: &str) -> Option<usize> {
    ELEMENT_SYMBOLS.iter().position(|&s| s == element).map(|i| i + 1)
}

/// Normalize an element symbol to table form: "CL" -> "Cl", " c" -> "C".
pub fn normalize_element(raw: &str) -> String {
    let t = raw.trim();
    let mut out = String::with_capacity(2);
    for (i, ch) in t.chars().enumerate() {
        if i == 0 {
            out.extend(ch.to_uppercase());
        } else {
            out.extend(ch.to_lowercase());
        }
    }
    out
}

/// Default valence used to derive implicit hydrogen counts for ligand
/// atoms. Elements without an entry get 0 (no implicit hydrogens).
pub fn standard_valence(element: &str) -> u32 {
    match element {
        "H" | "F" | "Cl" | "Br" | "I" => 1,
        "O" | "S" | "Se" => 2,
        "N" | "P" | "B" | "As" => 3,
        "C" | "Si" => 4,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_one_hot_has_23_slots_and_unk_fallback() {
        assert_eq!(RESIDUE_CODES.len(), 23);
        assert_eq!(residue_one_hot_index("ALA"), 0);
        assert_eq!(residue_one_hot_index("ASX"), 20);
        assert_eq!(residue_one_hot_index("XYZ"), 22);
    }

    #[test]
    fn hydropathy_normalized_endpoints() {
        assert_eq!(hydropathy_raw("ILE").unwrap() / HYDROPATHY_SCALE, 1.0);
        assert_eq!(hydropathy_raw("ARG").unwrap() / HYDROPATHY_SCALE, -1.0);
        let gly = hydropathy_raw("GLY").unwrap() / HYDROPATHY_SCALE;
        assert!((gly - (-0.4 / 4.5)).abs() < 1e-12);
        assert!(hydropathy_raw("MSE").is_none());
    }

    #[test]
    fn charges_cover_the_five_special_residues() {
        assert_eq!(sidechain_charge("ASP"), -1.0);
        assert_eq!(sidechain_charge("GLU"), -1.0);
        assert_eq!(sidechain_charge("LYS"), 1.0);
        assert_eq!(sidechain_charge("ARG"), 1.0);
        assert_eq!(sidechain_charge("HIS"), 0.1);
        assert_eq!(sidechain_charge("ALA"), 0.0);
    }

    #[test]
    fn backbone_nitrogen_is_a_donor_except_in_proline() {
        assert!(is_donor_atom("ALA", "N"));
        assert!(!is_donor_atom("PRO", "N"));
        assert!(is_donor_atom("SER", "OG"));
        assert!(!is_donor_atom("SER", "O"));
    }

    #[test]
    fn element_normalization_and_numbering() {
        assert_eq!(normalize_element(" FE "), "Fe");
        assert_eq!(normalize_element("c"), "C");
        assert_eq!(atomic_number("H"), Some(1));
        assert_eq!(atomic_number("C"), Some(6));
        assert_eq!(atomic_number("Og"), Some(118));
        assert_eq!(atomic_number("Xx"), None);
    }
}

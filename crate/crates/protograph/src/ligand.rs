//! Ligand graphs from parsed MOL records: 88-dim atom features and
//! 6-dim bond features.
//!
//! Atom layout: 65 element slots (Z 1..=64 plus one for everything
//! heavier), 10 heavy-neighbor degree slots, 6 implicit valence slots,
//! 6 explicit valence slots, 1 aromatic flag. Bond layout: type
//! one-hot (single, double, triple, aromatic), conjugated, in-ring.

use std::fmt;

use crate::io::mol::{BondKind, LigandRaw};
use crate::tables;

pub const LIGAND_NODE_DIM: usize = 88;
pub const LIGAND_EDGE_DIM: usize = 6;

const SYMBOL_SLOTS: usize = 65;
const DEGREE_SLOTS: usize = 10;
const VALENCE_SLOTS: usize = 6;
const DEGREE_OFFSET: usize = SYMBOL_SLOTS;
const IMPLICIT_OFFSET: usize = DEGREE_OFFSET + DEGREE_SLOTS;
const EXPLICIT_OFFSET: usize = IMPLICIT_OFFSET + VALENCE_SLOTS;
const AROMATIC_OFFSET: usize = EXPLICIT_OFFSET + VALENCE_SLOTS;

#[derive(Debug, Clone, PartialEq)]
pub struct LigandNode {
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LigandEdge {
    pub a: usize,
    pub b: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LigandGraph {
    pub nodes: Vec<LigandNode>,
    pub edges: Vec<LigandEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LigandWarning {
    /// Explicit bond orders already exceed the element's standard
    /// valence; the implicit count bottoms out at zero.
    ValenceOverflow { atom: usize },
}

impl fmt::Display for LigandWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LigandWarning::ValenceOverflow { atom } => {
                write!(f, "atom {atom}: explicit valence exceeds the standard valence")
            }
        }
    }
}

/// True when removing the bond still leaves a path between its
/// endpoints, i.e. the bond lies on a cycle.
fn bond_in_ring(raw: &LigandRaw, skip: usize) -> bool {
    let (from, to) = (raw.bonds[skip].a, raw.bonds[skip].b);
    let mut adj = vec![Vec::new(); raw.atoms.len()];
    for (i, bond) in raw.bonds.iter().enumerate() {
        if i != skip {
            adj[bond.a].push(bond.b);
            adj[bond.b].push(bond.a);
        }
    }
    let mut seen = vec![false; raw.atoms.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    false
}

pub fn featurize_ligand(raw: &LigandRaw) -> (LigandGraph, Vec<LigandWarning>) {
    let n = raw.atoms.len();
    let mut heavy_degree = vec![0usize; n];
    let mut order_sum = vec![0.0f64; n];
    let mut has_aromatic = vec![false; n];
    let mut has_multiple = vec![false; n];
    for bond in &raw.bonds {
        for (here, there) in [(bond.a, bond.b), (bond.b, bond.a)] {
            if raw.atoms[there].symbol != "H" {
                heavy_degree[here] += 1;
            }
            order_sum[here] += bond.kind.order();
            match bond.kind {
                BondKind::Aromatic => has_aromatic[here] = true,
                BondKind::Double => has_multiple[here] = true,
                _ => {}
            }
        }
    }

    let mut warnings = Vec::new();
    let nodes = raw
        .atoms
        .iter()
        .enumerate()
        .map(|(i, atom)| {
            let mut f = vec![0.0; LIGAND_NODE_DIM];
            let z = tables::atomic_number(&atom.symbol)
                .expect("parser admits only known element symbols");
            f[z.min(SYMBOL_SLOTS) - 1] = 1.0;
            f[DEGREE_OFFSET + heavy_degree[i].min(DEGREE_SLOTS - 1)] = 1.0;
            let explicit = order_sum[i].round() as i64;
            let standard = tables::standard_valence(&atom.symbol) as i64;
            let implicit = if explicit > standard {
                warnings.push(LigandWarning::ValenceOverflow { atom: i });
                0
            } else {
                standard - explicit
            } as usize;
            f[IMPLICIT_OFFSET + implicit.min(VALENCE_SLOTS - 1)] = 1.0;
            f[EXPLICIT_OFFSET + (explicit.max(0) as usize).min(VALENCE_SLOTS - 1)] = 1.0;
            if has_aromatic[i] {
                f[AROMATIC_OFFSET] = 1.0;
            }
            LigandNode { features: f }
        })
        .collect();

    let edges = raw
        .bonds
        .iter()
        .enumerate()
        .map(|(i, bond)| {
            let mut f = vec![0.0; LIGAND_EDGE_DIM];
            let slot = match bond.kind {
                BondKind::Single => 0,
                BondKind::Double => 1,
                BondKind::Triple => 2,
                BondKind::Aromatic => 3,
            };
            f[slot] = 1.0;
            let unsaturated =
                |v: usize| has_aromatic[v] || has_multiple[v];
            if unsaturated(bond.a) && unsaturated(bond.b) {
                f[4] = 1.0;
            }
            if bond_in_ring(raw, i) {
                f[5] = 1.0;
            }
            LigandEdge { a: bond.a, b: bond.b, features: f }
        })
        .collect();

    (LigandGraph { nodes, edges }, warnings)
}

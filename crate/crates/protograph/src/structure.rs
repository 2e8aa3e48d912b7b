//! Residue-level structure layer: one node per residue, edges between
//! residues whose C-alpha atoms lie within a distance cutoff.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geom::{angle_between, dihedral, SpatialGrid};
use crate::protein::{ProteinStructure, Residue};
use crate::sasa;
use crate::tables;

pub const STRUCTURE_NODE_DIM: usize = 33;
pub const STRUCTURE_EDGE_DIM: usize = 2;

/// One-hot slot order for secondary structure. Only H, E, C and '-'
/// (unknown) are produced by the built-in assignment; the other slots
/// exist so sidecar labels from a full 8-class assigner fit unchanged.
pub const SS_ALPHABET: [char; 8] = ['H', 'G', 'I', 'E', 'B', 'T', 'C', '-'];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueNode {
    /// Global residue ordinal in the source structure.
    pub rid: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueEdge {
    pub a: usize,
    pub b: usize,
    /// [C-alpha distance, angle between the two sidechain directions].
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureGraph {
    pub nodes: Vec<ResidueNode>,
    /// Undirected, stored once with a < b.
    pub edges: Vec<ResidueEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructureWarning {
    MissingCalpha { rid: usize, name: String },
    UnknownResidue { rid: usize, name: String },
}

impl fmt::Display for StructureWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureWarning::MissingCalpha { rid, name } => {
                write!(f, "residue {rid} ({name}) has no C-alpha, excluded from the graph")
            }
            StructureWarning::UnknownResidue { rid, name } => {
                write!(f, "residue {rid} ({name}) not in the hydropathy table, using 0")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct StructureConfig {
    pub cutoff: f64,
    pub probe: f64,
    pub sphere_points: usize,
    /// Sidecar labels overriding the dihedral heuristic, (rid, label).
    pub ss_overrides: Vec<(usize, char)>,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig {
            cutoff: 10.0,
            probe: sasa::DEFAULT_PROBE,
            sphere_points: sasa::DEFAULT_SPHERE_POINTS,
            ss_overrides: Vec::new(),
        }
    }
}

fn backbone(residue: &Residue, name: &str) -> Option<nalgebra::Point3<f64>> {
    residue.atom(name).map(|a| a.pos)
}

/// Dihedral-window heuristic over (phi, psi), one label per global
/// residue ordinal. Helix needs a run of at least 4 residues in the
/// helix window, strand 3; undefined torsions (terminals, missing
/// atoms) give '-', everything else 'C'.
pub fn assign_secondary_structure(p: &ProteinStructure) -> Vec<char> {
    let mut labels = Vec::new();
    for chain in &p.chains {
        let n = chain.residues.len();
        let mut phi = vec![None; n];
        let mut psi = vec![None; n];
        for i in 0..n {
            if i > 0 {
                if let (Some(c0), Some(nn), Some(ca), Some(c)) = (
                    backbone(&chain.residues[i - 1], "C"),
                    backbone(&chain.residues[i], "N"),
                    backbone(&chain.residues[i], "CA"),
                    backbone(&chain.residues[i], "C"),
                ) {
                    phi[i] = Some(dihedral(&c0, &nn, &ca, &c).to_degrees());
                }
            }
            if i + 1 < n {
                if let (Some(nn), Some(ca), Some(c), Some(n1)) = (
                    backbone(&chain.residues[i], "N"),
                    backbone(&chain.residues[i], "CA"),
                    backbone(&chain.residues[i], "C"),
                    backbone(&chain.residues[i + 1], "N"),
                ) {
                    psi[i] = Some(dihedral(&nn, &ca, &c, &n1).to_degrees());
                }
            }
        }
        let in_window = |i: usize, pw: (f64, f64), sw: (f64, f64)| match (phi[i], psi[i]) {
            (Some(f), Some(s)) => f >= pw.0 && f <= pw.1 && s >= sw.0 && s <= sw.1,
            _ => false,
        };
        let mut chain_labels = vec!['C'; n];
        for i in 0..n {
            if phi[i].is_none() || psi[i].is_none() {
                chain_labels[i] = '-';
            }
        }
        let mut mark_runs = |window: &dyn Fn(usize) -> bool, min_run: usize, label: char| {
            let mut start = 0;
            while start < n {
                if !window(start) {
                    start += 1;
                    continue;
                }
                let mut end = start;
                while end < n && window(end) {
                    end += 1;
                }
                if end - start >= min_run {
                    for l in chain_labels[start..end].iter_mut() {
                        *l = label;
                    }
                }
                start = end;
            }
        };
        mark_runs(&|i| in_window(i, (-100.0, -30.0), (-80.0, -5.0)), 4, 'H');
        mark_runs(&|i| in_window(i, (-180.0, -90.0), (90.0, 180.0)), 3, 'E');
        labels.extend(chain_labels);
    }
    labels
}

/// Node feature layout: 23 residue one-hot, 8 secondary-structure
/// one-hot, SASA in square angstroms, hydropathy in [-1, 1].
fn node_features(
    rid: usize,
    residue: &Residue,
    ss: char,
    sasa_value: f64,
    warnings: &mut Vec<StructureWarning>,
) -> Vec<f64> {
    let mut f = vec![0.0; STRUCTURE_NODE_DIM];
    f[tables::residue_one_hot_index(&residue.name)] = 1.0;
    let ss_slot = SS_ALPHABET.iter().position(|&c| c == ss).unwrap_or(7);
    f[23 + ss_slot] = 1.0;
    f[31] = sasa_value;
    f[32] = match tables::hydropathy_raw(&residue.name) {
        Some(h) => h / tables::HYDROPATHY_SCALE,
        None => {
            warnings.push(StructureWarning::UnknownResidue {
                rid,
                name: residue.name.clone(),
            });
            0.0
        }
    };
    f
}

/// Direction the sidechain leaves the backbone: C-alpha to C-beta, or
/// C-alpha to N when there is no C-beta (glycine, incomplete residues).
fn sidechain_direction(residue: &Residue) -> nalgebra::Vector3<f64> {
    let ca = match backbone(residue, "CA") {
        Some(p) => p,
        None => return nalgebra::Vector3::zeros(),
    };
    for name in ["CB", "N"] {
        if let Some(p) = backbone(residue, name) {
            return p - ca;
        }
    }
    nalgebra::Vector3::zeros()
}

pub fn build_structure_graph(
    p: &ProteinStructure,
    cfg: &StructureConfig,
) -> Result<(StructureGraph, Vec<StructureWarning>)> {
    let mut warnings = Vec::new();
    let mut ss = assign_secondary_structure(p);
    for &(rid, label) in &cfg.ss_overrides {
        if rid < ss.len() && SS_ALPHABET.contains(&label) {
            ss[rid] = label;
        }
    }
    let sasa_per_residue = sasa::compute_sasa(p, cfg.probe, cfg.sphere_points)?;

    let mut nodes = Vec::new();
    let mut ca_positions = Vec::new();
    let mut directions = Vec::new();
    for (rid, residue) in p.residues() {
        let ca = match residue.ca() {
            Some(atom) => atom.pos,
            None => {
                warnings.push(StructureWarning::MissingCalpha {
                    rid,
                    name: residue.name.clone(),
                });
                continue;
            }
        };
        nodes.push(ResidueNode {
            rid,
            features: node_features(rid, residue, ss[rid], sasa_per_residue[rid], &mut warnings),
        });
        ca_positions.push(ca);
        directions.push(sidechain_direction(residue));
    }

    let mut edges = Vec::new();
    if !ca_positions.is_empty() {
        let grid = SpatialGrid::build(&ca_positions, cfg.cutoff.max(1e-6));
        for a in 0..ca_positions.len() {
            for b in grid.within(&ca_positions[a], cfg.cutoff) {
                if b <= a {
                    continue;
                }
                let distance = (ca_positions[a] - ca_positions[b]).norm();
                let angle = angle_between(&directions[a], &directions[b]);
                edges.push(ResidueEdge { a, b, features: vec![distance, angle] });
            }
        }
    }
    edges.sort_by_key(|e| (e.a, e.b));
    Ok((StructureGraph { nodes, edges }, warnings))
}

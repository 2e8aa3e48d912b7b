//! Assembly of the two-layer protein graph: a surface layer (full
//! mesh, superpixel, or summary-only), the residue structure layer,
//! and directed cross edges from surface-layer nodes to the structure
//! node carrying the same residue id.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ligand::LigandGraph;
use crate::structure::StructureGraph;
use crate::superpixel::SuperpixelGraph;
use crate::surface::SurfaceGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Message passing over every mesh vertex.
    Full,
    /// Message passing over superpixels with W1 edge weights.
    Superpixel,
    /// No surface message passing; summaries feed fusion directly.
    Summary,
}

#[derive(Debug, Clone)]
pub enum SurfaceLayer {
    Full(SurfaceGraph),
    Superpixel(SuperpixelGraph),
    Summary(SuperpixelGraph),
}

impl SurfaceLayer {
    pub fn mode(&self) -> Mode {
        match self {
            SurfaceLayer::Full(_) => Mode::Full,
            SurfaceLayer::Superpixel(_) => Mode::Superpixel,
            SurfaceLayer::Summary(_) => Mode::Summary,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            SurfaceLayer::Full(g) => g.nodes.len(),
            SurfaceLayer::Superpixel(g) | SurfaceLayer::Summary(g) => g.nodes.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiScaleGraph {
    pub surface: SurfaceLayer,
    /// Residue id per surface-layer node: vertex rids in full mode,
    /// majority member rid per superpixel otherwise.
    pub layer_rids: Vec<usize>,
    pub structure: StructureGraph,
    /// (surface-layer node, structure node), directed surface -> structure.
    pub cross_edges: Vec<(usize, usize)>,
    /// Cross edges reach every member residue, not just the majority
    /// one, so per-node rid equality does not apply.
    pub fan_out: bool,
    pub ligand: Option<LigandGraph>,
}

#[derive(Debug, Clone, Copy)]
pub struct MultiscaleOptions {
    pub mode: Mode,
    /// Superpixel modes only: cross edges to every distinct member
    /// residue instead of just the majority one.
    pub fan_out: bool,
}

impl Default for MultiscaleOptions {
    fn default() -> Self {
        MultiscaleOptions { mode: Mode::Full, fan_out: false }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildReport {
    /// Surface-layer nodes whose residue id has no structure node;
    /// they end up without a cross edge.
    pub dropped: Vec<usize>,
}

/// Majority residue id among each superpixel's member vertices, ties
/// toward the lowest id.
fn majority_rids(labels: &[usize], vertex_rids: &[usize], k: usize) -> Vec<usize> {
    let mut counts: Vec<HashMap<usize, usize>> = vec![HashMap::new(); k];
    for (v, &l) in labels.iter().enumerate() {
        *counts[l].entry(vertex_rids[v]).or_insert(0) += 1;
    }
    counts
        .iter()
        .map(|c| {
            c.iter()
                .map(|(&rid, &n)| (n, std::cmp::Reverse(rid)))
                .max()
                .map(|(_, std::cmp::Reverse(rid))| rid)
                .expect("every superpixel has at least one member")
        })
        .collect()
}

pub fn build_multiscale(
    surface: &SurfaceGraph,
    superpixels: Option<&SuperpixelGraph>,
    structure: &StructureGraph,
    ligand: Option<LigandGraph>,
    opts: &MultiscaleOptions,
) -> Result<(MultiScaleGraph, BuildReport)> {
    if structure.nodes.is_empty() {
        return Err(Error::EmptyLayer("structure"));
    }
    if surface.nodes.is_empty() {
        return Err(Error::EmptyLayer("surface"));
    }
    let structure_of_rid: HashMap<usize, usize> =
        structure.nodes.iter().enumerate().map(|(i, n)| (n.rid, i)).collect();
    let vertex_rids: Vec<usize> = surface.nodes.iter().map(|n| n.rid).collect();

    let mut report = BuildReport::default();
    let mut cross_edges = Vec::new();

    let (layer, layer_rids) = match opts.mode {
        Mode::Full => (SurfaceLayer::Full(surface.clone()), vertex_rids),
        Mode::Superpixel | Mode::Summary => {
            let sp = superpixels.ok_or_else(|| {
                Error::InvalidArgument("superpixel modes need a segmented surface".into())
            })?;
            let rids = majority_rids(&sp.labels, &vertex_rids, sp.nodes.len());
            if opts.fan_out {
                let mut member_rids: Vec<Vec<usize>> = vec![Vec::new(); sp.nodes.len()];
                for (v, &l) in sp.labels.iter().enumerate() {
                    member_rids[l].push(vertex_rids[v]);
                }
                for (node, rids) in member_rids.iter_mut().enumerate() {
                    rids.sort_unstable();
                    rids.dedup();
                    let mut any = false;
                    for &rid in rids.iter() {
                        if let Some(&b) = structure_of_rid.get(&rid) {
                            cross_edges.push((node, b));
                            any = true;
                        }
                    }
                    if !any {
                        report.dropped.push(node);
                    }
                }
            }
            let layer = match opts.mode {
                Mode::Superpixel => SurfaceLayer::Superpixel(sp.clone()),
                _ => SurfaceLayer::Summary(sp.clone()),
            };
            (layer, rids)
        }
    };

    if !(opts.fan_out && layer.mode() != Mode::Full) {
        for (node, &rid) in layer_rids.iter().enumerate() {
            match structure_of_rid.get(&rid) {
                Some(&b) => cross_edges.push((node, b)),
                None => report.dropped.push(node),
            }
        }
    }

    let graph = MultiScaleGraph {
        surface: layer,
        layer_rids,
        structure: structure.clone(),
        cross_edges,
        fan_out: opts.fan_out && opts.mode != Mode::Full,
        ligand,
    };
    Ok((graph, report))
}

/// Invariant check, reported rather than raised: an empty list means
/// the graph is well formed.
pub fn validate(g: &MultiScaleGraph) -> Vec<String> {
    let mut violations = Vec::new();
    let n_surface = g.surface.node_count();
    let n_structure = g.structure.nodes.len();
    if n_structure == 0 {
        violations.push("structure layer is empty".into());
    }
    if n_surface == 0 {
        violations.push("surface layer is empty".into());
    }
    if g.layer_rids.len() != n_surface {
        violations.push(format!(
            "layer_rids has {} entries for {} surface nodes",
            g.layer_rids.len(),
            n_surface
        ));
    }

    let mut out_degree = vec![0usize; n_surface];
    for &(s, b) in &g.cross_edges {
        if s >= n_surface || b >= n_structure {
            violations.push(format!("cross edge ({s}, {b}) is out of range"));
            continue;
        }
        out_degree[s] += 1;
        if !g.fan_out && s < g.layer_rids.len() && g.layer_rids[s] != g.structure.nodes[b].rid {
            violations.push(format!(
                "cross edge ({s}, {b}) joins residue {} to residue {}",
                g.layer_rids[s], g.structure.nodes[b].rid
            ));
        }
    }
    if g.surface.mode() == Mode::Full {
        for (s, &d) in out_degree.iter().enumerate() {
            if d != 1 {
                violations.push(format!("surface node {s} has {d} cross edges, wanted 1"));
            }
        }
    } else {
        for (s, &d) in out_degree.iter().enumerate() {
            if d == 0 {
                violations.push(format!("superpixel {s} has no cross edge"));
            }
        }
    }

    match &g.surface {
        SurfaceLayer::Full(sg) => {
            for (i, e) in sg.edges.iter().enumerate() {
                if e.a >= n_surface || e.b >= n_surface {
                    violations.push(format!("surface edge {i} is out of range"));
                }
            }
        }
        SurfaceLayer::Superpixel(sp) | SurfaceLayer::Summary(sp) => {
            let expect = sp.labels.iter().max().map_or(0, |m| m + 1);
            if sp.nodes.len() != expect {
                violations.push(format!(
                    "{} superpixel nodes but labels name {expect}",
                    sp.nodes.len()
                ));
            }
            for (i, &(a, b, w)) in sp.edges.iter().enumerate() {
                if a >= n_surface || b >= n_surface {
                    violations.push(format!("superpixel edge {i} is out of range"));
                }
                if !w.is_finite() || w < 0.0 {
                    violations.push(format!("superpixel edge {i} has weight {w}"));
                }
            }
        }
    }

    for (i, e) in g.structure.edges.iter().enumerate() {
        if e.a >= n_structure || e.b >= n_structure {
            violations.push(format!("structure edge {i} is out of range"));
        }
    }
    if let Some(lig) = &g.ligand {
        for (i, e) in lig.edges.iter().enumerate() {
            if e.a >= lig.nodes.len() || e.b >= lig.nodes.len() {
                violations.push(format!("ligand edge {i} is out of range"));
            }
        }
    }
    violations
}

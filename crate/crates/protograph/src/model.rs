//! The multi-scale encoder: one message passing network per layer,
//! surface-to-structure fusion, summed readouts, and task heads.
//!
//! Message passing follows the Weisfeiler-Lehman form: the inner edge
//! messages tau(V.[f_u; f_v]) depend only on raw features, so they are
//! computed once and reused every round; the round update is
//! m = tau(m.U1 + agg.U2) with m0 = f, and the readout multiplies
//! W0 m_u, W1 f_uv and W2 m_v elementwise over incident edges. The
//! first round consumes d_in columns, so U1 comes in a d_in x h and an
//! h x h flavor.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ligand::{LigandGraph, LIGAND_EDGE_DIM, LIGAND_NODE_DIM};
use crate::multiscale::{Mode, MultiScaleGraph, SurfaceLayer};
use crate::structure::{STRUCTURE_EDGE_DIM, STRUCTURE_NODE_DIM};
use crate::superpixel::SUPERPIXEL_NODE_DIM;
use crate::surface::{SURFACE_EDGE_DIM, SURFACE_NODE_DIM};
use crate::tensor::{Graph, Tensor};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Affinity,
    Reaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
}

impl Activation {
    fn apply(&self, t: &Tensor) -> Tensor {
        match self {
            Activation::Relu => t.relu(),
            Activation::LeakyRelu(a) => t.leaky_relu(*a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub task: Task,
    pub mode: Mode,
    pub hidden_surface: usize,
    pub hidden_structure: usize,
    pub hidden_ligand: usize,
    pub steps_surface: usize,
    pub steps_structure: usize,
    pub steps_ligand: usize,
    pub mlp_hidden: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub activation: Activation,
}

impl ModelConfig {
    pub fn affinity() -> Self {
        ModelConfig {
            task: Task::Affinity,
            mode: Mode::Full,
            hidden_surface: 150,
            hidden_structure: 200,
            hidden_ligand: 300,
            steps_surface: 6,
            steps_structure: 5,
            steps_ligand: 4,
            mlp_hidden: 512,
            n_classes: 1,
            dropout: 0.0,
            activation: Activation::Relu,
        }
    }

    pub fn reaction(n_classes: usize) -> Self {
        ModelConfig {
            task: Task::Reaction,
            n_classes,
            activation: Activation::LeakyRelu(0.01),
            ..ModelConfig::affinity()
        }
    }

    /// Surface-layer input width by mode.
    pub fn surface_node_dim(&self) -> usize {
        match self.mode {
            Mode::Full => SURFACE_NODE_DIM,
            Mode::Superpixel | Mode::Summary => SUPERPIXEL_NODE_DIM,
        }
    }

    /// Width of the surface-side slot in the fusion input.
    fn fusion_mean_dim(&self) -> usize {
        match self.mode {
            Mode::Summary => SUPERPIXEL_NODE_DIM,
            _ => self.hidden_surface,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub tensors: Vec<ParamTensor>,
}

fn wln_layout(out: &mut Vec<(String, usize, usize)>, prefix: &str, d_in: usize, e_dim: usize, h: usize) {
    out.push((format!("{prefix}.u1_0"), d_in, h));
    out.push((format!("{prefix}.u1"), h, h));
    out.push((format!("{prefix}.u2"), h, h));
    out.push((format!("{prefix}.v"), 2 * d_in, h));
    out.push((format!("{prefix}.w0"), h, h));
    out.push((format!("{prefix}.w1"), e_dim, h));
    out.push((format!("{prefix}.w2"), h, h));
}

fn mlp_layout(out: &mut Vec<(String, usize, usize)>, prefix: &str, d_in: usize, hidden: usize, d_out: usize) {
    out.push((format!("{prefix}.w1"), d_in, hidden));
    out.push((format!("{prefix}.b1"), 1, hidden));
    out.push((format!("{prefix}.w2"), hidden, d_out));
    out.push((format!("{prefix}.b2"), 1, d_out));
}

/// Tensor names and shapes in their fixed initialization order.
pub fn layout(config: &ModelConfig) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    if config.mode != Mode::Summary {
        wln_layout(
            &mut out,
            "surface",
            config.surface_node_dim(),
            SURFACE_EDGE_DIM,
            config.hidden_surface,
        );
    }
    mlp_layout(
        &mut out,
        "fusion",
        STRUCTURE_NODE_DIM + config.fusion_mean_dim(),
        config.mlp_hidden,
        config.hidden_structure,
    );
    wln_layout(
        &mut out,
        "structure",
        config.hidden_structure,
        STRUCTURE_EDGE_DIM,
        config.hidden_structure,
    );
    let head_in = match config.task {
        Task::Affinity => {
            wln_layout(
                &mut out,
                "ligand",
                LIGAND_NODE_DIM,
                LIGAND_EDGE_DIM,
                config.hidden_ligand,
            );
            config.hidden_structure + config.hidden_ligand
        }
        Task::Reaction => config.hidden_structure,
    };
    let head_out = match config.task {
        Task::Affinity => 1,
        Task::Reaction => config.n_classes,
    };
    mlp_layout(&mut out, "head", head_in, config.mlp_hidden, head_out);
    out
}

impl ModelParams {
    /// Xavier-uniform weights, zero biases, drawn in layout order from
    /// one seeded stream so a seed pins every value.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let tensors = layout(config)
            .into_iter()
            .map(|(name, rows, cols)| {
                let values = if name.ends_with(".b1") || name.ends_with(".b2") {
                    vec![0.0; rows * cols]
                } else {
                    let a = (6.0 / (rows + cols) as f64).sqrt();
                    (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect()
                };
                ParamTensor { name, rows, cols, values }
            })
            .collect();
        ModelParams { config: config.clone(), tensors }
    }

    pub fn get(&self, name: &str) -> &ParamTensor {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("no parameter tensor named {name}"))
    }

    pub fn count_parameters(&self) -> usize {
        self.tensors.iter().map(|t| t.values.len()).sum()
    }

    fn config(&self) -> &ModelConfig {
        &self.config
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    config: ModelConfig,
    tensors: Vec<ParamTensor>,
}

pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<()> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        config: params.config.clone(),
        tensors: params.tensors.clone(),
    };
    std::fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let file: CheckpointFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::SchemaVersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: file.version,
        });
    }
    let expected = layout(&file.config);
    if file.tensors.len() != expected.len() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint holds {} tensors, config needs {}",
            file.tensors.len(),
            expected.len()
        )));
    }
    for (t, (name, rows, cols)) in file.tensors.iter().zip(&expected) {
        if &t.name != name || t.rows != *rows || t.cols != *cols || t.values.len() != rows * cols
        {
            return Err(Error::InvalidArgument(format!(
                "checkpoint tensor {} does not match the {name} slot ({rows}x{cols})",
                t.name
            )));
        }
    }
    Ok(ModelParams { config: file.config, tensors: file.tensors })
}

/// Model parameters bound onto a tape as leaves, one per tensor in
/// layout order, so gradients read back by the same index.
pub struct BoundModel<'a> {
    pub graph: Graph,
    pub params: &'a ModelParams,
    leaves: Vec<Tensor>,
}

impl<'a> BoundModel<'a> {
    pub fn bind(graph: &Graph, params: &'a ModelParams) -> Self {
        let leaves = params
            .tensors
            .iter()
            .map(|t| graph.leaf(t.rows, t.cols, t.values.clone()))
            .collect();
        BoundModel { graph: graph.clone(), params, leaves }
    }

    fn t(&self, name: &str) -> &Tensor {
        let i = self
            .params
            .tensors
            .iter()
            .position(|t| t.name == name)
            .unwrap_or_else(|| panic!("no bound tensor named {name}"));
        &self.leaves[i]
    }

    /// Per-tensor gradients in layout order; call after backward().
    pub fn gradients(&self) -> Vec<Vec<f64>> {
        self.leaves.iter().map(|t| t.grad()).collect()
    }
}

fn directed(pairs: impl Iterator<Item = (usize, usize)>, feats: &[Vec<f64>], e_dim: usize) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut src = Vec::new();
    let mut dst = Vec::new();
    let mut rows = Vec::new();
    for (i, (a, b)) in pairs.enumerate() {
        debug_assert_eq!(feats[i].len(), e_dim);
        for (u, v) in [(a, b), (b, a)] {
            src.push(u);
            dst.push(v);
            rows.extend_from_slice(&feats[i]);
        }
    }
    (src, dst, rows)
}

/// One message passing stack. Empty neighborhoods contribute an empty
/// sum, so isolated nodes read out to zero.
fn wln(
    bm: &BoundModel,
    prefix: &str,
    nodes: &Tensor,
    src: &[usize],
    dst: &[usize],
    edge_feats: &Tensor,
    steps: usize,
    act: Activation,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Tensor {
    assert!(steps >= 1, "message passing needs at least one round");
    let n = nodes.rows();
    let inner = act.apply(
        &nodes
            .gather_rows(src)
            .concat_cols(&nodes.gather_rows(dst))
            .matmul(bm.t(&format!("{prefix}.v"))),
    );
    let agg = inner.segment_sum(dst, n).matmul(bm.t(&format!("{prefix}.u2")));
    let mut m = nodes.clone();
    for step in 0..steps {
        let u1 = if step == 0 { format!("{prefix}.u1_0") } else { format!("{prefix}.u1") };
        m = act.apply(&m.matmul(bm.t(&u1)).add(&agg));
        if dropout > 0.0 {
            m = m.dropout(dropout, rng);
        }
    }
    let left = m.matmul(bm.t(&format!("{prefix}.w0"))).gather_rows(src);
    let mid = edge_feats.matmul(bm.t(&format!("{prefix}.w1")));
    let right = m.matmul(bm.t(&format!("{prefix}.w2"))).gather_rows(dst);
    left.mul(&mid).mul(&right).segment_sum(dst, n)
}

fn mlp(
    bm: &BoundModel,
    prefix: &str,
    input: &Tensor,
    act: Activation,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Tensor {
    let mut hidden = act.apply(
        &input
            .matmul(bm.t(&format!("{prefix}.w1")))
            .add_row(bm.t(&format!("{prefix}.b1"))),
    );
    if dropout > 0.0 {
        hidden = hidden.dropout(dropout, rng);
    }
    hidden
        .matmul(bm.t(&format!("{prefix}.w2")))
        .add_row(bm.t(&format!("{prefix}.b2")))
}

/// Mean of mapped surface-layer embeddings per structure node; nodes
/// with nothing mapped get a zero row.
pub fn mean_by_cross_edges(h_surface: &Tensor, cross: &[(usize, usize)], n_structure: usize) -> Tensor {
    let src: Vec<usize> = cross.iter().map(|&(s, _)| s).collect();
    let dst: Vec<usize> = cross.iter().map(|&(_, b)| b).collect();
    let mut counts = vec![0usize; n_structure];
    for &b in &dst {
        counts[b] += 1;
    }
    let weights: Vec<f64> =
        counts.iter().map(|&c| if c > 0 { 1.0 / c as f64 } else { 0.0 }).collect();
    h_surface.gather_rows(&src).segment_sum(&dst, n_structure).row_scale(&weights)
}

fn check_dims(config: &ModelConfig, g: &MultiScaleGraph) -> Result<()> {
    if g.surface.mode() != config.mode {
        return Err(Error::InvalidArgument(format!(
            "graph surface layer is {:?} but the model expects {:?}",
            g.surface.mode(),
            config.mode
        )));
    }
    let want = config.surface_node_dim();
    let got = match &g.surface {
        SurfaceLayer::Full(sg) => sg.nodes.first().map(|n| n.features.len()),
        SurfaceLayer::Superpixel(sp) | SurfaceLayer::Summary(sp) => {
            sp.nodes.first().map(|n| n.len())
        }
    };
    if let Some(got) = got {
        if got != want {
            return Err(Error::DimensionMismatch { left: got, right: want });
        }
    }
    if let Some(node) = g.structure.nodes.first() {
        if node.features.len() != STRUCTURE_NODE_DIM {
            return Err(Error::DimensionMismatch {
                left: node.features.len(),
                right: STRUCTURE_NODE_DIM,
            });
        }
    }
    if config.task == Task::Affinity && g.ligand.is_none() {
        return Err(Error::InvalidArgument(
            "affinity prediction needs a ligand graph".into(),
        ));
    }
    Ok(())
}

/// Surface encoding, fusion, structure encoding, summed readout.
pub fn encode_protein(
    bm: &BoundModel,
    g: &MultiScaleGraph,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Result<Tensor> {
    check_dims(bm.params.config(), g)?;
    let cfg = bm.params.config();
    let act = cfg.activation;

    let h_surface = match &g.surface {
        SurfaceLayer::Full(sg) => {
            let feats: Vec<f64> = sg.nodes.iter().flat_map(|n| n.features.clone()).collect();
            let nodes = bm.graph.leaf(sg.nodes.len(), SURFACE_NODE_DIM, feats);
            let rows: Vec<Vec<f64>> = sg.edges.iter().map(|e| e.features.clone()).collect();
            let (src, dst, erows) =
                directed(sg.edges.iter().map(|e| (e.a, e.b)), &rows, SURFACE_EDGE_DIM);
            let ef = bm.graph.leaf(src.len(), SURFACE_EDGE_DIM, erows);
            wln(bm, "surface", &nodes, &src, &dst, &ef, cfg.steps_surface, act, dropout, rng)
        }
        SurfaceLayer::Superpixel(sp) => {
            let feats: Vec<f64> = sp.nodes.iter().flatten().copied().collect();
            let nodes = bm.graph.leaf(sp.nodes.len(), SUPERPIXEL_NODE_DIM, feats);
            // W1 distance in the first slot, zero-padded to the full
            // surface edge width.
            let rows: Vec<Vec<f64>> = sp
                .edges
                .iter()
                .map(|&(_, _, w)| {
                    let mut r = vec![0.0; SURFACE_EDGE_DIM];
                    r[0] = w;
                    r
                })
                .collect();
            let (src, dst, erows) =
                directed(sp.edges.iter().map(|&(a, b, _)| (a, b)), &rows, SURFACE_EDGE_DIM);
            let ef = bm.graph.leaf(src.len(), SURFACE_EDGE_DIM, erows);
            wln(bm, "surface", &nodes, &src, &dst, &ef, cfg.steps_surface, act, dropout, rng)
        }
        SurfaceLayer::Summary(sp) => {
            let feats: Vec<f64> = sp.nodes.iter().flatten().copied().collect();
            bm.graph.leaf(sp.nodes.len(), SUPERPIXEL_NODE_DIM, feats)
        }
    };

    let n_b = g.structure.nodes.len();
    let mean = mean_by_cross_edges(&h_surface, &g.cross_edges, n_b);
    let f_b: Vec<f64> = g.structure.nodes.iter().flat_map(|n| n.features.clone()).collect();
    let f_b = bm.graph.leaf(n_b, STRUCTURE_NODE_DIM, f_b);
    let fused = mlp(bm, "fusion", &f_b.concat_cols(&mean), act, dropout, rng);

    let rows: Vec<Vec<f64>> = g.structure.edges.iter().map(|e| e.features.clone()).collect();
    let (src, dst, erows) = directed(
        g.structure.edges.iter().map(|e| (e.a, e.b)),
        &rows,
        STRUCTURE_EDGE_DIM,
    );
    let ef = bm.graph.leaf(src.len(), STRUCTURE_EDGE_DIM, erows);
    let h_b = wln(bm, "structure", &fused, &src, &dst, &ef, cfg.steps_structure, act, dropout, rng);
    Ok(h_b.segment_sum(&vec![0; n_b], 1))
}

pub fn encode_ligand(
    bm: &BoundModel,
    lig: &LigandGraph,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Result<Tensor> {
    if let Some(node) = lig.nodes.first() {
        if node.features.len() != LIGAND_NODE_DIM {
            return Err(Error::DimensionMismatch {
                left: node.features.len(),
                right: LIGAND_NODE_DIM,
            });
        }
    }
    let cfg = bm.params.config();
    let feats: Vec<f64> = lig.nodes.iter().flat_map(|n| n.features.clone()).collect();
    let nodes = bm.graph.leaf(lig.nodes.len(), LIGAND_NODE_DIM, feats);
    let rows: Vec<Vec<f64>> = lig.edges.iter().map(|e| e.features.clone()).collect();
    let (src, dst, erows) =
        directed(lig.edges.iter().map(|e| (e.a, e.b)), &rows, LIGAND_EDGE_DIM);
    let ef = bm.graph.leaf(src.len(), LIGAND_EDGE_DIM, erows);
    let h = wln(
        bm,
        "ligand",
        &nodes,
        &src,
        &dst,
        &ef,
        cfg.steps_ligand,
        cfg.activation,
        dropout,
        rng,
    );
    Ok(h.segment_sum(&vec![0; lig.nodes.len()], 1))
}

pub fn predict_affinity(
    bm: &BoundModel,
    c_protein: &Tensor,
    c_ligand: &Tensor,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Tensor {
    let cfg = bm.params.config();
    mlp(bm, "head", &c_protein.concat_cols(c_ligand), cfg.activation, dropout, rng)
}

pub fn predict_class(
    bm: &BoundModel,
    c_protein: &Tensor,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Tensor {
    let cfg = bm.params.config();
    mlp(bm, "head", c_protein, cfg.activation, dropout, rng)
}

/// Task-appropriate forward pass: a 1x1 affinity or 1 x n_classes logits.
pub fn predict(
    bm: &BoundModel,
    g: &MultiScaleGraph,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Result<Tensor> {
    let c_p = encode_protein(bm, g, dropout, rng)?;
    match bm.params.config().task {
        Task::Affinity => {
            let lig = g.ligand.as_ref().expect("checked by encode_protein");
            let c_l = encode_ligand(bm, lig, dropout, rng)?;
            Ok(predict_affinity(bm, &c_p, &c_l, dropout, rng))
        }
        Task::Reaction => Ok(predict_class(bm, &c_p, dropout, rng)),
    }
}

pub fn mse_loss(pred: &Tensor, graph: &Graph, targets: &[f64]) -> Tensor {
    assert_eq!(pred.rows(), targets.len(), "one target per prediction row");
    let t = graph.leaf(targets.len(), 1, targets.to_vec());
    let diff = pred.sub(&t);
    diff.mul(&diff).mean_all()
}

/// Cross entropy with log-sum-exp stabilization, mean over rows.
pub fn cross_entropy_loss(logits: &Tensor, labels: &[usize]) -> Tensor {
    logits.log_sum_exp().sub(&logits.pick(labels)).mean_all()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ligand::{LigandEdge, LigandNode};
    use crate::structure::{ResidueEdge, ResidueNode, StructureGraph};
    use crate::surface::{SurfaceEdge, SurfaceGraph, SurfaceNode};
    use crate::tensor::numeric_gradient;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            hidden_surface: 5,
            hidden_structure: 6,
            hidden_ligand: 7,
            steps_surface: 2,
            steps_structure: 2,
            steps_ligand: 2,
            mlp_hidden: 8,
            ..ModelConfig::affinity()
        }
    }

    fn toy_graph(seed: u64) -> MultiScaleGraph {
        let mut s = seed.wrapping_mul(2654435761).wrapping_add(17);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let surface = SurfaceGraph {
            nodes: (0..7)
                .map(|v| SurfaceNode { rid: v % 3, features: (0..4).map(|_| next()).collect() })
                .collect(),
            edges: [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (1, 4)]
                .iter()
                .map(|&(a, b)| SurfaceEdge { a, b, features: (0..9).map(|_| next()).collect() })
                .collect(),
        };
        let structure = StructureGraph {
            nodes: (0..3)
                .map(|rid| ResidueNode { rid, features: (0..33).map(|_| next()).collect() })
                .collect(),
            edges: vec![
                ResidueEdge { a: 0, b: 1, features: vec![next(), next()] },
                ResidueEdge { a: 1, b: 2, features: vec![next(), next()] },
            ],
        };
        let ligand = LigandGraph {
            nodes: (0..4)
                .map(|_| LigandNode { features: (0..88).map(|_| next()).collect() })
                .collect(),
            edges: [(0, 1), (1, 2), (2, 3), (3, 0)]
                .iter()
                .map(|&(a, b)| LigandEdge { a, b, features: (0..6).map(|_| next()).collect() })
                .collect(),
        };
        let (g, report) = crate::multiscale::build_multiscale(
            &surface,
            None,
            &structure,
            Some(ligand),
            &crate::multiscale::MultiscaleOptions::default(),
        )
        .unwrap();
        assert!(report.dropped.is_empty());
        g
    }

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(7)
    }

    #[test]
    fn zero_parameters_encode_to_zero() {
        let cfg = tiny_config();
        let mut params = ModelParams::init(&cfg, 1);
        for t in &mut params.tensors {
            t.values.iter_mut().for_each(|v| *v = 0.0);
        }
        let graph = Graph::new();
        let bm = BoundModel::bind(&graph, &params);
        let c = encode_protein(&bm, &toy_graph(1), 0.0, &mut rng()).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn isolated_ligand_atom_reads_out_zero() {
        let cfg = tiny_config();
        let params = ModelParams::init(&cfg, 2);
        let graph = Graph::new();
        let bm = BoundModel::bind(&graph, &params);
        let lig = LigandGraph {
            nodes: vec![LigandNode { features: vec![0.3; 88] }],
            edges: vec![],
        };
        let c = encode_ligand(&bm, &lig, 0.0, &mut rng()).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0), "empty neighbor sums read out zero");
    }

    #[test]
    fn cross_edge_means_match_brute_force() {
        let graph = Graph::new();
        let h = graph.leaf(4, 3, (0..12).map(|i| i as f64).collect());
        let cross = vec![(0, 1), (2, 1), (3, 1), (1, 0)];
        let mean = mean_by_cross_edges(&h, &cross, 3);
        let v = mean.values();
        assert_eq!(&v[0..3], &[3.0, 4.0, 5.0], "single mapped node is its own mean");
        for c in 0..3 {
            let want = (h.values()[c] + h.values()[6 + c] + h.values()[9 + c]) / 3.0;
            assert!((v[3 + c] - want).abs() < 1e-12);
        }
        assert_eq!(&v[6..9], &[0.0, 0.0, 0.0], "unmapped node means are zero");
    }

    #[test]
    fn permutation_of_every_layer_preserves_outputs() {
        let cfg = tiny_config();
        let params = ModelParams::init(&cfg, 3);
        let g = toy_graph(5);

        let run = |g: &MultiScaleGraph| {
            let graph = Graph::new();
            let bm = BoundModel::bind(&graph, &params);
            predict(&bm, g, 0.0, &mut rng()).unwrap().values()
        };
        let base = run(&g);

        for trial in 0..5u64 {
            let mut permuted = g.clone();
            permute_graph(&mut permuted, trial + 11);
            let out = run(&permuted);
            for (a, b) in base.iter().zip(&out) {
                let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-12);
                assert!(rel <= 1e-10, "trial {trial}: {a} vs {b}");
            }
        }
    }

    /// Relabel surface, structure, and ligand nodes with independent
    /// permutations, rewriting edges and cross references.
    fn permute_graph(g: &mut MultiScaleGraph, seed: u64) {
        let mut s = seed;
        let mut next = move |n: usize| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as usize % n
        };
        let perm = |next: &mut dyn FnMut(usize) -> usize, n: usize| -> Vec<usize> {
            let mut p: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                p.swap(i, next(i + 1));
            }
            p
        };

        if let SurfaceLayer::Full(sg) = &mut g.surface {
            let n = sg.nodes.len();
            let p = perm(&mut next, n);
            let mut nodes = sg.nodes.clone();
            let mut rids = g.layer_rids.clone();
            for v in 0..n {
                nodes[p[v]] = sg.nodes[v].clone();
                rids[p[v]] = g.layer_rids[v];
            }
            sg.nodes = nodes;
            g.layer_rids = rids;
            for e in &mut sg.edges {
                e.a = p[e.a];
                e.b = p[e.b];
            }
            for c in &mut g.cross_edges {
                c.0 = p[c.0];
            }
        }

        let n_b = g.structure.nodes.len();
        let pb = perm(&mut next, n_b);
        let mut nodes = g.structure.nodes.clone();
        for v in 0..n_b {
            nodes[pb[v]] = g.structure.nodes[v].clone();
        }
        g.structure.nodes = nodes;
        for e in &mut g.structure.edges {
            e.a = pb[e.a];
            e.b = pb[e.b];
        }
        for c in &mut g.cross_edges {
            c.1 = pb[c.1];
        }

        if let Some(lig) = &mut g.ligand {
            let n_l = lig.nodes.len();
            let pl = perm(&mut next, n_l);
            let mut nodes = lig.nodes.clone();
            for v in 0..n_l {
                nodes[pl[v]] = lig.nodes[v].clone();
            }
            lig.nodes = nodes;
            for e in &mut lig.edges {
                e.a = pl[e.a];
                e.b = pl[e.b];
            }
        }
    }

    #[test]
    fn zeroed_head_weights_leave_only_the_bias() {
        let cfg = tiny_config();
        let mut params = ModelParams::init(&cfg, 4);
        for t in &mut params.tensors {
            if t.name.starts_with("head.") {
                let fill = if t.name == "head.b2" { 2.5 } else { 0.0 };
                t.values.iter_mut().for_each(|v| *v = fill);
            }
        }
        let graph = Graph::new();
        let bm = BoundModel::bind(&graph, &params);
        let out = predict(&bm, &toy_graph(2), 0.0, &mut rng()).unwrap();
        assert!((out.scalar_value() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn loss_oracles() {
        let graph = Graph::new();
        let pred = graph.leaf(3, 1, vec![1.0, 2.0, 3.0]);
        assert_eq!(mse_loss(&pred, &graph, &[1.0, 2.0, 3.0]).scalar_value(), 0.0);
        let pred = graph.leaf(2, 1, vec![1.0, 4.0]);
        assert!((mse_loss(&pred, &graph, &[0.0, 2.0]).scalar_value() - 2.5).abs() < 1e-12);

        let logits = graph.leaf(2, 4, vec![0.5; 8]);
        let ce = cross_entropy_loss(&logits, &[0, 3]).scalar_value();
        assert!((ce - 4.0f64.ln()).abs() < 1e-12, "uniform logits cost ln C");
    }

    #[test]
    fn softmax_probabilities_sum_to_one() {
        let graph = Graph::new();
        let logits = graph.leaf(1, 5, vec![0.3, -1.2, 2.0, 0.0, 0.7]);
        let lse = logits.log_sum_exp().scalar_value();
        let total: f64 = logits.values().iter().map(|x| (x - lse).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_dims_one_parameter_count_matches_hand_formula() {
        let cfg = ModelConfig {
            hidden_surface: 1,
            hidden_structure: 1,
            hidden_ligand: 1,
            mlp_hidden: 1,
            ..ModelConfig::affinity()
        };
        let params = ModelParams::init(&cfg, 0);
        // surface: 4+1+1+8+1+9+1 = 25; fusion: 34+1+1+1 = 37;
        // structure: 1+1+1+2+1+2+1 = 9; ligand: 88+1+1+176+1+6+1 = 274;
        // head: 2+1+1+1 = 5.
        assert_eq!(params.count_parameters(), 25 + 37 + 9 + 274 + 5);
    }

    #[test]
    fn default_affinity_config_sits_near_the_reference_budget() {
        let params = ModelParams::init(&ModelConfig::affinity(), 0);
        let count = params.count_parameters() as f64;
        let reference = 1.44e6;
        assert!(
            (count - reference).abs() <= 0.3 * reference,
            "{count} strays more than 30% from {reference}"
        );
    }

    #[test]
    fn checkpoint_round_trips_and_rejects_other_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let params = ModelParams::init(&tiny_config(), 9);
        save_checkpoint(&path, &params).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, params);

        let mut text = std::fs::read_to_string(&path).unwrap();
        text = text.replace("\"version\":1", "\"version\":2");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::SchemaVersionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn seeded_init_is_reproducible_and_seed_sensitive() {
        let cfg = tiny_config();
        assert_eq!(ModelParams::init(&cfg, 5), ModelParams::init(&cfg, 5));
        assert_ne!(ModelParams::init(&cfg, 5), ModelParams::init(&cfg, 6));
    }

    #[test]
    fn full_pipeline_gradients_match_finite_differences() {
        let cfg = ModelConfig {
            hidden_surface: 3,
            hidden_structure: 3,
            hidden_ligand: 3,
            steps_surface: 2,
            steps_structure: 2,
            steps_ligand: 2,
            mlp_hidden: 4,
            ..ModelConfig::affinity()
        };
        let params = ModelParams::init(&cfg, 13);
        let g = toy_graph(3);
        let target = 1.7;

        let loss_with = |params: &ModelParams| -> f64 {
            let graph = Graph::new();
            let bm = BoundModel::bind(&graph, params);
            let out = predict(&bm, &g, 0.0, &mut rng()).unwrap();
            mse_loss(&out, &graph, &[target]).scalar_value()
        };

        let graph = Graph::new();
        let bm = BoundModel::bind(&graph, &params);
        let out = predict(&bm, &g, 0.0, &mut rng()).unwrap();
        mse_loss(&out, &graph, &[target]).backward();
        let grads = bm.gradients();

        for (ti, tensor) in params.tensors.iter().enumerate() {
            let numeric = numeric_gradient(
                |v| {
                    let mut probe = params.clone();
                    probe.tensors[ti].values = v.to_vec();
                    loss_with(&probe)
                },
                &tensor.values,
                1e-6,
            );
            for (i, (&a, &n)) in grads[ti].iter().zip(&numeric).enumerate() {
                assert!(
                    (a - n).abs() <= 1e-7 + 1e-4 * a.abs().max(n.abs()),
                    "{}[{i}]: analytic {a} vs numeric {n}",
                    tensor.name
                );
            }
        }
    }

    #[test]
    fn reaction_task_produces_class_logits() {
        let cfg = ModelConfig {
            hidden_surface: 4,
            hidden_structure: 4,
            mlp_hidden: 5,
            ..ModelConfig::reaction(6)
        };
        let params = ModelParams::init(&cfg, 21);
        let mut g = toy_graph(9);
        g.ligand = None;
        let graph = Graph::new();
        let bm = BoundModel::bind(&graph, &params);
        let logits = predict(&bm, &g, 0.0, &mut rng()).unwrap();
        assert_eq!((logits.rows(), logits.cols()), (1, 6));
    }

    #[test]
    fn affinity_without_ligand_is_rejected() {
        let params = ModelParams::init(&tiny_config(), 1);
        let mut g = toy_graph(1);
        g.ligand = None;
        let graph = Graph::new();
        let bm = BoundModel::bind(&graph, &params);
        assert!(matches!(
            predict(&bm, &g, 0.0, &mut rng()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn dropout_training_passes_are_seed_reproducible() {
        let cfg = ModelConfig { dropout: 0.3, ..tiny_config() };
        let params = ModelParams::init(&cfg, 17);
        let g = toy_graph(4);
        let run = |seed: u64| {
            let graph = Graph::new();
            let bm = BoundModel::bind(&graph, &params);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            predict(&bm, &g, cfg.dropout, &mut rng).unwrap().scalar_value()
        };
        assert_eq!(run(40), run(40));
        assert_ne!(run(40), run(41), "different mask seeds should change the output");
    }
}

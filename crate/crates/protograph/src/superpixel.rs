//! Molecular superpixels: entropy-rate segmentation of the surface
//! graph, then a compact graph with one node per superpixel.
//!
//! The objective is H(M) + lambda * B(M) over selected edge sets M,
//! where H is the entropy rate of a random walk whose transition
//! probabilities put unselected mass on self-loops, and B balances
//! component sizes. Both are monotone submodular, so a lazy greedy
//! matches the naive full-rescan greedy exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::SurfaceGraph;

pub const SIMILARITY_FLOOR: f64 = 1e-6;
pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_K: usize = 20;
/// Four summary statistics for each of the four surface features.
pub const SUPERPIXEL_NODE_DIM: usize = 16;

/// Similarity between endpoint feature vectors. `Product` is the
/// default; `GaussianDiff` is an alternative for experiments and is
/// never selected implicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Similarity {
    /// Sum over features of |f_i * f_j|.
    Product,
    /// exp(-|f_i - f_j|^2 / (2 sigma^2)).
    GaussianDiff { sigma: f64 },
}

impl Default for Similarity {
    fn default() -> Self {
        Similarity::Product
    }
}

/// Both kinds add a small floor so every edge keeps positive weight
/// and the walk stays irreducible.
pub fn edge_similarity(a: &[f64], b: &[f64], kind: Similarity) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let core = match kind {
        Similarity::Product => a.iter().zip(b).map(|(x, y)| (x * y).abs()).sum(),
        Similarity::GaussianDiff { sigma } => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-d2 / (2.0 * sigma * sigma)).exp()
        }
    };
    Ok(core + SIMILARITY_FLOOR)
}

/// Surface graph with per-edge similarities and the walk's stationary
/// distribution. Degrees come from the full edge set and stay fixed
/// while the greedy selects edges.
#[derive(Debug, Clone)]
pub struct WeightedSurface {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub degrees: Vec<f64>,
    pub total: f64,
    pub mu: Vec<f64>,
}

impl WeightedSurface {
    pub fn from_edges(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut degrees = vec![0.0; n];
        for &(a, b, w) in &edges {
            assert!(a < n && b < n && a != b, "edge endpoints out of range");
            assert!(w >= 0.0, "similarities are non-negative");
            degrees[a] += w;
            degrees[b] += w;
        }
        let total: f64 = degrees.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        let mu = degrees.iter().map(|d| d / total).collect();
        Ok(WeightedSurface { n, edges, degrees, total, mu })
    }

    pub fn from_graph(sg: &SurfaceGraph, kind: Similarity) -> Result<Self> {
        let edges = sg
            .edges
            .iter()
            .map(|e| {
                edge_similarity(&sg.nodes[e.a].features, &sg.nodes[e.b].features, kind)
                    .map(|w| (e.a, e.b, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_edges(sg.nodes.len(), edges)
    }

    /// Entropy rate for a selected edge set, evaluated from scratch.
    /// Selected edges carry p = w/w_i, the rest stays on the self-loop.
    pub fn entropy_rate(&self, selected: &[usize]) -> f64 {
        let mut node_h = vec![0.0; self.n];
        let mut loops = vec![1.0; self.n];
        for &e in selected {
            let (a, b, w) = self.edges[e];
            for node in [a, b] {
                let q = w / self.degrees[node];
                node_h[node] += eta(q);
                loops[node] -= q;
            }
        }
        (0..self.n)
            .map(|i| self.mu[i] * (node_h[i] + eta(loops[i])))
            .sum()
    }

    /// Balancing term: entropy of the component-size distribution minus
    /// the component count.
    pub fn balancing(&self, selected: &[usize]) -> f64 {
        let mut uf = UnionFind::new(self.n);
        for &e in selected {
            let (a, b, _) = self.edges[e];
            uf.union(a, b);
        }
        let mut h = 0.0;
        let mut count = 0.0;
        for i in 0..self.n {
            if uf.find(i) == i {
                h += eta(uf.size(i) as f64 / self.n as f64);
                count += 1.0;
            }
        }
        h - count
    }

    pub fn objective(&self, selected: &[usize], lambda: f64) -> f64 {
        self.entropy_rate(selected) + lambda * self.balancing(selected)
    }
}

/// mu computed over the full edge set; errors when the graph carries
/// no weight at all.
pub fn stationary_distribution(ws: &WeightedSurface) -> Vec<f64> {
    ws.mu.clone()
}

fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }

    fn size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}

/// Incremental greedy state: per-node self-loop mass plus component
/// tracking. Gains computed here match objective differences evaluated
/// from scratch.
pub struct ErsState<'a> {
    ws: &'a WeightedSurface,
    lambda: f64,
    loops: Vec<f64>,
    uf: UnionFind,
    pub n_components: usize,
    pub selected: Vec<usize>,
    in_m: Vec<bool>,
}

impl<'a> ErsState<'a> {
    pub fn new(ws: &'a WeightedSurface, lambda: f64) -> Self {
        ErsState {
            ws,
            lambda,
            loops: vec![1.0; ws.n],
            uf: UnionFind::new(ws.n),
            n_components: ws.n,
            selected: Vec::new(),
            in_m: vec![false; ws.edges.len()],
        }
    }

    /// Marginal gain of adding `edge` to the current selection.
    pub fn gain(&mut self, edge: usize) -> f64 {
        debug_assert!(!self.in_m[edge], "gain of an already selected edge is undefined");
        let (a, b, w) = self.ws.edges[edge];
        let mut dh = 0.0;
        for node in [a, b] {
            let q = w / self.ws.degrees[node];
            let s = self.loops[node];
            dh += self.ws.mu[node] * (eta(s - q) + eta(q) - eta(s));
        }
        let (ra, rb) = (self.uf.find(a), self.uf.find(b));
        let db = if ra == rb {
            0.0
        } else {
            let n = self.ws.n as f64;
            // Smaller size first, so mirror-image merges tie bit-exactly.
            let (sa, sb) = (self.uf.size(ra).min(self.uf.size(rb)), self.uf.size(ra).max(self.uf.size(rb)));
            eta((sa + sb) as f64 / n) - eta(sa as f64 / n) - eta(sb as f64 / n) + 1.0
        };
        dh + self.lambda * db
    }

    pub fn is_selected(&self, edge: usize) -> bool {
        self.in_m[edge]
    }

    pub fn apply(&mut self, edge: usize) {
        debug_assert!(!self.in_m[edge]);
        let (a, b, w) = self.ws.edges[edge];
        self.loops[a] -= w / self.ws.degrees[a];
        self.loops[b] -= w / self.ws.degrees[b];
        if self.uf.union(a, b) {
            self.n_components -= 1;
        }
        self.in_m[edge] = true;
        self.selected.push(edge);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Superpixel id per vertex, relabeled by first appearance.
    pub labels: Vec<usize>,
    /// Indices into the weighted surface's edge list.
    pub selected: Vec<usize>,
    pub k: usize,
}

struct HeapEntry {
    gain: f64,
    edge: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Max gain first; ties go to the lowest edge index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then_with(|| other.edge.cmp(&self.edge))
    }
}

fn canonical_labels(ws: &WeightedSurface, selected: &[usize]) -> Vec<usize> {
    let mut uf = UnionFind::new(ws.n);
    for &e in selected {
        let (a, b, _) = ws.edges[e];
        uf.union(a, b);
    }
    let mut label_of_root = vec![usize::MAX; ws.n];
    let mut next = 0;
    (0..ws.n)
        .map(|v| {
            let r = uf.find(v);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect()
}

pub fn segment_ers_weighted(ws: &WeightedSurface, k: usize, lambda: f64) -> Result<Segmentation> {
    if k == 0 || k > ws.n || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "k must be in [1, {}] and lambda non-negative, got k={k} lambda={lambda}",
            ws.n
        )));
    }
    let mut components = UnionFind::new(ws.n);
    let mut full_components = ws.n;
    for &(a, b, _) in &ws.edges {
        if components.union(a, b) {
            full_components -= 1;
        }
    }
    if full_components > k {
        return Err(Error::DisconnectedInput { components: full_components, k });
    }

    let mut state = ErsState::new(ws, lambda);
    if state.n_components > k {
        let mut heap = BinaryHeap::with_capacity(ws.edges.len());
        for edge in 0..ws.edges.len() {
            heap.push(HeapEntry { gain: state.gain(edge), edge });
        }
        // Lazy greedy: stale entries are upper bounds (submodularity),
        // so a popped entry whose recomputed gain is unchanged is the
        // true argmax. Bit-equality keeps tie handling identical to a
        // full rescan.
        while state.n_components > k {
            let entry = heap.pop().expect("admissible edges remain while components exceed k");
            let fresh = state.gain(entry.edge);
            if fresh.to_bits() == entry.gain.to_bits() {
                state.apply(entry.edge);
            } else {
                heap.push(HeapEntry { gain: fresh, edge: entry.edge });
            }
        }
    }

    let labels = canonical_labels(ws, &state.selected);
    let distinct = labels.iter().max().map_or(0, |m| m + 1);
    assert_eq!(distinct, k, "segmentation must produce exactly k labels");
    Ok(Segmentation { labels, selected: state.selected, k })
}

pub fn segment_ers(sg: &SurfaceGraph, k: usize, lambda: f64) -> Result<Segmentation> {
    let ws = WeightedSurface::from_graph(sg, Similarity::default())?;
    segment_ers_weighted(&ws, k, lambda)
}

/// Exact 1-D Wasserstein-1 between empirical distributions, by
/// integrating the gap between the two quantile functions.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut t = 0.0;
    let mut acc = 0.0;
    while i < xs.len() && j < ys.len() {
        let ta = (i + 1) as f64 / na;
        let tb = (j + 1) as f64 / nb;
        let tn = ta.min(tb);
        acc += (tn - t) * (xs[i] - ys[j]).abs();
        t = tn;
        if ta <= tb {
            i += 1;
        }
        if tb <= ta {
            j += 1;
        }
    }
    Ok(acc)
}

/// Superpixel nodes hold (mean, population std, max, min) per surface
/// feature; edges connect superpixels joined by at least one surface
/// edge, weighted by the summed per-feature Wasserstein distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpixelGraph {
    pub labels: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn build_superpixel_graph(seg: &Segmentation, sg: &SurfaceGraph) -> SuperpixelGraph {
    let dim = sg.nodes.first().map_or(0, |n| n.features.len());
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); seg.k];
    for (v, &l) in seg.labels.iter().enumerate() {
        members[l].push(v);
    }

    // values[label][feature] = member feature values in vertex order.
    let values: Vec<Vec<Vec<f64>>> = members
        .iter()
        .map(|vs| {
            (0..dim)
                .map(|f| vs.iter().map(|&v| sg.nodes[v].features[f]).collect())
                .collect()
        })
        .collect();

    let nodes = values
        .iter()
        .map(|feats| {
            let mut summary = Vec::with_capacity(4 * dim);
            for vals in feats {
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                summary.extend([mean, var.sqrt(), max, min]);
            }
            summary
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = sg
        .edges
        .iter()
        .filter_map(|e| {
            let (la, lb) = (seg.labels[e.a], seg.labels[e.b]);
            (la != lb).then(|| (la.min(lb), la.max(lb)))
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();

    let edges = pairs
        .into_iter()
        .map(|(la, lb)| {
            let w = (0..dim)
                .map(|f| wasserstein_1d(&values[la][f], &values[lb][f]).expect("members non-empty"))
                .sum();
            (la, lb, w)
        })
        .collect();

    SuperpixelGraph { labels: seg.labels.clone(), nodes, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    /// Connected random graph: spanning chain plus extra random edges.
    fn random_surface(n: usize, extra: usize, seed: u64) -> WeightedSurface {
        let mut next = lcg(seed);
        let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i - 1, i, 0.0)).collect();
        while edges.len() < n - 1 + extra {
            let a = (next() * n as f64) as usize % n;
            let b = (next() * n as f64) as usize % n;
            if a == b {
                continue;
            }
            let (a, b) = (a.min(b), a.max(b));
            if !edges.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
                edges.push((a, b, 0.0));
            }
        }
        for e in &mut edges {
            e.2 = 0.05 + next();
        }
        WeightedSurface::from_edges(n, edges).unwrap()
    }

    #[test]
    fn zero_features_hit_the_floor() {
        let w = edge_similarity(&[0.0; 4], &[1.0; 4], Similarity::Product).unwrap();
        assert_eq!(w, SIMILARITY_FLOOR);
    }

    #[test]
    fn ones_give_four_plus_floor() {
        let w = edge_similarity(&[1.0; 4], &[1.0; 4], Similarity::Product).unwrap();
        assert_relative_eq!(w, 4.0 + SIMILARITY_FLOOR, epsilon = 1e-15);
    }

    #[test]
    fn product_similarity_matches_direct_sum() {
        let mut next = lcg(11);
        for _ in 0..50 {
            let a: Vec<f64> = (0..4).map(|_| next() * 2.0 - 1.0).collect();
            let b: Vec<f64> = (0..4).map(|_| next() * 2.0 - 1.0).collect();
            let direct: f64 = (0..4).map(|t| (a[t] * b[t]).abs()).sum();
            assert_relative_eq!(
                edge_similarity(&a, &b, Similarity::Product).unwrap(),
                direct + SIMILARITY_FLOOR,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn mismatched_dims_error() {
        assert!(matches!(
            edge_similarity(&[1.0], &[1.0, 2.0], Similarity::Product),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn gaussian_similarity_is_one_plus_floor_at_zero_distance() {
        let w = edge_similarity(&[0.3; 4], &[0.3; 4], Similarity::GaussianDiff { sigma: 1.0 }).unwrap();
        assert_relative_eq!(w, 1.0 + SIMILARITY_FLOOR, epsilon = 1e-15);
    }

    #[test]
    fn pair_graph_splits_mu_evenly() {
        let ws = WeightedSurface::from_edges(2, vec![(0, 1, 3.0)]).unwrap();
        assert_eq!(stationary_distribution(&ws), vec![0.5, 0.5]);
    }

    #[test]
    fn star_center_holds_half_the_mass() {
        let n = 7;
        let edges: Vec<_> = (1..=n).map(|i| (0, i, 1.0)).collect();
        let ws = WeightedSurface::from_edges(n + 1, edges).unwrap();
        assert_relative_eq!(ws.mu[0], 0.5, epsilon = 1e-12);
        for leaf in 1..=n {
            assert_relative_eq!(ws.mu[leaf], 0.5 / n as f64, epsilon = 1e-12);
        }
        assert_relative_eq!(ws.mu.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weightless_graph_is_rejected() {
        assert!(matches!(
            WeightedSurface::from_edges(3, vec![]),
            Err(Error::ZeroTotalWeight)
        ));
    }

    #[test]
    fn first_merge_balancing_gain_matches_formula() {
        let ws = random_surface(6, 3, 99);
        let mut state = ErsState::new(&ws, 1.0);
        let n = 6.0;
        let expected_db = eta(2.0 / n) - 2.0 * eta(1.0 / n) + 1.0;
        let dh = {
            let (a, b, w) = ws.edges[0];
            ws.mu[a] * (eta(1.0 - w / ws.degrees[a]) + eta(w / ws.degrees[a]))
                + ws.mu[b] * (eta(1.0 - w / ws.degrees[b]) + eta(w / ws.degrees[b]))
        };
        assert_relative_eq!(state.gain(0), dh + expected_db, epsilon = 1e-12);
    }

    #[test]
    fn incremental_gain_equals_objective_difference() {
        let ws = random_surface(10, 8, 5);
        let lambda = 0.7;
        let mut state = ErsState::new(&ws, lambda);
        let mut selected = Vec::new();
        for step in 0..ws.edges.len() {
            if state.in_m[step] {
                continue;
            }
            let inc = state.gain(step);
            let mut with = selected.clone();
            with.push(step);
            let direct = ws.objective(&with, lambda) - ws.objective(&selected, lambda);
            assert_relative_eq!(inc, direct, epsilon = 1e-10);
            if step % 2 == 0 {
                state.apply(step);
                selected.push(step);
            }
        }
    }

    #[test]
    fn gains_shrink_as_the_selection_grows() {
        // gain(M, e) >= gain(M', e) for M subset of M', the property the
        // lazy heap relies on.
        let mut next = lcg(777);
        let mut checked = 0;
        'outer: for seed in 0..40 {
            let ws = random_surface(8, 6, seed);
            for _ in 0..25 {
                let mut small = ErsState::new(&ws, DEFAULT_LAMBDA);
                let mut big = ErsState::new(&ws, DEFAULT_LAMBDA);
                let mut free = Vec::new();
                for e in 0..ws.edges.len() {
                    let coin = next();
                    if coin < 0.3 {
                        small.apply(e);
                        big.apply(e);
                    } else if coin < 0.6 {
                        big.apply(e);
                    } else {
                        free.push(e);
                    }
                }
                for &e in &free {
                    assert!(
                        small.gain(e) >= big.gain(e) - 1e-9,
                        "submodularity violated on edge {e}"
                    );
                    checked += 1;
                    if checked >= 1000 {
                        break 'outer;
                    }
                }
            }
        }
        assert!(checked >= 1000);
    }

    #[test]
    #[should_panic(expected = "already selected")]
    fn gain_of_selected_edge_is_a_precondition_violation() {
        let ws = random_surface(4, 1, 2);
        let mut state = ErsState::new(&ws, DEFAULT_LAMBDA);
        state.apply(0);
        let _ = state.gain(0);
    }

    #[test]
    fn k_equals_n_keeps_every_vertex_alone() {
        let ws = random_surface(9, 4, 3);
        let seg = segment_ers_weighted(&ws, 9, DEFAULT_LAMBDA).unwrap();
        assert!(seg.selected.is_empty());
        assert_eq!(seg.labels, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn path_of_four_with_uniform_features() {
        // All three 2-partitions of the path share the same entropy
        // rate, so the balancing term decides: the brute-force optimum
        // is the even split. The greedy, however, commits to the middle
        // edge first (it has twice the entropy gain of the end edges)
        // and ends at {A,B,C},{D}. Both facts are pinned here.
        let w = 1.0 + SIMILARITY_FLOOR;
        let ws =
            WeightedSurface::from_edges(4, vec![(0, 1, w), (1, 2, w), (2, 3, w)]).unwrap();

        let partitions: [(&[usize], [usize; 4]); 3] = [
            (&[1, 2], [0, 1, 1, 1]),
            (&[0, 2], [0, 0, 1, 1]),
            (&[0, 1], [0, 0, 0, 1]),
        ];
        let best = partitions
            .iter()
            .map(|(m, labels)| (ws.objective(m, DEFAULT_LAMBDA), labels))
            .max_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        assert_eq!(*best.1, [0, 0, 1, 1], "optimum is the balanced split");

        let seg = segment_ers_weighted(&ws, 2, DEFAULT_LAMBDA).unwrap();
        assert_eq!(seg.labels, vec![0, 0, 0, 1]);
    }

    #[test]
    fn more_components_than_k_is_an_error() {
        let ws = WeightedSurface::from_edges(5, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(matches!(
            segment_ers_weighted(&ws, 2, DEFAULT_LAMBDA),
            Err(Error::DisconnectedInput { components: 3, k: 2 })
        ));
    }

    #[test]
    fn disconnected_input_is_fine_when_k_allows_it() {
        let ws = WeightedSurface::from_edges(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let seg = segment_ers_weighted(&ws, 2, DEFAULT_LAMBDA).unwrap();
        assert_eq!(seg.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn objective_is_non_decreasing_along_the_greedy_trace() {
        for seed in 0..10 {
            let ws = random_surface(12, 10, seed);
            let seg = segment_ers_weighted(&ws, 3, DEFAULT_LAMBDA).unwrap();
            let mut prev = ws.objective(&[], DEFAULT_LAMBDA);
            for end in 1..=seg.selected.len() {
                let now = ws.objective(&seg.selected[..end], DEFAULT_LAMBDA);
                assert!(now >= prev - 1e-12);
                prev = now;
            }
        }
    }

    #[test]
    fn segmentation_is_deterministic_and_a_partition() {
        for seed in 0..10 {
            let ws = random_surface(15, 12, seed);
            let a = segment_ers_weighted(&ws, 4, DEFAULT_LAMBDA).unwrap();
            let b = segment_ers_weighted(&ws, 4, DEFAULT_LAMBDA).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.labels.len(), 15);
            let distinct = a.labels.iter().max().unwrap() + 1;
            assert_eq!(distinct, 4);
            // Connectivity: each label's vertices are joined by selected edges.
            let mut uf = UnionFind::new(15);
            for &e in &a.selected {
                let (x, y, _) = ws.edges[e];
                uf.union(x, y);
            }
            for v in 0..15 {
                for u in 0..15 {
                    assert_eq!(a.labels[u] == a.labels[v], uf.find(u) == uf.find(v));
                }
            }
        }
    }

    #[test]
    fn wasserstein_basics() {
        assert_eq!(wasserstein_1d(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(wasserstein_1d(&[0.0], &[1.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            wasserstein_1d(&[0.0, 2.0], &[1.0, 3.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(matches!(wasserstein_1d(&[], &[1.0]), Err(Error::EmptySample)));
    }

    /// Northwest-corner transport on the full cost matrix; optimal for
    /// 1-D absolute cost with sorted marginals.
    fn transport_oracle(a: &[f64], b: &[f64]) -> f64 {
        let mut xs = a.to_vec();
        let mut ys = b.to_vec();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let mut supply = vec![1.0 / xs.len() as f64; xs.len()];
        let mut demand = vec![1.0 / ys.len() as f64; ys.len()];
        let (mut i, mut j) = (0, 0);
        let mut cost = 0.0;
        while i < xs.len() && j < ys.len() {
            let m = supply[i].min(demand[j]);
            cost += m * (xs[i] - ys[j]).abs();
            supply[i] -= m;
            demand[j] -= m;
            if supply[i] <= 1e-15 {
                i += 1;
            }
            if j < ys.len() && demand[j] <= 1e-15 {
                j += 1;
            }
        }
        cost
    }

    #[test]
    fn wasserstein_matches_transport_oracle() {
        let mut next = lcg(42);
        for _ in 0..50 {
            let na = 1 + (next() * 7.0) as usize;
            let nb = 1 + (next() * 7.0) as usize;
            let a: Vec<f64> = (0..na).map(|_| next() * 10.0 - 5.0).collect();
            let b: Vec<f64> = (0..nb).map(|_| next() * 10.0 - 5.0).collect();
            assert_relative_eq!(
                wasserstein_1d(&a, &b).unwrap(),
                transport_oracle(&a, &b),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn wasserstein_is_symmetric_with_triangle_inequality() {
        let mut next = lcg(1234);
        for _ in 0..30 {
            let sample = |next: &mut dyn FnMut() -> f64| -> Vec<f64> {
                (0..3 + (next() * 4.0) as usize).map(|_| next() * 6.0).collect()
            };
            let a = sample(&mut next);
            let b = sample(&mut next);
            let c = sample(&mut next);
            let ab = wasserstein_1d(&a, &b).unwrap();
            let ba = wasserstein_1d(&b, &a).unwrap();
            let bc = wasserstein_1d(&b, &c).unwrap();
            let ac = wasserstein_1d(&a, &c).unwrap();
            assert_relative_eq!(ab, ba, epsilon = 1e-12);
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    fn toy_surface_graph(features: Vec<Vec<f64>>, edges: Vec<(usize, usize)>) -> SurfaceGraph {
        SurfaceGraph {
            nodes: features
                .into_iter()
                .map(|f| crate::surface::SurfaceNode { rid: 0, features: f })
                .collect(),
            edges: edges
                .into_iter()
                .map(|(a, b)| crate::surface::SurfaceEdge { a, b, features: vec![] })
                .collect(),
        }
    }

    #[test]
    fn single_superpixel_summarizes_globally_with_no_edges() {
        let sg = toy_surface_graph(
            vec![vec![1.0, 0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0, 0.0]],
            vec![(0, 1)],
        );
        let seg = Segmentation { labels: vec![0, 0], selected: vec![0], k: 1 };
        let g = build_superpixel_graph(&seg, &sg);
        assert!(g.edges.is_empty());
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.nodes[0].len(), 16);
        // Feature 0: mean 2, population std 1, max 3, min 1.
        assert_eq!(&g.nodes[0][..4], &[2.0, 1.0, 3.0, 1.0]);
    }

    #[test]
    fn identical_member_multisets_give_zero_edge_weight() {
        let sg = toy_surface_graph(
            vec![
                vec![1.0, 2.0, 3.0, 4.0],
                vec![5.0, 6.0, 7.0, 8.0],
                vec![1.0, 2.0, 3.0, 4.0],
                vec![5.0, 6.0, 7.0, 8.0],
            ],
            vec![(0, 1), (1, 2), (2, 3)],
        );
        let seg = Segmentation { labels: vec![0, 0, 1, 1], selected: vec![0, 2], k: 2 };
        let g = build_superpixel_graph(&seg, &sg);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0], (0, 1, 0.0));
    }

    #[test]
    fn interleaved_members_give_unit_distance() {
        let sg = toy_surface_graph(
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![2.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![3.0, 0.0, 0.0, 0.0],
            ],
            vec![(0, 1), (1, 2), (2, 3)],
        );
        let seg = Segmentation { labels: vec![0, 0, 1, 1], selected: vec![0, 2], k: 2 };
        let g = build_superpixel_graph(&seg, &sg);
        assert_relative_eq!(g.edges[0].2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn superpixel_edges_require_a_crossing_surface_edge() {
        // 4 vertices, two disjoint edges: labels split the other way, so
        // every surface edge crosses and both pairs appear; remove the
        // crossing and the edge disappears.
        let sg = toy_surface_graph(
            vec![vec![1.0; 4]; 4],
            vec![(0, 1), (2, 3)],
        );
        let seg = Segmentation { labels: vec![0, 0, 1, 1], selected: vec![], k: 2 };
        let g = build_superpixel_graph(&seg, &sg);
        assert!(g.edges.is_empty());
    }
}

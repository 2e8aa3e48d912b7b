//! Dataset splitting. Random splits shuffle and cut; identity splits
//! first group sequences whose pairwise identity reaches a threshold
//! (single linkage, so chains merge) and assign whole clusters, which
//! keeps near-duplicates out of opposite splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

const MATCH: i64 = 1;
const MISMATCH: i64 = 0;
const GAP: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub score: i64,
    pub matches: usize,
    pub length: usize,
}

/// Global alignment with match 1, mismatch 0, gap -1. Traceback ties
/// prefer diagonal, then a gap in the second sequence, so equal-score
/// alignments resolve the same way everywhere.
pub fn needleman_wunsch(a: &str, b: &str) -> Alignment {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut h = vec![vec![0i64; m + 1]; n + 1];
    for i in 0..=n {
        h[i][0] = -(i as i64);
    }
    for j in 0..=m {
        h[0][j] = -(j as i64);
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = if a[i - 1] == b[j - 1] { MATCH } else { MISMATCH };
            h[i][j] = (h[i - 1][j - 1] + sub).max(h[i - 1][j] + GAP).max(h[i][j - 1] + GAP);
        }
    }

    let (mut i, mut j) = (n, m);
    let mut matches = 0;
    let mut length = 0;
    while i > 0 || j > 0 {
        length += 1;
        if i > 0 && j > 0 {
            let sub = if a[i - 1] == b[j - 1] { MATCH } else { MISMATCH };
            if h[i][j] == h[i - 1][j - 1] + sub {
                if sub == MATCH {
                    matches += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && h[i][j] == h[i - 1][j] + GAP {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    Alignment { score: h[n][m], matches, length }
}

/// Matches over alignment length, in [0, 1]. Two empty sequences count
/// as identical.
pub fn sequence_identity(a: &str, b: &str) -> f64 {
    let aln = needleman_wunsch(a, b);
    if aln.length == 0 {
        return 1.0;
    }
    aln.matches as f64 / aln.length as f64
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// One cluster label per sequence, numbered by first appearance.
pub fn cluster_by_identity<S: AsRef<str>>(seqs: &[S], threshold: f64) -> Vec<usize> {
    let mut uf = UnionFind::new(seqs.len());
    for i in 0..seqs.len() {
        for j in i + 1..seqs.len() {
            if sequence_identity(seqs[i].as_ref(), seqs[j].as_ref()) >= threshold {
                uf.union(i, j);
            }
        }
    }
    let mut label_of_root = std::collections::HashMap::new();
    (0..seqs.len())
        .map(|i| {
            let r = uf.find(i);
            let next = label_of_root.len();
            *label_of_root.entry(r).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { train: 0.8, val: 0.1, test: 0.1 }
    }
}

impl SplitFractions {
    fn check(&self) -> Result<()> {
        let sum = self.train + self.val + self.test;
        if self.train <= 0.0 || self.val <= 0.0 || self.test <= 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions must be positive and sum to 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    fn checked(mut self) -> Result<Self> {
        if self.train.is_empty() {
            return Err(Error::EmptySplit("train"));
        }
        if self.val.is_empty() {
            return Err(Error::EmptySplit("validation"));
        }
        if self.test.is_empty() {
            return Err(Error::EmptySplit("test"));
        }
        self.train.sort_unstable();
        self.val.sort_unstable();
        self.test.sort_unstable();
        Ok(self)
    }
}

/// Seeded shuffle, then cut at round(n * val) and round(n * test) from
/// the back so 100 items under the default fractions go 80/10/10.
pub fn split_random(n: usize, fractions: SplitFractions, seed: u64) -> Result<Split> {
    fractions.check()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let n_val = (n as f64 * fractions.val).round() as usize;
    let n_test = (n as f64 * fractions.test).round() as usize;
    if n_val + n_test >= n {
        return Err(Error::EmptySplit("train"));
    }
    let n_train = n - n_val - n_test;
    Split {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    }
    .checked()
}

/// Assigns whole clusters, visiting them in seeded shuffle order and
/// always filling the split with the largest remaining deficit, ties
/// toward train then val.
pub fn split_by_cluster(clusters: &[usize], fractions: SplitFractions, seed: u64) -> Result<Split> {
    fractions.check()?;
    let n_clusters = clusters.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for (i, &c) in clusters.iter().enumerate() {
        members[c].push(i);
    }
    let mut order: Vec<usize> = (0..n_clusters).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));

    let n = clusters.len() as f64;
    let targets = [fractions.train * n, fractions.val * n, fractions.test * n];
    let mut sizes = [0usize; 3];
    let mut buckets: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for c in order {
        let mut pick = 0;
        for k in 1..3 {
            if targets[k] - sizes[k] as f64 > targets[pick] - sizes[pick] as f64 {
                pick = k;
            }
        }
        sizes[pick] += members[c].len();
        buckets[pick].extend_from_slice(&members[c]);
    }
    let [train, val, test] = buckets;
    Split { train, val, test }.checked()
}

pub fn identity_split<S: AsRef<str>>(
    seqs: &[S],
    threshold: f64,
    fractions: SplitFractions,
    seed: u64,
) -> Result<Split> {
    split_by_cluster(&cluster_by_identity(seqs, threshold), fractions, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_hand_values() {
        let aln = needleman_wunsch("ACGT", "ACGT");
        assert_eq!(aln, Alignment { score: 4, matches: 4, length: 4 });

        // ACGT vs AGT aligns as A C G T over A - G T.
        let aln = needleman_wunsch("ACGT", "AGT");
        assert_eq!(aln, Alignment { score: 2, matches: 3, length: 4 });
        assert!((sequence_identity("ACGT", "AGT") - 0.75).abs() < 1e-12);

        let aln = needleman_wunsch("AAA", "TTT");
        assert_eq!(aln, Alignment { score: 0, matches: 0, length: 3 });
    }

    #[test]
    fn identity_is_symmetric_and_bounded() {
        let seqs = ["ACDEFG", "ACDEFG", "MKLV", "", "ACD"];
        for a in &seqs {
            for b in &seqs {
                let ab = sequence_identity(a, b);
                let ba = sequence_identity(b, a);
                assert!((ab - ba).abs() < 1e-15, "{a} vs {b}");
                assert!((0.0..=1.0).contains(&ab));
            }
        }
        assert_eq!(sequence_identity("ACDEFG", "ACDEFG"), 1.0);
        assert_eq!(sequence_identity("", ""), 1.0);
        assert_eq!(sequence_identity("AAA", ""), 0.0);
    }

    #[test]
    fn clusters_form_at_the_threshold() {
        // AAAA-AAAT and CCCC-CCCG are 0.75 identical inside each pair,
        // everything across pairs is far apart.
        let seqs = ["AAAA", "AAAT", "CCCC", "CCCG", "TTTT"];
        let clusters = cluster_by_identity(&seqs, 0.7);
        assert_eq!(clusters, vec![0, 0, 1, 1, 2]);
        let clusters = cluster_by_identity(&seqs, 0.8);
        assert_eq!(clusters, vec![0, 1, 2, 3, 4], "0.75 links break above 0.75");
    }

    #[test]
    fn single_linkage_merges_through_chains() {
        // AAAAAAAA to AAAATTTT is 0.5; AAAATTTT to TTTTTTTT is 0.5;
        // the endpoints are 0.0 apart yet share a cluster.
        let seqs = ["AAAAAAAA", "AAAATTTT", "TTTTTTTT"];
        assert!(sequence_identity(seqs[0], seqs[2]) < 0.5);
        let clusters = cluster_by_identity(&seqs, 0.5);
        assert_eq!(clusters, vec![0, 0, 0]);
    }

    #[test]
    fn random_split_is_an_exact_seeded_partition() {
        let s = split_random(100, SplitFractions::default(), 7).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());

        assert_eq!(s, split_random(100, SplitFractions::default(), 7).unwrap());
        assert_ne!(s, split_random(100, SplitFractions::default(), 8).unwrap());
    }

    #[test]
    fn undersized_inputs_surface_as_empty_split_errors() {
        assert!(matches!(
            split_random(3, SplitFractions::default(), 0),
            Err(Error::EmptySplit(_))
        ));
        let one_cluster = vec![0usize; 40];
        assert!(matches!(
            split_by_cluster(&one_cluster, SplitFractions::default(), 0),
            Err(Error::EmptySplit(_))
        ));
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let f = SplitFractions { train: 0.9, val: 0.3, test: 0.1 };
        assert!(matches!(split_random(100, f, 0), Err(Error::InvalidArgument(_))));
        let f = SplitFractions { train: 1.0, val: 0.0, test: 0.0 };
        assert!(matches!(split_random(100, f, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cluster_split_keeps_clusters_whole_and_balanced() {
        // 20 clusters of 5: perfect 80/10/10 is reachable and greedy
        // deficit-filling reaches it.
        let clusters: Vec<usize> = (0..100).map(|i| i / 5).collect();
        let s = split_by_cluster(&clusters, SplitFractions::default(), 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
        for bucket in [&s.train, &s.val, &s.test] {
            for &i in bucket {
                let mates: Vec<usize> =
                    (0..100).filter(|&j| clusters[j] == clusters[i]).collect();
                assert!(mates.iter().all(|m| bucket.contains(m)), "cluster torn apart");
            }
        }
    }

    fn random_seqs(n: usize, len: usize, seed: u64) -> Vec<String> {
        let alphabet: Vec<char> = "ACDEFGHIKLMNPQRSTVWY".chars().collect();
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        (0..n)
            .map(|_| {
                (0..len)
                    .map(|_| {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        alphabet[(s >> 33) as usize % alphabet.len()]
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identity_split_never_leaks_similar_pairs_across_splits() {
        let threshold = 0.5;
        let mut seqs = random_seqs(30, 12, 42);
        // Plant near-duplicates so the invariant is actually exercised.
        for i in 0..6 {
            let mut dup = seqs[i].clone();
            dup.pop();
            dup.push('A');
            seqs.push(dup);
        }
        let split = identity_split(&seqs, threshold, SplitFractions::default(), 11).unwrap();
        let of = |i: usize| -> usize {
            if split.train.contains(&i) {
                0
            } else if split.val.contains(&i) {
                1
            } else {
                2
            }
        };
        for i in 0..seqs.len() {
            for j in i + 1..seqs.len() {
                if of(i) != of(j) {
                    let id = sequence_identity(&seqs[i], &seqs[j]);
                    assert!(
                        id < threshold,
                        "{i} and {j} sit in different splits at identity {id}"
                    );
                }
            }
        }
    }

    #[test]
    fn identity_split_is_seed_deterministic() {
        let seqs = random_seqs(40, 10, 5);
        let a = identity_split(&seqs, 0.5, SplitFractions::default(), 2).unwrap();
        let b = identity_split(&seqs, 0.5, SplitFractions::default(), 2).unwrap();
        assert_eq!(a, b);
    }
}

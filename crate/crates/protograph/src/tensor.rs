//! Reverse-mode autodiff on a shared tape of row-major f64 matrices.
//!
//! Tensors are cheap handles into a graph-owned tape. Shape errors and
//! non-finite values are programming errors here, so ops panic rather
//! than return. Every value is checked at node creation, which pins a
//! NaN to the op that produced it instead of the loss that met it.

use std::cell::RefCell;
use std::rc::Rc;

use rand::Rng;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddRow(usize, usize),
    MatMul(usize, usize),
    ConcatCols(usize, usize),
    GatherRows(usize, Vec<usize>),
    SegmentSum(usize, Vec<usize>),
    RowScale(usize, Vec<f64>),
    SumAll(usize),
    MeanAll(usize),
    Relu(usize),
    LeakyRelu(usize, f64),
    Dropout(usize, Vec<f64>),
    LogSumExp(usize),
    Pick(usize, Vec<usize>),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
}

#[derive(Debug, Default)]
struct Tape {
    nodes: Vec<Node>,
}

/// Owns the tape. Clones share it, so tensors from one graph compose.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    tape: Rc<RefCell<Tape>>,
}

#[derive(Debug, Clone)]
pub struct Tensor {
    tape: Rc<RefCell<Tape>>,
    idx: usize,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn leaf(&self, rows: usize, cols: usize, values: Vec<f64>) -> Tensor {
        assert_eq!(values.len(), rows * cols, "leaf values must fill rows x cols");
        self.push(rows, cols, values, Op::Leaf)
    }

    pub fn scalar(&self, value: f64) -> Tensor {
        self.leaf(1, 1, vec![value])
    }

    pub fn zeros(&self, rows: usize, cols: usize) -> Tensor {
        self.leaf(rows, cols, vec![0.0; rows * cols])
    }

    fn push(&self, rows: usize, cols: usize, values: Vec<f64>, op: Op) -> Tensor {
        for v in &values {
            assert!(v.is_finite(), "non-finite value produced by {op:?}");
        }
        let mut tape = self.tape.borrow_mut();
        let grad = vec![0.0; values.len()];
        tape.nodes.push(Node { rows, cols, values, grad, op });
        Tensor { tape: self.tape.clone(), idx: tape.nodes.len() - 1 }
    }

    pub fn len(&self) -> usize {
        self.tape.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Tensor {
    pub fn rows(&self) -> usize {
        self.tape.borrow().nodes[self.idx].rows
    }

    pub fn cols(&self) -> usize {
        self.tape.borrow().nodes[self.idx].cols
    }

    pub fn values(&self) -> Vec<f64> {
        self.tape.borrow().nodes[self.idx].values.clone()
    }

    pub fn grad(&self) -> Vec<f64> {
        self.tape.borrow().nodes[self.idx].grad.clone()
    }

    pub fn scalar_value(&self) -> f64 {
        let tape = self.tape.borrow();
        let n = &tape.nodes[self.idx];
        assert_eq!((n.rows, n.cols), (1, 1), "scalar_value needs a 1x1 tensor");
        n.values[0]
    }

    fn graph(&self) -> Graph {
        Graph { tape: self.tape.clone() }
    }

    fn with<R>(&self, other: &Tensor, f: impl FnOnce(&Node, &Node) -> R) -> R {
        assert!(Rc::ptr_eq(&self.tape, &other.tape), "tensors live on different tapes");
        let tape = self.tape.borrow();
        f(&tape.nodes[self.idx], &tape.nodes[other.idx])
    }

    fn view<R>(&self, f: impl FnOnce(&Node) -> R) -> R {
        let tape = self.tape.borrow();
        f(&tape.nodes[self.idx])
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        let (rows, cols, values) = self.with(other, |a, b| {
            assert_eq!((a.rows, a.cols), (b.rows, b.cols), "add shapes differ");
            let v = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
            (a.rows, a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::Add(self.idx, other.idx))
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        let (rows, cols, values) = self.with(other, |a, b| {
            assert_eq!((a.rows, a.cols), (b.rows, b.cols), "sub shapes differ");
            let v = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            (a.rows, a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::Sub(self.idx, other.idx))
    }

    pub fn mul(&self, other: &Tensor) -> Tensor {
        let (rows, cols, values) = self.with(other, |a, b| {
            assert_eq!((a.rows, a.cols), (b.rows, b.cols), "mul shapes differ");
            let v = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
            (a.rows, a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::Mul(self.idx, other.idx))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let (rows, cols, values) =
            self.view(|a| (a.rows, a.cols, a.values.iter().map(|x| x * c).collect()));
        self.graph().push(rows, cols, values, Op::Scale(self.idx, c))
    }

    /// Broadcast a 1 x cols row onto every row.
    pub fn add_row(&self, row: &Tensor) -> Tensor {
        let (rows, cols, values) = self.with(row, |a, b| {
            assert_eq!((b.rows, b.cols), (1, a.cols), "add_row needs a 1 x cols row");
            let mut v = a.values.clone();
            for r in 0..a.rows {
                for c in 0..a.cols {
                    v[r * a.cols + c] += b.values[c];
                }
            }
            (a.rows, a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::AddRow(self.idx, row.idx))
    }

    pub fn matmul(&self, other: &Tensor) -> Tensor {
        let (rows, cols, values) = self.with(other, |a, b| {
            assert_eq!(a.cols, b.rows, "matmul inner dimensions differ");
            let mut v = vec![0.0; a.rows * b.cols];
            for i in 0..a.rows {
                for j in 0..a.cols {
                    let aij = a.values[i * a.cols + j];
                    if aij == 0.0 {
                        continue;
                    }
                    for k in 0..b.cols {
                        v[i * b.cols + k] += aij * b.values[j * b.cols + k];
                    }
                }
            }
            (a.rows, b.cols, v)
        });
        self.graph().push(rows, cols, values, Op::MatMul(self.idx, other.idx))
    }

    pub fn concat_cols(&self, other: &Tensor) -> Tensor {
        let (rows, cols, values) = self.with(other, |a, b| {
            assert_eq!(a.rows, b.rows, "concat_cols row counts differ");
            let cols = a.cols + b.cols;
            let mut v = Vec::with_capacity(a.rows * cols);
            for r in 0..a.rows {
                v.extend_from_slice(&a.values[r * a.cols..(r + 1) * a.cols]);
                v.extend_from_slice(&b.values[r * b.cols..(r + 1) * b.cols]);
            }
            (a.rows, cols, v)
        });
        self.graph().push(rows, cols, values, Op::ConcatCols(self.idx, other.idx))
    }

    pub fn gather_rows(&self, indices: &[usize]) -> Tensor {
        let (rows, cols, values) = self.view(|a| {
            let mut v = Vec::with_capacity(indices.len() * a.cols);
            for &i in indices {
                assert!(i < a.rows, "gather_rows index {i} out of {}", a.rows);
                v.extend_from_slice(&a.values[i * a.cols..(i + 1) * a.cols]);
            }
            (indices.len(), a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::GatherRows(self.idx, indices.to_vec()))
    }

    /// Sum rows into `n_segments` buckets; rows with no contributors
    /// come out zero, which is what an empty neighbor sum needs.
    pub fn segment_sum(&self, segments: &[usize], n_segments: usize) -> Tensor {
        let (rows, cols, values) = self.view(|a| {
            assert_eq!(segments.len(), a.rows, "one segment id per row");
            let mut v = vec![0.0; n_segments * a.cols];
            for (r, &s) in segments.iter().enumerate() {
                assert!(s < n_segments, "segment id {s} out of {n_segments}");
                for c in 0..a.cols {
                    v[s * a.cols + c] += a.values[r * a.cols + c];
                }
            }
            (n_segments, a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::SegmentSum(self.idx, segments.to_vec()))
    }

    /// Multiply row i by the constant weights[i]; the weights are not
    /// differentiated through.
    pub fn row_scale(&self, weights: &[f64]) -> Tensor {
        let (rows, cols, values) = self.view(|a| {
            assert_eq!(weights.len(), a.rows, "one weight per row");
            let mut v = a.values.clone();
            for r in 0..a.rows {
                for c in 0..a.cols {
                    v[r * a.cols + c] *= weights[r];
                }
            }
            (a.rows, a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::RowScale(self.idx, weights.to_vec()))
    }

    pub fn sum_all(&self) -> Tensor {
        let total = self.view(|a| a.values.iter().sum());
        self.graph().push(1, 1, vec![total], Op::SumAll(self.idx))
    }

    pub fn mean_all(&self) -> Tensor {
        let mean = self.view(|a| {
            assert!(!a.values.is_empty(), "mean of an empty tensor");
            a.values.iter().sum::<f64>() / a.values.len() as f64
        });
        self.graph().push(1, 1, vec![mean], Op::MeanAll(self.idx))
    }

    pub fn relu(&self) -> Tensor {
        let (rows, cols, values) =
            self.view(|a| (a.rows, a.cols, a.values.iter().map(|x| x.max(0.0)).collect()));
        self.graph().push(rows, cols, values, Op::Relu(self.idx))
    }

    pub fn leaky_relu(&self, alpha: f64) -> Tensor {
        let (rows, cols, values) = self.view(|a| {
            let v = a.values.iter().map(|&x| if x > 0.0 { x } else { alpha * x }).collect();
            (a.rows, a.cols, v)
        });
        self.graph().push(rows, cols, values, Op::LeakyRelu(self.idx, alpha))
    }

    /// Inverted dropout: kept entries are scaled by 1/keep so the
    /// expectation is unchanged. drop_prob <= 0 is the identity.
    pub fn dropout(&self, drop_prob: f64, rng: &mut impl Rng) -> Tensor {
        assert!(drop_prob < 1.0, "dropping everything leaves no signal");
        if drop_prob <= 0.0 {
            return self.clone();
        }
        let keep = 1.0 - drop_prob;
        let (rows, cols, mask): (usize, usize, Vec<f64>) = self.view(|a| {
            let m = (0..a.values.len())
                .map(|_| if rng.gen::<f64>() < drop_prob { 0.0 } else { 1.0 / keep })
                .collect();
            (a.rows, a.cols, m)
        });
        let values = self.view(|a| {
            a.values.iter().zip(&mask).map(|(x, m)| x * m).collect()
        });
        self.graph().push(rows, cols, values, Op::Dropout(self.idx, mask))
    }

    /// Row-wise log(sum(exp(x))), max-shifted: n x c -> n x 1.
    pub fn log_sum_exp(&self) -> Tensor {
        let (rows, values) = self.view(|a| {
            assert!(a.cols > 0, "log_sum_exp of zero columns");
            let v = (0..a.rows)
                .map(|r| {
                    let row = &a.values[r * a.cols..(r + 1) * a.cols];
                    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
                })
                .collect();
            (a.rows, v)
        });
        self.graph().push(rows, 1, values, Op::LogSumExp(self.idx))
    }

    /// One element per row by column index: n x c -> n x 1.
    pub fn pick(&self, columns: &[usize]) -> Tensor {
        let (rows, values) = self.view(|a| {
            assert_eq!(columns.len(), a.rows, "one column per row");
            let v = columns
                .iter()
                .enumerate()
                .map(|(r, &c)| {
                    assert!(c < a.cols, "pick column {c} out of {}", a.cols);
                    a.values[r * a.cols + c]
                })
                .collect();
            (a.rows, v)
        });
        self.graph().push(rows, 1, values, Op::Pick(self.idx, columns.to_vec()))
    }

    /// Reverse pass from this scalar; gradients accumulate into every
    /// node's slot. One backward per tape.
    pub fn backward(&self) {
        let mut tape = self.tape.borrow_mut();
        {
            let n = &mut tape.nodes[self.idx];
            assert_eq!((n.rows, n.cols), (1, 1), "backward starts from a scalar");
            n.grad[0] = 1.0;
        }
        for i in (0..=self.idx).rev() {
            let g = tape.nodes[i].grad.clone();
            if g.iter().all(|&x| x == 0.0) {
                continue;
            }
            let op = tape.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    add_into(&mut tape, a, &g);
                    add_into(&mut tape, b, &g);
                }
                Op::Sub(a, b) => {
                    add_into(&mut tape, a, &g);
                    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                    add_into(&mut tape, b, &neg);
                }
                Op::Mul(a, b) => {
                    let ga: Vec<f64> =
                        g.iter().zip(&tape.nodes[b].values).map(|(x, y)| x * y).collect();
                    let gb: Vec<f64> =
                        g.iter().zip(&tape.nodes[a].values).map(|(x, y)| x * y).collect();
                    add_into(&mut tape, a, &ga);
                    add_into(&mut tape, b, &gb);
                }
                Op::Scale(a, c) => {
                    let ga: Vec<f64> = g.iter().map(|x| x * c).collect();
                    add_into(&mut tape, a, &ga);
                }
                Op::AddRow(a, row) => {
                    add_into(&mut tape, a, &g);
                    let cols = tape.nodes[row].cols;
                    let mut gr = vec![0.0; cols];
                    for (j, x) in g.iter().enumerate() {
                        gr[j % cols] += x;
                    }
                    add_into(&mut tape, row, &gr);
                }
                Op::MatMul(a, b) => {
                    let (ar, ac) = (tape.nodes[a].rows, tape.nodes[a].cols);
                    let bc = tape.nodes[b].cols;
                    let mut ga = vec![0.0; ar * ac];
                    let mut gb = vec![0.0; ac * bc];
                    {
                        let av = &tape.nodes[a].values;
                        let bv = &tape.nodes[b].values;
                        for i2 in 0..ar {
                            for k in 0..bc {
                                let gik = g[i2 * bc + k];
                                if gik == 0.0 {
                                    continue;
                                }
                                for j in 0..ac {
                                    ga[i2 * ac + j] += gik * bv[j * bc + k];
                                    gb[j * bc + k] += av[i2 * ac + j] * gik;
                                }
                            }
                        }
                    }
                    add_into(&mut tape, a, &ga);
                    add_into(&mut tape, b, &gb);
                }
                Op::ConcatCols(a, b) => {
                    let (rows, ac) = (tape.nodes[a].rows, tape.nodes[a].cols);
                    let bc = tape.nodes[b].cols;
                    let cols = ac + bc;
                    let mut ga = vec![0.0; rows * ac];
                    let mut gb = vec![0.0; rows * bc];
                    for r in 0..rows {
                        ga[r * ac..(r + 1) * ac].copy_from_slice(&g[r * cols..r * cols + ac]);
                        gb[r * bc..(r + 1) * bc]
                            .copy_from_slice(&g[r * cols + ac..(r + 1) * cols]);
                    }
                    add_into(&mut tape, a, &ga);
                    add_into(&mut tape, b, &gb);
                }
                Op::GatherRows(a, idx) => {
                    let (rows, cols) = (tape.nodes[a].rows, tape.nodes[a].cols);
                    let mut ga = vec![0.0; rows * cols];
                    for (r, &i2) in idx.iter().enumerate() {
                        for c in 0..cols {
                            ga[i2 * cols + c] += g[r * cols + c];
                        }
                    }
                    add_into(&mut tape, a, &ga);
                }
                Op::SegmentSum(a, segs) => {
                    let (rows, cols) = (tape.nodes[a].rows, tape.nodes[a].cols);
                    let mut ga = vec![0.0; rows * cols];
                    for (r, &s) in segs.iter().enumerate() {
                        ga[r * cols..(r + 1) * cols]
                            .copy_from_slice(&g[s * cols..(s + 1) * cols]);
                    }
                    add_into(&mut tape, a, &ga);
                }
                Op::RowScale(a, w) => {
                    let cols = tape.nodes[a].cols;
                    let mut ga = g.clone();
                    for r in 0..w.len() {
                        for c in 0..cols {
                            ga[r * cols + c] *= w[r];
                        }
                    }
                    add_into(&mut tape, a, &ga);
                }
                Op::SumAll(a) => {
                    let ga = vec![g[0]; tape.nodes[a].values.len()];
                    add_into(&mut tape, a, &ga);
                }
                Op::MeanAll(a) => {
                    let len = tape.nodes[a].values.len();
                    let ga = vec![g[0] / len as f64; len];
                    add_into(&mut tape, a, &ga);
                }
                Op::Relu(a) => {
                    let ga: Vec<f64> = tape.nodes[a]
                        .values
                        .iter()
                        .zip(&g)
                        .map(|(&x, &gi)| if x > 0.0 { gi } else { 0.0 })
                        .collect();
                    add_into(&mut tape, a, &ga);
                }
                Op::LeakyRelu(a, alpha) => {
                    let ga: Vec<f64> = tape.nodes[a]
                        .values
                        .iter()
                        .zip(&g)
                        .map(|(&x, &gi)| if x > 0.0 { gi } else { alpha * gi })
                        .collect();
                    add_into(&mut tape, a, &ga);
                }
                Op::Dropout(a, mask) => {
                    let ga: Vec<f64> = g.iter().zip(&mask).map(|(x, m)| x * m).collect();
                    add_into(&mut tape, a, &ga);
                }
                Op::LogSumExp(a) => {
                    let (rows, cols) = (tape.nodes[a].rows, tape.nodes[a].cols);
                    let out = tape.nodes[i].values.clone();
                    let mut ga = vec![0.0; rows * cols];
                    for r in 0..rows {
                        for c in 0..cols {
                            let x = tape.nodes[a].values[r * cols + c];
                            ga[r * cols + c] = g[r] * (x - out[r]).exp();
                        }
                    }
                    add_into(&mut tape, a, &ga);
                }
                Op::Pick(a, cols_idx) => {
                    let cols = tape.nodes[a].cols;
                    let mut ga = vec![0.0; tape.nodes[a].values.len()];
                    for (r, &c) in cols_idx.iter().enumerate() {
                        ga[r * cols + c] += g[r];
                    }
                    add_into(&mut tape, a, &ga);
                }
            }
        }
    }
}

fn add_into(tape: &mut Tape, idx: usize, contrib: &[f64]) {
    let grad = &mut tape.nodes[idx].grad;
    debug_assert_eq!(grad.len(), contrib.len());
    for (g, c) in grad.iter_mut().zip(contrib) {
        assert!(c.is_finite(), "non-finite gradient contribution");
        *g += c;
    }
}

/// Central-difference gradient of a scalar function, the oracle the
/// analytic gradients are tested against.
pub fn numeric_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let hi = f(&probe);
        probe[i] = x[i] - h;
        let lo = f(&probe);
        probe[i] = x[i];
        g.push((hi - lo) / (2.0 * h));
    }
    g
}

//! Training loop and evaluation. Sequential per-sample updates keep
//! runs reproducible; evaluation parallelizes over samples because it
//! only reads the parameters.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::model::{
    cross_entropy_loss, mse_loss, predict, BoundModel, ModelConfig, ModelParams, Task,
};
use crate::multiscale::{Mode, MultiScaleGraph};
use crate::optim::{clip_global_norm, Adam, AdamConfig};
use crate::split::{identity_split, Split, SplitFractions};
use crate::tensor::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub task: Task,
    pub mode: Mode,
    pub hidden_surface: usize,
    pub hidden_structure: usize,
    pub hidden_ligand: usize,
    pub steps_surface: usize,
    pub steps_structure: usize,
    pub steps_ligand: usize,
    pub mlp_hidden: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub plateau_threshold: f64,
    pub patience: usize,
    pub clip_norm: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub k_superpixels: usize,
    pub lambda_balance: f64,
    pub cutoff: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: Task::Affinity,
            mode: Mode::Full,
            hidden_surface: 150,
            hidden_structure: 200,
            hidden_ligand: 300,
            steps_surface: 6,
            steps_structure: 5,
            steps_ligand: 4,
            mlp_hidden: 512,
            lr: 0.001,
            lr_decay: 0.9,
            plateau_threshold: 0.01,
            patience: 5,
            clip_norm: 10.0,
            dropout: 0.0,
            epochs: 100,
            batch_size: 1,
            seed: 0,
            k_superpixels: 20,
            lambda_balance: 0.5,
            cutoff: 10.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden_surface", self.hidden_surface),
            ("hidden_structure", self.hidden_structure),
            ("hidden_ligand", self.hidden_ligand),
            ("steps_surface", self.steps_surface),
            ("steps_structure", self.steps_structure),
            ("steps_ligand", self.steps_ligand),
            ("mlp_hidden", self.mlp_hidden),
            ("patience", self.patience),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("k_superpixels", self.k_superpixels),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidArgument("lr must be positive".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidArgument("lr_decay must be in (0, 1]".into()));
        }
        if !(self.plateau_threshold >= 0.0) {
            return Err(Error::InvalidArgument("plateau_threshold must not be negative".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::InvalidArgument("clip_norm must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument("dropout must be in [0, 1)".into()));
        }
        if !(self.lambda_balance >= 0.0) {
            return Err(Error::InvalidArgument("lambda_balance must not be negative".into()));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::InvalidArgument("cutoff must be positive".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, n_classes: usize) -> ModelConfig {
        ModelConfig {
            task: self.task,
            mode: self.mode,
            hidden_surface: self.hidden_surface,
            hidden_structure: self.hidden_structure,
            hidden_ligand: self.hidden_ligand,
            steps_surface: self.steps_surface,
            steps_structure: self.steps_structure,
            steps_ligand: self.steps_ligand,
            mlp_hidden: self.mlp_hidden,
            n_classes,
            dropout: self.dropout,
            activation: match self.task {
                Task::Affinity => crate::model::Activation::Relu,
                Task::Reaction => crate::model::Activation::LeakyRelu(0.01),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Affinity(f64),
    Class(usize),
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub graph: MultiScaleGraph,
    pub target: Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// Validation RMSE (affinity) or accuracy (reaction).
    pub val_metric: f64,
}

/// Lower-is-better score watcher: the rate drops by `decay` whenever
/// `patience` consecutive observations fail to beat the best score by
/// more than `threshold`.
pub struct PlateauSchedule {
    lr: f64,
    decay: f64,
    threshold: f64,
    patience: usize,
    best: f64,
    stall: usize,
}

impl PlateauSchedule {
    pub fn new(lr: f64, decay: f64, threshold: f64, patience: usize) -> Self {
        PlateauSchedule { lr, decay, threshold, patience, best: f64::INFINITY, stall: 0 }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn observe(&mut self, score: f64) {
        if self.best - score > self.threshold {
            self.best = score;
            self.stall = 0;
        } else {
            self.stall += 1;
            if self.stall >= self.patience {
                self.lr *= self.decay;
                self.stall = 0;
            }
        }
    }
}

fn stream_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed
        ^ a.wrapping_mul(0x9e3779b97f4a7c15)
        ^ b.wrapping_mul(0xd1b54a32d192ed03);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn target_value(task: Task, s: &Sample) -> Result<f64> {
    match (task, s.target) {
        (Task::Affinity, Target::Affinity(y)) => Ok(y),
        (Task::Reaction, Target::Class(c)) => Ok(c as f64),
        _ => Err(Error::InvalidArgument(format!(
            "sample {} carries a {:?} target but the task is {:?}",
            s.id, s.target, task
        ))),
    }
}

fn derive_n_classes(task: Task, sets: &[&[Sample]]) -> Result<usize> {
    if task == Task::Affinity {
        return Ok(1);
    }
    let mut max = 0;
    for set in sets {
        for s in *set {
            match s.target {
                Target::Class(c) => max = max.max(c),
                Target::Affinity(_) => {
                    return Err(Error::InvalidArgument(format!(
                        "sample {} carries an affinity target but the task is reaction",
                        s.id
                    )))
                }
            }
        }
    }
    Ok(max + 1)
}

fn forward_loss(
    params: &ModelParams,
    sample: &Sample,
    dropout: f64,
    rng: &mut ChaCha20Rng,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let graph = Graph::new();
    let bm = BoundModel::bind(&graph, params);
    let out = predict(&bm, &sample.graph, dropout, rng)?;
    let loss = match sample.target {
        Target::Affinity(y) => mse_loss(&out, &graph, &[y]),
        Target::Class(c) => cross_entropy_loss(&out, &[c]),
    };
    let value = loss.scalar_value();
    loss.backward();
    Ok((value, bm.gradients()))
}

/// Prediction rows with dropout off, parallel over samples.
pub fn predict_all(params: &ModelParams, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .map(|s| {
            let graph = Graph::new();
            let bm = BoundModel::bind(&graph, params);
            let mut rng = ChaCha20Rng::seed_from_u64(0);
            Ok(predict(&bm, &s.graph, 0.0, &mut rng)?.values())
        })
        .collect()
}

fn validation_metric(params: &ModelParams, samples: &[Sample]) -> Result<f64> {
    let outputs = predict_all(params, samples)?;
    match params.config.task {
        Task::Affinity => {
            let preds: Vec<f64> = outputs.iter().map(|o| o[0]).collect();
            let targets: Vec<f64> = samples
                .iter()
                .map(|s| target_value(Task::Affinity, s))
                .collect::<Result<_>>()?;
            metrics::rmse(&preds, &targets)
        }
        Task::Reaction => {
            let labels: Vec<usize> = samples
                .iter()
                .map(|s| target_value(Task::Reaction, s).map(|v| v as usize))
                .collect::<Result<_>>()?;
            metrics::accuracy(&outputs, &labels)
        }
    }
}

pub fn train(
    cfg: &TrainConfig,
    train_set: &[Sample],
    val_set: &[Sample],
) -> Result<(ModelParams, Vec<EpochRecord>)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    for s in train_set.iter().chain(val_set) {
        target_value(cfg.task, s)?;
    }
    let n_classes = derive_n_classes(cfg.task, &[train_set, val_set])?;
    let model_cfg = cfg.model_config(n_classes);
    let mut params = ModelParams::init(&model_cfg, cfg.seed);
    let mut opt = Adam::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() }, &params);
    let mut schedule =
        PlateauSchedule::new(cfg.lr, cfg.lr_decay, cfg.plateau_threshold, cfg.patience);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr = schedule.lr();
        opt.config.lr = lr;

        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut ChaCha20Rng::seed_from_u64(stream_seed(cfg.seed, epoch as u64, 0)));

        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Option<Vec<Vec<f64>>> = None;
            for &si in batch {
                let mut rng = ChaCha20Rng::seed_from_u64(stream_seed(
                    cfg.seed,
                    epoch as u64,
                    1 + si as u64,
                ));
                let (loss, grads) = forward_loss(&params, &train_set[si], cfg.dropout, &mut rng)?;
                loss_sum += loss;
                match &mut acc {
                    None => acc = Some(grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            for (x, y) in a.iter_mut().zip(g) {
                                *x += y;
                            }
                        }
                    }
                }
            }
            let mut grads = acc.expect("chunks are never empty");
            if batch.len() > 1 {
                let inv = 1.0 / batch.len() as f64;
                grads.iter_mut().flatten().for_each(|g| *g *= inv);
            }
            clip_global_norm(&mut grads, cfg.clip_norm);
            opt.step(&mut params, &grads);
        }

        let val = validation_metric(&params, val_set)?;
        // Lower is better for the plateau watcher; accuracy flips sign.
        let score = match cfg.task {
            Task::Affinity => val,
            Task::Reaction => -val,
        };
        schedule.observe(score);
        history.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / train_set.len() as f64,
            val_metric: val,
        });
    }
    Ok((params, history))
}

/// CSV with one row per epoch. Floats print in shortest round-trip
/// form, so equal histories give byte-identical files.
pub fn history_to_csv(task: Task, history: &[EpochRecord]) -> String {
    let metric = match task {
        Task::Affinity => "val_rmse",
        Task::Reaction => "val_accuracy",
    };
    let mut out = format!("epoch,lr,train_loss,{metric}\n");
    for r in history {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.lr, r.train_loss, r.val_metric));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum EvalReport {
    /// Correlations are absent when either side has zero variance.
    Affinity { rmse: f64, pearson: Option<f64>, spearman: Option<f64> },
    Reaction { accuracy: f64 },
}

pub fn evaluate_regression(preds: &[f64], targets: &[f64]) -> Result<(f64, f64, f64)> {
    Ok((
        metrics::rmse(preds, targets)?,
        metrics::pearson(preds, targets)?,
        metrics::spearman(preds, targets)?,
    ))
}

pub fn evaluate_classification(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    metrics::accuracy(logits, labels)
}

/// Full held-out report for a trained model.
pub fn evaluate(params: &ModelParams, samples: &[Sample]) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let outputs = predict_all(params, samples)?;
    match params.config.task {
        Task::Affinity => {
            let preds: Vec<f64> = outputs.iter().map(|o| o[0]).collect();
            let targets: Vec<f64> = samples
                .iter()
                .map(|s| target_value(Task::Affinity, s))
                .collect::<Result<_>>()?;
            let rmse = metrics::rmse(&preds, &targets)?;
            let definable = |r: Result<f64>| match r {
                Ok(v) => Ok(Some(v)),
                Err(Error::ZeroVariance) => Ok(None),
                Err(e) => Err(e),
            };
            Ok(EvalReport::Affinity {
                rmse,
                pearson: definable(metrics::pearson(&preds, &targets))?,
                spearman: definable(metrics::spearman(&preds, &targets))?,
            })
        }
        Task::Reaction => {
            let labels: Vec<usize> = samples
                .iter()
                .map(|s| target_value(Task::Reaction, s).map(|v| v as usize))
                .collect::<Result<_>>()?;
            Ok(EvalReport::Reaction { accuracy: metrics::accuracy(&outputs, &labels)? })
        }
    }
}

/// Identity threshold given in percent, as sequence identity is
/// conventionally quoted.
pub fn split_by_identity<S: AsRef<str>>(
    seqs: &[S],
    threshold_percent: f64,
    fractions: SplitFractions,
    seed: u64,
) -> Result<Split> {
    if !(threshold_percent > 0.0 && threshold_percent <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "identity threshold must be in (0, 100], got {threshold_percent}"
        )));
    }
    identity_split(seqs, threshold_percent / 100.0, fractions, seed)
}

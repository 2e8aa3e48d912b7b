//! Shared plumbing: config resolution, sample loading, and the small
//! CSV shapes the commands exchange.

use std::path::Path;

use rayon::prelude::*;

use protograph::io::dataset::{DatasetIndex, SplitTag};
use protograph::io::graph_json::read_graph;
use protograph::io::parse_mol;
use protograph::ligand::featurize_ligand;
use protograph::model::Task;
use protograph::multiscale::{Mode, MultiscaleOptions};
use protograph::train::{Sample, Target, TrainConfig};

use crate::commands::{Cli, CliError, Command};

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn parse_task(s: &str) -> CliResult<Task> {
    match s {
        "affinity" => Ok(Task::Affinity),
        "reaction" => Ok(Task::Reaction),
        other => Err(CliError::Usage(format!(
            "unknown task {other:?}, expected affinity or reaction"
        ))),
    }
}

pub fn parse_mode(s: &str) -> CliResult<Mode> {
    match s {
        "full" => Ok(Mode::Full),
        "superpixel" => Ok(Mode::Superpixel),
        "summary" => Ok(Mode::Summary),
        other => Err(CliError::Usage(format!(
            "unknown mode {other:?}, expected full, superpixel, or summary"
        ))),
    }
}

pub fn parse_split(s: &str) -> CliResult<SplitTag> {
    s.parse().map_err(CliError::Usage)
}

fn set_key(cfg: &mut TrainConfig, key: &str, value: &str, origin: &str) -> CliResult<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str, origin: &str) -> CliResult<T> {
        value.parse().map_err(|_| {
            CliError::Usage(format!("{origin}: bad value {value:?} for {key}"))
        })
    }
    match key {
        "task" => cfg.task = parse_task(value)?,
        "mode" => cfg.mode = parse_mode(value)?,
        "hidden_surface" => cfg.hidden_surface = num(key, value, origin)?,
        "hidden_structure" => cfg.hidden_structure = num(key, value, origin)?,
        "hidden_ligand" => cfg.hidden_ligand = num(key, value, origin)?,
        "steps_surface" => cfg.steps_surface = num(key, value, origin)?,
        "steps_structure" => cfg.steps_structure = num(key, value, origin)?,
        "steps_ligand" => cfg.steps_ligand = num(key, value, origin)?,
        "mlp_hidden" => cfg.mlp_hidden = num(key, value, origin)?,
        "lr" => cfg.lr = num(key, value, origin)?,
        "lr_decay" => cfg.lr_decay = num(key, value, origin)?,
        "plateau_threshold" => cfg.plateau_threshold = num(key, value, origin)?,
        "patience" => cfg.patience = num(key, value, origin)?,
        "clip_norm" => cfg.clip_norm = num(key, value, origin)?,
        "dropout" => cfg.dropout = num(key, value, origin)?,
        "epochs" => cfg.epochs = num(key, value, origin)?,
        "batch_size" => cfg.batch_size = num(key, value, origin)?,
        "seed" => cfg.seed = num(key, value, origin)?,
        "k_superpixels" => cfg.k_superpixels = num(key, value, origin)?,
        "lambda_balance" => cfg.lambda_balance = num(key, value, origin)?,
        "cutoff" => cfg.cutoff = num(key, value, origin)?,
        other => {
            return Err(CliError::Usage(format!("{origin}: unknown config key {other:?}")))
        }
    }
    Ok(())
}

/// Defaults, then the config file, then flags, then --seed.
pub fn resolve_config(cli: &Cli) -> CliResult<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &cli.config {
        let origin = path.display().to_string();
        for (lineno, raw) in read_file(path)?.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{origin}:{}: expected key=value", lineno + 1))
            })?;
            set_key(&mut cfg, key.trim(), value.trim(), &origin)?;
        }
    }
    if let Command::Train(args) = &cli.command {
        if let Some(v) = &args.task {
            cfg.task = parse_task(v)?;
        }
        if let Some(v) = &args.mode {
            cfg.mode = parse_mode(v)?;
        }
        macro_rules! flag {
            ($($field:ident),*) => {
                $(if let Some(v) = args.$field { cfg.$field = v; })*
            };
        }
        flag!(
            hidden_surface, hidden_structure, hidden_ligand, steps_surface,
            steps_structure, steps_ligand, mlp_hidden, lr, lr_decay,
            plateau_threshold, patience, clip_norm, dropout, epochs,
            batch_size, k_superpixels, lambda_balance, cutoff
        );
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub struct LoadedSamples {
    rows: Vec<(SplitTag, Sample)>,
}

impl LoadedSamples {
    pub fn of_split(&self, tag: SplitTag) -> Vec<Sample> {
        self.rows.iter().filter(|(t, _)| *t == tag).map(|(_, s)| s.clone()).collect()
    }

    pub fn all(&self) -> Vec<Sample> {
        self.rows.iter().map(|(_, s)| s.clone()).collect()
    }
}

/// Reads {graphs_dir}/{id}.json for every index row, assembles the
/// requested multi-scale mode, and attaches ligand and target.
pub fn load_samples(
    index: &DatasetIndex,
    graphs_dir: &Path,
    task: Task,
    opts: &MultiscaleOptions,
) -> CliResult<LoadedSamples> {
    let outcomes: Vec<CliResult<(SplitTag, Sample)>> = index
        .records
        .par_iter()
        .map(|rec| {
            let one = || -> CliResult<(SplitTag, Sample)> {
                let path = graphs_dir.join(format!("{}.json", rec.id));
                let bundle = read_graph(&read_file(&path)?)?;
                let (mut graph, _) = bundle.to_multiscale(opts)?;

                let target = match task {
                    Task::Affinity => {
                        let mol_path = rec
                            .mol
                            .as_ref()
                            .ok_or_else(|| CliError::Data("no mol path in the index".into()))?;
                        let raw = parse_mol(&read_file(mol_path)?)?;
                        let (lig, _) = featurize_ligand(&raw);
                        graph.ligand = Some(lig);
                        Target::Affinity(rec.target.ok_or_else(|| {
                            CliError::Data("no target in the index".into())
                        })?)
                    }
                    Task::Reaction => {
                        let t = rec.target.ok_or_else(|| {
                            CliError::Data("no target in the index".into())
                        })?;
                        if t.fract() != 0.0 || t < 0.0 {
                            return Err(CliError::Data(format!(
                                "class target {t} is not a non-negative integer"
                            )));
                        }
                        Target::Class(t as usize)
                    }
                };
                Ok((rec.split, Sample { id: rec.id.clone(), graph, target }))
            };
            // Every per-complex failure names its row.
            one().map_err(|e| CliError::Data(format!("{}: {}", rec.id, e.message())))
        })
        .collect();

    let mut rows = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        rows.push(outcome?);
    }
    Ok(LoadedSamples { rows })
}

/// Two-column CSV with a header: id in the first column, a number in
/// the second. Returns rows in file order.
pub fn read_prediction_csv(path: &Path) -> CliResult<Vec<(String, f64)>> {
    let text = read_file(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let (id, value) = line.split_once(',').ok_or_else(|| {
            CliError::Data(format!("{}:{}: expected id,value", path.display(), lineno + 1))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            CliError::Data(format!(
                "{}:{}: bad number {value:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        rows.push((id.trim().to_string(), value));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

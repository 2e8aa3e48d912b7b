//! Subcommand definitions and bodies. Anything parallel collects its
//! results first and prints in input order, so output bytes depend
//! only on inputs and seed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use protograph::io::graph_json::{read_graph, write_graph, GraphBundle};
use protograph::io::{load_dataset_index, parse_mesh, parse_pdb};
use protograph::io::sidecar::{
    read_index_sidecar, read_scalar_sidecar, read_ss_sidecar, sidecar_path,
};
use protograph::model::{load_checkpoint, save_checkpoint, Task};
use protograph::multiscale::{build_multiscale, Mode, MultiscaleOptions};
use protograph::structure::{build_structure_graph, StructureConfig};
use protograph::superpixel::{build_superpixel_graph, segment_ers};
use protograph::surface::{build_surface_graph, SurfaceConfig};
use protograph::train::{history_to_csv, train, EvalReport, TrainConfig};

use crate::pipeline::{
    self, load_samples, parse_task, read_file, read_prediction_csv, write_file, CliResult,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<protograph::Error> for CliError {
    fn from(e: protograph::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "protograph", version, about = "Multi-scale protein graph pipeline")]
pub struct Cli {
    /// Training seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Flat key=value config file mirroring the train options;
    /// precedence is defaults, then file, then flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build one graph file per dataset row from its PDB and mesh inputs.
    Preprocess(PreprocessArgs),
    /// Add an entropy-rate superpixel segmentation to graph files.
    Segment(SegmentArgs),
    /// Train a model and write a checkpoint plus per-epoch history CSV.
    Train(TrainArgs),
    /// Score graphs with a checkpoint, emitting a predictions CSV.
    Predict(PredictArgs),
    /// Compare a predictions CSV against targets.
    Evaluate(EvaluateArgs),
    /// Summarize a checkpoint or graph file.
    Inspect(InspectArgs),
}

#[derive(Args)]
pub struct PreprocessArgs {
    /// Dataset index CSV (id,pdb,mesh,mol,target,split).
    #[arg(long)]
    pub index: PathBuf,
    /// Output directory for graph JSON files and the report.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Residue contact cutoff in angstroms.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Solvent probe radius in angstroms.
    #[arg(long)]
    pub probe: Option<f64>,
    /// Sphere sample count for accessible-area estimation.
    #[arg(long)]
    pub sphere_points: Option<usize>,
}

#[derive(Args)]
pub struct SegmentArgs {
    /// Superpixel count.
    #[arg(long)]
    pub k: Option<usize>,
    /// Balancing weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Where updated graph files go; default rewrites each in place.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Graph JSON files to segment.
    #[arg(required = true)]
    pub graphs: Vec<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset index CSV with train/val split tags.
    #[arg(long)]
    pub index: PathBuf,
    /// Directory holding preprocessed graph files named {id}.json.
    #[arg(long)]
    pub graphs_dir: PathBuf,
    /// Output directory for model.json and history.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// affinity or reaction.
    #[arg(long)]
    pub task: Option<String>,
    /// Surface layer granularity: full, superpixel, or summary.
    #[arg(long)]
    pub mode: Option<String>,
    /// Cross edges to every member residue instead of the majority one.
    #[arg(long)]
    pub fan_out: bool,
    #[arg(long)]
    pub hidden_surface: Option<usize>,
    #[arg(long)]
    pub hidden_structure: Option<usize>,
    #[arg(long)]
    pub hidden_ligand: Option<usize>,
    #[arg(long)]
    pub steps_surface: Option<usize>,
    #[arg(long)]
    pub steps_structure: Option<usize>,
    #[arg(long)]
    pub steps_ligand: Option<usize>,
    #[arg(long)]
    pub mlp_hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub plateau_threshold: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub k_superpixels: Option<usize>,
    #[arg(long)]
    pub lambda_balance: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<f64>,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Trained model checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset index CSV naming the complexes to score.
    #[arg(long)]
    pub index: PathBuf,
    /// Directory holding preprocessed graph files named {id}.json.
    #[arg(long)]
    pub graphs_dir: PathBuf,
    /// Restrict to one split tag: train, val, test, or none.
    #[arg(long)]
    pub split: Option<String>,
    /// Cross edges to every member residue instead of the majority one.
    #[arg(long)]
    pub fan_out: bool,
    /// Predictions CSV path; default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Predictions CSV (id,value with a header row).
    #[arg(long)]
    pub pred: PathBuf,
    /// Targets CSV in the same two-column shape.
    #[arg(long)]
    pub target: PathBuf,
    /// affinity or reaction.
    #[arg(long)]
    pub task: String,
    /// Report JSON path; default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct InspectArgs {
    /// Checkpoint to summarize.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Graph file to summarize.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = pipeline::resolve_config(&cli)?;
    match &cli.command {
        Command::Preprocess(args) => preprocess(args, &cfg),
        Command::Segment(args) => segment(args, &cfg),
        Command::Train(args) => run_train(args, &cfg),
        Command::Predict(args) => predict(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Inspect(args) => inspect(args),
    }
}

fn preprocess(args: &PreprocessArgs, cfg: &TrainConfig) -> CliResult<()> {
    let index = load_dataset_index(&args.index)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out_dir.display())))?;

    let mut structure_cfg = StructureConfig {
        cutoff: args.cutoff.unwrap_or(cfg.cutoff),
        ..StructureConfig::default()
    };
    if let Some(p) = args.probe {
        structure_cfg.probe = p;
    }
    if let Some(n) = args.sphere_points {
        structure_cfg.sphere_points = n;
    }

    let outcomes: Vec<Result<(String, usize, usize), (String, String)>> = index
        .records
        .par_iter()
        .map(|rec| {
            build_one(rec, &args.out_dir, &structure_cfg)
                .map_err(|e| (rec.id.clone(), e.message()))
        })
        .collect();

    let mut written = Vec::new();
    let mut rejected: Vec<(String, String)> = index
        .rejections
        .iter()
        .map(|r| (r.id.clone(), format!("line {}: {}", r.line, r.reason)))
        .collect();
    for outcome in outcomes {
        match outcome {
            Ok(row) => written.push(row),
            Err(row) => rejected.push(row),
        }
    }
    written.sort();
    rejected.sort();

    let report = serde_json::json!({
        "written": written
            .iter()
            .map(|(id, residues, vertices)| serde_json::json!({
                "id": id, "residues": residues, "vertices": vertices,
            }))
            .collect::<Vec<_>>(),
        "rejected": rejected
            .iter()
            .map(|(id, reason)| serde_json::json!({ "id": id, "reason": reason }))
            .collect::<Vec<_>>(),
    });
    write_file(&args.out_dir.join("preprocess_report.json"), &format!("{report}\n"))?;

    println!("preprocessed {} complexes, rejected {}", written.len(), rejected.len());
    for (id, reason) in &rejected {
        println!("rejected {id}: {reason}");
    }
    Ok(())
}

impl CliError {
    pub(crate) fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m.clone(),
        }
    }
}

fn build_one(
    rec: &protograph::io::DatasetRecord,
    out_dir: &Path,
    structure_cfg: &StructureConfig,
) -> CliResult<(String, usize, usize)> {
    let pdb_text = read_file(&rec.pdb)?;
    let protein = parse_pdb(&pdb_text)?;
    let mesh_path = rec
        .mesh
        .as_ref()
        .ok_or_else(|| CliError::Data("no mesh path in the index".into()))?;
    let mut mesh = parse_mesh(&read_file(mesh_path)?)?;
    if let Some(at) = sidecar_path(mesh_path, "atoms") {
        let mut map = vec![usize::MAX; mesh.vertices.len()];
        for (v, a) in read_index_sidecar(&read_file(&at)?)? {
            if v >= map.len() {
                return Err(CliError::Data(format!("atoms sidecar vertex {v} out of range")));
            }
            map[v] = a;
        }
        if map.contains(&usize::MAX) {
            return Err(CliError::Data("atoms sidecar must cover every vertex".into()));
        }
        mesh.vertex_atoms = Some(map);
    }

    let mut structure_cfg = structure_cfg.clone();
    if let Some(ss) = sidecar_path(&rec.pdb, "ss") {
        structure_cfg.ss_overrides = read_ss_sidecar(&read_file(&ss)?)?;
    }
    let mut surface_cfg = SurfaceConfig::default();
    if let Some(esp) = sidecar_path(mesh_path, "esp") {
        surface_cfg.electrostatics = Some(read_scalar_sidecar(&read_file(&esp)?)?);
    }

    let (structure, _) = build_structure_graph(&protein, &structure_cfg)?;
    let (surface, _) = build_surface_graph(&mesh, &protein, &surface_cfg)?;
    let (graph, _) =
        build_multiscale(&surface, None, &structure, None, &MultiscaleOptions::default())?;

    let bundle = GraphBundle {
        protein_id: rec.id.clone(),
        cross_edges: graph.cross_edges,
        structure,
        surface,
        superpixels: None,
    };
    let n_res = bundle.structure.nodes.len();
    let n_vert = bundle.surface.nodes.len();
    write_file(&out_dir.join(format!("{}.json", rec.id)), &write_graph(&bundle)?)?;
    Ok((rec.id.clone(), n_res, n_vert))
}

fn segment(args: &SegmentArgs, cfg: &TrainConfig) -> CliResult<()> {
    let k = args.k.unwrap_or(cfg.k_superpixels);
    let lambda = args.lambda.unwrap_or(cfg.lambda_balance);
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }

    let lines: Vec<CliResult<String>> = args
        .graphs
        .par_iter()
        .map(|path| {
            let mut bundle = read_graph(&read_file(path)?)?;
            let seg = segment_ers(&bundle.surface, k, lambda)?;
            let sp = build_superpixel_graph(&seg, &bundle.surface);
            let n_labels = sp.labels.len();
            let mut labels_tsv = String::new();
            for (v, l) in sp.labels.iter().enumerate() {
                labels_tsv.push_str(&format!("{v}\t{l}\n"));
            }
            bundle.superpixels = Some(sp);

            let out_path = match &args.out_dir {
                Some(dir) => dir.join(path.file_name().expect("graph paths name files")),
                None => path.clone(),
            };
            write_file(&out_path, &write_graph(&bundle)?)?;
            write_file(&out_path.with_extension("labels.tsv"), &labels_tsv)?;
            Ok(format!(
                "{}: {k} superpixels over {n_labels} vertices",
                bundle.protein_id
            ))
        })
        .collect();

    for line in lines {
        println!("{}", line?);
    }
    Ok(())
}

fn run_train(args: &TrainArgs, cfg: &TrainConfig) -> CliResult<()> {
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = MultiscaleOptions { mode: cfg.mode, fan_out: args.fan_out };
    let index = load_dataset_index(&args.index)?;
    let samples = load_samples(&index, &args.graphs_dir, cfg.task, &opts)?;
    let train_set: Vec<_> = samples.of_split(protograph::io::dataset::SplitTag::Train);
    let val_set: Vec<_> = samples.of_split(protograph::io::dataset::SplitTag::Val);

    let (params, history) = train(cfg, &train_set, &val_set)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out_dir.display())))?;
    let ckpt = args.out_dir.join("model.json");
    save_checkpoint(&ckpt, &params)?;
    let history_path = args.out_dir.join("history.csv");
    write_file(&history_path, &history_to_csv(cfg.task, &history))?;

    let last = history.last().expect("epochs is validated positive");
    let metric = match cfg.task {
        Task::Affinity => "val_rmse",
        Task::Reaction => "val_accuracy",
    };
    println!(
        "trained {} epochs on {} samples ({} validation), final {metric} {}",
        history.len(),
        train_set.len(),
        val_set.len(),
        last.val_metric
    );
    println!("checkpoint {}", ckpt.display());
    println!("history {}", history_path.display());
    Ok(())
}

fn predict(args: &PredictArgs) -> CliResult<()> {
    let params = load_checkpoint(&args.checkpoint)?;
    let opts = MultiscaleOptions { mode: params.config.mode, fan_out: args.fan_out };
    let index = load_dataset_index(&args.index)?;
    let samples = load_samples(&index, &args.graphs_dir, params.config.task, &opts)?;
    let chosen = match args.split.as_deref() {
        None => samples.all(),
        Some(tag) => samples.of_split(pipeline::parse_split(tag)?),
    };
    if chosen.is_empty() {
        return Err(CliError::Data("no samples matched the requested split".into()));
    }

    let outputs = protograph::train::predict_all(&params, &chosen)?;
    let mut csv = String::from("id,prediction\n");
    for (s, out) in chosen.iter().zip(&outputs) {
        match params.config.task {
            Task::Affinity => csv.push_str(&format!("{},{}\n", s.id, out[0])),
            Task::Reaction => {
                csv.push_str(&format!("{},{}\n", s.id, protograph::metrics::argmax(out)))
            }
        }
    }
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let task = parse_task(&args.task)?;
    let preds = read_prediction_csv(&args.pred)?;
    let targets = read_prediction_csv(&args.target)?;
    let target_of: std::collections::HashMap<&str, f64> =
        targets.iter().map(|(id, v)| (id.as_str(), *v)).collect();
    if preds.len() != targets.len() {
        return Err(CliError::Data(format!(
            "{} predictions vs {} targets",
            preds.len(),
            targets.len()
        )));
    }

    let mut p = Vec::with_capacity(preds.len());
    let mut t = Vec::with_capacity(preds.len());
    for (id, v) in &preds {
        let target = target_of.get(id.as_str()).ok_or_else(|| {
            CliError::Data(format!("prediction id {id} is missing from the target file"))
        })?;
        p.push(*v);
        t.push(*target);
    }

    let report = match task {
        Task::Affinity => {
            let rmse = protograph::metrics::rmse(&p, &t)?;
            let definable = |r: protograph::Result<f64>| match r {
                Ok(v) => Ok(Some(v)),
                Err(protograph::Error::ZeroVariance) => Ok(None),
                Err(e) => Err(CliError::from(e)),
            };
            EvalReport::Affinity {
                rmse,
                pearson: definable(protograph::metrics::pearson(&p, &t))?,
                spearman: definable(protograph::metrics::spearman(&p, &t))?,
            }
        }
        Task::Reaction => {
            let classes = |vals: &[f64], file: &Path| -> CliResult<Vec<usize>> {
                vals.iter()
                    .map(|&v| {
                        if v.fract() == 0.0 && v >= 0.0 {
                            Ok(v as usize)
                        } else {
                            Err(CliError::Data(format!(
                                "{}: class value {v} is not a non-negative integer",
                                file.display()
                            )))
                        }
                    })
                    .collect()
            };
            let p = classes(&p, &args.pred)?;
            let t = classes(&t, &args.target)?;
            let hits = p.iter().zip(&t).filter(|(a, b)| a == b).count();
            EvalReport::Reaction { accuracy: hits as f64 / p.len().max(1) as f64 }
        }
    };

    let line = format!("{}\n", serde_json::to_string(&report).expect("reports serialize"));
    match &args.out {
        Some(path) => write_file(path, &line)?,
        None => print!("{line}"),
    }
    Ok(())
}

fn inspect(args: &InspectArgs) -> CliResult<()> {
    if args.checkpoint.is_none() && args.graph.is_none() {
        return Err(CliError::Usage(
            "inspect needs --checkpoint and/or --graph".into(),
        ));
    }
    if let Some(path) = &args.checkpoint {
        let params = load_checkpoint(path)?;
        println!("checkpoint: {}", path.display());
        println!("parameters: {}", params.count_parameters());
        println!(
            "task: {}",
            match params.config.task {
                Task::Affinity => "affinity",
                Task::Reaction => "reaction",
            }
        );
        println!(
            "mode: {}",
            match params.config.mode {
                Mode::Full => "full",
                Mode::Superpixel => "superpixel",
                Mode::Summary => "summary",
            }
        );
    }
    if let Some(path) = &args.graph {
        let bundle = read_graph(&read_file(path)?)?;
        println!("graph: {}", path.display());
        println!("protein: {}", bundle.protein_id);
        println!("residues: {}", bundle.structure.nodes.len());
        println!("structure edges: {}", bundle.structure.edges.len());
        println!("surface vertices: {}", bundle.surface.nodes.len());
        println!("surface edges: {}", bundle.surface.edges.len());
        println!("cross edges: {}", bundle.cross_edges.len());
        match &bundle.superpixels {
            Some(sp) => {
                let k = sp.nodes.len();
                println!("superpixels: {k}");
                println!("superpixel edges: {}", sp.edges.len());
            }
            None => println!("superpixels: none"),
        }
    }
    Ok(())
}

//! `lexnet` — multiplex lexical network analysis pipeline.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{
    parse_bins, parse_boundaries, parse_k_range, parse_layer_file, AccuracyVariantOpt,
    IngestModeOpt, NullModelOpt, RunConfig,
};
use pipeline::StageError;

#[derive(Parser)]
#[command(name = "lexnet", version, about = "Multiplex lexical network analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs, bin features, and build the normative rank.
    Ingest(CommonArgs),
    /// Per-word conformity scores and per-bin score distributions.
    Conformity(CommonArgs),
    /// Label-shuffle and rewiring ensemble baselines.
    Nullmodel(CommonArgs),
    /// K-Means on conformity vectors, K-Modes on features, k-core, kernels.
    Cluster(CommonArgs),
    /// Core quality metrics, degree curves, bigram POS profiles.
    Quality(CommonArgs),
    /// Batch acquisition walks, one trace file per run.
    Walk(CommonArgs),
    /// Score walks against the normative rank per CDI and AoA bin.
    Evaluate(CommonArgs),
    /// All stages in order over one loaded dataset.
    Pipeline(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Ingest(a)
            | Command::Conformity(a)
            | Command::Nullmodel(a)
            | Command::Cluster(a)
            | Command::Quality(a)
            | Command::Walk(a)
            | Command::Evaluate(a)
            | Command::Pipeline(a) => a,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Conformity(_) => "conformity",
            Command::Nullmodel(_) => "nullmodel",
            Command::Cluster(_) => "cluster",
            Command::Quality(_) => "quality",
            Command::Walk(_) => "walk",
            Command::Evaluate(_) => "evaluate",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feature table CSV (word,frequency,length,polysemy,pos,cdi,month_*).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Layer edge CSV, `NAME=PATH` or a bare path (label = file stem).
    /// Repeatable.
    #[arg(long = "layer-file")]
    layer_files: Vec<String>,
    /// Optional `word,position` CSV bypassing the normative rank build.
    #[arg(long)]
    rank_override: Option<PathBuf>,
    /// Conformity distance-damping exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Production-probability threshold defining the AoA month.
    #[arg(long)]
    aoa_threshold: Option<f64>,
    /// Quantile counts, e.g. `freq=5,length=3,polysemy=5`.
    #[arg(long)]
    bins: Option<String>,
    /// AoA bin boundaries, e.g. `21,23,24,26`.
    #[arg(long)]
    aoa_boundaries: Option<String>,
    /// Comma-separated enabled layers (default: all).
    #[arg(long)]
    layers: Option<String>,
    /// Comma-separated strategies: struct,maxsim,extcand,cdi-maxsim,random.
    #[arg(long)]
    strategy: Option<String>,
    /// Walk runs per strategy.
    #[arg(long)]
    runs: Option<usize>,
    /// Null-model ensemble size.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Master seed; all stage seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also compute the node-count reading of conductance/cut ratio.
    #[arg(long)]
    literal_si_formulas: bool,
    /// Accuracy formula for the summary CSV.
    #[arg(long, value_enum)]
    accuracy_variant: Option<AccuracyVariantCli>,
    /// Reject or stub words missing from the feature table.
    #[arg(long, value_enum)]
    ingest_mode: Option<IngestModeCli>,
    /// Which null models the nullmodel stage runs.
    #[arg(long, value_enum)]
    model: Option<NullModelCli>,
    /// Fixed cluster count (skips elbow selection).
    #[arg(long)]
    k: Option<usize>,
    /// Elbow search range, e.g. `1..12`.
    #[arg(long)]
    k_range: Option<String>,
    /// Seeded restarts for K-Means / K-Modes.
    #[arg(long)]
    restarts: Option<usize>,
    /// Pin the walk start word.
    #[arg(long)]
    start: Option<String>,
    /// Override kernel selection with an explicit K-Means cluster id.
    #[arg(long)]
    kernel_cluster: Option<u32>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AccuracyVariantCli {
    Si,
    Prose,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum IngestModeCli {
    Strict,
    Lenient,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum NullModelCli {
    LabelShuffle,
    Rewire,
    Both,
}

fn effective_config(args: &CommonArgs, stage: &str) -> Result<RunConfig, StageError> {
    let err = |message: String| StageError {
        stage: stage.to_string(),
        message,
    };
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).map_err(err)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &args.features {
        cfg.features = Some(f.clone());
    }
    for spec in &args.layer_files {
        let (name, path) = parse_layer_file(spec).map_err(err)?;
        cfg.layer_files.insert(name, path);
    }
    if let Some(p) = &args.rank_override {
        cfg.rank_override = Some(p.clone());
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(t) = args.aoa_threshold {
        cfg.aoa_threshold = t;
    }
    if let Some(spec) = &args.bins {
        cfg.bins = parse_bins(spec).map_err(err)?;
    }
    if let Some(spec) = &args.aoa_boundaries {
        cfg.aoa_boundaries = parse_boundaries(spec).map_err(err)?;
    }
    if let Some(spec) = &args.layers {
        cfg.layers = Some(spec.split(',').map(|s| s.trim().to_string()).collect());
    }
    if let Some(spec) = &args.strategy {
        cfg.strategies = spec.split(',').map(|s| s.trim().to_string()).collect();
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(e) = args.ensemble {
        cfg.ensemble = e;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    if args.literal_si_formulas {
        cfg.literal_si_formulas = true;
    }
    if let Some(v) = args.accuracy_variant {
        cfg.accuracy_variant = match v {
            AccuracyVariantCli::Si => AccuracyVariantOpt::Si,
            AccuracyVariantCli::Prose => AccuracyVariantOpt::Prose,
        };
    }
    if let Some(m) = args.ingest_mode {
        cfg.ingest_mode = match m {
            IngestModeCli::Strict => IngestModeOpt::Strict,
            IngestModeCli::Lenient => IngestModeOpt::Lenient,
        };
    }
    if let Some(m) = args.model {
        cfg.null_models = match m {
            NullModelCli::LabelShuffle => NullModelOpt::LabelShuffle,
            NullModelCli::Rewire => NullModelOpt::Rewire,
            NullModelCli::Both => NullModelOpt::Both,
        };
    }
    if let Some(k) = args.k {
        cfg.k = Some(k);
    }
    if let Some(spec) = &args.k_range {
        cfg.k_range = parse_k_range(spec).map_err(err)?;
    }
    if let Some(r) = args.restarts {
        cfg.restarts = r;
    }
    if let Some(s) = &args.start {
        cfg.start = Some(s.clone());
    }
    if let Some(c) = args.kernel_cluster {
        cfg.kernel_cluster = Some(c);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), StageError> {
    let cfg = effective_config(cli.command.args(), cli.command.name())?;
    match cli.command {
        Command::Ingest(_) => pipeline::cmd_ingest(&cfg),
        Command::Conformity(_) => pipeline::cmd_conformity(&cfg),
        Command::Nullmodel(_) => pipeline::cmd_nullmodel(&cfg),
        Command::Cluster(_) => pipeline::cmd_cluster(&cfg),
        Command::Quality(_) => pipeline::cmd_quality(&cfg),
        Command::Walk(_) => pipeline::cmd_walk(&cfg),
        Command::Evaluate(_) => pipeline::cmd_evaluate(&cfg),
        Command::Pipeline(_) => pipeline::cmd_pipeline(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": { "stage": e.stage, "message": e.message }
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

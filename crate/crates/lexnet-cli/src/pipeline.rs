//! Stage runners. Every subcommand loads its inputs from scratch, writes its
//! stage directory under `--out`, and drops a manifest with the effective
//! config and seeds so any stage can be re-run in isolation. `pipeline`
//! chains all stages over one loaded dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use lexnet::clustering::{
    elbow_select_k, kcore_decompose, kmeans_fit, kmodes_fit, select_kernel, write_assignment_csv,
    write_elbow_csv, ClusterAssignment, ElbowSelection, KernelSelection,
};
use lexnet::conformity::{
    conformity_profiles, write_distribution_csv, write_profiles_csv, ConformityProfile,
};
use lexnet::evaluation::{full_report, write_summary_csv, AccuracyVariant};
use lexnet::ingest::{
    apply_aoa, assign_aoa_bins, bin_features, build_normative_rank, parse_inputs,
    rank_from_override, BinningOutcome, BinningSpec, IngestMode, InputPaths, NormativeRank,
};
use lexnet::lexicon::{LayerId, MultiplexLexicon, WordId};
use lexnet::quality::{
    bigram_pos_profile, core_quality_with, degree_curves, write_bigrams_csv, write_curves_csv,
    DegreeCurves,
};
use lexnet::randomization::{ensemble_conformity, write_null_report_csv, NullModel};
use lexnet::seeds::{derive_run_seed, derive_seed};
use lexnet::walks::{run_walk, write_trace_csv, Strategy};

use crate::config::{AccuracyVariantOpt, IngestModeOpt, NullModelOpt, RunConfig};

#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

pub type StageResult<T> = Result<T, StageError>;

fn fail<T>(stage: &str, message: impl ToString) -> StageResult<T> {
    Err(StageError {
        stage: stage.to_string(),
        message: message.to_string(),
    })
}

trait Stage<T> {
    fn stage(self, stage: &str) -> StageResult<T>;
}

impl<T, E: std::fmt::Display> Stage<T> for Result<T, E> {
    fn stage(self, stage: &str) -> StageResult<T> {
        self.map_err(|e| StageError {
            stage: stage.to_string(),
            message: e.to_string(),
        })
    }
}

pub struct LoadedData {
    pub lex: MultiplexLexicon,
    pub rank: NormativeRank,
    pub binning: BinningOutcome,
    pub never_produced: Vec<String>,
    pub auto_stubbed: Vec<String>,
    pub warnings: Vec<String>,
    pub inputs: Vec<String>,
}

/// Parse, bin, rank, and assemble the lexicon per the config.
pub fn load(cfg: &RunConfig) -> StageResult<LoadedData> {
    const STAGE: &str = "ingest";
    let Some(features) = &cfg.features else {
        return fail(STAGE, "no feature file (use --features or the config file)");
    };
    let layers: Vec<(LayerId, PathBuf)> = cfg
        .layer_files
        .iter()
        .map(|(name, path)| (LayerId::new(name.clone()), path.clone()))
        .collect();
    let mut inputs: Vec<String> = vec![features.display().to_string()];
    inputs.extend(layers.iter().map(|(_, p)| p.display().to_string()));
    if let Some(p) = &cfg.rank_override {
        inputs.push(p.display().to_string());
    }

    let paths = InputPaths {
        features: features.clone(),
        layers,
        rank_override: cfg.rank_override.clone(),
    };
    let mode = match cfg.ingest_mode {
        IngestModeOpt::Strict => IngestMode::Strict,
        IngestModeOpt::Lenient => IngestMode::Lenient,
    };
    let parsed = parse_inputs(&paths, mode).stage(STAGE)?;
    let mut records = parsed.records;

    let spec = BinningSpec {
        frequency_bins: cfg.bins.frequency,
        length_bins: cfg.bins.length,
        polysemy_bins: cfg.bins.polysemy,
        ..BinningSpec::default()
    };
    let binning = bin_features(&mut records, &spec).stage(STAGE)?;

    let mut never_produced = Vec::new();
    let mut rank = match &parsed.rank_override {
        Some(order) => rank_from_override(&records, order, cfg.aoa_threshold).stage(STAGE)?,
        None => {
            let out = build_normative_rank(&records, cfg.aoa_threshold).stage(STAGE)?;
            never_produced = out
                .never_produced
                .iter()
                .map(|w| records[w.index()].surface.clone())
                .collect();
            out.rank
        }
    };
    let mut warnings = assign_aoa_bins(&mut rank, &cfg.aoa_boundaries).stage(STAGE)?;
    apply_aoa(&mut records, &rank);

    let mut lex = MultiplexLexicon::build(records, parsed.layer_edges).stage(STAGE)?;
    if let Some(enabled) = &cfg.layers {
        let enabled: BTreeSet<&str> = enabled.iter().map(String::as_str).collect();
        for name in &enabled {
            let id = LayerId::new(name.to_string());
            lex.layer_enabled(&id).stage(STAGE)?;
        }
        let all: Vec<LayerId> = lex.layer_ids().cloned().collect();
        for id in all {
            if !enabled.contains(id.as_str()) {
                lex = lex.toggle_layer(&id, false).stage(STAGE)?;
                warnings.push(format!("layer `{id}` disabled"));
            }
        }
    }

    Ok(LoadedData {
        lex,
        rank,
        binning,
        never_produced,
        auto_stubbed: parsed.auto_stubbed,
        warnings,
        inputs,
    })
}

fn write_file(stage: &str, path: &Path, bytes: &[u8]) -> StageResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| format!("{}: {e}", parent.display()))
            .stage(stage)?;
    }
    std::fs::write(path, bytes)
        .map_err(|e| format!("{}: {e}", path.display()))
        .stage(stage)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    master_seed: u64,
    stage_seed: Option<u64>,
    inputs: &'a [String],
    outputs: Vec<String>,
    warnings: Vec<String>,
    wall_time_ms: u128,
    config: &'a RunConfig,
}

struct StageRun<'a> {
    stage: &'a str,
    dir: PathBuf,
    cfg: &'a RunConfig,
    inputs: Vec<String>,
    outputs: Vec<PathBuf>,
    warnings: Vec<String>,
    stage_seed: Option<u64>,
    started: Instant,
}

impl<'a> StageRun<'a> {
    fn new(stage: &'a str, cfg: &'a RunConfig, inputs: &[String]) -> Self {
        StageRun {
            stage,
            dir: cfg.out.join(stage),
            cfg,
            inputs: inputs.to_vec(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            stage_seed: None,
            started: Instant::now(),
        }
    }

    fn emit(&mut self, name: &str, bytes: &[u8]) -> StageResult<PathBuf> {
        let path = self.dir.join(name);
        write_file(self.stage, &path, bytes)?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> StageResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| e.to_string())
            .stage(self.stage)?;
        text.push('\n');
        self.emit(name, text.as_bytes())
    }

    fn warn(&mut self, message: impl ToString) {
        self.warnings.push(message.to_string());
    }

    fn finish(self) -> StageResult<()> {
        let manifest = Manifest {
            command: self.stage,
            version: env!("CARGO_PKG_VERSION"),
            master_seed: self.cfg.seed,
            stage_seed: self.stage_seed,
            inputs: &self.inputs,
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            warnings: self.warnings.clone(),
            wall_time_ms: self.started.elapsed().as_millis(),
            config: self.cfg,
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| e.to_string())
            .stage(self.stage)?;
        text.push('\n');
        write_file(self.stage, &self.dir.join("manifest.json"), text.as_bytes())
    }
}

#[derive(Serialize)]
struct IngestReport<'a> {
    words: usize,
    aggregate_edges: usize,
    layer_edges: BTreeMap<String, usize>,
    ranked_words: usize,
    binning: &'a BinningOutcome,
    never_produced: &'a [String],
    auto_stubbed: &'a [String],
    warnings: &'a [String],
}

fn ingest_stage(data: &LoadedData, run: &mut StageRun<'_>) -> StageResult<()> {
    let lex = &data.lex;
    let mut words = String::from(
        "word,frequency,length,polysemy,freq_bin,length_bin,polysemy_bin,pos,cdi,aoa_month\n",
    );
    let opt = |v: Option<u8>| v.map(|b| b.to_string()).unwrap_or_default();
    for w in lex.words() {
        words.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            w.surface,
            w.freq_raw,
            w.length_raw,
            w.polysemy_raw,
            opt(w.freq_bin),
            opt(w.length_bin),
            opt(w.polysemy_bin),
            w.pos.as_deref().unwrap_or(""),
            w.cdi.as_deref().unwrap_or(""),
            w.aoa_month.map(|m| m.to_string()).unwrap_or_default(),
        ));
    }
    run.emit("words.csv", words.as_bytes())?;

    let mut rank_csv = String::from("position,word,aoa_month,bin\n");
    for (pos, (&w, &month)) in data.rank.order.iter().zip(&data.rank.aoa_month).enumerate() {
        let bin = data
            .rank
            .bins
            .iter()
            .find(|b| pos >= b.start && pos < b.end)
            .map(|b| b.label.as_str())
            .unwrap_or("");
        rank_csv.push_str(&format!("{},{},{},{}\n", pos, lex.surface(w), month, bin));
    }
    run.emit("rank.csv", rank_csv.as_bytes())?;

    let layer_edges: BTreeMap<String, usize> = lex
        .layer_ids()
        .map(|id| (id.to_string(), lex.layer_edges(id).unwrap().len()))
        .collect();
    let report = IngestReport {
        words: lex.word_count(),
        aggregate_edges: lex.edge_count(),
        layer_edges,
        ranked_words: data.rank.len(),
        binning: &data.binning,
        never_produced: &data.never_produced,
        auto_stubbed: &data.auto_stubbed,
        warnings: &data.warnings,
    };
    run.emit_json("ingest_report.json", &report)?;
    Ok(())
}

fn conformity_stage(
    data: &LoadedData,
    run: &mut StageRun<'_>,
) -> StageResult<Vec<ConformityProfile>> {
    let profiles = conformity_profiles(&data.lex, run.cfg.alpha).stage(run.stage)?;
    let mut csv = Vec::new();
    write_profiles_csv(&mut csv, &data.lex, &profiles).stage(run.stage)?;
    run.emit("conformity.csv", &csv)?;
    let mut dist = Vec::new();
    write_distribution_csv(&mut dist, &data.lex, &profiles).stage(run.stage)?;
    run.emit("distribution.csv", &dist)?;
    let isolated = profiles.iter().filter(|p| p.isolated).count();
    if isolated > 0 {
        run.warn(format!("{isolated} isolated words scored 0"));
    }
    Ok(profiles)
}

fn nullmodel_stage(data: &LoadedData, run: &mut StageRun<'_>) -> StageResult<()> {
    let models: Vec<NullModel> = match run.cfg.null_models {
        NullModelOpt::LabelShuffle => vec![NullModel::LabelShuffle],
        NullModelOpt::Rewire => vec![NullModel::Rewire],
        NullModelOpt::Both => vec![NullModel::LabelShuffle, NullModel::Rewire],
    };
    run.stage_seed = Some(derive_seed(run.cfg.seed, "nullmodel"));
    for model in models {
        let seed = derive_seed(run.cfg.seed, &format!("nullmodel.{}", model.name()));
        let report = ensemble_conformity(&data.lex, model, run.cfg.ensemble, run.cfg.alpha, seed)
            .stage(run.stage)?;
        if !report.skipped.is_empty() {
            run.warn(format!(
                "{}: {} instances skipped after rewire failure",
                model.name(),
                report.skipped.len()
            ));
        }
        let mut csv = Vec::new();
        write_null_report_csv(&mut csv, &data.lex, &report).stage(run.stage)?;
        run.emit(&format!("null_{}.csv", model.name()), &csv)?;
    }
    Ok(())
}

pub struct ClusterOutputs {
    pub k: usize,
    pub elbow: Option<ElbowSelection>,
    pub kmeans: ClusterAssignment,
    pub kmodes: Option<ClusterAssignment>,
    pub kcore: ClusterAssignment,
    pub kernels: BTreeMap<&'static str, KernelSelection>,
    pub warnings: Vec<String>,
}

/// Shared clustering logic: pick k (configured or elbow), fit all three
/// methods, and select each method's kernel.
fn compute_clusters(
    data: &LoadedData,
    cfg: &RunConfig,
    profiles: &[ConformityProfile],
    stage: &str,
) -> StageResult<ClusterOutputs> {
    let mut warnings = Vec::new();
    let distinct_vectors = {
        let set: BTreeSet<[u64; 3]> = profiles
            .iter()
            .map(|p| {
                [
                    p.scores[0].to_bits(),
                    p.scores[1].to_bits(),
                    p.scores[2].to_bits(),
                ]
            })
            .collect();
        set.len()
    };
    let seed = derive_seed(cfg.seed, "cluster");

    let (k, elbow) = match cfg.k {
        Some(k) => (k, None),
        None => {
            let (lo, hi) = cfg.k_range;
            let range: Vec<usize> = (lo..=hi.min(distinct_vectors)).collect();
            if range.len() >= 3 {
                let sel = elbow_select_k(profiles, &range, seed).stage(stage)?;
                if sel.flat {
                    warnings.push(format!("elbow curve is flat; fell back to k = {}", sel.k));
                }
                (sel.k, Some(sel))
            } else {
                warnings.push(format!(
                    "too few distinct conformity vectors ({distinct_vectors}) for elbow \
                     selection; using k = {distinct_vectors}"
                ));
                (distinct_vectors, None)
            }
        }
    };

    let kmeans = kmeans_fit(profiles, k, seed, cfg.restarts).stage(stage)?;
    let distinct_tuples = {
        let set: BTreeSet<(Option<u8>, Option<u8>, Option<u8>)> = data
            .lex
            .words()
            .iter()
            .map(|w| (w.freq_bin, w.length_bin, w.polysemy_bin))
            .collect();
        set.len()
    };
    let kmodes = if distinct_tuples == 0 {
        None
    } else {
        let kk = k.min(distinct_tuples);
        if kk < k {
            warnings.push(format!(
                "k-modes clamped to {kk} (only {distinct_tuples} distinct feature tuples)"
            ));
        }
        Some(kmodes_fit(data.lex.words(), kk, seed, cfg.restarts).stage(stage)?)
    };
    let kcore = kcore_decompose(&data.lex);

    let mut kernels = BTreeMap::new();
    let mut kmeans_kernel = select_kernel(&kmeans, &data.lex).stage(stage)?;
    if let Some(cluster) = cfg.kernel_cluster {
        let words: Vec<WordId> = kmeans
            .labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == cluster)
            .map(|(i, _)| WordId(i as u32))
            .collect();
        if words.is_empty() {
            return fail(
                stage,
                format!("--kernel-cluster {cluster}: no such K-Means cluster"),
            );
        }
        warnings.push(format!(
            "kernel overridden to cluster {cluster} ({} words)",
            words.len()
        ));
        kmeans_kernel.cluster = cluster;
        kmeans_kernel.score = None;
        kmeans_kernel.words = words;
    }
    kernels.insert("kmeans_conformity", kmeans_kernel);
    if let Some(km) = &kmodes {
        kernels.insert(
            "kmodes_features",
            select_kernel(km, &data.lex).stage(stage)?,
        );
    }
    kernels.insert("kcore", select_kernel(&kcore, &data.lex).stage(stage)?);

    Ok(ClusterOutputs {
        k,
        elbow,
        kmeans,
        kmodes,
        kcore,
        kernels,
        warnings,
    })
}

#[derive(Serialize)]
struct KernelMeta<'a> {
    cluster: u32,
    score: Option<f64>,
    size: usize,
    words: Vec<&'a str>,
}

#[derive(Serialize)]
struct ClusterMeta<'a> {
    k: usize,
    elbow: Option<&'a ElbowSelection>,
    kmeans_inertia: Option<f64>,
    kmodes_cost: Option<u64>,
    max_coreness: u32,
    /// The kernel score codifies "short, frequent, polysemous" cluster
    /// inspection; it is a reproducible selection rule, not a measurement.
    kernels: BTreeMap<&'a str, KernelMeta<'a>>,
}

fn cluster_stage(
    data: &LoadedData,
    run: &mut StageRun<'_>,
    profiles: &[ConformityProfile],
) -> StageResult<ClusterOutputs> {
    run.stage_seed = Some(derive_seed(run.cfg.seed, "cluster"));
    let outputs = compute_clusters(data, run.cfg, profiles, run.stage)?;
    for w in &outputs.warnings {
        run.warn(w);
    }

    let mut csv = Vec::new();
    let mut assignments = vec![&outputs.kmeans, &outputs.kcore];
    if let Some(km) = &outputs.kmodes {
        assignments.insert(1, km);
    }
    write_assignment_csv(&mut csv, &data.lex, &assignments).stage(run.stage)?;
    run.emit("clusters.csv", &csv)?;

    if let Some(elbow) = &outputs.elbow {
        let mut csv = Vec::new();
        write_elbow_csv(&mut csv, elbow).stage(run.stage)?;
        run.emit("elbow.csv", &csv)?;
    }

    let kernels: BTreeMap<&str, KernelMeta<'_>> = outputs
        .kernels
        .iter()
        .map(|(&name, sel)| {
            (
                name,
                KernelMeta {
                    cluster: sel.cluster,
                    score: sel.score,
                    size: sel.words.len(),
                    words: sel.words.iter().map(|&w| data.lex.surface(w)).collect(),
                },
            )
        })
        .collect();
    let meta = ClusterMeta {
        k: outputs.k,
        elbow: outputs.elbow.as_ref(),
        kmeans_inertia: outputs.kmeans.inertia,
        kmodes_cost: outputs.kmodes.as_ref().and_then(|k| k.cost),
        max_coreness: outputs.kcore.labels.iter().copied().max().unwrap_or(0),
        kernels,
    };
    run.emit_json("cluster_meta.json", &meta)?;
    Ok(outputs)
}

#[derive(Serialize)]
struct CurvesMeta<'a> {
    full: &'a DegreeCurves,
    without_kernel: BTreeMap<&'a str, DegreeCurves>,
}

fn quality_stage(
    data: &LoadedData,
    run: &mut StageRun<'_>,
    clusters: &ClusterOutputs,
) -> StageResult<()> {
    let lex = &data.lex;
    let full_curves = degree_curves(lex, None).stage(run.stage)?;
    let mut csv = Vec::new();
    write_curves_csv(&mut csv, &full_curves).stage(run.stage)?;
    run.emit("curves_full.csv", &csv)?;

    let mut without = BTreeMap::new();
    for (&method, kernel) in &clusters.kernels {
        let core: BTreeSet<WordId> = kernel.words.iter().copied().collect();
        match core_quality_with(lex, &core, run.cfg.literal_si_formulas) {
            Ok(report) => {
                run.emit_json(&format!("quality_{method}.json"), &report)?;
            }
            Err(e) => run.warn(format!("quality_{method}: {e}")),
        }
        match degree_curves(lex, Some(&core)) {
            Ok(curves) => {
                let mut csv = Vec::new();
                write_curves_csv(&mut csv, &curves).stage(run.stage)?;
                run.emit(&format!("curves_without_{method}.csv"), &csv)?;
                without.insert(method, curves);
            }
            Err(e) => run.warn(format!("curves_without_{method}: {e}")),
        }
        match bigram_pos_profile(lex, &core) {
            Ok(profile) => {
                let mut csv = Vec::new();
                write_bigrams_csv(&mut csv, &profile).stage(run.stage)?;
                run.emit(&format!("bigrams_{method}.csv"), &csv)?;
                if profile.missing_pos_words > 0 {
                    run.warn(format!(
                        "bigrams_{method}: {} core words without POS tags excluded",
                        profile.missing_pos_words
                    ));
                }
            }
            Err(e) => run.warn(format!("bigrams_{method}: {e}")),
        }
    }
    let meta = CurvesMeta {
        full: &full_curves,
        without_kernel: without,
    };
    run.emit_json("curves_meta.json", &meta)?;
    Ok(())
}

fn parse_strategies(cfg: &RunConfig, stage: &str) -> StageResult<Vec<Strategy>> {
    cfg.strategies
        .iter()
        .map(|s| s.parse::<Strategy>().stage(stage))
        .collect()
}

fn resolve_start(data: &LoadedData, cfg: &RunConfig, stage: &str) -> StageResult<Option<WordId>> {
    match &cfg.start {
        None => Ok(None),
        Some(surface) => match data.lex.lookup(surface) {
            Some(id) => Ok(Some(id)),
            None => fail(stage, format!("unknown start word `{surface}`")),
        },
    }
}

fn walk_stage(data: &LoadedData, run: &mut StageRun<'_>) -> StageResult<()> {
    let strategies = parse_strategies(run.cfg, run.stage)?;
    let start = resolve_start(data, run.cfg, run.stage)?;
    let stage_seed = derive_seed(run.cfg.seed, "walks");
    run.stage_seed = Some(stage_seed);
    for strategy in strategies {
        for r in 0..run.cfg.runs {
            let seed = derive_run_seed(stage_seed, strategy.id(), r as u64);
            let trace = run_walk(&data.lex, strategy, seed, start).stage(run.stage)?;
            if trace.epsilon_restarts > 0 {
                run.warn(format!(
                    "{} run {r}: {} epsilon restarts",
                    strategy.id(),
                    trace.epsilon_restarts
                ));
            }
            let mut csv = Vec::new();
            write_trace_csv(&mut csv, &data.lex, &trace).stage(run.stage)?;
            run.emit(&format!("trace_{}_{r:04}.csv", strategy.id()), &csv)?;
        }
    }
    Ok(())
}

fn evaluate_stage(
    data: &LoadedData,
    run: &mut StageRun<'_>,
    clusters: &ClusterOutputs,
) -> StageResult<()> {
    let strategies = parse_strategies(run.cfg, run.stage)?;
    let seed = derive_seed(run.cfg.seed, "evaluate");
    run.stage_seed = Some(seed);

    let mut extra: BTreeMap<String, BTreeSet<WordId>> = BTreeMap::new();
    if let Some(kernel) = clusters.kernels.get("kmeans_conformity") {
        if !kernel.words.is_empty() {
            extra.insert("kernel".to_string(), kernel.words.iter().copied().collect());
        }
    }
    let report = full_report(
        &data.lex,
        &data.rank,
        &strategies,
        run.cfg.runs,
        seed,
        &extra,
    )
    .stage(run.stage)?;
    run.emit_json("report.json", &report)?;

    let variant = match run.cfg.accuracy_variant {
        AccuracyVariantOpt::Si => AccuracyVariant::Si,
        AccuracyVariantOpt::Prose => AccuracyVariant::Prose,
    };
    let mut csv = Vec::new();
    write_summary_csv(&mut csv, &report, variant).stage(run.stage)?;
    run.emit("summary.csv", &csv)?;
    Ok(())
}

pub fn cmd_ingest(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;
    let mut run = StageRun::new("ingest", cfg, &data.inputs);
    ingest_stage(&data, &mut run)?;
    run.finish()
}

pub fn cmd_conformity(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;
    let mut run = StageRun::new("conformity", cfg, &data.inputs);
    conformity_stage(&data, &mut run)?;
    run.finish()
}

pub fn cmd_nullmodel(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;
    let mut run = StageRun::new("nullmodel", cfg, &data.inputs);
    nullmodel_stage(&data, &mut run)?;
    run.finish()
}

pub fn cmd_cluster(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;
    let profiles = conformity_profiles(&data.lex, cfg.alpha).stage("cluster")?;
    let mut run = StageRun::new("cluster", cfg, &data.inputs);
    cluster_stage(&data, &mut run, &profiles)?;
    run.finish()
}

pub fn cmd_quality(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;
    let profiles = conformity_profiles(&data.lex, cfg.alpha).stage("quality")?;
    let clusters = compute_clusters(&data, cfg, &profiles, "quality")?;
    let mut run = StageRun::new("quality", cfg, &data.inputs);
    for w in &clusters.warnings {
        run.warn(w);
    }
    quality_stage(&data, &mut run, &clusters)?;
    run.finish()
}

pub fn cmd_walk(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;
    let mut run = StageRun::new("walk", cfg, &data.inputs);
    walk_stage(&data, &mut run)?;
    run.finish()
}

pub fn cmd_evaluate(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;
    let profiles = conformity_profiles(&data.lex, cfg.alpha).stage("evaluate")?;
    let clusters = compute_clusters(&data, cfg, &profiles, "evaluate")?;
    let mut run = StageRun::new("evaluate", cfg, &data.inputs);
    evaluate_stage(&data, &mut run, &clusters)?;
    run.finish()
}

pub fn cmd_pipeline(cfg: &RunConfig) -> StageResult<()> {
    let data = load(cfg)?;

    let mut run = StageRun::new("ingest", cfg, &data.inputs);
    ingest_stage(&data, &mut run)?;
    run.finish()?;

    let mut run = StageRun::new("conformity", cfg, &data.inputs);
    let profiles = conformity_stage(&data, &mut run)?;
    run.finish()?;

    let mut run = StageRun::new("nullmodel", cfg, &data.inputs);
    nullmodel_stage(&data, &mut run)?;
    run.finish()?;

    let mut run = StageRun::new("cluster", cfg, &data.inputs);
    let clusters = cluster_stage(&data, &mut run, &profiles)?;
    run.finish()?;

    let mut run = StageRun::new("quality", cfg, &data.inputs);
    quality_stage(&data, &mut run, &clusters)?;
    run.finish()?;

    let mut run = StageRun::new("walk", cfg, &data.inputs);
    walk_stage(&data, &mut run)?;
    run.finish()?;

    let mut run = StageRun::new("evaluate", cfg, &data.inputs);
    evaluate_stage(&data, &mut run, &clusters)?;
    run.finish()
}

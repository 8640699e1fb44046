//! Run configuration: JSON config file with command-line overrides (flags
//! win). Every field has a default and the whole struct round-trips through
//! serde losslessly, so manifests can embed the effective config.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyVariantOpt {
    Si,
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngestModeOpt {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullModelOpt {
    LabelShuffle,
    Rewire,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinsConfig {
    pub frequency: usize,
    pub length: usize,
    pub polysemy: usize,
}

impl Default for BinsConfig {
    fn default() -> Self {
        BinsConfig {
            frequency: 5,
            length: 3,
            polysemy: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Feature table CSV.
    pub features: Option<PathBuf>,
    /// layer label -> edge CSV path.
    pub layer_files: BTreeMap<String, PathBuf>,
    pub rank_override: Option<PathBuf>,
    pub alpha: f64,
    pub aoa_threshold: f64,
    pub bins: BinsConfig,
    pub aoa_boundaries: Vec<u32>,
    /// Enabled layers; None = all parsed layers.
    pub layers: Option<Vec<String>>,
    pub strategies: Vec<String>,
    pub runs: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub literal_si_formulas: bool,
    pub accuracy_variant: AccuracyVariantOpt,
    pub ingest_mode: IngestModeOpt,
    pub null_models: NullModelOpt,
    /// Fixed cluster count; None = elbow selection over `k_range`.
    pub k: Option<usize>,
    pub k_range: (usize, usize),
    pub restarts: usize,
    /// Pinned walk start word; None = drawn from the run seed.
    pub start: Option<String>,
    /// Manual kernel override: take this K-Means cluster instead of the
    /// kernel-score winner.
    pub kernel_cluster: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            features: None,
            layer_files: BTreeMap::new(),
            rank_override: None,
            alpha: 2.0,
            aoa_threshold: 0.5,
            bins: BinsConfig::default(),
            aoa_boundaries: vec![21, 23, 24, 26],
            layers: None,
            strategies: vec![
                "struct".into(),
                "maxsim".into(),
                "extcand".into(),
                "cdi-maxsim".into(),
            ],
            runs: 100,
            ensemble: 100,
            seed: 0,
            out: PathBuf::from("out"),
            literal_si_formulas: false,
            accuracy_variant: AccuracyVariantOpt::Si,
            ingest_mode: IngestModeOpt::Strict,
            null_models: NullModelOpt::Both,
            k: None,
            k_range: (1, 12),
            restarts: 10,
            start: None,
            kernel_cluster: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Parse `freq=5,length=3,polysemy=5` (any subset, any order).
pub fn parse_bins(spec: &str) -> Result<BinsConfig, String> {
    let mut bins = BinsConfig::default();
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("bad --bins entry `{part}` (want key=count)"))?;
        let count: usize = value
            .parse()
            .map_err(|_| format!("bad bin count `{value}`"))?;
        match key.trim() {
            "freq" | "frequency" => bins.frequency = count,
            "length" | "len" => bins.length = count,
            "polysemy" | "pol" => bins.polysemy = count,
            other => return Err(format!("unknown --bins attribute `{other}`")),
        }
    }
    Ok(bins)
}

/// Parse `21,23,24,26`.
pub fn parse_boundaries(spec: &str) -> Result<Vec<u32>, String> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad AoA boundary `{s}`"))
        })
        .collect()
}

/// Parse `1..12` or `1,12`.
pub fn parse_k_range(spec: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = spec
        .split_once("..")
        .or_else(|| spec.split_once(','))
        .ok_or_else(|| format!("bad --k-range `{spec}` (want LO..HI)"))?;
    let lo = lo.trim().parse().map_err(|_| format!("bad k `{lo}`"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad k `{hi}`"))?;
    if lo == 0 || hi < lo {
        return Err(format!("bad --k-range `{spec}`"));
    }
    Ok((lo, hi))
}

/// Parse a `--layer-file` value: `NAME=PATH`, or a bare path whose file stem
/// becomes the label.
pub fn parse_layer_file(spec: &str) -> Result<(String, PathBuf), String> {
    if let Some((name, path)) = spec.split_once('=') {
        if name.is_empty() {
            return Err(format!("empty layer name in `{spec}`"));
        }
        return Ok((name.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(spec);
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| format!("cannot derive a layer name from `{spec}`"))?;
    Ok((stem.to_string(), path.clone()))
}

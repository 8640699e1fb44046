//! Input parsing, categorical feature binning, and the normative
//! acquisition rank with its age-of-acquisition bins.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Attribute, LayerId, WordId, WordRecord};

/// Per-attribute quantile counts, with optional explicit boundary overrides.
///
/// Defaults follow the quintile/tertile/quintile split for frequency,
/// length and polysemy. An override gives raw-value boundaries; bin `i`
/// covers `[b_{i-1}, b_i)` with open ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub frequency_bins: usize,
    pub length_bins: usize,
    pub polysemy_bins: usize,
    #[serde(default)]
    pub frequency_boundaries: Option<Vec<u64>>,
    #[serde(default)]
    pub length_boundaries: Option<Vec<u64>>,
    #[serde(default)]
    pub polysemy_boundaries: Option<Vec<u64>>,
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec {
            frequency_bins: 5,
            length_bins: 3,
            polysemy_bins: 5,
            frequency_boundaries: None,
            length_boundaries: None,
            polysemy_boundaries: None,
        }
    }
}

impl BinningSpec {
    fn requested(&self, attribute: Attribute) -> usize {
        match attribute {
            Attribute::Frequency => self.frequency_bins,
            Attribute::Length => self.length_bins,
            Attribute::Polysemy => self.polysemy_bins,
        }
    }

    fn boundaries(&self, attribute: Attribute) -> Option<&[u64]> {
        match attribute {
            Attribute::Frequency => self.frequency_boundaries.as_deref(),
            Attribute::Length => self.length_boundaries.as_deref(),
            Attribute::Polysemy => self.polysemy_boundaries.as_deref(),
        }
    }
}

/// What binning actually produced, including degenerate fallbacks.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BinningOutcome {
    /// Attributes with fewer distinct raw values than requested bins, with
    /// the distinct-value count they fell back to.
    pub degenerate: Vec<(Attribute, usize)>,
    pub bin_counts: BTreeMap<Attribute, usize>,
    pub warnings: Vec<String>,
}

/// Assign categorical bins to every record, one per attribute.
///
/// Quantile mode groups equal raw values into the same bin and picks cut
/// points that (1) minimize the largest bin, (2) stay closest to the
/// equal-frequency targets, (3) on remaining ties push the cut later so tied
/// values join the lower bin.
pub fn bin_features(records: &mut [WordRecord], spec: &BinningSpec) -> Result<BinningOutcome> {
    let mut outcome = BinningOutcome::default();
    for attribute in Attribute::ALL {
        let requested = spec.requested(attribute);
        if requested < 2 || requested > u8::MAX as usize {
            return Err(Error::InvalidBinCount {
                attribute,
                requested,
            });
        }
        if let Some(bounds) = spec.boundaries(attribute) {
            if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidBoundaries);
            }
            let mut seen = vec![false; bounds.len() + 1];
            for r in records.iter_mut() {
                let v = r.raw(attribute);
                let bin = bounds.iter().take_while(|&&b| b <= v).count() as u8;
                r.set_bin(attribute, bin);
                seen[bin as usize] = true;
            }
            for (i, s) in seen.iter().enumerate() {
                if !s {
                    outcome
                        .warnings
                        .push(format!("{attribute}: override bin {i} is empty"));
                }
            }
            outcome.bin_counts.insert(attribute, bounds.len() + 1);
            continue;
        }

        let values: Vec<u64> = records.iter().map(|r| r.raw(attribute)).collect();
        let (assignment, bins, degenerate) = quantile_partition(&values, requested);
        if degenerate {
            outcome.degenerate.push((attribute, bins));
        }
        for (r, bin) in records.iter_mut().zip(assignment) {
            r.set_bin(attribute, bin);
        }
        outcome.bin_counts.insert(attribute, bins);
    }
    Ok(outcome)
}

/// Equal-frequency quantile partition of `values` into `q` bins.
/// Returns per-value bin indices, the realized bin count, and whether the
/// attribute degenerated to one bin per distinct value.
fn quantile_partition(values: &[u64], q: usize) -> (Vec<u8>, usize, bool) {
    // Blocks of equal raw values, ascending.
    let mut sorted: Vec<u64> = values.to_vec();
    sorted.sort_unstable();
    let mut blocks: Vec<(u64, usize)> = Vec::new();
    for v in sorted {
        match blocks.last_mut() {
            Some((bv, c)) if *bv == v => *c += 1,
            _ => blocks.push((v, 1)),
        }
    }
    let b = blocks.len();
    if b == 0 {
        return (Vec::new(), 0, false);
    }
    if b <= q {
        // Fewer distinct values than requested bins (or exactly enough):
        // one bin per distinct value; degenerate only when strictly fewer.
        let bin_of: BTreeMap<u64, u8> = blocks
            .iter()
            .enumerate()
            .map(|(i, &(v, _))| (v, i as u8))
            .collect();
        let assignment = values.iter().map(|v| bin_of[v]).collect();
        return (assignment, b, b < q);
    }

    let cuts = optimal_cuts(&blocks, q);
    let mut bin_of: BTreeMap<u64, u8> = BTreeMap::new();
    let mut bin = 0u8;
    for (i, &(v, _)) in blocks.iter().enumerate() {
        while (bin as usize) < cuts.len() && i >= cuts[bin as usize] {
            bin += 1;
        }
        bin_of.insert(v, bin);
    }
    let assignment = values.iter().map(|v| bin_of[v]).collect();
    (assignment, q, false)
}

const INF: u64 = u64::MAX / 4;

/// Choose `q - 1` cut positions over the value blocks. A cut at position `c`
/// ends a bin after block `c - 1`. Objective, lexicographic: minimal max bin
/// size, then minimal total |cumulative - target| (targets i*n/q, compared
/// exactly as |cum*q - i*n|), then latest cuts.
fn optimal_cuts(blocks: &[(u64, usize)], q: usize) -> Vec<usize> {
    let b = blocks.len();
    let n: usize = blocks.iter().map(|&(_, c)| c).sum();
    let mut prefix = vec![0usize; b + 1];
    for (i, &(_, c)) in blocks.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }

    // Minimal feasible max bin size via binary search.
    let largest_block = blocks.iter().map(|&(_, c)| c).max().unwrap();
    let mut lo = largest_block.max(n.div_ceil(q));
    let mut hi = n;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if min_groups(&prefix, mid) <= q {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let max_size = lo;

    // Deviation of a cut at position c for cut index j, exact in integers.
    let dev = |j: usize, c: usize| -> u64 {
        let cum = (prefix[c] * q) as i64;
        let target = (j * n) as i64;
        (cum - target).unsigned_abs()
    };

    // suf[j][c] = minimal total deviation of cuts j+1..q-1 given cut j sits
    // at position c (c = 0 means "before any block" for j = 0).
    let mut suf = vec![vec![INF; b]; q + 1];
    for c in 0..b {
        suf[q - 1][c] = if prefix[b] - prefix[c] <= max_size {
            0
        } else {
            INF
        };
    }
    for j in (0..q - 1).rev() {
        for c in 0..b {
            // Next cut index is j+1, allowed positions leave one block per
            // remaining bin on each side.
            let lo_c = c + 1;
            let hi_c = b - (q - 1 - (j + 1)) - 1;
            let mut best = INF;
            for nc in lo_c..=hi_c.min(b - 1) {
                if prefix[nc] - prefix[c] > max_size {
                    break;
                }
                let cost = dev(j + 1, nc).saturating_add(suf[j + 1][nc]);
                if cost < best {
                    best = cost;
                }
            }
            suf[j][c] = best;
        }
    }

    // Reconstruct, preferring the latest position at every tie.
    let mut cuts = Vec::with_capacity(q - 1);
    let mut prev = 0usize;
    for j in 1..q {
        let want = suf[j - 1][prev];
        let lo_c = prev + 1;
        let hi_c = (b - (q - 1 - j) - 1).min(b - 1);
        let mut chosen = None;
        for c in lo_c..=hi_c {
            if prefix[c] - prefix[prev] > max_size {
                break;
            }
            if dev(j, c).saturating_add(suf[j][c]) == want {
                chosen = Some(c);
            }
        }
        let c = chosen.expect("feasible partition must reconstruct");
        cuts.push(c);
        prev = c;
    }
    cuts
}

/// Minimal number of groups of consecutive blocks with each group count <= m.
fn min_groups(prefix: &[usize], m: usize) -> usize {
    let b = prefix.len() - 1;
    let mut groups = 0;
    let mut start = 0;
    while start < b {
        let mut end = start;
        while end < b && prefix[end + 1] - prefix[start] <= m {
            end += 1;
        }
        if end == start {
            return usize::MAX; // a single block exceeds m
        }
        groups += 1;
        start = end;
    }
    groups
}

/// One age-of-acquisition bin over a contiguous slice of the rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoaBin {
    pub label: String,
    /// Inclusive lower month bound; `None` = open.
    pub lo: Option<u32>,
    /// Exclusive upper month bound; `None` = open.
    pub hi: Option<u32>,
    /// Rank positions `[start, end)`.
    pub start: usize,
    pub end: usize,
}

/// Normative acquisition ordering: position 0 = earliest learned.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NormativeRank {
    pub order: Vec<WordId>,
    /// AoA month of `order[i]`.
    pub aoa_month: Vec<u32>,
    pub bins: Vec<AoaBin>,
}

impl NormativeRank {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn bin(&self, label: &str) -> Result<&AoaBin> {
        self.bins
            .iter()
            .find(|b| b.label == label)
            .ok_or_else(|| Error::UnknownBin(label.to_string()))
    }

    pub fn position(&self, word: WordId) -> Option<usize> {
        self.order.iter().position(|&w| w == word)
    }
}

#[derive(Debug, Clone)]
pub struct RankOutcome {
    pub rank: NormativeRank,
    /// Words that never reach the production threshold, ascending id.
    pub never_produced: Vec<WordId>,
}

/// Rank words by acquisition: AoA month ascending, then production
/// probability at that month descending, then surface form.
///
/// A word's AoA month is the earliest month with production probability
/// >= `threshold`. Words that never cross are excluded and listed.
pub fn build_normative_rank(records: &[WordRecord], threshold: f64) -> Result<RankOutcome> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let mut ranked: Vec<(u32, f64, &str, WordId)> = Vec::new();
    let mut never = Vec::new();
    for r in records {
        match r
            .prod_prob
            .iter()
            .find(|&(_, &p)| p >= threshold)
            .map(|(&m, &p)| (m, p))
        {
            Some((month, prob)) => ranked.push((month, prob, r.surface.as_str(), r.id)),
            None => never.push(r.id),
        }
    }
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(b.2)));
    let rank = NormativeRank {
        order: ranked.iter().map(|e| e.3).collect(),
        aoa_month: ranked.iter().map(|e| e.0).collect(),
        bins: Vec::new(),
    };
    Ok(RankOutcome {
        rank,
        never_produced: never,
    })
}

/// Stamp each ranked word's AoA month back onto its record.
pub fn apply_aoa(records: &mut [WordRecord], rank: &NormativeRank) {
    for (w, m) in rank.order.iter().zip(&rank.aoa_month) {
        records[w.index()].aoa_month = Some(*m);
    }
}

/// Partition the rank into half-open month intervals
/// `[-inf, b0), [b0, b1), ..., [b_last, +inf)`.
/// Empty bins are reported as warnings, not errors.
pub fn assign_aoa_bins(rank: &mut NormativeRank, boundaries: &[u32]) -> Result<Vec<String>> {
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidBoundaries);
    }
    let q = boundaries.len() + 1;
    let label = |i: usize| -> String {
        if boundaries.is_empty() {
            "all".to_string()
        } else if i == 0 {
            format!("<{}", boundaries[0])
        } else if i == q - 1 {
            format!(">={}", boundaries[q - 2])
        } else {
            format!("{}-{}", boundaries[i - 1], boundaries[i])
        }
    };
    let bin_of = |month: u32| boundaries.iter().take_while(|&&b| b <= month).count();

    let mut bins = Vec::with_capacity(q);
    let mut start = 0usize;
    for i in 0..q {
        let end = start
            + rank.aoa_month[start..]
                .iter()
                .take_while(|&&m| bin_of(m) == i)
                .count();
        bins.push(AoaBin {
            label: label(i),
            lo: if i == 0 {
                None
            } else {
                Some(boundaries[i - 1])
            },
            hi: if i == q - 1 {
                None
            } else {
                Some(boundaries[i])
            },
            start,
            end,
        });
        start = end;
    }
    debug_assert_eq!(start, rank.order.len(), "bins must cover the rank");
    let warnings = bins
        .iter()
        .filter(|b| b.start == b.end)
        .map(|b| format!("AoA bin `{}` is empty", b.label))
        .collect();
    rank.bins = bins;
    Ok(warnings)
}

/// Build a rank from an explicit `word,position` override. AoA months still
/// come from the production histories so bins can be assigned; words with no
/// threshold crossing make bin assignment impossible and are rejected.
pub fn rank_from_override(
    records: &[WordRecord],
    order: &[(String, usize)],
    threshold: f64,
) -> Result<NormativeRank> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let by_surface: BTreeMap<&str, &WordRecord> =
        records.iter().map(|r| (r.surface.as_str(), r)).collect();
    let mut entries: Vec<(usize, WordId, Option<u32>, &str)> = Vec::with_capacity(order.len());
    for (surface, position) in order {
        let record = by_surface
            .get(surface.as_str())
            .ok_or_else(|| Error::UnknownWord(surface.clone()))?;
        let aoa = record
            .prod_prob
            .iter()
            .find(|&(_, &p)| p >= threshold)
            .map(|(&m, _)| m);
        entries.push((*position, record.id, aoa, surface));
    }
    entries.sort_by_key(|e| e.0);
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| e.2.is_none())
        .map(|e| e.3.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAoa(missing));
    }
    Ok(NormativeRank {
        order: entries.iter().map(|e| e.1).collect(),
        aoa_month: entries.iter().map(|e| e.2.unwrap()).collect(),
        bins: Vec::new(),
    })
}

/// Strict mode rejects edge words without a feature row; lenient mode stubs
/// them (zero counts, length from the surface form).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone)]
pub struct InputPaths {
    pub features: PathBuf,
    pub layers: Vec<(LayerId, PathBuf)>,
    pub rank_override: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ParsedInputs {
    pub records: Vec<WordRecord>,
    pub layer_edges: BTreeMap<LayerId, Vec<(WordId, WordId)>>,
    /// Words stubbed in lenient mode, in first-reference order.
    pub auto_stubbed: Vec<String>,
    /// month_M columns found in the feature file, ascending.
    pub month_columns: Vec<u32>,
    /// Override ordering, if a rank override file was given.
    pub rank_override: Option<Vec<(String, usize)>>,
}

impl ParsedInputs {
    pub fn cdi_map(&self) -> BTreeMap<String, Vec<WordId>> {
        let mut map: BTreeMap<String, Vec<WordId>> = BTreeMap::new();
        for r in &self.records {
            if let Some(cdi) = &r.cdi {
                map.entry(cdi.clone()).or_default().push(r.id);
            }
        }
        map
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no such file", path.display()),
        )));
    }
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?)
}

/// Parse the feature file, layer edge files, and optional rank override.
pub fn parse_inputs(paths: &InputPaths, mode: IngestMode) -> Result<ParsedInputs> {
    let (mut records, month_columns) = parse_features(&paths.features)?;
    let mut index: BTreeMap<String, WordId> =
        records.iter().map(|r| (r.surface.clone(), r.id)).collect();

    let mut auto_stubbed = Vec::new();
    let mut layer_edges = BTreeMap::new();
    for (layer_id, path) in &paths.layers {
        let mut reader = csv_reader(path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn {
                    path: path.display().to_string(),
                    column: name.to_string(),
                })
        };
        let (src, dst) = (col("source")?, col("target")?);
        let mut edges = Vec::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let mut resolve = |surface: &str| -> Result<WordId> {
                if surface.is_empty() {
                    return Err(parse_err(path, line, "empty word"));
                }
                if let Some(&id) = index.get(surface) {
                    return Ok(id);
                }
                match mode {
                    IngestMode::Strict => Err(Error::InconsistentWord {
                        path: path.display().to_string(),
                        word: surface.to_string(),
                    }),
                    IngestMode::Lenient => {
                        let id = WordId(records.len() as u32);
                        let mut stub = WordRecord::new(id, surface);
                        stub.length_raw = surface.chars().count() as u32;
                        records.push(stub);
                        index.insert(surface.to_string(), id);
                        auto_stubbed.push(surface.to_string());
                        Ok(id)
                    }
                }
            };
            let a = resolve(row.get(src).unwrap_or(""))?;
            let b = resolve(row.get(dst).unwrap_or(""))?;
            edges.push((a, b));
        }
        layer_edges.insert(layer_id.clone(), edges);
    }

    let rank_override = match &paths.rank_override {
        Some(path) => Some(parse_rank_override(path)?),
        None => None,
    };

    Ok(ParsedInputs {
        records,
        layer_edges,
        auto_stubbed,
        month_columns,
        rank_override,
    })
}

fn parse_features(path: &Path) -> Result<(Vec<WordRecord>, Vec<u32>)> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.display().to_string(),
                column: name.to_string(),
            })
    };
    let word_col = col("word")?;
    let freq_col = col("frequency")?;
    let len_col = col("length")?;
    let pol_col = col("polysemy")?;
    let pos_col = col("pos")?;
    let cdi_col = col("cdi")?;
    let mut month_cols: Vec<(usize, u32)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(suffix) = h.strip_prefix("month_") {
            let month = suffix.parse::<u32>().map_err(|_| Error::MissingColumn {
                path: path.display().to_string(),
                column: format!("{h} (malformed month column)"),
            })?;
            month_cols.push((i, month));
        }
    }
    month_cols.sort_by_key(|&(_, m)| m);

    let mut records = Vec::new();
    let mut seen: BTreeMap<String, u64> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |i: usize| row.get(i).unwrap_or("");

        let surface = get(word_col);
        if surface.is_empty() {
            return Err(parse_err(path, line, "empty word"));
        }
        if let Some(first) = seen.insert(surface.to_string(), line) {
            return Err(parse_err(
                path,
                line,
                format!("duplicate word `{surface}` (first on line {first})"),
            ));
        }

        let count = |i: usize, name: &str| -> Result<u64> {
            let raw = get(i);
            let v: i64 = raw
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad {name} `{raw}`")))?;
            if v < 0 {
                return Err(parse_err(path, line, format!("negative {name} `{raw}`")));
            }
            Ok(v as u64)
        };

        let mut record = WordRecord::new(WordId(records.len() as u32), surface);
        record.freq_raw = count(freq_col, "frequency")?;
        record.length_raw = count(len_col, "length")? as u32;
        record.polysemy_raw = count(pol_col, "polysemy")? as u32;
        record.pos = Some(get(pos_col))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        record.cdi = Some(get(cdi_col))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        for &(i, month) in &month_cols {
            let cell = get(i);
            if cell.is_empty() {
                continue;
            }
            let p: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad month_{month} `{cell}`")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_err(
                    path,
                    line,
                    format!("month_{month} probability {p} outside [0, 1]"),
                ));
            }
            record.prod_prob.insert(month, p);
        }
        records.push(record);
    }
    Ok((records, month_cols.into_iter().map(|(_, m)| m).collect()))
}

fn parse_rank_override(path: &Path) -> Result<Vec<(String, usize)>> {
    let mut reader = csv_reader(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.display().to_string(),
                column: name.to_string(),
            })
    };
    let (word_col, pos_col) = (col("word")?, col("position")?);
    let mut out = Vec::new();
    let mut positions = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let word = row.get(word_col).unwrap_or("").to_string();
        if word.is_empty() {
            return Err(parse_err(path, line, "empty word"));
        }
        let raw = row.get(pos_col).unwrap_or("");
        let position: usize = raw
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad position `{raw}`")))?;
        if let Some(first) = positions.insert(position, line) {
            return Err(parse_err(
                path,
                line,
                format!("duplicate position {position} (first on line {first})"),
            ));
        }
        out.push((word, position));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn rec(surface: &str, freq: u64, len: u32, pol: u32) -> WordRecord {
        let mut r = WordRecord::new(WordId(0), surface);
        r.freq_raw = freq;
        r.length_raw = len;
        r.polysemy_raw = pol;
        r
    }

    fn with_ids(mut records: Vec<WordRecord>) -> Vec<WordRecord> {
        for (i, r) in records.iter_mut().enumerate() {
            r.id = WordId(i as u32);
        }
        records
    }

    #[test]
    fn quintiles_on_distinct_values() {
        let mut records = with_ids((1..=10).map(|i| rec(&format!("w{i}"), i, 1, 1)).collect());
        let spec = BinningSpec {
            length_bins: 2,
            polysemy_bins: 2,
            ..BinningSpec::default()
        };
        bin_features(&mut records, &spec).unwrap();
        let mut sizes = [0usize; 5];
        for r in &records {
            sizes[r.freq_bin.unwrap() as usize] += 1;
        }
        assert_eq!(sizes, [2, 2, 2, 2, 2]);
        // Bins ordered by value: 1,2 -> bin 0 ... 9,10 -> bin 4.
        assert_eq!(records[0].freq_bin, Some(0));
        assert_eq!(records[9].freq_bin, Some(4));
    }

    #[test]
    fn identical_values_degenerate_to_one_bin() {
        let mut records = with_ids((0..4).map(|i| rec(&format!("w{i}"), 2, 7, 1)).collect());
        let outcome = bin_features(&mut records, &BinningSpec::default()).unwrap();
        assert!(outcome
            .degenerate
            .iter()
            .any(|&(a, n)| a == Attribute::Length && n == 1));
        assert!(records.iter().all(|r| r.length_bin == Some(0)));
    }

    #[test]
    fn tie_rule_keeps_equal_values_together() {
        // lengths {2,2,3,5,5,9} in tertiles -> {2,2} | {3,5,5} | {9}
        let lengths = [2u32, 2, 3, 5, 5, 9];
        let mut records = with_ids(
            lengths
                .iter()
                .enumerate()
                .map(|(i, &l)| rec(&format!("w{i}"), i as u64 + 1, l, i as u32 + 1))
                .collect(),
        );
        bin_features(&mut records, &BinningSpec::default()).unwrap();
        let bins: Vec<u8> = records.iter().map(|r| r.length_bin.unwrap()).collect();
        assert_eq!(bins, vec![0, 0, 1, 1, 1, 2]);
    }

    #[test]
    fn explicit_boundaries_override_quantiles() {
        let mut records = with_ids(
            (0..4)
                .map(|i| rec(&format!("w{i}"), i * 10, 1, 1))
                .collect(),
        );
        let spec = BinningSpec {
            frequency_boundaries: Some(vec![10, 25]),
            length_bins: 2,
            polysemy_bins: 2,
            ..BinningSpec::default()
        };
        bin_features(&mut records, &spec).unwrap();
        let bins: Vec<u8> = records.iter().map(|r| r.freq_bin.unwrap()).collect();
        assert_eq!(bins, vec![0, 1, 1, 2]); // 0 | 10,20 | 30
    }

    #[test]
    fn bin_count_below_two_rejected() {
        let mut records = with_ids(vec![rec("a", 1, 1, 1)]);
        let spec = BinningSpec {
            frequency_bins: 1,
            ..BinningSpec::default()
        };
        assert!(matches!(
            bin_features(&mut records, &spec),
            Err(Error::InvalidBinCount { .. })
        ));
    }

    fn with_probs(surface: &str, probs: &[(u32, f64)]) -> WordRecord {
        let mut r = WordRecord::new(WordId(0), surface);
        r.prod_prob = probs.iter().copied().collect();
        r
    }

    #[test]
    fn rank_orders_by_month_then_probability() {
        let records = with_ids(vec![
            with_probs("dog", &[(18, 0.8)]),
            with_probs("ball", &[(18, 0.6)]),
            with_probs("cat", &[(19, 0.9)]),
        ]);
        let out = build_normative_rank(&records, 0.5).unwrap();
        let surfaces: Vec<&str> = out
            .rank
            .order
            .iter()
            .map(|&w| records[w.index()].surface.as_str())
            .collect();
        assert_eq!(surfaces, vec!["dog", "ball", "cat"]);
        assert_eq!(out.rank.aoa_month, vec![18, 18, 19]);
        assert!(out.never_produced.is_empty());
    }

    #[test]
    fn below_threshold_everywhere_is_never_produced() {
        let records = with_ids(vec![
            with_probs("quiet", &[(18, 0.4), (30, 0.4)]),
            with_probs("dog", &[(18, 0.8)]),
        ]);
        let out = build_normative_rank(&records, 0.5).unwrap();
        assert_eq!(out.rank.order.len(), 1);
        assert_eq!(out.never_produced, vec![WordId(0)]);
    }

    #[test]
    fn equal_month_and_probability_breaks_ties_lexicographically() {
        let records = with_ids(vec![
            with_probs("zebra", &[(20, 0.7)]),
            with_probs("apple", &[(20, 0.7)]),
        ]);
        let out = build_normative_rank(&records, 0.5).unwrap();
        let surfaces: Vec<&str> = out
            .rank
            .order
            .iter()
            .map(|&w| records[w.index()].surface.as_str())
            .collect();
        assert_eq!(surfaces, vec!["apple", "zebra"]);
    }

    #[test]
    fn threshold_monotonicity() {
        let records = with_ids(vec![with_probs("w", &[(18, 0.4), (20, 0.6), (22, 0.9)])]);
        let low = build_normative_rank(&records, 0.4).unwrap().rank;
        let high = build_normative_rank(&records, 0.8).unwrap().rank;
        assert!(low.aoa_month[0] <= high.aoa_month[0]);
    }

    #[test]
    fn invalid_threshold_rejected() {
        let records = with_ids(vec![with_probs("w", &[(18, 0.9)])]);
        assert!(matches!(
            build_normative_rank(&records, 0.0),
            Err(Error::InvalidThreshold(_))
        ));
        assert!(matches!(
            build_normative_rank(&records, 1.5),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn default_bins_partition_by_month_interval() {
        let months = [18u32, 20, 22, 25, 30];
        let records = with_ids(
            months
                .iter()
                .enumerate()
                .map(|(i, &m)| with_probs(&format!("w{i}"), &[(m, 0.9)]))
                .collect(),
        );
        let mut rank = build_normative_rank(&records, 0.5).unwrap().rank;
        let warnings = assign_aoa_bins(&mut rank, &[21, 23, 24, 26]).unwrap();
        let sizes: Vec<usize> = rank.bins.iter().map(|b| b.end - b.start).collect();
        assert_eq!(sizes, vec![2, 1, 0, 1, 1]);
        assert_eq!(warnings.len(), 1); // the empty 23-24 bin
        assert_eq!(rank.bins[0].label, "<21");
        assert_eq!(rank.bins[4].label, ">=26");
    }

    #[test]
    fn non_increasing_boundaries_rejected() {
        let mut rank = NormativeRank::default();
        assert!(matches!(
            assign_aoa_bins(&mut rank, &[21, 21]),
            Err(Error::InvalidBoundaries)
        ));
    }

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    struct TempDir(PathBuf);
    impl TempDir {
        fn new(tag: &str) -> Self {
            let dir =
                std::env::temp_dir().join(format!("lexnet-ingest-{tag}-{}", std::process::id()));
            std::fs::create_dir_all(&dir).unwrap();
            TempDir(dir)
        }
    }
    impl Drop for TempDir {
        fn drop(&mut self) {
            let _ = std::fs::remove_dir_all(&self.0);
        }
    }

    const FEATURES: &str = "\
word,frequency,length,polysemy,pos,cdi,month_18,month_19
dog,120,3,4,noun,animals,0.6,0.9
cat,100,3,5,noun,animals,,0.7
go,300,2,9,verb,action,0.8,0.95
";

    #[test]
    fn minimal_fixture_parses() {
        let tmp = TempDir::new("minimal");
        let features = write_file(&tmp.0, "features.csv", FEATURES);
        let layer = write_file(&tmp.0, "free.csv", "source,target\ndog,cat\ncat,go\n");
        let parsed = parse_inputs(
            &InputPaths {
                features,
                layers: vec![(LayerId::from("free_associations"), layer)],
                rank_override: None,
            },
            IngestMode::Strict,
        )
        .unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.month_columns, vec![18, 19]);
        assert_eq!(parsed.records[1].prod_prob.len(), 1); // blank month_18
        assert_eq!(parsed.cdi_map()["animals"].len(), 2);
        assert_eq!(
            parsed.layer_edges[&LayerId::from("free_associations")].len(),
            2
        );
    }

    #[test]
    fn negative_frequency_is_a_parse_error_with_line() {
        let tmp = TempDir::new("negfreq");
        let features = write_file(
            &tmp.0,
            "features.csv",
            "word,frequency,length,polysemy,pos,cdi\nbad,-3,2,1,noun,\n",
        );
        let err = parse_inputs(
            &InputPaths {
                features,
                layers: vec![],
                rank_override: None,
            },
            IngestMode::Strict,
        )
        .unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("negative frequency"));
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn unknown_edge_word_strict_vs_lenient() {
        let tmp = TempDir::new("modes");
        let features = write_file(&tmp.0, "features.csv", FEATURES);
        let layer = write_file(&tmp.0, "l.csv", "source,target\ndog,ghost\n");
        let paths = InputPaths {
            features,
            layers: vec![(LayerId::from("l"), layer)],
            rank_override: None,
        };
        assert!(matches!(
            parse_inputs(&paths, IngestMode::Strict),
            Err(Error::InconsistentWord { word, .. }) if word == "ghost"
        ));
        let parsed = parse_inputs(&paths, IngestMode::Lenient).unwrap();
        assert_eq!(parsed.auto_stubbed, vec!["ghost".to_string()]);
        let stub = parsed.records.last().unwrap();
        assert_eq!(stub.surface, "ghost");
        assert_eq!(stub.length_raw, 5);
    }

    #[test]
    fn missing_column_is_reported() {
        let tmp = TempDir::new("missing");
        let features = write_file(&tmp.0, "features.csv", "word,frequency\nw,1\n");
        let err = parse_inputs(
            &InputPaths {
                features,
                layers: vec![],
                rank_override: None,
            },
            IngestMode::Strict,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingColumn { column, .. } if column == "length"));
    }

    #[test]
    fn rank_override_round_trip() {
        let tmp = TempDir::new("override");
        let features = write_file(&tmp.0, "features.csv", FEATURES);
        let rank = write_file(&tmp.0, "rank.csv", "word,position\ncat,1\ngo,0\ndog,2\n");
        let parsed = parse_inputs(
            &InputPaths {
                features,
                layers: vec![],
                rank_override: Some(rank),
            },
            IngestMode::Strict,
        )
        .unwrap();
        let rank = rank_from_override(&parsed.records, parsed.rank_override.as_ref().unwrap(), 0.5)
            .unwrap();
        let surfaces: Vec<&str> = rank
            .order
            .iter()
            .map(|&w| parsed.records[w.index()].surface.as_str())
            .collect();
        assert_eq!(surfaces, vec!["go", "cat", "dog"]);
        assert_eq!(rank.aoa_month, vec![18, 19, 18]);
    }
}

//! Scoring walk traces against the normative rank, per CDI and per
//! age-of-acquisition bin, with z-scored significance against the random
//! learning baseline.
//!
//! A walk "learns word w in bin b" when w's trace position (restricted to
//! ranked words) falls inside b's normative position range. The evaluation
//! universe for true negatives is the full ranked vocabulary, so accuracy
//! denominators match across CDIs.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::NormativeRank;
use crate::lexicon::{MultiplexLexicon, WordId};
use crate::seeds::derive_run_seed;
use crate::walks::{run_walk, Strategy, WalkTrace};

/// One-sided 5% critical value of the standard normal.
const Z_CRIT_95: f64 = 1.6448536269514722;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfusionCell {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl ConfusionCell {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// Metrics over one confusion cell: accuracy = TP / (TP+TN+FP+FN), with
/// the prose variant (TP+TN) / total alongside; precision and recall are 0
/// (and flagged) when their denominator is empty.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub accuracy_prose: f64,
    pub precision: f64,
    pub recall: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

pub fn metrics(cell: &ConfusionCell) -> Metrics {
    let total = cell.total() as f64;
    let tp = cell.true_positives as f64;
    let tn = cell.true_negatives as f64;
    let prec_den = cell.true_positives + cell.false_positives;
    let rec_den = cell.true_positives + cell.false_negatives;
    Metrics {
        accuracy: if total == 0.0 { 0.0 } else { tp / total },
        accuracy_prose: if total == 0.0 { 0.0 } else { (tp + tn) / total },
        precision: if prec_den == 0 {
            0.0
        } else {
            tp / prec_den as f64
        },
        recall: if rec_den == 0 {
            0.0
        } else {
            tp / rec_den as f64
        },
        precision_undefined: prec_den == 0,
        recall_undefined: rec_den == 0,
    }
}

/// The trace restricted to ranked words, in trace order.
fn restrict_to_rank(trace: &WalkTrace, rank: &NormativeRank, n_words: usize) -> Vec<WordId> {
    let mut ranked = vec![false; n_words];
    for &w in &rank.order {
        ranked[w.index()] = true;
    }
    trace
        .order
        .iter()
        .copied()
        .filter(|w| ranked[w.index()])
        .collect()
}

fn confusion_counts(
    predicted: &[WordId],
    normative_mask: &[bool],
    members: &[bool],
    normative_cdi_count: usize,
    universe: usize,
) -> ConfusionCell {
    let mut tp = 0usize;
    let mut fp = 0usize;
    for &w in predicted {
        if members[w.index()] {
            if normative_mask[w.index()] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let fn_ = normative_cdi_count - tp;
    ConfusionCell {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: universe - tp - fp - fn_,
    }
}

/// Confusion cell of one trace for one CDI in one AoA bin.
pub fn confusion(
    lex: &MultiplexLexicon,
    trace: &WalkTrace,
    rank: &NormativeRank,
    cdi: &str,
    bin: &str,
) -> Result<ConfusionCell> {
    let members_ids = lex
        .cdi_map()
        .remove(cdi)
        .ok_or_else(|| Error::UnknownCdi(cdi.to_string()))?;
    let mut members = vec![false; lex.word_count()];
    for w in members_ids {
        members[w.index()] = true;
    }
    let bin = rank.bin(bin)?.clone();
    let restricted = restrict_to_rank(trace, rank, lex.word_count());
    debug_assert_eq!(restricted.len(), rank.len(), "trace must cover the rank");

    let mut normative_mask = vec![false; lex.word_count()];
    let mut normative_cdi = 0usize;
    for &w in &rank.order[bin.start..bin.end] {
        normative_mask[w.index()] = true;
        if members[w.index()] {
            normative_cdi += 1;
        }
    }
    Ok(confusion_counts(
        &restricted[bin.start..bin.end],
        &normative_mask,
        &members,
        normative_cdi,
        rank.len(),
    ))
}

/// z-test of model runs against baseline runs (same n on both sides).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Significance {
    pub model_mean: f64,
    pub model_std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    /// None when both standard deviations vanish.
    pub z: Option<f64>,
    pub significant: bool,
    pub zero_variance: bool,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Significant iff the one-sided p-value is below 0.05 AND the model mean
/// exceeds the baseline mean. With both variances zero the z is undefined
/// and the strict mean comparison decides, flagged as such.
pub fn significance(model_runs: &[f64], baseline_runs: &[f64]) -> Result<Significance> {
    let n = model_runs.len();
    if n < 2 || baseline_runs.len() != n {
        return Err(Error::InvalidRuns {
            model: n,
            baseline: baseline_runs.len(),
        });
    }
    let (m1, s1) = mean_std(model_runs);
    let (m2, s2) = mean_std(baseline_runs);
    let se = (s1 * s1 / n as f64 + s2 * s2 / n as f64).sqrt();
    if se == 0.0 {
        return Ok(Significance {
            model_mean: m1,
            model_std: s1,
            baseline_mean: m2,
            baseline_std: s2,
            z: None,
            significant: m1 > m2,
            zero_variance: true,
        });
    }
    let z = (m1 - m2) / se;
    Ok(Significance {
        model_mean: m1,
        model_std: s1,
        baseline_mean: m2,
        baseline_std: s2,
        z: Some(z),
        significant: z > Z_CRIT_95 && m1 > m2,
        zero_variance: false,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub z: Option<f64>,
    pub significant: bool,
    pub zero_variance: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CdiReport {
    pub cdi: String,
    /// The CDI has at least one normative word in this bin.
    pub populated: bool,
    pub accuracy_mean: f64,
    pub accuracy_prose_mean: f64,
    /// Macro-averaged over runs (primary aggregation).
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    /// Pooled counts over runs, emitted alongside the macro averages.
    pub pooled_precision: f64,
    pub pooled_recall: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BinReport {
    pub bin: String,
    /// Macro-averages over populated CDIs; None when none are.
    pub mean_accuracy: Option<f64>,
    pub mean_accuracy_prose: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
    /// Share of populated CDIs whose precision/recall beat random learning.
    pub precision_relevant_fraction: f64,
    pub recall_relevant_fraction: f64,
    pub populated_cdis: usize,
    pub cdis: Vec<CdiReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategyReport {
    pub strategy: String,
    pub bins: Vec<BinReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub n_runs: usize,
    pub seed: u64,
    pub bins: Vec<String>,
    pub cdis: Vec<String>,
    pub strategies: Vec<StrategyReport>,
    /// Random learning scored against itself; all significance flags false.
    pub baseline: StrategyReport,
}

/// Accumulated per-run metric lists for one (bin, cdi) pair.
#[derive(Default, Clone)]
struct MetricRuns {
    accuracy: Vec<f64>,
    accuracy_prose: Vec<f64>,
    precision: Vec<f64>,
    recall: Vec<f64>,
    tp: usize,
    fp: usize,
    fn_: usize,
}

fn evaluate_traces(
    traces: &[WalkTrace],
    rank: &NormativeRank,
    memberships: &BTreeMap<String, Vec<bool>>,
    n_words: usize,
) -> BTreeMap<(String, String), MetricRuns> {
    // normative masks and per-(bin, cdi) normative counts
    let mut norm_masks: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    let mut norm_counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for bin in &rank.bins {
        let mut mask = vec![false; n_words];
        for &w in &rank.order[bin.start..bin.end] {
            mask[w.index()] = true;
        }
        for (cdi, members) in memberships {
            let count = rank.order[bin.start..bin.end]
                .iter()
                .filter(|w| members[w.index()])
                .count();
            norm_counts.insert((bin.label.clone(), cdi.clone()), count);
        }
        norm_masks.insert(bin.label.clone(), mask);
    }

    let mut out: BTreeMap<(String, String), MetricRuns> = BTreeMap::new();
    for trace in traces {
        let restricted = restrict_to_rank(trace, rank, n_words);
        for bin in &rank.bins {
            let mask = &norm_masks[&bin.label];
            let predicted = &restricted[bin.start..bin.end];
            for (cdi, members) in memberships {
                let key = (bin.label.clone(), cdi.clone());
                let cell =
                    confusion_counts(predicted, mask, members, norm_counts[&key], rank.len());
                let m = metrics(&cell);
                let runs = out.entry(key).or_default();
                runs.accuracy.push(m.accuracy);
                runs.accuracy_prose.push(m.accuracy_prose);
                runs.precision.push(m.precision);
                runs.recall.push(m.recall);
                runs.tp += cell.true_positives;
                runs.fp += cell.false_positives;
                runs.fn_ += cell.false_negatives;
            }
        }
    }
    out
}

fn summarize(
    model: &MetricRuns,
    baseline: &MetricRuns,
    metric: impl Fn(&MetricRuns) -> &Vec<f64>,
) -> MetricSummary {
    let m = metric(model);
    let b = metric(baseline);
    if m.len() >= 2 {
        let sig = significance(m, b).expect("equal run counts");
        MetricSummary {
            mean: sig.model_mean,
            std: sig.model_std,
            baseline_mean: sig.baseline_mean,
            baseline_std: sig.baseline_std,
            z: sig.z,
            significant: sig.significant,
            zero_variance: sig.zero_variance,
        }
    } else {
        let (mean, std) = mean_std(m);
        let (bm, bs) = mean_std(b);
        MetricSummary {
            mean,
            std,
            baseline_mean: bm,
            baseline_std: bs,
            z: None,
            significant: false,
            zero_variance: false,
        }
    }
}

fn pooled(tp: usize, other: usize) -> f64 {
    if tp + other == 0 {
        0.0
    } else {
        tp as f64 / (tp + other) as f64
    }
}

fn strategy_report(
    name: &str,
    rank: &NormativeRank,
    memberships: &BTreeMap<String, Vec<bool>>,
    runs: &BTreeMap<(String, String), MetricRuns>,
    baseline: &BTreeMap<(String, String), MetricRuns>,
) -> StrategyReport {
    let mut bins = Vec::new();
    for bin in &rank.bins {
        let mut cdis = Vec::new();
        let mut populated = 0usize;
        let mut acc_sum = 0.0;
        let mut acc_prose_sum = 0.0;
        let mut prec_sum = 0.0;
        let mut rec_sum = 0.0;
        let mut sig_precision = 0usize;
        let mut sig_recall = 0usize;
        for cdi in memberships.keys() {
            let key = (bin.label.clone(), cdi.clone());
            let model_runs = &runs[&key];
            let base_runs = &baseline[&key];
            let norm_count = rank.order[bin.start..bin.end]
                .iter()
                .filter(|w| memberships[cdi][w.index()])
                .count();
            let is_populated = norm_count > 0;
            let precision = summarize(model_runs, base_runs, |r| &r.precision);
            let recall = summarize(model_runs, base_runs, |r| &r.recall);
            let (acc_mean, _) = mean_std(&model_runs.accuracy);
            let (acc_prose_mean, _) = mean_std(&model_runs.accuracy_prose);
            if is_populated {
                populated += 1;
                acc_sum += acc_mean;
                acc_prose_sum += acc_prose_mean;
                prec_sum += precision.mean;
                rec_sum += recall.mean;
                if precision.significant {
                    sig_precision += 1;
                }
                if recall.significant {
                    sig_recall += 1;
                }
            }
            cdis.push(CdiReport {
                cdi: cdi.clone(),
                populated: is_populated,
                accuracy_mean: acc_mean,
                accuracy_prose_mean: acc_prose_mean,
                pooled_precision: pooled(model_runs.tp, model_runs.fp),
                pooled_recall: pooled(model_runs.tp, model_runs.fn_),
                precision,
                recall,
            });
        }
        bins.push(BinReport {
            bin: bin.label.clone(),
            mean_accuracy: (populated > 0).then(|| acc_sum / populated as f64),
            mean_accuracy_prose: (populated > 0).then(|| acc_prose_sum / populated as f64),
            mean_precision: (populated > 0).then(|| prec_sum / populated as f64),
            mean_recall: (populated > 0).then(|| rec_sum / populated as f64),
            precision_relevant_fraction: if populated == 0 {
                0.0
            } else {
                sig_precision as f64 / populated as f64
            },
            recall_relevant_fraction: if populated == 0 {
                0.0
            } else {
                sig_recall as f64 / populated as f64
            },
            populated_cdis: populated,
            cdis,
        });
    }
    StrategyReport {
        strategy: name.to_string(),
        bins,
    }
}

/// Run `n_runs` seeded walks per strategy plus the random baseline, score
/// every (CDI, bin) pair, and attach significance against the baseline.
/// `extra_cdis` lets a kernel word set be evaluated as a pseudo-CDI.
pub fn full_report(
    lex: &MultiplexLexicon,
    rank: &NormativeRank,
    strategies: &[Strategy],
    n_runs: usize,
    seed: u64,
    extra_cdis: &BTreeMap<String, BTreeSet<WordId>>,
) -> Result<EvaluationReport> {
    if rank.bins.is_empty() {
        return Err(Error::UnassignedBins);
    }
    if n_runs == 0 {
        return Err(Error::InvalidRuns {
            model: 0,
            baseline: 0,
        });
    }
    let n_words = lex.word_count();
    let mut memberships: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for (cdi, words) in lex.cdi_map() {
        let mut mask = vec![false; n_words];
        for w in words {
            mask[w.index()] = true;
        }
        memberships.insert(cdi, mask);
    }
    for (label, words) in extra_cdis {
        let mut mask = vec![false; n_words];
        for &w in words {
            lex.word(w)?;
            mask[w.index()] = true;
        }
        memberships.insert(label.clone(), mask);
    }

    let run_traces = |strategy: Strategy| -> Result<Vec<WalkTrace>> {
        (0..n_runs)
            .into_par_iter()
            .map(|r| {
                run_walk(
                    lex,
                    strategy,
                    derive_run_seed(seed, strategy.id(), r as u64),
                    None,
                )
            })
            .collect()
    };

    let baseline_traces = run_traces(Strategy::Random)?;
    let baseline_runs = evaluate_traces(&baseline_traces, rank, &memberships, n_words);

    let mut reports = Vec::new();
    for &strategy in strategies {
        let traces = if strategy == Strategy::Random {
            baseline_traces.clone()
        } else {
            run_traces(strategy)?
        };
        let runs = evaluate_traces(&traces, rank, &memberships, n_words);
        reports.push(strategy_report(
            strategy.id(),
            rank,
            &memberships,
            &runs,
            &baseline_runs,
        ));
    }
    let baseline_report =
        strategy_report("random", rank, &memberships, &baseline_runs, &baseline_runs);

    Ok(EvaluationReport {
        n_runs,
        seed,
        bins: rank.bins.iter().map(|b| b.label.clone()).collect(),
        cdis: memberships.keys().cloned().collect(),
        strategies: reports,
        baseline: baseline_report,
    })
}

/// Which accuracy formula feeds the summary CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyVariant {
    /// TP / (TP + TN + FP + FN)
    Si,
    /// (TP + TN) / (TP + TN + FP + FN)
    Prose,
}

/// CSV mirroring the coarse evaluation table:
/// `strategy,bin,accuracy,precision_relevant_fraction,recall_relevant_fraction`.
pub fn write_summary_csv<W: Write>(
    out: &mut W,
    report: &EvaluationReport,
    variant: AccuracyVariant,
) -> Result<()> {
    writeln!(
        out,
        "strategy,bin,accuracy,precision_relevant_fraction,recall_relevant_fraction"
    )?;
    for strategy in report.strategies.iter().chain([&report.baseline]) {
        for bin in &strategy.bins {
            let accuracy = match variant {
                AccuracyVariant::Si => bin.mean_accuracy,
                AccuracyVariant::Prose => bin.mean_accuracy_prose,
            };
            writeln!(
                out,
                "{},{},{},{},{}",
                strategy.strategy,
                bin.bin,
                accuracy.map(|a| a.to_string()).unwrap_or_default(),
                bin.precision_relevant_fraction,
                bin.recall_relevant_fraction
            )?;
        }
    }
    Ok(())
}

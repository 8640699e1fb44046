//! Kernel candidates three ways: K-Means on conformity vectors with elbow
//! selection, K-Modes on the categorical feature tuples, and k-core
//! decomposition of the aggregate graph.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformity::ConformityProfile;
use crate::error::{Error, Result};
use crate::lexicon::{Attribute, MultiplexLexicon, WordId, WordRecord};
use crate::seeds::derive_run_seed;

const MAX_ITERATIONS: usize = 300;
const CENTROID_SHIFT_EPS: f64 = 1e-9;
/// Restarts used by elbow selection.
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    KmeansConformity,
    KmodesFeatures,
    Kcore,
}

impl ClusterMethod {
    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::KmeansConformity => "kmeans_conformity",
            ClusterMethod::KmodesFeatures => "kmodes_features",
            ClusterMethod::Kcore => "kcore",
        }
    }
}

/// Per-word cluster labels (or coreness for [`ClusterMethod::Kcore`]).
#[derive(Debug, Clone, Serialize)]
pub struct ClusterAssignment {
    pub method: ClusterMethod,
    pub labels: Vec<u32>,
    pub k: usize,
    pub inertia: Option<f64>,
    /// K-Modes total mismatch count.
    pub cost: Option<u64>,
    /// K-Means inertia after each assignment step, one trace per restart.
    pub inertia_traces: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Relabel clusters by first appearance so equal partitions compare equal.
fn canonicalize(labels: &mut [u32]) {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    let mut next = 0u32;
    for l in labels.iter_mut() {
        let entry = map.entry(*l).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        *l = *entry;
    }
}

struct KmeansRun {
    labels: Vec<u32>,
    inertia: f64,
    trace: Vec<f64>,
}

fn kmeans_single(points: &[[f64; 3]], k: usize, seed: u64) -> KmeansRun {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Farthest-point seeding: random first center, then repeatedly the point
    // farthest from its nearest chosen center (ties to the lowest index).
    let mut centroids: Vec<[f64; 3]> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)]);
    let mut min_d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let mut best = 0usize;
        for i in 1..n {
            if min_d2[i] > min_d2[best] {
                best = i;
            }
        }
        centroids.push(points[best]);
        for i in 0..n {
            let d = sq_dist(&points[i], centroids.last().unwrap());
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }

    let mut labels = vec![0u32; n];
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        // Assignment step.
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = sq_dist(p, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = sq_dist(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            labels[i] = best as u32;
            inertia += best_d;
        }
        if let Some(&prev) = trace.last() {
            debug_assert!(
                inertia <= prev + 1e-12 * prev.abs().max(1.0),
                "Lloyd inertia must not increase ({prev} -> {inertia})"
            );
        }
        trace.push(inertia);

        // Update step: means, with empty clusters reseeded to the point
        // farthest from its current centroid.
        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let c = labels[i] as usize;
            counts[c] += 1;
            for a in 0..3 {
                sums[c][a] += p[a];
            }
        }
        let mut shift: f64 = 0.0;
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] == 0 {
                let mut far = 0usize;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    if counts[labels[i] as usize] < 2 {
                        continue;
                    }
                    let d = sq_dist(p, &centroids[labels[i] as usize]);
                    if d > far_d {
                        far_d = d;
                        far = i;
                    }
                }
                centroids[c] = points[far];
                reseeded = true;
                continue;
            }
            let mut new = [0.0; 3];
            for a in 0..3 {
                new[a] = sums[c][a] / counts[c] as f64;
            }
            shift = shift.max(sq_dist(&new, &centroids[c]).sqrt());
            centroids[c] = new;
        }
        if !reseeded && shift < CENTROID_SHIFT_EPS {
            break;
        }
    }

    KmeansRun {
        inertia: *trace.last().unwrap(),
        labels,
        trace,
    }
}

fn distinct_points(points: &[[f64; 3]]) -> usize {
    points
        .iter()
        .map(|p| [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()])
        .collect::<BTreeSet<_>>()
        .len()
}

/// Lloyd's K-Means over conformity vectors, best of `restarts` seeded
/// farthest-point initializations by inertia (ties to the earlier restart).
pub fn kmeans_fit(
    profiles: &[ConformityProfile],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment> {
    let points: Vec<[f64; 3]> = profiles.iter().map(|p| p.scores).collect();
    kmeans_points(&points, k, seed, restarts)
}

pub(crate) fn kmeans_points(
    points: &[[f64; 3]],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment> {
    let distinct = distinct_points(points);
    if k == 0 || k > distinct {
        return Err(Error::DegenerateK { k, distinct });
    }
    let restarts = restarts.max(1);
    let runs: Vec<KmeansRun> = (0..restarts)
        .into_par_iter()
        .map(|r| kmeans_single(points, k, derive_run_seed(seed, "kmeans", r as u64)))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.inertia.total_cmp(&b.inertia).then(i.cmp(j)))
        .map(|(i, _)| i)
        .unwrap();
    let mut labels = runs[best].labels.clone();
    canonicalize(&mut labels);
    Ok(ClusterAssignment {
        method: ClusterMethod::KmeansConformity,
        labels,
        k,
        inertia: Some(runs[best].inertia),
        cost: None,
        inertia_traces: runs.into_iter().map(|r| r.trace).collect(),
    })
}

/// Elbow outcome: the knee of the inertia curve plus the full curve so a
/// human can override the pick.
#[derive(Debug, Clone, Serialize)]
pub struct ElbowSelection {
    pub k: usize,
    pub curve: Vec<(usize, f64)>,
    /// No positive second difference; `k` fell back to the smallest value.
    pub flat: bool,
}

/// Pick k at the maximum discrete second difference of the inertia curve.
pub fn elbow_select_k(
    profiles: &[ConformityProfile],
    k_range: &[usize],
    seed: u64,
) -> Result<ElbowSelection> {
    let mut ks: Vec<usize> = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < 3 {
        return Err(Error::InvalidKRange(ks.len()));
    }
    let mut curve = Vec::with_capacity(ks.len());
    for &k in &ks {
        let fit = kmeans_fit(
            profiles,
            k,
            derive_run_seed(seed, "elbow", k as u64),
            DEFAULT_RESTARTS,
        )?;
        curve.push((k, fit.inertia.unwrap()));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 1..curve.len() - 1 {
        let d2 = curve[i - 1].1 - 2.0 * curve[i].1 + curve[i + 1].1;
        match best {
            Some((_, cur)) if d2 <= cur => {}
            _ => best = Some((curve[i].0, d2)),
        }
    }
    match best {
        Some((k, d2)) if d2 > 0.0 => Ok(ElbowSelection {
            k,
            curve,
            flat: false,
        }),
        _ => Ok(ElbowSelection {
            k: ks[0],
            curve,
            flat: true,
        }),
    }
}

fn feature_tuple(record: &WordRecord) -> Result<[u8; 3]> {
    let mut t = [0u8; 3];
    for (i, attribute) in Attribute::ALL.into_iter().enumerate() {
        t[i] = record.bin(attribute).ok_or_else(|| Error::UnbinnedWord {
            word: record.surface.clone(),
            attribute,
        })?;
    }
    Ok(t)
}

fn mismatches(a: &[u8; 3], b: &[u8; 3]) -> u32 {
    (0..3).map(|i| u32::from(a[i] != b[i])).sum()
}

/// Most frequent value per attribute; ties go to the lowest bin label.
fn cluster_mode(tuples: &[[u8; 3]], members: &[usize]) -> [u8; 3] {
    let mut mode = [0u8; 3];
    for a in 0..3 {
        let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
        for &m in members {
            *counts.entry(tuples[m][a]).or_default() += 1;
        }
        mode[a] = counts
            .iter()
            .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)))
            .map(|(&v, _)| v)
            .unwrap();
    }
    mode
}

fn kmodes_cost(tuples: &[[u8; 3]], labels: &[u32], modes: &[[u8; 3]]) -> u64 {
    tuples
        .iter()
        .zip(labels)
        .map(|(t, &l)| mismatches(t, &modes[l as usize]) as u64)
        .sum()
}

fn kmodes_single(tuples: &[[u8; 3]], k: usize, seed: u64) -> (Vec<u32>, u64) {
    let n = tuples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Huang-style initialization: sample attribute values proportionally to
    // their frequencies, then snap each sampled mode to the nearest record
    // with a tuple not already used.
    let mut freq: [BTreeMap<u8, usize>; 3] = Default::default();
    for t in tuples {
        for a in 0..3 {
            *freq[a].entry(t[a]).or_default() += 1;
        }
    }
    let mut modes: Vec<[u8; 3]> = Vec::with_capacity(k);
    let mut used: BTreeSet<[u8; 3]> = BTreeSet::new();
    while modes.len() < k {
        let mut sampled = [0u8; 3];
        for a in 0..3 {
            let total: usize = freq[a].values().sum();
            let mut pick = rng.gen_range(0..total);
            for (&v, &c) in &freq[a] {
                if pick < c {
                    sampled[a] = v;
                    break;
                }
                pick -= c;
            }
        }
        let snapped = (0..n)
            .filter(|&i| !used.contains(&tuples[i]))
            .min_by_key(|&i| (mismatches(&tuples[i], &sampled), i))
            .expect("k <= distinct tuples");
        used.insert(tuples[snapped]);
        modes.push(tuples[snapped]);
    }

    let mut labels = vec![u32::MAX; n];
    for _ in 0..MAX_ITERATIONS {
        // Assignment: nearest mode, ties to the lowest cluster index.
        let mut changed = false;
        for (i, t) in tuples.iter().enumerate() {
            let best = (0..k)
                .min_by_key(|&c| (mismatches(t, &modes[c]), c))
                .unwrap() as u32;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        // Update: per-cluster modes; empty clusters reseed to the record
        // farthest from its own mode.
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l as usize].push(i);
        }
        for c in 0..k {
            if members[c].is_empty() {
                let far = (0..n)
                    .filter(|&i| members[labels[i] as usize].len() >= 2)
                    .max_by_key(|&i| (mismatches(&tuples[i], &modes[labels[i] as usize]), n - i))
                    .unwrap_or(0);
                modes[c] = tuples[far];
            } else {
                modes[c] = cluster_mode(tuples, &members[c]);
            }
        }
    }
    let cost = kmodes_cost(tuples, &labels, &modes);
    (labels, cost)
}

/// K-Modes over the categorical feature tuples with simple-matching
/// dissimilarity; best of `restarts` Huang-style initializations by cost.
pub fn kmodes_fit(
    records: &[WordRecord],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment> {
    let tuples: Vec<[u8; 3]> = records.iter().map(feature_tuple).collect::<Result<_>>()?;
    let distinct = tuples.iter().collect::<BTreeSet<_>>().len();
    if k == 0 || k > distinct {
        return Err(Error::DegenerateK { k, distinct });
    }
    let restarts = restarts.max(1);
    let runs: Vec<(Vec<u32>, u64)> = (0..restarts)
        .into_par_iter()
        .map(|r| kmodes_single(&tuples, k, derive_run_seed(seed, "kmodes", r as u64)))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by_key(|(i, (_, cost))| (*cost, *i))
        .map(|(i, _)| i)
        .unwrap();
    let mut labels = runs[best].0.clone();
    let cost = runs[best].1;
    canonicalize(&mut labels);
    Ok(ClusterAssignment {
        method: ClusterMethod::KmodesFeatures,
        labels,
        k,
        inertia: None,
        cost: Some(cost),
        inertia_traces: Vec::new(),
    })
}

/// Iterative peeling: coreness(w) = largest k such that w survives in the
/// k-core of the aggregate graph.
pub fn kcore_decompose(lex: &MultiplexLexicon) -> ClusterAssignment {
    let n = lex.word_count();
    let mut deg: Vec<usize> = (0..n)
        .map(|i| lex.neighbors(WordId(i as u32)).unwrap().len())
        .collect();
    let mut alive = vec![true; n];
    let mut coreness = vec![0u32; n];
    let mut remaining = n;
    let mut k = 0usize;
    while remaining > 0 {
        let min_deg = (0..n).filter(|&i| alive[i]).map(|i| deg[i]).min().unwrap();
        if min_deg > k {
            k = min_deg;
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| alive[i] && deg[i] <= k).collect();
        while let Some(u) = stack.pop() {
            if !alive[u] {
                continue;
            }
            alive[u] = false;
            coreness[u] = k as u32;
            remaining -= 1;
            for &v in lex.neighbors(WordId(u as u32)).unwrap() {
                let vi = v.index();
                if alive[vi] {
                    deg[vi] -= 1;
                    if deg[vi] == k {
                        stack.push(vi);
                    }
                }
            }
        }
    }
    let max = coreness.iter().copied().max().unwrap_or(0);
    ClusterAssignment {
        method: ClusterMethod::Kcore,
        labels: coreness,
        k: max as usize + 1,
        inertia: None,
        cost: None,
        inertia_traces: Vec::new(),
    }
}

/// Which cluster is the language kernel, and why.
#[derive(Debug, Clone, Serialize)]
pub struct KernelSelection {
    pub method: ClusterMethod,
    pub cluster: u32,
    pub words: Vec<WordId>,
    /// Kernel score of the winning cluster (None for k-core, which takes
    /// the maximum-coreness subgraph instead).
    pub score: Option<f64>,
    /// (cluster, score, size) for every cluster, descending score.
    pub cluster_scores: Vec<(u32, f64, usize)>,
}

fn realized_bins(lex: &MultiplexLexicon, attribute: Attribute) -> Vec<u8> {
    let set: BTreeSet<u8> = lex
        .words()
        .iter()
        .filter_map(|w| w.bin(attribute))
        .collect();
    set.into_iter().collect()
}

/// Kernel score of a cluster: mean of (share in the top frequency bin,
/// share in the shortest length bin, share in the top two polysemy bins).
fn kernel_score(lex: &MultiplexLexicon, members: &[usize]) -> f64 {
    let freq_bins = realized_bins(lex, Attribute::Frequency);
    let len_bins = realized_bins(lex, Attribute::Length);
    let pol_bins = realized_bins(lex, Attribute::Polysemy);
    let top_freq = *freq_bins.last().unwrap_or(&0);
    let short_len = *len_bins.first().unwrap_or(&0);
    let pol_top2: BTreeSet<u8> = pol_bins.iter().rev().take(2).copied().collect();

    let total = members.len() as f64;
    let words = lex.words();
    let share = |pred: &dyn Fn(&WordRecord) -> bool| {
        members.iter().filter(|&&m| pred(&words[m])).count() as f64 / total
    };
    let f = share(&|w| w.freq_bin == Some(top_freq));
    let l = share(&|w| w.length_bin == Some(short_len));
    let p = share(&|w| w.polysemy_bin.is_some_and(|b| pol_top2.contains(&b)));
    (f + l + p) / 3.0
}

/// Pick the kernel cluster: highest kernel score, ties to the smaller
/// cluster, then the lower label. For k-core, the maximum-coreness subgraph.
pub fn select_kernel(
    assignment: &ClusterAssignment,
    lex: &MultiplexLexicon,
) -> Result<KernelSelection> {
    if assignment.labels.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    if assignment.method == ClusterMethod::Kcore {
        let max = *assignment.labels.iter().max().unwrap();
        let words: Vec<WordId> = assignment
            .labels
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == max)
            .map(|(i, _)| WordId(i as u32))
            .collect();
        return Ok(KernelSelection {
            method: assignment.method,
            cluster: max,
            words,
            score: None,
            cluster_scores: Vec::new(),
        });
    }

    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in assignment.labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    let mut scored: Vec<(u32, f64, usize)> = members
        .iter()
        .map(|(&c, m)| (c, kernel_score(lex, m), m.len()))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));
    let (cluster, score, _) = scored[0];
    let words = members[&cluster]
        .iter()
        .map(|&i| WordId(i as u32))
        .collect();
    Ok(KernelSelection {
        method: assignment.method,
        cluster,
        words,
        score: Some(score),
        cluster_scores: scored,
    })
}

/// CSV: `word,method,cluster`.
pub fn write_assignment_csv<W: Write>(
    out: &mut W,
    lex: &MultiplexLexicon,
    assignments: &[&ClusterAssignment],
) -> Result<()> {
    writeln!(out, "word,method,cluster")?;
    for assignment in assignments {
        for (i, &label) in assignment.labels.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                lex.surface(WordId(i as u32)),
                assignment.method.name(),
                label
            )?;
        }
    }
    Ok(())
}

/// CSV: `k,inertia`.
pub fn write_elbow_csv<W: Write>(out: &mut W, selection: &ElbowSelection) -> Result<()> {
    writeln!(out, "k,inertia")?;
    for (k, inertia) in &selection.curve {
        writeln!(out, "{},{}", k, inertia)?;
    }
    Ok(())
}

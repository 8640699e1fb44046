//! Core characterisation: separation metrics (conductance, cut ratio,
//! modularity), internal structure (edge density, hub dominance,
//! transitivity), degree-mixing curves, and bigram part-of-speech profiles.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexicon::{MultiplexLexicon, WordId};

/// Quality functions of one candidate core against the rest of the graph.
///
/// With `b` boundary edges (exactly one endpoint inside), `e_c` internal
/// edges and `e` total edges: conductance = b/(2*e_c + b), normalized cut
/// adds the complementary term b/(2*(e - e_c) + b), and modularity is the
/// two-block Q of {core, rest}. The `literal_*` fields are the node-count
/// reading of the same two ratios, kept for comparison only.
#[derive(Debug, Clone, Serialize)]
pub struct CoreQualityReport {
    pub core_size: usize,
    pub internal_edges: usize,
    pub boundary_edges: usize,
    pub total_edges: usize,
    pub conductance: f64,
    pub edge_density: f64,
    pub hub_dominance: f64,
    pub modularity: f64,
    pub cut_ratio: f64,
    pub transitivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_conductance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_cut_ratio: Option<f64>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn core_quality(lex: &MultiplexLexicon, core: &BTreeSet<WordId>) -> Result<CoreQualityReport> {
    core_quality_with(lex, core, false)
}

pub fn core_quality_with(
    lex: &MultiplexLexicon,
    core: &BTreeSet<WordId>,
    literal: bool,
) -> Result<CoreQualityReport> {
    if core.is_empty() {
        return Err(Error::EmptyCore);
    }
    let n = lex.word_count();
    let mut inside = vec![false; n];
    for &w in core {
        lex.word(w)?;
        inside[w.index()] = true;
    }

    let e = lex.edge_count();
    let mut internal = 0usize;
    let mut boundary = 0usize;
    for &(a, b) in lex.edges() {
        match (inside[a.index()], inside[b.index()]) {
            (true, true) => internal += 1,
            (true, false) | (false, true) => boundary += 1,
            (false, false) => {}
        }
    }

    let n_c = core.len();
    let (e_c, b) = (internal as f64, boundary as f64);
    let conductance = ratio(b, 2.0 * e_c + b);
    let cut_ratio = conductance + ratio(b, 2.0 * (e as f64 - e_c) + b);
    let edge_density = if n_c < 2 {
        0.0
    } else {
        e_c / (n_c as f64 * (n_c - 1) as f64 / 2.0)
    };

    // Internal degrees of core members.
    let mut internal_degree: BTreeMap<WordId, usize> = core.iter().map(|&w| (w, 0)).collect();
    for &(a, b) in lex.edges() {
        if inside[a.index()] && inside[b.index()] {
            *internal_degree.get_mut(&a).unwrap() += 1;
            *internal_degree.get_mut(&b).unwrap() += 1;
        }
    }
    let hub_dominance = if n_c == 1 {
        1.0
    } else {
        *internal_degree.values().max().unwrap() as f64 / (n_c - 1) as f64
    };

    // Two-block modularity of {core, rest}.
    let modularity = if e == 0 {
        0.0
    } else {
        let m = e as f64;
        let d_core: f64 = core.iter().map(|&w| lex.degree(w).unwrap() as f64).sum();
        let d_rest = 2.0 * m - d_core;
        let l_rest = e as f64 - e_c - b;
        (e_c / m - (d_core / (2.0 * m)).powi(2)) + (l_rest / m - (d_rest / (2.0 * m)).powi(2))
    };

    // Mean local clustering of core words inside the induced subgraph;
    // degree < 2 contributes 0, the mean divides by the full core size.
    let mut transitivity = 0.0;
    for &w in core {
        let k = internal_degree[&w];
        if k < 2 {
            continue;
        }
        let nbrs: Vec<WordId> = lex
            .neighbors(w)
            .unwrap()
            .iter()
            .copied()
            .filter(|v| inside[v.index()])
            .collect();
        let mut triangles = 0usize;
        for (i, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[i + 1..] {
                let key = if x <= y { (x, y) } else { (y, x) };
                if lex.edges().contains(&key) {
                    triangles += 1;
                }
            }
        }
        transitivity += 2.0 * triangles as f64 / (k as f64 * (k - 1) as f64);
    }
    transitivity /= n_c as f64;

    let (literal_conductance, literal_cut_ratio) = if literal {
        let c = n_c as f64;
        let lit_cond = ratio(c, 2.0 * e_c + c);
        (
            Some(lit_cond),
            Some(lit_cond + ratio(c, 2.0 * (e as f64 - e_c) + c)),
        )
    } else {
        (None, None)
    };

    Ok(CoreQualityReport {
        core_size: n_c,
        internal_edges: internal,
        boundary_edges: boundary,
        total_edges: e,
        conductance,
        edge_density,
        hub_dominance,
        modularity,
        cut_ratio,
        transitivity,
        literal_conductance,
        literal_cut_ratio,
    })
}

/// Knn(k) and C(k) curves plus their correlations, at node level (primary)
/// and over the aggregated curve points.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeCurves {
    /// degree -> (mean neighbor degree, contributing node count)
    pub knn: BTreeMap<usize, (f64, usize)>,
    /// degree -> (mean local clustering, contributing node count)
    pub ck: BTreeMap<usize, (f64, usize)>,
    pub r_knn_nodes: Option<f64>,
    pub r_c_nodes: Option<f64>,
    pub r_knn_curve: Option<f64>,
    pub r_c_curve: Option<f64>,
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Degree-mixing and clustering curves, optionally with a word set removed
/// (the induced subgraph on the remaining words). Degree-0 nodes never
/// contribute; clustering also needs degree >= 2. Zero-variance correlations
/// come back as `None`.
pub fn degree_curves(
    lex: &MultiplexLexicon,
    exclude: Option<&BTreeSet<WordId>>,
) -> Result<DegreeCurves> {
    let n = lex.word_count();
    let mut included = vec![true; n];
    if let Some(ex) = exclude {
        for &w in ex {
            lex.word(w)?;
            included[w.index()] = false;
        }
    }
    if !included.iter().any(|&x| x) {
        return Err(Error::EmptyGraph);
    }

    let adj: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            if !included[u] {
                return Vec::new();
            }
            lex.neighbors(WordId(u as u32))
                .unwrap()
                .iter()
                .map(|v| v.index())
                .filter(|&v| included[v])
                .collect()
        })
        .collect();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut knn_pairs: Vec<(f64, f64)> = Vec::new();
    let mut ck_pairs: Vec<(f64, f64)> = Vec::new();
    let mut knn_acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    let mut ck_acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();

    for u in 0..n {
        if !included[u] || deg[u] == 0 {
            continue;
        }
        let k = deg[u];
        let knn_u = adj[u].iter().map(|&v| deg[v] as f64).sum::<f64>() / k as f64;
        knn_pairs.push((k as f64, knn_u));
        let e = knn_acc.entry(k).or_insert((0.0, 0));
        e.0 += knn_u;
        e.1 += 1;

        if k >= 2 {
            let mut ties = 0usize;
            for (i, &x) in adj[u].iter().enumerate() {
                for &y in &adj[u][i + 1..] {
                    let key = if x <= y {
                        (WordId(x as u32), WordId(y as u32))
                    } else {
                        (WordId(y as u32), WordId(x as u32))
                    };
                    if lex.edges().contains(&key) {
                        ties += 1;
                    }
                }
            }
            let c_u = 2.0 * ties as f64 / (k as f64 * (k - 1) as f64);
            ck_pairs.push((k as f64, c_u));
            let e = ck_acc.entry(k).or_insert((0.0, 0));
            e.0 += c_u;
            e.1 += 1;
        }
    }

    let knn: BTreeMap<usize, (f64, usize)> = knn_acc
        .into_iter()
        .map(|(k, (sum, c))| (k, (sum / c as f64, c)))
        .collect();
    let ck: BTreeMap<usize, (f64, usize)> = ck_acc
        .into_iter()
        .map(|(k, (sum, c))| (k, (sum / c as f64, c)))
        .collect();

    let split = |pairs: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) {
        (
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    };
    let (kx, ky) = split(&knn_pairs);
    let (cx, cy) = split(&ck_pairs);
    let curve = |m: &BTreeMap<usize, (f64, usize)>| -> (Vec<f64>, Vec<f64>) {
        (
            m.keys().map(|&k| k as f64).collect(),
            m.values().map(|&(v, _)| v).collect(),
        )
    };
    let (kcx, kcy) = curve(&knn);
    let (ccx, ccy) = curve(&ck);

    Ok(DegreeCurves {
        r_knn_nodes: pearson(&kx, &ky),
        r_c_nodes: pearson(&cx, &cy),
        r_knn_curve: pearson(&kcx, &kcy),
        r_c_curve: pearson(&ccx, &ccy),
        knn,
        ck,
    })
}

/// CSV: `k,knn_mean,ck_mean,count` (count = nodes contributing to Knn;
/// blank cells where a curve has no value at that degree).
pub fn write_curves_csv<W: Write>(out: &mut W, curves: &DegreeCurves) -> Result<()> {
    writeln!(out, "k,knn_mean,ck_mean,count")?;
    let degrees: BTreeSet<usize> = curves.knn.keys().chain(curves.ck.keys()).copied().collect();
    for k in degrees {
        let knn = curves
            .knn
            .get(&k)
            .map(|(m, _)| m.to_string())
            .unwrap_or_default();
        let ck = curves
            .ck
            .get(&k)
            .map(|(m, _)| m.to_string())
            .unwrap_or_default();
        let count = curves.knn.get(&k).map(|&(_, c)| c).unwrap_or(0);
        writeln!(out, "{k},{knn},{ck},{count}")?;
    }
    Ok(())
}

/// Unordered part-of-speech pair frequencies over the core's internal edges.
#[derive(Debug, Clone, Serialize)]
pub struct BigramProfile {
    /// pair label -> edge count; labels join the two tags in descending
    /// lexicographic order ("verb-noun", "noun-noun").
    pub pairs: BTreeMap<String, usize>,
    pub total: usize,
    /// Core words with no POS tag (their edges are excluded).
    pub missing_pos_words: usize,
    pub excluded_edges: usize,
}

impl BigramProfile {
    pub fn fraction(&self, pair: &str) -> f64 {
        ratio(
            self.pairs.get(pair).copied().unwrap_or(0) as f64,
            self.total as f64,
        )
    }
}

pub fn bigram_pos_profile(
    lex: &MultiplexLexicon,
    core: &BTreeSet<WordId>,
) -> Result<BigramProfile> {
    if core.is_empty() {
        return Err(Error::EmptyCore);
    }
    let n = lex.word_count();
    let mut inside = vec![false; n];
    for &w in core {
        lex.word(w)?;
        inside[w.index()] = true;
    }
    let missing_pos_words = core
        .iter()
        .filter(|&&w| lex.words()[w.index()].pos.is_none())
        .count();

    let mut pairs: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    let mut excluded = 0usize;
    for &(a, b) in lex.edges() {
        if !(inside[a.index()] && inside[b.index()]) {
            continue;
        }
        let (pa, pb) = (
            lex.words()[a.index()].pos.as_deref(),
            lex.words()[b.index()].pos.as_deref(),
        );
        match (pa, pb) {
            (Some(x), Some(y)) => {
                let key = if x >= y {
                    format!("{x}-{y}")
                } else {
                    format!("{y}-{x}")
                };
                *pairs.entry(key).or_default() += 1;
                total += 1;
            }
            _ => excluded += 1,
        }
    }
    if total == 0 {
        return Err(Error::NoCoreEdges);
    }
    Ok(BigramProfile {
        pairs,
        total,
        missing_pos_words,
        excluded_edges: excluded,
    })
}

/// CSV: `pair,count,fraction`.
pub fn write_bigrams_csv<W: Write>(out: &mut W, profile: &BigramProfile) -> Result<()> {
    writeln!(out, "pair,count,fraction")?;
    for (pair, count) in &profile.pairs {
        writeln!(
            out,
            "{},{},{}",
            pair,
            count,
            *count as f64 / profile.total as f64
        )?;
    }
    Ok(())
}

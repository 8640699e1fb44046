//! Multi-scale conformity: per-word, per-attribute assortative mixing summed
//! over BFS distance shells, damped by d^-alpha and normalized to [-1, 1].
//!
//! For a source word u with shells N(u,d) up to its eccentricity D(u):
//!
//! ```text
//! psi(u, a) = [ sum_d ( sum_{v in N(u,d)} I(u,v) * f(v) ) / (|N(u,d)| * d^a) ]
//!             / sum_d d^-a
//! ```
//!
//! where I(u,v) is +1 when the two words share the attribute bin and -1
//! otherwise, and f(v) is the fraction of v's direct neighbors sharing v's
//! own bin. D is taken per source as its maximum finite BFS distance, so
//! disconnected graphs keep the normalization meaningful; unreachable words
//! never contribute. Isolated words get psi = 0 and are flagged.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Attribute, MultiplexLexicon, WordId};

/// Conformity vector of one word, components ordered
/// (frequency, length, polysemy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformityProfile {
    pub word: WordId,
    pub scores: [f64; 3],
    /// No reachable neighbor; scores are the neutral 0.
    pub isolated: bool,
}

impl ConformityProfile {
    pub fn score(&self, attribute: Attribute) -> f64 {
        self.scores[attribute_index(attribute)]
    }
}

pub(crate) fn attribute_index(attribute: Attribute) -> usize {
    match attribute {
        Attribute::Frequency => 0,
        Attribute::Length => 1,
        Attribute::Polysemy => 2,
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// d^alpha, exact for integral alpha so the analytic cases stay exact.
fn distance_weight(d: usize, alpha: f64) -> f64 {
    if alpha.fract() == 0.0 && (0.0..=64.0).contains(&alpha) {
        (d as f64).powi(alpha as i32)
    } else {
        (d as f64).powf(alpha)
    }
}

fn labels(lex: &MultiplexLexicon, attribute: Attribute) -> Result<Vec<u8>> {
    lex.words()
        .iter()
        .map(|w| {
            w.bin(attribute).ok_or_else(|| Error::UnbinnedWord {
                word: w.surface.clone(),
                attribute,
            })
        })
        .collect()
}

fn all_labels(lex: &MultiplexLexicon) -> Result<[Vec<u8>; 3]> {
    Ok([
        labels(lex, Attribute::Frequency)?,
        labels(lex, Attribute::Length)?,
        labels(lex, Attribute::Polysemy)?,
    ])
}

/// Fraction of v's direct neighbors sharing v's own label; 0 when isolated.
fn fractions(lex: &MultiplexLexicon, label: &[u8]) -> Vec<f64> {
    lex.words()
        .iter()
        .map(|w| {
            let nbrs = lex.neighbors(w.id).expect("registered");
            if nbrs.is_empty() {
                return 0.0;
            }
            let same = nbrs
                .iter()
                .filter(|&&v| label[v.index()] == label[w.id.index()])
                .count();
            same as f64 / nbrs.len() as f64
        })
        .collect()
}

/// Per-node BFS shells, reusable across labelings that keep the topology
/// (the label-shuffle null model recomputes only label sums).
pub(crate) struct ShellCache {
    shells: Vec<Vec<Vec<u32>>>,
}

impl ShellCache {
    pub(crate) fn build(lex: &MultiplexLexicon) -> Self {
        let shells = (0..lex.word_count())
            .into_par_iter()
            .map(|u| lex.bfs_shells(u))
            .collect();
        ShellCache { shells }
    }
}

/// psi for every word and all three attributes; bool = isolated flag.
pub(crate) fn conformity_matrix(
    lex: &MultiplexLexicon,
    alpha: f64,
    cache: &ShellCache,
) -> Result<Vec<([f64; 3], bool)>> {
    validate_alpha(alpha)?;
    let label = all_labels(lex)?;
    let frac: [Vec<f64>; 3] = [
        fractions(lex, &label[0]),
        fractions(lex, &label[1]),
        fractions(lex, &label[2]),
    ];
    let rows = (0..lex.word_count())
        .into_par_iter()
        .map(|u| {
            let shells = &cache.shells[u];
            if shells.is_empty() {
                return ([0.0; 3], true);
            }
            let mut num = [0.0f64; 3];
            let mut den = 0.0f64;
            for (level, shell) in shells.iter().enumerate() {
                let d = level + 1;
                debug_assert!(!shell.is_empty(), "BFS shells have no gaps");
                let w = distance_weight(d, alpha);
                let size = shell.len() as f64;
                for a in 0..3 {
                    let lu = label[a][u];
                    let mut sum = 0.0f64;
                    for &v in shell {
                        let f = frac[a][v as usize];
                        if label[a][v as usize] == lu {
                            sum += f;
                        } else {
                            sum -= f;
                        }
                    }
                    num[a] += sum / (size * w);
                }
                den += 1.0 / w;
            }
            let mut scores = [0.0; 3];
            for a in 0..3 {
                scores[a] = (num[a] / den).clamp(-1.0, 1.0);
            }
            (scores, false)
        })
        .collect();
    Ok(rows)
}

/// Fraction of `v`'s first-order neighbors sharing `v`'s bin for the
/// attribute; 0 for an isolated word.
pub fn node_similarity_fraction(
    lex: &MultiplexLexicon,
    v: WordId,
    attribute: Attribute,
) -> Result<f64> {
    let word = lex.word(v)?;
    let lv = word.bin(attribute).ok_or_else(|| Error::UnbinnedWord {
        word: word.surface.clone(),
        attribute,
    })?;
    let nbrs = lex.neighbors(v)?;
    if nbrs.is_empty() {
        return Ok(0.0);
    }
    let mut same = 0usize;
    for &n in nbrs {
        let nb = lex.word(n)?;
        let ln = nb.bin(attribute).ok_or_else(|| Error::UnbinnedWord {
            word: nb.surface.clone(),
            attribute,
        })?;
        if ln == lv {
            same += 1;
        }
    }
    Ok(same as f64 / nbrs.len() as f64)
}

/// Conformity of a single word for one attribute. Isolated words score 0;
/// use [`conformity_profiles`] to get the flag.
pub fn conformity(
    lex: &MultiplexLexicon,
    u: WordId,
    attribute: Attribute,
    alpha: f64,
) -> Result<f64> {
    validate_alpha(alpha)?;
    lex.word(u)?;
    let label = labels(lex, attribute)?;
    let frac = fractions(lex, &label);
    let shells = lex.bfs_shells(u.index());
    if shells.is_empty() {
        return Ok(0.0);
    }
    let lu = label[u.index()];
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (level, shell) in shells.iter().enumerate() {
        let d = level + 1;
        let w = distance_weight(d, alpha);
        let mut sum = 0.0f64;
        for &v in shell {
            let f = frac[v as usize];
            if label[v as usize] == lu {
                sum += f;
            } else {
                sum -= f;
            }
        }
        num += sum / (shell.len() as f64 * w);
        den += 1.0 / w;
    }
    Ok((num / den).clamp(-1.0, 1.0))
}

/// One conformity vector per word, components (frequency, length, polysemy).
pub fn conformity_profiles(lex: &MultiplexLexicon, alpha: f64) -> Result<Vec<ConformityProfile>> {
    let cache = ShellCache::build(lex);
    let rows = conformity_matrix(lex, alpha, &cache)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (scores, isolated))| ConformityProfile {
            word: WordId(i as u32),
            scores,
            isolated,
        })
        .collect())
}

/// Group one attribute's scores by that attribute's bin, for external
/// KDE/ridgeline plotting. Every realized bin index gets a key, empty or not.
pub fn export_distribution(
    lex: &MultiplexLexicon,
    profiles: &[ConformityProfile],
    attribute: Attribute,
) -> BTreeMap<u8, Vec<f64>> {
    let max_bin = lex.words().iter().filter_map(|w| w.bin(attribute)).max();
    let mut groups: BTreeMap<u8, Vec<f64>> = match max_bin {
        Some(m) => (0..=m).map(|b| (b, Vec::new())).collect(),
        None => BTreeMap::new(),
    };
    for p in profiles {
        if let Some(bin) = lex.words()[p.word.index()].bin(attribute) {
            groups.get_mut(&bin).unwrap().push(p.score(attribute));
        }
    }
    groups
}

/// CSV: `word,psi_frequency,psi_length,psi_polysemy`.
pub fn write_profiles_csv<W: Write>(
    out: &mut W,
    lex: &MultiplexLexicon,
    profiles: &[ConformityProfile],
) -> Result<()> {
    writeln!(out, "word,psi_frequency,psi_length,psi_polysemy")?;
    for p in profiles {
        writeln!(
            out,
            "{},{},{},{}",
            lex.surface(p.word),
            p.scores[0],
            p.scores[1],
            p.scores[2]
        )?;
    }
    Ok(())
}

/// CSV: `attribute,bin,score`, grouped by attribute then bin.
pub fn write_distribution_csv<W: Write>(
    out: &mut W,
    lex: &MultiplexLexicon,
    profiles: &[ConformityProfile],
) -> Result<()> {
    writeln!(out, "attribute,bin,score")?;
    for attribute in Attribute::ALL {
        for (bin, scores) in export_distribution(lex, profiles, attribute) {
            for s in scores {
                writeln!(out, "{},{},{}", attribute, bin, s)?;
            }
        }
    }
    Ok(())
}

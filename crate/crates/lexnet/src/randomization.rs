//! Null models for conformity: label shuffling (topology fixed) and
//! configuration-model rewiring (degrees and labels fixed), plus ensemble
//! baselines averaged over seeded instances.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformity::{conformity_matrix, ShellCache};
use crate::error::{Error, Result};
use crate::lexicon::{Attribute, LayerId, MultiplexLexicon, WordId};

/// Full-matching resamples before falling back to repair swaps.
const MATCH_RETRIES: u32 = 200;
/// Repair swap attempts after the last resample.
const REPAIR_ATTEMPTS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullModel {
    LabelShuffle,
    Rewire,
}

impl NullModel {
    pub fn name(self) -> &'static str {
        match self {
            NullModel::LabelShuffle => "label_shuffle",
            NullModel::Rewire => "rewire",
        }
    }
}

/// Shuffle one attribute's bins independently, or the whole feature tuple
/// jointly (the ensemble baseline uses the joint mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShuffleScope {
    Attribute(Attribute),
    Joint,
}

/// Permute bin labels across words, keeping the topology untouched.
pub fn shuffle_labels(lex: &MultiplexLexicon, scope: ShuffleScope, seed: u64) -> MultiplexLexicon {
    let n = lex.word_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    let old = lex.words();
    let mut words = old.to_vec();
    for (i, w) in words.iter_mut().enumerate() {
        let src = &old[perm[i]];
        match scope {
            ShuffleScope::Joint => {
                w.freq_bin = src.freq_bin;
                w.length_bin = src.length_bin;
                w.polysemy_bin = src.polysemy_bin;
            }
            ShuffleScope::Attribute(a) => {
                if let Some(bin) = src.bin(a) {
                    w.set_bin(a, bin);
                }
            }
        }
    }
    lex.with_words(words)
}

fn count_violations(edges: &[(u32, u32)]) -> usize {
    let mut seen = BTreeSet::new();
    let mut bad = 0;
    for &(a, b) in edges {
        if a == b {
            bad += 1;
            continue;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if !seen.insert(key) {
            bad += 1;
        }
    }
    bad
}

/// Degree-preserving stub-matching rewire of the aggregate graph. Word
/// records (and so all labels) are untouched; the result carries a single
/// `rewired` layer holding the new edges.
///
/// Matchings with self-loops or multi-edges are resampled up to 200 times,
/// then repaired with local double-edge swaps; both keep the degree sequence
/// exact. Pathological sequences that still cannot be made simple fail.
pub fn rewire_configuration(lex: &MultiplexLexicon, seed: u64) -> Result<MultiplexLexicon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<u32> = Vec::with_capacity(2 * lex.edge_count());
    for w in lex.words() {
        let deg = lex.degree(w.id).expect("registered");
        stubs.extend(std::iter::repeat_n(w.id.0, deg));
    }

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut violations = usize::MAX;
    for _ in 0..MATCH_RETRIES {
        stubs.shuffle(&mut rng);
        edges = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        violations = count_violations(&edges);
        if violations == 0 {
            break;
        }
    }

    if violations > 0 {
        let mut attempts = 0;
        while violations > 0 && attempts < REPAIR_ATTEMPTS {
            attempts += 1;
            // Pick a violating edge and a random partner for a double swap.
            let bad_idx = {
                let mut seen = BTreeSet::new();
                edges
                    .iter()
                    .position(|&(a, b)| a == b || !seen.insert(if a < b { (a, b) } else { (b, a) }))
                    .expect("violations > 0")
            };
            let other_idx = rng.gen_range(0..edges.len());
            if other_idx == bad_idx {
                continue;
            }
            let (a, b) = edges[bad_idx];
            let (c, d) = edges[other_idx];
            let (new1, new2) = if rng.gen_bool(0.5) {
                ((a, d), (c, b))
            } else {
                ((a, c), (b, d))
            };
            edges[bad_idx] = new1;
            edges[other_idx] = new2;
            let now = count_violations(&edges);
            if now < violations {
                violations = now;
            } else {
                edges[bad_idx] = (a, b);
                edges[other_idx] = (c, d);
            }
        }
        if violations > 0 {
            return Err(Error::RewireFailure {
                retries: MATCH_RETRIES + attempts,
            });
        }
    }

    let mut layers = BTreeMap::new();
    layers.insert(
        LayerId::from("rewired"),
        edges
            .into_iter()
            .map(|(a, b)| (WordId(a), WordId(b)))
            .collect::<Vec<_>>(),
    );
    let rewired = lex.with_layers(layers)?;
    debug_assert_eq!(
        sorted_degrees(lex),
        sorted_degrees(&rewired),
        "rewiring must preserve the degree sequence"
    );
    Ok(rewired)
}

fn sorted_degrees(lex: &MultiplexLexicon) -> Vec<usize> {
    let mut d: Vec<usize> = lex
        .words()
        .iter()
        .map(|w| lex.degree(w.id).unwrap())
        .collect();
    d.sort_unstable();
    d
}

/// One randomized instance under the given null model.
pub fn null_instance(
    lex: &MultiplexLexicon,
    model: NullModel,
    seed: u64,
) -> Result<MultiplexLexicon> {
    match model {
        NullModel::LabelShuffle => Ok(shuffle_labels(lex, ShuffleScope::Joint, seed)),
        NullModel::Rewire => rewire_configuration(lex, seed),
    }
}

/// Ensemble baseline: per-word mean (and sample std) conformity per
/// attribute across seeded null instances. Instance `i` uses `seed + i`.
#[derive(Debug, Clone, Serialize)]
pub struct NullEnsembleReport {
    pub model: NullModel,
    /// Instances that actually contributed.
    pub instances: usize,
    pub seed: u64,
    pub alpha: f64,
    pub mean: Vec<[f64; 3]>,
    pub std: Vec<[f64; 3]>,
    /// Seeds of rewire instances skipped after repeated failure.
    pub skipped: Vec<u64>,
}

pub fn ensemble_conformity(
    lex: &MultiplexLexicon,
    model: NullModel,
    instances: usize,
    alpha: f64,
    seed: u64,
) -> Result<NullEnsembleReport> {
    if instances == 0 {
        return Err(Error::InvalidInstances);
    }
    // Surface bin/alpha problems on the original lexicon before any
    // instance work; per-instance errors below can only be rewire failures.
    let base_cache = ShellCache::build(lex);
    conformity_matrix(lex, alpha, &base_cache)?;

    let results: Vec<(u64, Option<Vec<[f64; 3]>>)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let instance_seed = seed.wrapping_add(i as u64);
            match model {
                NullModel::LabelShuffle => {
                    let inst = shuffle_labels(lex, ShuffleScope::Joint, instance_seed);
                    // topology unchanged: reuse the BFS shells
                    let rows = conformity_matrix(&inst, alpha, &base_cache)
                        .expect("validated above")
                        .into_iter()
                        .map(|(scores, _)| scores)
                        .collect();
                    (instance_seed, Some(rows))
                }
                NullModel::Rewire => match rewire_configuration(lex, instance_seed) {
                    Ok(inst) => {
                        let cache = ShellCache::build(&inst);
                        let rows = conformity_matrix(&inst, alpha, &cache)
                            .expect("validated above")
                            .into_iter()
                            .map(|(scores, _)| scores)
                            .collect();
                        (instance_seed, Some(rows))
                    }
                    Err(_) => (instance_seed, None),
                },
            }
        })
        .collect();

    let n_words = lex.word_count();
    let mut skipped = Vec::new();
    let mut kept: Vec<&Vec<[f64; 3]>> = Vec::new();
    for (s, rows) in &results {
        match rows {
            Some(r) => kept.push(r),
            None => skipped.push(*s),
        }
    }
    if kept.is_empty() {
        return Err(Error::RewireFailure {
            retries: MATCH_RETRIES + REPAIR_ATTEMPTS,
        });
    }

    let k = kept.len();
    let mut mean = vec![[0.0f64; 3]; n_words];
    for rows in &kept {
        for (w, scores) in rows.iter().enumerate() {
            for a in 0..3 {
                mean[w][a] += scores[a];
            }
        }
    }
    for m in &mut mean {
        for v in m.iter_mut() {
            *v /= k as f64;
        }
    }
    let mut std = vec![[0.0f64; 3]; n_words];
    if k >= 2 {
        for rows in &kept {
            for (w, scores) in rows.iter().enumerate() {
                for a in 0..3 {
                    let d = scores[a] - mean[w][a];
                    std[w][a] += d * d;
                }
            }
        }
        for s in &mut std {
            for v in s.iter_mut() {
                *v = (*v / (k - 1) as f64).sqrt();
            }
        }
    }

    Ok(NullEnsembleReport {
        model,
        instances: k,
        seed,
        alpha,
        mean,
        std,
        skipped,
    })
}

/// CSV: `word,attribute,mean_psi_null,model,instances,seed`.
pub fn write_null_report_csv<W: Write>(
    out: &mut W,
    lex: &MultiplexLexicon,
    report: &NullEnsembleReport,
) -> Result<()> {
    writeln!(out, "word,attribute,mean_psi_null,model,instances,seed")?;
    for (w, word) in lex.words().iter().enumerate() {
        for attribute in Attribute::ALL {
            let a = crate::conformity::attribute_index(attribute);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                word.surface,
                attribute,
                report.mean[w][a],
                report.model.name(),
                report.instances,
                report.seed
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformity::conformity_profiles;
    use crate::testutil::binned;

    #[test]
    fn shuffle_preserves_topology_and_label_multiset() {
        let lex = binned(
            &[(0, 0, 0), (1, 1, 1), (2, 2, 2), (0, 1, 2)],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let shuffled = shuffle_labels(&lex, ShuffleScope::Joint, 7);
        assert_eq!(lex.edges(), shuffled.edges());
        let mut before: Vec<_> = lex.words().iter().map(|w| w.freq_bin).collect();
        let mut after: Vec<_> = shuffled.words().iter().map(|w| w.freq_bin).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn shuffle_is_seed_deterministic() {
        let lex = binned(
            &[(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 3, 3), (4, 4, 4)],
            &[(0, 1), (1, 2), (2, 3), (3, 4)],
        );
        let a = shuffle_labels(&lex, ShuffleScope::Joint, 99);
        let b = shuffle_labels(&lex, ShuffleScope::Joint, 99);
        assert_eq!(a.words(), b.words());
    }

    #[test]
    fn attribute_scope_leaves_other_attributes_alone() {
        let lex = binned(
            &[(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 3, 3), (4, 4, 4)],
            &[(0, 1), (1, 2), (2, 3), (3, 4)],
        );
        let shuffled = shuffle_labels(&lex, ShuffleScope::Attribute(Attribute::Length), 5);
        for (orig, shuf) in lex.words().iter().zip(shuffled.words()) {
            assert_eq!(orig.freq_bin, shuf.freq_bin);
            assert_eq!(orig.polysemy_bin, shuf.polysemy_bin);
        }
    }

    #[test]
    fn rewire_preserves_degree_sequence_and_labels() {
        let lex = binned(
            &[(0, 0, 0), (1, 1, 1), (2, 2, 2), (0, 1, 2), (1, 2, 0)],
            &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)],
        );
        let rewired = rewire_configuration(&lex, 3).unwrap();
        assert_eq!(sorted_degrees(&lex), sorted_degrees(&rewired));
        assert_eq!(lex.words(), rewired.words());
        assert_eq!(rewired.edge_count(), lex.edge_count());
    }

    #[test]
    fn star_rewires_to_itself() {
        // K_{1,3}: the only simple graph with degrees (3,1,1,1).
        let lex = binned(
            &[(0, 0, 0), (0, 0, 0), (0, 0, 0), (0, 0, 0)],
            &[(0, 1), (0, 2), (0, 3)],
        );
        for seed in 0..20 {
            let rewired = rewire_configuration(&lex, seed).unwrap();
            assert_eq!(rewired.edges(), lex.edges());
        }
    }

    #[test]
    fn four_cycle_rewires_to_a_four_cycle() {
        let lex = binned(
            &[(0, 0, 0), (0, 0, 0), (0, 0, 0), (0, 0, 0)],
            &[(0, 1), (1, 2), (2, 3), (0, 3)],
        );
        for seed in 0..20 {
            let rewired = rewire_configuration(&lex, seed).unwrap();
            assert_eq!(rewired.edge_count(), 4);
            for w in rewired.words() {
                assert_eq!(rewired.degree(w.id).unwrap(), 2);
            }
        }
    }

    #[test]
    fn single_instance_ensemble_equals_single_shot() {
        let lex = binned(
            &[(0, 0, 0), (1, 1, 1), (0, 0, 0), (1, 1, 1)],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let seed = 11;
        let report = ensemble_conformity(&lex, NullModel::LabelShuffle, 1, 2.0, seed).unwrap();
        let instance = null_instance(&lex, NullModel::LabelShuffle, seed).unwrap();
        let profiles = conformity_profiles(&instance, 2.0).unwrap();
        for (w, p) in profiles.iter().enumerate() {
            assert_eq!(report.mean[w], p.scores);
        }
    }

    #[test]
    fn homogeneous_labels_average_to_exactly_one() {
        let lex = binned(
            &[(1, 1, 1), (1, 1, 1), (1, 1, 1)],
            &[(0, 1), (1, 2), (0, 2)],
        );
        let report = ensemble_conformity(&lex, NullModel::LabelShuffle, 25, 2.0, 4).unwrap();
        for m in &report.mean {
            assert_eq!(*m, [1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn ensembles_are_seed_deterministic() {
        let lex = binned(
            &[(0, 0, 0), (1, 1, 1), (0, 1, 0), (1, 0, 1)],
            &[(0, 1), (1, 2), (2, 3), (0, 3)],
        );
        for model in [NullModel::LabelShuffle, NullModel::Rewire] {
            let a = ensemble_conformity(&lex, model, 10, 2.0, 21).unwrap();
            let b = ensemble_conformity(&lex, model, 10, 2.0, 21).unwrap();
            assert_eq!(a.mean, b.mean);
            assert_eq!(a.std, b.std);
        }
    }

    #[test]
    fn zero_instances_rejected() {
        let lex = binned(&[(0, 0, 0), (0, 0, 0)], &[(0, 1)]);
        assert!(matches!(
            ensemble_conformity(&lex, NullModel::Rewire, 0, 2.0, 1),
            Err(Error::InvalidInstances)
        ));
    }
}

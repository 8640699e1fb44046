//! Property tests for the structural invariants that hold for arbitrary
//! inputs, plus the independent enumeration oracle for quantile binning.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lexnet::conformity::conformity_profiles;
use lexnet::evaluation::{confusion, metrics};
use lexnet::ingest::{
    assign_aoa_bins, bin_features, build_normative_rank, BinningSpec, NormativeRank,
};
use lexnet::lexicon::{LayerId, MultiplexLexicon, WordId, WordRecord};
use lexnet::walks::{jaccard_similarity, Strategy, WalkTrace};

use common::binned_lexicon;

fn lexicon_from_pairs(n: usize, pairs: &[(usize, usize)]) -> MultiplexLexicon {
    let edges: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| (a % n, b % n))
        .filter(|&(a, b)| a != b)
        .collect();
    binned_lexicon(&vec![(0, 0, 0); n], &edges)
}

proptest! {
    #[test]
    fn degree_sum_is_twice_edge_count(
        n in 2usize..20,
        pairs in prop::collection::vec((0usize..20, 0usize..20), 0..60),
    ) {
        let lex = lexicon_from_pairs(n, &pairs);
        let degree_sum: usize = lex
            .words()
            .iter()
            .map(|w| lex.degree(w.id).unwrap())
            .sum();
        prop_assert_eq!(degree_sum, 2 * lex.edge_count());
    }

    #[test]
    fn bfs_satisfies_triangle_inequality(
        n in 3usize..14,
        pairs in prop::collection::vec((0usize..14, 0usize..14), 0..40),
    ) {
        let lex = lexicon_from_pairs(n, &pairs);
        let dist: Vec<BTreeMap<WordId, u32>> = (0..n)
            .map(|u| lex.bfs_distances(WordId(u as u32)).unwrap())
            .collect();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (ab, bc, ac) = (
                        dist[a].get(&WordId(b as u32)),
                        dist[b].get(&WordId(c as u32)),
                        dist[a].get(&WordId(c as u32)),
                    );
                    if let (Some(&ab), Some(&bc)) = (ab, bc) {
                        let ac = *ac.expect("reachable through b");
                        prop_assert!(ac <= ab + bc);
                    }
                }
            }
        }
    }

    #[test]
    fn aggregate_ignores_layer_insertion_order(
        pairs in prop::collection::vec((0usize..10, 0usize..10), 1..30),
        split in 1usize..5,
    ) {
        let n = 10;
        let edges: Vec<(WordId, WordId)> = pairs
            .iter()
            .map(|&(a, b)| (WordId((a % n) as u32), WordId((b % n) as u32)))
            .filter(|(a, b)| a != b)
            .collect();
        prop_assume!(!edges.is_empty());
        let chunks: Vec<Vec<(WordId, WordId)>> = edges
            .chunks(split.max(1))
            .map(|c| c.to_vec())
            .collect();
        let make = |order: Vec<usize>| {
            let words: Vec<WordRecord> = (0..n)
                .map(|i| WordRecord::new(WordId(i as u32), format!("w{i}")))
                .collect();
            let mut layers = BTreeMap::new();
            for &i in &order {
                layers.insert(LayerId::new(format!("layer{i}")), chunks[i].clone());
            }
            MultiplexLexicon::build(words, layers).unwrap()
        };
        let forward = make((0..chunks.len()).collect());
        let backward = make((0..chunks.len()).rev().collect());
        prop_assert_eq!(forward.edges(), backward.edges());
    }

    #[test]
    fn binning_covers_every_record_with_nonempty_bins(
        values in prop::collection::vec(0u64..30, 2..40),
        q in 2usize..6,
    ) {
        let mut records: Vec<WordRecord> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut w = WordRecord::new(WordId(i as u32), format!("w{i}"));
                w.freq_raw = v;
                w.length_raw = (v % 3) as u32;
                w.polysemy_raw = (v % 2) as u32;
                w
            })
            .collect();
        let spec = BinningSpec {
            frequency_bins: q,
            length_bins: 2,
            polysemy_bins: 2,
            ..BinningSpec::default()
        };
        let outcome = bin_features(&mut records, &spec).unwrap();
        let n_bins = outcome.bin_counts[&lexnet::lexicon::Attribute::Frequency];
        let mut counts = vec![0usize; n_bins];
        for r in &records {
            counts[r.freq_bin.unwrap() as usize] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c > 0), "bins {counts:?}");
        // bins ordered by raw value
        for a in &records {
            for b in &records {
                if a.freq_raw < b.freq_raw {
                    prop_assert!(a.freq_bin.unwrap() <= b.freq_bin.unwrap());
                }
            }
        }
    }

    #[test]
    fn rank_is_a_deterministic_permutation(
        probs in prop::collection::vec((18u32..30, 0.0f64..1.0), 1..25),
    ) {
        let records: Vec<WordRecord> = probs
            .iter()
            .enumerate()
            .map(|(i, &(m, p))| {
                let mut w = WordRecord::new(WordId(i as u32), format!("w{i}"));
                w.prod_prob.insert(m, p);
                w.prod_prob.insert(m + 2, (p * 1.5).min(1.0));
                w
            })
            .collect();
        let a = build_normative_rank(&records, 0.5).unwrap();
        let b = build_normative_rank(&records, 0.5).unwrap();
        prop_assert_eq!(&a.rank.order, &b.rank.order);
        let mut sorted = a.rank.order.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), a.rank.order.len());
        prop_assert_eq!(a.rank.order.len() + a.never_produced.len(), records.len());
        // months ascending along the rank
        for w in a.rank.aoa_month.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn raising_threshold_never_lowers_aoa(
        probs in prop::collection::vec(0.0f64..1.0, 3..10),
        lo in 0.2f64..0.5,
        hi in 0.5f64..0.9,
    ) {
        let mut w = WordRecord::new(WordId(0), "w");
        for (i, &p) in probs.iter().enumerate() {
            w.prod_prob.insert(18 + i as u32, p);
        }
        let records = vec![w];
        let low = build_normative_rank(&records, lo).unwrap().rank;
        let high = build_normative_rank(&records, hi).unwrap().rank;
        if let (Some(&a), Some(&b)) = (low.aoa_month.first(), high.aoa_month.first()) {
            prop_assert!(a <= b);
        } else {
            // crossed at low threshold or not at all; never the reverse
            prop_assert!(high.aoa_month.is_empty() || !low.aoa_month.is_empty());
        }
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(
        a in (0u8..5, 0u8..5, 0u8..5),
        b in (0u8..5, 0u8..5, 0u8..5),
    ) {
        let mk = |t: (u8, u8, u8), id: u32| {
            let mut w = WordRecord::new(WordId(id), format!("w{id}"));
            w.freq_bin = Some(t.0);
            w.length_bin = Some(t.1);
            w.polysemy_bin = Some(t.2);
            w
        };
        let (x, y) = (mk(a, 0), mk(b, 1));
        let s = jaccard_similarity(&x, &y);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, jaccard_similarity(&y, &x));
        if a == b {
            prop_assert_eq!(s, 1.0);
        }
    }
}

/// Enumeration oracle for quantile binning: all tie-consistent contiguous
/// partitions, ranked by (max bin size, total |cum*q - i*n|, then preferring
/// later cuts). Entirely independent of the engine's DP.
fn binning_oracle(values: &[u64], q: usize) -> Vec<u8> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut blocks: Vec<(u64, usize)> = Vec::new();
    for v in sorted {
        match blocks.last_mut() {
            Some((bv, c)) if *bv == v => *c += 1,
            _ => blocks.push((v, 1)),
        }
    }
    let b = blocks.len();
    let assign = |cuts: &[usize]| -> Vec<u8> {
        let bin_of: BTreeMap<u64, u8> = blocks
            .iter()
            .enumerate()
            .map(|(i, &(v, _))| {
                let bin = cuts.iter().filter(|&&c| i >= c).count() as u8;
                (v, bin)
            })
            .collect();
        values.iter().map(|v| bin_of[v]).collect()
    };
    if b <= q {
        return assign(&(1..b).collect::<Vec<_>>());
    }
    let n: usize = values.len();
    let prefix: Vec<usize> = std::iter::once(0)
        .chain(blocks.iter().scan(0, |acc, &(_, c)| {
            *acc += c;
            Some(*acc)
        }))
        .collect();

    // enumerate all (q-1)-subsets of cut positions 1..b-1
    let mut best: Option<(usize, u64, Vec<usize>)> = None;
    let mut cuts: Vec<usize> = (1..q).collect();
    loop {
        let mut max_size = prefix[cuts[0]];
        for w in cuts.windows(2) {
            max_size = max_size.max(prefix[w[1]] - prefix[w[0]]);
        }
        max_size = max_size.max(prefix[b] - prefix[*cuts.last().unwrap()]);
        let sumdev: u64 = cuts
            .iter()
            .enumerate()
            .map(|(i, &c)| ((prefix[c] * q) as i64 - ((i + 1) * n) as i64).unsigned_abs())
            .sum();
        let better = match &best {
            None => true,
            Some((bm, bd, bc)) => {
                (max_size, sumdev) < (*bm, *bd) || ((max_size, sumdev) == (*bm, *bd) && cuts > *bc)
            }
        };
        if better {
            best = Some((max_size, sumdev, cuts.clone()));
        }
        // next combination
        let mut i = q - 1;
        loop {
            if i == 0 {
                return assign(&best.unwrap().2);
            }
            i -= 1;
            if cuts[i] < b - (q - 1 - i) {
                cuts[i] += 1;
                for j in i + 1..q - 1 {
                    cuts[j] = cuts[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[test]
fn binning_matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1A5);
    for trial in 0..300 {
        let n = rng.gen_range(2..=16);
        let spread = rng.gen_range(2..=12u64);
        let values: Vec<u64> = (0..n).map(|_| rng.gen_range(0..spread)).collect();
        let q = rng.gen_range(2..=5usize);
        let mut records: Vec<WordRecord> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut w = WordRecord::new(WordId(i as u32), format!("w{i}"));
                w.freq_raw = v;
                w.length_raw = v as u32;
                w.polysemy_raw = v as u32;
                w
            })
            .collect();
        let spec = BinningSpec {
            frequency_bins: q,
            length_bins: q,
            polysemy_bins: q,
            ..BinningSpec::default()
        };
        bin_features(&mut records, &spec).unwrap();
        let engine: Vec<u8> = records.iter().map(|r| r.freq_bin.unwrap()).collect();
        let oracle = binning_oracle(&values, q);
        assert_eq!(engine, oracle, "trial {trial}: values {values:?} q {q}");
    }
}

#[test]
fn conformity_stays_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0F0);
    for _ in 0..60 {
        let n = rng.gen_range(2..=20);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.25) {
                    edges.push((a, b));
                }
            }
        }
        let bins: Vec<(u8, u8, u8)> = (0..n)
            .map(|_| {
                (
                    rng.gen_range(0..4),
                    rng.gen_range(0..3),
                    rng.gen_range(0..4),
                )
            })
            .collect();
        let lex = binned_lexicon(&bins, &edges);
        for alpha in [0.0, 0.7, 2.0, 5.0] {
            for p in conformity_profiles(&lex, alpha).unwrap() {
                for s in p.scores {
                    assert!((-1.0..=1.0).contains(&s), "psi {s} out of range");
                }
            }
        }
    }
}

#[test]
fn cdi_confusions_partition_normative_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFACE);
    for _ in 0..40 {
        let n = rng.gen_range(6..=24);
        let cdis = ["a", "b", "c"];
        let lex = binned_lexicon(&vec![(0, 0, 0); n], &[(0, 1)]);
        let mut words = lex.words().to_vec();
        for (i, w) in words.iter_mut().enumerate() {
            w.cdi = if i < 3 {
                Some(cdis[i].to_string()) // every label inhabited
            } else if rng.gen_bool(0.8) {
                Some(cdis[rng.gen_range(0..3)].to_string())
            } else {
                None
            };
        }
        let lex = {
            let mut layers = BTreeMap::new();
            layers.insert(LayerId::from("l"), vec![(WordId(0), WordId(1))]);
            MultiplexLexicon::build(words, layers).unwrap()
        };

        let mut order: Vec<WordId> = (0..n as u32).map(WordId).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut months: Vec<u32> = (0..n).map(|_| rng.gen_range(18..30)).collect();
        months.sort_unstable();
        let mut rank = NormativeRank {
            order,
            aoa_month: months,
            bins: Vec::new(),
        };
        assign_aoa_bins(&mut rank, &[21, 25]).unwrap();

        let mut trace_order: Vec<WordId> = (0..n as u32).map(WordId).collect();
        trace_order.shuffle(&mut rng);
        let trace = WalkTrace {
            strategy: Strategy::Random,
            seed: 0,
            order: trace_order,
            epsilon_restarts: 0,
        };

        for bin in rank.bins.clone() {
            let mut lhs = 0usize;
            for cdi in cdis {
                let cell = confusion(&lex, &trace, &rank, cdi, &bin.label).unwrap();
                lhs += cell.true_positives + cell.false_negatives;
            }
            let rhs = rank.order[bin.start..bin.end]
                .iter()
                .filter(|w| lex.words()[w.index()].cdi.is_some())
                .count();
            assert_eq!(lhs, rhs, "bin {}", bin.label);
        }
    }
}

#[test]
fn metrics_are_invariant_under_word_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD00D);
    for _ in 0..25 {
        let n = rng.gen_range(6..=14);
        // original lexicon: word i has cdi iff i even
        let build = |perm: &[usize]| -> (MultiplexLexicon, Vec<u32>) {
            // position p holds original word perm[p]
            let words: Vec<WordRecord> = perm
                .iter()
                .enumerate()
                .map(|(p, &orig)| {
                    let mut w = WordRecord::new(WordId(p as u32), format!("w{orig}"));
                    w.cdi = (orig % 2 == 0).then(|| "even".to_string());
                    w
                })
                .collect();
            let mut inv = vec![0u32; n];
            for (p, &orig) in perm.iter().enumerate() {
                inv[orig] = p as u32;
            }
            let mut layers = BTreeMap::new();
            layers.insert(LayerId::from("l"), vec![(WordId(inv[0]), WordId(inv[1]))]);
            (MultiplexLexicon::build(words, layers).unwrap(), inv)
        };

        let identity: Vec<usize> = (0..n).collect();
        let mut perm = identity.clone();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng);

        let (lex_a, inv_a) = build(&identity);
        let (lex_b, inv_b) = build(&perm);

        let mut rank_order: Vec<usize> = (0..n).collect();
        rank_order.shuffle(&mut rng);
        let mut months: Vec<u32> = (0..n).map(|_| rng.gen_range(18..30)).collect();
        months.sort_unstable();
        let mut trace_order: Vec<usize> = (0..n).collect();
        trace_order.shuffle(&mut rng);

        let rank_of = |inv: &[u32]| {
            let mut rank = NormativeRank {
                order: rank_order.iter().map(|&o| WordId(inv[o])).collect(),
                aoa_month: months.clone(),
                bins: Vec::new(),
            };
            assign_aoa_bins(&mut rank, &[22, 26]).unwrap();
            rank
        };
        let trace_of = |inv: &[u32]| WalkTrace {
            strategy: Strategy::Random,
            seed: 0,
            order: trace_order.iter().map(|&o| WordId(inv[o])).collect(),
            epsilon_restarts: 0,
        };

        let (rank_a, rank_b) = (rank_of(&inv_a), rank_of(&inv_b));
        let (trace_a, trace_b) = (trace_of(&inv_a), trace_of(&inv_b));
        for bin in ["<22", "22-26", ">=26"] {
            let cell_a = confusion(&lex_a, &trace_a, &rank_a, "even", bin).unwrap();
            let cell_b = confusion(&lex_b, &trace_b, &rank_b, "even", bin).unwrap();
            assert_eq!(cell_a, cell_b);
            let (ma, mb) = (metrics(&cell_a), metrics(&cell_b));
            assert_eq!(ma.accuracy, mb.accuracy);
            assert_eq!(ma.precision, mb.precision);
            assert_eq!(ma.recall, mb.recall);
        }
    }
}

#[test]
fn conformity_matches_oracle_on_sparse_deep_graphs() {
    // Sparse graphs have large eccentricities, exercising distance shells
    // far beyond what dense random graphs reach.
    let mut rng = ChaCha8Rng::seed_from_u64(0xDEE9);
    for trial in 0..10 {
        let n = rng.gen_range(20..=40);
        let mut edges = Vec::new();
        // a ring for connectivity plus a few chords
        for v in 0..n {
            edges.push((v, (v + 1) % n));
        }
        for _ in 0..n / 6 {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                edges.push((a, b));
            }
        }
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let bins: Vec<(u8, u8, u8)> = labels.iter().map(|&l| (l, l, l)).collect();
        let lex = binned_lexicon(&bins, &edges);
        let profiles = conformity_profiles(&lex, 2.0).unwrap();
        for (u, profile) in profiles.iter().enumerate() {
            let expected = common::conformity_oracle(n, &edges, &labels, u, 2.0);
            assert!(
                (profile.scores[0] - expected).abs() < 1e-12,
                "trial {trial} node {u}: engine {} oracle {expected}",
                profile.scores[0]
            );
        }
    }
}

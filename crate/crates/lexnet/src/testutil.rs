//! Shared fixtures for unit tests.

use std::collections::BTreeMap;

use crate::lexicon::{LayerId, MultiplexLexicon, WordId, WordRecord};

/// Lexicon with explicit per-word (freq, length, polysemy) bins and a single
/// edge layer.
pub(crate) fn binned(bins: &[(u8, u8, u8)], edges: &[(u32, u32)]) -> MultiplexLexicon {
    let words = bins
        .iter()
        .enumerate()
        .map(|(i, &(f, l, p))| {
            let mut w = WordRecord::new(WordId(i as u32), format!("w{i}"));
            w.freq_bin = Some(f);
            w.length_bin = Some(l);
            w.polysemy_bin = Some(p);
            w
        })
        .collect();
    let mut layer_edges = BTreeMap::new();
    layer_edges.insert(
        LayerId::from("l"),
        edges
            .iter()
            .map(|&(a, b)| (WordId(a), WordId(b)))
            .collect::<Vec<_>>(),
    );
    MultiplexLexicon::build(words, layer_edges).unwrap()
}

//! Multiplex lexical network: a shared word registry, named edge layers, and
//! the aggregated simple graph all structural queries run on.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into the word registry. Stable for the lifetime of a lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordId(pub u32);

impl WordId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Layer label. The four canonical layers are `free_associations`,
/// `cooccurrence`, `feature_sharing` and `phonological`, but any unique
/// label is accepted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LayerId(pub String);

impl LayerId {
    pub fn new(label: impl Into<String>) -> Self {
        LayerId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LayerId {
    fn from(s: &str) -> Self {
        LayerId(s.to_string())
    }
}

/// The three word features analyzed for conformity, in profile order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Frequency,
    Length,
    Polysemy,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Frequency, Attribute::Length, Attribute::Polysemy];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Frequency => "frequency",
            Attribute::Length => "length",
            Attribute::Polysemy => "polysemy",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One word with its raw features, categorical bins, and acquisition data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    pub id: WordId,
    pub surface: String,
    pub freq_raw: u64,
    pub length_raw: u32,
    pub polysemy_raw: u32,
    /// Bin indices are 0-based and ordered by raw value (0 = lowest).
    pub freq_bin: Option<u8>,
    pub length_bin: Option<u8>,
    pub polysemy_bin: Option<u8>,
    pub pos: Option<String>,
    pub cdi: Option<String>,
    pub aoa_month: Option<u32>,
    /// month -> fraction of children producing the word that month.
    pub prod_prob: BTreeMap<u32, f64>,
}

impl WordRecord {
    pub fn new(id: WordId, surface: impl Into<String>) -> Self {
        WordRecord {
            id,
            surface: surface.into(),
            freq_raw: 0,
            length_raw: 0,
            polysemy_raw: 0,
            freq_bin: None,
            length_bin: None,
            polysemy_bin: None,
            pos: None,
            cdi: None,
            aoa_month: None,
            prod_prob: BTreeMap::new(),
        }
    }

    pub fn raw(&self, attribute: Attribute) -> u64 {
        match attribute {
            Attribute::Frequency => self.freq_raw,
            Attribute::Length => self.length_raw as u64,
            Attribute::Polysemy => self.polysemy_raw as u64,
        }
    }

    pub fn bin(&self, attribute: Attribute) -> Option<u8> {
        match attribute {
            Attribute::Frequency => self.freq_bin,
            Attribute::Length => self.length_bin,
            Attribute::Polysemy => self.polysemy_bin,
        }
    }

    pub fn set_bin(&mut self, attribute: Attribute, bin: u8) {
        match attribute {
            Attribute::Frequency => self.freq_bin = Some(bin),
            Attribute::Length => self.length_bin = Some(bin),
            Attribute::Polysemy => self.polysemy_bin = Some(bin),
        }
    }
}

#[derive(Debug, Clone)]
struct Layer {
    edges: BTreeSet<(WordId, WordId)>,
    enabled: bool,
}

/// Named layers over a shared word registry plus the aggregated simple graph.
///
/// Immutable after construction: [`MultiplexLexicon::toggle_layer`] returns a
/// new value with the aggregate recomputed, and every query is read-only, so
/// shared references are safe across threads.
#[derive(Debug, Clone)]
pub struct MultiplexLexicon {
    words: Vec<WordRecord>,
    index: HashMap<String, WordId>,
    layers: BTreeMap<LayerId, Layer>,
    adjacency: Vec<Vec<WordId>>,
    edges: BTreeSet<(WordId, WordId)>,
}

fn normalize_edge(a: WordId, b: WordId) -> (WordId, WordId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl MultiplexLexicon {
    /// Build a lexicon from registered words and per-layer edge lists.
    ///
    /// Edges are unordered pairs; duplicates within a layer collapse to one
    /// edge. Endpoints must be registered and distinct.
    pub fn build(
        words: Vec<WordRecord>,
        layer_edges: BTreeMap<LayerId, Vec<(WordId, WordId)>>,
    ) -> Result<Self> {
        let n = words.len();
        let mut index = HashMap::with_capacity(n);
        for (i, w) in words.iter().enumerate() {
            debug_assert_eq!(w.id.index(), i, "registry ids must match positions");
            index.insert(w.surface.clone(), w.id);
        }

        let mut layers = BTreeMap::new();
        for (layer_id, pairs) in layer_edges {
            let mut edges = BTreeSet::new();
            for (a, b) in pairs {
                if a.index() >= n {
                    return Err(Error::UnknownWord(format!("#{}", a.0)));
                }
                if b.index() >= n {
                    return Err(Error::UnknownWord(format!("#{}", b.0)));
                }
                if a == b {
                    return Err(Error::SelfLoop {
                        layer: layer_id.0.clone(),
                        word: words[a.index()].surface.clone(),
                    });
                }
                edges.insert(normalize_edge(a, b));
            }
            layers.insert(
                layer_id,
                Layer {
                    edges,
                    enabled: true,
                },
            );
        }

        let mut lex = MultiplexLexicon {
            words,
            index,
            layers,
            adjacency: Vec::new(),
            edges: BTreeSet::new(),
        };
        lex.recompute_aggregate();
        Ok(lex)
    }

    /// Rebuild with the same registry but different layers. Used by the null
    /// models; word records are cloned untouched.
    pub(crate) fn with_layers(
        &self,
        layer_edges: BTreeMap<LayerId, Vec<(WordId, WordId)>>,
    ) -> Result<Self> {
        MultiplexLexicon::build(self.words.clone(), layer_edges)
    }

    /// Rebuild with the same topology but replacement records (label shuffle).
    pub(crate) fn with_words(&self, words: Vec<WordRecord>) -> Self {
        debug_assert_eq!(words.len(), self.words.len());
        let mut lex = self.clone();
        lex.words = words;
        lex
    }

    fn recompute_aggregate(&mut self) {
        let mut edges = BTreeSet::new();
        for layer in self.layers.values() {
            if layer.enabled {
                edges.extend(layer.edges.iter().copied());
            }
        }
        let mut adjacency = vec![Vec::new(); self.words.len()];
        for &(a, b) in &edges {
            adjacency[a.index()].push(b);
            adjacency[b.index()].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        self.adjacency = adjacency;
        self.edges = edges;
    }

    /// Enable or disable a layer; the aggregate is recomputed over enabled
    /// layers only. Words are never dropped, so ablation can isolate them.
    pub fn toggle_layer(&self, layer: &LayerId, enabled: bool) -> Result<Self> {
        if !self.layers.contains_key(layer) {
            return Err(Error::UnknownLayer(layer.0.clone()));
        }
        let mut lex = self.clone();
        lex.layers.get_mut(layer).unwrap().enabled = enabled;
        lex.recompute_aggregate();
        Ok(lex)
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[WordRecord] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> Result<&WordRecord> {
        self.words
            .get(id.index())
            .ok_or_else(|| Error::UnknownWord(format!("#{}", id.0)))
    }

    pub fn lookup(&self, surface: &str) -> Option<WordId> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: WordId) -> &str {
        &self.words[id.index()].surface
    }

    pub fn layer_ids(&self) -> impl Iterator<Item = &LayerId> {
        self.layers.keys()
    }

    pub fn layer_enabled(&self, layer: &LayerId) -> Result<bool> {
        self.layers
            .get(layer)
            .map(|l| l.enabled)
            .ok_or_else(|| Error::UnknownLayer(layer.0.clone()))
    }

    pub fn layer_edges(&self, layer: &LayerId) -> Result<&BTreeSet<(WordId, WordId)>> {
        self.layers
            .get(layer)
            .map(|l| &l.edges)
            .ok_or_else(|| Error::UnknownLayer(layer.0.clone()))
    }

    /// Edges of the aggregated simple graph (normalized `a < b`).
    pub fn edges(&self) -> &BTreeSet<(WordId, WordId)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, w: WordId) -> Result<&[WordId]> {
        self.adjacency
            .get(w.index())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownWord(format!("#{}", w.0)))
    }

    pub fn degree(&self, w: WordId) -> Result<usize> {
        Ok(self.neighbors(w)?.len())
    }

    /// Shortest-path hop counts from `w` on the aggregate. Unreachable words
    /// are absent; `distances[w] == 0`.
    pub fn bfs_distances(&self, w: WordId) -> Result<BTreeMap<WordId, u32>> {
        self.word(w)?;
        let mut dist = BTreeMap::new();
        dist.insert(w, 0u32);
        let mut queue = VecDeque::new();
        queue.push_back(w);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &v in &self.adjacency[u.index()] {
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// BFS shells of `source`: reachable words grouped by hop distance,
    /// excluding the source itself. `shells[d-1]` holds the words at
    /// distance `d`, each shell in ascending id order.
    pub(crate) fn bfs_shells(&self, source: usize) -> Vec<Vec<u32>> {
        let n = self.words.len();
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut shells = Vec::new();
        let mut frontier = vec![source as u32];
        loop {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &self.adjacency[u as usize] {
                    let vi = v.index();
                    if !seen[vi] {
                        seen[vi] = true;
                        next.push(v.0);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            shells.push(next.clone());
            frontier = next;
        }
        shells
    }

    /// Words grouped by CDI label, ascending id order within each group.
    pub fn cdi_map(&self) -> BTreeMap<String, Vec<WordId>> {
        let mut map: BTreeMap<String, Vec<WordId>> = BTreeMap::new();
        for w in &self.words {
            if let Some(cdi) = &w.cdi {
                map.entry(cdi.clone()).or_default().push(w.id);
            }
        }
        map
    }
}

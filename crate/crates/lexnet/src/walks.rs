//! Acquisition walks: starting from a seed word, repeatedly learn the
//! highest-scoring candidate until the whole vocabulary is ordered. The four
//! strategies differ in candidate pool and edge scores; ties break uniformly
//! at random, and an empty candidate pool injects a random unlearned word
//! (counted as an epsilon restart), so every walk terminates with a full
//! permutation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Attribute, MultiplexLexicon, WordId, WordRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Unweighted neighbors of the current word.
    Struct,
    /// Jaccard-weighted neighbors of the current word.
    MaxSim,
    /// Jaccard-weighted neighbors of every learned word (backtracking).
    ExtCand,
    /// Jaccard modulated by CDI availability and attractiveness.
    CdiMaxSim,
    /// Uniform random permutation baseline.
    Random,
}

impl Strategy {
    pub const ALL_WALKS: [Strategy; 4] = [
        Strategy::Struct,
        Strategy::MaxSim,
        Strategy::ExtCand,
        Strategy::CdiMaxSim,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Strategy::Struct => "struct",
            Strategy::MaxSim => "maxsim",
            Strategy::ExtCand => "extcand",
            Strategy::CdiMaxSim => "cdi-maxsim",
            Strategy::Random => "random",
        }
    }

    fn needs_bins(self) -> bool {
        matches!(
            self,
            Strategy::MaxSim | Strategy::ExtCand | Strategy::CdiMaxSim
        )
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "struct" => Ok(Strategy::Struct),
            "maxsim" => Ok(Strategy::MaxSim),
            "extcand" => Ok(Strategy::ExtCand),
            "cdi-maxsim" => Ok(Strategy::CdiMaxSim),
            "random" => Ok(Strategy::Random),
            other => Err(format!(
                "unknown strategy `{other}` (expected struct|maxsim|extcand|cdi-maxsim|random)"
            )),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// One acquisition ordering: a permutation of the registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub strategy: Strategy,
    pub seed: u64,
    pub order: Vec<WordId>,
    /// Forced random injections after an empty candidate pool.
    pub epsilon_restarts: u32,
}

/// Jaccard similarity of the tagged feature-bin sets, so a frequency bin
/// never matches a length bin. Three shared bins give 1, none give 0.
pub fn jaccard_similarity(a: &WordRecord, b: &WordRecord) -> f64 {
    let mut inter = 0u32;
    let mut union = 0u32;
    for attribute in Attribute::ALL {
        match (a.bin(attribute), b.bin(attribute)) {
            (Some(x), Some(y)) if x == y => {
                inter += 1;
                union += 1;
            }
            (Some(_), Some(_)) => union += 2,
            (Some(_), None) | (None, Some(_)) => union += 1,
            (None, None) => {}
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// CDI availability g(j) = 1 - learned fraction of j's CDI. Words without a
/// CDI get 0, which routes the transition into the Jaccard fallback branch.
pub fn cdi_availability(lex: &MultiplexLexicon, j: WordId, learned: &[bool]) -> Result<f64> {
    let word = lex.word(j)?;
    let Some(cdi) = &word.cdi else {
        return Ok(0.0);
    };
    let members: Vec<WordId> = lex
        .words()
        .iter()
        .filter(|w| w.cdi.as_deref() == Some(cdi.as_str()))
        .map(|w| w.id)
        .collect();
    let filled = members.iter().filter(|w| learned[w.index()]).count();
    Ok(1.0 - filled as f64 / members.len() as f64)
}

/// CDI attractiveness h(i, J) = fraction of i's neighbors inside CDI `J`;
/// 0 for an isolated word.
pub fn cdi_attractiveness(lex: &MultiplexLexicon, i: WordId, cdi: &str) -> Result<f64> {
    if !lex.words().iter().any(|w| w.cdi.as_deref() == Some(cdi)) {
        return Err(Error::UnknownCdi(cdi.to_string()));
    }
    let nbrs = lex.neighbors(i)?;
    if nbrs.is_empty() {
        return Ok(0.0);
    }
    let inside = nbrs
        .iter()
        .filter(|&&v| lex.words()[v.index()].cdi.as_deref() == Some(cdi))
        .count();
    Ok(inside as f64 / nbrs.len() as f64)
}

/// Score of learning `j` next from `i`: 1 for Struct, Jaccard for
/// MaxSim/ExtCand, and Jaccard * g * h for CDI-MaxSim unless g * h = 0, in
/// which case plain Jaccard.
pub fn transition_probability(
    lex: &MultiplexLexicon,
    i: WordId,
    j: WordId,
    learned: &[bool],
    strategy: Strategy,
) -> Result<f64> {
    let (wi, wj) = (lex.word(i)?, lex.word(j)?);
    Ok(match strategy {
        Strategy::Struct | Strategy::Random => 1.0,
        Strategy::MaxSim | Strategy::ExtCand => jaccard_similarity(wi, wj),
        Strategy::CdiMaxSim => {
            let jac = jaccard_similarity(wi, wj);
            match &wj.cdi {
                None => jac,
                Some(cdi) => {
                    let g = cdi_availability(lex, j, learned)?;
                    let h = cdi_attractiveness(lex, i, cdi)?;
                    let gh = g * h;
                    if gh == 0.0 {
                        jac
                    } else {
                        jac * gh
                    }
                }
            }
        }
    })
}

/// The candidate pool a strategy sees for a given learned prefix: unlearned
/// neighbors of the current word, or of every learned word for ExtCand.
pub fn candidates_for(
    lex: &MultiplexLexicon,
    strategy: Strategy,
    current: WordId,
    learned: &[bool],
) -> Result<Vec<WordId>> {
    let mut pool = BTreeSet::new();
    match strategy {
        Strategy::ExtCand => {
            for (i, &l) in learned.iter().enumerate() {
                if l {
                    for &v in lex.neighbors(WordId(i as u32))? {
                        if !learned[v.index()] {
                            pool.insert(v);
                        }
                    }
                }
            }
        }
        _ => {
            for &v in lex.neighbors(current)? {
                if !learned[v.index()] {
                    pool.insert(v);
                }
            }
        }
    }
    Ok(pool.into_iter().collect())
}

/// Interned CDI bookkeeping for the CDI-MaxSim walk: per-word CDI index,
/// member counts, and per-word neighbor counts inside each CDI.
struct CdiIndex {
    of_word: Vec<Option<usize>>,
    size: Vec<usize>,
    neighbor_counts: Vec<BTreeMap<usize, usize>>,
}

impl CdiIndex {
    fn build(lex: &MultiplexLexicon) -> Self {
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        for w in lex.words() {
            if let Some(cdi) = &w.cdi {
                let next = ids.len();
                ids.entry(cdi.as_str()).or_insert(next);
            }
        }
        let of_word: Vec<Option<usize>> = lex
            .words()
            .iter()
            .map(|w| w.cdi.as_deref().map(|c| ids[c]))
            .collect();
        let mut size = vec![0usize; ids.len()];
        for c in of_word.iter().flatten() {
            size[*c] += 1;
        }
        let neighbor_counts = lex
            .words()
            .iter()
            .map(|w| {
                let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
                for &v in lex.neighbors(w.id).unwrap() {
                    if let Some(c) = of_word[v.index()] {
                        *counts.entry(c).or_default() += 1;
                    }
                }
                counts
            })
            .collect();
        CdiIndex {
            of_word,
            size,
            neighbor_counts,
        }
    }
}

/// Run one walk to a full permutation. `start` pins the first word for
/// reproducible comparisons; by default it is drawn from the seeded RNG.
pub fn run_walk(
    lex: &MultiplexLexicon,
    strategy: Strategy,
    seed: u64,
    start: Option<WordId>,
) -> Result<WalkTrace> {
    let n = lex.word_count();
    if n == 0 {
        return Err(Error::EmptyLexicon);
    }
    if strategy == Strategy::Random {
        let mut trace = random_learning(lex, seed)?;
        if let Some(s) = start {
            // pin: rotate the start word to the front
            lex.word(s)?;
            let pos = trace.order.iter().position(|&w| w == s).unwrap();
            trace.order.swap(0, pos);
        }
        return Ok(trace);
    }
    if strategy.needs_bins() {
        for (i, w) in lex.words().iter().enumerate() {
            for attribute in Attribute::ALL {
                if w.bin(attribute).is_none() {
                    return Err(Error::UnbinnedWord {
                        word: lex.words()[i].surface.clone(),
                        attribute,
                    });
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = match start {
        Some(s) => {
            lex.word(s)?;
            s
        }
        None => WordId(rng.gen_range(0..n as u32)),
    };

    let cdi = if strategy == Strategy::CdiMaxSim {
        Some(CdiIndex::build(lex))
    } else {
        None
    };

    let mut learned = vec![false; n];
    let mut order: Vec<WordId> = Vec::with_capacity(n);
    let mut epsilon_restarts = 0u32;
    let mut cdi_filled: Vec<usize> = cdi
        .as_ref()
        .map(|c| vec![0; c.size.len()])
        .unwrap_or_default();

    // ExtCand keeps the best Jaccard seen per unlearned frontier word.
    let mut frontier: BTreeSet<WordId> = BTreeSet::new();
    let mut best_score: Vec<f64> = vec![0.0; n];

    let words = lex.words();
    let learn = |w: WordId,
                 learned: &mut Vec<bool>,
                 order: &mut Vec<WordId>,
                 frontier: &mut BTreeSet<WordId>,
                 best_score: &mut Vec<f64>,
                 cdi_filled: &mut Vec<usize>| {
        learned[w.index()] = true;
        order.push(w);
        if let Some(c) = cdi.as_ref() {
            if let Some(idx) = c.of_word[w.index()] {
                cdi_filled[idx] += 1;
            }
        }
        if strategy == Strategy::ExtCand {
            frontier.remove(&w);
            for &v in lex.neighbors(w).unwrap() {
                if !learned[v.index()] {
                    let s = jaccard_similarity(&words[w.index()], &words[v.index()]);
                    if frontier.insert(v) || s > best_score[v.index()] {
                        best_score[v.index()] = s;
                    }
                }
            }
        }
    };

    learn(
        first,
        &mut learned,
        &mut order,
        &mut frontier,
        &mut best_score,
        &mut cdi_filled,
    );
    let mut current = first;

    while order.len() < n {
        // Candidate pool + scores for this step.
        let (pool, scores): (Vec<WordId>, Vec<f64>) = match strategy {
            Strategy::ExtCand => {
                let pool: Vec<WordId> = frontier.iter().copied().collect();
                let scores = pool.iter().map(|w| best_score[w.index()]).collect();
                (pool, scores)
            }
            _ => {
                let pool: Vec<WordId> = lex
                    .neighbors(current)?
                    .iter()
                    .copied()
                    .filter(|v| !learned[v.index()])
                    .collect();
                let scores: Vec<f64> = match strategy {
                    Strategy::Struct => vec![1.0; pool.len()],
                    Strategy::MaxSim => pool
                        .iter()
                        .map(|&v| jaccard_similarity(&words[current.index()], &words[v.index()]))
                        .collect(),
                    Strategy::CdiMaxSim => {
                        let index = cdi.as_ref().unwrap();
                        pool.iter()
                            .map(|&v| {
                                let jac =
                                    jaccard_similarity(&words[current.index()], &words[v.index()]);
                                match index.of_word[v.index()] {
                                    None => jac,
                                    Some(c) => {
                                        let g = 1.0 - cdi_filled[c] as f64 / index.size[c] as f64;
                                        let deg = lex.neighbors(current).unwrap().len();
                                        let h = if deg == 0 {
                                            0.0
                                        } else {
                                            *index.neighbor_counts[current.index()]
                                                .get(&c)
                                                .unwrap_or(&0)
                                                as f64
                                                / deg as f64
                                        };
                                        let gh = g * h;
                                        if gh == 0.0 {
                                            jac
                                        } else {
                                            jac * gh
                                        }
                                    }
                                }
                            })
                            .collect()
                    }
                    Strategy::ExtCand | Strategy::Random => unreachable!(),
                };
                (pool, scores)
            }
        };

        let next = if pool.is_empty() {
            // Alg. line 14: inject a random unlearned word and keep walking.
            let unlearned: Vec<WordId> = (0..n as u32)
                .map(WordId)
                .filter(|w| !learned[w.index()])
                .collect();
            epsilon_restarts += 1;
            unlearned[rng.gen_range(0..unlearned.len())]
        } else {
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tied: Vec<usize> = (0..pool.len()).filter(|&i| scores[i] == max).collect();
            pool[tied[rng.gen_range(0..tied.len())]]
        };
        learn(
            next,
            &mut learned,
            &mut order,
            &mut frontier,
            &mut best_score,
            &mut cdi_filled,
        );
        current = next;
    }

    Ok(WalkTrace {
        strategy,
        seed,
        order,
        epsilon_restarts,
    })
}

/// Uniform random permutation of the vocabulary, the significance baseline.
pub fn random_learning(lex: &MultiplexLexicon, seed: u64) -> Result<WalkTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<WordId> = (0..lex.word_count() as u32).map(WordId).collect();
    order.shuffle(&mut rng);
    Ok(WalkTrace {
        strategy: Strategy::Random,
        seed,
        order,
        epsilon_restarts: 0,
    })
}

/// CSV: `position,word,strategy,seed`.
pub fn write_trace_csv<W: Write>(
    out: &mut W,
    lex: &MultiplexLexicon,
    trace: &WalkTrace,
) -> Result<()> {
    writeln!(out, "position,word,strategy,seed")?;
    for (position, &word) in trace.order.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            position,
            lex.surface(word),
            trace.strategy.id(),
            trace.seed
        )?;
    }
    Ok(())
}

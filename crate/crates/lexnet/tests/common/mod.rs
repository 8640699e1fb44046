#![allow(dead_code)] // each test binary uses its own subset of these helpers

//! Independent oracles and fixture builders for the acceptance suite. Every
//! oracle here recomputes its quantity from first principles (adjacency
//! matrices, exhaustive enumeration) without touching the engine's code
//! paths, so agreement is meaningful.

use std::collections::BTreeMap;
use std::sync::Mutex;

use lexnet::lexicon::{LayerId, MultiplexLexicon, WordId, WordRecord};

pub const INF: usize = usize::MAX / 4;

/// Wall-clock-limited criteria hold this lock so they never compete with
/// each other for the shared rayon pool.
pub static TIMED: Mutex<()> = Mutex::new(());

/// Six blob centers whose optimal inertia curve decays near-linearly to
/// k = 6 and vanishes after, so the max-second-difference knee sits at 6
/// with a ~35% margin (found by direct search over exact partitions).
pub const SIX_BLOB_CENTERS: [[f64; 3]; 6] = [
    [0.77, 0.49, 0.26],
    [-0.67, 0.12, 0.04],
    [-0.08, 0.95, -0.57],
    [0.26, -0.65, 0.09],
    [-0.07, 0.50, 0.75],
    [0.33, 0.09, -0.51],
];

/// Build a lexicon from per-word (freq, length, polysemy) bins and one
/// edge layer.
pub fn binned_lexicon(bins: &[(u8, u8, u8)], edges: &[(usize, usize)]) -> MultiplexLexicon {
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
    let mut layers = BTreeMap::new();
    layers.insert(
        LayerId::from("l"),
        edges
            .iter()
            .map(|&(a, b)| (WordId(a as u32), WordId(b as u32)))
            .collect::<Vec<_>>(),
    );
    MultiplexLexicon::build(words, layers).unwrap()
}

/// All-pairs shortest paths by Floyd-Warshall (the engine uses BFS).
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut dist = vec![vec![INF; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        if a != b {
            dist[a][b] = 1;
            dist[b][a] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = dist[i][k].saturating_add(dist[k][j]);
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    dist
}

/// Direct-summation conformity: distance shells from the all-pairs matrix,
/// first-order similarity fractions from raw neighbor scans, and the shell
/// sum evaluated term by term.
pub fn conformity_oracle(
    n: usize,
    edges: &[(usize, usize)],
    labels: &[u8],
    source: usize,
    alpha: f64,
) -> f64 {
    let dist = floyd_warshall(n, edges);
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b && !neighbors[a].contains(&b) {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    let f: Vec<f64> = (0..n)
        .map(|v| {
            if neighbors[v].is_empty() {
                0.0
            } else {
                let same = neighbors[v]
                    .iter()
                    .filter(|&&u| labels[u] == labels[v])
                    .count();
                same as f64 / neighbors[v].len() as f64
            }
        })
        .collect();

    let ecc = (0..n)
        .filter(|&v| v != source && dist[source][v] < INF)
        .map(|v| dist[source][v])
        .max();
    let Some(ecc) = ecc else { return 0.0 };

    let mut num = 0.0;
    let mut den = 0.0;
    for d in 1..=ecc {
        let shell: Vec<usize> = (0..n).filter(|&v| dist[source][v] == d).collect();
        assert!(!shell.is_empty(), "graph distance shells have no gaps");
        let mut sum = 0.0;
        for &v in &shell {
            let sign = if labels[v] == labels[source] {
                1.0
            } else {
                -1.0
            };
            sum += sign * f[v];
        }
        num += sum / (shell.len() as f64 * (d as f64).powf(alpha));
        den += (d as f64).powf(-alpha);
    }
    num / den
}

/// Two-block modularity straight from the double sum
/// (1/2m) * sum_vw [A_vw - k_v k_w / 2m] * delta(c_v, c_w).
pub fn modularity_double_sum(n: usize, edges: &[(usize, usize)], in_core: &[bool]) -> f64 {
    let mut adj = vec![vec![0.0f64; n]; n];
    let mut deg = vec![0.0f64; n];
    for &(a, b) in edges {
        adj[a][b] = 1.0;
        adj[b][a] = 1.0;
        deg[a] += 1.0;
        deg[b] += 1.0;
    }
    let m: f64 = edges.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for v in 0..n {
        for w in 0..n {
            if in_core[v] == in_core[w] {
                q += adj[v][w] - deg[v] * deg[w] / (2.0 * m);
            }
        }
    }
    q / (2.0 * m)
}

/// Coreness by repeated whole-graph peeling: for each k, delete nodes of
/// induced degree < k until stable; coreness(v) = largest k keeping v.
pub fn brute_force_coreness(n: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let mut coreness = vec![0u32; n];
    let max_k = n;
    for k in 1..=max_k {
        let mut alive = vec![true; n];
        loop {
            let mut removed = false;
            for v in 0..n {
                if !alive[v] {
                    continue;
                }
                let deg = edges
                    .iter()
                    .filter(|&&(a, b)| (a == v && alive[b]) || (b == v && alive[a]))
                    .count();
                if deg < k {
                    alive[v] = false;
                    removed = true;
                }
            }
            if !removed {
                break;
            }
        }
        for v in 0..n {
            if alive[v] {
                coreness[v] = k as u32;
            }
        }
    }
    coreness
}

/// Members of the k-core found by exhaustive subset search: the union of all
/// vertex subsets whose induced subgraph has minimum degree >= k.
pub fn subgraph_search_kcore(n: usize, edges: &[(usize, usize)], k: usize) -> Vec<bool> {
    let mut members = vec![false; n];
    for mask in 0usize..(1 << n) {
        let inside = |v: usize| mask & (1 << v) != 0;
        if mask == 0 {
            continue;
        }
        let mut ok = true;
        for v in 0..n {
            if !inside(v) {
                continue;
            }
            let deg = edges
                .iter()
                .filter(|&&(a, b)| (a == v && inside(b)) || (b == v && inside(a)))
                .count();
            if deg < k {
                ok = false;
                break;
            }
        }
        if ok {
            for (v, m) in members.iter_mut().enumerate() {
                if inside(v) {
                    *m = true;
                }
            }
        }
    }
    members
}

/// Exhaustive minimum k-modes cost over every assignment of records to k
/// clusters, with the attribute-wise majority mode per cluster.
pub fn brute_force_kmodes_cost(tuples: &[[u8; 3]], k: usize) -> u64 {
    fn mismatches(a: &[u8; 3], b: &[u8; 3]) -> u64 {
        (0..3).map(|i| u64::from(a[i] != b[i])).sum()
    }
    let n = tuples.len();
    let mut best = u64::MAX;
    let mut assignment = vec![0usize; n];
    loop {
        let mut cost = 0u64;
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let mut mode = [0u8; 3];
            for (a, slot) in mode.iter_mut().enumerate() {
                let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
                for &m in &members {
                    *counts.entry(tuples[m][a]).or_default() += 1;
                }
                *slot = counts
                    .iter()
                    .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)))
                    .map(|(&v, _)| v)
                    .unwrap();
            }
            cost += members
                .iter()
                .map(|&m| mismatches(&tuples[m], &mode))
                .sum::<u64>();
        }
        best = best.min(cost);
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            assignment[i] += 1;
            if assignment[i] < k {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

//! Labelled subgraph search: one-round reply back against exhaustive search.
//!
//! A network is a simple undirected graph whose nodes carry resonance labels.
//! A pattern is found by broadcasting its labels once: every node with a
//! matching label answers in the same round. The answering nodes then
//! assemble candidate placements locally, one pattern node per pass, using
//! only graph edges that mirror pattern edges. The label round is always 1;
//! assembly passes are reported separately so that their cost stays visible.
//!
//! A match is an injective map from pattern nodes to network nodes that keeps
//! labels equal and maps every pattern edge onto a network edge (extra
//! network edges are allowed). Automorphic images of the same placement are
//! distinct matches.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::powf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliqueError {
    #[error("pattern of {pattern} nodes does not fit a network of {graph}")]
    Size { pattern: usize, graph: usize },
    #[error("exhaustive search is bounded to patterns of {max_pattern} and networks of {max_graph} nodes")]
    Budget { max_pattern: usize, max_graph: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T, E = CliqueError> = core::result::Result<T, E>;

/// Largest pattern the exhaustive oracle accepts.
pub const MAX_ORACLE_PATTERN: usize = 6;
/// Largest network the exhaustive oracle accepts.
pub const MAX_ORACLE_GRAPH: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternGraph {
    /// Resonance label of every node, Hz.
    pub labels: Vec<f64>,
    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub rng_seed: u64,
}

impl PatternGraph {
    /// Normalises edge order and checks the graph is simple with positive
    /// labels.
    pub fn new(labels: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize)>, rng_seed: u64) -> Result<Self> {
        if labels.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(CliqueError::InvalidGraph("labels must be positive"));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(CliqueError::InvalidGraph("self-loop"));
            }
            if a.max(b) >= labels.len() {
                return Err(CliqueError::InvalidGraph("edge endpoint out of range"));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(CliqueError::InvalidGraph("duplicate edge"));
            }
        }
        Ok(Self { labels, edges: set.into_iter().collect(), rng_seed })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut m = alloc::vec![alloc::vec![false; n]; n];
        for &(a, b) in &self.edges {
            m[a][b] = true;
            m[b][a] = true;
        }
        m
    }
}

/// Discrete label set: `symbols` frequencies spaced evenly in log between
/// `lo` and `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBand {
    pub lo: f64,
    pub hi: f64,
    pub symbols: usize,
}

impl Default for LabelBand {
    fn default() -> Self {
        Self { lo: 4.0, hi: 32.0, symbols: 4 }
    }
}

impl LabelBand {
    pub fn labels(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi >= self.lo && self.hi.is_finite()) || self.symbols == 0 || (self.symbols > 1 && self.hi == self.lo) {
            return Err(CliqueError::InvalidParameter("label band needs 0 < lo < hi and at least one symbol"));
        }
        if self.symbols == 1 {
            return Ok(alloc::vec![self.lo]);
        }
        let step = powf(self.hi / self.lo, 1.0 / (self.symbols - 1) as f64);
        let mut v: Vec<f64> = core::iter::successors(Some(self.lo), |f| Some(f * step)).take(self.symbols).collect();
        v[self.symbols - 1] = self.hi;
        Ok(v)
    }
}

/// Random labelled graph: every label uniform over the band's symbols, then
/// every pair `(i, j)`, `i < j`, joined with probability `p`.
pub fn gen_network_with(n: usize, p: f64, seed: u64, band: &LabelBand) -> Result<PatternGraph> {
    if n == 0 || !(0.0..=1.0).contains(&p) {
        return Err(CliqueError::InvalidParameter("need n >= 1 and 0 <= p <= 1"));
    }
    let symbols = band.labels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..n).map(|_| symbols[rng.gen_range(0..symbols.len())]).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Ok(PatternGraph { labels, edges, rng_seed: seed })
}

pub fn gen_network(n: usize, p: f64, seed: u64) -> Result<PatternGraph> {
    gen_network_with(n, p, seed, &LabelBand::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    pub graph: PatternGraph,
    /// `placement[i]` is the network node holding pattern node `i`.
    pub placement: Vec<usize>,
}

/// Writes the pattern onto a random injective placement: labels are copied
/// and the edges among the placed nodes become exactly the pattern's edges.
pub fn embed_pattern(graph: &PatternGraph, pattern: &PatternGraph, seed: u64) -> Result<Planted> {
    let (n, k) = (graph.len(), pattern.len());
    if k > n {
        return Err(CliqueError::Size { pattern: k, graph: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<usize> = (0..n).collect();
    // partial Fisher-Yates: the first k entries are a uniform placement
    for i in 0..k {
        let j = rng.gen_range(i..n);
        nodes.swap(i, j);
    }
    let placement: Vec<usize> = nodes[..k].to_vec();
    let mut labels = graph.labels.clone();
    for (i, &v) in placement.iter().enumerate() {
        labels[v] = pattern.labels[i];
    }
    let placed: BTreeSet<usize> = placement.iter().copied().collect();
    let kept = graph.edges.iter().copied().filter(|(a, b)| !(placed.contains(a) && placed.contains(b)));
    let planted = pattern.edges.iter().map(|&(a, b)| (placement[a], placement[b]));
    let graph = PatternGraph::new(labels, kept.chain(planted), graph.rng_seed)?;
    Ok(Planted { graph, placement })
}

fn preserves(graph: &PatternGraph, adj: &[Vec<bool>], pattern: &PatternGraph, map: &[usize]) -> bool {
    map.iter().enumerate().all(|(i, &v)| graph.labels[v] == pattern.labels[i]) && pattern.edges.iter().all(|&(a, b)| adj[map[a]][map[b]])
}

/// Every label- and edge-preserving injective map, sorted. Enumerates all
/// injective maps and tests each one whole.
pub fn solve_bruteforce(graph: &PatternGraph, pattern: &PatternGraph) -> Result<Vec<Vec<usize>>> {
    if pattern.len() > MAX_ORACLE_PATTERN || graph.len() > MAX_ORACLE_GRAPH {
        return Err(CliqueError::Budget { max_pattern: MAX_ORACLE_PATTERN, max_graph: MAX_ORACLE_GRAPH });
    }
    let adj = graph.adjacency();
    let mut out = Vec::new();
    if pattern.len() > graph.len() {
        return Ok(out);
    }
    let mut map = Vec::with_capacity(pattern.len());
    let mut used = alloc::vec![false; graph.len()];
    fn rec(k: usize, g: &PatternGraph, adj: &[Vec<bool>], p: &PatternGraph, map: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            if preserves(g, adj, p, map) {
                out.push(map.clone());
            }
            return;
        }
        for v in 0..g.len() {
            if !used[v] {
                used[v] = true;
                map.push(v);
                rec(k + 1, g, adj, p, map, used, out);
                map.pop();
                used[v] = false;
            }
        }
    }
    rec(0, graph, &adj, pattern, &mut map, &mut used, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyBackSolution {
    /// Sorted, as in [`solve_bruteforce`].
    pub matches: Vec<Vec<usize>>,
    /// Broadcast rounds: always 1.
    pub label_rounds: usize,
    /// Local assembly passes, one per pattern node joined after the first.
    pub assembly_passes: usize,
    /// Nodes that answered the broadcast.
    pub responders: usize,
}

impl ReplyBackSolution {
    pub fn rounds_used(&self) -> usize {
        self.label_rounds + self.assembly_passes
    }
}

/// Pattern nodes in breadth-first order over pattern edges, components in
/// index order.
fn join_order(pattern: &PatternGraph) -> Vec<usize> {
    let adj = pattern.adjacency();
    let mut seen = alloc::vec![false; pattern.len()];
    let mut order = Vec::with_capacity(pattern.len());
    for s in 0..pattern.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut head = order.len();
        order.push(s);
        while head < order.len() {
            let u = order[head];
            head += 1;
            for v in 0..pattern.len() {
                if adj[u][v] && !seen[v] {
                    seen[v] = true;
                    order.push(v);
                }
            }
        }
    }
    order
}

/// One label broadcast, then local assembly. No size bound.
pub fn solve_reply_back(graph: &PatternGraph, pattern: &PatternGraph) -> ReplyBackSolution {
    let wanted: Vec<f64> = pattern.labels.clone();
    // the single round: every node whose label is asked for answers at once
    let answered: Vec<bool> = graph.labels.iter().map(|l| wanted.contains(l)).collect();
    let responders = answered.iter().filter(|a| **a).count();
    let mut sol = ReplyBackSolution { matches: Vec::new(), label_rounds: 1, assembly_passes: 0, responders };
    if pattern.is_empty() {
        sol.matches.push(Vec::new());
        return sol;
    }
    if responders == 0 || pattern.len() > graph.len() {
        return sol;
    }
    let gadj = graph.adjacency();
    let padj = pattern.adjacency();
    let order = join_order(pattern);
    let answered = &answered;
    let candidates = |i: usize| (0..graph.len()).filter(move |&v| answered[v] && graph.labels[v] == pattern.labels[i]);
    let first = order[0];
    let mut partial: Vec<Vec<Option<usize>>> = candidates(first)
        .map(|v| {
            let mut m = alloc::vec![None; pattern.len()];
            m[first] = Some(v);
            m
        })
        .collect();
    for &j in &order[1..] {
        if partial.is_empty() {
            break;
        }
        sol.assembly_passes += 1;
        let anchor = order.iter().take_while(|&&u| u != j).find(|&&u| padj[u][j]).copied();
        let mut next = Vec::new();
        for m in &partial {
            let pool: Vec<usize> = match anchor {
                // grow along a graph edge from the already placed neighbour
                Some(u) => {
                    let at = m[u].expect("placed earlier");
                    (0..graph.len()).filter(|&v| gadj[at][v] && answered[v] && graph.labels[v] == pattern.labels[j]).collect()
                }
                None => candidates(j).collect(),
            };
            for v in pool {
                let fits = !m.contains(&Some(v)) && m.iter().enumerate().all(|(u, mv)| mv.is_none_or(|w| !padj[u][j] || gadj[w][v]));
                if fits {
                    let mut e = m.clone();
                    e[j] = Some(v);
                    next.push(e);
                }
            }
        }
        partial = next;
    }
    sol.matches = partial.into_iter().map(|m| m.into_iter().map(|v| v.expect("complete")).collect()).collect();
    sol.matches.sort();
    sol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub p_list: Vec<f64>,
    pub pattern_sizes: Vec<usize>,
    pub trials: usize,
    pub verify: bool,
    pub seed: u64,
    /// Edge probability inside generated patterns.
    pub pattern_p: f64,
    pub band: LabelBand,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_list: alloc::vec![6, 8, 10, 12],
            p_list: alloc::vec![0.3],
            pattern_sizes: alloc::vec![3, 4],
            trials: 5,
            verify: true,
            seed: 7,
            pattern_p: 0.6,
            band: LabelBand::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_list.iter().chain([&self.pattern_p]).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(CliqueError::InvalidParameter("edge probabilities must lie in [0, 1]"));
        }
        if self.n_list.contains(&0) || self.pattern_sizes.contains(&0) {
            return Err(CliqueError::InvalidParameter("sizes must be at least 1"));
        }
        if self.pattern_sizes.iter().any(|k| self.n_list.iter().any(|n| k > n)) {
            return Err(CliqueError::InvalidParameter("every pattern size must fit every network size"));
        }
        if self.verify && (self.n_list.iter().any(|&n| n > MAX_ORACLE_GRAPH) || self.pattern_sizes.iter().any(|&k| k > MAX_ORACLE_PATTERN)) {
            return Err(CliqueError::Budget { max_pattern: MAX_ORACLE_PATTERN, max_graph: MAX_ORACLE_GRAPH });
        }
        self.band.labels().map(|_| ())
    }

    /// Rows in report order: n, then p, then pattern size, then trial.
    pub fn rows(&self) -> Vec<(usize, f64, usize, usize)> {
        let mut v = Vec::new();
        for &n in &self.n_list {
            for &p in &self.p_list {
                for &k in &self.pattern_sizes {
                    for t in 0..self.trials {
                        v.push((n, p, k, t));
                    }
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub p: f64,
    pub pattern_size: usize,
    pub trial: usize,
    pub label_rounds: usize,
    pub assembly_passes: usize,
    pub wall_time_us: u64,
    pub reply_matches: usize,
    /// Present on verified rows.
    pub oracle_matches: Option<usize>,
    pub agreement: Option<bool>,
    pub planted_recovered: bool,
}

pub const BENCH_HEADER: &str = "n,p,pattern_size,trial,label_rounds,assembly_passes,wall_time_us,reply_matches,oracle_matches,agreement,planted_recovered";

/// Generated instance of one report row.
pub fn bench_instance(config: &BenchConfig, row: usize) -> Result<(PatternGraph, PatternGraph, Planted)> {
    let (n, p, k, _) = *config.rows().get(row).ok_or(CliqueError::InvalidParameter("row out of range"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(row as u64);
    let (gs, ps, es) = (rng.gen(), rng.gen(), rng.gen());
    let graph = gen_network_with(n, p, gs, &config.band)?;
    let pattern = gen_network_with(k, config.pattern_p, ps, &config.band)?;
    let planted = embed_pattern(&graph, &pattern, es)?;
    Ok((graph, pattern, planted))
}

/// Runs every row; `clock` returns microseconds and times the reply-back
/// solve only.
pub fn run_bench(config: &BenchConfig, clock: &mut dyn FnMut() -> u64) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let mut out = Vec::new();
    for (i, (n, p, k, trial)) in config.rows().into_iter().enumerate() {
        let (_, pattern, planted) = bench_instance(config, i)?;
        let t0 = clock();
        let reply = solve_reply_back(&planted.graph, &pattern);
        let wall = clock().saturating_sub(t0);
        let recovered = reply.matches.binary_search(&planted.placement).is_ok();
        let (oracle_matches, agreement) = if config.verify {
            let oracle = solve_bruteforce(&planted.graph, &pattern)?;
            (Some(oracle.len()), Some(oracle == reply.matches))
        } else {
            (None, None)
        };
        out.push(BenchRow {
            n,
            p,
            pattern_size: k,
            trial,
            label_rounds: reply.label_rounds,
            assembly_passes: reply.assembly_passes,
            wall_time_us: wall,
            reply_matches: reply.matches.len(),
            oracle_matches,
            agreement,
            planted_recovered: recovered,
        });
    }
    Ok(out)
}

/// CSV report with [`BENCH_HEADER`]; unverified cells are left empty.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(BENCH_HEADER);
    s.push('\n');
    for r in rows {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.p,
            r.pattern_size,
            r.trial,
            r.label_rounds,
            r.assembly_passes,
            r.wall_time_us,
            r.reply_matches,
            opt(r.oracle_matches.map(|m| alloc::format!("{m}"))),
            opt(r.agreement.map(|a| alloc::format!("{a}"))),
            r.planted_recovered
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn uniform(n: usize, edges: &[(usize, usize)]) -> PatternGraph {
        PatternGraph::new(vec![4.0; n], edges.iter().copied(), 0).unwrap()
    }

    fn complete(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    #[test]
    fn generator_extremes_and_golden() {
        let g = gen_network(5, 0.0, 1).unwrap();
        assert_eq!((g.len(), g.edges.len()), (5, 0));
        assert_eq!(gen_network(5, 1.0, 1).unwrap().edges.len(), 10);
        let a = gen_network(12, 0.3, 7).unwrap();
        assert_eq!(a, gen_network(12, 0.3, 7).unwrap());
        assert_eq!(a.edges.len(), 22);
        let symbols = LabelBand::default().labels().unwrap();
        assert_eq!(symbols, vec![4.0, 8.0, 16.0, 32.0]);
        assert!(a.labels.iter().all(|l| symbols.contains(l)));
        assert!(gen_network(0, 0.5, 1).is_err() && gen_network(3, 1.5, 1).is_err());
    }

    #[test]
    fn simple_graph_invariants() {
        assert!(PatternGraph::new(vec![1.0, 1.0], [(0, 0)], 0).is_err());
        assert!(PatternGraph::new(vec![1.0, 1.0], [(0, 1), (1, 0)], 0).is_err());
        assert!(PatternGraph::new(vec![1.0, -1.0], [], 0).is_err());
        assert_eq!(PatternGraph::new(vec![1.0; 3], [(2, 1), (1, 0)], 0).unwrap().edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn triangle_in_k4() {
        let k4 = uniform(4, &complete(4));
        let tri = uniform(3, &complete(3));
        let all = solve_bruteforce(&k4, &tri).unwrap();
        // 4·3·2 injective maps; 4 distinct node sets (6 automorphisms each)
        assert_eq!(all.len(), 24);
        let images: BTreeSet<Vec<usize>> = all
            .iter()
            .map(|m| {
                let mut s = m.clone();
                s.sort();
                s
            })
            .collect();
        assert_eq!(images.len(), 4);
        let reply = solve_reply_back(&k4, &tri);
        assert_eq!(reply.matches, all);
        assert_eq!((reply.label_rounds, reply.assembly_passes, reply.rounds_used()), (1, 2, 3));
    }

    #[test]
    fn trivial_cases() {
        let g = uniform(3, &[(0, 1)]);
        assert_eq!(solve_bruteforce(&g, &uniform(4, &[])).unwrap(), Vec::<Vec<usize>>::new());
        assert_eq!(solve_bruteforce(&g, &uniform(0, &[])).unwrap(), vec![Vec::<usize>::new()]);
        assert_eq!(solve_reply_back(&g, &uniform(0, &[])).matches, vec![Vec::<usize>::new()]);
        let other = PatternGraph::new(vec![9.0], [], 0).unwrap();
        let r = solve_reply_back(&g, &other);
        assert!(r.matches.is_empty());
        assert_eq!((r.rounds_used(), r.responders), (1, 0));
        assert!(matches!(solve_bruteforce(&uniform(15, &[]), &uniform(2, &[])), Err(CliqueError::Budget { .. })));
        assert!(matches!(solve_bruteforce(&uniform(8, &[]), &uniform(7, &[])), Err(CliqueError::Budget { .. })));
    }

    #[test]
    fn planting_records_placement() {
        let g = gen_network(10, 0.2, 3).unwrap();
        let tri = PatternGraph::new(vec![4.0, 8.0, 16.0], complete(3), 0).unwrap();
        let p = embed_pattern(&g, &tri, 11).unwrap();
        assert_eq!(p.placement.len(), 3);
        assert_eq!(p.placement.iter().collect::<BTreeSet<_>>().len(), 3);
        assert!(solve_bruteforce(&p.graph, &tri).unwrap().contains(&p.placement));
        let whole = embed_pattern(&g, &g, 5).unwrap();
        assert!(solve_reply_back(&whole.graph, &g).matches.contains(&whole.placement));
        assert_eq!(embed_pattern(&tri, &g, 1), Err(CliqueError::Size { pattern: 10, graph: 3 }));
    }

    #[test]
    fn label_round_is_constant_in_n() {
        for n in [4, 8, 12] {
            let g = gen_network(n, 0.4, n as u64).unwrap();
            let pat = gen_network(3, 0.7, 99).unwrap();
            assert_eq!(solve_reply_back(&g, &pat).label_rounds, 1);
        }
    }

    #[test]
    fn bench_sweep() {
        let cfg = BenchConfig::default();
        let rows = run_bench(&cfg, &mut || 0).unwrap();
        assert_eq!(rows.len(), 4 * 2 * 5);
        assert!(rows.iter().all(|r| r.label_rounds == 1 && r.agreement == Some(true) && r.planted_recovered));
        let csv = bench_csv(&rows);
        assert_eq!(csv, bench_csv(&run_bench(&cfg, &mut || 0).unwrap()));
        assert_eq!(csv.lines().next(), Some(BENCH_HEADER));
        let empty = BenchConfig { n_list: vec![], ..cfg.clone() };
        assert_eq!(bench_csv(&run_bench(&empty, &mut || 0).unwrap()), alloc::format!("{BENCH_HEADER}\n"));
        assert!(run_bench(&BenchConfig { n_list: vec![20], ..cfg }, &mut || 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reply_back_equals_oracle(n in 1usize..=10, k in 1usize..=4, p in 0.0f64..=1.0, q in 0.0f64..=1.0, seed in any::<u64>()) {
            let band = LabelBand { symbols: 3, ..LabelBand::default() };
            let g = gen_network_with(n, p, seed, &band).unwrap();
            let pat = gen_network_with(k, q, seed ^ 0x9e37, &band).unwrap();
            let reply = solve_reply_back(&g, &pat);
            prop_assert_eq!(&reply.matches, &solve_bruteforce(&g, &pat).unwrap());
            prop_assert_eq!(reply.label_rounds, 1);
            if k <= n {
                let planted = embed_pattern(&g, &pat, seed).unwrap();
                prop_assert!(solve_reply_back(&planted.graph, &pat).matches.contains(&planted.placement));
            }
        }
    }
}

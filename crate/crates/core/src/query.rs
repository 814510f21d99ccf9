//! Answering pattern queries against an argument column.
//!
//! A query graph is mapped to frequencies: every (channel, kind) pair owns one
//! sub-band of the chain, and a seed of that kind sounds the sub-band's
//! central peak. The frequencies are broadcast once ([`reply_back`]); every
//! stored argument owning a matching peak responds in that single round.
//! Responders are widened to everything under their highest coupling rules
//! ([`umbrella_expand`]), scored against the query ([`match_score`]), pruned
//! of contradictory candidates ([`filter_contradictions`]), and the best
//! candidates' then-graphs are fused into an answer. The answer is sent round
//! again together with the query until it stops changing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{PeakRef, ResonanceChain};
use crate::column::{Argument, ArgumentColumn, Member};
use crate::fractal::decompose::{seed_slot, SLOT_COUNT};
use crate::fractal::{decompose_with, Channel, DecomposeConfig, FractalError, FractalSeed, GridImage, PrimitiveKind, Relation, SeedGraph};
use crate::math::{hypot, ln};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("no arguments have been learned")]
    EmptyColumn,
    #[error("query chain does not match the column's chain")]
    ChainMismatch,
    #[error("chain offers room for {available} of {needed} seed slots")]
    ChainTooSmall { available: usize, needed: usize },
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T, E = QueryError> = core::result::Result<T, E>;

/// `(layer, triplet, sub-band)`.
pub type BandSlot = (usize, usize, usize);

/// Which peak a (channel, kind) seed sounds.
///
/// Sub-bands are chosen pairwise disjoint, lowest first (earliest upper edge
/// wins); slot `i` takes band `i mod k` and, if the chain has fewer than 50
/// disjoint bands, the next interior peak nearest the band's geometric
/// centre. Pose is not encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMap {
    slots: Vec<(PeakRef, BandSlot)>,
}

impl SeedMap {
    #[allow(clippy::type_complexity)]
    pub fn new(chain: &ResonanceChain) -> Result<Self> {
        // (lo, hi, slot, interior peaks)
        let mut bands: Vec<(f64, f64, BandSlot, Vec<(f64, u32)>)> = Vec::new();
        for (li, layer) in chain.layers().iter().enumerate() {
            for (ti, t) in layer.triplets.iter().enumerate() {
                for (si, sb) in t.sub.iter().enumerate() {
                    let interior: Vec<(f64, u32)> =
                        sb.peaks.iter().filter(|p| p.frequency > sb.lo && p.frequency < sb.hi).map(|p| (p.frequency, p.id)).collect();
                    if !interior.is_empty() {
                        bands.push((sb.lo, sb.hi, (li, ti, si), interior));
                    }
                }
            }
        }
        bands.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)).then(a.2.cmp(&b.2)));
        let mut chosen = Vec::new();
        let mut edge = f64::NEG_INFINITY;
        for b in bands {
            if b.0 > edge {
                edge = b.1;
                chosen.push(b);
            }
        }
        let k = chosen.len();
        let capacity: usize = chosen.iter().map(|b| b.3.len()).min().unwrap_or(0) * k;
        if k == 0 || capacity < SLOT_COUNT {
            return Err(QueryError::ChainTooSmall { available: capacity, needed: SLOT_COUNT });
        }
        let mut slots = Vec::with_capacity(SLOT_COUNT);
        for i in 0..SLOT_COUNT {
            let (lo, hi, slot, peaks) = &chosen[i % k];
            let centre = 0.5 * (ln(*lo) + ln(*hi));
            let mut ranked = peaks.clone();
            ranked.sort_by(|a, b| (ln(a.0) - centre).abs().total_cmp(&(ln(b.0) - centre).abs()).then(a.1.cmp(&b.1)));
            slots.push((PeakRef::new(slot.0, ranked[i / k].1), *slot));
        }
        Ok(Self { slots })
    }

    pub fn peak(&self, channel: Channel, kind: PrimitiveKind) -> PeakRef {
        self.slots[seed_slot(channel, kind)].0
    }

    pub fn band(&self, channel: Channel, kind: PrimitiveKind) -> BandSlot {
        self.slots[seed_slot(channel, kind)].1
    }

    pub fn peaks_of(&self, graph: &SeedGraph) -> BTreeSet<PeakRef> {
        graph.seeds.iter().map(|s| self.peak(graph.channel, s.kind)).collect()
    }

    /// Argument whose peak sets are read off two graphs.
    pub fn argument(&self, if_graph: SeedGraph, then_graph: SeedGraph) -> Argument {
        Argument::new(self.peaks_of(&if_graph), self.peaks_of(&then_graph)).with_graphs(if_graph, then_graph)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub argument: u32,
    pub matched: BTreeSet<PeakRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyBack {
    /// Ascending by argument id.
    pub responders: Vec<Response>,
    /// Broadcast rounds used; always 1.
    pub rounds: usize,
}

/// Every stored peak, sorted by current frequency, with its owners.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplyIndex {
    entries: Vec<(f64, PeakRef, u32)>,
    match_relative: f64,
}

impl ReplyIndex {
    pub fn new(column: &ArgumentColumn) -> Self {
        let mut entries: Vec<(f64, PeakRef, u32)> = column
            .base()
            .iter()
            .flat_map(|a| a.peaks().into_iter().map(move |p| (p, a.id)))
            .map(|(p, id)| (column.frequency(p).expect("stored peaks exist"), p, id))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        Self { entries, match_relative: column.config().match_relative }
    }

    /// One broadcast of all frequencies at once.
    pub fn reply_back(&self, frequencies: &[f64]) -> ReplyBack {
        let mut hits: BTreeMap<u32, BTreeSet<PeakRef>> = BTreeMap::new();
        for &f in frequencies {
            let tol = self.match_relative * f.abs();
            let lo = self.entries.partition_point(|e| e.0 < f - tol);
            for e in self.entries[lo..].iter().take_while(|e| e.0 <= f + tol) {
                hits.entry(e.2).or_default().insert(e.1);
            }
        }
        ReplyBack { responders: hits.into_iter().map(|(argument, matched)| Response { argument, matched }).collect(), rounds: 1 }
    }
}

/// Arguments owning a peak within tolerance of any query frequency.
pub fn reply_back(column: &ArgumentColumn, frequencies: &[f64]) -> ReplyBack {
    ReplyIndex::new(column).reply_back(frequencies)
}

/// Weights of the three score terms; they sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub kinds: f64,
    pub edges: f64,
    pub pose: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self { kinds: 0.5, edges: 0.3, pose: 0.2 }
    }
}

fn multiset_jaccard<K: Ord + Clone>(a: &[K], b: &[K]) -> f64 {
    let count = |v: &[K]| {
        let mut m: BTreeMap<K, usize> = BTreeMap::new();
        v.iter().for_each(|k| *m.entry(k.clone()).or_default() += 1);
        m
    };
    let (ma, mb) = (count(a), count(b));
    let keys: BTreeSet<&K> = ma.keys().chain(mb.keys()).collect();
    let (mut inter, mut union) = (0usize, 0usize);
    for k in keys {
        let (x, y) = (ma.get(k).copied().unwrap_or(0), mb.get(k).copied().unwrap_or(0));
        inter += x.min(y);
        union += x.max(y);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn edge_keys(g: &SeedGraph) -> Vec<(PrimitiveKind, PrimitiveKind, Relation)> {
    g.edges
        .iter()
        .map(|e| {
            let (a, b) = (g.seeds[e.a].kind, g.seeds[e.b].kind);
            match e.relation {
                Relation::Contains => (a, b, e.relation),
                _ => (a.min(b), a.max(b), e.relation),
            }
        })
        .collect()
}

/// Similarity of two placements of one kind: centre distance and size
/// difference, both relative to the larger scale.
fn pose_agreement(a: &FractalSeed, b: &FractalSeed) -> f64 {
    let s = a.scale.max(b.scale);
    if !(s > 0.0) {
        return 0.0;
    }
    let d = hypot(a.center.0 - b.center.0, a.center.1 - b.center.1);
    (1.0 - d / s).max(0.0) * (a.scale.min(b.scale) / s)
}

/// `w_k · kind Jaccard + w_e · edge Jaccard + w_p · pose agreement`.
///
/// Kinds and edges compare as multisets (edges by the kinds they join and
/// their relation). When neither graph has edges the edge term repeats the
/// kind term. Pose pairs every query seed greedily with the best unused
/// stored seed of its kind and averages over the larger graph. Graphs of
/// different channels share nothing.
pub fn match_score(query: &SeedGraph, stored: &SeedGraph, w: ScoreWeights) -> f64 {
    if query.channel != stored.channel || query.seeds.is_empty() || stored.seeds.is_empty() {
        return 0.0;
    }
    let qk: Vec<PrimitiveKind> = query.seeds.iter().map(|s| s.kind).collect();
    let sk: Vec<PrimitiveKind> = stored.seeds.iter().map(|s| s.kind).collect();
    let kinds = multiset_jaccard(&qk, &sk);
    let edges = if query.edges.is_empty() && stored.edges.is_empty() { kinds } else { multiset_jaccard(&edge_keys(query), &edge_keys(stored)) };
    let mut used = alloc::vec![false; stored.seeds.len()];
    let mut pose = 0.0;
    for q in &query.seeds {
        let best = stored
            .seeds
            .iter()
            .enumerate()
            .filter(|(j, s)| !used[*j] && s.kind == q.kind)
            .map(|(j, s)| (pose_agreement(q, s), j))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        if let Some((v, j)) = best {
            used[j] = true;
            pose += v;
        }
    }
    pose /= query.seeds.len().max(stored.seeds.len()) as f64;
    (w.kinds * kinds + w.edges * edges + w.pose * pose).clamp(0.0, 1.0)
}

/// If- and then-graph of an argument as one graph; then-seeds keep their
/// own positions.
pub fn context_graph(arg: &Argument, align_tolerance: f64) -> Option<SeedGraph> {
    let (i, t) = (arg.if_graph.as_ref()?, arg.then_graph.as_ref()?);
    let mut g = SeedGraph {
        seeds: i.seeds.iter().chain(&t.seeds).cloned().collect(),
        edges: Vec::new(),
        channel: i.channel,
        width: i.width.max(t.width),
        height: i.height.max(t.height),
    };
    g.relink(align_tolerance);
    Some(g)
}

/// Responders plus every base argument under the highest coupling rules
/// reachable from them. Always a superset of `initial`.
pub fn umbrella_expand(column: &ArgumentColumn, initial: &BTreeSet<u32>) -> BTreeSet<u32> {
    let rules = column.natural_rules();
    let mut parents: BTreeMap<Member, Vec<usize>> = BTreeMap::new();
    for (i, r) in rules.iter().enumerate() {
        for m in &r.members {
            parents.entry(*m).or_default().push(i);
        }
    }
    let mut out = initial.clone();
    let mut seen = alloc::vec![false; rules.len()];
    let mut stack: Vec<usize> = initial.iter().filter_map(|id| parents.get(&Member::Argument(*id))).flatten().copied().collect();
    while let Some(i) = stack.pop() {
        if core::mem::replace(&mut seen[i], true) {
            continue;
        }
        match parents.get(&Member::Rule(i)) {
            Some(up) => stack.extend(up.iter().copied()),
            None => out.extend(rules[i].base.iter().copied()),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub argument: u32,
    pub label: String,
    pub score: f64,
    pub then_set: BTreeSet<PeakRef>,
}

/// Drops candidates that would drive a different peak of a sub-band already
/// claimed by a preferred candidate. Preference order: position of the label
/// in `preference` (unlisted labels last), then higher score, then lower id.
/// Survivors keep their input order.
pub fn filter_contradictions(column: &ArgumentColumn, candidates: &[Candidate], preference: &[String]) -> Vec<Candidate> {
    let rank = |c: &Candidate| preference.iter().position(|l| *l == c.label).unwrap_or(preference.len());
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&candidates[a], &candidates[b]);
        rank(x).cmp(&rank(y)).then(y.score.total_cmp(&x.score)).then(x.argument.cmp(&y.argument))
    });
    let slot = |p: &PeakRef| column.working().locate(*p).map(|l| (p.layer, l.triplet, l.sub));
    let tol = column.config().match_relative;
    let mut claimed: BTreeMap<BandSlot, f64> = BTreeMap::new();
    let mut keep = alloc::vec![false; candidates.len()];
    for k in order {
        let c = &candidates[k];
        let targets: Vec<(BandSlot, f64)> = c.then_set.iter().filter_map(|p| Some((slot(p)?, column.frequency(*p)?))).collect();
        let clash = targets.iter().any(|(s, f)| claimed.get(s).is_some_and(|g| (g - f).abs() > tol * f.abs()));
        if !clash {
            claimed.extend(targets);
            keep[k] = true;
        }
    }
    candidates.iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c.clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Image(GridImage),
    Graph(SeedGraph),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub payload: Payload,
    pub max_cycles: usize,
    /// Largest answer change (1 − Jaccard) counted as converged.
    pub epsilon: f64,
}

pub const DEFAULT_MAX_CYCLES: usize = 8;
pub const DEFAULT_EPSILON: f64 = 0.02;

impl Query {
    pub fn image(image: GridImage) -> Self {
        Self { payload: Payload::Image(image), max_cycles: DEFAULT_MAX_CYCLES, epsilon: DEFAULT_EPSILON }
    }

    pub fn graph(graph: SeedGraph) -> Self {
        Self { payload: Payload::Graph(graph), max_cycles: DEFAULT_MAX_CYCLES, epsilon: DEFAULT_EPSILON }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryConfig {
    pub weights: ScoreWeights,
    /// Candidates within this fraction of the best score are fused.
    pub fuse_ratio: f64,
    pub preference: Vec<String>,
    pub decompose: DecomposeConfig,
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self { weights: ScoreWeights::default(), fuse_ratio: 0.9, preference: Vec::new(), decompose: DecomposeConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredArgument {
    pub argument: u32,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub graph: SeedGraph,
    /// First-cycle candidates that survived filtering, best first.
    pub matched: Vec<ScoredArgument>,
    pub cycles_used: usize,
    pub converged: bool,
    /// Broadcast rounds over all cycles (one per cycle).
    pub rounds: usize,
}

/// Everything a query needs from a frozen column.
#[derive(Debug, Clone)]
pub struct QueryEngine<'a> {
    column: &'a ArgumentColumn,
    map: SeedMap,
    index: ReplyIndex,
    contexts: BTreeMap<u32, SeedGraph>,
    config: QueryConfig,
}

impl<'a> QueryEngine<'a> {
    /// `chain` must be the column's pristine chain.
    pub fn new(column: &'a ArgumentColumn, chain: &ResonanceChain, config: QueryConfig) -> Result<Self> {
        if chain.fingerprint() != column.pristine().fingerprint() {
            return Err(QueryError::ChainMismatch);
        }
        if !(config.weights.kinds >= 0.0 && config.weights.edges >= 0.0 && config.weights.pose >= 0.0)
            || (config.weights.kinds + config.weights.edges + config.weights.pose - 1.0).abs() > 1e-9
        {
            return Err(QueryError::InvalidParameter("score weights must be non-negative and sum to 1"));
        }
        let align = config.decompose.align_tolerance;
        let contexts = column.base().iter().filter_map(|a| Some((a.id, context_graph(a, align)?))).collect();
        Ok(Self { column, map: SeedMap::new(chain)?, index: ReplyIndex::new(column), contexts, config })
    }

    pub fn seed_map(&self) -> &SeedMap {
        &self.map
    }

    /// Current frequencies of the peaks a graph sounds.
    pub fn frequencies(&self, graph: &SeedGraph) -> Vec<f64> {
        self.map.peaks_of(graph).into_iter().map(|p| self.column.frequency(p).expect("slot peaks exist")).collect()
    }

    /// Score of one stored argument against a query graph. Arguments without
    /// graphs are scored by peak-set Jaccard.
    pub fn score(&self, query: &SeedGraph, arg: &Argument) -> f64 {
        match self.contexts.get(&arg.id) {
            Some(ctx) => match_score(query, ctx, self.config.weights),
            None => {
                let q = self.map.peaks_of(query);
                let s = arg.peaks();
                let union = q.union(&s).count();
                if union == 0 {
                    0.0
                } else {
                    q.intersection(&s).count() as f64 / union as f64
                }
            }
        }
    }

    /// Scores of every stored argument, best first (ties: lower id).
    pub fn exhaustive_scan(&self, query: &SeedGraph) -> Vec<ScoredArgument> {
        let mut v: Vec<ScoredArgument> =
            self.column.base().iter().map(|a| ScoredArgument { argument: a.id, label: a.label.clone(), score: self.score(query, a) }).collect();
        sort_scored(&mut v);
        v
    }

    pub fn ask(&self, query: &Query) -> Result<Answer> {
        if self.column.is_empty() {
            return Err(QueryError::EmptyColumn);
        }
        if query.max_cycles == 0 || !(query.epsilon >= 0.0) {
            return Err(QueryError::InvalidParameter("max_cycles must be at least 1 and epsilon non-negative"));
        }
        let q0 = match &query.payload {
            Payload::Graph(g) => g.clone(),
            Payload::Image(img) => decompose_with(img, &self.config.decompose)?,
        };
        if q0.is_empty() {
            return Ok(Answer { graph: q0, matched: Vec::new(), cycles_used: 0, converged: true, rounds: 0 });
        }
        let mut current = q0.clone();
        let mut previous: Option<SeedGraph> = None;
        let mut matched = Vec::new();
        let mut answer = SeedGraph::empty(q0.width, q0.height, q0.channel);
        let (mut cycles, mut converged) = (0, false);
        while cycles < query.max_cycles {
            cycles += 1;
            let reply = self.index.reply_back(&self.frequencies(&current));
            let responders: BTreeSet<u32> = reply.responders.iter().map(|r| r.argument).collect();
            let expanded = umbrella_expand(self.column, &responders);
            let mut scored: Vec<Candidate> = expanded
                .iter()
                .filter_map(|id| self.column.argument(*id))
                .map(|a| Candidate { argument: a.id, label: a.label.clone(), score: self.score(&current, a), then_set: a.then_set.clone() })
                .filter(|c| c.score > 0.0)
                .collect();
            scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.argument.cmp(&b.argument)));
            let kept = filter_contradictions(self.column, &scored, &self.config.preference);
            if cycles == 1 {
                matched = kept.iter().map(|c| ScoredArgument { argument: c.argument, label: c.label.clone(), score: c.score }).collect();
                sort_scored(&mut matched);
            }
            answer = self.fuse(&kept, &q0);
            if let Some(prev) = &previous {
                if 1.0 - graph_jaccard(prev, &answer) < query.epsilon {
                    converged = true;
                    break;
                }
            } else if answer.is_empty() {
                converged = true;
                break;
            }
            current = union_graph(&q0, &answer, self.config.decompose.align_tolerance);
            previous = Some(answer.clone());
        }
        Ok(Answer { graph: answer, matched, cycles_used: cycles, converged, rounds: cycles })
    }

    /// Then-graphs of the leading candidates, seeds weighted by candidate
    /// score; coincident seeds (same kind within one cell) keep the heavier.
    fn fuse(&self, kept: &[Candidate], like: &SeedGraph) -> SeedGraph {
        let best = kept.iter().map(|c| c.score).fold(0.0, f64::max);
        let mut seeds: Vec<FractalSeed> = Vec::new();
        for c in kept.iter().filter(|c| c.score >= self.config.fuse_ratio * best) {
            let Some(then) = self.column.argument(c.argument).and_then(|a| a.then_graph.as_ref()) else { continue };
            for s in &then.seeds {
                let mut s = s.clone();
                s.score *= c.score;
                match seeds.iter_mut().find(|q| q.kind == s.kind && hypot(q.center.0 - s.center.0, q.center.1 - s.center.1) <= 1.0) {
                    Some(q) if s.score > q.score => *q = s,
                    Some(_) => {}
                    None => seeds.push(s),
                }
            }
        }
        let mut g = SeedGraph { seeds, edges: Vec::new(), channel: like.channel, width: like.width, height: like.height };
        g.relink(self.config.decompose.align_tolerance);
        g
    }
}

fn sort_scored(v: &mut [ScoredArgument]) {
    v.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.argument.cmp(&b.argument)));
}

fn seed_key(s: &FractalSeed) -> (PrimitiveKind, i64, i64) {
    (s.kind, libm::round(s.center.0) as i64, libm::round(s.center.1) as i64)
}

/// Jaccard similarity of two graphs' seed sets, keyed by kind and rounded
/// centre.
pub fn graph_jaccard(a: &SeedGraph, b: &SeedGraph) -> f64 {
    let ka: Vec<_> = a.seeds.iter().map(seed_key).collect();
    let kb: Vec<_> = b.seeds.iter().map(seed_key).collect();
    multiset_jaccard(&ka, &kb)
}

fn union_graph(a: &SeedGraph, b: &SeedGraph, align_tolerance: f64) -> SeedGraph {
    let mut seeds = a.seeds.clone();
    for s in &b.seeds {
        if !seeds.iter().any(|q| seed_key(q) == seed_key(s)) {
            seeds.push(s.clone());
        }
    }
    let mut g = SeedGraph { seeds, edges: Vec::new(), channel: a.channel, width: a.width.max(b.width), height: a.height.max(b.height) };
    g.relink(align_tolerance);
    g
}

/// One-shot [`QueryEngine::ask`].
pub fn ask(column: &ArgumentColumn, chain: &ResonanceChain, query: &Query, config: QueryConfig) -> Result<Answer> {
    QueryEngine::new(column, chain, config)?.ask(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::load_brain_model;
    use crate::column::{ColumnConfig, WriteMode};
    use crate::fractal::decompose::layer_for_scale;
    use crate::fractal::primitives::draw_primitive;
    use crate::fractal::{Bitmap, SeedEdge};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seed(kind: PrimitiveKind, center: (f64, f64), scale: f64, group: usize) -> FractalSeed {
        let e = (center.0 as i32 - 1, center.1 as i32 - 1, center.0 as i32 + 1, center.1 as i32 + 1);
        FractalSeed { kind, center, scale, orientation: 0.0, layer: layer_for_scale(scale), score: 1.0, group, extent: e, projected: false }
    }

    fn graph(seeds: Vec<FractalSeed>) -> SeedGraph {
        let mut g = SeedGraph { seeds, edges: vec![], channel: Channel::Visual, width: 64, height: 64 };
        g.relink(1.5);
        g
    }

    fn four() -> SeedGraph {
        graph(vec![
            seed(PrimitiveKind::Circle, (10.0, 10.0), 3.0, 0),
            seed(PrimitiveKind::Square, (10.0, 30.0), 3.0, 1),
            seed(PrimitiveKind::Triangle, (30.0, 30.0), 3.0, 2),
            seed(PrimitiveKind::StraightLine, (50.0, 50.0), 3.0, 3),
        ])
    }

    #[test]
    fn score_examples() {
        let w = ScoreWeights::default();
        let g = four();
        assert_eq!(match_score(&g, &g, w), 1.0);
        let a = graph(vec![seed(PrimitiveKind::Circle, (5.0, 5.0), 3.0, 0)]);
        let b = graph(vec![seed(PrimitiveKind::Square, (40.0, 40.0), 3.0, 0)]);
        assert_eq!(match_score(&a, &b, w), 0.0);
        // the four-seed graph has exactly two edges: circle-square and
        // square-triangle share a column / a row
        assert_eq!(g.edges, vec![SeedEdge { a: 0, b: 1, relation: Relation::Aligned }, SeedEdge { a: 1, b: 2, relation: Relation::Aligned }]);
        let mut minus = four();
        minus.seeds.remove(2);
        minus.relink(1.5);
        // kinds 3/4, edges 1/2, pose 3 exact pairs over 4 seeds
        let hand = 0.5 * 0.75 + 0.3 * 0.5 + 0.2 * 0.75;
        assert!((match_score(&minus, &g, w) - hand).abs() < 1e-12);
        assert!((match_score(&g, &minus, w) - hand).abs() < 1e-12);
        let mut other = g.clone();
        other.channel = Channel::Auditory;
        assert_eq!(match_score(&g, &other, w), 0.0);
    }

    #[test]
    fn seed_map_is_injective_with_disjoint_bands() {
        let chain = load_brain_model();
        let m = SeedMap::new(&chain).unwrap();
        let mut peaks = BTreeSet::new();
        let mut bands = BTreeSet::new();
        for ch in Channel::ALL {
            for k in PrimitiveKind::ALL {
                assert!(peaks.insert(m.peak(ch, k)));
                assert!(bands.insert(m.band(ch, k)));
            }
        }
        let ranges: Vec<_> = bands.iter().map(|&(l, t, s)| chain.layers()[l].triplets[t].sub[s].range()).collect();
        for (i, a) in ranges.iter().enumerate() {
            for b in &ranges[i + 1..] {
                assert!(a.hi < b.lo || b.hi < a.lo);
            }
        }
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> SeedGraph {
        let seeds = (0..n)
            .map(|g| seed(PrimitiveKind::ALL[rng.gen_range(0..10)], (rng.gen_range(4.0..60.0), rng.gen_range(4.0..60.0)), rng.gen_range(3.0..12.0), g))
            .collect();
        graph(seeds)
    }

    fn random_column(rng: &mut ChaCha8Rng, n: usize) -> ArgumentColumn {
        let chain = load_brain_model();
        let map = SeedMap::new(&chain).unwrap();
        let mut c = ArgumentColumn::new(chain, ColumnConfig::default()).unwrap();
        let mut args = Vec::new();
        while args.len() < n {
            let (a, b) = (rng.gen_range(1..4), rng.gen_range(1..3));
            let arg = map.argument(random_graph(rng, a), random_graph(rng, b));
            if !args.iter().any(|x: &Argument| x.if_set == arg.if_set && x.then_set == arg.then_set) {
                args.push(arg);
            }
        }
        c.write_batch(args, WriteMode::Single).unwrap();
        c
    }

    #[test]
    fn reply_back_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let c = random_column(&mut rng, 12);
            let all: Vec<f64> = c.working().peaks().map(|(_, p)| p.frequency).collect();
            let freqs: Vec<f64> = (0..rng.gen_range(1..6)).map(|_| all[rng.gen_range(0..all.len())]).collect();
            let got = reply_back(&c, &freqs);
            assert_eq!(got.rounds, 1);
            let tol = c.config().match_relative;
            let mut brute = Vec::new();
            for a in c.base() {
                let m: BTreeSet<PeakRef> = a.peaks().into_iter().filter(|&p| freqs.iter().any(|f| (c.frequency(p).unwrap() - f).abs() <= tol * f)).collect();
                if !m.is_empty() {
                    brute.push(Response { argument: a.id, matched: m });
                }
            }
            assert_eq!(got.responders, brute);
        }
    }

    #[test]
    fn reply_back_on_exact_and_missing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_column(&mut rng, 4);
        let a = &c.base()[2];
        let f = c.frequency(*a.if_set.iter().next().unwrap()).unwrap();
        assert!(reply_back(&c, &[f]).responders.iter().any(|r| r.argument == a.id));
        let none = reply_back(&c, &[1.234_567e-20]);
        assert!(none.responders.is_empty());
        assert_eq!(none.rounds, 1);
    }

    #[test]
    fn umbrella_closure() {
        let chain = load_brain_model();
        let mut c = ArgumentColumn::new(chain, ColumnConfig::default()).unwrap();
        let p = PeakRef::new;
        // five arguments hanging off one if-peak share an apex
        let ids: Vec<u32> = (0..5).map(|k| c.write_argument(Argument::new([p(3, 0)], [p(3, 10 + k)]), WriteMode::Single).unwrap()).collect();
        let lone = c.write_argument(Argument::new([p(8, 0)], [p(8, 1)]), WriteMode::Single).unwrap();
        let got = umbrella_expand(&c, &[ids[0]].into_iter().collect());
        assert_eq!(got, ids.iter().copied().collect());
        assert_eq!(umbrella_expand(&c, &[lone].into_iter().collect()), [lone].into_iter().collect());
    }

    #[test]
    fn filter_examples() {
        let chain = load_brain_model();
        let c = ArgumentColumn::new(chain, ColumnConfig::default()).unwrap();
        let p = PeakRef::new;
        let cand =
            |id: u32, label: &str, score: f64, then: PeakRef| Candidate { argument: id, label: label.into(), score, then_set: [then].into_iter().collect() };
        let free = vec![cand(1, "x", 0.9, p(4, 0)), cand(2, "y", 0.5, p(4, 30))];
        assert_eq!(filter_contradictions(&c, &free, &[]), free);
        // peaks 40 and 41 of one layer share a sub-band
        let clash = vec![cand(1, "fear", 0.4, p(4, 40)), cand(2, "joy", 0.9, p(4, 41))];
        let pref = vec!["fear".into(), "joy".into()];
        let out = filter_contradictions(&c, &clash, &pref);
        assert_eq!(out, vec![clash[0].clone()]);
        assert_eq!(filter_contradictions(&c, &out, &pref), out);
        // without a preference the higher score wins
        assert_eq!(filter_contradictions(&c, &clash, &[]), vec![clash[1].clone()]);
    }

    fn learned() -> (ArgumentColumn, SeedMap, SeedGraph, SeedGraph) {
        let chain = load_brain_model();
        let map = SeedMap::new(&chain).unwrap();
        let mut c = ArgumentColumn::new(chain, ColumnConfig::default()).unwrap();
        let circle = graph(vec![seed(PrimitiveKind::Circle, (20.0, 20.0), 6.0, 0)]);
        let square = graph(vec![seed(PrimitiveKind::Square, (40.0, 40.0), 6.0, 0)]);
        let tri = graph(vec![seed(PrimitiveKind::Triangle, (40.0, 10.0), 6.0, 0)]);
        let line = graph(vec![seed(PrimitiveKind::StraightLine, (10.0, 50.0), 8.0, 0)]);
        c.write_argument(map.argument(circle.clone(), square.clone()).with_label("circle-square"), WriteMode::Single).unwrap();
        c.write_argument(map.argument(tri.clone(), line.clone()).with_label("triangle-line"), WriteMode::Single).unwrap();
        c.write_argument(map.argument(square.clone(), tri).with_label("square-triangle"), WriteMode::Single).unwrap();
        (c, map, circle, square)
    }

    #[test]
    fn closed_loop_returns_the_then_graph() {
        let (c, _, circle, square) = learned();
        let ans = ask(&c, c.pristine(), &Query::graph(circle), QueryConfig::default()).unwrap();
        assert_eq!(ans.matched[0].label, "circle-square");
        assert!(ans.converged && ans.cycles_used <= 2, "{ans:?}");
        assert!(square.seeds.iter().all(|s| ans.graph.seeds.iter().any(|t| seed_key(t) == seed_key(s))));
    }

    #[test]
    fn noisy_pose_still_finds_the_argument() {
        let (c, _, _, _) = learned();
        let engine = QueryEngine::new(&c, c.pristine(), QueryConfig::default()).unwrap();
        for (dx, dy) in [(1.0, 0.0), (-0.7, 0.7), (0.0, -1.0)] {
            let q = graph(vec![seed(PrimitiveKind::Circle, (20.0 + dx, 20.0 + dy), 6.0, 0)]);
            let ans = engine.ask(&Query::graph(q.clone())).unwrap();
            assert_eq!(ans.matched[0].argument, engine.exhaustive_scan(&q)[0].argument);
            assert_eq!(ans.matched[0].label, "circle-square");
        }
    }

    #[test]
    fn blank_image_and_empty_column() {
        let (c, _, _, _) = learned();
        let ans = ask(&c, c.pristine(), &Query::image(GridImage::filled(16, 16, 0.0).unwrap()), QueryConfig::default()).unwrap();
        assert!(ans.graph.is_empty() && ans.converged && ans.matched.is_empty());
        let empty = ArgumentColumn::new(load_brain_model(), ColumnConfig::default()).unwrap();
        let q = Query::graph(four());
        assert_eq!(ask(&empty, empty.pristine(), &q, QueryConfig::default()), Err(QueryError::EmptyColumn));
    }

    #[test]
    fn image_query_through_decomposition() {
        let chain = load_brain_model();
        let map = SeedMap::new(&chain).unwrap();
        let mut c = ArgumentColumn::new(chain, ColumnConfig::default()).unwrap();
        let draw = |k: PrimitiveKind, at: (f64, f64)| {
            let mut b = Bitmap::new(40, 40);
            draw_primitive(&mut b, k, at, 8.0, 0.0);
            GridImage::from_bitmap(&b)
        };
        let d = |img: &GridImage| crate::fractal::decompose(img).unwrap();
        c.write_argument(map.argument(d(&draw(PrimitiveKind::Circle, (20.0, 20.0))), d(&draw(PrimitiveKind::Square, (20.0, 20.0)))), WriteMode::Single)
            .unwrap();
        c.write_argument(map.argument(d(&draw(PrimitiveKind::Triangle, (20.0, 20.0))), d(&draw(PrimitiveKind::Circle, (20.0, 20.0)))), WriteMode::Single)
            .unwrap();
        let ans = ask(&c, c.pristine(), &Query::image(draw(PrimitiveKind::Circle, (21.0, 20.0))), QueryConfig::default()).unwrap();
        assert_eq!(ans.matched[0].argument, 1);
        assert!(ans.graph.seeds.iter().any(|s| s.kind == PrimitiveKind::Square));
    }

    #[test]
    fn chain_mismatch_is_rejected() {
        let (c, _, circle, _) = learned();
        let other = c.working().shift_peak(PeakRef::new(0, 3), c.frequency(PeakRef::new(0, 3)).unwrap() * 1.0001).unwrap();
        assert!(matches!(ask(&c, &other, &Query::graph(circle), QueryConfig::default()), Err(QueryError::ChainMismatch)));
    }

    fn scaled(g: &SeedGraph, k: f64) -> SeedGraph {
        let mut g = g.clone();
        for s in &mut g.seeds {
            s.center = (s.center.0 * k, s.center.1 * k);
            s.scale *= k;
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ask_agrees_with_exhaustive_scan(seed_value in 0u64..1000, noise in -1.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
            let c = random_column(&mut rng, 8);
            let engine = QueryEngine::new(&c, c.pristine(), QueryConfig::default()).unwrap();
            let pick = &c.base()[rng.gen_range(0..c.len())];
            let mut q = pick.if_graph.clone().unwrap();
            for s in &mut q.seeds {
                s.center.0 += noise;
            }
            let ans = engine.ask(&Query::graph(q.clone())).unwrap();
            let scan = engine.exhaustive_scan(&q);
            prop_assert!(ans.cycles_used <= DEFAULT_MAX_CYCLES);
            prop_assert_eq!(ans.matched[0].argument, scan[0].argument);
            prop_assert!(ans.matched.windows(2).all(|w| w[0].score >= w[1].score));
        }

        #[test]
        fn umbrella_is_monotone(seed_value in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
            let c = random_column(&mut rng, 10);
            let init: BTreeSet<u32> = c.base().iter().map(|a| a.id).filter(|_| rng.gen_bool(0.3)).collect();
            prop_assert!(umbrella_expand(&c, &init).is_superset(&init));
        }

        #[test]
        fn ranking_survives_uniform_scaling(seed_value in 0u64..1000, k in 0.25f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
            let q = random_graph(&mut rng, 2);
            let stored: Vec<SeedGraph> = (0..6).map(|_| random_graph(&mut rng, 3)).collect();
            let w = ScoreWeights::default();
            let argmax = |q: &SeedGraph, s: &[SeedGraph]| {
                (0..s.len()).max_by(|&a, &b| match_score(q, &s[a], w).total_cmp(&match_score(q, &s[b], w)).then(b.cmp(&a))).unwrap()
            };
            let big: Vec<SeedGraph> = stored.iter().map(|g| scaled(g, k)).collect();
            prop_assert_eq!(argmax(&q, &stored), argmax(&scaled(&q, k), &big));
        }
    }
}

//! The column of if-then arguments and its companion rule column.
//!
//! A base argument couples an "if" peak set to a "then" peak set of the
//! working chain. Writing an argument conformationally shifts peaks (the
//! then-peaks move toward the if-peaks in log-frequency, and in paired mode
//! the if-peaks move toward the then-peaks as well), and the column then
//! regrows its upper levels:
//!
//! - Natural coupling rules come from sharing: two entities of one level that
//!   share a peak, or whose peaks meet at the first harmonic, form a rule one
//!   level up whose peaks are the shared ones. Assembly repeats level by level
//!   up to [`ColumnConfig::level_cap`].
//! - The total rule count follows the growth law exactly: `n² + 1` after `n`
//!   single-peak writes, `n⁴ + 1` in paired mode. Natural rules beyond the law
//!   (or beyond the materialisation budget) are dropped in generation order;
//!   any shortfall is made up by placeholder rules that exist as a count only,
//!   with no members and no shared peaks.
//!
//! Every coupling rule has a phase rule whose threshold `τ(s) = τ₀ / s`
//! shrinks with the number `s` of base arguments under it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainError, Deviation, PeakRef, ResonanceChain, DEVIATION_TOLERANCE};
use crate::dynamics::{OscillatorNetwork, OscillatorSpec, DEFAULT_MATCH_RELATIVE};
use crate::fractal::SeedGraph;
use crate::math::{exp, ln};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ColumnError {
    #[error("argument needs non-empty if and then sets")]
    EmptySet,
    #[error("peak {0} is not in the working chain")]
    UnknownPeak(PeakRef),
    #[error("an argument with identical if and then sets is already stored (id {0})")]
    DuplicateArgument(u32),
    #[error("column is in {column:?} mode, write asked for {write:?}")]
    ModeMismatch { column: WriteMode, write: WriteMode },
    #[error("every frequency already matches a stored peak: nothing new to write")]
    NoSite,
    #[error("no argument with id {0}")]
    UnknownArgument(u32),
    #[error("region is empty")]
    EmptyRegion,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T, E = ColumnError> = core::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WriteMode {
    /// Only the then-peaks move; the column grows as `n² + 1`.
    Single,
    /// Both sides move; the column grows as `n⁴ + 1`.
    Paired,
}

impl WriteMode {
    pub fn name(self) -> &'static str {
        match self {
            WriteMode::Single => "single",
            WriteMode::Paired => "paired",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "single" => Some(WriteMode::Single),
            "paired" => Some(WriteMode::Paired),
            _ => None,
        }
    }
}

/// Total coupling-rule count after `n` base writes.
pub fn growth_law(n: usize, mode: WriteMode) -> u64 {
    if n == 0 {
        return 0;
    }
    let n = n as u64;
    match mode {
        WriteMode::Single => n.saturating_mul(n).saturating_add(1),
        WriteMode::Paired => n.saturating_mul(n).saturating_mul(n).saturating_mul(n).saturating_add(1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnConfig {
    /// `τ₀`, simulated seconds.
    pub tau0: f64,
    /// Highest materialised coupling level.
    pub level_cap: usize,
    /// Relative frequency tolerance for a match.
    pub match_relative: f64,
    /// Fraction of the log-frequency gap a write closes.
    pub write_gain: f64,
    /// Most natural rules kept in memory; the rest of the law is counted only.
    pub rule_budget: usize,
}

impl Default for ColumnConfig {
    fn default() -> Self {
        Self { tau0: 1.0, level_cap: 8, match_relative: DEFAULT_MATCH_RELATIVE, write_gain: 0.1, rule_budget: 1 << 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    /// Assigned by the column on write.
    pub id: u32,
    pub if_set: BTreeSet<PeakRef>,
    pub then_set: BTreeSet<PeakRef>,
    /// Always 0 for stored arguments.
    pub level: usize,
    /// Column time of the write.
    pub born_at: f64,
    /// Free-form tag used by preference filtering.
    pub label: String,
    /// Seed graphs the peak sets were read from, when known.
    pub if_graph: Option<SeedGraph>,
    pub then_graph: Option<SeedGraph>,
    /// Peaks moved by this argument's write.
    pub shifts: Vec<Deviation>,
}

impl Argument {
    pub fn new(if_set: impl IntoIterator<Item = PeakRef>, then_set: impl IntoIterator<Item = PeakRef>) -> Self {
        Self {
            id: 0,
            if_set: if_set.into_iter().collect(),
            then_set: then_set.into_iter().collect(),
            level: 0,
            born_at: 0.0,
            label: String::new(),
            if_graph: None,
            then_graph: None,
            shifts: Vec::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_graphs(mut self, if_graph: SeedGraph, then_graph: SeedGraph) -> Self {
        self.if_graph = Some(if_graph);
        self.then_graph = Some(then_graph);
        self
    }

    /// `if ∪ then`.
    pub fn peaks(&self) -> BTreeSet<PeakRef> {
        self.if_set.union(&self.then_set).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Member {
    Argument(u32),
    /// Index into [`ArgumentColumn::natural_rules`].
    Rule(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRule {
    pub level: usize,
    pub members: Vec<Member>,
    /// Peaks that induced the rule (shared directly or through the first
    /// harmonic).
    pub shared_peaks: BTreeSet<PeakRef>,
    /// Base argument ids under the rule.
    pub base: BTreeSet<u32>,
    /// Union of the members' then-sets.
    pub then_set: BTreeSet<PeakRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRule {
    /// Index of the governed coupling rule (natural rules first, then
    /// placeholders).
    pub rule: usize,
    pub cluster_size: usize,
    /// Seconds of sustained resonance before the cluster fires.
    pub tau: f64,
    pub target: BTreeSet<PeakRef>,
}

/// `τ(s) = τ₀ / s`.
pub fn phase_threshold(tau0: f64, cluster_size: usize) -> f64 {
    tau0 / cluster_size.max(1) as f64
}

/// A group of arguments that can fire together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cluster {
    Argument(u32),
    Rule(usize),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseOutcome {
    /// Clusters whose then-sets fired, in tie-break order.
    pub fired: Vec<Cluster>,
    /// Ready clusters that lost a contention.
    pub deactivated: Vec<Cluster>,
    /// Union of the fired then-sets.
    pub then_peaks: BTreeSet<PeakRef>,
    /// Input active set minus arguments that only belonged to losers.
    pub active: BTreeSet<u32>,
}

/// Where new information lands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WriteSite {
    /// Layer of the strongest beat.
    pub layer: usize,
    /// `(triplet, sub-band)` inside that layer.
    pub region: (usize, usize),
    pub peak: PeakRef,
    pub probe_hz: f64,
    pub beat_hz: f64,
    pub amplitude: f64,
    /// The next faster layer, the other reading of where a change is made.
    pub upper_layer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgumentColumn {
    config: ColumnConfig,
    mode: Option<WriteMode>,
    pristine: ResonanceChain,
    working: ResonanceChain,
    base: Vec<Argument>,
    rules: Vec<CouplingRule>,
    placeholders: u64,
    next_id: u32,
    time: f64,
}

impl ArgumentColumn {
    pub fn new(chain: ResonanceChain, config: ColumnConfig) -> Result<Self> {
        if !(config.tau0 > 0.0) || !(config.match_relative > 0.0) || !(0.0..=1.0).contains(&config.write_gain) {
            return Err(ColumnError::InvalidParameter("need tau0 > 0, match tolerance > 0, write gain in [0, 1]"));
        }
        Ok(Self { config, mode: None, working: chain.clone(), pristine: chain, base: Vec::new(), rules: Vec::new(), placeholders: 0, next_id: 1, time: 0.0 })
    }

    pub fn config(&self) -> ColumnConfig {
        self.config
    }

    /// Fixed by the first write.
    pub fn mode(&self) -> Option<WriteMode> {
        self.mode
    }

    pub fn pristine(&self) -> &ResonanceChain {
        &self.pristine
    }

    pub fn working(&self) -> &ResonanceChain {
        &self.working
    }

    pub fn base(&self) -> &[Argument] {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn argument(&self, id: u32) -> Option<&Argument> {
        self.base.iter().find(|a| a.id == id)
    }

    pub fn natural_rules(&self) -> &[CouplingRule] {
        &self.rules
    }

    pub fn placeholder_count(&self) -> u64 {
        self.placeholders
    }

    /// Natural plus placeholder rules; equals the growth law.
    pub fn coupling_rule_count(&self) -> u64 {
        self.rules.len() as u64 + self.placeholders
    }

    /// Current frequency of a peak in the working chain.
    pub fn frequency(&self, r: PeakRef) -> Option<f64> {
        self.working.peak(r).map(|p| p.frequency)
    }

    /// Stores `arg`, shifts its peaks and regrows the upper levels.
    pub fn write_argument(&mut self, arg: Argument, mode: WriteMode) -> Result<u32> {
        let id = self.write_base(arg, mode)?;
        self.self_assemble();
        Ok(id)
    }

    /// Writes several arguments with one assembly at the end. On error the
    /// column is left unchanged.
    pub fn write_batch(&mut self, args: impl IntoIterator<Item = Argument>, mode: WriteMode) -> Result<Vec<u32>> {
        let snapshot = self.clone();
        let mut ids = Vec::new();
        for a in args {
            match self.write_base(a, mode) {
                Ok(id) => ids.push(id),
                Err(e) => {
                    *self = snapshot;
                    return Err(e);
                }
            }
        }
        self.self_assemble();
        Ok(ids)
    }

    fn write_base(&mut self, mut arg: Argument, mode: WriteMode) -> Result<u32> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(ColumnError::ModeMismatch { column: m, write: mode });
            }
        }
        if arg.if_set.is_empty() || arg.then_set.is_empty() {
            return Err(ColumnError::EmptySet);
        }
        if let Some(p) = arg.peaks().into_iter().find(|&p| self.working.peak(p).is_none()) {
            return Err(ColumnError::UnknownPeak(p));
        }
        if let Some(d) = self.base.iter().find(|b| b.if_set == arg.if_set && b.then_set == arg.then_set) {
            return Err(ColumnError::DuplicateArgument(d.id));
        }
        arg.shifts = self.apply_write(&arg, mode)?;
        arg.id = self.next_id;
        arg.level = 0;
        arg.born_at = self.time;
        self.next_id += 1;
        self.time += 1.0;
        self.mode = Some(mode);
        let id = arg.id;
        self.base.push(arg);
        Ok(id)
    }

    /// Moves peaks of the working chain and returns the moves.
    fn apply_write(&mut self, arg: &Argument, mode: WriteMode) -> Result<Vec<Deviation>> {
        let mut moves = self.pull(&arg.then_set, &arg.if_set)?;
        if mode == WriteMode::Paired {
            moves.extend(self.pull(&arg.if_set, &arg.then_set)?);
        }
        Ok(moves)
    }

    /// Moves every peak of `movers` not in `toward` a fraction of the way to
    /// the log-mean of `toward`, staying inside its sub-band.
    fn pull(&mut self, movers: &BTreeSet<PeakRef>, toward: &BTreeSet<PeakRef>) -> Result<Vec<Deviation>> {
        let target = toward.iter().map(|&p| ln(self.working.peak(p).expect("checked").frequency)).sum::<f64>() / toward.len() as f64;
        let mut out = Vec::new();
        for &p in movers.iter().filter(|p| !toward.contains(p)) {
            let from = self.working.peak(p).expect("checked").frequency;
            let band = self.working.sub_band_of(p).expect("checked").range();
            let lf = ln(from);
            let to = exp(lf + self.config.write_gain * (target - lf)).clamp(band.lo, band.hi);
            if (to - from).abs() > DEVIATION_TOLERANCE * from {
                self.working.shift_in_place(p, to)?;
                out.push(Deviation { peak: p, from, to, delta: to - from });
            }
        }
        Ok(out)
    }

    /// Removes an argument; the working chain is rebuilt from the pristine
    /// one by replaying the remaining writes in order.
    pub fn remove_argument(&mut self, id: u32) -> Result<Argument> {
        let k = self.base.iter().position(|a| a.id == id).ok_or(ColumnError::UnknownArgument(id))?;
        let removed = self.base.remove(k);
        self.working = self.pristine.clone();
        let mode = self.mode.unwrap_or(WriteMode::Single);
        let mut base = core::mem::take(&mut self.base);
        for a in &mut base {
            a.shifts = self.apply_write(a, mode)?;
        }
        self.base = base;
        if self.base.is_empty() {
            self.mode = None;
        }
        self.self_assemble();
        Ok(removed)
    }

    /// Id the next write will receive.
    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    /// Rebuilds a column from its stored base: every argument keeps its id,
    /// birth time, label and graphs, the writes are replayed on `chain` in
    /// order and the upper levels regrow.
    pub fn restore(chain: ResonanceChain, config: ColumnConfig, mode: Option<WriteMode>, base: Vec<Argument>, next_id: u32, time: f64) -> Result<Self> {
        let mut c = Self::new(chain, config)?;
        if !base.is_empty() && mode.is_none() {
            return Err(ColumnError::InvalidParameter("a non-empty base needs a write mode"));
        }
        if base.windows(2).any(|w| w[0].id >= w[1].id) || base.last().is_some_and(|a| a.id >= next_id) || base.first().is_some_and(|a| a.id == 0) {
            return Err(ColumnError::InvalidParameter("argument ids must be positive, increasing and below the next id"));
        }
        if !(time >= 0.0) || base.iter().any(|a| !(a.born_at >= 0.0 && a.born_at < time)) {
            return Err(ColumnError::InvalidParameter("birth times must lie before the column time"));
        }
        let mode_value = mode.unwrap_or(WriteMode::Single);
        for mut a in base {
            if a.if_set.is_empty() || a.then_set.is_empty() {
                return Err(ColumnError::EmptySet);
            }
            if let Some(p) = a.peaks().into_iter().find(|&p| c.working.peak(p).is_none()) {
                return Err(ColumnError::UnknownPeak(p));
            }
            if let Some(d) = c.base.iter().find(|b| b.if_set == a.if_set && b.then_set == a.then_set) {
                return Err(ColumnError::DuplicateArgument(d.id));
            }
            a.shifts = c.apply_write(&a, mode_value)?;
            a.level = 0;
            c.base.push(a);
        }
        c.mode = mode.filter(|_| !c.base.is_empty());
        c.next_id = next_id;
        c.time = time;
        c.self_assemble();
        Ok(c)
    }

    /// Rebuilds the upper levels from the base. Pure in the base and the
    /// working chain, so repeating it changes nothing.
    pub fn self_assemble(&mut self) {
        let target = growth_law(self.base.len(), self.mode.unwrap_or(WriteMode::Single));
        let budget = (target.min(self.config.rule_budget as u64)) as usize;
        self.rules = self.assemble_rules(budget);
        self.placeholders = target - self.rules.len() as u64;
    }

    fn assemble_rules(&self, budget: usize) -> Vec<CouplingRule> {
        let partners = self.harmonic_partners();
        // level-0 entities
        let mut level: Vec<Entity> =
            self.base.iter().map(|a| Entity::new(Member::Argument(a.id), a.peaks(), [a.id].into_iter().collect(), a.then_set.clone(), &partners)).collect();
        let mut rules: Vec<CouplingRule> = Vec::new();
        for lv in 1..=self.config.level_cap {
            if rules.len() >= budget {
                break;
            }
            let mut index: BTreeMap<PeakRef, Vec<usize>> = BTreeMap::new();
            for (k, e) in level.iter().enumerate() {
                for &p in &e.peaks {
                    index.entry(p).or_default().push(k);
                }
            }
            let mut next = Vec::new();
            'outer: for x in 0..level.len() {
                let mut ys: Vec<usize> = level[x].reach.iter().filter_map(|p| index.get(p)).flatten().copied().filter(|&y| y > x).collect();
                ys.sort_unstable();
                ys.dedup();
                for y in ys {
                    if rules.len() >= budget {
                        break 'outer;
                    }
                    let (a, b) = (&level[x], &level[y]);
                    let shared: BTreeSet<PeakRef> =
                        a.peaks.iter().filter(|p| b.reach.contains(p)).chain(b.peaks.iter().filter(|p| a.reach.contains(p))).copied().collect();
                    let rule = CouplingRule {
                        level: lv,
                        members: alloc::vec![a.member, b.member],
                        shared_peaks: shared.clone(),
                        base: a.base.union(&b.base).copied().collect(),
                        then_set: a.then_set.union(&b.then_set).copied().collect(),
                    };
                    next.push(Entity::new(Member::Rule(rules.len()), shared, rule.base.clone(), rule.then_set.clone(), &partners));
                    rules.push(rule);
                }
            }
            if next.is_empty() {
                break;
            }
            level = next;
        }
        rules
    }

    /// Peaks whose frequencies are within tolerance of twice (or half) a
    /// referenced peak's frequency.
    fn harmonic_partners(&self) -> BTreeMap<PeakRef, Vec<PeakRef>> {
        let mut all: Vec<(f64, PeakRef)> = self.working.peaks().map(|(r, p)| (p.frequency, r)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let within = |f: f64| {
            let tol = self.config.match_relative * f;
            let lo = all.partition_point(|x| x.0 < f - tol);
            let hi = all.partition_point(|x| x.0 <= f + tol);
            all[lo..hi].iter().map(|x| x.1).collect::<Vec<_>>()
        };
        let mut out = BTreeMap::new();
        for a in &self.base {
            for p in a.peaks() {
                if out.contains_key(&p) {
                    continue;
                }
                let f = self.working.peak(p).expect("stored peaks exist").frequency;
                let mut v = within(2.0 * f);
                v.extend(within(0.5 * f));
                v.retain(|q| *q != p);
                out.insert(p, v);
            }
        }
        out
    }

    /// One phase rule per coupling rule (natural rules first). Placeholder
    /// rules cover the whole base.
    pub fn phase_rule(&self, rule: usize) -> Option<PhaseRule> {
        if let Some(r) = self.rules.get(rule) {
            return Some(PhaseRule { rule, cluster_size: r.base.len(), tau: phase_threshold(self.config.tau0, r.base.len()), target: r.then_set.clone() });
        }
        if (rule as u64) < self.coupling_rule_count() {
            let n = self.base.len();
            let target = self.base.iter().flat_map(|a| a.then_set.iter().copied()).collect();
            return Some(PhaseRule { rule, cluster_size: n, tau: phase_threshold(self.config.tau0, n), target });
        }
        None
    }

    /// Phase rules of the natural coupling rules.
    pub fn rule_column(&self) -> Vec<PhaseRule> {
        (0..self.rules.len()).filter_map(|i| self.phase_rule(i)).collect()
    }

    /// Natural coupling rules lying wholly inside `region`, per argument.
    pub fn region_density(&self, region: &BTreeSet<u32>) -> Result<f64> {
        if region.is_empty() {
            return Err(ColumnError::EmptyRegion);
        }
        let inside = self.rules.iter().filter(|r| r.base.is_subset(region)).count();
        Ok(inside as f64 / region.len() as f64)
    }

    fn cluster_base(&self, c: Cluster) -> BTreeSet<u32> {
        match c {
            Cluster::Argument(id) => [id].into_iter().collect(),
            Cluster::Rule(i) => self.rules[i].base.clone(),
        }
    }

    fn cluster_then(&self, c: Cluster) -> BTreeSet<PeakRef> {
        match c {
            Cluster::Argument(id) => self.argument(id).map(|a| a.then_set.clone()).unwrap_or_default(),
            Cluster::Rule(i) => self.rules[i].then_set.clone(),
        }
    }

    /// Fires every cluster whose arguments have all been resonant for at
    /// least `τ(s)`. Two clusters contend when they would drive different
    /// peaks of one sub-band; contention is resolved by the region density of
    /// each cluster's arguments (higher wins), then by cluster order, and the
    /// losers deactivate.
    pub fn phase_transition_step(&self, active: &BTreeSet<u32>, elapsed: f64) -> PhaseOutcome {
        let mut ready: Vec<(f64, Cluster)> = Vec::new();
        let mut consider = |c: Cluster, base: &BTreeSet<u32>| {
            if !base.is_empty() && base.is_subset(active) && elapsed >= phase_threshold(self.config.tau0, base.len()) {
                ready.push((self.region_density(base).unwrap_or(0.0), c));
            }
        };
        for a in &self.base {
            consider(Cluster::Argument(a.id), &[a.id].into_iter().collect());
        }
        for (i, r) in self.rules.iter().enumerate() {
            consider(Cluster::Rule(i), &r.base);
        }
        ready.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut out = PhaseOutcome::default();
        let mut claimed: BTreeMap<(usize, usize, usize), PeakRef> = BTreeMap::new();
        let slot = |p: &PeakRef| {
            let l = self.working.locate(*p).expect("stored peaks exist");
            (p.layer, l.triplet, l.sub)
        };
        let mut keep: BTreeSet<u32> = BTreeSet::new();
        let mut lost: BTreeSet<u32> = BTreeSet::new();
        for (_, c) in ready {
            let then = self.cluster_then(c);
            if then.iter().any(|p| claimed.get(&slot(p)).is_some_and(|q| q != p)) {
                lost.extend(self.cluster_base(c));
                out.deactivated.push(c);
            } else {
                claimed.extend(then.iter().map(|p| (slot(p), *p)));
                out.then_peaks.extend(then);
                keep.extend(self.cluster_base(c));
                out.fired.push(c);
            }
        }
        out.active = active.iter().copied().filter(|a| keep.contains(a) || !lost.contains(a)).collect();
        out
    }

    /// Injects `frequencies` into the working chain. Frequencies matching a
    /// peak within tolerance are rejected as already known; the rest beat
    /// against nearby peaks, and the strongest response marks the site.
    /// Ties go to the lower layer, then the lower oscillator index.
    pub fn locate_write_site(&self, frequencies: &[f64]) -> Result<WriteSite> {
        let refs: Vec<PeakRef> = self.working.peaks().map(|(r, _)| r).collect();
        let specs: Vec<OscillatorSpec> = self
            .working
            .peaks()
            .map(|(r, p)| OscillatorSpec {
                layer: r.layer,
                intensity: p.intensity,
                quality_factor: p.quality_factor,
                ..OscillatorSpec::new(p.frequency, 0.0, 0.0)
            })
            .collect();
        let net = OscillatorNetwork::from_oscillators(&specs, 0.0, 0.0);
        let mut best: Option<(WriteSite, usize)> = None;
        for &f in frequencies {
            if !(f > 0.0) {
                return Err(ColumnError::InvalidParameter("frequencies must be positive"));
            }
            let tol = self.config.match_relative * f;
            if net.states.iter().any(|s| (s.natural_frequency - f).abs() <= tol) {
                continue;
            }
            let Some(top) = net.beat_response(f, tol).into_iter().next() else { continue };
            let peak = refs[top.oscillator];
            let loc = self.working.locate(peak).expect("peak from the chain");
            let site = WriteSite {
                layer: top.layer,
                region: (loc.triplet, loc.sub),
                peak,
                probe_hz: f,
                beat_hz: top.beat_hz,
                amplitude: top.amplitude,
                upper_layer: (top.layer + 1 < self.working.layers().len()).then_some(top.layer + 1),
            };
            let better = match &best {
                None => true,
                Some((b, bi)) => site.amplitude > b.amplitude || (site.amplitude == b.amplitude && (site.layer, top.oscillator) < (b.layer, *bi)),
            };
            if better {
                best = Some((site, top.oscillator));
            }
        }
        best.map(|b| b.0).ok_or(ColumnError::NoSite)
    }
}

struct Entity {
    member: Member,
    peaks: BTreeSet<PeakRef>,
    /// Peaks plus their harmonic partners.
    reach: BTreeSet<PeakRef>,
    base: BTreeSet<u32>,
    then_set: BTreeSet<PeakRef>,
}

impl Entity {
    fn new(member: Member, peaks: BTreeSet<PeakRef>, base: BTreeSet<u32>, then_set: BTreeSet<PeakRef>, partners: &BTreeMap<PeakRef, Vec<PeakRef>>) -> Self {
        let mut reach = peaks.clone();
        for p in &peaks {
            if let Some(v) = partners.get(p) {
                reach.extend(v.iter().copied());
            }
        }
        Self { member, peaks, reach, base, then_set }
    }
}

//! Hierarchical resonance chains.
//!
//! A chain is an ordered list of layers, innermost (fastest) first. Each layer
//! holds one to three triplets of sub-bands; each sub-band holds resonance
//! peaks. Adjacent layers must share some frequency range so energy and
//! signals can relay end to end. Chains are immutable values: every mutation
//! returns a new chain, and the difference between a pristine chain and a
//! written one is the stored information.

mod brain;
mod generators;
mod map;
mod metrics;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use once_cell::race::OnceBox;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{log10, powf, Fnv64};

pub use brain::{brain_spec, BRAIN_TABLE};
pub use generators::{gen_loglog_peaks, gen_overtones, Overtones, INV_GOLDEN_RATIO};
pub use map::FrequencyMap;
pub use metrics::{chain_metrics, metrics_from_frequencies, ChainMetrics, CONSCIOUS_DECADES, FRPS_PER_WINDOW, WINDOW_DECADES};

/// Relative tolerance under which two peak frequencies count as unchanged.
pub const DEVIATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("chain description has no layers")]
    EmptySpec,
    #[error("level {level} has no triplets")]
    EmptyLayer { level: u32 },
    #[error("level {level} appears more than once")]
    DuplicateLevel { level: u32 },
    #[error("level {level} has {count} triplets, at most 3 allowed")]
    TooManyTriplets { level: u32, count: usize },
    #[error("level {level} triplet {triplet}: missing or repeated sub-band role")]
    IncompleteTriplet { level: u32, triplet: usize },
    #[error("level {level} triplet {triplet}: invalid band [{lo}, {hi}] Hz")]
    InvalidBand { level: u32, triplet: usize, lo: f64, hi: f64 },
    #[error("level {level} triplet {triplet}: sub-bands are not ascending")]
    BandOrder { level: u32, triplet: usize },
    #[error("level {upper} is not faster than level {lower} on median frequency")]
    LayerOrder { upper: u32, lower: u32 },
    #[error("levels {upper} and {lower} share no frequency range")]
    Overlap { upper: u32, lower: u32 },
    #[error("peak {peak} of layer {layer} does not exist")]
    UnknownPeak { layer: usize, peak: u32 },
    #[error("frequency {frequency} Hz is outside sub-band [{lo}, {hi}] Hz")]
    OutOfBand { frequency: f64, lo: f64, hi: f64 },
    #[error("chains do not share a layer/peak schema: {0}")]
    Schema(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("generated frequency is not representable")]
    Range,
}

pub type Result<T, E = ChainError> = core::result::Result<T, E>;

/// Positive (p-FRP) or negative (n-FRP) resonance direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Positive,
    Negative,
}

/// Position of a sub-band inside its triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BandRole {
    /// Lowest sub-band; shared with the slower neighbour layer.
    CouplesLower,
    SelfBand,
    /// Highest sub-band; shared with the faster neighbour layer.
    CouplesUpper,
}

impl BandRole {
    pub const ALL: [BandRole; 3] = [BandRole::CouplesLower, BandRole::SelfBand, BandRole::CouplesUpper];

    pub fn token(self) -> &'static str {
        match self {
            BandRole::CouplesLower => "lower",
            BandRole::SelfBand => "self",
            BandRole::CouplesUpper => "upper",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "lower" => Some(BandRole::CouplesLower),
            "self" => Some(BandRole::SelfBand),
            "upper" => Some(BandRole::CouplesUpper),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            BandRole::CouplesLower => 0,
            BandRole::SelfBand => 1,
            BandRole::CouplesUpper => 2,
        }
    }
}

/// Closed frequency interval in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && f <= self.hi
    }

    /// Intersection with positive width, if any.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }
}

/// Stable address of a peak: layer index in the chain plus the peak's id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeakRef {
    pub layer: usize,
    pub peak: u32,
}

impl PeakRef {
    pub fn new(layer: usize, peak: u32) -> Self {
        Self { layer, peak }
    }
}

impl fmt::Display for PeakRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.layer, self.peak)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonancePeak {
    /// Unique within the layer; survives shifts.
    pub id: u32,
    pub frequency: f64,
    pub intensity: f64,
    pub quality_factor: f64,
    pub direction: Direction,
    /// FRP flag.
    pub fundamental: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBand {
    pub lo: f64,
    pub hi: f64,
    pub role: BandRole,
    /// Ascending by frequency.
    pub peaks: Vec<ResonancePeak>,
}

impl SubBand {
    pub fn range(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletBand {
    pub sub: [SubBand; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBand {
    pub level: u32,
    pub name: String,
    pub triplets: Vec<TripletBand>,
}

impl LayerBand {
    pub fn sub_bands(&self) -> impl Iterator<Item = &SubBand> {
        self.triplets.iter().flat_map(|t| t.sub.iter())
    }

    pub fn peaks(&self) -> impl Iterator<Item = &ResonancePeak> {
        self.sub_bands().flat_map(|s| s.peaks.iter())
    }

    /// Lowest and highest sub-band bound.
    pub fn range(&self) -> Interval {
        let lo = self.sub_bands().map(|s| s.lo).fold(f64::INFINITY, f64::min);
        let hi = self.sub_bands().map(|s| s.hi).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    pub fn median_frequency(&self) -> f64 {
        let mut f: Vec<f64> = self.peaks().map(|p| p.frequency).collect();
        if f.is_empty() {
            // no peaks: geometric centre of the band range
            let r = self.range();
            return crate::math::sqrt(r.lo * r.hi);
        }
        f.sort_by(f64::total_cmp);
        let n = f.len();
        if n % 2 == 1 {
            f[n / 2]
        } else {
            0.5 * (f[n / 2 - 1] + f[n / 2])
        }
    }

    /// Seconds per cycle at the median frequency.
    pub fn clock_period(&self) -> f64 {
        1.0 / self.median_frequency()
    }

    fn find(&self, id: u32) -> Option<(usize, usize, usize)> {
        for (t, trip) in self.triplets.iter().enumerate() {
            for (s, sb) in trip.sub.iter().enumerate() {
                if let Some(k) = sb.peaks.iter().position(|p| p.id == id) {
                    return Some((t, s, k));
                }
            }
        }
        None
    }
}

/// One sub-band of a chain description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub role: BandRole,
    pub lo: f64,
    pub hi: f64,
}

impl BandSpec {
    pub fn new(role: BandRole, lo: f64, hi: f64) -> Self {
        Self { role, lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub level: u32,
    pub name: String,
    pub triplets: Vec<[BandSpec; 3]>,
}

/// Layered band description, the input of [`build_chain`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainSpec {
    pub layers: Vec<LayerSpec>,
}

/// One row of the line-oriented chain file: `level triplet role lo hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRow {
    pub level: u32,
    /// 1-based.
    pub triplet: usize,
    pub role: BandRole,
    pub lo: f64,
    pub hi: f64,
}

impl ChainSpec {
    /// Groups flat rows into layers and triplets. Names come from `names`
    /// (`(level, name)`), defaulting to `L<level>`.
    pub fn from_rows(rows: &[BandRow], names: &[(u32, String)]) -> Result<Self> {
        let mut levels: Vec<u32> = rows.iter().map(|r| r.level).collect();
        levels.sort_unstable();
        levels.dedup();
        let mut layers = Vec::with_capacity(levels.len());
        for level in levels {
            let in_level: Vec<&BandRow> = rows.iter().filter(|r| r.level == level).collect();
            let max_t = in_level.iter().map(|r| r.triplet).max().unwrap_or(0);
            let mut triplets = Vec::with_capacity(max_t);
            for t in 1..=max_t {
                let mut slots: [Option<BandSpec>; 3] = [None; 3];
                for r in in_level.iter().filter(|r| r.triplet == t) {
                    let slot = &mut slots[r.role.index()];
                    if slot.is_some() {
                        return Err(ChainError::IncompleteTriplet { level, triplet: t });
                    }
                    *slot = Some(BandSpec::new(r.role, r.lo, r.hi));
                }
                match slots {
                    [Some(a), Some(b), Some(c)] => triplets.push([a, b, c]),
                    _ => return Err(ChainError::IncompleteTriplet { level, triplet: t }),
                }
            }
            let name = names.iter().find(|(l, _)| *l == level).map(|(_, n)| n.clone()).unwrap_or_else(|| alloc::format!("L{level}"));
            layers.push(LayerSpec { level, name, triplets });
        }
        Ok(ChainSpec { layers })
    }

    /// Flattens back into rows, ordered by level, triplet, role.
    pub fn rows(&self) -> Vec<BandRow> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for (t, trip) in layer.triplets.iter().enumerate() {
                for b in trip {
                    out.push(BandRow { level: layer.level, triplet: t + 1, role: b.role, lo: b.lo, hi: b.hi });
                }
            }
        }
        out
    }
}

/// Construction knobs for [`build_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    /// FRPs per sub-band, placed uniformly in log-frequency (both bounds included).
    pub peaks_per_subband: usize,
    /// Grid points per axis of the frequency map.
    pub map_resolution: usize,
    pub quality_factor: f64,
    pub intensity: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self { peaks_per_subband: 8, map_resolution: 256, quality_factor: 10.0, intensity: 1.0 }
    }
}

/// A validated resonance chain.
pub struct ResonanceChain {
    layers: Vec<LayerBand>,
    options: ChainOptions,
    map: OnceBox<FrequencyMap>,
}

impl Clone for ResonanceChain {
    fn clone(&self) -> Self {
        // the map is regenerated lazily for the copy
        Self { layers: self.layers.clone(), options: self.options, map: OnceBox::new() }
    }
}

impl PartialEq for ResonanceChain {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.options == other.options
    }
}

impl fmt::Debug for ResonanceChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResonanceChain").field("layers", &self.layers.len()).field("peaks", &self.peak_count()).finish()
    }
}

/// Places `n` peaks uniformly in log-frequency across `[lo, hi]`.
fn log_uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![crate::math::sqrt(lo * hi)],
        _ => (0..n)
            .map(|j| {
                if j == 0 {
                    lo
                } else if j == n - 1 {
                    hi
                } else {
                    lo * powf(hi / lo, j as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

/// Builds and validates a chain from a layered description.
pub fn build_chain(spec: &ChainSpec, options: ChainOptions) -> Result<ResonanceChain> {
    if spec.layers.is_empty() {
        return Err(ChainError::EmptySpec);
    }
    if options.peaks_per_subband == 0 || options.map_resolution == 0 {
        return Err(ChainError::InvalidParameter("peaks_per_subband and map_resolution must be positive"));
    }
    if !(options.quality_factor > 0.0) || !(options.intensity >= 0.0) {
        return Err(ChainError::InvalidParameter("quality factor must be > 0 and intensity >= 0"));
    }
    let mut specs: Vec<&LayerSpec> = spec.layers.iter().collect();
    specs.sort_by_key(|l| l.level);
    for w in specs.windows(2) {
        if w[0].level == w[1].level {
            return Err(ChainError::DuplicateLevel { level: w[0].level });
        }
    }

    let mut layers = Vec::with_capacity(specs.len());
    for ls in specs {
        layers.push(build_layer(ls, &options)?);
    }
    for w in layers.windows(2) {
        if !(w[0].median_frequency() > w[1].median_frequency()) {
            return Err(ChainError::LayerOrder { upper: w[0].level, lower: w[1].level });
        }
    }
    let report = validate_layers(&layers);
    if let Some(v) = report.violations.first() {
        return Err(ChainError::Overlap { upper: layers[v.upper].level, lower: layers[v.lower].level });
    }
    Ok(ResonanceChain { layers, options, map: OnceBox::new() })
}

fn build_layer(ls: &LayerSpec, options: &ChainOptions) -> Result<LayerBand> {
    let level = ls.level;
    if ls.triplets.is_empty() {
        return Err(ChainError::EmptyLayer { level });
    }
    if ls.triplets.len() > 3 {
        return Err(ChainError::TooManyTriplets { level, count: ls.triplets.len() });
    }
    let mut next_id = 0u32;
    let mut prev_lo = f64::NEG_INFINITY;
    let mut triplets = Vec::with_capacity(ls.triplets.len());
    for (t, bands) in ls.triplets.iter().enumerate() {
        // triplets may overlap each other (level 6 of the brain table does),
        // but must start in ascending order
        let mut prev_hi = f64::NEG_INFINITY;
        let triplet = t + 1;
        let mut ordered = *bands;
        ordered.sort_by_key(|b| b.role);
        if ordered.iter().map(|b| b.role).ne(BandRole::ALL) {
            return Err(ChainError::IncompleteTriplet { level, triplet });
        }
        for b in &ordered {
            if !(b.lo > 0.0 && b.lo < b.hi && b.hi.is_finite()) {
                return Err(ChainError::InvalidBand { level, triplet, lo: b.lo, hi: b.hi });
            }
            // touching bounds are allowed; overlap is not
            if b.lo < prev_hi {
                return Err(ChainError::BandOrder { level, triplet });
            }
            prev_hi = b.hi;
        }
        if !(ordered[0].lo > prev_lo) {
            return Err(ChainError::BandOrder { level, triplet });
        }
        prev_lo = ordered[0].lo;
        let sub = ordered.map(|b| {
            let peaks = log_uniform(b.lo, b.hi, options.peaks_per_subband)
                .into_iter()
                .map(|f| {
                    let id = next_id;
                    next_id += 1;
                    ResonancePeak {
                        id,
                        frequency: f,
                        intensity: options.intensity,
                        quality_factor: options.quality_factor,
                        direction: if id.is_multiple_of(2) { Direction::Positive } else { Direction::Negative },
                        fundamental: true,
                    }
                })
                .collect();
            SubBand { lo: b.lo, hi: b.hi, role: b.role, peaks }
        });
        triplets.push(TripletBand { sub });
    }
    Ok(LayerBand { level, name: ls.name.clone(), triplets })
}

/// Loads the bundled 12-level brain chain with default options.
pub fn load_brain_model() -> ResonanceChain {
    build_chain(&brain_spec(), ChainOptions::default()).expect("bundled brain table is a valid chain")
}

/// Overlap record for one adjacent layer pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOverlap {
    /// Index of the faster layer.
    pub upper: usize,
    pub lower: usize,
    /// Every positive-width sub-band intersection, ascending by `lo`.
    pub shared: Vec<Interval>,
    /// Widest shared interval in Hz.
    pub widest: Option<Interval>,
    /// Hull of all shared intervals.
    pub span: Option<Interval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub pairs: Vec<PairOverlap>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the chain property on a list of layers.
pub fn validate_layers(layers: &[LayerBand]) -> ValidationReport {
    let mut pairs = Vec::new();
    let mut violations = Vec::new();
    for k in 0..layers.len().saturating_sub(1) {
        let mut shared: Vec<Interval> = Vec::new();
        for a in layers[k].sub_bands() {
            for b in layers[k + 1].sub_bands() {
                if let Some(i) = a.range().intersect(&b.range()) {
                    shared.push(i);
                }
            }
        }
        shared.sort_by(|x, y| x.lo.total_cmp(&y.lo).then(x.hi.total_cmp(&y.hi)));
        let widest = shared.iter().copied().max_by(|x, y| x.width().total_cmp(&y.width()));
        let span = (!shared.is_empty())
            .then(|| Interval::new(shared.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min), shared.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max)));
        if shared.is_empty() {
            violations.push(Violation { upper: k, lower: k + 1 });
        }
        pairs.push(PairOverlap { upper: k, lower: k + 1, shared, widest, span });
    }
    ValidationReport { pairs, violations }
}

/// Checks the chain property of a built chain.
pub fn validate_chain(chain: &ResonanceChain) -> ValidationReport {
    validate_layers(&chain.layers)
}

/// A peak whose frequency differs between two chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub peak: PeakRef,
    pub from: f64,
    pub to: f64,
    /// Signed, `to - from`.
    pub delta: f64,
}

/// Lists the peaks of `modified` that moved away from `pristine`.
pub fn diff_chains(pristine: &ResonanceChain, modified: &ResonanceChain) -> Result<Vec<Deviation>> {
    if pristine.layers.len() != modified.layers.len() {
        return Err(ChainError::Schema("different layer counts"));
    }
    let mut out = Vec::new();
    for (li, (a, b)) in pristine.layers.iter().zip(&modified.layers).enumerate() {
        let mut pa: Vec<(u32, f64)> = a.peaks().map(|p| (p.id, p.frequency)).collect();
        let mut pb: Vec<(u32, f64)> = b.peaks().map(|p| (p.id, p.frequency)).collect();
        pa.sort_by_key(|p| p.0);
        pb.sort_by_key(|p| p.0);
        if pa.len() != pb.len() || pa.iter().zip(&pb).any(|(x, y)| x.0 != y.0) {
            return Err(ChainError::Schema("different peak ids"));
        }
        for ((id, from), (_, to)) in pa.into_iter().zip(pb) {
            if (to - from).abs() > DEVIATION_TOLERANCE * from.abs() {
                out.push(Deviation { peak: PeakRef::new(li, id), from, to, delta: to - from });
            }
        }
    }
    Ok(out)
}

/// Where a peak lives inside its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeakLocation {
    pub triplet: usize,
    pub sub: usize,
}

impl ResonanceChain {
    pub fn layers(&self) -> &[LayerBand] {
        &self.layers
    }

    pub fn options(&self) -> ChainOptions {
        self.options
    }

    pub fn peak_count(&self) -> usize {
        self.layers.iter().map(|l| l.peaks().count()).sum()
    }

    /// Every peak with its address, in layer/triplet/sub-band/frequency order.
    pub fn peaks(&self) -> impl Iterator<Item = (PeakRef, &ResonancePeak)> {
        self.layers.iter().enumerate().flat_map(|(li, l)| l.peaks().map(move |p| (PeakRef::new(li, p.id), p)))
    }

    pub fn peak(&self, r: PeakRef) -> Option<&ResonancePeak> {
        let layer = self.layers.get(r.layer)?;
        let (t, s, k) = layer.find(r.peak)?;
        Some(&layer.triplets[t].sub[s].peaks[k])
    }

    pub fn locate(&self, r: PeakRef) -> Option<PeakLocation> {
        let (t, s, _) = self.layers.get(r.layer)?.find(r.peak)?;
        Some(PeakLocation { triplet: t, sub: s })
    }

    pub fn sub_band_of(&self, r: PeakRef) -> Option<&SubBand> {
        let loc = self.locate(r)?;
        Some(&self.layers[r.layer].triplets[loc.triplet].sub[loc.sub])
    }

    /// Lowest and highest peak frequency.
    pub fn frequency_range(&self) -> Interval {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, p) in self.peaks() {
            lo = lo.min(p.frequency);
            hi = hi.max(p.frequency);
        }
        Interval::new(lo, hi)
    }

    pub fn span_decades(&self) -> f64 {
        let r = self.frequency_range();
        log10(r.hi / r.lo)
    }

    /// The chain's complex frequency map, computed on first access.
    pub fn frequency_map(&self) -> &FrequencyMap {
        self.map.get_or_init(|| alloc::boxed::Box::new(FrequencyMap::from_chain(self, self.options.map_resolution)))
    }

    /// Moves one peak within its own sub-band, returning the new chain.
    pub fn shift_peak(&self, r: PeakRef, new_frequency: f64) -> Result<ResonanceChain> {
        let mut next = self.clone();
        next.shift_in_place(r, new_frequency)?;
        Ok(next)
    }

    pub(crate) fn shift_in_place(&mut self, r: PeakRef, new_frequency: f64) -> Result<()> {
        let layer = self.layers.get_mut(r.layer).ok_or(ChainError::UnknownPeak { layer: r.layer, peak: r.peak })?;
        let (t, s, k) = layer.find(r.peak).ok_or(ChainError::UnknownPeak { layer: r.layer, peak: r.peak })?;
        let sb = &mut layer.triplets[t].sub[s];
        if !(new_frequency >= sb.lo && new_frequency <= sb.hi) {
            return Err(ChainError::OutOfBand { frequency: new_frequency, lo: sb.lo, hi: sb.hi });
        }
        sb.peaks[k].frequency = new_frequency;
        sb.peaks.sort_by(|a, b| a.frequency.total_cmp(&b.frequency).then(a.id.cmp(&b.id)));
        self.map = OnceBox::new();
        Ok(())
    }

    /// Sets every deviated peak to its recorded target frequency.
    pub fn apply_deviations(&self, deviations: &[Deviation]) -> Result<ResonanceChain> {
        let mut next = self.clone();
        for d in deviations {
            next.shift_in_place(d.peak, d.to)?;
        }
        Ok(next)
    }

    /// Chain description recovering the band layout (not the peak positions).
    pub fn to_spec(&self) -> ChainSpec {
        ChainSpec {
            layers: self
                .layers
                .iter()
                .map(|l| LayerSpec {
                    level: l.level,
                    name: l.name.clone(),
                    triplets: l.triplets.iter().map(|t| t.sub.clone().map(|s| BandSpec::new(s.role, s.lo, s.hi))).collect(),
                })
                .collect(),
        }
    }

    /// Stable 64-bit fingerprint over bands and peak frequencies.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::default();
        for l in &self.layers {
            h.write_u64(u64::from(l.level));
            h.write(l.name.as_bytes());
            for sb in l.sub_bands() {
                h.write_f64(sb.lo);
                h.write_f64(sb.hi);
                for p in &sb.peaks {
                    h.write_u64(u64::from(p.id));
                    h.write_f64(p.frequency);
                    h.write_f64(p.intensity);
                    h.write_f64(p.quality_factor);
                }
            }
        }
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn layer(level: u32, bands: [(f64, f64); 3]) -> LayerSpec {
        LayerSpec {
            level,
            name: alloc::format!("L{level}"),
            triplets: vec![[
                BandSpec::new(BandRole::CouplesLower, bands[0].0, bands[0].1),
                BandSpec::new(BandRole::SelfBand, bands[1].0, bands[1].1),
                BandSpec::new(BandRole::CouplesUpper, bands[2].0, bands[2].1),
            ]],
        }
    }

    fn two_layer() -> ResonanceChain {
        // upper layer's low sub-band equals the lower layer's high sub-band: 10-19 MHz
        let spec = ChainSpec { layers: vec![layer(1, [(10e6, 19e6), (20e6, 40e6), (100e6, 228e6)]), layer(2, [(500e3, 800e3), (1e6, 5e6), (10e6, 19e6)])] };
        build_chain(&spec, ChainOptions::default()).unwrap()
    }

    #[test]
    fn shared_sub_band_makes_a_chain() {
        let c = two_layer();
        let r = validate_chain(&c);
        assert!(r.is_valid());
        assert_eq!(r.pairs[0].widest, Some(Interval::new(10e6, 19e6)));
    }

    #[test]
    fn single_layer_is_trivial_chain() {
        let spec = ChainSpec { layers: vec![layer(1, [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)])] };
        let c = build_chain(&spec, ChainOptions::default()).unwrap();
        assert!(validate_chain(&c).pairs.is_empty());
        assert_eq!(c.peak_count(), 24);
    }

    #[test]
    fn disjoint_layers_fail_overlap() {
        let spec = ChainSpec { layers: vec![layer(1, [(5.0, 5.5), (5.6, 5.8), (5.9, 6.0)]), layer(2, [(1.0, 1.5), (1.6, 1.8), (1.9, 2.0)])] };
        assert_eq!(build_chain(&spec, ChainOptions::default()).unwrap_err(), ChainError::Overlap { upper: 1, lower: 2 });
    }

    #[test]
    fn descending_sub_bands_rejected() {
        let spec = ChainSpec { layers: vec![layer(1, [(5.0, 6.0), (3.0, 4.0), (1.0, 2.0)])] };
        assert!(matches!(build_chain(&spec, ChainOptions::default()), Err(ChainError::BandOrder { .. })));
    }

    #[test]
    fn empty_spec_rejected() {
        assert_eq!(build_chain(&ChainSpec::default(), ChainOptions::default()).unwrap_err(), ChainError::EmptySpec);
    }

    #[test]
    fn slower_inner_layer_rejected() {
        let spec = ChainSpec { layers: vec![layer(1, [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]), layer(2, [(5.0, 6.0), (7.0, 8.0), (9.0, 10.0)])] };
        assert!(matches!(build_chain(&spec, ChainOptions::default()), Err(ChainError::LayerOrder { .. })));
    }

    #[test]
    fn peaks_log_uniform_with_bounds() {
        let c = two_layer();
        let sb = &c.layers()[0].triplets[0].sub[0];
        assert_eq!(sb.peaks.len(), 8);
        assert_eq!(sb.peaks[0].frequency, 10e6);
        assert_eq!(sb.peaks[7].frequency, 19e6);
        let r = sb.peaks[1].frequency / sb.peaks[0].frequency;
        for w in sb.peaks.windows(2) {
            assert!((w[1].frequency / w[0].frequency - r).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_layer_shares_whole_range() {
        let c = two_layer();
        let l = c.layers()[0].clone();
        let report = validate_layers(&[l.clone(), l.clone()]);
        assert_eq!(report.pairs[0].span, Some(l.range()));
    }

    #[test]
    fn shift_within_band() {
        let c = two_layer();
        let r = PeakRef::new(0, 1);
        assert!(c.peak(r).unwrap().frequency < 14e6);
        let moved = c.shift_peak(r, 14e6).unwrap();
        assert_eq!(moved.peak(r).unwrap().frequency, 14e6);
        // original untouched
        assert_ne!(c.peak(r).unwrap().frequency, 14e6);
        let d = diff_chains(&c, &moved).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].peak, r);
        assert!(d[0].delta > 0.0);
    }

    #[test]
    fn shift_out_of_band() {
        let c = two_layer();
        let e = c.shift_peak(PeakRef::new(0, 1), 25e6).unwrap_err();
        assert!(matches!(e, ChainError::OutOfBand { .. }));
    }

    #[test]
    fn diff_identity_and_schema() {
        let c = two_layer();
        assert!(diff_chains(&c, &c).unwrap().is_empty());
        let single = build_chain(&ChainSpec { layers: vec![layer(1, [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)])] }, ChainOptions::default()).unwrap();
        assert!(matches!(diff_chains(&c, &single), Err(ChainError::Schema(_))));
    }

    #[test]
    fn shift_reorders_but_keeps_ids() {
        let c = two_layer();
        let moved = c.shift_peak(PeakRef::new(0, 0), 18.5e6).unwrap();
        let sb = &moved.layers()[0].triplets[0].sub[0];
        assert!(sb.peaks.windows(2).all(|w| w[0].frequency <= w[1].frequency));
        assert_eq!(moved.peak(PeakRef::new(0, 0)).unwrap().frequency, 18.5e6);
    }

    #[test]
    fn rows_roundtrip() {
        let spec = brain_spec();
        let names: Vec<(u32, String)> = spec.layers.iter().map(|l| (l.level, l.name.clone())).collect();
        assert_eq!(ChainSpec::from_rows(&spec.rows(), &names).unwrap(), spec);
    }

    #[test]
    fn missing_role_is_incomplete() {
        let rows = [
            BandRow { level: 1, triplet: 1, role: BandRole::CouplesLower, lo: 1.0, hi: 2.0 },
            BandRow { level: 1, triplet: 1, role: BandRole::CouplesLower, lo: 3.0, hi: 4.0 },
        ];
        assert!(matches!(ChainSpec::from_rows(&rows, &[]), Err(ChainError::IncompleteTriplet { .. })));
    }

    #[test]
    fn brain_levels_and_bounds() {
        let c = load_brain_model();
        assert_eq!(c.layers().len(), 12);
        let tritiya = &c.layers()[2];
        assert_eq!(tritiya.name, "TRITIYA");
        let t2: Vec<(f64, f64)> = tritiya.triplets[1].sub.iter().map(|s| (s.lo, s.hi)).collect();
        assert_eq!(t2, vec![(10e6, 19e6), (20e6, 40e6), (100e6, 228e6)]);
        assert_eq!(c.layers()[11].triplets[0].sub[0].lo, 20e-15);
        for l in c.layers() {
            assert_eq!(l.triplets.len(), 3);
            assert_eq!(l.peaks().count(), 72);
        }
    }

    #[test]
    fn brain_pairs_all_overlap() {
        let c = load_brain_model();
        let r = validate_chain(&c);
        assert_eq!(r.pairs.len(), 11);
        assert!(r.violations.is_empty());
        // DITIYA / TRITIYA share 15-18 GHz
        assert!(r.pairs[1].shared.contains(&Interval::new(15e9, 18e9)));
    }

    #[test]
    fn clock_periods_grow_outward() {
        let c = load_brain_model();
        for w in c.layers().windows(2) {
            assert!(w[0].clock_period() < w[1].clock_period());
        }
    }

    #[test]
    fn fingerprint_tracks_shifts() {
        let c = two_layer();
        let moved = c.shift_peak(PeakRef::new(0, 1), 14e6).unwrap();
        assert_ne!(c.fingerprint(), moved.fingerprint());
        assert_eq!(c.fingerprint(), c.clone().fingerprint());
    }
}

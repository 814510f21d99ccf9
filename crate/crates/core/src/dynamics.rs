//! Phase/energy dynamics over every peak of a chain.
//!
//! Each oscillator carries a phase and an energy. Phases follow
//! energy-weighted sine coupling,
//!
//! ```text
//! dθᵢ = (2π fᵢ + Σⱼ κᵢⱼ Eⱼ sin(θⱼ − θᵢ)) dt
//! ```
//!
//! and energies relax pairwise toward their coupled neighbours,
//! `Eᵢ += λ Σⱼ (Eⱼ − Eᵢ) / max(degᵢ, degⱼ)`, then decay by `exp(−γ dt)`.
//! The pairwise flux is antisymmetric, so with `γ = 0` total energy is
//! conserved up to rounding. Integration is explicit and fixed-step; every
//! reduction runs in ascending neighbour order so runs are bit-reproducible.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{PeakRef, ResonanceChain};
use crate::math::{ceil, cos, exp, ln, sin, sqrt, wrap_phase, TAU};

/// `dt` must stay below `STABILITY_FACTOR / f_max`.
pub const STABILITY_FACTOR: f64 = 0.1;
/// Pairs within this relative frequency difference beat; wider pairs do not.
pub const BEAT_WINDOW: f64 = 0.1;
/// Default relative match tolerance for "same frequency".
pub const DEFAULT_MATCH_RELATIVE: f64 = 1e-6;
/// Substep budget per layer per coarse step in multi-rate stepping.
pub const MAX_SUBSTEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("time step {dt} s violates the stability bound (must be in (0, {limit}) s)")]
    Stability { dt: f64, limit: f64 },
    #[error("oscillators {i} and {j} are not coupled")]
    ZeroCoupling { i: usize, j: usize },
    #[error("layer {0} does not exist")]
    UnknownLayer(usize),
    #[error("oscillator {0} does not exist")]
    UnknownOscillator(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T, E = DynamicsError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorState {
    /// The chain peak this oscillator stands for, when built from a chain.
    pub peak_ref: Option<PeakRef>,
    pub layer: usize,
    /// Radians in `[0, 2π)`.
    pub phase: f64,
    pub energy: f64,
    pub natural_frequency: f64,
    pub intensity: f64,
    pub quality_factor: f64,
}

/// Symmetric sparse coupling with zero diagonal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl CouplingMatrix {
    pub fn new(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows.get(i).and_then(|r| r.binary_search_by_key(&j, |e| e.0).ok().map(|k| r[k].1)).unwrap_or(0.0)
    }

    /// Sets `κᵢⱼ = κⱼᵢ = kappa`; zero removes the entry. The diagonal is ignored.
    pub fn set(&mut self, i: usize, j: usize, kappa: f64) {
        if i == j {
            return;
        }
        for (a, b) in [(i, j), (j, i)] {
            let row = &mut self.rows[a];
            match row.binary_search_by_key(&b, |e| e.0) {
                Ok(k) if kappa == 0.0 => {
                    row.remove(k);
                }
                Ok(k) => row[k].1 = kappa,
                Err(k) if kappa != 0.0 => row.insert(k, (b, kappa)),
                Err(_) => {}
            }
        }
    }

    /// Coupled neighbours of `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    /// Number of coupled unordered pairs.
    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Coupled pairs `(i, j, κ)` with `i < j`, ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().filter(move |e| e.0 > i).map(move |&(j, k)| (i, j, k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    /// Relative frequency window `w` for coupling.
    pub coupling_window: f64,
    /// Value of every nonzero `κᵢⱼ`.
    pub coupling_strength: f64,
    /// `γ`, per second.
    pub dissipation: f64,
    /// `λ`, per step.
    pub relaxation: f64,
    pub initial_energy: f64,
    pub seed: u64,
    /// Link consecutive triplets of each layer through their closest peak
    /// pair, so a layer relays energy between its own bands.
    pub bridge_triplets: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { coupling_window: 0.6, coupling_strength: 1.0, dissipation: 0.0, relaxation: 0.1, initial_energy: 0.0, seed: 0, bridge_triplets: true }
    }
}

/// A free-standing oscillator for hand-built networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSpec {
    pub frequency: f64,
    pub layer: usize,
    pub phase: f64,
    pub energy: f64,
    pub intensity: f64,
    pub quality_factor: f64,
}

impl OscillatorSpec {
    pub fn new(frequency: f64, phase: f64, energy: f64) -> Self {
        Self { frequency, layer: 0, phase, energy, intensity: 1.0, quality_factor: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorNetwork {
    pub states: Vec<OscillatorState>,
    pub coupling: CouplingMatrix,
    /// Seconds.
    pub time: f64,
    pub dissipation: f64,
    pub relaxation: f64,
    layer_count: usize,
}

/// Couples peaks across the chain.
///
/// Two peaks couple when their relative frequency difference is below `w`
/// (exactly equal frequencies always couple). For every overlapping sub-band
/// pair of adjacent layers, all peak pairs inside the shared interval couple,
/// plus the single closest pair of the two sub-bands in log-frequency, so each
/// overlap region yields at least one cross-layer link. With
/// `bridge_triplets`, consecutive triplets of one layer are joined the same
/// way, which makes the whole chain one connected relay.
pub fn build_network(chain: &ResonanceChain, config: NetworkConfig) -> Result<OscillatorNetwork> {
    if !(config.coupling_window >= 0.0) || !(config.coupling_strength > 0.0) {
        return Err(DynamicsError::InvalidParameter("coupling window must be >= 0 and strength > 0"));
    }
    if !(config.dissipation >= 0.0) || !(0.0..=1.0).contains(&config.relaxation) {
        return Err(DynamicsError::InvalidParameter("dissipation must be >= 0 and relaxation in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut states = Vec::with_capacity(chain.peak_count());
    for (r, p) in chain.peaks() {
        states.push(OscillatorState {
            peak_ref: Some(r),
            layer: r.layer,
            phase: rng.gen_range(0.0..TAU),
            energy: config.initial_energy,
            natural_frequency: p.frequency,
            intensity: p.intensity,
            quality_factor: p.quality_factor,
        });
    }
    let n = states.len();
    let mut coupling = CouplingMatrix::new(n);
    let kappa = config.coupling_strength;

    // window rule: sweep in frequency order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| states[a].natural_frequency.total_cmp(&states[b].natural_frequency).then(a.cmp(&b)));
    for (k, &i) in order.iter().enumerate() {
        let fi = states[i].natural_frequency;
        for &j in &order[k + 1..] {
            let fj = states[j].natural_frequency;
            let rel = (fj - fi) / fi;
            if rel == 0.0 || rel < config.coupling_window {
                coupling.set(i, j, kappa);
            } else {
                break;
            }
        }
    }

    // overlap rule between adjacent layers
    let index: Vec<(PeakRef, usize)> = {
        let mut v: Vec<(PeakRef, usize)> = states.iter().enumerate().map(|(i, s)| (s.peak_ref.unwrap(), i)).collect();
        v.sort();
        v
    };
    let idx = |r: PeakRef| index[index.binary_search_by_key(&r, |e| e.0).unwrap()].1;
    let layers = chain.layers();
    for k in 0..layers.len().saturating_sub(1) {
        for a in layers[k].sub_bands() {
            for b in layers[k + 1].sub_bands() {
                let Some(shared) = a.range().intersect(&b.range()) else { continue };
                let mut closest: Option<(f64, usize, usize)> = None;
                for pa in &a.peaks {
                    for pb in &b.peaks {
                        let i = idx(PeakRef::new(k, pa.id));
                        let j = idx(PeakRef::new(k + 1, pb.id));
                        if shared.contains(pa.frequency) && shared.contains(pb.frequency) {
                            coupling.set(i, j, kappa);
                        }
                        let d = ln(pa.frequency / pb.frequency).abs();
                        if closest.is_none_or(|c| d < c.0) {
                            closest = Some((d, i, j));
                        }
                    }
                }
                if let Some((_, i, j)) = closest {
                    coupling.set(i, j, kappa);
                }
            }
        }
    }

    // a layer's triplets sit decades apart; without a bridge the window
    // rule leaves them as separate islands
    if config.bridge_triplets {
        for (k, layer) in layers.iter().enumerate() {
            for w in layer.triplets.windows(2) {
                let mut closest: Option<(f64, usize, usize)> = None;
                for pa in w[0].sub.iter().flat_map(|s| s.peaks.iter()) {
                    for pb in w[1].sub.iter().flat_map(|s| s.peaks.iter()) {
                        let d = ln(pa.frequency / pb.frequency).abs();
                        if closest.is_none_or(|c| d < c.0) {
                            closest = Some((d, idx(PeakRef::new(k, pa.id)), idx(PeakRef::new(k, pb.id))));
                        }
                    }
                }
                if let Some((_, i, j)) = closest {
                    if i != j {
                        coupling.set(i, j, kappa);
                    }
                }
            }
        }
    }

    Ok(OscillatorNetwork { states, coupling, time: 0.0, dissipation: config.dissipation, relaxation: config.relaxation, layer_count: layers.len() })
}

/// A beating pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beat {
    pub i: usize,
    pub j: usize,
    pub beat_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeatReport {
    /// `i < j`, ascending.
    pub beats: Vec<Beat>,
    /// Coupled pairs within the match tolerance.
    pub matched: Vec<(usize, usize)>,
}

/// Response of one oscillator to an injected probe frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatSite {
    pub oscillator: usize,
    pub layer: usize,
    pub beat_hz: f64,
    pub amplitude: f64,
}

/// Magnitude of a driven resonator's response at `probe`.
pub fn resonance_amplitude(intensity: f64, quality_factor: f64, natural: f64, probe: f64) -> f64 {
    let detune = quality_factor * (probe / natural - natural / probe);
    intensity / sqrt(1.0 + detune * detune)
}

/// `T = c₀ / (κ · √(QᵢQⱼ) · √(IᵢIⱼ) · √(fᵢfⱼ))`.
pub fn sync_time(c0: f64, kappa: f64, q: (f64, f64), intensity: (f64, f64), f: (f64, f64)) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(DynamicsError::InvalidParameter("coupling must be positive"));
    }
    Ok(c0 / (kappa * sqrt(q.0 * q.1) * sqrt(intensity.0 * intensity.1) * sqrt(f.0 * f.1)))
}

impl OscillatorNetwork {
    /// Hand-built network with no couplings yet.
    pub fn from_oscillators(specs: &[OscillatorSpec], dissipation: f64, relaxation: f64) -> Self {
        let states = specs
            .iter()
            .map(|s| OscillatorState {
                peak_ref: None,
                layer: s.layer,
                phase: wrap_phase(s.phase),
                energy: s.energy,
                natural_frequency: s.frequency,
                intensity: s.intensity,
                quality_factor: s.quality_factor,
            })
            .collect::<Vec<_>>();
        let layer_count = states.iter().map(|s| s.layer + 1).max().unwrap_or(0);
        Self { coupling: CouplingMatrix::new(states.len()), states, time: 0.0, dissipation, relaxation, layer_count }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    pub fn max_frequency(&self) -> f64 {
        self.states.iter().map(|s| s.natural_frequency).fold(0.0, f64::max)
    }

    /// Largest admissible step (exclusive).
    pub fn stability_limit(&self) -> f64 {
        STABILITY_FACTOR / self.max_frequency()
    }

    pub fn total_energy(&self) -> f64 {
        self.states.iter().map(|s| s.energy).sum()
    }

    /// Summed energy per layer.
    pub fn layer_energies(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.layer_count];
        for s in &self.states {
            e[s.layer] += s.energy;
        }
        e
    }

    pub fn layer_members(&self, layer: usize) -> Vec<usize> {
        (0..self.states.len()).filter(|&i| self.states[i].layer == layer).collect()
    }

    fn energy_flux(&self) -> Vec<f64> {
        let mut delta = vec![0.0; self.states.len()];
        if self.relaxation == 0.0 {
            return delta;
        }
        for (i, j, _) in self.coupling.pairs() {
            let w = self.relaxation / self.coupling.degree(i).max(self.coupling.degree(j)) as f64;
            let f = w * (self.states[j].energy - self.states[i].energy);
            delta[i] += f;
            delta[j] -= f;
        }
        delta
    }

    fn phase_drive(&self, i: usize, phases: &[f64]) -> f64 {
        let theta = phases[i];
        self.coupling.neighbors(i).iter().map(|&(j, kappa)| kappa * self.states[j].energy * sin(phases[j] - theta)).sum()
    }

    fn relax_and_decay(&mut self, dt: f64) {
        let delta = self.energy_flux();
        let decay = if self.dissipation > 0.0 { exp(-self.dissipation * dt) } else { 1.0 };
        for (s, d) in self.states.iter_mut().zip(delta) {
            s.energy = ((s.energy + d) * decay).max(0.0);
        }
    }

    /// Advances every oscillator by one explicit step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let limit = self.stability_limit();
        if !(dt > 0.0 && dt < limit) {
            return Err(DynamicsError::Stability { dt, limit });
        }
        let phases: Vec<f64> = self.states.iter().map(|s| s.phase).collect();
        let new_phases: Vec<f64> = (0..self.states.len())
            .map(|i| {
                let omega = TAU * self.states[i].natural_frequency;
                wrap_phase(phases[i] + (omega + self.phase_drive(i, &phases)) * dt)
            })
            .collect();
        for (s, p) in self.states.iter_mut().zip(new_phases) {
            s.phase = p;
        }
        self.relax_and_decay(dt);
        self.time += dt;
        Ok(())
    }

    /// Multi-rate step: each layer integrates its own phases with a sub-step
    /// sized to its fastest oscillator, against neighbour phases frozen at the
    /// start of the coarse step. Energy is exchanged once, at the boundary.
    pub fn step_multirate(&mut self, dt_coarse: f64) -> Result<()> {
        if !(dt_coarse > 0.0) {
            return Err(DynamicsError::Stability { dt: dt_coarse, limit: f64::INFINITY });
        }
        let mut layer_max = vec![0.0f64; self.layer_count];
        for s in &self.states {
            layer_max[s.layer] = layer_max[s.layer].max(s.natural_frequency);
        }
        let mut substeps = vec![1u64; self.layer_count];
        for (k, fmax) in layer_max.iter().enumerate() {
            if *fmax > 0.0 {
                let need = ceil(dt_coarse * fmax / STABILITY_FACTOR * (1.0 + 1e-12));
                let n = if need < 1.0 { 1.0 } else { need };
                if n > MAX_SUBSTEPS as f64 {
                    return Err(DynamicsError::Stability { dt: dt_coarse, limit: MAX_SUBSTEPS as f64 * STABILITY_FACTOR / fmax });
                }
                substeps[k] = n as u64;
            }
        }
        let frozen: Vec<f64> = self.states.iter().map(|s| s.phase).collect();
        let mut new_phases = frozen.clone();
        for i in 0..self.states.len() {
            let s = &self.states[i];
            let n = substeps[s.layer];
            let h = dt_coarse / n as f64;
            let omega = TAU * s.natural_frequency;
            let mut theta = frozen[i];
            for _ in 0..n {
                let drive: f64 = self.coupling.neighbors(i).iter().map(|&(j, kappa)| kappa * self.states[j].energy * sin(frozen[j] - theta)).sum();
                theta = wrap_phase(theta + (omega + drive) * h);
            }
            new_phases[i] = theta;
        }
        for (s, p) in self.states.iter_mut().zip(new_phases) {
            s.phase = p;
        }
        self.relax_and_decay(dt_coarse);
        self.time += dt_coarse;
        Ok(())
    }

    /// Adds `amount` spread evenly over the oscillators of `layer`.
    pub fn inject_energy(&mut self, layer: usize, amount: f64) -> Result<()> {
        if !(amount > 0.0) {
            return Err(DynamicsError::InvalidParameter("injected energy must be positive"));
        }
        let members = self.layer_members(layer);
        if members.is_empty() {
            return Err(DynamicsError::UnknownLayer(layer));
        }
        let share = amount / members.len() as f64;
        for i in members {
            self.states[i].energy += share;
        }
        Ok(())
    }

    /// Mean resultant length of the subset's phases; 0 for an empty subset.
    pub fn order_parameter(&self, subset: &[usize]) -> f64 {
        if subset.is_empty() {
            return 0.0;
        }
        let (mut c, mut s) = (0.0, 0.0);
        for &i in subset {
            c += cos(self.states[i].phase);
            s += sin(self.states[i].phase);
        }
        let n = subset.len() as f64;
        sqrt(c * c + s * s) / n
    }

    /// Beating and matched pairs among coupled oscillators.
    pub fn detect_beats(&self, match_tolerance_hz: f64) -> Result<BeatReport> {
        if !(match_tolerance_hz > 0.0) {
            return Err(DynamicsError::InvalidParameter("match tolerance must be positive"));
        }
        let mut report = BeatReport::default();
        for (i, j, _) in self.coupling.pairs() {
            let (fi, fj) = (self.states[i].natural_frequency, self.states[j].natural_frequency);
            let d = (fi - fj).abs();
            if d <= match_tolerance_hz {
                report.matched.push((i, j));
            } else if d <= BEAT_WINDOW * fi.min(fj) {
                report.beats.push(Beat { i, j, beat_hz: d });
            }
        }
        Ok(report)
    }

    /// Beat sites excited by a probe frequency, strongest first. Oscillators
    /// within the match tolerance are rejected as already known.
    pub fn beat_response(&self, probe_hz: f64, match_tolerance_hz: f64) -> Vec<BeatSite> {
        let mut sites: Vec<BeatSite> = self
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| (s.natural_frequency - probe_hz).abs() > match_tolerance_hz)
            .map(|(i, s)| BeatSite {
                oscillator: i,
                layer: s.layer,
                beat_hz: (s.natural_frequency - probe_hz).abs(),
                amplitude: resonance_amplitude(s.intensity, s.quality_factor, s.natural_frequency, probe_hz),
            })
            .collect();
        sites.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude).then(a.layer.cmp(&b.layer)).then(a.oscillator.cmp(&b.oscillator)));
        sites
    }

    /// Synchronization-time estimate for a coupled pair.
    pub fn sync_time_estimate(&self, i: usize, j: usize, c0: f64) -> Result<f64> {
        let n = self.states.len();
        if i >= n || j >= n {
            return Err(DynamicsError::UnknownOscillator(i.max(j)));
        }
        let kappa = self.coupling.get(i, j);
        if kappa == 0.0 {
            return Err(DynamicsError::ZeroCoupling { i, j });
        }
        let (a, b) = (&self.states[i], &self.states[j]);
        sync_time(c0, kappa, (a.quality_factor, b.quality_factor), (a.intensity, b.intensity), (a.natural_frequency, b.natural_frequency))
    }

    /// Steps until the subset's order parameter reaches `threshold`; returns
    /// the step count, or `None` if `max_steps` ran out.
    pub fn steps_to_lock(&mut self, subset: &[usize], dt: f64, threshold: f64, max_steps: usize) -> Result<Option<usize>> {
        if self.order_parameter(subset) >= threshold {
            return Ok(Some(0));
        }
        for k in 1..=max_steps {
            self.step(dt)?;
            if self.order_parameter(subset) >= threshold {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }
}

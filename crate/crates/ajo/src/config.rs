//! `key = value` experiment configuration with `#` comments.
//!
//! Every key is optional; missing keys take the defaults below. The
//! `AJO_SEED` environment variable overrides `seed`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ajo_core::chain::{build_chain, load_brain_model, ChainOptions, ResonanceChain};
use ajo_core::clique::{BenchConfig, LabelBand};
use ajo_core::column::{ColumnConfig, WriteMode};
use ajo_core::dynamics::NetworkConfig;
use ajo_core::fractal::DecomposeConfig;
use ajo_core::query::{DEFAULT_EPSILON, DEFAULT_MAX_CYCLES};

use crate::error::{AjoError, Result};
use crate::formats::{parse_chain_text, read_text};

pub const SEED_ENV: &str = "AJO_SEED";

#[derive(Debug, Clone, PartialEq)]
pub enum ChainSource {
    BrainModel,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub chain: ChainSource,
    pub peaks_per_subband: usize,
    /// Coarse step in seconds; 0 picks the stability limit of the fastest layer.
    pub dt: f64,
    pub steps: usize,
    pub sample_every: usize,
    pub gamma: f64,
    pub window: f64,
    pub coupling: f64,
    pub relaxation: f64,
    pub bridge_triplets: bool,
    pub initial_energy: f64,
    pub inject_layer: usize,
    pub inject_amount: f64,
    pub seed: u64,
    pub threshold: f64,
    pub csbsl_loops: usize,
    pub align_tolerance: f64,
    pub dual: bool,
    pub mode: WriteMode,
    pub tau0: f64,
    pub level_cap: usize,
    pub write_gain: f64,
    pub max_cycles: usize,
    pub epsilon: f64,
    pub out_dir: PathBuf,
    pub n_list: Vec<usize>,
    pub p_list: Vec<f64>,
    pub pattern_sizes: Vec<usize>,
    pub trials: usize,
    pub verify: bool,
    pub pattern_p: f64,
    pub symbols: usize,
    /// Measure bench wall time; off makes every report byte-reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let net = NetworkConfig::default();
        let dec = DecomposeConfig::default();
        let col = ColumnConfig::default();
        let bench = BenchConfig::default();
        Self {
            chain: ChainSource::BrainModel,
            peaks_per_subband: ChainOptions::default().peaks_per_subband,
            dt: 0.0,
            steps: 2000,
            sample_every: 10,
            gamma: net.dissipation,
            window: net.coupling_window,
            coupling: net.coupling_strength,
            relaxation: net.relaxation,
            bridge_triplets: net.bridge_triplets,
            initial_energy: net.initial_energy,
            inject_layer: 0,
            inject_amount: 1.0,
            seed: 0,
            threshold: dec.threshold,
            csbsl_loops: dec.csbsl_loops,
            align_tolerance: dec.align_tolerance,
            dual: dec.dual,
            mode: WriteMode::Single,
            tau0: col.tau0,
            level_cap: col.level_cap,
            write_gain: col.write_gain,
            max_cycles: DEFAULT_MAX_CYCLES,
            epsilon: DEFAULT_EPSILON,
            out_dir: PathBuf::from("ajo-out"),
            n_list: bench.n_list,
            p_list: bench.p_list,
            pattern_sizes: bench.pattern_sizes,
            trials: bench.trials,
            verify: bench.verify,
            pattern_p: bench.pattern_p,
            symbols: bench.band.symbols,
            timing: true,
        }
    }
}

fn list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| s.parse().ok()).collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| AjoError::Config { line: i + 1, message: format!("expected key = value, found {line:?}") })?;
            c.set(k.trim(), v.trim()).map_err(|message| AjoError::Config { line: i + 1, message })?;
        }
        c.validate().map_err(|message| AjoError::Config { line: 0, message })?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?).map_err(|e| match e {
            AjoError::Config { line, message } => AjoError::Config { line, message: format!("{}: {message}", path.display()) },
            other => other,
        })
    }

    /// Applies one setting; the error names what was wrong.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        fn p<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
        }
        fn l<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<Vec<T>, String> {
            list(v).ok_or_else(|| format!("bad list {v:?} for {key}"))
        }
        match key {
            "chain" => self.chain = if v == "brain-model" { ChainSource::BrainModel } else { ChainSource::File(PathBuf::from(v)) },
            "peaks_per_subband" => self.peaks_per_subband = p(key, v)?,
            "dt" => self.dt = p(key, v)?,
            "steps" => self.steps = p(key, v)?,
            "sample_every" => self.sample_every = p(key, v)?,
            "gamma" => self.gamma = p(key, v)?,
            "window" => self.window = p(key, v)?,
            "coupling" => self.coupling = p(key, v)?,
            "relaxation" => self.relaxation = p(key, v)?,
            "bridge_triplets" => self.bridge_triplets = p(key, v)?,
            "initial_energy" => self.initial_energy = p(key, v)?,
            "inject_layer" => self.inject_layer = p(key, v)?,
            "inject_amount" => self.inject_amount = p(key, v)?,
            "seed" => self.seed = p(key, v)?,
            "threshold" => self.threshold = p(key, v)?,
            "csbsl_loops" => self.csbsl_loops = p(key, v)?,
            "align_tolerance" => self.align_tolerance = p(key, v)?,
            "dual" => self.dual = p(key, v)?,
            "mode" => self.mode = WriteMode::from_name(v).ok_or_else(|| format!("bad mode {v:?} (single or paired)"))?,
            "tau0" => self.tau0 = p(key, v)?,
            "level_cap" => self.level_cap = p(key, v)?,
            "write_gain" => self.write_gain = p(key, v)?,
            "max_cycles" => self.max_cycles = p(key, v)?,
            "epsilon" => self.epsilon = p(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "n_list" => self.n_list = l(key, v)?,
            "p_list" => self.p_list = l(key, v)?,
            "pattern_sizes" => self.pattern_sizes = l(key, v)?,
            "trials" => self.trials = p(key, v)?,
            "verify" => self.verify = p(key, v)?,
            "pattern_p" => self.pattern_p = p(key, v)?,
            "symbols" => self.symbols = p(key, v)?,
            "timing" => self.timing = p(key, v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let checks: [(bool, &str); 14] = [
            (self.peaks_per_subband >= 1, "peaks_per_subband must be at least 1"),
            (self.dt >= 0.0 && self.dt.is_finite(), "dt must be >= 0 (0 = automatic)"),
            (self.sample_every >= 1, "sample_every must be at least 1"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.window >= 0.0, "window must be >= 0"),
            (self.coupling > 0.0, "coupling must be > 0"),
            ((0.0..=1.0).contains(&self.relaxation), "relaxation must lie in [0, 1]"),
            (self.initial_energy >= 0.0 && self.inject_amount >= 0.0, "energies must be >= 0"),
            ((0.0..=1.0).contains(&self.threshold), "threshold must lie in [0, 1]"),
            (self.align_tolerance >= 0.0, "align_tolerance must be >= 0"),
            (self.tau0 > 0.0, "tau0 must be > 0"),
            ((0.0..=1.0).contains(&self.write_gain), "write_gain must lie in [0, 1]"),
            (self.max_cycles >= 1 && self.epsilon >= 0.0, "max_cycles must be >= 1 and epsilon >= 0"),
            (self.symbols >= 1, "symbols must be at least 1"),
        ];
        match checks.iter().find(|c| !c.0) {
            Some((_, m)) => Err((*m).to_string()),
            None => Ok(()),
        }
    }

    /// Replaces the seed with `AJO_SEED` when that is set.
    pub fn apply_seed_override(&mut self, env_seed: Option<&str>) -> Result<()> {
        if let Some(s) = env_seed {
            self.seed = s.trim().parse().map_err(|_| AjoError::Usage(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    /// Every setting, one `key = value` per line, in a fixed order. Parses
    /// back to the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let chain = match &self.chain {
            ChainSource::BrainModel => "brain-model".to_string(),
            ChainSource::File(p) => p.display().to_string(),
        };
        let entries: Vec<(&str, String)> = vec![
            ("chain", chain),
            ("peaks_per_subband", self.peaks_per_subband.to_string()),
            ("dt", format!("{:?}", self.dt)),
            ("steps", self.steps.to_string()),
            ("sample_every", self.sample_every.to_string()),
            ("gamma", format!("{:?}", self.gamma)),
            ("window", format!("{:?}", self.window)),
            ("coupling", format!("{:?}", self.coupling)),
            ("relaxation", format!("{:?}", self.relaxation)),
            ("bridge_triplets", self.bridge_triplets.to_string()),
            ("initial_energy", format!("{:?}", self.initial_energy)),
            ("inject_layer", self.inject_layer.to_string()),
            ("inject_amount", format!("{:?}", self.inject_amount)),
            ("seed", self.seed.to_string()),
            ("threshold", format!("{:?}", self.threshold)),
            ("csbsl_loops", self.csbsl_loops.to_string()),
            ("align_tolerance", format!("{:?}", self.align_tolerance)),
            ("dual", self.dual.to_string()),
            ("mode", self.mode.name().to_string()),
            ("tau0", format!("{:?}", self.tau0)),
            ("level_cap", self.level_cap.to_string()),
            ("write_gain", format!("{:?}", self.write_gain)),
            ("max_cycles", self.max_cycles.to_string()),
            ("epsilon", format!("{:?}", self.epsilon)),
            ("out_dir", self.out_dir.display().to_string()),
            ("n_list", join(&self.n_list)),
            ("p_list", join(&self.p_list)),
            ("pattern_sizes", join(&self.pattern_sizes)),
            ("trials", self.trials.to_string()),
            ("verify", self.verify.to_string()),
            ("pattern_p", format!("{:?}", self.pattern_p)),
            ("symbols", self.symbols.to_string()),
            ("timing", self.timing.to_string()),
        ];
        for (k, v) in entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn chain_options(&self) -> ChainOptions {
        ChainOptions { peaks_per_subband: self.peaks_per_subband, ..ChainOptions::default() }
    }

    pub fn build_chain(&self) -> Result<ResonanceChain> {
        match &self.chain {
            ChainSource::BrainModel if self.peaks_per_subband == ChainOptions::default().peaks_per_subband => Ok(load_brain_model()),
            ChainSource::BrainModel => Ok(build_chain(&ajo_core::chain::brain_spec(), self.chain_options())?),
            ChainSource::File(p) => {
                let spec = parse_chain_text(&read_text(p)?, &p.display().to_string())?;
                Ok(build_chain(&spec, self.chain_options())?)
            }
        }
    }

    pub fn network(&self) -> NetworkConfig {
        NetworkConfig {
            coupling_window: self.window,
            coupling_strength: self.coupling,
            dissipation: self.gamma,
            relaxation: self.relaxation,
            initial_energy: self.initial_energy,
            seed: self.seed,
            bridge_triplets: self.bridge_triplets,
        }
    }

    pub fn decompose(&self) -> DecomposeConfig {
        DecomposeConfig {
            threshold: self.threshold,
            csbsl_loops: self.csbsl_loops,
            align_tolerance: self.align_tolerance,
            dual: self.dual,
            ..DecomposeConfig::default()
        }
    }

    pub fn column(&self) -> ColumnConfig {
        ColumnConfig { tau0: self.tau0, level_cap: self.level_cap, write_gain: self.write_gain, ..ColumnConfig::default() }
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            n_list: self.n_list.clone(),
            p_list: self.p_list.clone(),
            pattern_sizes: self.pattern_sizes.clone(),
            trials: self.trials,
            verify: self.verify,
            seed: self.seed,
            pattern_p: self.pattern_p,
            band: LabelBand { symbols: self.symbols, ..LabelBand::default() },
        }
    }
}

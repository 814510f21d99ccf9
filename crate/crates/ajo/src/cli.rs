//! Command-line dispatch. Exit codes: 0 success, 1 domain error, 2 usage
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ajo_core::chain::{chain_metrics, validate_chain, ResonanceChain};
use ajo_core::clique::{bench_csv, run_bench};
use ajo_core::column::ArgumentColumn;
use ajo_core::query::QueryError;
use clap::{Args, Parser, Subcommand};

use crate::config::{ChainSource, ExperimentConfig, SEED_ENV};
use crate::error::{AjoError, Result};
use crate::experiments::{demo, learn_files, parse_pairs, query_image, simulate, LearnPair};
use crate::export::{energy_by_layer_csv, order_parameter_csv, query_scores_csv, trajectory_csv};
use crate::formats::{answer_json, chain_text, graph_dot, graph_json, load_image, write_text};
use crate::state::{load_state, save_state};

#[derive(Debug, Parser)]
#[command(name = "ajo", version, about = "Resonance-chain computing experiments")]
pub struct Cli {
    /// key = value configuration file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, check, measure or export a resonance chain
    Chain {
        #[command(subcommand)]
        action: ChainAction,
    },
    /// Step the chain's oscillator network and export time series
    Simulate {
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
        /// Also write every oscillator's phase and energy at each sample
        #[arg(long)]
        trajectory: bool,
    },
    /// Decompose an image (PGM P2 or 0-9 grid) into a seed graph
    Decompose {
        #[arg(long, value_name = "FILE")]
        image: PathBuf,
        /// JSON output (stdout when absent)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Write if-then arguments learned from image pairs into a state file
    Learn {
        #[arg(long, value_name = "FILE")]
        state: PathBuf,
        /// Lines of `if_image then_image [label]`
        #[arg(long, value_name = "FILE", conflicts_with_all = ["if_image", "then_image"])]
        pairs: Option<PathBuf>,
        #[arg(long = "if", value_name = "FILE", requires = "then_image")]
        if_image: Option<PathBuf>,
        #[arg(long = "then", value_name = "FILE", requires = "if_image")]
        then_image: Option<PathBuf>,
        #[arg(long, default_value = "")]
        label: String,
    },
    /// Ask a learned column about an image
    Query {
        #[arg(long, value_name = "FILE")]
        state: PathBuf,
        #[arg(long, value_name = "FILE")]
        image: PathBuf,
        /// Answer JSON
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Match scores CSV
        #[arg(long, value_name = "FILE")]
        scores: Option<PathBuf>,
    },
    /// Reply-back vs exhaustive labelled subgraph search
    Bench {
        /// Report CSV (default: <out_dir>/bench.csv)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Learn three image arguments and answer a perturbed query
    Demo {
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Use the bundled 12-level brain table
    #[arg(long, conflicts_with = "spec")]
    pub brain_model: bool,
    /// Chain file (`level triplet role lo_hz hi_hz` per line)
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ChainAction {
    /// Build the chain and list its layers
    Build(ChainArgs),
    /// Check every adjacent layer pair shares a sub-band
    Validate(ChainArgs),
    /// Bandwidth, FRP density and the conscious / intelligent flags
    Metrics(ChainArgs),
    /// Write the chain file format
    Export {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

/// Runs with the process environment.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_seed = std::env::var(SEED_ENV).ok();
    dispatch_with(argv, env_seed.as_deref(), out, err)
}

/// Runs with an explicit `AJO_SEED` value.
pub fn dispatch_with<I, T>(argv: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli, env_seed, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.name());
            if e.exit_code() == 2 {
                let _ = writeln!(err, "run `ajo --help` for usage");
            }
            e.exit_code()
        }
    }
}

fn io_err(e: std::io::Error) -> AjoError {
    AjoError::io("<stdout>", e)
}

fn chain_from(args: &ChainArgs, config: &ExperimentConfig) -> Result<ResonanceChain> {
    let mut c = config.clone();
    if args.brain_model {
        c.chain = ChainSource::BrainModel;
    } else if let Some(p) = &args.spec {
        c.chain = ChainSource::File(p.clone());
    }
    c.build_chain()
}

fn load_or_new(path: &Path, config: &ExperimentConfig) -> Result<ArgumentColumn> {
    if path.exists() {
        Ok(load_state(path)?.1)
    } else {
        Ok(ArgumentColumn::new(config.build_chain()?, config.column())?)
    }
}

pub fn run(cli: Cli, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.apply_seed_override(env_seed)?;
    let _ = writeln!(err, "# resolved config");
    for line in config.to_text().lines() {
        let _ = writeln!(err, "#   {line}");
    }

    match cli.command {
        Command::Chain { action } => match action {
            ChainAction::Build(args) => {
                let chain = chain_from(&args, &config)?;
                writeln!(out, "index,level,name,lo_hz,hi_hz,median_hz,peaks").map_err(io_err)?;
                for (i, l) in chain.layers().iter().enumerate() {
                    let r = l.range();
                    writeln!(out, "{i},{},{},{:e},{:e},{:e},{}", l.level, l.name, r.lo, r.hi, l.median_frequency(), l.peaks().count()).map_err(io_err)?;
                }
                writeln!(out, "# {} layers, {} peaks, fingerprint {:016x}", chain.layers().len(), chain.peak_count(), chain.fingerprint()).map_err(io_err)?;
            }
            ChainAction::Validate(args) => {
                let chain = chain_from(&args, &config)?;
                let report = validate_chain(&chain);
                for p in &report.pairs {
                    let w = p.widest.map_or("none".to_string(), |w| format!("{:e}..{:e}", w.lo, w.hi));
                    writeln!(out, "pair {}-{}: {} shared sub-band intersections, widest {w}", p.upper, p.lower, p.shared.len()).map_err(io_err)?;
                }
                writeln!(out, "pairs={} violations={}", report.pairs.len(), report.violations.len()).map_err(io_err)?;
                if !report.is_valid() {
                    return Err(AjoError::CheckFailed(format!("{} adjacent layer pairs share no sub-band", report.violations.len())));
                }
            }
            ChainAction::Metrics(args) => {
                let m = chain_metrics(&chain_from(&args, &config)?);
                writeln!(out, "bandwidth_decades={}", m.bandwidth_decades).map_err(io_err)?;
                writeln!(out, "frp_density={}", m.frp_density).map_err(io_err)?;
                writeln!(out, "dense_span_decades={}", m.dense_span_decades).map_err(io_err)?;
                writeln!(out, "intelligent={}", m.intelligent).map_err(io_err)?;
                writeln!(out, "conscious={}", m.conscious).map_err(io_err)?;
            }
            ChainAction::Export { chain, out: path } => {
                let text = chain_text(&chain_from(&chain, &config)?.to_spec());
                match path {
                    Some(p) => write_text(&p, &text)?,
                    None => out.write_all(text.as_bytes()).map_err(io_err)?,
                }
            }
        },
        Command::Simulate { steps, out_dir, trajectory } => {
            if let Some(s) = steps {
                config.steps = s;
            }
            let dir = out_dir.unwrap_or_else(|| config.out_dir.clone());
            let chain = config.build_chain()?;
            let run = simulate(&config, &chain, trajectory)?;
            write_text(&dir.join("order_parameter.csv"), &order_parameter_csv(&run.order))?;
            write_text(&dir.join("energy_by_layer.csv"), &energy_by_layer_csv(&run.energies))?;
            if trajectory {
                write_text(&dir.join("trajectory.csv"), &trajectory_csv(&run.trajectory))?;
            }
            let (t, r) = run.order.last().copied().unwrap_or_default();
            writeln!(out, "steps={} dt={:e} time={t:e} r={r:.6} out_dir={}", config.steps, run.dt, dir.display()).map_err(io_err)?;
        }
        Command::Decompose { image, out: path, dot } => {
            let graph = ajo_core::fractal::decompose_with(&load_image(&image)?, &config.decompose())?;
            let json = graph_json(&graph)?;
            match path {
                Some(p) => write_text(&p, &json)?,
                None => out.write_all(json.as_bytes()).map_err(io_err)?,
            }
            if let Some(p) = dot {
                write_text(&p, &graph_dot(&graph))?;
            }
        }
        Command::Learn { state, pairs, if_image, then_image, label } => {
            let list = match (pairs, if_image, then_image) {
                (Some(p), _, _) => parse_pairs(&p)?,
                (None, Some(i), Some(t)) => vec![LearnPair { if_image: i, then_image: t, label }],
                _ => return Err(AjoError::Usage("learn needs --pairs FILE or both --if and --then".into())),
            };
            let mut column = load_or_new(&state, &config)?;
            let ids = learn_files(&mut column, &config, &list)?;
            save_state(&state, &column)?;
            writeln!(out, "learned {:?}; arguments={} coupling_rules={}", ids, column.len(), column.coupling_rule_count()).map_err(io_err)?;
        }
        Command::Query { state, image, out: path, scores } => {
            if !state.exists() {
                return Err(QueryError::EmptyColumn.into());
            }
            let (_, column) = load_state(&state)?;
            let answer = query_image(&column, &config, load_image(&image)?)?;
            for m in &answer.matched {
                writeln!(out, "match {} {:?} score={:.6}", m.argument, m.label, m.score).map_err(io_err)?;
            }
            writeln!(out, "cycles_used={} converged={} seeds={}", answer.cycles_used, answer.converged, answer.graph.seeds.len()).map_err(io_err)?;
            if let Some(p) = path {
                write_text(&p, &answer_json(&answer)?)?;
            }
            if let Some(p) = scores {
                write_text(&p, &query_scores_csv(&answer.matched))?;
            }
        }
        Command::Bench { out: path } => {
            let bench = config.bench();
            let start = Instant::now();
            let timing = config.timing;
            let rows = run_bench(&bench, &mut || if timing { start.elapsed().as_micros() as u64 } else { 0 })?;
            let path = path.unwrap_or_else(|| config.out_dir.join("bench.csv"));
            write_text(&path, &bench_csv(&rows))?;
            let agree = rows.iter().all(|r| r.agreement != Some(false));
            let recovered = rows.iter().all(|r| r.planted_recovered);
            let rounds: Vec<usize> = rows.iter().map(|r| r.label_rounds).collect();
            writeln!(
                out,
                "rows={} agreement={agree} planted_recovered={recovered} label_rounds={:?} report={}",
                rows.len(),
                rounds.iter().max(),
                path.display()
            )
            .map_err(io_err)?;
            if !agree {
                return Err(AjoError::CheckFailed("reply-back disagreed with the exhaustive oracle".into()));
            }
        }
        Command::Demo { out_dir } => {
            let run = demo(&config, config.build_chain()?)?;
            out.write_all(run.report.as_bytes()).map_err(io_err)?;
            if let Some(dir) = out_dir {
                write_text(&dir.join("answer.json"), &answer_json(&run.answer)?)?;
                write_text(&dir.join("answer.dot"), &graph_dot(&run.answer.graph))?;
                write_text(&dir.join("query_scores.csv"), &query_scores_csv(&run.answer.matched))?;
                save_state(&dir.join("state.txt"), &run.column)?;
            }
        }
    }
    Ok(())
}

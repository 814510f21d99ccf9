//! Runs behind the subcommands, free of argument parsing and file layout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ajo_core::chain::ResonanceChain;
use ajo_core::column::ArgumentColumn;
use ajo_core::dynamics::{build_network, STABILITY_FACTOR};
use ajo_core::fractal::primitives::draw_primitive;
use ajo_core::fractal::{decompose_with, Bitmap, GridImage, PrimitiveKind, SeedGraph};
use ajo_core::query::{Answer, Query, QueryConfig, QueryEngine, SeedMap};

use crate::config::ExperimentConfig;
use crate::error::{AjoError, Result};
use crate::export::TrajectoryRow;
use crate::formats::{load_image, read_text};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub dt: f64,
    pub order: Vec<(f64, f64)>,
    pub energies: Vec<(f64, Vec<f64>)>,
    pub trajectory: Vec<TrajectoryRow>,
}

/// Steps the chain's oscillator network with multirate integration,
/// sampling every `sample_every` steps (and at time 0).
pub fn simulate(config: &ExperimentConfig, chain: &ResonanceChain, trajectory: bool) -> Result<SimulationRun> {
    let mut net = build_network(chain, config.network())?;
    if config.inject_amount > 0.0 {
        net.inject_energy(config.inject_layer, config.inject_amount)?;
    }
    // just under the limit keeps the fastest layer at one substep
    let dt = if config.dt > 0.0 { config.dt } else { STABILITY_FACTOR / net.max_frequency() * (1.0 - 1e-9) };
    let all: Vec<usize> = (0..net.len()).collect();
    let mut run = SimulationRun { dt, order: Vec::new(), energies: Vec::new(), trajectory: Vec::new() };
    for step in 0..=config.steps {
        if step > 0 {
            net.step_multirate(dt)?;
        }
        if step % config.sample_every == 0 || step == config.steps {
            run.order.push((net.time, net.order_parameter(&all)));
            run.energies.push((net.time, net.layer_energies()));
            if trajectory {
                run.trajectory.extend(net.states.iter().enumerate().map(|(i, s)| TrajectoryRow {
                    time: net.time,
                    oscillator: i,
                    phase: s.phase,
                    energy: s.energy,
                }));
            }
        }
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnPair {
    pub if_image: PathBuf,
    pub then_image: PathBuf,
    pub label: String,
}

/// `if_path then_path [label]` per line, paths relative to the list file.
pub fn parse_pairs(path: &Path) -> Result<Vec<LearnPair>> {
    let text = read_text(path)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&f.len()) {
            return Err(AjoError::parse(path.display().to_string(), i + 1, "expected `if_image then_image [label]`"));
        }
        out.push(LearnPair { if_image: dir.join(f[0]), then_image: dir.join(f[1]), label: f.get(2).unwrap_or(&"").to_string() });
    }
    Ok(out)
}

fn graph_of(image: &GridImage, config: &ExperimentConfig) -> Result<SeedGraph> {
    Ok(decompose_with(image, &config.decompose())?)
}

/// Decomposes both images of every pair and writes the arguments in one
/// batch; nothing is written if any pair fails.
pub fn learn_images(column: &mut ArgumentColumn, config: &ExperimentConfig, pairs: &[(GridImage, GridImage, String)]) -> Result<Vec<u32>> {
    let map = SeedMap::new(column.pristine())?;
    let mut args = Vec::with_capacity(pairs.len());
    for (a, b, label) in pairs {
        let (gi, gt) = (graph_of(a, config)?, graph_of(b, config)?);
        if gi.is_empty() || gt.is_empty() {
            return Err(AjoError::Usage(format!("pair {label:?}: an image decomposes to no seeds")));
        }
        args.push(map.argument(gi, gt).with_label(label.clone()));
    }
    Ok(column.write_batch(args, config.mode)?)
}

pub fn learn_files(column: &mut ArgumentColumn, config: &ExperimentConfig, pairs: &[LearnPair]) -> Result<Vec<u32>> {
    let images = pairs.iter().map(|p| Ok((load_image(&p.if_image)?, load_image(&p.then_image)?, p.label.clone()))).collect::<Result<Vec<_>>>()?;
    learn_images(column, config, &images)
}

pub fn query_config(config: &ExperimentConfig) -> QueryConfig {
    QueryConfig { decompose: config.decompose(), ..QueryConfig::default() }
}

pub fn query_image(column: &ArgumentColumn, config: &ExperimentConfig, image: GridImage) -> Result<Answer> {
    let engine = QueryEngine::new(column, column.pristine(), query_config(config))?;
    let mut q = Query::image(image);
    q.max_cycles = config.max_cycles;
    q.epsilon = config.epsilon;
    Ok(engine.ask(&q)?)
}

/// 40 × 40 image holding one primitive.
pub fn primitive_image(kind: PrimitiveKind, center: (f64, f64)) -> GridImage {
    let mut b = Bitmap::new(40, 40);
    draw_primitive(&mut b, kind, center, 8.0, 0.0);
    GridImage::from_bitmap(&b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoRun {
    pub column: ArgumentColumn,
    pub query: GridImage,
    pub answer: Answer,
    pub report: String,
}

/// Learn three image arguments on the chain, then ask with a shifted,
/// speckled circle.
pub fn demo(config: &ExperimentConfig, chain: ResonanceChain) -> Result<DemoRun> {
    let mut column = ArgumentColumn::new(chain, config.column())?;
    let c = (20.0, 20.0);
    let lessons = [
        (PrimitiveKind::Circle, PrimitiveKind::Square, "circle-then-square"),
        (PrimitiveKind::Triangle, PrimitiveKind::StraightLine, "triangle-then-line"),
        (PrimitiveKind::Square, PrimitiveKind::Triangle, "square-then-triangle"),
    ];
    let pairs: Vec<_> = lessons.iter().map(|(a, b, l)| (primitive_image(*a, c), primitive_image(*b, c), l.to_string())).collect();
    learn_images(&mut column, config, &pairs)?;

    let mut b = Bitmap::new(40, 40);
    draw_primitive(&mut b, PrimitiveKind::Circle, (21.0, 19.0), 8.0, 0.0);
    b.set((3, 36), true);
    let query = GridImage::from_bitmap(&b);
    let answer = query_image(&column, config, query.clone())?;

    let mut report = String::new();
    let _ = writeln!(report, "learned {} arguments; coupling rules {}", column.len(), column.coupling_rule_count());
    for a in column.base() {
        let _ = writeln!(report, "  argument {} {}", a.id, a.label);
    }
    let _ = writeln!(report, "query: circle shifted by (1, -1) with one stray cell");
    let _ = writeln!(report, "cycles {} converged {} rounds {}", answer.cycles_used, answer.converged, answer.rounds);
    for m in &answer.matched {
        let _ = writeln!(report, "  match {} {} score {:.3}", m.argument, m.label, m.score);
    }
    let _ = writeln!(report, "answer then-graph:");
    for s in &answer.graph.seeds {
        let _ = writeln!(report, "  {} at ({:.1}, {:.1}) scale {:.2}", s.kind.name(), s.center.0, s.center.1, s.scale);
    }
    Ok(DemoRun { column, query, answer, report })
}

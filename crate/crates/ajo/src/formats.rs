//! Text and JSON formats: chain files, images, seed graphs and answers.

use std::fmt::Write as _;
use std::path::Path;

use ajo_core::chain::{BandRole, BandRow, ChainSpec};
use ajo_core::fractal::{GridImage, Relation, SeedGraph};
use ajo_core::query::{Answer, ScoredArgument};
use serde::{Deserialize, Serialize};

use crate::error::{AjoError, Result};

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| AjoError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AjoError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| AjoError::io(path, e))
}

/// Line-oriented chain description, one sub-band per line:
/// `level triplet role lo_hz hi_hz`. Layer names ride in `#! name` comments,
/// which plain readers skip like any other comment.
pub fn parse_chain_text(text: &str, origin: &str) -> Result<ChainSpec> {
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |m: String| AjoError::parse(origin, line_no, m);
        if let Some(rest) = raw.trim().strip_prefix("#!") {
            let mut t = rest.split_whitespace();
            if t.next() == Some("name") {
                let level = t.next().and_then(|v| v.parse::<u32>().ok()).ok_or_else(|| err("`#! name` needs a level".into()))?;
                let name = t.collect::<Vec<_>>().join(" ");
                names.push((level, name));
            }
            continue;
        }
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(err(format!("expected `level triplet role lo_hz hi_hz`, found {} fields", f.len())));
        }
        let level = f[0].parse::<u32>().map_err(|_| err(format!("bad level {:?}", f[0])))?;
        let triplet = f[1].parse::<usize>().ok().filter(|t| *t >= 1).ok_or_else(|| err(format!("bad triplet {:?} (1-based)", f[1])))?;
        let role = BandRole::from_token(f[2]).ok_or_else(|| err(format!("bad role {:?} (lower, self or upper)", f[2])))?;
        let lo = f[3].parse::<f64>().map_err(|_| err(format!("bad frequency {:?}", f[3])))?;
        let hi = f[4].parse::<f64>().map_err(|_| err(format!("bad frequency {:?}", f[4])))?;
        rows.push(BandRow { level, triplet, role, lo, hi });
    }
    Ok(ChainSpec::from_rows(&rows, &names)?)
}

pub fn chain_text(spec: &ChainSpec) -> String {
    let mut s = String::from("# level triplet role lo_hz hi_hz\n");
    for layer in &spec.layers {
        let _ = writeln!(s, "#! name {} {}", layer.level, layer.name);
    }
    for r in spec.rows() {
        let _ = writeln!(s, "{} {} {} {:e} {:e}", r.level, r.triplet, r.role.token(), r.lo, r.hi);
    }
    s
}

/// ASCII PGM (`P2`). Sample values become intensities `v / maxval`.
pub fn parse_pgm(text: &str, origin: &str) -> Result<GridImage> {
    let mut tokens = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for t in line.split('#').next().unwrap_or("").split_whitespace() {
            tokens.push((i + 1, t));
        }
    }
    let last_line = text.lines().count().max(1);
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| AjoError::parse(origin, last_line, format!("unexpected end of file, expected {what}")));
    let (line, magic) = next("the P2 magic")?;
    if magic != "P2" {
        return Err(AjoError::parse(origin, line, format!("expected P2, found {magic:?}")));
    }
    let mut number = |what: &str| -> Result<usize> {
        let (line, t) = next(what)?;
        t.parse::<usize>().map_err(|_| AjoError::parse(origin, line, format!("bad {what} {t:?}")))
    };
    let (w, h, max) = (number("width")?, number("height")?, number("maxval")?);
    if max == 0 {
        return Err(AjoError::parse(origin, 1, "maxval must be positive"));
    }
    let mut values = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        let v = number("sample")?;
        if v > max {
            return Err(AjoError::parse(origin, last_line, format!("sample {v} exceeds maxval {max}")));
        }
        values.push(v as f64 / max as f64);
    }
    Ok(GridImage::new(w, h, values)?)
}

/// Plain grid: one row per line, one digit `0`–`9` per cell, `v / 9`.
pub fn parse_digit_grid(text: &str, origin: &str) -> Result<GridImage> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for c in line.chars().filter(|c| !c.is_whitespace()) {
            let d = c.to_digit(10).ok_or_else(|| AjoError::parse(origin, i + 1, format!("{c:?} is not a digit 0-9")))?;
            row.push(d as f64 / 9.0);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(AjoError::parse(origin, i + 1, format!("row has {} cells, line {first_line} has {}", row.len(), first.len())));
            }
        } else {
            first_line = i + 1;
        }
        rows.push(row);
    }
    let (w, h) = (rows.first().map_or(0, Vec::len), rows.len());
    Ok(GridImage::new(w, h, rows.concat())?)
}

/// PGM when the file starts with `P2`, digit grid otherwise.
pub fn load_image(path: &Path) -> Result<GridImage> {
    let text = read_text(path)?;
    let origin = path.display().to_string();
    if text.trim_start().starts_with("P2") {
        parse_pgm(&text, &origin)
    } else {
        parse_digit_grid(&text, &origin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema_version: u32,
    pub graph: SeedGraph,
}

pub fn graph_json(graph: &SeedGraph) -> Result<String> {
    let doc = GraphDocument { schema_version: GRAPH_SCHEMA_VERSION, graph: graph.clone() };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn parse_graph_json(text: &str, origin: &str) -> Result<SeedGraph> {
    let doc: GraphDocument = serde_json::from_str(text).map_err(|e| AjoError::parse(origin, e.line(), e.to_string()))?;
    if doc.schema_version != GRAPH_SCHEMA_VERSION {
        return Err(AjoError::Version { path: origin.into(), found: doc.schema_version.to_string(), expected: "1" });
    }
    Ok(doc.graph)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerMetadata {
    pub cycles_used: usize,
    pub converged: bool,
    pub rounds: usize,
    pub scores: Vec<ScoredArgument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerDocument {
    pub schema_version: u32,
    pub graph: SeedGraph,
    pub metadata: AnswerMetadata,
}

pub fn answer_json(answer: &Answer) -> Result<String> {
    let doc = AnswerDocument {
        schema_version: GRAPH_SCHEMA_VERSION,
        graph: answer.graph.clone(),
        metadata: AnswerMetadata { cycles_used: answer.cycles_used, converged: answer.converged, rounds: answer.rounds, scores: answer.matched.clone() },
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Graphviz view: one node per seed, `contains` edges drawn as arrows.
pub fn graph_dot(graph: &SeedGraph) -> String {
    let mut s = String::from("digraph seeds {\n  node [shape=box];\n");
    for (i, seed) in graph.seeds.iter().enumerate() {
        let _ = writeln!(
            s,
            "  n{i} [label=\"{}\\n({:.1}, {:.1}) s={:.2}\\nlayer {} score {:.2}\"{}];",
            seed.kind.name(),
            seed.center.0,
            seed.center.1,
            seed.scale,
            seed.layer,
            seed.score,
            if seed.projected { ", style=dashed" } else { "" }
        );
    }
    for e in &graph.edges {
        let dir = if e.relation == Relation::Contains { "forward" } else { "none" };
        let _ = writeln!(s, "  n{} -> n{} [label=\"{}\", dir={dir}];", e.a, e.b, e.relation.name());
    }
    s.push_str("}\n");
    s
}

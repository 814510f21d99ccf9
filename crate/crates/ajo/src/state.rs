//! Versioned column persistence.
//!
//! ```text
//! ajo-state v1
//! chain-hash 3f2a…        fingerprint of the pristine chain
//! arguments 3
//! mode single             single | paired | none
//! next-id 4
//! time 3
//! column tau0=1 level_cap=8 match_relative=0.000001 write_gain=0.1 rule_budget=65536
//! options peaks_per_subband=8 map_resolution=256 quality_factor=10 intensity=1
//! name 1 EKAM             one per layer
//! band 1 1 lower 1e12 2e12   one per sub-band, as in the chain file
//! arg 1 born=0 if=3/5,4/7 then=3/9 label="circle"
//! graph 1 if {…}          optional seed graphs, one JSON line each
//! end
//! ```
//!
//! Only the pristine chain and the base arguments are stored; the working
//! chain and every coupling rule are rebuilt on load by replaying the writes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use ajo_core::chain::{build_chain, BandRole, BandRow, ChainOptions, ChainSpec, PeakRef, ResonanceChain};
use ajo_core::column::{Argument, ArgumentColumn, ColumnConfig, WriteMode};
use ajo_core::fractal::SeedGraph;

use crate::error::{AjoError, Result};
use crate::formats::{read_text, write_text};

pub const STATE_MAGIC: &str = "ajo-state";
pub const STATE_VERSION: &str = "v1";

fn peaks_text(set: &BTreeSet<PeakRef>) -> String {
    set.iter().map(|p| format!("{}/{}", p.layer, p.peak)).collect::<Vec<_>>().join(",")
}

pub fn state_text(column: &ArgumentColumn) -> Result<String> {
    let chain = column.pristine();
    let cfg = column.config();
    let opt = chain.options();
    let mut s = String::new();
    let _ = writeln!(s, "{STATE_MAGIC} {STATE_VERSION}");
    let _ = writeln!(s, "chain-hash {:016x}", chain.fingerprint());
    let _ = writeln!(s, "arguments {}", column.len());
    let _ = writeln!(s, "mode {}", column.mode().map_or("none", WriteMode::name));
    let _ = writeln!(s, "next-id {}", column.next_id());
    let _ = writeln!(s, "time {:?}", column.time());
    let _ = writeln!(
        s,
        "column tau0={:?} level_cap={} match_relative={:?} write_gain={:?} rule_budget={}",
        cfg.tau0, cfg.level_cap, cfg.match_relative, cfg.write_gain, cfg.rule_budget
    );
    let _ = writeln!(
        s,
        "options peaks_per_subband={} map_resolution={} quality_factor={:?} intensity={:?}",
        opt.peaks_per_subband, opt.map_resolution, opt.quality_factor, opt.intensity
    );
    let spec = chain.to_spec();
    for l in &spec.layers {
        let _ = writeln!(s, "name {} {}", l.level, l.name);
    }
    for r in spec.rows() {
        let _ = writeln!(s, "band {} {} {} {:e} {:e}", r.level, r.triplet, r.role.token(), r.lo, r.hi);
    }
    for a in column.base() {
        let _ = writeln!(
            s,
            "arg {} born={:?} if={} then={} label={}",
            a.id,
            a.born_at,
            peaks_text(&a.if_set),
            peaks_text(&a.then_set),
            serde_json::to_string(&a.label)?
        );
        if let (Some(i), Some(t)) = (&a.if_graph, &a.then_graph) {
            let _ = writeln!(s, "graph {} if {}", a.id, serde_json::to_string(i)?);
            let _ = writeln!(s, "graph {} then {}", a.id, serde_json::to_string(t)?);
        }
    }
    s.push_str("end\n");
    Ok(s)
}

pub fn save_state(path: &Path, column: &ArgumentColumn) -> Result<()> {
    write_text(path, &state_text(column)?)
}

pub fn load_state(path: &Path) -> Result<(ResonanceChain, ArgumentColumn)> {
    parse_state(&read_text(path)?, &path.display().to_string())
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: &'a str,
    count: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, expected: &str) -> Result<(usize, &'a str)> {
        match self.it.next() {
            Some((i, l)) => Ok((i + 1, l)),
            None => Err(AjoError::parse(self.origin, self.count + 1, format!("file ends early, expected {expected}"))),
        }
    }

    /// `key value` line with the given key.
    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next(&format!("`{key}`"))?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok((n, v)),
            _ => Err(AjoError::parse(self.origin, n, format!("expected `{key}`, found {l:?}"))),
        }
    }
}

fn num<T: std::str::FromStr>(origin: &str, line: usize, what: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| AjoError::parse(origin, line, format!("bad {what} {v:?}")))
}

/// `k=v k=v …` with exactly the given keys in order.
fn pairs<'a>(origin: &str, line: usize, text: &'a str, keys: &[&str]) -> Result<Vec<&'a str>> {
    let items: Vec<&str> = text.split_whitespace().collect();
    if items.len() != keys.len() {
        return Err(AjoError::parse(origin, line, format!("expected {} fields", keys.len())));
    }
    items
        .iter()
        .zip(keys)
        .map(|(it, k)| match it.split_once('=') {
            Some((a, b)) if a == *k => Ok(b),
            _ => Err(AjoError::parse(origin, line, format!("expected `{k}=…`, found {it:?}"))),
        })
        .collect()
}

fn parse_peaks(origin: &str, line: usize, text: &str) -> Result<BTreeSet<PeakRef>> {
    text.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (l, p) = t.split_once('/').ok_or_else(|| AjoError::parse(origin, line, format!("bad peak {t:?}, expected layer/id")))?;
            Ok(PeakRef::new(num(origin, line, "layer", l)?, num(origin, line, "peak id", p)?))
        })
        .collect()
}

pub fn parse_state(text: &str, origin: &str) -> Result<(ResonanceChain, ArgumentColumn)> {
    let mut lines = Lines { it: text.lines().enumerate(), origin, count: text.lines().count() };
    let (n, head) = lines.next("the header")?;
    match head.split_once(' ') {
        Some((STATE_MAGIC, STATE_VERSION)) => {}
        Some((STATE_MAGIC, v)) => return Err(AjoError::Version { path: origin.into(), found: v.into(), expected: STATE_VERSION }),
        _ => return Err(AjoError::parse(origin, n, format!("not a state file: {head:?}"))),
    }
    let (hash_line, hash) = lines.field("chain-hash")?;
    let hash = u64::from_str_radix(hash, 16).map_err(|_| AjoError::parse(origin, hash_line, "bad chain hash"))?;
    let (n, v) = lines.field("arguments")?;
    let count: usize = num(origin, n, "argument count", v)?;
    let (n, v) = lines.field("mode")?;
    let mode = match v {
        "none" => None,
        m => Some(WriteMode::from_name(m).ok_or_else(|| AjoError::parse(origin, n, format!("bad mode {m:?}")))?),
    };
    let (n, v) = lines.field("next-id")?;
    let next_id: u32 = num(origin, n, "next id", v)?;
    let (n, v) = lines.field("time")?;
    let time: f64 = num(origin, n, "time", v)?;
    let (n, v) = lines.field("column")?;
    let c = pairs(origin, n, v, &["tau0", "level_cap", "match_relative", "write_gain", "rule_budget"])?;
    let config = ColumnConfig {
        tau0: num(origin, n, "tau0", c[0])?,
        level_cap: num(origin, n, "level_cap", c[1])?,
        match_relative: num(origin, n, "match_relative", c[2])?,
        write_gain: num(origin, n, "write_gain", c[3])?,
        rule_budget: num(origin, n, "rule_budget", c[4])?,
    };
    let (n, v) = lines.field("options")?;
    let o = pairs(origin, n, v, &["peaks_per_subband", "map_resolution", "quality_factor", "intensity"])?;
    let options = ChainOptions {
        peaks_per_subband: num(origin, n, "peaks_per_subband", o[0])?,
        map_resolution: num(origin, n, "map_resolution", o[1])?,
        quality_factor: num(origin, n, "quality_factor", o[2])?,
        intensity: num(origin, n, "intensity", o[3])?,
    };

    let mut names = Vec::new();
    let mut rows = Vec::new();
    let mut base: Vec<Argument> = Vec::new();
    let mut chain: Option<ResonanceChain> = None;
    loop {
        let (n, l) = lines.next("`end`")?;
        let (key, rest) = l.split_once(' ').unwrap_or((l, ""));
        match key {
            "name" if chain.is_none() && base.is_empty() => {
                let (lv, name) = rest.split_once(' ').ok_or_else(|| AjoError::parse(origin, n, "expected `name level NAME`"))?;
                names.push((num(origin, n, "level", lv)?, name.to_string()));
            }
            "band" if chain.is_none() => {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 5 {
                    return Err(AjoError::parse(origin, n, "expected `band level triplet role lo hi`"));
                }
                let role = BandRole::from_token(f[2]).ok_or_else(|| AjoError::parse(origin, n, format!("bad role {:?}", f[2])))?;
                rows.push(BandRow {
                    level: num(origin, n, "level", f[0])?,
                    triplet: num(origin, n, "triplet", f[1])?,
                    role,
                    lo: num(origin, n, "frequency", f[3])?,
                    hi: num(origin, n, "frequency", f[4])?,
                });
            }
            "arg" | "graph" | "end" => {
                if chain.is_none() {
                    let spec = ChainSpec::from_rows(&rows, &names).map_err(|e| AjoError::parse(origin, n, e.to_string()))?;
                    let built = build_chain(&spec, options).map_err(|e| AjoError::parse(origin, n, e.to_string()))?;
                    if built.fingerprint() != hash {
                        return Err(AjoError::parse(origin, hash_line, "chain hash does not match the stored bands"));
                    }
                    chain = Some(built);
                }
                match key {
                    "arg" => base.push(parse_arg(origin, n, rest)?),
                    "graph" => {
                        let mut t = rest.splitn(3, ' ');
                        let (id, side, json) = (t.next().unwrap_or(""), t.next().unwrap_or(""), t.next().unwrap_or(""));
                        let id: u32 = num(origin, n, "argument id", id)?;
                        let g: SeedGraph = serde_json::from_str(json).map_err(|e| AjoError::parse(origin, n, e.to_string()))?;
                        let a = base.iter_mut().find(|a| a.id == id).ok_or_else(|| AjoError::parse(origin, n, format!("graph for unknown argument {id}")))?;
                        match side {
                            "if" => a.if_graph = Some(g),
                            "then" => a.then_graph = Some(g),
                            s => return Err(AjoError::parse(origin, n, format!("bad graph side {s:?}"))),
                        }
                    }
                    _ => {
                        if base.len() != count {
                            return Err(AjoError::parse(origin, n, format!("header promises {count} arguments, found {}", base.len())));
                        }
                        if base.iter().any(|a| a.if_graph.is_some() != a.then_graph.is_some()) {
                            return Err(AjoError::parse(origin, n, "an argument has only one of its two graphs"));
                        }
                        if let Some((extra, _)) = lines.it.find(|(_, l)| !l.trim().is_empty()) {
                            return Err(AjoError::parse(origin, extra + 1, "content after `end`"));
                        }
                        let chain = chain.expect("built above");
                        let column = ArgumentColumn::restore(chain.clone(), config, mode, base, next_id, time)?;
                        return Ok((chain, column));
                    }
                }
            }
            _ => return Err(AjoError::parse(origin, n, format!("unexpected line {l:?}"))),
        }
    }
}

fn parse_arg(origin: &str, n: usize, rest: &str) -> Result<Argument> {
    let mut t = rest.splitn(5, ' ');
    let id: u32 = num(origin, n, "argument id", t.next().unwrap_or(""))?;
    let mut field = |k: &str| -> Result<&str> {
        let v = t.next().unwrap_or("");
        v.strip_prefix(k).ok_or_else(|| AjoError::parse(origin, n, format!("expected `{k}…`, found {v:?}")))
    };
    let born: f64 = num(origin, n, "birth time", field("born=")?)?;
    let if_set = parse_peaks(origin, n, field("if=")?)?;
    let then_set = parse_peaks(origin, n, field("then=")?)?;
    let label: String = serde_json::from_str(field("label=")?).map_err(|e| AjoError::parse(origin, n, format!("bad label: {e}")))?;
    let mut a = Argument::new(if_set, then_set).with_label(label);
    a.id = id;
    a.born_at = born;
    Ok(a)
}

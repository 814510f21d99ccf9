//! CSV exports with fixed column order. Floats use Rust's shortest
//! round-trip formatting, so exporting the same run twice gives the same
//! bytes.

use std::fmt::Write as _;

use ajo_core::query::ScoredArgument;

/// `(time, r)` samples.
pub fn order_parameter_csv(series: &[(f64, f64)]) -> String {
    let mut s = String::from("time,r\n");
    for (t, r) in series {
        let _ = writeln!(s, "{t:?},{r:?}");
    }
    s
}

/// Long format: one row per sample and layer.
pub fn energy_by_layer_csv(series: &[(f64, Vec<f64>)]) -> String {
    let mut s = String::from("time,layer,energy\n");
    for (t, layers) in series {
        for (k, e) in layers.iter().enumerate() {
            let _ = writeln!(s, "{t:?},{k},{e:?}");
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    pub oscillator: usize,
    pub phase: f64,
    pub energy: f64,
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from("time,oscillator_id,phase,energy\n");
    for r in rows {
        let _ = writeln!(s, "{:?},{},{:?},{:?}", r.time, r.oscillator, r.phase, r.energy);
    }
    s
}

fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

pub fn query_scores_csv(scores: &[ScoredArgument]) -> String {
    let mut s = String::from("argument,label,score\n");
    for a in scores {
        let _ = writeln!(s, "{},{},{:?}", a.argument, csv_field(&a.label), a.score);
    }
    s
}

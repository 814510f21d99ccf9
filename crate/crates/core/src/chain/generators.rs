//! Peak-sequence generators: nested-log spacing and overtone series.

use alloc::vec::Vec;

use super::{ChainError, Result};
use crate::math::powf;

/// 1/φ, the default anharmonic step.
pub const INV_GOLDEN_RATIO: f64 = 0.618_033_988_749_894_9;

/// `c` must exceed 1 by at least this much; `c → 1` is plain geometric spacing.
const MIN_SUPER_GROWTH: f64 = 1e-9;

/// Peaks at `f0 · b^(c^k)`, `k = 0..count`.
///
/// For `f0 = 1` the logarithms themselves are geometrically spaced:
/// `ln f_{k+1} = c · ln f_k`.
pub fn gen_loglog_peaks(f0: f64, b: f64, c: f64, count: usize) -> Result<Vec<f64>> {
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(ChainError::InvalidParameter("f0 must be positive"));
    }
    if !(b > 1.0) {
        return Err(ChainError::InvalidParameter("growth base must exceed 1"));
    }
    if !(c > 1.0 + MIN_SUPER_GROWTH) {
        return Err(ChainError::InvalidParameter("super-growth base must exceed 1"));
    }
    if count == 0 {
        return Err(ChainError::InvalidParameter("count must be at least 1"));
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let f = f0 * powf(b, powf(c, k as f64));
        if !f.is_finite() || out.last().is_some_and(|&prev: &f64| f <= prev) {
            return Err(ChainError::Range);
        }
        out.push(f);
    }
    Ok(out)
}

/// Integral and non-integral overtones of one peak.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Overtones {
    /// `2f, 3f, …, (n+1)f`.
    pub harmonic: Vec<f64>,
    /// `f·(1 + k·r)`, `k = 1..=n`.
    pub anharmonic: Vec<f64>,
}

/// Overtone series of `frequency` to `depth` terms, dropping anything above
/// `max_frequency` when given.
pub fn gen_overtones(frequency: f64, depth: usize, anharmonic_ratio: f64, max_frequency: Option<f64>) -> Result<Overtones> {
    if depth == 0 {
        return Err(ChainError::InvalidParameter("overtone depth must be at least 1"));
    }
    if !(frequency > 0.0) || !(anharmonic_ratio > 0.0) {
        return Err(ChainError::InvalidParameter("frequency and ratio must be positive"));
    }
    let cap = max_frequency.unwrap_or(f64::INFINITY);
    let harmonic = (2..=depth + 1).map(|m| m as f64 * frequency).filter(|&f| f <= cap).collect();
    let anharmonic = (1..=depth).map(|k| frequency * (1.0 + k as f64 * anharmonic_ratio)).filter(|&f| f <= cap).collect();
    Ok(Overtones { harmonic, anharmonic })
}

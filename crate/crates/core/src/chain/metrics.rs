//! Bandwidth and FRP-packing metrics of a chain.
//!
//! `frp_density` is the fewest FRPs found in any two-decade window inside the
//! chain's span. A chain is *conscious* when some contiguous stretch of at
//! least [`CONSCIOUS_DECADES`] keeps every two-decade window at
//! [`FRPS_PER_WINDOW`] FRPs or more; for a chain that is densely packed
//! everywhere this reduces to `bandwidth ≥ 12 && density ≥ 8`, and unlike that
//! plain conjunction it can never be switched off by adding peaks.

use alloc::vec::Vec;

use super::ResonanceChain;
use crate::math::log10;

pub const CONSCIOUS_DECADES: f64 = 12.0;
pub const FRPS_PER_WINDOW: usize = 8;
pub const WINDOW_DECADES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMetrics {
    /// `log10(f_max / f_min)` over FRPs.
    pub bandwidth_decades: f64,
    /// Minimum FRP count over two-decade windows.
    pub frp_density: usize,
    /// Longest stretch (decades) whose windows all meet the packing rule.
    pub dense_span_decades: f64,
    /// Packing rule met everywhere.
    pub intelligent: bool,
    pub conscious: bool,
}

pub fn chain_metrics(chain: &ResonanceChain) -> ChainMetrics {
    let f: Vec<f64> = chain.peaks().filter(|(_, p)| p.fundamental).map(|(_, p)| p.frequency).collect();
    metrics_from_frequencies(&f)
}

fn count_in(u: &[f64], a: f64, b: f64) -> usize {
    let start = u.partition_point(|&x| x < a);
    let end = u.partition_point(|&x| x <= b);
    end.saturating_sub(start)
}

/// Metrics over a bare list of FRP frequencies (Hz, any order).
pub fn metrics_from_frequencies(frequencies: &[f64]) -> ChainMetrics {
    let mut u: Vec<f64> = frequencies.iter().filter(|f| **f > 0.0).map(|&f| log10(f)).collect();
    u.sort_by(f64::total_cmp);
    if u.is_empty() {
        return ChainMetrics { bandwidth_decades: 0.0, frp_density: 0, dense_span_decades: 0.0, intelligent: false, conscious: false };
    }
    let lo = u[0];
    let hi = u[u.len() - 1];
    let bandwidth = hi - lo;
    if bandwidth <= WINDOW_DECADES {
        let n = u.len();
        let dense = if n >= FRPS_PER_WINDOW { bandwidth } else { 0.0 };
        return ChainMetrics {
            bandwidth_decades: bandwidth,
            frp_density: n,
            dense_span_decades: dense,
            intelligent: n >= FRPS_PER_WINDOW,
            conscious: dense >= CONSCIOUS_DECADES,
        };
    }

    // The window count is piecewise constant in its start; pieces change only
    // where a peak enters (u - W) or leaves (u).
    let last_start = hi - WINDOW_DECADES;
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * u.len() + 2);
    cuts.push(lo);
    cuts.push(last_start);
    for &x in &u {
        for c in [x, x - WINDOW_DECADES] {
            if c > lo && c < last_start {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut density = usize::MAX;
    let mut best_span = 0.0f64;
    let mut run_start: Option<f64> = None;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let n = count_in(&u, mid, mid + WINDOW_DECADES);
        density = density.min(n);
        if n >= FRPS_PER_WINDOW {
            let s = *run_start.get_or_insert(w[0]);
            best_span = best_span.max(w[1] - s + WINDOW_DECADES);
        } else {
            run_start = None;
        }
    }
    if cuts.len() == 1 {
        density = count_in(&u, lo, lo + WINDOW_DECADES);
    }
    ChainMetrics {
        bandwidth_decades: bandwidth,
        frp_density: density,
        dense_span_decades: best_span,
        intelligent: density >= FRPS_PER_WINDOW,
        conscious: best_span >= CONSCIOUS_DECADES,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::load_brain_model;
    use proptest::prelude::*;

    /// Fine-grid sweep of window starts; an upper bound on the true minimum.
    fn sweep_min(freqs: &[f64], step: f64) -> usize {
        let u: Vec<f64> = freqs.iter().map(|f| f.log10()).collect();
        let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut a = lo;
        let mut best = usize::MAX;
        while a <= hi - WINDOW_DECADES {
            best = best.min(u.iter().filter(|&&x| x >= a && x <= a + WINDOW_DECADES).count());
            a += step;
        }
        best
    }

    #[test]
    fn brain_model_metrics() {
        let c = load_brain_model();
        let m = chain_metrics(&c);
        // 18 PHz down to 20 fHz
        let expected = (18e15f64 / 20e-15).log10();
        assert!((m.bandwidth_decades - expected).abs() < 1e-12);
        assert!(m.frp_density >= 8);
        assert!(m.conscious);
        assert!(m.intelligent);
        let freqs: Vec<f64> = c.peaks().map(|(_, p)| p.frequency).collect();
        assert!(sweep_min(&freqs, 1e-3) >= 8);
    }

    #[test]
    fn four_decades_not_conscious() {
        let f: Vec<f64> = (0..200).map(|i| 10f64.powf(i as f64 * 4.0 / 199.0)).collect();
        let m = metrics_from_frequencies(&f);
        assert!((m.bandwidth_decades - 4.0).abs() < 1e-12);
        assert!(m.frp_density >= 8);
        assert!(!m.conscious);
    }

    #[test]
    fn sparse_chain_density() {
        // one peak per decade over 20 decades: every 2-decade window holds 2 or 3
        let f: Vec<f64> = (0..=20).map(|i| 10f64.powi(i)).collect();
        let m = metrics_from_frequencies(&f);
        assert_eq!(m.frp_density, 2);
        assert!(!m.conscious);
    }

    proptest! {
        #[test]
        fn density_matches_sweep(mut f in proptest::collection::vec(0.0f64..10.0, 3..60)) {
            let freqs: Vec<f64> = f.drain(..).map(|x| 10f64.powf(x)).collect();
            let m = metrics_from_frequencies(&freqs);
            if m.bandwidth_decades > WINDOW_DECADES {
                prop_assert!(m.frp_density <= sweep_min(&freqs, 1e-3));
            }
        }

        #[test]
        fn conscious_is_monotone(extra in proptest::collection::vec(-20.0f64..20.0, 0..40)) {
            // dense 14-decade base: conscious
            let mut freqs: Vec<f64> = (0..=140).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
            prop_assert!(metrics_from_frequencies(&freqs).conscious);
            for x in extra {
                freqs.push(10f64.powf(x));
                prop_assert!(metrics_from_frequencies(&freqs).conscious);
            }
        }
    }
}

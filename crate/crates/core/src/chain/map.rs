//! The chain's complex frequency map `F(x, y) + i·G(x, y)`.
//!
//! `x` runs over positive-direction (p-FRP) frequencies, `y` over
//! negative-direction (n-FRP) ones. Each direction contributes the summed
//! driven-resonator response `R(f) = Σ I / (1 + i·Q·(f/f₀ − f₀/f))`, and the
//! map value is the product `R₊(x) · R₋(y)`.

use alloc::vec::Vec;

use super::{Direction, ResonanceChain};
use crate::math::{log10, powf, Complex};

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMap {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    /// Row-major, `values[iy * x_axis.len() + ix]`.
    pub values: Vec<Complex>,
}

struct Resonator {
    f0: f64,
    intensity: f64,
    q: f64,
}

fn response(res: &[Resonator], f: f64) -> Complex {
    res.iter().fold(Complex::ZERO, |acc, r| {
        let detune = r.q * (f / r.f0 - r.f0 / f);
        let z = Complex::new(1.0, detune).recip();
        acc + Complex::new(z.re * r.intensity, z.im * r.intensity)
    })
}

fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return alloc::vec![lo; n];
    }
    let (a, b) = (log10(lo), log10(hi));
    (0..n).map(|i| powf(10.0, a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

impl FrequencyMap {
    pub fn from_chain(chain: &ResonanceChain, resolution: usize) -> Self {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (_, p) in chain.peaks() {
            let r = Resonator { f0: p.frequency, intensity: p.intensity, q: p.quality_factor };
            match p.direction {
                Direction::Positive => pos.push(r),
                Direction::Negative => neg.push(r),
            }
        }
        let full = chain.frequency_range();
        let range = |v: &[Resonator]| {
            if v.is_empty() {
                (full.lo, full.hi)
            } else {
                let lo = v.iter().map(|r| r.f0).fold(f64::INFINITY, f64::min);
                let hi = v.iter().map(|r| r.f0).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        };
        let (xl, xh) = range(&pos);
        let (yl, yh) = range(&neg);
        let x_axis = log_axis(xl, xh, resolution);
        let y_axis = log_axis(yl, yh, resolution);
        let rx: Vec<Complex> = x_axis.iter().map(|&x| response(&pos, x)).collect();
        let ry: Vec<Complex> = y_axis.iter().map(|&y| response(&neg, y)).collect();
        let mut values = Vec::with_capacity(x_axis.len() * y_axis.len());
        for gy in &ry {
            for gx in &rx {
                values.push(*gx * *gy);
            }
        }
        Self { x_axis, y_axis, values }
    }

    /// `(F, G)` at grid point `(ix, iy)`.
    pub fn value(&self, ix: usize, iy: usize) -> Complex {
        self.values[iy * self.x_axis.len() + ix]
    }
}

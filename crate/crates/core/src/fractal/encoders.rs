//! Pulse-train and colour-ratio codecs.
//!
//! Intensity is carried only by the gap between equal pulses: a bright
//! cell fires with the shortest gap. Colour is carried by a chain of four
//! pulse amplitudes whose successive ratios are the blue, green and red
//! fractions.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FractalError, Result};

/// Tolerance on `r + g + b = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    /// Gap before each pulse, seconds.
    pub gaps: Vec<f64>,
    pub amplitude: f64,
}

/// What to do with a zero intensity, which has no gap of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroPolicy {
    #[default]
    Reject,
    /// Encode as the longest gap, which decodes to the smallest
    /// representable intensity rather than zero.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseCodec {
    pub g_min: f64,
    pub g_max: f64,
    pub amplitude: f64,
    pub zero_policy: ZeroPolicy,
}

impl Default for PulseCodec {
    fn default() -> Self {
        Self { g_min: 1e-3, g_max: 3e-3, amplitude: 1.0, zero_policy: ZeroPolicy::Reject }
    }
}

impl PulseCodec {
    pub fn new(g_min: f64, g_max: f64) -> Result<Self> {
        if !(g_min > 0.0 && g_max > g_min && g_max.is_finite()) {
            return Err(FractalError::InvalidParameter("gaps need 0 < g_min < g_max"));
        }
        Ok(Self { g_min, g_max, ..Self::default() })
    }

    pub fn with_zero_policy(mut self, policy: ZeroPolicy) -> Self {
        self.zero_policy = policy;
        self
    }

    pub fn gap(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(FractalError::IntensityRange(v));
        }
        if v == 0.0 && self.zero_policy == ZeroPolicy::Reject {
            return Err(FractalError::ZeroIntensity);
        }
        Ok(self.g_min + (1.0 - v) * (self.g_max - self.g_min))
    }

    pub fn intensity(&self, gap: f64) -> f64 {
        1.0 - (gap - self.g_min) / (self.g_max - self.g_min)
    }

    pub fn encode(&self, row: &[f64]) -> Result<PulseTrain> {
        let gaps = row.iter().map(|&v| self.gap(v)).collect::<Result<Vec<_>>>()?;
        Ok(PulseTrain { gaps, amplitude: self.amplitude })
    }

    pub fn decode(&self, train: &PulseTrain) -> Vec<f64> {
        train.gaps.iter().map(|&g| self.intensity(g)).collect()
    }
}

/// Four pulse amplitudes: `A = 1`, `B = A·b`, `C = B·g`, `D = C·r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorPulses {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub fn encode_color(r: f64, g: f64, b: f64) -> Result<ColorPulses> {
    let ok = [r, g, b].iter().all(|v| v.is_finite() && *v >= 0.0) && (r + g + b - 1.0).abs() <= NORMALIZATION_TOLERANCE;
    if !ok {
        return Err(FractalError::Normalization);
    }
    let a = 1.0;
    let pb = a * b;
    let pc = pb * g;
    Ok(ColorPulses { a, b: pb, c: pc, d: pc * r })
}

/// Inverse of [`encode_color`]. Each ratio recovers one fraction; where the
/// chain has died out (a zero amplitude) the remaining fractions follow from
/// normalisation. With no blue at all the chain carries nothing.
pub fn decode_color(p: ColorPulses) -> Result<(f64, f64, f64)> {
    if !(p.a > 0.0) || !p.b.is_finite() || !p.c.is_finite() || !p.d.is_finite() {
        return Err(FractalError::DegenerateColor);
    }
    let b = p.b / p.a;
    if b == 0.0 {
        return Err(FractalError::DegenerateColor);
    }
    if p.c == 0.0 {
        // no green, so red is the remainder
        return Ok(((1.0 - b).max(0.0), 0.0, b));
    }
    let g = p.c / p.b;
    let r = p.d / p.c;
    Ok((r, g, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gap_formula_endpoints() {
        let codec = PulseCodec::new(1e-3, 3e-3).unwrap();
        assert_eq!(codec.gap(1.0).unwrap(), 1e-3);
        assert!((codec.gap(0.5).unwrap() - 2e-3).abs() < 1e-15);
        assert_eq!(codec.gap(0.0), Err(FractalError::ZeroIntensity));
        assert_eq!(codec.with_zero_policy(ZeroPolicy::Clamp).gap(0.0).unwrap(), 3e-3);
        assert_eq!(codec.gap(1.5), Err(FractalError::IntensityRange(1.5)));
        assert!(PulseCodec::new(2.0, 1.0).is_err());
    }

    #[test]
    fn train_has_constant_amplitude() {
        let t = PulseCodec::default().encode(&[0.2, 0.9, 1.0]).unwrap();
        assert_eq!(t.gaps.len(), 3);
        assert!(t.gaps.iter().all(|g| *g > 0.0));
        assert_eq!(t.amplitude, 1.0);
    }

    #[test]
    fn pink_chain() {
        let p = encode_color(0.30, 0.22, 0.48).unwrap();
        assert_eq!(p.a, 1.0);
        assert!((p.b - 0.48).abs() < 1e-15);
        assert!((p.c - 0.1056).abs() < 1e-15);
        assert!((p.d - 0.03168).abs() < 1e-15);
        let (r, g, b) = decode_color(p).unwrap();
        assert!((r - 0.30).abs() < 1e-12 && (g - 0.22).abs() < 1e-12 && (b - 0.48).abs() < 1e-12);
    }

    #[test]
    fn pure_blue_and_degenerate() {
        let p = encode_color(0.0, 0.0, 1.0).unwrap();
        assert_eq!(p, ColorPulses { a: 1.0, b: 1.0, c: 0.0, d: 0.0 });
        assert_eq!(decode_color(p).unwrap(), (0.0, 0.0, 1.0));
        let p = encode_color(0.6, 0.0, 0.4).unwrap();
        let (r, g, b) = decode_color(p).unwrap();
        assert!((r - 0.6).abs() < 1e-12 && g == 0.0 && b == 0.4);
        assert_eq!(decode_color(encode_color(1.0, 0.0, 0.0).unwrap()), Err(FractalError::DegenerateColor));
        assert_eq!(encode_color(0.5, 0.5, 0.5), Err(FractalError::Normalization));
        assert_eq!(encode_color(-0.1, 0.6, 0.5), Err(FractalError::Normalization));
    }

    proptest! {
        #[test]
        fn pulse_roundtrip(row in proptest::collection::vec(1e-6f64..=1.0, 64)) {
            let codec = PulseCodec::default();
            let back = codec.decode(&codec.encode(&row).unwrap());
            for (a, b) in row.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn color_roundtrip(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            // uniform point on the simplex with every fraction positive
            let (lo, hi) = (x.min(y), x.max(y));
            let (r, g, b) = (lo, hi - lo, 1.0 - hi);
            prop_assume!(g > 1e-9 && b > 1e-9);
            let (r2, g2, b2) = decode_color(encode_color(r, g, b).unwrap()).unwrap();
            prop_assert!((r - r2).abs() <= 1e-12 && (g - g2).abs() <= 1e-12 && (b - b2).abs() <= 1e-12);
        }
    }
}

//! Thin wrappers over `libm` so numeric code reads the same with or without std.

pub use core::f64::consts::{PI, TAU};

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
#[inline]
pub fn sq(x: f64) -> f64 {
    x * x
}

/// Least non-negative remainder of `a / b`, as `f64::rem_euclid`.
pub fn rem_euclid(a: f64, b: f64) -> f64 {
    let r = libm::fmod(a, b);
    if r < 0.0 {
        r + b.abs()
    } else {
        r
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta - TAU * floor(theta / TAU);
    if !(0.0..TAU).contains(&w) {
        0.0
    } else {
        w
    }
}

/// Minimal complex number; only what the frequency map needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn recip(self) -> Complex {
        let d = self.re * self.re + self.im * self.im;
        Complex::new(self.re / d, -self.im / d)
    }

    pub fn norm(self) -> f64 {
        hypot(self.re, self.im)
    }
}

impl core::ops::Mul for Complex {
    type Output = Complex;

    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl core::ops::Add for Complex {
    type Output = Complex;

    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

/// FNV-1a over a byte stream; used for stable chain fingerprints.
#[derive(Debug, Clone, Copy)]
pub struct Fnv64(u64);

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv64 {
    pub fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write(&v.to_bits().to_le_bytes());
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_phase_range() {
        for x in [-7.0, -TAU, 0.0, 1.0, TAU, 13.0, 1e6] {
            let w = wrap_phase(x);
            assert!((0.0..TAU).contains(&w), "{x} -> {w}");
        }
    }

    #[test]
    fn complex_recip() {
        let z = Complex::new(3.0, -4.0);
        let one = z * z.recip();
        assert!((one.re - 1.0).abs() < 1e-15 && one.im.abs() < 1e-15);
    }
}

//! Fractal decomposition of 2D intensity patterns into primitive seeds.
//!
//! The pipeline binarises an image, cleans it with the connect / smooth /
//! contour / skeleton loop ([`csbsl`]), drops crossing noise strokes
//! ([`jidt`]), completes dashed lines and broken circles ([`gcslcc`]), and
//! classifies every remaining curve against ten parametric templates
//! ([`primitives`]) in both the rectangular and hexagonal universes. The
//! result is a [`SeedGraph`]. [`cube`] holds the 8×8 mean pyramids with
//! fused equal-intensity regions, and [`encoders`] the pulse-train and
//! colour-ratio codecs.

pub mod csbsl;
pub mod cube;
pub mod decompose;
pub mod encoders;
pub mod gcslcc;
pub mod grammar;
pub mod groups;
pub mod jidt;
pub mod morph;
pub mod primitives;
pub mod raster;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cube::{build_cube, build_dual, Cube, CubeNet, Geometry, Neighborhood};
pub use decompose::{decompose, decompose_with, DecomposeConfig, FractalSeed, Relation, SeedEdge, SeedGraph};
pub use encoders::{decode_color, encode_color, ColorPulses, PulseCodec, PulseTrain};
pub use grammar::GrammarBook;
pub use groups::{split_groups, Group, Groups};
pub use primitives::{classify_primitive, Classification, PrimitiveKind};

/// Binarisation threshold: cells at or above are "on".
pub const BINARY_THRESHOLD: f64 = 0.5;
/// Intensity tolerance for fusing cube cells.
pub const FUSION_TOLERANCE: f64 = 1.0 / 256.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractalError {
    #[error("image has no cells")]
    EmptyImage,
    #[error("image has {got} values, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("intensity {0} is outside [0, 1]")]
    IntensityRange(f64),
    #[error("contour has {0} cells; at least 3 are needed")]
    TooSmall(usize),
    #[error("intensity 0 cannot be pulse-encoded")]
    ZeroIntensity,
    #[error("colour fractions must be non-negative and sum to 1")]
    Normalization,
    #[error("colour with zero blue component has no recoverable ratio chain")]
    DegenerateColor,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T, E = FractalError> = core::result::Result<T, E>;

/// Sensory channel an image arrives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    #[default]
    Visual,
    Auditory,
    Touch,
    Taste,
    Smell,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::Visual, Channel::Auditory, Channel::Touch, Channel::Taste, Channel::Smell];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Cell coordinates `(x, y)`, `y` growing downward.
pub type Cell = (i32, i32);

/// Row-major intensity grid with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
    pub channel: Channel,
}

impl GridImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FractalError::EmptyImage);
        }
        if values.len() != width * height {
            return Err(FractalError::SizeMismatch { expected: width * height, got: values.len() });
        }
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FractalError::IntensityRange(v));
        }
        Ok(Self { width, height, values, channel: Channel::Visual })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Thresholds into a bitmap (`v >= threshold` is on).
    pub fn binarize(&self, threshold: f64) -> Bitmap {
        Bitmap { width: self.width, height: self.height, cells: self.values.iter().map(|&v| v >= threshold).collect() }
    }

    pub fn from_bitmap(bitmap: &Bitmap) -> Self {
        Self { width: bitmap.width, height: bitmap.height, values: bitmap.cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(), channel: Channel::Visual }
    }
}

/// Row-major binary grid. Out-of-range reads are "off".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![false; width * height] }
    }

    pub fn from_cells(width: usize, height: usize, cells: &[Cell]) -> Self {
        let mut b = Self::new(width, height);
        for &c in cells {
            b.set(c, true);
        }
        b
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, (x, y): Cell) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn get(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.cells[c.1 as usize * self.width + c.0 as usize]
    }

    /// Writes inside the bounds; writes outside are dropped.
    pub fn set(&mut self, c: Cell, on: bool) {
        if self.in_bounds(c) {
            self.cells[c.1 as usize * self.width + c.0 as usize] = on;
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.cells.iter().any(|&b| b)
    }

    /// On cells in row-major order.
    pub fn on_cells(&self) -> Vec<Cell> {
        let w = self.width;
        self.cells.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| ((i % w) as i32, (i / w) as i32)).collect()
    }

    pub fn union(&self, other: &Bitmap) -> Bitmap {
        Bitmap { width: self.width, height: self.height, cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a || b).collect() }
    }

    /// Number of on cells in the 8-neighbourhood.
    pub fn neighbor_count(&self, (x, y): Cell) -> usize {
        morph::MOORE.iter().filter(|&&(dx, dy)| self.get((x + dx, y + dy))).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_validation() {
        assert_eq!(GridImage::new(0, 3, vec![]), Err(FractalError::EmptyImage));
        assert!(matches!(GridImage::new(2, 2, vec![0.0; 3]), Err(FractalError::SizeMismatch { .. })));
        assert!(matches!(GridImage::new(1, 1, vec![1.5]), Err(FractalError::IntensityRange(_))));
        let img = GridImage::new(2, 1, vec![0.2, 0.7]).unwrap();
        assert_eq!(img.binarize(BINARY_THRESHOLD).on_cells(), vec![(1, 0)]);
    }

    #[test]
    fn bitmap_bounds() {
        let mut b = Bitmap::new(3, 3);
        b.set((-1, 0), true);
        b.set((3, 3), true);
        assert!(b.is_blank());
        b.set((1, 1), true);
        assert!(b.get((1, 1)) && !b.get((5, 1)));
        assert_eq!(b.neighbor_count((0, 0)), 1);
    }
}

//! The ten primitive kinds and template-fit classification.
//!
//! Each kind is a set of unit-scale strokes centred on the curve centroid.
//! A cell set is classified by rasterising every template over rotations
//! (5° steps within the kind's symmetry period), scales (±20% in 10% steps
//! around the RMS-radius estimate) and sub-cell offsets, and scoring the
//! overlap as the F1 of precision (template cells near the input) and recall
//! (input cells near the template), with "near" meaning Chebyshev distance
//! ≤ 1. Ties on F1 fall back to the mean squared distance of template samples
//! to the input, then to kind order.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::raster::{draw_polyline, place};
use super::{Bitmap, Cell, FractalError, Result};
use crate::math::{ceil, cos, hypot, rem_euclid, sin, sq, sqrt, PI, TAU};

/// Rotation step of the orientation search.
pub const ROTATION_STEP: f64 = 5.0 * PI / 180.0;
/// Scale factors tried around the RMS-radius estimate.
pub const SCALE_FACTORS: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimitiveKind {
    Triangle,
    Circle,
    Square,
    OpenTriangle,
    OpenRectangle,
    OpenCircle1,
    OpenCircle2,
    OpenCircle3,
    StraightLine,
    Junction,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 10] = [
        PrimitiveKind::Triangle,
        PrimitiveKind::Circle,
        PrimitiveKind::Square,
        PrimitiveKind::OpenTriangle,
        PrimitiveKind::OpenRectangle,
        PrimitiveKind::OpenCircle1,
        PrimitiveKind::OpenCircle2,
        PrimitiveKind::OpenCircle3,
        PrimitiveKind::StraightLine,
        PrimitiveKind::Junction,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn closed(self) -> bool {
        matches!(self, PrimitiveKind::Triangle | PrimitiveKind::Circle | PrimitiveKind::Square)
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Triangle => "triangle",
            PrimitiveKind::Circle => "circle",
            PrimitiveKind::Square => "square",
            PrimitiveKind::OpenTriangle => "open-triangle",
            PrimitiveKind::OpenRectangle => "open-rectangle",
            PrimitiveKind::OpenCircle1 => "open-circle-1",
            PrimitiveKind::OpenCircle2 => "open-circle-2",
            PrimitiveKind::OpenCircle3 => "open-circle-3",
            PrimitiveKind::StraightLine => "straight-line",
            PrimitiveKind::Junction => "junction",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Rotational symmetry period; 0 means fully symmetric.
    pub fn symmetry_period(self) -> f64 {
        match self {
            PrimitiveKind::Circle => 0.0,
            PrimitiveKind::Triangle => TAU / 3.0,
            PrimitiveKind::Square | PrimitiveKind::Junction => PI / 2.0,
            PrimitiveKind::StraightLine => PI,
            _ => TAU,
        }
    }

    /// Reduces an angle modulo the kind's symmetry period.
    pub fn canonical_orientation(self, angle: f64) -> f64 {
        let p = self.symmetry_period();
        if p == 0.0 {
            return 0.0;
        }
        let r = rem_euclid(angle, p);
        if p - r < 1e-9 {
            0.0
        } else {
            r
        }
    }

    /// Unit-scale strokes before centring. Orientation 0: triangle apex up,
    /// square axis-aligned, open shapes open toward -y (up), line along x,
    /// junction as a `+`.
    fn raw_strokes(self) -> Vec<Vec<(f64, f64)>> {
        let polar = |deg: f64| {
            let a = deg * PI / 180.0;
            (cos(a), sin(a))
        };
        let arc = |span: f64| {
            let n = (span / 2.0) as usize;
            (0..=n).map(|k| polar(90.0 - span / 2.0 + span * k as f64 / n as f64)).collect::<Vec<_>>()
        };
        let s = 1.0 / sqrt(2.0);
        match self {
            PrimitiveKind::Triangle => vec![vec![polar(-90.0), polar(30.0), polar(150.0), polar(-90.0)]],
            PrimitiveKind::Circle => vec![arc(360.0)],
            PrimitiveKind::Square => vec![vec![(-s, -s), (s, -s), (s, s), (-s, s), (-s, -s)]],
            PrimitiveKind::OpenTriangle => vec![vec![polar(150.0), polar(-90.0), polar(30.0)]],
            PrimitiveKind::OpenRectangle => vec![vec![(-s, -s), (-s, s), (s, s), (s, -s)]],
            PrimitiveKind::OpenCircle1 => vec![arc(90.0)],
            PrimitiveKind::OpenCircle2 => vec![arc(180.0)],
            PrimitiveKind::OpenCircle3 => vec![arc(270.0)],
            PrimitiveKind::StraightLine => vec![vec![(-1.0, 0.0), (1.0, 0.0)]],
            PrimitiveKind::Junction => vec![vec![(-1.0, 0.0), (1.0, 0.0)], vec![(0.0, -1.0), (0.0, 1.0)]],
        }
    }
}

/// Unit-scale template geometry, centred on the curve centroid.
#[derive(Debug, Clone)]
pub struct Template {
    pub kind: PrimitiveKind,
    pub strokes: Vec<Vec<(f64, f64)>>,
    /// RMS distance of the curve from its centroid (arc-length weighted).
    pub rms_radius: f64,
}

fn resample(stroke: &[(f64, f64)], step: f64) -> Vec<(f64, f64)> {
    let mut out = vec![stroke[0]];
    for w in stroke.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = hypot(b.0 - a.0, b.1 - a.1);
        let n = ceil(len / step).max(1.0) as usize;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

impl Template {
    pub fn new(kind: PrimitiveKind) -> Self {
        let raw = kind.raw_strokes();
        let fine: Vec<(f64, f64)> = raw.iter().flat_map(|s| resample(s, 1e-3)).collect();
        let n = fine.len() as f64;
        let cx = fine.iter().map(|p| p.0).sum::<f64>() / n;
        let cy = fine.iter().map(|p| p.1).sum::<f64>() / n;
        let rms = sqrt(fine.iter().map(|p| (p.0 - cx) * (p.0 - cx) + (p.1 - cy) * (p.1 - cy)).sum::<f64>() / n);
        let strokes = raw.into_iter().map(|s| s.into_iter().map(|p| (p.0 - cx, p.1 - cy)).collect()).collect();
        Self { kind, strokes, rms_radius: rms }
    }

    /// Samples spaced about half a cell apart at size `size` (cells).
    pub fn samples(&self, size: f64) -> Vec<(f64, f64)> {
        let step = 0.5 / size;
        self.strokes.iter().flat_map(|s| resample(s, step)).collect()
    }
}

/// Draws a primitive with its curve centroid at `center`, size `size`
/// (cells; circumradius for polygons, radius for arcs, half-length for the
/// line and the junction arms) and rotation `orientation`.
pub fn draw_primitive(bitmap: &mut Bitmap, kind: PrimitiveKind, center: (f64, f64), size: f64, orientation: f64) {
    let t = Template::new(kind);
    let (c, s) = (cos(orientation), sin(orientation));
    for stroke in &t.strokes {
        let fine = resample(stroke, 0.25 / size);
        let pts: Vec<(f64, f64)> = fine.iter().map(|&p| place(p, center, size, c, s)).collect();
        draw_polyline(bitmap, &pts);
    }
}

/// Outcome of a template fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: PrimitiveKind,
    /// Radians, reduced modulo the kind's symmetry period.
    pub orientation: f64,
    /// F1 overlap in `[0, 1]`.
    pub score: f64,
    /// Fitted size in cells.
    pub size: f64,
    /// Fitted template centre in image coordinates.
    pub center: (f64, f64),
    /// Best score reached by every kind, in [`PrimitiveKind::ALL`] order.
    pub kind_scores: [f64; 10],
}

struct Frame {
    /// Bounding-box origin; every computation runs relative to it so the
    /// result is exactly translation-equivariant.
    origin: Cell,
    margin: i32,
    w: i32,
    h: i32,
    cells: Vec<Cell>,
    near: Vec<bool>,
    dist2: Vec<f64>,
    stamp: Vec<u32>,
    generation: u32,
    centroid: (f64, f64),
    rms: f64,
}

impl Frame {
    fn new(cells: &[Cell]) -> Self {
        let minx = cells.iter().map(|c| c.0).min().unwrap();
        let miny = cells.iter().map(|c| c.1).min().unwrap();
        let maxx = cells.iter().map(|c| c.0).max().unwrap();
        let maxy = cells.iter().map(|c| c.1).max().unwrap();
        let span = (maxx - minx).max(maxy - miny) + 1;
        let margin = span / 2 + 4;
        let local: Vec<Cell> = cells.iter().map(|&(x, y)| (x - minx + margin, y - miny + margin)).collect();
        let w = maxx - minx + 1 + 2 * margin;
        let h = maxy - miny + 1 + 2 * margin;
        let size = (w * h) as usize;
        let mut near = vec![false; size];
        let mut dist2 = vec![f64::INFINITY; size];
        for &(x, y) in &local {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    near[((y + dy) * w + x + dx) as usize] = true;
                }
            }
        }
        for yy in 0..h {
            for xx in 0..w {
                let mut best = f64::INFINITY;
                for &(x, y) in &local {
                    let d = ((x - xx) * (x - xx) + (y - yy) * (y - yy)) as f64;
                    if d < best {
                        best = d;
                    }
                }
                dist2[(yy * w + xx) as usize] = best;
            }
        }
        let n = local.len() as f64;
        let cx = local.iter().map(|c| c.0 as f64).sum::<f64>() / n;
        let cy = local.iter().map(|c| c.1 as f64).sum::<f64>() / n;
        let rms = sqrt(local.iter().map(|c| sq(c.0 as f64 - cx) + sq(c.1 as f64 - cy)).sum::<f64>() / n);
        Self { origin: (minx - margin, miny - margin), margin, w, h, cells: local, near, dist2, stamp: vec![0; size], generation: 0, centroid: (cx, cy), rms }
    }

    fn index(&self, (x, y): Cell) -> Option<usize> {
        (x >= 0 && y >= 0 && x < self.w && y < self.h).then(|| (y * self.w + x) as usize)
    }

    /// `(F1, mean squared distance)` of the placed samples.
    fn score(&mut self, samples: &[(f64, f64)], center: (f64, f64), size: f64, angle: f64) -> (f64, f64) {
        self.generation += 1;
        let gen = self.generation;
        let (c, s) = (cos(angle), sin(angle));
        let (mut raster, mut hits, mut sq) = (0usize, 0usize, 0.0);
        let mut outside = 0usize;
        for &p in samples {
            let q = place(p, center, size, c, s);
            let cell = (crate::math::round(q.0) as i32, crate::math::round(q.1) as i32);
            match self.index(cell) {
                Some(i) => {
                    sq += self.dist2[i];
                    if self.stamp[i] != gen {
                        self.stamp[i] = gen;
                        raster += 1;
                        if self.near[i] {
                            hits += 1;
                        }
                    }
                }
                None => {
                    outside += 1;
                    sq += (self.w * self.w + self.h * self.h) as f64;
                }
            }
        }
        raster += outside;
        let precision = hits as f64 / raster as f64;
        let covered = self
            .cells
            .iter()
            .filter(|&&(x, y)| (-1..=1).any(|dy| (-1..=1).any(|dx| self.index((x + dx, y + dy)).is_some_and(|i| self.stamp[i] == gen))))
            .count();
        let recall = covered as f64 / self.cells.len() as f64;
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        (f1, sq / samples.len() as f64)
    }
}

#[derive(Debug, Clone, Copy)]
struct Fit {
    f1: f64,
    mse: f64,
    angle_step: i32,
    scale_step: i32,
    offset: Cell,
}

fn better(a: &Fit, b: &Fit) -> bool {
    if (a.f1 - b.f1).abs() > 1e-9 {
        a.f1 > b.f1
    } else {
        a.mse < b.mse - 1e-12
    }
}

/// Classifies a cell set (a contour or skeleton curve).
pub fn classify_primitive(cells: &[Cell]) -> Result<Classification> {
    let mut unique = cells.to_vec();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() < 3 {
        return Err(FractalError::TooSmall(unique.len()));
    }
    let mut frame = Frame::new(&unique);
    let mut best: Option<(PrimitiveKind, Fit, f64)> = None;
    let mut kind_scores = [0.0; 10];
    for kind in PrimitiveKind::ALL {
        let template = Template::new(kind);
        let base_size = frame.rms / template.rms_radius;
        let period = kind.symmetry_period();
        let steps = if period == 0.0 { 1 } else { (period / ROTATION_STEP + 0.5) as i32 };
        let size_of = |k: i32| base_size * (1.0 + 0.1 * k as f64);
        let samples_of = |k: i32| template.samples(size_of(k));
        let cached: Vec<Vec<(f64, f64)>> = (-2..=2).map(samples_of).collect();
        let eval = |frame: &mut Frame, a: i32, k: i32, off: Cell| {
            let center = (frame.centroid.0 + off.0 as f64, frame.centroid.1 + off.1 as f64);
            let (f1, mse) = frame.score(&cached[(k + 2) as usize], center, size_of(k), a as f64 * ROTATION_STEP);
            Fit { f1, mse, angle_step: a, scale_step: k, offset: off }
        };
        // coarse: every rotation and scale at the centroid
        let mut kind_best: Option<Fit> = None;
        for a in 0..steps {
            for k in -2..=2 {
                let fit = eval(&mut frame, a, k, (0, 0));
                if kind_best.is_none_or(|b| better(&fit, &b)) {
                    kind_best = Some(fit);
                }
            }
        }
        // refine: neighbouring rotation/scale with one-cell offsets
        let seed = kind_best.unwrap();
        for da in -1..=1 {
            for dk in -1..=1 {
                let k = seed.scale_step + dk;
                if !(-2..=2).contains(&k) {
                    continue;
                }
                let a = (seed.angle_step + da).rem_euclid(steps);
                for oy in -1..=1 {
                    for ox in -1..=1 {
                        let fit = eval(&mut frame, a, k, (ox, oy));
                        if better(&fit, kind_best.as_ref().unwrap()) {
                            kind_best = Some(fit);
                        }
                    }
                }
            }
        }
        let fit = kind_best.unwrap();
        kind_scores[kind.index()] = fit.f1;
        if best.as_ref().is_none_or(|b| better(&fit, &b.1)) {
            best = Some((kind, fit, size_of(fit.scale_step)));
        }
    }
    let (kind, fit, size) = best.unwrap();
    let center = ((frame.origin.0 as f64) + frame.centroid.0 + fit.offset.0 as f64, (frame.origin.1 as f64) + frame.centroid.1 + fit.offset.1 as f64);
    let _ = frame.margin;
    Ok(Classification { kind, orientation: kind.canonical_orientation(fit.angle_step as f64 * ROTATION_STEP), score: fit.f1, size, center, kind_scores })
}

/// Smallest angular distance between two orientations of `kind`.
pub fn orientation_distance(kind: PrimitiveKind, a: f64, b: f64) -> f64 {
    let p = kind.symmetry_period();
    if p == 0.0 {
        return 0.0;
    }
    let d = rem_euclid(a - b, p);
    d.min(p - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(kind: PrimitiveKind, size: f64, angle: f64) -> Vec<Cell> {
        let mut b = Bitmap::new(64, 64);
        draw_primitive(&mut b, kind, (31.3, 30.6), size, angle);
        b.on_cells()
    }

    #[test]
    fn names_roundtrip_and_closed_flags() {
        for k in PrimitiveKind::ALL {
            assert_eq!(PrimitiveKind::from_name(k.name()), Some(k));
        }
        assert_eq!(PrimitiveKind::ALL.iter().filter(|k| k.closed()).count(), 3);
    }

    #[test]
    fn templates_are_centred() {
        for k in PrimitiveKind::ALL {
            let t = Template::new(k);
            let s = t.samples(50.0);
            let n = s.len() as f64;
            let cx = s.iter().map(|p| p.0).sum::<f64>() / n;
            let cy = s.iter().map(|p| p.1).sum::<f64>() / n;
            assert!(cx.abs() < 0.02 && cy.abs() < 0.02, "{k:?} centroid {cx},{cy}");
        }
    }

    #[test]
    fn too_small() {
        assert_eq!(classify_primitive(&[(0, 0), (1, 0)]), Err(FractalError::TooSmall(2)));
        assert_eq!(classify_primitive(&[(0, 0), (0, 0), (1, 1)]), Err(FractalError::TooSmall(2)));
    }

    #[test]
    fn circle_radius_ten() {
        let c = classify_primitive(&raster(PrimitiveKind::Circle, 10.0, 0.0)).unwrap();
        assert_eq!(c.kind, PrimitiveKind::Circle);
        assert!(c.score >= 0.9, "{c:?}");
        assert!((c.size - 10.0).abs() < 1.5);
    }

    #[test]
    fn square_rotated_45_degrees() {
        let c = classify_primitive(&raster(PrimitiveKind::Square, 10.0, PI / 4.0)).unwrap();
        assert_eq!(c.kind, PrimitiveKind::Square);
        assert!(c.score >= 0.9, "{c:?}");
        assert!((c.orientation - PI / 4.0).abs() <= 0.1, "{c:?}");
    }

    #[test]
    fn u_shape_is_an_open_circle() {
        // semicircular "u", open at the top
        let c = classify_primitive(&raster(PrimitiveKind::OpenCircle2, 9.0, 0.0)).unwrap();
        assert!(matches!(c.kind, PrimitiveKind::OpenCircle1 | PrimitiveKind::OpenCircle2 | PrimitiveKind::OpenCircle3), "{c:?}");
    }

    #[test]
    fn every_kind_classifies_as_itself() {
        for kind in PrimitiveKind::ALL {
            for (size, angle) in [(8.0, 0.0), (12.0, 0.3), (16.0, 2.0)] {
                let c = classify_primitive(&raster(kind, size, angle)).unwrap();
                assert_eq!(c.kind, kind, "size {size} angle {angle}: {c:?}");
                let top = c.kind_scores.iter().cloned().fold(0.0, f64::max);
                assert_eq!(c.kind_scores[kind.index()], top);
                assert!(orientation_distance(kind, c.orientation, angle) <= 2.0 * ROTATION_STEP, "{kind:?} {angle} -> {}", c.orientation);
            }
        }
    }

    #[test]
    fn translation_moves_centre_exactly() {
        let base = raster(PrimitiveKind::OpenTriangle, 9.0, 0.7);
        let a = classify_primitive(&base).unwrap();
        let moved: Vec<Cell> = base.iter().map(|&(x, y)| (x + 7, y - 3)).collect();
        let b = classify_primitive(&moved).unwrap();
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.orientation, b.orientation);
        assert_eq!((a.center.0 + 7.0, a.center.1 - 3.0), b.center);
    }
}

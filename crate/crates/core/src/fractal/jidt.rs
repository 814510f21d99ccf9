//! Junction-invariant de-grouping: separating crossing straight strokes
//! (noise) from the shapes they cross (signal).
//!
//! The skeleton is cut at every junction zone (junction cells plus their
//! skeleton neighbours). The pieces ("branches") that meet at a zone are
//! paired greedily by how anti-parallel their directions out of the zone
//! are, and paired branches are joined into strokes that pass through the
//! junction. A stroke is noise when it is straight, spans at least
//! [`SPAN_FRACTION`] of the image along its direction, and crosses another
//! stroke. Junction zones stay attached to every stroke that touches them.

use alloc::vec;
use alloc::vec::Vec;

use super::morph::{components, junctions, skeletonize, sort_cells, Connectivity, MOORE};
use super::{Bitmap, Cell};
use crate::math::{atan2, cos, sin, sq, sqrt};

/// Fraction of the image extent a noise stroke must cover.
pub const SPAN_FRACTION: f64 = 0.8;
/// Largest perpendicular deviation (cells) of a straight stroke.
pub const STRAIGHT_TOLERANCE: f64 = 1.5;
/// Branch pairs need direction cosine below this to pass through a junction.
const PAIR_COSINE: f64 = -0.7;
/// Cells near a junction used to estimate a branch direction.
const DIRECTION_REACH: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    /// Row-major sorted, junction zones included.
    pub cells: Vec<Cell>,
    pub straight: bool,
    /// Extent along the principal direction divided by the image extent in
    /// that direction.
    pub span: f64,
    pub crosses: bool,
    pub noise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JidtResult {
    pub strokes: Vec<Stroke>,
    /// 8-connected groups of signal cells.
    pub signal: Vec<Vec<Cell>>,
    /// Noise strokes (cells shared with signal strokes removed).
    pub noise: Vec<Vec<Cell>>,
}

impl JidtResult {
    pub fn signal_bitmap(&self, width: usize, height: usize) -> Bitmap {
        let cells: Vec<Cell> = self.signal.iter().flatten().copied().collect();
        Bitmap::from_cells(width, height, &cells)
    }
}

/// Principal direction (radians), max perpendicular deviation and extent.
pub fn line_fit(cells: &[Cell]) -> (f64, f64, f64) {
    let n = cells.len() as f64;
    let cx = cells.iter().map(|c| c.0 as f64).sum::<f64>() / n;
    let cy = cells.iter().map(|c| c.1 as f64).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in cells {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let angle = 0.5 * atan2(2.0 * sxy, sxx - syy);
    let (ux, uy) = (cos(angle), sin(angle));
    let (mut dev, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in cells {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        dev = dev.max((-uy * dx + ux * dy).abs());
        let t = ux * dx + uy * dy;
        lo = lo.min(t);
        hi = hi.max(t);
    }
    (angle, dev, hi - lo)
}

fn image_extent(width: usize, height: usize, angle: f64) -> f64 {
    let (ux, uy) = (cos(angle).abs(), sin(angle).abs());
    let along_x = if ux > 1e-12 { (width as f64 - 1.0) / ux } else { f64::INFINITY };
    let along_y = if uy > 1e-12 { (height as f64 - 1.0) / uy } else { f64::INFINITY };
    along_x.min(along_y)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut k = i;
        while self.0[k] != r {
            let next = self.0[k];
            self.0[k] = r;
            k = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Splits the skeleton of `bitmap` into strokes and flags crossing noise.
pub fn jidt_denoise(bitmap: &Bitmap) -> JidtResult {
    let (w, h) = (bitmap.width(), bitmap.height());
    let skeleton = skeletonize(bitmap);
    let jcells = junctions(&skeleton);
    let mut zone = Bitmap::new(w, h);
    for &(x, y) in &jcells {
        zone.set((x, y), true);
        for d in MOORE {
            if skeleton.get((x + d.0, y + d.1)) {
                zone.set((x + d.0, y + d.1), true);
            }
        }
    }
    let mut rest = skeleton.clone();
    for c in zone.on_cells() {
        rest.set(c, false);
    }
    let clusters = components(&zone, Connectivity::Eight);
    let branches = components(&rest, Connectivity::Eight);

    let mut cluster_of = vec![usize::MAX; w * h];
    for (k, cl) in clusters.iter().enumerate() {
        for &(x, y) in cl {
            cluster_of[y as usize * w + x as usize] = k;
        }
    }
    // which clusters each branch touches
    let mut touches: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for (b, cells) in branches.iter().enumerate() {
        let mut seen = Vec::new();
        for &(x, y) in cells {
            for d in MOORE {
                let (nx, ny) = (x + d.0, y + d.1);
                if zone.get((nx, ny)) {
                    let k = cluster_of[ny as usize * w + nx as usize];
                    if !seen.contains(&k) {
                        seen.push(k);
                    }
                }
            }
        }
        for k in seen {
            touches[k].push(b);
        }
    }

    let mut uf = UnionFind((0..branches.len()).collect());
    for (k, cl) in clusters.iter().enumerate() {
        let n = cl.len() as f64;
        let cx = cl.iter().map(|c| c.0 as f64).sum::<f64>() / n;
        let cy = cl.iter().map(|c| c.1 as f64).sum::<f64>() / n;
        let dirs: Vec<(usize, (f64, f64))> = touches[k]
            .iter()
            .map(|&b| {
                let near: Vec<&Cell> = branches[b].iter().filter(|c| sqrt(sq(c.0 as f64 - cx) + sq(c.1 as f64 - cy)) <= DIRECTION_REACH).collect();
                let pts: Vec<&Cell> = if near.is_empty() { branches[b].iter().collect() } else { near };
                let m = pts.len() as f64;
                let (mx, my) = (pts.iter().map(|c| c.0 as f64).sum::<f64>() / m - cx, pts.iter().map(|c| c.1 as f64).sum::<f64>() / m - cy);
                let len = sqrt(mx * mx + my * my).max(1e-12);
                (b, (mx / len, my / len))
            })
            .collect();
        let mut pairs = Vec::new();
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let dot = dirs[i].1 .0 * dirs[j].1 .0 + dirs[i].1 .1 * dirs[j].1 .1;
                pairs.push((dot, i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used = vec![false; dirs.len()];
        for (dot, i, j) in pairs {
            if dot < PAIR_COSINE && !used[i] && !used[j] {
                used[i] = true;
                used[j] = true;
                uf.union(dirs[i].0, dirs[j].0);
            }
        }
    }

    // assemble strokes
    let mut roots: Vec<usize> = (0..branches.len()).map(|b| uf.find(b)).collect();
    let mut order: Vec<usize> = roots.clone();
    order.sort_unstable();
    order.dedup();
    let stroke_of = |root: usize| order.binary_search(&root).unwrap();
    let mut members: Vec<Vec<Cell>> = vec![Vec::new(); order.len()];
    let mut stroke_clusters: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for (b, cells) in branches.iter().enumerate() {
        members[stroke_of(roots[b])].extend_from_slice(cells);
    }
    for (k, bs) in touches.iter().enumerate() {
        for &b in bs {
            let s = stroke_of(roots[b]);
            if !stroke_clusters[s].contains(&k) {
                stroke_clusters[s].push(k);
            }
        }
    }
    // isolated junction zones (no branches) become their own strokes
    for (k, bs) in touches.iter().enumerate() {
        if bs.is_empty() {
            members.push(Vec::new());
            stroke_clusters.push(vec![k]);
        }
    }
    roots.clear();

    let mut strokes = Vec::with_capacity(members.len());
    for (s, cells) in members.iter().enumerate() {
        let mut all = cells.clone();
        for &k in &stroke_clusters[s] {
            all.extend_from_slice(&clusters[k]);
        }
        sort_cells(&mut all);
        all.dedup();
        let crosses = stroke_clusters[s].iter().any(|&k| {
            let mut owners: Vec<usize> = touches[k].iter().map(|&b| stroke_of(uf.find(b))).collect();
            owners.sort_unstable();
            owners.dedup();
            owners.len() >= 2
        });
        let (angle, dev, extent) = if all.len() >= 2 { line_fit(&all) } else { (0.0, 0.0, 0.0) };
        let straight = all.len() >= 3 && dev <= STRAIGHT_TOLERANCE;
        let span = extent / image_extent(w, h, angle);
        let noise = straight && span >= SPAN_FRACTION && crosses;
        strokes.push(Stroke { cells: all, straight, span, crosses, noise });
    }
    strokes.sort_by(|a, b| {
        let ka = a.cells.first().map(|c| (c.1, c.0));
        let kb = b.cells.first().map(|c| (c.1, c.0));
        ka.cmp(&kb).then(a.cells.len().cmp(&b.cells.len()))
    });

    let mut signal_map = Bitmap::new(w, h);
    for s in strokes.iter().filter(|s| !s.noise) {
        s.cells.iter().for_each(|&c| signal_map.set(c, true));
    }
    let noise: Vec<Vec<Cell>> = strokes.iter().filter(|s| s.noise).map(|s| s.cells.iter().copied().filter(|&c| !signal_map.get(c)).collect()).collect();
    let signal = components(&signal_map, Connectivity::Eight);
    JidtResult { strokes, signal, noise }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::primitives::{classify_primitive, draw_primitive, PrimitiveKind};
    use crate::fractal::raster::line;

    #[test]
    fn line_through_glyph_is_noise() {
        let mut b = Bitmap::new(40, 40);
        draw_primitive(&mut b, PrimitiveKind::Circle, (20.0, 20.0), 9.0, 0.0);
        line((1, 22), (38, 22)).into_iter().for_each(|c| b.set(c, true));
        let r = jidt_denoise(&b);
        assert_eq!(r.noise.len(), 1, "{:?}", r.strokes.iter().map(|s| (s.cells.len(), s.straight, s.span, s.crosses)).collect::<Vec<_>>());
        assert!(r.noise[0].iter().all(|c| (c.1 - 22).abs() <= 1));
        assert_eq!(r.signal.len(), 1);
        let c = classify_primitive(&r.signal[0]).unwrap();
        assert_eq!(c.kind, PrimitiveKind::Circle);
    }

    #[test]
    fn no_junctions_no_noise() {
        let mut b = Bitmap::new(40, 40);
        draw_primitive(&mut b, PrimitiveKind::Triangle, (20.0, 20.0), 12.0, 0.0);
        line((1, 38), (38, 38)).into_iter().for_each(|c| b.set(c, true));
        let r = jidt_denoise(&b);
        assert!(r.noise.is_empty());
        assert_eq!(r.signal.len(), 2);
    }

    #[test]
    fn two_full_span_lines_are_both_noise_but_og_is_a_junction() {
        let mut b = Bitmap::new(25, 25);
        line((0, 12), (24, 12)).into_iter().chain(line((12, 0), (12, 24))).for_each(|c| b.set(c, true));
        let r = jidt_denoise(&b);
        assert_eq!(r.strokes.iter().filter(|s| s.noise).count(), 2);
        assert_eq!(classify_primitive(&b.on_cells()).unwrap().kind, PrimitiveKind::Junction);
    }

    #[test]
    fn line_fit_on_diagonal() {
        let cells = line((0, 0), (10, 10));
        let (a, dev, ext) = line_fit(&cells);
        assert!((a - core::f64::consts::FRAC_PI_4).abs() < 1e-9);
        assert!(dev < 1e-9);
        assert!((ext - 10.0 * 2f64.sqrt()).abs() < 1e-9);
    }
}

//! Global completion of fragmented curves: collinear straight fragments are
//! joined into one background line, co-circular arcs are completed into a
//! full circle. Anything else passes through as its own group.

use alloc::vec;
use alloc::vec::Vec;

use super::jidt::line_fit;
use super::morph::{components, skeletonize, sort_cells, Connectivity};
use super::raster::{draw_polyline, line};
use super::{Bitmap, Cell};
use crate::math::{cos, rem_euclid, sin, sq, sqrt, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcslccConfig {
    /// Largest direction difference (radians) between collinear fragments.
    pub slope_tolerance: f64,
    /// Largest perpendicular offset (cells) between collinear fragments.
    pub offset_tolerance: f64,
    /// Largest perpendicular deviation (cells) of a straight fragment.
    pub straight_tolerance: f64,
    /// Largest RMS radial residual (cells) of a joint circle fit.
    pub fit_tolerance: f64,
}

impl Default for GcslccConfig {
    fn default() -> Self {
        Self { slope_tolerance: 5.0 * PI / 180.0, offset_tolerance: 1.5, straight_tolerance: 0.75, fit_tolerance: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    /// RMS radial residual of the fit.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalKind {
    Line,
    Circle,
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalGroup {
    pub kind: GlobalKind,
    /// Indices into [`GcslccResult::fragments`], ascending.
    pub members: Vec<usize>,
    /// Member cells plus completion cells, row-major sorted.
    pub cells: Vec<Cell>,
    pub circle: Option<Circle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcslccResult {
    /// 8-connected components of the input.
    pub fragments: Vec<Vec<Cell>>,
    pub groups: Vec<GlobalGroup>,
    /// Input plus every completion cell.
    pub completed: Bitmap,
}

/// Algebraic (Kåsa) least-squares circle fit.
pub fn fit_circle(cells: &[Cell]) -> Option<Circle> {
    if cells.len() < 3 {
        return None;
    }
    let n = cells.len() as f64;
    let mx = cells.iter().map(|c| c.0 as f64).sum::<f64>() / n;
    let my = cells.iter().map(|c| c.1 as f64).sum::<f64>() / n;
    // minimise Σ (u² + v² + D u + E v + F)² in centred coordinates
    let (mut suu, mut svv, mut suv, mut su, mut sv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut szu, mut szv, mut sz) = (0.0, 0.0, 0.0);
    for &(x, y) in cells {
        let (u, v) = (x as f64 - mx, y as f64 - my);
        let z = u * u + v * v;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        su += u;
        sv += v;
        szu += z * u;
        szv += z * v;
        sz += z;
    }
    let a = [[suu, suv, su], [suv, svv, sv], [su, sv, n]];
    let b = [-szu, -szv, -sz];
    let [d, e, f] = solve3(a, b)?;
    let (cu, cv) = (-d / 2.0, -e / 2.0);
    let r2 = cu * cu + cv * cv - f;
    if !(r2 > 0.0) {
        return None;
    }
    let r = sqrt(r2);
    let residual = sqrt(
        cells
            .iter()
            .map(|&(x, y)| {
                let d = sqrt(sq(x as f64 - mx - cu) + sq(y as f64 - my - cv)) - r;
                d * d
            })
            .sum::<f64>()
            / n,
    );
    Some(Circle { cx: cu + mx, cy: cv + my, r, residual })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let k = a[row][col] / a[col][col];
            let pivot = a[col];
            for (cell, p) in a[row].iter_mut().zip(pivot).skip(col) {
                *cell -= k * p;
            }
            b[row] -= k * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = rem_euclid(a - b, PI);
    d.min(PI - d)
}

struct LineFrag {
    angle: f64,
    centroid: (f64, f64),
}

fn perpendicular(angle: f64, from: (f64, f64), p: (f64, f64)) -> f64 {
    (-sin(angle) * (p.0 - from.0) + cos(angle) * (p.1 - from.1)).abs()
}

fn centroid(cells: &[Cell]) -> (f64, f64) {
    let n = cells.len() as f64;
    (cells.iter().map(|c| c.0 as f64).sum::<f64>() / n, cells.iter().map(|c| c.1 as f64).sum::<f64>() / n)
}

pub fn gcslcc_extrapolate(bitmap: &Bitmap, config: GcslccConfig) -> GcslccResult {
    let (w, h) = (bitmap.width(), bitmap.height());
    let fragments = components(bitmap, Connectivity::Eight);
    let skeleton = skeletonize(bitmap);
    let thin: Vec<Vec<Cell>> = fragments.iter().map(|f| f.iter().copied().filter(|&c| skeleton.get(c)).collect()).collect();

    // classify fragments
    let mut lines: Vec<(usize, LineFrag)> = Vec::new();
    let mut arcs: Vec<usize> = Vec::new();
    for (i, cells) in thin.iter().enumerate() {
        if cells.len() < 3 {
            continue;
        }
        let (angle, dev, _) = line_fit(cells);
        if dev <= config.straight_tolerance {
            lines.push((i, LineFrag { angle, centroid: centroid(cells) }));
        } else if fit_circle(cells).is_some_and(|c| c.residual <= config.fit_tolerance) {
            arcs.push(i);
        }
    }

    let mut owner: Vec<Option<usize>> = vec![None; fragments.len()];
    let mut groups: Vec<GlobalGroup> = Vec::new();
    let mut completed = bitmap.clone();

    // collinear clusters (union-find over compatible pairs)
    let mut parent: Vec<usize> = (0..lines.len()).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..lines.len() {
        for b in a + 1..lines.len() {
            let (fa, fb) = (&lines[a].1, &lines[b].1);
            if angle_gap(fa.angle, fb.angle) <= config.slope_tolerance
                && perpendicular(fa.angle, fa.centroid, fb.centroid) <= config.offset_tolerance
                && perpendicular(fb.angle, fb.centroid, fa.centroid) <= config.offset_tolerance
            {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    for r in 0..lines.len() {
        if root(&mut parent, r) != r {
            continue;
        }
        let members: Vec<usize> = (0..lines.len()).filter(|&k| root(&mut parent, k) == r).collect();
        if members.len() < 2 {
            continue;
        }
        let frag_ids: Vec<usize> = members.iter().map(|&k| lines[k].0).collect();
        let all: Vec<Cell> = frag_ids.iter().flat_map(|&i| thin[i].iter().copied()).collect();
        let (angle, _, _) = line_fit(&all);
        let (ux, uy) = (cos(angle), sin(angle));
        let proj = |c: &Cell| ux * c.0 as f64 + uy * c.1 as f64;
        let mut ordered = frag_ids.clone();
        ordered.sort_by(|&i, &j| {
            let pi = thin[i].iter().map(proj).fold(f64::INFINITY, f64::min);
            let pj = thin[j].iter().map(proj).fold(f64::INFINITY, f64::min);
            pi.total_cmp(&pj).then(i.cmp(&j))
        });
        let mut cells: Vec<Cell> = frag_ids.iter().flat_map(|&i| fragments[i].iter().copied()).collect();
        for pair in ordered.windows(2) {
            let end = *thin[pair[0]].iter().max_by(|a, b| proj(a).total_cmp(&proj(b)).then(b.cmp(a))).unwrap();
            let start = *thin[pair[1]].iter().min_by(|a, b| proj(a).total_cmp(&proj(b)).then(a.cmp(b))).unwrap();
            cells.extend(line(end, start));
        }
        sort_cells(&mut cells);
        cells.dedup();
        cells.iter().for_each(|&c| completed.set(c, true));
        let mut m = frag_ids.clone();
        m.sort_unstable();
        let gi = groups.len();
        m.iter().for_each(|&i| owner[i] = Some(gi));
        groups.push(GlobalGroup { kind: GlobalKind::Line, members: m, cells, circle: None });
    }

    // co-circular clusters: merge while the joint fit stays tight
    let mut clusters: Vec<Vec<usize>> = arcs.iter().map(|&i| vec![i]).collect();
    let max_r = (w.max(h)) as f64 * 2.0;
    'merge: loop {
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let joint: Vec<Cell> = clusters[a].iter().chain(&clusters[b]).flat_map(|&i| thin[i].iter().copied()).collect();
                if fit_circle(&joint).is_some_and(|c| c.residual <= config.fit_tolerance && c.r <= max_r) {
                    let moved = clusters.remove(b);
                    clusters[a].extend(moved);
                    clusters[a].sort_unstable();
                    continue 'merge;
                }
            }
        }
        break;
    }
    for cluster in clusters.into_iter().filter(|c| c.len() >= 2) {
        let joint: Vec<Cell> = cluster.iter().flat_map(|&i| thin[i].iter().copied()).collect();
        let circle = fit_circle(&joint).expect("cluster was merged on a valid fit");
        let mut ring = Bitmap::new(w, h);
        let pts: Vec<(f64, f64)> = (0..=720).map(|k| TAU * k as f64 / 720.0).map(|t| (circle.cx + circle.r * cos(t), circle.cy + circle.r * sin(t))).collect();
        draw_polyline(&mut ring, &pts);
        let mut cells: Vec<Cell> = cluster.iter().flat_map(|&i| fragments[i].iter().copied()).chain(ring.on_cells()).collect();
        sort_cells(&mut cells);
        cells.dedup();
        cells.iter().for_each(|&c| completed.set(c, true));
        let gi = groups.len();
        cluster.iter().for_each(|&i| owner[i] = Some(gi));
        groups.push(GlobalGroup { kind: GlobalKind::Circle, members: cluster, cells, circle: Some(circle) });
    }

    for (i, f) in fragments.iter().enumerate() {
        if owner[i].is_none() {
            groups.push(GlobalGroup { kind: GlobalKind::Single, members: vec![i], cells: f.clone(), circle: None });
        }
    }
    groups.sort_by_key(|g| g.members[0]);
    GcslccResult { fragments, groups, completed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::primitives::{draw_primitive, PrimitiveKind};

    fn arc(b: &mut Bitmap, c: (f64, f64), r: f64, from_deg: f64, to_deg: f64) {
        let pts: Vec<(f64, f64)> =
            (0..=200).map(|k| (from_deg + (to_deg - from_deg) * k as f64 / 200.0) * PI / 180.0).map(|t| (c.0 + r * cos(t), c.1 + r * sin(t))).collect();
        draw_polyline(b, &pts);
    }

    #[test]
    fn dashed_line_becomes_one_group() {
        let mut b = Bitmap::new(48, 20);
        for k in 0..5 {
            let x0 = 2 + 9 * k;
            line((x0, 3 + k / 2), (x0 + 5, 3 + k / 2)).into_iter().for_each(|c| b.set(c, true));
        }
        // slight step between dashes keeps them collinear within tolerance
        let r = gcslcc_extrapolate(&b, GcslccConfig::default());
        assert_eq!(r.fragments.len(), 5);
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[0].kind, GlobalKind::Line);
        assert_eq!(r.groups[0].members, vec![0, 1, 2, 3, 4]);
        assert_eq!(components(&r.completed, Connectivity::Eight).len(), 1);
    }

    #[test]
    fn three_arcs_complete_one_circle() {
        let (cx, cy, rad) = (24.3, 23.6, 14.0);
        let mut b = Bitmap::new(48, 48);
        arc(&mut b, (cx, cy), rad, 0.0, 70.0);
        arc(&mut b, (cx, cy), rad, 120.0, 190.0);
        arc(&mut b, (cx, cy), rad, 240.0, 310.0);
        let r = gcslcc_extrapolate(&b, GcslccConfig::default());
        assert_eq!(r.fragments.len(), 3);
        assert_eq!(r.groups.len(), 1);
        let g = &r.groups[0];
        assert_eq!(g.kind, GlobalKind::Circle);
        let c = g.circle.unwrap();
        assert!((sq(c.cx - cx) + sq(c.cy - cy)).sqrt() <= 1.0, "{c:?}");
        assert!((c.r - rad).abs() / rad <= 0.05, "{c:?}");
        assert_eq!(components(&r.completed, Connectivity::Eight).len(), 1);
    }

    #[test]
    fn kasa_fit_matches_exact_points() {
        // integer points on x² + y² = 25 shifted to (10, 10)
        let pts = [(15, 10), (13, 14), (10, 15), (6, 13), (5, 10), (7, 6), (10, 5), (14, 7)];
        let c = fit_circle(&pts).unwrap();
        assert!((c.cx - 10.0).abs() < 1e-9 && (c.cy - 10.0).abs() < 1e-9 && (c.r - 5.0).abs() < 1e-9);
        assert!(c.residual < 1e-9);
        assert!(fit_circle(&[(0, 0), (1, 1), (2, 2)]).is_none());
    }

    #[test]
    fn unrelated_fragments_pass_through() {
        let mut b = Bitmap::new(48, 48);
        draw_primitive(&mut b, PrimitiveKind::Circle, (12.0, 12.0), 8.0, 0.0);
        draw_primitive(&mut b, PrimitiveKind::Triangle, (34.0, 34.0), 9.0, 0.0);
        line((2, 44), (20, 30)).into_iter().for_each(|c| b.set(c, true));
        let r = gcslcc_extrapolate(&b, GcslccConfig::default());
        assert_eq!(r.groups.len(), r.fragments.len());
        assert!(r.groups.iter().all(|g| g.kind == GlobalKind::Single));
        for (g, f) in r.groups.iter().zip(&r.fragments) {
            assert_eq!(&g.cells, f);
        }
        assert_eq!(r.completed, b);
    }
}

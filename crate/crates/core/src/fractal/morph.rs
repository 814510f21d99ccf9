//! Binary morphology: connectivity, thinning, junctions, smoothing.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{Bitmap, Cell};

/// 8-neighbourhood, clockwise from north.
pub const MOORE: [Cell; 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];
pub const VON_NEUMANN: [Cell; 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
    /// Six neighbours on an "even-r" offset grid (even rows shifted right
    /// by half a cell).
    Hex,
}

/// Hex-6 neighbour offsets for a cell on row `y`.
pub fn hex_offsets(y: i32) -> [Cell; 6] {
    if y.rem_euclid(2) == 0 {
        [(-1, 0), (1, 0), (0, -1), (1, -1), (0, 1), (1, 1)]
    } else {
        [(-1, 0), (1, 0), (-1, -1), (0, -1), (-1, 1), (0, 1)]
    }
}

pub fn neighbors(c: Cell, conn: Connectivity) -> Vec<Cell> {
    match conn {
        Connectivity::Four => VON_NEUMANN.iter().map(|d| (c.0 + d.0, c.1 + d.1)).collect(),
        Connectivity::Eight => MOORE.iter().map(|d| (c.0 + d.0, c.1 + d.1)).collect(),
        Connectivity::Hex => hex_offsets(c.1).iter().map(|d| (c.0 + d.0, c.1 + d.1)).collect(),
    }
}

/// Connected components of on cells. Components are ordered by their first
/// cell in row-major order; cells inside a component are row-major sorted.
pub fn components(bitmap: &Bitmap, conn: Connectivity) -> Vec<Vec<Cell>> {
    let (w, h) = (bitmap.width(), bitmap.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in bitmap.on_cells() {
        let si = start.1 as usize * w + start.0 as usize;
        if seen[si] {
            continue;
        }
        seen[si] = true;
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            comp.push(c);
            for n in neighbors(c, conn) {
                if bitmap.get(n) {
                    let ni = n.1 as usize * w + n.0 as usize;
                    if !seen[ni] {
                        seen[ni] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        sort_cells(&mut comp);
        out.push(comp);
    }
    out
}

pub fn sort_cells(cells: &mut [Cell]) {
    cells.sort_by_key(|&(x, y)| (y, x));
}

fn ring(bitmap: &Bitmap, (x, y): Cell) -> [bool; 8] {
    let mut r = [false; 8];
    for (k, d) in MOORE.iter().enumerate() {
        r[k] = bitmap.get((x + d.0, y + d.1));
    }
    r
}

/// Number of off→on transitions walking once around the 8-neighbourhood.
pub fn crossing_number(bitmap: &Bitmap, c: Cell) -> usize {
    let r = ring(bitmap, c);
    (0..8).filter(|&k| !r[k] && r[(k + 1) % 8]).count()
}

/// Zhang–Suen thinning to a one-cell-wide, 8-connected skeleton.
pub fn skeletonize(bitmap: &Bitmap) -> Bitmap {
    thin(bitmap, None)
}

/// Zhang–Suen thinning that never deletes cells of `keep`.
pub fn skeletonize_protected(bitmap: &Bitmap, keep: &Bitmap) -> Bitmap {
    thin(bitmap, Some(keep))
}

fn thin(bitmap: &Bitmap, keep: Option<&Bitmap>) -> Bitmap {
    let mut img = bitmap.clone();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for c in img.on_cells() {
                let r = ring(&img, c);
                let b = r.iter().filter(|&&v| v).count();
                if !(2..=6).contains(&b) || crossing_number(&img, c) != 1 || keep.is_some_and(|k| k.get(c)) {
                    continue;
                }
                // r: 0=N 2=E 4=S 6=W
                let ok = if pass == 0 { !(r[0] && r[2] && r[4]) && !(r[2] && r[4] && r[6]) } else { !(r[0] && r[2] && r[6]) && !(r[0] && r[4] && r[6]) };
                if ok {
                    remove.push(c);
                }
            }
            changed |= !remove.is_empty();
            for c in remove {
                img.set(c, false);
            }
        }
        if !changed {
            return img;
        }
    }
}

/// Skeleton cells where three or more branches meet.
pub fn junctions(skeleton: &Bitmap) -> Vec<Cell> {
    skeleton.on_cells().into_iter().filter(|&c| crossing_number(skeleton, c) >= 3).collect()
}

/// Skeleton cells with exactly one neighbour.
pub fn endpoints(skeleton: &Bitmap) -> Vec<Cell> {
    skeleton.on_cells().into_iter().filter(|&c| skeleton.neighbor_count(c) == 1).collect()
}

/// 3×3 mean kept where at least two of the nine cells are on.
pub fn smooth(bitmap: &Bitmap) -> Bitmap {
    let mut out = Bitmap::new(bitmap.width(), bitmap.height());
    for y in 0..bitmap.height() as i32 {
        for x in 0..bitmap.width() as i32 {
            let n = bitmap.neighbor_count((x, y)) + usize::from(bitmap.get((x, y)));
            out.set((x, y), n >= 2);
        }
    }
    out
}

/// Box blur of radius `r` (mean over the `(2r+1)²` window, zero outside).
pub fn box_blur(bitmap: &Bitmap, r: i32) -> Vec<f64> {
    let (w, h) = (bitmap.width() as i32, bitmap.height() as i32);
    let area = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut n = 0usize;
            for dy in -r..=r {
                for dx in -r..=r {
                    n += usize::from(bitmap.get((x + dx, y + dy)));
                }
            }
            out.push(n as f64 / area);
        }
    }
    out
}

/// Drops interior cells (whose full 5×5 window is on), leaving a band
/// around every filled region.
pub fn contour(bitmap: &Bitmap) -> Bitmap {
    let mut out = bitmap.clone();
    for c in bitmap.on_cells() {
        let full = (-2..=2).all(|dy| (-2..=2).all(|dx| bitmap.get((c.0 + dx, c.1 + dy))));
        if full {
            out.set(c, false);
        }
    }
    out
}

/// Adds one cell at every diagonal step so the curve becomes 4-connected.
pub fn fill_staircases(bitmap: &Bitmap) -> Bitmap {
    let mut out = bitmap.clone();
    for (x, y) in bitmap.on_cells() {
        for (dx, dy) in [(1, 1), (-1, 1)] {
            let d = (x + dx, y + dy);
            if bitmap.get(d) && !bitmap.get((x + dx, y)) && !bitmap.get((x, y + dy)) {
                out.set((x + dx, y), true);
            }
        }
    }
    out
}

/// Breadth-first distances (8-connected steps) from `from` inside `bitmap`;
/// `usize::MAX` where unreachable.
pub fn geodesic_distances(bitmap: &Bitmap, from: Cell) -> Vec<usize> {
    let w = bitmap.width();
    let mut dist = vec![usize::MAX; w * bitmap.height()];
    if !bitmap.get(from) {
        return dist;
    }
    dist[from.1 as usize * w + from.0 as usize] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        let d = dist[c.1 as usize * w + c.0 as usize];
        for n in neighbors(c, Connectivity::Eight) {
            if bitmap.get(n) {
                let ni = n.1 as usize * w + n.0 as usize;
                if dist[ni] == usize::MAX {
                    dist[ni] = d + 1;
                    queue.push_back(n);
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::raster::line;

    fn bm(rows: &[&str]) -> Bitmap {
        let mut b = Bitmap::new(rows[0].len(), rows.len());
        for (y, r) in rows.iter().enumerate() {
            for (x, ch) in r.chars().enumerate() {
                b.set((x as i32, y as i32), ch == '#');
            }
        }
        b
    }

    #[test]
    fn components_by_connectivity() {
        let b = bm(&["#.#", ".#.", "#.#"]);
        assert_eq!(components(&b, Connectivity::Four).len(), 5);
        assert_eq!(components(&b, Connectivity::Eight).len(), 1);
    }

    #[test]
    fn hex_neighbours_are_symmetric() {
        for y in 0..4 {
            for x in 0..4 {
                for n in neighbors((x, y), Connectivity::Hex) {
                    assert!(neighbors(n, Connectivity::Hex).contains(&(x, y)));
                }
            }
        }
    }

    #[test]
    fn thick_bar_thins_to_line() {
        let mut b = Bitmap::new(20, 7);
        for y in 2..5 {
            for x in 2..18 {
                b.set((x, y), true);
            }
        }
        let s = skeletonize(&b);
        for x in 4..16 {
            assert!(s.get((x, 3)));
        }
        assert!(s.on_cells().iter().all(|c| c.1 == 3));
        assert_eq!(skeletonize(&s), s);
    }

    #[test]
    fn cross_has_junction_line_has_two_endpoints() {
        let mut b = Bitmap::new(11, 11);
        line((0, 5), (10, 5)).into_iter().chain(line((5, 0), (5, 10))).for_each(|c| b.set(c, true));
        assert_eq!(junctions(&b), vec![(5, 5)]);
        let mut l = Bitmap::new(11, 11);
        line((1, 1), (9, 6)).into_iter().for_each(|c| l.set(c, true));
        assert!(junctions(&l).is_empty());
        assert_eq!(endpoints(&l), vec![(1, 1), (9, 6)]);
    }

    #[test]
    fn staircase_fill_is_four_connected() {
        let mut b = Bitmap::new(10, 10);
        line((0, 0), (9, 9)).into_iter().for_each(|c| b.set(c, true));
        let f = fill_staircases(&b);
        assert_eq!(components(&f, Connectivity::Four).len(), 1);
    }

    #[test]
    fn contour_hollows_filled_square() {
        let mut b = Bitmap::new(12, 12);
        for y in 1..11 {
            for x in 1..11 {
                b.set((x, y), true);
            }
        }
        let c = contour(&b);
        assert!(!c.get((5, 5)));
        assert!(c.get((1, 1)) && c.get((2, 2)));
    }
}

//! Rasterisation helpers: Bresenham lines and polylines in continuous
//! coordinates, rounded to cells.

use alloc::vec::Vec;

use super::{Bitmap, Cell};
use crate::math::round;

/// Cells of the Bresenham segment from `a` to `b`, both ends included.
pub fn line(a: Cell, b: Cell) -> Vec<Cell> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if (x, y) == b {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

pub fn round_point((x, y): (f64, f64)) -> Cell {
    (round(x) as i32, round(y) as i32)
}

/// Draws a polyline through continuous points, joining consecutive rounded
/// vertices with Bresenham segments.
pub fn draw_polyline(bitmap: &mut Bitmap, points: &[(f64, f64)]) {
    let mut prev: Option<Cell> = None;
    for &p in points {
        let c = round_point(p);
        match prev {
            Some(q) if q != c => line(q, c).into_iter().for_each(|cell| bitmap.set(cell, true)),
            Some(_) => {}
            None => bitmap.set(c, true),
        }
        prev = Some(c);
    }
}

/// Rotates `p` by `angle` (x toward y) and then scales and translates it.
pub fn place((px, py): (f64, f64), center: (f64, f64), scale: f64, cos_a: f64, sin_a: f64) -> (f64, f64) {
    (center.0 + scale * (px * cos_a - py * sin_a), center.1 + scale * (px * sin_a + py * cos_a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bresenham_endpoints_and_connectivity() {
        for &(a, b) in &[((0, 0), (7, 3)), ((5, 5), (-2, 9)), ((3, 3), (3, 3)), ((0, 0), (0, -4))] {
            let l = line(a, b);
            assert_eq!(l[0], a);
            assert_eq!(*l.last().unwrap(), b);
            for w in l.windows(2) {
                assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
            }
        }
        assert_eq!(line((0, 0), (4, 0)).len(), 5);
    }

    #[test]
    fn polyline_is_connected() {
        let mut b = Bitmap::new(20, 20);
        draw_polyline(&mut b, &[(1.2, 1.7), (15.4, 3.3), (10.0, 18.0)]);
        assert!(b.get((1, 2)) && b.get((15, 3)) && b.get((10, 18)));
    }
}

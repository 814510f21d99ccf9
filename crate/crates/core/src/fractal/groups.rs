//! Splitting a binarised image into non-contact and contact groups.
//!
//! Groups are 8-connected components. A component whose skeleton has a
//! junction (three or more branches meeting) is a contact group; the rest
//! are non-contact groups. The original image passes through untouched.

use alloc::vec::Vec;

use super::morph::{components, junctions, skeletonize, Connectivity};
use super::{Bitmap, Cell, GridImage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    /// Row-major sorted.
    pub cells: Vec<Cell>,
    /// Skeleton junction cells inside the group.
    pub junctions: Vec<Cell>,
}

impl Group {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bbox(&self) -> (i32, i32, i32, i32) {
        bbox(&self.cells)
    }
}

pub fn bbox(cells: &[Cell]) -> (i32, i32, i32, i32) {
    cells.iter().fold((i32::MAX, i32::MAX, i32::MIN, i32::MIN), |b, &(x, y)| (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Groups {
    /// The original binarised image.
    pub og: Bitmap,
    /// Non-contact groups.
    pub ncg: Vec<Group>,
    /// Contact groups (containing junctions).
    pub cg: Vec<Group>,
}

pub fn split_groups(image: &GridImage, threshold: f64) -> Groups {
    split_bitmap(&image.binarize(threshold))
}

pub fn split_bitmap(bitmap: &Bitmap) -> Groups {
    let skeleton = skeletonize(bitmap);
    let junction_cells = junctions(&skeleton);
    let (mut ncg, mut cg) = (Vec::new(), Vec::new());
    for cells in components(bitmap, Connectivity::Eight) {
        let j: Vec<Cell> = junction_cells.iter().copied().filter(|c| cells.binary_search_by_key(&(c.1, c.0), |&(x, y)| (y, x)).is_ok()).collect();
        let group = Group { cells, junctions: j };
        if group.junctions.is_empty() {
            ncg.push(group);
        } else {
            cg.push(group);
        }
    }
    Groups { og: bitmap.clone(), ncg, cg }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::primitives::{draw_primitive, PrimitiveKind};
    use crate::fractal::raster::line;

    #[test]
    fn circle_and_cross() {
        let mut b = Bitmap::new(48, 24);
        draw_primitive(&mut b, PrimitiveKind::Circle, (11.0, 11.0), 8.0, 0.0);
        line((26, 3), (44, 20)).into_iter().chain(line((26, 20), (44, 3))).for_each(|c| b.set(c, true));
        let g = split_bitmap(&b);
        assert_eq!(g.ncg.len(), 1);
        assert_eq!(g.cg.len(), 1);
        assert!(g.ncg[0].cells.iter().all(|c| c.0 < 24));
        assert!(g.cg[0].cells.iter().all(|c| c.0 >= 24));
        assert_eq!(g.og, b);
    }

    #[test]
    fn blank_and_dot() {
        let g = split_bitmap(&Bitmap::new(5, 5));
        assert!(g.ncg.is_empty() && g.cg.is_empty());
        let g = split_bitmap(&Bitmap::from_cells(5, 5, &[(2, 2)]));
        assert_eq!(g.ncg.len(), 1);
        assert_eq!(g.ncg[0].cells, vec![(2, 2)]);
        assert!(g.cg.is_empty());
    }
}

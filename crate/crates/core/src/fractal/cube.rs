//! 8×8 mean pyramids ("cubes") with fused equal-intensity regions.
//!
//! A cube holds four levels (8×8, 4×4, 2×2, 1×1); each upper cell is the
//! mean of its four children. The bottom level is partitioned into fused
//! regions: connected cells whose intensity stays within
//! [`FUSION_TOLERANCE`](super::FUSION_TOLERANCE) of the region's first cell.
//! Larger images are zero-padded to a multiple of 8 and tiled into a
//! [`CubeNet`] whose neighbouring tiles are adjacent.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::morph::{hex_offsets, MOORE, VON_NEUMANN};
use super::{Cell, GridImage, FUSION_TOLERANCE};

pub const CUBE_SIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Rectangular,
    Hexagonal,
}

impl Geometry {
    /// Neighbourhood used for the cube's fused regions.
    pub fn primary(self) -> Neighborhood {
        match self {
            Geometry::Rectangular => Neighborhood::VonNeumann,
            Geometry::Hexagonal => Neighborhood::Hex6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Neighborhood {
    VonNeumann,
    Moore,
    Hex6,
}

impl Neighborhood {
    pub const ALL: [Neighborhood; 3] = [Neighborhood::VonNeumann, Neighborhood::Moore, Neighborhood::Hex6];

    fn offsets(self, y: i32) -> Vec<Cell> {
        match self {
            Neighborhood::VonNeumann => VON_NEUMANN.to_vec(),
            Neighborhood::Moore => MOORE.to_vec(),
            Neighborhood::Hex6 => hex_offsets(y).to_vec(),
        }
    }
}

/// One 8×8 tile with its pyramid and fused regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    /// Bottom (8×8) first, apex (1×1) last.
    pub levels: Vec<GridImage>,
    pub geometry: Geometry,
    /// Fused regions under the geometry's primary neighbourhood, as bottom
    /// cell indices (row-major), ordered by first cell.
    pub fused: Vec<Vec<usize>>,
    /// Region counts under every neighbourhood, in [`Neighborhood::ALL`] order.
    pub region_counts: [(Neighborhood, usize); 3],
    /// Top-left cell of the tile in the source image.
    pub origin: (usize, usize),
}

impl Cube {
    pub fn from_tile(bottom: GridImage, geometry: Geometry, origin: (usize, usize)) -> Self {
        debug_assert_eq!((bottom.width(), bottom.height()), (CUBE_SIDE, CUBE_SIDE));
        let mut levels = vec![bottom];
        while levels.last().unwrap().width() > 1 {
            let below = levels.last().unwrap();
            let side = below.width() / 2;
            let mut v = Vec::with_capacity(side * side);
            for y in 0..side {
                for x in 0..side {
                    let sum = below.get(2 * x, 2 * y) + below.get(2 * x + 1, 2 * y) + below.get(2 * x, 2 * y + 1) + below.get(2 * x + 1, 2 * y + 1);
                    v.push(sum / 4.0);
                }
            }
            let img = GridImage::new(side, side, v).expect("means stay in range");
            levels.push(img.with_channel(below.channel));
        }
        let region_counts = Neighborhood::ALL.map(|n| (n, fuse(&levels[0], n).len()));
        let fused = fuse(&levels[0], geometry.primary());
        Self { levels, geometry, fused, region_counts, origin }
    }

    pub fn bottom(&self) -> &GridImage {
        &self.levels[0]
    }

    pub fn apex(&self) -> f64 {
        self.levels[self.levels.len() - 1].get(0, 0)
    }

    pub fn region_count(&self, n: Neighborhood) -> usize {
        self.region_counts.iter().find(|e| e.0 == n).map(|e| e.1).unwrap_or(0)
    }
}

/// Fused regions of an image under a neighbourhood.
pub fn fuse(image: &GridImage, n: Neighborhood) -> Vec<Vec<usize>> {
    let (w, h) = (image.width() as i32, image.height() as i32);
    let mut seen = vec![false; (w * h) as usize];
    let mut out = Vec::new();
    for start in 0..(w * h) as usize {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let seed_value = image.values()[start];
        let mut region = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            region.push(i);
            let (x, y) = ((i % w as usize) as i32, (i / w as usize) as i32);
            for (dx, dy) in n.offsets(y) {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if !seen[j] && (image.values()[j] - seed_value).abs() <= FUSION_TOLERANCE {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        region.sort_unstable();
        out.push(region);
    }
    out
}

/// Cubes tiling an image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeNet {
    pub geometry: Geometry,
    pub cols: usize,
    pub rows: usize,
    pub cubes: Vec<Cube>,
}

impl CubeNet {
    /// Index pairs of horizontally or vertically neighbouring tiles.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                if c + 1 < self.cols {
                    out.push((i, i + 1));
                }
                if r + 1 < self.rows {
                    out.push((i, i + self.cols));
                }
            }
        }
        out
    }

    pub fn total_regions(&self) -> usize {
        self.cubes.iter().map(|c| c.fused.len()).sum()
    }
}

/// Pads the image with zeros to a multiple of 8 and builds one cube per tile.
pub fn build_cube(image: &GridImage, geometry: Geometry) -> CubeNet {
    let cols = image.width().div_ceil(CUBE_SIDE);
    let rows = image.height().div_ceil(CUBE_SIDE);
    let mut cubes = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let (ox, oy) = (c * CUBE_SIDE, r * CUBE_SIDE);
            let mut v = Vec::with_capacity(CUBE_SIDE * CUBE_SIDE);
            for y in oy..oy + CUBE_SIDE {
                for x in ox..ox + CUBE_SIDE {
                    v.push(if x < image.width() && y < image.height() { image.get(x, y) } else { 0.0 });
                }
            }
            let tile = GridImage::new(CUBE_SIDE, CUBE_SIDE, v).expect("tile values come from a valid image");
            cubes.push(Cube::from_tile(tile.with_channel(image.channel), geometry, (ox, oy)));
        }
    }
    CubeNet { geometry, cols, rows, cubes }
}

/// Rectangular and hexagonal cube nets of the same image.
pub fn build_dual(image: &GridImage) -> (CubeNet, CubeNet) {
    (build_cube(image, Geometry::Rectangular), build_cube(image, Geometry::Hexagonal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img8(f: impl Fn(usize, usize) -> f64) -> GridImage {
        let mut v = Vec::new();
        for y in 0..8 {
            for x in 0..8 {
                v.push(f(x, y));
            }
        }
        GridImage::new(8, 8, v).unwrap()
    }

    #[test]
    fn constant_image_is_one_region() {
        let net = build_cube(&img8(|_, _| 0.3), Geometry::Rectangular);
        let cube = &net.cubes[0];
        assert_eq!(cube.fused.len(), 1);
        assert_eq!(cube.fused[0].len(), 64);
        for level in &cube.levels {
            assert!(level.values().iter().all(|&v| v == 0.3));
        }
    }

    #[test]
    fn half_and_half() {
        let cube = &build_cube(&img8(|x, _| if x < 4 { 0.0 } else { 1.0 }), Geometry::Rectangular).cubes[0];
        assert_eq!(cube.fused.len(), 2);
        assert_eq!(cube.apex(), 0.5);
    }

    #[test]
    fn checkerboard_regions_by_neighbourhood() {
        let cube = &build_cube(&img8(|x, y| ((x + y) % 2) as f64), Geometry::Rectangular).cubes[0];
        assert_eq!(cube.fused.len(), 64);
        assert_eq!(cube.region_count(Neighborhood::VonNeumann), 64);
        // diagonal neighbours share colour: one region per colour
        assert_eq!(cube.region_count(Neighborhood::Moore), 2);
        assert!(cube.region_count(Neighborhood::Hex6) < 64);
    }

    /// Cells of a hexagonal ring of radius 3 around (4, 4) on the even-r grid.
    fn hex_ring() -> Vec<(usize, usize)> {
        // axial (q, r) -> even-r offset
        let to_offset = |q: i32, r: i32| -> (i32, i32) { (q + (r + (r & 1)) / 2, r) };
        let dirs = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
        let (cq, cr) = (4 - 2, 4);
        let mut cells = Vec::new();
        let (mut q, mut r) = (cq - 3, cr + 3);
        for d in dirs {
            for _ in 0..3 {
                let (x, y) = to_offset(q, r);
                cells.push((x as usize, y as usize));
                q += d.0;
                r += d.1;
            }
        }
        cells
    }

    #[test]
    fn hexagon_outline_fuses_better_on_hex_grid() {
        let ring = hex_ring();
        assert_eq!(ring.len(), 18);
        let img = img8(|x, y| if ring.contains(&(x, y)) { 1.0 } else { 0.0 });
        let (rect, hex) = build_dual(&img);
        let (r, h) = (rect.cubes[0].fused.len(), hex.cubes[0].fused.len());
        assert!(h < r, "hex {h} regions vs rect {r}");
        // the ring itself is a single hex region
        let ring_idx: Vec<usize> = {
            let mut v: Vec<usize> = ring.iter().map(|&(x, y)| y * 8 + x).collect();
            v.sort_unstable();
            v
        };
        assert!(hex.cubes[0].fused.contains(&ring_idx));
    }

    #[test]
    fn large_images_tile_with_padding() {
        let img = GridImage::filled(20, 9, 1.0).unwrap();
        let net = build_cube(&img, Geometry::Rectangular);
        assert_eq!((net.cols, net.rows, net.cubes.len()), (3, 2, 6));
        assert_eq!(net.adjacent_pairs().len(), 7);
        // padded tile: 4 columns of ones, rest zeros
        assert_eq!(net.cubes[2].fused.len(), 2);
        assert_eq!(net.cubes[2].origin, (16, 0));
    }

    #[test]
    fn blank_image_dual_is_trivial() {
        let (rect, hex) = build_dual(&GridImage::filled(8, 8, 0.0).unwrap());
        assert_eq!(rect.total_regions(), 1);
        assert_eq!(hex.total_regions(), 1);
    }

    proptest! {
        #[test]
        fn pyramid_cells_are_child_means(values in proptest::collection::vec(0.0f64..=1.0, 64)) {
            let cube = Cube::from_tile(GridImage::new(8, 8, values).unwrap(), Geometry::Rectangular, (0, 0));
            prop_assert_eq!(cube.levels.len(), 4);
            for k in 1..4 {
                let (up, down) = (&cube.levels[k], &cube.levels[k - 1]);
                for y in 0..up.height() {
                    for x in 0..up.width() {
                        let m = (down.get(2*x, 2*y) + down.get(2*x+1, 2*y) + down.get(2*x, 2*y+1) + down.get(2*x+1, 2*y+1)) / 4.0;
                        prop_assert!((up.get(x, y) - m).abs() <= 1e-12);
                    }
                }
            }
        }

        #[test]
        fn fused_regions_partition_and_are_uniform(values in proptest::collection::vec(0u8..3, 64)) {
            let img = GridImage::new(8, 8, values.iter().map(|&v| v as f64 / 2.0).collect()).unwrap();
            for n in Neighborhood::ALL {
                let regions = fuse(&img, n);
                let mut all: Vec<usize> = regions.iter().flatten().copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..64).collect::<Vec<_>>());
                for r in &regions {
                    let v0 = img.values()[r[0]];
                    prop_assert!(r.iter().all(|&i| (img.values()[i] - v0).abs() <= FUSION_TOLERANCE));
                }
            }
        }
    }
}

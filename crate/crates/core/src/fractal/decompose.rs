//! End-to-end decomposition of an image into a seed graph.
//!
//! Binarise → connect/smooth/contour/skeleton loop → drop crossing noise
//! strokes → complete dashed lines and broken circles → thin. The cleaned
//! skeleton is then read in two universes: rectangular (8-connected curves)
//! and hexagonal (curves made 4-connected, grouped by hex-6 adjacency). Each
//! curve is classified as a whole; a curve with junctions that is not itself
//! a junction primitive is cut at its junctions and re-assembled into the
//! pieces that best fit the templates, which are classified separately. Detections from both universes are merged, deduplicated, run
//! through the grammar book, layered by scale and linked by relation edges.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::csbsl::{csbsl_pipeline, CsbslConfig};
use super::gcslcc::{gcslcc_extrapolate, GcslccConfig};
use super::grammar::GrammarBook;
use super::groups::bbox;
use super::jidt::jidt_denoise;
use super::morph::{components, fill_staircases, junctions, skeletonize, sort_cells, Connectivity, MOORE};
use super::primitives::{classify_primitive, PrimitiveKind};
use super::{Bitmap, Cell, Channel, GridImage, Result, BINARY_THRESHOLD};
use crate::math::hypot;

/// Number of pyramid layers seeds are sorted into.
pub const SEED_LAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeConfig {
    pub threshold: f64,
    pub csbsl_loops: usize,
    pub csbsl: CsbslConfig,
    pub gcslcc: GcslccConfig,
    /// A curve with junctions stays whole only if it classifies as a
    /// junction at least this well; pieces of a split curve must fit a
    /// template this well to be accepted as a union of branches.
    pub junction_score: f64,
    /// Detections scoring below this are dropped.
    pub min_score: f64,
    /// Curves with fewer cells are ignored.
    pub min_cells: usize,
    /// Dedup: same kind, centres within this many cells...
    pub dedup_center: f64,
    /// ...and scales within this relative difference.
    pub dedup_scale: f64,
    /// Centres whose x or y differ by at most this are aligned.
    pub align_tolerance: f64,
    /// Read the hexagonal universe as well as the rectangular one.
    pub dual: bool,
    pub grammar: GrammarBook,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            threshold: BINARY_THRESHOLD,
            csbsl_loops: 1,
            csbsl: CsbslConfig::default(),
            gcslcc: GcslccConfig::default(),
            junction_score: 0.85,
            min_score: 0.5,
            min_cells: 3,
            dedup_center: 1.0,
            dedup_scale: 0.1,
            align_tolerance: 1.5,
            dual: true,
            grammar: GrammarBook::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractalSeed {
    pub kind: PrimitiveKind,
    /// Cell coordinates, `x` right and `y` down.
    pub center: (f64, f64),
    /// Template size in cells (circumradius of the closed shapes).
    pub scale: f64,
    /// Radians, reduced modulo the kind's symmetry period.
    pub orientation: f64,
    pub layer: usize,
    pub score: f64,
    /// Index of the connected curve the seed came from.
    pub group: usize,
    /// `(min_x, min_y, max_x, max_y)` of the cells the seed was read from.
    pub extent: (i32, i32, i32, i32),
    /// Added by the grammar book rather than detected.
    #[serde(default)]
    pub projected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `a`'s extent strictly contains `b`'s.
    Contains,
    /// Centres closer than twice the larger scale.
    Adjacent,
    /// Centres share a row or a column.
    Aligned,
    /// Read from the same connected curve.
    Group,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::Contains, Relation::Adjacent, Relation::Aligned, Relation::Group];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Contains => "contains",
            Relation::Adjacent => "adjacent",
            Relation::Aligned => "aligned",
            Relation::Group => "group",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeedEdge {
    pub a: usize,
    pub b: usize,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedGraph {
    pub seeds: Vec<FractalSeed>,
    pub edges: Vec<SeedEdge>,
    pub channel: Channel,
    pub width: usize,
    pub height: usize,
}

impl SeedGraph {
    pub fn empty(width: usize, height: usize, channel: Channel) -> Self {
        Self { seeds: Vec::new(), edges: Vec::new(), channel, width, height }
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Seed indices per layer; the lists partition the seeds.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); SEED_LAYERS];
        for (i, s) in self.seeds.iter().enumerate() {
            out[s.layer.min(SEED_LAYERS - 1)].push(i);
        }
        out
    }

    pub fn edges_of(&self, relation: Relation) -> impl Iterator<Item = &SeedEdge> {
        self.edges.iter().filter(move |e| e.relation == relation)
    }

    /// Rebuilds every edge from the seeds.
    pub fn relink(&mut self, align_tolerance: f64) {
        self.edges = link(&self.seeds, align_tolerance);
    }
}

/// Layer of a seed of the given scale: small shapes sit low in the pyramid.
pub fn layer_for_scale(scale: f64) -> usize {
    match scale {
        s if s < 4.0 => 0,
        s if s < 8.0 => 1,
        s if s < 16.0 => 2,
        _ => 3,
    }
}

/// Distinct slot per (channel, kind); slots of different channels never
/// coincide.
pub fn seed_slot(channel: Channel, kind: PrimitiveKind) -> usize {
    channel.index() * PrimitiveKind::ALL.len() + kind.index()
}

pub const SLOT_COUNT: usize = 5 * 10;

/// Decomposes `image` with the default configuration.
pub fn decompose(image: &GridImage) -> Result<SeedGraph> {
    decompose_with(image, &DecomposeConfig::default())
}

/// The cleaned one-cell-wide curve image the seeds are read from.
pub fn clean_skeleton(bitmap: &Bitmap, config: &DecomposeConfig) -> Result<Bitmap> {
    if bitmap.is_blank() {
        return Ok(bitmap.clone());
    }
    let looped = csbsl_pipeline(bitmap, config.csbsl_loops, config.csbsl)?;
    let denoised = jidt_denoise(looped.skeleton());
    let signal = denoised.signal_bitmap(bitmap.width(), bitmap.height());
    let completed = gcslcc_extrapolate(&signal, config.gcslcc).completed;
    Ok(skeletonize(&completed))
}

pub fn decompose_with(image: &GridImage, config: &DecomposeConfig) -> Result<SeedGraph> {
    let (w, h) = (image.width(), image.height());
    let bitmap = image.binarize(config.threshold);
    let mut graph = SeedGraph::empty(w, h, image.channel);
    if bitmap.is_blank() {
        return Ok(graph);
    }
    let skeleton = clean_skeleton(&bitmap, config)?;
    let rect = components(&skeleton, Connectivity::Eight);
    let mut seeds = read_universe(&skeleton, &rect, &rect, config)?;
    if config.dual {
        let hex_cells = fill_staircases(&skeleton);
        let hex = components(&hex_cells, Connectivity::Hex);
        for s in read_universe(&skeleton, &hex, &rect, config)? {
            push_dedup(&mut seeds, s, config);
        }
    }
    config.grammar.apply(&mut seeds, w, h);
    for s in &mut seeds {
        s.center = (s.center.0.clamp(0.0, (w - 1) as f64), s.center.1.clamp(0.0, (h - 1) as f64));
    }
    seeds.sort_by(|a, b| {
        a.layer
            .cmp(&b.layer)
            .then(a.center.1.total_cmp(&b.center.1))
            .then(a.center.0.total_cmp(&b.center.0))
            .then(a.kind.cmp(&b.kind))
            .then(a.scale.total_cmp(&b.scale))
    });
    graph.seeds = seeds;
    graph.relink(config.align_tolerance);
    Ok(graph)
}

fn same_seed(a: &FractalSeed, b: &FractalSeed, config: &DecomposeConfig) -> bool {
    a.kind == b.kind
        && hypot(a.center.0 - b.center.0, a.center.1 - b.center.1) <= config.dedup_center
        && (a.scale - b.scale).abs() <= config.dedup_scale * a.scale.max(b.scale)
}

fn push_dedup(seeds: &mut Vec<FractalSeed>, s: FractalSeed, config: &DecomposeConfig) {
    match seeds.iter_mut().find(|q| same_seed(q, &s, config)) {
        Some(q) if s.score > q.score => *q = s,
        Some(_) => {}
        None => seeds.push(s),
    }
}

/// Classifies every curve of one universe. `rect` gives the group ids so
/// both universes label a curve alike.
fn read_universe(skeleton: &Bitmap, curves: &[Vec<Cell>], rect: &[Vec<Cell>], config: &DecomposeConfig) -> Result<Vec<FractalSeed>> {
    let (w, h) = (skeleton.width(), skeleton.height());
    let group_of = |cells: &[Cell]| rect.iter().position(|r| cells.iter().any(|c| r.binary_search_by_key(&(c.1, c.0), |&(x, y)| (y, x)).is_ok())).unwrap_or(0);
    let mut out = Vec::new();
    for cells in curves {
        if cells.len() < config.min_cells {
            continue;
        }
        let group = group_of(cells);
        let local = Bitmap::from_cells(w, h, cells);
        let whole = classify_primitive(cells)?;
        let split = !junctions(&skeletonize(&local)).is_empty() && !(whole.kind == PrimitiveKind::Junction && whole.score >= config.junction_score);
        let mut pieces: Vec<Vec<Cell>> = Vec::new();
        if split {
            pieces = split_contact(&local, config)?.into_iter().filter(|c| c.len() >= config.min_cells).collect();
        }
        if pieces.is_empty() {
            pieces.push(cells.clone());
        }
        for piece in pieces {
            let c = if piece.len() == cells.len() { whole.clone() } else { classify_primitive(&piece)? };
            if c.score < config.min_score || !(c.size > 0.0) {
                continue;
            }
            let seed = FractalSeed {
                kind: c.kind,
                center: c.center,
                scale: c.size,
                orientation: c.orientation,
                layer: layer_for_scale(c.size),
                score: c.score,
                group,
                extent: bbox(&piece),
                projected: false,
            };
            push_dedup(&mut out, seed, config);
        }
    }
    Ok(out)
}

/// Branch unions considered when splitting a contact curve.
const MAX_BRANCH_UNION: usize = 3;
/// Above this many branches a contact curve is split by stroke pairing.
const MAX_BRANCHES: usize = 12;

/// Splits a curve with junctions into the pieces that best explain it.
///
/// The curve is cut at its junction zones into branches. Every connected
/// union of up to three branches (plus the junction cells it touches) is
/// classified; the largest union fitting a template at least as well as
/// `junction_score` is accepted, its branches are removed, and the search
/// repeats. Branches nobody claimed come back as pieces of their own.
fn split_contact(local: &Bitmap, config: &DecomposeConfig) -> Result<Vec<Vec<Cell>>> {
    let (w, h) = (local.width(), local.height());
    let skeleton = skeletonize(local);
    let mut zone = Bitmap::new(w, h);
    for (x, y) in junctions(&skeleton) {
        zone.set((x, y), true);
        for d in MOORE {
            if skeleton.get((x + d.0, y + d.1)) {
                zone.set((x + d.0, y + d.1), true);
            }
        }
    }
    let mut rest = skeleton.clone();
    zone.on_cells().into_iter().for_each(|c| rest.set(c, false));
    let clusters = components(&zone, Connectivity::Eight);
    let branches = components(&rest, Connectivity::Eight);
    if branches.len() > MAX_BRANCHES {
        return Ok(jidt_denoise(local).strokes.into_iter().map(|s| s.cells).collect());
    }
    let touches = |cells: &[Cell], cluster: &[Cell]| {
        cells.iter().any(|&(x, y)| MOORE.iter().any(|d| cluster.binary_search_by_key(&(y + d.1, x + d.0), |&(cx, cy)| (cy, cx)).is_ok()))
    };
    let touched: Vec<Vec<usize>> = branches.iter().map(|b| (0..clusters.len()).filter(|&k| touches(b, &clusters[k])).collect()).collect();

    // connected unions of up to MAX_BRANCH_UNION branches
    let mut unions: Vec<Vec<usize>> = (0..branches.len()).map(|i| alloc::vec![i]).collect();
    let mut frontier = unions.clone();
    for _ in 1..MAX_BRANCH_UNION {
        let mut next = Vec::new();
        for u in &frontier {
            for j in u[u.len() - 1] + 1..branches.len() {
                if u.iter().any(|&i| touched[i].iter().any(|k| touched[j].contains(k))) {
                    let mut v = u.clone();
                    v.push(j);
                    next.push(v);
                }
            }
        }
        unions.extend(next.iter().cloned());
        frontier = next;
    }
    let union_cells = |u: &[usize]| {
        let mut cells: Vec<Cell> = u.iter().flat_map(|&i| branches[i].iter().copied()).collect();
        for k in u.iter().flat_map(|&i| touched[i].iter().copied()) {
            cells.extend(clusters[k].iter().copied());
        }
        sort_cells(&mut cells);
        cells.dedup();
        cells
    };
    let mut scored = Vec::new();
    for u in unions {
        let cells = union_cells(&u);
        if cells.len() >= config.min_cells {
            let score = classify_primitive(&cells)?.score;
            scored.push((u, cells, score));
        }
    }
    scored.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(b.2.total_cmp(&a.2)).then(a.0.cmp(&b.0)));
    let mut used = alloc::vec![false; branches.len()];
    let mut pieces = Vec::new();
    for (u, cells, score) in &scored {
        if *score >= config.junction_score && u.iter().all(|&i| !used[i]) {
            u.iter().for_each(|&i| used[i] = true);
            pieces.push(cells.clone());
        }
    }
    for (i, b) in branches.iter().enumerate() {
        if !used[i] {
            pieces.push(b.clone());
        }
    }
    Ok(pieces)
}

fn link(seeds: &[FractalSeed], align_tolerance: f64) -> Vec<SeedEdge> {
    let strictly_inside = |outer: (i32, i32, i32, i32), inner: (i32, i32, i32, i32)| {
        outer != inner && outer.0 <= inner.0 && outer.1 <= inner.1 && outer.2 >= inner.2 && outer.3 >= inner.3
    };
    let mut edges = Vec::new();
    for a in 0..seeds.len() {
        for b in 0..seeds.len() {
            if a != b && strictly_inside(seeds[a].extent, seeds[b].extent) {
                edges.push(SeedEdge { a, b, relation: Relation::Contains });
            }
        }
        for b in a + 1..seeds.len() {
            let (p, q) = (&seeds[a], &seeds[b]);
            let (dx, dy) = ((p.center.0 - q.center.0).abs(), (p.center.1 - q.center.1).abs());
            if hypot(dx, dy) < 2.0 * p.scale.max(q.scale) {
                edges.push(SeedEdge { a, b, relation: Relation::Adjacent });
            }
            if dx <= align_tolerance || dy <= align_tolerance {
                edges.push(SeedEdge { a, b, relation: Relation::Aligned });
            }
            if p.group == q.group && !p.projected && !q.projected {
                edges.push(SeedEdge { a, b, relation: Relation::Group });
            }
        }
    }
    edges.sort();
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::primitives::{draw_primitive, orientation_distance, ROTATION_STEP};
    use crate::math::PI;
    use alloc::vec;

    fn image(w: usize, h: usize, shapes: &[(PrimitiveKind, (f64, f64), f64, f64)]) -> GridImage {
        let mut b = Bitmap::new(w, h);
        for &(k, c, s, o) in shapes {
            draw_primitive(&mut b, k, c, s, o);
        }
        GridImage::from_bitmap(&b)
    }

    fn rotate90(img: &GridImage) -> GridImage {
        // (x, y) -> (h-1-y, x): a quarter turn, +π/2 in x-right/y-down angles
        let (w, h) = (img.width(), img.height());
        let mut v = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = (h - 1 - y, x);
                v[ny * h + nx] = img.get(x, y);
            }
        }
        GridImage::new(h, w, v).unwrap()
    }

    fn tree() -> GridImage {
        image(48, 48, &[(PrimitiveKind::Circle, (24.0, 15.0), 8.0, 0.0), (PrimitiveKind::OpenRectangle, (24.0, 27.0), 8.0, 0.0)])
    }

    #[test]
    fn circle_above_triangle() {
        let img = image(32, 52, &[(PrimitiveKind::Circle, (16.0, 8.0), 5.0, 0.0), (PrimitiveKind::Triangle, (16.0, 38.0), 9.0, 0.0)]);
        let g = decompose(&img).unwrap();
        let kinds: Vec<PrimitiveKind> = g.seeds.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![PrimitiveKind::Circle, PrimitiveKind::Triangle]);
        assert_eq!(g.edges, vec![SeedEdge { a: 0, b: 1, relation: Relation::Aligned }]);
        assert!(g.seeds[0].layer < g.seeds[1].layer);
        assert_eq!(g.layers().iter().map(Vec::len).sum::<usize>(), 2);
    }

    #[test]
    fn blank_image_gives_empty_graph() {
        let g = decompose(&GridImage::filled(16, 16, 0.0).unwrap()).unwrap();
        assert!(g.is_empty() && g.edges.is_empty());
    }

    #[test]
    fn tree_has_crown_and_trunk() {
        let g = decompose(&tree()).unwrap();
        let kinds: Vec<PrimitiveKind> = g.seeds.iter().map(|s| s.kind).collect();
        assert!(kinds.contains(&PrimitiveKind::Circle), "{kinds:?}");
        assert!(kinds.iter().any(|k| matches!(k, PrimitiveKind::OpenRectangle | PrimitiveKind::Square)), "{kinds:?}");
        assert!(g.edges.iter().any(|e| matches!(e.relation, Relation::Adjacent | Relation::Contains)));
    }

    #[test]
    fn tree_rotates_with_the_image() {
        let a = decompose(&tree()).unwrap();
        let b = decompose(&rotate90(&tree())).unwrap();
        assert_eq!(a.seeds.len(), b.seeds.len());
        let h = tree().height() as f64;
        for s in &a.seeds {
            let want = (h - 1.0 - s.center.1, s.center.0);
            let t = b
                .seeds
                .iter()
                .find(|t| t.kind == s.kind && hypot(t.center.0 - want.0, t.center.1 - want.1) <= 1.5)
                .unwrap_or_else(|| panic!("no rotated {s:?} in {:?}", b.seeds));
            assert!((t.scale - s.scale).abs() <= 0.1 * s.scale);
            assert!(orientation_distance(s.kind, t.orientation, s.orientation + PI / 2.0) <= 2.0 * ROTATION_STEP + 1e-9);
        }
        let rel = |g: &SeedGraph| {
            let mut r: Vec<Relation> = g.edges.iter().map(|e| e.relation).filter(|r| *r != Relation::Aligned).collect();
            r.sort();
            r
        };
        assert_eq!(rel(&a), rel(&b));
    }

    #[test]
    fn dual_universe_merges_a_circle_once() {
        let img = image(32, 32, &[(PrimitiveKind::Circle, (16.0, 16.0), 10.0, 0.0)]);
        let g = decompose(&img).unwrap();
        assert_eq!(g.seeds.len(), 1);
        assert_eq!(g.seeds[0].kind, PrimitiveKind::Circle);
        let rect_only = decompose_with(&img, &DecomposeConfig { dual: false, ..DecomposeConfig::default() }).unwrap();
        assert_eq!(rect_only.seeds.len(), 1);
    }

    #[test]
    fn translation_moves_every_centre() {
        let base = image(48, 48, &[(PrimitiveKind::Circle, (12.0, 12.0), 6.0, 0.0), (PrimitiveKind::Square, (30.0, 28.0), 7.0, 0.3)]);
        let (tx, ty) = (5usize, 3usize);
        let mut v = vec![0.0; 48 * 48];
        for y in 0..48 - ty {
            for x in 0..48 - tx {
                v[(y + ty) * 48 + x + tx] = base.get(x, y);
            }
        }
        let a = decompose(&base).unwrap();
        let b = decompose(&GridImage::new(48, 48, v).unwrap()).unwrap();
        assert_eq!(a.seeds.len(), b.seeds.len());
        for (s, t) in a.seeds.iter().zip(&b.seeds) {
            assert_eq!(s.kind, t.kind);
            assert!((t.center.0 - s.center.0 - tx as f64).abs() < 1e-9);
            assert!((t.center.1 - s.center.1 - ty as f64).abs() < 1e-9);
        }
        assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn decomposition_is_deterministic() {
        assert_eq!(decompose(&tree()).unwrap(), decompose(&tree()).unwrap());
    }

    #[test]
    fn slots_are_injective_across_channels() {
        let mut seen = [false; SLOT_COUNT];
        for ch in Channel::ALL {
            for k in PrimitiveKind::ALL {
                let s = seed_slot(ch, k);
                assert!(s < SLOT_COUNT && !seen[s]);
                seen[s] = true;
            }
        }
    }
}

//! Projection grammar: a user-supplied book of completion rules.
//!
//! A rule names a multiset of primitive kinds. When enough of them are
//! present among the decomposed seeds, the rule projects extra seeds placed
//! relative to an anchor seed (the first seed of the rule's first kind).
//! Rules are applied greedily, best match first, each at most once. The
//! default book is empty, so decomposition is unaffected unless a book is
//! supplied.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::decompose::{layer_for_scale, FractalSeed};
use super::PrimitiveKind;
use crate::math::{cos, hypot, sin};

/// A seed to add, expressed in the anchor's frame: `offset` is in units of
/// the anchor scale and rotates with the anchor orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub kind: PrimitiveKind,
    pub offset: (f64, f64),
    pub scale_ratio: f64,
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarRule {
    pub name: String,
    pub pattern: Vec<PrimitiveKind>,
    pub completion: Vec<Projection>,
    /// Fraction of the pattern that must be present for the rule to fire.
    pub min_match: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrammarBook {
    pub rules: Vec<GrammarRule>,
}

/// Fraction of the pattern multiset found among the seeds.
pub fn rule_match(rule: &GrammarRule, seeds: &[FractalSeed]) -> f64 {
    if rule.pattern.is_empty() {
        return 0.0;
    }
    let mut available: Vec<PrimitiveKind> = seeds.iter().map(|s| s.kind).collect();
    let mut hits = 0usize;
    for k in &rule.pattern {
        if let Some(p) = available.iter().position(|a| a == k) {
            available.swap_remove(p);
            hits += 1;
        }
    }
    hits as f64 / rule.pattern.len() as f64
}

impl GrammarBook {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Appends projected seeds to `seeds`; returns how many were added.
    /// A projection is skipped when a seed of the same kind already sits
    /// within one cell of its place, or when it falls outside the image.
    pub fn apply(&self, seeds: &mut Vec<FractalSeed>, width: usize, height: usize) -> usize {
        let mut ranked: Vec<(f64, usize)> = self.rules.iter().enumerate().map(|(i, r)| (rule_match(r, seeds), i)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut added = 0;
        for (score, i) in ranked {
            let rule = &self.rules[i];
            if score <= 0.0 || score < rule.min_match {
                continue;
            }
            let Some(anchor) = seeds.iter().find(|s| Some(&s.kind) == rule.pattern.first()).cloned() else {
                continue;
            };
            let (c, s) = (cos(anchor.orientation), sin(anchor.orientation));
            for p in &rule.completion {
                let dx = (p.offset.0 * c - p.offset.1 * s) * anchor.scale;
                let dy = (p.offset.0 * s + p.offset.1 * c) * anchor.scale;
                let center = (anchor.center.0 + dx, anchor.center.1 + dy);
                let inside = center.0 >= 0.0 && center.1 >= 0.0 && center.0 <= (width - 1) as f64 && center.1 <= (height - 1) as f64;
                let present = seeds.iter().any(|q| q.kind == p.kind && hypot(q.center.0 - center.0, q.center.1 - center.1) <= 1.0);
                let scale = anchor.scale * p.scale_ratio;
                if !inside || present || !(scale > 0.0) {
                    continue;
                }
                seeds.push(FractalSeed {
                    kind: p.kind,
                    center,
                    scale,
                    orientation: p.kind.canonical_orientation(anchor.orientation + p.orientation),
                    layer: layer_for_scale(scale),
                    score,
                    group: anchor.group,
                    extent: anchor.extent,
                    projected: true,
                });
                added += 1;
            }
        }
        added
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seed(kind: PrimitiveKind, center: (f64, f64), scale: f64) -> FractalSeed {
        FractalSeed { kind, center, scale, orientation: 0.0, layer: layer_for_scale(scale), score: 1.0, group: 0, extent: (0, 0, 0, 0), projected: false }
    }

    fn face_rule() -> GrammarRule {
        GrammarRule {
            name: "face".into(),
            pattern: vec![PrimitiveKind::Circle, PrimitiveKind::Circle, PrimitiveKind::OpenCircle2],
            completion: vec![Projection { kind: PrimitiveKind::Circle, offset: (0.0, 1.5), scale_ratio: 3.0, orientation: 0.0 }],
            min_match: 0.6,
        }
    }

    #[test]
    fn empty_book_adds_nothing() {
        let mut s = vec![seed(PrimitiveKind::Circle, (5.0, 5.0), 3.0)];
        assert_eq!(GrammarBook::default().apply(&mut s, 20, 20), 0);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn partial_match_projects_once() {
        let book = GrammarBook { rules: vec![face_rule()] };
        let mut s = vec![seed(PrimitiveKind::Circle, (8.0, 8.0), 2.0), seed(PrimitiveKind::OpenCircle2, (10.0, 13.0), 3.0)];
        assert!((rule_match(&book.rules[0], &s) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(book.apply(&mut s, 20, 20), 1);
        assert_eq!(s[2].kind, PrimitiveKind::Circle);
        assert_eq!(s[2].scale, 6.0);
        assert!(s[2].projected);
        // already present: applying again is a no-op
        assert_eq!(book.apply(&mut s, 20, 20), 0);
    }

    #[test]
    fn weak_match_does_not_fire() {
        let book = GrammarBook { rules: vec![face_rule()] };
        let mut s = vec![seed(PrimitiveKind::Circle, (8.0, 8.0), 2.0)];
        assert_eq!(book.apply(&mut s, 20, 20), 0);
    }
}

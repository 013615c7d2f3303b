//! Hierarchical shifted grid, segment levels, well-alignment and the
//! canonical candidate segments every solver searches over.
//!
//! Grid levels are measured in physical length: level `j` vertical lines sit
//! at `x = a + k * eps^(j-2)` for every integer `k`, so consecutive levels
//! refine each other by a factor `1/eps`. A segment has level `j` when its
//! length lies in `(eps^j, eps^(j-1)]`.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::geometry::{Coord, Instance, Orientation, Rect, Segment};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CandidateError {
    #[error("segment has zero length")]
    ZeroLength,
}

/// Hierarchical vertical grid with integer physical offset `offset_a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub eps: Rational,
    pub offset_a: i64,
    /// Physical length of one coordinate unit of the instance the grid is
    /// laid over.
    pub grid_unit: Rational,
}

impl GridSpec {
    pub fn new(eps: Rational, offset_a: i64, grid_unit: Rational) -> Self {
        GridSpec {
            eps,
            offset_a,
            grid_unit,
        }
    }

    pub fn for_instance(inst: &Instance, offset_a: i64) -> Self {
        Self::new(inst.epsilon, offset_a, inst.grid_unit)
    }

    /// Physical distance between consecutive level-`level` lines.
    pub fn physical_spacing(&self, level: u32) -> Rational {
        self.eps.pow(level as i32 - 2)
    }

    /// Distance between consecutive level-`level` lines in coordinate units.
    pub fn spacing(&self, level: u32) -> Rational {
        self.physical_spacing(level) / self.grid_unit
    }

    /// Deepest level whose spacing is at least one coordinate unit.
    pub fn max_level(&self) -> Option<u32> {
        if self.spacing(0) < Rational::one() {
            return None;
        }
        let mut j = 0;
        while self.spacing(j + 1) >= Rational::one() {
            j += 1;
        }
        Some(j)
    }

    /// Number of offsets `a` in `0..eps^-2`; the grid is periodic in `a`
    /// with that period.
    pub fn offset_period(eps: Rational) -> i64 {
        let inv = eps.recip().to_integer();
        (inv * inv) as i64
    }

    fn origin(&self) -> Rational {
        Rational::from_integer(self.offset_a as i128) / self.grid_unit
    }
}

/// Level of a segment given in physical units. Segments longer than
/// `1/eps` are level 0.
pub fn segment_level(seg: &Segment<Rational>, eps: Rational) -> Result<u32, CandidateError> {
    let len = seg.len();
    if len <= Rational::zero() {
        return Err(CandidateError::ZeroLength);
    }
    let mut j = 0u32;
    let mut bound = Rational::one();
    while len <= bound {
        j += 1;
        bound *= eps;
    }
    Ok(j)
}

/// Extends both endpoints of a physical segment outward onto the level
/// `j+3` grid of its level `j`: `a + k*eps^(j+1)` for horizontal segments,
/// multiples of `eps^(j+1)` for vertical ones.
pub fn well_align(
    seg: &Segment<Rational>,
    grid: &GridSpec,
) -> Result<Segment<Rational>, CandidateError> {
    let j = segment_level(seg, grid.eps)?;
    let step = grid.eps.pow(j as i32 + 1);
    let origin = match seg.orientation {
        Orientation::Horizontal => Rational::from_integer(grid.offset_a as i128),
        Orientation::Vertical => Rational::zero(),
    };
    let lo = origin + ((seg.lo - origin) / step).floor() * step;
    let hi = origin + ((seg.hi - origin) / step).ceil() * step;
    Ok(Segment { lo, hi, ..*seg })
}

/// x-coordinates of level-`level` grid lines strictly inside `region`,
/// restricted to integer coordinates, ascending.
pub fn grid_lines_in(region: &Rect, level: u32, grid: &GridSpec) -> Vec<Coord> {
    let lo = region.x1;
    let hi = region.x2;
    if hi - lo < 2 {
        return Vec::new();
    }
    let origin = grid.origin();
    let spacing = grid.spacing(level);
    let on_grid = |c: Coord| {
        ((Rational::from_integer(c as i128) - origin) / spacing).is_integer()
    };
    let width = Rational::from_integer((hi - lo) as i128);
    if width / spacing > width {
        // Finer than one unit: test every interior integer instead.
        return (lo + 1..hi).filter(|&c| on_grid(c)).collect();
    }
    let lo_r = Rational::from_integer(lo as i128);
    let hi_r = Rational::from_integer(hi as i128);
    let k_min = ((lo_r - origin) / spacing).floor().to_integer();
    let k_max = ((hi_r - origin) / spacing).ceil().to_integer();
    (k_min..=k_max)
        .map(|k| origin + spacing * Rational::from_integer(k))
        .filter(|p| p.is_integer() && *p > lo_r && *p < hi_r)
        .map(|p| p.to_integer() as Coord)
        .collect()
}

/// Union of grid lines of levels `0..=max_level` strictly inside `region`.
pub fn all_grid_lines_in(region: &Rect, grid: &GridSpec) -> Vec<Coord> {
    let Some(max) = grid.max_level() else {
        return Vec::new();
    };
    let mut lines = BTreeSet::new();
    for level in 0..=max {
        lines.extend(grid_lines_in(region, level, grid));
    }
    lines.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    /// Minimal stab of a single rectangle.
    RectEdge,
    /// Spans the connected union of several rectangles' extents.
    UnionSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Candidate {
    pub segment: Segment,
    pub provenance: Provenance,
}

/// Finite segment universe searched by the solvers, one sorted list per
/// orientation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateSet {
    pub horizontal: Vec<Candidate>,
    pub vertical: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.horizontal.len() + self.vertical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All candidates in canonical segment order.
    pub fn iter(&self) -> impl Iterator<Item = &Candidate> + '_ {
        self.horizontal.iter().chain(&self.vertical)
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.iter().map(|c| c.segment).collect()
    }

    pub fn contains(&self, seg: &Segment) -> bool {
        let list = match seg.orientation {
            Orientation::Horizontal => &self.horizontal,
            Orientation::Vertical => &self.vertical,
        };
        list.binary_search_by(|c| c.segment.cmp(seg)).is_ok()
    }

    /// Keeps the candidates satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Segment) -> bool) -> CandidateSet {
        CandidateSet {
            horizontal: self.horizontal.iter().filter(|c| keep(&c.segment)).copied().collect(),
            vertical: self.vertical.iter().filter(|c| keep(&c.segment)).copied().collect(),
        }
    }
}

/// Edge-anchored, union-span candidates for both orientations.
///
/// For horizontal segments the anchors are the rectangles' y-edges. At each
/// anchor, a span `[lo, hi]` is emitted when the x-extents of the active
/// rectangles lying inside it cover it without gaps and reach both ends.
/// Any segment of an optimal solution can be slid onto such an anchor and
/// cut at the gaps of the rectangles it stabs without losing coverage, so
/// these candidates contain an optimal solution.
pub fn canonical_candidates(inst: &Instance) -> CandidateSet {
    let horizontal = horizontal_candidates(&inst.rects);
    let transposed: Vec<Rect> = inst.rects.iter().map(Rect::transpose).collect();
    let mut vertical: Vec<Candidate> = horizontal_candidates(&transposed)
        .into_iter()
        .map(|c| Candidate {
            segment: c.segment.transpose(),
            ..c
        })
        .collect();
    vertical.sort();
    CandidateSet {
        horizontal,
        vertical,
    }
}

fn horizontal_candidates(rects: &[Rect]) -> Vec<Candidate> {
    let anchors: BTreeSet<Coord> = rects.iter().flat_map(|r| [r.y1, r.y2]).collect();
    let mut out = Vec::new();
    for &y in &anchors {
        let mut active: Vec<(Coord, Coord)> = rects
            .iter()
            .filter(|r| r.y1 <= y && y <= r.y2)
            .map(|r| (r.x1, r.x2))
            .collect();
        active.sort_unstable();
        active.dedup();
        let los: BTreeSet<Coord> = active.iter().map(|&(a, _)| a).collect();
        let his: BTreeSet<Coord> = active.iter().map(|&(_, b)| b).collect();
        for &lo in &los {
            let start = active.partition_point(|&(a, _)| a < lo);
            let tail = &active[start..];
            for &hi in his.range(lo + 1..) {
                if let Some(count) = connected_cover(tail, lo, hi) {
                    let provenance = if count == 1 {
                        Provenance::RectEdge
                    } else {
                        Provenance::UnionSpan
                    };
                    out.push(Candidate {
                        segment: Segment::horizontal(y, lo, hi),
                        provenance,
                    });
                }
            }
        }
    }
    out.sort();
    out.dedup_by(|a, b| a.segment == b.segment);
    out
}

/// Number of intervals of `sorted` (all starting at or after `lo`) lying in
/// `[lo, hi]`, if their union is exactly `[lo, hi]`.
fn connected_cover(sorted: &[(Coord, Coord)], lo: Coord, hi: Coord) -> Option<usize> {
    let mut reach = lo;
    let mut count = 0;
    let mut started = false;
    for &(a, b) in sorted {
        if a > hi {
            break;
        }
        if b > hi {
            continue;
        }
        if !started {
            if a != lo {
                return None;
            }
            started = true;
        }
        if a > reach {
            return None;
        }
        reach = reach.max(b);
        count += 1;
    }
    (started && reach == hi).then_some(count)
}

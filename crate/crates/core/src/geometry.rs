//! Exact geometric primitives: rectangles, stabbing segments, instances and
//! solutions.
//!
//! Coordinates of an [`Instance`] are integers counted in multiples of the
//! instance's grid unit. Rectangles and segments are closed sets, so a segment
//! that only touches an edge of a rectangle still counts as crossing it.
//!
//! The types are generic over the coordinate type so the same predicates can
//! be evaluated on exact rationals (see [`crate::candidates::well_align`]).

use std::fmt;
use std::ops::Sub;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Rational;

/// Integer coordinate in grid units.
pub type Coord = i64;

/// Largest absolute coordinate accepted at ingestion. Leaves headroom so that
/// sums of segment lengths never overflow an `i64`.
pub const MAX_COORD: Coord = 1 << 48;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("rectangle {id} is degenerate: ({x1},{y1})-({x2},{y2})")]
    DegenerateRect {
        id: usize,
        x1: Coord,
        y1: Coord,
        x2: Coord,
        y2: Coord,
    },
    #[error("coordinate {0} is outside the supported range")]
    CoordinateRange(String),
    #[error("epsilon {0} is invalid: it must be positive with 1/epsilon a natural number")]
    EpsilonInvalid(Rational),
    #[error("grid unit {0} must be positive")]
    GridUnitInvalid(Rational),
    #[error("segment {0} leaves the instance bounds")]
    SegmentOutOfBounds(Segment),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "h")]
    Horizontal,
    #[serde(rename = "v")]
    Vertical,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Horizontal => Orientation::Vertical,
            Orientation::Vertical => Orientation::Horizontal,
        }
    }
}

/// Axis-aligned closed rectangle with bottom-left `(x1, y1)` and top-right
/// `(x2, y2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect<T = Coord> {
    pub x1: T,
    pub y1: T,
    pub x2: T,
    pub y2: T,
    pub id: usize,
}

impl<T: Copy + Ord + Sub<Output = T>> Rect<T> {
    pub fn new(id: usize, x1: T, y1: T, x2: T, y2: T) -> Option<Self> {
        (x1 < x2 && y1 < y2).then_some(Rect { x1, y1, x2, y2, id })
    }

    pub fn width(&self) -> T {
        self.x2 - self.x1
    }

    pub fn height(&self) -> T {
        self.y2 - self.y1
    }

    /// `h >= w`: the rectangle can be stabbed horizontally at least as
    /// cheaply as vertically.
    pub fn is_tall(&self) -> bool {
        self.height() >= self.width()
    }

    /// Length of the cheapest single segment stabbing this rectangle.
    pub fn min_stab(&self) -> T {
        self.width().min(self.height())
    }

    /// Mirror across the diagonal `x = y`.
    pub fn transpose(&self) -> Self {
        Rect {
            x1: self.y1,
            y1: self.x1,
            x2: self.y2,
            y2: self.x2,
            id: self.id,
        }
    }

    /// Closed containment of `other` in `self`.
    pub fn contains(&self, other: &Rect<T>) -> bool {
        self.x1 <= other.x1 && other.x2 <= self.x2 && self.y1 <= other.y1 && other.y2 <= self.y2
    }

    /// `other` lies in the open interior of `self`.
    pub fn strictly_contains(&self, other: &Rect<T>) -> bool {
        self.x1 < other.x1 && other.x2 < self.x2 && self.y1 < other.y1 && other.y2 < self.y2
    }

    /// Range of the rectangle along the axis a segment of `orientation`
    /// spans (x for horizontal segments).
    pub fn span_range(&self, orientation: Orientation) -> (T, T) {
        match orientation {
            Orientation::Horizontal => (self.x1, self.x2),
            Orientation::Vertical => (self.y1, self.y2),
        }
    }

    /// Range of the rectangle along the axis a segment of `orientation` is
    /// anchored on (y for horizontal segments).
    pub fn anchor_range(&self, orientation: Orientation) -> (T, T) {
        self.span_range(orientation.flip())
    }

    /// Minimal segment of `orientation` stabbing this rectangle, anchored on
    /// its low edge.
    pub fn minimal_stab(&self, orientation: Orientation) -> Segment<T> {
        let (lo, hi) = self.span_range(orientation);
        let (anchor, _) = self.anchor_range(orientation);
        Segment {
            orientation,
            anchor,
            lo,
            hi,
        }
    }

    /// The cheaper of the two minimal stabs; horizontal on ties.
    pub fn cheapest_stab(&self) -> Segment<T> {
        if self.width() <= self.height() {
            self.minimal_stab(Orientation::Horizontal)
        } else {
            self.minimal_stab(Orientation::Vertical)
        }
    }
}

impl<T: fmt::Display> fmt::Display for Rect<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#{} [{}, {}]x[{}, {}]",
            self.id, self.x1, self.x2, self.y1, self.y2
        )
    }
}

/// Closed horizontal or vertical segment. For a horizontal segment `anchor`
/// is its y-coordinate and `[lo, hi]` its x-extent; for a vertical one the
/// roles swap.
///
/// The derived order is `(orientation, anchor, lo, hi)`, which is the
/// canonical order used everywhere a set of segments must be normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment<T = Coord> {
    pub orientation: Orientation,
    pub anchor: T,
    pub lo: T,
    pub hi: T,
}

impl<T: Copy + Ord + Sub<Output = T>> Segment<T> {
    pub fn new(orientation: Orientation, anchor: T, lo: T, hi: T) -> Self {
        debug_assert!(lo <= hi);
        Segment {
            orientation,
            anchor,
            lo,
            hi,
        }
    }

    pub fn horizontal(y: T, x_lo: T, x_hi: T) -> Self {
        Self::new(Orientation::Horizontal, y, x_lo, x_hi)
    }

    pub fn vertical(x: T, y_lo: T, y_hi: T) -> Self {
        Self::new(Orientation::Vertical, x, y_lo, y_hi)
    }

    pub fn len(&self) -> T {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_horizontal(&self) -> bool {
        self.orientation == Orientation::Horizontal
    }

    pub fn transpose(&self) -> Self {
        Segment {
            orientation: self.orientation.flip(),
            ..*self
        }
    }

    /// Same line, and `self`'s span contains `other`'s.
    pub fn covers(&self, other: &Segment<T>) -> bool {
        self.orientation == other.orientation
            && self.anchor == other.anchor
            && self.lo <= other.lo
            && other.hi <= self.hi
    }

    /// Closed containment of the segment in `region`.
    pub fn inside(&self, region: &Rect<T>) -> bool {
        let (alo, ahi) = region.anchor_range(self.orientation);
        let (slo, shi) = region.span_range(self.orientation);
        alo <= self.anchor && self.anchor <= ahi && slo <= self.lo && self.hi <= shi
    }
}

impl Segment<Coord> {
    /// The same segment in physical units.
    pub fn to_physical(&self, grid_unit: Rational) -> Segment<Rational> {
        let f = |v: Coord| Rational::from_integer(v as i128) * grid_unit;
        Segment {
            orientation: self.orientation,
            anchor: f(self.anchor),
            lo: f(self.lo),
            hi: f(self.hi),
        }
    }
}

impl Rect<Coord> {
    pub fn to_physical(&self, grid_unit: Rational) -> Rect<Rational> {
        let f = |v: Coord| Rational::from_integer(v as i128) * grid_unit;
        Rect {
            x1: f(self.x1),
            y1: f(self.y1),
            x2: f(self.x2),
            y2: f(self.y2),
            id: self.id,
        }
    }
}

impl<T: fmt::Display> fmt::Display for Segment<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.orientation {
            Orientation::Horizontal => {
                write!(f, "H(y={}, x=[{}, {}])", self.anchor, self.lo, self.hi)
            }
            Orientation::Vertical => {
                write!(f, "V(x={}, y=[{}, {}])", self.anchor, self.lo, self.hi)
            }
        }
    }
}

/// `seg` crosses `r` completely: both vertical edges for a horizontal
/// segment, both horizontal edges for a vertical one. Boundary contact
/// counts.
pub fn stabs<T: Copy + Ord + Sub<Output = T>>(seg: &Segment<T>, r: &Rect<T>) -> bool {
    let (alo, ahi) = r.anchor_range(seg.orientation);
    let (slo, shi) = r.span_range(seg.orientation);
    alo <= seg.anchor && seg.anchor <= ahi && seg.lo <= slo && seg.hi >= shi
}

/// `seg ∩ region`, possibly of zero length, or `None` when they are disjoint.
pub fn clip_segment<T: Copy + Ord + Sub<Output = T>>(
    seg: &Segment<T>,
    region: &Rect<T>,
) -> Option<Segment<T>> {
    let (alo, ahi) = region.anchor_range(seg.orientation);
    if seg.anchor < alo || seg.anchor > ahi {
        return None;
    }
    let (slo, shi) = region.span_range(seg.orientation);
    let lo = seg.lo.max(slo);
    let hi = seg.hi.min(shi);
    (lo <= hi).then_some(Segment { lo, hi, ..*seg })
}

/// Checks `1/eps` is a positive integer.
pub fn check_epsilon(eps: Rational) -> Result<(), GeometryError> {
    if eps > Rational::zero() && eps.recip().is_integer() {
        Ok(())
    } else {
        Err(GeometryError::EpsilonInvalid(eps))
    }
}

/// A set of rectangles on a common integer grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub rects: Vec<Rect>,
    /// Physical length of one coordinate unit.
    pub grid_unit: Rational,
    pub epsilon: Rational,
    /// Bounding box of all rectangles (all zeros for an empty instance).
    pub bounds: Rect,
}

impl Instance {
    /// Builds an instance from `[x1, y1, x2, y2]` corners; ids are assigned
    /// densely in input order.
    pub fn new(
        corners: &[[Coord; 4]],
        grid_unit: Rational,
        epsilon: Rational,
    ) -> Result<Self, GeometryError> {
        if grid_unit <= Rational::zero() {
            return Err(GeometryError::GridUnitInvalid(grid_unit));
        }
        check_epsilon(epsilon)?;
        let mut rects = Vec::with_capacity(corners.len());
        for (id, &[x1, y1, x2, y2]) in corners.iter().enumerate() {
            for v in [x1, y1, x2, y2] {
                if v.abs() > MAX_COORD {
                    return Err(GeometryError::CoordinateRange(v.to_string()));
                }
            }
            let r = Rect::new(id, x1, y1, x2, y2).ok_or(GeometryError::DegenerateRect {
                id,
                x1,
                y1,
                x2,
                y2,
            })?;
            rects.push(r);
        }
        Ok(Self::from_valid_rects(rects, grid_unit, epsilon))
    }

    /// Unit grid, `epsilon = 1/4`.
    pub fn unit(corners: &[[Coord; 4]]) -> Result<Self, GeometryError> {
        Self::new(corners, Rational::one(), Rational::new(1, 4))
    }

    /// Sub-instance over already validated rectangles; ids are reassigned
    /// densely in the given order.
    pub fn from_valid_rects(rects: Vec<Rect>, grid_unit: Rational, epsilon: Rational) -> Self {
        let rects: Vec<Rect> = rects
            .into_iter()
            .enumerate()
            .map(|(id, r)| Rect { id, ..r })
            .collect();
        let bounds = bounding_box(&rects);
        Instance {
            rects,
            grid_unit,
            epsilon,
            bounds,
        }
    }

    /// Sub-instance sharing this instance's grid.
    pub fn subset(&self, rects: Vec<Rect>) -> Instance {
        Self::from_valid_rects(rects, self.grid_unit, self.epsilon)
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    /// Mirror every rectangle across `x = y`.
    pub fn transpose(&self) -> Instance {
        self.subset(self.rects.iter().map(Rect::transpose).collect())
    }

    /// Number of coordinate units in one physical unit, when integral.
    pub fn units_per_length(&self) -> Option<Coord> {
        let inv = self.grid_unit.recip();
        inv.is_integer().then(|| *inv.numer() as Coord)
    }

    /// Physical length of `v` coordinate units.
    pub fn physical(&self, v: Coord) -> Rational {
        Rational::from_integer(v as i128) * self.grid_unit
    }
}

/// Bounding box of `rects`; all zeros when empty.
pub fn bounding_box(rects: &[Rect]) -> Rect {
    let mut it = rects.iter();
    let Some(first) = it.next() else {
        return Rect {
            x1: 0,
            y1: 0,
            x2: 0,
            y2: 0,
            id: 0,
        };
    };
    it.fold(Rect { id: 0, ..*first }, |b, r| Rect {
        x1: b.x1.min(r.x1),
        y1: b.y1.min(r.y1),
        x2: b.x2.max(r.x2),
        y2: b.y2.max(r.y2),
        id: 0,
    })
}

/// A set of stabbing segments with its exact cost in grid units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Solution {
    pub segments: Vec<Segment>,
    pub cost: Coord,
    pub solver_tag: String,
}

impl Solution {
    /// Zero-length segments stab nothing and are dropped; the rest are
    /// sorted and deduplicated.
    pub fn new(segments: impl IntoIterator<Item = Segment>, solver_tag: impl Into<String>) -> Self {
        let mut segments: Vec<Segment> = segments
            .into_iter()
            .filter(|s| !s.is_degenerate())
            .collect();
        segments.sort();
        segments.dedup();
        let cost = segments.iter().map(Segment::len).sum();
        Solution {
            segments,
            cost,
            solver_tag: solver_tag.into(),
        }
    }

    pub fn empty(solver_tag: impl Into<String>) -> Self {
        Self::new([], solver_tag)
    }

    pub fn union(&self, other: &Solution) -> Solution {
        Solution::new(
            self.segments.iter().chain(&other.segments).copied(),
            self.solver_tag.clone(),
        )
    }

    /// Multiset union: a segment appearing in several parts is kept, and
    /// paid for, once per part.
    pub fn concat(parts: &[Solution], solver_tag: impl Into<String>) -> Solution {
        Self::multiset(parts.iter().flat_map(|p| p.segments.iter().copied()), solver_tag)
    }

    /// Like [`Solution::new`] but keeps repeated segments.
    pub fn multiset(segments: impl IntoIterator<Item = Segment>, solver_tag: impl Into<String>) -> Solution {
        let mut segments: Vec<Segment> = segments.into_iter().filter(|s| !s.is_degenerate()).collect();
        segments.sort();
        let cost = segments.iter().map(Segment::len).sum();
        Solution {
            segments,
            cost,
            solver_tag: solver_tag.into(),
        }
    }

    pub fn with_tag(mut self, solver_tag: impl Into<String>) -> Self {
        self.solver_tag = solver_tag.into();
        self
    }

    pub fn transpose(&self) -> Solution {
        Solution::new(
            self.segments.iter().map(Segment::transpose),
            self.solver_tag.clone(),
        )
    }

    pub fn stabs(&self, r: &Rect) -> bool {
        self.segments.iter().any(|s| stabs(s, r))
    }

    pub fn has_vertical(&self) -> bool {
        self.segments.iter().any(|s| !s.is_horizontal())
    }
}

/// Outcome of [`verify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub feasible: bool,
    pub unstabbed: Vec<usize>,
    pub recomputed_cost: Coord,
}

/// Checks that every rectangle of `inst` is stabbed by `sol` and recomputes
/// the cost from the segments.
pub fn verify(inst: &Instance, sol: &Solution) -> Result<Verdict, GeometryError> {
    if let Some(s) = sol.segments.iter().find(|s| !s.inside(&inst.bounds)) {
        return Err(GeometryError::SegmentOutOfBounds(*s));
    }
    let unstabbed: Vec<usize> = inst
        .rects
        .iter()
        .filter(|r| !sol.stabs(r))
        .map(|r| r.id)
        .collect();
    Ok(Verdict {
        feasible: unstabbed.is_empty(),
        unstabbed,
        recomputed_cost: sol.segments.iter().map(Segment::len).sum(),
    })
}

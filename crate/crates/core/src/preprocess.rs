//! Instance normalization and the matching inverse map for solutions.
//!
//! [`normalize_tall`] turns an instance of tall rectangles into independent
//! parts whose widths lie in `[eps/n, 1]`, whose coordinates are multiples
//! of `eps/n` with `x` in `[0, n]` and `y` in `[0, 4n^2]`. It splits at
//! uncovered x-coordinates, scales so the widest rectangle has width
//! `1 - 2 eps`, stabs very thin rectangles directly, snaps outward to the
//! grid, and shrinks large empty horizontal bands. [`normalize_general`]
//! does the same for rectangles with both sides at most one, in both axes
//! and without scaling.
//!
//! Each part comes with a [`NormalizationRecord`]; [`denormalize`] maps a
//! solution of the part back onto the original rectangles.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::geometry::{
    bounding_box, check_epsilon, stabs, Coord, GeometryError, Instance, Orientation, Rect, Segment, Solution,
};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreprocessError {
    #[error("epsilon {0} must lie in (0, 1/3) with 1/epsilon a natural number")]
    EpsilonInvalid(Rational),
    #[error("rectangle {0} is wider than it is tall")]
    OrientationViolation(usize),
    #[error("rectangle {0} has a side longer than one unit")]
    SideTooLong(usize),
    #[error("segment {0} lies outside the normalized bounds")]
    RecordMismatch(Segment),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One shrunken horizontal band, in normalized grid units measured before
/// any band was shrunk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GapCompression {
    pub original_gap_lo: Coord,
    pub original_gap_hi: Coord,
    pub compressed_len: Coord,
}

/// How one normalized part relates to the original instance.
///
/// A normalized coordinate `v` sits at physical position
/// `shift + v * grid_unit / scale` of the original (after undoing band
/// compression for `y`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizationRecord {
    pub scale_x: Rational,
    pub scale_y: Rational,
    pub x_shift: Rational,
    pub y_shift: Rational,
    /// Physical length of one normalized coordinate unit, `eps/n`.
    pub grid_unit: Rational,
    pub original_grid_unit: Rational,
    pub y_gap_compressions: Vec<GapCompression>,
    /// Rectangles too thin to keep, in original coordinates.
    pub dropped_thin_rects: Vec<Rect>,
    /// Cost, in original grid units, of stabbing the thin rectangles with
    /// one minimal horizontal segment each.
    pub greedy_thin_cost: Coord,
    /// Original rectangle behind each normalized rectangle id.
    pub original_rects: Vec<Rect>,
    pub normalized_rects: Vec<Rect>,
    pub normalized_bounds: Rect,
    pub original_bounds: Rect,
}

impl NormalizationRecord {
    pub fn identity(inst: &Instance) -> Self {
        NormalizationRecord {
            scale_x: Rational::one(),
            scale_y: Rational::one(),
            x_shift: Rational::zero(),
            y_shift: Rational::zero(),
            grid_unit: inst.grid_unit,
            original_grid_unit: inst.grid_unit,
            y_gap_compressions: Vec::new(),
            dropped_thin_rects: Vec::new(),
            greedy_thin_cost: 0,
            original_rects: inst.rects.clone(),
            normalized_rects: inst.rects.clone(),
            normalized_bounds: inst.bounds,
            original_bounds: inst.bounds,
        }
    }

    /// Original coordinate (in original grid units) of normalized `x`.
    fn x_back(&self, v: Coord) -> Rational {
        (self.x_shift + int(v) * self.grid_unit / self.scale_x) / self.original_grid_unit
    }

    fn y_back(&self, v: Coord) -> Rational {
        (self.y_shift + self.uncompress(v) * self.grid_unit / self.scale_y) / self.original_grid_unit
    }

    /// Normalized `y` before band compression.
    fn uncompress(&self, v: Coord) -> Rational {
        let mut removed: Coord = 0;
        for g in &self.y_gap_compressions {
            let lo = g.original_gap_lo - removed;
            if v <= lo {
                break;
            }
            if v < lo + g.compressed_len {
                let full = g.original_gap_hi - g.original_gap_lo;
                return int(g.original_gap_lo) + int(v - lo) * Rational::new(full as i128, g.compressed_len as i128);
            }
            removed += g.original_gap_hi - g.original_gap_lo - g.compressed_len;
        }
        int(v + removed)
    }
}

fn int(v: Coord) -> Rational {
    Rational::from_integer(v as i128)
}

fn floor(v: Rational) -> Coord {
    v.floor().to_integer() as Coord
}

fn ceil(v: Rational) -> Coord {
    v.ceil().to_integer() as Coord
}

fn check_eps(eps: Rational) -> Result<(), PreprocessError> {
    if check_epsilon(eps).is_err() || eps >= Rational::new(1, 3) {
        return Err(PreprocessError::EpsilonInvalid(eps));
    }
    Ok(())
}

/// Groups rectangles whose closed x-projections chain together; parts are
/// ordered left to right and keep the input order inside.
pub fn x_components(rects: &[Rect]) -> Vec<Vec<Rect>> {
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by_key(|&i| (rects[i].x1, i));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut reach = Coord::MIN;
    for i in order {
        if groups.is_empty() || rects[i].x1 > reach {
            groups.push(Vec::new());
            reach = rects[i].x2;
        }
        reach = reach.max(rects[i].x2);
        groups.last_mut().expect("pushed").push(i);
    }
    groups
        .into_iter()
        .map(|mut g| {
            g.sort_unstable();
            g.into_iter().map(|i| rects[i]).collect()
        })
        .collect()
}

fn y_components(rects: &[Rect]) -> Vec<Vec<Rect>> {
    let t: Vec<Rect> = rects.iter().map(Rect::transpose).collect();
    x_components(&t)
        .into_iter()
        .map(|g| g.iter().map(Rect::transpose).collect())
        .collect()
}

/// Normalization of an instance of tall rectangles; one entry per
/// independent part.
pub fn normalize_tall(inst: &Instance, eps: Rational) -> Result<Vec<(Instance, NormalizationRecord)>, PreprocessError> {
    check_eps(eps)?;
    if let Some(r) = inst.rects.iter().find(|r| !r.is_tall()) {
        return Err(PreprocessError::OrientationViolation(r.id));
    }
    if inst.is_empty() {
        return Ok(Vec::new());
    }
    if is_tall_normalized(inst, eps) {
        return Ok(vec![(inst.clone(), NormalizationRecord::identity(inst))]);
    }
    let u = inst.grid_unit;
    let mut parts = Vec::new();
    for comp in x_components(&inst.rects) {
        let n = comp.len() as i128;
        let widest = comp.iter().map(|r| r.width()).max().expect("nonempty");
        let scale = (Rational::one() - eps * 2) / (int(widest) * u);
        let thin_bar = eps / Rational::from_integer(n);
        let (thin, kept): (Vec<Rect>, Vec<Rect>) =
            comp.iter().partition(|r| int(r.width()) * u * scale < thin_bar);
        let thin_stabs = Solution::new(thin.iter().map(|r| r.minimal_stab(Orientation::Horizontal)), "thin");
        let mut first = true;
        for sub in x_components(&kept) {
            let mut rec = scale_and_snap(&sub, u, eps, scale, true);
            compress_bands(&mut rec);
            if first {
                rec.dropped_thin_rects = thin.clone();
                rec.greedy_thin_cost = thin_stabs.cost;
                first = false;
            }
            rec.original_bounds = inst.bounds;
            let part = Instance::from_valid_rects(rec.normalized_rects.clone(), rec.grid_unit, eps);
            rec.normalized_rects = part.rects.clone();
            rec.normalized_bounds = part.bounds;
            parts.push((part, rec));
        }
    }
    Ok(parts)
}

/// Shifts the part's lower-left corner to the origin, scales, and snaps
/// outward to multiples of `eps/n`. With `keep_tall`, heights are padded
/// so no rectangle becomes wider than tall.
fn scale_and_snap(rects: &[Rect], u: Rational, eps: Rational, scale: Rational, keep_tall: bool) -> NormalizationRecord {
    let n = rects.len() as i128;
    let g = eps / Rational::from_integer(n);
    let bb = bounding_box(rects);
    let x_shift = int(bb.x1) * u;
    let y_shift = int(bb.y1) * u;
    let to_x = |v: Coord| (int(v) * u - x_shift) * scale / g;
    let to_y = |v: Coord| (int(v) * u - y_shift) * scale / g;
    let normalized: Vec<Rect> = rects
        .iter()
        .enumerate()
        .map(|(id, r)| {
            let x1 = floor(to_x(r.x1));
            let x2 = ceil(to_x(r.x2));
            let y1 = floor(to_y(r.y1));
            let mut y2 = ceil(to_y(r.y2));
            if keep_tall && y2 - y1 < x2 - x1 {
                y2 = y1 + (x2 - x1);
            }
            Rect { x1, y1, x2, y2, id }
        })
        .collect();
    NormalizationRecord {
        scale_x: scale,
        scale_y: scale,
        x_shift,
        y_shift,
        grid_unit: g,
        original_grid_unit: u,
        y_gap_compressions: Vec::new(),
        dropped_thin_rects: Vec::new(),
        greedy_thin_cost: 0,
        original_rects: rects.to_vec(),
        normalized_bounds: bounding_box(&normalized),
        normalized_rects: normalized,
        original_bounds: bounding_box(rects),
    }
}

/// Empty bands between consecutive distinct y-coordinates taller than
/// `2n` shrink to the largest multiple of `eps/n` below `2n`.
fn compress_bands(rec: &mut NormalizationRecord) {
    let n = rec.normalized_rects.len() as i128;
    let limit = Rational::from_integer(2 * n) / rec.grid_unit;
    debug_assert!(limit.is_integer());
    let limit = limit.to_integer() as Coord;
    let mut ys: Vec<Coord> = rec.normalized_rects.iter().flat_map(|r| [r.y1, r.y2]).collect();
    ys.sort_unstable();
    ys.dedup();
    let gaps: Vec<GapCompression> = ys
        .windows(2)
        .filter(|w| w[1] - w[0] > limit)
        .map(|w| GapCompression {
            original_gap_lo: w[0],
            original_gap_hi: w[1],
            compressed_len: limit - 1,
        })
        .collect();
    if gaps.is_empty() {
        return;
    }
    let squeeze = |v: Coord| {
        v - gaps
            .iter()
            .filter(|g| g.original_gap_hi <= v)
            .map(|g| g.original_gap_hi - g.original_gap_lo - g.compressed_len)
            .sum::<Coord>()
    };
    for r in &mut rec.normalized_rects {
        r.y1 = squeeze(r.y1);
        r.y2 = squeeze(r.y2);
    }
    rec.normalized_bounds = bounding_box(&rec.normalized_rects);
    rec.y_gap_compressions = gaps;
}

fn is_tall_normalized(inst: &Instance, eps: Rational) -> bool {
    let n = inst.len() as i128;
    let b = inst.bounds;
    let limit = int(1) / inst.grid_unit;
    let band = Rational::from_integer(2 * n) / inst.grid_unit;
    let mut ys: Vec<Coord> = inst.rects.iter().flat_map(|r| [r.y1, r.y2]).collect();
    ys.sort_unstable();
    ys.dedup();
    inst.grid_unit == eps / Rational::from_integer(n)
        && x_components(&inst.rects).len() == 1
        && b.x1 == 0
        && b.y1 == 0
        && inst.physical(b.x2) <= Rational::from_integer(n)
        && inst.physical(b.y2) <= Rational::from_integer(4 * n * n)
        && inst.rects.iter().all(|r| int(r.width()) <= limit)
        && ys.windows(2).all(|w| int(w[1] - w[0]) <= band)
}

/// Normalization for rectangles with both sides at most one physical
/// unit: split in both axes, then snap outward to multiples of `eps/n`.
pub fn normalize_general(inst: &Instance, eps: Rational) -> Result<Vec<(Instance, NormalizationRecord)>, PreprocessError> {
    check_eps(eps)?;
    if inst.is_empty() {
        return Ok(Vec::new());
    }
    if is_general_normalized(inst, eps) {
        return Ok(vec![(inst.clone(), NormalizationRecord::identity(inst))]);
    }
    let u = inst.grid_unit;
    if let Some(r) = inst
        .rects
        .iter()
        .find(|r| int(r.width().max(r.height())) * u > Rational::one())
    {
        return Err(PreprocessError::SideTooLong(r.id));
    }
    let mut parts = Vec::new();
    for group in split_both_axes(&inst.rects) {
        let mut rec = scale_and_snap(&group, u, eps, Rational::one(), false);
        rec.original_bounds = inst.bounds;
        let part = Instance::from_valid_rects(rec.normalized_rects.clone(), rec.grid_unit, eps);
        rec.normalized_rects = part.rects.clone();
        rec.normalized_bounds = part.bounds;
        parts.push((part, rec));
    }
    Ok(parts)
}

/// Repeatedly splits at uncovered x- and y-coordinates until every group
/// is connected in both projections.
fn split_both_axes(rects: &[Rect]) -> Vec<Vec<Rect>> {
    let mut done = Vec::new();
    let mut todo = vec![rects.to_vec()];
    while let Some(group) = todo.pop() {
        let xs = x_components(&group);
        if xs.len() > 1 {
            todo.extend(xs.into_iter().rev());
            continue;
        }
        let ys = y_components(&group);
        if ys.len() > 1 {
            todo.extend(ys.into_iter().rev());
            continue;
        }
        done.push(group);
    }
    done
}

fn is_general_normalized(inst: &Instance, eps: Rational) -> bool {
    let n = inst.len() as i128;
    let b = inst.bounds;
    inst.grid_unit == eps / Rational::from_integer(n)
        && split_both_axes(&inst.rects).len() == 1
        && b.x1 == 0
        && b.y1 == 0
        && inst.physical(b.x2) <= Rational::from_integer(n)
        && inst.physical(b.y2) <= Rational::from_integer(n)
}

/// Maps a solution of a normalized part back to the original instance and
/// adds the thin-rectangle stabs.
///
/// A mapped segment that still stabs every original rectangle its
/// normalized version stabbed is kept as is. Otherwise outward snapping
/// moved some rectangle off its anchor, and the segment is replaced by one
/// segment per group of those rectangles sharing an anchor.
pub fn denormalize(sol: &Solution, rec: &NormalizationRecord) -> Result<Solution, PreprocessError> {
    let mut out = Vec::new();
    for s in &sol.segments {
        if !s.inside(&rec.normalized_bounds) {
            return Err(PreprocessError::RecordMismatch(*s));
        }
        let hit: Vec<Rect> = rec
            .normalized_rects
            .iter()
            .filter(|r| stabs(s, r))
            .map(|r| rec.original_rects[r.id])
            .collect();
        if hit.is_empty() {
            continue;
        }
        let (anchor, lo, hi) = match s.orientation {
            Orientation::Horizontal => (rec.y_back(s.anchor), rec.x_back(s.lo), rec.x_back(s.hi)),
            Orientation::Vertical => (rec.x_back(s.anchor), rec.y_back(s.lo), rec.y_back(s.hi)),
        };
        let (blo, bhi) = rec.original_bounds.span_range(s.orientation);
        let mapped = Segment {
            orientation: s.orientation,
            anchor: floor(anchor),
            lo: floor(lo).max(blo),
            hi: ceil(hi).min(bhi),
        };
        if anchor.is_integer() && hit.iter().all(|r| stabs(&mapped, r)) {
            out.push(mapped);
        } else {
            out.extend(regroup(s.orientation, &hit));
        }
    }
    let mapped = Solution::new(out, sol.solver_tag.clone());
    let thin = Solution::new(
        rec.dropped_thin_rects.iter().map(|r| r.minimal_stab(Orientation::Horizontal)),
        "thin",
    );
    Ok(Solution::concat(&[mapped, thin], sol.solver_tag.clone()))
}

/// Fewest anchors meeting every rectangle's anchor range, one segment per
/// anchor spanning the rectangles assigned to it.
fn regroup(orientation: Orientation, rects: &[Rect]) -> Vec<Segment> {
    let mut order: Vec<&Rect> = rects.iter().collect();
    order.sort_by_key(|r| (r.anchor_range(orientation).1, r.id));
    let mut done = vec![false; order.len()];
    let mut out = Vec::new();
    for i in 0..order.len() {
        if done[i] {
            continue;
        }
        let anchor = order[i].anchor_range(orientation).1;
        let (mut lo, mut hi) = (Coord::MAX, Coord::MIN);
        for j in i..order.len() {
            let (alo, ahi) = order[j].anchor_range(orientation);
            if !done[j] && alo <= anchor && anchor <= ahi {
                done[j] = true;
                let (slo, shi) = order[j].span_range(orientation);
                lo = lo.min(slo);
                hi = hi.max(shi);
            }
        }
        out.push(Segment::new(orientation, anchor, lo, hi));
    }
    out
}

/// Normalizes, solves every part with `solve`, and maps the union back.
pub fn solve_normalized<E>(
    parts: &[(Instance, NormalizationRecord)],
    tag: &str,
    mut solve: impl FnMut(&Instance) -> Result<Solution, E>,
) -> Result<Solution, E>
where
    E: From<PreprocessError>,
{
    let mut mapped = Vec::with_capacity(parts.len());
    for (part, rec) in parts {
        let sol = solve(part)?;
        mapped.push(denormalize(&sol, rec)?);
    }
    Ok(Solution::concat(&mapped, tag))
}

/// Cuts every segment longer than `extent / eps` into pieces of length
/// `(1/eps - 2) * extent`, each extended by `extent` past its right end
/// (never beyond the original end). Every rectangle of extent at most
/// `extent` along the segment that the original stabbed is stabbed by the
/// piece in which its left edge starts.
pub fn split_long_segments(sol: &Solution, eps: Rational, max_rect_extent: Coord) -> Solution {
    let inv = eps.recip().to_integer() as Coord;
    if inv < 2 || max_rect_extent <= 0 {
        return sol.clone();
    }
    let limit = inv * max_rect_extent;
    let step = (inv - 2).max(1) * max_rect_extent;
    let mut out = Vec::new();
    for s in &sol.segments {
        if s.len() <= limit {
            out.push(*s);
            continue;
        }
        let mut start = s.lo;
        while start < s.hi {
            let end = (start + step + max_rect_extent).min(s.hi);
            out.push(Segment { lo: start, hi: end, ..*s });
            if end == s.hi {
                break;
            }
            start += step;
        }
    }
    Solution::multiset(out, sol.solver_tag.clone())
}

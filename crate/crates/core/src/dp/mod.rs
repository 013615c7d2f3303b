//! Dynamic program over cells with trivial, add and line operations, and
//! the reductions built on it: horizontal-only stabbing by vertical
//! stretching, and general rectangles by splitting on orientation.
//!
//! A cell is a region of the plane, the rectangles inside it that are still
//! unstabbed, and the segments already bought that reach into it. From a
//! cell the solver either
//!
//! * splits it along a carried segment spanning the whole region
//!   (mandatory when available, and then the only move),
//! * buys up to `add_arity_cap` more segments, one of which stabs the most
//!   constrained remaining rectangle, or
//! * cuts it with a full vertical or horizontal line, pays a greedy cover
//!   for the rectangles the line meets, and solves both sides.
//!
//! Cells are memoized top-down and the search is pruned against the greedy
//! solution, so the result never costs more than greedy.

mod cell;

use std::collections::BTreeMap;
use std::env;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::baseline::{greedy, greedy_cover};
use crate::candidates::{all_grid_lines_in, canonical_candidates, GridSpec};
use crate::geometry::{verify, Coord, Instance, Rect, Segment, Solution, MAX_COORD};
use crate::mask::MAX_MASK_RECTS;
use crate::Rational;

pub use cell::CellKey;
use cell::Engine;

pub const DP_TAG: &str = "dp";
pub const STABBING_TAG: &str = "stabbing";
pub const HV_2EPS_TAG: &str = "dp2eps";

/// Environment variable overriding [`DpConfig::memo_capacity`].
pub const MEMO_CAP_ENV: &str = "STABKIT_MEMO_CAP";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DpError {
    #[error("rectangle {0} is wider than it is tall")]
    OrientationViolation(usize),
    #[error("{0} rectangles exceed the solver limit of {MAX_MASK_RECTS}")]
    TooManyRects(usize),
    #[error("memo table exceeded its capacity of {capacity} cells")]
    MemoOverflow { capacity: usize, stats: DpStats },
    #[error("horizontal-only solve produced a vertical segment")]
    VerticalLeak,
    #[error("stretched coordinates exceed the supported range")]
    CoordinateOverflow,
    #[error("internal error: rectangles {0:?} left unstabbed")]
    Infeasible(Vec<usize>),
}

/// Where the line operation looks for vertical lines. Horizontal lines are
/// always taken at rectangle y-edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineSource {
    /// Hierarchical grid lines of every level with spacing at least one
    /// coordinate unit.
    Grid,
    /// Rectangle x-edges.
    RectEdges,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffsetPolicy {
    /// Try every grid offset in `0..eps^-2` and keep the cheapest result.
    EnumerateAll,
    Fixed(i64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DpConfig {
    pub eps: Rational,
    pub add_arity_cap: usize,
    pub line_candidate_source: LineSource,
    pub memo_capacity: usize,
    pub offset_policy: OffsetPolicy,
}

impl DpConfig {
    pub fn new(eps: Rational) -> Self {
        DpConfig {
            eps,
            add_arity_cap: 2,
            line_candidate_source: LineSource::Both,
            memo_capacity: 1 << 20,
            offset_policy: OffsetPolicy::EnumerateAll,
        }
    }

    /// Applies `STABKIT_MEMO_CAP` when it is set to a number.
    pub fn with_env_overrides(mut self) -> Self {
        if let Some(cap) = env::var(MEMO_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            self.memo_capacity = cap;
        }
        self
    }

    pub fn with_offset(mut self, policy: OffsetPolicy) -> Self {
        self.offset_policy = policy;
        self
    }

    pub fn with_arity(mut self, cap: usize) -> Self {
        assert!(cap >= 1);
        self.add_arity_cap = cap;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DpStats {
    pub cells_expanded: u64,
    pub memo_hits: u64,
    pub trivial_ops: u64,
    pub add_ops: u64,
    pub line_ops: u64,
    /// Add operations skipped because the carried set would exceed
    /// `3/eps^3`.
    pub cap_prunes: u64,
    /// Distinct grid offsets actually searched.
    pub offsets_run: u64,
    pub best_offset: i64,
}

impl DpStats {
    fn absorb(&mut self, other: &DpStats) {
        self.cells_expanded += other.cells_expanded;
        self.memo_hits += other.memo_hits;
        self.trivial_ops += other.trivial_ops;
        self.add_ops += other.add_ops;
        self.line_ops += other.line_ops;
        self.cap_prunes += other.cap_prunes;
        self.offsets_run += other.offsets_run;
    }
}

/// Solves an instance whose rectangles all satisfy `h >= w`.
pub fn solve_hv_tall(inst: &Instance, cfg: &DpConfig) -> Result<(Solution, DpStats), DpError> {
    if let Some(r) = inst.rects.iter().find(|r| !r.is_tall()) {
        return Err(DpError::OrientationViolation(r.id));
    }
    let incumbent = greedy(inst);
    solve_with_incumbent(inst, cfg, incumbent)
}

/// The DP started from a known feasible solution; never returns anything
/// more expensive.
fn solve_with_incumbent(
    inst: &Instance,
    cfg: &DpConfig,
    incumbent: Solution,
) -> Result<(Solution, DpStats), DpError> {
    if inst.len() > MAX_MASK_RECTS {
        return Err(DpError::TooManyRects(inst.len()));
    }
    if inst.is_empty() {
        return Ok((Solution::empty(DP_TAG), DpStats::default()));
    }
    let offsets: Vec<i64> = match cfg.offset_policy {
        OffsetPolicy::Fixed(a) => vec![a],
        OffsetPolicy::EnumerateAll => (0..GridSpec::offset_period(cfg.eps)).collect(),
    };
    // Offsets producing the same line set give the same search.
    let mut distinct: BTreeMap<Vec<Coord>, i64> = BTreeMap::new();
    for a in offsets {
        distinct.entry(vertical_lines(inst, cfg, a)).or_insert(a);
    }
    let mut runs: Vec<(i64, Vec<Coord>)> = distinct.into_iter().map(|(l, a)| (a, l)).collect();
    runs.sort();
    let results: Vec<Result<(Solution, DpStats), DpError>> = runs
        .into_par_iter()
        .map(|(a, lines)| run_offset(inst, cfg, &incumbent, a, lines))
        .collect();
    let mut stats = DpStats::default();
    let mut best: Option<Solution> = None;
    for r in results {
        let (sol, s) = r?;
        stats.absorb(&s);
        if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
            stats.best_offset = s.best_offset;
            best = Some(sol);
        }
    }
    let sol = best.expect("at least one offset");
    let verdict = verify(inst, &sol).map_err(|_| DpError::Infeasible(vec![]))?;
    if !verdict.feasible {
        return Err(DpError::Infeasible(verdict.unstabbed));
    }
    Ok((sol, stats))
}

fn run_offset(
    inst: &Instance,
    cfg: &DpConfig,
    incumbent: &Solution,
    offset: i64,
    lines: Vec<Coord>,
) -> Result<(Solution, DpStats), DpError> {
    let mut engine = Engine::new(inst, cfg, lines);
    let root = engine.root();
    let found = engine.value(&root, incumbent.cost + 1)?;
    let sol = match found {
        Some(_) => {
            let mut segs = Vec::new();
            engine.reconstruct(&root, &mut segs);
            Solution::new(segs, DP_TAG)
        }
        None => incumbent.clone().with_tag(DP_TAG),
    };
    let mut stats = engine.stats;
    stats.offsets_run = 1;
    stats.best_offset = offset;
    Ok((sol, stats))
}

/// Candidate x-coordinates for vertical cut lines at grid offset `offset`.
pub fn vertical_lines(inst: &Instance, cfg: &DpConfig, offset: i64) -> Vec<Coord> {
    let b = inst.bounds;
    let mut lines = Vec::new();
    if matches!(cfg.line_candidate_source, LineSource::Grid | LineSource::Both) {
        let grid = GridSpec::new(cfg.eps, offset, inst.grid_unit);
        let region = Rect { x1: b.x1 - 1, x2: b.x2 + 1, ..b };
        lines.extend(all_grid_lines_in(&region, &grid));
    }
    if matches!(cfg.line_candidate_source, LineSource::RectEdges | LineSource::Both) {
        lines.extend(inst.rects.iter().flat_map(|r| [r.x1, r.x2]));
    }
    lines.sort_unstable();
    lines.dedup();
    lines
}

/// Horizontal-only stabbing. Every rectangle is stretched vertically until
/// any vertical stab costs more than a known horizontal solution, so the
/// DP never picks one.
pub fn solve_stabbing(inst: &Instance, cfg: &DpConfig) -> Result<Solution, DpError> {
    if inst.is_empty() {
        return Ok(Solution::empty(STABBING_TAG));
    }
    let horizontal = canonical_candidates(inst).filter(Segment::is_horizontal);
    let base = greedy_cover(inst, &horizontal).expect("every rectangle has a horizontal stab");
    let bar = base.cost + 1;
    let factor = inst
        .rects
        .iter()
        .map(|r| {
            let need = bar.max(r.width());
            (need + r.height() - 1) / r.height()
        })
        .max()
        .unwrap_or(1)
        .max(1);
    let stretch = |v: Coord| {
        v.checked_mul(factor)
            .filter(|s| s.abs() <= MAX_COORD)
            .ok_or(DpError::CoordinateOverflow)
    };
    let mut rects = Vec::with_capacity(inst.len());
    for r in &inst.rects {
        rects.push(Rect {
            y1: stretch(r.y1)?,
            y2: stretch(r.y2)?,
            ..*r
        });
    }
    let tall = inst.subset(rects);
    let mut incumbent_segs = Vec::with_capacity(base.segments.len());
    for s in &base.segments {
        incumbent_segs.push(Segment {
            anchor: stretch(s.anchor)?,
            ..*s
        });
    }
    let incumbent = Solution::new(incumbent_segs, DP_TAG);
    let (sol, _) = solve_with_incumbent(&tall, cfg, incumbent)?;
    if sol.has_vertical() {
        return Err(DpError::VerticalLeak);
    }
    let back = sol.segments.iter().map(|s| {
        debug_assert_eq!(s.anchor % factor, 0);
        Segment {
            anchor: s.anchor / factor,
            ..*s
        }
    });
    Ok(Solution::new(back, STABBING_TAG))
}

/// Rectangles with `h >= w`, and the others mirrored across `x = y` so
/// they are tall too.
pub fn split_by_orientation(inst: &Instance) -> (Instance, Instance) {
    let (tall, wide): (Vec<Rect>, Vec<Rect>) = inst.rects.iter().partition(|r| r.is_tall());
    let wide = wide.iter().map(Rect::transpose).collect();
    (inst.subset(tall), inst.subset(wide))
}

/// General rectangles: solves the tall part and the mirrored wide part
/// separately and pays for both.
pub fn solve_hv_2eps(inst: &Instance, cfg: &DpConfig) -> Result<Solution, DpError> {
    let (tall, wide) = split_by_orientation(inst);
    let (a, _) = solve_hv_tall(&tall, cfg)?;
    let (b, _) = solve_hv_tall(&wide, cfg)?;
    Ok(Solution::concat(&[a, b.transpose()], HV_2EPS_TAG))
}

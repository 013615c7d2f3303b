//! Rectangles with both sides at most one and the longer side at least
//! `delta`.
//!
//! The instance is normalized, cut by vertical strip lines every `eps^-2`
//! units (rectangles on a line are stabbed greedily), and each strip is cut
//! by horizontal segments into cells whose greedy cost stays below a cap.
//! Inside a cell the segments of length at least `delta` are guessed; what
//! is left has its short side below `delta`, splits into a tall and a wide
//! part, and goes to the dynamic program.

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::baseline::{greedy, stab_line_rects};
use crate::candidates::{canonical_candidates, Candidate, CandidateSet};
use crate::dp::{solve_hv_tall, split_by_orientation, DpConfig, DpError};
use crate::geometry::{stabs, verify, Coord, Instance, Orientation, Rect, Segment, Solution};
use crate::preprocess::{normalize_general, solve_normalized, PreprocessError};
use crate::Rational;

pub const DELTA_TAG: &str = "delta";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeltaError {
    #[error("rectangle {0} is not delta-large")]
    NotDeltaLarge(usize),
    #[error("{count} long-segment guesses exceed the budget of {budget}")]
    GuessSpaceExceeded { count: u128, budget: usize },
    #[error("rectangle {0} left for the short phase has both sides at least delta")]
    ShortSideViolated(usize),
    #[error("internal error: rectangles {0:?} left unstabbed")]
    Infeasible(Vec<usize>),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Dp(#[from] DpError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaConfig {
    pub delta: Rational,
    pub eps: Rational,
    /// Largest number of long segments guessed per cell.
    pub guess_size_cap: usize,
    /// Greedy cost, in physical units, at which the sweep closes a cell.
    pub cost_cap: Rational,
    /// Most guesses enumerated per cell before falling back to greedy.
    pub node_budget: usize,
    pub dp: DpConfig,
}

impl DeltaConfig {
    pub fn new(delta: Rational, eps: Rational) -> Self {
        DeltaConfig {
            delta,
            eps,
            guess_size_cap: 4,
            cost_cap: eps.recip().pow(3),
            node_budget: 20_000,
            dp: DpConfig::new(eps),
        }
    }
}

/// Rectangular cells holding independent subproblems, plus the segments
/// paid for rectangles on cell boundaries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellDecomposition {
    pub cells: Vec<Rect>,
    /// Ids of the rectangles inside each cell.
    pub members: Vec<Vec<usize>>,
    pub boundary_segments: Solution,
    /// Greedy cost of each cell's rectangles.
    pub per_cell_baseline_cost: Vec<Coord>,
    /// For cells closed by a sweep cut, the greedy cost that would have
    /// resulted from extending the cell up to and including the cut.
    pub close_costs: Vec<Option<Coord>>,
}

impl CellDecomposition {
    fn push(&mut self, region: Rect, members: Vec<usize>, baseline: Coord, close: Option<Coord>) {
        self.cells.push(region);
        self.members.push(members);
        self.per_cell_baseline_cost.push(baseline);
        self.close_costs.push(close);
    }

    fn absorb(&mut self, other: CellDecomposition) {
        self.cells.extend(other.cells);
        self.members.extend(other.members);
        self.per_cell_baseline_cost.extend(other.per_cell_baseline_cost);
        self.close_costs.extend(other.close_costs);
        self.boundary_segments = self.boundary_segments.union(&other.boundary_segments);
    }

    /// Every rectangle is stabbed by the boundary segments or lies inside
    /// exactly one cell, and no rectangle inside a cell meets another cell.
    pub fn is_sound(&self, inst: &Instance) -> bool {
        let mut owner = vec![0usize; inst.len()];
        for (cell, members) in self.cells.iter().zip(&self.members) {
            for &i in members {
                if !cell.strictly_contains(&inst.rects[i]) {
                    return false;
                }
                owner[i] += 1;
            }
        }
        inst.rects.iter().all(|r| {
            let inside = self
                .cells
                .iter()
                .filter(|c| overlaps_open(c, r))
                .count();
            (owner[r.id] == 1 && inside == 1) || (owner[r.id] == 0 && self.boundary_segments.stabs(r))
        })
    }

    pub fn total_baseline(&self) -> Coord {
        self.boundary_segments.cost + self.per_cell_baseline_cost.iter().sum::<Coord>()
    }
}

/// The closed rectangle meets the open cell.
fn overlaps_open(cell: &Rect, r: &Rect) -> bool {
    r.x1 < cell.x2 && cell.x1 < r.x2 && r.y1 < cell.y2 && cell.y1 < r.y2
}

fn physical_to_units(v: Rational, inst: &Instance) -> Rational {
    v / inst.grid_unit
}

/// Splits the instance into vertical strips at `x = offset_a + k * eps^-2`
/// (physical units); rectangles meeting a strip line are stabbed along it.
pub fn strip_partition(inst: &Instance, cfg: &DeltaConfig, offset_a: i64) -> CellDecomposition {
    let mut out = CellDecomposition::default();
    if inst.is_empty() {
        return out;
    }
    let b = inst.bounds;
    let spacing = physical_to_units(cfg.eps.recip().pow(2), inst);
    let origin = physical_to_units(Rational::from_integer(offset_a as i128), inst);
    let line = |k: i128| origin + spacing * Rational::from_integer(k);
    let k_lo = ((Rational::from_integer(b.x1 as i128) - origin) / spacing).floor().to_integer();
    let k_hi = ((Rational::from_integer(b.x2 as i128) - origin) / spacing).ceil().to_integer();
    let mut boundary = Solution::empty("boundary");
    let mut assigned = vec![false; inst.len()];
    let everywhere = Rect {
        x1: b.x1 - 1,
        y1: b.y1 - 1,
        x2: b.x2 + 1,
        y2: b.y2 + 1,
        id: 0,
    };
    for k in k_lo..=k_hi {
        let x = line(k);
        let crossed: Vec<Rect> = inst
            .rects
            .iter()
            .filter(|r| !assigned[r.id] && Rational::from_integer(r.x1 as i128) <= x && x <= Rational::from_integer(r.x2 as i128))
            .copied()
            .collect();
        if crossed.is_empty() {
            continue;
        }
        for r in &crossed {
            assigned[r.id] = true;
        }
        // every crossed rect has integer sides, so the line may be rounded down
        let coord = x.floor().to_integer() as Coord;
        let stab = stab_line_rects(&inst.subset(crossed), Orientation::Vertical, coord, &everywhere);
        boundary = boundary.union(&stab);
    }
    for k in k_lo..k_hi {
        let (lo, hi) = (line(k), line(k + 1));
        let members: Vec<usize> = inst
            .rects
            .iter()
            .filter(|r| !assigned[r.id] && Rational::from_integer(r.x1 as i128) > lo && Rational::from_integer(r.x2 as i128) < hi)
            .map(|r| r.id)
            .collect();
        if members.is_empty() {
            continue;
        }
        let region = Rect {
            x1: lo.floor().to_integer() as Coord,
            x2: hi.ceil().to_integer() as Coord,
            ..everywhere
        };
        let cost = greedy(&subset(inst, &members)).cost;
        out.push(region, members, cost, None);
    }
    out.boundary_segments = boundary.with_tag("boundary");
    out
}

fn subset(inst: &Instance, ids: &[usize]) -> Instance {
    inst.subset(ids.iter().map(|&i| inst.rects[i]).collect())
}

/// Cuts one strip bottom to top. A cell is closed at the lowest rectangle
/// top `y0` for which the greedy cost of everything ending at or below
/// `y0` exceeds the cap; the cell keeps the rectangles ending below `y0`
/// and a horizontal segment across the strip at `y0` stabs those it meets.
pub fn sweep_cells(inst: &Instance, strip: &Rect, members: &[usize], cfg: &DeltaConfig) -> CellDecomposition {
    let cap = physical_to_units(cfg.cost_cap, inst);
    let b = inst.bounds;
    let mut out = CellDecomposition::default();
    let mut cuts = Vec::new();
    let mut active: Vec<usize> = members.to_vec();
    let mut bottom = strip.y1;
    while !active.is_empty() {
        let mut tops: Vec<Coord> = active.iter().map(|&i| inst.rects[i].y2).collect();
        tops.sort_unstable();
        tops.dedup();
        let mut cut = None;
        let mut below_cost = 0;
        for &t in &tops {
            let upto: Vec<usize> = active.iter().copied().filter(|&i| inst.rects[i].y2 <= t).collect();
            let cost = greedy(&subset(inst, &upto)).cost;
            if Rational::from_integer(cost as i128) > cap {
                cut = Some((t, cost));
                break;
            }
            below_cost = cost;
        }
        let Some((y0, close)) = cut else {
            let region = Rect { y1: bottom, ..*strip };
            out.push(region, active.clone(), below_cost, None);
            break;
        };
        let below: Vec<usize> = active.iter().copied().filter(|&i| inst.rects[i].y2 < y0).collect();
        let region = Rect { y1: bottom, y2: y0, ..*strip };
        let baseline = greedy(&subset(inst, &below)).cost;
        if !below.is_empty() {
            out.push(region, below, baseline, Some(close));
        }
        cuts.push(Segment::horizontal(y0, strip.x1.max(b.x1), strip.x2.min(b.x2)));
        active.retain(|&i| inst.rects[i].y1 > y0);
        bottom = y0;
    }
    out.boundary_segments = Solution::new(cuts, "boundary");
    out
}

/// Strips at `offset_a`, each swept into cells.
pub fn decompose(inst: &Instance, cfg: &DeltaConfig, offset_a: i64) -> CellDecomposition {
    let strips = strip_partition(inst, cfg, offset_a);
    let mut out = CellDecomposition {
        boundary_segments: strips.boundary_segments.clone(),
        ..CellDecomposition::default()
    };
    for (region, members) in strips.cells.iter().zip(&strips.members) {
        out.absorb(sweep_cells(inst, region, members, cfg));
    }
    out
}

/// Subsets of the long candidates in the order `(size, cost, segments)`.
pub struct Guesses {
    long: Vec<Segment>,
    max_size: usize,
    size: usize,
    batch: Vec<Vec<usize>>,
    pos: usize,
}

impl Iterator for Guesses {
    type Item = Vec<Segment>;

    fn next(&mut self) -> Option<Vec<Segment>> {
        while self.pos == self.batch.len() {
            if self.size > self.max_size {
                return None;
            }
            self.batch = combinations(self.long.len(), self.size);
            let long = &self.long;
            let cost = |c: &Vec<usize>| c.iter().map(|&i| long[i].len()).sum::<Coord>();
            self.batch.sort_by(|a, b| cost(a).cmp(&cost(b)).then_with(|| a.cmp(b)));
            self.pos = 0;
            self.size += 1;
        }
        let pick = &self.batch[self.pos];
        self.pos += 1;
        Some(pick.iter().map(|&i| self.long[i]).collect())
    }
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

fn binomial(m: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (m as u128 - i) / (i + 1))
}

/// Greedy's guarantee `ln n + 1`, standing in for a constant-factor
/// approximation in the cell-size bounds.
pub fn greedy_factor(n: usize) -> f64 {
    (n.max(1) as f64).ln() + 1.0
}

/// Enumerates hypotheses for the long segments of a cell's optimum: every
/// set of candidates of length at least `delta`, up to the size cap.
pub fn guess_long_segments(cell: &Instance, cfg: &DeltaConfig, cands: &CandidateSet) -> Result<Guesses, DeltaError> {
    let min_len = physical_to_units(cfg.delta, cell);
    let long: Vec<Segment> = cands
        .iter()
        .map(|c: &Candidate| c.segment)
        .filter(|s| Rational::from_integer(s.len() as i128) >= min_len)
        .collect();
    let bound = (greedy_factor(cell.len()) * rational_f64(cfg.cost_cap) / rational_f64(cfg.delta)).ceil();
    let max_size = cfg.guess_size_cap.min(bound as usize).min(long.len());
    let count: u128 = (0..=max_size).map(|k| binomial(long.len(), k)).sum();
    if count > cfg.node_budget as u128 {
        return Err(DeltaError::GuessSpaceExceeded {
            count,
            budget: cfg.node_budget,
        });
    }
    Ok(Guesses {
        long,
        max_size,
        size: 0,
        batch: Vec::new(),
        pos: 0,
    })
}

fn rational_f64(v: Rational) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// Run summary of [`solve_delta_large`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DeltaReport {
    pub offsets: Vec<i64>,
    pub cells: usize,
    pub boundary_cost: Coord,
    pub guesses_tried: u64,
    /// Cells solved greedily because guessing would exceed the budget.
    pub fallbacks: usize,
}

/// Rectangles with both sides at least `delta`.
pub fn big_rects(cell: &Instance, delta: Rational) -> Vec<usize> {
    cell.rects
        .iter()
        .filter(|r| cell.physical(r.min_stab()) >= delta)
        .map(|r| r.id)
        .collect()
}

/// Best solution of one cell over all long-segment guesses.
pub fn solve_cell(cell: &Instance, cfg: &DeltaConfig, report: &mut DeltaReport) -> Result<Solution, DeltaError> {
    let incumbent = greedy(cell);
    if cell.is_empty() {
        return Ok(incumbent);
    }
    let big = big_rects(cell, cfg.delta);
    let cands = canonical_candidates(cell).filter(|s| big.iter().any(|&i| stabs(s, &cell.rects[i])));
    let guesses = match guess_long_segments(cell, cfg, &cands) {
        Ok(g) => g,
        Err(DeltaError::GuessSpaceExceeded { .. }) => {
            report.fallbacks += 1;
            return Ok(incumbent);
        }
        Err(e) => return Err(e),
    };
    let mut best = incumbent;
    for guess in guesses {
        report.guesses_tried += 1;
        let prefix: Coord = guess.iter().map(Segment::len).sum();
        if prefix >= best.cost {
            continue;
        }
        if !big.iter().all(|&i| guess.iter().any(|s| stabs(s, &cell.rects[i]))) {
            continue;
        }
        let sol = complete_guess(cell, cfg, &guess)?;
        if sol.cost < best.cost {
            best = sol;
        }
    }
    Ok(best)
}

/// The guess plus the dynamic program on the rectangles it leaves.
pub fn complete_guess(cell: &Instance, cfg: &DeltaConfig, guess: &[Segment]) -> Result<Solution, DeltaError> {
    let rest: Vec<Rect> = cell
        .rects
        .iter()
        .filter(|r| !guess.iter().any(|s| stabs(s, r)))
        .copied()
        .collect();
    if let Some(r) = rest.iter().find(|r| cell.physical(r.min_stab()) >= cfg.delta) {
        return Err(DeltaError::ShortSideViolated(r.id));
    }
    let (tall, wide) = split_by_orientation(&cell.subset(rest));
    let (a, _) = solve_hv_tall(&tall, &cfg.dp)?;
    let (b, _) = solve_hv_tall(&wide, &cfg.dp)?;
    Ok(Solution::concat(
        &[Solution::multiset(guess.iter().copied(), DELTA_TAG), a, b.transpose()],
        DELTA_TAG,
    ))
}

/// Solves one normalized part: picks the strip offset with the cheapest
/// greedy estimate, then solves every cell.
pub fn solve_part(part: &Instance, cfg: &DeltaConfig, report: &mut DeltaReport) -> Result<Solution, DeltaError> {
    if part.is_empty() {
        return Ok(Solution::empty(DELTA_TAG));
    }
    let period = cfg.eps.recip().pow(2).to_integer() as i64;
    let mut chosen: Option<(Coord, i64, CellDecomposition)> = None;
    for a in 0..period {
        let d = decompose(part, cfg, a);
        let total = d.total_baseline();
        if chosen.as_ref().is_none_or(|(t, _, _)| total < *t) {
            chosen = Some((total, a, d));
        }
    }
    let (_, offset, d) = chosen.expect("at least one offset");
    report.offsets.push(offset);
    report.cells += d.cells.len();
    report.boundary_cost += d.boundary_segments.cost;
    let mut parts = vec![d.boundary_segments.clone()];
    for members in &d.members {
        parts.push(solve_cell(&subset(part, members), cfg, report)?);
    }
    let sol = Solution::new(parts.iter().flat_map(|p| p.segments.iter().copied()), DELTA_TAG);
    let v = verify(part, &sol).map_err(|e| DeltaError::Preprocess(e.into()))?;
    if !v.feasible {
        return Err(DeltaError::Infeasible(v.unstabbed));
    }
    Ok(sol)
}

pub fn check_delta_large(inst: &Instance, delta: Rational) -> Result<(), DeltaError> {
    for r in &inst.rects {
        let (w, h) = (inst.physical(r.width()), inst.physical(r.height()));
        if w > Rational::one() || h > Rational::one() || w.max(h) < delta || delta <= Rational::zero() {
            return Err(DeltaError::NotDeltaLarge(r.id));
        }
    }
    Ok(())
}

/// The full pipeline on an instance in original coordinates.
pub fn solve_delta_large(inst: &Instance, cfg: &DeltaConfig) -> Result<(Solution, DeltaReport), DeltaError> {
    check_delta_large(inst, cfg.delta)?;
    let parts = normalize_general(inst, cfg.eps)?;
    let mut report = DeltaReport::default();
    let sol = solve_normalized(&parts, DELTA_TAG, |p| solve_part(p, cfg, &mut report))?;
    let v = verify(inst, &sol).map_err(|e| DeltaError::Preprocess(e.into()))?;
    if !v.feasible {
        return Err(DeltaError::Infeasible(v.unstabbed));
    }
    Ok((sol, report))
}

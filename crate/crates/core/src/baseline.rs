//! Set-cover view of stabbing: an exact branch-and-bound oracle for small
//! instances, greedy weighted set cover, and the greedy line subroutine used
//! by the dynamic program's line operation.

use std::cmp::Ordering;

use thiserror::Error;

use crate::candidates::{canonical_candidates, CandidateSet};
use crate::geometry::{stabs, Coord, Instance, Orientation, Rect, Segment, Solution};
use crate::mask::{self, Mask, MAX_MASK_RECTS};

pub const EXACT_TAG: &str = "exact";
pub const GREEDY_TAG: &str = "greedy";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BaselineError {
    #[error("oracle budget exceeded: {what} = {got} > {limit}")]
    BudgetExceeded {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("rectangles {0:?} are stabbed by no candidate")]
    Infeasible(Vec<usize>),
}

/// Size limits for [`exact_oracle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_n: usize,
    /// Limit on candidates left after dominance reduction.
    pub max_cands: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_n: 10,
            max_cands: 64,
        }
    }
}

/// One set of the cover system: a segment, the rectangles it stabs, and its
/// length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoverSet {
    pub segment: Segment,
    pub covered: Mask,
    pub weight: Coord,
}

/// Rectangles as elements, candidate segments as weighted sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverSystem {
    pub universe: Mask,
    pub sets: Vec<CoverSet>,
}

impl CoverSystem {
    /// Requires at most [`MAX_MASK_RECTS`] rectangles.
    pub fn new(rects: &[Rect], segments: impl IntoIterator<Item = Segment>) -> Self {
        assert!(rects.len() <= MAX_MASK_RECTS);
        let sets = segments
            .into_iter()
            .map(|segment| CoverSet {
                segment,
                covered: rects
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| stabs(&segment, r))
                    .fold(0, |m, (i, _)| m | mask::bit(i)),
                weight: segment.len(),
            })
            .collect();
        CoverSystem {
            universe: mask::full(rects.len()),
            sets,
        }
    }

    /// Drops empty sets and every set whose coverage is contained in a
    /// cheaper-or-equal set's; among identical sets the first in segment
    /// order survives. The optimum is unchanged.
    pub fn reduced(&self) -> CoverSystem {
        let mut sets: Vec<CoverSet> = self.sets.iter().filter(|s| s.covered != 0).copied().collect();
        sets.sort_by(|a, b| a.weight.cmp(&b.weight).then(a.segment.cmp(&b.segment)));
        let mut kept: Vec<CoverSet> = Vec::with_capacity(sets.len());
        for s in sets {
            let dominated = kept
                .iter()
                .any(|k| k.weight <= s.weight && s.covered & !k.covered == 0);
            if !dominated {
                kept.push(s);
            }
        }
        kept.sort_by_key(|a| a.segment);
        CoverSystem {
            universe: self.universe,
            sets: kept,
        }
    }

    pub fn coverable(&self) -> Mask {
        self.sets.iter().fold(0, |m, s| m | s.covered)
    }
}

/// Rectangle-selection rule for branching in [`exact_oracle_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchOrder {
    /// Uncovered rectangle with the fewest covering sets.
    MostConstrained,
    /// Uncovered rectangle with the smallest id.
    LowestId,
}

/// Minimum-cost sub-collection of `cands` stabbing every rectangle.
pub fn exact_oracle(
    inst: &Instance,
    cands: &CandidateSet,
    budget: OracleBudget,
) -> Result<Solution, BaselineError> {
    exact_oracle_with(inst, cands, budget, BranchOrder::MostConstrained)
}

pub fn exact_oracle_with(
    inst: &Instance,
    cands: &CandidateSet,
    budget: OracleBudget,
    order: BranchOrder,
) -> Result<Solution, BaselineError> {
    let limit = budget.max_n.min(MAX_MASK_RECTS);
    if inst.len() > limit {
        return Err(BaselineError::BudgetExceeded {
            what: "rectangles",
            got: inst.len(),
            limit,
        });
    }
    let system = CoverSystem::new(&inst.rects, cands.iter().map(|c| c.segment)).reduced();
    if system.sets.len() > budget.max_cands {
        return Err(BaselineError::BudgetExceeded {
            what: "candidates",
            got: system.sets.len(),
            limit: budget.max_cands,
        });
    }
    let missing = system.universe & !system.coverable();
    if missing != 0 {
        return Err(BaselineError::Infeasible(mask::ones(missing).collect()));
    }
    let mut search = Search::new(&system, order);
    search.run();
    let best = search.best.expect("coverable universe has a cover");
    Ok(Solution::new(
        best.picks.iter().map(|&i| system.sets[i].segment),
        EXACT_TAG,
    ))
}

#[derive(Clone, Debug)]
struct Incumbent {
    cost: Coord,
    /// Sorted segments, for the lexicographic tie-break.
    segments: Vec<Segment>,
    picks: Vec<usize>,
}

impl Incumbent {
    fn rank(&self) -> (Coord, usize, &[Segment]) {
        (self.cost, self.segments.len(), &self.segments)
    }
}

struct Search<'a> {
    system: &'a CoverSystem,
    order: BranchOrder,
    /// Sets covering each rectangle, cheapest first.
    covering: Vec<Vec<usize>>,
    cheapest: Vec<Coord>,
    best: Option<Incumbent>,
    picks: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(system: &'a CoverSystem, order: BranchOrder) -> Self {
        let n = mask::count(system.universe);
        let mut covering = vec![Vec::new(); n];
        for (i, s) in system.sets.iter().enumerate() {
            for r in mask::ones(s.covered) {
                covering[r].push(i);
            }
        }
        for list in &mut covering {
            list.sort_by_key(|&i| (system.sets[i].weight, system.sets[i].segment));
        }
        let cheapest = covering
            .iter()
            .map(|l| l.first().map_or(0, |&i| system.sets[i].weight))
            .collect();
        Search {
            system,
            order,
            covering,
            cheapest,
            best: None,
            picks: Vec::new(),
        }
    }

    fn run(&mut self) {
        self.branch(self.system.universe, 0);
    }

    /// Admissible: the largest single-rectangle cost, and the total
    /// per-rectangle cost spread over the widest set.
    fn lower_bound(&self, uncovered: Mask) -> Coord {
        let mut max_single = 0;
        let mut total = 0;
        for r in mask::ones(uncovered) {
            max_single = max_single.max(self.cheapest[r]);
            total += self.cheapest[r];
        }
        let widest = self
            .system
            .sets
            .iter()
            .map(|s| mask::count(s.covered & uncovered))
            .max()
            .unwrap_or(1)
            .max(1) as Coord;
        max_single.max((total + widest - 1) / widest)
    }

    fn branch(&mut self, uncovered: Mask, cost: Coord) {
        if uncovered == 0 {
            let mut segments: Vec<Segment> =
                self.picks.iter().map(|&i| self.system.sets[i].segment).collect();
            segments.sort();
            let cand = Incumbent {
                cost,
                segments,
                picks: self.picks.clone(),
            };
            let better = match &self.best {
                None => true,
                Some(b) => cand.rank().cmp(&b.rank()) == Ordering::Less,
            };
            if better {
                self.best = Some(cand);
            }
            return;
        }
        if let Some(b) = &self.best {
            if cost + self.lower_bound(uncovered) > b.cost {
                return;
            }
        }
        let pivot = match self.order {
            BranchOrder::LowestId => uncovered.trailing_zeros() as usize,
            BranchOrder::MostConstrained => mask::ones(uncovered)
                .min_by_key(|&r| (self.covering[r].len(), r))
                .expect("nonempty"),
        };
        for k in 0..self.covering[pivot].len() {
            let i = self.covering[pivot][k];
            let set = self.system.sets[i];
            self.picks.push(i);
            self.branch(uncovered & !set.covered, cost + set.weight);
            self.picks.pop();
        }
    }
}

/// Greedy weighted set cover: repeatedly takes the candidate with the least
/// length per newly stabbed rectangle; ties go to the shorter, then the
/// smaller segment.
pub fn greedy_cover(inst: &Instance, cands: &CandidateSet) -> Result<Solution, BaselineError> {
    let covers: Vec<(Segment, Vec<usize>)> = cands
        .iter()
        .map(|c| {
            let hit: Vec<usize> = inst
                .rects
                .iter()
                .filter(|r| stabs(&c.segment, r))
                .map(|r| r.id)
                .collect();
            (c.segment, hit)
        })
        .filter(|(_, hit)| !hit.is_empty())
        .collect();
    let mut stabbed = vec![false; inst.len()];
    for (_, hit) in &covers {
        for &r in hit {
            stabbed[r] = true;
        }
    }
    let missing: Vec<usize> = (0..inst.len()).filter(|&r| !stabbed[r]).collect();
    if !missing.is_empty() {
        return Err(BaselineError::Infeasible(missing));
    }
    stabbed.fill(false);
    let mut left = inst.len();
    let mut picked = Vec::new();
    while left > 0 {
        let mut best: Option<(Coord, usize, Segment, usize)> = None;
        for (i, (seg, hit)) in covers.iter().enumerate() {
            let fresh = hit.iter().filter(|&&r| !stabbed[r]).count();
            if fresh == 0 {
                continue;
            }
            let w = seg.len();
            let better = match &best {
                None => true,
                Some((bw, bf, bseg, _)) => {
                    let lhs = w as i128 * *bf as i128;
                    let rhs = *bw as i128 * fresh as i128;
                    lhs < rhs || (lhs == rhs && (w, *seg) < (*bw, *bseg))
                }
            };
            if better {
                best = Some((w, fresh, *seg, i));
            }
        }
        let (_, fresh, seg, i) = best.expect("every rectangle is coverable");
        for &r in &covers[i].1 {
            stabbed[r] = true;
        }
        left -= fresh;
        picked.push(seg);
    }
    Ok(Solution::new(picked, GREEDY_TAG))
}

/// Greedy over the rectangles' own canonical candidates.
pub fn greedy(inst: &Instance) -> Solution {
    greedy_cover(inst, &canonical_candidates(inst)).expect("canonical candidates stab every rectangle")
}

/// Stabs the rectangles inside `region` that the full line
/// `orientation = line_coord` crosses (a vertical line at `x = line_coord`,
/// a horizontal one at `y = line_coord`), using greedy set cover.
pub fn stab_line_rects(
    inst: &Instance,
    line_orientation: Orientation,
    line_coord: Coord,
    region: &Rect,
) -> Solution {
    let crossed: Vec<Rect> = inst
        .rects
        .iter()
        .filter(|r| region.contains(r) && crosses_line(r, line_orientation, line_coord))
        .copied()
        .collect();
    greedy(&inst.subset(crossed)).with_tag("line")
}

/// The full line meets the closed rectangle.
pub fn crosses_line(r: &Rect, line_orientation: Orientation, line_coord: Coord) -> bool {
    let (lo, hi) = match line_orientation {
        Orientation::Vertical => (r.x1, r.x2),
        Orientation::Horizontal => (r.y1, r.y2),
    };
    lo <= line_coord && line_coord <= hi
}

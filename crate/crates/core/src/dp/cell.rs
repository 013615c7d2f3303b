//! Memoized branch-and-bound over cells `(region, remaining rectangles,
//! carried segments)`.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::baseline::greedy;
use crate::candidates::canonical_candidates;
use crate::geometry::{clip_segment, stabs, Coord, Instance, Orientation, Rect, Segment, Solution};
use crate::mask::{self, Mask};

use super::{DpConfig, DpError, DpStats};

/// Identity of a subproblem. `remaining` lists the rectangles lying in the
/// open interior of `region` that no carried segment stabs; `carried` holds
/// the already paid segments clipped to `region`, sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub region: Rect,
    pub remaining: Mask,
    pub carried: Vec<Segment>,
}

#[derive(Clone, Debug)]
enum Choice {
    Trivial(CellKey, CellKey),
    Add(Vec<Segment>, CellKey),
    /// Rectangles crossed by the line, then both sides.
    Line(Mask, CellKey, CellKey),
}

#[derive(Clone, Debug)]
enum Entry {
    Exact(Coord, Choice),
    /// The cell's value is at least this much.
    AtLeast(Coord),
}

struct AddOption {
    segment: Segment,
    cost: Coord,
    hits: Mask,
}

pub(crate) struct Engine<'a> {
    inst: &'a Instance,
    cfg: &'a DpConfig,
    cands: Vec<Segment>,
    /// Candidate indices stabbing each rectangle.
    by_rect: Vec<Vec<usize>>,
    /// Rectangles sharing some candidate with each rectangle (itself
    /// included).
    compatible: Vec<Mask>,
    /// Rectangle ids by decreasing cheapest stab.
    by_min_stab: Vec<usize>,
    vlines: Vec<Coord>,
    hlines: Vec<Coord>,
    carried_cap: usize,
    memo: HashMap<CellKey, Entry>,
    line_memo: HashMap<Mask, Solution>,
    pub(crate) stats: DpStats,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(inst: &'a Instance, cfg: &'a DpConfig, vlines: Vec<Coord>) -> Self {
        let cands = canonical_candidates(inst).segments();
        let n = inst.len();
        let mut by_rect = vec![Vec::new(); n];
        let mut compatible = vec![0; n];
        for (i, s) in cands.iter().enumerate() {
            let hit = inst
                .rects
                .iter()
                .filter(|r| stabs(s, r))
                .fold(0, |m, r| m | mask::bit(r.id));
            for r in mask::ones(hit) {
                by_rect[r].push(i);
                compatible[r] |= hit;
            }
        }
        let mut by_min_stab: Vec<usize> = (0..n).collect();
        by_min_stab.sort_by_key(|&r| (std::cmp::Reverse(inst.rects[r].min_stab()), r));
        let hlines: BTreeSet<Coord> = inst.rects.iter().flat_map(|r| [r.y1, r.y2]).collect();
        let inv = cfg.eps.recip().to_integer();
        let carried_cap = usize::try_from(3 * inv * inv * inv).unwrap_or(usize::MAX);
        Engine {
            inst,
            cfg,
            cands,
            by_rect,
            compatible,
            by_min_stab,
            vlines,
            hlines: hlines.into_iter().collect(),
            carried_cap,
            memo: HashMap::new(),
            line_memo: HashMap::new(),
            stats: DpStats::default(),
        }
    }

    pub(crate) fn root(&self) -> CellKey {
        let b = self.inst.bounds;
        let region = Rect {
            x1: b.x1 - 1,
            y1: b.y1 - 1,
            x2: b.x2 + 1,
            y2: b.y2 + 1,
            id: 0,
        };
        self.canonical(region, mask::full(self.inst.len()), &[])
    }

    /// Shrinks the region around the remaining rectangles and normalizes
    /// the carried set. Empty cells all share one key.
    pub(crate) fn canonical(&self, region: Rect, remaining: Mask, carried: &[Segment]) -> CellKey {
        if remaining == 0 {
            return CellKey {
                region: Rect { x1: 0, y1: 0, x2: 0, y2: 0, id: 0 },
                remaining,
                carried: Vec::new(),
            };
        }
        let mut it = mask::ones(remaining).map(|i| self.inst.rects[i]);
        let first = it.next().expect("nonempty");
        let bb = it.fold(first, |b, r| Rect {
            x1: b.x1.min(r.x1),
            y1: b.y1.min(r.y1),
            x2: b.x2.max(r.x2),
            y2: b.y2.max(r.y2),
            id: 0,
        });
        let region = Rect {
            x1: region.x1.max(bb.x1 - 1),
            y1: region.y1.max(bb.y1 - 1),
            x2: region.x2.min(bb.x2 + 1),
            y2: region.y2.min(bb.y2 + 1),
            id: 0,
        };
        let mut kept: Vec<Segment> = carried
            .iter()
            .filter_map(|s| clip_segment(s, &region))
            .filter(|s| {
                let (alo, ahi) = region.anchor_range(s.orientation);
                !s.is_degenerate() && alo < s.anchor && s.anchor < ahi
            })
            .collect();
        kept.sort();
        kept.dedup();
        CellKey {
            region,
            remaining,
            carried: kept,
        }
    }

    /// Admissible bound on the cost of stabbing `remaining`: the dearest
    /// single rectangle, and a set of rectangles no candidate stabs two of.
    fn lower_bound(&self, remaining: Mask) -> Coord {
        let mut blocked: Mask = 0;
        let mut packed = 0;
        for &r in &self.by_min_stab {
            if remaining & mask::bit(r) != 0 && blocked & mask::bit(r) == 0 {
                packed += self.inst.rects[r].min_stab();
                blocked |= self.compatible[r];
            }
        }
        packed
    }

    fn hits(&self, seg: &Segment, remaining: Mask) -> Mask {
        mask::ones(remaining)
            .filter(|&i| stabs(seg, &self.inst.rects[i]))
            .fold(0, |m, i| m | mask::bit(i))
    }

    fn pivot(&self, remaining: Mask) -> usize {
        mask::ones(remaining)
            .min_by_key(|&r| (self.by_rect[r].len(), r))
            .expect("nonempty")
    }

    /// Non-dominated clipped candidates stabbing the pivot of `remaining`,
    /// cheapest first.
    fn add_options(&self, region: &Rect, remaining: Mask) -> Vec<AddOption> {
        let pivot = self.pivot(remaining);
        let mut all: Vec<AddOption> = self.by_rect[pivot]
            .iter()
            .filter_map(|&i| clip_segment(&self.cands[i], region))
            .map(|segment| AddOption {
                segment,
                cost: segment.len(),
                hits: self.hits(&segment, remaining),
            })
            .collect();
        all.sort_by_key(|a| (a.cost, a.segment));
        let mut kept: Vec<AddOption> = Vec::with_capacity(all.len());
        for o in all {
            if !kept.iter().any(|k| k.cost <= o.cost && o.hits & !k.hits == 0) {
                kept.push(o);
            }
        }
        kept
    }

    fn line_solution(&mut self, crossed: Mask) -> &Solution {
        if !self.line_memo.contains_key(&crossed) {
            let sub = self
                .inst
                .subset(mask::ones(crossed).map(|i| self.inst.rects[i]).collect());
            self.line_memo.insert(crossed, greedy(&sub).with_tag("line"));
        }
        &self.line_memo[&crossed]
    }

    /// Value of `key` if it is below `budget`.
    pub(crate) fn value(&mut self, key: &CellKey, budget: Coord) -> Result<Option<Coord>, DpError> {
        if key.remaining == 0 {
            return Ok((0 < budget).then_some(0));
        }
        match self.memo.get(key) {
            Some(Entry::Exact(v, _)) => {
                self.stats.memo_hits += 1;
                return Ok((*v < budget).then_some(*v));
            }
            Some(Entry::AtLeast(b)) if *b >= budget => {
                self.stats.memo_hits += 1;
                return Ok(None);
            }
            _ => {}
        }
        let lb = self.lower_bound(key.remaining);
        if lb >= budget {
            self.store(key, Entry::AtLeast(lb))?;
            return Ok(None);
        }
        self.stats.cells_expanded += 1;
        let mut best = budget;
        let mut choice = None;

        let region = key.region;
        let split = key.carried.iter().position(|s| {
            let (lo, hi) = region.span_range(s.orientation);
            s.lo == lo && s.hi == hi
        });
        if let Some(at) = split {
            self.stats.trivial_ops += 1;
            let seg = key.carried[at];
            let mut rest = key.carried.clone();
            rest.remove(at);
            let (a, b) = self.cut(key, seg.orientation, seg.anchor, &rest);
            debug_assert_eq!(a.remaining | b.remaining, key.remaining);
            if let Some(v) = self.pair(&a, &b, 0, best)? {
                best = v;
                choice = Some(Choice::Trivial(a, b));
            }
        } else {
            self.add_ops(key, &mut best, &mut choice)?;
            self.line_ops(key, &mut best, &mut choice)?;
        }

        match choice {
            Some(c) => {
                self.store(key, Entry::Exact(best, c))?;
                Ok(Some(best))
            }
            None => {
                self.store(key, Entry::AtLeast(budget.max(lb)))?;
                Ok(None)
            }
        }
    }

    fn store(&mut self, key: &CellKey, entry: Entry) -> Result<(), DpError> {
        if self.memo.len() >= self.cfg.memo_capacity && !self.memo.contains_key(key) {
            return Err(DpError::MemoOverflow {
                capacity: self.cfg.memo_capacity,
                stats: self.stats.clone(),
            });
        }
        if let Entry::Exact(..) = entry {
            debug_assert!(key.carried.len() <= self.carried_cap);
        }
        self.memo.insert(key.clone(), entry);
        Ok(())
    }

    /// Cost of two sibling cells plus `extra`, if below `budget`.
    fn pair(&mut self, a: &CellKey, b: &CellKey, extra: Coord, budget: Coord) -> Result<Option<Coord>, DpError> {
        let Some(left) = self.value(a, budget - extra)? else {
            return Ok(None);
        };
        let Some(right) = self.value(b, budget - extra - left)? else {
            return Ok(None);
        };
        let total = extra + left + right;
        Ok((total < budget).then_some(total))
    }

    /// Splits the cell along the full line `orientation = coord` (a vertical
    /// line sits at `x = coord`). Rectangles meeting the line belong to
    /// neither side.
    fn cut(&self, key: &CellKey, line: Orientation, coord: Coord, carried: &[Segment]) -> (CellKey, CellKey) {
        let r = key.region;
        let (low_region, high_region) = match line {
            Orientation::Vertical => (
                Rect { x2: coord, ..r },
                Rect { x1: coord, ..r },
            ),
            Orientation::Horizontal => (
                Rect { y2: coord, ..r },
                Rect { y1: coord, ..r },
            ),
        };
        let (mut low, mut high) = (0, 0);
        for i in mask::ones(key.remaining) {
            let (lo, hi) = self.inst.rects[i].anchor_range(line);
            if hi < coord {
                low |= mask::bit(i);
            } else if lo > coord {
                high |= mask::bit(i);
            }
        }
        (
            self.canonical(low_region, low, carried),
            self.canonical(high_region, high, carried),
        )
    }

    fn add_ops(&mut self, key: &CellKey, best: &mut Coord, choice: &mut Option<Choice>) -> Result<(), DpError> {
        let mut frontier: Vec<(Vec<Segment>, Coord, Mask)> = vec![(Vec::new(), 0, key.remaining)];
        for _ in 0..self.cfg.add_arity_cap {
            let mut next = Vec::new();
            for (picked, cost, remaining) in frontier {
                if remaining == 0 {
                    continue;
                }
                for o in self.add_options(&key.region, remaining) {
                    let mut segs = picked.clone();
                    segs.push(o.segment);
                    next.push((segs, cost + o.cost, remaining & !o.hits));
                }
            }
            for (segs, cost, remaining) in &next {
                if key.carried.len() + segs.len() > self.carried_cap {
                    self.stats.cap_prunes += 1;
                    continue;
                }
                if cost + self.lower_bound(*remaining) >= *best {
                    continue;
                }
                self.stats.add_ops += 1;
                let mut carried = key.carried.clone();
                carried.extend_from_slice(segs);
                let child = self.canonical(key.region, *remaining, &carried);
                if let Some(v) = self.value(&child, *best - cost)? {
                    *best = cost + v;
                    *choice = Some(Choice::Add(segs.clone(), child));
                }
            }
            frontier = next;
        }
        Ok(())
    }

    fn line_ops(&mut self, key: &CellKey, best: &mut Coord, choice: &mut Option<Choice>) -> Result<(), DpError> {
        let region = key.region;
        let verticals: Vec<Coord> = {
            let lo = self.vlines.partition_point(|&c| c <= region.x1);
            let hi = self.vlines.partition_point(|&c| c < region.x2);
            self.vlines[lo..hi].to_vec()
        };
        let horizontals: Vec<Coord> = {
            let lo = self.hlines.partition_point(|&c| c <= region.y1);
            let hi = self.hlines.partition_point(|&c| c < region.y2);
            self.hlines[lo..hi].to_vec()
        };
        for (line, coords) in [
            (Orientation::Vertical, verticals),
            (Orientation::Horizontal, horizontals),
        ] {
            let mut seen = HashSet::new();
            for c in coords {
                let (low, high) = self.cut(key, line, c, &key.carried);
                let (lm, hm) = (low.remaining, high.remaining);
                let crossed = key.remaining & !lm & !hm;
                if !seen.insert((crossed, lm)) {
                    continue;
                }
                if crossed == 0 && (lm == 0 || hm == 0) {
                    continue;
                }
                let line_cost = if crossed == 0 {
                    0
                } else {
                    self.line_solution(crossed).cost
                };
                if line_cost + self.lower_bound(lm) + self.lower_bound(hm) >= *best {
                    continue;
                }
                self.stats.line_ops += 1;
                if let Some(v) = self.pair(&low, &high, line_cost, *best)? {
                    *best = v;
                    *choice = Some(Choice::Line(crossed, low, high));
                }
            }
        }
        Ok(())
    }

    /// Segments of the stored optimum of `key`.
    pub(crate) fn reconstruct(&mut self, key: &CellKey, out: &mut Vec<Segment>) {
        if key.remaining == 0 {
            return;
        }
        let choice = match self.memo.get(key) {
            Some(Entry::Exact(_, c)) => c.clone(),
            _ => panic!("cell on the optimal path has no exact value"),
        };
        match choice {
            Choice::Trivial(a, b) => {
                self.reconstruct(&a, out);
                self.reconstruct(&b, out);
            }
            Choice::Add(segs, child) => {
                out.extend(segs);
                self.reconstruct(&child, out);
            }
            Choice::Line(crossed, a, b) => {
                if crossed != 0 {
                    out.extend(self.line_solution(crossed).segments.clone());
                }
                self.reconstruct(&a, out);
                self.reconstruct(&b, out);
            }
        }
    }
}

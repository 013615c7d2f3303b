//! Seeded instance families.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; every
//! draw in `[lo, hi]` is `lo + next_u64() % (hi - lo + 1)`, so a corpus can
//! be regenerated bit for bit from any ChaCha8 implementation.

use std::fmt;
use std::str::FromStr;

use num_traits::One;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{check_epsilon, Coord, Instance};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("bad generator parameters: {0}")]
    BadParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Uniform,
    Squares,
    /// `h >= w`.
    Tall,
    /// `w > h`.
    Wide,
    /// x-projections pairwise nest or are disjoint.
    Laminar,
    /// Both sides at most one physical unit, the longer at least `delta`.
    DeltaLarge,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Uniform,
        Family::Squares,
        Family::Tall,
        Family::Wide,
        Family::Laminar,
        Family::DeltaLarge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Squares => "squares",
            Family::Tall => "tall",
            Family::Wide => "wide",
            Family::Laminar => "laminar",
            Family::DeltaLarge => "delta_large",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| GenError::BadParams(format!("unknown family {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub eps: Rational,
    /// Lower bound on the longer side for [`Family::DeltaLarge`].
    pub delta: Rational,
    /// Largest side, in coordinate units, for the integer families.
    pub max_side: Coord,
    /// Side of the square the rectangles' corners are drawn from.
    pub extent: Coord,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            eps: Rational::new(1, 4),
            delta: Rational::new(1, 2),
            max_side: 8,
            extent: 24,
        }
    }
}

struct Draw(ChaCha8Rng);

impl Draw {
    /// Uniform-ish integer in `[lo, hi]`.
    fn range(&mut self, lo: Coord, hi: Coord) -> Coord {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.0.next_u64() % span) as Coord
    }
}

pub fn generate(family: Family, n: usize, seed: u64, params: &GenParams) -> Result<Instance, GenError> {
    check_epsilon(params.eps).map_err(|e| GenError::BadParams(e.to_string()))?;
    if params.max_side < 1 || params.extent < 1 {
        return Err(GenError::BadParams("max_side and extent must be positive".into()));
    }
    let mut d = Draw(ChaCha8Rng::seed_from_u64(seed));
    let mut corners = Vec::with_capacity(n);
    let mut unit = Rational::one();
    let m = params.max_side;
    match family {
        Family::Uniform | Family::Squares | Family::Tall | Family::Wide => {
            for _ in 0..n {
                let (w, h) = match family {
                    Family::Uniform => (d.range(1, m), d.range(1, m)),
                    Family::Squares => {
                        let s = d.range(1, m);
                        (s, s)
                    }
                    Family::Tall => {
                        let w = d.range(1, m);
                        (w, d.range(w, m.max(w)))
                    }
                    _ => {
                        let w = d.range(2, m.max(2));
                        (w, d.range(1, w - 1))
                    }
                };
                let x = d.range(0, params.extent);
                let y = d.range(0, params.extent);
                corners.push([x, y, x + w, y + h]);
            }
        }
        Family::Laminar => {
            // Dyadic intervals pulled inward by their depth: two of them
            // either nest or are disjoint.
            const DEPTH: u32 = 3;
            const TOP: i64 = 1 << 5;
            for _ in 0..n {
                let level = d.range(0, DEPTH as Coord);
                let size = 4 * (TOP >> level);
                let k = d.range(0, (1 << level) - 1);
                let x1 = k * size + level;
                let x2 = (k + 1) * size - level;
                let y = d.range(0, params.extent);
                let h = d.range(1, m);
                corners.push([x1, y, x2, y + h]);
            }
        }
        Family::DeltaLarge => {
            let delta = params.delta;
            if delta <= Rational::from_integer(0) || delta > Rational::one() {
                return Err(GenError::BadParams(format!("delta {delta} is outside (0, 1]")));
            }
            // 1/unit = 4q for delta = p/q: both delta and one unit of
            // length are whole numbers of coordinates.
            let per_unit = 4 * *delta.denom() as Coord;
            unit = Rational::new(1, per_unit as i128);
            let long_min = 4 * *delta.numer() as Coord;
            let span = per_unit * (2 + n as Coord / 4);
            for _ in 0..n {
                let long = d.range(long_min, per_unit);
                let short = d.range(1, per_unit);
                let (w, h) = if d.range(0, 1) == 0 { (long, short) } else { (short, long) };
                let x = d.range(0, span);
                let y = d.range(0, span);
                corners.push([x, y, x + w, y + h]);
            }
        }
    }
    Instance::new(&corners, unit, params.eps).map_err(|e| GenError::BadParams(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let p = GenParams::default();
        assert_eq!(
            generate(Family::Squares, 5, 7, &p).unwrap(),
            generate(Family::Squares, 5, 7, &p).unwrap()
        );
        assert_ne!(
            generate(Family::Squares, 5, 7, &p).unwrap(),
            generate(Family::Squares, 5, 8, &p).unwrap()
        );
    }

    #[test]
    fn families_respect_their_constraint() {
        let p = GenParams::default();
        for seed in 0..20 {
            let sq = generate(Family::Squares, 10, seed, &p).unwrap();
            assert!(sq.rects.iter().all(|r| r.width() == r.height()));
            let tall = generate(Family::Tall, 10, seed, &p).unwrap();
            assert!(tall.rects.iter().all(|r| r.is_tall()));
            let wide = generate(Family::Wide, 10, seed, &p).unwrap();
            assert!(wide.rects.iter().all(|r| r.width() > r.height()));
        }
    }

    #[test]
    fn delta_large_sides() {
        let p = GenParams::default();
        for seed in 0..20 {
            let inst = generate(Family::DeltaLarge, 12, seed, &p).unwrap();
            for r in &inst.rects {
                let w = inst.physical(r.width());
                let h = inst.physical(r.height());
                assert!(w.max(h) >= p.delta);
                assert!(w <= Rational::one() && h <= Rational::one());
            }
        }
    }

    #[test]
    fn laminar_projections() {
        let p = GenParams::default();
        for seed in 0..20 {
            let inst = generate(Family::Laminar, 15, seed, &p).unwrap();
            for a in &inst.rects {
                for b in &inst.rects {
                    let nested = (a.x1 <= b.x1 && b.x2 <= a.x2) || (b.x1 <= a.x1 && a.x2 <= b.x2);
                    let disjoint = a.x2 < b.x1 || b.x2 < a.x1;
                    assert!(nested || disjoint, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn bad_params_are_reported() {
        let p = GenParams {
            delta: Rational::new(3, 2),
            ..GenParams::default()
        };
        assert!(generate(Family::DeltaLarge, 3, 1, &p).is_err());
        assert_eq!(
            "hexagons".parse::<Family>(),
            Err(GenError::BadParams("unknown family \"hexagons\"".into()))
        );
    }
}

//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances and corpus sizes are the constants below.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabkit::baseline::{exact_oracle, greedy, OracleBudget};
use stabkit::candidates::{canonical_candidates, well_align, CandidateSet, GridSpec};
use stabkit::delta::{
    big_rects, complete_guess, decompose, guess_long_segments, solve_delta_large, DeltaConfig,
};
use stabkit::dp::{solve_hv_tall, split_by_orientation, DpConfig};
use stabkit::geometry::{stabs, verify, Coord, Instance, Segment, Solution};
use stabkit::harness::gen::{generate, Family, GenParams};
use stabkit::harness::io::{emit_instance, emit_solution};
use stabkit::harness::render::render_svg;
use stabkit::harness::report::compare;
use stabkit::harness::solvers::{run_solver, SolveOptions, Solver};
use stabkit::mask;
use stabkit::preprocess::{normalize_general, split_long_segments};
use stabkit::Rational;

const FUZZ_INSTANCES: usize = 1200;
const FUZZ_MAX_N: usize = 20;
const FUZZ_LIMIT: Duration = Duration::from_secs(300);

const ORACLE_INSTANCES: u64 = 600;
const ORACLE_MAX_N: usize = 4;
const ORACLE_MAX_CANDS: usize = 12;
const ORACLE_LIMIT: Duration = Duration::from_secs(120);

const SANDWICH_INSTANCES: usize = 200;
const SANDWICH_MAX_N: usize = 8;
const SANDWICH_LIMIT: Duration = Duration::from_secs(600);

const MEDIAN_RATIO: (i128, i128) = (105, 100);
/// `1 + 3 eps`.
const RATIO_SLACK: i128 = 3;

const INFLATION_SAMPLES: usize = 500;

const DELTA_INSTANCES: usize = 100;
const DELTA_MAX_N: usize = 12;
const CONTAINMENT_MAX_CELL: usize = 6;

const DETERMINISM_INSTANCES: usize = 36;
const THREAD_COUNTS: [usize; 2] = [1, 4];

const CEILING_N: usize = 12;
const CEILING_SEEDS: u64 = 5;
const CEILING_LIMIT: Duration = Duration::from_secs(60);

fn eps() -> Rational {
    Rational::new(1, 4)
}

fn oracle_budget() -> OracleBudget {
    OracleBudget {
        max_n: 12,
        max_cands: 128,
    }
}

fn exact(inst: &Instance) -> Solution {
    exact_oracle(inst, &canonical_candidates(inst), oracle_budget()).expect("oracle within budget")
}

fn ratio(a: Coord, b: Coord) -> Rational {
    if b == 0 {
        Rational::from_integer(if a == 0 { 1 } else { i128::MAX })
    } else {
        Rational::new(a as i128, b as i128)
    }
}

fn f(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

/// Per-instance solver results on the fuzz corpus, reused by later
/// criteria.
struct FuzzRow {
    inst: Instance,
    costs: BTreeMap<Solver, Coord>,
    stabbing: Option<Solution>,
}

fn fuzz_corpus() -> Vec<Instance> {
    (0..FUZZ_INSTANCES)
        .map(|i| {
            let family = Family::ALL[i % Family::ALL.len()];
            let n = 1 + (i / Family::ALL.len()) % FUZZ_MAX_N;
            generate(family, n, 1000 + i as u64, &GenParams::default()).unwrap()
        })
        .collect()
}

fn c1_feasibility(rows: &mut Vec<FuzzRow>) -> Outcome {
    let start = Instant::now();
    let opts = SolveOptions {
        oracle: oracle_budget(),
        ..SolveOptions::default()
    };
    let mut runs = 0usize;
    let mut skipped = 0usize;
    let mut failures = Vec::new();
    for (i, inst) in fuzz_corpus().into_iter().enumerate() {
        let mut row = FuzzRow {
            inst: inst.clone(),
            costs: BTreeMap::new(),
            stabbing: None,
        };
        for solver in Solver::ALL {
            match run_solver(&inst, solver, &opts) {
                Ok(out) => {
                    runs += 1;
                    let feasible = verify(&inst, &out.solution).is_ok_and(|v| v.feasible);
                    if !feasible {
                        failures.push(format!("#{i} {solver} infeasible"));
                    }
                    row.costs.insert(solver, out.solution.cost);
                    if solver == Solver::Stabbing {
                        row.stabbing = Some(out.solution);
                    }
                }
                // outside the solver's domain (orientation, delta-large, oracle size)
                Err(e) if e.is_bad_input() => skipped += 1,
                Err(e) => failures.push(format!("#{i} {solver}: {e}")),
            }
        }
        rows.push(row);
    }
    let elapsed = start.elapsed();
    let per_solver: Vec<String> = Solver::ALL
        .iter()
        .map(|s| format!("{s}={}", rows.iter().filter(|r| r.costs.contains_key(s)).count()))
        .collect();
    let ok = failures.is_empty() && rows.len() >= 1000 && elapsed < FUZZ_LIMIT;
    outcome(
        ok,
        format!(
            "{} instances, {runs} verified runs ({}), {skipped} out-of-domain, {} failures {:?}, {:.1}s",
            rows.len(),
            per_solver.join(" "),
            failures.len(),
            failures.iter().take(5).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

/// Cheapest cover by brute force over every subset of `segs`.
fn subset_enumeration(inst: &Instance, segs: &[Segment]) -> Option<Coord> {
    let full = mask::full(inst.len());
    let covers: Vec<(u128, Coord)> = segs
        .iter()
        .map(|s| {
            let m = inst.rects.iter().filter(|r| stabs(s, r)).fold(0, |m, r| m | mask::bit(r.id));
            (m, s.len())
        })
        .collect();
    (0u32..1 << segs.len())
        .filter_map(|pick| {
            let (m, c) = (0..segs.len())
                .filter(|k| pick >> k & 1 == 1)
                .fold((0u128, 0), |(m, c), k| (m | covers[k].0, c + covers[k].1));
            (m == full).then_some(c)
        })
        .min()
}

/// Cheapest cover over every segment with integer endpoints in the
/// bounding box, by a dynamic program over covered subsets.
fn full_universe_optimum(inst: &Instance) -> Coord {
    let b = inst.bounds;
    let n = inst.len();
    let mut best = vec![Coord::MAX; 1 << n];
    best[0] = 0;
    let mut covers = Vec::new();
    for anchor in b.y1..=b.y2 {
        for lo in b.x1..=b.x2 {
            for hi in lo + 1..=b.x2 {
                covers.push(Segment::horizontal(anchor, lo, hi));
            }
        }
    }
    for anchor in b.x1..=b.x2 {
        for lo in b.y1..=b.y2 {
            for hi in lo + 1..=b.y2 {
                covers.push(Segment::vertical(anchor, lo, hi));
            }
        }
    }
    let covers: Vec<(usize, Coord)> = covers
        .iter()
        .map(|s| {
            let m = inst.rects.iter().filter(|r| stabs(s, r)).fold(0usize, |m, r| m | 1 << r.id);
            (m, s.len())
        })
        .filter(|&(m, _)| m != 0)
        .collect();
    for m in 0..1usize << n {
        if best[m] == Coord::MAX {
            continue;
        }
        for &(c, len) in &covers {
            let next = m | c;
            best[next] = best[next].min(best[m] + len);
        }
    }
    best[(1 << n) - 1]
}

fn c2_oracle() -> Outcome {
    let start = Instant::now();
    let coarse = GenParams {
        max_side: 3,
        extent: 4,
        ..GenParams::default()
    };
    let mut enumerated = 0;
    let mut exchanged = 0;
    let mut bad = Vec::new();
    for seed in 0..ORACLE_INSTANCES {
        let family = Family::ALL[seed as usize % 4];
        let n = 1 + seed as usize % ORACLE_MAX_N;
        let inst = generate(family, n, 70_000 + seed, &coarse).unwrap();
        let cands = canonical_candidates(&inst);
        let opt = exact(&inst).cost;
        if cands.len() <= ORACLE_MAX_CANDS {
            enumerated += 1;
            if subset_enumeration(&inst, &cands.segments()) != Some(opt) {
                bad.push(format!("enumeration seed {seed}"));
            }
        }
        exchanged += 1;
        if full_universe_optimum(&inst) != opt {
            bad.push(format!("exchange seed {seed}"));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && enumerated > 0 && elapsed < ORACLE_LIMIT,
        format!(
            "{enumerated} subset-enumeration checks, {exchanged} full-universe checks, mismatches {bad:?}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

struct SandwichRow {
    inst: Instance,
    exact: Coord,
    dp: Coord,
    greedy: Coord,
}

fn sandwich_corpus() -> Vec<Instance> {
    (0..SANDWICH_INSTANCES)
        .map(|i| {
            let family = if i % 2 == 0 { Family::Tall } else { Family::Squares };
            generate(family, 1 + i % SANDWICH_MAX_N, 5000 + i as u64, &GenParams::default()).unwrap()
        })
        .collect()
}

fn c3_sandwich(rows: &mut Vec<SandwichRow>) -> Outcome {
    let start = Instant::now();
    let cfg = DpConfig::new(eps());
    let mut broken = Vec::new();
    for (i, inst) in sandwich_corpus().into_iter().enumerate() {
        let opt = exact(&inst).cost;
        let (dp, _) = solve_hv_tall(&inst, &cfg).expect("tall corpus");
        let g = greedy(&inst).cost;
        if !(opt <= dp.cost && dp.cost <= g) || !verify(&inst, &dp).unwrap().feasible {
            broken.push(format!("#{i}: {opt} {} {g}", dp.cost));
        }
        rows.push(SandwichRow {
            inst,
            exact: opt,
            dp: dp.cost,
            greedy: g,
        });
    }
    let elapsed = start.elapsed();
    outcome(
        broken.is_empty() && elapsed < SANDWICH_LIMIT,
        format!(
            "{} instances, exact <= dp <= greedy violated on {broken:?}, {:.1}s",
            rows.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c4_quality(rows: &[SandwichRow]) -> Outcome {
    let mut ratios: Vec<Rational> = rows.iter().map(|r| ratio(r.dp, r.exact)).collect();
    ratios.sort();
    let median = ratios[ratios.len() / 2];
    let max = *ratios.last().unwrap();
    let bound = Rational::one() + eps() * RATIO_SLACK;
    let limit = Rational::new(MEDIAN_RATIO.0, MEDIAN_RATIO.1);
    let q = |p: usize| f(ratios[(ratios.len() - 1) * p / 100]);
    let exact_hits = ratios.iter().filter(|r| **r == Rational::one()).count();
    let greedy_worse = rows.iter().filter(|r| r.greedy > r.dp).count();
    outcome(
        median <= limit && max <= bound,
        format!(
            "dp/exact min {:.4} p25 {:.4} median {:.4} p75 {:.4} p90 {:.4} max {:.4}; ratio 1 on {exact_hits}/{}; greedy strictly worse on {greedy_worse}",
            q(0),
            q(25),
            f(median),
            q(75),
            q(90),
            f(max),
            ratios.len()
        ),
    )
}

fn c5_inflation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let e = eps();
    let mut worst_align = Rational::from_integer(0);
    let mut worst_split = Rational::from_integer(0);
    let mut bad = 0;
    for _ in 0..INFLATION_SAMPLES {
        let den = rng.gen_range(1..=64i128);
        let lo = Rational::new(rng.gen_range(-400..=400), den);
        let len = Rational::new(rng.gen_range(1..=2000), rng.gen_range(1..=256i128));
        let anchor = Rational::new(rng.gen_range(-50..=50), den);
        let seg = if rng.gen_bool(0.5) {
            Segment::horizontal(anchor, lo, lo + len)
        } else {
            Segment::vertical(anchor, lo, lo + len)
        };
        let grid = GridSpec::new(e, rng.gen_range(0..16), Rational::new(1, den));
        let aligned = well_align(&seg, &grid).unwrap();
        let inflation = aligned.len() / seg.len();
        worst_align = worst_align.max(inflation);
        if !(aligned.lo <= seg.lo && seg.hi <= aligned.hi) || inflation > Rational::one() + e * 2 {
            bad += 1;
        }

        let extent: Coord = rng.gen_range(1..=12);
        let pieces: Vec<Segment> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let lo = rng.gen_range(-200..=200);
                Segment::horizontal(rng.gen_range(0..50), lo, lo + rng.gen_range(1..=400))
            })
            .collect();
        let sol = Solution::new(pieces, "sample");
        let split = split_long_segments(&sol, e, extent);
        let inflation = ratio(split.cost, sol.cost);
        worst_split = worst_split.max(inflation);
        if inflation > Rational::one() + e * 4 {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!(
            "{INFLATION_SAMPLES} samples each; worst well_align {:.4} (bound {:.2}), worst split {:.4} (bound {:.2})",
            f(worst_align),
            f(Rational::one() + e * 2),
            f(worst_split),
            f(Rational::one() + e * 4)
        ),
    )
}

fn horizontal_opt(inst: &Instance) -> Coord {
    let h: CandidateSet = canonical_candidates(inst).filter(Segment::is_horizontal);
    exact_oracle(inst, &h, oracle_budget()).unwrap().cost
}

fn c6_stabbing(fuzz: &[FuzzRow], sandwich: &[SandwichRow]) -> Outcome {
    let cfg = DpConfig::new(eps());
    let mut vertical = 0;
    let mut total = 0;
    let mut compared = 0;
    let mut over = Vec::new();
    let mut worst = Rational::one();
    let bound = Rational::one() + eps() * RATIO_SLACK;
    let mut check = |inst: &Instance, sol: &Solution| {
        total += 1;
        if sol.has_vertical() || !verify(inst, sol).unwrap().feasible {
            vertical += 1;
        }
        if inst.len() <= SANDWICH_MAX_N {
            compared += 1;
            let r = ratio(sol.cost, horizontal_opt(inst));
            worst = worst.max(r);
            if r > bound || r < Rational::one() {
                over.push(f(r));
            }
        }
    };
    let mut missing = 0;
    for row in fuzz {
        match &row.stabbing {
            Some(sol) => check(&row.inst, sol),
            None => missing += 1,
        }
    }
    for row in sandwich {
        let sol = stabkit::dp::solve_stabbing(&row.inst, &cfg).unwrap();
        check(&row.inst, &sol);
    }
    outcome(
        vertical == 0 && missing == 0 && over.is_empty(),
        format!(
            "{total} outputs, {missing} missing, {vertical} with a vertical segment or infeasible; {compared} compared with the horizontal-only optimum, worst ratio {:.4}, out of range {over:?}",
            f(worst)
        ),
    )
}

fn c7_additivity(fuzz: &[FuzzRow]) -> Outcome {
    let cfg = DpConfig::new(eps());
    let mut bad = Vec::new();
    for (i, row) in fuzz.iter().enumerate() {
        let (tall, wide) = split_by_orientation(&row.inst);
        let a = solve_hv_tall(&tall, &cfg).unwrap().0.cost;
        let b = solve_hv_tall(&wide, &cfg).unwrap().0.cost;
        if row.costs.get(&Solver::Dp2Eps) != Some(&(a + b)) {
            bad.push(i);
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} instances, cost != tall + wide on {bad:?}", fuzz.len()),
    )
}

fn c8_delta() -> Outcome {
    let cfg = DeltaConfig::new(Rational::new(1, 2), eps());
    let mut infeasible = Vec::new();
    let mut unsound = 0;
    let mut short_side = 0;
    let mut decompositions = 0;
    let mut containment = (0, 0);
    for i in 0..DELTA_INSTANCES {
        let n = 1 + i % DELTA_MAX_N;
        let inst = generate(Family::DeltaLarge, n, 9000 + i as u64, &GenParams::default()).unwrap();
        match solve_delta_large(&inst, &cfg) {
            Ok((sol, _)) if verify(&inst, &sol).unwrap().feasible => {}
            other => infeasible.push(format!("#{i}: {:?}", other.err())),
        }
        for (part, _) in normalize_general(&inst, eps()).unwrap() {
            for a in 0..16 {
                let d = decompose(&part, &cfg, a);
                decompositions += 1;
                if !d.is_sound(&part) {
                    unsound += 1;
                }
                if a != 0 {
                    continue;
                }
                for members in &d.members {
                    let cell = part.subset(members.iter().map(|&k| part.rects[k]).collect());
                    let big = big_rects(&cell, cfg.delta);
                    let cands = canonical_candidates(&cell);
                    let open = DeltaConfig {
                        guess_size_cap: cell.len(),
                        node_budget: usize::MAX,
                        ..cfg.clone()
                    };
                    let covering = |g: &Vec<Segment>| big.iter().all(|&k| g.iter().any(|s| stabs(s, &cell.rects[k])));
                    // short sides: whatever a covering guess leaves is below delta on one side
                    for g in guess_long_segments(&cell, &open, &cands).unwrap().filter(covering).take(50) {
                        let left = cell.rects.iter().filter(|r| !g.iter().any(|s| stabs(s, r)));
                        if left.clone().any(|r| cell.physical(r.min_stab()) >= cfg.delta) {
                            short_side += 1;
                        }
                    }
                    if cell.len() > CONTAINMENT_MAX_CELL {
                        continue;
                    }
                    containment.0 += 1;
                    let opt = exact(&cell).cost;
                    let mut best = Coord::MAX;
                    for g in guess_long_segments(&cell, &open, &cands).unwrap().filter(covering) {
                        best = best.min(complete_guess(&cell, &open, &g).unwrap().cost);
                        if best == opt {
                            break;
                        }
                    }
                    if best == opt {
                        containment.1 += 1;
                    }
                }
            }
        }
    }
    outcome(
        infeasible.is_empty() && unsound == 0 && short_side == 0 && containment.0 == containment.1,
        format!(
            "{DELTA_INSTANCES} instances, infeasible {infeasible:?}; {decompositions} decompositions, {unsound} unsound; short-side violations {short_side}; correct guess found in {}/{} small cells",
            containment.1, containment.0
        ),
    )
}

/// Everything a fixed-seed session writes: instance files, solutions,
/// renders and the benchmark CSV.
fn session_bytes() -> Vec<u8> {
    let mut out = Vec::new();
    let corpus: Vec<(String, Instance)> = (0..DETERMINISM_INSTANCES)
        .map(|i| {
            let family = Family::ALL[i % Family::ALL.len()];
            let inst = generate(family, 2 + i % 9, 300 + i as u64, &GenParams::default()).unwrap();
            (format!("{family}-{i:03}"), inst)
        })
        .collect();
    let opts = SolveOptions::default();
    for (name, inst) in &corpus {
        out.extend(emit_instance(inst, BTreeMap::from([("name".to_string(), name.clone())])).bytes());
        for solver in Solver::ALL {
            if let Ok(o) = run_solver(inst, solver, &opts) {
                out.extend(emit_solution(&o.solution, inst.grid_unit).bytes());
                out.extend(render_svg(inst, Some(&o.solution)).bytes());
            }
        }
    }
    out.extend(compare(&corpus, &Solver::ALL, &opts, false).to_csv().bytes());
    out
}

fn c9_determinism() -> Outcome {
    let runs: Vec<(usize, Vec<u8>)> = THREAD_COUNTS
        .iter()
        .chain(&THREAD_COUNTS[..1])
        .map(|&t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            (t, pool.install(session_bytes))
        })
        .collect();
    let same = runs.iter().all(|(_, b)| *b == runs[0].1);
    outcome(
        same,
        format!(
            "{} runs over thread counts {:?}, {} bytes each, identical: {same}",
            runs.len(),
            runs.iter().map(|r| r.0).collect::<Vec<_>>(),
            runs[0].1.len()
        ),
    )
}

fn c10_ceiling() -> Outcome {
    let cfg = DpConfig::new(eps());
    let mut worst = Duration::ZERO;
    for seed in 0..CEILING_SEEDS {
        for family in [Family::Tall, Family::Squares] {
            let inst = generate(family, CEILING_N, 40 + seed, &GenParams::default()).unwrap();
            let start = Instant::now();
            let (sol, stats) = solve_hv_tall(&inst, &cfg).unwrap();
            worst = worst.max(start.elapsed());
            assert!(verify(&inst, &sol).unwrap().feasible);
            assert!(stats.offsets_run >= 1);
        }
    }
    outcome(
        worst < CEILING_LIMIT,
        format!(
            "n = {CEILING_N}, {} instances with every offset, slowest {:.2}s (limit {}s)",
            2 * CEILING_SEEDS,
            worst.as_secs_f64(),
            CEILING_LIMIT.as_secs()
        ),
    )
}

fn main() -> ExitCode {
    let mut fuzz = Vec::new();
    let mut sandwich = Vec::new();
    // order matters: later criteria reuse the corpora solved earlier
    let results: Vec<(&str, Outcome)> = vec![
        ("C1 feasibility fuzzing", c1_feasibility(&mut fuzz)),
        ("C2 oracle equivalence", c2_oracle()),
        ("C3 sandwich", c3_sandwich(&mut sandwich)),
        ("C4 dp quality", c4_quality(&sandwich)),
        ("C5 inflation bounds", c5_inflation()),
        ("C6 horizontal stabbing", c6_stabbing(&fuzz, &sandwich)),
        ("C7 two-part additivity", c7_additivity(&fuzz)),
        ("C8 delta-large pipeline", c8_delta()),
        ("C9 determinism", c9_determinism()),
        ("C10 runtime ceiling", c10_ceiling()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Run reports, comparison tables and benchmark CSV.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::geometry::{verify, Coord, Instance};
use crate::harness::solvers::{run_solver, SolveOptions, Solver};
use crate::Rational;

/// One solver on one instance. `feasible` is the verifier's verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRow {
    pub instance: String,
    pub solver_tag: String,
    /// Physical cost as `p/q`; empty when the solver failed.
    pub cost: String,
    pub cost_units: Option<Coord>,
    pub feasible: bool,
    pub wall_ms: u64,
    /// `cost / exact` as `p/q`, when the exact cost is known.
    pub ratio_vs_exact: Option<String>,
    pub stats: Value,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub rows: Vec<RunRow>,
}

/// With `timing` off every `wall_ms` is zero, so reports are byte-stable.
pub fn run_one(name: &str, inst: &Instance, solver: Solver, opts: &SolveOptions, timing: bool) -> RunRow {
    let start = Instant::now();
    let result = run_solver(inst, solver, opts);
    let wall_ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
    let mut row = RunRow {
        instance: name.to_string(),
        solver_tag: solver.name().to_string(),
        cost: String::new(),
        cost_units: None,
        feasible: false,
        wall_ms,
        ratio_vs_exact: None,
        stats: Value::Null,
        error: None,
    };
    match result {
        Ok(out) => {
            let verdict = verify(inst, &out.solution);
            row.feasible = verdict.as_ref().is_ok_and(|v| v.feasible);
            row.cost = inst.physical(out.solution.cost).to_string();
            row.cost_units = Some(out.solution.cost);
            row.stats = out.stats;
            if let Err(e) = verdict {
                row.error = Some(e.to_string());
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every solver on every instance, in parallel over instances. The
/// exact cost, when the oracle is within budget, fills `ratio_vs_exact`.
pub fn compare(corpus: &[(String, Instance)], solvers: &[Solver], opts: &SolveOptions, timing: bool) -> RunReport {
    let mut rows: Vec<RunRow> = corpus
        .par_iter()
        .flat_map_iter(|(name, inst)| {
            let mut rows: Vec<RunRow> = solvers.iter().map(|&s| run_one(name, inst, s, opts, timing)).collect();
            let exact = rows
                .iter()
                .find(|r| r.solver_tag == Solver::Exact.name() && r.feasible)
                .and_then(|r| r.cost_units)
                .or_else(|| {
                    let r = run_one(name, inst, Solver::Exact, opts, false);
                    r.feasible.then_some(r.cost_units).flatten()
                });
            if let Some(opt) = exact {
                for r in &mut rows {
                    if let (Some(c), true) = (r.cost_units, r.feasible) {
                        r.ratio_vs_exact = Some(ratio(c, opt).to_string());
                    }
                }
            }
            rows
        })
        .collect();
    rows.sort_by(|a, b| (&a.instance, &a.solver_tag).cmp(&(&b.instance, &b.solver_tag)));
    RunReport { rows }
}

fn ratio(cost: Coord, opt: Coord) -> Rational {
    if opt == 0 {
        Rational::from_integer(if cost == 0 { 1 } else { i128::MAX })
    } else {
        Rational::new(cost as i128, opt as i128)
    }
}

fn decimal(r: &str) -> String {
    match crate::harness::io::parse_rational(r) {
        Ok(v) => format!("{:.6}", *v.numer() as f64 / *v.denom() as f64),
        Err(_) => String::new(),
    }
}

impl RunReport {
    pub fn all_feasible(&self) -> bool {
        self.rows.iter().all(|r| r.feasible)
    }

    /// `instance,solver,cost,ratio_vs_exact,wall_ms`, one row per run.
    /// Failed runs have an empty cost.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,solver,cost,ratio_vs_exact,wall_ms\n");
        for r in &self.rows {
            let ratio = r.ratio_vs_exact.as_deref().map(decimal).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", r.instance, r.solver_tag, r.cost, ratio, r.wall_ms);
        }
        out
    }

    /// Aligned text table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<24} {:<10} {:>12} {:>10} {:>9} {:>8}\n",
            "instance", "solver", "cost", "ratio", "feasible", "ms"
        );
        for r in &self.rows {
            let cost = if r.error.is_some() && r.cost.is_empty() {
                "error".to_string()
            } else {
                r.cost.clone()
            };
            let ratio = r.ratio_vs_exact.as_deref().map(decimal).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<24} {:<10} {:>12} {:>10} {:>9} {:>8}",
                r.instance, r.solver_tag, cost, ratio, r.feasible, r.wall_ms
            );
        }
        out
    }
}

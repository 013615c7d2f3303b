//! Solver names and dispatch.

use std::fmt;
use std::str::FromStr;

use serde_json::Value;
use thiserror::Error;

use crate::baseline::{exact_oracle, greedy, BaselineError, OracleBudget};
use crate::candidates::canonical_candidates;
use crate::delta::{solve_delta_large, DeltaConfig, DeltaError};
use crate::dp::{solve_hv_2eps, solve_hv_tall, solve_stabbing, DpConfig, DpError, OffsetPolicy, DP_TAG};
use crate::geometry::{Instance, Solution};
use crate::preprocess::{normalize_tall, solve_normalized, PreprocessError};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Solver {
    Exact,
    Greedy,
    /// Dynamic program; every rectangle must satisfy `h >= w`.
    Dp,
    /// Dynamic program on the tall and the wide part separately.
    Dp2Eps,
    /// Horizontal segments only.
    Stabbing,
    /// Every rectangle must be delta-large.
    Delta,
}

impl Solver {
    pub const ALL: [Solver; 6] = [
        Solver::Exact,
        Solver::Greedy,
        Solver::Dp,
        Solver::Dp2Eps,
        Solver::Stabbing,
        Solver::Delta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Greedy => "greedy",
            Solver::Dp => "dp",
            Solver::Dp2Eps => "dp2eps",
            Solver::Stabbing => "stabbing",
            Solver::Delta => "delta",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown solver {0:?}; expected one of exact, greedy, dp, dp2eps, stabbing, delta")]
pub struct UnknownSolver(pub String);

impl FromStr for Solver {
    type Err = UnknownSolver;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Solver::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| UnknownSolver(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

impl SolveError {
    /// The instance or parameters fall outside what the solver accepts, as
    /// opposed to a failure inside the solver.
    pub fn is_bad_input(&self) -> bool {
        match self {
            SolveError::Baseline(BaselineError::BudgetExceeded { .. }) => true,
            SolveError::Baseline(BaselineError::Infeasible(_)) => false,
            SolveError::Dp(e) => !matches!(e, DpError::VerticalLeak | DpError::Infeasible(_)),
            SolveError::Delta(e) => match e {
                DeltaError::NotDeltaLarge(_) | DeltaError::GuessSpaceExceeded { .. } => true,
                DeltaError::ShortSideViolated(_) | DeltaError::Infeasible(_) => false,
                DeltaError::Preprocess(p) => SolveError::Preprocess(p.clone()).is_bad_input(),
                DeltaError::Dp(d) => SolveError::Dp(d.clone()).is_bad_input(),
            },
            SolveError::Preprocess(p) => !matches!(p, PreprocessError::RecordMismatch(_)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Overrides the instance's epsilon.
    pub eps: Option<Rational>,
    pub delta: Rational,
    pub offset: OffsetPolicy,
    /// Run `dp` on the normalized instance.
    pub normalize: bool,
    pub oracle: OracleBudget,
    pub add_arity_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eps: None,
            delta: Rational::new(1, 2),
            offset: OffsetPolicy::EnumerateAll,
            normalize: false,
            oracle: OracleBudget::default(),
            add_arity_cap: 2,
        }
    }
}

impl SolveOptions {
    pub fn dp_config(&self, inst: &Instance) -> DpConfig {
        DpConfig::new(self.eps.unwrap_or(inst.epsilon))
            .with_offset(self.offset)
            .with_arity(self.add_arity_cap)
            .with_env_overrides()
    }
}

/// A solution with solver-specific counters.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub solution: Solution,
    pub stats: Value,
}

pub fn run_solver(inst: &Instance, solver: Solver, opts: &SolveOptions) -> Result<Outcome, SolveError> {
    let dp = opts.dp_config(inst);
    let (solution, stats) = match solver {
        Solver::Exact => (exact_oracle(inst, &canonical_candidates(inst), opts.oracle)?, Value::Null),
        Solver::Greedy => (greedy(inst), Value::Null),
        Solver::Dp if opts.normalize => {
            let parts = normalize_tall(inst, dp.eps)?;
            let sol = solve_normalized::<SolveError>(&parts, DP_TAG, |p| Ok(solve_hv_tall(p, &dp)?.0))?;
            (sol, Value::Null)
        }
        Solver::Dp => {
            let (sol, stats) = solve_hv_tall(inst, &dp)?;
            (sol, serde_json::to_value(stats).expect("stats serialize"))
        }
        Solver::Dp2Eps => (solve_hv_2eps(inst, &dp)?, Value::Null),
        Solver::Stabbing => (solve_stabbing(inst, &dp)?, Value::Null),
        Solver::Delta => {
            let cfg = DeltaConfig {
                dp,
                ..DeltaConfig::new(opts.delta, opts.eps.unwrap_or(inst.epsilon))
            };
            let (sol, report) = solve_delta_large(inst, &cfg)?;
            (sol, serde_json::to_value(report).expect("report serializes"))
        }
    };
    Ok(Outcome { solution, stats })
}

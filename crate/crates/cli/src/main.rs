use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stabkit::dp::OffsetPolicy;
use stabkit::geometry::{verify, Instance};
use stabkit::harness::gen::{generate, Family, GenParams};
use stabkit::harness::io::{emit_instance, emit_solution, parse_instance, parse_rational, parse_solution};
use stabkit::harness::render::render_svg;
use stabkit::harness::report::{compare, RunReport};
use stabkit::harness::solvers::{run_solver, SolveOptions, Solver};
use stabkit::Rational;

const OK: u8 = 0;
const INFEASIBLE: u8 = 1;
const BAD_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "stabkit", version, about = "Minimum-length rectangle stabbing solvers")]
struct Cli {
    /// Worker threads for parallel offset search and corpus runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1/4", value_parser = rational)]
        eps: Rational,
        #[arg(long, default_value = "1/2", value_parser = rational)]
        delta: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one solver and write the verified solution.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solver: Solver,
        #[command(flatten)]
        opts: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution file against an instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Run several solvers over instance files or directories.
    Compare {
        #[arg(long = "instance", required = true)]
        instances: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "greedy,dp2eps")]
        solvers: Vec<Solver>,
        #[command(flatten)]
        opts: SolverArgs,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw an instance, and a solution if given, as SVG.
    Render {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark CSV: instance, solver, cost, ratio_vs_exact, wall_ms.
    Bench {
        #[arg(long = "instance", required = true)]
        instances: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "exact,greedy,dp2eps,stabbing")]
        solvers: Vec<Solver>,
        #[command(flatten)]
        opts: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Overrides the epsilon stored in the instance.
    #[arg(long, value_parser = rational)]
    eps: Option<Rational>,
    #[arg(long, default_value = "1/2", value_parser = rational)]
    delta: Rational,
    /// `all` or a fixed grid offset.
    #[arg(long, default_value = "all", value_parser = offset)]
    offset: OffsetPolicy,
    /// Normalize the instance before running `dp`.
    #[arg(long)]
    normalize: bool,
    /// Largest number of segments one add step may place.
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// Report zero for every timing so output is byte-stable.
    #[arg(long)]
    no_timing: bool,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            eps: self.eps,
            delta: self.delta,
            offset: self.offset,
            normalize: self.normalize,
            add_arity_cap: self.arity.max(1),
            ..SolveOptions::default()
        }
    }
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s)
}

fn offset(s: &str) -> Result<OffsetPolicy, String> {
    if s == "all" {
        return Ok(OffsetPolicy::EnumerateAll);
    }
    s.parse::<i64>()
        .map(OffsetPolicy::Fixed)
        .map_err(|_| format!("expected `all` or an integer, found {s:?}"))
}

struct Failure {
    code: u8,
    message: String,
}

fn bad(message: impl Into<String>) -> Failure {
    Failure {
        code: BAD_INPUT,
        message: message.into(),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| bad(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?)
        .map(|(inst, _)| inst)
        .map_err(|e| bad(format!("{}: {e}", path.display())))
}

/// Instance files named directly, plus every `.json` file of named
/// directories, in path order.
fn corpus(paths: &[PathBuf]) -> Result<Vec<(String, Instance)>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files
        .iter()
        .map(|f| {
            let name = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, load(f)?))
        })
        .collect()
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen {
            family,
            n,
            seed,
            eps,
            delta,
            out,
        } => {
            let params = GenParams {
                eps,
                delta,
                ..GenParams::default()
            };
            let inst = generate(family, n, seed, &params).map_err(|e| bad(e.to_string()))?;
            let meta = BTreeMap::from([
                ("family".to_string(), family.to_string()),
                ("n".to_string(), n.to_string()),
                ("seed".to_string(), seed.to_string()),
            ]);
            write_out(out.as_deref(), &emit_instance(&inst, meta))?;
            Ok(OK)
        }
        Command::Solve {
            instance,
            solver,
            opts,
            out,
        } => {
            let inst = load(&instance)?;
            let outcome = run_solver(&inst, solver, &opts.options()).map_err(|e| Failure {
                code: if e.is_bad_input() { BAD_INPUT } else { INFEASIBLE },
                message: e.to_string(),
            })?;
            let verdict = verify(&inst, &outcome.solution).map_err(|e| Failure {
                code: INFEASIBLE,
                message: e.to_string(),
            })?;
            if !verdict.feasible {
                return Err(Failure {
                    code: INFEASIBLE,
                    message: format!("{solver} left rectangles {:?} unstabbed", verdict.unstabbed),
                });
            }
            write_out(out.as_deref(), &emit_solution(&outcome.solution, inst.grid_unit))?;
            eprintln!(
                "{solver}: cost {} with {} segments, verified",
                inst.physical(outcome.solution.cost),
                outcome.solution.segments.len()
            );
            Ok(OK)
        }
        Command::Verify { instance, solution } => {
            let inst = load(&instance)?;
            let sol = parse_solution(&read(&solution)?, inst.grid_unit)
                .map_err(|e| bad(format!("{}: {e}", solution.display())))?;
            match verify(&inst, &sol) {
                Ok(v) if v.feasible => {
                    println!("feasible, cost {}", inst.physical(v.recomputed_cost));
                    Ok(OK)
                }
                Ok(v) => {
                    println!("infeasible: rectangles {:?} unstabbed", v.unstabbed);
                    Ok(INFEASIBLE)
                }
                Err(e) => {
                    println!("infeasible: {e}");
                    Ok(INFEASIBLE)
                }
            }
        }
        Command::Compare {
            instances,
            solvers,
            opts,
            out,
        } => {
            let report = compare(&corpus(&instances)?, &solvers, &opts.options(), !opts.no_timing);
            print!("{}", report.to_table());
            if let Some(p) = out {
                let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                write_out(Some(&p), &json)?;
            }
            Ok(exit_for(&report))
        }
        Command::Render {
            instance,
            solution,
            out,
        } => {
            let inst = load(&instance)?;
            let sol = match solution {
                Some(p) => Some(
                    parse_solution(&read(&p)?, inst.grid_unit).map_err(|e| bad(format!("{}: {e}", p.display())))?,
                ),
                None => None,
            };
            write_out(out.as_deref(), &render_svg(&inst, sol.as_ref()))?;
            Ok(OK)
        }
        Command::Bench {
            instances,
            solvers,
            opts,
            out,
        } => {
            let report = compare(&corpus(&instances)?, &solvers, &opts.options(), !opts.no_timing);
            write_out(out.as_deref(), &report.to_csv())?;
            Ok(exit_for(&report))
        }
    }
}

/// Rows that failed on bad input are reported but do not fail the run; a
/// solution that does not verify does.
fn exit_for(report: &RunReport) -> u8 {
    let broken = report.rows.iter().any(|r| r.cost_units.is_some() && !r.feasible);
    if broken {
        INFEASIBLE
    } else {
        OK
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(BAD_INPUT);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

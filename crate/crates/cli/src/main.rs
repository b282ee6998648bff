use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use bncut::oracle::{dp_optimal, DP_MAX_VARS};
use bncut::scores::DEFAULT_ENTRY_BUDGET;
use bncut::{build_model, enumerate_scores, prune, read_dataset, read_score_file, solve, write_score_file, SolverParams};
use clap::{Args, Parser, Subcommand};

/// Exact Bayesian network structure learning by branch-and-cut.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute BDeu local scores for a CSV dataset and write a pruned score file.
    Score(ScoreArgs),
    /// Find an optimal DAG for a score file.
    Solve(SolveArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// CSV file with a header row of variable names.
    #[arg(short, long)]
    input: PathBuf,
    /// Score file to write; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Largest parent set size.
    #[arg(short = 'm', long, default_value_t = 3)]
    max_parents: usize,
    /// Equivalent sample size of the BDeu prior.
    #[arg(long, default_value_t = 1.0)]
    ess: f64,
    /// Refuse to score more than this many parent sets.
    #[arg(long, default_value_t = DEFAULT_ENTRY_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct SolveArgs {
    /// Score file.
    #[arg(short, long)]
    input: PathBuf,
    /// Overall time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Time limit in seconds for each cluster separation call.
    #[arg(long)]
    subip_time_limit: Option<f64>,
    /// Stop after this many search nodes.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Disable Gomory cuts.
    #[arg(long)]
    no_gomory: bool,
    /// Add 1-cluster rows only.
    #[arg(long)]
    no_k2_cuts: bool,
    /// Disable the random-order and rounding heuristics.
    #[arg(long)]
    no_heuristics: bool,
    /// Seed for the random-order heuristic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check the result against the dynamic-programming learner.
    #[arg(long)]
    verify: bool,
    /// Write the optimal DAG in DOT format to this file.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the final relaxation, cuts included, in LP format to this file.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    /// Record per-round events in the stats line.
    #[arg(long)]
    trace: bool,
}

fn seconds(flag: &str, v: Option<f64>) -> Result<Option<Duration>> {
    match v {
        None => Ok(None),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => bail!("--{flag} must be a positive number of seconds, got {s}"),
    }
}

fn run_score(args: &ScoreArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let data = read_dataset(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    log::info!("{} variables, {} rows", data.n_vars(), data.n_rows());
    let m = args.max_parents.min(data.n_vars() - 1);
    if m < args.max_parents {
        log::warn!("parent limit lowered to {m}, the number of other variables");
    }
    let full = enumerate_scores(&data, m, args.ess, args.budget)?;
    let pruned = prune(&full);
    log::info!("{} parent sets scored, {} kept after pruning", full.len(), pruned.len());
    let out = write_score_file(&pruned);
    match &args.output {
        Some(path) => fs::write(path, out).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let table = read_score_file(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    let pruned = prune(&table);
    log::info!("{} parent sets, {} after pruning", table.len(), pruned.len());

    let params = SolverParams {
        time_limit: seconds("time-limit", args.time_limit)?,
        subip_time_limit: seconds("subip-time-limit", args.subip_time_limit)?,
        node_limit: args.node_limit,
        gomory: !args.no_gomory,
        k2_cuts: !args.no_k2_cuts,
        heuristics: !args.no_heuristics,
        seed: args.seed,
        trace: args.trace,
        ..Default::default()
    };
    let mut model = build_model(&pruned);
    let result = solve(&mut model, &params)?;
    let names = table.names();

    print!("{}", result.optimal.digraph.to_text(names));
    println!("score {}", result.optimal.score);
    println!("bound {}", result.proof_bound);
    println!("stats {}", serde_json::to_string(&result.stats)?);
    let st = &result.stats;
    eprintln!(
        "{:.3}s, {} nodes, {} cluster cuts ({} with k=2), {} Gomory cuts, {} rows",
        st.wall_time_secs, st.nodes, st.cluster_cuts, st.k2_cuts, st.gomory_cuts, st.rows
    );

    if let Some(path) = &args.dot {
        fs::write(path, result.optimal.digraph.to_dot(names)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.dump_lp {
        fs::write(path, model.to_lp_format()).with_context(|| format!("writing {}", path.display()))?;
    }

    let mut ok = true;
    if result.truncated() {
        eprintln!("error: search stopped at a resource limit; the DAG is not proven optimal");
        ok = false;
    }
    if args.verify {
        if table.n_vars() > DP_MAX_VARS {
            eprintln!("warning: --verify skipped, {} variables exceeds {}", table.n_vars(), DP_MAX_VARS);
        } else {
            let reference = dp_optimal(&table)?;
            let tol = 1e-6 * (1.0 + reference.score.abs());
            if (reference.score - result.optimal.score).abs() <= tol {
                println!("verify ok {}", reference.score);
            } else {
                eprintln!(
                    "error: verification failed, solver {} vs dynamic programming {}",
                    result.optimal.score, reference.score
                );
                ok = false;
            }
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Score(args) => run_score(args),
        Command::Solve(args) => run_solve(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

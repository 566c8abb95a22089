use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmaes::bench::report::{emit_diagnostic_medians, emit_reports, write_trace, Manifest};
use mmaes::bench::{run_batch, run_single, summarize, BatchConfig, BenchError, RotationMode, DEFAULT_RUNS};
use mmaes::diagnostics::DiagnosticsConfig;
use mmaes::objectives::Problem;
use mmaes::strategy::{RunOptions, Variant, DEFAULT_BUDGET_PER_DIM};

/// Mutation-matrix-adaptation evolution strategies and benchmarks.
#[derive(Parser, Debug)]
#[command(name = "mmaes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single run, result printed as JSON.
    Run(RunArgs),
    /// Batch of runs with per-cell summaries.
    Bench(BenchArgs),
    /// MMA diagnostics study on one problem.
    Diag(DiagArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    algo: Variant,
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    seed: u64,
    /// Defaults to 100000·dim.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    run_index: u64,
    /// Trace CSV output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Comma list of alpha, bgap, eigen, ortho or all.
    #[arg(long)]
    diag: Option<DiagnosticsConfig>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<Variant>,
    #[arg(long, value_delimiter = ',', required = true)]
    problems: Vec<Problem>,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32, 64, 128, 256])]
    dims: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    budget: Option<u64>,
    /// Variant the others are compared against.
    #[arg(long)]
    baseline: Option<Variant>,
    /// none, rotated or both.
    #[arg(long, default_value = "none")]
    rotate: RotationMode,
    #[arg(long)]
    diag: Option<DiagnosticsConfig>,
}

#[derive(Args, Debug)]
struct DiagArgs {
    #[arg(long)]
    problem: Problem,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long)]
    budget: Option<u64>,
}

fn invocation() -> Vec<String> {
    std::env::args().collect()
}

fn cmd_run(args: RunArgs) -> Result<(), BenchError> {
    let budget = args.budget.unwrap_or(DEFAULT_BUDGET_PER_DIM * args.dim as u64);
    let mut options = RunOptions::with_budget(budget);
    options.diagnostics = match (&args.diag, &args.trace) {
        (Some(d), _) => Some(d.clone()),
        (None, Some(_)) => Some(DiagnosticsConfig::basic()),
        (None, None) => None,
    };
    let mut record = run_single(
        args.algo,
        args.problem,
        args.dim,
        None,
        args.seed,
        args.run_index,
        &options,
    )?;
    if let (Some(path), Some(rows)) = (&args.trace, &record.trace) {
        let eigen = options
            .diagnostics
            .as_ref()
            .is_some_and(|d| d.eigen)
            .then_some(args.dim);
        write_trace(path, rows, eigen)?;
    }
    record.trace = None;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), BenchError> {
    let mut config = BatchConfig::new(args.algos, args.problems, args.dims, args.runs, args.seed);
    config.budget = args.budget;
    config.rotation = args.rotate;
    config.diagnostics = args.diag;
    if let Some(b) = args.baseline {
        if !config.variants.contains(&b) {
            return Err(BenchError::Usage(format!("baseline '{b}' is not among --algos")));
        }
    }
    let records = run_batch(&config)?;
    let summaries = summarize(&records, args.baseline)?;
    let manifest = Manifest::new(invocation(), &config)?;
    let paths = emit_reports(&records, &summaries, &args.out, &manifest)?;
    eprintln!(
        "{} runs, {} summary rows -> {}",
        records.len(),
        summaries.len(),
        paths.summary.display()
    );
    Ok(())
}

fn cmd_diag(args: DiagArgs) -> Result<(), BenchError> {
    let mut config = BatchConfig::new(
        vec![Variant::Mma],
        vec![args.problem],
        vec![args.dim],
        args.runs,
        args.seed,
    );
    config.budget = args.budget;
    config.diagnostics = Some(DiagnosticsConfig::all());
    let records = run_batch(&config)?;
    let summaries = summarize(&records, None)?;
    let manifest = Manifest::new(invocation(), &config)?;
    emit_reports(&records, &summaries, &args.out, &manifest)?;
    emit_diagnostic_medians(&records, &args.out)?;
    eprintln!("{} traced runs -> {}", records.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Diag(a) => cmd_diag(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_usage() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::json;

use composite_bo::bench::{get_benchmark, list_benchmarks};
use composite_bo::bo::Variant;
use composite_bo::experiment::{load_experiment, run_campaign, run_parity, run_report, Overrides};
use composite_bo::{Error, Result};

#[derive(Parser)]
#[command(name = "cbo", version, about = "Composite-objective Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallel: Option<usize>,
    /// Comma-separated subset of sbo, mcbo, bois.
    #[arg(long, value_delimiter = ',')]
    variant: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (variant, start) cell of a campaign.
    Run(RunArgs),
    /// Compare linearized and Monte Carlo moments on one fitted GP bank.
    Parity(RunArgs),
    /// Aggregate the traces listed in a campaign index.
    Report {
        /// campaign.json written by `run`.
        index: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the benchmark registry.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    List,
    /// Evaluate y(x) and f(x).
    Eval {
        name: String,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        at: Vec<f64>,
    },
}

struct Log {
    color: bool,
}

impl Log {
    fn new() -> Self {
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Self {
            color: !no_color && std::io::stderr().is_terminal(),
        }
    }

    fn tag(&self, code: &str, label: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{label}\x1b[0m")
        } else {
            label.to_string()
        }
    }

    fn info(&self, msg: impl std::fmt::Display) {
        eprintln!("{} {msg}", self.tag("1;34", "info:"));
    }

    fn warn(&self, msg: impl std::fmt::Display) {
        eprintln!("{} {msg}", self.tag("1;33", "review:"));
    }

    fn error(&self, msg: impl std::fmt::Display) {
        eprintln!("{} {msg}", self.tag("1;31", "error:"));
    }
}

fn overrides(args: &RunArgs) -> Result<Overrides> {
    let variants = match &args.variant {
        Some(v) => Some(
            v.iter()
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<Variant>>>()
                .map_err(|e| Error::Rejected {
                    origin: "--variant".into(),
                    line: 1,
                    key: "variants".into(),
                    message: e.to_string(),
                })?,
        ),
        None => None,
    };
    Ok(Overrides {
        seed: args.seed,
        parallel: args.parallel,
        variants,
        output_dir: None,
    })
}

fn out_dir(args: &RunArgs, exp: &composite_bo::experiment::Experiment, fallback: &str) -> PathBuf {
    args.out
        .clone()
        .unwrap_or_else(|| exp.output_dir(Path::new(fallback)))
}

fn cmd_run(args: &RunArgs, log: &Log) -> Result<bool> {
    let exp = load_experiment(&args.config, &overrides(args)?)?;
    let out = out_dir(args, &exp, "cbo-out");
    log.info(format!(
        "{}: {} variant(s), {} thread(s), writing to {}",
        exp.benchmark.name,
        exp.config.variants.len(),
        exp.config.parallelism(),
        out.display()
    ));
    let outcome = run_campaign(&exp, &out)?;
    let cells = &outcome.index.cells;
    let done = cells.iter().filter(|c| c.status == composite_bo::experiment::CellStatus::Completed).count();
    for c in cells.iter().filter(|c| c.error.is_some()) {
        log.error(format!(
            "{} start {}: {}",
            c.variant,
            c.start,
            c.error.as_deref().unwrap_or_default()
        ));
    }
    for check in outcome.index.comparison.checks.iter().filter(|c| !c.passed) {
        log.warn(format!("{} ({})", check.name, check.detail));
    }
    println!(
        "{done}/{} cells completed; index {}",
        cells.len(),
        outcome.index_path.display()
    );
    Ok(outcome.index.all_completed())
}

fn cmd_parity(args: &RunArgs, log: &Log) -> Result<bool> {
    let exp = load_experiment(&args.config, &overrides(args)?)?;
    let out = out_dir(args, &exp, "cbo-parity");
    log.info(format!("parity on {}, writing to {}", exp.benchmark.name, out.display()));
    let report = run_parity(&exp, &out)?;
    let s = &report.summary;
    for d in &s.discrepancies {
        println!(
            "S={:<6} median |Δm|/m {:.3e}  median |Δσ|/σ {:.3e}  MC {:.1} ms",
            d.samples, d.mean_median, d.std_median, d.mc_total_ms
        );
    }
    println!("BOIS {:.1} ms, speedup {:.0}x", s.bois_total_ms, s.speedup);
    Ok(true)
}

fn cmd_report(index: &Path, out: Option<&Path>, log: &Log) -> Result<bool> {
    let default_out = index.parent().unwrap_or(Path::new(".")).join("report");
    let out = out.map_or(default_out, Path::to_path_buf);
    let outcome = run_report(index, &out)?;
    for m in &outcome.summary.missing {
        log.error(format!("missing trace {}", m.display()));
    }
    for check in outcome.summary.comparison.checks.iter().filter(|c| !c.passed) {
        log.warn(format!("{} ({})", check.name, check.detail));
    }
    for f in &outcome.summary.comparison.finals {
        println!(
            "{:<5} runs {:>4}  mean {:.6}  median {:.6}  p10 {:.6}  p90 {:.6}",
            f.variant, f.runs, f.mean, f.median, f.p10, f.p90
        );
    }
    println!("aggregates in {}", out.display());
    Ok(outcome.complete())
}

fn cmd_bench(cmd: &BenchCommand) -> Result<bool> {
    match cmd {
        BenchCommand::List => {
            for e in list_benchmarks() {
                let b = get_benchmark(&e.name)?;
                let opt = e
                    .optimum
                    .as_ref()
                    .map_or("-".to_string(), |o| format!("{}", o.value));
                println!(
                    "{:<18} d_x={} d_y={:<3} optimum={opt}  {}",
                    e.name,
                    b.domain.dim(),
                    b.objective.dim_y(),
                    e.description
                );
            }
        }
        BenchCommand::Eval { name, at } => {
            let b = get_benchmark(name)?;
            let (y, f) = b.evaluate(at).map_err(|e| match e {
                Error::InputShape(m) => Error::Configuration(m),
                other => other,
            })?;
            let out = json!({ "name": name, "x": at, "y": y, "f": f });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let log = Log::new();
    let choice = if log.color { ColorChoice::Auto } else { ColorChoice::Never };
    let matches = Cli::command().color(choice).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, &log),
        Command::Parity(a) => cmd_parity(a, &log),
        Command::Report { index, out } => cmd_report(index, out.as_deref(), &log),
        Command::Bench(b) => cmd_bench(b),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log.error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

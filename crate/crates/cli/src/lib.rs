//! Argument parsing and subcommand drivers for the `fsb` binary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fsb::harness::{
    build_exp1, build_exp2, build_exp3, run_experiment_with, validate_records, write_csv,
    BenchRecord, ExperimentId, ExperimentSpec, Seconds, DEFAULT_REPS, DEFAULT_WARMUP,
};
use fsb::report::render_csv;
use fsb::runtime::{
    Construct, Executor, ExecutorError, RunConfig, ScheduleSpec, DEFAULT_THREAD_CAP, SCHEDULE_ENV,
};
use fsb::sim::{simulate_with, SimConfig};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fsb",
    version,
    about = "Loop-scheduling benchmarks on a fish-school simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and print its record as CSV.
    Simulate(SimulateArgs),
    /// Thread-count sweep (1 to 2^15 threads, four schedule/construct pairings).
    Exp1(ExperimentArgs),
    /// Schedule and chunk-size sweep at 2, 4 and 8 threads.
    Exp2(ExperimentArgs),
    /// Reduction vs. critical-section constructs at 1 to 64 threads.
    Exp3(ExperimentArgs),
    /// Summarize a results CSV into a table and SVG charts.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructArg {
    Sequential,
    Reduction,
    CriticalPartial,
    CriticalFull,
}

impl From<ConstructArg> for Construct {
    fn from(c: ConstructArg) -> Self {
        match c {
            ConstructArg::Sequential => Construct::Sequential,
            ConstructArg::Reduction => Construct::Reduction,
            ConstructArg::CriticalPartial => Construct::CriticalPartial,
            ConstructArg::CriticalFull => Construct::CriticalFull,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Number of fish.
    #[arg(long, default_value_t = 10_000)]
    pub fish: usize,
    /// Number of move/eat steps.
    #[arg(long, default_value_t = 1_000)]
    pub steps: usize,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig> {
        Ok(SimConfig::builder()
            .num_fish(self.fish)
            .num_steps(self.steps)
            .seed(self.seed)
            .build()?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 8, value_parser = positive)]
    pub threads: usize,
    /// `static`, `dynamic` or `guided`, optionally `:chunk`; or `runtime` to
    /// read `FSB_SCHEDULE`.
    #[arg(long, default_value = "static:50")]
    pub schedule: ScheduleSpec,
    #[arg(long, value_enum, default_value_t = ConstructArg::Reduction)]
    pub construct: ConstructArg,
    /// Upper bound on spawned workers.
    #[arg(long = "cap-threads", default_value_t = DEFAULT_THREAD_CAP, value_parser = positive)]
    pub cap_threads: usize,
    /// Output file for the CSV record (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Recorded repetitions per grid cell.
    #[arg(long, default_value_t = DEFAULT_REPS, value_parser = positive)]
    pub reps: usize,
    /// Discarded leading repetitions per grid cell.
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    pub warmup: usize,
    /// Upper bound on spawned workers.
    #[arg(long = "cap-threads", default_value_t = DEFAULT_THREAD_CAP, value_parser = positive)]
    pub cap_threads: usize,
    /// Output CSV file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Results CSV written by `exp1`, `exp2`, `exp3` or `simulate`.
    pub input: PathBuf,
    /// Directory for `summary.md` and the charts.
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

/// Parse `argv` (including the program name). Usage errors carry clap's
/// diagnostic, which names the offending flag.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

fn positive(text: &str) -> Result<usize, String> {
    match text.parse::<usize>() {
        Ok(0) => Err("must be at least 1".to_string()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Executor start-up failures caused by `FSB_SCHEDULE` are usage errors.
fn executor_failure(err: ExecutorError) -> ExitCode {
    eprintln!("fsb: {err}");
    match err {
        ExecutorError::Schedule(_) => {
            eprintln!("fsb: check the {SCHEDULE_ENV} environment variable");
            ExitCode::from(EXIT_USAGE)
        }
        _ => ExitCode::from(EXIT_RUNTIME),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let cfg = args.sim.config()?;
    let run = RunConfig::new(args.threads, args.schedule, args.construct.into())?
        .with_thread_cap(args.cap_threads)?;
    let exec = match Executor::new(&run) {
        Ok(exec) => exec,
        Err(err) => return Ok(executor_failure(err)),
    };
    let sim = simulate_with(&cfg, &exec);
    let record = BenchRecord {
        experiment: ExperimentId::Custom,
        threads: run.effective_workers(),
        schedule: run.schedule.kind,
        chunk: run.schedule.chunk,
        construct: run.construct,
        rep: 0,
        fish: cfg.num_fish(),
        steps: cfg.num_steps(),
        seconds_total: Seconds::new(sim.timing.total),
        seconds_eat: Seconds::new(sim.timing.eat),
        checksum: sim.checksum(),
    };
    write_csv(
        open_out(args.out.as_deref())?,
        std::slice::from_ref(&record),
    )?;
    eprintln!(
        "{} fish x {} steps on {} threads ({}, {}): total {:.6} s, eat {:.6} s, checksum {:016x}",
        cfg.num_fish(),
        cfg.num_steps(),
        exec.workers(),
        exec.schedule(),
        run.construct,
        sim.timing.total,
        sim.timing.eat,
        record.checksum
    );
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_experiment(id: ExperimentId, args: &ExperimentArgs) -> Result<ExitCode> {
    let sim = args.sim.config()?;
    let spec: ExperimentSpec = match id {
        ExperimentId::Exp1 => build_exp1(sim, args.cap_threads),
        ExperimentId::Exp2 => build_exp2(sim),
        ExperimentId::Exp3 => build_exp3(sim),
        ExperimentId::Custom => unreachable!("no custom sweep subcommand"),
    };
    let mut spec = spec.with_reps(args.reps, args.warmup)?;
    for cell in &mut spec.grid {
        cell.thread_cap = args.cap_threads;
    }
    let env = std::env::var(SCHEDULE_ENV).ok();
    let cells = spec.grid.len();
    let mut done = 0;
    let records = run_experiment_with(&spec, env.as_deref(), |r| {
        if r.rep + 1 == spec.reps {
            done += 1;
            eprintln!(
                "[{done}/{cells}] {} threads={} {}:{} {} {}",
                id,
                r.threads,
                r.schedule,
                r.chunk,
                r.construct,
                if r.is_failure() {
                    "FAILED".to_string()
                } else {
                    format!("{:.4} s", r.seconds_total.get())
                }
            );
        }
    });
    write_csv(open_out(args.out.as_deref())?, &records)?;
    let failures = records.iter().filter(|r| r.is_failure()).count();
    let violations = validate_records(&records);
    for v in &violations {
        eprintln!("fsb: {v}");
    }
    if failures > 0 || !violations.is_empty() {
        eprintln!(
            "fsb: {failures} failed record(s), {} invariant violation(s)",
            violations.len()
        );
        return Ok(ExitCode::from(EXIT_RUNTIME));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let bytes =
        fs::read(&args.input).with_context(|| format!("cannot read {}", args.input.display()))?;
    let report = match render_csv(&bytes) {
        Ok(report) => report,
        Err(err) => {
            eprintln!("fsb: {}: {err}", args.input.display());
            return Ok(ExitCode::from(EXIT_RUNTIME));
        }
    };
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let summary = args.out.join("summary.md");
    fs::write(&summary, &report.table)?;
    eprintln!("wrote {}", summary.display());
    for (name, svg) in &report.charts {
        let path = args.out.join(name);
        fs::write(&path, svg)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn run(cli: &Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Exp1(args) => cmd_experiment(ExperimentId::Exp1, args),
        Command::Exp2(args) => cmd_experiment(ExperimentId::Exp2, args),
        Command::Exp3(args) => cmd_experiment(ExperimentId::Exp3, args),
        Command::Report(args) => cmd_report(args),
    };
    result.unwrap_or_else(|err| {
        eprintln!("fsb: {err:#}");
        ExitCode::from(EXIT_RUNTIME)
    })
}

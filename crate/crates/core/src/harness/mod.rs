//! Experiment grids, the serial sweep runner, and result persistence.
//!
//! Each experiment is a grid of [`RunConfig`] cells over one fixed
//! [`SimConfig`]. Cells run one at a time; within a cell, `warmup` discarded
//! runs precede `reps` recorded ones.

mod record;
mod stats;

use std::panic::{self, AssertUnwindSafe};

use thiserror::Error;

pub use record::{
    read_csv, validate_records, write_csv, write_csv_string, BenchRecord, CsvError, ExperimentId,
    Seconds, Violation, ViolationKind, CSV_HEADER,
};
pub use stats::{median, summarize, EmptySample, SummaryStats};

use crate::runtime::{
    Construct, Executor, RunConfig, ScheduleKind, ScheduleSpec, DEFAULT_THREAD_CAP,
};
use crate::sim::{simulate_with, SimConfig};

pub const DEFAULT_REPS: usize = 5;
pub const DEFAULT_WARMUP: usize = 1;

/// Thread counts swept by experiment 1: `2^0 ..= 2^15`.
pub const EXP1_THREADS: [usize; 16] = {
    let mut t = [0; 16];
    let mut i = 0;
    while i < 16 {
        t[i] = 1 << i;
        i += 1;
    }
    t
};

/// Chunk sizes swept by experiment 2: `2^0 ..= 2^12`.
pub const EXP2_CHUNKS: [usize; 13] = {
    let mut c = [0; 13];
    let mut i = 0;
    while i < 13 {
        c[i] = 1 << i;
        i += 1;
    }
    c
};

pub const EXP2_THREADS: [usize; 3] = [2, 4, 8];
pub const EXP3_THREADS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

/// The four schedule/construct pairings of experiment 1.
pub const EXP1_COMBINATIONS: [(ScheduleSpec, Construct); 4] = [
    (ScheduleSpec::static_(50), Construct::Reduction),
    (ScheduleSpec::dynamic(50), Construct::Reduction),
    (ScheduleSpec::guided(50), Construct::Reduction),
    (ScheduleSpec::static_(50), Construct::CriticalPartial),
];

pub const EXP3_CONSTRUCTS: [Construct; 3] = [
    Construct::Reduction,
    Construct::CriticalPartial,
    Construct::CriticalFull,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("experiment grid is empty")]
    EmptyGrid,
    #[error("repetitions per cell must be at least 1")]
    ZeroReps,
    #[error("grid cell {0} is invalid: {1}")]
    InvalidCell(usize, crate::runtime::RunConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub sim: SimConfig,
    pub grid: Vec<RunConfig>,
    pub reps: usize,
    pub warmup: usize,
}

impl ExperimentSpec {
    pub fn new(id: ExperimentId, sim: SimConfig, grid: Vec<RunConfig>) -> Result<Self, SpecError> {
        ExperimentSpec {
            id,
            sim,
            grid,
            reps: DEFAULT_REPS,
            warmup: DEFAULT_WARMUP,
        }
        .validated()
    }

    pub fn with_reps(mut self, reps: usize, warmup: usize) -> Result<Self, SpecError> {
        self.reps = reps;
        self.warmup = warmup;
        self.validated()
    }

    pub fn validated(self) -> Result<Self, SpecError> {
        if self.grid.is_empty() {
            return Err(SpecError::EmptyGrid);
        }
        if self.reps == 0 {
            return Err(SpecError::ZeroReps);
        }
        for (i, cell) in self.grid.iter().enumerate() {
            cell.validated().map_err(|e| SpecError::InvalidCell(i, e))?;
        }
        Ok(self)
    }
}

fn cell(threads: usize, schedule: ScheduleSpec, construct: Construct, cap: usize) -> RunConfig {
    RunConfig {
        num_threads: threads,
        schedule,
        construct,
        thread_cap: cap,
    }
}

/// Thread count sweep: 16 thread counts (each capped at `cap`) × the four
/// schedule/construct pairings. Duplicate capped counts are kept.
pub fn build_exp1(sim: SimConfig, cap: usize) -> ExperimentSpec {
    let cap = cap.max(1);
    let grid = EXP1_THREADS
        .iter()
        .flat_map(|&t| {
            EXP1_COMBINATIONS
                .iter()
                .map(move |&(schedule, construct)| cell(t.min(cap), schedule, construct, cap))
        })
        .collect();
    ExperimentSpec::new(ExperimentId::Exp1, sim, grid).expect("exp1 grid is valid")
}

/// Schedule/chunk sweep under reduction: static, dynamic and guided at every
/// power-of-two chunk up to 4096, plus the runtime schedule, each at 2, 4
/// and 8 threads.
pub fn build_exp2(sim: SimConfig) -> ExperimentSpec {
    let mut grid = Vec::new();
    for kind in [
        ScheduleKind::Static,
        ScheduleKind::Dynamic,
        ScheduleKind::Guided,
    ] {
        for chunk in EXP2_CHUNKS {
            for threads in EXP2_THREADS {
                grid.push(cell(
                    threads,
                    ScheduleSpec::new(kind, chunk),
                    Construct::Reduction,
                    DEFAULT_THREAD_CAP,
                ));
            }
        }
    }
    for threads in EXP2_THREADS {
        grid.push(cell(
            threads,
            ScheduleSpec::runtime(),
            Construct::Reduction,
            DEFAULT_THREAD_CAP,
        ));
    }
    ExperimentSpec::new(ExperimentId::Exp2, sim, grid).expect("exp2 grid is valid")
}

/// Construct comparison: reduction, critical-partial and critical-full at
/// 1 to 64 threads under `static:50`.
pub fn build_exp3(sim: SimConfig) -> ExperimentSpec {
    let grid = EXP3_CONSTRUCTS
        .iter()
        .flat_map(|&construct| {
            EXP3_THREADS
                .iter()
                .map(move |&t| cell(t, ScheduleSpec::static_(50), construct, DEFAULT_THREAD_CAP))
        })
        .collect();
    ExperimentSpec::new(ExperimentId::Exp3, sim, grid).expect("exp3 grid is valid")
}

fn record_for(spec: &ExperimentSpec, run: &RunConfig, rep: usize) -> BenchRecord {
    BenchRecord {
        experiment: spec.id,
        threads: run.effective_workers(),
        schedule: run.schedule.kind,
        chunk: run.schedule.chunk,
        construct: run.construct,
        rep,
        fish: spec.sim.num_fish(),
        steps: spec.sim.num_steps(),
        seconds_total: Seconds::FAILED,
        seconds_eat: Seconds::FAILED,
        checksum: 0,
    }
}

/// Run one cell: `warmup` discarded simulations, then `reps` kept ones.
/// Any failure (pool start-up, runtime schedule resolution, a panicking run)
/// turns the remaining reps of the cell into failure records.
fn run_cell(spec: &ExperimentSpec, run: &RunConfig, env: Option<&str>) -> Vec<BenchRecord> {
    let failed = |from: usize| {
        (from..spec.reps)
            .map(|rep| record_for(spec, run, rep))
            .collect::<Vec<_>>()
    };
    let exec = match Executor::with_runtime_env(run, env) {
        Ok(exec) => exec,
        Err(_) => return failed(0),
    };
    let one = || panic::catch_unwind(AssertUnwindSafe(|| simulate_with(&spec.sim, &exec)));
    for _ in 0..spec.warmup {
        if one().is_err() {
            return failed(0);
        }
    }
    let mut records = Vec::with_capacity(spec.reps);
    for rep in 0..spec.reps {
        match one() {
            Ok(sim) => records.push(BenchRecord {
                seconds_total: Seconds::new(sim.timing.total),
                seconds_eat: Seconds::new(sim.timing.eat),
                checksum: sim.checksum(),
                ..record_for(spec, run, rep)
            }),
            Err(_) => {
                records.extend(failed(rep));
                break;
            }
        }
    }
    records
}

/// Run every cell of `spec` serially, resolving `runtime` schedules from
/// `FSB_SCHEDULE`.
pub fn run_experiment(spec: &ExperimentSpec) -> Vec<BenchRecord> {
    let env = std::env::var(crate::runtime::SCHEDULE_ENV).ok();
    run_experiment_with(spec, env.as_deref(), |_| {})
}

/// [`run_experiment`] with an explicit runtime-schedule value and a callback
/// invoked as each record is produced.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    runtime_env: Option<&str>,
    mut on_record: impl FnMut(&BenchRecord),
) -> Vec<BenchRecord> {
    let mut records = Vec::with_capacity(spec.grid.len() * spec.reps);
    for run in &spec.grid {
        for record in run_cell(spec, run, runtime_env) {
            on_record(&record);
            records.push(record);
        }
    }
    records
}

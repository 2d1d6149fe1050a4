//! OpenMP-style chunked parallel-for runtime.
//!
//! [`Executor`] owns a worker pool sized from a [`RunConfig`] and runs loops
//! under one of the static, dynamic or guided schedules. Aggregating loops go
//! through [`Executor::parallel_reduce`], whose [`Construct`] decides whether
//! partial results live in per-worker accumulators or behind a lock.

mod chunks;
mod executor;
mod schedule;

pub use chunks::{
    dynamic_next, guided_chunk_size, guided_next, static_chunks, AssignedRange, ChunkAssignment,
};
pub use executor::{max_combine, parallel_for, parallel_max, Executor, ExecutorError, LoopError};
pub use schedule::{
    parse_runtime_schedule, Construct, ParseConstructError, ParseScheduleError, RunConfig,
    RunConfigError, ScheduleKind, ScheduleSpec, DEFAULT_THREAD_CAP, SCHEDULE_ENV,
};

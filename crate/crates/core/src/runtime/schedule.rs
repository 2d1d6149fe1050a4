//! Loop configuration: schedule kinds, aggregation constructs and thread counts.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Environment variable consulted when a loop's schedule kind is
/// [`ScheduleKind::Runtime`]. The analog of `OMP_SCHEDULE`.
pub const SCHEDULE_ENV: &str = "FSB_SCHEDULE";

/// Default upper bound on spawned workers.
pub const DEFAULT_THREAD_CAP: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScheduleKind {
    Static,
    Dynamic,
    Guided,
    Runtime,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 4] = [
        ScheduleKind::Static,
        ScheduleKind::Dynamic,
        ScheduleKind::Guided,
        ScheduleKind::Runtime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Static => "static",
            ScheduleKind::Dynamic => "dynamic",
            ScheduleKind::Guided => "guided",
            ScheduleKind::Runtime => "runtime",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = ParseScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(ScheduleKind::Static),
            "dynamic" => Ok(ScheduleKind::Dynamic),
            "guided" => Ok(ScheduleKind::Guided),
            "runtime" => Ok(ScheduleKind::Runtime),
            _ => Err(ParseScheduleError::UnknownKind(s.trim().to_string())),
        }
    }
}

/// A schedule kind plus chunk size. A chunk of `0` means "default":
/// balanced contiguous blocks for static, a chunk of one for dynamic and guided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub chunk: usize,
}

impl ScheduleSpec {
    pub const fn new(kind: ScheduleKind, chunk: usize) -> Self {
        Self { kind, chunk }
    }

    pub const fn static_(chunk: usize) -> Self {
        Self::new(ScheduleKind::Static, chunk)
    }

    pub const fn dynamic(chunk: usize) -> Self {
        Self::new(ScheduleKind::Dynamic, chunk)
    }

    pub const fn guided(chunk: usize) -> Self {
        Self::new(ScheduleKind::Guided, chunk)
    }

    /// Defer to [`SCHEDULE_ENV`]. Runtime schedules carry no chunk.
    pub const fn runtime() -> Self {
        Self::new(ScheduleKind::Runtime, 0)
    }

    /// Resolve a `Runtime` schedule against the value of [`SCHEDULE_ENV`].
    ///
    /// Non-runtime schedules come back unchanged. An unset variable resolves
    /// to `static` with default chunking.
    pub fn resolve(self, env_value: Option<&str>) -> Result<ScheduleSpec, ParseScheduleError> {
        if self.kind != ScheduleKind::Runtime {
            return Ok(self);
        }
        match env_value {
            Some(text) => parse_runtime_schedule(text),
            None => Ok(ScheduleSpec::static_(0)),
        }
    }

    /// [`resolve`](Self::resolve) using the process environment.
    pub fn resolve_from_env(self) -> Result<ScheduleSpec, ParseScheduleError> {
        let value = std::env::var(SCHEDULE_ENV).ok();
        self.resolve(value.as_deref())
    }
}

impl Default for ScheduleSpec {
    /// `static,50`, the baseline schedule of the original experiments.
    fn default() -> Self {
        ScheduleSpec::static_(50)
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == ScheduleKind::Runtime {
            write!(f, "runtime")
        } else {
            write!(f, "{}:{}", self.kind, self.chunk)
        }
    }
}

/// Command-line form: `kind[:chunk]`, e.g. `static:50`, `guided`, `runtime`.
impl FromStr for ScheduleSpec {
    type Err = ParseScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, chunk) = match s.split_once(':') {
            Some((kind, chunk)) => (kind, Some(chunk)),
            None => (s, None),
        };
        let kind: ScheduleKind = kind.parse()?;
        let chunk = match chunk {
            None => 0,
            Some(_) if kind == ScheduleKind::Runtime => {
                return Err(ParseScheduleError::RuntimeChunk(s.to_string()))
            }
            Some(text) => parse_chunk(text)?,
        };
        Ok(ScheduleSpec::new(kind, chunk))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseScheduleError {
    #[error("unknown schedule kind `{0}` (expected static, dynamic, guided or runtime)")]
    UnknownKind(String),
    #[error("invalid chunk size `{0}` (expected a positive integer)")]
    InvalidChunk(String),
    #[error("schedule `runtime` cannot be selected by `{SCHEDULE_ENV}` itself")]
    SelfReferential,
    #[error("the runtime schedule takes no chunk size: `{0}`")]
    RuntimeChunk(String),
    #[error("unexpected trailing text `{0}` in schedule")]
    Trailing(String),
}

fn parse_chunk(text: &str) -> Result<usize, ParseScheduleError> {
    let trimmed = text.trim();
    match trimmed.parse::<usize>() {
        Ok(chunk) if chunk > 0 => Ok(chunk),
        _ => Err(ParseScheduleError::InvalidChunk(trimmed.to_string())),
    }
}

/// Parse the environment form `kind[,chunk]` (case-insensitive) used by
/// [`SCHEDULE_ENV`].
///
/// ```
/// use fsb::runtime::{parse_runtime_schedule, ScheduleSpec};
///
/// assert_eq!(parse_runtime_schedule("dynamic,64").unwrap(), ScheduleSpec::dynamic(64));
/// assert_eq!(parse_runtime_schedule("GUIDED").unwrap(), ScheduleSpec::guided(0));
/// assert!(parse_runtime_schedule("runtime").is_err());
/// ```
pub fn parse_runtime_schedule(text: &str) -> Result<ScheduleSpec, ParseScheduleError> {
    let mut parts = text.split(',');
    let kind_token = parts.next().unwrap_or_default();
    let kind: ScheduleKind = kind_token.parse()?;
    if kind == ScheduleKind::Runtime {
        return Err(ParseScheduleError::SelfReferential);
    }
    let chunk = match parts.next() {
        None => 0,
        Some(token) => parse_chunk(token)?,
    };
    if let Some(extra) = parts.next() {
        return Err(ParseScheduleError::Trailing(extra.trim().to_string()));
    }
    Ok(ScheduleSpec::new(kind, chunk))
}

/// How a loop aggregates per-index values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Construct {
    /// Plain fold on the calling thread; thread count and schedule are ignored.
    Sequential,
    /// Per-worker private accumulator, combined once per worker at the end.
    #[default]
    Reduction,
    /// Value computed unguarded; only the compare-and-update is locked.
    CriticalPartial,
    /// The whole loop body runs under the lock.
    CriticalFull,
}

impl Construct {
    pub const ALL: [Construct; 4] = [
        Construct::Sequential,
        Construct::Reduction,
        Construct::CriticalPartial,
        Construct::CriticalFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Construct::Sequential => "sequential",
            Construct::Reduction => "reduction",
            Construct::CriticalPartial => "critical-partial",
            Construct::CriticalFull => "critical-full",
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(
    "unknown construct `{0}` (expected sequential, reduction, critical-partial or critical-full)"
)]
pub struct ParseConstructError(pub String);

impl FromStr for Construct {
    type Err = ParseConstructError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Construct::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ParseConstructError(s.to_string()))
    }
}

/// Everything that shapes how one simulation run is parallelized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunConfig {
    pub num_threads: usize,
    pub schedule: ScheduleSpec,
    pub construct: Construct,
    pub thread_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunConfigError {
    #[error("thread count must be at least 1")]
    ZeroThreads,
    #[error("thread cap must be at least 1")]
    ZeroCap,
}

impl RunConfig {
    pub fn new(
        num_threads: usize,
        schedule: ScheduleSpec,
        construct: Construct,
    ) -> Result<Self, RunConfigError> {
        RunConfig {
            num_threads,
            schedule,
            construct,
            thread_cap: DEFAULT_THREAD_CAP,
        }
        .validated()
    }

    pub fn with_thread_cap(mut self, cap: usize) -> Result<Self, RunConfigError> {
        self.thread_cap = cap;
        self.validated()
    }

    pub fn validated(self) -> Result<Self, RunConfigError> {
        if self.num_threads == 0 {
            return Err(RunConfigError::ZeroThreads);
        }
        if self.thread_cap == 0 {
            return Err(RunConfigError::ZeroCap);
        }
        Ok(self)
    }

    /// `min(num_threads, thread_cap)`. Oversubscription past the hardware
    /// is allowed.
    pub fn effective_workers(&self) -> usize {
        self.num_threads.min(self.thread_cap).max(1)
    }
}

impl Default for RunConfig {
    /// 8 threads, `static:50`, reduction.
    fn default() -> Self {
        RunConfig {
            num_threads: 8,
            schedule: ScheduleSpec::default(),
            construct: Construct::default(),
            thread_cap: DEFAULT_THREAD_CAP,
        }
    }
}

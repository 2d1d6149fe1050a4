use std::any::Any;
use std::ops::Range;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Mutex, PoisonError};
use std::time::Instant;

use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};
use thiserror::Error;

use super::chunks::{dynamic_next, guided_next, static_ranges_for};
use super::schedule::{
    Construct, ParseScheduleError, RunConfig, RunConfigError, ScheduleKind, ScheduleSpec,
};

#[derive(Debug, Error)]
pub enum ExecutorError {
    #[error(transparent)]
    Config(#[from] RunConfigError),
    #[error("cannot resolve runtime schedule: {0}")]
    Schedule(#[from] ParseScheduleError),
    #[error("failed to start worker pool: {0}")]
    Spawn(#[from] ThreadPoolBuildError),
}

/// A loop body failed. `index` is the lowest failing index observed before
/// the loop stopped handing out work.
#[derive(Debug, Error)]
#[error("loop body failed at index {index}: {error}")]
pub struct LoopError<E> {
    pub index: usize,
    pub error: E,
}

/// Chunked parallel-for executor bound to one [`RunConfig`].
///
/// The worker pool is created once and reused by every loop issued through
/// the executor. Use one executor per run; it is meant to be driven from a
/// single thread at a time.
pub struct Executor {
    run: RunConfig,
    schedule: ScheduleSpec,
    workers: usize,
    pool: Option<ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("run", &self.run)
            .field("schedule", &self.schedule)
            .field("workers", &self.workers)
            .finish()
    }
}

struct LoopState {
    counter: AtomicUsize,
    stop: AtomicBool,
}

impl LoopState {
    fn new() -> Self {
        LoopState {
            counter: AtomicUsize::new(0),
            stop: AtomicBool::new(false),
        }
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }

    fn halt(&self) {
        self.stop.store(true, Ordering::Relaxed);
    }
}

impl Executor {
    /// Build an executor, resolving a `runtime` schedule from `FSB_SCHEDULE`.
    pub fn new(run: &RunConfig) -> Result<Self, ExecutorError> {
        let env = std::env::var(super::SCHEDULE_ENV).ok();
        Self::with_runtime_env(run, env.as_deref())
    }

    /// Build an executor, resolving a `runtime` schedule from `env_value`
    /// instead of the process environment.
    pub fn with_runtime_env(
        run: &RunConfig,
        env_value: Option<&str>,
    ) -> Result<Self, ExecutorError> {
        let run = run.validated()?;
        let schedule = run.schedule.resolve(env_value)?;
        let workers = match run.construct {
            Construct::Sequential => 1,
            _ => run.effective_workers(),
        };
        let pool = if workers > 1 {
            Some(
                ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("fsb-worker-{i}"))
                    .build()?,
            )
        } else {
            None
        };
        Ok(Executor {
            run,
            schedule,
            workers,
            pool,
        })
    }

    pub fn run_config(&self) -> &RunConfig {
        &self.run
    }

    /// The schedule actually in force, never `Runtime`.
    pub fn schedule(&self) -> ScheduleSpec {
        self.schedule
    }

    pub fn construct(&self) -> Construct {
        self.run.construct
    }

    /// Number of workers loops are split across (1 under `Sequential`).
    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Run `op(worker)` once on every worker and collect results by worker id.
    /// A panic on any worker stops the loop and is re-raised once all
    /// workers have returned.
    fn broadcast<R, F>(&self, state: &LoopState, op: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        let Some(pool) = &self.pool else {
            return vec![op(0)];
        };
        let results: Vec<Result<R, Box<dyn Any + Send>>> = pool.broadcast(|ctx| {
            let out = panic::catch_unwind(AssertUnwindSafe(|| op(ctx.index())));
            if out.is_err() {
                state.halt();
            }
            out
        });
        let mut collected = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok(v) => collected.push(v),
                Err(payload) => panic::resume_unwind(payload),
            }
        }
        collected
    }

    /// Fold `f` over every range claimed by `worker`, in claim order.
    fn drive<A>(
        &self,
        n: usize,
        worker: usize,
        state: &LoopState,
        init: A,
        mut f: impl FnMut(A, Range<usize>) -> A,
    ) -> A {
        let ScheduleSpec { kind, chunk } = self.schedule;
        let mut acc = init;
        match kind {
            ScheduleKind::Static => {
                for r in static_ranges_for(n, self.workers, chunk, worker) {
                    if state.stopped() {
                        break;
                    }
                    acc = f(acc, r);
                }
            }
            ScheduleKind::Dynamic => {
                while !state.stopped() {
                    match dynamic_next(&state.counter, n, chunk.max(1)) {
                        Some(r) => acc = f(acc, r),
                        None => break,
                    }
                }
            }
            ScheduleKind::Guided => {
                while !state.stopped() {
                    match guided_next(&state.counter, n, self.workers, chunk.max(1)) {
                        Some(r) => acc = f(acc, r),
                        None => break,
                    }
                }
            }
            ScheduleKind::Runtime => unreachable!("runtime schedule resolved at construction"),
        }
        acc
    }

    /// Invoke `body` exactly once for every index in `[0, n)` and return the
    /// elapsed wall time in seconds.
    pub fn parallel_for<F>(&self, n: usize, body: F) -> f64
    where
        F: Fn(usize) + Sync,
    {
        let start = Instant::now();
        if self.run.construct == Construct::Sequential {
            (0..n).for_each(&body);
        } else {
            let state = LoopState::new();
            self.broadcast(&state, |worker| {
                self.drive(n, worker, &state, (), |(), r| r.for_each(&body));
            });
        }
        start.elapsed().as_secs_f64()
    }

    /// Fallible [`parallel_for`](Self::parallel_for). On the first failure no
    /// new chunks are handed out; chunks already started run to completion
    /// or to their own first failure. The error with the lowest index is
    /// returned after every worker has stopped.
    pub fn try_parallel_for<E, F>(&self, n: usize, body: F) -> Result<f64, LoopError<E>>
    where
        E: Send,
        F: Fn(usize) -> Result<(), E> + Sync,
    {
        let start = Instant::now();
        let state = LoopState::new();
        let failures: Vec<Option<LoopError<E>>> = if self.run.construct == Construct::Sequential {
            let first =
                (0..n).find_map(|i| body(i).err().map(|error| LoopError { index: i, error }));
            vec![first]
        } else {
            self.broadcast(&state, |worker| {
                self.drive(n, worker, &state, None, |failure, r| {
                    if failure.is_some() {
                        return failure;
                    }
                    for i in r {
                        if let Err(error) = body(i) {
                            state.halt();
                            return Some(LoopError { index: i, error });
                        }
                    }
                    None
                })
            })
        };
        match failures.into_iter().flatten().min_by_key(|f| f.index) {
            Some(failure) => Err(failure),
            None => Ok(start.elapsed().as_secs_f64()),
        }
    }

    /// Run `body(i, &mut items[i])` for every element, in parallel.
    pub fn for_each_mut<T, F>(&self, items: &mut [T], body: F) -> f64
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync,
    {
        let slots = DisjointSlice::new(items);
        // SAFETY: parallel_for invokes the body at most once per index, so no
        // two live `&mut` borrows ever alias.
        self.parallel_for(slots.len, |i| body(i, unsafe { slots.get_mut(i) }))
    }

    /// Aggregate `value_of(i)` over `[0, n)` with `combine`, using the
    /// executor's construct. Returns the aggregate and the elapsed seconds.
    ///
    /// `combine` must be associative and commutative with `identity` as its
    /// neutral element for the result to be independent of the construct
    /// and schedule.
    pub fn parallel_reduce<T, F, C>(
        &self,
        n: usize,
        identity: T,
        value_of: F,
        combine: C,
    ) -> (T, f64)
    where
        T: Clone + Send + Sync,
        F: Fn(usize) -> T + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        let start = Instant::now();
        let state = LoopState::new();
        let result = match self.run.construct {
            Construct::Sequential => (0..n).fold(identity, |acc, i| combine(acc, value_of(i))),
            Construct::Reduction => {
                let locals = self.broadcast(&state, |worker| {
                    self.drive(n, worker, &state, identity.clone(), |local, r| {
                        r.fold(local, |acc, i| combine(acc, value_of(i)))
                    })
                });
                // Worker-id ascending.
                locals.into_iter().fold(identity, &combine)
            }
            Construct::CriticalPartial => {
                let shared = Mutex::new(Some(identity));
                self.broadcast(&state, |worker| {
                    self.drive(n, worker, &state, (), |(), r| {
                        for i in r {
                            let value = value_of(i);
                            let mut guard = shared.lock().unwrap_or_else(PoisonError::into_inner);
                            let acc = guard.take().expect("accumulator present");
                            *guard = Some(combine(acc, value));
                        }
                    });
                });
                take_shared(shared)
            }
            Construct::CriticalFull => {
                let shared = Mutex::new(Some(identity));
                self.broadcast(&state, |worker| {
                    self.drive(n, worker, &state, (), |(), r| {
                        for i in r {
                            let mut guard = shared.lock().unwrap_or_else(PoisonError::into_inner);
                            let acc = guard.take().expect("accumulator present");
                            *guard = Some(combine(acc, value_of(i)));
                        }
                    });
                });
                take_shared(shared)
            }
        };
        (result, start.elapsed().as_secs_f64())
    }

    /// Maximum of `value_of(i)` over `[0, n)`, or `-∞` for an empty loop.
    /// See [`max_combine`] for the comparison rule.
    pub fn parallel_max<F>(&self, n: usize, value_of: F) -> (f64, f64)
    where
        F: Fn(usize) -> f64 + Sync,
    {
        self.parallel_reduce(n, f64::NEG_INFINITY, value_of, max_combine)
    }
}

fn take_shared<T>(shared: Mutex<Option<T>>) -> T {
    shared
        .into_inner()
        .unwrap_or_else(PoisonError::into_inner)
        .expect("accumulator present")
}

/// Max step used by every construct: `value` replaces `acc` when it is
/// strictly greater, or when both are zero and only `value` is `+0.0`.
///
/// NaN values never replace the accumulator. Over any set of non-NaN values
/// this is the maximum under the order `-∞ < … < -0.0 < +0.0 < … < +∞`, so
/// every grouping and ordering yields the same bits.
pub fn max_combine(acc: f64, value: f64) -> f64 {
    if value > acc || (value == acc && value.is_sign_positive() && acc.is_sign_negative()) {
        value
    } else {
        acc
    }
}

struct DisjointSlice<T> {
    ptr: *mut T,
    len: usize,
}

// SAFETY: callers only hand out one `&mut T` per index; T itself must be Send
// since elements are mutated from worker threads.
unsafe impl<T: Send> Sync for DisjointSlice<T> {}

impl<T> DisjointSlice<T> {
    fn new(items: &mut [T]) -> Self {
        DisjointSlice {
            ptr: items.as_mut_ptr(),
            len: items.len(),
        }
    }

    /// # Safety
    /// `i < len`, and no other reference to element `i` may be live.
    #[allow(clippy::mut_from_ref)]
    unsafe fn get_mut(&self, i: usize) -> &mut T {
        debug_assert!(i < self.len);
        &mut *self.ptr.add(i)
    }
}

/// One-shot [`Executor::parallel_for`]; builds a pool for this loop only.
pub fn parallel_for<F>(n: usize, run: &RunConfig, body: F) -> Result<f64, ExecutorError>
where
    F: Fn(usize) + Sync,
{
    Ok(Executor::new(run)?.parallel_for(n, body))
}

/// One-shot [`Executor::parallel_max`]; builds a pool for this loop only.
pub fn parallel_max<F>(n: usize, run: &RunConfig, value_of: F) -> Result<(f64, f64), ExecutorError>
where
    F: Fn(usize) -> f64 + Sync,
{
    Ok(Executor::new(run)?.parallel_max(n, value_of))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_runs() -> Vec<RunConfig> {
        let schedules = [
            ScheduleSpec::static_(0),
            ScheduleSpec::static_(1),
            ScheduleSpec::static_(50),
            ScheduleSpec::dynamic(0),
            ScheduleSpec::dynamic(7),
            ScheduleSpec::guided(0),
            ScheduleSpec::guided(16),
            ScheduleSpec::runtime(),
        ];
        let mut runs = Vec::new();
        for threads in [1, 3, 8] {
            for schedule in schedules {
                for construct in Construct::ALL {
                    runs.push(RunConfig::new(threads, schedule, construct).unwrap());
                }
            }
        }
        runs
    }

    fn executor(run: &RunConfig) -> Executor {
        Executor::with_runtime_env(run, Some("guided,3")).unwrap()
    }

    #[test]
    fn every_index_once() {
        let n = 1000;
        for run in all_runs() {
            let hits: Vec<AtomicUsize> = (0..n).map(|_| AtomicUsize::new(0)).collect();
            let exec = executor(&run);
            let elapsed = exec.parallel_for(n, |i| {
                hits[i].fetch_add(1, Ordering::Relaxed);
            });
            assert!(elapsed >= 0.0);
            assert!(
                hits.iter().all(|h| h.load(Ordering::Relaxed) == 1),
                "{run:?}"
            );
        }
    }

    #[test]
    fn empty_loop_never_calls_body() {
        for run in all_runs() {
            let exec = executor(&run);
            let elapsed = exec.parallel_for(0, |_| panic!("called"));
            assert!(elapsed >= 0.0);
            assert_eq!(
                exec.parallel_max(0, |_| panic!("called")).0,
                f64::NEG_INFINITY
            );
        }
    }

    #[test]
    fn sequential_runs_in_order_on_caller() {
        let run = RunConfig::new(8, ScheduleSpec::dynamic(1), Construct::Sequential).unwrap();
        let exec = executor(&run);
        assert_eq!(exec.workers(), 1);
        let caller = std::thread::current().id();
        let seen = Mutex::new(Vec::new());
        exec.parallel_for(100, |i| {
            assert_eq!(std::thread::current().id(), caller);
            seen.lock().unwrap().push(i);
        });
        assert_eq!(seen.into_inner().unwrap(), (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn small_max() {
        let values = [-1.0, 3.0, 2.0];
        for run in all_runs() {
            assert_eq!(executor(&run).parallel_max(3, |i| values[i]).0, 3.0);
        }
    }

    #[test]
    fn max_ignores_nan_and_prefers_positive_zero() {
        let values = [f64::NAN, -0.0, 0.0, -0.0, f64::NAN];
        for run in all_runs() {
            let (max, _) = executor(&run).parallel_max(values.len(), |i| values[i]);
            assert_eq!(max.to_bits(), 0.0f64.to_bits(), "{run:?}");
        }
        assert_eq!(max_combine(f64::NEG_INFINITY, f64::NAN), f64::NEG_INFINITY);
        assert_eq!(max_combine(f64::INFINITY, 5.0), f64::INFINITY);
    }

    #[test]
    fn critical_regions_are_exclusive() {
        for threads in [2, 8, 32] {
            for construct in [Construct::CriticalPartial, Construct::CriticalFull] {
                let run = RunConfig::new(threads, ScheduleSpec::dynamic(1), construct).unwrap();
                let exec = executor(&run);
                let inside = AtomicUsize::new(0);
                let peak = AtomicUsize::new(0);
                let guarded = |acc: u64, v: u64| {
                    let now = inside.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::hint::spin_loop();
                    inside.fetch_sub(1, Ordering::SeqCst);
                    acc + v
                };
                let (sum, _) = exec.parallel_reduce(20_000, 0u64, |i| i as u64, guarded);
                assert_eq!(sum, (0..20_000u64).sum());
                assert_eq!(peak.load(Ordering::SeqCst), 1, "{construct} x{threads}");
            }
        }
    }

    #[test]
    fn critical_full_guards_the_value_computation() {
        let run = RunConfig::new(8, ScheduleSpec::static_(1), Construct::CriticalFull).unwrap();
        let exec = executor(&run);
        let inside = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        exec.parallel_max(10_000, |i| {
            let now = inside.fetch_add(1, Ordering::SeqCst) + 1;
            peak.fetch_max(now, Ordering::SeqCst);
            inside.fetch_sub(1, Ordering::SeqCst);
            i as f64
        });
        assert_eq!(peak.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn for_each_mut_touches_each_element() {
        for run in all_runs() {
            let mut items = vec![0u32; 777];
            executor(&run).for_each_mut(&mut items, |i, v| *v += i as u32 + 1);
            assert!(items.iter().enumerate().all(|(i, &v)| v == i as u32 + 1));
        }
    }

    #[test]
    fn try_parallel_for_reports_lowest_failure() {
        for run in all_runs() {
            let exec = executor(&run);
            let err = exec
                .try_parallel_for(500, |i| if i % 100 == 42 { Err(i) } else { Ok(()) })
                .unwrap_err();
            assert_eq!(err.index, err.error);
            assert_eq!(err.index % 100, 42);
            if exec.workers() == 1 {
                assert_eq!(err.index, 42);
            }
            assert!(exec.try_parallel_for(500, |_| Ok::<(), ()>(())).is_ok());
        }
    }

    #[test]
    fn panics_surface_after_quiescence() {
        let run = RunConfig::new(4, ScheduleSpec::dynamic(1), Construct::Reduction).unwrap();
        let exec = executor(&run);
        let finished = AtomicUsize::new(0);
        let result = panic::catch_unwind(AssertUnwindSafe(|| {
            exec.parallel_for(64, |i| {
                if i == 10 {
                    panic!("boom");
                }
                finished.fetch_add(1, Ordering::SeqCst);
            })
        }));
        assert!(result.is_err());
        // The pool survives and is reusable.
        let count = AtomicUsize::new(0);
        exec.parallel_for(100, |_| {
            count.fetch_add(1, Ordering::Relaxed);
        });
        assert_eq!(count.load(Ordering::Relaxed), 100);
    }

    #[test]
    fn runtime_schedule_resolution() {
        let run = RunConfig::new(2, ScheduleSpec::runtime(), Construct::Reduction).unwrap();
        let exec = Executor::with_runtime_env(&run, Some("dynamic,64")).unwrap();
        assert_eq!(exec.schedule(), ScheduleSpec::dynamic(64));
        assert!(matches!(
            Executor::with_runtime_env(&run, Some("runtime")),
            Err(ExecutorError::Schedule(ParseScheduleError::SelfReferential))
        ));
    }

    #[test]
    fn workers_capped() {
        let run = RunConfig::new(64, ScheduleSpec::default(), Construct::Reduction)
            .unwrap()
            .with_thread_cap(4)
            .unwrap();
        let exec = executor(&run);
        assert_eq!(exec.workers(), 4);
        let ids = Mutex::new(std::collections::HashSet::new());
        exec.parallel_for(10_000, |_| {
            ids.lock().unwrap().insert(std::thread::current().id());
        });
        assert!(ids.into_inner().unwrap().len() <= 4);
    }
}

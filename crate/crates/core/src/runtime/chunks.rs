//! Chunk-assignment algebra for the three concrete schedule kinds.
//!
//! Static assignments are pure functions of `(n, workers, chunk)`. Dynamic and
//! guided assignments are claimed at run time from a shared counter, so only
//! the claiming step lives here.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};

/// One contiguous range of iterations given to one worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AssignedRange {
    pub worker: usize,
    pub start: usize,
    pub end: usize,
}

impl AssignedRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// A complete static assignment, ordered by start index. The ranges are
/// pairwise disjoint, non-empty, and cover `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChunkAssignment {
    pub ranges: Vec<AssignedRange>,
}

impl ChunkAssignment {
    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn for_worker(&self, worker: usize) -> impl Iterator<Item = Range<usize>> + '_ {
        self.ranges
            .iter()
            .filter(move |r| r.worker == worker)
            .map(AssignedRange::range)
    }

    /// Total iterations per worker, indexed by worker id.
    pub fn load_per_worker(&self, workers: usize) -> Vec<usize> {
        let mut load = vec![0; workers];
        for r in &self.ranges {
            load[r.worker] += r.len();
        }
        load
    }
}

/// The ranges one worker executes under a static schedule, in order.
///
/// `chunk > 0` deals chunks round-robin (worker `w` gets chunk `w`,
/// `w + workers`, ...). `chunk == 0` gives every worker one contiguous block
/// whose size differs from the others by at most one.
pub(crate) fn static_ranges_for(
    n: usize,
    workers: usize,
    chunk: usize,
    worker: usize,
) -> impl Iterator<Item = Range<usize>> {
    debug_assert!(workers >= 1 && worker < workers);
    let (first, step, size, count) = if chunk == 0 {
        let base = n / workers;
        let extra = n % workers;
        let start = worker * base + worker.min(extra);
        let len = base + usize::from(worker < extra);
        (start, 0, len, usize::from(len > 0))
    } else {
        let chunks = n.div_ceil(chunk);
        let mine = if worker < chunks {
            (chunks - worker).div_ceil(workers)
        } else {
            0
        };
        (worker * chunk, workers * chunk, chunk, mine)
    };
    (0..count).map(move |k| {
        let start = first + k * step;
        start..(start + size).min(n)
    })
}

/// Materialize the static schedule for `n` iterations over `workers` workers.
///
/// ```
/// use fsb::runtime::static_chunks;
///
/// let a = static_chunks(10, 2, 3);
/// assert_eq!(a.for_worker(0).collect::<Vec<_>>(), vec![0..3, 6..9]);
/// assert_eq!(a.for_worker(1).collect::<Vec<_>>(), vec![3..6, 9..10]);
/// ```
pub fn static_chunks(n: usize, workers: usize, chunk: usize) -> ChunkAssignment {
    assert!(workers >= 1, "static_chunks needs at least one worker");
    let mut ranges: Vec<AssignedRange> = (0..workers)
        .flat_map(|worker| {
            static_ranges_for(n, workers, chunk, worker).map(move |r| AssignedRange {
                worker,
                start: r.start,
                end: r.end,
            })
        })
        .collect();
    ranges.sort_by_key(|r| r.start);
    ChunkAssignment { ranges }
}

/// Claim the next dynamic chunk from `counter`.
///
/// Advances the counter by `chunk` and returns `[c, min(c + chunk, n))` for
/// the prior value `c`, or `None` once `c >= n`. Concurrent claimers receive
/// disjoint ranges covering `[0, n)`.
pub fn dynamic_next(counter: &AtomicUsize, n: usize, chunk: usize) -> Option<Range<usize>> {
    debug_assert!(chunk >= 1);
    // Cheap exit so exhausted loops do not keep pushing the counter upward.
    if counter.load(Ordering::Relaxed) >= n {
        return None;
    }
    let start = counter.fetch_add(chunk, Ordering::Relaxed);
    if start >= n {
        return None;
    }
    Some(start..start.saturating_add(chunk).min(n))
}

/// Size of the next guided chunk: `min(remaining, max(⌈remaining / workers⌉, min_chunk))`.
pub fn guided_chunk_size(remaining: usize, workers: usize, min_chunk: usize) -> usize {
    debug_assert!(workers >= 1 && min_chunk >= 1);
    remaining.div_ceil(workers).max(min_chunk).min(remaining)
}

/// Claim the next guided chunk from `counter`, sized from the iterations
/// still unclaimed at the moment of the claim.
pub fn guided_next(
    counter: &AtomicUsize,
    n: usize,
    workers: usize,
    min_chunk: usize,
) -> Option<Range<usize>> {
    let mut start = counter.load(Ordering::Relaxed);
    loop {
        if start >= n {
            return None;
        }
        let size = guided_chunk_size(n - start, workers, min_chunk);
        match counter.compare_exchange_weak(
            start,
            start + size,
            Ordering::Relaxed,
            Ordering::Relaxed,
        ) {
            Ok(_) => return Some(start..start + size),
            Err(current) => start = current,
        }
    }
}

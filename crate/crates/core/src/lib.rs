//! Loop-scheduling experiments on a fish-school workload.
//!
//! - [`runtime`]: a chunked parallel-for executor with static, dynamic, guided
//!   and runtime schedules, plus reduction and critical-section aggregation.
//! - [`sim`]: a deterministic fish-school simulation whose result does not
//!   depend on how its loops are scheduled.
//! - [`harness`]: the thread-count, schedule/chunk and construct sweeps, with
//!   CSV persistence.
//! - [`report`]: summary tables and SVG charts rendered from harness CSV.
//!
//! The guide under `book/` walks through the same material; its code blocks
//! are compiled and run as doc-tests of this crate.

pub mod harness;
pub mod report;
pub mod rng;
pub mod runtime;
pub mod sim;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scheduling.md")]
    mod scheduling {}
    #[doc = include_str!("../../../book/src/constructs.md")]
    mod constructs {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

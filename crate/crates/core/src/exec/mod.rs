//! Parallel executors. Each one must reproduce [`crate::eval::eval_psi_ref`]
//! bit for bit, on the output list and on the final state store.

mod auto;
mod branch;
mod classify;
mod data_parallel;
mod pipeline;

use std::fmt;
use std::str::FromStr;
use std::thread;

pub use auto::run_auto;
pub use branch::{
    eval_branch_interleaved, eval_branch_ref, join, run_task_parallel_branch, split, validate_branch, BranchProgram,
    FlagList, SubwordStrategy, ValidatedBranch,
};
pub use classify::{classify_thread, spot_check_hint, StageClassification};
pub use data_parallel::{run_data_parallel_product, run_data_parallel_readonly};
pub use pipeline::run_pipeline;

pub const DEFAULT_CHANNEL_CAPACITY: usize = 16;

/// Deliberate executor faults used to demonstrate that the equivalence
/// checks catch real bugs. Reference evaluators never look at these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Stages keep their old state instead of the updated one.
    DropStateUpdate,
    /// Pipeline stages are wired in reverse order.
    SwapStageOrder,
    /// `join` concatenates the branch lists instead of following the flags.
    IgnoreJoinFlags,
    /// Stages report their initial state at end of stream.
    DropFinalState,
    /// Segments of a repeated-letter word all start from the pre-word state.
    RemoveSegmentBarrier,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::DropStateUpdate,
        Mutation::SwapStageOrder,
        Mutation::IgnoreJoinFlags,
        Mutation::DropFinalState,
        Mutation::RemoveSegmentBarrier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DropStateUpdate => "drop-state-update",
            Mutation::SwapStageOrder => "swap-stage-order",
            Mutation::IgnoreJoinFlags => "ignore-join-flags",
            Mutation::DropFinalState => "drop-final-state",
            Mutation::RemoveSegmentBarrier => "remove-segment-barrier",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mutation `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecConfig {
    /// Upper bound on concurrently running stages (and data-parallel chunks).
    pub workers: usize,
    pub channel_capacity: usize,
    pub mutation: Option<Mutation>,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            workers: thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            channel_capacity: DEFAULT_CHANNEL_CAPACITY,
            mutation: None,
        }
    }
}

impl ExecConfig {
    pub fn with_workers(workers: usize) -> Self {
        ExecConfig { workers: workers.max(1), ..ExecConfig::default() }
    }

    pub fn mutated(mut self, mutation: Option<Mutation>) -> Self {
        self.mutation = mutation;
        self
    }

    pub(crate) fn has(&self, m: Mutation) -> bool {
        self.mutation == Some(m)
    }

    pub(crate) fn workers(&self) -> usize {
        self.workers.max(1)
    }
}

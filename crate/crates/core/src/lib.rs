//! Deterministic stateful dataflow.
//!
//! A program is a path (a *word*) through a multigraph whose edges are
//! fundamental state threads, each owning one private state slot. Lifting a
//! word over a list gives the stage-wise semantics in [`eval::eval_psi_ref`];
//! the executors in [`exec`] run the same computation with pipeline, data and
//! task parallelism and produce bit-identical results.

pub mod bench;
pub mod builtins;
pub mod check;
pub mod dot;
pub mod error;
pub mod eval;
pub mod exec;
pub mod fuzz;
pub mod model;
pub mod program;
pub mod value;
pub mod word;

pub use error::{Error, Result};

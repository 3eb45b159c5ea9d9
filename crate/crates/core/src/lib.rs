//! Structural classification of JavaScript programs as tracking or functional.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`corpus`] ingests page snapshots and script files into a [`corpus::Dataset`],
//!   and pretty-prints packed code ([`corpus::unpack`]).
//! * [`canon`] lexes, parses and lowers a program into its canonical form: one
//!   operation per line, compiler temporaries, alpha-renamed identifiers and
//!   loops unified as guarded `while`.
//! * [`pdg`] builds the program dependency graph over canonical statements and
//!   enumerates backward dependency paths.
//! * [`features`] turns programs into boolean tf-idf vectors over syntactic
//!   lines, sequential n-grams or PDG n-grams.
//! * [`learn`] holds the kernels, the working-set SVM solvers (one-class,
//!   two-class), PU learning and grid search.
//! * [`eval`] computes aggressiveness, confusion/AER and agreement reports.
//! * [`pipeline`] wires the stages into the validation protocol.
//!
//! Data-parallel loops go through [`par`]; with the `parallel` feature
//! disabled every loop runs sequentially and produces identical output.

pub mod canon;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod learn;
pub mod par;
pub mod pdg;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod synth;

mod error;

pub use error::{Error, Result};

//! Experiment harness for random Fourier feature classification.
//!
//! The library side of the `rff-bench` binary: experiment plans ([`plan`]),
//! the sweep runner ([`runner`]), learning-rate fits ([`rate`]), scheme
//! comparisons ([`compare`]), and file formats ([`io`]).

pub mod compare;
pub mod io;
pub mod plan;
pub mod rate;
pub mod runner;

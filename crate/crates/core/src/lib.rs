//! Simulation and analysis toolkit for waveguide-based entangled
//! photon-pair experiments.
//!
//! The crate is organized around the stages of a coincidence-counting
//! experiment:
//!
//! - [`qpm`] — quasi-phase-matching: conjugate wavelengths, phase
//!   mismatch, poling-period solving and down-conversion spectra.
//! - [`source`] — pair emission statistics for CW and pulsed pumps,
//!   the 50/50 splitter and the efficiency estimator.
//! - [`pathcalc`] — analytic path-amplitude engine for Franson and
//!   time-bin interference under configurable post-selection.
//! - [`detect`] — detector response, start-stop TAC histogramming and
//!   windowed (SCA) coincidence counting.
//! - [`analyze`] — peak finding, pairs-per-pulse inference, fringe
//!   visibility fitting and Bell significance.
//! - [`pipeline`] — chunked Monte-Carlo pipelines tying the stages
//!   together, with an optional rayon-parallel execution path
//!   (feature `parallel`, on by default).
//!
//! All random stages are deterministic per seed: identical seeds yield
//! identical event streams regardless of execution mode.

// `!(x >= 0.0)` is used deliberately throughout validation code: it
// rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod constants;
pub mod detect;
pub mod io;
pub mod pathcalc;
pub mod pipeline;
pub mod qpm;
pub mod source;

pub use pipeline::Execution;

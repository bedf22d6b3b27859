//! Simulation and empirical stability certification for live systems:
//! impulsive dynamical systems whose state-space dimension changes over time
//! as subsystems enter and leave.
//!
//! The crate provides
//! - labelled states over a configuration registry with a pseudonorm
//!   ([`core_state`]),
//! - piecewise input signals with exact sup-norms ([`signals`]),
//! - a deterministic fixed-step flow engine with jump rules and a
//!   control-system axiom harness ([`flow_engine`]),
//! - open multi-agent system compilation, switched systems and
//!   fixed-configuration reductions ([`omas`]),
//! - comparison functions, decay-envelope construction, and empirical
//!   stability checkers ([`stability`]),
//! - Lyapunov-function verification and dwell-time machinery ([`lyapunov`]),
//! - the cascade case study ([`example_cascade`]),
//! - a scenario-file driven CLI ([`scenario`], [`cli`]).

pub mod core_state;
pub mod error;
pub mod flow_engine;
pub mod numerics;
pub mod omas;
pub mod rng;
pub mod signals;
pub mod stability;

pub use error::{LiveError, Result};

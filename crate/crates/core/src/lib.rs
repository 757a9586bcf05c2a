//! Fixed-time consensus for single-integrator swarms using adaptive gains whose
//! envelope oscillates: the first zero of a damped sinusoid fixes the
//! convergence deadline independently of the initial states.
//!
//! The crate provides the scalar regulator and its closed form, four consensus
//! protocols with their sufficiency conditions and time bounds, a fixed-step
//! integrator, trajectory metrics, and a scenario layer with CSV and report
//! output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disturbance;
pub mod error;
pub mod graph;
pub mod integrator;
pub mod metrics;
pub mod protocol;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use graph::Graph;
pub use integrator::{IntegratorSettings, Method, Trajectory};
pub use metrics::ConsensusReport;
pub use protocol::{Protocol, ProtocolConfig, SlidingGains, SwarmState, Variant};
pub use scenario::Scenario;

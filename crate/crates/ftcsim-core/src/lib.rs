//! Finite-time consensus of multi-agent networks with unknown inherent
//! nonlinear dynamics under directed switching interaction graphs.
//!
//! The crate provides:
//! - directed weighted graphs, switching schedules, and connectivity audits
//!   ([`graph`]),
//! - the variable-exponent consensus protocol and its companion controller
//!   families ([`dynamics`]),
//! - gain thresholds built on the tight chain-inequality constant
//!   ([`gains`]),
//! - switch-aligned fixed-step simulation with consensus snapping and the
//!   worst-case comparison systems ([`simulator`]),
//! - gap-energy Lyapunov accounting, the analytic settling-time bound, and
//!   trajectory-dominance audits ([`comparison`]),
//! - convergence metrics, Lipschitz and spanning-tree audits, and the
//!   joint-connectivity counterexample ([`analysis`]).

// validation guards are written as `!(v > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod comparison;
pub mod dynamics;
pub mod error;
pub mod gains;
pub mod graph;
pub mod simulator;
pub mod state;
pub mod trace;

pub use analysis::{
    convergence_report, disagreement, joint_connectivity_counterexample,
    joint_connectivity_counterexample_with, lipschitz_audit, log_disagreement, settling_time,
    spanning_tree_audit, ConvergenceReport, JointConnectivityCounterexample, LipschitzReport,
};
pub use comparison::{
    comparison_run, dominance_audit, find_tbar, g_tilde_series, lyapunov_g_tilde,
    lyapunov_g_tilde_small, mu_trajectory, settling_bound, BoundParams, DominanceReport,
    DominanceViolation, KindPolicy, ReanchorMode,
};
pub use dynamics::{
    closed_loop_rhs, control_input, exponent_schedule, sig_pow, ControllerSpec, InherentDynamics,
};
pub use error::{Error, Result};
pub use gains::{
    beta_threshold, check_gain, q_n, q_reported, GainCertificate, QConvention, Slack, Q3_REPORTED,
};
pub use graph::{DirectedGraph, Segment, SwitchingSchedule, WeightBounds};
pub use simulator::{
    simulate, simulate_comparison, step, ComparisonKind, ComparisonParams, IntegratorConfig,
    Scheme, SwitchScript,
};
pub use state::AgentState;
pub use trace::{EventKind, Trace};

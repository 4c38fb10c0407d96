//! Harvested-power maximization for QoS-constrained MIMO SWIPT links with
//! uniform power-splitting receivers.
//!
//! The crate computes the jointly optimal transmit covariance and receive
//! power-splitting ratio, the semi-adaptive baselines that optimize only one
//! of the two, brute-force oracles for validation, and a Monte Carlo sweep
//! harness with CSV/JSON output.

pub mod benchmarks;
pub mod channel;
pub mod eh_model;
pub mod error;
pub mod joint_opt;
pub mod oracle;
pub mod sweep;
pub mod waterfill;

pub use benchmarks::{solve_ops, solve_otcm, OpsCovariance};
pub use channel::{
    achievable_rate, decompose, generate_channel, received_rf_power, ChannelRealization, Covariance,
    PowerSplit, SvdDecomposition,
};
pub use eh_model::{check_monotone, EhModel, Rectifier};
pub use error::{Result, SwiptError};
pub use joint_opt::{
    compute_rate_threshold, inner_max_received_power, kkt_residuals, solve_eb_branch, solve_joint,
    solve_sm_branch, Branch, JointSolution, KktReport, SwiptProblem,
};
pub use oracle::{grid_search, unimodality_scan, GridSpec};
pub use sweep::{emit, run_sweep, OutputFormat, RateGrid, Scheme, SimConfig, SweepResult, SweepSummary};
pub use waterfill::{max_rate, waterfill, wf_rank, PowerAllocation};

//! Modular-position subsystem decomposition of continuous-variable modes.
//!
//! A position `s` splits into a bin number and a centered remainder,
//! `s = alpha * m + u`; the parity of `m` carries a logical qubit and the
//! rest addresses a gauge mode. This crate provides the decomposition, grid
//! states, the gauge trace and its logical diagnostics, approximate
//! grid-code (GKP) states with a closed-form cross-check, and a two-mode
//! protocol that distills a logical cluster state from Gaussian inputs.

pub mod analysis;
pub mod cluster;
pub mod error;
pub mod gkp;
pub mod grid;
mod hexfloat;
pub mod modular;
pub mod states;

pub use analysis::{
    gauge_trace, gauge_trace_two_mode, logical_fidelity, schmidt_data, LogicalDensityMatrix,
    SchmidtData,
};
pub use cluster::{
    hidden_cluster_experiment, modular_measure_and_correct, ClusterExperimentReport,
    GraphAdjacency, MeasurementPolicy, TwoModeState,
};
pub use error::{Error, Result};
pub use gkp::{approx_gkp_state, kappa_sweep, small_spike_logical_state, ApproxGkpParams};
pub use grid::PositionGrid;
pub use modular::{BinDecomposition, BinSpec, SubsystemLabels};
pub use states::ModeWavefunction;

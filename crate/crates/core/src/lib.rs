//! Tracking quantum error correction for GKP qubits.
//!
//! Monte Carlo simulation of repeated error correction on GKP qubits encoded
//! in the concatenated C4/C6 code, comparing the conventional schedule
//! (a teleportation-based logical QEC every cycle) with the tracking
//! schedule (cheap single-qubit QECs whose analog outcomes are recorded and
//! fed into one final logical decode).
//!
//! Module map:
//! - [`gkp`]: Gaussian displacement noise, lattice binning, likelihoods.
//! - [`single_qec`]: ancilla-assisted single-qubit correction.
//! - [`decoder`]: soft-decision ML decoding of C4/C6 blocks.
//! - [`protocols`]: conventional and tracking trials.
//! - [`resources`]: physical-qubit budgets.
//! - [`harness`]: failure-probability estimation, sweeps, thresholds.

pub mod decoder;
pub mod error;
pub mod gkp;
pub mod harness;
pub mod logspace;
pub mod protocols;
pub mod resources;
pub mod single_qec;

pub use decoder::{
    block_pair_likelihoods, c4_table, c6_level_up, c6_table, decode, oracle_ml_decode, CodeKind,
    CodeTable, ConcatLevel, Decoded, PairLikelihoods, Quadrature,
};
pub use error::{Error, Result};
pub use gkp::{
    analog_likelihoods, bin_measurement, digital_likelihoods, p_corr, p_error, sample_channel,
    true_flip, BinnedOutcome, LikelihoodPair, NoiseParams, TrueDeviation, HALF_SQRT_PI, SQRT_PI,
};
pub use harness::{
    estimate_point, find_threshold, sweep, CsvSink, ExperimentTemplate, MemorySink, PointConfig,
    PointEstimate, PointSink, RunManifest, SweepConfig, ThresholdEstimate,
};
pub use protocols::{
    joint_likelihood, run_conventional, run_tracking, run_trial, score_trial, ProtocolConfig,
    ProtocolKind, TrialOutcome,
};
pub use resources::ResourceReport;
pub use single_qec::{cnot_propagate, sqec_cycle, sqec_p, sqec_q, QubitTrack, SqecRecord};

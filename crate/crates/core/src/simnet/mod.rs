//! Deterministic discrete-interval simulator of a mote society.
//!
//! Each interval runs the monitor, analyze and adapt loop on top of the
//! rolling work-load protocol. Randomness comes from independent ChaCha
//! streams derived from the scenario seed, so a trace is a pure function of
//! the scenario.

mod mote;
mod observe;
mod run;
mod scenario;
mod topology;
mod trace;

use thiserror::Error;

use crate::rwp::{Address, RwpError};
use crate::trust_qad::QadError;

pub use mote::{Action, AnalysisConfig, MoteState, PairMetrics, PeerEvidence};
pub use observe::{
    observe_link, safety_score, LinkParams, LinkTruth, NoiseAmplitude, Normalizers, SafetyObservation, ScoreWeights,
};
pub use run::run;
pub use scenario::{
    Architecture, EnergyConfig, KillTarget, LinkChange, LinkSelector, Scenario, ScenarioEvent, TopologyKind,
    TrustEngine,
};
pub use topology::Topology;
pub use trace::{IntervalRecord, MessageStats, MoteRecord, PairRecord, SimulationTrace};

const STREAM_TOPOLOGY: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_DYNAMICS: u64 = 2;
const STREAM_TRAFFIC: u64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {key}: {message}")]
    InvalidScenario { key: String, message: String },
    #[error("{0} is not a neighbor")]
    UnknownPeer(Address),
    #[error("mote {0} has no candidate peers")]
    NoCandidates(Address),
    #[error(transparent)]
    Rwp(#[from] RwpError),
    #[error(transparent)]
    Qad(#[from] QadError),
}

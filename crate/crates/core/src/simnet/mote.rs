use std::collections::{BTreeMap, BTreeSet};

use crate::rwp::{Address, MinorMatrix, RwpState};
use crate::trust_prob::{JointCounts, Smoothing};
use crate::trust_qad::{quantize_observation, Assessment, OperatorChoice};
use crate::trustworthiness::{update_counts, BehaviorCounts, Outcome, TrustRecord, TrustworthinessParams};

use super::observe::{safety_score, Normalizers, SafetyObservation, ScoreWeights};
use super::scenario::{EnergyConfig, TrustEngine};
use super::SimError;

/// Everything `analyze` and `select_peer` need besides the mote itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub weights: ScoreWeights,
    pub normalizers: Normalizers,
    pub misbehavior_threshold: f64,
    pub params: TrustworthinessParams,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            weights: ScoreWeights::equal(),
            normalizers: Normalizers::default(),
            misbehavior_threshold: 0.5,
            params: TrustworthinessParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Tx,
    Rx,
    Compute,
}

/// Bayesian evidence toward one peer, with the evidence values of the most
/// recent poll used as the conditioning event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PeerEvidence {
    pub counts: JointCounts,
    pub last: Option<(bool, bool)>,
}

/// Metrics for one directed relation as exported to the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub engine_metric: f64,
    pub record: Option<TrustRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoteState {
    pub addr: Address,
    energy: f64,
    capacity: f64,
    harvest_rate: f64,
    alive: bool,
    /// Sinks are mains-powered and never charged.
    unconstrained: bool,
    pub rwp: RwpState,
    pub engine: TrustEngine,
    pub operator: OperatorChoice,
    pub counts_by_peer: BTreeMap<Address, BehaviorCounts>,
    pub evidence_by_peer: BTreeMap<Address, PeerEvidence>,
    pub observed: BTreeSet<Address>,
    /// This mote's row of the latest society matrix, while served.
    pub served_view: Option<BTreeMap<Address, Assessment>>,
}

impl MoteState {
    pub fn new(
        addr: Address,
        neighbors: &[Address],
        energy: &EnergyConfig,
        theta: f64,
        engine: TrustEngine,
        operator: OperatorChoice,
    ) -> Result<Self, SimError> {
        let mut minor = MinorMatrix::new(addr, neighbors)?;
        for &m in minor.members().to_vec().iter() {
            minor.set(m, m, Assessment::FULL_TRUST)?;
        }
        Ok(Self {
            addr,
            energy: energy.initial_j,
            capacity: energy.capacity_j,
            harvest_rate: energy.harvest_j_per_s,
            alive: energy.initial_j > 0.0,
            unconstrained: false,
            rwp: RwpState::new(addr, theta, minor)?,
            engine,
            operator,
            counts_by_peer: BTreeMap::new(),
            evidence_by_peer: BTreeMap::new(),
            observed: BTreeSet::new(),
            served_view: None,
        })
    }

    /// Turns this mote into an unconstrained sink.
    pub fn into_sink(mut self) -> Self {
        self.unconstrained = true;
        self.energy = self.capacity;
        self.alive = true;
        self
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn harvest_rate(&self) -> f64 {
        self.harvest_rate
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn is_sink(&self) -> bool {
        self.unconstrained
    }

    pub fn kill(&mut self) {
        self.alive = false;
        self.served_view = None;
    }

    /// Pays for one action. Returns whether the action happened; a mote that
    /// cannot afford it is drained and dies without acting.
    pub fn charge_energy(&mut self, action: Action, costs: &EnergyConfig) -> bool {
        if !self.alive {
            return false;
        }
        if self.unconstrained {
            return true;
        }
        let cost = match action {
            Action::Tx => costs.tx_cost_j,
            Action::Rx => costs.rx_cost_j,
            Action::Compute => costs.compute_cost_j,
        };
        let afforded = self.energy >= cost;
        self.energy = (self.energy - cost).max(0.0);
        if self.energy <= 0.0 {
            self.kill();
        }
        afforded
    }

    /// Credits `seconds` of harvesting, up to capacity. Returns the gain.
    pub fn harvest(&mut self, seconds: f64) -> f64 {
        if !self.alive || self.unconstrained {
            return 0.0;
        }
        let before = self.energy;
        self.energy = (self.energy + self.harvest_rate * seconds).min(self.capacity);
        self.energy - before
    }

    /// Folds one observation of `peer` into the trust state.
    pub fn analyze(&mut self, peer: Address, obs: &SafetyObservation, cfg: &AnalysisConfig) -> Result<(), SimError> {
        if peer == self.addr || !self.rwp.a_minor().members().contains(&peer) {
            return Err(SimError::UnknownPeer(peer));
        }
        let score = safety_score(obs, &cfg.weights, &cfg.normalizers);
        let trusted = score >= cfg.misbehavior_threshold;
        // the neighborhood matrix feeds the protocol whatever the engine
        let addr = self.addr;
        self.rwp.a_minor_mut().set(addr, peer, quantize_observation(score)?)?;
        match self.engine {
            TrustEngine::Qad => {}
            TrustEngine::Beta => {
                let outcome = if trusted {
                    Outcome::Normal
                } else {
                    Outcome::Misbehavior
                };
                let counts = self.counts_by_peer.entry(peer).or_default();
                *counts = update_counts(counts, outcome);
            }
            TrustEngine::Bayes => {
                let d1 = obs.tx_rate_bps >= cfg.normalizers.ref_tx_rate_bps;
                let d2 = obs.uptime > 0.5;
                let ev = self.evidence_by_peer.entry(peer).or_default();
                ev.counts.record(trusted, d1, d2);
                ev.last = Some((d1, d2));
            }
        }
        self.observed.insert(peer);
        Ok(())
    }

    fn own_assessment(&self, peer: Address) -> Option<i8> {
        self.rwp.a_minor().get(self.addr, peer).ok().and_then(Assessment::value)
    }

    /// The engine's current view of `peer`; unobserved peers get the prior.
    pub fn metric(&self, peer: Address, cfg: &AnalysisConfig) -> f64 {
        match self.engine {
            TrustEngine::Qad => self
                .served_view
                .as_ref()
                .and_then(|row| row.get(&peer).copied().and_then(Assessment::value))
                .or_else(|| self.own_assessment(peer))
                .unwrap_or(0) as f64,
            TrustEngine::Beta => {
                let counts = self.counts_by_peer.get(&peer).copied().unwrap_or_default();
                TrustRecord::from_counts(&counts, &cfg.params).trustworthiness
            }
            TrustEngine::Bayes => {
                let ev = self.evidence_by_peer.get(&peer).copied().unwrap_or_default();
                let (d1, d2) = ev.last.unwrap_or((true, true));
                ev.counts
                    .posterior_given(d1, d2, Smoothing::AddOne)
                    .expect("smoothed posteriors always exist")
            }
        }
    }

    /// Metrics toward a peer this mote has observed at least once.
    pub fn pair_metrics(&self, peer: Address, cfg: &AnalysisConfig) -> Option<PairMetrics> {
        if !self.observed.contains(&peer) {
            return None;
        }
        let record = match self.engine {
            TrustEngine::Qad => None,
            TrustEngine::Beta => {
                let counts = self.counts_by_peer.get(&peer).copied().unwrap_or_default();
                Some(TrustRecord::from_counts(&counts, &cfg.params))
            }
            TrustEngine::Bayes => {
                let ev = self.evidence_by_peer.get(&peer).copied().unwrap_or_default();
                let counts = BehaviorCounts::new(
                    1.0 + ev.counts.hypothesis_count(true) as f64,
                    1.0 + ev.counts.hypothesis_count(false) as f64,
                )
                .expect("counts are at least one");
                Some(TrustRecord::from_counts(&counts, &cfg.params))
            }
        };
        Some(PairMetrics {
            engine_metric: self.metric(peer, cfg),
            record,
        })
    }

    /// Best-rated candidate, lowest address on ties. Never selects itself.
    pub fn select_peer(&self, candidates: &[Address], cfg: &AnalysisConfig) -> Result<Address, SimError> {
        let mut sorted: Vec<Address> = candidates.iter().copied().filter(|&c| c != self.addr).collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut best: Option<(Address, f64)> = None;
        for c in sorted {
            let m = self.metric(c, cfg);
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((c, m));
            }
        }
        best.map(|(a, _)| a).ok_or(SimError::NoCandidates(self.addr))
    }
}

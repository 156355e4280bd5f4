use crate::rwp::Address;
use crate::trust_qad::OperatorChoice;

use super::observe::{LinkParams, Normalizers, ScoreWeights};
use super::topology::Topology;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyKind {
    Ring,
    Grid,
    RandomGeometric { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrustEngine {
    Qad,
    Beta,
    Bayes,
}

impl TrustEngine {
    pub fn name(self) -> &'static str {
        match self {
            TrustEngine::Qad => "qad",
            TrustEngine::Beta => "beta",
            TrustEngine::Bayes => "bayes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    /// Motes elect a HACP among themselves every interval.
    PeerToPeer,
    /// Mote 0 is a resource-rich sink and the permanent HACP.
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConfig {
    pub capacity_j: f64,
    pub initial_j: f64,
    pub harvest_j_per_s: f64,
    pub tx_cost_j: f64,
    pub rx_cost_j: f64,
    pub compute_cost_j: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            capacity_j: 100.0,
            initial_j: 100.0,
            harvest_j_per_s: 0.0,
            tx_cost_j: 0.01,
            rx_cost_j: 0.005,
            compute_cost_j: 0.002,
        }
    }
}

/// Partial update of a link's ground truth; `None` fields keep their value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkChange {
    pub link_quality: Option<f64>,
    pub tx_rate_bps: Option<f64>,
    pub response_time_ms: Option<f64>,
    pub uptime: Option<f64>,
}

impl LinkChange {
    pub fn apply(&self, params: &mut LinkParams) {
        if let Some(v) = self.link_quality {
            params.link_quality = v;
        }
        if let Some(v) = self.tx_rate_bps {
            params.tx_rate_bps = v;
        }
        if let Some(v) = self.response_time_ms {
            params.response_time_ms = v;
        }
        if let Some(v) = self.uptime {
            params.uptime = v;
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == LinkChange::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkSelector {
    Pair(Address, Address),
    /// Every link incident to the mote.
    AllOf(Address),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KillTarget {
    Mote(Address),
    /// Whoever was elected HACP in that interval.
    Hacp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioEvent {
    /// Applied before monitoring in interval `at`.
    Link {
        at: u64,
        selector: LinkSelector,
        change: LinkChange,
    },
    /// Applied after the election in interval `at`, before serving.
    Kill { at: u64, target: KillTarget },
}

impl ScenarioEvent {
    pub fn at(&self) -> u64 {
        match *self {
            ScenarioEvent::Link { at, .. } | ScenarioEvent::Kill { at, .. } => at,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub motes: usize,
    pub topology: TopologyKind,
    pub seed: u64,
    pub intervals: u64,
    pub theta_base_s: f64,
    pub theta_min_s: f64,
    pub theta_max_s: f64,
    pub failover: bool,
    pub architecture: Architecture,
    pub engine: TrustEngine,
    pub qad_operator: OperatorChoice,
    pub misbehavior_threshold: f64,
    pub weights: ScoreWeights,
    pub energy: EnergyConfig,
    pub link_defaults: LinkParams,
    pub link_overrides: Vec<(LinkSelector, LinkChange)>,
    /// Relative noise amplitude, scaled per field by its reference value.
    pub noise: f64,
    pub normalizers: Normalizers,
    pub events: Vec<ScenarioEvent>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            motes: 10,
            topology: TopologyKind::Ring,
            seed: 0,
            intervals: 50,
            theta_base_s: 60.0,
            theta_min_s: 6.0,
            theta_max_s: 600.0,
            failover: false,
            architecture: Architecture::PeerToPeer,
            engine: TrustEngine::Qad,
            qad_operator: OperatorChoice::ConsensusSeeker,
            misbehavior_threshold: 0.5,
            weights: ScoreWeights::equal(),
            energy: EnergyConfig::default(),
            link_defaults: LinkParams::default(),
            link_overrides: Vec::new(),
            noise: 0.05,
            normalizers: Normalizers::default(),
            events: Vec::new(),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> SimError {
    SimError::InvalidScenario {
        key: key.to_string(),
        message: message.into(),
    }
}

fn check_link_params(key: &str, p: &LinkParams) -> Result<(), SimError> {
    if !(0.0..=1.0).contains(&p.link_quality) {
        return Err(invalid(key, format!("link_quality {} outside [0, 1]", p.link_quality)));
    }
    if !(0.0..=1.0).contains(&p.uptime) {
        return Err(invalid(key, format!("uptime {} outside [0, 1]", p.uptime)));
    }
    if !(p.tx_rate_bps >= 0.0 && p.tx_rate_bps.is_finite()) {
        return Err(invalid(key, format!("tx_rate_bps {} must be >= 0", p.tx_rate_bps)));
    }
    if !(p.response_time_ms >= 0.0 && p.response_time_ms.is_finite()) {
        return Err(invalid(key, format!("response_time_ms {} must be >= 0", p.response_time_ms)));
    }
    Ok(())
}

impl Scenario {
    /// Checks every invariant and builds the topology. Nothing is simulated.
    pub fn validate(&self) -> Result<Topology, SimError> {
        if self.motes == 0 {
            return Err(invalid("motes", "must be at least 1"));
        }
        if self.motes > u32::MAX as usize {
            return Err(invalid("motes", "too many motes"));
        }
        if self.intervals == 0 {
            return Err(invalid("intervals", "must be at least 1"));
        }
        if let TopologyKind::RandomGeometric { radius } = self.topology {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(invalid("radius", "must be positive"));
            }
        }
        if !(self.theta_min_s > 0.0) {
            return Err(invalid("theta_min_s", "must be positive"));
        }
        if !(self.theta_min_s <= self.theta_base_s) {
            return Err(invalid("theta_base_s", "must be >= theta_min_s"));
        }
        if !(self.theta_base_s <= self.theta_max_s && self.theta_max_s.is_finite()) {
            return Err(invalid("theta_max_s", "must be finite and >= theta_base_s"));
        }
        if !(self.misbehavior_threshold > 0.0 && self.misbehavior_threshold < 1.0) {
            return Err(invalid("misbehavior_threshold", "must lie in (0, 1)"));
        }
        self.weights.check().map_err(|m| invalid("weights", m))?;
        let e = &self.energy;
        if !(e.capacity_j > 0.0 && e.capacity_j.is_finite()) {
            return Err(invalid("capacity_j", "must be positive"));
        }
        if !(0.0..=e.capacity_j).contains(&e.initial_j) {
            return Err(invalid("init_j", "must lie in [0, capacity_j]"));
        }
        for (key, v) in [
            ("harvest_j_per_s", e.harvest_j_per_s),
            ("tx_cost_j", e.tx_cost_j),
            ("rx_cost_j", e.rx_cost_j),
            ("compute_cost_j", e.compute_cost_j),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(key, "must be >= 0"));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(invalid("noise", "must be >= 0"));
        }
        if !(self.normalizers.ref_tx_rate_bps > 0.0) {
            return Err(invalid("ref_tx_rate_bps", "must be positive"));
        }
        if !(self.normalizers.ref_response_time_ms > 0.0) {
            return Err(invalid("ref_response_time_ms", "must be positive"));
        }
        check_link_params("links", &self.link_defaults)?;

        let topology = Topology::build(self)?;
        if !topology.is_connected() {
            return Err(invalid("topology", "initial topology is not connected"));
        }

        let check_selector = |key: &str, sel: &LinkSelector| -> Result<(), SimError> {
            match *sel {
                LinkSelector::Pair(a, b) => {
                    if !topology.has_edge(a, b) {
                        return Err(invalid(key, format!("{a}-{b} is not a link of the topology")));
                    }
                }
                LinkSelector::AllOf(a) => {
                    if a.0 as usize >= self.motes {
                        return Err(invalid(key, format!("mote {a} does not exist")));
                    }
                }
            }
            Ok(())
        };
        for (sel, change) in &self.link_overrides {
            check_selector("link", sel)?;
            let mut probe = self.link_defaults;
            change.apply(&mut probe);
            check_link_params("link", &probe)?;
        }
        for event in &self.events {
            if event.at() >= self.intervals {
                return Err(invalid("at", format!("interval {} is past the end of the run", event.at())));
            }
            match event {
                ScenarioEvent::Link {
                    selector, change, ..
                } => {
                    check_selector("link", selector)?;
                    if change.is_empty() {
                        return Err(invalid("link", "event changes no parameter"));
                    }
                    let mut probe = self.link_defaults;
                    change.apply(&mut probe);
                    check_link_params("link", &probe)?;
                }
                ScenarioEvent::Kill {
                    target: KillTarget::Mote(a),
                    ..
                } => {
                    if a.0 as usize >= self.motes {
                        return Err(invalid("kill", format!("mote {a} does not exist")));
                    }
                }
                ScenarioEvent::Kill { .. } => {}
            }
        }
        Ok(topology)
    }

    pub fn theta_bounds(&self) -> (f64, f64) {
        (self.theta_min_s, self.theta_max_s)
    }
}

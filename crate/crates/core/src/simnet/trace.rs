use crate::rwp::Address;
use crate::trustworthiness::TrustRecord;

use super::scenario::TrustEngine;

#[derive(Debug, Clone, PartialEq)]
pub struct MoteRecord {
    pub addr: Address,
    pub alive: bool,
    pub energy_j: f64,
    /// Announced this interval; absent if the mote died before announcing.
    pub pcp: Option<u8>,
    pub roc: Option<u8>,
    pub is_hacp: bool,
    pub selected_peer: Option<Address>,
    /// Received this interval's society matrix.
    pub served: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub src: Address,
    pub dst: Address,
    pub engine_metric: f64,
    pub record: Option<TrustRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MessageStats {
    pub flood_tx: u64,
    pub flood_rx: u64,
    pub unicast_tx: u64,
    pub uploads_delivered: u64,
    pub queries_answered: u64,
    pub app_sent: u64,
    pub app_delivered: u64,
    pub app_hops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub index: u64,
    pub theta_s: f64,
    pub theta_next_s: f64,
    /// Announcements delivered to the reference mote (lowest live address).
    pub announcements: Vec<(Address, u8)>,
    pub elected_hacp: Option<Address>,
    pub backup_hacp: Option<Address>,
    /// The mote that actually served; `None` is a service gap.
    pub active_hacp: Option<Address>,
    pub motes: Vec<MoteRecord>,
    pub pairs: Vec<PairRecord>,
    pub messages: MessageStats,
    pub deaths: Vec<Address>,
}

impl IntervalRecord {
    pub fn is_gap(&self) -> bool {
        self.active_hacp.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub engine: TrustEngine,
    pub intervals: Vec<IntervalRecord>,
}

impl SimulationTrace {
    /// Mean trustworthiness over the final interval's relations. Only the
    /// Beta and Bayes engines produce trustworthiness values.
    pub fn final_system_trustworthiness(&self) -> Option<f64> {
        let last = self.intervals.last()?;
        let records: Vec<TrustRecord> = last.pairs.iter().filter_map(|p| p.record).collect();
        crate::trustworthiness::system_trustworthiness(&records).ok()
    }

    /// Number of times the serving mote changed between served intervals.
    pub fn hacp_rotations(&self) -> usize {
        let served: Vec<Address> = self.intervals.iter().filter_map(|r| r.active_hacp).collect();
        served.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn deaths(&self) -> usize {
        self.intervals.iter().map(|r| r.deaths.len()).sum()
    }

    pub fn mean_theta(&self) -> f64 {
        if self.intervals.is_empty() {
            return 0.0;
        }
        self.intervals.iter().map(|r| r.theta_s).sum::<f64>() / self.intervals.len() as f64
    }

    pub fn gap_intervals(&self) -> usize {
        self.intervals.iter().filter(|r| r.is_gap()).count()
    }

    /// Mean engine metric of every relation toward `peer` in interval `index`.
    pub fn mean_metric_toward(&self, index: usize, peer: Address) -> Option<f64> {
        let values: Vec<f64> = self.intervals.get(index)?.pairs.iter().filter(|p| p.dst == peer).map(|p| p.engine_metric).collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    /// How often `peer` was selected over the half-open interval range.
    pub fn selection_count(&self, peer: Address, range: std::ops::Range<usize>) -> usize {
        self.intervals[range]
            .iter()
            .flat_map(|r| r.motes.iter())
            .filter(|m| m.selected_peer == Some(peer))
            .count()
    }
}

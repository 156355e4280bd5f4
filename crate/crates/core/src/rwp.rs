//! Rolling work-load protocol.
//!
//! Every interval each mote monitors its neighbors, forecasts its own
//! computing budget (PCP), floods an announcement, and the society elects the
//! highest-available-computing-power (HACP) mote. The HACP assembles the
//! society-wide assessment matrix from the uploaded neighborhood matrices,
//! picks the next interval length from the reported rates of change, and
//! answers assessment queries until the next election.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use thiserror::Error;

use crate::trust_qad::{column_subvector, step_society, Assessment, AssessmentMatrix, OperatorChoice, QadError};

/// Network address of a mote. Lower addresses win election ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub u32);

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RwpError {
    #[error("illegal phase transition {from:?} -> {to:?}")]
    IllegalTransition { from: RwpPhase, to: RwpPhase },
    #[error("no announcements to elect from")]
    NoAnnouncements,
    #[error("address {0} appears more than once")]
    DuplicateAddress(Address),
    #[error("address {0} is not part of the society")]
    UnknownAddress(Address),
    #[error("scale value {0} is outside 1..=10")]
    ScaleOutOfRange(u8),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("society size {0} is outside 1..=256")]
    SocietySize(u32),
    #[error(transparent)]
    Qad(#[from] QadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RwpPhase {
    Monitoring,
    Announcing,
    Electing,
    /// HACP duty or querying the HACP.
    Serving,
}

impl RwpPhase {
    pub const ALL: [RwpPhase; 4] = [
        RwpPhase::Monitoring,
        RwpPhase::Announcing,
        RwpPhase::Electing,
        RwpPhase::Serving,
    ];

    pub fn next(self) -> RwpPhase {
        match self {
            RwpPhase::Monitoring => RwpPhase::Announcing,
            RwpPhase::Announcing => RwpPhase::Electing,
            RwpPhase::Electing => RwpPhase::Serving,
            RwpPhase::Serving => RwpPhase::Monitoring,
        }
    }

    pub fn can_transition(self, to: RwpPhase) -> bool {
        self.next() == to
    }
}

/// A mote's neighborhood assessment matrix, labelled by address.
///
/// `members` is sorted and always contains the owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorMatrix {
    owner: Address,
    members: Vec<Address>,
    matrix: AssessmentMatrix,
}

impl MinorMatrix {
    /// All entries undefined.
    pub fn new(owner: Address, neighbors: &[Address]) -> Result<Self, RwpError> {
        let mut members: Vec<Address> = neighbors.to_vec();
        members.push(owner);
        members.sort_unstable();
        members.dedup();
        let matrix = AssessmentMatrix::undefined(members.len())?;
        Ok(Self {
            owner,
            members,
            matrix,
        })
    }

    pub fn owner(&self) -> Address {
        self.owner
    }

    pub fn members(&self) -> &[Address] {
        &self.members
    }

    pub fn matrix(&self) -> &AssessmentMatrix {
        &self.matrix
    }

    fn index(&self, addr: Address) -> Result<usize, RwpError> {
        self.members
            .binary_search(&addr)
            .map_err(|_| RwpError::UnknownAddress(addr))
    }

    pub fn get(&self, from: Address, to: Address) -> Result<Assessment, RwpError> {
        Ok(self.matrix.get(self.index(from)?, self.index(to)?)?)
    }

    pub fn set(&mut self, from: Address, to: Address, value: Assessment) -> Result<(), RwpError> {
        let (i, j) = (self.index(from)?, self.index(to)?);
        Ok(self.matrix.set(i, j, value)?)
    }

    /// The owner's own assessments as `(peer, value)` pairs.
    pub fn owner_row(&self) -> impl Iterator<Item = (Address, Assessment)> + '_ {
        let i = self.index(self.owner).expect("owner is always a member");
        self.members
            .iter()
            .copied()
            .zip(self.matrix.row(i).expect("in range").iter().copied())
    }
}

/// Per-mote protocol state. Owned and mutated by exactly one mote.
#[derive(Debug, Clone, PartialEq)]
pub struct RwpState {
    addr: Address,
    phase: RwpPhase,
    theta: f64,
    pcp: u8,
    roc: u8,
    a_minor: MinorMatrix,
    hacp: Option<Address>,
    backup_hacp: Option<Address>,
}

impl RwpState {
    pub fn new(addr: Address, theta: f64, a_minor: MinorMatrix) -> Result<Self, RwpError> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(RwpError::InvalidInput(format!("interval length {theta}")));
        }
        if a_minor.owner() != addr {
            return Err(RwpError::InvalidInput("neighborhood matrix owned by another mote".into()));
        }
        Ok(Self {
            addr,
            phase: RwpPhase::Monitoring,
            theta,
            pcp: 1,
            roc: 1,
            a_minor,
            hacp: None,
            backup_hacp: None,
        })
    }

    pub fn addr(&self) -> Address {
        self.addr
    }

    pub fn phase(&self) -> RwpPhase {
        self.phase
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn pcp(&self) -> u8 {
        self.pcp
    }

    pub fn roc(&self) -> u8 {
        self.roc
    }

    pub fn a_minor(&self) -> &MinorMatrix {
        &self.a_minor
    }

    pub fn a_minor_mut(&mut self) -> &mut MinorMatrix {
        &mut self.a_minor
    }

    pub fn hacp(&self) -> Option<Address> {
        self.hacp
    }

    pub fn backup_hacp(&self) -> Option<Address> {
        self.backup_hacp
    }

    fn transition(&mut self, to: RwpPhase) -> Result<(), RwpError> {
        if !self.phase.can_transition(to) {
            return Err(RwpError::IllegalTransition {
                from: self.phase,
                to,
            });
        }
        self.phase = to;
        Ok(())
    }

    /// Monitoring is over: publish this interval's PCP and RoC.
    pub fn announce(&mut self, pcp: u8, roc: u8) -> Result<(), RwpError> {
        for v in [pcp, roc] {
            if !(1..=10).contains(&v) {
                return Err(RwpError::ScaleOutOfRange(v));
            }
        }
        self.transition(RwpPhase::Announcing)?;
        self.pcp = pcp;
        self.roc = roc;
        Ok(())
    }

    pub fn start_election(&mut self) -> Result<(), RwpError> {
        self.transition(RwpPhase::Electing)
    }

    pub fn serve(&mut self, hacp: Address, backup: Option<Address>) -> Result<(), RwpError> {
        self.transition(RwpPhase::Serving)?;
        self.hacp = Some(hacp);
        self.backup_hacp = backup;
        Ok(())
    }

    /// Interval expired; adopt the next interval length and monitor again.
    pub fn finish_interval(&mut self, theta_next: f64) -> Result<(), RwpError> {
        if !(theta_next > 0.0 && theta_next.is_finite()) {
            return Err(RwpError::InvalidInput(format!("interval length {theta_next}")));
        }
        self.transition(RwpPhase::Monitoring)?;
        self.theta = theta_next;
        self.hacp = None;
        self.backup_hacp = None;
        Ok(())
    }
}

/// Identifies one flood: one announcement per origin per interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsgId {
    pub origin: Address,
    pub interval: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FloodMessage {
    pub origin: Address,
    pub pcp: u8,
    pub msg_id: MsgId,
    pub hop_count: u32,
}

/// Forecast of computing capability on a 1..=10 scale from the energy the
/// mote expects to hold by the end of the interval.
pub fn compute_pcp(residual: f64, harvest_rate: f64, theta: f64, capacity: f64) -> Result<u8, RwpError> {
    if !(capacity > 0.0) {
        return Err(RwpError::InvalidInput(format!("capacity {capacity}")));
    }
    if residual < 0.0 || harvest_rate < 0.0 || theta < 0.0 {
        return Err(RwpError::InvalidInput("negative energy input".into()));
    }
    let projected = (residual + harvest_rate * theta).min(capacity);
    // slack keeps exact tenths (0.3 * 10 = 3.0000000000000004) on their step
    let scaled = (10.0 * projected / capacity - 1e-9).ceil();
    Ok(scaled.clamp(1.0, 10.0) as u8)
}

fn election_order(a: &(Address, u8), b: &(Address, u8)) -> std::cmp::Ordering {
    b.1.cmp(&a.1).then(a.0.cmp(&b.0))
}

fn sorted_announcements(announcements: &[(Address, u8)]) -> Result<Vec<(Address, u8)>, RwpError> {
    if announcements.is_empty() {
        return Err(RwpError::NoAnnouncements);
    }
    let mut seen = HashSet::new();
    for &(addr, pcp) in announcements {
        if !seen.insert(addr) {
            return Err(RwpError::DuplicateAddress(addr));
        }
        if !(1..=10).contains(&pcp) {
            return Err(RwpError::ScaleOutOfRange(pcp));
        }
    }
    let mut sorted = announcements.to_vec();
    sorted.sort_by(election_order);
    Ok(sorted)
}

/// Highest PCP wins; ties go to the lowest address.
pub fn elect_hacp(announcements: &[(Address, u8)]) -> Result<Address, RwpError> {
    Ok(sorted_announcements(announcements)?[0].0)
}

/// The HACP and the runner-up under the same ordering.
pub fn elect_with_backup(announcements: &[(Address, u8)]) -> Result<(Address, Option<Address>), RwpError> {
    let sorted = sorted_announcements(announcements)?;
    Ok((sorted[0].0, sorted.get(1).map(|a| a.0)))
}

/// Next interval length: shrinks linearly as the mean RoC grows, clamped
/// to `[theta_min, theta_max]`.
pub fn next_interval(roc_values: &[u8], theta_base: f64, bounds: (f64, f64)) -> Result<f64, RwpError> {
    let (theta_min, theta_max) = bounds;
    if roc_values.is_empty() {
        return Err(RwpError::InvalidInput("no RoC values".into()));
    }
    if !(0.0 < theta_min && theta_min <= theta_base && theta_base <= theta_max) {
        return Err(RwpError::InvalidInput(format!(
            "interval bounds {theta_min} <= {theta_base} <= {theta_max} violated"
        )));
    }
    if let Some(&bad) = roc_values.iter().find(|v| !(1..=10).contains(*v)) {
        return Err(RwpError::ScaleOutOfRange(bad));
    }
    let mean = roc_values.iter().map(|&v| v as f64).sum::<f64>() / roc_values.len() as f64;
    Ok((theta_base * (11.0 - mean) / 10.0).clamp(theta_min, theta_max))
}

/// One mote's contribution to the society matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorUpload {
    pub owner: Address,
    pub minor: MinorMatrix,
    pub operator: OperatorChoice,
}

/// The society-wide assessment matrix held by the HACP.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorMatrix {
    pub society: Vec<Address>,
    pub a_major: AssessmentMatrix,
    pub interval_index: u64,
    pub theta_next: f64,
}

impl MajorMatrix {
    fn index(&self, addr: Address) -> Result<usize, RwpError> {
        self.society
            .iter()
            .position(|&a| a == addr)
            .ok_or(RwpError::UnknownAddress(addr))
    }

    pub fn get(&self, from: Address, to: Address) -> Result<Assessment, RwpError> {
        Ok(self.a_major.get(self.index(from)?, self.index(to)?)?)
    }
}

/// Stacks the owners' rows into a society matrix and runs one round of
/// trust dynamics with each owner's operator. Rows of motes that sent
/// nothing stay undefined.
pub fn aggregate_major<R: Rng + ?Sized>(
    minors: &[MinorUpload],
    society: &[Address],
    interval_index: u64,
    theta_next: f64,
    rng: &mut R,
) -> Result<MajorMatrix, RwpError> {
    if !(theta_next > 0.0) {
        return Err(RwpError::InvalidInput(format!("interval length {theta_next}")));
    }
    let mut seen = HashSet::new();
    for &addr in society {
        if !seen.insert(addr) {
            return Err(RwpError::DuplicateAddress(addr));
        }
    }
    let n = society.len();
    let position = |addr: Address| {
        society
            .iter()
            .position(|&a| a == addr)
            .ok_or(RwpError::UnknownAddress(addr))
    };

    let mut stacked = AssessmentMatrix::undefined(n)?;
    // rows with no upload are all undefined, so their operator never fires
    let mut assignment = vec![OperatorChoice::ConsensusSeeker; n];
    let mut owners = HashSet::new();
    for upload in minors {
        if !owners.insert(upload.owner) {
            return Err(RwpError::DuplicateAddress(upload.owner));
        }
        let i = position(upload.owner)?;
        for &member in upload.minor.members() {
            position(member)?;
        }
        assignment[i] = upload.operator;
        for (peer, value) in upload.minor.owner_row() {
            stacked.set(i, position(peer)?, value)?;
        }
    }
    Ok(MajorMatrix {
        society: society.to_vec(),
        a_major: step_society(&stacked, &assignment, rng)?,
        interval_index,
        theta_next,
    })
}

/// What the HACP returns for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryReply {
    pub subject: Address,
    pub values: Vec<i8>,
    pub mean: Option<f64>,
}

impl QueryReply {
    pub fn n1(&self) -> usize {
        self.values.len()
    }
}

pub fn handle_query(major: &MajorMatrix, subject: Address) -> Result<QueryReply, RwpError> {
    let j = major.index(subject)?;
    let values = column_subvector(&major.a_major, j)?;
    let mean = (!values.is_empty())
        .then(|| values.iter().map(|&v| v as f64).sum::<f64>() / values.len() as f64);
    Ok(QueryReply {
        subject,
        values,
        mean,
    })
}

/// Picks the HACP to contact. `None` means trust management is unavailable
/// for the rest of this interval.
pub fn failover(primary: Address, backup: Option<Address>, is_live: impl Fn(Address) -> bool) -> Option<Address> {
    if is_live(primary) {
        Some(primary)
    } else {
        backup.filter(|&b| is_live(b))
    }
}

/// Number of trust relations among all nonempty coalitions of `n` agents,
/// `(2^n - 1)^2`.
pub fn trust_relation_count(n: u32) -> Result<BigUint, RwpError> {
    if !(1..=256).contains(&n) {
        return Err(RwpError::SocietySize(n));
    }
    let coalitions = (BigUint::from(1u8) << n) - 1u8;
    Ok(&coalitions * &coalitions)
}

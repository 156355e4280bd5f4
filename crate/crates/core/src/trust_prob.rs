//! Probabilistic trust: Dempster-Shafer belief mass with subjective-logic
//! opinions, and naive Bayesian trust over observed evidence.

use std::collections::BTreeMap;

use thiserror::Error;

/// Largest frame we are willing to enumerate subsets of.
pub const MAX_FRAME: usize = 16;

/// Tolerance for mass normalization and opinion additivity.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("frame must hold between 1 and {MAX_FRAME} elements, got {0}")]
    FrameSize(usize),
    #[error("duplicate frame element {0:?}")]
    DuplicateElement(String),
    #[error("unknown frame element {0:?}")]
    UnknownElement(String),
    #[error("subset is not contained in the frame")]
    NotInFrame,
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("mass {0} is outside [0, 1]")]
    MassOutOfRange(f64),
    #[error("the empty set must carry zero mass")]
    MassOnEmptySet,
    #[error("masses sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("opinion ({b}, {d}, {u}) is not a valid triplet")]
    InvalidOpinion { b: f64, d: f64, u: f64 },
    #[error("consensus of two dogmatic opinions is undefined")]
    DogmaticConsensus,
    #[error("no observations of the conditioning evidence")]
    NoEvidence,
}

/// The frame of discernment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    elements: Vec<String>,
}

/// A subset of a frame as a bitmask over element positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Subset) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl Frame {
    pub fn new<S: Into<String>>(elements: impl IntoIterator<Item = S>) -> Result<Self, ProbError> {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() || elements.len() > MAX_FRAME {
            return Err(ProbError::FrameSize(elements.len()));
        }
        for (k, e) in elements.iter().enumerate() {
            if elements[..k].contains(e) {
                return Err(ProbError::DuplicateElement(e.clone()));
            }
        }
        Ok(Self { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Θ itself.
    pub fn full(&self) -> Subset {
        Subset(((1u64 << self.elements.len()) - 1) as u32)
    }

    pub fn subset(&self, names: &[&str]) -> Result<Subset, ProbError> {
        let mut bits = 0u32;
        for name in names {
            let pos = self
                .elements
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| ProbError::UnknownElement(name.to_string()))?;
            bits |= 1 << pos;
        }
        Ok(Subset(bits))
    }

    pub fn contains(&self, subset: Subset) -> bool {
        subset.is_subset_of(self.full())
    }

    /// Every subset of Θ, including the empty set.
    pub fn power_set(&self) -> impl Iterator<Item = Subset> {
        (0..=self.full().0).map(Subset)
    }
}

/// A basic belief assignment over a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMass {
    frame: Frame,
    masses: BTreeMap<Subset, f64>,
}

impl BeliefMass {
    /// Validates and stores a mass assignment. Masses are never renormalized.
    pub fn new(frame: Frame, assignment: &[(Subset, f64)]) -> Result<Self, ProbError> {
        let mut masses = BTreeMap::new();
        for &(subset, mass) in assignment {
            if !frame.contains(subset) {
                return Err(ProbError::NotInFrame);
            }
            if !(0.0..=1.0).contains(&mass) {
                return Err(ProbError::MassOutOfRange(mass));
            }
            if subset.is_empty() && mass != 0.0 {
                return Err(ProbError::MassOnEmptySet);
            }
            if mass > 0.0 {
                *masses.entry(subset).or_insert(0.0) += mass;
            }
        }
        let total: f64 = masses.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(ProbError::NotNormalized(total));
        }
        Ok(Self { frame, masses })
    }

    /// All mass on Θ: total ignorance.
    pub fn vacuous(frame: Frame) -> Self {
        let full = frame.full();
        Self {
            frame,
            masses: BTreeMap::from([(full, 1.0)]),
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mass(&self, subset: Subset) -> f64 {
        self.masses.get(&subset).copied().unwrap_or(0.0)
    }

    fn check(&self, x: Subset) -> Result<(), ProbError> {
        if self.frame.contains(x) {
            Ok(())
        } else {
            Err(ProbError::NotInFrame)
        }
    }

    /// Total mass committed to subsets of `x`.
    pub fn belief(&self, x: Subset) -> Result<f64, ProbError> {
        self.check(x)?;
        Ok(self
            .masses
            .iter()
            .filter(|(y, _)| y.is_subset_of(x))
            .map(|(_, m)| m)
            .sum())
    }

    /// Total mass committed to subsets disjoint from `x`.
    pub fn disbelief(&self, x: Subset) -> Result<f64, ProbError> {
        self.check(x)?;
        Ok(self
            .masses
            .iter()
            .filter(|(y, _)| y.is_disjoint(x))
            .map(|(_, m)| m)
            .sum())
    }

    pub fn opinion_of(&self, x: Subset) -> Result<Opinion, ProbError> {
        if x.is_empty() {
            return Err(ProbError::EmptySubset);
        }
        let b = self.belief(x)?.clamp(0.0, 1.0);
        let d = self.disbelief(x)?.clamp(0.0, 1.0 - b);
        Opinion::new(b, d, 1.0 - b - d)
    }
}

/// Subjective-logic opinion `(belief, disbelief, uncertainty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opinion {
    b: f64,
    d: f64,
    u: f64,
}

impl Opinion {
    pub const VACUOUS: Opinion = Opinion {
        b: 0.0,
        d: 0.0,
        u: 1.0,
    };

    pub fn new(b: f64, d: f64, u: f64) -> Result<Self, ProbError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(b) && unit(d) && unit(u)) || (b + d + u - 1.0).abs() > MASS_TOLERANCE {
            return Err(ProbError::InvalidOpinion { b, d, u });
        }
        Ok(Self { b, d, u })
    }

    pub fn belief(&self) -> f64 {
        self.b
    }

    pub fn disbelief(&self) -> f64 {
        self.d
    }

    pub fn uncertainty(&self) -> f64 {
        self.u
    }
}

/// Consensus of two independent opinions about the same proposition.
pub fn consensus(w1: &Opinion, w2: &Opinion) -> Result<Opinion, ProbError> {
    let kappa = w1.u + w2.u - w1.u * w2.u;
    if kappa <= 0.0 {
        return Err(ProbError::DogmaticConsensus);
    }
    let b = (w1.b * w2.u + w2.b * w1.u) / kappa;
    let d = (w1.d * w2.u + w2.d * w1.u) / kappa;
    let u = (w1.u * w2.u) / kappa;
    Opinion::new(b.clamp(0.0, 1.0), d.clamp(0.0, 1.0), u.clamp(0.0, 1.0))
}

/// Whether Laplace add-one smoothing is applied over the hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    #[default]
    AddOne,
    Off,
}

impl Smoothing {
    fn ratio(self, hits: u64, total: u64) -> Result<f64, ProbError> {
        match self {
            Smoothing::AddOne => Ok((hits as f64 + 1.0) / (total as f64 + 2.0)),
            Smoothing::Off if total == 0 => Err(ProbError::NoEvidence),
            Smoothing::Off => Ok(hits as f64 / total as f64),
        }
    }
}

/// Joint counts over a hypothesis `H` and one evidence variable `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvidenceCounts {
    pub h_and_d: u64,
    pub not_h_and_d: u64,
    pub h_and_not_d: u64,
    pub not_h_and_not_d: u64,
}

impl EvidenceCounts {
    pub fn record(&mut self, h: bool, d: bool) {
        match (h, d) {
            (true, true) => self.h_and_d += 1,
            (false, true) => self.not_h_and_d += 1,
            (true, false) => self.h_and_not_d += 1,
            (false, false) => self.not_h_and_not_d += 1,
        }
    }
}

/// `p(H | D)` from empirical frequencies.
pub fn bayes_posterior(counts: &EvidenceCounts, smoothing: Smoothing) -> Result<f64, ProbError> {
    smoothing.ratio(counts.h_and_d, counts.h_and_d + counts.not_h_and_d)
}

/// Joint counts over `H` and two evidence variables, indexed `[h][d1][d2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JointCounts {
    pub cells: [[[u64; 2]; 2]; 2],
}

impl JointCounts {
    pub fn record(&mut self, h: bool, d1: bool, d2: bool) {
        self.cells[h as usize][d1 as usize][d2 as usize] += 1;
    }

    pub fn get(&self, h: bool, d1: bool, d2: bool) -> u64 {
        self.cells[h as usize][d1 as usize][d2 as usize]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().flatten().sum()
    }

    /// Number of observations with hypothesis value `h`.
    pub fn hypothesis_count(&self, h: bool) -> u64 {
        self.cells[h as usize].iter().flatten().sum()
    }

    /// Marginalizes out `D1`, leaving the `(H, D2)` table.
    pub fn marginal_d2(&self) -> EvidenceCounts {
        let c = |h: bool, d2: bool| self.get(h, false, d2) + self.get(h, true, d2);
        EvidenceCounts {
            h_and_d: c(true, true),
            not_h_and_d: c(false, true),
            h_and_not_d: c(true, false),
            not_h_and_not_d: c(false, false),
        }
    }

    /// `p(H | D1 = d1, D2 = d2)`.
    pub fn posterior_given(&self, d1: bool, d2: bool, smoothing: Smoothing) -> Result<f64, ProbError> {
        let hits = self.get(true, d1, d2);
        smoothing.ratio(hits, hits + self.get(false, d1, d2))
    }
}

/// `p(H | D1, D2)` where both evidence events were observed.
pub fn bayes_posterior2(counts: &JointCounts, smoothing: Smoothing) -> Result<f64, ProbError> {
    counts.posterior_given(true, true, smoothing)
}

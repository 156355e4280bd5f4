//! Beta-distribution trust, confidence and the combined trustworthiness
//! metric, with the banding used for trust-based decisions.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrustError {
    #[error("behavior counts must both be >= 1, got ({normal}, {misbehavior})")]
    InvalidCounts { normal: f64, misbehavior: f64 },
    #[error("weighting parameters must be positive, got x = {x}, y = {y}")]
    InvalidParams { x: f64, y: f64 },
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("cannot aggregate an empty set of trust records")]
    NoRecords,
}

/// Beta parameters: degree of normal behaviors (`A`) and of misbehaviors
/// (`B`). Both are floored at the uniform prior `Beta(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorCounts {
    normal: f64,
    misbehavior: f64,
}

impl Default for BehaviorCounts {
    fn default() -> Self {
        Self {
            normal: 1.0,
            misbehavior: 1.0,
        }
    }
}

impl BehaviorCounts {
    pub fn new(normal: f64, misbehavior: f64) -> Result<Self, TrustError> {
        if normal >= 1.0 && misbehavior >= 1.0 && normal.is_finite() && misbehavior.is_finite() {
            Ok(Self {
                normal,
                misbehavior,
            })
        } else {
            Err(TrustError::InvalidCounts {
                normal,
                misbehavior,
            })
        }
    }

    pub fn normal(&self) -> f64 {
        self.normal
    }

    pub fn misbehavior(&self) -> f64 {
        self.misbehavior
    }

    fn variance(&self) -> f64 {
        let (a, b) = (self.normal, self.misbehavior);
        let s = a + b;
        a * b / (s * s * (s + 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Normal,
    Misbehavior,
}

/// Relative weights of trust (`x`) and confidence (`y`) in the combined
/// metric. A smaller weight makes the corresponding shortfall cost more.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustworthinessParams {
    x: f64,
    y: f64,
}

impl Default for TrustworthinessParams {
    fn default() -> Self {
        Self {
            x: std::f64::consts::SQRT_2,
            y: 3.0,
        }
    }
}

impl TrustworthinessParams {
    pub fn new(x: f64, y: f64) -> Result<Self, TrustError> {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(TrustError::InvalidParams { x, y })
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Expected value of `Beta(A, B)`.
pub fn trust_value(counts: &BehaviorCounts) -> f64 {
    counts.normal / (counts.normal + counts.misbehavior)
}

/// Standard deviation of `Beta(A, B)`.
pub fn trust_stddev(counts: &BehaviorCounts) -> f64 {
    counts.variance().sqrt()
}

/// `1 - sqrt(12 Var)`: zero for the uniform prior, approaching one as
/// evidence accumulates.
pub fn confidence(counts: &BehaviorCounts) -> f64 {
    (1.0 - (12.0 * counts.variance()).sqrt()).max(0.0)
}

/// Normalized elliptical distance from the ideal point `(t, c) = (1, 1)`.
pub fn trustworthiness(t: f64, c: f64, params: &TrustworthinessParams) -> Result<f64, TrustError> {
    for v in [t, c] {
        if !(0.0..=1.0).contains(&v) {
            return Err(TrustError::OutOfRange(v));
        }
    }
    let (x2, y2) = (params.x * params.x, params.y * params.y);
    let distance = ((t - 1.0).powi(2) / x2 + (c - 1.0).powi(2) / y2).sqrt();
    let max_distance = (1.0 / x2 + 1.0 / y2).sqrt();
    Ok((1.0 - distance / max_distance).clamp(0.0, 1.0))
}

pub fn update_counts(counts: &BehaviorCounts, outcome: Outcome) -> BehaviorCounts {
    let mut next = *counts;
    match outcome {
        Outcome::Normal => next.normal += 1.0,
        Outcome::Misbehavior => next.misbehavior += 1.0,
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConfidenceBand {
    None,
    Low,
    Good,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrustworthinessBand {
    NotTrustworthy,
    Low,
    Good,
    High,
}

// lower-inclusive cut points; 1.0 falls in the top band
fn band_index(v: f64) -> Result<usize, TrustError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(TrustError::OutOfRange(v));
    }
    Ok(if v < 0.2 {
        0
    } else if v < 0.5 {
        1
    } else if v < 0.8 {
        2
    } else {
        3
    })
}

pub fn classify_confidence(c: f64) -> Result<ConfidenceBand, TrustError> {
    const BANDS: [ConfidenceBand; 4] = [
        ConfidenceBand::None,
        ConfidenceBand::Low,
        ConfidenceBand::Good,
        ConfidenceBand::High,
    ];
    band_index(c).map(|k| BANDS[k])
}

pub fn classify_trustworthiness(t: f64) -> Result<TrustworthinessBand, TrustError> {
    const BANDS: [TrustworthinessBand; 4] = [
        TrustworthinessBand::NotTrustworthy,
        TrustworthinessBand::Low,
        TrustworthinessBand::Good,
        TrustworthinessBand::High,
    ];
    band_index(t).map(|k| BANDS[k])
}

/// Derived metrics for one directed trust relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRecord {
    pub t: f64,
    pub sigma: f64,
    pub c: f64,
    pub trustworthiness: f64,
}

impl TrustRecord {
    pub fn from_counts(counts: &BehaviorCounts, params: &TrustworthinessParams) -> Self {
        let t = trust_value(counts);
        let c = confidence(counts);
        Self {
            t,
            sigma: trust_stddev(counts),
            c,
            // t lies in (0, 1) and c in [0, 1) for valid counts
            trustworthiness: trustworthiness(t, c, params).unwrap_or(0.0),
        }
    }

    pub fn confidence_band(&self) -> ConfidenceBand {
        classify_confidence(self.c).unwrap_or(ConfidenceBand::None)
    }

    pub fn trustworthiness_band(&self) -> TrustworthinessBand {
        classify_trustworthiness(self.trustworthiness).unwrap_or(TrustworthinessBand::NotTrustworthy)
    }
}

/// Unweighted mean trustworthiness over a set of relations.
pub fn system_trustworthiness(records: &[TrustRecord]) -> Result<f64, TrustError> {
    if records.is_empty() {
        return Err(TrustError::NoRecords);
    }
    let sum: f64 = records.iter().map(|r| r.trustworthiness).sum();
    Ok((sum / records.len() as f64).clamp(0.0, 1.0))
}

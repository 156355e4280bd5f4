//! Link ground truth, noisy observations, and the composite safety score.

use std::collections::BTreeMap;

use rand::Rng;

use super::scenario::LinkChange;

/// One poll result. Rates in bits/s, times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyObservation {
    pub link_quality: f64,
    pub tx_rate_bps: f64,
    pub response_time_ms: f64,
    pub uptime: f64,
}

/// Ground-truth values of a link, same units as [`SafetyObservation`].
pub type LinkParams = SafetyObservation;

impl Default for SafetyObservation {
    fn default() -> Self {
        Self {
            link_quality: 0.9,
            tx_rate_bps: 300_000.0,
            response_time_ms: 10.0,
            uptime: 0.99,
        }
    }
}

/// Reference values that map raw rates and latencies into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub ref_tx_rate_bps: f64,
    pub ref_response_time_ms: f64,
}

impl Default for Normalizers {
    fn default() -> Self {
        Self {
            ref_tx_rate_bps: 250_000.0,
            ref_response_time_ms: 100.0,
        }
    }
}

/// Weights of link quality, transmission rate, response time and uptime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights(pub [f64; 4]);

impl ScoreWeights {
    pub fn new(weights: [f64; 4]) -> Self {
        Self(weights)
    }

    pub fn equal() -> Self {
        Self([0.25; 4])
    }

    pub fn check(&self) -> Result<(), String> {
        if self.0.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err("weights must be non-negative".into());
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("weights sum to {sum}, expected 1"));
        }
        Ok(())
    }
}

/// Half-widths of the uniform noise added to each field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseAmplitude {
    pub link_quality: f64,
    pub tx_rate_bps: f64,
    pub response_time_ms: f64,
    pub uptime: f64,
}

impl NoiseAmplitude {
    /// `relative` of each field's natural scale.
    pub fn relative(relative: f64, norm: &Normalizers) -> Self {
        Self {
            link_quality: relative,
            tx_rate_bps: relative * norm.ref_tx_rate_bps,
            response_time_ms: relative * norm.ref_response_time_ms,
            uptime: relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkTruth {
    pub params: LinkParams,
    pub noise: NoiseAmplitude,
    /// Interval index -> change applied at the start of that interval.
    pub schedule: BTreeMap<u64, Vec<LinkChange>>,
}

impl LinkTruth {
    pub fn new(params: LinkParams, noise: NoiseAmplitude) -> Self {
        Self {
            params,
            noise,
            schedule: BTreeMap::new(),
        }
    }

    pub fn schedule(&mut self, at: u64, change: LinkChange) {
        self.schedule.entry(at).or_default().push(change);
    }

    /// Applies whatever is scheduled for `interval`.
    pub fn advance_to(&mut self, interval: u64) {
        if let Some(changes) = self.schedule.get(&interval) {
            for change in changes {
                change.apply(&mut self.params);
            }
        }
    }
}

/// Truth plus zero-mean uniform noise, clamped to each field's range.
/// Always draws exactly four values from `rng`.
pub fn observe_link<R: Rng + ?Sized>(truth: &LinkTruth, rng: &mut R) -> SafetyObservation {
    let mut jitter = |amp: f64| (rng.gen::<f64>() * 2.0 - 1.0) * amp;
    let p = &truth.params;
    let n = &truth.noise;
    SafetyObservation {
        link_quality: (p.link_quality + jitter(n.link_quality)).clamp(0.0, 1.0),
        tx_rate_bps: (p.tx_rate_bps + jitter(n.tx_rate_bps)).max(0.0),
        response_time_ms: (p.response_time_ms + jitter(n.response_time_ms)).max(0.0),
        uptime: (p.uptime + jitter(n.uptime)).clamp(0.0, 1.0),
    }
}

pub fn safety_score(obs: &SafetyObservation, weights: &ScoreWeights, norm: &Normalizers) -> f64 {
    let parts = [
        obs.link_quality,
        (obs.tx_rate_bps / norm.ref_tx_rate_bps).min(1.0),
        (1.0 - obs.response_time_ms / norm.ref_response_time_ms).max(0.0),
        obs.uptime,
    ];
    parts
        .iter()
        .zip(weights.0.iter())
        .map(|(p, w)| p * w)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

//! Latency-constrained capacity: the largest Poisson arrival rate whose
//! packets are delivered within a latency budget with a target reliability.
//!
//! Pull and push capacity of a CFF frame are searched separately, with the
//! other class silent. The two sub-frames never share a slot, so each
//! search is exact for its own class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cff::{simulate_cff_with, CffOptions};
use crate::error::{Error, Result};
use crate::frame::{FrameConfig, FrameLayout, TrafficClass};
use crate::traffic::replication_seed;

/// Reliability may rise by at most this much between adjacent probed rates
/// before the search is flagged as non-monotone.
pub const NON_MONOTONE_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySpec {
    /// Seconds.
    pub target_latency: f64,
    pub target_reliability: f64,
    /// Packets per second; the search stops once the bracket is this narrow.
    pub rate_tolerance: f64,
    pub rate_upper_bound: f64,
    pub horizon_frames: u64,
    pub replications: u32,
    /// Leading fraction of the horizon whose arrivals are not measured.
    pub warmup_fraction: f64,
}

impl CapacitySpec {
    pub fn new(target_latency: f64) -> Self {
        CapacitySpec {
            target_latency,
            target_reliability: 0.99,
            rate_tolerance: 10.0,
            rate_upper_bound: 10_000.0,
            horizon_frames: 2000,
            replications: 20,
            warmup_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(self.target_reliability > 0.0 && self.target_reliability <= 1.0) {
            return Err(Error::BadCapacitySpec(
                "target_reliability must be in (0,1]",
            ));
        }
        if !positive(self.rate_tolerance) {
            return Err(Error::BadCapacitySpec("rate_tolerance must be positive"));
        }
        if !positive(self.rate_upper_bound) {
            return Err(Error::BadCapacitySpec("rate_upper_bound must be positive"));
        }
        if !positive(self.target_latency) {
            return Err(Error::BadCapacitySpec("target_latency must be positive"));
        }
        if self.horizon_frames == 0 {
            return Err(Error::EmptyHorizon);
        }
        if self.replications == 0 {
            return Err(Error::BadCapacitySpec("replications must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::BadCapacitySpec("warmup_fraction must be in [0,1)"));
        }
        Ok(())
    }

    pub fn warmup_frames(&self) -> u64 {
        (self.horizon_frames as f64 * self.warmup_fraction).floor() as u64
    }

    /// Upper bound on the number of evaluations `max_rate` performs.
    pub fn max_evaluations(&self) -> u32 {
        (self.rate_upper_bound / self.rate_tolerance)
            .log2()
            .ceil()
            .max(0.0) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub rate: f64,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapacityStatus {
    /// The returned rate met the target.
    Met,
    /// No probed rate met the target; the rate is 0.
    Unreachable,
    /// The frame has no resources for this class at all; the rate is 0.
    NoResources,
    /// Reliability went up with load by more than the noise margin.
    NonMonotone { lower: Probe, higher: Probe },
}

impl CapacityStatus {
    /// Text for the CSV `error` column; empty when nothing is wrong.
    pub fn diagnostic(&self) -> String {
        match self {
            CapacityStatus::Met | CapacityStatus::NoResources => String::new(),
            CapacityStatus::Unreachable => "target unreachable at smallest probed rate".into(),
            CapacityStatus::NonMonotone { lower, higher } => format!(
                "non-monotone reliability: {} at {} pkt/s vs {} at {} pkt/s",
                lower.reliability, lower.rate, higher.reliability, higher.rate
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityEstimate {
    /// Packets per second.
    pub rate: f64,
    pub status: CapacityStatus,
    /// Every evaluation, in the order performed.
    pub probes: Vec<Probe>,
}

/// Bisection for the largest rate in `[0, rate_upper_bound]` whose
/// reliability meets the target.
///
/// `evaluate` is assumed nonincreasing in the rate. The bracket shrinks
/// until it is at most `rate_tolerance` wide and the lower end (the last rate
/// seen to meet the target) is returned.
pub fn max_rate<F>(mut evaluate: F, spec: &CapacitySpec) -> Result<CapacityEstimate>
where
    F: FnMut(f64) -> f64,
{
    spec.validate()?;
    let (mut lo, mut hi) = (0.0f64, spec.rate_upper_bound);
    let mut probes = Vec::new();
    let mut met_any = false;
    while hi - lo > spec.rate_tolerance {
        let mid = 0.5 * (lo + hi);
        let reliability = evaluate(mid);
        probes.push(Probe {
            rate: mid,
            reliability,
        });
        if reliability >= spec.target_reliability {
            lo = mid;
            met_any = true;
        } else {
            hi = mid;
        }
    }

    let mut sorted = probes.clone();
    sorted.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    let violation = sorted
        .windows(2)
        .find(|w| w[1].reliability > w[0].reliability + NON_MONOTONE_MARGIN);
    let status = match violation {
        Some(w) => CapacityStatus::NonMonotone {
            lower: w[0],
            higher: w[1],
        },
        None if !met_any => CapacityStatus::Unreachable,
        None => CapacityStatus::Met,
    };
    Ok(CapacityEstimate {
        rate: if met_any { lo } else { 0.0 },
        status,
        probes,
    })
}

/// Highest rate a class could ever be served at, in packets per second.
///
/// Pull: one packet per contention-free block. Push: the best expected
/// number of framed-ALOHA successes over any contender count `n`, which is
/// `n (1 - 1/m)^(n-1)` maximised at `n = m`.
pub fn service_ceiling(layout: &FrameLayout, frame_duration: f64, class: TrafficClass) -> f64 {
    match class {
        TrafficClass::Pull => f64::from(layout.pull_tx_capacity) / frame_duration,
        TrafficClass::Push => {
            let m = f64::from(layout.push_tx_capacity);
            if m == 0.0 {
                0.0
            } else {
                m * (1.0 - 1.0 / m).powf(m - 1.0) / frame_duration
            }
        }
    }
}

/// Mean over replications of the per-run reliability of `class` when it
/// alone offers `rate` packets per second.
///
/// A run without any measured arrival counts as fully reliable.
pub fn cff_reliability(
    config: &FrameConfig,
    class: TrafficClass,
    rate: f64,
    spec: &CapacitySpec,
    master_seed: u64,
) -> Result<f64> {
    let (pull_rate, push_rate) = match class {
        TrafficClass::Pull => (rate, 0.0),
        TrafficClass::Push => (0.0, rate),
    };
    let per_run: Vec<f64> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let options = CffOptions {
                warmup_frames: spec.warmup_frames(),
                ..CffOptions::default()
            };
            let run = simulate_cff_with(
                config,
                pull_rate,
                push_rate,
                spec.horizon_frames,
                replication_seed(master_seed, u64::from(rep)),
                options,
            )?;
            Ok(run
                .record
                .reliability_within(class, spec.target_latency)
                .unwrap_or(1.0))
        })
        .collect::<Result<_>>()?;
    Ok(per_run.iter().sum::<f64>() / per_run.len() as f64)
}

/// Capacity of one class of a CFF frame.
pub fn cff_max_rate(
    config: &FrameConfig,
    class: TrafficClass,
    spec: &CapacitySpec,
    master_seed: u64,
) -> Result<CapacityEstimate> {
    config.validate()?;
    spec.validate()?;
    let ceiling = service_ceiling(&config.layout(), config.frame_duration, class);
    if ceiling <= 0.0 {
        return Ok(CapacityEstimate {
            rate: 0.0,
            status: CapacityStatus::NoResources,
            probes: Vec::new(),
        });
    }
    let bounded = CapacitySpec {
        rate_upper_bound: spec.rate_upper_bound.min(ceiling),
        ..spec.clone()
    };
    let mut failure = None;
    let estimate = max_rate(
        |rate| match cff_reliability(config, class, rate, &bounded, master_seed) {
            Ok(r) => r,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &bounded,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(estimate),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub alpha: f64,
    pub pull: Result<CapacityEstimate>,
    pub push: Result<CapacityEstimate>,
}

impl FrontierPoint {
    pub fn max_pull_rate(&self) -> Option<f64> {
        self.pull.as_ref().ok().map(|e| e.rate)
    }

    pub fn max_push_rate(&self) -> Option<f64> {
        self.push.as_ref().ok().map(|e| e.rate)
    }
}

/// Pull and push capacity at every `alpha`, one independent search each.
pub fn capacity_frontier(
    base: &FrameConfig,
    alphas: &[f64],
    spec: &CapacitySpec,
    master_seed: u64,
) -> Vec<FrontierPoint> {
    alphas
        .iter()
        .map(|&alpha| {
            let config = base.with_alpha(alpha);
            FrontierPoint {
                alpha,
                pull: cff_max_rate(&config, TrafficClass::Pull, spec, master_seed),
                push: cff_max_rate(&config, TrafficClass::Push, spec, master_seed),
            }
        })
        .collect()
}

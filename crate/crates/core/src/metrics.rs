//! Latency, reliability and accuracy accounting.
//!
//! Latencies are kept as integer slot counts so that comparisons against a
//! latency budget are exact; seconds are derived on the way out.

use crate::error::{Error, Result};
use crate::frame::{Packet, TrafficClass};

const BUDGET_EPS: f64 = 1e-9;

/// Counters and latency samples for one traffic class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassStats {
    pub arrived: u64,
    pub delivered: u64,
    /// Given up on by the protocol (only when retransmissions are disabled).
    pub dropped: u64,
    /// Still queued or backlogged when the run ended.
    pub censored: u64,
    /// Latency of every delivered packet, in slots.
    pub latency_slots: Vec<u64>,
}

impl ClassStats {
    /// Packets that count as never delivered (latency +inf).
    pub fn failed(&self) -> u64 {
        self.dropped + self.censored
    }

    pub fn in_flight(&self) -> u64 {
        self.arrived - self.delivered - self.failed()
    }

    fn merge(&mut self, other: &ClassStats) {
        self.arrived += other.arrived;
        self.delivered += other.delivered;
        self.dropped += other.dropped;
        self.censored += other.censored;
        self.latency_slots.extend_from_slice(&other.latency_slots);
    }
}

/// Per-frame query/push counters of the shared-contention protocol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RcsCounters {
    pub frames: u64,
    pub retrieval_successes: u64,
    pub push_attempts: u64,
    pub push_successes: u64,
}

impl RcsCounters {
    /// Fraction of frames in which every matching device got through.
    pub fn retrieval_accuracy(&self) -> Option<f64> {
        (self.frames > 0).then(|| self.retrieval_successes as f64 / self.frames as f64)
    }

    /// `None` when no push device ever attempted.
    pub fn push_success_probability(&self) -> Option<f64> {
        (self.push_attempts > 0).then(|| self.push_successes as f64 / self.push_attempts as f64)
    }

    fn merge(&mut self, other: &RcsCounters) {
        self.frames += other.frames;
        self.retrieval_successes += other.retrieval_successes;
        self.push_attempts += other.push_attempts;
        self.push_successes += other.push_successes;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    slot_duration: f64,
    pub pull: ClassStats,
    pub push: ClassStats,
    pub rcs: RcsCounters,
}

impl MetricsRecord {
    pub fn new(slot_duration: f64) -> Self {
        MetricsRecord {
            slot_duration,
            pull: ClassStats::default(),
            push: ClassStats::default(),
            rcs: RcsCounters::default(),
        }
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn class(&self, class: TrafficClass) -> &ClassStats {
        match class {
            TrafficClass::Pull => &self.pull,
            TrafficClass::Push => &self.push,
        }
    }

    pub fn class_mut(&mut self, class: TrafficClass) -> &mut ClassStats {
        match class {
            TrafficClass::Pull => &mut self.pull,
            TrafficClass::Push => &mut self.push,
        }
    }

    pub fn record_arrival(&mut self, class: TrafficClass) {
        self.class_mut(class).arrived += 1;
    }

    pub fn record_delivery(&mut self, packet: &Packet) {
        let latency = packet
            .latency_slots()
            .expect("delivered packet has a delivery slot");
        let stats = self.class_mut(packet.class);
        stats.delivered += 1;
        stats.latency_slots.push(latency);
    }

    pub fn record_drop(&mut self, class: TrafficClass) {
        self.class_mut(class).dropped += 1;
    }

    pub fn record_censored(&mut self, class: TrafficClass, count: u64) {
        self.class_mut(class).censored += count;
    }

    /// Latency samples in seconds, with `+inf` for every failed packet.
    pub fn latency_samples(&self, class: TrafficClass) -> Vec<f64> {
        let stats = self.class(class);
        stats
            .latency_slots
            .iter()
            .map(|&s| s as f64 * self.slot_duration)
            .chain(std::iter::repeat_n(f64::INFINITY, stats.failed() as usize))
            .collect()
    }

    /// Largest whole number of slots not exceeding `latency` seconds.
    pub fn budget_slots(&self, latency: f64) -> u64 {
        (latency / self.slot_duration + BUDGET_EPS).floor().max(0.0) as u64
    }

    /// Fraction of arrived packets delivered within `latency` seconds.
    ///
    /// Dropped, censored and in-flight packets all count as late.
    pub fn reliability_within(&self, class: TrafficClass, latency: f64) -> Result<f64> {
        let stats = self.class(class);
        if stats.arrived == 0 {
            return Err(Error::EmptySample);
        }
        let budget = self.budget_slots(latency);
        let on_time = stats.latency_slots.iter().filter(|&&s| s <= budget).count();
        Ok(on_time as f64 / stats.arrived as f64)
    }

    /// Adds `other`'s counters and appends its samples.
    pub fn merge(&mut self, other: &MetricsRecord) -> Result<()> {
        if self.slot_duration != other.slot_duration {
            return Err(Error::SlotDurationMismatch(
                self.slot_duration,
                other.slot_duration,
            ));
        }
        self.pull.merge(&other.pull);
        self.push.merge(&other.push);
        self.rcs.merge(&other.rcs);
        Ok(())
    }
}

/// Order statistic at 1-based rank `ceil(p * n)` of the sorted samples.
///
/// No interpolation: the result is always one of the samples.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadProbability(p));
    }
    let n = samples.len();
    let rank = ((p * n as f64 - BUDGET_EPS).ceil() as usize).clamp(1, n);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[rank - 1])
}

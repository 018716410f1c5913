//! JSON experiment configuration.
//!
//! Every key except `protocol` and `alpha` has a default. Unknown keys are
//! rejected so that a typo never silently falls back to a default. After
//! loading, [`ExperimentConfig::resolve`] fills in every default; the
//! resolved form is what gets echoed into the metadata sidecar, and loading
//! that echo reproduces the run exactly.

use std::fmt;
use std::path::{Path, PathBuf};

use pushpull_core::{
    CapacitySpec, FrameConfig, ObservationModel, PushRetry, PushTrigger, QueryMode, RcsOptions,
    RcsPopulation, SemanticQuery,
};
use serde::de::Deserializer;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Cff,
    Rcs,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Cff => "cff",
            Protocol::Rcs => "rcs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Fixed offered load; reports reliability and latency (cff) or
    /// retrieval accuracy and push success (rcs).
    #[default]
    Simulate,
    /// Latency-constrained capacity frontier (cff only).
    Capacity,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Simulate => "simulate",
            Experiment::Capacity => "capacity",
        })
    }
}

/// A sweep axis. Accepts a scalar or a list in JSON, always written back as
/// a list.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Sweep<T>(pub Vec<T>);

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Sweep<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OneOrMany<T> {
            One(T),
            Many(Vec<T>),
        }
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(v) => Sweep(vec![v]),
            OneOrMany::Many(v) => Sweep(v),
        })
    }
}

impl<T> Sweep<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsSection {
    #[serde(default = "defaults::n_pull_devices")]
    pub n_pull_devices: u32,
    #[serde(default = "defaults::n_push_devices")]
    pub n_push_devices: u32,
    #[serde(default = "defaults::query")]
    pub query: SemanticQuery,
    #[serde(default)]
    pub query_mode: QueryMode,
    #[serde(default = "defaults::push_threshold")]
    pub push_threshold: f64,
    #[serde(default)]
    pub push_backlog: bool,
    /// Fixed per-device observations; uniform redraws each frame if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<f64>>,
}

impl Default for RcsSection {
    fn default() -> Self {
        RcsSection {
            n_pull_devices: defaults::n_pull_devices(),
            n_push_devices: defaults::n_push_devices(),
            query: defaults::query(),
            query_mode: QueryMode::Fixed,
            push_threshold: defaults::push_threshold(),
            push_backlog: false,
            observations: None,
        }
    }
}

impl RcsSection {
    pub fn population(&self) -> RcsPopulation {
        RcsPopulation {
            n_pull_devices: self.n_pull_devices,
            n_push_devices: self.n_push_devices,
            observation: match &self.observations {
                Some(v) => ObservationModel::Fixed(v.clone()),
                None => ObservationModel::Uniform,
            },
            trigger: PushTrigger {
                threshold: self.push_threshold,
            },
        }
    }

    pub fn options(&self) -> RcsOptions {
        RcsOptions {
            query_mode: self.query_mode,
            push_backlog: self.push_backlog,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default = "defaults::slots_per_frame")]
    pub slots_per_frame: Sweep<u32>,
    #[serde(default = "defaults::frame_duration_ms")]
    pub frame_duration_ms: f64,
    /// 5 for cff, 1 for rcs when absent.
    #[serde(default)]
    pub pull_packet_slots: Option<u32>,
    #[serde(default = "defaults::push_packet_slots")]
    pub push_packet_slots: u32,
    #[serde(default)]
    pub overhead_slots_per_frame: u32,
    pub alpha: Sweep<f64>,

    #[serde(default)]
    pub pull_rate_pps: f64,
    #[serde(default)]
    pub push_rate_pps: f64,
    #[serde(default)]
    pub push_retransmission: PushRetry,
    #[serde(default)]
    pub rcs: Option<RcsSection>,

    #[serde(default = "defaults::latency_ms")]
    pub latency_ms: Sweep<f64>,
    #[serde(default = "defaults::target_reliability")]
    pub target_reliability: f64,
    /// Frames per run: 2000 for cff, 100000 for rcs when absent.
    #[serde(default)]
    pub horizon_frames: Option<u64>,
    /// 20 for cff, 1 for rcs when absent.
    #[serde(default)]
    pub replications: Option<u32>,
    #[serde(default = "defaults::rate_tolerance_pps")]
    pub rate_tolerance_pps: f64,
    #[serde(default = "defaults::rate_upper_bound_pps")]
    pub rate_upper_bound_pps: f64,
    #[serde(default = "defaults::warmup_fraction")]
    pub warmup_fraction: f64,

    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "defaults::output")]
    pub output: PathBuf,
    /// Worker threads; all cores when absent. Never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

mod defaults {
    use super::*;

    pub fn slots_per_frame() -> Sweep<u32> {
        Sweep(vec![100])
    }
    pub fn frame_duration_ms() -> f64 {
        10.0
    }
    pub fn push_packet_slots() -> u32 {
        1
    }
    pub fn latency_ms() -> Sweep<f64> {
        Sweep(vec![20.0])
    }
    pub fn target_reliability() -> f64 {
        0.99
    }
    pub fn rate_tolerance_pps() -> f64 {
        10.0
    }
    pub fn rate_upper_bound_pps() -> f64 {
        10_000.0
    }
    pub fn warmup_fraction() -> f64 {
        0.1
    }
    pub fn output() -> PathBuf {
        PathBuf::from("results.csv")
    }
    pub fn n_pull_devices() -> u32 {
        10
    }
    pub fn n_push_devices() -> u32 {
        40
    }
    pub fn query() -> SemanticQuery {
        SemanticQuery { lo: 0.35, hi: 0.65 }
    }
    pub fn push_threshold() -> f64 {
        0.5
    }
}

fn tenths(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|i| f64::from(i) / 10.0).collect()
}

impl ExperimentConfig {
    /// Configuration used by the CLI when no `--config` is given.
    pub fn preset(protocol: Protocol, experiment: Experiment) -> Self {
        let mut c = ExperimentConfig {
            protocol,
            experiment,
            slots_per_frame: defaults::slots_per_frame(),
            frame_duration_ms: defaults::frame_duration_ms(),
            pull_packet_slots: None,
            push_packet_slots: defaults::push_packet_slots(),
            overhead_slots_per_frame: 0,
            alpha: Sweep(vec![0.5]),
            pull_rate_pps: 0.0,
            push_rate_pps: 0.0,
            push_retransmission: PushRetry::Persistent,
            rcs: None,
            latency_ms: defaults::latency_ms(),
            target_reliability: defaults::target_reliability(),
            horizon_frames: None,
            replications: None,
            rate_tolerance_pps: defaults::rate_tolerance_pps(),
            rate_upper_bound_pps: defaults::rate_upper_bound_pps(),
            warmup_fraction: defaults::warmup_fraction(),
            master_seed: 0,
            output: defaults::output(),
            jobs: None,
        };
        match (protocol, experiment) {
            (Protocol::Cff, Experiment::Simulate) => {
                c.pull_rate_pps = 500.0;
                c.push_rate_pps = 500.0;
                c.latency_ms = Sweep(vec![20.0, 30.0, 50.0]);
            }
            (Protocol::Cff, Experiment::Capacity) => {
                c.alpha = Sweep(tenths(1, 9));
                c.latency_ms = Sweep(vec![20.0, 30.0, 50.0]);
            }
            (Protocol::Rcs, _) => {
                c.alpha = Sweep(tenths(0, 10));
                c.slots_per_frame = Sweep(vec![25, 50, 75]);
                c.rcs = Some(RcsSection::default());
            }
        }
        c
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let raw: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        raw.resolve()
    }

    /// Fills protocol-dependent defaults and validates everything.
    pub fn resolve(mut self) -> Result<Self, HarnessError> {
        let cff = self.protocol == Protocol::Cff;
        self.pull_packet_slots
            .get_or_insert(if cff { 5 } else { 1 });
        self.horizon_frames
            .get_or_insert(if cff { 2000 } else { 100_000 });
        self.replications.get_or_insert(if cff { 20 } else { 1 });
        if !cff && self.rcs.is_none() {
            self.rcs = Some(RcsSection::default());
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |msg: String| Err(HarnessError::Invalid(msg));
        if self.alpha.values().is_empty() {
            return invalid("alpha must list at least one value".into());
        }
        if self.slots_per_frame.values().is_empty() {
            return invalid("slots_per_frame must list at least one value".into());
        }
        if self.latency_ms.values().is_empty() {
            return invalid("latency_ms must list at least one value".into());
        }
        for frame in self.frame_configs() {
            frame
                .validate()
                .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        }
        if let Some(&l) = self
            .latency_ms
            .values()
            .iter()
            .find(|l| !(l.is_finite() && **l > 0.0))
        {
            return invalid(format!("latency_ms must be positive, got {l}"));
        }
        for (name, rate) in [
            ("pull_rate_pps", self.pull_rate_pps),
            ("push_rate_pps", self.push_rate_pps),
        ] {
            if !(rate.is_finite() && rate >= 0.0) {
                return invalid(format!(
                    "{name} must be finite and non-negative, got {rate}"
                ));
            }
        }
        if self.horizon_frames == Some(0) {
            return invalid("horizon_frames must be at least 1".into());
        }
        if self.replications == Some(0) {
            return invalid("replications must be at least 1".into());
        }
        if self.jobs == Some(0) {
            return invalid("jobs must be at least 1".into());
        }
        // the capacity spec carries the remaining numeric invariants
        let l = self.latency_ms.values()[0];
        self.capacity_spec(l)
            .validate()
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;

        match (self.protocol, self.experiment) {
            (Protocol::Rcs, Experiment::Capacity) => {
                return invalid("capacity search is only defined for protocol cff".into())
            }
            (Protocol::Cff, _) if self.rcs.is_some() => {
                return invalid("rcs section given for protocol cff".into())
            }
            _ => {}
        }
        if let Some(rcs) = &self.rcs {
            rcs.query
                .validate()
                .map_err(|e| HarnessError::Invalid(e.to_string()))?;
            rcs.population()
                .validate()
                .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// One frame configuration per (S, alpha) pair, S-major.
    pub fn frame_configs(&self) -> Vec<FrameConfig> {
        let mut out = Vec::new();
        for &s in self.slots_per_frame.values() {
            for &alpha in self.alpha.values() {
                out.push(self.frame_config(s, alpha));
            }
        }
        out
    }

    pub fn frame_config(&self, slots_per_frame: u32, alpha: f64) -> FrameConfig {
        FrameConfig {
            slots_per_frame,
            frame_duration: self.frame_duration_ms / 1000.0,
            pull_packet_slots: self.pull_packet_slots.unwrap_or(5),
            push_packet_slots: self.push_packet_slots,
            alpha,
            overhead_slots: self.overhead_slots_per_frame,
        }
    }

    pub fn capacity_spec(&self, latency_ms: f64) -> CapacitySpec {
        CapacitySpec {
            target_latency: latency_ms / 1000.0,
            target_reliability: self.target_reliability,
            rate_tolerance: self.rate_tolerance_pps,
            rate_upper_bound: self.rate_upper_bound_pps,
            horizon_frames: self.horizon_frames.unwrap_or(2000),
            replications: self.replications.unwrap_or(20),
            warmup_fraction: self.warmup_fraction,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon_frames.unwrap_or(2000)
    }

    pub fn replication_count(&self) -> u32 {
        self.replications.unwrap_or(1)
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::ConfigIo {
        path: path.to_path_buf(),
        source: e,
    })?;
    ExperimentConfig::from_json(&text)
}

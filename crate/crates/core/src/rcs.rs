//! Reserved/shared contention frames driven by a semantic query.
//!
//! Each frame the base station broadcasts an interval query. Pull devices
//! whose observation falls inside it contend in the pull-reserved slots;
//! those that fail get one more try in the shared slots, where they compete
//! with push devices that have something to report. Nothing carries over to
//! the next frame unless the push backlog mode is switched on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{contend, FrameConfig, FrameLayout, SlotOutcome, TrafficClass};
use crate::metrics::{MetricsRecord, RcsCounters};
use crate::traffic::{stream_rng, ObservationModel, PushTrigger, QueryMode, SemanticQuery, SimRng};

/// Pull-enabled and push-enabled device sets. Pull devices take ids
/// `0..n_pull_devices`, push devices the next `n_push_devices` ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcsPopulation {
    pub n_pull_devices: u32,
    pub n_push_devices: u32,
    #[serde(default)]
    pub observation: ObservationModel,
    pub trigger: PushTrigger,
}

impl RcsPopulation {
    pub fn validate(&self) -> Result<()> {
        self.observation
            .check_devices(self.n_pull_devices as usize)?;
        PushTrigger::new(self.trigger.threshold)?;
        Ok(())
    }

    pub fn pull_ids(&self) -> std::ops::Range<u64> {
        0..u64::from(self.n_pull_devices)
    }

    pub fn push_ids(&self) -> std::ops::Range<u64> {
        let first = u64::from(self.n_pull_devices);
        first..first + u64::from(self.n_push_devices)
    }

    pub fn class_of(&self, device: u64) -> TrafficClass {
        if device < u64::from(self.n_pull_devices) {
            TrafficClass::Pull
        } else {
            TrafficClass::Push
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    pub class: TrafficClass,
    /// Sensor reading (pull) or drawn data value (push) for this frame.
    pub observation: f64,
    /// Push device still holding an undelivered packet.
    pub backlogged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RcsOptions {
    #[serde(default)]
    pub query_mode: QueryMode,
    /// Failed push devices keep their packet and retry next frame.
    #[serde(default)]
    pub push_backlog: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Portion {
    Reserved,
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub device: u64,
    pub class: TrafficClass,
    pub portion: Portion,
    pub opportunity: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub matched_pull: u32,
    pub pull_succeeded: u32,
    pub push_attempted: u32,
    pub push_succeeded: u32,
    pub reserved: Vec<SlotOutcome>,
    pub shared: Vec<SlotOutcome>,
    pub transmissions: Vec<Transmission>,
}

impl FrameResult {
    /// Every matching device got through (vacuously true with no match).
    pub fn retrieval_success(&self) -> bool {
        self.pull_succeeded == self.matched_pull
    }
}

/// Contention opportunities in the reserved and shared portions.
///
/// Shared opportunities are sized for the larger of the two packet types so
/// that either class fits in any of them.
fn opportunities(layout: &FrameLayout) -> (u32, u32) {
    let shared_size = layout.pull_packet_slots.max(layout.push_packet_slots);
    (
        layout.pull_tx_capacity,
        layout.push_slot_budget / shared_size,
    )
}

fn run_frame(
    layout: &FrameLayout,
    population: &RcsPopulation,
    query: &SemanticQuery,
    devices: &mut [DeviceState],
    backlog_mode: bool,
    rng: &mut SimRng,
) -> FrameResult {
    let n_pull = population.n_pull_devices as usize;

    let mut matched = Vec::new();
    for (i, dev) in devices[..n_pull].iter_mut().enumerate() {
        dev.observation = population.observation.observe(i, rng);
        if query.matches(dev.observation) {
            matched.push(i as u64);
        }
    }
    let mut pushing = Vec::new();
    for (i, dev) in devices[n_pull..].iter_mut().enumerate() {
        dev.observation = population.trigger.draw_value(rng);
        if dev.backlogged || population.trigger.fires_on(dev.observation) {
            pushing.push((n_pull + i) as u64);
        }
    }

    let (reserved_opps, shared_opps) = opportunities(layout);
    let mut transmissions = Vec::with_capacity(matched.len() * 2 + pushing.len());

    let (choices, reserved) = contend(&matched, reserved_opps, rng);
    let mut pull_succeeded = 0u32;
    let mut retry = Vec::new();
    if reserved_opps == 0 {
        retry.extend_from_slice(&matched);
    } else {
        for (&device, &slot) in matched.iter().zip(&choices) {
            transmissions.push(Transmission {
                device,
                class: TrafficClass::Pull,
                portion: Portion::Reserved,
                opportunity: slot,
            });
            if reserved[slot as usize].is_success() {
                pull_succeeded += 1;
            } else {
                retry.push(device);
            }
        }
    }

    let n_retry = retry.len();
    let mut shared_contenders = retry;
    shared_contenders.extend_from_slice(&pushing);
    let (choices, shared) = contend(&shared_contenders, shared_opps, rng);
    let mut push_succeeded = 0u32;
    for (k, (&device, &slot)) in shared_contenders.iter().zip(&choices).enumerate() {
        let class = if k < n_retry {
            TrafficClass::Pull
        } else {
            TrafficClass::Push
        };
        transmissions.push(Transmission {
            device,
            class,
            portion: Portion::Shared,
            opportunity: slot,
        });
        let ok = shared[slot as usize].is_success();
        match class {
            TrafficClass::Pull => pull_succeeded += u32::from(ok),
            TrafficClass::Push => push_succeeded += u32::from(ok),
        }
    }

    if backlog_mode {
        for &device in &pushing {
            devices[device as usize].backlogged = true;
        }
        for t in &transmissions {
            if t.class == TrafficClass::Push && shared[t.opportunity as usize].is_success() {
                devices[t.device as usize].backlogged = false;
            }
        }
    }

    FrameResult {
        matched_pull: matched.len() as u32,
        pull_succeeded,
        push_attempted: pushing.len() as u32,
        push_succeeded,
        reserved,
        shared,
        transmissions,
    }
}

fn fresh_devices(population: &RcsPopulation) -> Vec<DeviceState> {
    population
        .pull_ids()
        .chain(population.push_ids())
        .map(|id| DeviceState {
            class: population.class_of(id),
            observation: 0.0,
            backlogged: false,
        })
        .collect()
}

/// One self-contained RCS frame: nothing is carried in or out.
///
/// Panics if `config` or `population` are invalid; see
/// [`FrameConfig::validate`] and [`RcsPopulation::validate`].
pub fn run_rcs_frame(
    config: &FrameConfig,
    population: &RcsPopulation,
    query: &SemanticQuery,
    rng: &mut SimRng,
) -> FrameResult {
    let mut devices = fresh_devices(population);
    run_frame(
        &config.layout(),
        population,
        query,
        &mut devices,
        false,
        rng,
    )
}

/// Frame-by-frame RCS simulation.
pub struct RcsSimulator {
    layout: FrameLayout,
    population: RcsPopulation,
    query: SemanticQuery,
    options: RcsOptions,
    devices: Vec<DeviceState>,
    counters: RcsCounters,
    rng: SimRng,
    slot_duration: f64,
}

impl RcsSimulator {
    pub fn new(
        config: &FrameConfig,
        population: &RcsPopulation,
        query: &SemanticQuery,
        seed: u64,
        options: RcsOptions,
    ) -> Result<Self> {
        config.validate()?;
        population.validate()?;
        query.validate()?;
        Ok(RcsSimulator {
            layout: config.layout(),
            population: population.clone(),
            query: *query,
            options,
            devices: fresh_devices(population),
            counters: RcsCounters::default(),
            rng: stream_rng(seed, 0),
            slot_duration: config.slot_duration(),
        })
    }

    pub fn devices(&self) -> &[DeviceState] {
        &self.devices
    }

    pub fn counters(&self) -> &RcsCounters {
        &self.counters
    }

    pub fn step_frame(&mut self) -> FrameResult {
        let query = self
            .options
            .query_mode
            .frame_query(&self.query, &mut self.rng);
        let result = run_frame(
            &self.layout,
            &self.population,
            &query,
            &mut self.devices,
            self.options.push_backlog,
            &mut self.rng,
        );
        self.counters.frames += 1;
        self.counters.retrieval_successes += u64::from(result.retrieval_success());
        self.counters.push_attempts += u64::from(result.push_attempted);
        self.counters.push_successes += u64::from(result.push_succeeded);
        result
    }

    pub fn summary(&self) -> RcsSummary {
        RcsSummary::from(&self.counters)
    }

    pub fn into_record(self) -> MetricsRecord {
        let mut record = MetricsRecord::new(self.slot_duration);
        record.rcs = self.counters;
        record
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcsSummary {
    pub frames: u64,
    pub retrieval_accuracy: f64,
    /// Absent when no push device ever had anything to send.
    pub push_success_prob: Option<f64>,
}

impl From<&RcsCounters> for RcsSummary {
    fn from(c: &RcsCounters) -> Self {
        RcsSummary {
            frames: c.frames,
            retrieval_accuracy: c.retrieval_accuracy().unwrap_or(1.0),
            push_success_prob: c.push_success_probability(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RcsRun {
    pub summary: RcsSummary,
    pub record: MetricsRecord,
    pub frames: Vec<FrameResult>,
}

/// Runs `n_frames` frames and keeps every frame result.
pub fn simulate_rcs(
    config: &FrameConfig,
    population: &RcsPopulation,
    query: &SemanticQuery,
    n_frames: u64,
    seed: u64,
) -> Result<RcsRun> {
    simulate_rcs_with(
        config,
        population,
        query,
        n_frames,
        seed,
        RcsOptions::default(),
        true,
    )
}

pub fn simulate_rcs_with(
    config: &FrameConfig,
    population: &RcsPopulation,
    query: &SemanticQuery,
    n_frames: u64,
    seed: u64,
    options: RcsOptions,
    keep_frames: bool,
) -> Result<RcsRun> {
    if n_frames == 0 {
        return Err(Error::EmptyHorizon);
    }
    let mut sim = RcsSimulator::new(config, population, query, seed, options)?;
    let mut frames = Vec::new();
    for _ in 0..n_frames {
        let r = sim.step_frame();
        if keep_frames {
            frames.push(r);
        }
    }
    let summary = sim.summary();
    Ok(RcsRun {
        summary,
        record: sim.into_record(),
        frames,
    })
}

//! Contention-free-first frames: a scheduled pull sub-frame followed by a
//! framed-ALOHA push sub-frame.
//!
//! Packets that arrive during frame `f` become visible to the scheduler and
//! to the contention round at the start of frame `f + 1`. Pull packets wait
//! in an unbounded FIFO and are never lost. Push packets that collide go
//! back to the backlog and draw a fresh slot in the next frame's push
//! sub-frame until they get through.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{contend, FrameConfig, FrameLayout, Packet, SlotOutcome, TrafficClass};
use crate::metrics::MetricsRecord;
use crate::traffic::{stream_rng, PoissonArrivals, SimRng};

const PULL_ARRIVAL_STREAM: u64 = 1;
const PUSH_ARRIVAL_STREAM: u64 = 2;
const CONTENTION_STREAM: u64 = 3;

/// Pull packets waiting for a contention-free block, oldest first.
#[derive(Debug, Clone, Default)]
pub struct PullQueue {
    packets: VecDeque<Packet>,
}

impl PullQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a packet. Callers enqueue in (arrival_slot, id) order.
    pub fn enqueue(&mut self, packet: Packet) {
        debug_assert!(self.packets.back().is_none_or(|last| {
            (last.arrival_slot, last.id) < (packet.arrival_slot, packet.id)
        }));
        self.packets.push_back(packet);
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }

    /// Serves up to `capacity` packets in FIFO order.
    ///
    /// Block `k` occupies slots `first_slot + k * packet_slots ..` and the
    /// packet counts as delivered at the last slot of its block.
    pub fn schedule(&mut self, capacity: u32, first_slot: u64, packet_slots: u32) -> Vec<Packet> {
        let n = self.packets.len().min(capacity as usize);
        self.packets
            .drain(..n)
            .enumerate()
            .map(|(k, mut p)| {
                p.attempts += 1;
                p.deliver(first_slot + (k as u64 + 1) * u64::from(packet_slots) - 1);
                p
            })
            .collect()
    }
}

/// Push packets that still need a successful contention slot.
#[derive(Debug, Clone, Default)]
pub struct PushBacklog {
    packets: Vec<Packet>,
}

impl PushBacklog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }

    pub fn into_packets(self) -> Vec<Packet> {
        self.packets
    }
}

impl From<Vec<Packet>> for PushBacklog {
    fn from(packets: Vec<Packet>) -> Self {
        PushBacklog { packets }
    }
}

/// Result of one push contention round.
#[derive(Debug, Clone)]
pub struct PushRound {
    pub delivered: Vec<Packet>,
    pub backlog: PushBacklog,
    /// One outcome per push opportunity, in slot order.
    pub outcomes: Vec<SlotOutcome>,
}

/// One framed-ALOHA round over the push sub-frame.
///
/// Every backlogged packet, then every new packet, picks one of
/// `opportunities` slots uniformly. Opportunity `k` spans
/// `first_slot + k * packet_slots ..` and a success is delivered at its last
/// slot. Everything else stays in the backlog; with no opportunities nothing
/// is transmitted at all.
pub fn contend_push(
    backlog: PushBacklog,
    new_pushes: Vec<Packet>,
    opportunities: u32,
    first_slot: u64,
    packet_slots: u32,
    rng: &mut SimRng,
) -> PushRound {
    let mut packets = backlog.packets;
    packets.extend(new_pushes);
    if opportunities == 0 {
        return PushRound {
            delivered: Vec::new(),
            backlog: PushBacklog { packets },
            outcomes: Vec::new(),
        };
    }

    let ids: Vec<u64> = packets.iter().map(|p| p.id).collect();
    let (choices, outcomes) = contend(&ids, opportunities, rng);

    let mut delivered = Vec::new();
    let mut survivors = Vec::with_capacity(packets.len());
    for (mut p, slot) in packets.into_iter().zip(choices) {
        p.attempts += 1;
        if outcomes[slot as usize].is_success() {
            p.deliver(first_slot + (u64::from(slot) + 1) * u64::from(packet_slots) - 1);
            delivered.push(p);
        } else {
            survivors.push(p);
        }
    }
    PushRound {
        delivered,
        backlog: PushBacklog { packets: survivors },
        outcomes,
    }
}

/// What happens to a push packet after a collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushRetry {
    /// Re-contend in every following frame until success.
    #[default]
    Persistent,
    /// Drop on first collision. Used to check against slotted-ALOHA theory.
    Disabled,
}

#[derive(Debug, Clone, Default)]
pub struct CffOptions {
    pub push_retry: PushRetry,
    /// Packets arriving in the first `warmup_frames` frames are simulated but
    /// left out of the metrics.
    pub warmup_frames: u64,
    /// Keep a per-frame trace of deliveries and slot outcomes.
    pub trace: bool,
}

/// Everything observable about one CFF frame.
#[derive(Debug, Clone, Default)]
pub struct CffFrameTrace {
    pub frame: u64,
    /// Pull packets served this frame, in service order.
    pub pull_delivered: Vec<Packet>,
    pub push_delivered: Vec<Packet>,
    /// Packets given up on this frame (retransmissions disabled only).
    pub push_dropped: Vec<Packet>,
    pub push_outcomes: Vec<SlotOutcome>,
    pub pull_arrivals: u64,
    pub push_arrivals: u64,
}

/// Outcome of a full CFF run.
#[derive(Debug, Clone)]
pub struct CffRun {
    pub record: MetricsRecord,
    /// Pull packets still queued at the horizon (all arrival batches).
    pub pull_left: u64,
    /// Push packets still backlogged or not yet eligible at the horizon.
    pub push_left: u64,
    pub trace: Vec<CffFrameTrace>,
}

/// Frame-by-frame CFF simulation state.
pub struct CffSimulator {
    layout: FrameLayout,
    slots_per_frame: u64,
    pull_arrivals: PoissonArrivals,
    push_arrivals: PoissonArrivals,
    options: CffOptions,
    queue: PullQueue,
    backlog: PushBacklog,
    pending_pull: Vec<Packet>,
    pending_push: Vec<Packet>,
    next_id: u64,
    frame: u64,
    record: MetricsRecord,
    pull_rng: SimRng,
    push_rng: SimRng,
    contention_rng: SimRng,
    trace: Vec<CffFrameTrace>,
}

impl CffSimulator {
    pub fn new(
        config: &FrameConfig,
        pull_rate: f64,
        push_rate: f64,
        seed: u64,
        options: CffOptions,
    ) -> Result<Self> {
        config.validate()?;
        let slot = config.slot_duration();
        Ok(CffSimulator {
            layout: config.layout(),
            slots_per_frame: u64::from(config.slots_per_frame),
            pull_arrivals: PoissonArrivals::new(pull_rate, slot)?,
            push_arrivals: PoissonArrivals::new(push_rate, slot)?,
            options,
            queue: PullQueue::new(),
            backlog: PushBacklog::new(),
            pending_pull: Vec::new(),
            pending_push: Vec::new(),
            next_id: 0,
            frame: 0,
            record: MetricsRecord::new(slot),
            pull_rng: stream_rng(seed, PULL_ARRIVAL_STREAM),
            push_rng: stream_rng(seed, PUSH_ARRIVAL_STREAM),
            contention_rng: stream_rng(seed, CONTENTION_STREAM),
            trace: Vec::new(),
        })
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn queue(&self) -> &PullQueue {
        &self.queue
    }

    pub fn backlog(&self) -> &PushBacklog {
        &self.backlog
    }

    pub fn record(&self) -> &MetricsRecord {
        &self.record
    }

    fn counted(&self, packet: &Packet) -> bool {
        packet.arrival_slot / self.slots_per_frame >= self.options.warmup_frames
    }

    /// Runs one frame: serve what arrived up to the previous frame boundary,
    /// then draw this frame's arrivals.
    pub fn step_frame(&mut self) {
        let frame_start = self.frame * self.slots_per_frame;
        let layout = self.layout;

        for p in self.pending_pull.drain(..) {
            self.queue.enqueue(p);
        }
        let new_pushes = std::mem::take(&mut self.pending_push);

        let pull_delivered = self.queue.schedule(
            layout.pull_tx_capacity,
            frame_start + u64::from(layout.pull_offset()),
            layout.pull_packet_slots,
        );

        let round = contend_push(
            std::mem::take(&mut self.backlog),
            new_pushes,
            layout.push_tx_capacity,
            frame_start + u64::from(layout.push_offset()),
            layout.push_packet_slots,
            &mut self.contention_rng,
        );

        // with retransmissions off, anything that actually transmitted and
        // failed is gone; packets that never got a slot keep waiting
        let (backlog, push_dropped) = match self.options.push_retry {
            PushRetry::Persistent => (round.backlog, Vec::new()),
            PushRetry::Disabled if round.outcomes.is_empty() => (round.backlog, Vec::new()),
            PushRetry::Disabled => (PushBacklog::new(), round.backlog.into_packets()),
        };
        self.backlog = backlog;

        for p in pull_delivered.iter().chain(&round.delivered) {
            if self.counted(p) {
                self.record.record_delivery(p);
            }
        }
        for p in &push_dropped {
            if self.counted(p) {
                self.record.record_drop(TrafficClass::Push);
            }
        }

        let counted = self.frame >= self.options.warmup_frames;
        let (mut pull_arrivals, mut push_arrivals) = (0, 0);
        for slot in frame_start..frame_start + self.slots_per_frame {
            for _ in 0..self.pull_arrivals.sample(&mut self.pull_rng) {
                self.pending_pull
                    .push(Packet::new(self.next_id, TrafficClass::Pull, slot));
                self.next_id += 1;
                pull_arrivals += 1;
            }
            for _ in 0..self.push_arrivals.sample(&mut self.push_rng) {
                self.pending_push
                    .push(Packet::new(self.next_id, TrafficClass::Push, slot));
                self.next_id += 1;
                push_arrivals += 1;
            }
        }
        if counted {
            self.record.pull.arrived += pull_arrivals;
            self.record.push.arrived += push_arrivals;
        }

        if self.options.trace {
            self.trace.push(CffFrameTrace {
                frame: self.frame,
                pull_delivered,
                push_delivered: round.delivered,
                push_dropped,
                push_outcomes: round.outcomes,
                pull_arrivals,
                push_arrivals,
            });
        }
        self.frame += 1;
    }

    /// Ends the run; whatever is still waiting is censored.
    pub fn finish(mut self) -> CffRun {
        let pull_left = (self.queue.len() + self.pending_pull.len()) as u64;
        let push_left = (self.backlog.len() + self.pending_push.len()) as u64;
        let warmup = self.options.warmup_frames;
        let spf = self.slots_per_frame;
        let counted = |p: &&Packet| p.arrival_slot / spf >= warmup;
        let pull_censored = self
            .queue
            .iter()
            .chain(&self.pending_pull)
            .filter(counted)
            .count() as u64;
        let push_censored = self
            .backlog
            .iter()
            .chain(&self.pending_push)
            .filter(counted)
            .count() as u64;
        self.record
            .record_censored(TrafficClass::Pull, pull_censored);
        self.record
            .record_censored(TrafficClass::Push, push_censored);
        CffRun {
            record: self.record,
            pull_left,
            push_left,
            trace: self.trace,
        }
    }
}

/// Runs `horizon_frames` CFF frames with the given options.
pub fn simulate_cff_with(
    config: &FrameConfig,
    pull_rate: f64,
    push_rate: f64,
    horizon_frames: u64,
    seed: u64,
    options: CffOptions,
) -> Result<CffRun> {
    if horizon_frames == 0 {
        return Err(Error::EmptyHorizon);
    }
    let mut sim = CffSimulator::new(config, pull_rate, push_rate, seed, options)?;
    for _ in 0..horizon_frames {
        sim.step_frame();
    }
    Ok(sim.finish())
}

/// Runs `horizon_frames` CFF frames with persistent push retransmission and
/// no warm-up.
pub fn simulate_cff(
    config: &FrameConfig,
    pull_rate: f64,
    push_rate: f64,
    horizon_frames: u64,
    seed: u64,
) -> Result<MetricsRecord> {
    simulate_cff_with(
        config,
        pull_rate,
        push_rate,
        horizon_frames,
        seed,
        CffOptions::default(),
    )
    .map(|run| run.record)
}

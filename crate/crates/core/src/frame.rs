//! Frame geometry, packets, and the slotted collision channel.
//!
//! Time is counted in integer slots from the start of a run. A frame is
//! `slots_per_frame` consecutive slots and is laid out as
//!
//! ```text
//! | overhead | pull sub-frame (floor(alpha * usable)) | push / shared sub-frame |
//! ```
//!
//! where `usable = slots_per_frame - overhead_slots`. Seconds are only ever
//! derived from slot counts, never accumulated, so runs are bit-reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absorbs representation error in `alpha * slots` products such as
/// `0.29 * 100 = 28.999999999999996`.
const FLOOR_EPS: f64 = 1e-9;

/// Geometry of one frame plus the pull fraction `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub slots_per_frame: u32,
    /// Seconds.
    pub frame_duration: f64,
    pub pull_packet_slots: u32,
    pub push_packet_slots: u32,
    /// Fraction of the usable slots reserved for pull traffic.
    pub alpha: f64,
    /// Control/beacon slots at the head of every frame, taken out of
    /// `slots_per_frame` before the alpha split.
    #[serde(default)]
    pub overhead_slots: u32,
}

impl FrameConfig {
    /// 10 ms frames of 100 slots, 5-slot pull packets and 1-slot push packets.
    pub fn reference(alpha: f64) -> Self {
        FrameConfig {
            slots_per_frame: 100,
            frame_duration: 0.01,
            pull_packet_slots: 5,
            push_packet_slots: 1,
            alpha,
            overhead_slots: 0,
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        FrameConfig {
            alpha,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if self.slots_per_frame == 0 {
            return Err(Error::ZeroSlots);
        }
        if !(self.frame_duration.is_finite() && self.frame_duration > 0.0) {
            return Err(Error::BadFrameDuration(self.frame_duration));
        }
        for (which, got) in [
            ("pull", self.pull_packet_slots),
            ("push", self.push_packet_slots),
        ] {
            if got == 0 || got > self.slots_per_frame {
                return Err(Error::BadPacketSlots {
                    which,
                    got,
                    slots_per_frame: self.slots_per_frame,
                });
            }
        }
        if self.overhead_slots > self.slots_per_frame {
            return Err(Error::OverheadTooLarge {
                overhead: self.overhead_slots,
                slots_per_frame: self.slots_per_frame,
            });
        }
        Ok(())
    }

    pub fn slot_duration(&self) -> f64 {
        self.frame_duration / f64::from(self.slots_per_frame)
    }

    pub fn layout(&self) -> FrameLayout {
        frame_layout(self)
    }
}

/// Slot budgets of one frame, relative to the frame's first slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub slots_per_frame: u32,
    pub overhead_slots: u32,
    pub pull_slot_budget: u32,
    pub push_slot_budget: u32,
    /// Whole pull packets that fit in the pull sub-frame.
    pub pull_tx_capacity: u32,
    /// Whole push packets that fit in the push sub-frame.
    pub push_tx_capacity: u32,
    pub pull_packet_slots: u32,
    pub push_packet_slots: u32,
}

impl FrameLayout {
    /// Offset of the first pull slot within a frame.
    pub fn pull_offset(&self) -> u32 {
        self.overhead_slots
    }

    /// Offset of the first push (or shared) slot within a frame.
    pub fn push_offset(&self) -> u32 {
        self.overhead_slots + self.pull_slot_budget
    }

    /// Whether the in-frame offset lies in the pull sub-frame.
    pub fn in_pull_subframe(&self, offset: u32) -> bool {
        (self.pull_offset()..self.push_offset()).contains(&offset)
    }

    pub fn in_push_subframe(&self, offset: u32) -> bool {
        (self.push_offset()..self.slots_per_frame).contains(&offset)
    }
}

/// Splits a frame into pull and push sub-frames.
///
/// `pull_slot_budget = floor(alpha * usable)`, the push sub-frame gets the
/// rest, and only whole packets are scheduled in either part.
pub fn frame_layout(config: &FrameConfig) -> FrameLayout {
    let usable = config.slots_per_frame.saturating_sub(config.overhead_slots);
    let raw = (config.alpha * f64::from(usable) + FLOOR_EPS).floor();
    let pull_slot_budget = (raw.max(0.0) as u32).min(usable);
    let push_slot_budget = usable - pull_slot_budget;
    FrameLayout {
        slots_per_frame: config.slots_per_frame,
        overhead_slots: config.overhead_slots,
        pull_slot_budget,
        push_slot_budget,
        pull_tx_capacity: pull_slot_budget / config.pull_packet_slots.max(1),
        push_tx_capacity: push_slot_budget / config.push_packet_slots.max(1),
        pull_packet_slots: config.pull_packet_slots,
        push_packet_slots: config.push_packet_slots,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficClass {
    Pull,
    Push,
}

impl TrafficClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficClass::Pull => "pull",
            TrafficClass::Push => "push",
        }
    }
}

/// One uplink data unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub class: TrafficClass,
    pub arrival_slot: u64,
    pub delivery_slot: Option<u64>,
    pub attempts: u32,
}

impl Packet {
    pub fn new(id: u64, class: TrafficClass, arrival_slot: u64) -> Self {
        Packet {
            id,
            class,
            arrival_slot,
            delivery_slot: None,
            attempts: 0,
        }
    }

    /// Marks the packet received at the end of `slot`.
    pub fn deliver(&mut self, slot: u64) {
        debug_assert!(slot >= self.arrival_slot);
        self.delivery_slot = Some(slot);
    }

    /// Slots from arrival up to the end of the delivery slot.
    pub fn latency_slots(&self) -> Option<u64> {
        self.delivery_slot.map(|d| d + 1 - self.arrival_slot)
    }

    pub fn latency(&self, slot_duration: f64) -> Option<f64> {
        self.latency_slots().map(|s| s as f64 * slot_duration)
    }
}

/// What the receiver observes in one slot of a collision channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOutcome {
    Idle,
    Success(u64),
    Collision(u32),
}

impl SlotOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, SlotOutcome::Success(_))
    }

    fn from_occupancy(count: u32, first: u64) -> Self {
        match count {
            0 => SlotOutcome::Idle,
            1 => SlotOutcome::Success(first),
            n => SlotOutcome::Collision(n),
        }
    }
}

/// Collision channel without capture: a slot succeeds iff exactly one
/// transmitter uses it.
pub fn resolve_slot(transmitters: &[u64]) -> SlotOutcome {
    match transmitters {
        [] => SlotOutcome::Idle,
        [id] => SlotOutcome::Success(*id),
        many => SlotOutcome::Collision(many.len() as u32),
    }
}

/// Framed-ALOHA round: each contender independently draws one of
/// `opportunities` slots uniformly, in the order given.
///
/// Returns the chosen slot of every contender and the resolved outcome of
/// every slot. With zero opportunities nobody transmits.
pub fn contend<R: Rng + ?Sized>(
    contenders: &[u64],
    opportunities: u32,
    rng: &mut R,
) -> (Vec<u32>, Vec<SlotOutcome>) {
    if opportunities == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut occupancy = vec![(0u32, 0u64); opportunities as usize];
    let choices: Vec<u32> = contenders
        .iter()
        .map(|&id| {
            let slot = rng.random_range(0..opportunities);
            let cell = &mut occupancy[slot as usize];
            if cell.0 == 0 {
                cell.1 = id;
            }
            cell.0 += 1;
            slot
        })
        .collect();
    let outcomes = occupancy
        .into_iter()
        .map(|(count, first)| SlotOutcome::from_occupancy(count, first))
        .collect();
    (choices, outcomes)
}

/// Global slot counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalClock {
    current_slot: u64,
    slots_per_frame: u64,
}

impl GlobalClock {
    pub fn new(slots_per_frame: u32) -> Self {
        assert!(slots_per_frame > 0, "slots_per_frame must be positive");
        GlobalClock {
            current_slot: 0,
            slots_per_frame: u64::from(slots_per_frame),
        }
    }

    pub fn current_slot(&self) -> u64 {
        self.current_slot
    }

    pub fn current_frame(&self) -> u64 {
        self.current_slot / self.slots_per_frame
    }

    pub fn frame_start(&self, frame: u64) -> u64 {
        frame * self.slots_per_frame
    }

    pub fn is_frame_boundary(&self) -> bool {
        self.current_slot.is_multiple_of(self.slots_per_frame)
    }

    pub fn tick(&mut self) {
        self.current_slot += 1;
    }

    /// Jumps to the first slot of the next frame.
    pub fn advance_frame(&mut self) {
        self.current_slot = (self.current_frame() + 1) * self.slots_per_frame;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layout_reference_endpoints() {
        let full = frame_layout(&FrameConfig::reference(1.0));
        assert_eq!(full.pull_tx_capacity, 20);
        assert_eq!(full.push_slot_budget, 0);

        let none = frame_layout(&FrameConfig::reference(0.0));
        assert_eq!(none.pull_tx_capacity, 0);
        assert_eq!(none.push_slot_budget, 100);
    }

    #[test]
    fn layout_floors_partial_packets() {
        let l = frame_layout(&FrameConfig::reference(0.33));
        assert_eq!(l.pull_slot_budget, 33);
        assert_eq!(l.pull_tx_capacity, 6);
        assert_eq!(l.push_slot_budget, 67);
    }

    #[test]
    fn layout_is_robust_to_float_products() {
        // 0.29 * 100.0 == 28.999999999999996 in binary floating point
        assert_eq!(
            frame_layout(&FrameConfig::reference(0.29)).pull_slot_budget,
            29
        );
        assert_eq!(
            frame_layout(&FrameConfig::reference(0.57)).pull_slot_budget,
            57
        );
    }

    #[test]
    fn overhead_comes_out_before_split() {
        let mut c = FrameConfig::reference(0.5);
        c.overhead_slots = 10;
        let l = frame_layout(&c);
        assert_eq!(l.pull_slot_budget, 45);
        assert_eq!(l.push_slot_budget, 45);
        assert_eq!(l.pull_offset(), 10);
        assert_eq!(l.push_offset(), 55);
        assert!(!l.in_pull_subframe(9));
        assert!(l.in_push_subframe(99));
    }

    #[test]
    fn validation() {
        assert_eq!(
            FrameConfig::reference(1.5).validate(),
            Err(Error::AlphaOutOfRange(1.5))
        );
        assert!(FrameConfig::reference(-0.1).validate().is_err());
        assert!(FrameConfig::reference(f64::NAN).validate().is_err());
        let mut c = FrameConfig::reference(0.5);
        c.pull_packet_slots = 101;
        assert!(matches!(c.validate(), Err(Error::BadPacketSlots { .. })));
        c = FrameConfig::reference(0.5);
        c.frame_duration = 0.0;
        assert!(c.validate().is_err());
        c = FrameConfig::reference(0.5);
        c.slots_per_frame = 0;
        assert_eq!(c.validate(), Err(Error::ZeroSlots));
        assert!(FrameConfig::reference(0.5).validate().is_ok());
    }

    #[test]
    fn resolve_slot_examples() {
        assert_eq!(resolve_slot(&[]), SlotOutcome::Idle);
        assert_eq!(resolve_slot(&[7]), SlotOutcome::Success(7));
        assert_eq!(resolve_slot(&[3, 9]), SlotOutcome::Collision(2));
    }

    #[test]
    fn packet_latency_includes_delivery_slot() {
        let mut p = Packet::new(1, TrafficClass::Pull, 10);
        assert_eq!(p.latency_slots(), None);
        p.deliver(10);
        assert_eq!(p.latency_slots(), Some(1));
        p.deliver(14);
        assert_eq!(p.latency_slots(), Some(5));
    }

    #[test]
    fn clock_boundaries() {
        let mut clock = GlobalClock::new(4);
        assert!(clock.is_frame_boundary());
        clock.tick();
        assert!(!clock.is_frame_boundary());
        assert_eq!(clock.current_frame(), 0);
        clock.advance_frame();
        assert_eq!(clock.current_slot(), 4);
        assert!(clock.is_frame_boundary());
        assert_eq!(clock.current_frame(), 1);
    }

    #[test]
    fn contend_without_slots_is_silent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (choices, outcomes) = contend(&[1, 2, 3], 0, &mut rng);
        assert!(choices.is_empty() && outcomes.is_empty());
    }

    proptest! {
        #[test]
        fn budgets_partition_the_frame(
            slots in 1u32..400,
            overhead_frac in 0.0f64..0.5,
            alpha in 0.0f64..=1.0,
            pull in 1u32..8,
        ) {
            let mut c = FrameConfig::reference(alpha);
            c.slots_per_frame = slots;
            c.pull_packet_slots = pull.min(slots);
            c.overhead_slots = (overhead_frac * f64::from(slots)) as u32;
            let l = frame_layout(&c);
            prop_assert_eq!(l.overhead_slots + l.pull_slot_budget + l.push_slot_budget, slots);
            prop_assert!(l.pull_tx_capacity * c.pull_packet_slots <= l.pull_slot_budget);
        }

        #[test]
        fn layout_monotone_in_alpha(a in 0.0f64..=1.0, b in 0.0f64..=1.0, slots in 1u32..300) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let mut c = FrameConfig::reference(lo);
            c.slots_per_frame = slots;
            c.pull_packet_slots = 5.min(slots);
            let l1 = frame_layout(&c);
            let l2 = frame_layout(&c.with_alpha(hi));
            prop_assert!(l1.pull_tx_capacity <= l2.pull_tx_capacity);
            prop_assert!(l1.push_slot_budget >= l2.push_slot_budget);
        }

        #[test]
        fn resolve_slot_ignores_order(mut ids in proptest::collection::vec(any::<u64>(), 0..6)) {
            let before = std::mem::discriminant(&resolve_slot(&ids));
            ids.reverse();
            prop_assert_eq!(before, std::mem::discriminant(&resolve_slot(&ids)));
        }

        #[test]
        fn contend_agrees_with_resolve_slot(n in 0usize..30, slots in 1u32..12, seed in any::<u64>()) {
            let ids: Vec<u64> = (100..100 + n as u64).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (choices, outcomes) = contend(&ids, slots, &mut rng);
            prop_assert_eq!(choices.len(), n);
            for (slot, outcome) in outcomes.iter().enumerate() {
                let group: Vec<u64> = ids
                    .iter()
                    .zip(&choices)
                    .filter(|(_, &c)| c as usize == slot)
                    .map(|(&id, _)| id)
                    .collect();
                prop_assert_eq!(*outcome, resolve_slot(&group));
            }
        }
    }
}

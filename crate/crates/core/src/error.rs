use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong when building or running a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alpha out of [0,1]: {0}")]
    AlphaOutOfRange(f64),
    #[error("slots_per_frame must be positive")]
    ZeroSlots,
    #[error("frame_duration must be finite and strictly positive, got {0}")]
    BadFrameDuration(f64),
    #[error("{which}_packet_slots must be in 1..=slots_per_frame ({slots_per_frame}), got {got}")]
    BadPacketSlots {
        which: &'static str,
        got: u32,
        slots_per_frame: u32,
    },
    #[error("overhead_slots ({overhead}) exceeds slots_per_frame ({slots_per_frame})")]
    OverheadTooLarge { overhead: u32, slots_per_frame: u32 },
    #[error("rate must be finite and non-negative, got {0}")]
    BadRate(f64),
    #[error("threshold out of [0,1]: {0}")]
    ThresholdOutOfRange(f64),
    #[error("query bounds must be finite with lo <= hi, got [{lo}, {hi}]")]
    BadQuery { lo: f64, hi: f64 },
    #[error("horizon must be at least one frame")]
    EmptyHorizon,
    #[error("empty sample")]
    EmptySample,
    #[error("probability out of (0,1]: {0}")]
    BadProbability(f64),
    #[error("cannot merge records with different slot durations ({0} vs {1})")]
    SlotDurationMismatch(f64, f64),
    #[error("invalid capacity spec: {0}")]
    BadCapacitySpec(&'static str),
    #[error("fixed observation model has {got} values for {expected} devices")]
    ObservationCount { got: usize, expected: usize },
}

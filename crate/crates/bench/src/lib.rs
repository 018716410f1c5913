//! Workloads shared by the benchmarks.

use pushpull_core::traffic::ObservationModel;
use pushpull_core::{FrameConfig, PushTrigger, RcsPopulation, SemanticQuery};

/// 10 pull devices answering a ~30% query, 40 push devices firing half the time.
pub fn reference_population() -> (RcsPopulation, SemanticQuery) {
    (
        RcsPopulation {
            n_pull_devices: 10,
            n_push_devices: 40,
            observation: ObservationModel::Uniform,
            trigger: PushTrigger { threshold: 0.5 },
        },
        SemanticQuery { lo: 0.35, hi: 0.65 },
    )
}

pub fn rcs_frame(slots_per_frame: u32, alpha: f64) -> FrameConfig {
    FrameConfig {
        slots_per_frame,
        frame_duration: 0.01,
        pull_packet_slots: 1,
        push_packet_slots: 1,
        alpha,
        overhead_slots: 0,
    }
}

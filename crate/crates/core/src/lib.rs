//! Slot-level simulation of push/pull medium access in a single cell.
//!
//! Two frame structures share a fraction `alpha` of each frame between
//! base-station-initiated (pull) and device-initiated (push) traffic:
//!
//! - [`cff`]: a contention-free pull sub-frame scheduled by the base
//!   station, followed by framed-ALOHA push slots with 1-persistent
//!   retransmission.
//! - [`rcs`]: pull-reserved contention slots answered by devices matching a
//!   broadcast interval query, followed by shared slots where unsuccessful
//!   pull responses and push reports contend together.
//!
//! [`capacity`] searches for the largest arrival rate that meets a
//! latency/reliability target, and [`metrics`] holds the estimators.
//! Every run is a pure function of its configuration and seed.

pub mod capacity;
pub mod cff;
mod error;
pub mod frame;
pub mod metrics;
pub mod rcs;
pub mod traffic;

pub use capacity::{
    capacity_frontier, cff_max_rate, max_rate, CapacityEstimate, CapacitySpec, CapacityStatus,
    FrontierPoint,
};
pub use cff::{simulate_cff, simulate_cff_with, CffOptions, CffRun, PushRetry};
pub use error::{Error, Result};
pub use frame::{
    frame_layout, resolve_slot, FrameConfig, FrameLayout, GlobalClock, Packet, SlotOutcome,
    TrafficClass,
};
pub use metrics::{empirical_quantile, MetricsRecord};
pub use rcs::{run_rcs_frame, simulate_rcs, FrameResult, RcsOptions, RcsPopulation, RcsSummary};
pub use traffic::{ObservationModel, PushTrigger, QueryMode, SemanticQuery};

//! Statistical checks against closed-form results.

use pushpull_core::capacity::{cff_max_rate, cff_reliability, CapacityStatus};
use pushpull_core::cff::{contend_push, PushBacklog};
use pushpull_core::traffic::{stream_rng, ObservationModel};
use pushpull_core::{
    run_rcs_frame, simulate_cff_with, simulate_rcs, CapacitySpec, CffOptions, FrameConfig, Packet,
    PushRetry, PushTrigger, RcsPopulation, SemanticQuery, TrafficClass,
};

fn aloha_success(g: f64, seed: u64) -> (f64, u64) {
    let config = FrameConfig::reference(0.5);
    let m = config.layout().push_tx_capacity;
    let rate = g * f64::from(m) / config.frame_duration;
    let options = CffOptions {
        push_retry: PushRetry::Disabled,
        ..CffOptions::default()
    };
    let run = simulate_cff_with(&config, 0.0, rate, 10_000, seed, options).unwrap();
    let push = &run.record.push;
    let sent = push.delivered + push.dropped;
    (push.delivered as f64 / sent as f64, sent)
}

#[test]
fn slotted_aloha_without_retransmission() {
    for g in [0.5, 1.0] {
        let (p, sent) = aloha_success(g, 17);
        assert!(sent >= 100_000, "only {sent} packets");
        assert!((p - (-g).exp()).abs() <= 0.01, "G={g}: {p}");
    }
}

#[test]
fn two_packets_two_slots() {
    let mut rng = stream_rng(3, 0);
    let frames = 100_000;
    let mut delivered = 0;
    for _ in 0..frames {
        let pkts = vec![
            Packet::new(0, TrafficClass::Push, 0),
            Packet::new(1, TrafficClass::Push, 0),
        ];
        delivered += contend_push(PushBacklog::new(), pkts, 2, 0, 1, &mut rng)
            .delivered
            .len();
    }
    let p = delivered as f64 / (2.0 * frames as f64);
    assert!((p - 0.5).abs() <= 0.01, "{p}");
}

#[test]
fn two_packets_one_slot_never_succeed() {
    let mut rng = stream_rng(4, 0);
    for _ in 0..10_000 {
        let pkts = vec![
            Packet::new(0, TrafficClass::Push, 0),
            Packet::new(1, TrafficClass::Push, 0),
        ];
        let round = contend_push(PushBacklog::new(), pkts, 1, 0, 1, &mut rng);
        assert!(round.delivered.is_empty());
        assert_eq!(round.backlog.len(), 2);
    }
}

fn reserved_only(slots: u32) -> (FrameConfig, RcsPopulation, SemanticQuery) {
    let config = FrameConfig {
        slots_per_frame: slots,
        frame_duration: 0.01,
        pull_packet_slots: 1,
        push_packet_slots: 1,
        alpha: 1.0,
        overhead_slots: 0,
    };
    let population = RcsPopulation {
        n_pull_devices: 2,
        n_push_devices: 0,
        observation: ObservationModel::Uniform,
        trigger: PushTrigger { threshold: 1.0 },
    };
    (config, population, SemanticQuery { lo: 0.0, hi: 1.0 })
}

#[test]
fn rcs_reserved_two_devices_two_slots() {
    let (config, population, query) = reserved_only(2);
    let mut rng = stream_rng(5, 0);
    let frames = 100_000;
    let mut ok = 0;
    for _ in 0..frames {
        let r = run_rcs_frame(&config, &population, &query, &mut rng);
        assert_eq!(r.matched_pull, 2);
        assert!(r.shared.is_empty());
        ok += r.reserved.iter().filter(|o| o.is_success()).count();
    }
    let p = ok as f64 / (2.0 * frames as f64);
    assert!((p - 0.5).abs() <= 0.01, "{p}");
}

#[test]
fn rcs_reserved_two_devices_one_slot() {
    let (config, population, query) = reserved_only(1);
    let run = simulate_rcs(&config, &population, &query, 10_000, 6).unwrap();
    assert!(run.frames.iter().all(|f| f.pull_succeeded == 0));
    assert_eq!(run.summary.retrieval_accuracy, 0.0);
}

#[test]
fn reliability_falls_with_load() {
    let config = FrameConfig::reference(0.5);
    let spec = CapacitySpec {
        horizon_frames: 500,
        replications: 4,
        ..CapacitySpec::new(0.02)
    };
    for class in [TrafficClass::Pull, TrafficClass::Push] {
        let r: Vec<f64> = [200.0, 600.0, 1000.0, 1400.0]
            .iter()
            .map(|&rate| cff_reliability(&config, class, rate, &spec, 9).unwrap())
            .collect();
        assert!(
            r.windows(2).all(|w| w[1] <= w[0] + 0.02),
            "{class:?}: {r:?}"
        );
    }
}

#[test]
fn degenerate_alphas() {
    let spec = CapacitySpec {
        horizon_frames: 200,
        replications: 2,
        ..CapacitySpec::new(0.05)
    };
    let pull = cff_max_rate(&FrameConfig::reference(0.0), TrafficClass::Pull, &spec, 1).unwrap();
    assert_eq!((pull.rate, pull.status), (0.0, CapacityStatus::NoResources));
    let push = cff_max_rate(&FrameConfig::reference(1.0), TrafficClass::Push, &spec, 1).unwrap();
    assert_eq!((push.rate, push.status), (0.0, CapacityStatus::NoResources));

    let config = FrameConfig {
        slots_per_frame: 50,
        frame_duration: 0.01,
        pull_packet_slots: 1,
        push_packet_slots: 1,
        alpha: 0.0,
        overhead_slots: 0,
    };
    let population = RcsPopulation {
        n_pull_devices: 10,
        n_push_devices: 40,
        observation: ObservationModel::Uniform,
        trigger: PushTrigger { threshold: 0.5 },
    };
    let query = SemanticQuery { lo: 0.35, hi: 0.65 };
    let at_one = simulate_rcs(&config.with_alpha(1.0), &population, &query, 2000, 2).unwrap();
    assert_eq!(at_one.summary.push_success_prob, Some(0.0));
    let at_zero = simulate_rcs(&config, &population, &query, 2000, 2).unwrap();
    assert!(at_zero.frames.iter().all(|f| f.reserved.is_empty()));
}

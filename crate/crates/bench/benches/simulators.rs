use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use pushpull_bench::{rcs_frame, reference_population};
use pushpull_core::capacity::cff_reliability;
use pushpull_core::cff::{CffOptions, CffSimulator};
use pushpull_core::frame::contend;
use pushpull_core::rcs::{RcsOptions, RcsSimulator};
use pushpull_core::traffic::stream_rng;
use pushpull_core::{CapacitySpec, FrameConfig, TrafficClass};

fn contention(c: &mut Criterion) {
    let mut g = c.benchmark_group("contend");
    for n in [10u64, 100, 1000] {
        let ids: Vec<u64> = (0..n).collect();
        let mut rng = stream_rng(1, 0);
        g.throughput(Throughput::Elements(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &ids, |b, ids| {
            b.iter(|| contend(ids, 50, &mut rng))
        });
    }
    g.finish();
}

fn cff_frames(c: &mut Criterion) {
    let mut g = c.benchmark_group("cff_frame");
    g.throughput(Throughput::Elements(1));
    for (name, pull, push) in [("light", 300.0, 300.0), ("busy", 800.0, 1500.0)] {
        let mut sim = CffSimulator::new(
            &FrameConfig::reference(0.5),
            pull,
            push,
            7,
            CffOptions::default(),
        )
        .unwrap();
        g.bench_function(name, |b| b.iter(|| sim.step_frame()));
    }
    g.finish();
}

fn rcs_frames(c: &mut Criterion) {
    let (population, query) = reference_population();
    let mut g = c.benchmark_group("rcs_frame");
    g.throughput(Throughput::Elements(1));
    for s in [25u32, 75] {
        let mut sim = RcsSimulator::new(
            &rcs_frame(s, 0.5),
            &population,
            &query,
            7,
            RcsOptions::default(),
        )
        .unwrap();
        g.bench_function(BenchmarkId::from_parameter(s), |b| {
            b.iter(|| sim.step_frame())
        });
    }
    g.finish();
}

fn capacity_probe(c: &mut Criterion) {
    let spec = CapacitySpec {
        horizon_frames: 2000,
        replications: 1,
        ..CapacitySpec::new(0.03)
    };
    let config = FrameConfig::reference(0.5);
    let mut g = c.benchmark_group("capacity_probe");
    g.sample_size(10);
    g.bench_function("pull_2000_frames", |b| {
        b.iter(|| cff_reliability(&config, TrafficClass::Pull, 800.0, &spec, 3).unwrap())
    });
    g.bench_function("push_2000_frames", |b| {
        b.iter(|| cff_reliability(&config, TrafficClass::Push, 800.0, &spec, 3).unwrap())
    });
    g.finish();
}

criterion_group!(benches, contention, cff_frames, rcs_frames, capacity_probe);
criterion_main!(benches);

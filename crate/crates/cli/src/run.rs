//! Sweep execution.
//!
//! A config expands into independent jobs in sweep order (S, then alpha,
//! then L). Jobs run on a worker pool and their rows are concatenated in job
//! order, so the output never depends on the number of workers.

use pushpull_core::capacity::cff_max_rate;
use pushpull_core::rcs::simulate_rcs_with;
use pushpull_core::traffic::replication_seed;
use pushpull_core::{
    empirical_quantile, simulate_cff_with, CffOptions, FrameConfig, MetricsRecord, TrafficClass,
};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, Protocol};
use crate::error::HarnessError;

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub protocol: Protocol,
    pub alpha: f64,
    pub slots_per_frame: u32,
    pub latency_ms: Option<f64>,
    pub pull_rate_pps: Option<f64>,
    pub push_rate_pps: Option<f64>,
    pub metric_name: &'static str,
    pub metric_value: Option<f64>,
    pub replications: u32,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Job {
    Cff {
        s: u32,
        alpha: f64,
    },
    Capacity {
        s: u32,
        alpha: f64,
        latency_ms: f64,
        class: TrafficClass,
    },
    Rcs {
        s: u32,
        alpha: f64,
    },
}

fn jobs(config: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &s in config.slots_per_frame.values() {
        for &alpha in config.alpha.values() {
            match (config.protocol, config.experiment) {
                (Protocol::Cff, Experiment::Simulate) => out.push(Job::Cff { s, alpha }),
                (Protocol::Cff, Experiment::Capacity) => {
                    for &latency_ms in config.latency_ms.values() {
                        for class in [TrafficClass::Pull, TrafficClass::Push] {
                            out.push(Job::Capacity {
                                s,
                                alpha,
                                latency_ms,
                                class,
                            });
                        }
                    }
                }
                (Protocol::Rcs, _) => out.push(Job::Rcs { s, alpha }),
            }
        }
    }
    out
}

/// Number of rows `run_sweep` produces for `config`.
pub fn expected_rows(config: &ExperimentConfig) -> usize {
    let points = config.slots_per_frame.values().len() * config.alpha.values().len();
    let per_point = match (config.protocol, config.experiment) {
        (Protocol::Cff, Experiment::Simulate) => 2 * config.latency_ms.values().len() + 2,
        (Protocol::Cff, Experiment::Capacity) => 2 * config.latency_ms.values().len(),
        (Protocol::Rcs, _) => 2,
    };
    points * per_point
}

/// Runs every sweep point of a validated config.
///
/// Per-point failures end up in the `error` column; only a failure to build
/// the worker pool is returned as an error.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<Row>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let jobs = jobs(config);
    let per_job: Vec<Vec<Row>> =
        pool.install(|| jobs.par_iter().map(|job| run_job(config, job)).collect());
    Ok(per_job.into_iter().flatten().collect())
}

fn row(config: &ExperimentConfig, s: u32, alpha: f64, metric_name: &'static str) -> Row {
    Row {
        protocol: config.protocol,
        alpha,
        slots_per_frame: s,
        latency_ms: None,
        pull_rate_pps: None,
        push_rate_pps: None,
        metric_name,
        metric_value: None,
        replications: config.replication_count(),
        seed: config.master_seed,
        error: String::new(),
    }
}

fn set_value(row: &mut Row, value: pushpull_core::Result<f64>) {
    match value {
        Ok(v) => row.metric_value = Some(v),
        Err(e) => row.error = e.to_string(),
    }
}

fn run_job(config: &ExperimentConfig, job: &Job) -> Vec<Row> {
    match *job {
        Job::Cff { s, alpha } => cff_rows(config, s, alpha),
        Job::Capacity {
            s,
            alpha,
            latency_ms,
            class,
        } => {
            let name = match class {
                TrafficClass::Pull => "max_pull_rate_pps",
                TrafficClass::Push => "max_push_rate_pps",
            };
            let mut r = row(config, s, alpha, name);
            r.latency_ms = Some(latency_ms);
            let frame = config.frame_config(s, alpha);
            match cff_max_rate(
                &frame,
                class,
                &config.capacity_spec(latency_ms),
                config.master_seed,
            ) {
                Ok(est) => {
                    r.metric_value = Some(est.rate);
                    r.error = est.status.diagnostic();
                }
                Err(e) => r.error = e.to_string(),
            }
            vec![r]
        }
        Job::Rcs { s, alpha } => rcs_rows(config, s, alpha),
    }
}

fn pooled<F>(
    config: &ExperimentConfig,
    frame: &FrameConfig,
    run: F,
) -> pushpull_core::Result<MetricsRecord>
where
    F: Fn(u64) -> pushpull_core::Result<MetricsRecord> + Sync,
{
    let records = (0..config.replication_count())
        .into_par_iter()
        .map(|rep| run(replication_seed(config.master_seed, u64::from(rep))))
        .collect::<pushpull_core::Result<Vec<_>>>()?;
    let mut total = MetricsRecord::new(frame.slot_duration());
    for r in &records {
        total.merge(r)?;
    }
    Ok(total)
}

fn cff_rows(config: &ExperimentConfig, s: u32, alpha: f64) -> Vec<Row> {
    let frame = config.frame_config(s, alpha);
    let horizon = config.horizon();
    let warmup = config
        .capacity_spec(config.latency_ms.values()[0])
        .warmup_frames();
    let record = pooled(config, &frame, |seed| {
        let options = CffOptions {
            push_retry: config.push_retransmission,
            warmup_frames: warmup,
            trace: false,
        };
        simulate_cff_with(
            &frame,
            config.pull_rate_pps,
            config.push_rate_pps,
            horizon,
            seed,
            options,
        )
        .map(|run| run.record)
    });

    let with_rates = |name| {
        let mut r = row(config, s, alpha, name);
        r.pull_rate_pps = Some(config.pull_rate_pps);
        r.push_rate_pps = Some(config.push_rate_pps);
        r
    };
    let mut rows = Vec::new();
    for &l in config.latency_ms.values() {
        for (class, name) in [
            (TrafficClass::Pull, "pull_reliability"),
            (TrafficClass::Push, "push_reliability"),
        ] {
            let mut r = with_rates(name);
            r.latency_ms = Some(l);
            match &record {
                Ok(rec) => set_value(&mut r, rec.reliability_within(class, l / 1000.0)),
                Err(e) => r.error = e.to_string(),
            }
            rows.push(r);
        }
    }
    for (class, name) in [
        (TrafficClass::Pull, "pull_latency_quantile_ms"),
        (TrafficClass::Push, "push_latency_quantile_ms"),
    ] {
        let mut r = with_rates(name);
        match &record {
            Ok(rec) => set_value(
                &mut r,
                empirical_quantile(&rec.latency_samples(class), config.target_reliability)
                    .map(|q| q * 1000.0),
            ),
            Err(e) => r.error = e.to_string(),
        }
        rows.push(r);
    }
    rows
}

fn rcs_rows(config: &ExperimentConfig, s: u32, alpha: f64) -> Vec<Row> {
    let frame = config.frame_config(s, alpha);
    let rcs = config.rcs.clone().unwrap_or_default();
    let population = rcs.population();
    let options = rcs.options();
    let record = pooled(config, &frame, |seed| {
        simulate_rcs_with(
            &frame,
            &population,
            &rcs.query,
            config.horizon(),
            seed,
            options.clone(),
            false,
        )
        .map(|run| run.record)
    });

    let mut accuracy = row(config, s, alpha, "retrieval_accuracy");
    let mut push = row(config, s, alpha, "push_success_prob");
    match record {
        Ok(rec) => {
            accuracy.metric_value = rec.rcs.retrieval_accuracy();
            push.metric_value = rec.rcs.push_success_probability();
            if push.metric_value.is_none() {
                push.error = "no push attempts".into();
            }
        }
        Err(e) => {
            accuracy.error = e.to_string();
            push.error = e.to_string();
        }
    }
    vec![accuracy, push]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn job_order_is_sweep_order() {
        let c = cfg(
            r#"{"protocol": "cff", "experiment": "capacity", "alpha": [0.2, 0.4],
                "slots_per_frame": [50, 100], "latency_ms": [20, 50]}"#,
        );
        let j = jobs(&c);
        assert_eq!(j.len(), 16);
        assert_eq!(
            j[0],
            Job::Capacity {
                s: 50,
                alpha: 0.2,
                latency_ms: 20.0,
                class: TrafficClass::Pull
            }
        );
        assert_eq!(
            j[3],
            Job::Capacity {
                s: 50,
                alpha: 0.2,
                latency_ms: 50.0,
                class: TrafficClass::Push
            }
        );
        assert_eq!(
            j[15],
            Job::Capacity {
                s: 100,
                alpha: 0.4,
                latency_ms: 50.0,
                class: TrafficClass::Push
            }
        );
        assert_eq!(expected_rows(&c), 16);
    }

    #[test]
    fn cff_point_rows() {
        let c = cfg(
            r#"{"protocol": "cff", "alpha": 0.5, "pull_rate_pps": 300, "push_rate_pps": 300,
                "latency_ms": [20, 50], "horizon_frames": 200, "replications": 2}"#,
        );
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows.len(), expected_rows(&c));
        let names: Vec<_> = rows.iter().map(|r| r.metric_name).collect();
        assert_eq!(
            names,
            [
                "pull_reliability",
                "push_reliability",
                "pull_reliability",
                "push_reliability",
                "pull_latency_quantile_ms",
                "push_latency_quantile_ms"
            ]
        );
        for r in &rows[..4] {
            let v = r.metric_value.unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(r.error.is_empty());
        }
        assert!(rows[0].metric_value <= rows[2].metric_value);
    }

    #[test]
    fn idle_class_reports_error_not_value() {
        let c = cfg(r#"{"protocol": "cff", "alpha": 0.5, "pull_rate_pps": 300,
                "horizon_frames": 50, "replications": 1}"#);
        let rows = run_sweep(&c).unwrap();
        let push = rows
            .iter()
            .find(|r| r.metric_name == "push_reliability")
            .unwrap();
        assert_eq!(push.metric_value, None);
        assert_eq!(push.error, "empty sample");
    }

    #[test]
    fn rcs_alpha_one_has_zero_push_success() {
        let c = cfg(r#"{"protocol": "rcs", "alpha": 1.0, "horizon_frames": 1000}"#);
        let rows = run_sweep(&c).unwrap();
        assert_eq!(rows[1].metric_name, "push_success_prob");
        assert_eq!(rows[1].metric_value, Some(0.0));
    }
}

//! Random traffic: Poisson packet arrivals, sensor observations, interval
//! queries and value-threshold push triggers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used for every random draw in the simulators.
pub type SimRng = ChaCha8Rng;

/// Seed of replication `index` under `master_seed`.
pub fn replication_seed(master_seed: u64, index: u64) -> u64 {
    master_seed ^ index
}

/// A generator seeded from `seed`, on one of several independent streams.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-slot Poisson packet arrivals at `rate` packets per second.
#[derive(Debug, Clone)]
pub struct PoissonArrivals {
    rate: f64,
    slot_duration: f64,
    dist: Option<Poisson<f64>>,
}

impl PoissonArrivals {
    pub fn new(rate: f64, slot_duration: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::BadRate(rate));
        }
        if !(slot_duration.is_finite() && slot_duration > 0.0) {
            return Err(Error::BadFrameDuration(slot_duration));
        }
        let mean = rate * slot_duration;
        let dist = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|_| Error::BadRate(rate))?)
        } else {
            None
        };
        Ok(PoissonArrivals {
            rate,
            slot_duration,
            dist,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean_per_slot(&self) -> f64 {
        self.rate * self.slot_duration
    }

    /// Number of arrivals in one slot.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.dist {
            Some(d) => d.sample(rng) as u64,
            None => 0,
        }
    }
}

/// How sensor observations are produced each frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObservationModel {
    /// Fresh independent draw from U[0,1) per device per frame.
    #[default]
    Uniform,
    /// Device `i` always reports `values[i]`.
    Fixed(Vec<f64>),
}

impl ObservationModel {
    pub fn observe<R: Rng + ?Sized>(&self, device: usize, rng: &mut R) -> f64 {
        match self {
            ObservationModel::Uniform => rng.random::<f64>(),
            ObservationModel::Fixed(values) => values[device],
        }
    }

    pub fn check_devices(&self, n_devices: usize) -> Result<()> {
        match self {
            ObservationModel::Fixed(values) if values.len() != n_devices => {
                Err(Error::ObservationCount {
                    got: values.len(),
                    expected: n_devices,
                })
            }
            _ => Ok(()),
        }
    }
}

/// Closed value interval broadcast by the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticQuery {
    pub lo: f64,
    pub hi: f64,
}

impl SemanticQuery {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let q = SemanticQuery { lo, hi };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::BadQuery {
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn matches(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Devices whose observation satisfies the query, in input order.
pub fn apply_query<I>(query: &SemanticQuery, observations: I) -> Vec<u64>
where
    I: IntoIterator<Item = (u64, f64)>,
{
    observations
        .into_iter()
        .filter(|&(_, v)| query.matches(v))
        .map(|(id, _)| id)
        .collect()
}

/// Whether a query stays put for the whole run or moves every frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    #[default]
    Fixed,
    /// Each frame draws `lo` uniformly so that `[lo, lo + width]` fits in
    /// `[0, 1]`; `width` is taken from the configured query.
    Resampled,
}

impl QueryMode {
    pub fn frame_query<R: Rng + ?Sized>(&self, base: &SemanticQuery, rng: &mut R) -> SemanticQuery {
        match self {
            QueryMode::Fixed => *base,
            QueryMode::Resampled => {
                let width = base.width().clamp(0.0, 1.0);
                let lo = rng.random::<f64>() * (1.0 - width);
                SemanticQuery { lo, hi: lo + width }
            }
        }
    }
}

/// A push device reports when the value it draws exceeds `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushTrigger {
    pub threshold: f64,
}

impl PushTrigger {
    pub fn new(threshold: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&threshold) {
            Ok(PushTrigger { threshold })
        } else {
            Err(Error::ThresholdOutOfRange(threshold))
        }
    }

    pub fn fire_probability(&self) -> f64 {
        1.0 - self.threshold
    }

    /// Draws a data value in (0, 1], so that thresholds 0 and 1 are exact.
    pub fn draw_value<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        1.0 - rng.random::<f64>()
    }

    pub fn fires_on(&self, value: f64) -> bool {
        value > self.threshold
    }

    pub fn fires<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.fires_on(self.draw_value(rng))
    }
}

/// Push devices that have something to report this frame.
pub fn sample_push_set<R: Rng + ?Sized>(
    trigger: &PushTrigger,
    devices: &[u64],
    rng: &mut R,
) -> Vec<u64> {
    devices
        .iter()
        .copied()
        .filter(|_| trigger.fires(rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_never_arrives() {
        let p = PoissonArrivals::new(0.0, 1e-4).unwrap();
        let mut rng = stream_rng(1, 0);
        assert!((0..10_000).all(|_| p.sample(&mut rng) == 0));
    }

    #[test]
    fn arrival_mean_per_slot() {
        let p = PoissonArrivals::new(1e5, 1e-4).unwrap();
        let mut rng = stream_rng(7, 0);
        let n = 1_000_000u64;
        let total: u64 = (0..n).map(|_| p.sample(&mut rng)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 10.0).abs() <= 0.05, "mean {mean}");
    }

    #[test]
    fn arrivals_deterministic_per_seed() {
        let p = PoissonArrivals::new(3000.0, 1e-4).unwrap();
        let draw = |seed| {
            let mut rng = stream_rng(seed, 3);
            (0..1000).map(|_| p.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn bad_rates_rejected() {
        assert!(PoissonArrivals::new(-1.0, 1e-4).is_err());
        assert!(PoissonArrivals::new(f64::INFINITY, 1e-4).is_err());
    }

    #[test]
    fn full_query_matches_everything() {
        let q = SemanticQuery::new(0.0, 1.0).unwrap();
        let mut rng = stream_rng(2, 0);
        let obs: Vec<(u64, f64)> = (0..100).map(|i| (i, rng.random::<f64>())).collect();
        assert_eq!(apply_query(&q, obs.iter().copied()).len(), 100);
    }

    #[test]
    fn point_query() {
        let q = SemanticQuery::new(0.4, 0.4).unwrap();
        assert_eq!(apply_query(&q, [(0, 0.4), (1, 0.5)]), vec![0]);
    }

    #[test]
    fn query_match_fraction() {
        let q = SemanticQuery::new(0.2, 0.7).unwrap();
        let mut rng = stream_rng(3, 0);
        let n = 100_000;
        let hits = apply_query(&q, (0..n).map(|i| (i, rng.random::<f64>()))).len();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.01, "fraction {frac}");
    }

    #[test]
    fn inverted_query_rejected() {
        assert!(SemanticQuery::new(0.6, 0.5).is_err());
        assert!(SemanticQuery::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn resampled_query_keeps_width() {
        let base = SemanticQuery::new(0.1, 0.4).unwrap();
        let mut rng = stream_rng(4, 0);
        for _ in 0..1000 {
            let q = QueryMode::Resampled.frame_query(&base, &mut rng);
            assert!((q.width() - 0.3).abs() < 1e-12);
            assert!(q.lo >= 0.0 && q.hi <= 1.0);
        }
        assert_eq!(QueryMode::Fixed.frame_query(&base, &mut rng), base);
    }

    #[test]
    fn trigger_extremes() {
        let devices: Vec<u64> = (0..50).collect();
        let mut rng = stream_rng(5, 0);
        let never = PushTrigger::new(1.0).unwrap();
        let always = PushTrigger::new(0.0).unwrap();
        for _ in 0..1000 {
            assert!(sample_push_set(&never, &devices, &mut rng).is_empty());
            assert_eq!(sample_push_set(&always, &devices, &mut rng), devices);
        }
        assert!(PushTrigger::new(1.1).is_err());
    }

    #[test]
    fn trigger_rate() {
        let trigger = PushTrigger::new(0.9).unwrap();
        let devices: Vec<u64> = (0..100).collect();
        let mut rng = stream_rng(6, 0);
        let hits: usize = (0..1000)
            .map(|_| sample_push_set(&trigger, &devices, &mut rng).len())
            .sum();
        let rate = hits as f64 / 100_000.0;
        assert!((rate - 0.1).abs() <= 0.005, "rate {rate}");
    }

    #[test]
    fn observations_uncorrelated_across_devices() {
        let model = ObservationModel::Uniform;
        let mut rng = stream_rng(8, 0);
        let n = 100_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (model.observe(0, &mut rng), model.observe(1, &mut rng)))
            .collect();
        let mean = |f: &dyn Fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / n as f64;
        let (ma, mb) = (mean(&|p| p.0), mean(&|p| p.1));
        let cov = mean(&|p| (p.0 - ma) * (p.1 - mb));
        // var of U[0,1) is 1/12; correlation ~ N(0, 1/n)
        let corr = cov * 12.0;
        assert!(corr.abs() < 0.015, "corr {corr}");
    }

    #[test]
    fn fixed_observations() {
        let model = ObservationModel::Fixed(vec![0.25, 0.75]);
        let mut rng = stream_rng(9, 0);
        assert_eq!(model.observe(1, &mut rng), 0.75);
        assert!(model.check_devices(2).is_ok());
        assert!(model.check_devices(3).is_err());
    }
}

//! Constant-velocity Kalman smoothing of per-frame azimuth estimates.
//!
//! State is `[azimuth, rate]` in degrees and degrees per frame. Missing
//! measurements (silence frames) run the prediction step only; measurements
//! farther than the gate from the prediction are ignored as outliers.

use crate::error::{Error, Result};
use crate::geometry::DirectionGrid;

/// Reported before the first measurement arrives.
pub const DEFAULT_AZIMUTH: f64 = 90.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Process noise `q` (deg²/frame²) driving the rate random walk.
    pub process_noise: f64,
    /// Measurement noise `r` (deg²).
    pub measurement_noise: f64,
    /// Largest accepted innovation in degrees.
    pub gate: f64,
    /// After this many consecutive gated-out measurements the track is
    /// restarted at the latest one, so a source that really moved is
    /// picked up again. Zero disables restarts.
    pub reacquire_after: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            process_noise: 1.0,
            measurement_noise: 16.0,
            gate: 30.0,
            reacquire_after: 5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.process_noise > 0.0 && self.measurement_noise > 0.0) {
            return Err(Error::Config("tracker noise variances must be positive".into()));
        }
        if !(self.gate > 0.0) {
            return Err(Error::Config("tracker gate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub azimuth: f64,
    pub rate: f64,
    pub covariance: [[f64; 2]; 2],
}

impl KalmanState {
    /// At rest at `azimuth`. The prior is deliberately loose (position
    /// variance `2r`, rate variance `r/2`) so that with the default noise
    /// levels the position variance shrinks monotonically from the start.
    pub fn at(azimuth: f64, cfg: &TrackerConfig) -> Self {
        let r = cfg.measurement_noise;
        Self {
            azimuth,
            rate: 0.0,
            covariance: [[2.0 * r, 0.0], [0.0, 0.5 * r]],
        }
    }

    fn predict(&self, cfg: &TrackerConfig) -> Self {
        let p = &self.covariance;
        // F = [[1, 1], [0, 1]]; Q = q·G·G^T with G = [1/2, 1]
        let q = cfg.process_noise;
        let p00 = p[0][0] + p[0][1] + p[1][0] + p[1][1] + q / 4.0;
        let p01 = p[0][1] + p[1][1] + q / 2.0;
        let p11 = p[1][1] + q;
        Self {
            azimuth: (self.azimuth + self.rate).clamp(0.0, 180.0),
            rate: self.rate,
            covariance: [[p00, p01], [p01, p11]],
        }
    }

    fn update(&self, z: f64, cfg: &TrackerConfig) -> Self {
        let p = &self.covariance;
        let s = p[0][0] + cfg.measurement_noise;
        let (k0, k1) = (p[0][0] / s, p[1][0] / s);
        let y = z - self.azimuth;
        // (I − K·H)·P, written out for the symmetric 2×2 case
        let p00 = (1.0 - k0) * p[0][0];
        let p01 = (1.0 - k0) * p[0][1];
        let p11 = p[1][1] - k1 * p[0][1];
        Self {
            azimuth: (self.azimuth + k0 * y).clamp(0.0, 180.0),
            rate: self.rate + k1 * y,
            covariance: [[p00, p01], [p01, p11]],
        }
    }
}

/// One predict/update cycle. The update runs only when a measurement is
/// present and lies within `cfg.gate` of the prediction.
pub fn kalman_step(state: &KalmanState, measurement: Option<f64>, cfg: &TrackerConfig) -> KalmanState {
    let predicted = state.predict(cfg);
    match measurement {
        Some(z) if (z - predicted.azimuth).abs() <= cfg.gate => predicted.update(z, cfg),
        _ => predicted,
    }
}

/// Single-stream tracker that initializes itself from its first measurement.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    state: Option<KalmanState>,
    rejected: usize,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: None,
            rejected: 0,
        })
    }

    pub fn state(&self) -> Option<&KalmanState> {
        self.state.as_ref()
    }

    /// Feeds one frame and returns the smoothed azimuth.
    pub fn update(&mut self, measurement: Option<f64>) -> Result<f64> {
        if let Some(z) = measurement {
            if !(0.0..=180.0).contains(&z) {
                return Err(Error::Range(format!("azimuth measurement {z} outside [0, 180]")));
            }
        }
        let cfg = &self.cfg;
        let next = match (&self.state, measurement) {
            (None, None) => return Ok(DEFAULT_AZIMUTH),
            (None, Some(z)) => KalmanState::at(z, cfg),
            (Some(s), m) => {
                let predicted = s.predict(cfg).azimuth;
                match m {
                    Some(z) if (z - predicted).abs() > cfg.gate => self.rejected += 1,
                    Some(_) => self.rejected = 0,
                    None => {}
                }
                let next = kalman_step(s, m, cfg);
                match m {
                    Some(z) if cfg.reacquire_after > 0 && self.rejected >= cfg.reacquire_after => {
                        self.rejected = 0;
                        KalmanState::at(z, cfg)
                    }
                    _ => next,
                }
            }
        };
        let az = next.azimuth;
        self.state = Some(next);
        Ok(az)
    }
}

/// Smooths a sequence of classifier decisions. Silence-class frames count
/// as missing measurements; the output has one azimuth per input frame.
pub fn track_sequence(grid: &DirectionGrid, classes: &[usize], cfg: &TrackerConfig) -> Result<Vec<f64>> {
    let mut tracker = Tracker::new(cfg.clone())?;
    classes
        .iter()
        .map(|&c| {
            if c >= grid.num_classes() {
                return Err(Error::Index(format!("class {c} out of range")));
            }
            tracker.update(grid.azimuth_of(c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn std_dev(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn constant_input_converges() {
        let cfg = TrackerConfig::default();
        let mut s = KalmanState::at(90.0, &cfg);
        let mut prev = s.covariance[0][0];
        for _ in 0..200 {
            s = kalman_step(&s, Some(90.0), &cfg);
            assert_eq!(s.azimuth, 90.0);
            assert!(s.covariance[0][0] <= prev + 1e-12);
            prev = s.covariance[0][0];
        }
        let steady = s.covariance[0][0];
        let again = kalman_step(&s, Some(90.0), &cfg);
        assert!((again.covariance[0][0] - steady).abs() < 1e-9);
    }

    #[test]
    fn prediction_only_grows_covariance() {
        let cfg = TrackerConfig::default();
        let mut s = KalmanState::at(40.0, &cfg);
        for _ in 0..10 {
            let next = kalman_step(&s, None, &cfg);
            assert!(next.covariance[0][0] > s.covariance[0][0]);
            assert!(next.covariance[1][1] > s.covariance[1][1]);
            s = next;
        }
        assert_eq!(s.azimuth, 40.0);
    }

    #[test]
    fn alternating_measurements_settle_between() {
        let cfg = TrackerConfig::default();
        // scalar oracle: the same filter written with explicit matrices
        let mut x = [100.0, 0.0];
        let mut p = [[32.0, 0.0], [0.0, 8.0]];
        let mut s = KalmanState::at(100.0, &cfg);
        for i in 0..400 {
            let z = if i % 2 == 0 { 120.0 } else { 100.0 };
            let xp = [x[0] + x[1], x[1]];
            let fp = [[p[0][0] + p[1][0], p[0][1] + p[1][1]], [p[1][0], p[1][1]]];
            let mut pp = [[fp[0][0] + fp[0][1], fp[0][1]], [fp[1][0] + fp[1][1], fp[1][1]]];
            let g = [0.5, 1.0];
            for a in 0..2 {
                for b in 0..2 {
                    pp[a][b] += g[a] * g[b];
                }
            }
            let sv = pp[0][0] + 16.0;
            let k = [pp[0][0] / sv, pp[1][0] / sv];
            x = [xp[0] + k[0] * (z - xp[0]), xp[1] + k[1] * (z - xp[0])];
            p = [
                [(1.0 - k[0]) * pp[0][0], (1.0 - k[0]) * pp[0][1]],
                [pp[1][0] - k[1] * pp[0][0], pp[1][1] - k[1] * pp[0][1]],
            ];
            s = kalman_step(&s, Some(z), &cfg);
            assert!((s.azimuth - x[0]).abs() < 1e-9);
            if i > 50 {
                assert!(s.azimuth > 100.0 && s.azimuth < 120.0);
            }
        }
    }

    fn grid() -> DirectionGrid {
        DirectionGrid::new((0..19).map(|i| 10.0 * i as f64).collect(), true).unwrap()
    }

    #[test]
    fn all_silence_stays_at_default() {
        let out = track_sequence(&grid(), &[19; 12], &TrackerConfig::default()).unwrap();
        assert_eq!(out, vec![DEFAULT_AZIMUTH; 12]);
    }

    #[test]
    fn neighbour_flips_are_smoothed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let classes: Vec<usize> = (0..300)
            .map(|_| match rng.random_range(0..10) {
                0 => 10,
                1 => 12,
                _ => 11,
            })
            .collect();
        let raw: Vec<f64> = classes.iter().map(|&c| grid().azimuth_of(c).unwrap()).collect();
        let out = track_sequence(&grid(), &classes, &TrackerConfig::default()).unwrap();
        assert_eq!(out.len(), raw.len());
        assert!(std_dev(&out[20..]) < std_dev(&raw[20..]));
    }

    #[test]
    fn single_outlier_is_rejected() {
        let mut classes = vec![11; 40];
        classes[25] = 0;
        let out = track_sequence(&grid(), &classes, &TrackerConfig::default()).unwrap();
        assert!(out.iter().all(|&a| (a - 110.0).abs() < 2.0), "{out:?}");
    }

    #[test]
    fn moved_source_is_reacquired() {
        let mut classes = vec![2; 30];
        classes.extend(vec![15; 30]);
        let out = track_sequence(&grid(), &classes, &TrackerConfig::default()).unwrap();
        assert!((out[59] - 150.0).abs() < 2.0, "{}", out[59]);
    }

    #[test]
    fn output_stays_in_range() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        for z in [0.0, 0.0, 0.0, 0.0, 0.0] {
            let a = tracker.update(Some(z)).unwrap();
            assert!((0.0..=180.0).contains(&a));
        }
        for _ in 0..5 {
            assert!((0.0..=180.0).contains(&tracker.update(None).unwrap()));
        }
        assert!(tracker.update(Some(200.0)).is_err());
    }
}

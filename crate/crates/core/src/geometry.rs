//! Linear array geometry and direction-dependent steering quantities.
//!
//! Angles are azimuths in degrees. 0° is endfire along the array axis and
//! 90° is broadside. A plane wave from azimuth `θ` reaches microphone `m`
//! `p_m·cos(θ)/v` seconds after it reaches the origin, so for θ = 0 the
//! wave travels toward increasing microphone positions.
//!
//! With the forward DFT convention `X(ω) = Σ x[t]·e^{-jωt}`, the spectrum a
//! plane wave leaves on the array is `S(ω)·conj(a(ω, θ))`, where `a` is the
//! [`propagation_vector`](ArrayGeometry::propagation_vector). The conjugate
//! is exposed as [`arrival_vector`](ArrayGeometry::arrival_vector).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_NUM_MICS: usize = 8;
pub const DEFAULT_SPACING_M: f64 = 0.03;
pub const DEFAULT_SAMPLE_RATE: f64 = 16_000.0;
pub const DEFAULT_SOUND_SPEED: f64 = 343.0;

/// Microphone positions along the array axis plus the propagation constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    mic_positions: Vec<f64>,
    sound_speed: f64,
    sample_rate: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::uniform(DEFAULT_NUM_MICS, DEFAULT_SPACING_M).expect("default geometry is valid")
    }
}

impl ArrayGeometry {
    pub fn new(mic_positions: Vec<f64>, sound_speed: f64, sample_rate: f64) -> Result<Self> {
        if mic_positions.len() < 2 {
            return Err(Error::Config(format!(
                "array needs at least 2 microphones, got {}",
                mic_positions.len()
            )));
        }
        if mic_positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "microphone positions must be strictly increasing".into(),
            ));
        }
        if !(sound_speed > 0.0) || !(sample_rate > 0.0) {
            return Err(Error::Config(
                "sound speed and sample rate must be positive".into(),
            ));
        }
        Ok(Self {
            mic_positions,
            sound_speed,
            sample_rate,
        })
    }

    /// Uniform linear array with microphone `i` at `i·spacing`.
    pub fn uniform(num_mics: usize, spacing: f64) -> Result<Self> {
        let positions = (0..num_mics).map(|i| i as f64 * spacing).collect();
        Self::new(positions, DEFAULT_SOUND_SPEED, DEFAULT_SAMPLE_RATE)
    }

    pub fn num_mics(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn mic_positions(&self) -> &[f64] {
        &self.mic_positions
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Largest possible inter-microphone delay in seconds.
    pub fn aperture_delay(&self) -> f64 {
        (self.mic_positions[self.num_mics() - 1] - self.mic_positions[0]) / self.sound_speed
    }

    pub fn mic_distance(&self, i: usize, j: usize) -> f64 {
        (self.mic_positions[i] - self.mic_positions[j]).abs()
    }

    fn check_mic(&self, k: usize) -> Result<()> {
        if k >= self.num_mics() {
            return Err(Error::Index(format!(
                "microphone {k} out of range for a {}-microphone array",
                self.num_mics()
            )));
        }
        Ok(())
    }

    /// Theoretical delay of channel `k` relative to channel `l` for a plane
    /// wave from `theta_deg`: `(p_k − p_l)·cos θ / v`.
    pub fn pair_delay(&self, k: usize, l: usize, theta_deg: f64) -> Result<f64> {
        self.check_mic(k)?;
        self.check_mic(l)?;
        Ok(self.pair_delay_unchecked(k, l, theta_deg))
    }

    #[inline]
    pub(crate) fn pair_delay_unchecked(&self, k: usize, l: usize, theta_deg: f64) -> f64 {
        (self.mic_positions[k] - self.mic_positions[l]) * cos_deg(theta_deg)
            / self.sound_speed
    }

    /// Delay of every channel relative to microphone 0.
    pub fn mic_delays(&self, theta_deg: f64) -> Vec<f64> {
        (0..self.num_mics())
            .map(|m| self.pair_delay_unchecked(m, 0, theta_deg))
            .collect()
    }

    /// Theoretical phase differences between channels `1..M` and channel 0,
    /// `Δ_k = wrap(−ω·τ_k0)`, each in (−π, π].
    pub fn phase_difference_vector(&self, theta_deg: f64, omega: f64) -> Vec<f64> {
        (1..self.num_mics())
            .map(|k| wrap_phase(-omega * self.pair_delay_unchecked(k, 0, theta_deg)))
            .collect()
    }

    /// Propagation (steering) vector `a_i = exp(j·ω·cos θ·p_i / v)`.
    pub fn propagation_vector(&self, theta_deg: f64, omega: f64) -> Vec<Complex64> {
        let c = cos_deg(theta_deg);
        self.mic_positions
            .iter()
            .map(|&p| Complex64::from_polar(1.0, omega * c * p / self.sound_speed))
            .collect()
    }

    /// Spectral signature of a unit plane wave from `theta_deg` at the array,
    /// referenced to the array origin: the conjugate of the propagation vector.
    pub fn arrival_vector(&self, theta_deg: f64, omega: f64) -> Vec<Complex64> {
        self.propagation_vector(theta_deg, omega)
            .into_iter()
            .map(|z| z.conj())
            .collect()
    }
}

/// `cos θ` for `θ` in degrees, evaluated as `sin(90° − θ)` so that
/// broadside gives exactly zero and endfire exactly ±1.
pub fn cos_deg(theta_deg: f64) -> f64 {
    (90.0 - theta_deg).to_radians().sin()
}

/// Wraps a phase into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Discrete azimuth grid used by the estimators and as classifier targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    azimuths_deg: Vec<f64>,
    has_silence_class: bool,
}

impl Default for DirectionGrid {
    /// 0°..180° in 10° steps plus a silence class.
    fn default() -> Self {
        Self {
            azimuths_deg: (0..=18).map(|i| i as f64 * 10.0).collect(),
            has_silence_class: true,
        }
    }
}

impl DirectionGrid {
    pub fn new(azimuths_deg: Vec<f64>, has_silence_class: bool) -> Result<Self> {
        if azimuths_deg.is_empty() {
            return Err(Error::Config("direction grid is empty".into()));
        }
        if azimuths_deg.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("azimuths must be strictly increasing".into()));
        }
        if azimuths_deg.iter().any(|a| !(0.0..=180.0).contains(a)) {
            return Err(Error::Config("azimuths must lie in [0, 180]".into()));
        }
        Ok(Self {
            azimuths_deg,
            has_silence_class,
        })
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths_deg
    }

    pub fn num_directions(&self) -> usize {
        self.azimuths_deg.len()
    }

    pub fn has_silence_class(&self) -> bool {
        self.has_silence_class
    }

    /// Directions plus the silence class when present.
    pub fn num_classes(&self) -> usize {
        self.num_directions() + usize::from(self.has_silence_class)
    }

    pub fn silence_class(&self) -> Option<usize> {
        self.has_silence_class.then_some(self.num_directions())
    }

    /// Azimuth of a class index, or `None` for silence / out of range.
    pub fn azimuth_of(&self, class: usize) -> Option<f64> {
        self.azimuths_deg.get(class).copied()
    }

    /// Class index of an azimuth lying on the grid (within 1e-6°).
    pub fn class_of(&self, azimuth_deg: f64) -> Option<usize> {
        self.azimuths_deg
            .iter()
            .position(|a| (a - azimuth_deg).abs() < 1e-6)
    }
}

/// Precomputed steering quantities for every (direction, frequency bin).
///
/// Entries are produced by the same [`ArrayGeometry`] methods used for
/// per-call evaluation, so cached and direct values agree bit for bit.
#[derive(Debug, Clone)]
pub struct SteeringSet {
    num_mics: usize,
    directions: Vec<f64>,
    bins: Vec<usize>,
    omegas: Vec<f64>,
    fft_size: usize,
    bin_hz: f64,
    pair_delays: Vec<f64>,
    delay_slopes: Vec<f64>,
    phase_diffs: Vec<f64>,
    prop_vectors: Vec<Complex64>,
}

/// Step of the central difference used for `∂τ/∂θ`.
pub const SLOPE_STEP_DEG: f64 = 1.0;

impl SteeringSet {
    pub fn num_mics(&self) -> usize {
        self.num_mics
    }

    pub fn directions(&self) -> &[f64] {
        &self.directions
    }

    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    /// FFT bin indices covered by the table.
    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    /// Angular frequency (rad/s) of each covered bin.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    /// `τ*_kl(θ_d)` in seconds.
    pub fn pair_delay(&self, k: usize, l: usize, dir: usize) -> f64 {
        self.pair_delays[(k * self.num_mics + l) * self.directions.len() + dir]
    }

    /// Central-difference slopes `∂τ_k0/∂θ` (seconds per radian, `k = 1..M`)
    /// for direction `dir`, with a 1° step.
    pub fn delay_slopes(&self, dir: usize) -> &[f64] {
        let m1 = self.num_mics - 1;
        &self.delay_slopes[dir * m1..(dir + 1) * m1]
    }

    /// Theoretical phase differences (length `M − 1`) for direction `dir`
    /// at the `bin_pos`-th covered bin.
    pub fn phase_diffs(&self, dir: usize, bin_pos: usize) -> &[f64] {
        let m1 = self.num_mics - 1;
        let start = (dir * self.bins.len() + bin_pos) * m1;
        &self.phase_diffs[start..start + m1]
    }

    /// Propagation vector (length `M`) for direction `dir` at the
    /// `bin_pos`-th covered bin.
    pub fn prop_vector(&self, dir: usize, bin_pos: usize) -> &[Complex64] {
        let m = self.num_mics;
        let start = (dir * self.bins.len() + bin_pos) * m;
        &self.prop_vectors[start..start + m]
    }
}

/// Builds the steering table for the grid directions and all FFT bins whose
/// centre frequency falls inside `freq_range_hz` (inclusive).
pub fn steering_table(
    geom: &ArrayGeometry,
    grid: &DirectionGrid,
    fft_size: usize,
    freq_range_hz: (f64, f64),
) -> Result<SteeringSet> {
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::Config(format!(
            "fft size must be a power of two, got {fft_size}"
        )));
    }
    let nyquist = geom.sample_rate() / 2.0;
    let (lo, hi) = freq_range_hz;
    if !(lo >= 0.0 && hi <= nyquist && lo <= hi) {
        return Err(Error::Config(format!(
            "frequency range {lo}..{hi} Hz is not within [0, {nyquist}]"
        )));
    }
    let bin_hz = geom.sample_rate() / fft_size as f64;
    let bins: Vec<usize> = (0..=fft_size / 2)
        .filter(|&b| {
            let f = b as f64 * bin_hz;
            f >= lo && f <= hi
        })
        .collect();
    if bins.is_empty() {
        return Err(Error::Config(format!(
            "frequency range {lo}..{hi} Hz contains no fft bins"
        )));
    }
    let omegas: Vec<f64> = bins
        .iter()
        .map(|&b| 2.0 * PI * b as f64 * bin_hz)
        .collect();

    let m = geom.num_mics();
    let directions = grid.azimuths().to_vec();
    let nd = directions.len();

    let mut pair_delays = vec![0.0; m * m * nd];
    for k in 0..m {
        for l in 0..m {
            for (d, &theta) in directions.iter().enumerate() {
                pair_delays[(k * m + l) * nd + d] = geom.pair_delay_unchecked(k, l, theta);
            }
        }
    }

    let h = SLOPE_STEP_DEG;
    let delay_slopes: Vec<f64> = directions
        .iter()
        .flat_map(|&theta| {
            (1..m).map(move |k| {
                (geom.pair_delay_unchecked(k, 0, theta + h)
                    - geom.pair_delay_unchecked(k, 0, theta - h))
                    / (2.0 * h.to_radians())
            })
        })
        .collect();

    let mut phase_diffs = Vec::with_capacity(nd * bins.len() * (m - 1));
    let mut prop_vectors = Vec::with_capacity(nd * bins.len() * m);
    for &theta in &directions {
        for &omega in &omegas {
            phase_diffs.extend(geom.phase_difference_vector(theta, omega));
            prop_vectors.extend(geom.propagation_vector(theta, omega));
        }
    }

    Ok(SteeringSet {
        num_mics: m,
        directions,
        bins,
        omegas,
        fft_size,
        bin_hz,
        pair_delays,
        delay_slopes,
        phase_diffs,
        prop_vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pair_delay_examples() {
        let g = ArrayGeometry::default();
        assert!(g.pair_delay(1, 0, 90.0).unwrap().abs() < 1e-20);
        let d10 = g.pair_delay(1, 0, 0.0).unwrap();
        assert!((d10 - 0.03 / 343.0).abs() < 1e-15);
        assert!((d10 - 8.746e-5).abs() < 1e-8);
        let d70 = g.pair_delay(7, 0, 0.0).unwrap();
        assert!((d70 - 7.0 * 0.03 / 343.0).abs() < 1e-15);
        assert!((d70 - 6.122e-4).abs() < 1e-7);
    }

    #[test]
    fn pair_delay_rejects_bad_index() {
        let g = ArrayGeometry::default();
        assert!(matches!(g.pair_delay(8, 0, 10.0), Err(Error::Index(_))));
        assert!(matches!(g.pair_delay(0, 9, 10.0), Err(Error::Index(_))));
    }

    #[test]
    fn geometry_validation() {
        assert!(ArrayGeometry::new(vec![0.0], 343.0, 16000.0).is_err());
        assert!(ArrayGeometry::new(vec![0.0, 0.0], 343.0, 16000.0).is_err());
        assert!(ArrayGeometry::new(vec![0.0, 0.1], 0.0, 16000.0).is_err());
        let g = ArrayGeometry::default();
        assert_eq!(g.num_mics(), 8);
        assert!((g.mic_positions()[7] - 0.21).abs() < 1e-12);
    }

    #[test]
    fn phase_difference_examples() {
        let g = ArrayGeometry::default();
        let w = 2.0 * PI * 1000.0;
        assert!(g
            .phase_difference_vector(90.0, w)
            .iter()
            .all(|x| x.abs() < 1e-12));
        let d0 = g.phase_difference_vector(0.0, w);
        let expected = wrap_phase(-w * 0.03 / 343.0);
        assert!((d0[0] - expected).abs() < 1e-12);
        assert!((d0[0] + 0.5496).abs() < 1e-4);
        // 180° negates the unwrapped vector.
        let d180 = g.phase_difference_vector(180.0, w);
        for k in 1..8 {
            let raw0 = -w * g.pair_delay(k, 0, 0.0).unwrap();
            assert!((d180[k - 1] - wrap_phase(-raw0)).abs() < 1e-9);
        }
    }

    #[test]
    fn propagation_vector_examples() {
        let g = ArrayGeometry::default();
        assert!(g
            .propagation_vector(37.0, 0.0)
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        assert!(g
            .propagation_vector(90.0, 12345.0)
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        let a = g.propagation_vector(0.0, 2.0 * PI * 1000.0);
        assert!((a[1].arg() - 0.5496).abs() < 1e-4);
    }

    #[test]
    fn wrap_phase_domain() {
        assert!((wrap_phase(PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_phase(0.0), 0.0);
    }

    #[test]
    fn grid_defaults() {
        let grid = DirectionGrid::default();
        assert_eq!(grid.num_directions(), 19);
        assert_eq!(grid.num_classes(), 20);
        assert_eq!(grid.silence_class(), Some(19));
        assert_eq!(grid.azimuth_of(11), Some(110.0));
        assert_eq!(grid.azimuth_of(19), None);
        assert_eq!(grid.class_of(40.0), Some(4));
        assert!(DirectionGrid::new(vec![10.0, 10.0], false).is_err());
        assert!(DirectionGrid::new(vec![10.0, 190.0], false).is_err());
    }

    #[test]
    fn steering_table_matches_direct_calls() {
        let g = ArrayGeometry::default();
        let grid = DirectionGrid::default();
        let s = steering_table(&g, &grid, 512, (100.0, 7500.0)).unwrap();
        assert_eq!(s.num_directions(), 19);
        assert_eq!(s.bins().first(), Some(&4));
        assert_eq!(s.bins().last(), Some(&240));
        assert!(s.pair_delay(3, 0, 9).abs() < 1e-20);
        for d in [0, 4, 13] {
            for (pos, &omega) in s.omegas().iter().enumerate().step_by(37) {
                let theta = grid.azimuths()[d];
                assert_eq!(s.phase_diffs(d, pos), &g.phase_difference_vector(theta, omega)[..]);
                assert_eq!(s.prop_vector(d, pos), &g.propagation_vector(theta, omega)[..]);
            }
            assert_eq!(
                s.pair_delay(5, 2, d),
                g.pair_delay(5, 2, grid.azimuths()[d]).unwrap()
            );
        }
    }

    #[test]
    fn steering_table_rejects_bad_config() {
        let g = ArrayGeometry::default();
        let grid = DirectionGrid::default();
        assert!(steering_table(&g, &grid, 500, (100.0, 7500.0)).is_err());
        assert!(steering_table(&g, &grid, 512, (100.0, 9000.0)).is_err());
        assert!(matches!(
            steering_table(&g, &grid, 512, (40.0, 45.0)),
            Err(Error::Config(_))
        ));
    }

    proptest! {
        #[test]
        fn pair_delay_antisymmetric(k in 0usize..8, l in 0usize..8, theta in 0.0f64..=180.0) {
            let g = ArrayGeometry::default();
            let a = g.pair_delay(k, l, theta).unwrap();
            let b = g.pair_delay(l, k, theta).unwrap();
            prop_assert_eq!(a, -b);
            prop_assert_eq!(g.pair_delay(k, k, theta).unwrap(), 0.0);
            prop_assert!(a.abs() <= 7.0 * 0.03 / 343.0 + 1e-15);
        }

        #[test]
        fn propagation_phase_doubles(theta in 0.0f64..=180.0, f in 10.0f64..4000.0) {
            let g = ArrayGeometry::default();
            let w = 2.0 * PI * f;
            let a1 = g.propagation_vector(theta, w);
            let a2 = g.propagation_vector(theta, 2.0 * w);
            for (x, y) in a1.iter().zip(&a2) {
                prop_assert!((x.norm() - 1.0).abs() < 1e-9);
                prop_assert!(wrap_phase(2.0 * x.arg() - y.arg()).abs() < 1e-9);
            }
        }

        #[test]
        fn phase_differences_match_arrival_phases(theta in 0.0f64..=180.0, f in 10.0f64..7900.0) {
            let g = ArrayGeometry::default();
            let w = 2.0 * PI * f;
            let arrival = g.arrival_vector(theta, w);
            let diffs = g.phase_difference_vector(theta, w);
            for k in 1..8 {
                let rel = wrap_phase(arrival[k].arg() - arrival[0].arg());
                prop_assert!(wrap_phase(rel - diffs[k - 1]).abs() < 1e-9);
                prop_assert!(diffs[k - 1] > -PI && diffs[k - 1] <= PI);
            }
        }
    }

    #[test]
    fn aperture_bound_is_attained_at_endfire() {
        let g = ArrayGeometry::default();
        let max = (0..8)
            .flat_map(|k| (0..8).map(move |l| (k, l)))
            .flat_map(|(k, l)| [0.0, 45.0, 180.0].map(|t| g.pair_delay(k, l, t).unwrap().abs()))
            .fold(0.0, f64::max);
        assert!((max - 7.0 * 0.03 / 343.0).abs() < 1e-15);
        assert!((g.aperture_delay() - max).abs() < 1e-15);
    }
}

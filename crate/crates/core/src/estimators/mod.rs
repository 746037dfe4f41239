//! Classical direction-of-arrival estimators.
//!
//! Every estimator scores the directions of a [`SteeringSet`] and returns a
//! [`LikelihoodMap`] with probabilities attached, so results are directly
//! comparable with the classifier output:
//!
//! * [`gcc_phat_loglik`]: PHAT-weighted cross spectra evaluated at the
//!   steering delays, summed over microphone pairs.
//! * [`idoa_loglik`]: wrapped phase-difference residuals per bin.
//! * [`srp_das_loglik`]: delay-and-sum steered response per bin.
//! * [`music_loglik`]: noise-subspace projection of the steering vectors.
//!
//! The per-bin estimators turn each bin's log-likelihoods into a
//! distribution over directions and accumulate those distributions across
//! bins; the direction with the largest accumulated mass wins.

mod gcc;
mod idoa;
mod music;
mod srp;

pub use gcc::gcc_phat_loglik;
pub use idoa::{idoa_bin_logliks, idoa_loglik};
pub use music::{music_loglik, spatial_covariance};
pub use srp::srp_das_loglik;

pub use crate::linalg::{hermitian_eigendecomposition, Eigen};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::SteeringSet;
use crate::signal::FrameSpectra;

/// Tuning shared by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Softmax temperature turning log-likelihoods into probabilities.
    pub sigma: f64,
    /// Frequency band (Hz) scanned by the estimators.
    pub freq_range: (f64, f64),
    /// Number of sources `J` spanning the MUSIC signal subspace.
    pub music_num_sources: usize,
    /// Frames averaged into each MUSIC spatial covariance.
    pub music_num_frames: usize,
    /// Lower bound on `‖∂Δ/∂θ‖` in the IDOA score.
    pub derivative_floor: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            freq_range: (100.0, 7500.0),
            music_num_sources: 1,
            music_num_frames: 4,
            derivative_floor: 1e-3,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        if self.music_num_sources == 0 {
            return Err(Error::Config("MUSIC needs at least one source".into()));
        }
        if self.music_num_frames < self.music_num_sources + 1 {
            return Err(Error::Config(format!(
                "MUSIC averaging count {} must be at least J+1 = {}",
                self.music_num_frames,
                self.music_num_sources + 1
            )));
        }
        if !(self.derivative_floor > 0.0) {
            return Err(Error::Config("derivative floor must be positive".into()));
        }
        Ok(())
    }
}

/// Scores over the steering directions.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMap {
    pub azimuths: Vec<f64>,
    pub logliks: Vec<f64>,
    pub probs: Option<Vec<f64>>,
}

impl LikelihoodMap {
    pub fn new(azimuths: Vec<f64>, logliks: Vec<f64>) -> Self {
        Self {
            azimuths,
            logliks,
            probs: None,
        }
    }
}

/// Softmax of `logliks / sigma` with max subtraction.
pub fn softmax_scores(logliks: &[f64], sigma: f64) -> Vec<f64> {
    let max = logliks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logliks.iter().map(|&l| ((l - max) / sigma).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Attaches `P(θ_i) = softmax(loglik_i / σ)` to a map.
pub fn direction_probabilities(map: &LikelihoodMap, sigma: f64) -> LikelihoodMap {
    LikelihoodMap {
        azimuths: map.azimuths.clone(),
        logliks: map.logliks.clone(),
        probs: Some(softmax_scores(&map.logliks, sigma)),
    }
}

/// Azimuth of the most probable direction; exact ties go to the smaller
/// azimuth. Falls back to the raw scores when no probabilities are attached.
pub fn estimate_direction(map: &LikelihoodMap) -> f64 {
    let scores = map.probs.as_deref().unwrap_or(&map.logliks);
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    map.azimuths[best]
}

/// Accumulates per-bin probability vectors (Σ_ω P(θ|ω)) and normalizes the
/// sum into a distribution.
pub(crate) struct BinAccumulator {
    sums: Vec<f64>,
    bins: usize,
    sigma: f64,
}

impl BinAccumulator {
    pub(crate) fn new(num_directions: usize, sigma: f64) -> Self {
        Self {
            sums: vec![0.0; num_directions],
            bins: 0,
            sigma,
        }
    }

    pub(crate) fn add_bin(&mut self, logliks: &[f64]) {
        for (s, p) in self.sums.iter_mut().zip(softmax_scores(logliks, self.sigma)) {
            *s += p;
        }
        self.bins += 1;
    }

    pub(crate) fn finish(self, azimuths: &[f64]) -> LikelihoodMap {
        let n = self.bins.max(1) as f64;
        let probs = self.sums.iter().map(|s| s / n).collect();
        LikelihoodMap {
            azimuths: azimuths.to_vec(),
            logliks: self.sums,
            probs: Some(probs),
        }
    }
}

pub(crate) fn check_channels(spectra: &FrameSpectra, steering: &SteeringSet) -> Result<()> {
    if spectra.num_channels() != steering.num_mics() {
        return Err(Error::Dimension(format!(
            "spectra have {} channels, steering expects {}",
            spectra.num_channels(),
            steering.num_mics()
        )));
    }
    if spectra.fft_size() != steering.fft_size() {
        return Err(Error::Dimension(format!(
            "spectra use fft size {}, steering expects {}",
            spectra.fft_size(),
            steering.fft_size()
        )));
    }
    Ok(())
}

/// Named estimator, as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GccPhat,
    Idoa,
    Srp,
    Music,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::GccPhat, Method::Idoa, Method::Srp, Method::Music];

    pub fn name(self) -> &'static str {
        match self {
            Method::GccPhat => "gcc",
            Method::Idoa => "idoa",
            Method::Srp => "srp",
            Method::Music => "music",
        }
    }

    /// Frames consumed per estimate.
    pub fn frames_needed(self, cfg: &EstimatorConfig) -> usize {
        match self {
            Method::Music => cfg.music_num_frames,
            _ => 1,
        }
    }

    /// Runs the estimator on consecutive frame spectra. Single-frame methods
    /// use the last frame.
    pub fn run(
        self,
        frames: &[FrameSpectra],
        steering: &SteeringSet,
        cfg: &EstimatorConfig,
    ) -> Result<LikelihoodMap> {
        let last = frames
            .last()
            .ok_or_else(|| Error::Config("no frames supplied".into()))?;
        match self {
            Method::GccPhat => gcc_phat_loglik(last, steering, cfg),
            Method::Idoa => idoa_loglik(last, steering, cfg),
            Method::Srp => srp_das_loglik(last, steering, cfg),
            Method::Music => music_loglik(frames, steering, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gcc" | "gcc-phat" | "gccphat" => Ok(Method::GccPhat),
            "idoa" => Ok(Method::Idoa),
            "srp" | "das" => Ok(Method::Srp),
            "music" => Ok(Method::Music),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

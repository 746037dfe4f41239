use num_complex::Complex64;

use super::{check_channels, BinAccumulator, EstimatorConfig, LikelihoodMap};
use crate::error::Result;
use crate::geometry::SteeringSet;
use crate::signal::FrameSpectra;

/// Delay-and-sum steered response scores accumulated over bins.
///
/// Per bin the score of direction `θ` is the magnitude of the aligned sum
/// `|(1/M)·Σ_m exp(jωτ*_m(θ))·Y_m(ω)|`, where `τ*_m` is the delay of
/// microphone `m` relative to microphone 0.
pub fn srp_das_loglik(
    spectra: &FrameSpectra,
    steering: &SteeringSet,
    cfg: &EstimatorConfig,
) -> Result<LikelihoodMap> {
    check_channels(spectra, steering)?;
    let m = steering.num_mics();
    let nd = steering.num_directions();
    let mut acc = BinAccumulator::new(nd, cfg.sigma);
    let mut logliks = vec![0.0; nd];
    for (pos, &b) in steering.bins().iter().enumerate() {
        let omega = steering.omegas()[pos];
        for (d, score) in logliks.iter_mut().enumerate() {
            let sum: Complex64 = (0..m)
                .map(|mic| {
                    let tau = steering.pair_delay(mic, 0, d);
                    Complex64::from_polar(1.0, omega * tau) * spectra.get(mic, b)
                })
                .sum();
            *score = sum.norm() / m as f64;
        }
        acc.add_bin(&logliks);
    }
    Ok(acc.finish(steering.directions()))
}

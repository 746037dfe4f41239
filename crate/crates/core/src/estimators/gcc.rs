use num_complex::Complex64;

use super::{check_channels, direction_probabilities, EstimatorConfig, LikelihoodMap};
use crate::error::Result;
use crate::geometry::SteeringSet;
use crate::signal::FrameSpectra;

/// Below this `|Y_k|·|Y_l|` a bin carries no phase and contributes zero.
const PHAT_FLOOR: f64 = 1e-12;

/// PHAT-weighted cross spectrum `Y_k·Y_l^* / (|Y_k|·|Y_l|)` at one bin.
pub(crate) fn phat_cross(yk: Complex64, yl: Complex64) -> Complex64 {
    let mag = yk.norm() * yl.norm();
    if mag < PHAT_FLOOR {
        Complex64::new(0.0, 0.0)
    } else {
        yk * yl.conj() / mag
    }
}

/// GCC-PHAT direction scores.
///
/// For each direction the PHAT-weighted cross spectrum of every microphone
/// pair `k < l` is evaluated at the exact steering delay in the frequency
/// domain, `Re Σ_ω G_kl(ω)·exp(jωτ*_kl(θ))`, and the pair sums are averaged
/// by `1/M`. Probabilities use softmax with `cfg.sigma`.
pub fn gcc_phat_loglik(
    spectra: &FrameSpectra,
    steering: &SteeringSet,
    cfg: &EstimatorConfig,
) -> Result<LikelihoodMap> {
    check_channels(spectra, steering)?;
    let m = steering.num_mics();
    let nd = steering.num_directions();
    let mut logliks = vec![0.0; nd];

    for k in 0..m {
        for l in k + 1..m {
            let cross: Vec<Complex64> = steering
                .bins()
                .iter()
                .map(|&b| phat_cross(spectra.get(k, b), spectra.get(l, b)))
                .collect();
            for (d, score) in logliks.iter_mut().enumerate() {
                let tau = steering.pair_delay(k, l, d);
                let sum: f64 = cross
                    .iter()
                    .zip(steering.omegas())
                    .map(|(g, &w)| {
                        let (s, c) = (w * tau).sin_cos();
                        g.re * c - g.im * s
                    })
                    .sum();
                *score += sum;
            }
        }
    }
    for s in &mut logliks {
        *s /= m as f64;
    }
    let map = LikelihoodMap::new(steering.directions().to_vec(), logliks);
    Ok(direction_probabilities(&map, cfg.sigma))
}

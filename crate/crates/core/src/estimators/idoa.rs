use super::{check_channels, BinAccumulator, EstimatorConfig, LikelihoodMap};
use crate::error::{Error, Result};
use crate::geometry::{wrap_phase, SteeringSet};
use crate::signal::FrameSpectra;

/// Per-direction IDOA log-likelihoods for one bin given the measured phase
/// differences `delta` (channels `1..M` relative to channel 0):
/// `−‖wrap(δ − Δ(θ))‖² / max(‖∂Δ/∂θ‖, floor)`.
pub fn idoa_bin_logliks(
    delta: &[f64],
    steering: &SteeringSet,
    bin_pos: usize,
    cfg: &EstimatorConfig,
) -> Result<Vec<f64>> {
    if delta.len() + 1 != steering.num_mics() {
        return Err(Error::Dimension(format!(
            "{} phase differences for a {}-microphone array",
            delta.len(),
            steering.num_mics()
        )));
    }
    let omega = steering.omegas()[bin_pos];
    Ok((0..steering.num_directions())
        .map(|d| {
            let theory = steering.phase_diffs(d, bin_pos);
            let resid: f64 = delta
                .iter()
                .zip(theory)
                .map(|(&m, &t)| wrap_phase(m - t).powi(2))
                .sum();
            let slope = omega
                * steering
                    .delay_slopes(d)
                    .iter()
                    .map(|s| s * s)
                    .sum::<f64>()
                    .sqrt();
            -resid / slope.max(cfg.derivative_floor)
        })
        .collect())
}

/// Instantaneous-direction-of-arrival scores accumulated over bins.
pub fn idoa_loglik(
    spectra: &FrameSpectra,
    steering: &SteeringSet,
    cfg: &EstimatorConfig,
) -> Result<LikelihoodMap> {
    check_channels(spectra, steering)?;
    let m = steering.num_mics();
    let mut acc = BinAccumulator::new(steering.num_directions(), cfg.sigma);
    let mut delta = vec![0.0; m - 1];
    for (pos, &b) in steering.bins().iter().enumerate() {
        let ref_phase = spectra.get(0, b).arg();
        for k in 1..m {
            delta[k - 1] = spectra.get(k, b).arg() - ref_phase;
        }
        acc.add_bin(&idoa_bin_logliks(&delta, steering, pos, cfg)?);
    }
    Ok(acc.finish(steering.directions()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{steering_table, ArrayGeometry, DirectionGrid};

    #[test]
    fn exact_theory_is_the_unique_maximum() {
        let g = ArrayGeometry::default();
        let s = steering_table(&g, &DirectionGrid::default(), 512, (100.0, 7500.0)).unwrap();
        let cfg = EstimatorConfig::default();
        for target in [0usize, 7, 12, 18] {
            for pos in [0usize, 30, 100, 200] {
                let delta = s.phase_diffs(target, pos).to_vec();
                let l = idoa_bin_logliks(&delta, &s, pos, &cfg).unwrap();
                assert_eq!(l[target], 0.0);
                for (d, &v) in l.iter().enumerate() {
                    assert!(v.is_finite());
                    if d != target {
                        assert!(v < 0.0, "dir {d} at bin {pos} ties the target");
                    }
                }
            }
        }
    }

    #[test]
    fn endfire_slope_is_floored() {
        let g = ArrayGeometry::default();
        let s = steering_table(&g, &DirectionGrid::default(), 512, (100.0, 7500.0)).unwrap();
        assert!(s.delay_slopes(0).iter().all(|&v| v.abs() < 1e-18));
        assert!(s.delay_slopes(18).iter().all(|&v| v.abs() < 1e-18));
        let cfg = EstimatorConfig::default();
        let delta = vec![0.3; 7];
        let l = idoa_bin_logliks(&delta, &s, 10, &cfg).unwrap();
        assert!(l.iter().all(|v| v.is_finite()));
    }
}

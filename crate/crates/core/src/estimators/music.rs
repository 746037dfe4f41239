use num_complex::Complex64;

use super::{check_channels, BinAccumulator, EstimatorConfig, LikelihoodMap};
use crate::error::{Error, Result};
use crate::geometry::SteeringSet;
use crate::linalg::{hermitian_eigendecomposition, inner, CMatrix};
use crate::signal::FrameSpectra;

/// Floor on the projector residual `a^H (I − U_s U_s^H) a`.
pub const MUSIC_DENOM_FLOOR: f64 = 1e-6;

/// `(1/T)·Σ_t Y(ω,t)·Y(ω,t)^H` over the given frames at one bin.
pub fn spatial_covariance(
    frames: &[FrameSpectra],
    bin: usize,
    min_frames: usize,
) -> Result<CMatrix> {
    if frames.is_empty() || frames.len() < min_frames {
        return Err(Error::Config(format!(
            "spatial covariance needs at least {} frames, got {}",
            min_frames.max(1),
            frames.len()
        )));
    }
    let m = frames[0].num_channels();
    let mut cov = CMatrix::zeros(m);
    for f in frames {
        if f.num_channels() != m {
            return Err(Error::Dimension("frames disagree on channel count".into()));
        }
        let y = f.snapshot(bin);
        for i in 0..m {
            for j in 0..m {
                cov[(i, j)] += y[i] * y[j].conj();
            }
        }
    }
    let scale = 1.0 / frames.len() as f64;
    for i in 0..m {
        for j in 0..m {
            cov[(i, j)] *= scale;
        }
    }
    Ok(cov)
}

/// Residual of `a` after projecting out the signal subspace spanned by the
/// orthonormal columns `signal`.
pub(crate) fn projector_residual(a: &[Complex64], signal: &[Vec<Complex64>]) -> f64 {
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let captured: f64 = signal.iter().map(|u| inner(u, a).norm_sqr()).sum();
    total - captured
}

/// MUSIC scores accumulated over bins.
///
/// Per bin the top-`J` eigenvectors of the spatial covariance span the
/// signal subspace; each direction scores `1 / a^H (I − U_s U_s^H) a` with
/// the residual floored at [`MUSIC_DENOM_FLOOR`]. `a` is the spectral
/// signature a plane wave from that direction leaves on the array.
pub fn music_loglik(
    frames: &[FrameSpectra],
    steering: &SteeringSet,
    cfg: &EstimatorConfig,
) -> Result<LikelihoodMap> {
    let m = steering.num_mics();
    let j = cfg.music_num_sources;
    if j == 0 || j >= m {
        return Err(Error::Config(format!(
            "MUSIC needs 1 ≤ J < M, got J = {j} for M = {m}"
        )));
    }
    for f in frames {
        check_channels(f, steering)?;
    }
    if frames.len() < cfg.music_num_frames {
        return Err(Error::Config(format!(
            "MUSIC needs {} frames, got {}",
            cfg.music_num_frames,
            frames.len()
        )));
    }

    let nd = steering.num_directions();
    let mut acc = BinAccumulator::new(nd, cfg.sigma);
    let mut logliks = vec![0.0; nd];
    for (pos, &b) in steering.bins().iter().enumerate() {
        let cov = spatial_covariance(frames, b, cfg.music_num_frames)?;
        let eig = hermitian_eigendecomposition(&cov)?;
        let signal: Vec<Vec<Complex64>> = (0..j).map(|i| eig.vector(i)).collect();
        for (d, score) in logliks.iter_mut().enumerate() {
            let a: Vec<Complex64> = steering.prop_vector(d, pos).iter().map(|z| z.conj()).collect();
            *score = 1.0 / projector_residual(&a, &signal).max(MUSIC_DENOM_FLOOR);
        }
        acc.add_bin(&logliks);
    }
    Ok(acc.finish(steering.directions()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use crate::linalg::hermitian_eigendecomposition;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spectra_from_snapshots(snaps: &[Vec<Complex64>]) -> Vec<FrameSpectra> {
        // one populated bin (bin 64), everything else zero
        snaps
            .iter()
            .map(|y| {
                let m = y.len();
                let mut bins = vec![Complex64::new(0.0, 0.0); m * 257];
                for (i, &v) in y.iter().enumerate() {
                    bins[i * 257 + 64] = v;
                }
                FrameSpectra::new(m, bins, 512, 31.25).unwrap()
            })
            .collect()
    }

    #[test]
    fn identical_snapshots_give_outer_product() {
        let y: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let frames = spectra_from_snapshots(&vec![y.clone(); 5]);
        let cov = spatial_covariance(&frames, 64, 4).unwrap();
        let outer = CMatrix::outer(&y);
        let mut diff = cov;
        diff.add_scaled(&outer, -1.0);
        assert!(diff.frobenius_norm() < 1e-12);
    }

    #[test]
    fn zero_content_gives_zero_matrix() {
        let frames = spectra_from_snapshots(&vec![vec![Complex64::new(0.0, 0.0); 8]; 4]);
        let cov = spatial_covariance(&frames, 64, 4).unwrap();
        assert_eq!(cov.frobenius_norm(), 0.0);
        assert!(spatial_covariance(&frames[..2], 64, 4).is_err());
    }

    #[test]
    fn random_covariance_is_hermitian_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let snaps: Vec<Vec<Complex64>> = (0..6)
            .map(|_| {
                (0..8)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let cov = spatial_covariance(&spectra_from_snapshots(&snaps), 64, 4).unwrap();
        assert!(cov.hermitian_defect() < 1e-9);
        let eig = hermitian_eigendecomposition(&cov).unwrap();
        assert!(eig.values.iter().all(|&l| l >= -1e-9));
    }

    #[test]
    fn projector_removes_the_signal_direction() {
        let g = ArrayGeometry::default();
        let a = g.arrival_vector(50.0, 2.0 * std::f64::consts::PI * 2000.0);
        let norm = (8.0f64).sqrt();
        let u: Vec<Complex64> = a.iter().map(|z| z / norm).collect();
        let r = projector_residual(&a, &[u]);
        assert!(r.abs() < 1e-12);
        assert_eq!(1.0 / r.max(MUSIC_DENOM_FLOOR), 1.0 / MUSIC_DENOM_FLOOR);
    }
}

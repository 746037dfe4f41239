//! MVDR and delay-and-sum beamformers, noise-field models and beam-pattern
//! analysis.
//!
//! Weights are designed per frequency. With the crate's sign convention a
//! plane wave from `θ` reaches the array as `S·conj(a(θ))`, where `a` is the
//! propagation vector, so the filter-and-sum output is `H^T·Y` and the
//! response to direction `θ` is `Ψ(θ) = |H^H·a(θ)|²`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::{inner, solve, CMatrix};
use crate::signal::FrameSpectra;

/// Smallest instrumental noise level used when designing MVDR weights.
pub const MIN_INSTRUMENTAL_NOISE: f64 = 1e-4;

/// Noise level as a function of frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpectrum {
    Flat(f64),
    /// Values at multiples of `bin_hz`, held constant past the last bin.
    Sampled { bin_hz: f64, values: Vec<f64> },
}

impl NoiseSpectrum {
    pub fn at(&self, freq_hz: f64) -> f64 {
        match self {
            NoiseSpectrum::Flat(v) => *v,
            NoiseSpectrum::Sampled { bin_hz, values } => {
                let k = (freq_hz / bin_hz).round().max(0.0) as usize;
                values[k.min(values.len() - 1)]
            }
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match self {
            NoiseSpectrum::Flat(v) => v.is_finite() && *v >= 0.0,
            NoiseSpectrum::Sampled { bin_hz, values } => {
                *bin_hz > 0.0 && !values.is_empty() && values.iter().all(|v| v.is_finite() && *v >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} noise spectrum must be finite and non-negative")))
        }
    }
}

/// Diffuse (isotropic) noise of level `N_O` plus uncorrelated sensor noise
/// of amplitude `N_I` on each microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFieldModel {
    pub omni: NoiseSpectrum,
    pub instrumental: NoiseSpectrum,
}

impl Default for NoiseFieldModel {
    /// Flat `N_O = 1`, `N_I = 0.1`.
    fn default() -> Self {
        Self {
            omni: NoiseSpectrum::Flat(1.0),
            instrumental: NoiseSpectrum::Flat(0.1),
        }
    }
}

impl NoiseFieldModel {
    /// Spatially white noise: `Φ_NN = σ²·I`.
    pub fn white(sigma: f64) -> Self {
        Self {
            omni: NoiseSpectrum::Flat(0.0),
            instrumental: NoiseSpectrum::Flat(sigma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.omni.validate("omnidirectional")?;
        self.instrumental.validate("instrumental")
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Noise cross-power spectral matrix at `freq_hz`:
/// `Φ_ij = N_O·sinc(ω·d_ij/v) + N_I²·δ_ij`.
pub fn noise_csd(geom: &ArrayGeometry, model: &NoiseFieldModel, freq_hz: f64) -> CMatrix {
    let m = geom.num_mics();
    let omega = 2.0 * PI * freq_hz;
    let n_o = model.omni.at(freq_hz);
    let n_i = model.instrumental.at(freq_hz);
    let mut phi = CMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            let mut v = n_o * sinc(omega * geom.mic_distance(i, j) / geom.sound_speed());
            if i == j {
                v += n_i * n_i;
            }
            phi[(i, j)] = Complex64::new(v, 0.0);
        }
    }
    phi
}

/// Per-frequency filter coefficients steered at one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    pub steer_deg: f64,
    pub freqs_hz: Vec<f64>,
    /// One `M`-vector per frequency.
    pub weights: Vec<Vec<Complex64>>,
    /// Regularization applied during the design, if any.
    pub warnings: Vec<String>,
}

impl BeamformerWeights {
    pub fn num_mics(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// `max_ω |H^H·a(θ_steer) − 1|`.
    pub fn distortionless_error(&self, geom: &ArrayGeometry) -> f64 {
        self.freqs_hz
            .iter()
            .zip(&self.weights)
            .map(|(&f, h)| {
                let a = geom.propagation_vector(self.steer_deg, 2.0 * PI * f);
                (inner(h, &a) - 1.0).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Frequencies of bins `0..=fft_size/2`.
pub fn bin_frequencies(fft_size: usize, sample_rate: f64) -> Vec<f64> {
    (0..=fft_size / 2)
        .map(|k| k as f64 * sample_rate / fft_size as f64)
        .collect()
}

fn check_steer(steer_deg: f64) -> Result<()> {
    if !(0.0..=180.0).contains(&steer_deg) {
        return Err(Error::Config(format!("steer direction {steer_deg} outside [0, 180]")));
    }
    Ok(())
}

/// Delay-and-sum weights `H = a/M`.
pub fn das_weights(geom: &ArrayGeometry, steer_deg: f64, freqs_hz: &[f64]) -> Result<BeamformerWeights> {
    check_steer(steer_deg)?;
    let m = geom.num_mics() as f64;
    let weights = freqs_hz
        .iter()
        .map(|&f| {
            geom.propagation_vector(steer_deg, 2.0 * PI * f)
                .into_iter()
                .map(|z| z / m)
                .collect()
        })
        .collect();
    Ok(BeamformerWeights {
        steer_deg,
        freqs_hz: freqs_hz.to_vec(),
        weights,
        warnings: Vec::new(),
    })
}

/// MVDR weights `H = Φ_NN⁻¹·a / (a^H·Φ_NN⁻¹·a)`.
///
/// Instrumental noise below [`MIN_INSTRUMENTAL_NOISE`] is raised to that
/// floor so `Φ_NN` stays invertible; should a solve still fail, the
/// diagonal is loaded until it succeeds. Both are noted in `warnings`.
pub fn mvdr_weights(
    geom: &ArrayGeometry,
    steer_deg: f64,
    noise: &NoiseFieldModel,
    freqs_hz: &[f64],
) -> Result<BeamformerWeights> {
    check_steer(steer_deg)?;
    noise.validate()?;
    let mut warnings = Vec::new();
    let mut weights = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let mut model = noise.clone();
        let n_i = noise.instrumental.at(f);
        if n_i < MIN_INSTRUMENTAL_NOISE {
            warnings.push(format!(
                "{f:.1} Hz: instrumental noise {n_i:e} raised to {MIN_INSTRUMENTAL_NOISE:e}"
            ));
            model.instrumental = NoiseSpectrum::Flat(MIN_INSTRUMENTAL_NOISE);
        }
        let mut phi = noise_csd(geom, &model, f);
        let a = geom.propagation_vector(steer_deg, 2.0 * PI * f);
        let mut loading = 1e-10 * phi.frobenius_norm().max(1e-300);
        let x = loop {
            if let Some(x) = solve(&phi, &a) {
                break x;
            }
            warnings.push(format!("{f:.1} Hz: singular noise matrix, diagonal loading {loading:e}"));
            for i in 0..phi.dim() {
                phi[(i, i)] += loading;
            }
            loading *= 10.0;
        };
        let denom = inner(&a, &x);
        weights.push(x.into_iter().map(|z| z / denom).collect());
    }
    Ok(BeamformerWeights {
        steer_deg,
        freqs_hz: freqs_hz.to_vec(),
        weights,
        warnings,
    })
}

/// Power response over a direction axis, one column per design frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub directions_deg: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    /// `psi[d][f]`: gain toward `directions_deg[d]` at `freqs_hz[f]`.
    pub psi: Vec<Vec<f64>>,
}

impl BeamPattern {
    pub fn column(&self, freq_index: usize) -> Vec<f64> {
        self.psi.iter().map(|row| row[freq_index]).collect()
    }

    /// Header `theta_deg,<f1>hz,<f2>hz,...`, one row per direction.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg");
        for f in &self.freqs_hz {
            out.push_str(&format!(",{f}hz"));
        }
        out.push('\n');
        for (d, row) in self.directions_deg.iter().zip(&self.psi) {
            out.push_str(&d.to_string());
            for v in row {
                out.push_str(&format!(",{v:.9}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `Ψ(ω, θ) = |H(ω)^H·a(ω, θ)|²` for `θ = 0, 1, …, 180`.
pub fn beam_pattern(weights: &BeamformerWeights, geom: &ArrayGeometry) -> Result<BeamPattern> {
    if weights.num_mics() != geom.num_mics() {
        return Err(Error::Dimension(format!(
            "weights for {} microphones, geometry has {}",
            weights.num_mics(),
            geom.num_mics()
        )));
    }
    let directions: Vec<f64> = (0..=180).map(f64::from).collect();
    let psi = directions
        .iter()
        .map(|&theta| {
            weights
                .freqs_hz
                .iter()
                .zip(&weights.weights)
                .map(|(&f, h)| inner(h, &geom.propagation_vector(theta, 2.0 * PI * f)).norm_sqr())
                .collect()
        })
        .collect();
    Ok(BeamPattern {
        directions_deg: directions,
        freqs_hz: weights.freqs_hz.clone(),
        psi,
    })
}

/// Main-lobe width of one pattern column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainlobeWidth {
    pub width_deg: f64,
    /// Direction of the pattern maximum.
    pub peak_deg: f64,
    /// No crossing on either side: `width_deg` is the full axis span.
    pub full_span: bool,
}

/// Width between the first crossings of `level_db` (relative to the peak)
/// on each side of the maximum, interpolated linearly between samples.
/// When only one side crosses, as for a beam steered at endfire, the width
/// is twice that side's half-width.
pub fn mainlobe_width(pattern: &BeamPattern, freq_index: usize, level_db: f64) -> Result<MainlobeWidth> {
    if freq_index >= pattern.freqs_hz.len() {
        return Err(Error::Index(format!(
            "frequency index {freq_index} out of range for {} columns",
            pattern.freqs_hz.len()
        )));
    }
    Ok(lobe_width(&pattern.directions_deg, &pattern.column(freq_index), level_db))
}

fn lobe_width(axis: &[f64], psi: &[f64], level_db: f64) -> MainlobeWidth {
    let peak = (0..psi.len()).fold(0, |b, i| if psi[i] > psi[b] { i } else { b });
    let threshold = psi[peak] * 10f64.powf(level_db / 10.0);
    let crossing = |from: usize, to: usize| -> f64 {
        // linear interpolation between a sample above and one below
        let t = (psi[from] - threshold) / (psi[from] - psi[to]);
        axis[from] + t * (axis[to] - axis[from])
    };
    let left = (1..=peak)
        .rev()
        .find(|&i| psi[i - 1] < threshold)
        .map(|i| crossing(i, i - 1));
    let right = (peak..psi.len() - 1)
        .find(|&i| psi[i + 1] < threshold)
        .map(|i| crossing(i, i + 1));
    let p = axis[peak];
    let (width, full_span) = match (left, right) {
        (Some(l), Some(r)) => (r - l, false),
        (Some(l), None) => (2.0 * (p - l), false),
        (None, Some(r)) => (2.0 * (r - p), false),
        (None, None) => (axis[axis.len() - 1] - axis[0], true),
    };
    MainlobeWidth {
        width_deg: width,
        peak_deg: p,
        full_span,
    }
}

/// Filter-and-sum output `H(ω)^T·Y(ω)` for every bin of `spectra`. The
/// weights must be designed at the bin frequencies.
pub fn apply_beamformer(weights: &BeamformerWeights, spectra: &FrameSpectra) -> Result<Vec<Complex64>> {
    let nb = spectra.num_bins();
    if weights.freqs_hz.len() != nb || spectra.num_channels() != weights.num_mics() {
        return Err(Error::Dimension(format!(
            "weights cover {} bins × {} microphones, spectra have {nb} bins × {} channels",
            weights.freqs_hz.len(),
            weights.num_mics(),
            spectra.num_channels()
        )));
    }
    for (k, &f) in weights.freqs_hz.iter().enumerate() {
        if (f - k as f64 * spectra.bin_hz()).abs() > 1e-6 * spectra.bin_hz() {
            return Err(Error::Dimension(format!(
                "weight frequency {f} Hz does not match bin {k} of the spectra"
            )));
        }
    }
    Ok((0..nb)
        .map(|k| {
            weights.weights[k]
                .iter()
                .enumerate()
                .map(|(m, h)| h * spectra.get(m, k))
                .sum()
        })
        .collect())
}

//! Framing and discrete Fourier transforms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Samples per frame: 30 ms at 16 kHz.
pub const FRAME_LEN: usize = 480;
/// Transform length; frames are zero-padded from 480 to 512 samples.
pub const FFT_SIZE: usize = 512;

/// One frame of multichannel audio, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelFrame {
    channels: usize,
    samples: Vec<f32>,
    sample_rate: f64,
}

impl MultichannelFrame {
    /// Builds a frame from `channels × FRAME_LEN` channel-major samples.
    pub fn new(channels: usize, samples: Vec<f32>, sample_rate: f64) -> Result<Self> {
        if channels == 0 || samples.len() != channels * FRAME_LEN {
            return Err(Error::Dimension(format!(
                "frame needs {channels}×{FRAME_LEN} samples, got {}",
                samples.len()
            )));
        }
        Ok(Self {
            channels,
            samples,
            sample_rate,
        })
    }

    pub fn from_channels(channels: &[Vec<f32>], sample_rate: f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(channels.len() * FRAME_LEN);
        for ch in channels {
            if ch.len() != FRAME_LEN {
                return Err(Error::Dimension(format!(
                    "channel has {} samples, expected {FRAME_LEN}",
                    ch.len()
                )));
            }
            samples.extend_from_slice(ch);
        }
        Self::new(channels.len(), samples, sample_rate)
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn channel(&self, m: usize) -> &[f32] {
        &self.samples[m * FRAME_LEN..(m + 1) * FRAME_LEN]
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }
}

/// Splits `M × T` channel rows into consecutive non-overlapping frames.
/// A trailing remainder shorter than a frame is dropped.
pub fn split_frames(signal: &[Vec<f32>], sample_rate: f64) -> Result<Vec<MultichannelFrame>> {
    let Some(first) = signal.first() else {
        return Ok(Vec::new());
    };
    let len = first.len();
    if signal.iter().any(|ch| ch.len() != len) {
        return Err(Error::Dimension("channels have different lengths".into()));
    }
    (0..len / FRAME_LEN)
        .map(|f| {
            let mut samples = Vec::with_capacity(signal.len() * FRAME_LEN);
            for ch in signal {
                samples.extend_from_slice(&ch[f * FRAME_LEN..(f + 1) * FRAME_LEN]);
            }
            MultichannelFrame::new(signal.len(), samples, sample_rate)
        })
        .collect()
}

/// In-place iterative radix-2 FFT. `inverse` uses the positive exponent and
/// scales by `1/n`.
pub fn fft_in_place(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n <= 1 {
        return;
    }

    // bit reversal
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = Complex64::from_polar(1.0, step * k as f64);
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }

    if inverse {
        let scale = 1.0 / n as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

/// Forward transform of a real sequence zero-padded to `n`; returns the
/// full (Hermitian) spectrum of length `n`.
pub fn real_fft(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft_in_place(&mut buf, false);
    buf
}

/// Per-channel half spectra of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpectra {
    channels: usize,
    bins: Vec<Complex64>,
    fft_size: usize,
    bin_hz: f64,
}

impl FrameSpectra {
    /// Wraps precomputed half spectra (`channels × (fft_size/2 + 1)`).
    pub fn new(channels: usize, bins: Vec<Complex64>, fft_size: usize, bin_hz: f64) -> Result<Self> {
        if !fft_size.is_power_of_two() || bins.len() != channels * (fft_size / 2 + 1) {
            return Err(Error::Dimension(format!(
                "{} bins do not form {channels} half spectra of size {fft_size}",
                bins.len()
            )));
        }
        Ok(Self {
            channels,
            bins,
            fft_size,
            bin_hz,
        })
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn channel(&self, m: usize) -> &[Complex64] {
        let nb = self.num_bins();
        &self.bins[m * nb..(m + 1) * nb]
    }

    #[inline]
    pub fn get(&self, m: usize, bin: usize) -> Complex64 {
        self.bins[m * self.num_bins() + bin]
    }

    /// Column of all channels at one bin.
    pub fn snapshot(&self, bin: usize) -> Vec<Complex64> {
        (0..self.channels).map(|m| self.get(m, bin)).collect()
    }
}

/// Zero-pads each channel to [`FFT_SIZE`] and keeps bins `0..=FFT_SIZE/2`.
pub fn dft_forward(frame: &MultichannelFrame) -> FrameSpectra {
    let nb = FFT_SIZE / 2 + 1;
    let mut bins = Vec::with_capacity(frame.num_channels() * nb);
    let mut buf = vec![Complex64::new(0.0, 0.0); FFT_SIZE];
    for m in 0..frame.num_channels() {
        for (dst, &s) in buf.iter_mut().zip(frame.channel(m)) {
            *dst = Complex64::new(s as f64, 0.0);
        }
        buf[FRAME_LEN..].fill(Complex64::new(0.0, 0.0));
        fft_in_place(&mut buf, false);
        bins.extend_from_slice(&buf[..nb]);
    }
    FrameSpectra {
        channels: frame.num_channels(),
        bins,
        fft_size: FFT_SIZE,
        bin_hz: frame.sample_rate() / FFT_SIZE as f64,
    }
}

/// Inverse of [`dft_forward`]: Hermitian-completes each half spectrum and
/// returns `channels` rows of `fft_size` real samples.
pub fn dft_inverse(spectra: &FrameSpectra) -> Vec<Vec<f64>> {
    let n = spectra.fft_size();
    let nb = spectra.num_bins();
    (0..spectra.num_channels())
        .map(|m| {
            let half = spectra.channel(m);
            let mut full = vec![Complex64::new(0.0, 0.0); n];
            full[..nb].copy_from_slice(half);
            for b in nb..n {
                full[b] = half[n - b].conj();
            }
            fft_in_place(&mut full, true);
            full.into_iter().map(|z| z.re).collect()
        })
        .collect()
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f32> {
    (0..n)
        .map(|i| (0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()) as f32)
        .collect()
}

/// Hann-windowed spectra, the front end for the direction estimators.
///
/// Without a taper, leakage from strong narrowband components fills the
/// otherwise empty bins with phase that implies too small a delay, which
/// pulls the estimates toward broadside at high SNR.
pub fn analysis_spectra(frame: &MultichannelFrame) -> FrameSpectra {
    let window = hann_window(FRAME_LEN);
    let samples = frame
        .samples()
        .chunks(FRAME_LEN)
        .flat_map(|ch| ch.iter().zip(&window).map(|(x, w)| x * w))
        .collect();
    let tapered = MultichannelFrame::new(frame.num_channels(), samples, frame.sample_rate())
        .expect("same shape as the input frame");
    dft_forward(&tapered)
}

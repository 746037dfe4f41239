//! Plane-wave (optionally spherical-wave) array simulator and synthetic
//! dataset generation.
//!
//! A scene is one source signal arriving from an azimuth, delayed per
//! microphone with a windowed-sinc fractional delay, plus independent white
//! noise at a requested SNR. Silence scenes contain the noise only.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{cos_deg, ArrayGeometry, DirectionGrid};
use crate::model::FrameSet;
use crate::signal::{fft_in_place, MultichannelFrame, FRAME_LEN};
use crate::wav::{read_wav, write_atomic, encode_wav, WavSpec};

/// Taps of the fractional-delay interpolator.
pub const DELAY_TAPS: usize = 33;
/// Largest accepted delay magnitude in samples.
pub const MAX_DELAY_SAMPLES: f64 = 64.0;
/// Extra samples rendered on each side of the output so that interpolation
/// never reads past the synthesized source.
const RENDER_PAD: usize = 96;

/// Delays `signal` by `delay` seconds with a Hann-windowed sinc
/// interpolator centred on the nearest integer delay. Samples outside the
/// input are treated as zero.
pub fn fractional_delay(signal: &[f32], delay: f64, sample_rate: f64) -> Result<Vec<f32>> {
    let d = delay * sample_rate;
    if !d.is_finite() || d.abs() >= MAX_DELAY_SAMPLES {
        return Err(Error::Range(format!(
            "delay of {d:.3} samples exceeds ±{MAX_DELAY_SAMPLES}"
        )));
    }
    let taps = delay_taps(d);
    let base = d.round() as isize - (DELAY_TAPS as isize - 1) / 2;
    let n = signal.len() as isize;
    Ok((0..n)
        .map(|i| {
            let mut acc = 0.0f64;
            for (k, &h) in taps.iter().enumerate() {
                let src = i - base - k as isize;
                if (0..n).contains(&src) {
                    acc += h * signal[src as usize] as f64;
                }
            }
            acc as f32
        })
        .collect())
}

/// Filter taps `h[k]` for lags `round(d) − 16 + k`.
fn delay_taps(d: f64) -> Vec<f64> {
    let half = (DELAY_TAPS as isize - 1) / 2;
    let width = half as f64 + 1.0;
    let center = d.round() as isize;
    (0..DELAY_TAPS as isize)
        .map(|k| {
            let u = (center - half + k) as f64 - d;
            let w = 0.5 * (1.0 + (PI * u / width).cos());
            w * sinc(u)
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    PinkNoise,
    BandNoise,
    Chirp,
    /// Fundamental at the lower band edge plus eight partials, with vibrato.
    HarmonicStack,
}

impl SourceKind {
    pub const ALL: [SourceKind; 4] = [
        SourceKind::PinkNoise,
        SourceKind::BandNoise,
        SourceKind::Chirp,
        SourceKind::HarmonicStack,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Lower and upper frequency (Hz).
    pub band: (f64, f64),
    /// RMS level of the clean signal at microphone 0.
    pub level: f64,
    pub seed: u64,
}

impl SourceSpec {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi && hi < sample_rate / 2.0) {
            return Err(Error::Config(format!(
                "source band ({lo}, {hi}) must satisfy 0 < lo < hi < {}",
                sample_rate / 2.0
            )));
        }
        if !(self.level > 0.0 && self.level <= 1.0) {
            return Err(Error::Config(format!("source level {} not in (0, 1]", self.level)));
        }
        Ok(())
    }
}

/// Additional copy of the source arriving later from another direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoTap {
    pub delay: f64,
    pub gain: f64,
    pub azimuth: f64,
}

/// `count` taps spaced `spacing` seconds apart whose gains decay by `decay`
/// per tap, arriving from the given azimuths in turn.
pub fn decaying_echoes(count: usize, spacing: f64, decay: f64, azimuths: &[f64]) -> Vec<EchoTap> {
    (0..count)
        .map(|i| EchoTap {
            delay: spacing * (i + 1) as f64,
            gain: decay.powi(i as i32 + 1),
            azimuth: azimuths[i % azimuths.len().max(1)],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    /// Source azimuth in degrees, or `None` for a silence scene.
    pub azimuth: Option<f64>,
    pub source: SourceSpec,
    pub snr_db: f64,
    /// Source distance from the array centre for spherical wavefronts;
    /// `None` renders a plane wave.
    pub nearfield_distance: Option<f64>,
    pub echoes: Vec<EchoTap>,
}

impl SceneSpec {
    pub fn far_field(azimuth: f64, source: SourceSpec, snr_db: f64) -> Self {
        Self {
            azimuth: Some(azimuth),
            source,
            snr_db,
            nearfield_distance: None,
            echoes: Vec::new(),
        }
    }

    pub fn silence(source: SourceSpec, snr_db: f64) -> Self {
        Self {
            azimuth: None,
            source,
            snr_db,
            nearfield_distance: None,
            echoes: Vec::new(),
        }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        self.source.validate(sample_rate)?;
        if !(-10.0..=60.0).contains(&self.snr_db) {
            return Err(Error::Config(format!("SNR {} dB outside [-10, 60]", self.snr_db)));
        }
        if let Some(a) = self.azimuth {
            if !(0.0..=180.0).contains(&a) {
                return Err(Error::Config(format!("azimuth {a} outside [0, 180]")));
            }
        }
        if let Some(r) = self.nearfield_distance {
            if !(r > 0.0) {
                return Err(Error::Config("near-field distance must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Per-microphone delays relative to microphone 0 for a source at
/// `azimuth`. With `distance` set, the source sits that far from the array
/// centre and delays follow exact path lengths.
pub fn source_delays(geom: &ArrayGeometry, azimuth: f64, distance: Option<f64>) -> Vec<f64> {
    match distance {
        None => geom.mic_delays(azimuth),
        Some(r) => {
            let p = geom.mic_positions();
            let centre = p.iter().sum::<f64>() / p.len() as f64;
            let sx = centre - r * cos_deg(azimuth);
            let sy = -r * azimuth.to_radians().sin();
            let dist: Vec<f64> = p.iter().map(|&x| ((x - sx).powi(2) + sy * sy).sqrt()).collect();
            dist.iter().map(|d| (d - dist[0]) / geom.sound_speed()).collect()
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn spectral_noise(len: usize, sample_rate: f64, band: (f64, f64), pink: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = len.next_power_of_two().max(2);
    let mut spec: Vec<Complex64> = (0..n).map(|_| Complex64::new(gaussian(rng), 0.0)).collect();
    fft_in_place(&mut spec, false);
    for (k, z) in spec.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * sample_rate / n as f64;
        let gain = if f >= band.0 && f <= band.1 {
            if pink {
                1.0 / f.sqrt()
            } else {
                1.0
            }
        } else {
            0.0
        };
        *z *= gain;
    }
    fft_in_place(&mut spec, true);
    spec.iter().take(len).map(|z| z.re).collect()
}

/// Source waveform of `len` samples (unnormalized level).
pub fn source_signal(spec: &SourceSpec, len: usize, sample_rate: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.band;
    match spec.kind {
        SourceKind::PinkNoise => spectral_noise(len, sample_rate, spec.band, true, &mut rng),
        SourceKind::BandNoise => spectral_noise(len, sample_rate, spec.band, false, &mut rng),
        SourceKind::Chirp => {
            let phase0 = rng.random_range(0.0..2.0 * PI);
            let dur = len as f64 / sample_rate;
            let rate = (hi - lo) / dur;
            (0..len)
                .map(|i| {
                    let t = i as f64 / sample_rate;
                    (phase0 + 2.0 * PI * (lo * t + 0.5 * rate * t * t)).sin()
                })
                .collect()
        }
        SourceKind::HarmonicStack => {
            let f0 = lo;
            let vib_rate = rng.random_range(4.0..7.0);
            let vib_depth = rng.random_range(0.005..0.02);
            let vib_phase = rng.random_range(0.0..2.0 * PI);
            let partials: Vec<(f64, f64)> = (1..=9)
                .filter(|&k| k as f64 * f0 * (1.0 + vib_depth) <= hi)
                .map(|k| (k as f64, rng.random_range(0.0..2.0 * PI)))
                .collect();
            // instantaneous f0 with sinusoidal vibrato, integrated analytically
            (0..len)
                .map(|i| {
                    let t = i as f64 / sample_rate;
                    let base_phase = 2.0 * PI * f0 * t
                        - f0 * vib_depth / vib_rate
                            * ((2.0 * PI * vib_rate * t + vib_phase).cos() - vib_phase.cos());
                    partials
                        .iter()
                        .map(|&(k, ph)| (k * base_phase + ph).sin() / k)
                        .sum()
                })
                .collect()
        }
    }
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Renders `num_samples` of every channel for a scene; `seed` drives the
/// sensor noise.
pub fn render_signal(
    geom: &ArrayGeometry,
    scene: &SceneSpec,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f32>>> {
    let fs = geom.sample_rate();
    scene.validate(fs)?;
    let m = geom.num_mics();
    let level = scene.source.level;
    let mut clean = vec![vec![0.0f64; num_samples]; m];

    if let Some(az) = scene.azimuth {
        let longest_echo = scene.echoes.iter().map(|e| e.delay).fold(0.0, f64::max);
        let echo_pad = (longest_echo * fs).ceil() as usize;
        let total = num_samples + 2 * RENDER_PAD + echo_pad;
        let src = source_signal(&scene.source, total, fs);
        let src32: Vec<f32> = src.iter().map(|&v| v as f32).collect();
        let mut arrivals = vec![(az, 0.0, 1.0)];
        arrivals.extend(scene.echoes.iter().map(|e| (e.azimuth, e.delay, e.gain)));
        for (arr_az, extra, gain) in arrivals {
            let delays = source_delays(geom, arr_az, scene.nearfield_distance);
            // whole samples of the echo delay shift the crop window; the
            // interpolator only handles the remainder
            let shift = (extra * fs).floor() as usize;
            let rest = extra - shift as f64 / fs;
            for (ch, &tau) in clean.iter_mut().zip(&delays) {
                let delayed = fractional_delay(&src32, tau + rest, fs)?;
                let start = RENDER_PAD + echo_pad - shift;
                for (c, &v) in ch.iter_mut().zip(&delayed[start..start + num_samples]) {
                    *c += gain * v as f64;
                }
            }
        }
        let r0 = rms(&clean[0]);
        if r0 > 0.0 {
            let scale = level / r0;
            for ch in &mut clean {
                for v in ch.iter_mut() {
                    *v *= scale;
                }
            }
        }
    }

    let noise_rms = level / 10f64.powf(scene.snr_db / 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(clean
        .into_iter()
        .map(|mut ch| {
            let noise: Vec<f64> = (0..num_samples).map(|_| gaussian(&mut rng)).collect();
            let scale = noise_rms / rms(&noise).max(1e-300);
            for (c, n) in ch.iter_mut().zip(&noise) {
                *c += scale * n;
            }
            ch.into_iter().map(|v| v as f32).collect()
        })
        .collect())
}

/// One frame of a scene at any azimuth.
pub fn render_scene(geom: &ArrayGeometry, scene: &SceneSpec, seed: u64) -> Result<MultichannelFrame> {
    let chans = render_signal(geom, scene, FRAME_LEN, seed)?;
    MultichannelFrame::from_channels(&chans, geom.sample_rate())
}

/// One frame plus its class label; direction scenes must lie on the grid.
pub fn render_frame(
    geom: &ArrayGeometry,
    grid: &DirectionGrid,
    scene: &SceneSpec,
    seed: u64,
) -> Result<(MultichannelFrame, usize)> {
    let class = match scene.azimuth {
        Some(az) => grid
            .class_of(az)
            .ok_or_else(|| Error::Validation(format!("azimuth {az} is not on the grid")))?,
        None => grid
            .silence_class()
            .ok_or_else(|| Error::Validation("grid has no silence class".into()))?,
    };
    Ok((render_scene(geom, scene, seed)?, class))
}

/// SplitMix64 finalizer, used to derive independent per-entry seeds.
pub fn mix_seed(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPlan {
    pub frames_per_class: usize,
    pub val_frames_per_class: usize,
    pub snr_range: (f64, f64),
    pub seed: u64,
}

impl Default for DatasetPlan {
    fn default() -> Self {
        Self {
            frames_per_class: 2000,
            val_frames_per_class: 400,
            snr_range: (5.0, 30.0),
            seed: 1,
        }
    }
}

impl DatasetPlan {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.snr_range;
        if !(lo <= hi && lo >= -10.0 && hi <= 60.0) {
            return Err(Error::Config(format!("SNR range {lo}:{hi} must lie within [-10, 60]")));
        }
        Ok(())
    }

    fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.frames_per_class,
            Split::Val => self.val_frames_per_class,
        }
    }
}

/// Fully resolved parameters of one dataset frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryPlan {
    pub split: Split,
    pub class: usize,
    pub index: usize,
    pub seed: u64,
    pub scene: SceneSpec,
}

impl EntryPlan {
    pub fn file_name(&self) -> String {
        format!("{}/c{:02}_{:05}.wav", self.split, self.class, self.index)
    }
}

/// Scene parameters for entry `(split, class, index)`; a pure function of
/// the plan seed.
pub fn plan_entry(grid: &DirectionGrid, plan: &DatasetPlan, split: Split, class: usize, index: usize) -> EntryPlan {
    let split_tag = match split {
        Split::Train => 1u64,
        Split::Val => 2u64,
    };
    let seed = mix_seed(
        mix_seed(mix_seed(plan.seed) ^ split_tag) ^ ((class as u64) << 32 | index as u64),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = SourceKind::ALL[rng.random_range(0..SourceKind::ALL.len())];
    let band = match kind {
        SourceKind::HarmonicStack => (rng.random_range(150.0..600.0), 7000.0),
        _ => (rng.random_range(100.0..1000.0), rng.random_range(3000.0..7000.0)),
    };
    let level = rng.random_range(0.05..0.3);
    let (lo, hi) = plan.snr_range;
    let snr_db = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let source = SourceSpec {
        kind,
        band,
        level,
        seed: rng.random(),
    };
    let scene = match grid.azimuth_of(class) {
        Some(az) => SceneSpec::far_field(az, source, snr_db),
        None => SceneSpec::silence(source, snr_db),
    };
    EntryPlan {
        split,
        class,
        index,
        seed: rng.random(),
        scene,
    }
}

/// Entries of one split, class-major.
pub fn plan_split(grid: &DirectionGrid, plan: &DatasetPlan, split: Split) -> Vec<EntryPlan> {
    (0..grid.num_classes())
        .flat_map(|c| (0..plan.count(split)).map(move |i| (c, i)))
        .map(|(c, i)| plan_entry(grid, plan, split, c, i))
        .collect()
}

/// Renders a split in memory with the same 16-bit quantization the WAV
/// files use.
pub fn synthesize_split(
    geom: &ArrayGeometry,
    grid: &DirectionGrid,
    plan: &DatasetPlan,
    split: Split,
) -> Result<FrameSet> {
    plan.validate()?;
    let mut set = FrameSet::new(geom.num_mics(), FRAME_LEN, geom.sample_rate());
    for entry in plan_split(grid, plan, split) {
        let (frame, class) = render_frame(geom, grid, &entry.scene, entry.seed)?;
        set.push_frame(&frame, class)?;
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path relative to the dataset directory.
    pub path: String,
    pub class: usize,
    /// `None` for silence.
    pub azimuth: Option<f64>,
    pub snr_db: f64,
    pub seed: u64,
}

impl ManifestEntry {
    pub fn split(&self) -> Option<Split> {
        if self.path.starts_with("train/") {
            Some(Split::Train)
        } else if self.path.starts_with("val/") {
            Some(Split::Val)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub sample_rate: f64,
    pub frame_len: usize,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "path,class,azimuth_deg,snr_db,seed";

impl DatasetManifest {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            let az = e.azimuth.map_or_else(|| "silence".to_string(), |a| format!("{a}"));
            out.push_str(&format!("{},{},{},{:.4},{}\n", e.path, e.class, az, e.snr_db, e.seed));
        }
        out
    }

    pub fn parse_csv(root: &Path, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MANIFEST_HEADER) {
            return Err(Error::Dataset(format!("manifest header must be `{MANIFEST_HEADER}`")));
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |what: &str| Error::Dataset(format!("manifest line {}: bad {what}", n + 2));
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 5 {
                return Err(bad("field count"));
            }
            entries.push(ManifestEntry {
                path: f[0].to_string(),
                class: f[1].parse().map_err(|_| bad("class"))?,
                azimuth: match f[2] {
                    "silence" => None,
                    a => Some(a.parse().map_err(|_| bad("azimuth"))?),
                },
                snr_db: f[3].parse().map_err(|_| bad("snr"))?,
                seed: f[4].parse().map_err(|_| bad("seed"))?,
            });
        }
        Ok(Self {
            root: root.to_path_buf(),
            sample_rate: 16_000.0,
            frame_len: FRAME_LEN,
            entries,
        })
    }

    /// Reads `dir/manifest.csv`.
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse_csv(dir, &text)
    }

    pub fn class_counts(&self, num_classes: usize, split: Option<Split>) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for e in self.entries.iter().filter(|e| split.is_none() || e.split() == split) {
            if e.class < num_classes {
                counts[e.class] += 1;
            }
        }
        counts
    }

    /// Loads the frames of one split, checking every file against the
    /// geometry. Each file holds one frame.
    pub fn load(&self, geom: &ArrayGeometry, split: Option<Split>) -> Result<FrameSet> {
        let mut set = FrameSet::new(geom.num_mics(), self.frame_len, geom.sample_rate());
        for e in self.entries.iter().filter(|e| split.is_none() || e.split() == split) {
            let path = self.root.join(&e.path);
            let (spec, chans) = read_wav(&path)?;
            if spec.channels as usize != geom.num_mics() || spec.sample_rate as f64 != geom.sample_rate() {
                return Err(Error::Dataset(format!(
                    "{}: {} channels at {} Hz, expected {} at {}",
                    path.display(),
                    spec.channels,
                    spec.sample_rate,
                    geom.num_mics(),
                    geom.sample_rate()
                )));
            }
            if chans[0].len() != self.frame_len {
                return Err(Error::Dataset(format!(
                    "{}: {} samples, expected {}",
                    path.display(),
                    chans[0].len(),
                    self.frame_len
                )));
            }
            let frame = MultichannelFrame::from_channels(&chans, geom.sample_rate())?;
            set.push_frame(&frame, e.class)?;
        }
        Ok(set)
    }
}

/// Writes `train/` and `val/` WAV files plus `manifest.csv` under `out_dir`.
/// Output is staged in a temporary directory and moved into place only
/// when every file was written; on failure the staging directory is
/// removed.
pub fn generate_dataset(
    geom: &ArrayGeometry,
    grid: &DirectionGrid,
    plan: &DatasetPlan,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    plan.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let staging = out_dir.join(format!(".staging-{}", std::process::id()));
    let result = write_dataset(geom, grid, plan, &staging, out_dir);
    let _ = fs::remove_dir_all(&staging);
    result
}

fn write_dataset(
    geom: &ArrayGeometry,
    grid: &DirectionGrid,
    plan: &DatasetPlan,
    staging: &Path,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let spec = WavSpec::pcm16(geom.sample_rate() as u32, geom.num_mics() as u16);
    let mut entries = Vec::new();
    let mut splits = Vec::new();
    for split in [Split::Train, Split::Val] {
        if plan.count(split) == 0 {
            continue;
        }
        let dir = staging.join(split.name());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        splits.push(split);
        for entry in plan_split(grid, plan, split) {
            let chans = render_signal(geom, &entry.scene, FRAME_LEN, entry.seed)?;
            let rel = entry.file_name();
            let (bytes, _) = encode_wav(&spec, &chans)?;
            let path = staging.join(&rel);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            entries.push(ManifestEntry {
                path: rel,
                class: entry.class,
                azimuth: entry.scene.azimuth,
                snr_db: entry.scene.snr_db,
                seed: entry.seed,
            });
        }
    }
    let manifest = DatasetManifest {
        root: out_dir.to_path_buf(),
        sample_rate: geom.sample_rate(),
        frame_len: FRAME_LEN,
        entries,
    };
    for split in [Split::Train, Split::Val] {
        let target = out_dir.join(split.name());
        if target.exists() {
            fs::remove_dir_all(&target).map_err(|e| Error::io(&target, e))?;
        }
    }
    for split in splits {
        let from = staging.join(split.name());
        let to = out_dir.join(split.name());
        fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
    }
    write_atomic(&out_dir.join(MANIFEST_FILE), manifest.to_csv().as_bytes())?;
    Ok(manifest)
}

//! Command-line front end: dataset synthesis, training, evaluation,
//! localization of WAV recordings, estimator comparison and beam-pattern
//! export.
//!
//! [`run`] parses arguments and executes one command, writing results to
//! the given streams and returning the process exit code: 0 on success, 1
//! for usage errors, 2 for bad or incompatible data and 3 for internal
//! failures.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::beam::{beam_pattern, mainlobe_width, mvdr_weights, NoiseFieldModel, NoiseSpectrum};
use crate::error::Error;
use crate::estimators::{estimate_direction, EstimatorConfig, Method};
use crate::geometry::{steering_table, ArrayGeometry, DirectionGrid};
use crate::model::{
    evaluate, load_checkpoint, save_checkpoint, train, FrameSet, Model, ModelConfig, TrainConfig,
    TrainingMeta,
};
use crate::nn::AdamConfig;
use crate::signal::{analysis_spectra, split_frames, FrameSpectra, FFT_SIZE};
use crate::sim::{generate_dataset, DatasetManifest, DatasetPlan, Split};
use crate::tracker::{Tracker, TrackerConfig};
use crate::wav::{read_wav, write_atomic};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Localization accuracy counts an estimate within this many degrees of
/// the truth as correct.
pub const TOLERANCE_DEG: f64 = 10.0;

#[derive(Debug, Parser)]
#[command(name = "sslnet", version, about = "Sound source localization with a linear microphone array")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    All,
}

impl SplitArg {
    fn split(self) -> Option<Split> {
        match self {
            SplitArg::Train => Some(Split::Train),
            SplitArg::Val => Some(Split::Val),
            SplitArg::All => None,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a labelled dataset of single-frame WAV files.
    Simgen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        frames_per_class: usize,
        /// Validation frames per class [default: frames-per-class / 5]
        #[arg(long)]
        val_frames_per_class: Option<usize>,
        /// SNR range in dB, as LO:HI.
        #[arg(long, default_value = "5:30")]
        snr: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Train the frame classifier on a generated dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch metrics CSV [default: <out>.metrics.csv]
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Score a checkpoint on a dataset split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Val)]
        split: SplitArg,
        /// Directory receiving confusion.csv and per_azimuth.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Localize every frame of an 8-channel WAV recording.
    Localize {
        #[arg(long, conflicts_with = "method", required_unless_present = "method")]
        model: Option<PathBuf>,
        /// Classical estimator: gcc, idoa, srp or music.
        #[arg(long)]
        method: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = OnOff::Off)]
        track: OnOff,
        /// Output CSV [default: standard output]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare localization accuracy of several methods on a dataset.
    Compare {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated list of gcc, idoa, srp, music and net.
        #[arg(long, default_value = "gcc,idoa,srp,music")]
        methods: String,
        /// Checkpoint used by the `net` method.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SplitArg::Val)]
        split: SplitArg,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the MVDR beam pattern for a steer direction.
    Beampattern {
        #[arg(long, default_value_t = 0.0)]
        steer: f64,
        /// Comma-separated frequencies in Hz.
        #[arg(long, default_value = "1000,2000,3000,4000")]
        freqs: String,
        #[arg(long)]
        out: PathBuf,
        /// Diffuse noise level N_O.
        #[arg(long, default_value_t = 1.0)]
        omni: f64,
        /// Sensor noise amplitude N_I.
        #[arg(long, default_value_t = 0.1)]
        instrumental: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        level_db: f64,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
    Internal(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Usage(m),
            Error::Index(m) | Error::Statistics(m) => Failure::Internal(m),
            other => Failure::Data(other),
        }
    }
}

impl From<std::fmt::Error> for Failure {
    fn from(e: std::fmt::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Streams a command reports to.
struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn say(&mut self, text: &str) -> CmdResult {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Internal(format!("cannot write output: {e}")))
    }

    fn warn(&mut self, text: &str) {
        let _ = writeln!(self.err, "warning: {text}");
    }
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { out, err };
    let result = match cli.command {
        Command::Simgen {
            out,
            frames_per_class,
            val_frames_per_class,
            snr,
            seed,
        } => cmd_simgen(&mut io, &out, frames_per_class, val_frames_per_class, &snr, seed),
        Command::Train {
            data,
            epochs,
            batch,
            lr,
            seed,
            out,
            metrics,
        } => cmd_train(&mut io, &data, epochs, batch, lr, seed, &out, metrics.as_deref()),
        Command::Eval {
            model,
            data,
            split,
            out_dir,
        } => cmd_eval(&mut io, &model, &data, split, &out_dir),
        Command::Localize {
            model,
            method,
            input,
            track,
            out,
        } => cmd_localize(&mut io, model.as_deref(), method.as_deref(), &input, track == OnOff::On, out.as_deref()),
        Command::Compare {
            data,
            methods,
            model,
            split,
            out,
        } => cmd_compare(&mut io, &data, &methods, model.as_deref(), split, out.as_deref()),
        Command::Beampattern {
            steer,
            freqs,
            out,
            omni,
            instrumental,
            level_db,
        } => cmd_beampattern(&mut io, steer, &freqs, &out, omni, instrumental, level_db),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) => format!("usage error: {m}\n\nRun `sslnet --help` for usage."),
                Failure::Data(e) => format!("error: {e}"),
                Failure::Internal(m) => format!("internal error: {m}"),
            };
            let _ = writeln!(io.err, "{msg}");
            f.code()
        }
    }
}

fn parse_snr(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("--snr expects LO:HI in dB, got `{text}`"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

fn cmd_simgen(
    io: &mut Io,
    out: &Path,
    frames_per_class: usize,
    val_frames_per_class: Option<usize>,
    snr: &str,
    seed: u64,
) -> CmdResult {
    let plan = DatasetPlan {
        frames_per_class,
        val_frames_per_class: val_frames_per_class.unwrap_or(frames_per_class / 5),
        snr_range: parse_snr(snr)?,
        seed,
    };
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let manifest = generate_dataset(&geom, &grid, &plan, out)?;
    let train = manifest.class_counts(grid.num_classes(), Some(Split::Train));
    let val = manifest.class_counts(grid.num_classes(), Some(Split::Val));
    let mut text = format!(
        "wrote {} frames to {}\nclass,azimuth_deg,train,val\n",
        manifest.entries.len(),
        out.display()
    );
    for c in 0..grid.num_classes() {
        let az = grid.azimuth_of(c).map_or_else(|| "silence".into(), |a| a.to_string());
        writeln!(text, "{c},{az},{},{}", train[c], val[c])?;
    }
    io.say(&text)
}

fn load_split(data: &Path, geom: &ArrayGeometry, split: Option<Split>) -> Result<(DatasetManifest, FrameSet), Failure> {
    let manifest = DatasetManifest::read(data)?;
    let set = manifest.load(geom, split)?;
    Ok((manifest, set))
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    io: &mut Io,
    data: &Path,
    epochs: usize,
    batch: usize,
    lr: f64,
    seed: u64,
    out: &Path,
    metrics: Option<&Path>,
) -> CmdResult {
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let (_, train_set) = load_split(data, &geom, Some(Split::Train))?;
    let (_, mut val_set) = load_split(data, &geom, Some(Split::Val))?;
    if val_set.is_empty() {
        io.warn("dataset has no validation frames; reporting metrics on the training set");
        val_set = train_set.clone();
    }
    let cfg = TrainConfig {
        epochs,
        batch_size: batch,
        adam: AdamConfig {
            learning_rate: lr,
            ..Default::default()
        },
        seed,
    };
    let mut model = Model::build(&ModelConfig::default(), seed)?;
    let mut log = String::new();
    let history = train(&mut model, &train_set, &val_set, &grid, &cfg, |m| {
        let line = format!(
            "epoch {:>3}  train_loss {:.4}  val_loss {:.4}  val_acc {:.4}  val_az_std {:.2}\n",
            m.epoch, m.train_loss, m.val_loss, m.val_accuracy, m.val_azimuth_std
        );
        let _ = io.out.write_all(line.as_bytes());
        log.push_str(&line);
    })?;
    let last = history.epochs.last();
    let meta = TrainingMeta {
        epochs,
        seed,
        train_loss: last.map(|m| m.train_loss),
        val_loss: last.map(|m| m.val_loss),
    };
    let metrics_path = metrics.map_or_else(|| out.with_extension("metrics.csv"), Path::to_path_buf);
    save_checkpoint(&mut model, &meta, out)?;
    write_atomic(&metrics_path, history.to_csv().as_bytes())?;
    io.say(&format!(
        "checkpoint {}\nmetrics {}\n",
        out.display(),
        metrics_path.display()
    ))
}

fn cmd_eval(io: &mut Io, model_path: &Path, data: &Path, split: SplitArg, out_dir: &Path) -> CmdResult {
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let (model, _) = load_checkpoint(model_path)?;
    let cfg = model.config();
    if cfg.num_mics != geom.num_mics() || cfg.num_classes != grid.num_classes() {
        return Err(Failure::Data(Error::Dimension(format!(
            "checkpoint expects {} microphones and {} classes",
            cfg.num_mics, cfg.num_classes
        ))));
    }
    let (_, set) = load_split(data, &geom, split.split())?;
    if set.is_empty() {
        return Err(Failure::Data(Error::Dataset("selected split has no frames".into())));
    }
    if set.frame_len() != cfg.frame_len {
        return Err(Failure::Data(Error::Dimension(format!(
            "dataset frames have {} samples, checkpoint expects {}",
            set.frame_len(),
            cfg.frame_len
        ))));
    }
    let report = evaluate(&model, &set, &grid)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let confusion = out_dir.join("confusion.csv");
    let per_azimuth = out_dir.join("per_azimuth.csv");
    write_atomic(&confusion, report.confusion_csv().as_bytes())?;
    write_atomic(&per_azimuth, report.per_azimuth_csv(&grid).as_bytes())?;
    io.say(&format!(
        "frames {}\naccuracy {:.4}\ndirection_accuracy {:.4}\nazimuth_std_deg {:.3}\nadjacent_error_fraction {:.4}\nloss {:.4}\nwrote {} and {}\n",
        report.frames,
        report.frame_accuracy,
        report.direction_accuracy,
        report.azimuth_error_std,
        report.adjacent_error_fraction,
        report.loss.unwrap_or(f64::NAN),
        confusion.display(),
        per_azimuth.display()
    ))
}

/// Window of `n` consecutive spectra ending at frame `i`; near the start it
/// extends forward instead.
fn window(spectra: &[FrameSpectra], i: usize, n: usize) -> &[FrameSpectra] {
    let end = (i + 1).max(n).min(spectra.len());
    &spectra[end.saturating_sub(n)..end]
}

fn parse_method(name: &str, expected: &str) -> Result<Method, Failure> {
    name.parse::<Method>()
        .map_err(|_| Failure::Usage(format!("unknown method `{name}` (expected {expected})")))
}

fn cmd_localize(
    io: &mut Io,
    model_path: Option<&Path>,
    method: Option<&str>,
    input: &Path,
    track: bool,
    out: Option<&Path>,
) -> CmdResult {
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let method = method.map(|m| parse_method(m, "gcc, idoa, srp or music")).transpose()?;
    let model = model_path.map(load_checkpoint).transpose()?.map(|(m, _)| m);
    let (spec, chans) = read_wav(input)?;
    if spec.channels as usize != geom.num_mics() {
        return Err(Failure::Data(Error::Dimension(format!(
            "{} has {} channels, the array has {}",
            input.display(),
            spec.channels,
            geom.num_mics()
        ))));
    }
    if spec.sample_rate as f64 != geom.sample_rate() {
        return Err(Failure::Data(Error::Dimension(format!(
            "{} is sampled at {} Hz, expected {}",
            input.display(),
            spec.sample_rate,
            geom.sample_rate()
        ))));
    }
    let frames = split_frames(&chans, geom.sample_rate())?;
    if frames.is_empty() {
        return Err(Failure::Data(Error::Dataset(format!(
            "{} is shorter than one frame",
            input.display()
        ))));
    }

    let classes: Vec<usize> = match (&model, method) {
        (Some(model), _) => frames
            .iter()
            .map(|f| {
                let probs = model.classify_frame(f)?;
                Ok(argmax(&probs))
            })
            .collect::<Result<_, Error>>()?,
        (None, Some(method)) => {
            let cfg = EstimatorConfig::default();
            let steering = steering_table(&geom, &grid, FFT_SIZE, cfg.freq_range)?;
            let spectra: Vec<FrameSpectra> = frames.iter().map(analysis_spectra).collect();
            let need = method.frames_needed(&cfg);
            if spectra.len() < need {
                return Err(Failure::Data(Error::Dataset(format!(
                    "{method} needs at least {need} frames, the file has {}",
                    spectra.len()
                ))));
            }
            (0..spectra.len())
                .map(|i| {
                    let map = method.run(window(&spectra, i, need), &steering, &cfg)?;
                    let az = estimate_direction(&map);
                    grid.class_of(az)
                        .ok_or_else(|| Error::Index(format!("{az}° is not a grid direction")))
                })
                .collect::<Result<_, Error>>()?
        }
        (None, None) => return Err(Failure::Usage("either --model or --method is required".into())),
    };

    let mut tracker = Tracker::new(TrackerConfig::default())?;
    let mut csv = String::from("frame_index,raw_class,raw_azimuth");
    csv.push_str(if track { ",smoothed_azimuth\n" } else { "\n" });
    for (i, &c) in classes.iter().enumerate() {
        let az = grid.azimuth_of(c);
        let raw = az.map_or_else(|| "silence".to_string(), |a| a.to_string());
        write!(csv, "{i},{c},{raw}")?;
        if track {
            write!(csv, ",{:.3}", tracker.update(az)?)?;
        }
        csv.push('\n');
    }
    let silent = classes.iter().filter(|&&c| grid.azimuth_of(c).is_none()).count();
    let summary = format!(
        "{} frames, modal estimate {}, {} silence\n",
        classes.len(),
        modal_label(&grid, &classes),
        silent
    );
    match out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            io.say(&summary)
        }
        None => {
            io.say(&csv)?;
            let _ = io.err.write_all(summary.as_bytes());
            Ok(())
        }
    }
}

fn argmax(values: &[f32]) -> usize {
    (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b })
}

fn modal_label(grid: &DirectionGrid, classes: &[usize]) -> String {
    let mut counts = vec![0usize; grid.num_classes()];
    for &c in classes {
        counts[c] += 1;
    }
    let mode = (0..counts.len()).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
    grid.azimuth_of(mode)
        .map_or_else(|| "silence".to_string(), |a| format!("{a}°"))
}

enum CompareMethod {
    Classical(Method),
    Net,
}

/// Localization summary of one method over the direction frames of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScore {
    pub method: String,
    pub frames: usize,
    /// Share of frames estimated within [`TOLERANCE_DEG`] of the truth.
    pub accuracy: f64,
    /// Population standard deviation of the azimuth error (degrees) over
    /// frames that produced a direction.
    pub azimuth_std: f64,
}

fn score(method: &str, truth: &[f64], estimates: &[Option<f64>]) -> MethodScore {
    let hits = truth
        .iter()
        .zip(estimates)
        .filter(|(t, e)| e.is_some_and(|e| (e - *t).abs() <= TOLERANCE_DEG + 1e-9))
        .count();
    let errors: Vec<f64> = truth
        .iter()
        .zip(estimates)
        .filter_map(|(t, e)| e.map(|e| e - t))
        .collect();
    let n = errors.len().max(1) as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    MethodScore {
        method: method.to_string(),
        frames: truth.len(),
        accuracy: hits as f64 / truth.len().max(1) as f64,
        azimuth_std: var.sqrt(),
    }
}

/// Scores classical estimators on the direction frames of `set`. Methods
/// that need several frames see each frame together with its predecessors
/// of the same class, standing in for consecutive frames of a stationary
/// source.
pub fn compare_classical(
    geom: &ArrayGeometry,
    grid: &DirectionGrid,
    set: &FrameSet,
    methods: &[Method],
    cfg: &EstimatorConfig,
) -> crate::Result<Vec<MethodScore>> {
    let steering = steering_table(geom, grid, FFT_SIZE, cfg.freq_range)?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); grid.num_classes()];
    for (i, &c) in set.classes().iter().enumerate() {
        if grid.azimuth_of(c).is_some() {
            by_class[c].push(i);
        }
    }
    let mut out = Vec::new();
    for &method in methods {
        let need = method.frames_needed(cfg);
        let (mut truth, mut est) = (Vec::new(), Vec::new());
        for (c, members) in by_class.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            // small sets: average over whatever the class offers
            let mut local = cfg.clone();
            if members.len() < need {
                local.music_num_frames = members.len();
                local.validate().map_err(|_| {
                    Error::Dataset(format!(
                        "{method} needs at least {} frames of class {c}, the set has {}",
                        cfg.music_num_sources + 1,
                        members.len()
                    ))
                })?;
            }
            let need = method.frames_needed(&local);
            let spectra: Vec<FrameSpectra> = members
                .iter()
                .map(|&i| set.frame(i).map(|f| analysis_spectra(&f)))
                .collect::<crate::Result<_>>()?;
            let az = grid.azimuth_of(c).expect("direction class");
            for i in 0..spectra.len() {
                let map = method.run(window(&spectra, i, need), &steering, &local)?;
                truth.push(az);
                est.push(Some(estimate_direction(&map)));
            }
        }
        out.push(score(method.name(), &truth, &est));
    }
    Ok(out)
}

/// Scores the classifier on the direction frames of `set`; frames it calls
/// silence count as misses.
pub fn compare_network(model: &Model, grid: &DirectionGrid, set: &FrameSet) -> crate::Result<MethodScore> {
    let (pred, _) = crate::model::predict_set(model, set)?;
    let (mut truth, mut est) = (Vec::new(), Vec::new());
    for (&t, &p) in set.classes().iter().zip(&pred) {
        if let Some(az) = grid.azimuth_of(t) {
            truth.push(az);
            est.push(grid.azimuth_of(p));
        }
    }
    Ok(score("net", &truth, &est))
}

fn cmd_compare(
    io: &mut Io,
    data: &Path,
    methods: &str,
    model_path: Option<&Path>,
    split: SplitArg,
    out: Option<&Path>,
) -> CmdResult {
    let mut chosen = Vec::new();
    for name in methods.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        chosen.push(match name.to_ascii_lowercase().as_str() {
            "net" | "resnet" => CompareMethod::Net,
            _ => CompareMethod::Classical(parse_method(name, "gcc, idoa, srp, music or net")?),
        });
    }
    if chosen.is_empty() {
        return Err(Failure::Usage("--methods is empty".into()));
    }
    let wants_net = chosen.iter().any(|m| matches!(m, CompareMethod::Net));
    if wants_net && model_path.is_none() {
        return Err(Failure::Usage("method `net` requires --model".into()));
    }
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let model = model_path.map(load_checkpoint).transpose()?.map(|(m, _)| m);
    let (_, set) = load_split(data, &geom, split.split())?;
    let cfg = EstimatorConfig::default();
    let mut rows = Vec::new();
    for m in &chosen {
        rows.push(match m {
            CompareMethod::Classical(method) => compare_classical(&geom, &grid, &set, &[*method], &cfg)?.remove(0),
            CompareMethod::Net => compare_network(model.as_ref().expect("checked above"), &grid, &set)?,
        });
    }
    let mut table = format!("{:<8} {:>8} {:>12} {:>16}\n", "method", "frames", "within_10deg", "azimuth_std_deg");
    let mut csv = String::from("method,frames,within_10deg,azimuth_std_deg\n");
    for r in &rows {
        writeln!(table, "{:<8} {:>8} {:>12.4} {:>16.3}", r.method, r.frames, r.accuracy, r.azimuth_std)?;
        writeln!(csv, "{},{},{:.6},{:.6}", r.method, r.frames, r.accuracy, r.azimuth_std)?;
    }
    if let Some(path) = out {
        write_atomic(path, csv.as_bytes())?;
    }
    io.say(&table)
}

fn parse_freqs(text: &str, nyquist: f64) -> Result<Vec<f64>, Failure> {
    let freqs = text
        .split(',')
        .map(|s| {
            let f: f64 = s
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("bad frequency `{}`", s.trim())))?;
            if !(f > 0.0 && f < nyquist) {
                return Err(Failure::Usage(format!("frequency {f} Hz outside (0, {nyquist})")));
            }
            Ok(f)
        })
        .collect::<Result<Vec<f64>, Failure>>()?;
    Ok(freqs)
}

fn cmd_beampattern(
    io: &mut Io,
    steer: f64,
    freqs: &str,
    out: &Path,
    omni: f64,
    instrumental: f64,
    level_db: f64,
) -> CmdResult {
    if !(0.0..=180.0).contains(&steer) {
        return Err(Failure::Usage(format!("--steer {steer} outside [0, 180]")));
    }
    let geom = ArrayGeometry::default();
    let freqs = parse_freqs(freqs, geom.sample_rate() / 2.0)?;
    let noise = NoiseFieldModel {
        omni: NoiseSpectrum::Flat(omni),
        instrumental: NoiseSpectrum::Flat(instrumental),
    };
    let weights = mvdr_weights(&geom, steer, &noise, &freqs)?;
    for w in &weights.warnings {
        io.warn(w);
    }
    let pattern = beam_pattern(&weights, &geom)?;
    write_atomic(out, pattern.to_csv().as_bytes())?;
    let mut text = format!("wrote {} ({} directions)\n", out.display(), pattern.directions_deg.len());
    for (i, f) in freqs.iter().enumerate() {
        let lobe = mainlobe_width(&pattern, i, level_db)?;
        write!(text, "{f} Hz: {level_db} dB width {:.2} deg", lobe.width_deg)?;
        text.push_str(if lobe.full_span { " (no crossing, full span)\n" } else { "\n" });
    }
    io.say(&text)
}

//! Writes a multichannel WAV recording of a source, reads it back and
//! localizes it frame by frame, with tracking.
//!
//! ```text
//! cargo run --release --example wav_localize
//! ```

use sslnet::estimators::{estimate_direction, EstimatorConfig, Method};
use sslnet::geometry::{steering_table, ArrayGeometry, DirectionGrid};
use sslnet::signal::{analysis_spectra, split_frames, FFT_SIZE, FRAME_LEN};
use sslnet::sim::{render_signal, SceneSpec, SourceKind, SourceSpec};
use sslnet::tracker::{Tracker, TrackerConfig};
use sslnet::wav::{read_wav, write_wav, WavSpec};

fn main() -> sslnet::Result<()> {
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let source = SourceSpec {
        kind: SourceKind::Chirp,
        band: (300.0, 6000.0),
        level: 0.2,
        seed: 1,
    };
    let chans = render_signal(&geom, &SceneSpec::far_field(70.0, source, 20.0), 20 * FRAME_LEN, 2)?;
    let path = std::env::temp_dir().join("sslnet-example.wav");
    let report = write_wav(&path, &WavSpec::pcm16(16000, 8), &chans)?;
    println!("wrote {} ({} clipped samples)", path.display(), report.clipped);

    let (spec, audio) = read_wav(&path)?;
    let frames = split_frames(&audio, spec.sample_rate as f64)?;
    let cfg = EstimatorConfig::default();
    let steering = steering_table(&geom, &grid, FFT_SIZE, cfg.freq_range)?;
    let mut tracker = Tracker::new(TrackerConfig::default())?;
    for (i, frame) in frames.iter().enumerate() {
        let map = Method::Srp.run(&[analysis_spectra(frame)], &steering, &cfg)?;
        let raw = estimate_direction(&map);
        let smooth = tracker.update(Some(raw))?;
        println!("frame {i:>2}: srp {raw:>5.0}°  tracked {smooth:6.1}°");
    }
    Ok(())
}

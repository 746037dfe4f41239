//! Localizes a simulated source with GCC-PHAT, IDOA, SRP and MUSIC.
//!
//! ```text
//! cargo run --release --example classical_doa -- 130
//! ```

use sslnet::estimators::{estimate_direction, EstimatorConfig, Method};
use sslnet::geometry::{steering_table, ArrayGeometry, DirectionGrid};
use sslnet::signal::{analysis_spectra, split_frames, FFT_SIZE, FRAME_LEN};
use sslnet::sim::{render_signal, SceneSpec, SourceKind, SourceSpec};

fn main() -> sslnet::Result<()> {
    let azimuth: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(130.0);
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let cfg = EstimatorConfig::default();
    let steering = steering_table(&geom, &grid, FFT_SIZE, cfg.freq_range)?;

    let source = SourceSpec {
        kind: SourceKind::PinkNoise,
        band: (100.0, 7500.0),
        level: 0.1,
        seed: 3,
    };
    for snr in [0.0, 10.0, 30.0] {
        let scene = SceneSpec::far_field(azimuth, source.clone(), snr);
        let chans = render_signal(&geom, &scene, cfg.music_num_frames * FRAME_LEN, 9)?;
        let spectra: Vec<_> = split_frames(&chans, geom.sample_rate())?
            .iter()
            .map(analysis_spectra)
            .collect();
        print!("SNR {snr:>4.0} dB:");
        for method in Method::ALL {
            let map = method.run(&spectra, &steering, &cfg)?;
            print!("  {method} {:>5.0}°", estimate_direction(&map));
        }
        println!();
    }
    Ok(())
}

//! Designs MVDR weights for an isotropic plus instrumental noise field,
//! prints the mainlobe widths and beamforms a two-source mixture.
//!
//! ```text
//! cargo run --release --example mvdr_beampattern -- 0
//! ```

use sslnet::beam::{
    apply_beamformer, beam_pattern, bin_frequencies, mainlobe_width, mvdr_weights, NoiseFieldModel,
};
use sslnet::geometry::ArrayGeometry;
use sslnet::signal::{dft_forward, MultichannelFrame, FFT_SIZE};
use sslnet::sim::{render_scene, SceneSpec, SourceKind, SourceSpec};

fn energy(spectrum: &[num_complex::Complex64]) -> f64 {
    spectrum.iter().map(|z| z.norm_sqr()).sum()
}

fn main() -> sslnet::Result<()> {
    let steer: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.0);
    let geom = ArrayGeometry::default();
    let noise = NoiseFieldModel::default();

    let freqs = [500.0, 1000.0, 2000.0, 3000.0, 4000.0, 6000.0];
    let weights = mvdr_weights(&geom, steer, &noise, &freqs)?;
    let pattern = beam_pattern(&weights, &geom)?;
    for (i, f) in freqs.iter().enumerate() {
        let w = mainlobe_width(&pattern, i, -3.0)?;
        let note = if w.full_span { " (no -3 dB crossing)" } else { "" };
        println!("{f:>6.0} Hz: -3 dB width {:5.1}° peak at {:.0}°{note}", w.width_deg, w.peak_deg);
    }

    // wanted source at the steer direction, interferer 60° away
    let weights = mvdr_weights(&geom, steer, &noise, &bin_frequencies(FFT_SIZE, geom.sample_rate()))?;
    let interferer = if steer < 90.0 { steer + 60.0 } else { steer - 60.0 };
    let render = |az: f64, seed: u64| -> sslnet::Result<MultichannelFrame> {
        let source = SourceSpec {
            kind: SourceKind::BandNoise,
            band: (1500.0, 4000.0),
            level: 0.1,
            seed,
        };
        render_scene(&geom, &SceneSpec::far_field(az, source, 60.0), seed)
    };
    let wanted = apply_beamformer(&weights, &dft_forward(&render(steer, 1)?))?;
    let other = apply_beamformer(&weights, &dft_forward(&render(interferer, 2)?))?;
    println!(
        "interferer at {interferer:.0}° is {:.1} dB below the steered source",
        10.0 * (energy(&wanted) / energy(&other)).log10()
    );
    Ok(())
}

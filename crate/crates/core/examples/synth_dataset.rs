//! Renders a small labelled dataset to disk (16-bit WAV frames plus
//! `manifest.csv`) and loads it back.
//!
//! ```text
//! cargo run --release --example synth_dataset -- /tmp/sslnet-data
//! ```

use std::path::PathBuf;

use sslnet::geometry::{ArrayGeometry, DirectionGrid};
use sslnet::sim::{generate_dataset, DatasetManifest, DatasetPlan, Split};

fn main() -> sslnet::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sslnet-data"));
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let plan = DatasetPlan {
        frames_per_class: 20,
        val_frames_per_class: 5,
        snr_range: (5.0, 30.0),
        seed: 7,
    };
    let manifest = generate_dataset(&geom, &grid, &plan, &out)?;
    println!("wrote {} frames under {}", manifest.entries.len(), out.display());

    let reread = DatasetManifest::read(&out)?;
    let train = reread.load(&geom, Some(Split::Train))?;
    let val = reread.load(&geom, Some(Split::Val))?;
    println!("train {} frames, val {} frames", train.len(), val.len());
    for e in reread.entries.iter().take(3) {
        println!("  {} class {} snr {:.1} dB", e.path, e.class, e.snr_db);
    }
    Ok(())
}

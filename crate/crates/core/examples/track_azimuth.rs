//! Smooths noisy per-frame classifications of a moving source with the
//! gated Kalman tracker.
//!
//! ```text
//! cargo run --example track_azimuth
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sslnet::geometry::DirectionGrid;
use sslnet::tracker::{track_sequence, TrackerConfig};

fn main() -> sslnet::Result<()> {
    let grid = DirectionGrid::default();
    let silence = grid.silence_class().expect("default grid has silence");
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // source sweeps 40° → 140° over 200 frames; the classifier is right most
    // of the time, sometimes off by one class, rarely wild or silent
    let classes: Vec<usize> = (0..200)
        .map(|i| {
            let truth = (4 + i / 20).min(14);
            match rng.random_range(0..20) {
                0 => rng.random_range(0..19),
                1 => silence,
                2 | 3 => truth + 1,
                4 | 5 => truth - 1,
                _ => truth,
            }
        })
        .collect();
    let smoothed = track_sequence(&grid, &classes, &TrackerConfig::default())?;

    println!("frame  raw   smoothed");
    for (i, (&c, s)) in classes.iter().zip(&smoothed).enumerate().step_by(10) {
        let raw = grid.azimuth_of(c).map_or("  - ".to_string(), |a| format!("{a:4.0}"));
        println!("{i:>5}  {raw}  {s:8.1}");
    }
    Ok(())
}

//! Array geometry basics: per-microphone delays, steering vectors and the
//! direction grid used by the classifier.
//!
//! ```text
//! cargo run --example steering_geometry
//! ```

use std::f64::consts::PI;

use sslnet::geometry::{ArrayGeometry, DirectionGrid};

fn main() -> sslnet::Result<()> {
    let geom = ArrayGeometry::default();
    println!(
        "{} microphones, aperture delay {:.1} µs ({:.2} samples)",
        geom.num_mics(),
        geom.aperture_delay() * 1e6,
        geom.aperture_delay() * geom.sample_rate()
    );

    for theta in [0.0, 45.0, 90.0, 135.0, 180.0] {
        let delays: Vec<String> = geom
            .mic_delays(theta)
            .iter()
            .map(|d| format!("{:+.2}", d * geom.sample_rate()))
            .collect();
        println!("θ = {theta:>5.1}°  delays (samples): {}", delays.join(" "));
    }

    let omega = 2.0 * PI * 2000.0;
    let a = geom.propagation_vector(60.0, omega);
    let phases: Vec<String> = a.iter().map(|z| format!("{:+.3}", z.arg())).collect();
    println!("2 kHz steering phases toward 60°: {}", phases.join(" "));

    let grid = DirectionGrid::default();
    println!(
        "grid: {} directions + silence = {} classes; 110° is class {:?}",
        grid.num_directions(),
        grid.num_classes(),
        grid.class_of(110.0)
    );
    Ok(())
}

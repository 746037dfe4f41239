//! Sound source localization for linear microphone arrays.
//!
//! The crate covers the whole pipeline around an eight-microphone line
//! array: steering geometry, frame spectra, four classical direction
//! estimators, a raw-waveform residual network classifier with its own
//! small training stack, a plane-wave array simulator for building
//! datasets, MVDR beamforming, a Kalman azimuth tracker and 16-bit WAV I/O.

pub mod beam;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod signal;
pub mod sim;
pub mod tracker;
pub mod wav;

pub use error::{Error, Result};

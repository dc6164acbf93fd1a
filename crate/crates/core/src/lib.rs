//! Subwavelength band structure of two-bubble honeycomb crystals and the effective
//! Dirac dynamics of wave-packet envelopes near the Dirac points.

pub mod bands;
pub mod cli;
pub mod dirac;
pub mod error;
pub mod layerpot;
pub mod lattice;
pub mod quasigreen;
pub mod special;
pub mod wavepacket;

pub use error::{Error, Result};

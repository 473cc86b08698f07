//! Design bounds, pulse dynamics and measurement simulation for cold-atom
//! gravimeters built on nth-order Bragg diffraction.
//!
//! The crate is organised by subsystem:
//!
//! * [`atoms`]: species constants (recoil frequency, Bragg bandwidth, resonant chirp).
//! * [`dynamics`]: closed-form multiphoton Bragg formulas and a numerical
//!   momentum-ladder integrator used to check them.
//! * [`requirements`]: the apparatus constraint engine and the optimal-parameter table.
//! * [`interferometer`]: Mach-Zehnder phase model, fringe scans, chirp-rate resonance
//!   search, fringe fitting and thermal contrast.
//! * [`sequencer`]: the three-pulse timing program with its frequency ramp.
//!
//! Interchangeable pieces (pulse envelopes, ladder propagators, species) live in
//! name-keyed [`registry::Registry`] instances and are selected at runtime.
//!
//! All frequencies are angular (rad/s) internally. Chirp rates cross the API in
//! ordinary frequency (Hz/s).

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atoms;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod interferometer;
mod numeric;
pub mod registry;
pub mod requirements;
pub mod sequencer;

pub use error::{Error, Result};

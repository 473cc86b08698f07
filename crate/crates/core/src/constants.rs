//! Physical constants in SI units (CODATA 2018).

use std::f64::consts::PI;

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Standard gravity [m/s²].
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// SI microgal [m/s²].
pub const MICROGAL: f64 = 1e-8;

pub const TWO_PI: f64 = 2.0 * PI;

/// Converts an ordinary frequency [Hz] to angular [rad/s].
#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts an angular frequency [rad/s] to ordinary [Hz].
#[inline]
pub fn angular_to_hz(w: f64) -> f64 {
    w / TWO_PI
}

/// mW/cm² to W/m².
pub const MW_PER_CM2: f64 = 10.0;

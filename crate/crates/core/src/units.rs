//! Unit conversions at the I/O boundary.
//!
//! Internally every frequency is angular, in rad/µs, times are in µs and
//! fields in mG. User-facing values are ordinary frequencies in kHz.

use std::f64::consts::TAU;

/// kHz → rad/µs.
#[inline]
pub fn khz_to_angular(khz: f64) -> f64 {
    TAU * khz * 1e-3
}

/// rad/µs → kHz.
#[inline]
pub fn angular_to_khz(omega: f64) -> f64 {
    omega * 1e3 / TAU
}

/// MHz → rad/µs.
#[inline]
pub fn mhz_to_angular(mhz: f64) -> f64 {
    TAU * mhz
}

/// rad/µs → MHz.
#[inline]
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / TAU
}

/// Gyromagnetic ratio given in MHz/G → rad·µs⁻¹·mG⁻¹.
#[inline]
pub fn gamma_from_mhz_per_gauss(mhz_per_gauss: f64) -> f64 {
    TAU * mhz_per_gauss * 1e-3
}

/// Converts a dephasing rate Γ (rad/µs) into T₂* = 2π/Γ in µs.
#[inline]
pub fn rate_to_t2(rate: f64) -> f64 {
    TAU / rate
}

/// Converts T₂* (µs) into the rate Γ = 2π/T₂*.
#[inline]
pub fn t2_to_rate(t2: f64) -> f64 {
    TAU / t2
}

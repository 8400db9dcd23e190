//! Physical constants and unit conversions used at the I/O boundary.

use std::f64::consts::TAU;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// One atomic unit of the van der Waals coefficient, J·m⁶.
pub const C6_ATOMIC_UNIT: f64 = 9.573e-80;

/// Frequency ν in MHz to angular frequency 2πν in rad/s.
pub fn mhz_to_rad(nu_mhz: f64) -> f64 {
    TAU * nu_mhz * 1e6
}

/// Angular frequency in rad/s to ν = ω/2π in MHz.
pub fn rad_to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// Rate in 1/µs to 1/s.
pub fn per_us_to_per_s(rate: f64) -> f64 {
    rate * 1e6
}

pub fn per_s_to_per_us(rate: f64) -> f64 {
    rate * 1e-6
}

/// Vacuum wavenumber 2π/λ for a wavelength in nm.
pub fn wavenumber_from_nm(lambda_nm: f64) -> f64 {
    TAU / (lambda_nm * 1e-9)
}

pub fn wavelength_nm_from_wavenumber(k: f64) -> f64 {
    TAU / k * 1e9
}

/// Number density in cm⁻³ to m⁻³.
pub fn per_cm3_to_per_m3(n: f64) -> f64 {
    n * 1e6
}

pub fn c6_from_au(c6_au: f64) -> f64 {
    c6_au * C6_ATOMIC_UNIT
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_round_trip() {
        let w = mhz_to_rad(6.07);
        assert!((rad_to_mhz(w) - 6.07).abs() < 1e-12);
        assert!((w - 2.0 * std::f64::consts::PI * 6.07e6).abs() < 1e-6);
    }

    #[test]
    fn wavelength_round_trip() {
        let k = wavenumber_from_nm(780.24);
        assert!((wavelength_nm_from_wavenumber(k) - 780.24).abs() < 1e-9);
    }
}

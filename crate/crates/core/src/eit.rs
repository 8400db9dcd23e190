//! Linear susceptibility of a ladder-type Rydberg EIT medium and the
//! propagation map from χ to optical depth, phase shift and transmission.
//!
//! The medium is a homogeneous 1D slab of length `L`. For a signal field with
//! single-photon detuning `Δs` and a coupling field with Rabi frequency `Ωc`
//! and detuning `Δc`,
//!
//! ```text
//! χ = i χ₀ Γe / (Γe − 2iΔs + |Ωc|² / (γrg − 2i(Δc + Δs)))
//! ```
//!
//! and propagation multiplies the field amplitude by `exp(−OD/2 + iβ)` with
//! `OD = ks L Im χ` and `β = ks L Re χ / 2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::{EPSILON_0, HBAR};
use crate::{Error, Result};

/// Atomic and geometric constants of the medium (SI units, rates in rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Population decay rate Γe of the intermediate state.
    pub gamma_e: f64,
    /// Ground–Rydberg dephasing rate γrg.
    pub gamma_rg: f64,
    /// Atomic number density, m⁻³.
    pub density: f64,
    /// Dipole moment of the signal transition, C·m.
    pub d_ge: f64,
    /// Vacuum wavenumber of the signal light, 1/m.
    pub k_s: f64,
    /// Medium length, m.
    pub length: f64,
    /// Van der Waals coefficient, J·m⁶.
    pub c6: f64,
    /// Replaces the value derived from `density` and `d_ge` when set.
    pub chi0_override: Option<f64>,
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_e", self.gamma_e),
            ("density", self.density),
            ("d_ge", self.d_ge),
            ("k_s", self.k_s),
            ("length", self.length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.gamma_rg.is_finite() && self.gamma_rg >= 0.0) {
            return Err(Error::invalid("gamma_rg", format!("must be finite and >= 0, got {}", self.gamma_rg)));
        }
        if !(self.c6.is_finite() && self.c6 != 0.0) {
            return Err(Error::invalid("c6", "must be finite and nonzero"));
        }
        if let Some(chi0) = self.chi0_override {
            if !(chi0.is_finite() && chi0 > 0.0) {
                return Err(Error::invalid("chi0", format!("must be finite and > 0, got {chi0}")));
            }
        }
        Ok(())
    }

    /// Peak resonant susceptibility χ₀ = 2ϱ|d_ge|²/(ε₀ħΓe), unless overridden.
    pub fn chi0(&self) -> f64 {
        self.chi0_override
            .unwrap_or_else(|| 2.0 * self.density * self.d_ge * self.d_ge / (EPSILON_0 * HBAR * self.gamma_e))
    }

    /// Resonant optical depth without coupling light, `ks L χ₀`.
    pub fn od_max(&self) -> f64 {
        self.k_s * self.length * self.chi0()
    }

    /// Copy with χ₀ fixed to `chi0`.
    pub fn with_chi0(mut self, chi0: f64) -> Self {
        self.chi0_override = Some(chi0);
        self
    }

    /// Copy with the column density ϱL scaled by `factor`, applied to χ₀ at
    /// fixed length. This is the knob used to fine-tune the conditional phase.
    pub fn with_column_density_scaled(self, factor: f64) -> Self {
        let chi0 = self.chi0() * factor;
        match self.chi0_override {
            Some(_) => self.with_chi0(chi0),
            None => MediumParams {
                density: self.density * factor,
                ..self
            },
        }
    }
}

/// One EIT operating point of the coupling and signal fields (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// Coupling Rabi frequency |Ωc|.
    pub omega_c: f64,
    /// Signal single-photon detuning Δs.
    pub delta_s: f64,
    /// Coupling single-photon detuning Δc.
    pub delta_c: f64,
}

impl Drive {
    pub fn new(omega_c: f64, delta_s: f64, delta_c: f64) -> Result<Self> {
        let d = Drive {
            omega_c,
            delta_s,
            delta_c,
        };
        d.validate()?;
        Ok(d)
    }

    /// No coupling light: the bare two-level response at `delta_s`.
    pub fn two_level(delta_s: f64) -> Self {
        Drive {
            omega_c: 0.0,
            delta_s,
            delta_c: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c.is_finite() && self.omega_c >= 0.0) {
            return Err(Error::invalid("omega_c", format!("must be finite and >= 0, got {}", self.omega_c)));
        }
        if !self.delta_s.is_finite() || self.delta_c.is_nan() {
            return Err(Error::invalid("delta", "detunings must be finite"));
        }
        Ok(())
    }

    /// Two-photon detuning Δc + Δs.
    pub fn two_photon_detuning(&self) -> f64 {
        self.delta_c + self.delta_s
    }

    pub fn with_delta_s(self, delta_s: f64) -> Self {
        Drive { delta_s, ..self }
    }

    pub fn with_delta_c(self, delta_c: f64) -> Self {
        Drive { delta_c, ..self }
    }
}

/// Dimensionless complex linear susceptibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Susceptibility(pub Complex64);

impl Susceptibility {
    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }
}

impl std::ops::Sub for Susceptibility {
    type Output = Complex64;

    fn sub(self, rhs: Self) -> Complex64 {
        self.0 - rhs.0
    }
}

/// χ₀ of the medium.
pub fn chi0(medium: &MediumParams) -> f64 {
    medium.chi0()
}

/// Susceptibility of the ladder EIT medium for `drive`.
///
/// Without coupling light this is the two-level response
/// `iχ₀Γe/(Γe − 2iΔs)`. With coupling light, zero dephasing and exact
/// two-photon resonance the EIT term diverges and χ takes its dark-state
/// limit 0. An infinite coupling detuning (as produced by a vanishing
/// excitation distance) removes the EIT term.
pub fn susceptibility(medium: &MediumParams, drive: &Drive) -> Susceptibility {
    let gamma = medium.gamma_e;
    let mut denom = Complex64::new(gamma, -2.0 * drive.delta_s);
    if drive.omega_c > 0.0 {
        let two_photon = drive.two_photon_detuning();
        if two_photon.is_finite() {
            let w = Complex64::new(medium.gamma_rg, -2.0 * two_photon);
            let n = w.norm();
            if n == 0.0 {
                return Susceptibility(Complex64::new(0.0, 0.0));
            }
            // |Ωc|²/w evaluated as (|Ωc|²/|w|)·(w*/|w|) to stay finite for huge |w|.
            denom += (drive.omega_c * drive.omega_c / n) * (w.conj() / n);
        }
    }
    Susceptibility(Complex64::new(0.0, medium.chi0() * gamma) / denom)
}

/// Two-level susceptibility `iχ₀Γe/(Γe − 2iΔs)`.
pub fn two_level_susceptibility(medium: &MediumParams, delta_s: f64) -> Susceptibility {
    susceptibility(medium, &Drive::two_level(delta_s))
}

/// Optical depth, phase shift and intensity transmission of the slab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    pub od: f64,
    /// Phase shift β in rad.
    pub beta: f64,
    pub transmission: f64,
}

/// `OD = ks L Im χ`, `β = ks L Re χ / 2`, `T = exp(−OD)`.
pub fn propagate(medium: &MediumParams, chi: Susceptibility) -> Propagation {
    propagate_over(medium.k_s, medium.length, chi)
}

/// Propagation over an arbitrary length `length` of the same medium.
pub fn propagate_over(k_s: f64, length: f64, chi: Susceptibility) -> Propagation {
    let od = k_s * length * chi.im();
    Propagation {
        od,
        beta: k_s * length * chi.re() / 2.0,
        transmission: (-od).exp(),
    }
}

/// One row of a signal-detuning sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub delta_s: f64,
    pub chi: Susceptibility,
    pub propagation: Propagation,
}

/// Evaluates χ and its propagation at each signal detuning in `delta_s`,
/// keeping `Ωc` and `Δc` of `template`.
pub fn spectrum(medium: &MediumParams, template: &Drive, delta_s: &[f64]) -> Vec<SpectrumPoint> {
    delta_s
        .iter()
        .map(|&ds| {
            let chi = susceptibility(medium, &template.with_delta_s(ds));
            SpectrumPoint {
                delta_s: ds,
                chi,
                propagation: propagate(medium, chi),
            }
        })
        .collect()
}

/// Signal detuning of the EIT transmission maximum (local minimum of Im χ)
/// nearest the two-photon resonance `Δs = −Δc`.
///
/// The search scans `[−Δc − 2Γe, −Δc + 2Γe]` and refines the deepest local
/// minimum by golden section.
pub fn eit_transmission_peak(medium: &MediumParams, omega_c: f64, delta_c: f64) -> Result<f64> {
    let template = Drive {
        omega_c,
        delta_s: 0.0,
        delta_c,
    };
    let im = |ds: f64| susceptibility(medium, &template.with_delta_s(ds)).im();
    let centre = -delta_c;
    let half = 2.0 * medium.gamma_e;
    let n = 800;
    let step = 2.0 * half / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| centre - half + step * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| im(x)).collect();
    let best = (1..n)
        .filter(|&i| ys[i] <= ys[i - 1] && ys[i] <= ys[i + 1])
        .min_by(|&a, &b| (xs[a] - centre).abs().total_cmp(&(xs[b] - centre).abs()))
        .ok_or_else(|| Error::NoRoot("no EIT transmission maximum near two-photon resonance".into()))?;
    Ok(crate::numeric::golden_min(im, xs[best - 1], xs[best + 1], step * 1e-9))
}

/// Coupling detuning Δc that places the EIT transmission maximum at
/// `peak_delta_s`, accounting for the light shift.
pub fn coupling_detuning_for_peak(medium: &MediumParams, omega_c: f64, peak_delta_s: f64) -> Result<f64> {
    let g = |dc: f64| eit_transmission_peak(medium, omega_c, dc).map(|p| p - peak_delta_s).unwrap_or(f64::NAN);
    let half = 1.5 * medium.gamma_e;
    crate::numeric::bisect(g, -peak_delta_s - half, -peak_delta_s + half, 0.0, 1e-6)
        .ok_or_else(|| Error::NoRoot(format!("no coupling detuning puts the EIT peak at {peak_delta_s} rad/s")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::*;
    use proptest::prelude::*;

    pub(crate) fn reference_medium() -> MediumParams {
        MediumParams {
            gamma_e: mhz_to_rad(6.07),
            gamma_rg: per_us_to_per_s(1.2),
            density: per_cm3_to_per_m3(2e12),
            d_ge: 2.54e-29,
            k_s: wavenumber_from_nm(780.24),
            length: 60e-6,
            c6: c6_from_au(2.3e23),
            chi0_override: None,
        }
    }

    #[test]
    fn od_max_of_reference_medium() {
        let m = reference_medium();
        assert!((m.od_max() - 35.0).abs() < 0.1, "{}", m.od_max());
        let dense = MediumParams {
            density: per_cm3_to_per_m3(2.4e12),
            ..m
        };
        assert!((dense.od_max() - 42.0).abs() < 0.5);
    }

    #[test]
    fn empty_medium_has_no_response() {
        let m = reference_medium();
        let tiny = MediumParams { density: 1e-30, ..m };
        assert!(tiny.chi0() < 1e-40);
    }

    #[test]
    fn resonant_two_level_limit() {
        let m = reference_medium();
        let chi = two_level_susceptibility(&m, 0.0);
        assert!(chi.re().abs() < 1e-15);
        assert!((chi.im() - m.chi0()).abs() < 1e-15);
        let p = propagate(&m, chi);
        assert!((p.od - m.od_max()).abs() < 1e-12);
        assert_eq!(p.beta, 0.0);
    }

    #[test]
    fn dark_state_limit_is_zero() {
        let m = MediumParams { gamma_rg: 0.0, ..reference_medium() };
        let d = Drive::new(mhz_to_rad(10.0), mhz_to_rad(-7.0), mhz_to_rad(7.0)).unwrap();
        let chi = susceptibility(&m, &d);
        assert_eq!(chi.value(), Complex64::new(0.0, 0.0));
        let p = propagate(&m, chi);
        assert_eq!((p.od, p.beta, p.transmission), (0.0, 0.0, 1.0));
    }

    #[test]
    fn infinite_coupling_detuning_is_two_level() {
        let m = reference_medium();
        let d = Drive::new(mhz_to_rad(13.0), mhz_to_rad(-15.0), f64::INFINITY).unwrap();
        let chi = susceptibility(&m, &d);
        assert_eq!(chi, two_level_susceptibility(&m, d.delta_s));
        let huge = d.with_delta_c(1e300);
        let chi = susceptibility(&m, &huge);
        assert!((chi - two_level_susceptibility(&m, d.delta_s)).norm() < 1e-15);
    }

    #[test]
    fn negative_rabi_frequency_rejected() {
        assert!(Drive::new(-1.0, 0.0, 0.0).is_err());
        let mut m = reference_medium();
        m.length = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn chi0_override_wins() {
        let m = reference_medium().with_chi0(0.1);
        assert_eq!(m.chi0(), 0.1);
        let scaled = m.with_column_density_scaled(2.0);
        assert!((scaled.chi0() - 0.2).abs() < 1e-15);
        let scaled = reference_medium().with_column_density_scaled(1.5);
        assert!((scaled.chi0() / reference_medium().chi0() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn optimum_transmission_from_im_chi() {
        let m = reference_medium();
        let p = propagate(&m, Susceptibility(Complex64::new(0.0, 2.78e-3)));
        assert!((p.transmission - 0.26).abs() < 0.01);
    }

    #[test]
    fn fig4_peak_lies_near_two_photon_resonance() {
        let m = reference_medium();
        let dc = mhz_to_rad(15.0);
        let peak = eit_transmission_peak(&m, mhz_to_rad(12.5), dc).unwrap();
        assert!((rad_to_mhz(peak) + 15.0).abs() < 1.0);
        let dc = coupling_detuning_for_peak(&m, mhz_to_rad(12.5), mhz_to_rad(-15.0)).unwrap();
        let peak = eit_transmission_peak(&m, mhz_to_rad(12.5), dc).unwrap();
        assert!((rad_to_mhz(peak) + 15.0).abs() < 1e-4);
    }

    fn arb_drive() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (0.0f64..50.0, -80.0f64..80.0, -80.0f64..80.0, 0.0f64..5.0)
    }

    proptest! {
        #[test]
        fn passive_and_bounded((om, ds, dc, g) in arb_drive()) {
            let m = MediumParams { gamma_rg: per_us_to_per_s(g), ..reference_medium() };
            let d = Drive::new(mhz_to_rad(om), mhz_to_rad(ds), mhz_to_rad(dc)).unwrap();
            let chi = susceptibility(&m, &d);
            let chi0 = m.chi0();
            prop_assert!(chi.im() >= 0.0);
            prop_assert!(chi.value().norm() <= chi0 * (1.0 + 1e-12));
            prop_assert!(chi.re().abs() <= chi0 / 2.0 * (1.0 + 1e-12));
        }

        #[test]
        fn weak_coupling_is_continuous(ds in -60.0f64..60.0, dc in -60.0f64..60.0) {
            let m = reference_medium();
            let two = two_level_susceptibility(&m, mhz_to_rad(ds));
            let d = Drive::new(1e-3, mhz_to_rad(ds), mhz_to_rad(dc)).unwrap();
            let weak = susceptibility(&m, &d);
            prop_assert!((weak - two).norm() <= 1e-10 * two.value().norm());
        }

        #[test]
        fn two_level_parity(ds in 0.0f64..100.0) {
            let m = reference_medium();
            let plus = two_level_susceptibility(&m, mhz_to_rad(ds));
            let minus = two_level_susceptibility(&m, mhz_to_rad(-ds));
            prop_assert!((plus.re() + minus.re()).abs() <= 1e-15);
            prop_assert!((plus.im() - minus.im()).abs() <= 1e-15);
        }

        #[test]
        fn od_and_beta_are_unit_free(scale in 0.1f64..10.0, om in 0.0f64..30.0, ds in -40.0f64..40.0) {
            // Rescale all rates by `scale` and the length unit inversely in ks·L.
            let m = reference_medium();
            let d = Drive::new(mhz_to_rad(om), mhz_to_rad(ds), mhz_to_rad(-ds + 0.7)).unwrap();
            let p = propagate(&m, susceptibility(&m, &d));
            let chi0 = m.chi0();
            let ms = MediumParams {
                gamma_e: m.gamma_e * scale,
                gamma_rg: m.gamma_rg * scale,
                k_s: m.k_s * scale,
                length: m.length / scale,
                ..m
            }.with_chi0(chi0);
            let ds_ = Drive { omega_c: d.omega_c * scale, delta_s: d.delta_s * scale, delta_c: d.delta_c * scale };
            let ps = propagate(&ms, susceptibility(&ms, &ds_));
            prop_assert!((p.od - ps.od).abs() <= 1e-9 * (1.0 + p.od.abs()));
            prop_assert!((p.beta - ps.beta).abs() <= 1e-9 * (1.0 + p.beta.abs()));
        }
    }
}

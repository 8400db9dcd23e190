//! Rydberg blockade: the van der Waals shift of the two-photon resonance
//! around a stored excitation, blockade radii, and the conditional optical
//! depth and phase of a target photon in the step-function approximation.
//!
//! A stored excitation at distance `r` shifts the coupling detuning to
//! `Δc(r) = Δc,u + C6/(ħ r⁶)`. Far away the medium shows the unblocked EIT
//! response `χ_u`. Close by it shows the two-level response `χ_b`. The
//! blockade radius is where the real (or imaginary) part of `χ(r)` reaches
//! the arithmetic mean of the two limits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eit::{susceptibility, two_level_susceptibility, Drive, MediumParams, Susceptibility};
use crate::numeric::{bisect, expand_bracket, integrate, scan_roots};
use crate::units::HBAR;
use crate::{Error, Result};

/// Search interval for blockade radii, m.
pub const RADIUS_MIN: f64 = 1e-9;
pub const RADIUS_MAX: f64 = 1e-3;
/// Relative tolerance of the radius root search.
pub const RADIUS_REL_TOL: f64 = 1e-4;

/// Below this fraction of χ₀ a difference `χ_b − χ_u` counts as zero.
const EQUAL_REL: f64 = 1e-9;

/// Shift `C6/(ħ r⁶)` of the coupling detuning at distance `r`, rad/s.
pub fn vdw_shift(medium: &MediumParams, r: f64) -> f64 {
    medium.c6 / (HBAR * r.powi(6))
}

/// Susceptibility at distance `r` from a stored excitation. `r = 0` gives
/// the fully blocked value.
pub fn chi_at_distance(medium: &MediumParams, drive: &Drive, r: f64) -> Susceptibility {
    if r <= 0.0 {
        return chi_blocked(medium, drive);
    }
    susceptibility(medium, &drive.with_delta_c(drive.delta_c + vdw_shift(medium, r)))
}

pub fn chi_unblocked(medium: &MediumParams, drive: &Drive) -> Susceptibility {
    susceptibility(medium, drive)
}

/// Fully blocked susceptibility: the two-level response at the same `Δs`.
pub fn chi_blocked(medium: &MediumParams, drive: &Drive) -> Susceptibility {
    two_level_susceptibility(medium, drive.delta_s)
}

/// Closed-form radius `|4 C6 Δs / ħ Ωc²|^{1/6}`, exact for `γrg = 0`,
/// `Δc,u + Δs = 0` and `|Δs| ≫ Γe`. Infinite without coupling light.
pub fn analytic_radius(medium: &MediumParams, drive: &Drive) -> f64 {
    (4.0 * medium.c6 * drive.delta_s / (HBAR * drive.omega_c * drive.omega_c))
        .abs()
        .powf(1.0 / 6.0)
}

/// Companion of [`analytic_radius`] for the imaginary part, smaller by
/// `(1 + √2)^{1/6}`.
pub fn analytic_radius_im(medium: &MediumParams, drive: &Drive) -> f64 {
    analytic_radius(medium, drive) / (1.0 + 2f64.sqrt()).powf(1.0 / 6.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Re,
    Im,
}

impl Part {
    fn of(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Part::Re => "Re",
            Part::Im => "Im",
        }
    }
}

fn radius_for(part: Part, medium: &MediumParams, drive: &Drive) -> Result<Option<f64>> {
    let chi_u = chi_unblocked(medium, drive).value();
    let chi_b = chi_blocked(medium, drive).value();
    let (pu, pb) = (part.of(chi_u), part.of(chi_b));
    if (pb - pu).abs() <= EQUAL_REL * medium.chi0() {
        return Ok(None);
    }
    let target = 0.5 * (pu + pb);
    let f = |r: f64| part.of(chi_at_distance(medium, drive, r).value()) - target;
    let guess = analytic_radius(medium, drive);
    let guess = if guess.is_finite() && guess > 0.0 { guess } else { 1e-5 };
    let no_crossing = || Error::NoCrossing {
        what: format!("{} χ(r) with the blockade midpoint in [1 nm, 1 mm]", part.name()),
    };
    let (lo, hi) = expand_bracket(f, guess, RADIUS_MIN, RADIUS_MAX).ok_or_else(no_crossing)?;
    if lo == hi {
        return Ok(Some(lo));
    }
    bisect(f, lo, hi, RADIUS_REL_TOL, 0.0).map(Some).ok_or_else(no_crossing)
}

/// Real-part blockade radius `r_b`: `Re χ(r_b) = ½ Re(χ_b + χ_u)`.
pub fn real_blockade_radius(medium: &MediumParams, drive: &Drive) -> Result<f64> {
    radius_for(Part::Re, medium, drive)?.ok_or_else(|| Error::NoCrossing {
        what: "Re χ: blocked and unblocked values coincide".into(),
    })
}

/// Imaginary-part blockade radius `r_b,i`, or `None` when
/// `Im χ_b = Im χ_u` (the ΔOD = 0 operating condition).
pub fn imag_blockade_radius(medium: &MediumParams, drive: &Drive) -> Result<Option<f64>> {
    radius_for(Part::Im, medium, drive)
}

/// Both radii `(r_b, r_b,i)`; fails when either does not exist.
pub fn blockade_radius(medium: &MediumParams, drive: &Drive) -> Result<(f64, f64)> {
    let r_b = real_blockade_radius(medium, drive)?;
    let r_b_im = imag_blockade_radius(medium, drive)?.ok_or_else(|| Error::NoCrossing {
        what: "Im χ: blocked and unblocked values coincide".into(),
    })?;
    Ok((r_b, r_b_im))
}

/// Length of the medium within `r` of a storage position `z_s ∈ [0, L]`.
pub fn blocked_length(r: f64, length: f64, z_s: f64) -> f64 {
    r.min(z_s) + r.min(length - z_s)
}

/// Where the control excitation is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StoragePosition {
    /// At `z_s` metres from the entrance face.
    At(f64),
    /// Deep in the bulk: `L_b = 2 r_b`, regardless of `L`.
    Bulk,
}

impl StoragePosition {
    pub fn centre(medium: &MediumParams) -> Self {
        StoragePosition::At(medium.length / 2.0)
    }
}

/// Conditional response of a target photon to one stored excitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadeResult {
    pub r_b: f64,
    /// `None` when Im χ_b = Im χ_u.
    pub r_b_im: Option<f64>,
    pub chi_u: Susceptibility,
    pub chi_b: Susceptibility,
    /// Storage position, `None` for [`StoragePosition::Bulk`].
    pub z_s: Option<f64>,
    pub l_b: f64,
    pub l_b_im: f64,
    pub delta_od: f64,
    /// Conditional phase Δβ, rad.
    pub delta_beta: f64,
    /// `ks L_b χ₀`.
    pub od_b: f64,
}

/// Step-function conditional ΔOD and Δβ for a stored excitation.
pub fn conditional_response(medium: &MediumParams, drive: &Drive, position: StoragePosition) -> Result<BlockadeResult> {
    medium.validate()?;
    drive.validate()?;
    let r_b = real_blockade_radius(medium, drive)?;
    let r_b_im = imag_blockade_radius(medium, drive)?;
    let chi_u = chi_unblocked(medium, drive);
    let chi_b = chi_blocked(medium, drive);
    let (z_s, l_b, l_b_im) = match position {
        StoragePosition::At(z) => {
            if !(0.0..=medium.length).contains(&z) {
                return Err(Error::invalid("z_s", format!("must lie in [0, L], got {z}")));
            }
            let l_b_im = r_b_im.map_or(0.0, |r| blocked_length(r, medium.length, z));
            (Some(z), blocked_length(r_b, medium.length, z), l_b_im)
        }
        StoragePosition::Bulk => (None, 2.0 * r_b, r_b_im.map_or(0.0, |r| 2.0 * r)),
    };
    let diff = chi_b - chi_u;
    let delta_od = if r_b_im.is_some() { medium.k_s * l_b_im * diff.im } else { 0.0 };
    Ok(BlockadeResult {
        r_b,
        r_b_im,
        chi_u,
        chi_b,
        z_s,
        l_b,
        l_b_im,
        delta_od,
        delta_beta: medium.k_s * l_b * diff.re / 2.0,
        od_b: medium.k_s * l_b * medium.chi0(),
    })
}

/// Conditional ΔOD and Δβ from integrating `χ(|z − z_s|) − χ_u` over the
/// medium, without the step approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactConditional {
    pub delta_od: f64,
    pub delta_beta: f64,
}

pub fn exact_conditional(medium: &MediumParams, drive: &Drive, z_s: f64) -> Result<ExactConditional> {
    if !(0.0..=medium.length).contains(&z_s) {
        return Err(Error::invalid("z_s", format!("must lie in [0, L], got {z_s}")));
    }
    let chi_u = chi_unblocked(medium, drive).value();
    let d = |z: f64| chi_at_distance(medium, drive, (z - z_s).abs()).value() - chi_u;
    let tol = 1e-9 * medium.chi0() * medium.length;
    let re = integrate(&|z| d(z).re, 0.0, z_s, tol) + integrate(&|z| d(z).re, z_s, medium.length, tol);
    let im = integrate(&|z| d(z).im, 0.0, z_s, tol) + integrate(&|z| d(z).im, z_s, medium.length, tol);
    Ok(ExactConditional {
        delta_od: medium.k_s * im,
        delta_beta: medium.k_s * re / 2.0,
    })
}

/// Row of a storage-position sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub z_s: f64,
    pub l_b: f64,
    pub delta_od: f64,
    pub delta_beta: f64,
}

/// Step-approximation response at each storage position in `z_s`.
pub fn storage_sweep(medium: &MediumParams, drive: &Drive, z_s: &[f64]) -> Result<Vec<SweepPoint>> {
    z_s.iter()
        .map(|&z| {
            conditional_response(medium, drive, StoragePosition::At(z)).map(|r| SweepPoint {
                z_s: z,
                l_b: r.l_b,
                delta_od: r.delta_od,
                delta_beta: r.delta_beta,
            })
        })
        .collect()
}

/// Signal detuning at which the EIT and two-level transmission curves cross
/// (`Im χ_u = Im χ_b`) with `Ωc` and `Δc` of `template` held fixed. Tuning
/// `Δs` to this point zeroes ΔOD.
///
/// All crossings in `window` (rad/s) are located and the one nearest
/// `template.delta_s` is returned.
pub fn crossing_two_photon_detuning(medium: &MediumParams, template: &Drive, window: (f64, f64)) -> Result<f64> {
    let roots = crossings(medium, template, window);
    roots
        .into_iter()
        .min_by(|a, b| (a - template.delta_s).abs().total_cmp(&(b - template.delta_s).abs()))
        .ok_or_else(|| Error::NoCrossing {
            what: "EIT and two-level transmission curves in the detuning window".into(),
        })
}

/// Every isolated crossing of the EIT and two-level absorption curves in `window`.
pub fn crossings(medium: &MediumParams, template: &Drive, window: (f64, f64)) -> Vec<f64> {
    let f = |ds: f64| {
        let d = template.with_delta_s(ds);
        let diff = chi_unblocked(medium, &d).im() - chi_blocked(medium, &d).im();
        if diff.abs() <= EQUAL_REL * medium.chi0() {
            0.0
        } else {
            diff
        }
    };
    let n = 4000;
    let tol = 1e-9 * medium.gamma_e;
    // Identically equal curves produce zeros everywhere, not isolated crossings.
    let probe = crate::numeric::linspace(window.0, window.1, 17);
    if probe.iter().all(|&x| f(x) == 0.0) {
        return Vec::new();
    }
    scan_roots(f, window.0, window.1, n, tol)
}

/// Default search window: `Δs` within `4 Γe` of the template.
pub fn default_crossing_window(medium: &MediumParams, template: &Drive) -> (f64, f64) {
    (template.delta_s - 4.0 * medium.gamma_e, template.delta_s + 4.0 * medium.gamma_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::*;
    use proptest::prelude::*;

    fn reference_medium() -> MediumParams {
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

    fn reference_drive() -> Drive {
        let ds = mhz_to_rad(-15.194);
        Drive::new(mhz_to_rad(13.464), ds, -ds + mhz_to_rad(-1.262)).unwrap()
    }

    #[test]
    fn limits_of_distance_dependence() {
        let m = reference_medium();
        let d = reference_drive();
        let near = chi_at_distance(&m, &d, 1e-9);
        assert!((near - chi_blocked(&m, &d)).norm() < 1e-12 * m.chi0());
        let far = chi_at_distance(&m, &d, 1e-3);
        assert!((far - chi_unblocked(&m, &d)).norm() < 1e-9 * m.chi0());
        assert_eq!(chi_at_distance(&m, &d, 0.0), chi_blocked(&m, &d));
    }

    #[test]
    fn radius_is_midpoint() {
        let m = reference_medium();
        let d = reference_drive();
        let r = real_blockade_radius(&m, &d).unwrap();
        let mid = 0.5 * (chi_blocked(&m, &d).re() + chi_unblocked(&m, &d).re());
        let lo = chi_at_distance(&m, &d, r * (1.0 - 2e-4)).re() - mid;
        let hi = chi_at_distance(&m, &d, r * (1.0 + 2e-4)).re() - mid;
        assert!(lo.signum() != hi.signum());
        assert!((r - 16e-6).abs() < 1e-6, "{r}");
    }

    #[test]
    fn monotone_tails() {
        let m = reference_medium();
        let d = reference_drive();
        let r_b = real_blockade_radius(&m, &d).unwrap();
        let chi_b = chi_blocked(&m, &d).value();
        let chi_u = chi_unblocked(&m, &d).value();
        let inner = crate::numeric::geomspace(r_b / 200.0, r_b / 2.0, 200);
        for w in inner.windows(2) {
            let a = (chi_at_distance(&m, &d, w[0]).value() - chi_b).norm();
            let b = (chi_at_distance(&m, &d, w[1]).value() - chi_b).norm();
            assert!(a <= b * (1.0 + 1e-12), "inner tail at {}", w[0]);
        }
        let outer = crate::numeric::geomspace(2.0 * r_b, 200.0 * r_b, 200);
        for w in outer.windows(2) {
            let a = (chi_at_distance(&m, &d, w[0]).value() - chi_u).norm();
            let b = (chi_at_distance(&m, &d, w[1]).value() - chi_u).norm();
            assert!(b <= a * (1.0 + 1e-12), "outer tail at {}", w[0]);
        }
    }

    #[test]
    fn no_coupling_no_radius() {
        let m = reference_medium();
        let d = Drive::two_level(mhz_to_rad(-15.0));
        assert!(matches!(real_blockade_radius(&m, &d), Err(Error::NoCrossing { .. })));
        assert!(matches!(blockade_radius(&m, &d), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn analytic_limit() {
        let m = MediumParams { gamma_rg: 0.0, ..reference_medium() };
        for factor in [10.0, 20.0] {
            let ds = -factor * m.gamma_e;
            let d = Drive::new(mhz_to_rad(13.0), ds, -ds).unwrap();
            let (r_b, r_b_im) = blockade_radius(&m, &d).unwrap();
            let a = analytic_radius(&m, &d);
            assert!((r_b / a - 1.0).abs() < 0.02, "{factor}: {}", r_b / a);
            let ratio = (1.0 + 2f64.sqrt()).powf(1.0 / 6.0);
            assert!((r_b / r_b_im / ratio - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn doubling_c6_scales_analytic_radius() {
        let m = reference_medium();
        let d = reference_drive();
        let m2 = MediumParams { c6: 2.0 * m.c6, ..m };
        let ratio = analytic_radius(&m2, &d) / analytic_radius(&m, &d);
        assert!((ratio - 2f64.powf(1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn blocked_length_geometry() {
        assert_eq!(blocked_length(10.0, 60.0, 30.0), 20.0);
        assert_eq!(blocked_length(10.0, 60.0, 0.0), 10.0);
        assert_eq!(blocked_length(10.0, 60.0, 5.0), 15.0);
        assert_eq!(blocked_length(50.0, 60.0, 30.0), 60.0);
    }

    #[test]
    fn centre_storage_matches_bulk_for_long_media() {
        let m = reference_medium();
        let d = reference_drive();
        let centre = conditional_response(&m, &d, StoragePosition::centre(&m)).unwrap();
        let bulk = conditional_response(&m, &d, StoragePosition::Bulk).unwrap();
        assert_eq!(centre.l_b, 2.0 * centre.r_b);
        assert_eq!(centre.delta_beta, bulk.delta_beta);
        assert!(bulk.z_s.is_none());
        assert!(conditional_response(&m, &d, StoragePosition::At(-1e-6)).is_err());
    }

    #[test]
    fn equal_absorption_gives_zero_delta_od() {
        let m = reference_medium();
        let d = reference_drive();
        let ds = d.delta_s;
        let om2 = d.omega_c * d.omega_c;
        let (g, gr) = (m.gamma_e, m.gamma_rg);
        let dcu = -ds + (om2 * g + gr * (g * g - 4.0 * ds * ds)) / (8.0 * g * ds);
        let d = d.with_delta_c(dcu);
        for z in [0.0, 10e-6, 30e-6, 60e-6] {
            let r = conditional_response(&m, &d, StoragePosition::At(z)).unwrap();
            assert_eq!(r.delta_od, 0.0);
            assert!(r.r_b_im.is_none());
        }
    }

    #[test]
    fn step_approximation_within_ten_percent() {
        let m = reference_medium();
        let d = reference_drive();
        let step = conditional_response(&m, &d, StoragePosition::centre(&m)).unwrap();
        let exact = exact_conditional(&m, &d, m.length / 2.0).unwrap();
        assert!((exact.delta_beta / step.delta_beta - 1.0).abs() < 0.1, "{} vs {}", exact.delta_beta, step.delta_beta);
    }

    #[test]
    fn exact_integral_oracle_by_trapezoid() {
        let m = reference_medium();
        let d = reference_drive();
        let z_s = 20e-6;
        let exact = exact_conditional(&m, &d, z_s).unwrap();
        let chi_u = chi_unblocked(&m, &d).value();
        let n = 200_000;
        let h = m.length / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let z = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * (chi_at_distance(&m, &d, (z - z_s).abs()).value() - chi_u).re;
        }
        let trap = m.k_s * acc * h / 2.0;
        assert!((trap - exact.delta_beta).abs() < 1e-6 * exact.delta_beta.abs());
    }

    #[test]
    fn fig4_crossing() {
        let m = reference_medium();
        let om = mhz_to_rad(12.5);
        let dc = crate::eit::coupling_detuning_for_peak(&m, om, mhz_to_rad(-15.0)).unwrap();
        let template = Drive::new(om, mhz_to_rad(-15.0), dc).unwrap();
        let x = crossing_two_photon_detuning(&m, &template, default_crossing_window(&m, &template)).unwrap();
        assert!((rad_to_mhz(x) + 17.0).abs() < 1.0, "{}", rad_to_mhz(x));

        // The closed-form ΔOD = 0 coupling detuning at the crossing reproduces Δc.
        let (g, gr) = (m.gamma_e, m.gamma_rg);
        let dcu = -x + (om * om * g + gr * (g * g - 4.0 * x * x)) / (8.0 * g * x);
        assert!((dcu - dc).abs() < 1e-6 * dc.abs());
    }

    #[test]
    fn identical_curves_have_no_crossing() {
        let m = reference_medium();
        let t = Drive::two_level(mhz_to_rad(-15.0));
        let w = default_crossing_window(&m, &t);
        assert!(matches!(crossing_two_photon_detuning(&m, &t, w), Err(Error::NoCrossing { .. })));
    }

    proptest! {
        #[test]
        fn blocked_length_bounds(r in 0.0f64..100.0, l in 1.0f64..100.0, frac in 0.0f64..=1.0) {
            let lb = blocked_length(r, l, frac * l);
            prop_assert!(lb >= 0.0);
            prop_assert!(lb <= (2.0 * r).min(l) + 1e-12);
        }
    }
}

//! Operating point of the gate: Δβ = π and ΔOD = 0 at maximal target
//! transmission.
//!
//! ΔOD = 0 fixes the unblocked coupling detuning in closed form
//! ([`delta_od_zero_detuning`]). What remains is minimizing `Im χ_b` over
//! `(Δs, Ωc)` subject to Δβ = π with `L_b = 2 r_b`. [`analytic_optimum`]
//! evaluates the Lagrange-multiplier solution, [`brute_force_optimum`]
//! searches a grid and serves as its oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::blockade::{chi_blocked, chi_unblocked, real_blockade_radius};
use crate::eit::{propagate, Drive, MediumParams};
use crate::numeric::geomspace;
use crate::units::HBAR;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// rad/s, sign opposite to C6.
    pub delta_s: f64,
    pub omega_c: f64,
    /// Unblocked coupling detuning Δc,u, rad/s.
    pub delta_cu: f64,
    pub zeta: f64,
    /// `Im χ_b = Im χ_u`.
    pub im_chi_b: f64,
    /// `exp(−ks L Im χ_u)`.
    pub predicted_transmission: f64,
}

impl OperatingPoint {
    pub fn drive(&self) -> Drive {
        Drive {
            omega_c: self.omega_c,
            delta_s: self.delta_s,
            delta_c: self.delta_cu,
        }
    }

    /// Two-photon detuning Δc,u + Δs.
    pub fn two_photon_detuning(&self) -> f64 {
        self.delta_cu + self.delta_s
    }
}

/// `ζ = (2/7) |C6/ħγrg|^{1/7} (3χ₀ks/π)^{6/7}`; infinite for `γrg = 0`.
pub fn zeta(medium: &MediumParams) -> f64 {
    2.0 / 7.0
        * (medium.c6 / (HBAR * medium.gamma_rg)).abs().powf(1.0 / 7.0)
        * (3.0 * medium.chi0() * medium.k_s / PI).powf(6.0 / 7.0)
}

/// Unblocked coupling detuning for which `Im χ_b = Im χ_u`:
/// `Δc,u = −Δs + [Ωc²Γe + γrg(Γe² − 4Δs²)] / (8ΓeΔs)`.
pub fn delta_od_zero_detuning(medium: &MediumParams, delta_s: f64, omega_c: f64) -> f64 {
    let (g, gr) = (medium.gamma_e, medium.gamma_rg);
    -delta_s + (omega_c * omega_c * g + gr * (g * g - 4.0 * delta_s * delta_s)) / (8.0 * g * delta_s)
}

fn point(medium: &MediumParams, delta_s: f64, omega_c: f64, zeta: f64) -> OperatingPoint {
    let delta_cu = delta_od_zero_detuning(medium, delta_s, omega_c);
    let drive = Drive {
        omega_c,
        delta_s,
        delta_c: delta_cu,
    };
    let chi_u = chi_unblocked(medium, &drive);
    OperatingPoint {
        delta_s,
        omega_c,
        delta_cu,
        zeta,
        im_chi_b: chi_blocked(medium, &drive).im(),
        predicted_transmission: propagate(medium, chi_u).transmission,
    }
}

/// Closed-form optimum:
/// `Δs = ½Γe(ζ + √(ζ² − 1)) sgn(−C6)`, `Ωc² = 6γrg(4Δs² + Γe²)/Γe`.
pub fn analytic_optimum(medium: &MediumParams) -> Result<OperatingPoint> {
    medium.validate()?;
    let z = zeta(medium);
    if !z.is_finite() {
        return Err(Error::Infeasible("γrg = 0 places the optimum at infinite detuning".into()));
    }
    if z < 1.0 {
        return Err(Error::Infeasible(format!("ζ = {z:.4} < 1: Δβ = π and ΔOD = 0 cannot hold together")));
    }
    let g = medium.gamma_e;
    let delta_s = 0.5 * g * (z + (z * z - 1.0).sqrt()) * (-medium.c6).signum();
    let omega_c = (6.0 * medium.gamma_rg * (4.0 * delta_s * delta_s + g * g) / g).sqrt();
    let mut op = point(medium, delta_s, omega_c, z);
    // Closed form of the same quantity, exact at the optimum.
    op.im_chi_b = medium.chi0() * g / (4.0 * z * delta_s.abs());
    Ok(op)
}

/// Conditional phase with `L_b = 2 r_b` at `(Δs, Ωc)` on the ΔOD = 0 surface.
pub fn bulk_delta_beta(medium: &MediumParams, delta_s: f64, omega_c: f64) -> Result<f64> {
    let drive = Drive {
        omega_c,
        delta_s,
        delta_c: delta_od_zero_detuning(medium, delta_s, omega_c),
    };
    let r_b = real_blockade_radius(medium, &drive)?;
    let diff = chi_blocked(medium, &drive) - chi_unblocked(medium, &drive);
    Ok(medium.k_s * r_b * diff.re)
}

/// Grid for [`brute_force_optimum`]. Ranges are in units of Γe; `Δs` takes
/// the sign opposite to C6. Both axes are logarithmic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub delta_s_min: f64,
    pub delta_s_max: f64,
    pub n_delta_s: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    /// Accepted shortfall of a row's peak `|Δβ|` below π, rad.
    pub beta_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            delta_s_min: 0.5,
            delta_s_max: 10.0,
            n_delta_s: 200,
            omega_min: 0.02,
            omega_max: 5.0,
            n_omega: 200,
            beta_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct RowPeak {
    delta_s: f64,
    omega_c: f64,
    abs_beta: f64,
}

/// Grid-search oracle for [`analytic_optimum`].
///
/// Every grid point lies on the ΔOD = 0 surface. `Im χ_b` depends on `Δs`
/// only, so the search runs row by row: a `Δs` row is feasible when the
/// largest `|Δβ|` over its `Ωc` samples reaches `π − beta_tol`. Since
/// `Δβ → 0` as `Ωc → 0`, a feasible row contains an exact `|Δβ| = π` point.
/// The feasible row with the smallest `Im χ_b` wins and is reported at its
/// `|Δβ|` peak, where the `|Δβ| = π` set of the optimal row collapses as the
/// grid is refined. Taking a grid point with `|Δβ| ≈ π` instead is
/// ill-conditioned in `Ωc` because `∂Δβ/∂Ωc` vanishes at the optimum.
/// Ties go to the smaller `(Δs, Ωc)`. Reductions are sequential over ordered
/// collections, so the result does not depend on the thread count.
pub fn brute_force_optimum(medium: &MediumParams, grid: &GridSpec) -> Result<OperatingPoint> {
    medium.validate()?;
    let z = zeta(medium);
    if z < 1.0 {
        return Err(Error::Infeasible(format!("ζ = {z:.4} < 1")));
    }
    let g = medium.gamma_e;
    let sign = (-medium.c6).signum();
    let ds_grid = geomspace(grid.delta_s_min * g, grid.delta_s_max * g, grid.n_delta_s);
    let om_grid = geomspace(grid.omega_min * g, grid.omega_max * g, grid.n_omega);
    let rows: Vec<Option<RowPeak>> = ds_grid
        .par_iter()
        .map(|&ds| {
            let delta_s = sign * ds;
            om_grid
                .iter()
                .filter_map(|&omega_c| {
                    let beta = bulk_delta_beta(medium, delta_s, omega_c).ok()?;
                    Some(RowPeak { delta_s, omega_c, abs_beta: beta.abs() })
                })
                .fold(None, |best: Option<RowPeak>, c| match best {
                    Some(b) if b.abs_beta >= c.abs_beta => Some(b),
                    _ => Some(c),
                })
                .filter(|p| p.abs_beta >= PI - grid.beta_tol)
        })
        .collect();
    let best = rows
        .into_iter()
        .flatten()
        .map(|p| (chi_blocked(medium, &Drive::two_level(p.delta_s)).im(), p))
        .min_by(|(ia, a), (ib, b)| {
            ia.total_cmp(ib)
                .then(a.delta_s.total_cmp(&b.delta_s))
                .then(a.omega_c.total_cmp(&b.omega_c))
        })
        .map(|(_, p)| p)
        .ok_or_else(|| Error::Infeasible("no grid point reaches Δβ = π".into()))?;
    Ok(point(medium, best.delta_s, best.omega_c, z))
}

/// Feasibility of Δβ = π for a given blocked optical depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NecessaryCondition {
    /// `OD_b ≥ 2π`.
    pub feasible: bool,
    /// Upper bound `|Δβ| ≤ OD_b/2`, rad.
    pub max_delta_beta: f64,
    /// Target transmission ceiling `e^{−π}` for `L_b ≤ L`.
    pub transmission_ceiling: f64,
    /// Ceiling `e^{−2π}` when `L_b ≤ L/2`.
    pub transmission_ceiling_half_blocked: f64,
}

/// `|Re χ| ≤ χ₀/2` bounds the conditional phase by `OD_b/2`.
pub fn necessary_condition_bound(od_b: f64) -> NecessaryCondition {
    NecessaryCondition {
        feasible: od_b >= 2.0 * PI,
        max_delta_beta: od_b / 2.0,
        transmission_ceiling: (-PI).exp(),
        transmission_ceiling_half_blocked: (-2.0 * PI).exp(),
    }
}

/// The drive that attains `|Δβ| = OD_b/2` in a medium with `γrg = 0`:
/// `|Δs| = Γe/2` and `Δc,u + Δs = Ωc²/(8Δs)`.
pub fn bound_attaining_drive(medium: &MediumParams, omega_c: f64) -> Drive {
    let delta_s = 0.5 * medium.gamma_e * (-medium.c6).signum();
    Drive {
        omega_c,
        delta_s,
        delta_c: -delta_s + omega_c * omega_c / (8.0 * delta_s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImChiBExpansion {
    /// `χ₀/4ζ²`.
    pub leading: f64,
    /// `(49/16)(π/3ks)^{12/7}(ħγrg/|C6|)^{2/7}χ₀^{−5/7}`, equal to `leading`.
    pub leading_expanded: f64,
    /// `χ₀Γe/(4ζ|Δs|)` at the analytic optimum.
    pub exact: f64,
}

/// Large-ζ expansion of `Im χ_b` at the optimum.
pub fn im_chi_b_expansion(medium: &MediumParams) -> Result<ImChiBExpansion> {
    let op = analytic_optimum(medium)?;
    let chi0 = medium.chi0();
    let z = op.zeta;
    Ok(ImChiBExpansion {
        leading: chi0 / (4.0 * z * z),
        leading_expanded: 49.0 / 16.0
            * (PI / (3.0 * medium.k_s)).powf(12.0 / 7.0)
            * (HBAR * medium.gamma_rg / medium.c6.abs()).powf(2.0 / 7.0)
            * chi0.powf(-5.0 / 7.0),
        exact: op.im_chi_b,
    })
}

/// Scales the column density so that `|Δβ| = π` with `L_b = 2 r_b` at `op`.
/// Returns the tuned medium and the factor applied to χ₀. `r_b` does not
/// depend on χ₀, so ΔOD stays zero.
pub fn fine_tune(medium: &MediumParams, op: &OperatingPoint) -> Result<(MediumParams, f64)> {
    let beta = bulk_delta_beta(medium, op.delta_s, op.omega_c)?;
    if beta == 0.0 {
        return Err(Error::Infeasible("no conditional phase to scale".into()));
    }
    let factor = PI / beta.abs();
    Ok((medium.with_column_density_scaled(factor), factor))
}

/// `Im χ_b` after rescaling the column density so that `(Δs, Ωc)` on the
/// ΔOD = 0 surface reaches `|Δβ| = π`. At fixed `Δs` of the analytic optimum
/// this is minimal in `Ωc`.
pub fn rescaled_im_chi_b(medium: &MediumParams, delta_s: f64, omega_c: f64) -> Result<f64> {
    let beta = bulk_delta_beta(medium, delta_s, omega_c)?;
    let im = chi_blocked(medium, &Drive::two_level(delta_s)).im();
    Ok(im * PI / beta.abs())
}

/// One row of a dephasing-rate sweep; `point` is `None` where infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSweepRow {
    pub gamma_rg: f64,
    pub zeta: f64,
    pub point: Option<OperatingPoint>,
}

pub fn sweep_gamma_rg(medium: &MediumParams, gamma_rg: &[f64]) -> Vec<GammaSweepRow> {
    gamma_rg
        .iter()
        .map(|&g| {
            let m = MediumParams { gamma_rg: g, ..*medium };
            GammaSweepRow {
                gamma_rg: g,
                zeta: zeta(&m),
                point: analytic_optimum(&m).ok(),
            }
        })
        .collect()
}

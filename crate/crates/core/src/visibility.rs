//! Target-photon visibility lost to the random storage position of the
//! control excitation.
//!
//! The conditional phase at storage position `z_s` is
//! `Δβ(z_s) = Δβ_b L_b(z_s) / 2r_b`, where `Δβ_b` is the bulk value. The
//! target coherence is the average `V_t e^{iβ₄} = ∫ |u(z)|² e^{iΔβ(z)} dz`.
//! For uniform `|u|²` the average has a three-branch closed form in
//! `x = L/r_b`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::blockade::blocked_length;
use crate::numeric::bisect;
use crate::{Error, Result};

/// Upper end of the `Δβ_b` search bracket, rad.
pub const MAX_BULK_PHASE: f64 = 4.0 * PI;

/// `(1 − e^{ia})/a`, with its limit `−i` at `a = 0`.
fn g(a: f64) -> Complex64 {
    if a.abs() < 1e-4 {
        // −i Σ_{n≥1} (ia)^{n−1}/n!
        let ia = Complex64::new(0.0, a);
        let series = 1.0 + ia / 2.0 + ia * ia / 6.0 + ia * ia * ia / 24.0;
        return Complex64::new(0.0, -1.0) * series;
    }
    (1.0 - Complex64::new(0.0, a).exp()) / a
}

/// Closed-form `V_t e^{iβ₄}` for uniform `|u(z)|²`, `x = L/r_b > 0`.
pub fn phasor(l_over_rb: f64, delta_beta_b: f64) -> Complex64 {
    let (x, b) = (l_over_rb, delta_beta_b);
    let i = Complex64::i();
    if x >= 2.0 {
        (i * b).exp() * (1.0 - 2.0 / x + (2.0 * i / x) * g(-b / 2.0))
    } else if x >= 1.0 {
        (i * b * x / 2.0).exp() * (-1.0 + 2.0 / x - (2.0 * i * (1.0 - x) / x) * g(b * (1.0 - x) / 2.0))
    } else {
        (i * b * x / 2.0).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPoint {
    pub l_over_rb: f64,
    /// Bulk conditional phase Δβ_b, rad.
    pub delta_beta_b: f64,
    pub v_t: f64,
    /// Averaged conditional phase in (−π, π].
    pub beta_4: f64,
}

fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `(V_t, β₄)` from the closed form.
pub fn visibility_phasor(l_over_rb: f64, delta_beta_b: f64) -> Result<VisibilityPoint> {
    if !(l_over_rb.is_finite() && l_over_rb > 0.0) {
        return Err(Error::invalid("l_over_rb", format!("must be > 0, got {l_over_rb}")));
    }
    let p = phasor(l_over_rb, delta_beta_b);
    let beta_4 = if p.norm() == 0.0 { 0.0 } else { wrap(p.arg()) };
    Ok(VisibilityPoint {
        l_over_rb,
        delta_beta_b,
        v_t: p.norm().min(1.0),
        beta_4: if beta_4 == -PI { PI } else { beta_4 },
    })
}

/// Storage-position weighting `|u(z)|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    Uniform,
    /// Samples of `|u|²` at positions given as fractions of `L` in `[0, 1]`,
    /// ascending. Normalization is applied internally.
    Sampled { z: Vec<f64>, weight: Vec<f64> },
}

/// `∫ |u|² e^{iΔβ(z)} dz / ∫ |u|² dz` for a general profile, by trapezoidal
/// quadrature over the samples. Uniform profiles use the closed form.
pub fn profile_phasor(l_over_rb: f64, delta_beta_b: f64, profile: &Profile) -> Result<Complex64> {
    match profile {
        Profile::Uniform => Ok(phasor(l_over_rb, delta_beta_b)),
        Profile::Sampled { z, weight } => {
            if z.len() != weight.len() || z.len() < 2 {
                return Err(Error::invalid("profile", "needs at least two (z, weight) samples of equal length"));
            }
            if weight.iter().any(|&w| !(w >= 0.0)) || z.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid("profile", "weights must be >= 0 and positions ascending"));
            }
            let f = |k: usize| {
                let l_b = blocked_length(1.0, l_over_rb, z[k] * l_over_rb);
                weight[k] * Complex64::new(0.0, delta_beta_b * l_b / 2.0).exp()
            };
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for k in 1..z.len() {
                let h = z[k] - z[k - 1];
                num += (f(k) + f(k - 1)) * (h / 2.0);
                den += (weight[k] + weight[k - 1]) * h / 2.0;
            }
            if den <= 0.0 {
                return Err(Error::invalid("profile", "total weight is zero"));
            }
            Ok(num / den)
        }
    }
}

/// Root of `β₄(Δβ_b) = π` for fixed `L/r_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkPhaseSolution {
    pub point: VisibilityPoint,
    /// Further roots in `(0, 4π]`, ascending.
    pub alternates: Vec<f64>,
}

/// Searches `Δβ_b ∈ (0, 4π]` for `β₄ = π`, following the phase of the
/// averaged phasor continuously from `Δβ_b = 0` and returning the first
/// crossing of an odd multiple of π.
pub fn solve_bulk_phase_for_pi(l_over_rb: f64) -> Result<BulkPhaseSolution> {
    if !(l_over_rb.is_finite() && l_over_rb > 0.0) {
        return Err(Error::invalid("l_over_rb", format!("must be > 0, got {l_over_rb}")));
    }
    let x = l_over_rb;
    let n = 4096;
    let step = MAX_BULK_PHASE / n as f64;
    let mut roots = Vec::new();
    let mut b_prev = 0.0;
    let mut p_prev = phasor(x, 0.0);
    let mut phi_prev = 0.0;
    for k in 1..=n {
        let b = step * k as f64;
        let p = phasor(x, b);
        if p.norm() == 0.0 || p_prev.norm() == 0.0 {
            // Phase undefined at a node of the average.
            b_prev = b;
            p_prev = p;
            continue;
        }
        let phi = phi_prev + (p / p_prev).arg();
        // Odd multiples of π passed between phi_prev (excluded) and phi.
        let crossed = |t: f64| {
            if phi >= phi_prev {
                t > phi_prev && t <= phi + 1e-12
            } else {
                t < phi_prev && t >= phi - 1e-12
            }
        };
        let m_lo = ((phi.min(phi_prev) - PI) / (2.0 * PI)).floor() as i64;
        let m_hi = ((phi.max(phi_prev) - PI) / (2.0 * PI)).ceil() as i64;
        for target in (m_lo..=m_hi).map(|m| PI + 2.0 * PI * m as f64).filter(|&t| crossed(t)) {
            let root = if (phi - target).abs() <= 1e-12 {
                b
            } else {
                let h = |bb: f64| phi_prev + (phasor(x, bb) / p_prev).arg() - target;
                bisect(h, b_prev, b, 0.0, 1e-13).unwrap_or(b)
            };
            roots.push(root);
        }
        b_prev = b;
        p_prev = p;
        phi_prev = phi;
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let first = *roots.first().ok_or_else(|| {
        Error::NoRoot(format!("β₄ does not reach π for Δβ_b in (0, 4π] at L/r_b = {x}"))
    })?;
    let mut point = visibility_phasor(x, first)?;
    point.beta_4 = PI;
    Ok(BulkPhaseSolution {
        point,
        alternates: roots[1..].to_vec(),
    })
}

/// One entry of a visibility curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurveEntry {
    Point(VisibilityPoint),
    /// No `β₄ = π` solution at this ratio.
    Skipped { l_over_rb: f64, reason: String },
}

/// `V_t` at `β₄ = π` on a grid of `L/r_b`, in grid order.
pub fn visibility_curve(l_over_rb: &[f64]) -> Vec<CurveEntry> {
    l_over_rb
        .par_iter()
        .map(|&x| match solve_bulk_phase_for_pi(x) {
            Ok(s) => CurveEntry::Point(s.point),
            Err(e) => CurveEntry::Skipped {
                l_over_rb: x,
                reason: e.to_string(),
            },
        })
        .collect()
}

//! Two-photon polarization algebra of the gate.
//!
//! Basis order is `{RR, RL, LR, LL}` with the control qubit first. The gate
//! maps the input amplitudes through the diagonal
//! `e^{−ξ₀} diag(1, e^{−ξ₂}, e^{−ξ₁}, e^{−ξ₁−ξ₂−ξ₃})`, with
//! `Re ξᵢ = ODᵢ/2` and `Im ξᵢ = −βᵢ`. Linear polarizations are
//! `|H⟩ = (|R⟩ + |L⟩)/√2`, `|V⟩ = i(|R⟩ − |L⟩)/√2` and
//! `|D⟩ = (|R⟩ + i|L⟩)/√2`, so that `(|R⟩ + e^{iβ}|L⟩)/√2` has
//! `S_H = cos β` and `S_D = sin β`.
//!
//! Phase noise enters as independent fluctuations of β₁, β₂, β₃ around the
//! means stored in ξ, each symmetric with visibility `Vᵢ = ⟨cos δβᵢ⟩`.
//! Averaged over the noise, element `ρ_jk` of the output is multiplied by
//! `Πᵢ Vᵢ^{|nⱼ − nₖ|ᵢ}`, where `n` counts which phases a basis state carries:
//! RR (0,0,0), RL (0,1,0), LR (1,0,0), LL (1,1,1).

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::blockade::BlockadeResult;
use crate::eit::{propagate, two_level_susceptibility, MediumParams, Propagation};
use crate::{Error, Result};

pub type Vector4c = Vector4<Complex64>;
pub type Matrix4c = Matrix4<Complex64>;
pub type Vector2c = Vector2<Complex64>;

const BASIS_LABELS: [&str; 4] = ["RR", "RL", "LR", "LL"];

/// Which phases each basis state accumulates (β₁, β₂, β₃).
const PHASE_CONTENT: [[u8; 3]; 4] = [[0, 0, 0], [0, 1, 0], [1, 0, 0], [1, 1, 1]];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit polarization states in the `{R, L}` basis.
pub mod pol {
    use super::*;

    pub fn r() -> Vector2c {
        Vector2c::new(c(1.0, 0.0), c(0.0, 0.0))
    }
    pub fn l() -> Vector2c {
        Vector2c::new(c(0.0, 0.0), c(1.0, 0.0))
    }
    pub fn h() -> Vector2c {
        Vector2c::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0))
    }
    pub fn v() -> Vector2c {
        Vector2c::new(c(0.0, FRAC_1_SQRT_2), c(0.0, -FRAC_1_SQRT_2))
    }
    pub fn d() -> Vector2c {
        Vector2c::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2))
    }
    pub fn a() -> Vector2c {
        Vector2c::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2))
    }

    /// State for a label among `R, L, H, V, D, A`.
    pub fn by_label(label: char) -> Option<Vector2c> {
        Some(match label {
            'R' => r(),
            'L' => l(),
            'H' => h(),
            'V' => v(),
            'D' => d(),
            'A' => a(),
            _ => return None,
        })
    }
}

/// `a ⊗ b` in `{RR, RL, LR, LL}` order.
pub fn kron(a: &Vector2c, b: &Vector2c) -> Vector4c {
    Vector4c::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

/// `|HH⟩`, the entangling-gate input.
pub fn input_hh() -> Vector4c {
    kron(&pol::h(), &pol::h())
}

/// Ideal entangled output `(|LH⟩ − i|RV⟩)/√2 = ½(1, −1, 1, 1)`.
pub fn ideal_output() -> Vector4c {
    Vector4c::new(c(0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0))
}

/// The four complex gate parameters ξ₀..ξ₃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiParams {
    pub xi: [Complex64; 4],
}

impl XiParams {
    /// `ξᵢ = ODᵢ/2 − iβᵢ`.
    pub fn from_od_beta(od: [f64; 4], beta: [f64; 4]) -> Self {
        XiParams {
            xi: std::array::from_fn(|i| c(od[i] / 2.0, -beta[i])),
        }
    }

    /// `ξ₁ = 0`, `ξ₂ = ξ₃ = iπ`.
    pub fn ideal() -> Self {
        XiParams {
            xi: [c(0.0, 0.0), c(0.0, 0.0), c(0.0, PI), c(0.0, PI)],
        }
    }

    pub fn od(&self, i: usize) -> f64 {
        2.0 * self.xi[i].re
    }

    pub fn beta(&self, i: usize) -> f64 {
        -self.xi[i].im
    }

    /// Replaces ξ₃ by the conditional response of the blockade model:
    /// `ξ₃ = ΔOD/2 − iΔβ`.
    pub fn with_blockade(mut self, r: &BlockadeResult) -> Self {
        self.xi[3] = c(r.delta_od / 2.0, -r.delta_beta);
        self
    }

    /// Diagonal of the gate in `{RR, RL, LR, LL}`.
    pub fn diagonal(&self) -> Vector4c {
        let [x0, x1, x2, x3] = self.xi;
        let e = |z: Complex64| (-z).exp();
        Vector4c::new(e(x0), e(x0 + x2), e(x0 + x1), e(x0 + x1 + x2 + x3))
    }

    /// Physical when no channel amplifies: `ODᵢ ≥ 0` for every amplitude.
    pub fn validate(&self) -> Result<()> {
        let d = self.diagonal();
        let norm = d.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        if norm > 1.0 + 1e-12 {
            return Err(Error::NonPhysical { norm });
        }
        Ok(())
    }
}

/// Two-photon state after the gate for input `|HH⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateState {
    /// Amplitudes on `{RR, RL, LR, LL}`.
    pub amplitudes: [Complex64; 4],
    /// Amplitude of the component with at least one photon absorbed, chosen real.
    pub c_abs: Complex64,
}

impl GateState {
    pub fn two_photon_probability(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Amplitudes conditioned on detecting both photons.
    pub fn post_selected(&self) -> Result<Vector4c> {
        let p = self.two_photon_probability();
        if p == 0.0 {
            return Err(Error::invalid("state", "no two-photon component to post-select"));
        }
        Ok(Vector4c::from_iterator(self.amplitudes.iter().map(|z| z / p.sqrt())))
    }

    /// `|⟨target|ψ_post⟩|²`.
    pub fn fidelity_with(&self, target: &Vector4c) -> Result<f64> {
        Ok(target.dotc(&self.post_selected()?).norm_sqr())
    }
}

/// `½e^{−ξ₀}(|RR⟩ + e^{−ξ₂}|RL⟩ + e^{−ξ₁}|LR⟩ + e^{−ξ₁−ξ₂−ξ₃}|LL⟩)` plus the
/// absorbed component that restores unit norm.
pub fn output_state(xi: &XiParams) -> Result<GateState> {
    let d = xi.diagonal();
    let amplitudes: [Complex64; 4] = std::array::from_fn(|k| d[k] * 0.5);
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    if norm > 1.0 + 1e-12 {
        return Err(Error::NonPhysical { norm });
    }
    Ok(GateState {
        amplitudes,
        c_abs: c((1.0 - norm).max(0.0).sqrt(), 0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Qubit {
    Control,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arm {
    R,
    L,
}

/// Applies a single-qubit operation that multiplies the `arm` component of
/// `qubit` by `√attenuation · e^{i·phase}`. Only (ξ₀, ξ₁) or (ξ₀, ξ₂) change.
pub fn compensate_single_qubit(xi: &XiParams, qubit: Qubit, arm: Arm, attenuation: f64, phase: f64) -> Result<XiParams> {
    if attenuation > 1.0 {
        return Err(Error::GainForbidden { attenuation });
    }
    if !(attenuation > 0.0) {
        return Err(Error::invalid("attenuation", format!("must lie in (0, 1], got {attenuation}")));
    }
    let ln_f = c(0.5 * attenuation.ln(), phase);
    let mut out = *xi;
    let k = match qubit {
        Qubit::Control => 1,
        Qubit::Target => 2,
    };
    match arm {
        Arm::R => {
            out.xi[0] -= ln_f;
            out.xi[k] += ln_f;
        }
        Arm::L => out.xi[k] -= ln_f,
    }
    assert_eq!(out.xi[3], xi.xi[3], "single-qubit operation changed ξ₃");
    Ok(out)
}

/// Visibilities of the β₁, β₂, β₃ fluctuations and their mean values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub v: [f64; 3],
    pub mean_beta: [f64; 3],
}

impl NoiseModel {
    /// Noise-free with the ideal means β₁ = 0, β₂ = β₃ = π.
    pub fn ideal() -> Self {
        NoiseModel {
            v: [1.0; 3],
            mean_beta: [0.0, PI, PI],
        }
    }

    /// Ideal means with the given visibilities.
    pub fn with_visibilities(v1: f64, v2: f64, v3: f64) -> Self {
        NoiseModel {
            v: [v1, v2, v3],
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.v.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("visibility", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Gate channel with these means and the given optical depths.
    pub fn channel(&self, od: [f64; 4]) -> GateChannel {
        let [b1, b2, b3] = self.mean_beta;
        GateChannel {
            xi: XiParams::from_od_beta(od, [0.0, b1, b2, b3]),
            v: self.v,
        }
    }
}

/// Mean gate parameters plus phase-noise visibilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateChannel {
    pub xi: XiParams,
    pub v: [f64; 3],
}

impl GateChannel {
    pub fn ideal() -> Self {
        GateChannel {
            xi: XiParams::ideal(),
            v: [1.0; 3],
        }
    }

    /// Dephasing factor applied to `ρ_jk`.
    pub fn dephasing(&self, j: usize, k: usize) -> f64 {
        (0..3)
            .filter(|&m| PHASE_CONTENT[j][m] != PHASE_CONTENT[k][m])
            .map(|m| self.v[m])
            .product()
    }

    /// Noise-averaged output for a pure input, before post-selection. The
    /// trace is the probability that both photons survive.
    pub fn output_unnormalized(&self, input: &Vector4c) -> Matrix4c {
        let psi = self.xi.diagonal().component_mul(input);
        Matrix4c::from_fn(|j, k| psi[j] * psi[k].conj() * self.dephasing(j, k))
    }

    /// Post-selected output density matrix, or `None` if nothing survives.
    pub fn output(&self, input: &Vector4c) -> Option<Matrix4c> {
        let rho = self.output_unnormalized(input);
        let tr = rho.trace().re;
        (tr > 0.0).then(|| rho / c(tr, 0.0))
    }
}

/// Input/output conventions of a truth table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruthTableKind {
    /// Both qubits prepared and analysed in `R/L`.
    Circular,
    /// Control in `H/V`, target in `R/L`.
    CnotA,
    /// Control in `R/L`, target in `H/V`.
    CnotB,
}

impl TruthTableKind {
    fn bases(self) -> ([char; 2], [char; 2]) {
        match self {
            TruthTableKind::Circular => (['R', 'L'], ['R', 'L']),
            TruthTableKind::CnotA => (['H', 'V'], ['R', 'L']),
            TruthTableKind::CnotB => (['R', 'L'], ['H', 'V']),
        }
    }

    /// Labels of the four product states, control first.
    pub fn labels(self) -> [String; 4] {
        let (bc, bt) = self.bases();
        [
            format!("{}{}", bc[0], bt[0]),
            format!("{}{}", bc[0], bt[1]),
            format!("{}{}", bc[1], bt[0]),
            format!("{}{}", bc[1], bt[1]),
        ]
    }

    pub fn states(self) -> [Vector4c; 4] {
        let (bc, bt) = self.bases();
        let s = |a: char, b: char| kron(&pol::by_label(a).unwrap(), &pol::by_label(b).unwrap());
        [s(bc[0], bt[0]), s(bc[0], bt[1]), s(bc[1], bt[0]), s(bc[1], bt[1])]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub kind: TruthTableKind,
    pub labels: [String; 4],
    /// `probability[input][output]`, post-selected.
    pub probability: [[f64; 4]; 4],
    /// Output index the ideal gate produces for each input.
    pub ideal_output: [usize; 4],
    /// Mean probability of the ideal output.
    pub fidelity: f64,
}

/// Output of the ideal controlled-phase gate for each input of `kind`.
pub fn ideal_outputs(kind: TruthTableKind) -> [usize; 4] {
    let states = kind.states();
    let ideal = GateChannel::ideal();
    std::array::from_fn(|i| {
        let rho = ideal.output(&states[i]).expect("ideal gate is lossless");
        (0..4)
            .max_by(|&a, &b| {
                let pa = states[a].dotc(&(rho * states[a])).re;
                let pb = states[b].dotc(&(rho * states[b])).re;
                pa.total_cmp(&pb)
            })
            .unwrap()
    })
}

/// Post-selected output probabilities of `channel` for each product input.
pub fn truth_table(channel: &GateChannel, kind: TruthTableKind) -> Result<TruthTable> {
    channel.xi.validate()?;
    let states = kind.states();
    let mut probability = [[0.0; 4]; 4];
    for (i, input) in states.iter().enumerate() {
        let rho = channel
            .output(input)
            .ok_or_else(|| Error::invalid("xi", "the gate absorbs every two-photon component"))?;
        for (o, out) in states.iter().enumerate() {
            probability[i][o] = out.dotc(&(rho * out)).re.max(0.0);
        }
    }
    let ideal_output = ideal_outputs(kind);
    let fidelity = (0..4).map(|i| probability[i][ideal_output[i]]).sum::<f64>() / 4.0;
    Ok(TruthTable {
        kind,
        labels: kind.labels(),
        probability,
        ideal_output,
        fidelity,
    })
}

/// `|⟨ψ_i|ψ_β⟩|²` for equal populations and phases β₁, β₂, β₃.
pub fn f_beta(beta1: f64, beta2: f64, beta3: f64) -> f64 {
    (2.0 + beta1.cos() - beta2.cos() + (beta1 + beta2 + beta3).cos()
        - (beta1 - beta2).cos()
        - (beta1 + beta3).cos()
        + (beta2 + beta3).cos())
        / 8.0
}

/// `½(1, e^{iβ₂}, e^{iβ₁}, e^{i(β₁+β₂+β₃)})`.
pub fn psi_beta(beta1: f64, beta2: f64, beta3: f64) -> Vector4c {
    let e = |p: f64| Complex64::from_polar(0.5, p);
    Vector4c::new(e(0.0), e(beta2), e(beta1), e(beta1 + beta2 + beta3))
}

/// Noise-averaged `F_e = Πᵢ(1 + Vᵢ)/2 + (1 − V₃)/8` at the optimal means.
pub fn entangling_fidelity(v1: f64, v2: f64, v3: f64) -> f64 {
    (1.0 + v1) / 2.0 * (1.0 + v2) / 2.0 * (1.0 + v3) / 2.0 + (1.0 - v3) / 8.0
}

/// Upper bound on `F_e` from the control and target visibilities, attained
/// by `V₂ = 1`, `V₃ = V_t`.
pub fn entangling_fidelity_bound(v_c: f64, v_t: f64) -> f64 {
    (1.0 + v_c) * (1.0 + v_t) / 4.0 + (1.0 - v_t) / 8.0
}

/// Visibility of the target with a stored `|L⟩` control excitation.
pub fn target_visibility(v2: f64, v3: f64) -> f64 {
    v2 * v3
}

/// Average quantum-memory fidelity from the visibility and the
/// polarization cross-talk fractions.
pub fn memory_fidelity(v_c: f64, eps_r: f64, eps_l: f64) -> f64 {
    (2.0 + 2.0 * v_c + 1.0 / (1.0 + eps_r) + 1.0 / (1.0 + eps_l)) / 6.0
}

/// `I₁(κ)/I₀(κ)` by backward evaluation of its continued fraction.
pub fn bessel_ratio_i1_i0(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    let terms = (kappa.abs() as usize + 60).min(100_000);
    let mut r = 0.0;
    for n in (1..=terms).rev() {
        r = 1.0 / (2.0 * n as f64 / kappa + r);
    }
    r
}

/// Von Mises distribution centred on zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMises {
    pub kappa: f64,
    tau_r: f64,
}

impl VonMises {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
        Ok(VonMises {
            kappa,
            tau_r: (1.0 + rho * rho) / (2.0 * rho),
        })
    }

    /// Concentration with `⟨cos δ⟩ = visibility`.
    pub fn kappa_for_visibility(visibility: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&visibility) {
            return Err(Error::invalid("visibility", format!("must lie in [0, 1), got {visibility}")));
        }
        if visibility == 0.0 {
            return Ok(0.0);
        }
        let f = |k: f64| bessel_ratio_i1_i0(k) - visibility;
        let mut hi = 1.0;
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        crate::numeric::bisect(f, 0.0, hi, 1e-14, 1e-300)
            .ok_or_else(|| Error::NoRoot("von Mises concentration".into()))
    }

    /// Best–Fisher rejection sampler.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.kappa < 1e-8 {
            return rng.random_range(-PI..PI);
        }
        let s = self.tau_r;
        loop {
            let u1: f64 = rng.random();
            let z = (PI * u1).cos();
            let f = (1.0 + s * z) / (s + z);
            let cc = self.kappa * (s - f);
            let u2: f64 = rng.random();
            if cc * (2.0 - cc) - u2 > 0.0 || (cc / u2).ln() + 1.0 - cc >= 0.0 {
                let u3: f64 = rng.random();
                let theta = f.clamp(-1.0, 1.0).acos();
                return if u3 > 0.5 { theta } else { -theta };
            }
        }
    }
}

/// Phase fluctuation for one of β₁, β₂, β₃: none, or von Mises.
#[derive(Debug, Clone, Copy)]
enum PhaseNoise {
    Fixed,
    VonMises(VonMises),
}

impl PhaseNoise {
    fn for_visibility(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(PhaseNoise::Fixed)
        } else {
            Ok(PhaseNoise::VonMises(VonMises::new(VonMises::kappa_for_visibility(v)?)?))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            PhaseNoise::Fixed => 0.0,
            PhaseNoise::VonMises(vm) => vm.sample(rng),
        }
    }
}

/// Monte Carlo average of `F_β` over independent von Mises fluctuations
/// around `noise.mean_beta`. Task `t` draws from ChaCha stream `t` of
/// `seed`, so results depend only on `(seed, samples, tasks)`.
pub fn monte_carlo_entangling_fidelity(noise: &NoiseModel, samples: usize, tasks: usize, seed: u64) -> Result<f64> {
    noise.validate()?;
    if tasks == 0 || samples == 0 {
        return Err(Error::invalid("samples", "samples and tasks must be positive"));
    }
    let dists: Vec<PhaseNoise> = noise.v.iter().map(|&v| PhaseNoise::for_visibility(v)).collect::<Result<_>>()?;
    let [m1, m2, m3] = noise.mean_beta;
    let sums: Vec<f64> = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let n = samples / tasks + usize::from(t < samples % tasks);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            (0..n)
                .map(|_| {
                    let b1 = m1 + dists[0].sample(&mut rng);
                    let b2 = m2 + dists[1].sample(&mut rng);
                    let b3 = m3 + dists[2].sample(&mut rng);
                    f_beta(b1, b2, b3)
                })
                .sum()
        })
        .collect();
    Ok(sums.iter().sum::<f64>() / samples as f64)
}

/// Entangling fidelity of a pure population-fluctuation model compared with
/// the phase-noise formula at matched visibilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationComparison {
    /// Visibilities `⟨sech uᵢ⟩` implied by the amplitude jitter.
    pub v: [f64; 3],
    pub fidelity_population: f64,
    pub fidelity_phase: f64,
}

/// Amplitudes `½(1, −e^{u₂}, e^{u₁}, e^{u₁+u₂+u₃})`, renormalized, with
/// independent `uᵢ ~ N(0, σᵢ²)`. A single qubit `(|R⟩ + e^{u}|L⟩)` has
/// visibility `sech u`, which fixes the matched `Vᵢ`. The averages use a
/// trapezoidal grid over ±8σ per axis.
pub fn population_fluctuation_fidelity(sigma: [f64; 3]) -> Result<PopulationComparison> {
    if sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::invalid("sigma", "must be finite and >= 0"));
    }
    let n = 49;
    let axis = |s: f64| -> Vec<(f64, f64)> {
        if s == 0.0 {
            return vec![(0.0, 1.0)];
        }
        let h = 16.0 * s / (n - 1) as f64;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let u = -8.0 * s + h * k as f64;
                (u, (-0.5 * (u / s).powi(2)).exp())
            })
            .collect();
        let total: f64 = pts.iter().map(|p| p.1).sum();
        pts.into_iter().map(|(u, w)| (u, w / total)).collect()
    };
    let axes: Vec<Vec<(f64, f64)>> = sigma.iter().map(|&s| axis(s)).collect();
    let v: [f64; 3] = std::array::from_fn(|i| axes[i].iter().map(|&(u, w)| w / u.cosh()).sum());
    let target = ideal_output();
    let mut f = 0.0;
    for &(u1, w1) in &axes[0] {
        for &(u2, w2) in &axes[1] {
            for &(u3, w3) in &axes[2] {
                let amps = Vector4c::new(c(1.0, 0.0), c(-u2.exp(), 0.0), c(u1.exp(), 0.0), c((u1 + u2 + u3).exp(), 0.0));
                let psi = amps.unscale(amps.norm());
                f += w1 * w2 * w3 * target.dotc(&psi).norm_sqr();
            }
        }
    }
    Ok(PopulationComparison {
        v,
        fidelity_population: f,
        fidelity_phase: entangling_fidelity(v[0], v[1], v[2]),
    })
}

/// Normalized single-photon Stokes parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s_h: f64,
    pub s_d: f64,
    pub s_r: f64,
    /// `√(S_H² + S_D²)`.
    pub visibility: f64,
    /// Azimuth φ in (−π, π]; 0 when undefined.
    pub phi: f64,
    /// False when `S_H = S_D = 0` and φ carries no information.
    pub azimuth_defined: bool,
}

/// Powers behind polarizers for each of the six analysis states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizerPowers {
    pub h: f64,
    pub v: f64,
    pub d: f64,
    pub a: f64,
    pub r: f64,
    pub l: f64,
}

impl StokesVector {
    fn from_components(s_h: f64, s_d: f64, s_r: f64) -> Self {
        let visibility = s_h.hypot(s_d);
        let azimuth_defined = visibility > 1e-12;
        let phi = if azimuth_defined { s_d.atan2(s_h) } else { 0.0 };
        StokesVector {
            s_h,
            s_d,
            s_r,
            visibility,
            phi: if phi == -PI { PI } else { phi },
            azimuth_defined,
        }
    }

    /// `Sᵢ = (Pᵢ − Pᵢ⊥)/(Pᵢ + Pᵢ⊥)`.
    pub fn from_powers(p: &PolarizerPowers) -> Result<Self> {
        let s = |a: f64, b: f64, basis: &'static str| {
            if a + b > 0.0 {
                Ok((a - b) / (a + b))
            } else {
                Err(Error::ZeroPower { basis })
            }
        };
        Ok(Self::from_components(s(p.h, p.v, "H/V")?, s(p.d, p.a, "D/A")?, s(p.r, p.l, "R/L")?))
    }

    /// Stokes parameters of a 2×2 density matrix in the `{R, L}` basis.
    pub fn from_density(rho: &Matrix2<Complex64>) -> Result<Self> {
        let p = |s: Vector2c| s.dotc(&(rho * s)).re;
        Self::from_powers(&PolarizerPowers {
            h: p(pol::h()),
            v: p(pol::v()),
            d: p(pol::d()),
            a: p(pol::a()),
            r: p(pol::r()),
            l: p(pol::l()),
        })
    }

    pub fn from_pure(psi: &Vector2c) -> Result<Self> {
        Self::from_density(&(psi * psi.adjoint()))
    }
}

/// Storage, transmission and detection figures of one operating day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    /// Control storage-and-retrieval efficiency for `R` and `L`.
    pub eta_r: f64,
    pub eta_l: f64,
    /// Target transmission for `R` and `L`.
    pub t_r: f64,
    pub t_l: f64,
    pub detector_qe: f64,
    /// Mean photon numbers per pulse at the medium.
    pub n_c: f64,
    pub n_t: f64,
    /// Transmission of the control and target paths between medium and
    /// detectors, excluding detector efficiency.
    pub path_c: f64,
    pub path_t: f64,
    /// Experimental shots per atomic sample and the sample cycle time, s.
    pub shots_per_sample: f64,
    pub sample_period_s: f64,
}

impl EfficiencyBudget {
    pub fn unity() -> Self {
        EfficiencyBudget {
            eta_r: 1.0,
            eta_l: 1.0,
            t_r: 1.0,
            t_l: 1.0,
            detector_qe: 1.0,
            n_c: 1.0,
            n_t: 1.0,
            path_c: 1.0,
            path_t: 1.0,
            shots_per_sample: 1.0,
            sample_period_s: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("eta_r", self.eta_r),
            ("eta_l", self.eta_l),
            ("t_r", self.t_r),
            ("t_l", self.t_l),
            ("detector_qe", self.detector_qe),
            ("path_c", self.path_c),
            ("path_t", self.path_t),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.n_c > 0.0 && self.n_t > 0.0) {
            return Err(Error::invalid("mean photon number", "must be > 0"));
        }
        if !(self.shots_per_sample >= 1.0 && self.sample_period_s > 0.0) {
            return Err(Error::invalid("shots", "need at least one shot per sample and a positive period"));
        }
        Ok(())
    }

    /// Probability that one control photon in arm `i` survives to a click.
    pub fn control_detection(&self, arm: Arm) -> f64 {
        let eta = match arm {
            Arm::R => self.eta_r,
            Arm::L => self.eta_l,
        };
        eta * self.path_c * self.detector_qe
    }

    pub fn target_detection(&self, arm: Arm) -> f64 {
        let t = match arm {
            Arm::R => self.t_r,
            Arm::L => self.t_l,
        };
        t * self.path_t * self.detector_qe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// `ηᵢTⱼ` indexed `[control R/L][target R/L]`.
    pub eta_t: [[f64; 2]; 2],
    pub min: f64,
    pub max: f64,
    /// Coincidence probability per shot for balanced `R/L` inputs with
    /// Poissonian pulses.
    pub p_shot: f64,
    pub coincidences_per_minute: f64,
}

/// Pair transmission table, its range, and the expected coincidence rate.
pub fn efficiency_matrix(budget: &EfficiencyBudget) -> Result<EfficiencyReport> {
    budget.validate()?;
    let eta = [budget.eta_r, budget.eta_l];
    let t = [budget.t_r, budget.t_l];
    let eta_t: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| eta[i] * t[j]));
    let flat = eta_t.iter().flatten();
    let min = flat.clone().copied().fold(f64::INFINITY, f64::min);
    let max = flat.copied().fold(0.0, f64::max);
    // P(at least one click) for a Poissonian pulse with per-photon efficiency p.
    let click = |n: f64, p: f64| 1.0 - (-n * p).exp();
    let pc = 0.5 * (click(budget.n_c, budget.control_detection(Arm::R)) + click(budget.n_c, budget.control_detection(Arm::L)));
    let pt = 0.5 * (click(budget.n_t, budget.target_detection(Arm::R)) + click(budget.n_t, budget.target_detection(Arm::L)));
    let p_shot = pc * pt;
    Ok(EfficiencyReport {
        eta_t,
        min,
        max,
        p_shot,
        coincidences_per_minute: p_shot * budget.shots_per_sample * 60.0 / budget.sample_period_s,
    })
}

/// Target `R` polarization: a two-level response with χ₀ reduced by
/// `strength_ratio` at signal detuning `delta_s`.
pub fn target_r_channel(medium: &MediumParams, strength_ratio: f64, delta_s: f64) -> Result<Propagation> {
    if !(strength_ratio > 0.0) {
        return Err(Error::invalid("strength_ratio", "must be > 0"));
    }
    let weak = medium.with_chi0(medium.chi0() / strength_ratio);
    Ok(propagate(&weak, two_level_susceptibility(&weak, delta_s)))
}

/// Inputs of the excitation-hopping efficiency extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingInputs {
    /// Dark time, s.
    pub t_d: f64,
    /// Thermal-motion 1/e time, s.
    pub tau: f64,
    /// Storage-and-retrieval efficiency of the first photon.
    pub eta: f64,
    /// Single-pass transmission of the second photon.
    pub t_single: f64,
    /// Retrieval reduction from interactions during the second pass.
    pub interaction_factor: f64,
    /// `C6/χ6` of the states in use.
    pub c6_over_chi6: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingReport {
    /// `e^{−(2t_d/τ)²} / e^{−(t_d/τ)²}`.
    pub decay_factor: f64,
    /// `interaction_factor · decay · T² · η`.
    pub extrapolated_efficiency: f64,
    pub c6_over_chi6: f64,
}

pub fn hopping_comparison(inputs: &HoppingInputs) -> Result<HoppingReport> {
    if !(inputs.t_d >= 0.0 && inputs.tau > 0.0) {
        return Err(Error::invalid("t_d", "need t_d >= 0 and tau > 0"));
    }
    let r = inputs.t_d / inputs.tau;
    let decay = (-(2.0 * r).powi(2)).exp() / (-r * r).exp();
    Ok(HoppingReport {
        decay_factor: decay,
        extrapolated_efficiency: inputs.interaction_factor * decay * inputs.t_single.powi(2) * inputs.eta,
        c6_over_chi6: inputs.c6_over_chi6,
    })
}

/// Label of basis index `k` in `{RR, RL, LR, LL}`.
pub fn basis_label(k: usize) -> &'static str {
    BASIS_LABELS[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ideal_output_is_the_entangled_target() {
        let s = output_state(&XiParams::ideal()).unwrap();
        let post = s.post_selected().unwrap();
        let target = ideal_output();
        assert!((post - target).norm() < 1e-15);
        // (|LH⟩ − i|RV⟩)/√2 built from single-qubit states.
        let built = (kron(&pol::l(), &pol::h()) - kron(&pol::r(), &pol::v()) * c(0.0, 1.0)) * c(FRAC_1_SQRT_2, 0.0);
        assert!((built - target).norm() < 1e-15);
        assert!(s.c_abs.norm() < 1e-7);
    }

    #[test]
    fn zero_xi_returns_hh() {
        let s = output_state(&XiParams::from_od_beta([0.0; 4], [0.0; 4])).unwrap();
        assert!((s.post_selected().unwrap() - input_hh()).norm() < 1e-15);
    }

    #[test]
    fn gain_is_non_physical() {
        let xi = XiParams::from_od_beta([-1.0, 0.0, 0.0, 0.0], [0.0; 4]);
        assert!(matches!(output_state(&xi), Err(Error::NonPhysical { .. })));
    }

    #[test]
    fn normalization_with_loss() {
        let xi = XiParams::from_od_beta([0.3, 1.2, 0.4, 0.7], [0.1, 0.2, 2.0, 3.0]);
        let s = output_state(&xi).unwrap();
        assert!(close(s.two_photon_probability() + s.c_abs.norm_sqr(), 1.0, 1e-12));
    }

    #[test]
    fn compensation_zeroes_od1() {
        let xi = XiParams::from_od_beta([0.2, 0.8, 0.3, 0.05], [0.0, 0.1, 3.0, 3.1]);
        let out = compensate_single_qubit(&xi, Qubit::Control, Arm::R, (-0.8f64).exp(), 0.0).unwrap();
        assert!(out.od(1).abs() < 1e-15);
        assert_eq!(out.xi[3], xi.xi[3]);
        assert!(matches!(
            compensate_single_qubit(&xi, Qubit::Target, Arm::L, 1.5, 0.0),
            Err(Error::GainForbidden { .. })
        ));
    }

    #[test]
    fn compensation_acts_as_single_qubit_operator() {
        let xi = XiParams::from_od_beta([0.2, 0.8, 0.3, 0.05], [0.4, 0.1, 3.0, 3.1]);
        let (att, ph): (f64, f64) = (0.6, 0.7);
        let f = c(att.sqrt(), 0.0) * c(0.0, ph).exp();
        let one = c(1.0, 0.0);
        let cases = [
            (Qubit::Control, Arm::R, [f, f, one, one]),
            (Qubit::Control, Arm::L, [one, one, f, f]),
            (Qubit::Target, Arm::R, [f, one, f, one]),
            (Qubit::Target, Arm::L, [one, f, one, f]),
        ];
        for (q, arm, factors) in cases {
            let out = compensate_single_qubit(&xi, q, arm, att, ph).unwrap();
            let expected = xi.diagonal().component_mul(&Vector4c::from(factors));
            assert!((out.diagonal() - expected).norm() < 1e-14, "{q:?} {arm:?}");
        }
    }

    #[test]
    fn beta2_set_to_pi() {
        let xi = XiParams::from_od_beta([0.0; 4], [0.0, 0.0, 2.6, PI]);
        let out = compensate_single_qubit(&xi, Qubit::Target, Arm::L, 1.0, PI - 2.6).unwrap();
        assert!(close(out.beta(2), PI, 1e-12));
    }

    #[test]
    fn ideal_truth_tables() {
        for kind in [TruthTableKind::Circular, TruthTableKind::CnotA, TruthTableKind::CnotB] {
            let t = truth_table(&GateChannel::ideal(), kind).unwrap();
            assert!(close(t.fidelity, 1.0, 1e-12), "{kind:?}");
        }
        // Control H flips to V only when the target is L.
        assert_eq!(ideal_outputs(TruthTableKind::CnotA), [0, 3, 2, 1]);
    }

    #[test]
    fn no_interaction_halves_cnot_fidelity() {
        let mut ch = GateChannel::ideal();
        ch.xi.xi[3] = c(0.0, 0.0);
        for kind in [TruthTableKind::CnotA, TruthTableKind::CnotB] {
            assert!(close(truth_table(&ch, kind).unwrap().fidelity, 0.5, 1e-12));
        }
    }

    #[test]
    fn noisy_cnot_fidelities_match_single_coherence_oracle() {
        let (v1, v2, v3) = (0.66, 1.0, 0.75);
        let ch = NoiseModel::with_visibilities(v1, v2, v3).channel([0.0; 4]);
        let a = truth_table(&ch, TruthTableKind::CnotA).unwrap().fidelity;
        let b = truth_table(&ch, TruthTableKind::CnotB).unwrap().fidelity;
        assert!(close(a, 0.5 * ((1.0 + v1) / 2.0 + (1.0 + v1 * v3) / 2.0), 1e-12));
        assert!(close(b, 0.5 * ((1.0 + v2) / 2.0 + (1.0 + v2 * v3) / 2.0), 1e-12));
        assert!(a < 1.0);
    }

    #[test]
    fn global_phase_changes_no_probability() {
        let ch = NoiseModel::with_visibilities(0.7, 0.9, 0.8).channel([0.1, 0.3, 0.2, 0.0]);
        let mut shifted = ch;
        shifted.xi.xi[0] += c(0.4, 1.234);
        for kind in [TruthTableKind::Circular, TruthTableKind::CnotA, TruthTableKind::CnotB] {
            let a = truth_table(&ch, kind).unwrap();
            let b = truth_table(&shifted, kind).unwrap();
            for i in 0..4 {
                for o in 0..4 {
                    assert!(close(a.probability[i][o], b.probability[i][o], 1e-12));
                }
            }
        }
    }

    #[test]
    fn f_beta_values() {
        assert_eq!(f_beta(0.0, PI, PI), 1.0);
        assert!(close(f_beta(0.0, 0.0, 0.0), 0.25, 1e-15));
    }

    #[test]
    fn entangling_fidelity_equals_dephased_overlap() {
        for v in [[0.66, 1.0, 0.75], [0.3, 0.5, 0.9], [1.0, 1.0, 1.0]] {
            let ch = NoiseModel::with_visibilities(v[0], v[1], v[2]).channel([0.0; 4]);
            let rho = ch.output(&input_hh()).unwrap();
            let t = ideal_output();
            let f = t.dotc(&(rho * t)).re;
            assert!(close(f, entangling_fidelity(v[0], v[1], v[2]), 1e-12));
        }
    }

    #[test]
    fn bound_values() {
        assert!(close(entangling_fidelity_bound(0.66, 0.75), 0.76, 0.01));
        assert!(close(entangling_fidelity_bound(1.0, 1.0), 1.0, 1e-15));
        assert!(close(entangling_fidelity_bound(0.66, 0.75), entangling_fidelity(0.66, 1.0, 0.75), 1e-15));
        assert_eq!(target_visibility(0.8, 0.5), 0.4);
    }

    #[test]
    fn memory_fidelity_values() {
        assert!(close(memory_fidelity(0.66, 0.048, 0.025), 0.875, 0.002));
        assert!(close(memory_fidelity(1.0, 0.0, 0.0), 1.0, 1e-15));
        assert!(close(memory_fidelity(0.0, 1.0, 1.0), 0.5, 1e-15));
    }

    #[test]
    fn bessel_ratio_against_series() {
        fn i_n(n: i32, x: f64) -> f64 {
            let mut term = (x / 2.0).powi(n) / (1..=n).map(f64::from).product::<f64>();
            let mut sum = term;
            for k in 1..200 {
                term *= (x / 2.0).powi(2) / (k as f64 * (k + n) as f64);
                sum += term;
            }
            sum
        }
        for x in [0.01, 0.5, 2.0, 7.5, 20.0] {
            assert!(close(bessel_ratio_i1_i0(x), i_n(1, x) / i_n(0, x), 1e-12), "{x}");
        }
    }

    #[test]
    fn von_mises_mean_cosine() {
        let kappa = VonMises::kappa_for_visibility(0.66).unwrap();
        let vm = VonMises::new(kappa).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let (mut cs, mut sn) = (0.0, 0.0);
        for _ in 0..n {
            let x = vm.sample(&mut rng);
            cs += x.cos();
            sn += x.sin();
        }
        assert!(close(cs / n as f64, 0.66, 5e-3));
        assert!(close(sn / n as f64, 0.0, 5e-3));
    }

    #[test]
    fn monte_carlo_is_reproducible_and_close() {
        let noise = NoiseModel::with_visibilities(0.66, 0.9, 0.75);
        let a = monte_carlo_entangling_fidelity(&noise, 100_000, 8, 11).unwrap();
        let b = monte_carlo_entangling_fidelity(&noise, 100_000, 8, 11).unwrap();
        assert_eq!(a, b);
        assert!(close(a, entangling_fidelity(0.66, 0.9, 0.75), 4e-3));
    }

    #[test]
    fn population_model_matches_phase_bound_to_first_order() {
        let r = population_fluctuation_fidelity([0.05; 3]).unwrap();
        let ratio = (1.0 - r.fidelity_population) / (1.0 - r.fidelity_phase);
        assert!(close(ratio, 1.0, 0.01), "{ratio}");
        let flat = population_fluctuation_fidelity([0.0; 3]).unwrap();
        assert!(close(flat.fidelity_population, 1.0, 1e-15));
    }

    #[test]
    fn stokes_of_basis_states() {
        let s = StokesVector::from_pure(&pol::h()).unwrap();
        assert!(close(s.s_h, 1.0, 1e-15) && close(s.s_d, 0.0, 1e-15) && close(s.s_r, 0.0, 1e-15));
        assert!(close(s.visibility, 1.0, 1e-15) && s.phi == 0.0 && s.azimuth_defined);
        let mixed = StokesVector::from_density(&(Matrix2::identity() * c(0.5, 0.0))).unwrap();
        assert_eq!(mixed.visibility, 0.0);
        assert!(!mixed.azimuth_defined && mixed.phi == 0.0);
        let zero = PolarizerPowers { h: 0.0, v: 0.0, d: 1.0, a: 1.0, r: 1.0, l: 1.0 };
        assert!(matches!(StokesVector::from_powers(&zero), Err(Error::ZeroPower { .. })));
    }

    #[test]
    fn stokes_follow_the_relative_phase() {
        for beta in [0.3, 1.7, -2.5] {
            let psi = |b: f64| Vector2c::new(c(FRAC_1_SQRT_2, 0.0), Complex64::from_polar(FRAC_1_SQRT_2, b));
            let s = StokesVector::from_pure(&psi(beta)).unwrap();
            assert!(close(s.s_h, beta.cos(), 1e-12) && close(s.s_d, beta.sin(), 1e-12));
            let flipped = StokesVector::from_pure(&psi(beta + PI)).unwrap();
            assert!(close(flipped.s_h, -s.s_h, 1e-12) && close(flipped.s_d, -s.s_d, 1e-12));
        }
    }

    #[test]
    fn efficiency_values() {
        let budget = EfficiencyBudget {
            eta_r: 0.10,
            eta_l: 0.03,
            t_r: 0.77,
            t_l: 0.15,
            ..EfficiencyBudget::unity()
        };
        let r = efficiency_matrix(&budget).unwrap();
        assert!(close(r.max, 0.077, 1e-12) && close(r.min, 0.0045, 1e-12));
        let u = efficiency_matrix(&EfficiencyBudget::unity()).unwrap();
        assert_eq!(u.max, 1.0);
        assert_eq!(u.min, 1.0);
    }

    #[test]
    fn hopping_values() {
        let r = hopping_comparison(&HoppingInputs {
            t_d: 1.4e-6,
            tau: 4.5e-6,
            eta: 0.049,
            t_single: 0.43,
            interaction_factor: 0.82,
            c6_over_chi6: 29.0,
        })
        .unwrap();
        assert!(close(r.decay_factor, 0.75, 0.01));
        assert!(close(r.extrapolated_efficiency, 0.0056, 0.0003));
        let zero = hopping_comparison(&HoppingInputs { t_d: 0.0, tau: 4.5e-6, eta: 1.0, t_single: 1.0, interaction_factor: 1.0, c6_over_chi6: 29.0 }).unwrap();
        assert_eq!(zero.decay_factor, 1.0);
    }

    proptest! {
        #[test]
        fn f_beta_matches_state_vectors(b1 in -7.0f64..7.0, b2 in -7.0f64..7.0, b3 in -7.0f64..7.0) {
            let overlap = ideal_output().dotc(&psi_beta(b1, b2, b3)).norm_sqr();
            prop_assert!((overlap - f_beta(b1, b2, b3)).abs() < 1e-12);
        }

        #[test]
        fn xi3_survives_any_compensation(ops in proptest::collection::vec((0usize..4, 0.01f64..=1.0, -7.0f64..7.0), 1..20)) {
            let xi = XiParams::from_od_beta([0.2, 0.5, 0.3, 0.11], [0.1, 0.2, 2.9, 3.05]);
            let mut cur = xi;
            for (which, att, ph) in ops {
                let (q, arm) = [(Qubit::Control, Arm::R), (Qubit::Control, Arm::L), (Qubit::Target, Arm::R), (Qubit::Target, Arm::L)][which];
                cur = compensate_single_qubit(&cur, q, arm, att, ph).unwrap();
                prop_assert_eq!(cur.xi[3], xi.xi[3]);
            }
        }

        #[test]
        fn states_stay_normalized(od in proptest::array::uniform4(0.0f64..5.0), beta in proptest::array::uniform4(-7.0f64..7.0)) {
            let s = output_state(&XiParams::from_od_beta(od, beta)).unwrap();
            prop_assert!((s.two_photon_probability() + s.c_abs.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}

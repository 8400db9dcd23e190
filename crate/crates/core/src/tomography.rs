//! Post-selected two-photon counting and linear-inversion tomography.
//!
//! Each qubit is analysed in `H/V`, `D/A` or `R/L`; the first eigenstate of
//! each pair is the `+1` outcome. In the `{R, L}` basis the three analysers
//! are σx, σy and σz. Losses act as the Kraus filter
//! `diag(√s_R, √s_L)` on each photon, with survival `s` taken from the
//! [`EfficiencyBudget`].

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gate::{pol, Arm, EfficiencyBudget, GateChannel, Matrix4c, TruthTableKind, Vector2c, Vector4c};
use crate::{Error, Result};

type Matrix2c = Matrix2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    HV,
    DA,
    RL,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::RL];

    pub fn label(self) -> &'static str {
        match self {
            Basis::HV => "HV",
            Basis::DA => "DA",
            Basis::RL => "RL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Basis::ALL.into_iter().find(|b| b.label().eq_ignore_ascii_case(s))
    }

    /// Labels of the `+1` and `−1` outcomes.
    pub fn outcomes(self) -> [char; 2] {
        let l = self.label().as_bytes();
        [l[0] as char, l[1] as char]
    }

    pub fn eigenstates(self) -> [Vector2c; 2] {
        self.outcomes().map(|o| pol::by_label(o).expect("analyser label"))
    }

    /// `|+⟩⟨+| − |−⟩⟨−|`.
    pub fn observable(self) -> Matrix2c {
        let [p, m] = self.eigenstates();
        p * p.adjoint() - m * m.adjoint()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Setting {
    pub q1: Basis,
    pub q2: Basis,
}

/// The nine analyser pairs.
pub fn all_settings() -> Vec<Setting> {
    Basis::ALL
        .iter()
        .flat_map(|&q1| Basis::ALL.iter().map(move |&q2| Setting { q1, q2 }))
        .collect()
}

/// Coincidences for one setting in outcome order `++, +−, −+, −−`.
/// Expected-value mode stores non-integer means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: Setting,
    pub counts: [f64; 4],
    pub shots: u64,
}

impl CountRecord {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorFlavor {
    Raw,
    Hermitized,
    TraceNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4 {
    /// Indexed in `{RR, RL, LR, LL}` order.
    pub matrix: Matrix4c,
    pub flavor: EstimatorFlavor,
}

impl DensityMatrix4 {
    pub fn raw(matrix: Matrix4c) -> Self {
        DensityMatrix4 {
            matrix,
            flavor: EstimatorFlavor::Raw,
        }
    }

    pub fn pure(psi: &Vector4c) -> Self {
        Self::raw(psi * psi.adjoint()).trace_normalized()
    }

    /// `(ρ + ρ†)/2`.
    pub fn hermitized(&self) -> Self {
        DensityMatrix4 {
            matrix: (self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0),
            flavor: EstimatorFlavor::Hermitized,
        }
    }

    /// Hermitized and scaled to unit trace.
    pub fn trace_normalized(&self) -> Self {
        let h = self.hermitized();
        let tr = h.matrix.trace().re;
        DensityMatrix4 {
            matrix: h.matrix / Complex64::new(tr, 0.0),
            flavor: EstimatorFlavor::TraceNormalized,
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let h = (self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }

    /// True when an eigenvalue is below `−tol`. Such estimates are kept as is.
    pub fn has_negative_eigenvalue(&self, tol: f64) -> bool {
        self.eigenvalues()[0] < -tol
    }

    pub fn fidelity(&self, target: &Vector4c) -> f64 {
        target.dotc(&(self.matrix * target)).re
    }

    pub fn to_json(&self) -> DensityMatrixJson {
        DensityMatrixJson {
            basis: ["RR", "RL", "LR", "LL"].map(String::from),
            flavor: self.flavor,
            real: std::array::from_fn(|i| std::array::from_fn(|j| self.matrix[(i, j)].re)),
            imag: std::array::from_fn(|i| std::array::from_fn(|j| self.matrix[(i, j)].im)),
            eigenvalues: self.eigenvalues(),
        }
    }
}

/// Serialized form of [`DensityMatrix4`] with separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub basis: [String; 4],
    pub flavor: EstimatorFlavor,
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
    pub eigenvalues: [f64; 4],
}

/// Photon-number statistics of each pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// Poissonian pulses; excess photons are lost or detected independently.
    Poisson,
    /// Exactly one photon per pulse; counts are multinomial.
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountMode {
    /// Mean counts, no sampling.
    Expected,
    Sampled { seed: u64, source: Source },
}

/// POVM of one photon behind its analyser: two outcomes and loss.
fn detection_povm(basis: Basis, survival: [f64; 2]) -> [Matrix2c; 3] {
    let k = Matrix2c::from_diagonal(&Vector2c::new(Complex64::new(survival[0].sqrt(), 0.0), Complex64::new(survival[1].sqrt(), 0.0)));
    let [p, m] = basis.eigenstates();
    let ep = k * p * p.adjoint() * k;
    let em = k * m * m.adjoint() * k;
    let lost = Matrix2c::identity() - ep - em;
    [ep, em, lost]
}

fn kron2(a: &Matrix2c, b: &Matrix2c) -> Matrix4c {
    Matrix4c::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

fn partial_trace(rho: &Matrix4c, keep_first: bool) -> Matrix2c {
    Matrix2c::from_fn(|i, j| {
        (0..2)
            .map(|k| if keep_first { rho[(2 * i + k, 2 * j + k)] } else { rho[(2 * k + i, 2 * k + j)] })
            .sum()
    })
}

/// Outcome probabilities of one setting: joint table over
/// `{+, −, lost}²` and single-photon marginals for excess photons.
struct SettingModel {
    joint: [[f64; 3]; 3],
    single_c: [f64; 3],
    single_t: [f64; 3],
}

impl SettingModel {
    fn new(rho: &Matrix4c, setting: Setting, budget: &EfficiencyBudget) -> Self {
        let pc = detection_povm(setting.q1, [budget.control_detection(Arm::R), budget.control_detection(Arm::L)]);
        let pt = detection_povm(setting.q2, [budget.target_detection(Arm::R), budget.target_detection(Arm::L)]);
        let rho_c = partial_trace(rho, true);
        let rho_t = partial_trace(rho, false);
        let joint = std::array::from_fn(|a| std::array::from_fn(|b| (kron2(&pc[a], &pt[b]) * rho).trace().re.max(0.0)));
        SettingModel {
            joint,
            single_c: std::array::from_fn(|a| (pc[a] * rho_c).trace().re.max(0.0)),
            single_t: std::array::from_fn(|b| (pt[b] * rho_t).trace().re.max(0.0)),
        }
    }

    fn detected(&self) -> [f64; 4] {
        [self.joint[0][0], self.joint[0][1], self.joint[1][0], self.joint[1][1]]
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>() * p.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Threshold-detector clicks `[+, −]` of one pulse given its first photon's
/// outcome and `extra` additional photons.
fn clicks<R: Rng + ?Sized>(rng: &mut R, first: usize, extra: u64, single: &[f64; 3]) -> [bool; 2] {
    let mut c = [first == 0, first == 1];
    for _ in 0..extra {
        match pick(rng, single) {
            0 => c[0] = true,
            1 => c[1] = true,
            _ => {}
        }
    }
    c
}

fn sample_counts(model: &SettingModel, budget: &EfficiencyBudget, shots: u64, source: Source, rng: &mut ChaCha8Rng) -> Result<[f64; 4]> {
    let mut counts = [0u64; 4];
    match source {
        Source::Fock => {
            // Conditional binomials give a multinomial over the nine outcomes.
            let p = model.detected();
            let mut left = shots;
            let mut mass = 1.0;
            for (k, &pk) in p.iter().enumerate() {
                if left == 0 || mass <= 0.0 {
                    break;
                }
                let q = (pk / mass).clamp(0.0, 1.0);
                let n = Binomial::new(left, q).map_err(|e| Error::invalid("probability", e.to_string()))?.sample(rng);
                counts[k] = n;
                left -= n;
                mass -= pk;
            }
        }
        Source::Poisson => {
            let pc = Poisson::new(budget.n_c).map_err(|e| Error::invalid("n_c", e.to_string()))?;
            let pt = Poisson::new(budget.n_t).map_err(|e| Error::invalid("n_t", e.to_string()))?;
            let flat: Vec<f64> = model.joint.iter().flatten().copied().collect();
            for _ in 0..shots {
                let kc = pc.sample(rng) as u64;
                let kt = pt.sample(rng) as u64;
                if kc == 0 || kt == 0 {
                    continue;
                }
                let j = pick(rng, &flat);
                let cc = clicks(rng, j / 3, kc - 1, &model.single_c);
                let ct = clicks(rng, j % 3, kt - 1, &model.single_t);
                // Post-selection: exactly one click per qubit.
                if cc[0] != cc[1] && ct[0] != ct[1] {
                    let a = usize::from(cc[1]);
                    let b = usize::from(ct[1]);
                    counts[2 * a + b] += 1;
                }
            }
        }
    }
    Ok(counts.map(|n| n as f64))
}

/// Coincidence records of `rho` (in `{RR, RL, LR, LL}`) for each setting.
///
/// Expected mode returns `shots · p_pair · Tr(Eₐ⊗E_b ρ)` with
/// `p_pair = (1 − e^{−n_c})(1 − e^{−n_t})`. Sampled mode draws setting `k`
/// from ChaCha stream `k` of the seed.
pub fn simulate_counts(rho: &Matrix4c, budget: &EfficiencyBudget, settings: &[Setting], shots: u64, mode: CountMode) -> Result<Vec<CountRecord>> {
    budget.validate()?;
    let tr = rho.trace().re;
    if !(tr > 0.0) || (rho - rho.adjoint()).norm() > 1e-9 {
        return Err(Error::invalid("state", "must be Hermitian with positive trace"));
    }
    let rho = rho / Complex64::new(tr, 0.0);
    let records: Vec<Result<CountRecord>> = settings
        .par_iter()
        .enumerate()
        .map(|(k, &setting)| {
            let model = SettingModel::new(&rho, setting, budget);
            let counts = match mode {
                CountMode::Expected => {
                    let p_pair = (1.0 - (-budget.n_c).exp()) * (1.0 - (-budget.n_t).exp());
                    model.detected().map(|p| shots as f64 * p_pair * p)
                }
                CountMode::Sampled { seed, source } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    sample_counts(&model, budget, shots, source, &mut rng)?
                }
            };
            Ok(CountRecord { setting, counts, shots })
        })
        .collect();
    records.into_iter().collect()
}

/// Coincidences per minute implied by a set of records.
pub fn coincidences_per_minute(records: &[CountRecord], budget: &EfficiencyBudget) -> f64 {
    let shots: u64 = records.iter().map(|r| r.shots).sum();
    let counts: f64 = records.iter().map(CountRecord::total).sum();
    if shots == 0 {
        return 0.0;
    }
    counts / shots as f64 * budget.shots_per_sample * 60.0 / budget.sample_period_s
}

fn pauli(i: usize) -> Matrix2c {
    match i {
        0 => Matrix2c::identity(),
        1 => Basis::HV.observable(),
        2 => Basis::DA.observable(),
        _ => Basis::RL.observable(),
    }
}

fn basis_index(b: Basis) -> usize {
    match b {
        Basis::HV => 1,
        Basis::DA => 2,
        Basis::RL => 3,
    }
}

/// Linear inversion `ρ = ¼ Σ T_ij σᵢ⊗σⱼ` from normalized count differences.
/// Single-qubit terms average the three settings that share the analyser.
pub fn reconstruct_linear(records: &[CountRecord]) -> Result<DensityMatrix4> {
    let mut t = [[0.0f64; 4]; 4];
    let mut seen = [[false; 4]; 4];
    let mut n1 = [0usize; 4];
    let mut n2 = [0usize; 4];
    for r in records {
        let n = r.total();
        if !(n > 0.0) {
            return Err(Error::ZeroCoincidences(format!("{}/{}", r.setting.q1.label(), r.setting.q2.label())));
        }
        let [pp, pm, mp, mm] = r.counts.map(|c| c / n);
        let (i, j) = (basis_index(r.setting.q1), basis_index(r.setting.q2));
        if seen[i][j] {
            return Err(Error::invalid("records", format!("duplicate setting {}/{}", r.setting.q1.label(), r.setting.q2.label())));
        }
        seen[i][j] = true;
        t[i][j] = pp - pm - mp + mm;
        t[i][0] += pp + pm - mp - mm;
        t[0][j] += pp - pm + mp - mm;
        n1[i] += 1;
        n2[j] += 1;
    }
    for s in all_settings() {
        if !seen[basis_index(s.q1)][basis_index(s.q2)] {
            return Err(Error::MissingSetting(format!("{}/{}", s.q1.label(), s.q2.label())));
        }
    }
    for k in 1..4 {
        t[k][0] /= n1[k] as f64;
        t[0][k] /= n2[k] as f64;
    }
    t[0][0] = 1.0;
    let mut rho = Matrix4c::zeros();
    for (i, row) in t.iter().enumerate() {
        for (j, &tij) in row.iter().enumerate() {
            rho += kron2(&pauli(i), &pauli(j)) * Complex64::new(0.25 * tij, 0.0);
        }
    }
    Ok(DensityMatrix4::raw(rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    pub stderr: Option<f64>,
    /// `F > 1/2`, the entanglement witness threshold.
    pub entangled: bool,
}

/// `Re⟨ψ|ρ|ψ⟩` with no error bar.
pub fn fidelity_estimate(rho: &DensityMatrix4, target: &Vector4c) -> FidelityEstimate {
    let fidelity = rho.fidelity(target);
    FidelityEstimate {
        fidelity,
        stderr: None,
        entangled: fidelity > 0.5,
    }
}

/// Fidelity of the linear estimate with a parametric bootstrap error: each
/// record is redrawn multinomially at its observed frequencies.
pub fn fidelity_estimate_with_counts(records: &[CountRecord], target: &Vector4c, resamples: usize, seed: u64) -> Result<FidelityEstimate> {
    let rho = reconstruct_linear(records)?;
    let mut est = fidelity_estimate(&rho, target);
    if resamples < 2 {
        return Ok(est);
    }
    let samples: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let redrawn: Vec<CountRecord> = records
                .iter()
                .map(|r| {
                    let n = r.total().round() as u64;
                    let mut counts = [0.0; 4];
                    let mut left = n;
                    let mut mass = r.total();
                    for k in 0..4 {
                        if left == 0 || mass <= 0.0 {
                            break;
                        }
                        let q = (r.counts[k] / mass).clamp(0.0, 1.0);
                        let x = Binomial::new(left, q).map(|d| d.sample(&mut rng)).unwrap_or(0);
                        counts[k] = x as f64;
                        left -= x;
                        mass -= r.counts[k];
                    }
                    CountRecord { counts, ..*r }
                })
                .collect();
            reconstruct_linear(&redrawn).map(|rho| rho.fidelity(target)).unwrap_or(f64::NAN)
        })
        .collect();
    let ok: Vec<f64> = samples.into_iter().filter(|f| f.is_finite()).collect();
    if ok.len() >= 2 {
        let m = ok.iter().sum::<f64>() / ok.len() as f64;
        let var = ok.iter().map(|f| (f - m).powi(2)).sum::<f64>() / (ok.len() - 1) as f64;
        est.stderr = Some(var.sqrt());
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredTruthTable {
    pub kind: TruthTableKind,
    pub labels: [String; 4],
    /// `probability[input][output]` from post-selected coincidences.
    pub probability: [[f64; 4]; 4],
    /// Binomial standard errors of `probability`.
    pub stderr: [[f64; 4]; 4],
    pub coincidences: [f64; 4],
    pub fidelity: f64,
    pub fidelity_stderr: f64,
}

/// Prepares each input of `kind` repeatedly, passes it through `channel`
/// and the detection losses of `budget`, and tallies the four outputs.
/// Losses already encoded in the ξ of `channel` are not repeated by the
/// budget, so one of the two should carry them.
pub fn truth_table_measurement(channel: &GateChannel, kind: TruthTableKind, budget: &EfficiencyBudget, shots: u64, mode: CountMode) -> Result<MeasuredTruthTable> {
    channel.xi.validate()?;
    let (bc, bt) = match kind {
        TruthTableKind::Circular => (Basis::RL, Basis::RL),
        TruthTableKind::CnotA => (Basis::HV, Basis::RL),
        TruthTableKind::CnotB => (Basis::RL, Basis::HV),
    };
    let setting = Setting { q1: bc, q2: bt };
    let ideal = crate::gate::ideal_outputs(kind);
    let mut probability = [[0.0; 4]; 4];
    let mut stderr = [[0.0; 4]; 4];
    let mut coincidences = [0.0; 4];
    let mut fid_var = 0.0;
    for (i, input) in kind.states().iter().enumerate() {
        let rho = channel
            .output(input)
            .ok_or_else(|| Error::invalid("xi", "the gate absorbs every two-photon component"))?;
        let mode_i = match mode {
            CountMode::Sampled { seed, source } => CountMode::Sampled {
                seed: seed.wrapping_add(i as u64),
                source,
            },
            m => m,
        };
        let rec = simulate_counts(&rho, budget, &[setting], shots, mode_i)?[0];
        let n = rec.total();
        if !(n > 0.0) {
            return Err(Error::ZeroCoincidences(kind.labels()[i].clone()));
        }
        coincidences[i] = n;
        for o in 0..4 {
            let p = rec.counts[o] / n;
            probability[i][o] = p;
            stderr[i][o] = (p * (1.0 - p) / n).sqrt();
        }
        fid_var += stderr[i][ideal[i]].powi(2);
    }
    let fidelity = (0..4).map(|i| probability[i][ideal[i]]).sum::<f64>() / 4.0;
    Ok(MeasuredTruthTable {
        kind,
        labels: kind.labels(),
        probability,
        stderr,
        coincidences,
        fidelity,
        fidelity_stderr: fid_var.sqrt() / 4.0,
    })
}

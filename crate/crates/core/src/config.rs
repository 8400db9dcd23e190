//! Run configuration. Keys carry their unit as a suffix (`_mhz` for ν = ω/2π,
//! `_per_us`, `_um`, `_nm`, `_au`, `_rad`, `_s`); unknown keys are rejected.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::eit::{Drive, MediumParams};
use crate::gate::{EfficiencyBudget, HoppingInputs, NoiseModel};
use crate::optimizer::GridSpec;
use crate::tomography::Source;
use crate::units::{c6_from_au, mhz_to_rad, per_cm3_to_per_m3, per_us_to_per_s, wavenumber_from_nm};
use crate::{Error, Result};

/// The configuration bundled with the crate.
pub const REFERENCE_TOML: &str = include_str!("../reference.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    /// Γe/2π.
    pub linewidth_mhz: f64,
    pub gamma_rg_per_us: f64,
    pub density_per_cm3: f64,
    /// Transition dipole, C·m.
    pub dipole_c_m: f64,
    pub wavelength_nm: f64,
    pub length_um: f64,
    pub c6_au: f64,
    /// Replaces the χ₀ derived from density and dipole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi0: Option<f64>,
}

impl MediumSection {
    pub fn to_params(&self) -> Result<MediumParams> {
        let m = MediumParams {
            gamma_e: mhz_to_rad(self.linewidth_mhz),
            gamma_rg: per_us_to_per_s(self.gamma_rg_per_us),
            density: per_cm3_to_per_m3(self.density_per_cm3),
            d_ge: self.dipole_c_m,
            k_s: wavenumber_from_nm(self.wavelength_nm),
            length: self.length_um * 1e-6,
            c6: c6_from_au(self.c6_au),
            chi0_override: self.chi0,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub omega_c_mhz: f64,
    pub delta_s_mhz: f64,
    pub delta_c_mhz: f64,
}

impl DriveSection {
    pub fn to_drive(&self) -> Result<Drive> {
        Drive::new(mhz_to_rad(self.omega_c_mhz), mhz_to_rad(self.delta_s_mhz), mhz_to_rad(self.delta_c_mhz))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockadeSection {
    /// Storage position from the entrance face; absent means deep in the bulk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_s_um: Option<f64>,
    /// Grid of storage positions for sweeps.
    pub sweep_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub delta_s_min_mhz: f64,
    pub delta_s_max_mhz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingSection {
    pub omega_c_mhz: f64,
    /// Signal detuning at which the EIT transmission peaks; fixes Δc.
    pub eit_peak_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    /// Grid bounds on |Δs| and Ωc in units of Γe.
    pub delta_s_min_gamma: f64,
    pub delta_s_max_gamma: f64,
    pub delta_s_points: usize,
    pub omega_min_gamma: f64,
    pub omega_max_gamma: f64,
    pub omega_points: usize,
    pub beta_tol_rad: f64,
    /// γrg values for the feasibility sweep.
    pub gamma_rg_sweep_per_us: Vec<f64>,
}

impl OptimizerSection {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            delta_s_min: self.delta_s_min_gamma,
            delta_s_max: self.delta_s_max_gamma,
            n_delta_s: self.delta_s_points,
            omega_min: self.omega_min_gamma,
            omega_max: self.omega_max_gamma,
            n_omega: self.omega_points,
            beta_tol: self.beta_tol_rad,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilitySection {
    pub l_over_rb: f64,
    pub l_over_rb_min: f64,
    pub l_over_rb_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub mean_beta1_rad: f64,
    pub mean_beta2_rad: f64,
    pub mean_beta3_rad: f64,
    pub monte_carlo_samples: usize,
    pub monte_carlo_tasks: usize,
}

impl NoiseSection {
    pub fn model(&self) -> Result<NoiseModel> {
        let m = NoiseModel {
            v: [self.v1, self.v2, self.v3],
            mean_beta: [self.mean_beta1_rad, self.mean_beta2_rad, self.mean_beta3_rad],
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySection {
    pub v_c: f64,
    pub v_t: f64,
    pub eps_r: f64,
    pub eps_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub eta_r: f64,
    pub eta_l: f64,
    pub t_r: f64,
    pub t_l: f64,
    pub detector_qe: f64,
    pub n_c: f64,
    pub n_t: f64,
    pub path_c: f64,
    pub path_t: f64,
    pub shots_per_sample: f64,
    pub sample_period_s: f64,
}

impl BudgetSection {
    pub fn budget(&self) -> Result<EfficiencyBudget> {
        let b = EfficiencyBudget {
            eta_r: self.eta_r,
            eta_l: self.eta_l,
            t_r: self.t_r,
            t_l: self.t_l,
            detector_qe: self.detector_qe,
            n_c: self.n_c,
            n_t: self.n_t,
            path_c: self.path_c,
            path_t: self.path_t,
            shots_per_sample: self.shots_per_sample,
            sample_period_s: self.sample_period_s,
        };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RChannelSection {
    /// Factor by which χ₀ is reduced for the target R polarization.
    pub strength_ratio: f64,
    pub delta_s_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoppingSection {
    pub t_d_us: f64,
    pub tau_us: f64,
    pub eta: f64,
    pub t_single: f64,
    pub interaction_factor: f64,
    pub c6_over_chi6: f64,
}

impl HoppingSection {
    pub fn inputs(&self) -> HoppingInputs {
        HoppingInputs {
            t_d: self.t_d_us * 1e-6,
            tau: self.tau_us * 1e-6,
            eta: self.eta,
            t_single: self.t_single,
            interaction_factor: self.interaction_factor,
            c6_over_chi6: self.c6_over_chi6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Poisson,
    Fock,
    /// Mean counts without sampling.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    pub shots_per_setting: u64,
    pub source: SourceKind,
    pub bootstrap_resamples: usize,
}

impl TomographySection {
    /// Sampling source, or `None` for expected-value mode.
    pub fn sampling_source(&self) -> Option<Source> {
        match self.source {
            SourceKind::Poisson => Some(Source::Poisson),
            SourceKind::Fock => Some(Source::Fock),
            SourceKind::Expected => None,
        }
    }
}

/// Complete run configuration. Only `[medium]` is mandatory; commands that
/// need another section report its absence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub medium: MediumSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blockade: Option<BlockadeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing: Option<CrossingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<VisibilitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_channel: Option<RChannelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hopping: Option<HoppingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographySection>,
}

fn missing(section: &str) -> Error {
    Error::invalid("config", format!("missing [{section}] section"))
}

macro_rules! section {
    ($name:ident, $ty:ty) => {
        pub fn $name(&self) -> Result<&$ty> {
            self.$name.as_ref().ok_or_else(|| missing(stringify!($name)))
        }
    };
}

impl RunConfig {
    /// The bundled configuration.
    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_TOML).expect("bundled configuration parses")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::invalid("config", e.to_string()))?;
        cfg.medium.to_params()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::invalid("config", e.to_string()))?;
        cfg.medium.to_params()?;
        Ok(cfg)
    }

    /// Reads JSON for a `.json` extension and TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::invalid("config", format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn medium_params(&self) -> Result<MediumParams> {
        self.medium.to_params()
    }

    /// Seed from the command line, else from the file. Sampling needs one.
    pub fn seed_or(&self, cli: Option<u64>) -> Result<u64> {
        cli.or(self.seed)
            .ok_or_else(|| Error::invalid("seed", "sampling commands need a seed (--seed or `seed` in the config)"))
    }

    section!(drive, DriveSection);
    section!(blockade, BlockadeSection);
    section!(spectrum, SpectrumSection);
    section!(crossing, CrossingSection);
    section!(optimizer, OptimizerSection);
    section!(visibility, VisibilitySection);
    section!(noise, NoiseSection);
    section!(fidelity, FidelitySection);
    section!(budget, BudgetSection);
    section!(r_channel, RChannelSection);
    section!(hopping, HoppingSection);
    section!(tomography, TomographySection);
}

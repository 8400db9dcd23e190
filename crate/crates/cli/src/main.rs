//! `rydpol`: command-line front-end for the gate model.
//!
//! Subcommand flags are folded into the run configuration before anything is
//! computed, so the echo written by `--echo-config` reproduces the run.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rydpol_core::blockade::{conditional_response, storage_sweep, StoragePosition};
use rydpol_core::config::{RunConfig, SourceKind};
use rydpol_core::eit::{spectrum, Drive};
use rydpol_core::gate::{
    efficiency_matrix, entangling_fidelity, entangling_fidelity_bound, hopping_comparison, ideal_output, input_hh, memory_fidelity,
    monte_carlo_entangling_fidelity, target_r_channel, target_visibility, truth_table, TruthTableKind,
};
use rydpol_core::numeric::linspace;
use rydpol_core::optimizer::{analytic_optimum, brute_force_optimum, sweep_gamma_rg, OperatingPoint};
use rydpol_core::tomography::{all_settings, fidelity_estimate_with_counts, reconstruct_linear, simulate_counts, truth_table_measurement, CountMode};
use rydpol_core::units::{mhz_to_rad, per_us_to_per_s, rad_to_mhz};
use rydpol_core::visibility::visibility_curve;
use rydpol_core::{export, repro, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "rydpol", version, about = "Rydberg-EIT photon-photon gate model")]
struct Cli {
    /// Run configuration (TOML, or JSON by extension). Defaults to the bundled one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampling commands; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Writes the effective configuration to this path before running.
    #[arg(long, global = true)]
    echo_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Circular,
    CnotA,
    CnotB,
}

impl From<Kind> for TruthTableKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Circular => TruthTableKind::Circular,
            Kind::CnotA => TruthTableKind::CnotA,
            Kind::CnotB => TruthTableKind::CnotB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    Poisson,
    Fock,
    Expected,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Susceptibility and propagation versus signal detuning.
    Spectrum {
        #[arg(long)]
        dmin: Option<f64>,
        #[arg(long)]
        dmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Without coupling light.
        #[arg(long)]
        two_level: bool,
    },
    /// Blockade radii and conditional response at the configured drive.
    Blockade {
        /// Storage position from the entrance face, µm; bulk when absent.
        #[arg(long)]
        z_s_um: Option<f64>,
        /// Response versus storage position across the medium.
        #[arg(long)]
        sweep: bool,
    },
    /// Operating point with Δβ = π and ΔOD = 0.
    Optimize {
        /// Grid search instead of the closed form.
        #[arg(long)]
        brute_force: bool,
        /// Optimum versus dephasing rate.
        #[arg(long)]
        gamma_sweep: bool,
    },
    /// Target visibility at β₄ = π versus L/r_b.
    VisibilityCurve {
        #[arg(long)]
        lmin: Option<f64>,
        #[arg(long)]
        lmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Post-selected truth table of the noisy gate model.
    TruthTable {
        #[arg(long, value_enum, default_value = "cnot-a")]
        kind: Kind,
        /// Simulated coincidences per input instead of exact probabilities.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Entangling-fidelity bound, model fidelity and memory fidelity.
    FidelityBound {
        #[arg(long)]
        v_c: Option<f64>,
        #[arg(long)]
        v_t: Option<f64>,
        /// Adds the von Mises phase average of F_β.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// Simulated tomography of the gate output for input |HH⟩.
    TomographySim {
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, value_enum)]
        source: Option<SourceArg>,
        /// Also write the count records as CSV here.
        #[arg(long)]
        counts_out: Option<PathBuf>,
    },
    /// Excitation-hopping efficiency extrapolation and efficiency budget.
    HoppingCompare,
    /// Compares model outputs against reference values.
    Repro {
        /// Target name, or `all`.
        target: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) | Error::NoCrossing { .. } | Error::NoRoot(_) | Error::NonPhysical { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn io_error(e: io::Error) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("RYDPOL_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| config_error(format!("RYDPOL_THREADS must be a positive integer, got {v}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error(e.to_string()))?;
    }
    Ok(())
}

fn positive(name: &str, v: usize) -> Result<usize, Failure> {
    if v == 0 {
        Err(config_error(format!("{name} must be positive")))
    } else {
        Ok(v)
    }
}

/// Folds subcommand flags into the configuration.
fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) -> Result<(), Failure> {
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    match &cli.command {
        Command::Spectrum { dmin, dmax, points, .. } => {
            let s = cfg.spectrum.as_mut().ok_or_else(|| config_error("missing [spectrum] section"))?;
            s.delta_s_min_mhz = dmin.unwrap_or(s.delta_s_min_mhz);
            s.delta_s_max_mhz = dmax.unwrap_or(s.delta_s_max_mhz);
            s.points = positive("points", points.unwrap_or(s.points))?;
        }
        Command::Blockade { z_s_um: Some(z), .. } => {
            let b = cfg.blockade.as_mut().ok_or_else(|| config_error("missing [blockade] section"))?;
            b.z_s_um = Some(*z);
        }
        Command::VisibilityCurve { lmin, lmax, points } => {
            let v = cfg.visibility.as_mut().ok_or_else(|| config_error("missing [visibility] section"))?;
            v.l_over_rb_min = lmin.unwrap_or(v.l_over_rb_min);
            v.l_over_rb_max = lmax.unwrap_or(v.l_over_rb_max);
            v.points = positive("points", points.unwrap_or(v.points))?;
        }
        Command::FidelityBound { v_c, v_t, .. } => {
            let f = cfg.fidelity.as_mut().ok_or_else(|| config_error("missing [fidelity] section"))?;
            f.v_c = v_c.unwrap_or(f.v_c);
            f.v_t = v_t.unwrap_or(f.v_t);
        }
        Command::TomographySim { shots, source, .. } => {
            let t = cfg.tomography.as_mut().ok_or_else(|| config_error("missing [tomography] section"))?;
            t.shots_per_setting = shots.unwrap_or(t.shots_per_setting);
            if let Some(s) = source {
                t.source = match s {
                    SourceArg::Poisson => SourceKind::Poisson,
                    SourceArg::Fock => SourceKind::Fock,
                    SourceArg::Expected => SourceKind::Expected,
                };
            }
        }
        _ => {}
    }
    Ok(())
}

enum Output {
    Csv(Vec<u8>),
    Json(Value),
    Text(String),
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::reference(),
    };
    apply_overrides(&mut cfg, &cli)?;
    if let Some(p) = &cli.echo_config {
        std::fs::write(p, cfg.to_toml_string()).map_err(io_error)?;
    }
    let (output, code) = execute(&cli, &cfg)?;
    let bytes = match output {
        Output::Csv(b) => b,
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(&v).expect("JSON values serialize");
            s.push('\n');
            s.into_bytes()
        }
        Output::Text(s) => s.into_bytes(),
    };
    match &cli.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_error)?);
            w.write_all(&bytes).map_err(io_error)?;
            w.flush().map_err(io_error)?;
        }
        None => io::stdout().write_all(&bytes).map_err(io_error)?,
    }
    Ok(code)
}

fn csv_or_json<F>(format: Format, rows: F, json: impl FnOnce() -> Value) -> Result<Output, Failure>
where
    F: FnOnce(&mut Vec<u8>) -> rydpol_core::Result<()>,
{
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            rows(&mut buf)?;
            Output::Csv(buf)
        }
        Format::Json => Output::Json(json()),
    })
}

fn operating_point_json(op: &OperatingPoint) -> Value {
    json!({
        "delta_s_mhz": rad_to_mhz(op.delta_s),
        "omega_c_mhz": rad_to_mhz(op.omega_c),
        "delta_cu_mhz": rad_to_mhz(op.delta_cu),
        "two_photon_detuning_mhz": rad_to_mhz(op.two_photon_detuning()),
        "zeta": op.zeta,
        "im_chi_b": op.im_chi_b,
        "transmission": op.predicted_transmission,
    })
}

/// The configured drive, or the analytic optimum when none is given.
fn drive_for(cfg: &RunConfig) -> Result<Drive, Failure> {
    match &cfg.drive {
        Some(d) => Ok(d.to_drive()?),
        None => Ok(analytic_optimum(&cfg.medium_params()?)?.drive()),
    }
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<(Output, u8), Failure> {
    let medium = cfg.medium_params()?;
    let out = match &cli.command {
        Command::Spectrum { two_level, .. } => {
            let s = cfg.spectrum()?;
            let template = if *two_level { Drive::two_level(0.0) } else { drive_for(cfg)? };
            let grid: Vec<f64> = linspace(s.delta_s_min_mhz, s.delta_s_max_mhz, s.points).into_iter().map(mhz_to_rad).collect();
            let pts = spectrum(&medium, &template, &grid);
            csv_or_json(cli.format.unwrap_or(Format::Csv), |w| export::write_spectrum(w, &pts), || {
                Value::Array(
                    pts.iter()
                        .map(|p| {
                            json!({
                                "delta_s_mhz": rad_to_mhz(p.delta_s),
                                "re_chi": p.chi.re(),
                                "im_chi": p.chi.im(),
                                "od": p.propagation.od,
                                "beta_rad": p.propagation.beta,
                                "transmission": p.propagation.transmission,
                            })
                        })
                        .collect(),
                )
            })?
        }
        Command::Blockade { sweep, .. } => {
            let drive = drive_for(cfg)?;
            let b = cfg.blockade()?;
            if *sweep {
                let z = linspace(0.0, medium.length, positive("sweep_points", b.sweep_points)?);
                let pts = storage_sweep(&medium, &drive, &z)?;
                csv_or_json(cli.format.unwrap_or(Format::Csv), |w| export::write_storage_sweep(w, &pts), || {
                    Value::Array(
                        pts.iter()
                            .map(|p| json!({"z_s_um": p.z_s * 1e6, "l_b_um": p.l_b * 1e6, "delta_od": p.delta_od, "delta_beta_rad": p.delta_beta}))
                            .collect(),
                    )
                })?
            } else {
                let position = b.z_s_um.map_or(StoragePosition::Bulk, |z| StoragePosition::At(z * 1e-6));
                let r = conditional_response(&medium, &drive, position)?;
                Output::Json(json!({
                    "r_b_um": r.r_b * 1e6,
                    "r_b_im_um": r.r_b_im.map(|x| x * 1e6),
                    "z_s_um": r.z_s.map(|x| x * 1e6),
                    "l_b_um": r.l_b * 1e6,
                    "l_b_im_um": r.l_b_im * 1e6,
                    "chi_u": [r.chi_u.re(), r.chi_u.im()],
                    "chi_b": [r.chi_b.re(), r.chi_b.im()],
                    "delta_od": r.delta_od,
                    "delta_beta_rad": r.delta_beta,
                    "od_b": r.od_b,
                }))
            }
        }
        Command::Optimize { brute_force, gamma_sweep } => {
            if *gamma_sweep {
                let g: Vec<f64> = cfg.optimizer()?.gamma_rg_sweep_per_us.iter().map(|&x| per_us_to_per_s(x)).collect();
                let rows = sweep_gamma_rg(&medium, &g);
                csv_or_json(cli.format.unwrap_or(Format::Csv), |w| export::write_gamma_sweep(w, &rows), || {
                    Value::Array(
                        rows.iter()
                            .map(|r| {
                                json!({
                                    "gamma_rg_per_us": r.gamma_rg * 1e-6,
                                    "zeta": r.zeta,
                                    "optimum": r.point.as_ref().map(operating_point_json),
                                })
                            })
                            .collect(),
                    )
                })?
            } else {
                let op = if *brute_force {
                    brute_force_optimum(&medium, &cfg.optimizer()?.grid())?
                } else {
                    analytic_optimum(&medium)?
                };
                Output::Json(operating_point_json(&op))
            }
        }
        Command::VisibilityCurve { .. } => {
            let v = cfg.visibility()?;
            if !(v.l_over_rb_min > 0.0 && v.l_over_rb_max >= v.l_over_rb_min) {
                return Err(config_error("need 0 < lmin <= lmax"));
            }
            let entries = visibility_curve(&linspace(v.l_over_rb_min, v.l_over_rb_max, v.points));
            csv_or_json(cli.format.unwrap_or(Format::Csv), |w| export::write_visibility_curve(w, &entries), || {
                serde_json::to_value(&entries).expect("curve serializes")
            })?
        }
        Command::TruthTable { kind, shots } => {
            let channel = cfg.noise()?.model()?.channel([0.0; 4]);
            let kind: TruthTableKind = (*kind).into();
            match shots {
                Some(n) => {
                    let seed = cfg.seed_or(None)?;
                    let source = cfg.tomography()?.sampling_source();
                    let mode = source.map_or(CountMode::Expected, |source| CountMode::Sampled { seed, source });
                    let t = truth_table_measurement(&channel, kind, &cfg.budget()?.budget()?, *n, mode)?;
                    csv_or_json(cli.format.unwrap_or(Format::Json), |w| export::write_measured_truth_table(w, &t), || {
                        serde_json::to_value(&t).expect("table serializes")
                    })?
                }
                None => {
                    let t = truth_table(&channel, kind)?;
                    csv_or_json(cli.format.unwrap_or(Format::Json), |w| export::write_truth_table(w, &t), || {
                        serde_json::to_value(&t).expect("table serializes")
                    })?
                }
            }
        }
        Command::FidelityBound { monte_carlo, .. } => {
            let f = cfg.fidelity()?;
            let n = cfg.noise()?;
            let model = n.model()?;
            let mut v = json!({
                "v_c": f.v_c,
                "v_t": f.v_t,
                "bound": entangling_fidelity_bound(f.v_c, f.v_t),
                "model": {
                    "v": model.v,
                    "v_t": target_visibility(model.v[1], model.v[2]),
                    "fidelity": entangling_fidelity(model.v[0], model.v[1], model.v[2]),
                },
                "memory_fidelity": memory_fidelity(f.v_c, f.eps_r, f.eps_l),
            });
            if *monte_carlo {
                let seed = cfg.seed_or(None)?;
                let mc = monte_carlo_entangling_fidelity(&model, n.monte_carlo_samples, n.monte_carlo_tasks, seed)?;
                v["model"]["monte_carlo"] = json!({"fidelity": mc, "samples": n.monte_carlo_samples, "tasks": n.monte_carlo_tasks, "seed": seed});
            }
            Output::Json(v)
        }
        Command::TomographySim { counts_out, .. } => {
            let t = cfg.tomography()?;
            let channel = cfg.noise()?.model()?.channel([0.0; 4]);
            let rho = channel.output(&input_hh()).ok_or_else(|| Failure::from(Error::Infeasible("no two-photon output".into())))?;
            let budget = cfg.budget()?.budget()?;
            // Detection losses are left out: at the reference rates nine
            // settings would need ~10⁹ shots to collect usable statistics.
            let lossless = rydpol_core::gate::EfficiencyBudget {
                n_c: budget.n_c,
                n_t: budget.n_t,
                ..rydpol_core::gate::EfficiencyBudget::unity()
            };
            let seed = cfg.seed_or(None)?;
            let mode = t.sampling_source().map_or(CountMode::Expected, |source| CountMode::Sampled { seed, source });
            let records = simulate_counts(&rho, &lossless, &all_settings(), t.shots_per_setting, mode)?;
            if let Some(p) = counts_out {
                let f = BufWriter::new(File::create(p).map_err(io_error)?);
                export::write_counts(f, &records)?;
            }
            match cli.format.unwrap_or(Format::Json) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    export::write_counts(&mut buf, &records)?;
                    Output::Csv(buf)
                }
                Format::Json => {
                    let est = reconstruct_linear(&records)?;
                    let fid = fidelity_estimate_with_counts(&records, &ideal_output(), t.bootstrap_resamples, seed)?;
                    Output::Json(json!({
                        "rho": est.to_json(),
                        "fidelity": fid,
                        "negative_eigenvalue": est.has_negative_eigenvalue(1e-12),
                    }))
                }
            }
        }
        Command::HoppingCompare => {
            let h = hopping_comparison(&cfg.hopping()?.inputs())?;
            let e = efficiency_matrix(&cfg.budget()?.budget()?)?;
            let r = cfg.r_channel()?;
            let rc = target_r_channel(&medium, r.strength_ratio, mhz_to_rad(r.delta_s_mhz))?;
            Output::Json(json!({
                "hopping": h,
                "efficiency": e,
                "target_r_channel": {"strength_ratio": r.strength_ratio, "delta_s_mhz": r.delta_s_mhz, "od": rc.od, "beta_rad": rc.beta, "transmission": rc.transmission},
            }))
        }
        Command::Repro { target } => {
            let checks = repro::run_target(target, cfg)?;
            let failed = checks.iter().any(|c| !c.pass);
            let out = match cli.format.unwrap_or(Format::Csv) {
                Format::Json => Output::Json(serde_json::to_value(&checks).expect("checks serialize")),
                Format::Csv => Output::Text(checks.iter().map(|c| c.line() + "\n").collect()),
            };
            return Ok((out, u8::from(failed)));
        }
    };
    Ok((out, 0))
}

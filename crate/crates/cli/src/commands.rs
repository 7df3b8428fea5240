use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Subcommand, ValueEnum};
use kappa_causal::algebra::{algebra_selftest, KappaParams};
use kappa_causal::cone::{cone_check_with, cone_sample_family, ConeCandidate, ConeSettings};
use kappa_causal::evolution::{
    condsuff_residual, evolution_causality_scan, transport_integrate_recording, zecomparaison_residual, ResidualMode,
};
use kappa_causal::representation::{verify_twisted_axioms, AxiomSettings, RepSign};
use kappa_causal::states::{
    light_cone_family, necessary_causal, order_test, sweep, write_sweep_csv, StateSpec, SweepSettings,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_json, Format, GlobalArgs, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Condsuff,
    Zecomparaison,
    Scan,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Twisted spectral-triple axioms on random Gaussian test functions.
    VerifyAxioms {
        #[arg(long, default_value_t = 32)]
        trials: usize,
    },
    /// Causal-cone membership of a candidate read from JSON.
    ConeCheck {
        #[arg(long)]
        candidate: PathBuf,
        /// Skip the repeat on the refined grid.
        #[arg(long)]
        no_refine: bool,
    },
    /// Speed-of-light constraint and order test between two states.
    StateCausality {
        #[arg(long)]
        state1: PathBuf,
        #[arg(long)]
        state2: PathBuf,
        /// Use a sampled cone family of this size instead of {x0, x0 ± x1}.
        #[arg(long)]
        family: Option<usize>,
    },
    /// Constraint slack over a grid of Gaussian displacements.
    Sweep {
        #[arg(long, default_value_t = 21)]
        n_s: usize,
        #[arg(long, default_value_t = 21)]
        n_p: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        s0: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        p0: f64,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        nu: i8,
    },
    /// Integrates the transport equation and optionally checks the trajectory.
    Evolve {
        #[arg(long)]
        phi0: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        #[arg(long, value_enum)]
        check: Option<Check>,
        /// Residuals on every node instead of every fourth.
        #[arg(long)]
        full_grid: bool,
        /// Writes the trajectory frames as JSON.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Star-product, involution and derivation identities on random plane-wave sums.
    AlgebraSelftest {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyAxioms { .. } => "verify-axioms",
            Command::ConeCheck { .. } => "cone-check",
            Command::StateCausality { .. } => "state-causality",
            Command::Sweep { .. } => "sweep",
            Command::Evolve { .. } => "evolve",
            Command::AlgebraSelftest { .. } => "algebra-selftest",
        }
    }

    fn tolerance_name(&self) -> &'static str {
        match self {
            Command::VerifyAxioms { .. } => "axioms",
            Command::ConeCheck { .. } => "cone",
            Command::StateCausality { .. } | Command::Sweep { .. } => "state",
            Command::Evolve { .. } => "evolution",
            Command::AlgebraSelftest { .. } => "algebra",
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    inputs: serde_json::Value,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a T>,
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Input(e.to_string())),
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("reports serialize");
    b.push(b'\n');
    b
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

/// Writes the JSON report, or the CSV table plus a `<out>.config.json`
/// sidecar holding the rest of the report.
fn emit<T: Serialize>(
    cfg: &RunConfig,
    command: &str,
    inputs: serde_json::Value,
    pass: bool,
    result: &T,
    csv: Result<Vec<u8>, CliError>,
) -> Result<(), CliError> {
    let out = cfg.output_path.as_deref();
    match cfg.format {
        Format::Json => {
            let report = Report { command, config: cfg, inputs, pass, result: Some(result) };
            write_out(out, &json_bytes(&report))
        }
        Format::Csv => {
            write_out(out, &csv?)?;
            if let Some(p) = out {
                let mut side = p.as_os_str().to_owned();
                side.push(".config.json");
                let report = Report::<()> { command, config: cfg, inputs, pass, result: None };
                write_out(Some(Path::new(&side)), &json_bytes(&report))?;
            }
            Ok(())
        }
    }
}

pub fn run(command: &Command, global: &GlobalArgs) -> Result<bool, CliError> {
    let default_format = if matches!(command, Command::Sweep { .. }) { Format::Csv } else { Format::Json };
    let cfg = RunConfig::resolve(command.tolerance_name(), default_format, global)?;
    if let Some(n) = cfg.threads {
        // Fails only when a pool already exists, e.g. in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let k = KappaParams::new(cfg.kappa).map_err(|e| CliError::from_core("config", e))?;
    let name = command.name();
    let core = |e| CliError::from_core(name, e);
    match command {
        Command::VerifyAxioms { trials } => {
            let settings =
                AxiomSettings { trials: *trials, seed: cfg.seed, tolerance: cfg.tol("axioms"), ..Default::default() };
            let report = verify_twisted_axioms(&cfg.grid, &k, &settings).map_err(core)?;
            for f in report.failures() {
                log::warn!("{} (nu = {}) residual {:.3e} scale {:.3e}", f.axiom_id, f.nu, f.residual, f.scale);
            }
            let pass = report.all_pass();
            emit(&cfg, name, json!({ "trials": trials }), pass, &report, csv_bytes(&report.results))?;
            Ok(pass)
        }
        Command::ConeCheck { candidate, no_refine } => {
            let c: ConeCandidate = parse_json(candidate)?;
            let settings = ConeSettings { tol: cfg.tol("cone"), refine: !no_refine };
            let verdict = cone_check_with(&c, &cfg.grid, &k, &settings).map_err(core)?;
            let inputs = json!({ "candidate": c, "refine": !no_refine });
            emit(&cfg, name, inputs, verdict.in_cone, &verdict, csv_bytes(&verdict.details))?;
            Ok(verdict.in_cone)
        }
        Command::StateCausality { state1, state2, family } => {
            let (a, b): (StateSpec, StateSpec) = (parse_json(state1)?, parse_json(state2)?);
            let (st1, st2) = (a.build(&cfg.grid).map_err(core)?, b.build(&cfg.grid).map_err(core)?);
            let tol = cfg.tol("state");
            let constraint = necessary_causal(&st1, &st2, tol).map_err(core)?;
            let fam = match family {
                Some(n) => cone_sample_family(*n, cfg.seed).map_err(core)?,
                None => light_cone_family(),
            };
            let order = order_test(&st1, &st2, &fam, &k, tol).map_err(core)?;
            let pass = constraint.satisfied && order.consistent;
            let result = json!({ "constraint_report": constraint, "order_test": order });
            let inputs = json!({ "state1": a, "state2": b, "family": family });
            emit(&cfg, name, inputs, pass, &result, csv_bytes(&order.entries))?;
            Ok(pass)
        }
        Command::Sweep { n_s, n_p, sigma, s0, p0, nu } => {
            let nu = RepSign::try_from(*nu).map_err(core)?;
            let settings = SweepSettings {
                nu,
                base_s0: *s0,
                base_p0: *p0,
                sigma: *sigma,
                n_s: *n_s,
                n_p: *n_p,
                tol: cfg.tol("state"),
                ..Default::default()
            };
            let rows = sweep(&cfg.grid, &settings).map_err(core)?;
            let mut table = Vec::new();
            write_sweep_csv(&rows, &mut table).map_err(core)?;
            let inputs = json!({ "n_s": n_s, "n_p": n_p, "sigma": sigma, "s0": s0, "p0": p0, "nu": nu });
            emit(&cfg, name, inputs, true, &rows, Ok(table))?;
            Ok(true)
        }
        Command::Evolve { phi0, alpha, t_end, dt, record_every, check, full_grid, trajectory } => {
            let spec: StateSpec = parse_json(phi0)?;
            let st = spec.build(&cfg.grid).map_err(core)?;
            let traj = transport_integrate_recording(st.phi(), *alpha, *t_end, *dt, *record_every).map_err(core)?;
            if let Some(p) = trajectory {
                write_out(Some(p), &json_bytes(&traj))?;
            }
            let mode = if *full_grid { ResidualMode::Full } else { ResidualMode::default() };
            let tol = cfg.tol("evolution");
            let inputs = json!({
                "phi0": spec, "alpha": alpha, "t_end": t_end, "dt": dt,
                "record_every": record_every, "check": check, "full_grid": full_grid,
            });
            #[derive(Serialize)]
            struct TimeRow {
                t: f64,
                residual: f64,
            }
            let residual_rows = |per_time: &[f64]| {
                let rows: Vec<TimeRow> =
                    traj.times.iter().zip(per_time).map(|(&t, &r)| TimeRow { t, residual: r }).collect();
                csv_bytes(&rows)
            };
            let summary = json!({ "times": traj.times.len(), "final_norm": traj.frames.last().map(|f| f.norm()) });
            let pass = match check {
                None => {
                    let table = csv_bytes(&[json!(null)][..0]);
                    emit(&cfg, name, inputs, true, &summary, table)?;
                    true
                }
                Some(c @ (Check::Condsuff | Check::Zecomparaison)) => {
                    let r = if *c == Check::Condsuff {
                        condsuff_residual(&traj, &k, mode)
                    } else {
                        zecomparaison_residual(&traj, mode)
                    }
                    .map_err(core)?;
                    let pass = r.max_residual <= tol * r.scale;
                    if !pass {
                        log::warn!("{c:?} residual {:.3e} exceeds {tol:.1e} x scale {:.3e}", r.max_residual, r.scale);
                    }
                    let table = residual_rows(&r.per_time);
                    emit(&cfg, name, inputs, pass, &json!({ "trajectory": summary, "residual_report": r }), table)?;
                    pass
                }
                Some(Check::Scan) => {
                    let scan = evolution_causality_scan(&traj, st.nu(), cfg.tol("state")).map_err(core)?;
                    let pass = scan.all_steps_satisfied && scan.cumulative.satisfied;
                    let table = csv_bytes(&scan.steps);
                    emit(&cfg, name, inputs, pass, &json!({ "trajectory": summary, "scan": scan }), table)?;
                    pass
                }
            };
            Ok(pass)
        }
        Command::AlgebraSelftest { trials } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let checks = algebra_selftest(&mut rng, *trials, &k, cfg.tol("algebra"));
            let pass = checks.iter().all(|c| c.pass);
            emit(&cfg, name, json!({ "trials": trials }), pass, &checks, csv_bytes(&checks))?;
            Ok(pass)
        }
    }
}

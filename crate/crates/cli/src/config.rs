//! Run configuration. Sources are layered: built-in defaults, a flat JSON
//! config file, environment variables (grid and tolerance only), then flags.
//!
//! Config file keys, all optional:
//!
//! | key | type |
//! |-----|------|
//! | `grid_min`, `grid_max` | number |
//! | `grid_n` | integer |
//! | `kappa` | number > 0 |
//! | `seed` | integer |
//! | `tol` | number > 0, applies to the tolerance of the running command |
//! | `tol_algebra`, `tol_axioms`, `tol_cone`, `tol_state`, `tol_evolution` | number > 0 |
//! | `out` | path |
//! | `format` | `"json"` or `"csv"` |
//! | `threads` | integer ≥ 1 |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use kappa_causal::numerics::GridSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const TOLERANCES: [(&str, f64); 5] =
    [("algebra", 1e-12), ("axioms", 1e-6), ("cone", 1e-8), ("evolution", 1e-5), ("state", 1e-8)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_n: Option<usize>,
    kappa: Option<f64>,
    seed: Option<u64>,
    tol: Option<f64>,
    tol_algebra: Option<f64>,
    tol_axioms: Option<f64>,
    tol_cone: Option<f64>,
    tol_state: Option<f64>,
    tol_evolution: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    threads: Option<usize>,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, env = "KCAUSAL_GRID_MIN", allow_negative_numbers = true)]
    pub grid_min: Option<f64>,
    #[arg(long, global = true, env = "KCAUSAL_GRID_MAX", allow_negative_numbers = true)]
    pub grid_max: Option<f64>,
    #[arg(long, global = true, env = "KCAUSAL_GRID_N")]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Tolerance of the running check.
    #[arg(long, global = true, env = "KCAUSAL_TOL")]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; 1 is the reference mode.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub kappa: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSpec::default(),
            kappa: 1.0,
            tolerances: TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            seed: 0,
            output_path: None,
            format: Format::Json,
            threads: None,
        }
    }
}

pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        if at == "." {
            CliError::Input(format!("{}: {}", path.display(), e.inner()))
        } else {
            CliError::Input(format!("{}: at `{at}`: {}", path.display(), e.inner()))
        }
    })
}

impl RunConfig {
    /// Layers the sources for a command whose tolerance is named `tol_name`.
    pub fn resolve(tol_name: &str, default_format: Format, args: &GlobalArgs) -> Result<Self, CliError> {
        let file: ConfigFile = match &args.config {
            Some(p) => parse_json(p)?,
            None => ConfigFile::default(),
        };
        let mut cfg = RunConfig::default();
        let grid = GridSpec {
            s_min: args.grid_min.or(file.grid_min).unwrap_or(cfg.grid.s_min),
            s_max: args.grid_max.or(file.grid_max).unwrap_or(cfg.grid.s_max),
            n_points: args.grid_n.or(file.grid_n).unwrap_or(cfg.grid.n_points),
        };
        grid.validate().map_err(|e| CliError::Input(e.to_string()))?;
        cfg.grid = grid;
        cfg.kappa = args.kappa.or(file.kappa).unwrap_or(cfg.kappa);
        if !(cfg.kappa > 0.0 && cfg.kappa.is_finite()) {
            return Err(CliError::Input(format!("kappa = {} must be positive", cfg.kappa)));
        }
        let per_name = [
            ("algebra", file.tol_algebra),
            ("axioms", file.tol_axioms),
            ("cone", file.tol_cone),
            ("evolution", file.tol_evolution),
            ("state", file.tol_state),
        ];
        for (name, v) in per_name {
            if let Some(v) = v {
                cfg.tolerances.insert(name.into(), v);
            }
        }
        if let Some(v) = args.tol.or(file.tol) {
            cfg.tolerances.insert(tol_name.into(), v);
        }
        for (name, v) in &cfg.tolerances {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(CliError::Input(format!("tolerance `{name}` = {v} must be positive")));
            }
        }
        cfg.seed = args.seed.or(file.seed).unwrap_or(0);
        cfg.output_path = args.out.clone().or(file.out);
        cfg.format = args.format.or(file.format).unwrap_or(default_format);
        cfg.threads = args.threads.or(file.threads);
        if cfg.threads == Some(0) {
            return Err(CliError::Input("threads must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }
}

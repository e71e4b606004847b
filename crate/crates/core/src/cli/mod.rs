//! The `linfty` command line: one subcommand per operation, JSON summaries,
//! field artifacts and a manifest per run.
//!
//! Exit codes: 0 success, 2 a mathematical check failed, 1 any error.

mod commands;
mod config;
pub mod figures;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::RunConfig;

use crate::error::{Error, Result};
use crate::lipcalc::Kernel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "linfty", version, about = "Discrete L-infinity eigenvalue laboratory")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct GlobalArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON shape file.
    #[arg(long, global = true)]
    shape: Option<PathBuf>,
    /// Grid spacing.
    #[arg(long, global = true, allow_hyphen_values = true)]
    h: Option<f64>,
    /// Seed of the sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver residual tolerance.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Diagnostic check tolerance.
    #[arg(long, global = true, allow_hyphen_values = true)]
    check_tol: Option<f64>,
    /// Slope deficit accepted by the maximal-slope set.
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Mollifier kernel.
    #[arg(long, global = true, value_enum)]
    kernel: Option<KernelArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum KernelArg {
    Box,
    Triangle,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Rasterize the shape and summarize the node classes.
    Domain,
    /// Distance to the boundary and the inradius.
    Dist,
    /// High ridge of the distance function.
    Ridge {
        /// Ridge tolerance; defaults to h.
        #[arg(long)]
        ridge_tol: Option<f64>,
    },
    /// Generalized inball around the high ridge.
    Inball {
        /// Ridge tolerance; defaults to h.
        #[arg(long)]
        ridge_tol: Option<f64>,
    },
    /// Inner distance function, cross-checked by two routes.
    InnerDist {
        /// Ridge tolerance; defaults to h.
        #[arg(long)]
        ridge_tol: Option<f64>,
    },
    /// Lipschitz constant and Rayleigh quotient of a field.
    Rayleigh {
        /// Field CSV (`ix,iy,value`).
        #[arg(long)]
        field: PathBuf,
    },
    /// Maximal-slope set (or maximal-modulus set with --abs).
    Omegamax {
        /// Field CSV; defaults to the distance function.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Use the maximal-modulus set with this tolerance instead.
        #[arg(long)]
        abs: Option<f64>,
    },
    /// p-Rayleigh ground states for increasing p.
    Eig {
        /// Exponents, comma separated and increasing.
        #[arg(long, value_delimiter = ',', default_value = "2")]
        p: Vec<f64>,
    },
    /// Infinity-harmonic potential with zero boundary data.
    Infharm {
        /// `ridge=VALUE` or `ridge` (value = inradius).
        /// Ridge data: `ridge` (value = inradius) or `ridge=VALUE`.
        #[arg(long, default_value = "ridge")]
        fixed: String,
        /// Ridge tolerance of the fixed set.
        #[arg(long, default_value_t = 0.0)]
        ridge_tol: f64,
    },
    /// Sign-changing Lipschitz minimizer.
    SignChanging {
        /// Ridge tolerance; defaults to h.
        #[arg(long)]
        ridge_tol: Option<f64>,
    },
    /// Envelope bounds between the inner distance and the distance function.
    Envelope {
        /// Field CSV; defaults to the distance function.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Calibration checks.
    Calib {
        #[command(subcommand)]
        action: CalibAction,
    },
    /// Discrete eigen-system check.
    EigenCheck {
        /// Field CSV; omit --u, --nu and --flux to check the disk's radial system.
        #[arg(long)]
        u: Option<PathBuf>,
        /// Eigenvalue; required with --u.
        #[arg(long)]
        lambda: Option<f64>,
        /// Measure CSV (`ix,iy,weight`).
        #[arg(long)]
        nu: Option<PathBuf>,
        /// Edge flux CSV (`ia,ja,ib,jb,flux`).
        #[arg(long)]
        flux: Option<PathBuf>,
    },
    /// Transport and duality.
    Ot {
        #[command(subcommand)]
        action: OtAction,
    },
    /// Indicator images of the four maximal-slope examples.
    Figures,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CalibAction {
    /// Check a flux against a field.
    Check {
        /// Field CSV (`ix,iy,value`).
        #[arg(long)]
        u: PathBuf,
        /// Edge flux CSV (`ia,ja,ib,jb,flux`).
        #[arg(long)]
        flux: PathBuf,
    },
    /// Radial calibration of a disk, judged by the eigen-system check.
    Ball,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum JStarMethod {
    Closed,
    Flow,
    Both,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OtAction {
    /// Dual Lipschitz functional of a measure (default: a ridge Dirac).
    Jstar {
        /// Measure CSV (`ix,iy,weight`).
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "flow")]
        method: JStarMethod,
    },
    /// Geodesic Wasserstein-1 distance.
    W1 {
        /// Measure CSV (`ix,iy,weight`).
        #[arg(long)]
        mu: PathBuf,
        /// Second probability measure CSV.
        #[arg(long)]
        rho: PathBuf,
    },
    /// Kantorovich–Rubinstein norm.
    Kr {
        /// Measure CSV (`ix,iy,weight`).
        #[arg(long)]
        mu: PathBuf,
        /// Free boundary (quotient norm).
        #[arg(long)]
        partial: bool,
    },
    /// Dual minimizers and graph duality.
    Dualcheck {
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

impl Command {
    fn name(&self) -> String {
        let top = match self {
            Command::Domain => "domain",
            Command::Dist => "dist",
            Command::Ridge { .. } => "ridge",
            Command::Inball { .. } => "inball",
            Command::InnerDist { .. } => "inner-dist",
            Command::Rayleigh { .. } => "rayleigh",
            Command::Omegamax { .. } => "omegamax",
            Command::Eig { .. } => "eig",
            Command::Infharm { .. } => "infharm",
            Command::SignChanging { .. } => "sign-changing",
            Command::Envelope { .. } => "envelope",
            Command::Calib { action: CalibAction::Check { .. } } => "calib-check",
            Command::Calib { action: CalibAction::Ball } => "calib-ball",
            Command::EigenCheck { .. } => "eigen-check",
            Command::Ot { action } => match action {
                OtAction::Jstar { .. } => "ot-jstar",
                OtAction::W1 { .. } => "ot-w1",
                OtAction::Kr { .. } => "ot-kr",
                OtAction::Dualcheck { .. } => "ot-dualcheck",
            },
            Command::Figures => "figures",
        };
        top.to_string()
    }
}

/// Result of a subcommand: a JSON summary and, for checks, a verdict.
pub(crate) struct Outcome {
    summary: serde_json::Value,
    check: Option<bool>,
}

impl Outcome {
    fn value(summary: impl Serialize) -> Result<Self> {
        Ok(Self { summary: to_json(summary)?, check: None })
    }

    fn check(summary: impl Serialize, pass: bool) -> Result<Self> {
        Ok(Self { summary: to_json(summary)?, check: Some(pass) })
    }
}

fn to_json(v: impl Serialize) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidArgument(format!("unserializable summary: {e}")))
}

fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &g.shape {
        cfg = cfg.with_shape_file(p)?;
    }
    if let Some(h) = g.h {
        cfg.h = h;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out = o.clone();
    }
    if let Some(t) = g.tol {
        cfg.tol = t;
    }
    if let Some(t) = g.check_tol {
        cfg.check_tol = t;
    }
    if let Some(d) = g.delta {
        cfg.delta = d;
    }
    if let Some(k) = g.kernel {
        cfg.kernel = match k {
            KernelArg::Box => Kernel::Box,
            KernelArg::Triangle => Kernel::Triangle,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() {
    if let Some(n) = std::env::var("LINFTY_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    schema_version: u32,
    command: String,
    config_hash: String,
    config: &'a RunConfig,
    arguments: &'a serde_json::Value,
    status: &'static str,
    exit_code: i32,
    outputs: Vec<String>,
}

/// Runs the command line `argv` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    configure_threads();
    let cfg = match resolve_config(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let name = cli.command.name();
    let arguments = to_json(&cli.command).unwrap_or(serde_json::Value::Null);
    let mut ctx = commands::Ctx::new(&cfg);
    let result = commands::dispatch(&mut ctx, &cli.command).and_then(|o| {
        let mut summary = o.summary;
        if let serde_json::Value::Object(m) = &mut summary {
            m.insert("command".into(), name.clone().into());
        }
        ctx.write_json("summary.json", &summary)?;
        println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
        Ok(o.check)
    });
    let (status, code) = match &result {
        Ok(Some(false)) => ("check-failed", EXIT_CHECK_FAILED),
        Ok(_) => ("ok", EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ("error", EXIT_ERROR)
        }
    };
    let manifest = Manifest {
        tool: "linfty",
        version: env!("CARGO_PKG_VERSION"),
        schema_version: 1,
        command: name,
        config_hash: cfg.hash_with(&arguments),
        config: &cfg,
        arguments: &arguments,
        status,
        exit_code: code,
        outputs: ctx.outputs().to_vec(),
    };
    if let Err(e) = to_json(&manifest).and_then(|m| ctx.write_manifest(&m)) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    code
}

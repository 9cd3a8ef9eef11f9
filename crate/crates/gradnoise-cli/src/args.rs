//! Command-line surface: clap definitions, the key=value config file, and
//! the small string formats (spectrum lists, grid specs).
//!
//! Every flag is optional at parse time so a config file can fill in
//! whatever the command line left unset; each command then checks that the
//! fields it needs ended up present.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gradnoise::linsys::Method;

use crate::CmdError;

#[derive(Debug, Parser)]
#[command(
    name = "gradnoise",
    version,
    about = "Rate and noise-robustness analysis of gradient descent and \
             Nesterov acceleration under gradient noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact rate, robustness and stability analysis at one parameter point
    Analyze(CommonArgs),
    /// Stability-region verdict for one parameter point
    Stability(CommonArgs),
    /// Rate-robustness trade-off curve over a tau or eps sweep
    Tradeoff(CommonArgs),
    /// Certified rate and robustness bounds for the smooth strongly convex class
    Certify(CommonArgs),
    /// Monte-Carlo estimation of the robustness indices on a test objective
    Simulate(SimulateArgs),
    /// Pareto comparison: best AG point at every GD Pareto rate
    Pareto(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Gd,
    Ag,
}

impl MethodArg {
    pub fn to_method(self) -> Method {
        match self {
            MethodArg::Gd => Method::Gd,
            MethodArg::Ag => Method::Ag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Quadratic,
    Laplacian,
}

/// Flags shared by every subcommand. All optional; a `--config` file fills
/// fields that the command line leaves unset (flags win).
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Algorithm to analyze
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// Strong-convexity parameter (smallest eigenvalue)
    #[arg(long)]
    pub mu: Option<f64>,

    /// Smoothness parameter (largest eigenvalue)
    #[arg(long = "L")]
    pub l: Option<f64>,

    /// Full spectrum: comma-separated eigenvalues, or @FILE with one per line
    #[arg(long)]
    pub spectrum: Option<String>,

    /// Problem dimension (with --mu/--L; excluded by --spectrum)
    #[arg(long)]
    pub d: Option<usize>,

    /// Stepsize alpha
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Momentum beta (AG only)
    #[arg(long)]
    pub beta: Option<f64>,

    /// Single rate-penalty weight for the penalized trade-off
    #[arg(long)]
    pub tau: Option<f64>,

    /// Log-spaced penalty sweep LO:HI:N
    #[arg(long = "tau-grid")]
    pub tau_grid: Option<String>,

    /// Single rate slack for the constrained trade-off / certification
    #[arg(long)]
    pub eps: Option<f64>,

    /// Linearly spaced slack sweep LO:HI:N
    #[arg(long = "eps-grid")]
    pub eps_grid: Option<String>,

    /// Gradient-noise standard deviation (simulate)
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Monte-Carlo replicas (simulate; default 100)
    #[arg(long)]
    pub replicas: Option<usize>,

    /// Iteration horizon (simulate; default 1000)
    #[arg(long)]
    pub kmax: Option<usize>,

    /// Burn-in before time averaging (simulate; default rate-based)
    #[arg(long)]
    pub burnin: Option<usize>,

    /// RNG seed (simulate; default 0)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,

    /// Write output to FILE instead of stdout
    #[arg(long)]
    pub out: Option<String>,

    /// key=value config file supplying defaults for any flag
    #[arg(long)]
    pub config: Option<String>,
}

/// Extra knobs that only `simulate` understands.
#[derive(Debug, Clone, Default, Args)]
pub struct SimExtras {
    /// Test objective family
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,

    /// Regularization of the Laplacian objective (default 0.1)
    #[arg(long)]
    pub delta: Option<f64>,

    /// Per-coordinate offset of x0 from the optimum in noiseless runs
    #[arg(long = "x0-offset")]
    pub x0_offset: Option<f64>,

    /// Write per-replica trajectories as CSV to FILE
    #[arg(long = "traj-out")]
    pub traj_out: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub extra: SimExtras,
}

// ---------------------------------------------------------------------------
// Config file: `key = value` lines, `#` comments, keys named after the long
// flags (underscores are accepted for dashes). A key only fills a field the
// command line left unset.

pub fn merge_config(common: &mut CommonArgs, extra: Option<&mut SimExtras>) -> Result<(), CmdError> {
    let Some(path) = common.config.clone() else {
        return Ok(());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CmdError::io(&path, &e))?;
    apply_config(common, extra, &text)
}

fn apply_config(
    common: &mut CommonArgs,
    mut extra: Option<&mut SimExtras>,
    text: &str,
) -> Result<(), CmdError> {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CmdError::usage(format!(
                "config line {}: expected key=value, got {:?}",
                idx + 1,
                line
            )));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "method" => set_enum(&mut common.method, "method", value)?,
            "mu" => set_f64(&mut common.mu, "mu", value)?,
            "L" => set_f64(&mut common.l, "L", value)?,
            "spectrum" => set_string(&mut common.spectrum, value),
            "d" => set_usize(&mut common.d, "d", value)?,
            "alpha" => set_f64(&mut common.alpha, "alpha", value)?,
            "beta" => set_f64(&mut common.beta, "beta", value)?,
            "tau" => set_f64(&mut common.tau, "tau", value)?,
            "tau-grid" => set_string(&mut common.tau_grid, value),
            "eps" => set_f64(&mut common.eps, "eps", value)?,
            "eps-grid" => set_string(&mut common.eps_grid, value),
            "sigma" => set_f64(&mut common.sigma, "sigma", value)?,
            "replicas" => set_usize(&mut common.replicas, "replicas", value)?,
            "kmax" => set_usize(&mut common.kmax, "kmax", value)?,
            "burnin" => set_usize(&mut common.burnin, "burnin", value)?,
            "seed" => set_u64(&mut common.seed, "seed", value)?,
            "format" => set_enum(&mut common.format, "format", value)?,
            "out" => set_string(&mut common.out, value),
            "config" => {
                return Err(CmdError::usage(
                    "config key \"config\": nested config files are not supported",
                ))
            }
            "objective" | "delta" | "x0-offset" | "traj-out" => {
                let Some(ex) = extra.as_deref_mut() else {
                    return Err(CmdError::usage(format!(
                        "config key {key:?} is only valid for the simulate command"
                    )));
                };
                match key.as_str() {
                    "objective" => set_enum(&mut ex.objective, "objective", value)?,
                    "delta" => set_f64(&mut ex.delta, "delta", value)?,
                    "x0-offset" => set_f64(&mut ex.x0_offset, "x0-offset", value)?,
                    _ => set_string(&mut ex.traj_out, value),
                }
            }
            _ => {
                return Err(CmdError::usage(format!(
                    "config line {}: unknown key {key:?}",
                    idx + 1
                )))
            }
        }
    }
    Ok(())
}

fn set_string(slot: &mut Option<String>, value: &str) {
    if slot.is_none() {
        *slot = Some(value.to_string());
    }
}

fn set_f64(slot: &mut Option<f64>, key: &str, value: &str) -> Result<(), CmdError> {
    if slot.is_none() {
        *slot = Some(value.parse().map_err(|_| bad_value(key, value))?);
    }
    Ok(())
}

fn set_usize(slot: &mut Option<usize>, key: &str, value: &str) -> Result<(), CmdError> {
    if slot.is_none() {
        *slot = Some(value.parse().map_err(|_| bad_value(key, value))?);
    }
    Ok(())
}

fn set_u64(slot: &mut Option<u64>, key: &str, value: &str) -> Result<(), CmdError> {
    if slot.is_none() {
        *slot = Some(value.parse().map_err(|_| bad_value(key, value))?);
    }
    Ok(())
}

fn set_enum<T: ValueEnum + Clone>(
    slot: &mut Option<T>,
    key: &str,
    value: &str,
) -> Result<(), CmdError> {
    if slot.is_none() {
        *slot = Some(T::from_str(value, true).map_err(|_| bad_value(key, value))?);
    }
    Ok(())
}

fn bad_value(key: &str, value: &str) -> CmdError {
    CmdError::usage(format!("config key {key:?}: invalid value {value:?}"))
}

// ---------------------------------------------------------------------------
// Small string formats.

/// Parses `--spectrum`: a comma-separated list, or `@FILE` holding
/// whitespace/comma-separated values.
pub fn parse_spectrum(src: &str) -> Result<Vec<f64>, CmdError> {
    let owned;
    let body = if let Some(path) = src.strip_prefix('@') {
        owned = std::fs::read_to_string(path).map_err(|e| CmdError::io(path, &e))?;
        owned.as_str()
    } else {
        src
    };
    let mut out = Vec::new();
    for tok in body.split([',', '\n', '\t', ' ', '\r']) {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(
            tok.parse()
                .map_err(|_| CmdError::usage(format!("spectrum: invalid number {tok:?}")))?,
        );
    }
    if out.is_empty() {
        return Err(CmdError::usage("spectrum: no eigenvalues given"));
    }
    Ok(out)
}

/// Parses a `LO:HI:N` sweep specification.
pub fn parse_grid(spec: &str) -> Result<(f64, f64, usize), CmdError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CmdError::usage(format!(
            "grid: expected LO:HI:N, got {spec:?}"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CmdError::usage(format!("grid: invalid LO {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CmdError::usage(format!("grid: invalid HI {:?}", parts[1])))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CmdError::usage(format!("grid: invalid N {:?}", parts[2])))?;
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(CmdError::usage(format!(
            "grid: need finite LO <= HI, got {lo}:{hi}"
        )));
    }
    Ok((lo, hi, n))
}

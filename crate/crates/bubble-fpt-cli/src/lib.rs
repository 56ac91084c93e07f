//! Command-line front end for the bubble-fpt library.
//!
//! Subcommands: `calibrate`, `simulate`, `density`, `fptd`, `predict-min`,
//! `validate`. Options come from flags first, then from an optional flat
//! `key = value` config file (`--config`), then from built-in defaults.
//!
//! Exit codes are a stable scripting contract: 0 success, 2 input error,
//! 3 degenerate model, 4 numerical failure.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod output;

use clap::{Args, Parser, Subcommand};
use commands::{build_params, params_from_json, parse_list};
use config::{require, resolve, Config};
use bubble_fpt::{Error, ModelParams, Result};
use std::path::PathBuf;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "bubble-fpt",
    version,
    about = "Exponentially-decayed mean-reversion diffusion: calibration, simulation, densities and first-passage tables"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Mean-reversion rate epsilon, per year (0 for the Brownian limit)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Drift-exponent decay speed alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Equilibrium factor c in [0, 1]
    #[arg(long)]
    c: Option<f64>,
    /// Annualized volatility sigma (default 1)
    #[arg(long)]
    sigma: Option<f64>,
    /// Initial log-state (default 0)
    #[arg(long)]
    x0: Option<f64>,
    /// Calibration JSON supplying epsilon/alpha/c/sigma
    #[arg(long)]
    params: Option<PathBuf>,
}

impl ParamArgs {
    fn build(&self, cfg: &Config) -> Result<ModelParams> {
        let from_file = match resolve(self.params.clone(), cfg, "params")? {
            Some(path) => Some(params_from_json(&path)?),
            None => None,
        };
        let pick = |flag: Option<f64>, key: &str, file_val: Option<f64>, default: Option<f64>| {
            if let Some(v) = resolve(flag, cfg, key)? {
                return Ok(v);
            }
            if let Some(v) = file_val {
                return Ok(v);
            }
            default.ok_or_else(|| Error::InvalidInput(format!("missing required option --{key}")))
        };
        let epsilon = pick(self.epsilon, "epsilon", from_file.map(|f| f.0), None)?;
        let alpha = pick(self.alpha, "alpha", from_file.map(|f| f.1), None)?;
        let c = pick(self.c, "c", from_file.map(|f| f.2), None)?;
        let sigma = pick(self.sigma, "sigma", from_file.map(|f| f.3), Some(1.0))?;
        let x0 = pick(self.x0, "x0", None, Some(0.0))?;
        build_params(epsilon, alpha, c, sigma, x0)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit (epsilon, alpha, sigma, c) to a date,price CSV via the regime
    /// algorithm; emits a calibration JSON
    Calibrate {
        #[arg(long)]
        input: Option<PathBuf>,
        /// End date of regime I (bubble build-up)
        #[arg(long)]
        t1: Option<String>,
        /// End date of regime II (collapse)
        #[arg(long)]
        t2: Option<String>,
        /// End date of regime III (post-collapse equilibrium)
        #[arg(long)]
        t3: Option<String>,
        /// Observed equilibrium level of the normalized log-price
        #[arg(long)]
        xr: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Simulate sample paths; wide CSV by default, `--long` for tidy rows
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        horizon: Option<f64>,
        /// Number of paths
        #[arg(long)]
        paths: Option<usize>,
        /// Steps per path (alternative: --dt)
        #[arg(long)]
        steps: Option<usize>,
        /// Step size in years (alternative: --steps)
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Emit long format t,path,x instead of one column per path
        #[arg(long)]
        long: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write a 5%/50%/95% quantile envelope CSV here
        #[arg(long)]
        envelope: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fixed-time density of X_t (or the stationary density)
    Density {
        #[command(flatten)]
        params: ParamArgs,
        /// Evaluation time in years
        #[arg(long)]
        t: Option<f64>,
        /// Evaluate the stationary density instead of a fixed time
        #[arg(long)]
        stationary: bool,
        #[arg(long = "grid-min")]
        grid_min: Option<f64>,
        #[arg(long = "grid-max")]
        grid_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// First-passage-time density of a downward boundary, with tail
    /// approximants
    Fptd {
        #[command(flatten)]
        params: ParamArgs,
        /// Start log-level (default: x0)
        #[arg(long)]
        x: Option<f64>,
        /// Boundary log-level, must lie below the start
        #[arg(long)]
        a: Option<f64>,
        #[arg(long = "t-max")]
        t_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Running-minimum drop probabilities over a horizon (prediction table)
    PredictMin {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "price-now")]
        price_now: Option<f64>,
        /// Price anchoring the log-transform (series start)
        #[arg(long = "price-start")]
        price_start: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Comma-separated drop fractions (default 0 to 0.60 in 0.05 steps)
        #[arg(long)]
        drops: Option<String>,
        /// Also estimate the peak relative error of each row
        #[arg(long)]
        validate: bool,
        /// Monte Carlo paths per validated row
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Second-order remainder estimates q_hat(t) with standard errors
    Validate {
        #[command(flatten)]
        params: ParamArgs,
        /// Start log-level (default: x0)
        #[arg(long)]
        x: Option<f64>,
        /// Comma-separated evaluation times in years
        #[arg(long)]
        times: Option<String>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate {
            input,
            t1,
            t2,
            t3,
            xr,
            output,
            config,
        } => {
            let cfg = load_config(&config)?;
            commands::configure_threads(&cfg)?;
            let input = require(input, &cfg, "input")?;
            let t1 = require(t1, &cfg, "t1")?;
            let t2 = require(t2, &cfg, "t2")?;
            let t3 = require(t3, &cfg, "t3")?;
            let xr = require(xr, &cfg, "xr")?;
            let output = resolve(output, &cfg, "output")?;
            commands::cmd_calibrate(&input, &t1, &t2, &t3, xr, output.as_deref())
        }
        Command::Simulate {
            params,
            horizon,
            paths,
            steps,
            dt,
            seed,
            long,
            output,
            envelope,
            config,
        } => {
            let cfg = load_config(&config)?;
            commands::configure_threads(&cfg)?;
            let p = params.build(&cfg)?;
            let horizon = require(horizon, &cfg, "horizon")?;
            let n_paths = resolve(paths, &cfg, "paths")?.unwrap_or(1000);
            let steps = resolve(steps, &cfg, "steps")?;
            let dt = resolve(dt, &cfg, "dt")?;
            let n_steps = match (steps, dt) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInput(
                        "--steps and --dt are alternatives; give one".into(),
                    ))
                }
                (Some(s), None) => s,
                (None, Some(d)) if d > 0.0 => (horizon / d).ceil() as usize,
                (None, Some(d)) => {
                    return Err(Error::InvalidInput(format!("dt must be positive, got {d}")))
                }
                (None, None) => 500,
            };
            let seed = resolve(seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
            let output = resolve(output, &cfg, "output")?;
            let envelope = resolve(envelope, &cfg, "envelope")?;
            commands::cmd_simulate(
                &p,
                horizon,
                n_paths,
                n_steps,
                seed,
                long,
                output.as_deref(),
                envelope.as_deref(),
            )
        }
        Command::Density {
            params,
            t,
            stationary,
            grid_min,
            grid_max,
            points,
            output,
            config,
        } => {
            let cfg = load_config(&config)?;
            commands::configure_threads(&cfg)?;
            let p = params.build(&cfg)?;
            let t = resolve(t, &cfg, "t")?;
            let grid_min = resolve(grid_min, &cfg, "grid-min")?.unwrap_or(-2.0);
            let grid_max = resolve(grid_max, &cfg, "grid-max")?.unwrap_or(3.0);
            let points = resolve(points, &cfg, "points")?.unwrap_or(101);
            let output = resolve(output, &cfg, "output")?;
            commands::cmd_density(&p, t, stationary, grid_min, grid_max, points, output.as_deref())
        }
        Command::Fptd {
            params,
            x,
            a,
            t_max,
            points,
            output,
            config,
        } => {
            let cfg = load_config(&config)?;
            commands::configure_threads(&cfg)?;
            let p = params.build(&cfg)?;
            let x = resolve(x, &cfg, "x")?.unwrap_or(p.x0);
            let a = require(a, &cfg, "a")?;
            let t_max = resolve(t_max, &cfg, "t-max")?.unwrap_or(50.0);
            let points = resolve(points, &cfg, "points")?.unwrap_or(500);
            let output = resolve(output, &cfg, "output")?;
            commands::cmd_fptd(&p, x, a, t_max, points, output.as_deref())
        }
        Command::PredictMin {
            params,
            price_now,
            price_start,
            horizon,
            drops,
            validate,
            paths,
            seed,
            output,
            config,
        } => {
            let cfg = load_config(&config)?;
            commands::configure_threads(&cfg)?;
            let p = params.build(&cfg)?;
            let price_now = require(price_now, &cfg, "price-now")?;
            let price_start = require(price_start, &cfg, "price-start")?;
            let horizon = require(horizon, &cfg, "horizon")?;
            let drops = match resolve(drops, &cfg, "drops")? {
                Some(raw) => parse_list(&raw, "drops")?,
                None => (0..=12).map(|k| k as f64 * 0.05).collect(),
            };
            let n_paths = resolve(paths, &cfg, "paths")?.unwrap_or(10_000);
            let seed = resolve(seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
            let output = resolve(output, &cfg, "output")?;
            commands::cmd_predict_min(
                &p,
                price_now,
                price_start,
                horizon,
                &drops,
                validate,
                n_paths,
                seed,
                output.as_deref(),
            )
        }
        Command::Validate {
            params,
            x,
            times,
            paths,
            dt,
            seed,
            output,
            config,
        } => {
            let cfg = load_config(&config)?;
            commands::configure_threads(&cfg)?;
            let p = params.build(&cfg)?;
            let x = resolve(x, &cfg, "x")?.unwrap_or(p.x0);
            let times = parse_list(&require(times, &cfg, "times")?, "times")?;
            let n_paths = resolve(paths, &cfg, "paths")?.unwrap_or(10_000);
            let dt = resolve(dt, &cfg, "dt")?.unwrap_or(1e-3);
            let seed = resolve(seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
            let output = resolve(output, &cfg, "output")?;
            commands::cmd_validate(&p, x, &times, n_paths, dt, seed, output.as_deref())
        }
    }
}

/// Exit-code contract: 0 success, 2 input error, 3 degenerate model,
/// 4 numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Domain(_) | Error::UnsupportedDirection(_) => 2,
        Error::NoStationaryLaw(_) | Error::InsufficientData(_) | Error::DegenerateCalibration(_) => {
            3
        }
        Error::Numerical(_) => 4,
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

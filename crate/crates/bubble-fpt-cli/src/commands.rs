//! Command implementations. Each returns the library `Result`; the binary
//! maps error variants onto exit codes.

use crate::config::Config;
use crate::ingest::ingest_csv;
use crate::output::{percent, sig6, write_output};
use bubble_fpt::calibrate::calibrate;
use bubble_fpt::density::{density_xt, stationary_density};
use bubble_fpt::exec;
use bubble_fpt::fpt::{
    error_estimate, error_estimate_shifted, running_min_cdf, shift_to_boundary, FptDensityCurve,
};
use bubble_fpt::model::scale_to_standard;
use bubble_fpt::sde::{exact_path, NoiseGrid};
use bubble_fpt::{Error, ModelParams, RegimeSegmentation, Result};
use serde_json::json;
use std::path::{Path, PathBuf};

/// Product guard for simulation-sized jobs.
const MAX_PATH_STEPS: u64 = 100_000_000;

/// Assembles extended-form parameters, admitting the Brownian limit
/// `epsilon = 0`.
pub fn build_params(epsilon: f64, alpha: f64, c: f64, sigma: f64, x0: f64) -> Result<ModelParams> {
    if epsilon == 0.0 {
        ModelParams::brownian_limit(alpha, c, sigma, x0)
    } else {
        ModelParams::new(epsilon, alpha, c, sigma, x0)
    }
}

/// Parses a comma-separated list of reals, e.g. drop grids or time lists.
pub fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("{what}: cannot parse '{}'", s.trim())))
        })
        .collect()
}

fn date_index(series_dates: &[String], date: &str, which: &str) -> Result<usize> {
    series_dates
        .iter()
        .position(|d| d == date)
        .ok_or_else(|| Error::InvalidInput(format!("regime date --{which} {date} not in series")))
}

pub fn cmd_calibrate(
    input: &Path,
    t1: &str,
    t2: &str,
    t3: &str,
    x_r: f64,
    output: Option<&Path>,
) -> Result<()> {
    let series = ingest_csv(input)?;
    let i1 = date_index(&series.timestamps, t1, "t1")?;
    let i2 = date_index(&series.timestamps, t2, "t2")?;
    let i3 = date_index(&series.timestamps, t3, "t3")?;
    let seg = RegimeSegmentation::new(i1, i2, i3, x_r)?;
    let report = calibrate(&series, &seg)?;
    let p = report.params;
    let doc = json!({
        "epsilon": sig6(p.epsilon),
        "alpha": sig6(p.alpha),
        "sigma": sig6(p.sigma),
        "c": sig6(p.c),
        "x_r": sig6(x_r),
        "r_bar_I": sig6(report.r_bar_i),
        "r_bar_III": sig6(report.r_bar_iii),
        "regimes": { "t1": t1, "t2": t2, "t3": t3 },
        "warnings": report.warnings,
    });
    write_output(output, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

/// Parameters loaded back from a calibration JSON file.
pub fn params_from_json(path: &Path) -> Result<(f64, f64, f64, f64)> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| Error::InvalidInput(format!("{}: invalid JSON: {e}", path.display())))?;
    let field = |name: &str| -> Result<f64> {
        doc.get(name).and_then(|v| v.as_f64()).ok_or_else(|| {
            Error::InvalidInput(format!("{}: missing numeric field '{name}'", path.display()))
        })
    };
    Ok((field("epsilon")?, field("alpha")?, field("c")?, field("sigma")?))
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_predict_min(
    p_ext: &ModelParams,
    price_now: f64,
    price_start: f64,
    horizon: f64,
    drops: &[f64],
    validate: bool,
    n_paths: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<()> {
    if !(price_now > 0.0) || !(price_start > 0.0) {
        return Err(Error::InvalidInput("prices must be positive".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let x_now = (price_now / price_start).ln();
    let p_anchored = ModelParams { x0: x_now, ..*p_ext };
    let (p_std, factor) = scale_to_standard(&p_anchored);
    let x_std = p_std.x0;

    let mut csv = String::from("drop_fraction,price_level,probability,probability_pct,peak_relative_error\n");
    let mut rows = Vec::new();
    let mut prev = 1.0f64;
    for (i, &d) in drops.iter().enumerate() {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::InvalidInput(format!(
                "drop fractions must lie in [0, 1), got {d}"
            )));
        }
        let a_std = (x_now + (1.0 - d).ln()) * factor;
        let raw = running_min_cdf(horizon, a_std, &p_std, x_std)?;
        // The first-order probabilities are analytically nonincreasing in d;
        // clamp out quadrature-level inversions so the table honors that.
        let prob = raw.min(prev);
        prev = prob;
        let price_level = (1.0 - d) * price_now;
        let peak_err = if !validate {
            None
        } else if d == 0.0 {
            Some(0.0)
        } else {
            Some(peak_relative_error(&p_std, x_std, a_std, horizon, n_paths, seed + i as u64)?)
        };
        csv.push_str(&format!(
            "{d},{price_level},{prob},{},{}\n",
            percent(prob),
            peak_err.map(|e| e.to_string()).unwrap_or_default()
        ));
        rows.push(json!({
            "drop_fraction": d,
            "price_level": sig6(price_level),
            "probability": sig6(prob),
            "probability_pct": percent(prob),
            "peak_relative_error": peak_err.map(sig6),
        }));
    }
    write_output(output, &csv)?;
    if let Some(path) = output {
        let doc = json!({
            "price_now": price_now,
            "price_start": price_start,
            "horizon": horizon,
            "rows": rows,
        });
        let mut json_path = PathBuf::from(path);
        json_path.set_extension("json");
        write_output(
            Some(&json_path),
            &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
        )?;
    }
    Ok(())
}

/// Share of the corrected density explained by the second-order remainder,
/// at the peak of the first-order density over (0, horizon].
fn peak_relative_error(
    p_std: &ModelParams,
    x_std: f64,
    a_std: f64,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<f64> {
    let grid: Vec<f64> = (1..=400).map(|k| k as f64 * horizon / 400.0).collect();
    let curve = FptDensityCurve::evaluate(p_std, x_std, a_std, &grid)?;
    let peak = curve
        .densities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| grid[k])
        .expect("nonempty grid");
    let sp = shift_to_boundary(p_std, a_std);
    let est = error_estimate_shifted(peak, &sp, n_paths, peak / 300.0, seed)?;
    Ok(est.q_ratio)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    p_ext: &ModelParams,
    horizon: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    long: bool,
    output: Option<&Path>,
    envelope: Option<&Path>,
) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if n_paths == 0 || n_steps == 0 {
        return Err(Error::InvalidInput("need n_paths >= 1 and n_steps >= 1".into()));
    }
    if n_paths as u64 * n_steps as u64 > MAX_PATH_STEPS {
        return Err(Error::InvalidInput(format!(
            "refusing {n_paths} paths x {n_steps} steps > {MAX_PATH_STEPS} total steps; \
             lower --paths or --steps, or split the run across seeds"
        )));
    }
    let (p_std, _) = scale_to_standard(p_ext);
    let sigma = p_ext.sigma;
    let dt = horizon / n_steps as f64;
    let paths: Vec<Vec<f64>> = exec::map_paths(n_paths, |i| {
        let noise = NoiseGrid::generate(dt, n_steps, seed, i as u64).expect("dt > 0");
        let traj = exact_path(&p_std, horizon, n_steps, &noise).expect("validated inputs");
        traj.states.iter().map(|&x| sigma * x).collect()
    });
    let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();

    let mut csv = String::new();
    if long {
        csv.push_str("t,path,x\n");
        for (i, path) in paths.iter().enumerate() {
            for (k, &t) in times.iter().enumerate() {
                csv.push_str(&format!("{t},{i},{}\n", path[k]));
            }
        }
    } else {
        csv.push_str("t");
        for i in 0..n_paths {
            csv.push_str(&format!(",path_{i}"));
        }
        csv.push('\n');
        for (k, &t) in times.iter().enumerate() {
            csv.push_str(&t.to_string());
            for path in &paths {
                csv.push_str(&format!(",{}", path[k]));
            }
            csv.push('\n');
        }
    }
    write_output(output, &csv)?;

    if let Some(env_path) = envelope {
        let mut env_csv = String::from("t,q05,q50,q95\n");
        for (k, &t) in times.iter().enumerate() {
            let mut col: Vec<f64> = paths.iter().map(|p| p[k]).collect();
            col.sort_by(f64::total_cmp);
            let q = |frac: f64| col[((col.len() - 1) as f64 * frac).round() as usize];
            env_csv.push_str(&format!("{t},{},{},{}\n", q(0.05), q(0.50), q(0.95)));
        }
        write_output(Some(env_path), &env_csv)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_density(
    p_ext: &ModelParams,
    t: Option<f64>,
    stationary: bool,
    grid_min: f64,
    grid_max: f64,
    points: usize,
    output: Option<&Path>,
) -> Result<()> {
    if points < 2 {
        return Err(Error::InvalidInput("need --points >= 2".into()));
    }
    if !(grid_max > grid_min) {
        return Err(Error::InvalidInput(format!(
            "need grid-min < grid-max, got [{grid_min}, {grid_max}]"
        )));
    }
    let (p_std, factor) = scale_to_standard(p_ext);
    let x_std = p_std.x0;
    let grid: Vec<f64> = (0..points)
        .map(|k| grid_min + (grid_max - grid_min) * k as f64 / (points - 1) as f64)
        .collect();
    let mut csv = String::new();
    if stationary {
        csv.push_str("x,density\n");
        for &u in &grid {
            let f = stationary_density(u * factor, &p_std)? * factor;
            csv.push_str(&format!("{u},{f}\n"));
        }
    } else {
        let t = t.ok_or_else(|| {
            Error::InvalidInput("provide --t for a fixed-time density, or --stationary".into())
        })?;
        csv.push_str("x,density,low_confidence\n");
        for &u in &grid {
            let dp = density_xt(u * factor, t, &p_std, x_std)?;
            csv.push_str(&format!("{u},{},{}\n", dp.value * factor, dp.low_confidence));
        }
    }
    write_output(output, &csv)
}

fn p0(t: f64, x: f64) -> f64 {
    x / (2.0 * std::f64::consts::PI * t * t * t).sqrt() * (-x * x / (2.0 * t)).exp()
}

pub fn cmd_fptd(
    p_ext: &ModelParams,
    x: f64,
    a: f64,
    t_max: f64,
    points: usize,
    output: Option<&Path>,
) -> Result<()> {
    if !(t_max > 0.0) || points == 0 {
        return Err(Error::InvalidInput("need --t-max > 0 and --points >= 1".into()));
    }
    let (p_std, factor) = scale_to_standard(p_ext);
    let x_s = x * factor;
    let a_s = a * factor;
    let times: Vec<f64> = (1..=points).map(|k| k as f64 * t_max / points as f64).collect();
    let curve = FptDensityCurve::evaluate(&p_std, x_s, a_s, &times)?;
    // Tail approximants under the same boundary shift as the density.
    let sp = shift_to_boundary(&p_std, a_s);
    let xs = x_s - a_s;
    let em = (-2.0 * sp.alpha * xs).exp();
    let left_factor = 1.0 + sp.epsilon * (sp.c * xs - (1.0 - em) / (2.0 * sp.alpha));
    let right_factor = 1.0
        + sp.epsilon
            * (sp.c * xs + (1.0 - sp.alpha * xs) * (1.0 - em) / (2.0 * sp.alpha * sp.alpha * xs));
    let mut csv = String::from("t,density,left_tail,right_tail\n");
    for (k, &t) in times.iter().enumerate() {
        let base = p0(t, xs);
        csv.push_str(&format!(
            "{t},{},{},{}\n",
            curve.densities[k],
            left_factor * base,
            right_factor * base
        ));
    }
    write_output(output, &csv)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_validate(
    p_ext: &ModelParams,
    x: f64,
    times: &[f64],
    n_paths: usize,
    dt: f64,
    seed: u64,
    output: Option<&Path>,
) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("provide at least one time in --times".into()));
    }
    let (p_std, factor) = scale_to_standard(p_ext);
    let x_s = x * factor;
    let mut rows = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let est = error_estimate(t, &p_std, x_s, n_paths, dt, seed + i as u64)?;
        rows.push(json!({
            "t": t,
            "q_hat": sig6(est.q_hat),
            "std_error": sig6(est.std_error),
            "relative_error": sig6(est.q_ratio),
        }));
    }
    let doc = json!({ "rows": rows });
    write_output(output, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

/// Reads BUBBLE_FPT_THREADS and caps the rayon pool accordingly. Results are
/// thread-count independent; this only bounds resource use.
pub fn configure_threads(cfg: &Config) -> Result<()> {
    let from_env = std::env::var("BUBBLE_FPT_THREADS").ok();
    let raw = match from_env.as_deref().or_else(|| cfg.get_raw("threads")) {
        Some(r) => r.to_string(),
        None => return Ok(()),
    };
    let n: usize = raw
        .parse()
        .map_err(|_| Error::InvalidInput(format!("BUBBLE_FPT_THREADS: cannot parse '{raw}'")))?;
    if n == 0 {
        return Err(Error::InvalidInput("BUBBLE_FPT_THREADS must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .ok();
    Ok(())
}

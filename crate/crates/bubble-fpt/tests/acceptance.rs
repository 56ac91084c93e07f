//! End-to-end acceptance gate. Every criterion prints one line; the test
//! fails if any criterion fails, after all lines have been printed.

use bubble_fpt::calibrate::{calibrate, estimate_alpha, TRADING_DAYS};
use bubble_fpt::density::{cdf_xt_mc, density_xt, stationary_density, theta, theta_hat};
use bubble_fpt::fpt::{
    error_estimate, error_estimate_shifted, fptd_perturbed, invert_lt, lt_exact, lt_perturbed,
    lt_perturbed_complex, running_min_cdf, shift_to_boundary, FptDensityCurve,
};
use bubble_fpt::model::{
    scale_to_standard, ModelParams, PriceSeries, RegimeSegmentation,
};
use bubble_fpt::numeric::quad;
use bubble_fpt::sde::{euler_path, exact_path, path_rng, sample_fpt_mc, NoiseGrid};
use bubble_fpt::exec;
use bubble_fpt::numeric::special::erfc;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

const REFERENCE_DROP_PROBS: [f64; 9] = [69.38, 54.25, 40.19, 27.88, 17.87, 10.38, 5.35, 2.37, 0.86];

fn prediction_params() -> (ModelParams, f64) {
    let ext = ModelParams::new(0.51, 0.08, 0.69, 0.91, (14_371.62f64 / 433.0).ln()).unwrap();
    let (std, factor) = scale_to_standard(&ext);
    (std, ext.x0 * factor)
}

fn prediction_boundary(drop: f64) -> f64 {
    ((14_371.62f64 / 433.0).ln() + (1.0 - drop).ln()) / 0.91
}

fn p0(t: f64, x: f64) -> f64 {
    x / (2.0 * PI).sqrt() * t.powf(-1.5) * (-x * x / (2.0 * t)).exp()
}

fn criterion_1_prediction_table() -> Result<String, String> {
    let (p, x) = prediction_params();
    let horizons = [22.0 / 250.0, 1.0 / 12.0, 33.0 / 365.0];
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for &t in &horizons {
        let probs: Vec<f64> = (0..9)
            .map(|i| {
                let drop = 0.10 + 0.05 * i as f64;
                100.0 * running_min_cdf(t, prediction_boundary(drop), &p, x).unwrap()
            })
            .collect();
        let worst = probs
            .iter()
            .zip(REFERENCE_DROP_PROBS)
            .map(|(got, want)| (got - want).abs())
            .fold(0.0f64, f64::max);
        if best.as_ref().is_none_or(|(_, w, _)| worst < *w) {
            best = Some((t, worst, probs));
        }
    }
    let (t, worst, probs) = best.unwrap();
    if worst <= 3.0 {
        Ok(format!(
            "horizon t = {t:.6}, max deviation {worst:.2} pp over 9 drop levels"
        ))
    } else {
        let detail: Vec<String> = probs
            .iter()
            .zip(REFERENCE_DROP_PROBS)
            .enumerate()
            .map(|(i, (got, want))| format!("{}%: got {got:.2} want {want:.2}", 10 + 5 * i))
            .collect();
        Err(format!(
            "no horizon within 3 pp; best t = {t:.6} off by {worst:.2} pp [{}]",
            detail.join(", ")
        ))
    }
}

fn criterion_2_alpha_triple() -> Result<String, String> {
    let cases = [(0.73, 0.67, 0.23), (0.70, 1.23, 0.14), (0.69, 2.30, 0.08)];
    for (c_hat, x_r, want) in cases {
        let a = estimate_alpha(c_hat, x_r).map_err(|e| e.to_string())?;
        let rounded = (a * 100.0).round() / 100.0;
        if (rounded - want).abs() > 1e-12 {
            return Err(format!(
                "estimate_alpha({c_hat}, {x_r}) = {a} rounds to {rounded}, want {want}"
            ));
        }
    }
    Ok("0.23 / 0.14 / 0.08 reproduced after 2-decimal rounding".into())
}

/// Piecewise-linear log-price path whose regime means and volatility are
/// known in closed form, so calibration must recover them exactly.
fn synthetic_series(eps: f64, c: f64, d: f64) -> (PriceSeries, RegimeSegmentation) {
    let slope_i = eps * (1.0 - c) / 252.0;
    let slope_iii = -eps * c / 252.0;
    let (n_i, n_ii, n_iii) = (130, 40, 106);
    let mut x = vec![0.0f64];
    for _ in 0..n_i {
        x.push(x.last().unwrap() + slope_i);
    }
    for _ in 0..n_ii {
        x.push(*x.last().unwrap());
    }
    for k in 0..n_iii {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        x.push(x.last().unwrap() + slope_iii + sign * d);
    }
    let (t1, t2, t3) = (n_i, n_i + n_ii, x.len() - 1);
    let prices: Vec<f64> = x.iter().map(|v| 100.0 * v.exp()).collect();
    let ts = (0..prices.len()).map(|i| format!("day-{i:05}")).collect();
    (
        PriceSeries::new(ts, prices).unwrap(),
        RegimeSegmentation::new(t1, t2, t3, 1.0).unwrap(),
    )
}

fn criterion_3_calibration() -> Result<String, String> {
    // The historical Yahoo extracts cannot be reconstructed bit-exact, so
    // the synthetic construct-then-recover oracle applies instead.
    let (eps, c, d) = (0.4, 0.6, 0.0008);
    let (series, seg) = synthetic_series(eps, c, d);
    let rep = calibrate(&series, &seg).map_err(|e| e.to_string())?;
    let p = rep.params;
    if (p.epsilon - eps).abs() > 1e-9 {
        return Err(format!("epsilon {} != {eps}", p.epsilon));
    }
    if (p.c - c).abs() > 1e-9 {
        return Err(format!("c {} != {c}", p.c));
    }
    let sigma_want = d * TRADING_DAYS.sqrt();
    if (p.sigma - sigma_want).abs() > 0.01 * sigma_want {
        return Err(format!("sigma {} != {sigma_want}", p.sigma));
    }
    if ((-2.0 * p.alpha * seg.x_r).exp() - p.c).abs() > 1e-12 {
        return Err(format!("alpha {} inconsistent with c {}", p.alpha, p.c));
    }
    Ok(format!(
        "synthetic oracle recovered (eps, c, sigma) = ({eps}, {c}, {:.4}) exactly",
        sigma_want
    ))
}

fn criterion_4_perturbation_order() -> Result<String, String> {
    let (alpha, c, x, a, beta) = (1.0, 0.5, 1.0, 0.0, 1.0);
    let eps_grid = [0.05, 0.1, 0.2];
    let mut pts = Vec::new();
    for &eps in &eps_grid {
        let p = ModelParams::standard(eps, alpha, c, x).unwrap();
        let exact = lt_exact(beta, &p, x, a).map_err(|e| e.to_string())?;
        let pert = lt_perturbed(beta, &p, x).map_err(|e| e.to_string())?;
        pts.push((eps.ln(), ((exact - pert).abs()).ln()));
    }
    let n = pts.len() as f64;
    let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (u, v)| (a + u, b + v));
    let (mx, my) = (sx / n, sy / n);
    let slope = pts.iter().map(|(u, v)| (u - mx) * (v - my)).sum::<f64>()
        / pts.iter().map(|(u, _)| (u - mx) * (u - mx)).sum::<f64>();
    if (1.8..=2.2).contains(&slope) {
        Ok(format!("log-log slope {slope:.3} in [1.8, 2.2] at beta = 1"))
    } else {
        Err(format!(
            "log-log slope {slope:.3} outside [1.8, 2.2] at beta = 1 (diffs: {:?})",
            pts.iter().map(|(_, v)| v.exp()).collect::<Vec<_>>()
        ))
    }
}

fn criterion_5_transform_consistency() -> Result<String, String> {
    let p = ModelParams::standard(0.1, 1.0, 0.5, 1.0).unwrap();
    let x = 1.0;
    for t in [0.25, 1.0, 4.0] {
        let inv = invert_lt(|s| lt_perturbed_complex(s, &p, x), t, 32)
            .map_err(|e| e.to_string())?;
        let direct = fptd_perturbed(t, &p, x).map_err(|e| e.to_string())?;
        if (inv - direct).abs() > 1e-5 {
            return Err(format!(
                "invert_lt(lt_perturbed) at t = {t}: {inv} vs {direct}"
            ));
        }
        let inv0 = invert_lt(|s| (-(2.0 * s).sqrt() * x).exp(), t, 32)
            .map_err(|e| e.to_string())?;
        if (inv0 - p0(t, x)).abs() > 1e-6 {
            return Err(format!(
                "invert_lt(Brownian LT) at t = {t}: {inv0} vs {}",
                p0(t, x)
            ));
        }
    }
    Ok("Talbot inversion matches closed forms at t = 0.25, 1, 4".into())
}

fn criterion_6_mass_identity() -> Result<String, String> {
    let p = ModelParams::standard(0.1, 1.0, 0.5, 1.0).unwrap();
    let x = 1.0;
    let f = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            fptd_perturbed(t, &p, x).unwrap()
        }
    };
    let breaks = [
        0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 100.0, 250.0, 500.0,
        1000.0, 2500.0, 5000.0, 10_000.0,
    ];
    let head = quad::integrate_segments(&f, &breaks, 1e-10, 1e-9).value;
    // Beyond the cutoff the density is C p0(t) with the exact asymptotic
    // constant C = 1 + eps (c x + (1 - e^{-2 alpha x}) / (2 alpha^2 x)), so
    // the remaining mass is C * Erf(x / sqrt(2 t_cut)).
    let em = (-2.0 * p.alpha * x).exp();
    let c_tail = 1.0 + p.epsilon * (p.c * x + (1.0 - em) / (2.0 * p.alpha * p.alpha * x));
    let t_cut = 10_000.0f64;
    let tail = c_tail * (1.0 - erfc(x / (2.0 * t_cut).sqrt()));
    let mass = head + tail;
    let want = 1.0 + p.epsilon * p.c * x;
    if (mass - want).abs() <= 1e-4 {
        Ok(format!("integral {mass:.8} vs 1 + eps c x = {want:.8}"))
    } else {
        Err(format!("integral {mass:.8} vs 1 + eps c x = {want:.8}"))
    }
}

fn criterion_7_simulation_oracle() -> Result<String, String> {
    let p = ModelParams::standard(0.1, 1.0, 0.5, 1.0).unwrap();
    let (x, a, horizon, dt, n) = (1.0, 0.0, 5.0, 1e-4, 100_000usize);
    let samples = sample_fpt_mc(&p, x, a, horizon, dt, n, 4242).map_err(|e| e.to_string())?;
    let n_bins = 30;
    let width = horizon / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for h in samples.hits() {
        let idx = ((h / width).ceil() as usize).clamp(1, n_bins) - 1;
        counts[idx] += 1;
    }
    let mut worst = 0.0f64;
    for (i, &count) in counts.iter().enumerate() {
        let (lo, hi) = (i as f64 * width, (i + 1) as f64 * width);
        let q = quad::integrate(
            |t| fptd_perturbed(t.max(1e-12), &p, x).unwrap(),
            lo,
            hi,
            1e-10,
            1e-8,
        );
        let observed = count as f64 / n as f64;
        let se_mc = (observed * (1.0 - observed) / n as f64).sqrt().max(1e-9);
        let combined = (se_mc * se_mc + q.abs_error * q.abs_error).sqrt();
        let sigmas = (observed - q.value).abs() / combined;
        worst = worst.max(sigmas);
        if sigmas > 3.0 {
            return Err(format!(
                "bin ({lo:.3}, {hi:.3}]: empirical {observed:.5} vs density {:.5} is {sigmas:.1} SE",
                q.value
            ));
        }
    }
    Ok(format!(
        "30 bins on (0, 5] all within 3 SE (worst {worst:.2} SE, {} censored paths)",
        samples.censored_count()
    ))
}

fn criterion_8_brownian_limit() -> Result<String, String> {
    let x = 1.0;
    let p = ModelParams::brownian_limit(1.0, 0.5, 1.0, x).unwrap();
    for t in [0.1, 1.0, 5.0] {
        let d = fptd_perturbed(t, &p, x).map_err(|e| e.to_string())?;
        if (d - p0(t, x)).abs() > 1e-12 {
            return Err(format!("fptd_perturbed at t = {t}: {d} vs p0 {}", p0(t, x)));
        }
    }
    for beta in [0.5, 1.0, 2.0] {
        let f = lt_perturbed(beta, &p, x).map_err(|e| e.to_string())?;
        let want = (-(2.0 * beta).sqrt() * x).exp();
        if (f - want).abs() > 1e-12 {
            return Err(format!("lt_perturbed at beta = {beta}: {f} vs {want}"));
        }
    }
    let noise = NoiseGrid::generate(0.01, 100, 7, 0).map_err(|e| e.to_string())?;
    let traj = exact_path(&p, 1.0, 100, &noise).map_err(|e| e.to_string())?;
    let mut w = 0.0;
    for (k, &inc) in noise.increments.iter().enumerate() {
        w += inc;
        if (traj.states[k + 1] - (x + w)).abs() > 1e-12 {
            return Err(format!(
                "exact_path deviates from x + W at step {}: {} vs {}",
                k + 1,
                traj.states[k + 1],
                x + w
            ));
        }
    }
    let est = error_estimate(1.0, &p, x, 1000, 0.01, 7).map_err(|e| e.to_string())?;
    if est.q_hat.abs() > 1e-12 {
        return Err(format!("q_hat {} != 0 at eps = 0", est.q_hat));
    }
    Ok("fptd = p0, path = x + W, LT = e^{-sqrt(2 beta) x}, q_hat = 0 at eps = 0".into())
}

fn criterion_9_density_checks() -> Result<String, String> {
    for (i, &r) in [0.5, 1.0, 2.0, 5.0].iter().enumerate() {
        for (j, &s) in [0.5, 1.0, 2.0].iter().enumerate() {
            let quad_eval = theta(r, s).map_err(|e| e.to_string())?;
            let mc = theta_hat(r, s, 400_000, 1000 + (3 * i + j) as u64)
                .map_err(|e| e.to_string())?;
            let combined = (quad_eval.abs_error_estimate.powi(2)
                + mc.abs_error_estimate.powi(2))
            .sqrt()
            .max(1e-12);
            if (quad_eval.value - mc.value).abs() > 3.0 * combined {
                return Err(format!(
                    "theta({r}, {s}) = {} vs theta_hat {} +- {}",
                    quad_eval.value, mc.value, mc.abs_error_estimate
                ));
            }
        }
    }
    let p = ModelParams::standard(0.1, 1.0, 0.5, 0.0).unwrap();
    let (t, x) = (1.0, 0.0);
    let (lo, hi, n) = (-6.0, 9.0, 150usize);
    let h = (hi - lo) / n as f64;
    let mut mass = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        mass += w * h * density_xt(lo + i as f64 * h, t, &p, x).unwrap().value;
    }
    if (mass - 1.0).abs() > 0.02 {
        return Err(format!("density mass {mass:.4} off by more than 2%"));
    }
    let bm = ModelParams::brownian_limit(1.0, 0.5, 1.0, 0.0).unwrap();
    let targets = [
        (-1.0, 0.15865525393145705),
        (0.0, 0.5),
        (1.0, 0.8413447460685429),
    ];
    for (i, (u, phi)) in targets.into_iter().enumerate() {
        let e = cdf_xt_mc(u, t, &bm, 0.0, 400_000, 2100 + i as u64).map_err(|e| e.to_string())?;
        if (e.value - phi).abs() > 3.0 * e.std_error {
            return Err(format!(
                "cdf_xt_mc({u}) = {} +- {} vs Phi = {phi}",
                e.value, e.std_error
            ));
        }
    }
    Ok(format!(
        "theta grid 12/12 within 3 sigma; density mass {mass:.4}; Gaussian CDF within 3 SE"
    ))
}

fn criterion_10_stationary() -> Result<String, String> {
    let p = ModelParams::standard(1.0, 0.5, 0.5, 0.0).unwrap();
    let x_r = p.equilibrium_level().unwrap();
    let g = |x: f64| stationary_density(x, &p).unwrap();
    let (mut lo, mut hi) = (x_r - 0.5, x_r + 0.5);
    while hi - lo > 1e-6 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let argmax = 0.5 * (lo + hi);
    if (argmax - x_r).abs() > 1e-4 {
        return Err(format!("argmax {argmax} vs -ln(c)/(2 alpha) = {x_r}"));
    }

    let (n_paths, horizon, n_steps) = (4000usize, 30.0, 6000usize);
    let dt = horizon / n_steps as f64;
    let finals = exec::map_paths(n_paths, |i| {
        let noise = NoiseGrid::generate(dt, n_steps, 31_000, i as u64).unwrap();
        *euler_path(&p, x_r, horizon, n_steps, &noise)
            .unwrap()
            .states
            .last()
            .unwrap()
    });
    let (b_lo, b_hi, n_bins) = (-1.0, 2.5, 30usize);
    let bw = (b_hi - b_lo) / n_bins as f64;
    let mut worst = 0.0f64;
    for i in 0..n_bins {
        let (lo_i, hi_i) = (b_lo + i as f64 * bw, b_lo + (i + 1) as f64 * bw);
        let expected = quad::integrate(|x| g(x), lo_i, hi_i, 1e-10, 1e-8).value;
        let count = finals.iter().filter(|&&v| v > lo_i && v <= hi_i).count();
        let observed = count as f64 / n_paths as f64;
        let se = (expected * (1.0 - expected) / n_paths as f64)
            .sqrt()
            .max(1e-4);
        let sigmas = (observed - expected).abs() / se;
        worst = worst.max(sigmas);
        if sigmas > 3.0 {
            return Err(format!(
                "bin ({lo_i:.2}, {hi_i:.2}]: empirical {observed:.4} vs stationary {expected:.4} is {sigmas:.1} SE"
            ));
        }
    }
    Ok(format!(
        "argmax {argmax:.6} = -ln(c)/(2 alpha) to 1e-4; 30-bin histogram within 3 SE (worst {worst:.2})"
    ))
}

fn criterion_11_exponential_functional() -> Result<String, String> {
    let (n_paths, n_steps) = (100_000usize, 1000usize);
    let dt = 1.0 / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let vals = exec::map_paths(n_paths, |i| {
        let mut rng = path_rng(9090, i as u64);
        let mut w = 0.0f64;
        let mut prev = 1.0f64;
        let mut acc = 0.0f64;
        for _ in 0..n_steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            w += sqrt_dt * z;
            let g = (-2.0 * w).exp();
            acc += 0.5 * dt * (prev + g);
            prev = g;
        }
        acc
    });
    let mean = vals.iter().sum::<f64>() / n_paths as f64;
    let want = (1.0f64.exp().powi(2) - 1.0) / 2.0;
    let rel = (mean - want).abs() / want;
    if rel <= 0.02 {
        Ok(format!(
            "E int_0^1 e^{{-2W}} = {mean:.4} vs (e^2 - 1)/2 = {want:.4} ({:.2}% off)",
            100.0 * rel
        ))
    } else {
        Err(format!(
            "E int_0^1 e^{{-2W}} = {mean:.4} vs (e^2 - 1)/2 = {want:.4} ({:.2}% off)",
            100.0 * rel
        ))
    }
}

fn criterion_12_error_bound() -> Result<String, String> {
    let x = 1.0;
    let mut ratios = Vec::new();
    for eps in [0.05, 0.1, 0.2] {
        let p = ModelParams::standard(eps, 1.0, 0.5, x).unwrap();
        let est = error_estimate(1.0, &p, x, 20_000, 1e-3, 99).map_err(|e| e.to_string())?;
        ratios.push(est.q_hat.abs() / (eps * eps));
    }
    let (min_r, max_r) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    if max_r > 3.0 * min_r.max(1e-12) {
        return Err(format!(
            "|q_hat| / eps^2 varies {ratios:?}: no single constant M fits"
        ));
    }

    let (p, x_std) = prediction_params();
    let mut peak_errors = Vec::new();
    for i in 0..9 {
        let drop = 0.10 + 0.05 * i as f64;
        let a = prediction_boundary(drop);
        let times: Vec<f64> = (1..=400).map(|k| k as f64 * 0.0015).collect();
        let curve = FptDensityCurve::evaluate(&p, x_std, a, &times).map_err(|e| e.to_string())?;
        let (k_peak, _) = curve
            .densities
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |(bk, bv), (k, &v)| {
                if v > bv {
                    (k, v)
                } else {
                    (bk, bv)
                }
            });
        let t_peak = curve.times[k_peak];
        let sp = shift_to_boundary(&p, a);
        let est = error_estimate_shifted(t_peak, &sp, 10_000, t_peak / 300.0, 501 + i as u64)
            .map_err(|e| e.to_string())?;
        peak_errors.push(100.0 * est.q_ratio);
        if est.q_ratio > 0.025 {
            return Err(format!(
                "{}% drop row: peak relative error {:.2}% exceeds 2.5%",
                (100.0 * drop).round(),
                100.0 * est.q_ratio
            ));
        }
    }
    Ok(format!(
        "|q_hat| / eps^2 stable ({:.4}..{:.4}); peak errors (%) {:?} all below 2.5",
        min_r,
        max_r,
        peak_errors
            .iter()
            .map(|v| (v * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    ))
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Result<String, String>)> = vec![
        ("01 prediction-table running-minimum probabilities", criterion_1_prediction_table),
        ("02 alpha-hat consistency triple", criterion_2_alpha_triple),
        ("03 calibration construct-then-recover", criterion_3_calibration),
        ("04 perturbation order eps^2", criterion_4_perturbation_order),
        ("05 transform consistency", criterion_5_transform_consistency),
        ("06 FPTD mass identity", criterion_6_mass_identity),
        ("07 simulation vs density histogram", criterion_7_simulation_oracle),
        ("08 Brownian limit exactness", criterion_8_brownian_limit),
        ("09 density cross-checks", criterion_9_density_checks),
        ("10 stationary law", criterion_10_stationary),
        ("11 exponential-functional moment", criterion_11_exponential_functional),
        ("12 error-bound property", criterion_12_error_bound),
    ];
    let mut failures = Vec::new();
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(detail)) => {
                println!("FAIL {name}: {detail}");
                failures.push(name);
            }
            Err(_) => {
                println!("FAIL {name}: panicked");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

//! Regime-based parameter calibration.
//!
//! The procedure slices a normalized log-price series into three regimes,
//! takes rolling monthly returns in the first and third, and solves the
//! drift identities
//!
//! ```text
//! r_bar_I   = eps (1 - c)        (displacement regime, x near 0)
//! r_bar_III = -eps c             (profit-taking regime, x large)
//! ```
//!
//! for (eps, c); the volatility comes from regime-III daily returns and
//! alpha from the user-supplied equilibrium level. Everything here is
//! deterministic closed-form arithmetic.

use crate::error::Error;
use crate::model::{
    log_returns, log_transform, LogSeries, ModelParams, PriceSeries, RegimeSegmentation,
};
use crate::Result;

/// Rolling window of one trading month, in days (260 / 12 rounded down).
pub const MONTH_WINDOW: usize = 21;

/// Annualization factor for monthly rolling means.
pub const MONTHS_PER_YEAR: f64 = 12.0;

/// Annualization factor for daily standard deviations.
pub const TRADING_DAYS: f64 = 260.0;

/// Output of a full calibration run.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub params: ModelParams,
    /// Annualized mean of nonnegative regime-I monthly returns.
    pub r_bar_i: f64,
    /// Annualized mean of nonpositive regime-III monthly returns.
    pub r_bar_iii: f64,
    /// Number of regime-III daily returns behind the volatility estimate.
    pub sigma_inputs: usize,
    pub regimes: RegimeSegmentation,
    pub warnings: Vec<String>,
}

fn slice_series(series: &LogSeries, from: usize, to: usize) -> LogSeries {
    LogSeries {
        timestamps: series.timestamps[from..=to].to_vec(),
        values: series.values[from..=to].to_vec(),
    }
}

/// Splits a log series at the regime boundaries. Boundary points belong to
/// both adjacent regimes.
pub fn split_regimes(
    series: &LogSeries,
    seg: &RegimeSegmentation,
) -> Result<(LogSeries, LogSeries, LogSeries)> {
    seg.check_against(series)?;
    Ok((
        slice_series(series, 0, seg.t1),
        slice_series(series, seg.t1, seg.t2),
        slice_series(series, seg.t2, seg.t3),
    ))
}

/// Rolling monthly log-returns of a segment: `x[k] - x[k - 21]`.
pub fn rolling_monthly_returns(segment: &LogSeries) -> Result<Vec<f64>> {
    if segment.len() <= MONTH_WINDOW {
        return Err(Error::InsufficientData(format!(
            "rolling window needs more than {MONTH_WINDOW} points, got {}",
            segment.len()
        )));
    }
    Ok((MONTH_WINDOW..segment.len())
        .map(|k| segment.values[k] - segment.values[k - MONTH_WINDOW])
        .collect())
}

fn annualized_filtered_mean(returns: &[f64], keep: impl Fn(f64) -> bool) -> Option<f64> {
    let kept: Vec<f64> = returns.iter().copied().filter(|&r| keep(r)).collect();
    if kept.is_empty() {
        None
    } else {
        Some(kept.iter().sum::<f64>() / kept.len() as f64 * MONTHS_PER_YEAR)
    }
}

/// Drift estimators from regime-I and regime-III rolling monthly returns.
///
/// Returns `(epsilon_hat, c_hat, r_bar_I, r_bar_III)` with the regime means
/// already annualized. By construction `epsilon_hat >= 0` and
/// `c_hat` lies in [0, 1].
pub fn estimate_eps_c(r_m_i: &[f64], r_m_iii: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let r_bar_i = annualized_filtered_mean(r_m_i, |r| r >= 0.0).ok_or_else(|| {
        Error::InsufficientData("regime I has no nonnegative monthly returns".into())
    })?;
    let r_bar_iii = annualized_filtered_mean(r_m_iii, |r| r <= 0.0).ok_or_else(|| {
        Error::InsufficientData("regime III has no nonpositive monthly returns".into())
    })?;
    let eps = r_bar_i - r_bar_iii;
    if eps == 0.0 {
        return Err(Error::DegenerateCalibration(
            "both regime means vanish; epsilon is unidentifiable".into(),
        ));
    }
    let c = -r_bar_iii / eps;
    Ok((eps, c, r_bar_i, r_bar_iii))
}

/// Annualized sample standard deviation of the daily log-returns of a
/// regime-III segment.
pub fn estimate_sigma(segment_iii: &LogSeries) -> Result<(f64, usize)> {
    if segment_iii.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "sigma estimation needs at least 3 points, got {}",
            segment_iii.len()
        )));
    }
    let r = log_returns(segment_iii)?;
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((var.sqrt() * TRADING_DAYS.sqrt(), r.len()))
}

/// alpha_hat = -ln(c_hat) / (2 x_r).
pub fn estimate_alpha(c_hat: f64, x_r: f64) -> Result<f64> {
    if !(x_r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "equilibrium level must be positive, got {x_r}"
        )));
    }
    if c_hat <= 0.0 || c_hat >= 1.0 {
        return Err(Error::DegenerateCalibration(format!(
            "alpha is undefined for c_hat = {c_hat}; need 0 < c_hat < 1"
        )));
    }
    Ok(-c_hat.ln() / (2.0 * x_r))
}

fn tag(step: &str, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{step}: {m}")),
        Error::InsufficientData(m) => Error::InsufficientData(format!("{step}: {m}")),
        Error::DegenerateCalibration(m) => Error::DegenerateCalibration(format!("{step}: {m}")),
        other => other,
    }
}

/// Full calibration: prices -> normalized log series -> regime statistics ->
/// ModelParams with x0 = 0.
pub fn calibrate(series: &PriceSeries, seg: &RegimeSegmentation) -> Result<CalibrationReport> {
    let logs = log_transform(series)?;
    let (seg_i, _seg_ii, seg_iii) = split_regimes(&logs, seg).map_err(|e| tag("split_regimes", e))?;
    let r_m_i = rolling_monthly_returns(&seg_i).map_err(|e| tag("regime I rolling returns", e))?;
    let r_m_iii =
        rolling_monthly_returns(&seg_iii).map_err(|e| tag("regime III rolling returns", e))?;
    let (eps, c, r_bar_i, r_bar_iii) =
        estimate_eps_c(&r_m_i, &r_m_iii).map_err(|e| tag("estimate_eps_c", e))?;
    let (sigma, sigma_inputs) = estimate_sigma(&seg_iii).map_err(|e| tag("estimate_sigma", e))?;
    if sigma == 0.0 {
        return Err(Error::DegenerateCalibration(
            "estimate_sigma: regime III has zero return variance".into(),
        ));
    }
    let alpha = estimate_alpha(c, seg.x_r).map_err(|e| tag("estimate_alpha", e))?;
    let mut warnings = Vec::new();
    let dropped_i = r_m_i.iter().filter(|&&r| r < 0.0).count();
    let dropped_iii = r_m_iii.iter().filter(|&&r| r > 0.0).count();
    if dropped_i * 2 > r_m_i.len() {
        warnings.push(format!(
            "regime I: {dropped_i} of {} monthly returns were negative and excluded",
            r_m_i.len()
        ));
    }
    if dropped_iii * 2 > r_m_iii.len() {
        warnings.push(format!(
            "regime III: {dropped_iii} of {} monthly returns were positive and excluded",
            r_m_iii.len()
        ));
    }
    let params =
        ModelParams::new(eps, alpha, c, sigma, 0.0).map_err(|e| tag("parameter assembly", e))?;
    Ok(CalibrationReport {
        params,
        r_bar_i,
        r_bar_iii,
        sigma_inputs,
        regimes: *seg,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logs(values: Vec<f64>) -> LogSeries {
        LogSeries {
            timestamps: (0..values.len()).map(|i| format!("day-{i:05}")).collect(),
            values,
        }
    }

    #[test]
    fn split_shares_endpoints() {
        let s = logs(vec![0.0, 1.0, 2.0, 3.0]);
        let seg = RegimeSegmentation::new(1, 2, 3, 1.0).unwrap();
        let (a, b, c) = split_regimes(&s, &seg).unwrap();
        assert_eq!(a.values, vec![0.0, 1.0]);
        assert_eq!(b.values, vec![1.0, 2.0]);
        assert_eq!(c.values, vec![2.0, 3.0]);
        let mut merged = a.values.clone();
        merged.extend_from_slice(&b.values[1..]);
        merged.extend_from_slice(&c.values[1..]);
        assert_eq!(merged, s.values);
    }

    #[test]
    fn split_rejects_out_of_bounds() {
        let s = logs(vec![0.0, 1.0, 2.0]);
        let seg = RegimeSegmentation::new(1, 2, 5, 1.0).unwrap();
        assert!(split_regimes(&s, &seg).is_err());
    }

    #[test]
    fn rolling_returns_linear_and_constant() {
        let lin = logs((0..60).map(|k| 0.001 * k as f64).collect());
        let r = rolling_monthly_returns(&lin).unwrap();
        assert_eq!(r.len(), 60 - MONTH_WINDOW);
        for v in &r {
            assert!((v - 0.021).abs() < 1e-12);
        }
        let flat = logs(vec![0.3; 40]);
        for v in rolling_monthly_returns(&flat).unwrap() {
            assert_eq!(v, 0.0);
        }
        assert!(matches!(
            rolling_monthly_returns(&logs(vec![0.0; 21])),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn eps_c_symmetric_case() {
        // pre-annualized means 0.25 and -0.25
        let up = vec![0.25 / 12.0; 10];
        let down = vec![-0.25 / 12.0; 10];
        let (eps, c, ri, riii) = estimate_eps_c(&up, &down).unwrap();
        assert!((eps - 0.5).abs() < 1e-12);
        assert!((c - 0.5).abs() < 1e-12);
        assert!((ri - 0.25).abs() < 1e-12 && (riii + 0.25).abs() < 1e-12);
    }

    #[test]
    fn eps_c_zero_downside_gives_c_zero() {
        let up = vec![0.3 / 12.0; 6];
        let down = vec![0.0; 6];
        let (eps, c, ri, _) = estimate_eps_c(&up, &down).unwrap();
        assert_eq!(c, 0.0);
        assert!((eps - ri).abs() < 1e-15);
    }

    #[test]
    fn eps_c_backsolved_from_reported_parameters() {
        // r_bar_I = 0.51 (1 - 0.69), r_bar_III = -0.51 * 0.69
        let up = vec![0.51 * (1.0 - 0.69) / 12.0; 8];
        let down = vec![-0.51 * 0.69 / 12.0; 8];
        let (eps, c, _, _) = estimate_eps_c(&up, &down).unwrap();
        assert!((eps - 0.51).abs() < 1e-12);
        assert!((c - 0.69).abs() < 1e-12);
    }

    #[test]
    fn eps_c_rejects_empty_filters() {
        assert!(matches!(
            estimate_eps_c(&[-0.1, -0.2], &[-0.1]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            estimate_eps_c(&[0.1], &[0.2, 0.3]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn sigma_alternating_returns() {
        let d = 0.004;
        let mut x = vec![0.0];
        for k in 0..100 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            x.push(x[k] + sign * d);
        }
        let (sigma, n) = estimate_sigma(&logs(x)).unwrap();
        assert_eq!(n, 100);
        let expect = d * (100.0f64 / 99.0).sqrt() * TRADING_DAYS.sqrt();
        assert!((sigma - expect).abs() < 1e-12);
        assert!((sigma - d * TRADING_DAYS.sqrt()).abs() < 0.01 * sigma);
    }

    #[test]
    fn sigma_degenerate_constant_returns() {
        let x: Vec<f64> = (0..30).map(|k| 0.002 * k as f64).collect();
        let (sigma, _) = estimate_sigma(&logs(x)).unwrap();
        assert!(sigma < 1e-12);
    }

    #[test]
    fn alpha_reproduces_reported_values() {
        let cases = [(0.73, 0.67, 0.23), (0.70, 1.23, 0.14), (0.69, 2.30, 0.08)];
        for (c, xr, want) in cases {
            let a = estimate_alpha(c, xr).unwrap();
            assert!(
                ((a * 100.0).round() / 100.0 - want).abs() < 1e-12,
                "alpha({c}, {xr}) = {a}, rounds away from {want}"
            );
            assert!(((-2.0 * a * xr).exp() - c).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_rejects_degenerate_c() {
        assert!(matches!(
            estimate_alpha(1.0, 0.5),
            Err(Error::DegenerateCalibration(_))
        ));
        assert!(matches!(
            estimate_alpha(0.0, 0.5),
            Err(Error::DegenerateCalibration(_))
        ));
        assert!(estimate_alpha(0.5, -1.0).is_err());
    }

    /// Builds a price series whose regime drifts encode (eps, c) exactly and
    /// whose regime-III noise has known amplitude.
    fn synthetic_series(eps: f64, c: f64, d: f64) -> (PriceSeries, RegimeSegmentation) {
        let slope_i = eps * (1.0 - c) / 252.0;
        let slope_iii = -eps * c / 252.0;
        let n_i = 130;
        let n_ii = 40;
        // An even number of rolling returns makes the alternating noise
        // cancel exactly in the regime-III mean.
        let n_iii_steps = 21 + 85;
        let mut x = vec![0.0];
        for _ in 0..n_i {
            x.push(x.last().unwrap() + slope_i);
        }
        for _ in 0..n_ii {
            x.push(*x.last().unwrap());
        }
        for k in 0..n_iii_steps {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            x.push(x.last().unwrap() + slope_iii + sign * d);
        }
        let t1 = n_i;
        let t2 = n_i + n_ii;
        let t3 = x.len() - 1;
        let prices: Vec<f64> = x.iter().map(|v| 100.0 * v.exp()).collect();
        let ts = (0..prices.len()).map(|i| format!("day-{i:05}")).collect();
        (
            PriceSeries::new(ts, prices).unwrap(),
            RegimeSegmentation::new(t1, t2, t3, 1.0).unwrap(),
        )
    }

    #[test]
    fn construct_then_recover_is_exact() {
        let (eps, c, d) = (0.4, 0.6, 0.0008);
        let (series, seg) = synthetic_series(eps, c, d);
        let rep = calibrate(&series, &seg).unwrap();
        assert!((rep.params.epsilon - eps).abs() < 1e-9, "eps {}", rep.params.epsilon);
        assert!((rep.params.c - c).abs() < 1e-9, "c {}", rep.params.c);
        assert!(
            (rep.params.sigma - d * TRADING_DAYS.sqrt()).abs() < 0.01 * rep.params.sigma,
            "sigma {}",
            rep.params.sigma
        );
        assert!((rep.params.alpha - estimate_alpha(c, 1.0).unwrap()).abs() < 1e-9);
        assert_eq!(rep.params.x0, 0.0);
        assert!(rep.r_bar_i >= 0.0 && rep.r_bar_iii <= 0.0);
        assert!(((-2.0 * rep.params.alpha * seg.x_r).exp() - rep.params.c).abs() < 1e-9);
    }

    #[test]
    fn calibration_invariant_to_price_scaling() {
        let (series, seg) = synthetic_series(0.3, 0.5, 0.001);
        let scaled = PriceSeries::new(
            series.timestamps.clone(),
            series.prices.iter().map(|p| p * 37.5).collect(),
        )
        .unwrap();
        let a = calibrate(&series, &seg).unwrap();
        let b = calibrate(&scaled, &seg).unwrap();
        assert!((a.params.epsilon - b.params.epsilon).abs() < 1e-12);
        assert!((a.params.c - b.params.c).abs() < 1e-12);
        assert!((a.params.sigma - b.params.sigma).abs() < 1e-12);
    }

    #[test]
    fn constant_prices_are_degenerate() {
        let n = 300;
        let ts: Vec<String> = (0..n).map(|i| format!("day-{i:05}")).collect();
        let series = PriceSeries::new(ts, vec![50.0; n]).unwrap();
        let seg = RegimeSegmentation::new(100, 150, n - 1, 1.0).unwrap();
        let err = calibrate(&series, &seg).unwrap_err();
        assert!(matches!(err, Error::DegenerateCalibration(_)), "{err}");
    }
}

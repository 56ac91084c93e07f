//! Domain types, parameter validation, log-price transforms and the
//! extended-to-standard volatility scaling.

use crate::{Error, Result};

/// Parameters of the extended SDE
/// `dX = eps (e^{-2 alpha X} - c) dt + sigma dW`, plus the initial state.
///
/// `sigma = 1` is the standard form every analytic operation works in;
/// [`scale_to_standard`] maps the general case onto it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Mean-reversion rate, per year. Strictly positive for a calibrated
    /// model; the Brownian limit `epsilon = 0` is representable through
    /// [`ModelParams::brownian_limit`] for simulation and perturbation
    /// baselines.
    pub epsilon: f64,
    /// Decay speed of the drift exponent. Strictly positive.
    pub alpha: f64,
    /// Equilibrium factor, in [0, 1].
    pub c: f64,
    /// Annualized volatility; 1 for the standard SDE.
    pub sigma: f64,
    /// Initial log-state.
    pub x0: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, alpha: f64, c: f64, sigma: f64, x0: f64) -> Result<Self> {
        let p = ModelParams {
            epsilon,
            alpha,
            c,
            sigma,
            x0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Standard-form parameters (`sigma = 1`).
    pub fn standard(epsilon: f64, alpha: f64, c: f64, x0: f64) -> Result<Self> {
        Self::new(epsilon, alpha, c, 1.0, x0)
    }

    /// The `epsilon = 0` limit: pure (scaled) Brownian motion. Accepted by
    /// the simulation and perturbation operations as a documented
    /// degenerate case.
    pub fn brownian_limit(alpha: f64, c: f64, sigma: f64, x0: f64) -> Result<Self> {
        let p = ModelParams {
            epsilon: 0.0,
            alpha,
            c,
            sigma,
            x0,
        };
        p.validate_relaxed()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        self.validate_relaxed()
    }

    /// Validation with `epsilon >= 0` allowed (Brownian limit).
    pub fn validate_relaxed(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidInput(format!(
                "c must be in [0, 1], got {}",
                self.c
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidInput("x0 must be finite".into()));
        }
        Ok(())
    }

    /// Equilibrium level `-ln(c) / (2 alpha)` where the drift vanishes.
    /// `None` for c = 0 (the drift never vanishes).
    pub fn equilibrium_level(&self) -> Option<f64> {
        if self.c > 0.0 {
            Some(-self.c.ln() / (2.0 * self.alpha))
        } else {
            None
        }
    }
}

/// Parameters with the upper bound on `c` relaxed.
///
/// The running-minimum shift replaces `c` by `c e^{2 alpha a}`, which can
/// exceed 1; keeping this a separate type leaves the `c <= 1` invariant
/// enforceable on calibrated models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedParams {
    pub epsilon: f64,
    pub alpha: f64,
    /// Nonnegative, may exceed 1.
    pub c: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl ShiftedParams {
    pub fn new(epsilon: f64, alpha: f64, c: f64, sigma: f64, x0: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be > 0, got {alpha}")));
        }
        if !(c >= 0.0) {
            return Err(Error::InvalidInput(format!("c must be >= 0, got {c}")));
        }
        Ok(ShiftedParams {
            epsilon,
            alpha,
            c,
            sigma,
            x0,
        })
    }
}

impl From<ModelParams> for ShiftedParams {
    fn from(p: ModelParams) -> Self {
        ShiftedParams {
            epsilon: p.epsilon,
            alpha: p.alpha,
            c: p.c,
            sigma: p.sigma,
            x0: p.x0,
        }
    }
}

/// An observed asset-price series. Timestamps are opaque ordered labels
/// (ISO-8601 dates compare correctly as strings); no calendar arithmetic
/// happens here.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub timestamps: Vec<String>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(timestamps: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::InvalidInput(format!(
                "timestamp/price length mismatch: {} vs {}",
                timestamps.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(Error::InvalidInput(
                "price series needs at least 2 observations".into(),
            ));
        }
        for w in timestamps.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(format!(
                    "timestamps must be strictly increasing: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        for (i, &p) in prices.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "price at index {i} must be positive and finite, got {p}"
                )));
            }
        }
        Ok(PriceSeries { timestamps, prices })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Normalized log-prices `ln(P_t / P_0)`; the first element is exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSeries {
    pub timestamps: Vec<String>,
    pub values: Vec<f64>,
}

impl LogSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Regime boundary indices into a [`LogSeries`] plus the observed
/// equilibrium level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSegmentation {
    pub t1: usize,
    pub t2: usize,
    pub t3: usize,
    /// Observed equilibrium level of the normalized log-price.
    pub x_r: f64,
}

impl RegimeSegmentation {
    pub fn new(t1: usize, t2: usize, t3: usize, x_r: f64) -> Result<Self> {
        if !(t1 > 0 && t1 < t2 && t2 < t3) {
            return Err(Error::InvalidInput(format!(
                "regime indices must satisfy 0 < t1 < t2 < t3, got ({t1}, {t2}, {t3})"
            )));
        }
        if !(x_r > 0.0) {
            return Err(Error::InvalidInput(format!(
                "equilibrium level must be positive, got {x_r}"
            )));
        }
        Ok(RegimeSegmentation { t1, t2, t3, x_r })
    }

    pub fn check_against(&self, series: &LogSeries) -> Result<()> {
        if self.t3 >= series.len() {
            return Err(Error::InvalidInput(format!(
                "t3 = {} out of bounds for series of length {}",
                self.t3,
                series.len()
            )));
        }
        Ok(())
    }
}

/// Normalized log transform: `values[t] = ln(prices[t] / prices[0])`.
pub fn log_transform(series: &PriceSeries) -> Result<LogSeries> {
    let p0 = series.prices[0];
    let values = series.prices.iter().map(|&p| (p / p0).ln()).collect();
    let mut out = LogSeries {
        timestamps: series.timestamps.clone(),
        values,
    };
    out.values[0] = 0.0;
    Ok(out)
}

/// Elementwise differences of the log series: `r_t = x_t - x_{t-1}`.
pub fn log_returns(series: &LogSeries) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(
            "log series needs at least 2 points for returns".into(),
        ));
    }
    Ok(series.values.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Maps extended-SDE parameters onto the standard form `sigma = 1`:
/// `eps -> eps/sigma`, `alpha -> alpha sigma`, `x -> x/sigma`, `c` unchanged.
///
/// Returns the scaled parameters and the level-scaling factor `1/sigma`;
/// any hitting level `a` must be multiplied by it by the caller.
pub fn scale_to_standard(p: &ModelParams) -> (ModelParams, f64) {
    let factor = 1.0 / p.sigma;
    let scaled = ModelParams {
        epsilon: p.epsilon / p.sigma,
        alpha: p.alpha * p.sigma,
        c: p.c,
        sigma: 1.0,
        x0: p.x0 / p.sigma,
    };
    (scaled, factor)
}

//! Path simulation: the pathwise-exact solution, Euler-Maruyama, the
//! exponential transforms Y and Z, the scale-function diagnostic and the
//! Monte Carlo first-passage sampling oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::exec;
use crate::model::{ModelParams, ShiftedParams};
use crate::numeric::quad;
use crate::{Error, Result};

/// Access to the SDE coefficients shared by [`ModelParams`] and
/// [`ShiftedParams`].
pub trait SdeParams {
    fn epsilon(&self) -> f64;
    fn alpha(&self) -> f64;
    fn c(&self) -> f64;
    fn sigma(&self) -> f64;
}

impl SdeParams for ModelParams {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn c(&self) -> f64 {
        self.c
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl SdeParams for ShiftedParams {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn c(&self) -> f64 {
        self.c
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// A discretized sample path on a uniform grid starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    /// RNG provenance of the noise that generated this path.
    pub seed: u64,
}

/// Brownian increments on a uniform grid, each distributed N(0, dt).
///
/// Sharing one grid between the exact and Euler schemes lets them be
/// compared pathwise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    pub increments: Vec<f64>,
    pub dt: f64,
    pub seed: u64,
}

impl NoiseGrid {
    /// Draws `n_steps` increments from the stream `(seed, path_index)`.
    ///
    /// Streams are independent per path index, so parallel and serial runs
    /// produce identical paths.
    pub fn generate(dt: f64, n_steps: usize, seed: u64, path_index: u64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
        }
        let mut rng = path_rng(seed, path_index);
        let sqrt_dt = dt.sqrt();
        let increments = (0..n_steps)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * sqrt_dt
            })
            .collect();
        Ok(NoiseGrid {
            increments,
            dt,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Cumulative Brownian path W on the grid (length n_steps + 1, W_0 = 0).
    pub fn brownian_path(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        w.push(0.0);
        for &dw in &self.increments {
            acc += dw;
            w.push(acc);
        }
        w
    }
}

/// RNG for path `path_index` under master seed `seed`. ChaCha streams act
/// as a splittable counter: per-path draws never overlap.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Drift of the SDE: `eps (e^{-2 alpha x} - c)`.
pub fn drift<P: SdeParams>(x: f64, p: &P) -> f64 {
    p.epsilon() * ((-2.0 * p.alpha() * x).exp() - p.c())
}

fn check_grid(noise: &NoiseGrid, horizon: f64, n_steps: usize) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be positive".into()));
    }
    if noise.len() != n_steps {
        return Err(Error::InvalidInput(format!(
            "noise grid has {} increments, expected {n_steps}",
            noise.len()
        )));
    }
    let dt = horizon / n_steps as f64;
    if (noise.dt - dt).abs() > 1e-12 * dt.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "noise dt = {} inconsistent with horizon/n_steps = {dt}",
            noise.dt
        )));
    }
    Ok(dt)
}

/// Pathwise-exact solution on the noise grid:
///
/// ```text
/// X_t = x + W_t - c eps t
///       + (1/2a) ln(1 + 2 eps a e^{-2a x} \int_0^t e^{-2a (W_s - c eps s)} ds)
/// ```
///
/// The time integral is evaluated by the trapezoidal rule on the same grid.
/// Requires the standard form `sigma = 1`; callers handle general `sigma`
/// through [`crate::model::scale_to_standard`]. `epsilon = 0` degenerates to
/// `x + W_t` exactly (use [`ModelParams::brownian_limit`]).
pub fn exact_path(
    p: &ModelParams,
    horizon: f64,
    n_steps: usize,
    noise: &NoiseGrid,
) -> Result<Trajectory> {
    p.validate_relaxed()?;
    if (p.sigma - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(
            "exact_path requires the standard form sigma = 1".into(),
        ));
    }
    let dt = check_grid(noise, horizon, n_steps)?;
    let (eps, alpha, c, x0) = (p.epsilon, p.alpha, p.c, p.x0);

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(x0);

    let mut w = 0.0;
    let mut integral = 0.0;
    // integrand of the exponential functional at the previous grid point
    let mut g_prev = 1.0; // e^{-2a(W_0 - c eps 0)} = 1
    let scale = 2.0 * eps * alpha * (-2.0 * alpha * x0).exp();
    for k in 1..=n_steps {
        let t = k as f64 * dt;
        w += noise.increments[k - 1];
        let g = (-2.0 * alpha * (w - c * eps * t)).exp();
        integral += 0.5 * dt * (g_prev + g);
        g_prev = g;
        let x = x0 + w - c * eps * t + (scale * integral).ln_1p() / (2.0 * alpha);
        times.push(t);
        states.push(x);
    }
    Ok(Trajectory {
        times,
        states,
        seed: noise.seed,
    })
}

/// Euler-Maruyama discretization; accepts general `sigma` and shifted
/// parameter sets.
pub fn euler_path<P: SdeParams>(
    p: &P,
    x0: f64,
    horizon: f64,
    n_steps: usize,
    noise: &NoiseGrid,
) -> Result<Trajectory> {
    let dt = check_grid(noise, horizon, n_steps)?;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(x0);
    let mut x = x0;
    for k in 1..=n_steps {
        x += drift(x, p) * dt + p.sigma() * noise.increments[k - 1];
        times.push(k as f64 * dt);
        states.push(x);
    }
    Ok(Trajectory {
        times,
        states,
        seed: noise.seed,
    })
}

/// Elementwise map `Y_t = e^{2 alpha X_t}` (the Shiryaev-process view).
pub fn transform_y(traj: &Trajectory, p: &ModelParams) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: traj
            .states
            .iter()
            .map(|&x| (2.0 * p.alpha * x).exp())
            .collect(),
        seed: traj.seed,
    }
}

/// Elementwise map `Z_t = e^{-2 alpha X_t}`; values are strictly positive.
pub fn transform_z(traj: &Trajectory, p: &ModelParams) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: traj
            .states
            .iter()
            .map(|&x| (-2.0 * p.alpha * x).exp())
            .collect(),
        seed: traj.seed,
    }
}

/// Scale function of the Z-process,
/// `s(z) = A^{1 + c eps / a} e^{-A eps / a} \int_A^z xi^{-1 - c eps / a} e^{(eps/a) xi} dxi`.
///
/// Diverges to -inf as z -> 0+ and +inf as z -> inf, certifying recurrence.
pub fn scale_function_z(z: f64, a_ref: f64, p: &ModelParams) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("scale function needs z > 0, got {z}")));
    }
    if !(a_ref > 0.0) {
        return Err(Error::Domain(format!(
            "scale function reference A must be > 0, got {a_ref}"
        )));
    }
    let q = p.c * p.epsilon / p.alpha;
    let rate = p.epsilon / p.alpha;
    let prefactor = a_ref.powf(1.0 + q) * (-a_ref * rate).exp();
    // Substituting xi = e^u turns the xi^{-1-q} endpoint singularity into a
    // smooth exponential, which the adaptive rule resolves at any z > 0.
    let integrand = |u: f64| (-q * u + rate * u.exp()).exp();
    let r = quad::integrate(integrand, a_ref.ln(), z.ln(), 1e-12, 1e-10);
    Ok(prefactor * r.value)
}

/// Downward first-passage samples from a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct FptSamples {
    /// Hit time per path index; `None` marks a path censored at the horizon.
    pub hit_times: Vec<Option<f64>>,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl FptSamples {
    pub fn censored_count(&self) -> usize {
        self.hit_times.iter().filter(|h| h.is_none()).count()
    }

    pub fn hits(&self) -> impl Iterator<Item = f64> + '_ {
        self.hit_times.iter().filter_map(|h| *h)
    }

    /// Empirical P(tau <= t), counting censored paths in the denominator.
    pub fn empirical_cdf(&self, t: f64) -> f64 {
        let n = self.hit_times.len();
        if n == 0 {
            return 0.0;
        }
        self.hits().filter(|&h| h <= t).count() as f64 / n as f64
    }
}

/// Monte Carlo sampler for the downward first passage time from `x` to
/// `a < x` under Euler stepping.
///
/// Hitting is grid-crossing detection: the first grid time with `X <= a`.
/// Paths not hitting by the horizon are reported censored, never dropped.
/// Deterministic given `(seed, n_paths, dt)` regardless of thread count.
pub fn sample_fpt_mc<P: SdeParams + Sync>(
    p: &P,
    x: f64,
    a: f64,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<FptSamples> {
    if a > x {
        return Err(Error::UnsupportedDirection(format!(
            "only the downward passage is supported: boundary a = {a} above start x = {x}"
        )));
    }
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::InvalidInput(
            "dt and horizon must be positive".into(),
        ));
    }
    let n_steps = (horizon / dt).round().max(1.0) as usize;
    let (eps, alpha, c, sigma) = (p.epsilon(), p.alpha(), p.c(), p.sigma());
    let sqrt_dt = dt.sqrt();

    let hit_times = exec::map_paths(n_paths, move |i| {
        if a == x {
            return Some(0.0);
        }
        let mut rng = path_rng(seed, i as u64);
        let mut state = x;
        for k in 1..=n_steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            state += eps * ((-2.0 * alpha * state).exp() - c) * dt + sigma * z * sqrt_dt;
            if state <= a {
                return Some(k as f64 * dt);
            }
        }
        None
    });

    Ok(FptSamples {
        hit_times,
        dt,
        horizon,
        seed,
    })
}

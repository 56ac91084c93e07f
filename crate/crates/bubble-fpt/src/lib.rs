//! Three-parameter exponentially-decayed mean-reversion diffusion for
//! economic-bubble dynamics:
//!
//! ```text
//! dX_t = eps (e^{-2 alpha X_t} - c) dt + sigma dW_t
//! ```
//!
//! The crate covers path simulation (pathwise-exact and Euler-Maruyama),
//! fixed-time and stationary densities through the Hartman-Watson theta
//! function, the exact and first-order-perturbed downward first-passage-time
//! machinery (Kummer-function Laplace transform, closed-form density, tails,
//! running-minimum distribution, error estimator), and the regime-based
//! calibration algorithm that fits the four parameters to a price series.
//!
//! Monte Carlo operations are seeded and bit-reproducible: results do not
//! depend on thread count. The `parallel` feature (on by default) runs
//! per-path work on a rayon pool; disabling it falls back to a sequential
//! loop with identical output.

pub mod calibrate;
pub mod density;
pub mod error;
pub mod exec;
pub mod fpt;
pub mod model;
pub mod numeric;
pub mod sde;

pub use error::Error;
pub use model::{LogSeries, ModelParams, PriceSeries, RegimeSegmentation, ShiftedParams};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

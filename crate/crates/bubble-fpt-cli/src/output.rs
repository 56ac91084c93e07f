//! Output formatting: significant-digit rounding, percent rendering and
//! file-or-stdout writing.

use bubble_fpt::{Error, Result};
use std::path::Path;

/// Rounds to 6 significant digits; the JSON contract for reported numbers.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(5 - magnitude);
    (x * factor).round() / factor
}

/// Probability as a percentage with 2 decimals, e.g. `100.00%`.
pub fn percent(p: f64) -> String {
    format!("{:.2}%", 100.0 * p)
}

pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

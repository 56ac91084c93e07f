//! Shared numerical machinery: adaptive quadrature, stable error-function
//! variants and a golden-section minimizer.

pub mod quad;
pub mod special;

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns the abscissa of the minimum to absolute tolerance `tol`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_min() {
        let x = golden_min(|x| (x - 1.25) * (x - 1.25), -5.0, 5.0, 1e-8);
        assert!((x - 1.25).abs() < 1e-6);
    }
}

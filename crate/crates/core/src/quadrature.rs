//! Quadrature rules for integrals with algebraic endpoint singularities.

use std::f64::consts::FRAC_PI_2;

use crate::config::QuadConfig;
use crate::{GmcError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tanh-sinh (double exponential) quadrature on [a, b].
///
/// The integrand receives `(x, x - a, b - x)`; the two distances are computed
/// without cancellation so integrands singular at an endpoint can use them.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(a < b) {
        return Err(GmcError::InvalidArgument(format!("empty interval [{a}, {b}]")));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut evals = 0usize;
    // Sum over nodes t = j h for j in `range` with step `stride`.
    let mut term = |t: f64| -> f64 {
        let z = FRAC_PI_2 * t.sinh();
        let ep = (2.0 * z).exp();
        let dl = (b - a) / (1.0 + 1.0 / ep);
        let dr = (b - a) / (1.0 + ep);
        if dl <= 0.0 || dr <= 0.0 || !dl.is_finite() || !dr.is_finite() {
            return 0.0;
        }
        let cz = z.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (cz * cz);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let x = if t < 0.0 { a + dl } else { b - dr };
        let x = if t == 0.0 { mid } else { x };
        evals += 1;
        w * f(x, dl, dr)
    };
    let h0 = cfg.h0;
    let t_max = 6.5;
    let n0 = (t_max / h0).ceil() as i64;
    let mut sum = term(0.0);
    for j in 1..=n0 {
        let t = j as f64 * h0;
        sum += term(t) + term(-t);
    }
    let mut estimate = sum * h0;
    let mut h = h0;
    let mut error = f64::INFINITY;
    for _ in 0..cfg.max_levels {
        h *= 0.5;
        let n = (t_max / h).ceil() as i64;
        let mut add = 0.0;
        let mut j = 1;
        while j <= n {
            let t = j as f64 * h;
            add += term(t) + term(-t);
            j += 2;
        }
        sum += add;
        let next = sum * h;
        if !next.is_finite() {
            return Err(GmcError::NoConvergence("non-finite quadrature sum".into()));
        }
        error = (next - estimate).abs();
        estimate = next;
        if error <= cfg.tol * estimate.abs().max(1.0) {
            return Ok(QuadResult {
                value: estimate,
                error,
                evaluations: evals,
            });
        }
    }
    Err(GmcError::NoConvergence(format!(
        "tanh-sinh did not converge: last change {error:e}"
    )))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule with `panels` equal panels.
pub fn composite_gauss<F>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let (x, w) = gauss_legendre(order);
    let hp = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * hp;
        let c = lo + 0.5 * hp;
        for (xi, wi) in x.iter().zip(&w) {
            sum += wi * f(c + 0.5 * hp * xi);
        }
    }
    0.5 * hp * sum
}

/// Composite Gauss rule after the substitutions x = a + t^p on the left half
/// and x = b - t^p on the right half, which removes endpoint singularities of
/// the form (x - a)^{1/p - 1}. The integrand receives `(x, x - a, b - x)`.
pub fn substituted_gauss<F>(f: F, a: f64, b: f64, p: u32, panels: usize) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    let pf = p as f64;
    let half = 0.5 * (b - a);
    let tm = half.powf(1.0 / pf);
    let left = composite_gauss(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let dl = t.powi(p as i32);
            pf * t.powi(p as i32 - 1) * f(a + dl, dl, (b - a) - dl)
        },
        0.0,
        tm,
        panels,
        20,
    );
    let right = composite_gauss(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let dr = t.powi(p as i32);
            pf * t.powi(p as i32 - 1) * f(b - dr, (b - a) - dr, dr)
        },
        0.0,
        tm,
        panels,
        20,
    );
    left + right
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        let m12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(m12, 2.0 / 13.0, epsilon = 1e-14);
    }

    #[test]
    fn tanh_sinh_endpoint_singularities() {
        let cfg = QuadConfig::default();
        // int_0^1 x^{-1/2} = 2
        let r = tanh_sinh(|_, dl, _| dl.powf(-0.5), 0.0, 1.0, &cfg).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-12);
        // int_{-1}^{1} (1 - x^2)^{-1/2} = pi
        let r = tanh_sinh(|_, dl, dr| (dl * dr).powf(-0.5), -1.0, 1.0, &cfg).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::PI, epsilon = 1e-12);
        // beta(3/4, 3/4) = Gamma(3/4)^2 / Gamma(3/2)
        let r = tanh_sinh(|_, dl, dr| (dl * dr).powf(-0.25), 0.0, 1.0, &cfg).unwrap();
        let g34 = 1.225_416_702_465_177_6_f64;
        assert_relative_eq!(r.value, g34 * g34 / (0.5 * std::f64::consts::PI.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn substituted_gauss_agrees() {
        let v = substituted_gauss(|_, dl, dr| (dl * dr).powf(-0.5), -1.0, 1.0, 2, 16);
        assert_relative_eq!(v, std::f64::consts::PI, epsilon = 1e-12);
        let v = substituted_gauss(|_, dl, dr| (dl * dr).powf(-0.25), 0.0, 1.0, 4, 16);
        let g34 = 1.225_416_702_465_177_6_f64;
        assert_relative_eq!(v, g34 * g34 / (0.5 * std::f64::consts::PI.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(tanh_sinh(|_, _, _| 1.0, 1.0, 1.0, &QuadConfig::default()).is_err());
    }
}

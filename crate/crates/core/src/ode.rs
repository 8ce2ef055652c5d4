//! Adaptive Dormand-Prince 5(4) integration with Hermite dense output.

use crate::{GmcError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Result of one Runge-Kutta step.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub y: [f64; N],
    /// Derivative at the new point (first-same-as-last stage).
    pub dy: [f64; N],
    /// Scaled error norm; the step is acceptable when <= 1.
    pub err: f64,
}

/// One Dormand-Prince step of size `h` from (t, y) with derivative `dy0`.
pub fn dopri_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    dy0: &[f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
) -> Result<Step<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = *dy0;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys)?;
    }
    let mut y5 = *y;
    let mut err = 0.0f64;
    for i in 0..N {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let sc = atol + rtol * y[i].abs().max(y5[i].abs());
        err = err.max((h * (d5 - d4)).abs() / sc);
    }
    if !y5.iter().all(|v| v.is_finite()) {
        return Err(GmcError::NoConvergence("non-finite Runge-Kutta state".into()));
    }
    Ok(Step { y: y5, dy: k[6], err })
}

/// Step-size update factor from an error norm.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// Dense solution: accepted nodes with derivatives, interpolated by cubic
/// Hermite polynomials.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> [f64; N] {
        *self.y.last().expect("solution has at least one node")
    }

    /// Hermite interpolation at `t` (clamped to the covered interval).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if n == 1 {
            return self.y[0];
        }
        let increasing = self.t[n - 1] >= self.t[0];
        let key = |x: f64| if increasing { x } else { -x };
        let tk = key(t);
        let idx = match self
            .t
            .binary_search_by(|p| key(*p).partial_cmp(&tk).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => return self.y[i],
            Err(i) => i.clamp(1, n - 1),
        };
        let (t0, t1) = (self.t[idx - 1], self.t[idx]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * self.y[idx - 1][i]
                + h10 * h * self.dy[idx - 1][i]
                + h01 * self.y[idx][i]
                + h11 * h * self.dy[idx][i];
        }
        out
    }
}

/// Integrates y' = f(t, y) from t0 to t1 (either direction).
pub fn integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut dy = f(t, &y)?;
    let mut sol = Solution {
        t: vec![t],
        y: vec![y],
        dy: vec![dy],
    };
    let mut h = opts.h_init.min(opts.h_max).min((t1 - t0).abs());
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(GmcError::NoConvergence("too many integration steps".into()));
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        match dopri_step(&mut f, t, &y, &dy, dir * hs, opts.rtol, opts.atol) {
            Ok(step) if step.err <= 1.0 => {
                t = if last { t1 } else { t + dir * hs };
                y = step.y;
                dy = step.dy;
                sol.t.push(t);
                sol.y.push(y);
                sol.dy.push(dy);
                h = (hs * step_factor(step.err)).min(opts.h_max);
            }
            Ok(step) => h = hs * step_factor(step.err),
            Err(_) => h = hs * 0.25,
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(GmcError::NoConvergence(format!("step size underflow at t = {t}")));
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_oscillator() {
        let sol = integrate(
            |_, y: &[f64; 2]| Ok([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            10.0,
            &OdeOptions::default(),
        )
        .unwrap();
        let end = sol.last();
        assert_relative_eq!(end[0], 10f64.cos(), epsilon = 1e-9);
        let mid = sol.eval(3.3);
        assert_relative_eq!(mid[0], 3.3f64.cos(), epsilon = 1e-6);
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(|_, y: &[f64; 1]| Ok([y[0]]), 1.0, [1.0], 0.0, &OdeOptions::default())
            .unwrap();
        assert_relative_eq!(sol.last()[0], (-1.0f64).exp(), epsilon = 1e-10);
        assert_relative_eq!(sol.eval(0.5)[0], (-0.5f64).exp(), epsilon = 1e-7);
    }
}

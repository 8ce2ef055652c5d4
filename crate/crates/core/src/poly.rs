//! Truncated bivariate power series.
//!
//! `Poly2` stores the coefficients c_ij of x^i y^j for i + j <= degree and
//! truncates every product at that degree. It doubles as an exact polynomial
//! (Monge graphs) and as a Taylor jet of a smooth function around a point.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly2 {
    degree: usize,
    coeffs: Vec<f64>,
}

fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

impl Poly2 {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; (degree + 1) * (degree + 2) / 2],
        }
    }

    pub fn constant(degree: usize, c: f64) -> Self {
        let mut p = Self::zero(degree);
        p.coeffs[0] = c;
        p
    }

    /// The series `x0 + x`.
    pub fn var_x(degree: usize, x0: f64) -> Self {
        let mut p = Self::constant(degree, x0);
        if degree >= 1 {
            p.set(1, 0, 1.0);
        }
        p
    }

    /// The series `y0 + y`.
    pub fn var_y(degree: usize, y0: f64) -> Self {
        let mut p = Self::constant(degree, y0);
        if degree >= 1 {
            p.set(0, 1, 1.0);
        }
        p
    }

    /// Builds a polynomial from `(i, j, c)` terms; terms above `degree` are dropped.
    pub fn from_terms(degree: usize, terms: &[(usize, usize, f64)]) -> Self {
        let mut p = Self::zero(degree);
        for &(i, j, c) in terms {
            if i + j <= degree {
                p.coeffs[index(i, j)] += c;
            }
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j <= self.degree {
            self.coeffs[index(i, j)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, c: f64) {
        assert!(i + j <= self.degree, "term above truncation degree");
        self.coeffs[index(i, j)] = c;
    }

    /// Nonzero terms as `(i, j, c)`, ordered by total degree.
    pub fn terms(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for d in 0..=self.degree {
            for j in 0..=d {
                let c = self.coeffs[index(d - j, j)];
                if c != 0.0 {
                    out.push((d - j, j, c));
                }
            }
        }
        out
    }

    /// Re-truncates (or zero-pads) to another degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut p = Self::zero(degree);
        for d in 0..=degree.min(self.degree) {
            for j in 0..=d {
                p.coeffs[index(d - j, j)] = self.coeffs[index(d - j, j)];
            }
        }
        p
    }

    /// Homogeneous part of total degree `d`.
    pub fn homogeneous(&self, d: usize) -> Self {
        let mut p = Self::zero(self.degree);
        if d <= self.degree {
            for j in 0..=d {
                p.coeffs[index(d - j, j)] = self.coeffs[index(d - j, j)];
            }
        }
        p
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        // Horner in x over each power of y.
        let mut acc = 0.0;
        for j in (0..=self.degree).rev() {
            let mut inner = 0.0;
            for i in (0..=self.degree - j).rev() {
                inner = inner * x + self.coeffs[index(i, j)];
            }
            acc = acc * y + inner;
        }
        acc
    }

    /// Partial derivative in x; the result keeps the same truncation degree.
    pub fn dx(&self) -> Self {
        let mut p = Self::zero(self.degree);
        for d in 1..=self.degree {
            for j in 0..d {
                let i = d - j;
                p.coeffs[index(i - 1, j)] = i as f64 * self.coeffs[index(i, j)];
            }
        }
        p
    }

    pub fn dy(&self) -> Self {
        let mut p = Self::zero(self.degree);
        for d in 1..=self.degree {
            for j in 1..=d {
                let i = d - j;
                p.coeffs[index(i, j - 1)] = j as f64 * self.coeffs[index(i, j)];
            }
        }
        p
    }

    /// Mixed partial derivative d^(m+n)/dx^m dy^n evaluated at the origin.
    pub fn partial_at_origin(&self, m: usize, n: usize) -> f64 {
        self.coeff(m, n) * factorial(m) * factorial(n)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Gradient at the origin.
    pub fn gradient(&self) -> [f64; 2] {
        [self.coeff(1, 0), self.coeff(0, 1)]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// `self^alpha` as a series; requires a positive constant term unless
    /// `alpha` is a nonnegative integer.
    pub fn powf(&self, alpha: f64) -> Self {
        let c0 = self.value();
        let rest = {
            let mut r = self.clone();
            r.coeffs[0] = 0.0;
            r
        };
        if c0 == 0.0 {
            assert!(
                alpha >= 0.0 && alpha.fract() == 0.0,
                "powf of a series without constant term"
            );
            let mut out = Self::constant(self.degree, 1.0);
            for _ in 0..alpha as usize {
                out = &out * &rest;
            }
            return out;
        }
        // (c0 + g)^a = c0^a * sum_n binom(a, n) (g/c0)^n, g = O(1).
        let ratio = rest.scale(1.0 / c0);
        let mut out = Self::constant(self.degree, 1.0);
        let mut power = Self::constant(self.degree, 1.0);
        let mut binom = 1.0;
        for n in 1..=self.degree {
            power = &power * &ratio;
            binom *= (alpha - (n as f64 - 1.0)) / n as f64;
            out = &out + &power.scale(binom);
        }
        out.scale(c0.powf(alpha))
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    /// sin of a series.
    pub fn sin(&self) -> Self {
        let (s0, c0) = self.value().sin_cos();
        let (sn, cs) = self.sin_cos_of_increment();
        &cs.scale(s0) + &sn.scale(c0)
    }

    pub fn cos(&self) -> Self {
        let (s0, c0) = self.value().sin_cos();
        let (sn, cs) = self.sin_cos_of_increment();
        &cs.scale(c0) - &sn.scale(s0)
    }

    fn sin_cos_of_increment(&self) -> (Self, Self) {
        let mut e = self.clone();
        e.coeffs[0] = 0.0;
        let mut sin = Self::zero(self.degree);
        let mut cos = Self::constant(self.degree, 1.0);
        let mut power = Self::constant(self.degree, 1.0);
        let mut fact = 1.0;
        for n in 1..=self.degree {
            power = &power * &e;
            fact *= n as f64;
            let term = power.scale(1.0 / fact);
            match n % 4 {
                1 => sin = &sin + &term,
                2 => cos = &cos - &term,
                3 => sin = &sin - &term,
                _ => cos = &cos + &term,
            }
        }
        (sin, cos)
    }

    /// Substitutes `x -> px`, `y -> py` and truncates at the degree of `px`.
    /// The substitutions must have zero constant terms unless `self` is an
    /// exact polynomial whose full expansion is wanted.
    pub fn compose(&self, px: &Poly2, py: &Poly2) -> Self {
        let deg = px.degree.max(py.degree);
        let px = px.with_degree(deg);
        let py = py.with_degree(deg);
        let mut xpow = vec![Self::constant(deg, 1.0)];
        let mut ypow = vec![Self::constant(deg, 1.0)];
        for k in 1..=self.degree {
            xpow.push(&xpow[k - 1] * &px);
            ypow.push(&ypow[k - 1] * &py);
        }
        let mut out = Self::zero(deg);
        for (i, j, c) in self.terms() {
            let t = &xpow[i] * &ypow[j];
            out = &out + &t.scale(c);
        }
        out
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl<'a> Add<&'a Poly2> for &'a Poly2 {
    type Output = Poly2;
    fn add(self, rhs: &Poly2) -> Poly2 {
        let degree = self.degree.min(rhs.degree);
        let mut p = Poly2::zero(degree);
        for (k, c) in p.coeffs.iter_mut().enumerate() {
            *c = self.coeffs[k] + rhs.coeffs[k];
        }
        p
    }
}

impl<'a> Sub<&'a Poly2> for &'a Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: &Poly2) -> Poly2 {
        let degree = self.degree.min(rhs.degree);
        let mut p = Poly2::zero(degree);
        for (k, c) in p.coeffs.iter_mut().enumerate() {
            *c = self.coeffs[k] - rhs.coeffs[k];
        }
        p
    }
}

impl<'a> Mul<&'a Poly2> for &'a Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        let degree = self.degree.min(rhs.degree);
        let mut p = Poly2::zero(degree);
        for d1 in 0..=degree {
            for j1 in 0..=d1 {
                let a = self.coeffs[index(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=(degree - d1) {
                    for j2 in 0..=d2 {
                        let b = rhs.coeffs[index(d2 - j2, j2)];
                        p.coeffs[index(d1 - j1 + d2 - j2, j1 + j2)] += a * b;
                    }
                }
            }
        }
        p
    }
}

impl Neg for &Poly2 {
    type Output = Poly2;
    fn neg(self) -> Poly2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivatives() {
        // 1 + 2x + 3xy + y^3
        let p = Poly2::from_terms(3, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 3.0), (0, 3, 1.0)]);
        assert_eq!(p.eval(2.0, -1.0), 1.0 + 4.0 - 6.0 - 1.0);
        assert_eq!(p.dx().eval(2.0, -1.0), 2.0 - 3.0);
        assert_eq!(p.dy().eval(2.0, -1.0), 6.0 + 3.0);
        assert_eq!(p.partial_at_origin(0, 3), 6.0);
    }

    #[test]
    fn powf_matches_closed_form() {
        let x = Poly2::var_x(6, 0.0);
        let one_plus = &Poly2::constant(6, 1.0) + &x;
        let s = one_plus.powf(-0.5);
        // (1+x)^(-1/2) coefficients
        let expect = [1.0, -0.5, 0.375, -0.3125, 0.2734375];
        for (k, e) in expect.iter().enumerate() {
            assert!((s.coeff(k, 0) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn sin_cos_identity() {
        let t = &Poly2::var_x(5, 0.7) + &Poly2::var_y(5, 0.0).scale(0.3);
        let s = t.sin();
        let c = t.cos();
        let one = &(&s * &s) + &(&c * &c);
        assert!((one.value() - 1.0).abs() < 1e-15);
        for (i, j, v) in one.terms() {
            if i + j > 0 {
                assert!(v.abs() < 1e-14, "{i} {j} {v}");
            }
        }
    }

    #[test]
    fn compose_shift_is_exact() {
        let p = Poly2::from_terms(4, &[(2, 2, 1.0), (3, 0, -2.0)]);
        let shifted = p.compose(&Poly2::var_x(4, 0.5), &Poly2::var_y(4, -0.25));
        for &(x, y) in &[(0.1, 0.2), (-0.3, 0.05)] {
            assert!((shifted.eval(x, y) - p.eval(0.5 + x, -0.25 + y)).abs() < 1e-14);
        }
    }
}

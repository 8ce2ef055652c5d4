//! Parabolic curve, tangential parabolic points and their local jets.

use serde::{Deserialize, Serialize};

use crate::bde::quartic_coeffs;
use crate::config::ToleranceConfig;
use crate::monge::{tangent_graph, TangentGraph};
use crate::poly::Poly2;
use crate::surface::{monge_forms_series, ChartPoint, FundamentalForms, SurfaceChart};
use crate::{GmcError, Result};

/// h = k/2 y^2 + a/6 x^3 + b/2 x y^2 + d/2 x^2 y + c/6 y^3
///   + A/24 x^4 + B/6 x^3 y + C/4 x^2 y^2 + D/6 x y^3 + E4/24 y^4.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MongeJet4 {
    pub k: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(rename = "A", default)]
    pub big_a: f64,
    #[serde(rename = "B", default)]
    pub big_b: f64,
    #[serde(rename = "C", default)]
    pub big_c: f64,
    #[serde(rename = "D", default)]
    pub big_d: f64,
    #[serde(rename = "E4", default)]
    pub e4: f64,
}

impl MongeJet4 {
    pub fn height(&self, degree: usize) -> Poly2 {
        Poly2::from_terms(
            degree.max(4),
            &[
                (0, 2, self.k / 2.0),
                (3, 0, self.a / 6.0),
                (1, 2, self.b / 2.0),
                (2, 1, self.d / 2.0),
                (0, 3, self.c / 6.0),
                (4, 0, self.big_a / 24.0),
                (3, 1, self.big_b / 6.0),
                (2, 2, self.big_c / 4.0),
                (1, 3, self.big_d / 6.0),
                (0, 4, self.e4 / 24.0),
            ],
        )
    }

    fn scale(&self) -> f64 {
        [self.a, self.b, self.c, self.d]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tangency {
    Transversal,
    Tangential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParabolicClass {
    Cuspidal,
    FoldedSaddle,
    FoldedNode,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPointInfo {
    pub regularity: bool,
    pub tangency: Tangency,
    pub sigma: f64,
    pub class: ParabolicClass,
    pub center_coefficient: Option<f64>,
}

/// Quadratic Taylor polynomial of K at the origin for the jet.
pub fn gaussian_expansion(j: &MongeJet4) -> Poly2 {
    let (k, a, b, c, d) = (j.k, j.a, j.b, j.c, j.d);
    Poly2::from_terms(
        2,
        &[
            (1, 0, k * a),
            (0, 1, k * d),
            (2, 0, 0.5 * (j.big_a * k + 2.0 * a * b - 2.0 * d * d)),
            (1, 1, j.big_b * k + a * c - b * d),
            (0, 2, 0.5 * (j.big_c * k + 2.0 * c * d - 2.0 * b * b)),
        ],
    )
}

pub fn classify_parabolic_point(j: &MongeJet4, tol: &ToleranceConfig) -> Result<ParabolicPointInfo> {
    if !(j.k > 0.0) {
        return Err(GmcError::Orientation(format!("jet curvature k = {} must be positive", j.k)));
    }
    let s = j.scale().max(j.k);
    if j.a.hypot(j.d) <= tol.eps_regular * s {
        return Err(GmcError::IrregularParabolic(format!(
            "a^2 + d^2 vanishes (a = {}, d = {})",
            j.a, j.d
        )));
    }
    let q = j.big_a * j.k - 3.0 * j.d * j.d;
    let sigma = j.d * j.k * q;
    let transversal = j.a.abs() > tol.eps_boundary * s;
    if transversal {
        return Ok(ParabolicPointInfo {
            regularity: true,
            tangency: Tangency::Transversal,
            sigma,
            class: ParabolicClass::Cuspidal,
            center_coefficient: None,
        });
    }
    let center = -4.0 * q.powi(3) / (j.k * j.d.powi(3));
    // The saddle/node verdict is invariant under the half turn (x, y) -> (-x, -y),
    // which flips the sign of d; it is decided by sigma with d taken positive.
    let decisive = sigma * j.d.signum();
    let class = if decisive.abs() <= tol.eps_boundary * s.powi(4) {
        ParabolicClass::Degenerate
    } else if decisive > 0.0 {
        ParabolicClass::FoldedSaddle
    } else {
        ParabolicClass::FoldedNode
    };
    Ok(ParabolicPointInfo {
        regularity: true,
        tangency: Tangency::Tangential,
        sigma,
        class,
        center_coefficient: Some(center),
    })
}

fn quartic_series(forms: &[Poly2; 6]) -> [Poly2; 5] {
    let [ee, ff, gg, e, f, g] = forms;
    let w = &(ee * gg) - &(ff * ff);
    let dd = &(e * g) - &(f * f);
    [
        &(&(e * e) * &w) - &(&(ee * ee) * &dd),
        (&(&(e * f) * &w) - &(&(ee * ff) * &dd)).scale(4.0),
        (&(&(f * f) * &(ee * gg)) - &(&(e * g) * &(ff * ff))).scale(6.0),
        (&(&(f * g) * &w) - &(&(ff * gg) * &dd)).scale(4.0),
        &(&(g * g) * &w) - &(&(gg * gg) * &dd),
    ]
}

/// Exact Taylor series (to `degree`) of the quartic coefficients
/// A40, A31, A22, A13, A04 of the Monge graph of `h` at the origin.
pub fn exact_quartic_series(h: &Poly2, degree: usize) -> [Poly2; 5] {
    quartic_series(&monge_forms_series(h, degree))
}

/// Published cubic Taylor tables of the forms (E, F, G, e, f, g) for the jet,
/// reading the garbled "2kbo" term of G as 2kb.
pub fn printed_forms_expansion(j: &MongeJet4) -> [Poly2; 6] {
    let (k, a, b, c, d) = (j.k, j.a, j.b, j.c, j.d);
    let (ca, cb, cc, cd, ce) = (j.big_a, j.big_b, j.big_c, j.big_d, j.e4);
    let k2 = k * k;
    [
        Poly2::from_terms(3, &[(0, 0, 1.0)]),
        Poly2::from_terms(3, &[(1, 2, d * k), (0, 3, b * k / 2.0)]),
        Poly2::from_terms(
            3,
            &[(0, 0, 1.0), (0, 2, k2), (1, 2, 2.0 * k * b), (0, 3, k * c)],
        ),
        Poly2::from_terms(
            3,
            &[
                (1, 0, a),
                (0, 1, d),
                (2, 0, ca / 2.0),
                (1, 1, cb),
                (0, 2, cc / 2.0),
                (0, 3, -0.5 * d * k2),
            ],
        ),
        Poly2::from_terms(
            3,
            &[
                (1, 0, d),
                (0, 1, b),
                (2, 0, cb / 2.0),
                (1, 1, cc),
                (0, 2, cd / 2.0),
                (1, 2, -0.5 * d * k2),
                (0, 3, -0.5 * b * k2),
            ],
        ),
        Poly2::from_terms(
            3,
            &[
                (0, 0, k),
                (1, 0, b),
                (0, 1, c),
                (2, 0, cc / 2.0),
                (1, 1, cd),
                (0, 2, 0.5 * (ce - k * k2)),
                (2, 1, -0.5 * k2 * d),
                (1, 2, -1.5 * b * k2 + d * k2),
                (0, 3, (b / 2.0 - c) * k2),
            ],
        ),
    ]
}

/// Published cubic Taylor tables of A40, A31, A22, A13, A04 for the jet.
pub fn quartic_expansion(j: &MongeJet4) -> [Poly2; 5] {
    let (k, a, b, c, d) = (j.k, j.a, j.b, j.c, j.d);
    let (ca, cb, cc, cd, ce) = (j.big_a, j.big_b, j.big_c, j.big_d, j.e4);
    let k3 = k * k * k;
    let a40 = Poly2::from_terms(
        3,
        &[
            (1, 0, -k * a),
            (0, 1, -k * d),
            (2, 0, 0.5 * (2.0 * a * a + 2.0 * d * d - 2.0 * a * b - ca * k)),
            (1, 1, 2.0 * a * d - cb * k + b * d - a * c),
            (0, 2, 0.5 * (2.0 * b * b + 2.0 * d * d - 2.0 * c * d - cc * k)),
            (3, 0, (6.0 * d * cb - 3.0 * ca * b) / 6.0),
            (2, 1, 0.5 * (2.0 * d * ca + 3.0 * d * cc - ca * c)),
            (1, 2, 0.5 * (4.0 * d * cb + 3.0 * cc * b - 2.0 * cb * c)),
            (
                0,
                3,
                (12.0 * d * k3 + 6.0 * d * cc + 6.0 * b * cd - 3.0 * c * cc - 3.0 * d * ce) / 6.0,
            ),
        ],
    );
    let a31 = Poly2::from_terms(
        3,
        &[
            (2, 0, 4.0 * a * d),
            (1, 1, 4.0 * (a * b + d * d)),
            (0, 2, 4.0 * b * d),
            (3, 0, 2.0 * ca * d),
            (2, 1, 6.0 * d * cb + 2.0 * ca * b),
            (1, 2, 4.0 * b * cb + 6.0 * d * cc),
            (0, 3, 2.0 * (d * cd + b * cc)),
        ],
    );
    let a22 = Poly2::from_terms(
        3,
        &[
            (2, 0, 6.0 * d * d),
            (1, 1, 12.0 * b * d),
            (0, 2, 6.0 * b * b),
            (3, 0, 3.0 * ca * cd + 6.0 * d * cb),
            (2, 1, 6.0 * (cb * cd + b * cb + 4.0 * d * cc)),
            (1, 2, 4.0 * d * cd + 3.0 * cc * cd + 12.0 * b * cc),
            (0, 3, 6.0 * b * cd),
        ],
    );
    let a13 = Poly2::from_terms(
        3,
        &[
            (1, 0, 4.0 * k * d),
            (0, 1, 4.0 * k * b),
            (2, 0, 2.0 * cb * k + 4.0 * b * d),
            (1, 1, 4.0 * (cc * k + c * d + b * b)),
            (0, 2, 2.0 * k * cd + 4.0 * b * c),
            (3, 0, 6.0 * cb * cd + 2.0 * b * cb + 2.0 * d * cc),
            (2, 1, 12.0 * cc * cd + 2.0 * cb * c + 6.0 * cc * b),
            (1, 2, 6.0 * cd * cd + 4.0 * c * cc + 2.0 * d * ce + 2.0 * b * cd - 4.0 * d * k3),
            (0, 3, 2.0 * b * ce + 2.0 * c * cd - 4.0 * b * k3),
        ],
    );
    let a04 = Poly2::from_terms(
        3,
        &[
            (0, 0, k * k),
            (1, 0, k * (2.0 * b - a)),
            (0, 1, k * (2.0 * c - d)),
            (
                2,
                0,
                0.5 * (-2.0 * a * b + 2.0 * b * b + (2.0 * cc - ca) * k + 2.0 * d * d),
            ),
            (1, 1, (2.0 * cd - cb) * k + c * (2.0 * b - a) + b * d),
            (
                0,
                2,
                c * c + 0.5 * (2.0 * ce - cc) * k - k3 * k - c * d + b * b,
            ),
            (3, 0, (18.0 * cc * cd + 6.0 * d * cb - 3.0 * ca * b + 6.0 * cc * b) / 6.0),
            (2, 1, 0.5 * (3.0 * d * cc - ca * c + 2.0 * c * cc)),
            (
                1,
                2,
                0.5 * (2.0 * b * ce + 6.0 * cd * ce - 6.0 * cd * k3 - 2.0 * b * k3 - 2.0 * cb * c
                    + 3.0 * cc * b),
            ),
            (
                0,
                3,
                (6.0 * c * ce - 6.0 * c * k3 - 3.0 * c * cc - 3.0 * d * ce + 6.0 * b * cd) / 6.0,
            ),
        ],
    );
    [a40, a31, a22, a13, a04]
}

/// One coefficient where a published table and the exact series differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub table: String,
    pub monomial: String,
    pub printed: f64,
    pub exact: f64,
    pub note: Option<String>,
}

fn monomial(i: usize, j: usize) -> String {
    match (i, j) {
        (0, 0) => "1".into(),
        _ => {
            let mut s = String::new();
            if i > 0 {
                s.push('x');
                if i > 1 {
                    s.push_str(&format!("^{i}"));
                }
            }
            if j > 0 {
                s.push('y');
                if j > 1 {
                    s.push_str(&format!("^{j}"));
                }
            }
            s
        }
    }
}

/// Compares the published cubic tables of the forms and of the quartic
/// coefficients with exact series of the jet's Monge graph.
pub fn expansion_discrepancies(j: &MongeJet4) -> Vec<Discrepancy> {
    let h = j.height(6);
    let forms = monge_forms_series(&h, 3);
    let quartic = quartic_series(&forms);
    let printed_forms = printed_forms_expansion(j);
    let printed_quartic = quartic_expansion(j);
    let mut out = Vec::new();
    let names = ["E", "F", "G", "e", "f", "g", "A40", "A31", "A22", "A13", "A04"];
    let exact: Vec<&Poly2> = forms.iter().chain(quartic.iter()).collect();
    let printed: Vec<&Poly2> = printed_forms.iter().chain(printed_quartic.iter()).collect();
    for (n, (ex, pr)) in names.iter().zip(exact.iter().zip(printed.iter())) {
        for deg in 0..=3 {
            for i in (0..=deg).rev() {
                let jj = deg - i;
                let (e, p) = (ex.coeff(i, jj), pr.coeff(i, jj));
                let note = if *n == "G" && (i, jj) == (1, 2) {
                    Some("published term '2kbo xy^2' read as 2kb xy^2".to_string())
                } else {
                    None
                };
                if (e - p).abs() > 1e-12 * e.abs().max(1.0) || note.is_some() {
                    out.push(Discrepancy {
                        table: n.to_string(),
                        monomial: monomial(i, jj),
                        printed: p,
                        exact: e,
                        note,
                    });
                }
            }
        }
    }
    out
}

/// Evaluation of H(x, y, p) = sum A_k p^k and its first partials for the
/// Monge graph of a jet.
pub struct LiftedQuartic {
    h: Poly2,
}

/// (H, H_x, H_y, H_p) at a point of the lift.
#[derive(Debug, Clone, Copy)]
pub struct LiftedValue {
    pub h: f64,
    pub hx: f64,
    pub hy: f64,
    pub hp: f64,
}

impl LiftedQuartic {
    pub fn new(j: &MongeJet4) -> Self {
        Self { h: j.height(4) }
    }

    fn coeff_series(&self, x: f64, y: f64, degree: usize) -> [Poly2; 5] {
        let sx = Poly2::var_x(degree + 2, x);
        let sy = Poly2::var_y(degree + 2, y);
        let shifted = self.h.compose(&sx, &sy);
        exact_quartic_series(&shifted, degree)
    }

    pub fn eval(&self, x: f64, y: f64, p: f64) -> LiftedValue {
        let s = self.coeff_series(x, y, 1);
        let mut out = LiftedValue {
            h: 0.0,
            hx: 0.0,
            hy: 0.0,
            hp: 0.0,
        };
        let mut pk = 1.0;
        for (k, a) in s.iter().enumerate() {
            out.h += a.value() * pk;
            out.hx += a.coeff(1, 0) * pk;
            out.hy += a.coeff(0, 1) * pk;
            if k + 1 < 5 {
                out.hp += (k + 1) as f64 * s[k + 1].value() * pk;
            }
            pk *= p;
        }
        out
    }

    /// Solves H(x, y, p) = 0 for y near 0.
    pub fn solve_y(&self, x: f64, p: f64) -> Result<f64> {
        let mut y = 0.0;
        for _ in 0..60 {
            let v = self.eval(x, y, p);
            if v.hy == 0.0 {
                break;
            }
            let dy = v.h / v.hy;
            y -= dy;
            if dy.abs() <= 1e-17 + 1e-15 * y.abs() {
                return Ok(y);
            }
        }
        Err(GmcError::NoConvergence(format!("implicit solve for y at x={x}, p={p}")))
    }

    /// Reduced field (x', p') = (H_p, -(H_x + p H_y)) on H = 0.
    pub fn reduced_field(&self, x: f64, p: f64) -> Result<[f64; 2]> {
        let y = self.solve_y(x, p)?;
        let v = self.eval(x, y, p);
        Ok([v.hp, -(v.hx + p * v.hy)])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolicField {
    /// Jacobian of (x', p') at the origin.
    pub linearization: [[f64; 2]; 2],
    pub eigenvalues: [f64; 2],
    /// Eigenvector of the zero eigenvalue, normalized to first component 1.
    pub center_direction: [f64; 2],
    /// Fitted x^3 coefficient of x' along the center manifold.
    pub center_coefficient_numeric: f64,
    /// Samples (x, p, x', p') along the center manifold.
    pub samples: Vec<[f64; 4]>,
}

/// Lie-Cartan reduction of the quartic equation at a tangential parabolic
/// point (a = 0), built from exact series of the Monge graph.
pub fn lie_cartan_parabolic_field(j: &MongeJet4, tol: &ToleranceConfig) -> Result<ParabolicField> {
    let s = j.scale().max(j.k);
    if (j.d * j.k).abs() <= tol.eps_regular * s * s {
        return Err(GmcError::IrregularParabolic("d k vanishes; cannot reduce".into()));
    }
    let lq = LiftedQuartic::new(j);
    // Second-order data at the origin.
    let a = lq.coeff_series(0.0, 0.0, 2);
    let (a40, a31, a22) = (&a[0], &a[1], &a[2]);
    let h_y = a40.coeff(0, 1);
    let jac = [
        [a31.coeff(1, 0), 2.0 * a22.value()],
        [-2.0 * a40.coeff(2, 0), -(a31.coeff(1, 0) + h_y)],
    ];
    let tr = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let (l1, l2) = if tr >= 0.0 {
        let l2 = 0.5 * (tr + disc);
        (det / l2, l2)
    } else {
        let l2 = 0.5 * (tr - disc);
        (det / l2, l2)
    };
    // Kernel of J - l1 I with unit x component.
    let m = if jac[1][1] - l1 != 0.0 {
        -jac[1][0] / (jac[1][1] - l1)
    } else {
        0.0
    };

    // Center manifold by graph iteration: p solves p' = phi'(x) x'.
    let n = 41;
    let r = 1e-2;
    let xs: Vec<f64> = (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect();
    let mut ps: Vec<f64> = xs.iter().map(|x| m * x).collect();
    let mut slopes = vec![m; n];
    for _pass in 0..3 {
        for (i, &x) in xs.iter().enumerate() {
            let mut p = ps[i];
            for _ in 0..50 {
                let f = lq.reduced_field(x, p)?;
                let g = f[1] - slopes[i] * f[0];
                let dp = 1e-7 * p.abs().max(1e-4);
                let f2 = lq.reduced_field(x, p + dp)?;
                let g2 = f2[1] - slopes[i] * f2[0];
                let step = g * dp / (g2 - g);
                p -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            ps[i] = p;
        }
        for i in 0..n {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            slopes[i] = (ps[hi] - ps[lo]) / (xs[hi] - xs[lo]);
        }
    }
    let mut samples = Vec::with_capacity(n);
    for (x, p) in xs.iter().zip(&ps) {
        let f = lq.reduced_field(*x, *p)?;
        samples.push([*x, *p, f[0], f[1]]);
    }
    let center = fit_cubic_coefficient(&samples);
    Ok(ParabolicField {
        linearization: jac,
        eigenvalues: [l1, l2],
        center_direction: [1.0, m],
        center_coefficient_numeric: center,
        samples,
    })
}

/// Least-squares fit x' = c3 x^3 + c4 x^4 + c5 x^5; returns c3.
fn fit_cubic_coefficient(samples: &[[f64; 4]]) -> f64 {
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    let r = samples.iter().fold(0.0f64, |m, s| m.max(s[0].abs()));
    for s in samples {
        let t = s[0] / r;
        let row = nalgebra::Vector3::new(t.powi(3), t.powi(4), t.powi(5));
        ata += row * row.transpose();
        atb += row * s[2];
    }
    let sol = ata
        .cholesky()
        .map(|c| c.solve(&atb))
        .unwrap_or_else(nalgebra::Vector3::zeros);
    sol[0] / r.powi(3)
}

/// A traced branch of the parabolic curve in chart coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolicCurve {
    pub points: Vec<ChartPoint>,
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentialPoint {
    pub point: ChartPoint,
    pub jet: MongeJet4,
    pub info: Option<ParabolicPointInfo>,
}

fn k_and_grad(chart: &SurfaceChart, p: ChartPoint, tol: &ToleranceConfig) -> Result<(f64, [f64; 2])> {
    let g = chart.geometry(p, tol)?;
    Ok((g.curvature.k, g.grad_k))
}

fn correct(
    chart: &SurfaceChart,
    mut p: ChartPoint,
    tol: &ToleranceConfig,
) -> Result<(ChartPoint, [f64; 2])> {
    for _ in 0..50 {
        let (k, gk) = k_and_grad(chart, p, tol)?;
        let n2 = gk[0] * gk[0] + gk[1] * gk[1];
        if n2.sqrt() <= tol.eps_regular {
            return Err(GmcError::IrregularParabolic(format!(
                "|grad K| = {} at ({}, {})",
                n2.sqrt(),
                p.u,
                p.v
            )));
        }
        let s = k / n2;
        p = ChartPoint::new(p.u - s * gk[0], p.v - s * gk[1]);
        if (s * s * n2).sqrt() < 1e-15 {
            let (_, gk) = k_and_grad(chart, p, tol)?;
            return Ok((p, gk));
        }
    }
    Err(GmcError::NoConvergence("parabolic corrector".into()))
}

fn inside(w: &[f64; 4], p: ChartPoint) -> bool {
    p.u >= w[0] && p.u <= w[1] && p.v >= w[2] && p.v <= w[3]
}

fn trace_branch(
    chart: &SurfaceChart,
    start: ChartPoint,
    dir: f64,
    window: &[f64; 4],
    tol: &ToleranceConfig,
    h_max: f64,
) -> Result<(Vec<ChartPoint>, bool)> {
    let chord = 1e-6;
    let mut pts = vec![start];
    let (_, g0) = k_and_grad(chart, start, tol)?;
    let mut t = normalize([-g0[1] * dir, g0[0] * dir]);
    let mut p = start;
    let mut h = h_max * 0.1;
    let span = (window[1] - window[0]).hypot(window[3] - window[2]);
    let mut travelled = 0.0;
    for _ in 0..200_000 {
        let pred = ChartPoint::new(p.u + h * t[0], p.v + h * t[1]);
        if !inside(window, pred) {
            return Ok((pts, false));
        }
        let (q, gq) = match correct(chart, pred, tol) {
            Ok(v) => v,
            Err(e @ GmcError::IrregularParabolic(_)) => return Err(e),
            Err(_) => {
                h *= 0.5;
                if h < 1e-12 {
                    return Err(GmcError::NoConvergence("parabolic continuation stalled".into()));
                }
                continue;
            }
        };
        let mut tn = normalize([-gq[1], gq[0]]);
        if tn[0] * t[0] + tn[1] * t[1] < 0.0 {
            tn = [-tn[0], -tn[1]];
        }
        let turn = (tn[0] * t[1] - tn[1] * t[0]).abs().max(1e-300);
        let step_len = (q.u - p.u).hypot(q.v - p.v);
        // Sagitta of a circular arc: chord error ~ h * turn / 8.
        let err = step_len * turn / 8.0;
        if err > 4.0 * chord && h > 1e-9 {
            h *= 0.5;
            continue;
        }
        if !inside(window, q) {
            return Ok((pts, false));
        }
        travelled += step_len;
        pts.push(q);
        p = q;
        t = tn;
        h = (h * (chord / err).sqrt().clamp(0.5, 2.0)).min(h_max);
        // Closed loop back to the start.
        if travelled > 4.0 * h_max && (p.u - start.u).hypot(p.v - start.v) < 1.5 * h {
            pts.push(start);
            return Ok((pts, true));
        }
        if travelled > 50.0 * span {
            return Err(GmcError::NoConvergence("parabolic curve too long".into()));
        }
    }
    Err(GmcError::NoConvergence("parabolic continuation step limit".into()))
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Traces the zero set of K inside `window` (chart rectangle).
pub fn parabolic_curve_trace(
    chart: &SurfaceChart,
    window: [f64; 4],
    tol: &ToleranceConfig,
) -> Result<Vec<ParabolicCurve>> {
    let n = 64;
    let du = (window[1] - window[0]) / n as f64;
    let dv = (window[3] - window[2]) / n as f64;
    let h_max = du.min(dv);
    let kval = |u: f64, v: f64| -> Option<f64> {
        chart
            .geometry(ChartPoint::new(u, v), tol)
            .ok()
            .map(|g| g.curvature.k)
    };
    // Sign-change seeds on grid edges.
    let mut grid = vec![vec![None; n + 1]; n + 1];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = kval(window[0] + i as f64 * du, window[2] + j as f64 * dv);
        }
    }
    let mut seeds = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let here = grid[i][j];
            for (ii, jj) in [(i + 1, j), (i, j + 1)] {
                if ii > n || jj > n {
                    continue;
                }
                if let (Some(k0), Some(k1)) = (here, grid[ii][jj]) {
                    if (k0 > 0.0) != (k1 > 0.0) {
                        let t = k0 / (k0 - k1);
                        let u = window[0] + (i as f64 + t * (ii - i) as f64) * du;
                        let v = window[2] + (j as f64 + t * (jj - j) as f64) * dv;
                        seeds.push(ChartPoint::new(u, v));
                    }
                }
            }
        }
    }
    let mut curves: Vec<ParabolicCurve> = Vec::new();
    for seed in seeds {
        let covered = curves.iter().any(|c| {
            c.points
                .windows(2)
                .any(|w| seg_dist(w[0], w[1], seed) < 1.5 * h_max)
        });
        if covered {
            continue;
        }
        let (start, _) = correct(chart, seed, tol)?;
        let (fwd, closed) = trace_branch(chart, start, 1.0, &window, tol, h_max)?;
        let points = if closed {
            fwd
        } else {
            let (mut back, _) = trace_branch(chart, start, -1.0, &window, tol, h_max)?;
            back.reverse();
            back.pop();
            back.extend(fwd);
            back
        };
        curves.push(ParabolicCurve { points, closed });
    }
    Ok(curves)
}

fn seg_dist(a: ChartPoint, b: ChartPoint, p: ChartPoint) -> f64 {
    let (dx, dy) = (b.u - a.u, b.v - a.v);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (((p.u - a.u) * dx + (p.v - a.v) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.u - a.u - t * dx).hypot(p.v - a.v - t * dy)
}

/// Asymptotic direction of forms with K = 0 (kernel of the second form).
pub fn asymptotic_direction(ff: &FundamentalForms) -> [f64; 2] {
    // Rows (e, f) and (f, g); take the larger one's perpendicular.
    if ff.e.hypot(ff.f) >= ff.f.hypot(ff.g) {
        [-ff.f, ff.e]
    } else {
        [-ff.g, ff.f]
    }
}

/// Re-expands the surface at a parabolic point as a Monge jet of the form
/// used by the classifier (x along the asymptotic direction, k > 0, d >= 0).
pub fn parabolic_jet_at(
    chart: &SurfaceChart,
    p: ChartPoint,
    tol: &ToleranceConfig,
) -> Result<(MongeJet4, TangentGraph)> {
    let g = tangent_graph(chart, p, 4, tol)?;
    let (c20, c11, c02) = (g.h.coeff(2, 0), g.h.coeff(1, 1), g.h.coeff(0, 2));
    // Rotate so that the null direction of the Hessian becomes the x axis.
    let phi = 0.5 * (2.0 * c11).atan2(2.0 * (c20 - c02));
    let mut g = g.rotated(phi);
    if g.h.coeff(2, 0).abs() > g.h.coeff(0, 2).abs() {
        g = g.rotated(std::f64::consts::FRAC_PI_2);
    }
    if g.h.coeff(0, 2) < 0.0 {
        // Flip the normal, keep the frame right-handed by reversing y.
        g = TangentGraph {
            origin: g.origin,
            e1: g.e1,
            e2: -g.e2,
            normal: -g.normal,
            h: g.h.compose(
                &Poly2::var_x(4, 0.0),
                &Poly2::var_y(4, 0.0).scale(-1.0),
            )
            .scale(-1.0),
        };
    }
    if g.h.coeff(2, 1) < 0.0 {
        g = g.rotated(std::f64::consts::PI);
    }
    let h = &g.h;
    let jet = MongeJet4 {
        k: 2.0 * h.coeff(0, 2),
        a: 6.0 * h.coeff(3, 0),
        b: 2.0 * h.coeff(1, 2),
        c: 6.0 * h.coeff(0, 3),
        d: 2.0 * h.coeff(2, 1),
        big_a: 24.0 * h.coeff(4, 0),
        big_b: 6.0 * h.coeff(3, 1),
        big_c: 4.0 * h.coeff(2, 2),
        big_d: 6.0 * h.coeff(1, 3),
        e4: 24.0 * h.coeff(0, 4),
    };
    Ok((jet, g))
}

/// Points of a traced parabolic curve where the asymptotic direction is
/// tangent to the curve, each classified from its local jet.
pub fn tangential_points(
    chart: &SurfaceChart,
    curve: &ParabolicCurve,
    tol: &ToleranceConfig,
) -> Result<Vec<TangentialPoint>> {
    let measure = |p: ChartPoint| -> Result<f64> {
        let geo = chart.geometry(p, tol)?;
        let t = [-geo.grad_k[1], geo.grad_k[0]];
        let a = asymptotic_direction(&geo.forms);
        let n = a[0].hypot(a[1]) * t[0].hypot(t[1]);
        Ok((t[0] * a[1] - t[1] * a[0]) / n)
    };
    let mut out = Vec::new();
    let pts = &curve.points;
    let mut prev = measure(pts[0])?;
    for w in 1..pts.len() {
        let cur = measure(pts[w])?;
        if prev * cur < 0.0 {
            // Bisect along the segment, projecting back onto K = 0.
            let (mut lo, mut hi) = (pts[w - 1], pts[w]);
            let mut mlo = prev;
            for _ in 0..60 {
                let mid = ChartPoint::new(0.5 * (lo.u + hi.u), 0.5 * (lo.v + hi.v));
                let (mid, _) = correct(chart, mid, tol)?;
                let mm = measure(mid)?;
                if (mm < 0.0) == (mlo < 0.0) {
                    lo = mid;
                    mlo = mm;
                } else {
                    hi = mid;
                }
                if (hi.u - lo.u).hypot(hi.v - lo.v) < 1e-13 {
                    break;
                }
            }
            let point = ChartPoint::new(0.5 * (lo.u + hi.u), 0.5 * (lo.v + hi.v));
            let (jet, _) = parabolic_jet_at(chart, point, tol)?;
            let info = classify_parabolic_point(&jet, tol).ok();
            out.push(TangentialPoint { point, jet, info });
        }
        prev = cur;
    }
    Ok(out)
}

/// Numeric quartic coefficients at a point, for cross-checks against tables.
pub fn quartic_at(chart: &SurfaceChart, p: ChartPoint, tol: &ToleranceConfig) -> Result<[f64; 5]> {
    let q = quartic_coeffs(&chart.geometry(p, tol)?.forms);
    Ok([q.a40, q.a31, q.a22, q.a13, q.a04])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn jet(k: f64, a: f64, d: f64, big_a: f64) -> MongeJet4 {
        MongeJet4 {
            k,
            a,
            d,
            big_a,
            ..Default::default()
        }
    }

    #[test]
    fn classification_examples() {
        let s = classify_parabolic_point(&jet(1.0, 0.0, 1.0, 4.0), &tol()).unwrap();
        assert_eq!(s.class, ParabolicClass::FoldedSaddle);
        assert_eq!(s.sigma, 1.0);
        assert_eq!(s.center_coefficient, Some(-4.0));
        let n = classify_parabolic_point(&jet(1.0, 0.0, 1.0, 2.0), &tol()).unwrap();
        assert_eq!(n.class, ParabolicClass::FoldedNode);
        assert_eq!(n.sigma, -1.0);
        for d in [-1.0, 0.0, 2.0] {
            let c = classify_parabolic_point(&jet(1.0, 1.0, d, 0.0), &tol()).unwrap();
            assert_eq!(c.class, ParabolicClass::Cuspidal);
            assert_eq!(c.tangency, Tangency::Transversal);
        }
        assert!(matches!(
            classify_parabolic_point(&jet(1.0, 0.0, 0.0, 1.0), &tol()),
            Err(GmcError::IrregularParabolic(_))
        ));
        let deg = classify_parabolic_point(&jet(1.0, 0.0, 1.0, 3.0), &tol()).unwrap();
        assert_eq!(deg.class, ParabolicClass::Degenerate);
    }

    #[test]
    fn gaussian_table_examples() {
        let g = gaussian_expansion(&jet(1.0, 1.0, 0.0, 0.0));
        assert_eq!((g.coeff(1, 0), g.coeff(2, 0)), (1.0, 0.0));
        let g = gaussian_expansion(&jet(1.0, 0.0, 0.0, 0.0));
        assert!(g.terms().iter().all(|t| t.2 == 0.0));
        let g = gaussian_expansion(&jet(1.0, 0.0, 1.0, 0.0));
        assert_eq!((g.coeff(0, 1), g.coeff(1, 1)), (1.0, 0.0));
    }

    #[test]
    fn quartic_table_examples() {
        let q = quartic_expansion(&jet(1.0, 1.0, 0.0, 0.0));
        assert_eq!(q[0].coeff(1, 0), -1.0);
        assert_eq!(q[4].value(), 1.0);
        assert_eq!((q[4].coeff(1, 0), q[4].coeff(0, 1)), (-1.0, 0.0));
        let q = quartic_expansion(&jet(1.0, 0.0, 0.0, 0.0));
        assert_eq!(q[4].value(), 1.0);
        for p in &q[..4] {
            assert_eq!(p.value(), 0.0);
        }
        let q = quartic_expansion(&jet(1.0, 0.0, 1.0, 0.0));
        assert_eq!(q[3].coeff(1, 0), 4.0);
    }

    #[test]
    fn exact_series_agree_through_first_order() {
        let j = MongeJet4 {
            k: 1.3,
            a: 0.4,
            b: -0.7,
            c: 0.2,
            d: 0.9,
            big_a: 1.1,
            big_b: -0.3,
            big_c: 0.5,
            big_d: 0.8,
            e4: -1.2,
        };
        let exact = exact_quartic_series(&j.height(6), 3);
        let printed = quartic_expansion(&j);
        for (e, p) in exact.iter().zip(&printed) {
            for (i, jj) in [(0, 0), (1, 0), (0, 1)] {
                assert_relative_eq!(e.coeff(i, jj), p.coeff(i, jj), epsilon = 1e-12);
            }
        }
        let gauss = gaussian_expansion(&j);
        let chart = SurfaceChart::monge(j.height(6)).unwrap();
        let geo = chart.geometry(ChartPoint::new(0.0, 0.0), &tol()).unwrap();
        assert!(geo.curvature.k.abs() < 1e-15);
        assert_relative_eq!(geo.grad_k[0], gauss.coeff(1, 0), epsilon = 1e-12);
        assert_relative_eq!(geo.grad_k[1], gauss.coeff(0, 1), epsilon = 1e-12);
    }

    #[test]
    fn discrepancy_report_flags_published_g() {
        let j = MongeJet4 {
            k: 1.0,
            a: 0.5,
            b: 0.3,
            c: -0.2,
            d: 0.7,
            ..Default::default()
        };
        let rep = expansion_discrepancies(&j);
        assert!(rep.iter().any(|d| d.table == "G" && d.monomial == "xy^2" && d.note.is_some()));
        assert!(rep.iter().any(|d| d.table == "F" && d.monomial == "x^2y"));
    }

    #[test]
    fn lie_cartan_linearization_and_center() {
        for (big_a, m_expect) in [(4.0, -2.0), (2.0, 0.0)] {
            let j = jet(1.0, 0.0, 1.0, big_a);
            let f = lie_cartan_parabolic_field(&j, &tol()).unwrap();
            assert!(f.eigenvalues[0].abs() < 1e-8);
            assert!((f.eigenvalues[1] - 1.0).abs() < 1e-8);
            assert!((f.center_direction[1] - m_expect).abs() < 1e-8);
            let info = classify_parabolic_point(&j, &tol()).unwrap();
            let c = info.center_coefficient.unwrap();
            assert!(
                ((f.center_coefficient_numeric - c) / c).abs() < 0.01,
                "{} vs {}",
                f.center_coefficient_numeric,
                c
            );
        }
    }

    #[test]
    fn negative_d_type_follows_center_manifold() {
        // Half turn of the folded-saddle example: d -> -d.
        let j = jet(1.0, 0.0, -1.0, 4.0);
        let f = lie_cartan_parabolic_field(&j, &tol()).unwrap();
        let saddle = f.center_coefficient_numeric * f.eigenvalues[1] < 0.0;
        let info = classify_parabolic_point(&j, &tol()).unwrap();
        assert!(saddle);
        assert_eq!(info.class, ParabolicClass::FoldedSaddle);
        assert!(info.sigma < 0.0);
    }

    #[test]
    fn torus_parabolic_circles() {
        let chart = SurfaceChart::torus(1.0, 3.0).unwrap();
        let curves = parabolic_curve_trace(&chart, [-3.0, 3.0, 0.0, 6.2], &tol()).unwrap();
        assert_eq!(curves.len(), 2);
        for c in &curves {
            let s0 = c.points[0].u;
            assert!((s0.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
            for p in &c.points {
                assert!((p.u - s0).abs() < 1e-8);
            }
            let (lo, hi) = c.points.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.v), b.max(p.v)));
            assert!(lo < 0.1 && hi > 6.1);
        }
    }

    #[test]
    fn ellipsoid_has_no_parabolic_points() {
        let chart = SurfaceChart::ellipsoid(
            3.0,
            2.0,
            1.0,
            crate::surface::EllipsoidCoords::Geographic,
        )
        .unwrap();
        let curves = parabolic_curve_trace(&chart, [-3.1, 3.1, -1.5, 1.5], &tol()).unwrap();
        assert!(curves.is_empty());
    }

    #[test]
    fn jet_curve_normal_to_a_d() {
        let j = jet(1.0, 1.0, 0.0, 0.0);
        let chart = SurfaceChart::monge_on(j.height(4), [-0.1, 0.1, -0.1, 0.1]).unwrap();
        let curves = parabolic_curve_trace(&chart, [-0.1, 0.1, -0.1, 0.1], &tol()).unwrap();
        assert_eq!(curves.len(), 1);
        let near = curves[0]
            .points
            .iter()
            .min_by(|p, q| p.v.abs().partial_cmp(&q.v.abs()).unwrap())
            .unwrap();
        assert!(near.u.abs() < 1e-8);
        let geo = chart.geometry(ChartPoint::new(0.0, 0.0), &tol()).unwrap();
        assert!(geo.grad_k[1].abs() < 1e-12 && geo.grad_k[0] > 0.0);
    }

    #[test]
    fn jet_extraction_roundtrip() {
        let j = MongeJet4 {
            k: 1.0,
            a: 0.0,
            b: 0.3,
            c: -0.2,
            d: 1.0,
            big_a: 4.0,
            big_b: 0.1,
            big_c: 0.2,
            big_d: -0.3,
            e4: 0.4,
        };
        let chart = SurfaceChart::monge(crate::monge::rotate_poly(&j.height(4), 0.7)).unwrap();
        let (got, _) = parabolic_jet_at(&chart, ChartPoint::new(0.0, 0.0), &tol()).unwrap();
        assert_relative_eq!(got.k, 1.0, epsilon = 1e-12);
        assert_relative_eq!(got.d, 1.0, epsilon = 1e-10);
        assert_relative_eq!(got.big_a, 4.0, epsilon = 1e-10);
        assert!(got.a.abs() < 1e-10);
    }
}

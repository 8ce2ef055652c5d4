//! Darbouxian classification of umbilic points from the reduced cubic jet.

use serde::{Deserialize, Serialize};

use crate::bde::QuadraticCoeffs;
use crate::config::ToleranceConfig;
use crate::monge::{cubic_critical_angles, tangent_graph, TangentGraph};
use crate::surface::{ChartPoint, SurfaceChart};
use crate::{GmcError, Result};

/// h = k/2 (x^2 + y^2) + a/6 x^3 + b/2 x y^2 + c/6 y^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MongeJet3 {
    pub k: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MongeJet3 {
    pub fn new(k: f64, a: f64, b: f64, c: f64) -> Self {
        Self { k, a, b, c }
    }

    pub fn scale(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    /// The jet as a polynomial of the given degree (>= 3).
    pub fn height(&self, degree: usize) -> crate::poly::Poly2 {
        crate::poly::Poly2::from_terms(
            degree.max(3),
            &[
                (2, 0, self.k / 2.0),
                (0, 2, self.k / 2.0),
                (3, 0, self.a / 6.0),
                (1, 2, self.b / 2.0),
                (0, 3, self.c / 6.0),
            ],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GmcType {
    G1,
    G2,
    G3,
    #[serde(rename = "degenerate")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrincipalType {
    D1,
    D2,
    D3,
    #[serde(rename = "degenerate")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Saddle,
    Node,
    Nonhyperbolic,
}

/// Equilibrium of the lifted line field on the exceptional fiber. The fiber
/// point is the direction (dx, dy), never an unbounded slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieCartanEquilibrium {
    pub direction: [f64; 2],
    pub eigen1: f64,
    pub eigen2: f64,
    pub kind: EquilibriumKind,
}

impl LieCartanEquilibrium {
    /// Slope dy/dx, infinite for the vertical direction.
    pub fn p(&self) -> f64 {
        self.direction[1] / self.direction[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmbilicClassification {
    pub gmc_type: GmcType,
    pub principal_type: PrincipalType,
    #[serde(rename = "delta_G")]
    pub delta_g: f64,
    #[serde(rename = "delta_P")]
    pub delta_p: f64,
    #[serde(rename = "transversality_Tg")]
    pub transversality_tg: bool,
    #[serde(rename = "transversality_T")]
    pub transversality_t: bool,
    /// Number of saddle equilibria of the lifted GMC field; absent when degenerate.
    pub separatrix_count: Option<u32>,
    pub equilibria: Vec<LieCartanEquilibrium>,
}

pub fn delta_g(j: &MongeJet3) -> f64 {
    let (a, b, c) = (j.a, j.b, j.c);
    4.0 * c * c * (2.0 * a - b).powi(2)
        - (3.0 * c * c + (a - 5.0 * b).powi(2)) * (3.0 * (a - 5.0 * b) * (a - b) + c * c)
}

pub fn delta_p(j: &MongeJet3) -> f64 {
    let (a, b, c) = (j.a, j.b, j.c);
    4.0 * b * (a - 2.0 * b).powi(3) - c * c * (a - 2.0 * b).powi(2)
}

/// Linear parts of Lq, Mq, Nq at (x, y), in the normalization where the
/// mixed coefficient of the equation is 4 b y.
pub fn umbilic_first_jet_bde(j: &MongeJet3, x: f64, y: f64) -> QuadraticCoeffs {
    let l = (j.b - j.a) * x + j.c * y;
    QuadraticCoeffs {
        lq: l,
        mq: 2.0 * j.b * y,
        nq: -l,
    }
}

pub fn classify_gmc_umbilic(j: &MongeJet3, tol: &ToleranceConfig) -> UmbilicClassification {
    let s = j.scale();
    let eps = tol.eps_boundary;
    let dg = delta_g(j);
    let dp = delta_p(j);
    let b_ok = j.b.abs() > eps * s;
    let ab_ok = (j.b - j.a).abs() > eps * s;
    let t = s > 0.0 && b_ok && ab_ok;
    let tg = t && j.k.abs() > tol.eps_k;
    let s4 = s.powi(4);
    // a/b - 1 has the sign of (a - b) b.
    let ratio_above = (j.a - j.b) * j.b > 0.0;

    let gmc_type = if !tg {
        GmcType::Degenerate
    } else if !ratio_above {
        GmcType::G3
    } else if dg.abs() <= eps * s4 {
        GmcType::Degenerate
    } else if dg > 0.0 {
        GmcType::G1
    } else {
        GmcType::G2
    };
    let principal_type = if !t {
        PrincipalType::Degenerate
    } else if !ratio_above {
        PrincipalType::D3
    } else if dp.abs() <= eps * s4 {
        PrincipalType::Degenerate
    } else if dp > 0.0 {
        PrincipalType::D1
    } else {
        PrincipalType::D2
    };

    let (equilibria, separatrix_count) = match lie_cartan_equilibria(j, tol) {
        Ok(eq) if gmc_type != GmcType::Degenerate => {
            let n = eq.iter().filter(|e| e.kind == EquilibriumKind::Saddle).count() as u32;
            (eq, Some(n))
        }
        Ok(eq) => (eq, None),
        Err(_) => (Vec::new(), None),
    };
    UmbilicClassification {
        gmc_type,
        principal_type,
        delta_g: dg,
        delta_p: dp,
        transversality_tg: tg,
        transversality_t: t,
        separatrix_count,
        equilibria,
    }
}

/// Real roots of c0 + c1 x + c2 x^2 + c3 x^3 (leading zeros allowed).
pub fn real_roots_cubic(coeffs: [f64; 4]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let deg = (0..4).rev().find(|&i| coeffs[i].abs() > 1e-14 * scale).unwrap_or(0);
    let eval = |x: f64| ((coeffs[3] * x + coeffs[2]) * x + coeffs[1]) * x + coeffs[0];
    match deg {
        0 => Vec::new(),
        1 => vec![-coeffs[0] / coeffs[1]],
        _ => {
            // Split at critical points and bisect each monotone piece.
            let lead = coeffs[deg];
            let bound = 1.0 + (0..deg).fold(0.0f64, |m, i| m.max((coeffs[i] / lead).abs()));
            let mut breaks = vec![-bound];
            let (q2, q1, q0) = (3.0 * coeffs[3], 2.0 * coeffs[2], coeffs[1]);
            let mut crit = real_roots_quadratic(q2, q1, q0);
            crit.retain(|x| x.abs() < bound);
            crit.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.extend(crit);
            breaks.push(bound);
            let mut roots: Vec<f64> = Vec::new();
            for w in breaks.windows(2) {
                let (mut lo, mut hi) = (w[0], w[1]);
                let (flo, fhi) = (eval(lo), eval(hi));
                if flo == 0.0 {
                    push_unique(&mut roots, lo);
                    continue;
                }
                if flo * fhi > 0.0 {
                    continue;
                }
                let mut fl = flo;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = eval(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm < 0.0) == (fl < 0.0) {
                        lo = mid;
                        fl = fm;
                    } else {
                        hi = mid;
                    }
                }
                push_unique(&mut roots, 0.5 * (lo + hi));
            }
            if eval(bound) == 0.0 {
                push_unique(&mut roots, bound);
            }
            roots
        }
    }
}

fn push_unique(v: &mut Vec<f64>, x: f64) {
    if !v.iter().any(|y| (y - x).abs() <= 1e-12 * x.abs().max(1.0)) {
        v.push(x);
    }
}

fn real_roots_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let d = b * b - 4.0 * a * c;
    if d < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * d.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn classify(eigen1: f64, eigen2: f64, scale: f64, tol: &ToleranceConfig) -> EquilibriumKind {
    let small = tol.eps_boundary * scale;
    if eigen1.abs() <= small || eigen2.abs() <= small {
        EquilibriumKind::Nonhyperbolic
    } else if eigen1 * eigen2 < 0.0 {
        EquilibriumKind::Saddle
    } else {
        EquilibriumKind::Node
    }
}

/// Equilibria of the Lie-Cartan lift of the first-jet equation on the fiber
/// over the umbilic, in both projective charts.
pub fn lie_cartan_equilibria(
    j: &MongeJet3,
    tol: &ToleranceConfig,
) -> Result<Vec<LieCartanEquilibrium>> {
    let s = j.scale();
    if s == 0.0 {
        return Err(GmcError::NonHyperbolic { p: 0.0 });
    }
    // Partial derivatives of the linear coefficient functions.
    let (lx, ly) = (j.b - j.a, j.c);
    let (mx, my) = (0.0, 2.0 * j.b);
    let (nx, ny) = (-lx, -ly);
    let mut out = Vec::new();

    // Chart p = dy/dx: fiber equilibria at roots of F_x + p F_y.
    let phi = [nx, 2.0 * mx + ny, lx + 2.0 * my, ly];
    for p0 in real_roots_cubic(phi) {
        let dphi = phi[1] + 2.0 * phi[2] * p0 + 3.0 * phi[3] * p0 * p0;
        let e1 = 2.0 * (lx * p0 + mx) + 2.0 * p0 * (ly * p0 + my);
        let e2 = -dphi;
        let n = (1.0 + p0 * p0).sqrt();
        let kind = classify(e1, e2, s * (1.0 + p0 * p0), tol);
        out.push(LieCartanEquilibrium {
            direction: [1.0 / n, p0 / n],
            eigen1: e1,
            eigen2: e2,
            kind,
        });
    }
    // Chart q = dx/dy: only q = 0 is new; it is an equilibrium iff L_y = 0.
    if ly.abs() <= tol.eps_boundary * s {
        let dphi = 2.0 * my + lx;
        let e1 = 2.0 * my;
        let e2 = -dphi;
        out.push(LieCartanEquilibrium {
            direction: [0.0, 1.0],
            eigen1: e1,
            eigen2: e2,
            kind: classify(e1, e2, s, tol),
        });
    }
    if let Some(bad) = out.iter().find(|e| e.kind == EquilibriumKind::Nonhyperbolic) {
        return Err(GmcError::NonHyperbolic { p: bad.p() });
    }
    Ok(out)
}

/// Reduced jet together with the rotated tangent frame it refers to.
#[derive(Debug, Clone)]
pub struct ReducedUmbilic {
    pub jet: MongeJet3,
    pub graph: TangentGraph,
}

/// Re-expands the surface at an umbilic over its tangent plane and rotates
/// the axes to remove the x^2 y term.
pub fn reduce_to_monge_jet(
    chart: &SurfaceChart,
    p: ChartPoint,
    tol: &ToleranceConfig,
) -> Result<ReducedUmbilic> {
    let graph = tangent_graph(chart, p, 3, tol)?;
    let h = &graph.h;
    let (c20, c11, c02) = (h.coeff(2, 0), h.coeff(1, 1), h.coeff(0, 2));
    let k = c20 + c02;
    let gap = 2.0 * (c20 - c02).hypot(c11);
    if gap > tol.eps_umbilic * k.abs().max(1.0) {
        return Err(GmcError::NotUmbilic { gap });
    }
    if k <= 0.0 {
        return Err(GmcError::Orientation(format!(
            "umbilic curvature k = {k} is not positive"
        )));
    }
    let roots = cubic_critical_angles(h.coeff(3, 0), h.coeff(2, 1), h.coeff(1, 2), h.coeff(0, 3));
    let phi = *roots
        .first()
        .ok_or_else(|| GmcError::NoConvergence("no rotation removes the x^2 y term".into()))?;
    let graph = graph.rotated(phi);
    let h = &graph.h;
    let jet = MongeJet3 {
        k,
        a: 6.0 * h.coeff(3, 0),
        b: 2.0 * h.coeff(1, 2),
        c: 6.0 * h.coeff(0, 3),
    };
    Ok(ReducedUmbilic { jet, graph })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bde::gmc_quadratic;
    use crate::monge::rotate_poly;
    use crate::poly::Poly2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn classification_examples() {
        let c = classify_gmc_umbilic(&MongeJet3::new(1.0, 2.0, 1.0, 0.0), &tol());
        assert_eq!(c.delta_g, 81.0);
        assert_eq!(c.gmc_type, GmcType::G1);
        assert_eq!(c.separatrix_count, Some(1));

        let c = classify_gmc_umbilic(&MongeJet3::new(1.0, 6.0, 1.0, 0.0), &tol());
        assert_eq!(c.delta_g, -15.0);
        assert_eq!(c.gmc_type, GmcType::G2);
        assert_eq!(c.separatrix_count, Some(2));

        let c = classify_gmc_umbilic(&MongeJet3::new(1.0, 0.0, 1.0, 1.0), &tol());
        assert_eq!(c.gmc_type, GmcType::G3);
        assert!(c.transversality_tg);
        assert_eq!(c.separatrix_count, Some(3));

        for jet in [MongeJet3::new(1.0, 1.0, 0.0, 1.0), MongeJet3::new(1.0, 1.0, 1.0, 0.5)] {
            let c = classify_gmc_umbilic(&jet, &tol());
            assert_eq!(c.gmc_type, GmcType::Degenerate);
            assert!(!c.transversality_tg);
            assert_eq!(c.separatrix_count, None);
        }
    }

    #[test]
    fn first_jet_examples() {
        let q = umbilic_first_jet_bde(&MongeJet3::new(1.0, 2.0, 1.0, 0.0), 1.0, 0.0);
        assert_eq!((q.lq, q.mq, q.nq), (-1.0, 0.0, 1.0));
        let q = umbilic_first_jet_bde(&MongeJet3::new(1.0, 0.0, 1.0, 1.0), 0.0, 1.0);
        assert_eq!((q.lq, q.mq, q.nq), (1.0, 2.0, -1.0));
        let q = umbilic_first_jet_bde(&MongeJet3::new(1.0, 3.0, -2.0, 1.0), 0.0, 0.0);
        assert_eq!((q.lq, q.mq, q.nq), (0.0, 0.0, 0.0));
    }

    #[test]
    fn first_jet_is_twice_the_exact_linear_part() {
        let jet = MongeJet3::new(1.3, 0.7, -0.4, 0.9);
        let chart = SurfaceChart::monge(jet.height(4)).unwrap();
        let eps = 1e-5;
        for (x, y) in [(eps, 0.0), (0.0, eps), (0.6 * eps, -0.8 * eps)] {
            let geo = chart.geometry(ChartPoint::new(x, y), &tol()).unwrap();
            let q = gmc_quadratic(&geo.forms, &geo.curvature).unwrap();
            let lin = umbilic_first_jet_bde(&jet, x, y);
            assert!((2.0 * q.lq - lin.lq).abs() < 1e-8);
            assert!((2.0 * q.mq - lin.mq).abs() < 1e-8);
            assert!((2.0 * q.nq - lin.nq).abs() < 1e-8);
        }
    }

    #[test]
    fn reduce_trivial_and_rotated() {
        let jet = MongeJet3::new(1.0, 2.0, 1.0, 0.0);
        let chart = SurfaceChart::monge(jet.height(4)).unwrap();
        let red = reduce_to_monge_jet(&chart, ChartPoint::new(0.0, 0.0), &tol()).unwrap();
        assert_relative_eq!(red.jet.k, 1.0, epsilon = 1e-14);
        assert_relative_eq!(red.jet.a, 2.0, epsilon = 1e-12);
        assert_relative_eq!(red.jet.b, 1.0, epsilon = 1e-12);
        assert!(red.jet.c.abs() < 1e-12);

        let rotated = rotate_poly(&jet.height(4), std::f64::consts::PI / 6.0);
        let chart = SurfaceChart::monge(rotated).unwrap();
        let red = reduce_to_monge_jet(&chart, ChartPoint::new(0.0, 0.0), &tol()).unwrap();
        // The rotation angle is a triple root of the x^2 y coefficient for
        // this jet, so it is only determined to about eps^(1/3).
        assert_relative_eq!(red.jet.a, 2.0, epsilon = 1e-8);
        assert_relative_eq!(red.jet.b, 1.0, epsilon = 1e-8);
        assert!(red.jet.c.abs() < 1e-4, "c = {}", red.jet.c);
        assert_eq!(classify_gmc_umbilic(&red.jet, &tol()).gmc_type, GmcType::G1);

        let not_umbilic = SurfaceChart::monge(Poly2::from_terms(4, &[(2, 0, 1.0), (0, 2, 0.2)]))
            .unwrap();
        assert!(matches!(
            reduce_to_monge_jet(&not_umbilic, ChartPoint::new(0.0, 0.0), &tol()),
            Err(GmcError::NotUmbilic { .. })
        ));
    }

    #[test]
    fn cubic_roots() {
        let r = real_roots_cubic([-6.0, 11.0, -6.0, 1.0]);
        let mut r = r.clone();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*x, e, epsilon = 1e-12);
        }
        assert!(real_roots_cubic([1.0, 0.0, 3.0, 0.0]).is_empty());
    }

    proptest! {
        #[test]
        fn delta_g_is_homogeneous(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, lam in 0.1f64..5.0) {
            let j = MongeJet3::new(1.0, a, b, c);
            let s = MongeJet3::new(1.0, lam * a, lam * b, lam * c);
            let d0 = delta_g(&j);
            prop_assert!((delta_g(&s) - lam.powi(4) * d0).abs() <= 1e-9 * lam.powi(4) * (1.0 + d0.abs()) * 100.0);
            prop_assert_eq!(classify_gmc_umbilic(&j, &tol()).gmc_type, classify_gmc_umbilic(&s, &tol()).gmc_type);
        }

        #[test]
        fn positive_delta_g_implies_ratio_above_one(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
            let j = MongeJet3::new(1.0, a, b, c);
            if delta_g(&j) > 1e-9 {
                prop_assert!((a - b) * b > 0.0);
            }
        }

        #[test]
        fn separatrix_count_matches_type(a in -4.0f64..4.0, b in -4.0f64..4.0, c in -4.0f64..4.0) {
            let cls = classify_gmc_umbilic(&MongeJet3::new(1.0, a, b, c), &tol());
            let expect = match cls.gmc_type {
                GmcType::G1 => Some(1),
                GmcType::G2 => Some(2),
                GmcType::G3 => Some(3),
                GmcType::Degenerate => None,
            };
            if cls.equilibria.iter().all(|e| e.eigen1.abs() > 1e-6 && e.eigen2.abs() > 1e-6)
                && delta_g(&MongeJet3::new(1.0, a, b, c)).abs() > 1e-6
                && ((a - b) * b).abs() > 1e-6
            {
                prop_assert_eq!(cls.separatrix_count, expect);
            }
        }

        #[test]
        fn rotation_does_not_change_type(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, phi in 0.0f64..std::f64::consts::TAU) {
            let jet = MongeJet3::new(1.0, a, b, c);
            let cls = classify_gmc_umbilic(&jet, &tol());
            prop_assume!(delta_g(&jet).abs() > 1e-3 && ((a - b) * b).abs() > 1e-3);
            let chart = SurfaceChart::monge(rotate_poly(&jet.height(4), phi)).unwrap();
            let red = reduce_to_monge_jet(&chart, ChartPoint::new(0.0, 0.0), &tol()).unwrap();
            prop_assert_eq!(classify_gmc_umbilic(&red.jet, &tol()).gmc_type, cls.gmc_type);
        }
    }
}

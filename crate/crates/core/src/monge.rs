//! Local height-function representation of a surface over its tangent plane.

use crate::config::ToleranceConfig;
use crate::poly::Poly2;
use crate::surface::{ChartPoint, SurfaceChart, Vec3};
use crate::{GmcError, Result};

/// Surface near a point written as z = h(x, y) over an orthonormal tangent
/// frame (e1, e2) with the oriented normal as z axis.
#[derive(Debug, Clone)]
pub struct TangentGraph {
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub normal: Vec3,
    pub h: Poly2,
}

impl TangentGraph {
    /// Rotates the tangent frame by `phi` about the normal.
    pub fn rotated(&self, phi: f64) -> TangentGraph {
        let (c, s) = (phi.cos(), phi.sin());
        TangentGraph {
            origin: self.origin,
            e1: self.e1 * c + self.e2 * s,
            e2: -self.e1 * s + self.e2 * c,
            normal: self.normal,
            h: rotate_poly(&self.h, phi),
        }
    }

    /// Space point of the graph over (x, y).
    pub fn point(&self, x: f64, y: f64) -> Vec3 {
        self.origin + self.e1 * x + self.e2 * y + self.normal * self.h.eval(x, y)
    }
}

/// h(x cos phi - y sin phi, x sin phi + y cos phi).
pub fn rotate_poly(h: &Poly2, phi: f64) -> Poly2 {
    let d = h.degree();
    let (c, s) = (phi.cos(), phi.sin());
    let px = Poly2::from_terms(d, &[(1, 0, c), (0, 1, -s)]);
    let py = Poly2::from_terms(d, &[(1, 0, s), (0, 1, c)]);
    h.compose(&px, &py)
}

/// Expands the surface around chart point `p` as a height function over its
/// tangent plane, up to `degree`.
pub fn tangent_graph(
    chart: &SurfaceChart,
    p: ChartPoint,
    degree: usize,
    tol: &ToleranceConfig,
) -> Result<TangentGraph> {
    let geo = chart.geometry(p, tol)?;
    let x = chart.embedding_series(p, degree)?;
    let normal = geo.normal;
    let e1 = geo.xu.normalize();
    let e2 = normal.cross(&e1);
    let origin = geo.position;
    let project = |dir: &Vec3| -> Poly2 {
        let mut s = &(&x[0].scale(dir[0]) + &x[1].scale(dir[1])) + &x[2].scale(dir[2]);
        s.set(0, 0, 0.0);
        s
    };
    let (px, py, pz) = (project(&e1), project(&e2), project(&normal));

    // Linear part of (xi1, xi2) -> (x, y) and its inverse.
    let l = [
        [px.coeff(1, 0), px.coeff(0, 1)],
        [py.coeff(1, 0), py.coeff(0, 1)],
    ];
    let det = l[0][0] * l[1][1] - l[0][1] * l[1][0];
    if det.abs() < 1e-300 {
        return Err(GmcError::Singular { u: p.u, v: p.v });
    }
    let inv = [
        [l[1][1] / det, -l[0][1] / det],
        [-l[1][0] / det, l[0][0] / det],
    ];
    let lin = |poly: &Poly2| {
        Poly2::from_terms(degree, &[(1, 0, poly.coeff(1, 0)), (0, 1, poly.coeff(0, 1))])
    };
    let nx = &px - &lin(&px);
    let ny = &py - &lin(&py);
    let vx = Poly2::var_x(degree, 0.0);
    let vy = Poly2::var_y(degree, 0.0);

    // xi = L^{-1} ((x, y) - nonlinear(xi)); each pass fixes one more degree.
    let mut xi1 = &vx.scale(inv[0][0]) + &vy.scale(inv[0][1]);
    let mut xi2 = &vx.scale(inv[1][0]) + &vy.scale(inv[1][1]);
    for _ in 1..degree {
        let rx = &vx - &nx.compose(&xi1, &xi2);
        let ry = &vy - &ny.compose(&xi1, &xi2);
        let n1 = &rx.scale(inv[0][0]) + &ry.scale(inv[0][1]);
        let n2 = &rx.scale(inv[1][0]) + &ry.scale(inv[1][1]);
        xi1 = n1;
        xi2 = n2;
    }
    let h = pz.compose(&xi1, &xi2);
    Ok(TangentGraph {
        origin,
        e1,
        e2,
        normal,
        h,
    })
}

/// Critical points of phi -> f(cos phi, sin phi) for a homogeneous cubic f,
/// i.e. the angles at which the rotated x^2 y coefficient vanishes.
pub fn cubic_critical_angles(c30: f64, c21: f64, c12: f64, c03: f64) -> Vec<f64> {
    let f = |t: f64| {
        let (c, s) = (t.cos(), t.sin());
        c30 * c * c * c + c21 * c * c * s + c12 * c * s * s + c03 * s * s * s
    };
    let df = |t: f64| {
        let (c, s) = (t.cos(), t.sin());
        // d/dphi of f(cos, sin)
        -3.0 * c30 * c * c * s + c21 * (c * c * c - 2.0 * c * s * s)
            + c12 * (2.0 * c * c * s - s * s * s)
            + 3.0 * c03 * s * s * c
    };
    let n = 720;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut roots = Vec::new();
    let mut t0 = 0.0;
    let mut d0 = df(t0);
    for i in 1..=n {
        let t1 = two_pi * i as f64 / n as f64;
        let d1 = df(t1);
        if d0 == 0.0 {
            roots.push(t0);
        } else if d0 * d1 < 0.0 {
            let (mut lo, mut hi, mut dlo) = (t0, t1, d0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let dm = df(mid);
                if dm == 0.0 || hi - lo < 1e-15 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if dm * dlo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    dlo = dm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        t0 = t1;
        d0 = d1;
    }
    // Sort by decreasing cubic value so callers can take the first.
    roots.sort_by(|a, b| f(*b).partial_cmp(&f(*a)).unwrap_or(std::cmp::Ordering::Equal));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monge_graph_reproduces_itself() {
        let h = Poly2::from_terms(
            5,
            &[(2, 0, 0.5), (0, 2, 0.5), (3, 0, 1.0 / 3.0), (1, 2, 0.5), (4, 0, 0.1)],
        );
        let chart = SurfaceChart::monge(h.clone()).unwrap();
        let g = tangent_graph(&chart, ChartPoint::new(0.0, 0.0), 4, &ToleranceConfig::default())
            .unwrap();
        for (i, j, c) in h.with_degree(4).terms() {
            assert_relative_eq!(g.h.coeff(i, j), c, epsilon = 1e-13);
        }
    }

    #[test]
    fn sphere_height_function() {
        // Sphere of radius 2 via a geographic ellipsoid chart with a=b=c is
        // not allowed; use a nearly round torus point instead: at s = 0 the
        // normal section curvatures are 1/r and 1/(R + r).
        let chart = SurfaceChart::torus(1.0, 3.0).unwrap().flipped();
        let g = tangent_graph(&chart, ChartPoint::new(0.0, 0.3), 4, &ToleranceConfig::default())
            .unwrap();
        let hs = [g.h.coeff(2, 0), g.h.coeff(1, 1), g.h.coeff(0, 2)];
        // frame e1 is along x_s (meridian), curvature 1/r = 1
        assert_relative_eq!(hs[0], 0.5, epsilon = 1e-13);
        assert_relative_eq!(hs[1], 0.0, epsilon = 1e-13);
        assert_relative_eq!(hs[2], 0.5 / 4.0, epsilon = 1e-13);
        // graph points are on the torus
        for (x, y) in [(0.05, 0.0), (0.0, 0.07), (0.03, -0.04)] {
            let q = g.point(x, y);
            let rho = q[0].hypot(q[1]);
            let dist = ((rho - 3.0).powi(2) + q[2] * q[2]).sqrt();
            assert!((dist - 1.0).abs() < 1e-6, "dist {dist}");
        }
    }

    #[test]
    fn critical_angles_kill_mixed_term() {
        let (c30, c21, c12, c03) = (0.3, -0.7, 0.2, 0.9);
        let h = Poly2::from_terms(3, &[(3, 0, c30), (2, 1, c21), (1, 2, c12), (0, 3, c03)]);
        let roots = cubic_critical_angles(c30, c21, c12, c03);
        assert!(!roots.is_empty());
        for r in &roots {
            assert!(rotate_poly(&h, *r).coeff(2, 1).abs() < 1e-12);
        }
    }
}

//! Parametrized surface charts, fundamental forms and curvature invariants.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::ToleranceConfig;
use crate::poly::Poly2;
use crate::{GmcError, Result};

pub type Vec3 = Vector3<f64>;

/// Coordinates used on a triaxial ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coords", rename_all = "lowercase")]
pub enum EllipsoidCoords {
    /// Ellipsoidal coordinates (u, v) with u in (-b^2, -c^2), v in (-a^2, -b^2);
    /// one open octant per sign triple.
    Octant { signs: [i8; 3] },
    /// Unfolded ellipsoidal coordinates (beta, gamma) with
    /// v = -a^2 + (a^2 - b^2) sin^2 beta and u = -b^2 + (b^2 - c^2) sin^2 gamma.
    /// Smooth and regular everywhere except at the four umbilics.
    Angular,
    /// Longitude/latitude (phi, psi); singular only at (0, 0, +-c).
    Geographic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChartKind {
    /// Graph (x, y, h(x, y)) of a polynomial over a rectangle.
    MongeGraph { h: Poly2, domain: [f64; 4] },
    /// Torus of revolution with tube radius `r` and center radius `big_r`,
    /// chart (s, theta).
    TorusOfRevolution { r: f64, big_r: f64 },
    TriaxialEllipsoid {
        a: f64,
        b: f64,
        c: f64,
        coords: EllipsoidCoords,
    },
}

/// A parametrized surface together with a choice of unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceChart {
    pub kind: ChartKind,
    /// +1 or -1, multiplying the chart's base normal.
    pub orientation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub u: f64,
    pub v: f64,
}

impl ChartPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Coefficients of the first (E, F, G) and second (e, f, g) fundamental forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalForms {
    #[serde(rename = "E")]
    pub ee: f64,
    #[serde(rename = "F")]
    pub ff: f64,
    #[serde(rename = "G")]
    pub gg: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl FundamentalForms {
    pub fn new(ee: f64, ff: f64, gg: f64, e: f64, f: f64, g: f64) -> Self {
        Self { ee, ff, gg, e, f, g }
    }

    /// EG - F^2.
    pub fn det_first(&self) -> f64 {
        self.ee * self.gg - self.ff * self.ff
    }

    pub fn det_second(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    pub fn first(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.ee * a[0] * b[0] + self.ff * (a[0] * b[1] + a[1] * b[0]) + self.gg * a[1] * b[1]
    }

    pub fn second(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.e * a[0] * b[0] + self.f * (a[0] * b[1] + a[1] * b[0]) + self.g * a[1] * b[1]
    }

    pub fn is_regular(&self) -> bool {
        self.ee > 0.0 && self.gg > 0.0 && self.det_first() > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureData {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
    pub region: Region,
    pub umbilic: bool,
}

impl CurvatureData {
    pub fn sqrt_k(&self) -> f64 {
        self.k.max(0.0).sqrt()
    }
}

/// Gaussian and mean curvature, principal curvatures and region flags.
pub fn curvature_data(ff: &FundamentalForms, tol: &ToleranceConfig) -> Result<CurvatureData> {
    if !ff.is_regular() {
        return Err(GmcError::Consistency(format!(
            "first fundamental form is not positive definite: {ff:?}"
        )));
    }
    let w = ff.det_first();
    let k = ff.det_second() / w;
    let h = (ff.e * ff.gg - 2.0 * ff.f * ff.ff + ff.g * ff.ee) / (2.0 * w);
    let disc = h * h - k;
    if disc < -1e-10 * h.abs().max(1.0).powi(2) {
        return Err(GmcError::Consistency(format!(
            "H^2 - K = {disc} is negative"
        )));
    }
    let root = disc.max(0.0).sqrt();
    // Larger-magnitude root first, the other from the product.
    let (k1, k2) = if h >= 0.0 {
        let k2 = h + root;
        let k1 = if k2 != 0.0 { k / k2 } else { 0.0 };
        (k1, k2)
    } else {
        let k1 = h - root;
        (k1, k / k1)
    };
    let region = if k > tol.eps_k {
        Region::Elliptic
    } else if k < -tol.eps_k {
        Region::Hyperbolic
    } else {
        Region::Parabolic
    };
    let umbilic = k2 - k1 < tol.eps_umbilic * (k1.abs() + k2.abs()).max(1.0);
    Ok(CurvatureData {
        k,
        h,
        k1,
        k2,
        region,
        umbilic,
    })
}

/// Everything known at one chart point: embedding derivatives, oriented
/// normal, forms and first derivatives of the curvature functions.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub point: ChartPoint,
    pub position: Vec3,
    pub xu: Vec3,
    pub xv: Vec3,
    pub xuu: Vec3,
    pub xuv: Vec3,
    pub xvv: Vec3,
    pub normal: Vec3,
    pub forms: FundamentalForms,
    /// Chart gradients of E, F, G, e, f, g in that order.
    pub forms_grad: [[f64; 2]; 6],
    pub curvature: CurvatureData,
    pub grad_k: [f64; 2],
    pub grad_h: [f64; 2],
}

impl LocalGeometry {
    /// Pushes a chart vector forward to space.
    pub fn push(&self, t: [f64; 2]) -> Vec3 {
        self.xu * t[0] + self.xv * t[1]
    }

    /// Chart vector whose image is the tangential part of `w`.
    pub fn pull(&self, w: &Vec3) -> [f64; 2] {
        let b = [self.xu.dot(w), self.xv.dot(w)];
        solve_first(&self.forms, b)
    }

    /// Unit (first-form) normalization of a chart vector.
    pub fn normalize(&self, t: [f64; 2]) -> Result<[f64; 2]> {
        let n2 = self.forms.first(t, t);
        if !(n2 > 0.0) {
            return Err(GmcError::ZeroDirection);
        }
        let n = n2.sqrt();
        Ok([t[0] / n, t[1] / n])
    }

    /// Shape operator S = I^{-1} II as a row-major 2x2 matrix.
    pub fn shape_operator(&self) -> [[f64; 2]; 2] {
        let f = &self.forms;
        let w = f.det_first();
        let inv = [[f.gg / w, -f.ff / w], [-f.ff / w, f.ee / w]];
        let ii = [[f.e, f.f], [f.f, f.g]];
        let mut s = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] = inv[i][0] * ii[0][j] + inv[i][1] * ii[1][j];
            }
        }
        s
    }

    /// Geodesic torsion of the direction `t`, tau_g = -<dN(T), N x T>, which
    /// does not depend on the sign of the normal.
    pub fn geodesic_torsion_of(&self, t: [f64; 2]) -> Result<f64> {
        let t = self.normalize(t)?;
        let s = self.shape_operator();
        let st = [s[0][0] * t[0] + s[0][1] * t[1], s[1][0] * t[0] + s[1][1] * t[1]];
        let big_t = self.push(t);
        // dN(T) = -push(S t)
        Ok(self.push(st).dot(&self.normal.cross(&big_t)))
    }

    pub fn sqrt_k_grad(&self) -> Result<[f64; 2]> {
        let k = self.curvature.k;
        if !(k > 0.0) {
            return Err(GmcError::Parabolic { k });
        }
        let s = 2.0 * k.sqrt();
        Ok([self.grad_k[0] / s, self.grad_k[1] / s])
    }
}

/// Solves I x = b.
pub(crate) fn solve_first(f: &FundamentalForms, b: [f64; 2]) -> [f64; 2] {
    let w = f.det_first();
    [(f.gg * b[0] - f.ff * b[1]) / w, (f.ee * b[1] - f.ff * b[0]) / w]
}

fn dot3(a: &[Poly2; 3], b: &[Poly2; 3]) -> Poly2 {
    &(&(&a[0] * &b[0]) + &(&a[1] * &b[1])) + &(&a[2] * &b[2])
}

fn cross3(a: &[Poly2; 3], b: &[Poly2; 3]) -> [Poly2; 3] {
    [
        &(&a[1] * &b[2]) - &(&a[2] * &b[1]),
        &(&a[2] * &b[0]) - &(&a[0] * &b[2]),
        &(&a[0] * &b[1]) - &(&a[1] * &b[0]),
    ]
}

fn map3(a: &[Poly2; 3], f: impl Fn(&Poly2) -> Poly2) -> [Poly2; 3] {
    [f(&a[0]), f(&a[1]), f(&a[2])]
}

fn vec_at(a: &[Poly2; 3]) -> Vec3 {
    Vec3::new(a[0].value(), a[1].value(), a[2].value())
}

impl SurfaceChart {
    pub fn new(kind: ChartKind) -> Result<Self> {
        let chart = Self {
            kind,
            orientation: 1.0,
        };
        chart.validate()?;
        Ok(chart)
    }

    pub fn torus(r: f64, big_r: f64) -> Result<Self> {
        Self::new(ChartKind::TorusOfRevolution { r, big_r })
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64, coords: EllipsoidCoords) -> Result<Self> {
        Self::new(ChartKind::TriaxialEllipsoid { a, b, c, coords })
    }

    pub fn monge(h: Poly2) -> Result<Self> {
        Self::monge_on(h, [-1.0, 1.0, -1.0, 1.0])
    }

    pub fn monge_on(h: Poly2, domain: [f64; 4]) -> Result<Self> {
        Self::new(ChartKind::MongeGraph { h, domain })
    }

    pub fn with_orientation(mut self, sign: f64) -> Self {
        self.orientation = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn flipped(&self) -> Self {
        let mut c = self.clone();
        c.orientation = -c.orientation;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.orientation.abs() != 1.0 {
            return Err(GmcError::InvalidChart("orientation must be +1 or -1".into()));
        }
        match &self.kind {
            ChartKind::MongeGraph { h, domain } => {
                if h.terms().iter().any(|t| !t.2.is_finite()) {
                    return Err(GmcError::InvalidChart("non-finite coefficient".into()));
                }
                if !(domain[0] < domain[1] && domain[2] < domain[3]) {
                    return Err(GmcError::InvalidChart("empty domain rectangle".into()));
                }
            }
            ChartKind::TorusOfRevolution { r, big_r } => {
                if !(*r > 0.0 && big_r > r && big_r.is_finite()) {
                    return Err(GmcError::InvalidChart(format!(
                        "torus needs 0 < r < R, got r={r}, R={big_r}"
                    )));
                }
            }
            ChartKind::TriaxialEllipsoid { a, b, c, coords } => {
                if !(a > b && b > c && *c > 0.0 && a.is_finite()) {
                    return Err(GmcError::InvalidChart(format!(
                        "ellipsoid needs a > b > c > 0, got {a}, {b}, {c}"
                    )));
                }
                if let EllipsoidCoords::Octant { signs } = coords {
                    if signs.iter().any(|s| s.abs() != 1) {
                        return Err(GmcError::InvalidChart("octant signs must be +-1".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// True when `p` lies in the open domain of the chart.
    pub fn contains(&self, p: ChartPoint) -> bool {
        if !(p.u.is_finite() && p.v.is_finite()) {
            return false;
        }
        match &self.kind {
            ChartKind::MongeGraph { domain, .. } => {
                p.u >= domain[0] && p.u <= domain[1] && p.v >= domain[2] && p.v <= domain[3]
            }
            ChartKind::TorusOfRevolution { .. } => true,
            ChartKind::TriaxialEllipsoid { a, b, c, coords } => match coords {
                EllipsoidCoords::Octant { .. } => {
                    p.u > -b * b && p.u < -c * c && p.v > -a * a && p.v < -b * b
                }
                EllipsoidCoords::Angular => true,
                EllipsoidCoords::Geographic => p.v.abs() < PI / 2.0,
            },
        }
    }

    /// A bounded search window used by zero-set scans.
    pub fn window(&self) -> [f64; 4] {
        match &self.kind {
            ChartKind::MongeGraph { domain, .. } => *domain,
            ChartKind::TorusOfRevolution { .. } => [-PI, PI, 0.0, 2.0 * PI],
            ChartKind::TriaxialEllipsoid { a, b, c, coords } => match coords {
                EllipsoidCoords::Octant { .. } => [-b * b, -c * c, -a * a, -b * b],
                EllipsoidCoords::Angular => [-PI, PI, -PI, PI],
                EllipsoidCoords::Geographic => [-PI, PI, -PI / 2.0, PI / 2.0],
            },
        }
    }

    /// Taylor expansion of the embedding around `p` up to `degree`, in the
    /// increments (u - p.u, v - p.v).
    pub fn embedding_series(&self, p: ChartPoint, degree: usize) -> Result<[Poly2; 3]> {
        if !self.contains(p) {
            return Err(GmcError::OutsideDomain { u: p.u, v: p.v });
        }
        let su = Poly2::var_x(degree, p.u);
        let sv = Poly2::var_y(degree, p.v);
        Ok(match &self.kind {
            ChartKind::MongeGraph { h, .. } => {
                let hh = h.compose(&su, &sv);
                let hh = hh.with_degree(degree);
                [su, sv, hh]
            }
            ChartKind::TorusOfRevolution { r, big_r } => {
                let (cs, ss) = (su.cos(), su.sin());
                let (ct, st) = (sv.cos(), sv.sin());
                let rho = &Poly2::constant(degree, *big_r) + &cs.scale(*r);
                [&rho * &ct, &rho * &st, ss.scale(*r)]
            }
            ChartKind::TriaxialEllipsoid { a, b, c, coords } => {
                ellipsoid_series(*a, *b, *c, *coords, &su, &sv, p)?
            }
        })
    }

    /// Sign applied to (x_u cross x_v) to obtain the base normal before
    /// `orientation` is applied.
    fn base_normal_sign(&self, position: &Vec3, cross: &Vec3) -> f64 {
        match &self.kind {
            ChartKind::MongeGraph { .. } => 1.0,
            // Outward normal of the torus (e = -r on the outer equator).
            ChartKind::TorusOfRevolution { .. } => -1.0,
            ChartKind::TriaxialEllipsoid { .. } => {
                if cross.dot(position) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn position(&self, p: ChartPoint) -> Result<Vec3> {
        Ok(vec_at(&self.embedding_series(p, 0)?))
    }

    /// Full local geometry at `p`.
    pub fn geometry(&self, p: ChartPoint, tol: &ToleranceConfig) -> Result<LocalGeometry> {
        let x = self.embedding_series(p, 3)?;
        let xu = map3(&x, |s| s.dx().with_degree(2));
        let xv = map3(&x, |s| s.dy().with_degree(2));
        let xuu = map3(&xu, |s| s.dx().with_degree(1));
        let xuv = map3(&xu, |s| s.dy().with_degree(1));
        let xvv = map3(&xv, |s| s.dy().with_degree(1));
        let xu1 = map3(&xu, |s| s.with_degree(1));
        let xv1 = map3(&xv, |s| s.with_degree(1));

        let n = cross3(&xu1, &xv1);
        let w = dot3(&n, &n);
        let cross0 = vec_at(&n);
        let position = vec_at(&x);
        if !(w.value() > 0.0) {
            return Err(GmcError::Singular { u: p.u, v: p.v });
        }
        let sign = self.orientation * self.base_normal_sign(&position, &cross0);

        let big_e = dot3(&xu1, &xu1);
        let big_f = dot3(&xu1, &xv1);
        let big_g = dot3(&xv1, &xv1);
        let et = dot3(&n, &xuu);
        let ft = dot3(&n, &xuv);
        let gt = dot3(&n, &xvv);
        let inv_sqrt_w = w.powf(-0.5).scale(sign);
        let e = &et * &inv_sqrt_w;
        let f = &ft * &inv_sqrt_w;
        let g = &gt * &inv_sqrt_w;

        let k = &(&(&et * &gt) - &(&ft * &ft)) * &w.powf(-2.0);
        let mean_num = &(&(&e * &big_g) - &(&f * &big_f).scale(2.0)) + &(&g * &big_e);
        let h = &mean_num * &(&(&big_e * &big_g) - &(&big_f * &big_f)).recip().scale(0.5);

        let forms = FundamentalForms::new(
            big_e.value(),
            big_f.value(),
            big_g.value(),
            e.value(),
            f.value(),
            g.value(),
        );
        let mut curvature = curvature_data(&forms, tol)?;
        // The series value of K is algebraically identical; keep one source.
        curvature.k = k.value();
        let normal = cross0.normalize() * sign;
        Ok(LocalGeometry {
            point: p,
            position,
            xu: vec_at(&xu),
            xv: vec_at(&xv),
            xuu: vec_at(&xuu),
            xuv: vec_at(&xuv),
            xvv: vec_at(&xvv),
            normal,
            forms,
            forms_grad: [
                big_e.gradient(),
                big_f.gradient(),
                big_g.gradient(),
                e.gradient(),
                f.gradient(),
                g.gradient(),
            ],
            curvature,
            grad_k: k.gradient(),
            grad_h: h.gradient(),
        })
    }
}

fn ellipsoid_series(
    a: f64,
    b: f64,
    c: f64,
    coords: EllipsoidCoords,
    su: &Poly2,
    sv: &Poly2,
    p: ChartPoint,
) -> Result<[Poly2; 3]> {
    let deg = su.degree();
    let (a2, b2, c2) = (a * a, b * b, c * c);
    Ok(match coords {
        EllipsoidCoords::Octant { signs } => {
            if [p.u + b2, p.u + c2, p.v + a2, p.v + b2]
                .iter()
                .any(|d| d.abs() < 1e-300)
            {
                return Err(GmcError::OutsideDomain { u: p.u, v: p.v });
            }
            // x_i = s_i w sqrt(|u + w^2| |v + w^2| / |W_i|)
            let factor = |w2: f64, other1: f64, other2: f64| {
                let wd = ((w2 - other1) * (w2 - other2)).abs();
                let fu = abs_shift(su, w2).sqrt();
                let fv = abs_shift(sv, w2).sqrt();
                (&fu * &fv).scale(w2.sqrt() / wd.sqrt())
            };
            [
                factor(a2, b2, c2).scale(signs[0] as f64),
                factor(b2, a2, c2).scale(signs[1] as f64),
                factor(c2, a2, b2).scale(signs[2] as f64),
            ]
        }
        EllipsoidCoords::Angular => {
            let (sb, cb) = (su.sin(), su.cos());
            let (sg, cg) = (sv.sin(), sv.cos());
            let norm = 1.0 / (a2 - c2).sqrt();
            let fx = (&Poly2::constant(deg, a2 - b2) + &(&sg * &sg).scale(b2 - c2)).sqrt();
            let fz = (&Poly2::constant(deg, a2 - c2) - &(&sb * &sb).scale(a2 - b2)).sqrt();
            [
                (&sb * &fx).scale(a * norm),
                (&sg * &cb).scale(b),
                (&cg * &fz).scale(c * norm),
            ]
        }
        EllipsoidCoords::Geographic => {
            let (sp, cp) = (su.sin(), su.cos());
            let (ss, cs) = (sv.sin(), sv.cos());
            [(&cs * &cp).scale(a), (&cs * &sp).scale(b), ss.scale(c)]
        }
    })
}

/// |s + w2| as a series (sign fixed by the value at the expansion point).
fn abs_shift(s: &Poly2, w2: f64) -> Poly2 {
    let shifted = &Poly2::constant(s.degree(), w2) + s;
    if shifted.value() < 0.0 {
        shifted.scale(-1.0)
    } else {
        shifted
    }
}

/// Fundamental forms at a chart point.
pub fn fundamental_forms(chart: &SurfaceChart, p: ChartPoint) -> Result<FundamentalForms> {
    Ok(chart.geometry(p, &ToleranceConfig::default())?.forms)
}

/// Chooses the normal so that H > 0 at an elliptic reference point.
pub fn orient_positive(
    chart: &SurfaceChart,
    reference: ChartPoint,
    tol: &ToleranceConfig,
) -> Result<SurfaceChart> {
    let geo = chart.geometry(reference, tol)?;
    if geo.curvature.region != Region::Elliptic {
        return Err(GmcError::Orientation(format!(
            "reference point is not elliptic (K = {})",
            geo.curvature.k
        )));
    }
    if geo.curvature.h < 0.0 {
        Ok(chart.flipped())
    } else {
        Ok(chart.clone())
    }
}

/// Exact Taylor series of E, F, G, e, f, g of the Monge graph of `h` around
/// the origin, truncated at `degree`. Normal is the upward one.
pub fn monge_forms_series(h: &Poly2, degree: usize) -> [Poly2; 6] {
    let h = h.with_degree(degree + 2);
    let hx = h.dx().with_degree(degree);
    let hy = h.dy().with_degree(degree);
    let hxx = h.dx().dx().with_degree(degree);
    let hxy = h.dx().dy().with_degree(degree);
    let hyy = h.dy().dy().with_degree(degree);
    let one = Poly2::constant(degree, 1.0);
    let big_e = &one + &(&hx * &hx);
    let big_f = &hx * &hy;
    let big_g = &one + &(&hy * &hy);
    let inv = (&big_e + &(&hy * &hy)).powf(-0.5);
    [big_e, big_f, big_g, &hxx * &inv, &hxy * &inv, &hyy * &inv]
}

/// JSON chart description as accepted by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChartDescription {
    Torus {
        r: f64,
        #[serde(rename = "R")]
        big_r: f64,
        #[serde(default = "one")]
        orientation: f64,
    },
    Monge {
        coeffs: Vec<(usize, usize, f64)>,
        #[serde(default)]
        domain: Option<[f64; 4]>,
        #[serde(default = "one")]
        orientation: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
        #[serde(default)]
        signs: Option<[i8; 3]>,
        #[serde(default)]
        coords: Option<String>,
        #[serde(default = "one")]
        orientation: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ChartDescription {
    pub fn build(&self) -> Result<SurfaceChart> {
        match self {
            ChartDescription::Torus {
                r,
                big_r,
                orientation,
            } => Ok(SurfaceChart::torus(*r, *big_r)?.with_orientation(*orientation)),
            ChartDescription::Monge {
                coeffs,
                domain,
                orientation,
            } => {
                let degree = coeffs.iter().map(|(i, j, _)| i + j).max().unwrap_or(0).max(4);
                let h = Poly2::from_terms(degree, coeffs);
                Ok(SurfaceChart::monge_on(h, domain.unwrap_or([-1.0, 1.0, -1.0, 1.0]))?
                    .with_orientation(*orientation))
            }
            ChartDescription::Ellipsoid {
                a,
                b,
                c,
                signs,
                coords,
                orientation,
            } => {
                let coords = match (coords.as_deref(), signs) {
                    (Some("angular"), _) => EllipsoidCoords::Angular,
                    (Some("geographic"), _) => EllipsoidCoords::Geographic,
                    (Some("octant") | None, Some(s)) => EllipsoidCoords::Octant { signs: *s },
                    (None, None) => EllipsoidCoords::Angular,
                    (Some(other), _) => {
                        return Err(GmcError::InvalidChart(format!(
                            "unknown ellipsoid coordinates '{other}'"
                        )))
                    }
                };
                Ok(SurfaceChart::ellipsoid(*a, *b, *c, coords)?.with_orientation(*orientation))
            }
        }
    }
}

/// Converts unfolded (beta, gamma) ellipsoid coordinates to ellipsoidal (u, v).
pub fn angular_to_ellipsoidal(a: f64, b: f64, c: f64, beta: f64, gamma: f64) -> (f64, f64) {
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let sg = gamma.sin();
    let sb = beta.sin();
    (-b2 + (b2 - c2) * sg * sg, -a2 + (a2 - b2) * sb * sb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn torus_forms_at_outer_equator() {
        let chart = SurfaceChart::torus(1.0, 3.0).unwrap();
        let raw = fundamental_forms(&chart, ChartPoint::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(raw.e, -1.0, epsilon = 1e-14);
        let oriented = orient_positive(&chart, ChartPoint::new(0.0, 0.0), &tol()).unwrap();
        let ff = fundamental_forms(&oriented, ChartPoint::new(0.0, 0.0)).unwrap();
        let expect = [1.0, 0.0, 16.0, 1.0, 0.0, 4.0];
        let got = [ff.ee, ff.ff, ff.gg, ff.e, ff.f, ff.g];
        for (g, e) in got.iter().zip(expect) {
            assert_relative_eq!(*g, e, epsilon = 1e-13);
        }
    }

    #[test]
    fn flat_plane_and_paraboloid() {
        let flat = SurfaceChart::monge(Poly2::zero(4)).unwrap();
        let ff = fundamental_forms(&flat, ChartPoint::new(0.3, -0.2)).unwrap();
        assert_eq!((ff.ee, ff.ff, ff.gg, ff.e, ff.f, ff.g), (1.0, 0.0, 1.0, 0.0, 0.0, 0.0));
        let cd = curvature_data(&ff, &tol()).unwrap();
        assert_eq!(cd.region, Region::Parabolic);
        assert_eq!((cd.k, cd.h), (0.0, 0.0));

        let para = SurfaceChart::monge(Poly2::from_terms(4, &[(2, 0, 0.5), (0, 2, 0.5)])).unwrap();
        let ff = fundamental_forms(&para, ChartPoint::new(0.0, 0.0)).unwrap();
        assert_eq!((ff.ee, ff.ff, ff.gg, ff.e, ff.f, ff.g), (1.0, 0.0, 1.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn torus_curvature_values() {
        let ff = FundamentalForms::new(1.0, 0.0, 16.0, 1.0, 0.0, 4.0);
        let cd = curvature_data(&ff, &tol()).unwrap();
        assert_relative_eq!(cd.k, 0.25, epsilon = 1e-15);
        assert_relative_eq!(cd.h, 0.625, epsilon = 1e-15);
        assert_relative_eq!(cd.k1, 0.25, epsilon = 1e-15);
        assert_relative_eq!(cd.k2, 1.0, epsilon = 1e-15);
        assert_eq!(cd.region, Region::Elliptic);
        assert!(!cd.umbilic);
    }

    #[test]
    fn sphere_like_forms_are_umbilic() {
        let ff = FundamentalForms::new(1.0, 0.0, 1.0, 1.0, 0.0, 1.0);
        let cd = curvature_data(&ff, &tol()).unwrap();
        assert_eq!((cd.k1, cd.k2), (1.0, 1.0));
        assert!(cd.umbilic);
    }

    #[test]
    fn orient_positive_rejects_hyperbolic_and_is_idempotent() {
        let chart = SurfaceChart::torus(1.0, 3.0).unwrap();
        let once = orient_positive(&chart, ChartPoint::new(0.2, 0.0), &tol()).unwrap();
        let twice = orient_positive(&once, ChartPoint::new(0.2, 0.0), &tol()).unwrap();
        assert_eq!(once, twice);
        let err = orient_positive(&chart, ChartPoint::new(PI, 0.0), &tol()).unwrap_err();
        assert!(matches!(err, GmcError::Orientation(_)));
    }

    #[test]
    fn invalid_charts_rejected() {
        assert!(SurfaceChart::torus(3.0, 1.0).is_err());
        assert!(SurfaceChart::ellipsoid(2.0, 2.0, 1.0, EllipsoidCoords::Angular).is_err());
        let oct = SurfaceChart::ellipsoid(
            3.0,
            2.0,
            1.0,
            EllipsoidCoords::Octant { signs: [1, 1, 1] },
        )
        .unwrap();
        assert!(matches!(
            fundamental_forms(&oct, ChartPoint::new(-4.0, -5.0)),
            Err(GmcError::OutsideDomain { .. })
        ));
        assert!(fundamental_forms(&oct, ChartPoint::new(-1.0, -5.0)).is_err());
    }

    #[test]
    fn ellipsoid_charts_lie_on_the_surface() {
        let (a, b, c) = (3.0, 2.0, 1.0);
        for coords in [
            EllipsoidCoords::Octant { signs: [1, -1, 1] },
            EllipsoidCoords::Angular,
            EllipsoidCoords::Geographic,
        ] {
            let chart = SurfaceChart::ellipsoid(a, b, c, coords).unwrap();
            let p = match coords {
                EllipsoidCoords::Octant { .. } => ChartPoint::new(-2.5, -6.0),
                _ => ChartPoint::new(0.4, 0.9),
            };
            let x = chart.position(p).unwrap();
            assert_relative_eq!(
                x[0] * x[0] / (a * a) + x[1] * x[1] / (b * b) + x[2] * x[2] / (c * c),
                1.0,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn octant_forms_match_closed_form_first_form() {
        // I = (u - v) u / (4 h(u)) du^2 + (v - u) v / (4 h(v)) dv^2
        let (a, b, c) = (3.0_f64, 2.0_f64, 1.0_f64);
        let hfun = |x: f64| (x + a * a) * (x + b * b) * (x + c * c);
        let chart = SurfaceChart::ellipsoid(
            a,
            b,
            c,
            EllipsoidCoords::Octant { signs: [1, 1, 1] },
        )
        .unwrap();
        let (u, v) = (-2.2, -6.5);
        let ff = fundamental_forms(&chart, ChartPoint::new(u, v)).unwrap();
        assert_relative_eq!(ff.ee, (u - v) * u / (4.0 * hfun(u)), max_relative = 1e-12);
        assert_relative_eq!(ff.gg, (v - u) * v / (4.0 * hfun(v)), max_relative = 1e-12);
        assert!(ff.ff.abs() < 1e-12 && ff.f.abs() < 1e-12);
        // second form: abc (u - v) / (4 sqrt(uv) |h|) up to the normal sign
        let e_abs = a * b * c * (u - v) / (4.0 * (u * v).sqrt() * hfun(u).abs());
        assert_relative_eq!(ff.e.abs(), e_abs, max_relative = 1e-12);
    }

    #[test]
    fn chart_description_json() {
        let d: ChartDescription =
            serde_json::from_str(r#"{"kind": "torus", "r": 1.0, "R": 3.0, "orientation": 1}"#)
                .unwrap();
        assert!(matches!(d.build().unwrap().kind, ChartKind::TorusOfRevolution { .. }));
        let d: ChartDescription =
            serde_json::from_str(r#"{"kind": "monge", "coeffs": [[2, 0, 0.5], [0, 2, 0.5]]}"#)
                .unwrap();
        assert!(d.build().is_ok());
        let d: ChartDescription = serde_json::from_str(
            r#"{"kind": "ellipsoid", "a": 3, "b": 2, "c": 1, "signs": [1, 1, 1]}"#,
        )
        .unwrap();
        assert!(matches!(
            d.build().unwrap().kind,
            ChartKind::TriaxialEllipsoid {
                coords: EllipsoidCoords::Octant { .. },
                ..
            }
        ));
    }
}

//! Worked examples: torus rotation number and triaxial-ellipsoid dynamics.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::bde::Branch;
use crate::config::{QuadConfig, ToleranceConfig, TraceConfig};
use crate::flow::{trace_with, Polyline, Sample, StopReason, TangentialPolicy, TraceOptions};
use crate::ode::{integrate, OdeOptions};
use crate::quadrature::{composite_gauss, substituted_gauss, tanh_sinh};
use crate::surface::{orient_positive, ChartPoint, EllipsoidCoords, SurfaceChart, Vec3};
use crate::umbilic::{classify_gmc_umbilic, reduce_to_monge_jet, UmbilicClassification};
use crate::{GmcError, Result};

/// Convergent p/q of a continued fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergent {
    pub p: i64,
    pub q: i64,
}

/// First `n` convergents of x (stops early when x is hit exactly).
pub fn continued_fraction(x: f64, n: usize) -> Vec<Convergent> {
    let mut out = Vec::with_capacity(n);
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.floor() as i64, 1i64);
    out.push(Convergent { p: p1, q: q1 });
    let mut frac = x - x.floor();
    while out.len() < n && frac > 1e-15 {
        let y = 1.0 / frac;
        let ai = y.floor();
        frac = y - ai;
        let ai = ai as i64;
        let (Some(p2), Some(q2)) = (
            ai.checked_mul(p1).and_then(|v| v.checked_add(p0)),
            ai.checked_mul(q1).and_then(|v| v.checked_add(q0)),
        ) else {
            break;
        };
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        out.push(Convergent { p: p1, q: q1 });
    }
    out
}

/// Nearest rational p/q with q <= max_den and its distance to x.
pub fn nearest_rational(x: f64, max_den: i64) -> (Convergent, f64) {
    let mut best = (Convergent { p: x.round() as i64, q: 1 }, (x - x.round()).abs());
    for q in 2..=max_den {
        let p = (x * q as f64).round() as i64;
        let d = (x - p as f64 / q as f64).abs();
        if d < best.1 {
            best = (Convergent { p, q }, d);
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorusRho {
    pub ratio: f64,
    pub rho_quadrature: f64,
    /// Same integral with the substitution-based Gauss scheme.
    pub rho_quadrature_alt: f64,
    pub rho_numeric: f64,
    /// rho_quadrature / rho_numeric.
    pub normalization: f64,
    pub continued_fraction: Vec<Convergent>,
    pub nearest_rational: Convergent,
    pub nearest_rational_distance: f64,
}

/// Integrand of the torus formula at s, with d = pi/2 - |s| given exactly.
fn torus_integrand(ratio: f64, d: f64) -> f64 {
    let c = d.sin();
    1.0 / (c.powf(0.25) * (1.0 + ratio * c).powf(0.75))
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(GmcError::InvalidArgument(format!(
            "ratio r/R must lie in (0, 1), got {ratio}"
        )));
    }
    Ok(())
}

/// 2 (r/R)^{3/4} times the endpoint-singular integral, by tanh-sinh.
pub fn torus_rho(ratio: f64, cfg: &QuadConfig) -> Result<f64> {
    check_ratio(ratio)?;
    let q = tanh_sinh(
        |_, dl, dr| torus_integrand(ratio, dl.min(dr)),
        -FRAC_PI_2,
        FRAC_PI_2,
        cfg,
    )?;
    Ok(2.0 * ratio.powf(0.75) * q.value)
}

/// The same quantity with the substitution d = t^4 and composite Gauss.
pub fn torus_rho_alt(ratio: f64, cfg: &QuadConfig) -> Result<f64> {
    check_ratio(ratio)?;
    let v = substituted_gauss(
        |_, dl, dr| torus_integrand(ratio, dl.min(dr)),
        -FRAC_PI_2,
        FRAC_PI_2,
        4,
        cfg.gauss_panels,
    );
    Ok(2.0 * ratio.powf(0.75) * v)
}

/// Slope dtheta/ds of the GMC lines on the torus at meridian angle s.
pub fn torus_slope(r: f64, big_r: f64, s: f64) -> f64 {
    let c = s.cos();
    (r.powi(3) / (c * (big_r + r * c).powi(3))).powf(0.25)
}

/// Theta advance across the elliptic band, from the ODE dtheta/ds on
/// [-pi/2 + delta, pi/2 - delta] extrapolated to delta = 0.
pub fn torus_theta_advance(r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0 && r < big_r) {
        return Err(GmcError::InvalidArgument(format!("need 0 < r < R, got r={r}, R={big_r}")));
    }
    let opts = OdeOptions {
        rtol: 1e-13,
        atol: 1e-15,
        h_init: 1e-4,
        ..Default::default()
    };
    let advance = |delta: f64| -> Result<f64> {
        let sol = integrate(
            |s, _: &[f64; 1]| {
                let d = FRAC_PI_2 - s.abs();
                let c = d.sin();
                Ok([(r.powi(3) / (c * (big_r + r * c).powi(3))).powf(0.25)])
            },
            -FRAC_PI_2 + delta,
            [0.0],
            FRAC_PI_2 - delta,
            &opts,
        )?;
        Ok(sol.last()[0])
    };
    // The missing tails expand in delta^{3/4 + k}.
    let levels = 6;
    let delta0 = 1e-2;
    let mut table: Vec<f64> = (0..levels)
        .map(|j| advance(delta0 / 2f64.powi(j)))
        .collect::<Result<_>>()?;
    let mut prev_change = f64::INFINITY;
    for m in 0..levels - 1 {
        let f = 2f64.powf(-(0.75 + m as f64));
        let next: Vec<f64> = table
            .windows(2)
            .map(|w| (w[1] - f * w[0]) / (1.0 - f))
            .collect();
        let change = (next[next.len() - 1] - table[table.len() - 1]).abs();
        table = next;
        if change > prev_change && change > 1e-10 {
            return Err(GmcError::NoConvergence("Richardson table diverges".into()));
        }
        prev_change = change;
    }
    Ok(table[0])
}

/// Rotation number: theta advance of one traversal there and back, over 2 pi.
pub fn torus_rho_numeric(r: f64, big_r: f64) -> Result<f64> {
    Ok(2.0 * torus_theta_advance(r, big_r)? / TAU)
}

pub fn torus_rho_report(ratio: f64, cfg: &QuadConfig) -> Result<TorusRho> {
    let q = torus_rho(ratio, cfg)?;
    let alt = torus_rho_alt(ratio, cfg)?;
    let n = torus_rho_numeric(ratio, 1.0)?;
    let (nr, dist) = nearest_rational(n, 64);
    Ok(TorusRho {
        ratio,
        rho_quadrature: q,
        rho_quadrature_alt: alt,
        rho_numeric: n,
        normalization: q / n,
        continued_fraction: continued_fraction(n, 10),
        nearest_rational: nr,
        nearest_rational_distance: dist,
    })
}

/// Torus chart with the normal making K, H > 0 on the outer band.
pub fn torus_chart(r: f64, big_r: f64) -> Result<SurfaceChart> {
    orient_positive(
        &SurfaceChart::torus(r, big_r)?,
        ChartPoint::new(0.0, 0.0),
        &ToleranceConfig::default(),
    )
}

/// Rotation number from a direct extended trace: start on the outer
/// equator, reflect at both parabolic circles and measure the theta advance
/// until the second return to the equator.
pub fn torus_rho_trace(r: f64, big_r: f64, theta0: f64, cfg: &TraceConfig) -> Result<(f64, Polyline)> {
    let chart = torus_chart(r, big_r)?;
    let event = |s: &Sample| s.point.u;
    let opts = TraceOptions {
        cfg: TraceConfig {
            max_arclength: 1e3,
            ..*cfg
        },
        extended: true,
        tangential: TangentialPolicy::Reflect,
        detect_closure: false,
        event: Some(&event),
        ..Default::default()
    };
    let first = trace_with(&chart, ChartPoint::new(0.0, theta0), Branch::Maximal, Some([1.0, 0.0]), &opts)?;
    if first.stop != StopReason::Event {
        return Err(GmcError::Trace(format!("first half stopped by {:?}", first.stop)));
    }
    let end = first.last();
    let second = trace_with(&chart, end.point, end.branch, Some(end.tangent), &opts)?;
    if second.stop != StopReason::Event {
        return Err(GmcError::Trace(format!("second half stopped by {:?}", second.stop)));
    }
    let advance = second.last().point.v - theta0;
    let mut line = first;
    let offset = line.length();
    line.samples.extend(second.samples.iter().skip(1).map(|s| Sample {
        s: s.s + offset,
        ..*s
    }));
    let n0 = line.switches.len();
    line.switches.extend(second.switches.iter().map(|w| crate::flow::SwitchEvent {
        index: w.index + line.samples.len() - second.samples.len(),
        s: w.s + offset,
        ..*w
    }));
    debug_assert!(line.switches.len() >= n0);
    Ok((advance.abs() / TAU, line))
}

/// Triaxial ellipsoid data: umbilics and sigma-arclengths between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipsoidData {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub umbilics: [Vec3; 4],
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
    pub rho: f64,
    /// S1, S2 from the angular substitution scheme.
    #[serde(rename = "S1_alt")]
    pub s1_alt: f64,
    #[serde(rename = "S2_alt")]
    pub s2_alt: f64,
    pub continued_fraction: Vec<Convergent>,
    pub nearest_rational: Convergent,
    pub nearest_rational_distance: f64,
}

fn check_axes(a: f64, b: f64, c: f64) -> Result<()> {
    if !(a > b && b > c && c > 0.0) {
        return Err(GmcError::InvalidArgument(format!(
            "need a > b > c > 0, got ({a}, {b}, {c})"
        )));
    }
    Ok(())
}

/// The four umbilics (x0, 0, z0), (x0, 0, -z0), (-x0, 0, z0), (-x0, 0, -z0).
pub fn ellipsoid_umbilics(a: f64, b: f64, c: f64) -> Result<[Vec3; 4]> {
    check_axes(a, b, c)?;
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let x0 = a * ((a2 - b2) / (a2 - c2)).sqrt();
    let z0 = c * ((b2 - c2) / (a2 - c2)).sqrt();
    Ok([
        Vec3::new(x0, 0.0, z0),
        Vec3::new(x0, 0.0, -z0),
        Vec3::new(-x0, 0.0, z0),
        Vec3::new(-x0, 0.0, -z0),
    ])
}

/// Geographic chart coordinates (longitude, latitude) of a surface point.
pub fn geographic_point(a: f64, b: f64, c: f64, x: &Vec3) -> ChartPoint {
    let lat = (x.z / c).clamp(-1.0, 1.0).asin();
    let lon = (x.y / b).atan2(x.x / a);
    ChartPoint::new(lon, lat)
}

/// Umbilic located numerically as a simple zero of the proportionality
/// conditions e F - f E = 0, g E - e G = 0, by Newton from `guess`.
pub fn locate_umbilic(chart: &SurfaceChart, guess: ChartPoint, tol: &ToleranceConfig) -> Result<ChartPoint> {
    let resid = |p: ChartPoint| -> Result<[f64; 2]> {
        let f = crate::surface::fundamental_forms(chart, p)?;
        Ok([f.e * f.ff - f.f * f.ee, f.g * f.ee - f.e * f.gg])
    };
    let mut p = guess;
    for _ in 0..50 {
        let r0 = resid(p)?;
        let h = 1e-7;
        let ru = resid(ChartPoint::new(p.u + h, p.v))?;
        let rv = resid(ChartPoint::new(p.u, p.v + h))?;
        let rum = resid(ChartPoint::new(p.u - h, p.v))?;
        let rvm = resid(ChartPoint::new(p.u, p.v - h))?;
        let j = [
            [(ru[0] - rum[0]) / (2.0 * h), (rv[0] - rvm[0]) / (2.0 * h)],
            [(ru[1] - rum[1]) / (2.0 * h), (rv[1] - rvm[1]) / (2.0 * h)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 {
            return Err(GmcError::NoConvergence("singular umbilic Jacobian".into()));
        }
        let du = (r0[0] * j[1][1] - r0[1] * j[0][1]) / det;
        let dv = (j[0][0] * r0[1] - j[1][0] * r0[0]) / det;
        p = ChartPoint::new(p.u - du, p.v - dv);
        if du.hypot(dv) < 1e-15 {
            break;
        }
    }
    let geo = chart.geometry(p, tol)?;
    let cd = geo.curvature;
    if (cd.k2 - cd.k1).abs() > 1e-6 * (cd.k1.abs() + cd.k2.abs()) {
        return Err(GmcError::NoConvergence("umbilic search did not converge".into()));
    }
    Ok(p)
}

/// GMC classification of each umbilic from its reduced cubic jet.
pub fn ellipsoid_umbilic_types(a: f64, b: f64, c: f64, tol: &ToleranceConfig) -> Result<Vec<UmbilicClassification>> {
    let chart = SurfaceChart::ellipsoid(a, b, c, EllipsoidCoords::Geographic)?;
    ellipsoid_umbilics(a, b, c)?
        .iter()
        .map(|x| {
            let p = geographic_point(a, b, c, x);
            let chart = orient_positive(&chart, p, tol)?;
            let red = reduce_to_monge_jet(&chart, p, tol)?;
            Ok(classify_gmc_umbilic(&red.jet, tol))
        })
        .collect()
}

/// S1 = int_{-b^2}^{-c^2} and S2 = int_{-a^2}^{-b^2} of (-x)^{1/4}/sqrt|h(x)|
/// by tanh-sinh, with the endpoint factors of h formed from exact distances.
pub fn ellipsoid_s1_s2(a: f64, b: f64, c: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    check_axes(a, b, c)?;
    let (a2, b2, c2) = (a * a, b * b, c * c);
    // On (-b^2, -c^2): |h| = (x + a^2) (x + b^2) (-c^2 - x).
    let s1 = tanh_sinh(
        |x, dl, dr| (-x).powf(0.25) / ((x + a2) * dl * dr).sqrt(),
        -b2,
        -c2,
        cfg,
    )?
    .value;
    // On (-a^2, -b^2): |h| = (x + a^2) (-b^2 - x) (-c^2 - x).
    let s2 = tanh_sinh(
        |x, dl, dr| (-x).powf(0.25) / (dl * dr * (-c2 - x)).sqrt(),
        -a2,
        -b2,
        cfg,
    )?
    .value;
    Ok((s1, s2))
}

/// S1, S2 via the substitution t^2 = distance to the endpoints (composite Gauss).
pub fn ellipsoid_s1_s2_alt(a: f64, b: f64, c: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    check_axes(a, b, c)?;
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let s1 = substituted_gauss(
        |x, dl, dr| (-x).powf(0.25) / ((x + a2) * dl * dr).sqrt(),
        -b2,
        -c2,
        2,
        cfg.gauss_panels,
    );
    let s2 = substituted_gauss(
        |x, dl, dr| (-x).powf(0.25) / (dl * dr * (-c2 - x)).sqrt(),
        -a2,
        -b2,
        2,
        cfg.gauss_panels,
    );
    Ok((s1, s2))
}

pub fn ellipsoid_data(a: f64, b: f64, c: f64, cfg: &QuadConfig) -> Result<EllipsoidData> {
    let umbilics = ellipsoid_umbilics(a, b, c)?;
    let (s1, s2) = ellipsoid_s1_s2(a, b, c, cfg)?;
    let (s1_alt, s2_alt) = ellipsoid_s1_s2_alt(a, b, c, cfg)?;
    let rho = s2 / s1;
    let (nr, dist) = nearest_rational(rho, 64);
    Ok(EllipsoidData {
        a,
        b,
        c,
        umbilics,
        s1,
        s2,
        rho,
        s1_alt,
        s2_alt,
        continued_fraction: continued_fraction(rho, 10),
        nearest_rational: nr,
        nearest_rational_distance: dist,
    })
}

/// Sigma coordinates of a triaxial ellipsoid. The unbounded lifts are
/// functions of the angular chart coordinates (beta, gamma); one quarter
/// period of gamma (beta) corresponds to S1 (S2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaCoords {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SigmaCoords {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        check_axes(a, b, c)?;
        Ok(Self { a, b, c })
    }

    fn gauss(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let panels = ((x.abs() / 0.2).ceil() as usize).max(1);
        composite_gauss(f, 0.0, x, panels, 20)
    }

    /// Lift of sigma_1 along gamma: increases by S1 per quarter turn.
    pub fn sigma1_lift(&self, gamma: f64) -> f64 {
        let (a2, b2, c2) = (self.a * self.a, self.b * self.b, self.c * self.c);
        Self::gauss(
            |g| {
                let s = g.sin();
                let u = -b2 + (b2 - c2) * s * s;
                2.0 * (-u).powf(0.25) / (u + a2).sqrt()
            },
            gamma,
        )
    }

    /// Lift of sigma_2 along beta: increases by S2 per quarter turn.
    pub fn sigma2_lift(&self, beta: f64) -> f64 {
        let (a2, b2, c2) = (self.a * self.a, self.b * self.b, self.c * self.c);
        Self::gauss(
            |t| {
                let s = t.sin();
                let v = -a2 + (a2 - b2) * s * s;
                2.0 * (-v).powf(0.25) / (-(v + c2)).sqrt()
            },
            beta,
        )
    }

    /// sigma_1(u) = int_{-b^2}^{u} on the open interval (-b^2, -c^2).
    pub fn sigma1(&self, u: f64) -> Result<f64> {
        let (b2, c2) = (self.b * self.b, self.c * self.c);
        if !(u > -b2 && u < -c2) {
            return Err(GmcError::OutsideDomain { u, v: f64::NAN });
        }
        let gamma = ((u + b2) / (b2 - c2)).sqrt().asin();
        Ok(self.sigma1_lift(gamma))
    }

    /// sigma_2(v) = int_{-a^2}^{v} on the open interval (-a^2, -b^2).
    pub fn sigma2(&self, v: f64) -> Result<f64> {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        if !(v > -a2 && v < -b2) {
            return Err(GmcError::OutsideDomain { u: f64::NAN, v });
        }
        let beta = ((v + a2) / (a2 - b2)).sqrt().asin();
        Ok(self.sigma2_lift(beta))
    }

    /// (sigma_2 lift, sigma_1 lift) of an angular chart point (beta, gamma).
    pub fn of_angular(&self, p: ChartPoint) -> [f64; 2] {
        [self.sigma2_lift(p.u), self.sigma1_lift(p.v)]
    }
}

/// Largest deviation of a traced line from a slope +-1 line in sigma
/// coordinates, with the fitted slope sign.
pub fn sigma_line_deviation(sig: &SigmaCoords, line: &Polyline) -> (f64, f64) {
    let pts: Vec<[f64; 2]> = line.samples.iter().map(|s| sig.of_angular(s.point)).collect();
    let first = pts[0];
    let last = pts[pts.len() - 1];
    let slope = if (last[0] - first[0]) * (last[1] - first[1]) >= 0.0 { 1.0 } else { -1.0 };
    let dev = pts
        .iter()
        .map(|p| ((p[1] - first[1]) - slope * (p[0] - first[0])).abs())
        .fold(0.0, f64::max);
    (dev, slope)
}

/// Angular ellipsoid chart oriented so K, H > 0.
pub fn ellipsoid_angular_chart(a: f64, b: f64, c: f64) -> Result<SurfaceChart> {
    orient_positive(
        &SurfaceChart::ellipsoid(a, b, c, EllipsoidCoords::Angular)?,
        ChartPoint::new(0.3, 0.4),
        &ToleranceConfig::default(),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionReturn {
    /// Seeds gamma0 on the section beta = pi/2.
    pub seeds: Vec<f64>,
    /// sigma_1 displacement of one return, reduced modulo 4 S1.
    pub displacements: Vec<f64>,
    pub displacement_spread: f64,
    /// Displacement / (4 S1), reduced to [0, 1).
    pub rotation_number: f64,
    /// S2/S1 reduced to [0, 1).
    pub predicted: f64,
    /// Distance to the predicted value up to orientation (rho or 1 - rho).
    pub error: f64,
}

/// Return map of the section beta = pi/2 of the angular chart: each seed is
/// traced until beta has advanced by a full period.
pub fn ellipsoid_section_return(
    a: f64,
    b: f64,
    c: f64,
    seeds: &[f64],
    cfg: &TraceConfig,
    quad: &QuadConfig,
) -> Result<(SectionReturn, Vec<Polyline>)> {
    let chart = ellipsoid_angular_chart(a, b, c)?;
    let sig = SigmaCoords::new(a, b, c)?;
    let (s1, s2) = ellipsoid_s1_s2(a, b, c, quad)?;
    let period = 4.0 * s1;
    let event = |s: &Sample| (s.point.u - FRAC_PI_2).abs() - TAU;
    let opts = TraceOptions {
        cfg: TraceConfig {
            max_arclength: 1e3,
            ..*cfg
        },
        detect_closure: false,
        event: Some(&event),
        ..Default::default()
    };
    let mut disp = Vec::new();
    let mut lines = Vec::new();
    for &g0 in seeds {
        let line = trace_with(&chart, ChartPoint::new(FRAC_PI_2, g0), Branch::Maximal, None, &opts)?;
        if line.stop != StopReason::Event {
            return Err(GmcError::Trace(format!("section return stopped by {:?}", line.stop)));
        }
        let d = sig.sigma1_lift(line.last().point.v) - sig.sigma1_lift(g0);
        disp.push(d.rem_euclid(period));
        lines.push(line);
    }
    // Spread on the circle of length `period`.
    let d0 = disp[0];
    let spread = disp
        .iter()
        .map(|d| {
            let x = (d - d0).rem_euclid(period);
            x.min(period - x)
        })
        .fold(0.0, f64::max);
    let rot = (d0 / period).rem_euclid(1.0);
    let predicted = (s2 / s1).rem_euclid(1.0);
    let err = (rot - predicted).abs().min((1.0 - rot - predicted).abs());
    let err = err.min((rot - predicted).abs() - 1.0).abs().min(err);
    Ok((
        SectionReturn {
            seeds: seeds.to_vec(),
            displacements: disp,
            displacement_spread: spread,
            rotation_number: rot,
            predicted,
            error: err,
        },
        lines,
    ))
}

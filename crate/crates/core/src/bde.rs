//! The binary differential equation of the GMC foliations at a point.

use serde::{Deserialize, Serialize};

use crate::config::ToleranceConfig;
use crate::surface::{CurvatureData, FundamentalForms, LocalGeometry, Region};
use crate::{GmcError, Result};

/// Lq dv^2 + 2 Mq du dv + Nq du^2 = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCoeffs {
    #[serde(rename = "Lq")]
    pub lq: f64,
    #[serde(rename = "Mq")]
    pub mq: f64,
    #[serde(rename = "Nq")]
    pub nq: f64,
}

impl QuadraticCoeffs {
    pub fn discriminant(&self) -> f64 {
        self.mq * self.mq - self.lq * self.nq
    }

    /// Value of the form on the chart vector t = (du, dv).
    pub fn eval(&self, t: [f64; 2]) -> f64 {
        self.lq * t[1] * t[1] + 2.0 * self.mq * t[0] * t[1] + self.nq * t[0] * t[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.lq.abs().max(self.mq.abs()).max(self.nq.abs())
    }
}

/// Homogeneous quartic sum A_ij du^i dv^j (i + j = 4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoeffs {
    pub a40: f64,
    pub a31: f64,
    pub a22: f64,
    pub a13: f64,
    pub a04: f64,
}

impl QuarticCoeffs {
    pub fn eval(&self, t: [f64; 2]) -> f64 {
        let (x, y) = (t[0], t[1]);
        self.a40 * x.powi(4)
            + self.a31 * x.powi(3) * y
            + self.a22 * x * x * y * y
            + self.a13 * x * y.powi(3)
            + self.a04 * y.powi(4)
    }

    /// Largest single term on the vector t.
    pub fn max_term(&self, t: [f64; 2]) -> f64 {
        let (x, y) = (t[0].abs(), t[1].abs());
        [
            self.a40.abs() * x.powi(4),
            self.a31.abs() * x.powi(3) * y,
            self.a22.abs() * x * x * y * y,
            self.a13.abs() * x * y.powi(3),
            self.a04.abs() * y.powi(4),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Minimal,
    Maximal,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Minimal => -1.0,
            Branch::Maximal => 1.0,
        }
    }

    pub fn other(self) -> Branch {
        match self {
            Branch::Minimal => Branch::Maximal,
            Branch::Maximal => Branch::Minimal,
        }
    }

    pub fn from_torsion(tau: f64) -> Branch {
        if tau < 0.0 {
            Branch::Minimal
        } else {
            Branch::Maximal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    /// (du, dv) with unit first-form length.
    pub ratio: [f64; 2],
    pub branch: Branch,
    pub tau_g: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionPair {
    pub minimal: Direction,
    pub maximal: Direction,
}

impl DirectionPair {
    pub fn get(&self, branch: Branch) -> &Direction {
        match branch {
            Branch::Minimal => &self.minimal,
            Branch::Maximal => &self.maximal,
        }
    }
}

pub fn gmc_quadratic(ff: &FundamentalForms, cd: &CurvatureData) -> Result<QuadraticCoeffs> {
    if cd.region == Region::Hyperbolic {
        return Err(GmcError::Hyperbolic { k: cd.k });
    }
    let sk = cd.sqrt_k();
    Ok(QuadraticCoeffs {
        lq: ff.g - sk * ff.gg,
        mq: ff.f - sk * ff.ff,
        nq: ff.e - sk * ff.ee,
    })
}

pub fn quartic_coeffs(ff: &FundamentalForms) -> QuarticCoeffs {
    let (ee, fff, gg, e, f, g) = (ff.ee, ff.ff, ff.gg, ff.e, ff.f, ff.g);
    let w = ee * gg - fff * fff;
    let d = e * g - f * f;
    QuarticCoeffs {
        a40: e * e * w - ee * ee * d,
        a31: 4.0 * e * f * w - 4.0 * ee * fff * d,
        a22: 6.0 * f * f * ee * gg - 6.0 * e * g * fff * fff,
        a13: 4.0 * f * g * w - 4.0 * fff * gg * d,
        a04: g * g * w - gg * gg * d,
    }
}

/// Quarter turn in the tangent plane, in the first-form metric, for a chart
/// that is positively oriented with respect to the normal.
pub fn quarter_turn(ff: &FundamentalForms, t: [f64; 2]) -> [f64; 2] {
    let s = ff.det_first().sqrt();
    [
        (-ff.ff * t[0] - ff.gg * t[1]) / s,
        (ff.ee * t[0] + ff.ff * t[1]) / s,
    ]
}

/// Geodesic torsion of the chart direction `t`; `handed` is +1 when the
/// normal is along x_u cross x_v and -1 otherwise.
pub fn torsion_of(ff: &FundamentalForms, t: [f64; 2], handed: f64) -> Result<f64> {
    let n2 = ff.first(t, t);
    if !(n2 > 0.0) {
        return Err(GmcError::ZeroDirection);
    }
    Ok(handed * ff.second(t, quarter_turn(ff, t)) / n2)
}

pub fn normal_curvature(ff: &FundamentalForms, t: [f64; 2]) -> Result<f64> {
    let n2 = ff.first(t, t);
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(GmcError::ZeroDirection);
    }
    Ok(ff.second(t, t) / n2)
}

fn unit(ff: &FundamentalForms, t: [f64; 2]) -> Result<[f64; 2]> {
    let n2 = ff.first(t, t);
    if !(n2 > 0.0) {
        return Err(GmcError::ZeroDirection);
    }
    let n = n2.sqrt();
    Ok([t[0] / n, t[1] / n])
}

fn canonical_sign(t: [f64; 2]) -> [f64; 2] {
    if t[0] < 0.0 || (t[0] == 0.0 && t[1] < 0.0) {
        [-t[0], -t[1]]
    } else {
        t
    }
}

/// Unit principal directions (minimal, maximal).
pub fn principal_directions(
    ff: &FundamentalForms,
    cd: &CurvatureData,
) -> Result<([f64; 2], [f64; 2])> {
    if cd.umbilic {
        return Err(GmcError::Umbilic);
    }
    let w = ff.det_first();
    let s = [
        [(ff.gg * ff.e - ff.ff * ff.f) / w, (ff.gg * ff.f - ff.ff * ff.g) / w],
        [(ff.ee * ff.f - ff.ff * ff.e) / w, (ff.ee * ff.g - ff.ff * ff.f) / w],
    ];
    let eigvec = |k: f64| -> Result<[f64; 2]> {
        let r0 = [s[0][0] - k, s[0][1]];
        let r1 = [s[1][0], s[1][1] - k];
        let (n0, n1) = (r0[0].hypot(r0[1]), r1[0].hypot(r1[1]));
        let v = if n0 >= n1 { [-r0[1], r0[0]] } else { [-r1[1], r1[0]] };
        Ok(canonical_sign(unit(ff, v)?))
    };
    Ok((eigvec(cd.k1)?, eigvec(cd.k2)?))
}

/// Angle from the minimal principal direction to a GMC direction.
pub fn gmc_angle(cd: &CurvatureData) -> Result<f64> {
    if cd.umbilic {
        return Err(GmcError::Umbilic);
    }
    if cd.k < 0.0 {
        return Err(GmcError::Hyperbolic { k: cd.k });
    }
    if cd.k1 < 0.0 || cd.k2 <= 0.0 {
        return Err(GmcError::Orientation(format!(
            "principal curvatures must be positive, got k1={}, k2={}",
            cd.k1, cd.k2
        )));
    }
    Ok((cd.k1 / cd.k2).powf(0.25).atan())
}

/// Closed-form geodesic torsion of a GMC direction on the given branch.
pub fn geodesic_torsion(cd: &CurvatureData, branch: Branch) -> Result<f64> {
    if cd.k < 0.0 {
        return Err(GmcError::Hyperbolic { k: cd.k });
    }
    let sk = cd.k.sqrt();
    let excess = 2.0 * cd.h - 2.0 * sk;
    if excess < -1e-10 * cd.h.abs().max(1.0) {
        return Err(GmcError::Orientation(format!(
            "2H - 2 sqrt(K) = {excess} < 0; normal is not normalized"
        )));
    }
    Ok(branch.sign() * sk.sqrt() * excess.max(0.0).sqrt())
}

/// Both root directions of the quadratic, unnormalized and in the order
/// produced by the stable formula.
pub fn quadratic_roots(q: &QuadraticCoeffs) -> Result<([f64; 2], [f64; 2])> {
    let d = q.discriminant();
    if d < 0.0 {
        return Err(GmcError::Consistency(format!(
            "negative discriminant {d}"
        )));
    }
    // Roots [Lq : r] and [r : Nq] with r the larger-magnitude root numerator.
    let sgn = if q.mq >= 0.0 { 1.0 } else { -1.0 };
    let r = -(q.mq + sgn * d.sqrt());
    if r == 0.0 {
        return Err(GmcError::Parabolic { k: 0.0 });
    }
    Ok(([q.lq, r], [r, q.nq]))
}

/// The two GMC directions at a point with given forms, for a chart that is
/// positively oriented relative to the normal.
pub fn gmc_directions(
    ff: &FundamentalForms,
    cd: &CurvatureData,
    tol: &ToleranceConfig,
) -> Result<DirectionPair> {
    gmc_directions_handed(ff, cd, tol, 1.0)
}

pub fn gmc_directions_handed(
    ff: &FundamentalForms,
    cd: &CurvatureData,
    tol: &ToleranceConfig,
    handed: f64,
) -> Result<DirectionPair> {
    match cd.region {
        Region::Hyperbolic => return Err(GmcError::Hyperbolic { k: cd.k }),
        Region::Parabolic => return Err(GmcError::Parabolic { k: cd.k }),
        Region::Elliptic => {}
    }
    let q = gmc_quadratic(ff, cd)?;
    let scale = ff.e.abs().max(ff.f.abs()).max(ff.g.abs()).max(1e-300);
    if cd.umbilic || q.max_abs() < tol.eps_umbilic * scale {
        return Err(GmcError::Umbilic);
    }
    let theta = gmc_angle(cd)?;
    let (r1, r2) = quadratic_roots(&q)?;
    let mut out = Vec::with_capacity(2);
    for r in [r1, r2] {
        let t = canonical_sign(unit(ff, r)?);
        let tau = torsion_of(ff, t, handed)?;
        out.push(Direction {
            ratio: t,
            branch: Branch::from_torsion(tau),
            tau_g: tau,
            theta,
        });
    }
    let (a, b) = (out[0], out[1]);
    if a.branch == b.branch {
        return Err(GmcError::Consistency(format!(
            "both GMC directions have torsion of the same sign ({}, {})",
            a.tau_g, b.tau_g
        )));
    }
    Ok(if a.branch == Branch::Minimal {
        DirectionPair {
            minimal: a,
            maximal: b,
        }
    } else {
        DirectionPair {
            minimal: b,
            maximal: a,
        }
    })
}

/// GMC directions using the actual normal of a chart point.
pub fn gmc_directions_at(geo: &LocalGeometry, tol: &ToleranceConfig) -> Result<DirectionPair> {
    let handed = if geo.normal.dot(&geo.xu.cross(&geo.xv)) >= 0.0 {
        1.0
    } else {
        -1.0
    };
    gmc_directions_handed(&geo.forms, &geo.curvature, tol, handed)
}

/// Handedness of the chart relative to the normal at a chart point.
pub fn handedness(geo: &LocalGeometry) -> f64 {
    if geo.normal.dot(&geo.xu.cross(&geo.xv)) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

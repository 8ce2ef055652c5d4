//! Tracing of GMC lines, transition-map derivatives and cycle checks.

use serde::{Deserialize, Serialize};

use crate::bde::{gmc_directions_at, Branch};
use crate::config::{ToleranceConfig, TraceConfig};
use crate::ode::{dopri_step, integrate, step_factor, OdeOptions, Solution};
use crate::surface::{ChartPoint, CurvatureData, LocalGeometry, SurfaceChart, Vec3};
use crate::{GmcError, Result};

/// One sample of a traced line with its Darboux frame.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sample {
    pub point: ChartPoint,
    pub s: f64,
    /// Unit chart tangent (du/ds, dv/ds).
    pub tangent: [f64; 2],
    pub position: Vec3,
    pub t: Vec3,
    /// N x T.
    pub conormal: Vec3,
    pub normal: Vec3,
    pub curvature: CurvatureData,
    pub tau_g: f64,
    pub k_g: f64,
    pub k_n: f64,
    /// Derivative of sqrt(K) along the unit conormal.
    pub sqrt_k_v: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxLength,
    DomainExit,
    Parabolic,
    /// Reached the parabolic set tangentially (no transversal continuation).
    Tangential,
    Umbilic,
    Closed,
    Event,
    Singular,
    BranchAmbiguity,
}

/// Foliation switch at the parabolic set during an extended trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub index: usize,
    pub s: f64,
    pub point: ChartPoint,
    pub transversal: bool,
}

/// Samples alternate between step ends (even indices) and step midpoints
/// (odd indices), so every arc between even indices has Simpson panels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polyline {
    pub samples: Vec<Sample>,
    pub branch: Branch,
    pub stop: StopReason,
    pub switches: Vec<SwitchEvent>,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        self.samples.last().map(|s| s.s).unwrap_or(0.0)
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("polyline is never empty")
    }

    /// Indices of step-end samples.
    pub fn knots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.samples.len()).step_by(2)
    }
}

/// What to do when an extended trace reaches the parabolic set tangentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TangentialPolicy {
    Terminate,
    Reflect,
}

pub struct TraceOptions<'a> {
    pub cfg: TraceConfig,
    pub tol: ToleranceConfig,
    /// Continue across transversal parabolic points on the other foliation.
    pub extended: bool,
    pub tangential: TangentialPolicy,
    /// Stop on closure near the seed.
    pub detect_closure: bool,
    /// Stop when this function changes sign strictly between two samples.
    pub event: Option<&'a dyn Fn(&Sample) -> f64>,
}

impl Default for TraceOptions<'_> {
    fn default() -> Self {
        Self {
            cfg: TraceConfig::default(),
            tol: ToleranceConfig::default(),
            extended: false,
            tangential: TangentialPolicy::Terminate,
            detect_closure: true,
            event: None,
        }
    }
}

impl<'a> TraceOptions<'a> {
    pub fn new(cfg: TraceConfig) -> Self {
        Self {
            cfg,
            ..Default::default()
        }
    }
}

fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> Result<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(GmcError::Consistency("singular 2x2 system".into()));
    }
    Ok([
        (b[0] * m[1][1] - b[1] * m[0][1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    ])
}

/// Derivative dt/ds of the unit GMC direction field along itself.
pub fn direction_derivative(geo: &LocalGeometry, t: [f64; 2]) -> Result<[f64; 2]> {
    let f = &geo.forms;
    let k = geo.curvature.k;
    if !(k > 0.0) {
        return Err(GmcError::Parabolic { k });
    }
    let sk = k.sqrt();
    let dsk = [geo.grad_k[0] / (2.0 * sk), geo.grad_k[1] / (2.0 * sk)];
    let g = &geo.forms_grad;
    let along = |grad: [f64; 2]| grad[0] * t[0] + grad[1] * t[1];
    let (d_ee, d_ff, d_gg) = (along(g[0]), along(g[1]), along(g[2]));
    let (d_e, d_f, d_g) = (along(g[3]), along(g[4]), along(g[5]));
    let d_sk = along(dsk);
    let lq = f.g - sk * f.gg;
    let mq = f.f - sk * f.ff;
    let nq = f.e - sk * f.ee;
    let d_lq = d_g - d_sk * f.gg - sk * d_gg;
    let d_mq = d_f - d_sk * f.ff - sk * d_ff;
    let d_nq = d_e - d_sk * f.ee - sk * d_ee;
    let dq = d_nq * t[0] * t[0] + 2.0 * d_mq * t[0] * t[1] + d_lq * t[1] * t[1];
    let di = d_ee * t[0] * t[0] + 2.0 * d_ff * t[0] * t[1] + d_gg * t[1] * t[1];
    solve2(
        [
            [nq * t[0] + mq * t[1], mq * t[0] + lq * t[1]],
            [f.ee * t[0] + f.ff * t[1], f.ff * t[0] + f.gg * t[1]],
        ],
        [-0.5 * dq, -0.5 * di],
    )
}

/// Darboux frame data (T, N x T, N, k_g, tau_g, k_n) for a curve with unit
/// chart tangent `t` and chart acceleration `delta`.
pub fn frame_quantities(
    geo: &LocalGeometry,
    t: [f64; 2],
    delta: [f64; 2],
) -> Result<(Vec3, Vec3, Vec3, f64, f64, f64)> {
    let big_t = geo.push(t);
    let n = geo.normal;
    let nt = n.cross(&big_t);
    let acc = geo.xuu * (t[0] * t[0])
        + geo.xuv * (2.0 * t[0] * t[1])
        + geo.xvv * (t[1] * t[1])
        + geo.push(delta);
    let k_g = acc.dot(&nt);
    let k_n = acc.dot(&n);
    let tau = geo.geodesic_torsion_of(t)?;
    Ok((big_t, nt, n, k_g, tau, k_n))
}

/// Derivative of sqrt(K) along a chart direction `c`.
pub fn sqrt_k_conormal_derivative(geo: &LocalGeometry, c: [f64; 2]) -> Result<f64> {
    let g = geo.sqrt_k_grad()?;
    Ok(g[0] * c[0] + g[1] * c[1])
}

fn sample_at(geo: &LocalGeometry, t: [f64; 2], s: f64, branch: Branch) -> Result<Sample> {
    let delta = direction_derivative(geo, t)?;
    let (big_t, nt, n, k_g, tau, k_n) = frame_quantities(geo, t, delta)?;
    let c = geo.pull(&nt);
    let sqrt_k_v = sqrt_k_conormal_derivative(geo, c)?;
    Ok(Sample {
        point: geo.point,
        s,
        tangent: t,
        position: geo.position,
        t: big_t,
        conormal: nt,
        normal: n,
        curvature: geo.curvature,
        tau_g: tau,
        k_g,
        k_n,
        sqrt_k_v,
        branch,
    })
}

/// Unit direction of `branch` at `p`, oriented along `reference` when given.
pub fn field_direction(
    chart: &SurfaceChart,
    p: ChartPoint,
    branch: Branch,
    reference: Option<[f64; 2]>,
    tol: &ToleranceConfig,
) -> Result<(LocalGeometry, [f64; 2])> {
    let geo = chart.geometry(p, tol)?;
    let pair = gmc_directions_at(&geo, tol)?;
    let mut t = pair.get(branch).ratio;
    if let Some(r) = reference {
        let ip = geo.forms.first(t, r);
        let nr = geo.forms.first(r, r).sqrt();
        if ip.abs() < 0.1 * nr {
            return Err(GmcError::BranchAmbiguity { u: p.u, v: p.v });
        }
        if ip < 0.0 {
            t = [-t[0], -t[1]];
        }
    }
    Ok((geo, t))
}

fn stop_for(err: &GmcError) -> StopReason {
    match err {
        GmcError::OutsideDomain { .. } => StopReason::DomainExit,
        GmcError::Parabolic { .. } | GmcError::Hyperbolic { .. } => StopReason::Parabolic,
        GmcError::Umbilic => StopReason::Umbilic,
        GmcError::BranchAmbiguity { .. } => StopReason::BranchAmbiguity,
        _ => StopReason::Singular,
    }
}

struct Tracer<'c, 'o> {
    chart: &'c SurfaceChart,
    opts: &'c TraceOptions<'o>,
}

impl Tracer<'_, '_> {
    fn rhs(&self, branch: Branch, reference: [f64; 2]) -> impl FnMut(f64, &[f64; 2]) -> Result<[f64; 2]> + '_ {
        move |_, y: &[f64; 2]| {
            let (_, t) = field_direction(
                self.chart,
                ChartPoint::new(y[0], y[1]),
                branch,
                Some(reference),
                &self.opts.tol,
            )?;
            Ok(t)
        }
    }

    /// Sample after a step of size h from `start`.
    fn advance(&self, start: &Sample, h: f64) -> Result<(Sample, f64)> {
        let mut f = self.rhs(start.branch, start.tangent);
        let y0 = [start.point.u, start.point.v];
        let step = dopri_step(
            &mut f,
            0.0,
            &y0,
            &start.tangent,
            h,
            self.opts.cfg.rk_tol,
            self.opts.cfg.rk_tol,
        )?;
        let p = ChartPoint::new(step.y[0], step.y[1]);
        let (geo, t) = field_direction(self.chart, p, start.branch, Some(start.tangent), &self.opts.tol)?;
        Ok((sample_at(&geo, t, start.s + h, start.branch)?, step.err))
    }

    fn events(&self, s: &Sample, seed: &Sample) -> [f64; 4] {
        let cfg = &self.opts.cfg;
        let cd = &s.curvature;
        let gap = (cd.k2 - cd.k1) / (cd.k1.abs() + cd.k2.abs()).max(1e-300);
        let closure = if self.opts.detect_closure {
            (s.position - seed.position).dot(&seed.t)
        } else {
            0.0
        };
        let user = self.opts.event.map(|e| e(s)).unwrap_or(0.0);
        [cd.k - cfg.stop_k, gap - cfg.stop_umbilic, closure, user]
    }

    /// Largest h' in (0, h] at which event `which` reaches zero.
    fn locate(&self, start: &Sample, h: f64, which: usize, seed: &Sample) -> Result<Sample> {
        let g0 = self.events(start, seed)[which];
        let (mut lo, mut hi) = (0.0, h);
        let mut best = None;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            match self.advance(start, mid) {
                Ok((smp, _)) => {
                    let g = self.events(&smp, seed)[which];
                    if (g > 0.0) == (g0 > 0.0) && g != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                        best = Some(smp);
                    }
                }
                Err(_) => hi = mid,
            }
            if hi - lo < 1e-13 * (1.0 + start.s.abs()) {
                break;
            }
        }
        match best {
            Some(s) => Ok(s),
            None => Ok(self.advance(start, hi)?.0),
        }
    }

    fn push_step(&self, line: &mut Polyline, start: &Sample, end: Sample) -> Result<()> {
        let h = end.s - start.s;
        let mid = self.advance(start, 0.5 * h)?.0;
        line.samples.push(mid);
        line.samples.push(end);
        Ok(())
    }

    /// Switches to the other foliation at a parabolic arrival.
    fn switch(&self, cur: &Sample) -> Result<(Sample, bool)> {
        let tol = &self.opts.tol;
        let geo = self.chart.geometry(cur.point, tol)?;
        let gk = geo.grad_k;
        let t = crate::parabolic::asymptotic_direction(&geo.forms);
        let m = (gk[0] * t[0] + gk[1] * t[1]).abs()
            / (gk[0].hypot(gk[1]) * t[0].hypot(t[1])).max(1e-300);
        let transversal = m > 1e-3;
        if !transversal && self.opts.tangential == TangentialPolicy::Terminate {
            return Err(GmcError::Trace("tangential arrival".into()));
        }
        let other = cur.branch.other();
        let pair = gmc_directions_at(&geo, tol)?;
        let mut nt = pair.get(other).ratio;
        if gk[0] * nt[0] + gk[1] * nt[1] < 0.0 {
            nt = [-nt[0], -nt[1]];
        }
        Ok((sample_at(&geo, nt, cur.s, other)?, transversal))
    }

    fn run(&self, seed: Sample, max_len: f64) -> Polyline {
        let cfg = &self.opts.cfg;
        let mut line = Polyline {
            samples: vec![seed],
            branch: seed.branch,
            stop: StopReason::MaxLength,
            switches: Vec::new(),
        };
        let mut cur = seed;
        let mut h = cfg.step_target;
        let h_min = 1e-12;
        let mut left_seed = false;
        let mut since_switch = f64::INFINITY;
        loop {
            if cur.s >= max_len {
                line.stop = StopReason::MaxLength;
                break;
            }
            let hs = h.min(max_len - cur.s).min(cfg.step_target);
            let attempt = self.advance(&cur, hs);
            let (next, err) = match attempt {
                Ok(v) => v,
                Err(e) => {
                    h = hs * 0.25;
                    if h < h_min {
                        let reason = stop_for(&e);
                        if reason == StopReason::Parabolic && self.opts.extended {
                            match self.switch(&cur) {
                                Ok((sw, transversal)) => {
                                    line.switches.push(SwitchEvent {
                                        index: line.samples.len() - 1,
                                        s: cur.s,
                                        point: cur.point,
                                        transversal,
                                    });
                                    // Replace the arrival knot by the switched one.
                                    *line.samples.last_mut().expect("non-empty") = sw;
                                    cur = sw;
                                    h = cfg.step_target * 1e-3;
                                    since_switch = 0.0;
                                    continue;
                                }
                                Err(_) => {
                                    line.stop = StopReason::Tangential;
                                    break;
                                }
                            }
                        }
                        line.stop = reason;
                        break;
                    }
                    continue;
                }
            };
            if err > 1.0 {
                h = hs * step_factor(err);
                continue;
            }
            // Event detection on the accepted step.
            let g0 = self.events(&cur, &seed);
            let g1 = self.events(&next, &seed);
            let mut fired: Option<(usize, StopReason)> = None;
            if g1[0] <= 0.0 && g0[0] > 0.0 && since_switch > 0.0 {
                fired = Some((0, StopReason::Parabolic));
            } else if g1[1] <= 0.0 && g0[1] > 0.0 {
                fired = Some((1, StopReason::Umbilic));
            } else if self.opts.detect_closure
                && left_seed
                && g0[2] < 0.0
                && g1[2] >= 0.0
            {
                fired = Some((2, StopReason::Closed));
            } else if self.opts.event.is_some() && g0[3] * g1[3] < 0.0 {
                fired = Some((3, StopReason::Event));
            }
            if let Some((which, reason)) = fired {
                let end = match self.locate(&cur, hs, which, &seed) {
                    Ok(e) => e,
                    Err(_) => next,
                };
                if reason == StopReason::Closed {
                    let dist = (end.position - seed.position).norm();
                    let angle = end.t.dot(&seed.t).clamp(-1.0, 1.0).acos();
                    if dist > cfg.closure_tol || angle > 0.05 {
                        // Passed the seed plane away from the seed.
                        if self.push_step(&mut line, &cur, next).is_err() {
                            line.stop = StopReason::Singular;
                            break;
                        }
                        cur = next;
                        h = hs * step_factor(err);
                        continue;
                    }
                }
                if self.push_step(&mut line, &cur, end).is_err() {
                    line.stop = StopReason::Singular;
                    break;
                }
                if reason == StopReason::Parabolic && self.opts.extended {
                    let endc = *line.last();
                    match self.switch(&endc) {
                        Ok((sw, transversal)) => {
                            line.switches.push(SwitchEvent {
                                index: line.samples.len() - 1,
                                s: endc.s,
                                point: endc.point,
                                transversal,
                            });
                            *line.samples.last_mut().expect("non-empty") = sw;
                            cur = sw;
                            h = cfg.step_target * 1e-3;
                            since_switch = 0.0;
                            continue;
                        }
                        Err(_) => {
                            line.stop = StopReason::Tangential;
                            break;
                        }
                    }
                }
                line.stop = reason;
                break;
            }
            if self.push_step(&mut line, &cur, next).is_err() {
                line.stop = StopReason::Singular;
                break;
            }
            since_switch += hs;
            if !left_seed && (next.position - seed.position).norm() > 10.0 * cfg.closure_tol {
                left_seed = true;
            }
            cur = next;
            h = hs * step_factor(err);
        }
        line
    }
}

/// Seed sample: standalone orientation (du >= 0) unless a reference is given.
pub fn seed_sample(
    chart: &SurfaceChart,
    seed: ChartPoint,
    branch: Branch,
    reference: Option<[f64; 2]>,
    tol: &ToleranceConfig,
) -> Result<Sample> {
    let (geo, t) = field_direction(chart, seed, branch, reference, tol)?;
    sample_at(&geo, t, 0.0, branch)
}

/// Traces the GMC line of `branch` through `seed`.
pub fn trace_gmc_line(
    chart: &SurfaceChart,
    seed: ChartPoint,
    branch: Branch,
    cfg: &TraceConfig,
) -> Result<Polyline> {
    trace_with(chart, seed, branch, None, &TraceOptions::new(*cfg))
}

pub fn trace_with(
    chart: &SurfaceChart,
    seed: ChartPoint,
    branch: Branch,
    reference: Option<[f64; 2]>,
    opts: &TraceOptions<'_>,
) -> Result<Polyline> {
    opts.cfg.validate()?;
    let s0 = seed_sample(chart, seed, branch, reference, &opts.tol)?;
    Ok(Tracer { chart, opts }.run(s0, opts.cfg.max_arclength))
}

/// Extended trace: crosses the parabolic set by switching foliations.
pub fn trace_extended(
    chart: &SurfaceChart,
    seed: ChartPoint,
    branch: Branch,
    cfg: &TraceConfig,
) -> Result<Polyline> {
    let opts = TraceOptions {
        extended: true,
        ..TraceOptions::new(*cfg)
    };
    trace_with(chart, seed, branch, None, &opts)
}

/// Sub-polyline between two knots (even indices), arclength kept absolute.
pub fn arc(line: &Polyline, i0: usize, i1: usize) -> Result<Vec<Sample>> {
    if i0 % 2 != 0 || i1 % 2 != 0 || i1 < i0 || i1 >= line.samples.len() {
        return Err(GmcError::InvalidArgument(format!(
            "arc bounds must be knots: {i0}..{i1}"
        )));
    }
    Ok(line.samples[i0..=i1].to_vec())
}

/// ln of the transition-map derivative from the integral formula over an arc
/// of samples (odd positions are panel midpoints).
pub fn transition_derivative_integral(arc: &[Sample]) -> Result<f64> {
    if arc.len() % 2 == 0 {
        return Err(GmcError::InvalidArgument("arc must have an odd sample count".into()));
    }
    if arc.len() == 1 {
        return Ok(0.0);
    }
    let sign = arc[0].tau_g.signum();
    let integrand = |s: &Sample| -> Result<f64> {
        if s.tau_g.signum() != sign || s.tau_g == 0.0 {
            return Err(GmcError::Consistency("geodesic torsion changes sign on the arc".into()));
        }
        let sk = s.curvature.sqrt_k();
        Ok(s.sqrt_k_v / (2.0 * s.tau_g) + s.k_g / s.tau_g * (s.curvature.h - sk))
    };
    let mut total = 0.0;
    for w in (0..arc.len() - 1).step_by(2) {
        let (a, m, b) = (&arc[w], &arc[w + 1], &arc[w + 2]);
        let h = b.s - a.s;
        total += h / 6.0 * (integrand(a)? + 4.0 * integrand(m)? + integrand(b)?);
    }
    let t0 = arc[0].tau_g;
    let t1 = arc[arc.len() - 1].tau_g;
    Ok(total - 0.5 * (t1 / t0).ln())
}

/// Arclength-parametrized geodesic launched from `p` along the chart vector
/// `c`, covering [-span, span].
pub struct GeodesicSection {
    chart: SurfaceChart,
    fwd: Solution<4>,
    bwd: Solution<4>,
    tol: ToleranceConfig,
}

fn geodesic_rhs<'a>(
    chart: &'a SurfaceChart,
    tol: &'a ToleranceConfig,
) -> impl FnMut(f64, &[f64; 4]) -> Result<[f64; 4]> + 'a {
    move |_, y: &[f64; 4]| {
        let geo = chart.geometry(ChartPoint::new(y[0], y[1]), tol)?;
        let t = [y[2], y[3]];
        let q = geo.xuu * (t[0] * t[0]) + geo.xuv * (2.0 * t[0] * t[1]) + geo.xvv * (t[1] * t[1]);
        let b = [-geo.xu.dot(&q), -geo.xv.dot(&q)];
        let d = crate::surface::solve_first(&geo.forms, b);
        Ok([y[2], y[3], d[0], d[1]])
    }
}

impl GeodesicSection {
    pub fn new(
        chart: &SurfaceChart,
        p: ChartPoint,
        c: [f64; 2],
        span: f64,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let opts = OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: span * 1e-2,
            h_max: span / 8.0,
            ..Default::default()
        };
        let y0 = [p.u, p.v, c[0], c[1]];
        let fwd = integrate(geodesic_rhs(chart, tol), 0.0, y0, span, &opts)?;
        let bwd = integrate(geodesic_rhs(chart, tol), 0.0, y0, -span, &opts)?;
        Ok(Self {
            chart: chart.clone(),
            fwd,
            bwd,
            tol: *tol,
        })
    }

    pub fn span(&self) -> f64 {
        *self.fwd.t.last().expect("non-empty")
    }

    pub fn state(&self, sigma: f64) -> [f64; 4] {
        if sigma >= 0.0 {
            self.fwd.eval(sigma)
        } else {
            self.bwd.eval(sigma)
        }
    }

    pub fn point(&self, sigma: f64) -> ChartPoint {
        let y = self.state(sigma);
        ChartPoint::new(y[0], y[1])
    }

    /// Space position and unit space tangent at `sigma`.
    pub fn frame(&self, sigma: f64) -> Result<(Vec3, Vec3, Vec3)> {
        let y = self.state(sigma);
        let geo = self.chart.geometry(ChartPoint::new(y[0], y[1]), &self.tol)?;
        Ok((geo.position, geo.push([y[2], y[3]]).normalize(), geo.normal))
    }

    /// Parameter of the section point nearest to `x`.
    pub fn nearest(&self, x: &Vec3, guess: f64) -> Result<f64> {
        let mut sigma = guess;
        let lim = self.span();
        for _ in 0..40 {
            let (pos, tan, _) = self.frame(sigma)?;
            let step = (x - pos).dot(&tan);
            sigma = (sigma + step).clamp(-lim, lim);
            if step.abs() < 1e-15 {
                break;
            }
        }
        Ok(sigma)
    }

    /// Signed side of `x` relative to the section, measured along
    /// (section tangent) x N at the nearest point.
    pub fn side(&self, x: &Vec3, guess: f64) -> Result<(f64, f64)> {
        let sigma = self.nearest(x, guess)?;
        let (pos, tan, n) = self.frame(sigma)?;
        Ok(((x - pos).dot(&tan.cross(&n)), sigma))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionReport {
    pub ln_derivative_integral: f64,
    pub ln_derivative_numeric: f64,
    /// ln of (tau_g(s1)/tau_g(s0))^{-1/2}.
    pub boundary_factor: f64,
    pub agreement: f64,
    /// Central differences for offsets eps, eps/2, eps/4.
    pub derivative_estimates: [f64; 3],
    pub richardson_ratio: f64,
}

/// Finite-difference oracle: traces neighbouring lines from a geodesic
/// section at the arc start to one at the arc end. Returns the central
/// difference quotient for the given offset.
pub fn transition_derivative_numeric(
    chart: &SurfaceChart,
    arc: &[Sample],
    offset: f64,
    cfg: &TraceConfig,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let first = &arc[0];
    let last = &arc[arc.len() - 1];
    if arc.len() == 1 || last.s - first.s == 0.0 {
        return Ok(0.0);
    }
    let geo0 = chart.geometry(first.point, tol)?;
    let geo1 = chart.geometry(last.point, tol)?;
    let c0 = geo0.pull(&first.conormal);
    let c1 = geo1.pull(&last.conormal);
    let s0 = GeodesicSection::new(chart, first.point, c0, 1.5 * offset, tol)?;
    let s1 = GeodesicSection::new(chart, last.point, c1, 40.0 * offset, tol)?;
    let len = last.s - first.s;
    let mut arrivals = [0.0; 2];
    for (k, eps) in [offset, -offset].into_iter().enumerate() {
        let start = s0.point(eps);
        let guess = std::cell::Cell::new(0.0);
        let event = |s: &Sample| -> f64 {
            match s1.side(&s.position, guess.get()) {
                Ok((side, sig)) => {
                    guess.set(sig);
                    // Only count crossings near the far end of the arc and
                    // within the section's extent.
                    if (s.s - len).abs() > 0.5 * len.max(10.0 * offset) || sig.abs() >= s1.span() {
                        -1.0
                    } else {
                        side
                    }
                }
                Err(_) => -1.0,
            }
        };
        let opts = TraceOptions {
            cfg: TraceConfig {
                max_arclength: 1.5 * len + 10.0 * offset,
                ..*cfg
            },
            tol: *tol,
            detect_closure: false,
            event: Some(&event),
            ..Default::default()
        };
        // The side function is negative before the crossing by construction.
        let line = trace_with(chart, start, first.branch, Some(first.tangent), &opts)?;
        if line.stop != StopReason::Event {
            return Err(GmcError::Trace(format!(
                "neighbour line did not reach the far section ({:?})",
                line.stop
            )));
        }
        arrivals[k] = s1.nearest(&line.last().position, guess.get())?;
    }
    Ok((arrivals[0] - arrivals[1]) / (2.0 * offset))
}

/// Integral and numeric transition derivatives with a Richardson check.
pub fn transition_report(
    chart: &SurfaceChart,
    arc: &[Sample],
    offset: f64,
    cfg: &TraceConfig,
    tol: &ToleranceConfig,
) -> Result<TransitionReport> {
    let integral = transition_derivative_integral(arc)?;
    let t0 = arc[0].tau_g;
    let t1 = arc[arc.len() - 1].tau_g;
    let mut d = [0.0; 3];
    for (i, e) in [offset, offset / 2.0, offset / 4.0].into_iter().enumerate() {
        d[i] = transition_derivative_numeric(chart, arc, e, cfg, tol)?;
    }
    let numeric = if d[2] > 0.0 { d[2].ln() } else { f64::NAN };
    // Extrapolated value from the two finest differences.
    let extrapolated = (4.0 * d[2] - d[1]) / 3.0;
    let ln_num = if extrapolated > 0.0 { extrapolated.ln() } else { numeric };
    let ratio = (d[0] - d[1]) / (d[1] - d[2]);
    Ok(TransitionReport {
        ln_derivative_integral: integral,
        ln_derivative_numeric: ln_num,
        boundary_factor: -0.5 * (t1 / t0).ln(),
        agreement: (ln_num - integral).abs() / integral.abs().max(1.0),
        derivative_estimates: d,
        richardson_ratio: ratio,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleReport {
    pub length: f64,
    pub ln_return_derivative_integral: f64,
    pub ln_return_derivative_numeric: f64,
    pub hyperbolic: bool,
    pub conclusive: bool,
}

/// Hyperbolicity of a closed trace from both derivative computations.
pub fn cycle_hyperbolicity(
    chart: &SurfaceChart,
    closed: &Polyline,
    offset: f64,
    cfg: &TraceConfig,
    tol: &ToleranceConfig,
    threshold: f64,
) -> Result<CycleReport> {
    if closed.stop != StopReason::Closed {
        return Err(GmcError::InvalidArgument("polyline is not closed".into()));
    }
    let integral = transition_derivative_integral(&closed.samples)?;
    let d = transition_derivative_numeric(chart, &closed.samples, offset, cfg, tol)?;
    let numeric = d.ln();
    let hyp_i = integral.abs() > threshold;
    let hyp_n = numeric.abs() > threshold;
    let conclusive = hyp_i == hyp_n && (!hyp_i || integral.signum() == numeric.signum());
    Ok(CycleReport {
        length: closed.length(),
        ln_return_derivative_integral: integral,
        ln_return_derivative_numeric: numeric,
        hyperbolic: hyp_i && hyp_n && conclusive,
        conclusive,
    })
}

/// Outcome of a line shot inward from a circle around an umbilic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShotOutcome {
    /// Came within the capture radius of the umbilic.
    Reached,
    /// Left the disk; signed closest-approach moment (p - c) x t.
    Exit { moment: f64, closest: f64 },
    /// Could not be launched inward (line tangent to the circle).
    Tangent,
}

/// Shoots the `branch` line through the point at angle `phi` on the circle of
/// `radius` about `center`, oriented inward. Lines closer than `capture` to
/// the center count as reaching it.
pub fn shoot(
    chart: &SurfaceChart,
    center: ChartPoint,
    radius: f64,
    capture: f64,
    phi: f64,
    branch: Branch,
    tol: &ToleranceConfig,
) -> ShotOutcome {
    let start = ChartPoint::new(center.u + radius * phi.cos(), center.v + radius * phi.sin());
    let dist = |s: &Sample| (s.point.u - center.u).hypot(s.point.v - center.v);
    // The start lies on the circle; only later crossings count.
    let exit = |s: &Sample| if s.s < 0.1 * radius { -1.0 } else { dist(s) - radius };
    let opts = TraceOptions {
        cfg: TraceConfig {
            step_target: radius / 16.0,
            max_arclength: 20.0 * radius,
            stop_umbilic: 1e-3 * capture / radius,
            ..Default::default()
        },
        tol: *tol,
        detect_closure: false,
        event: Some(&exit),
        ..Default::default()
    };
    let inward = [-phi.cos(), -phi.sin()];
    let line = match trace_with(chart, start, branch, Some(inward), &opts) {
        Ok(l) => l,
        Err(GmcError::BranchAmbiguity { .. }) => return ShotOutcome::Tangent,
        Err(_) => return ShotOutcome::Reached,
    };
    let mut best = (f64::INFINITY, 0.0);
    for s in &line.samples {
        let (x, y) = (s.point.u - center.u, s.point.v - center.v);
        let d = x.hypot(y);
        if d < best.0 {
            let n = s.tangent[0].hypot(s.tangent[1]);
            best = (d, (x * s.tangent[1] - y * s.tangent[0]) / n);
        }
    }
    if best.0 < capture {
        return ShotOutcome::Reached;
    }
    match line.stop {
        StopReason::Event => ShotOutcome::Exit {
            moment: best.1,
            closest: best.0,
        },
        StopReason::BranchAmbiguity => ShotOutcome::Tangent,
        _ => ShotOutcome::Reached,
    }
}

/// Umbilic separatrices of one foliation found by shooting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatrixScan {
    /// Angles of isolated separatrices, located to the angular tolerance.
    pub separatrices: Vec<f64>,
    /// Angular intervals whose lines all run into the umbilic (nodal
    /// sectors); each is bounded by two separatrices.
    pub sectors: Vec<[f64; 2]>,
}

impl SeparatrixScan {
    pub fn count(&self) -> usize {
        self.separatrices.len() + 2 * self.sectors.len()
    }
}

/// Shoots inward `branch` lines from a circle around an umbilic and locates
/// the separatrices by bisection on the side the lines pass the center.
/// Runs of captured lines that shrink with the capture radius are isolated
/// separatrices; runs that persist are nodal sectors.
pub fn separatrix_scan(
    chart: &SurfaceChart,
    center: ChartPoint,
    radius: f64,
    branch: Branch,
    samples: usize,
    angle_tol: f64,
    tol: &ToleranceConfig,
) -> SeparatrixScan {
    use std::f64::consts::TAU;
    // +1/-1 for exits passing on either side, 0 when captured.
    let class = |phi: f64, capture: f64| -> Option<i8> {
        match shoot(chart, center, radius, capture, phi, branch, tol) {
            ShotOutcome::Exit { moment, closest } if closest < 0.5 * radius => {
                Some(if moment > 0.0 { 1 } else { -1 })
            }
            ShotOutcome::Exit { .. } | ShotOutcome::Tangent => None,
            ShotOutcome::Reached => Some(0),
        }
    };
    // Boundary between `lo` (class ca) and `hi` by bisection.
    let boundary = |mut lo: f64, mut hi: f64, ca: Option<i8>, capture: f64| -> f64 {
        while hi - lo > angle_tol {
            let mid = 0.5 * (lo + hi);
            if class(mid, capture) == ca {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let coarse = 1e-4 * radius;
    let fine = 1e-7 * radius;
    let dphi = TAU / samples as f64;
    let grid: Vec<Option<i8>> = (0..samples).map(|i| class(i as f64 * dphi, coarse)).collect();
    let mut scan = SeparatrixScan {
        separatrices: Vec::new(),
        sectors: Vec::new(),
    };
    let is_exit = |c: Option<i8>| matches!(c, Some(1) | Some(-1));
    let Some(first) = grid.iter().position(|c| is_exit(*c)) else {
        return scan;
    };
    let at = |k: usize| grid[k % samples];
    let mut i = first;
    while i < first + samples {
        let mut j = i + 1;
        while at(j) == Some(0) {
            j += 1;
        }
        let (ca, cb) = (at(i), at(j));
        if is_exit(ca) && is_exit(cb) {
            let (pa, pb) = (i as f64 * dphi, j as f64 * dphi);
            if j == i + 1 {
                if ca != cb {
                    scan.separatrices.push(boundary(pa, pb, ca, coarse).rem_euclid(TAU));
                }
            } else {
                let width = |capture: f64| {
                    let l = boundary(pa, pa + dphi, ca, capture);
                    let r = boundary(pb - dphi, pb, Some(0), capture);
                    let (l2, r2) = if class(0.5 * (l + r), capture) == Some(0) {
                        (l, r)
                    } else {
                        let m = 0.5 * (pa + pb);
                        (m, m)
                    };
                    (l2, r2)
                };
                let (l1, r1) = width(coarse);
                let (l2, r2) = width(fine);
                if r2 - l2 < 0.5 * (r1 - l1) || r2 - l2 <= 2.0 * angle_tol {
                    scan.separatrices.push((0.5 * (l2 + r2)).rem_euclid(TAU));
                } else {
                    scan.sectors.push([l2.rem_euclid(TAU), r2.rem_euclid(TAU)]);
                }
            }
        }
        i = j;
    }
    scan
}

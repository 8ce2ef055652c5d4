use std::path::Path;

use gmc_core::bde::Branch;
use gmc_core::export::{polyline_csv, polylines_svg, Projection};
use gmc_core::flow::{
    arc, cycle_hyperbolicity, separatrix_scan, trace_with, transition_report, Polyline, TangentialPolicy,
    TraceOptions,
};
use gmc_core::models::{
    ellipsoid_data, ellipsoid_section_return, locate_umbilic, torus_rho_report,
};
use gmc_core::parabolic::{
    classify_parabolic_point, expansion_discrepancies, lie_cartan_parabolic_field, parabolic_curve_trace,
    parabolic_jet_at, tangential_points, MongeJet4,
};
use gmc_core::surface::{orient_positive, ChartPoint, SurfaceChart};
use gmc_core::umbilic::{classify_gmc_umbilic, delta_p, reduce_to_monge_jet, MongeJet3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

/// Everything a command produced: the JSON result and named side files.
pub struct Output {
    pub result: Value,
    pub files: Vec<(String, String)>,
}

impl Output {
    fn json(result: Value) -> Self {
        Self { result, files: Vec::new() }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable result")
}

fn chart(cfg: &RunConfig) -> Result<SurfaceChart, CliError> {
    let desc = cfg
        .chart
        .as_ref()
        .ok_or_else(|| CliError::usage("this command needs a chart (--chart or \"chart\" in --config)"))?;
    Ok(desc.build()?)
}

fn point(p: Option<[f64; 2]>) -> Result<ChartPoint, CliError> {
    let p = p.ok_or_else(|| CliError::usage("a chart point is required (--point u,v)"))?;
    Ok(ChartPoint::new(p[0], p[1]))
}

fn branches(name: &str) -> Result<Vec<Branch>, CliError> {
    match name {
        "minimal" | "min" => Ok(vec![Branch::Minimal]),
        "maximal" | "max" => Ok(vec![Branch::Maximal]),
        "both" => Ok(vec![Branch::Minimal, Branch::Maximal]),
        other => Err(CliError::usage(format!("unknown branch '{other}' (minimal, maximal, both)"))),
    }
}

fn single_branch(name: &str) -> Result<Branch, CliError> {
    match branches(name)?.as_slice() {
        [b] => Ok(*b),
        _ => Err(CliError::usage("this command needs a single branch (minimal or maximal)")),
    }
}

pub fn classify_umbilic(
    cfg: &RunConfig,
    jet: Option<Vec<f64>>,
    guess: Option<[f64; 2]>,
    scan: Option<f64>,
) -> Result<Output, CliError> {
    let tol = &cfg.tolerances;
    let (j, located, ch, center) = match (jet, &cfg.chart) {
        (Some(v), _) => {
            let [k, a, b, c] = v[..] else {
                return Err(CliError::usage("--jet takes four numbers k,a,b,c"));
            };
            let j = MongeJet3::new(k, a, b, c);
            (j, None, SurfaceChart::monge(j.height(3))?, ChartPoint::new(0.0, 0.0))
        }
        (None, Some(_)) => {
            let ch = chart(cfg)?;
            let p = locate_umbilic(&ch, point(guess)?, tol)?;
            let ch = orient_positive(&ch, p, tol)?;
            (reduce_to_monge_jet(&ch, p, tol)?.jet, Some(p), ch, p)
        }
        (None, None) => return Err(CliError::usage("give either --jet k,a,b,c or a chart with --point")),
    };
    let class = classify_gmc_umbilic(&j, tol);
    let separatrices = scan.map(|radius| {
        [Branch::Minimal, Branch::Maximal]
            .iter()
            .map(|b| {
                let s = separatrix_scan(&ch, center, radius, *b, 120, 1e-4, tol);
                json!({ "branch": b, "count": s.count(), "scan": s })
            })
            .collect::<Vec<_>>()
    });
    Ok(Output::json(json!({
        "separatrix_scan": separatrices,
        "jet": { "k": j.k, "a": j.a, "b": j.b, "c": j.c },
        "umbilic_point": located,
        "gmc_type": class.gmc_type,
        "principal_type": class.principal_type,
        "delta_G": class.delta_g,
        "delta_P": delta_p(&j),
        "classification": class,
    })))
}

fn jet4(v: &[f64]) -> Result<MongeJet4, CliError> {
    if v.len() < 5 || v.len() > 10 {
        return Err(CliError::usage("--jet takes k,a,b,c,d[,A,B,C,D,E4]"));
    }
    let g = |i: usize| v.get(i).copied().unwrap_or(0.0);
    Ok(MongeJet4 {
        k: g(0),
        a: g(1),
        b: g(2),
        c: g(3),
        d: g(4),
        big_a: g(5),
        big_b: g(6),
        big_c: g(7),
        big_d: g(8),
        e4: g(9),
    })
}

fn jet_report(j: &MongeJet4, cfg: &RunConfig) -> Result<Value, CliError> {
    let info = classify_parabolic_point(j, &cfg.tolerances)?;
    let field = if j.a == 0.0 {
        lie_cartan_parabolic_field(j, &cfg.tolerances).ok()
    } else {
        None
    };
    Ok(json!({
        "jet": j,
        "classification": info,
        "lie_cartan": field,
        "discrepancies": expansion_discrepancies(j),
    }))
}

pub fn parabolic(
    cfg: &RunConfig,
    jet: Option<Vec<f64>>,
    at: Option<[f64; 2]>,
    window: Option<Vec<f64>>,
) -> Result<Output, CliError> {
    if let Some(v) = jet {
        return Ok(Output::json(jet_report(&jet4(&v)?, cfg)?));
    }
    let ch = chart(cfg)?;
    let tol = &cfg.tolerances;
    if let Some(p) = at {
        let (j, _) = parabolic_jet_at(&ch, ChartPoint::new(p[0], p[1]), tol)?;
        return Ok(Output::json(jet_report(&j, cfg)?));
    }
    let window = match window {
        Some(w) => <[f64; 4]>::try_from(w).map_err(|_| CliError::usage("--window takes u0,u1,v0,v1"))?,
        None => ch.window(),
    };
    let curves = parabolic_curve_trace(&ch, window, tol)?;
    let mut summary = Vec::new();
    let mut csv = String::from("curve,u,v,x,y,z\n");
    for (i, c) in curves.iter().enumerate() {
        let tangential = tangential_points(&ch, c, tol)?;
        for p in &c.points {
            let x = ch.position(*p)?;
            csv.push_str(&format!(
                "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p.u, p.v, x.x, x.y, x.z
            ));
        }
        summary.push(json!({
            "points": c.points.len(),
            "closed": c.closed,
            "tangential_points": tangential,
        }));
    }
    let mut out = Output::json(json!({ "window": window, "curves": summary }));
    if cfg.wants(Format::Csv) {
        out.files.push(("parabolic.csv".into(), csv));
    }
    Ok(out)
}

fn trace_options(cfg: &RunConfig, extended: bool, reflect: bool) -> TraceOptions<'static> {
    TraceOptions {
        cfg: cfg.trace,
        tol: cfg.tolerances,
        extended,
        tangential: if reflect { TangentialPolicy::Reflect } else { TangentialPolicy::Terminate },
        ..Default::default()
    }
}

fn line_summary(l: &Polyline) -> Value {
    json!({
        "branch": l.branch,
        "stop": l.stop,
        "length": l.length(),
        "samples": l.samples.len(),
        "start": l.first().point,
        "end": l.last().point,
        "switches": l.switches,
    })
}

pub struct TraceArgs {
    pub points: Vec<[f64; 2]>,
    pub random: usize,
    pub branch: String,
    pub extended: bool,
    pub reflect: bool,
    pub projection: Projection,
}

pub fn trace(cfg: &RunConfig, args: TraceArgs) -> Result<Output, CliError> {
    let ch = chart(cfg)?;
    let mut seeds: Vec<ChartPoint> = args.points.iter().map(|p| ChartPoint::new(p[0], p[1])).collect();
    if args.random > 0 {
        let w = ch.window();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut tries = 0;
        let target = seeds.len() + args.random;
        while seeds.len() < target && tries < 1000 * args.random {
            tries += 1;
            let p = ChartPoint::new(rng.gen_range(w[0]..w[1]), rng.gen_range(w[2]..w[3]));
            let ok = ch
                .geometry(p, &cfg.tolerances)
                .map(|g| g.curvature.k > cfg.trace.stop_k && g.curvature.k2 - g.curvature.k1 > 1e-6)
                .unwrap_or(false);
            if ok {
                seeds.push(p);
            }
        }
    }
    if seeds.is_empty() {
        return Err(CliError::usage("no seeds: give --point u,v (repeatable) or --random N"));
    }
    let opts = trace_options(cfg, args.extended, args.reflect);
    let mut lines = Vec::new();
    for s in &seeds {
        let oriented = orient_positive(&ch, *s, &cfg.tolerances)?;
        for b in branches(&args.branch)? {
            lines.push(trace_with(&oriented, *s, b, None, &opts)?);
        }
    }
    let mut out = Output::json(json!({
        "seeds": seeds,
        "traces": lines.iter().map(line_summary).collect::<Vec<_>>(),
    }));
    if cfg.wants(Format::Csv) {
        for (i, l) in lines.iter().enumerate() {
            out.files.push((format!("trace-{i:03}.csv"), polyline_csv(l)));
        }
    }
    if cfg.wants(Format::Svg) {
        out.files.push(("trace.svg".into(), polylines_svg(&lines, args.projection, 800.0)));
    }
    Ok(out)
}

pub fn transition(
    cfg: &RunConfig,
    at: Option<[f64; 2]>,
    branch: &str,
    length: f64,
    offset: f64,
) -> Result<Output, CliError> {
    let p = point(at)?;
    let ch = orient_positive(&chart(cfg)?, p, &cfg.tolerances)?;
    let b = single_branch(branch)?;
    let trace_cfg = gmc_core::TraceConfig {
        max_arclength: length,
        ..cfg.trace
    };
    let mut opts = trace_options(cfg, false, false);
    opts.cfg = trace_cfg;
    opts.detect_closure = false;
    let line = trace_with(&ch, p, b, None, &opts)?;
    let n = (line.samples.len() - 1) & !1;
    let a = arc(&line, 0, n)?;
    let rep = transition_report(&ch, &a, offset, &trace_cfg, &cfg.tolerances)?;
    let mut out = Output::json(json!({ "trace": line_summary(&line), "report": rep }));
    if cfg.wants(Format::Csv) {
        out.files.push(("transition.csv".into(), polyline_csv(&line)));
    }
    Ok(out)
}

pub fn cycle_check(
    cfg: &RunConfig,
    at: Option<[f64; 2]>,
    branch: &str,
    offset: f64,
    threshold: f64,
) -> Result<Output, CliError> {
    let p = point(at)?;
    let ch = orient_positive(&chart(cfg)?, p, &cfg.tolerances)?;
    let b = single_branch(branch)?;
    let line = trace_with(&ch, p, b, None, &trace_options(cfg, false, false))?;
    let summary = line_summary(&line);
    let mut out = match cycle_hyperbolicity(&ch, &line, offset, &cfg.trace, &cfg.tolerances, threshold) {
        Ok(rep) => Output::json(json!({ "trace": summary, "report": rep })),
        Err(_) => Output::json(json!({
            "trace": summary,
            "report": null,
            "note": "the trace did not close within max_arclength",
        })),
    };
    if cfg.wants(Format::Csv) {
        out.files.push(("cycle.csv".into(), polyline_csv(&line)));
    }
    Ok(out)
}

pub fn torus_rho(cfg: &RunConfig, ratio: f64) -> Result<Output, CliError> {
    Ok(Output::json(to_value(&torus_rho_report(ratio, &cfg.quadrature)?)))
}

pub fn ellipsoid(cfg: &RunConfig, a: f64, b: f64, c: f64, sections: usize) -> Result<Output, CliError> {
    let data = ellipsoid_data(a, b, c, &cfg.quadrature)?;
    let mut result = json!({ "data": data });
    let mut out_files = Vec::new();
    if sections > 0 {
        let seeds: Vec<f64> = (0..sections).map(|i| 0.1 + 6.0 * i as f64 / sections as f64).collect();
        let (ret, lines) = ellipsoid_section_return(a, b, c, &seeds, &cfg.trace, &cfg.quadrature)?;
        result["section_return"] = to_value(&ret);
        if cfg.wants(Format::Csv) {
            let mut csv = String::from("gamma0,displacement\n");
            for (g, d) in ret.seeds.iter().zip(&ret.displacements) {
                csv.push_str(&format!("{g:.16e},{d:.16e}\n"));
            }
            out_files.push(("section_return.csv".into(), csv));
        }
        if cfg.wants(Format::Svg) {
            out_files.push(("ellipsoid.svg".into(), polylines_svg(&lines, Projection::Xy, 800.0)));
        }
    }
    Ok(Output { result, files: out_files })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepModel {
    /// Torus rotation number over r/R.
    Torus,
    /// Ellipsoid (a, b, c) rotation number over b.
    Ellipsoid,
}

pub struct SweepArgs {
    pub model: SweepModel,
    pub from: f64,
    pub to: f64,
    pub n: usize,
    pub workers: usize,
    pub a: f64,
    pub c: f64,
}

/// Evaluates one sweep parameter; returns a CSV row and its JSON record.
fn sweep_point(cfg: &RunConfig, args: &SweepArgs, x: f64) -> Result<(String, Value), String> {
    match args.model {
        SweepModel::Torus => {
            let r = torus_rho_report(x, &cfg.quadrature).map_err(|e| e.to_string())?;
            Ok((
                format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    x, r.rho_numeric, r.rho_quadrature, r.normalization
                ),
                to_value(&r),
            ))
        }
        SweepModel::Ellipsoid => {
            let d = ellipsoid_data(args.a, x, args.c, &cfg.quadrature).map_err(|e| e.to_string())?;
            Ok((format!("{:.16e},{:.16e},{:.16e},{:.16e}", x, d.s1, d.s2, d.rho), to_value(&d)))
        }
    }
}

pub fn sweep(cfg: &RunConfig, args: SweepArgs) -> Result<Output, CliError> {
    if args.n == 0 || !(args.from.is_finite() && args.to.is_finite()) {
        return Err(CliError::usage("sweep needs --n > 0 and finite --from/--to"));
    }
    let xs: Vec<f64> = (0..args.n)
        .map(|i| {
            if args.n == 1 {
                args.from
            } else {
                args.from + (args.to - args.from) * i as f64 / (args.n - 1) as f64
            }
        })
        .collect();
    let workers = args.workers.clamp(1, args.n);
    // Workers take interleaved indices and share nothing; results are
    // reassembled in parameter order so the output is deterministic.
    let mut slots: Vec<Option<Result<(String, Value), String>>> = vec![None; xs.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (xs, args) = (&xs, &args);
                scope.spawn(move || {
                    (w..xs.len())
                        .step_by(workers)
                        .map(|i| (i, sweep_point(cfg, args, xs[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    let header = match args.model {
        SweepModel::Torus => "ratio,rho_numeric,rho_quadrature,normalization",
        SweepModel::Ellipsoid => "b,S1,S2,rho",
    };
    let mut csv = format!("{header}\n");
    let mut records = Vec::new();
    for (x, slot) in xs.iter().zip(slots) {
        match slot.expect("every index is evaluated") {
            Ok((row, rec)) => {
                csv.push_str(&row);
                csv.push('\n');
                records.push(rec);
            }
            Err(e) => records.push(json!({ "parameter": x, "error": e })),
        }
    }
    let mut out = Output::json(json!({ "model": format!("{:?}", args.model).to_lowercase(), "points": records }));
    if cfg.wants(Format::Csv) {
        out.files.push(("sweep.csv".into(), csv));
    }
    Ok(out)
}

pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

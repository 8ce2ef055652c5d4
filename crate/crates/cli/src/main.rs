//! Command-line front end for GMC line computations.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gmc_core::export::Projection;
use gmc_core::GmcError;
use serde_json::json;

use crate::commands::{SweepArgs, SweepModel, TraceArgs};
use crate::config::{Format, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Compute(GmcError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self::Io(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
            Self::Compute(_) => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            Self::Usage(m) => ("usage", m.clone()),
            Self::Io(m) => ("io", m.clone()),
            Self::Compute(e) => ("computation", e.to_string()),
        };
        json!({ "error": { "kind": kind, "message": message } })
    }
}

impl From<GmcError> for CliError {
    fn from(e: GmcError) -> Self {
        Self::Compute(e)
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 2]>::try_from(v).map_err(|_| format!("expected u,v but got '{s}'"))
}

#[derive(Parser)]
#[command(name = "gmc", version, about = "Geometric mean curvature lines: classification, tracing and models")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (chart, tolerances, trace, quadrature, out, formats, seed).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON chart description; overrides the one in --config.
    #[arg(long, global = true)]
    chart: Option<PathBuf>,
    /// Output directory for result files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Parabolic threshold on K.
    #[arg(long, global = true)]
    tol_k: Option<f64>,
    /// Relative umbilic threshold on k2 - k1.
    #[arg(long, global = true)]
    tol_umbilic: Option<f64>,
    /// Seed of the random number generator for sampled seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trace step target.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Maximum trace arclength.
    #[arg(long, global = true)]
    max_length: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an umbilic from a cubic jet or a chart point.
    ClassifyUmbilic {
        /// Cubic jet k,a,b,c.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        jet: Option<Vec<f64>>,
        /// Initial guess of the umbilic in chart coordinates.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        point: Option<[f64; 2]>,
        /// Also count separatrices by shooting from a circle of this radius.
        #[arg(long)]
        scan: Option<f64>,
    },
    /// Classify a parabolic point or trace the parabolic set of a chart.
    Parabolic {
        /// Quartic jet k,a,b,c,d[,A,B,C,D,E4].
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        jet: Option<Vec<f64>>,
        /// Parabolic chart point to expand at.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        point: Option<[f64; 2]>,
        /// Search window u0,u1,v0,v1 (defaults to the chart window).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<f64>>,
    },
    /// Trace GMC lines from seed points.
    Trace {
        /// Seed point u,v (repeatable).
        #[arg(long = "point", value_parser = parse_pair, allow_hyphen_values = true)]
        points: Vec<[f64; 2]>,
        /// Number of additional random elliptic seeds drawn with --seed.
        #[arg(long, default_value_t = 0)]
        random: usize,
        /// minimal, maximal or both.
        #[arg(long, default_value = "both")]
        branch: String,
        /// Continue across transversal parabolic crossings on the other branch.
        #[arg(long)]
        extended: bool,
        /// Reflect at tangential parabolic arrivals (with --extended).
        #[arg(long)]
        reflect: bool,
        /// SVG projection: chart, xy, xz or yz.
        #[arg(long, default_value = "chart")]
        projection: Projection,
    },
    /// Transition derivative along a traced arc, integral and numeric.
    Transition {
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        point: Option<[f64; 2]>,
        #[arg(long, default_value = "minimal")]
        branch: String,
        /// Arc length.
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Cross-section offset of the numeric check.
        #[arg(long, default_value_t = 1e-2)]
        offset: f64,
    },
    /// Trace until closure and test hyperbolicity of the cycle.
    CycleCheck {
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        point: Option<[f64; 2]>,
        #[arg(long, default_value = "maximal")]
        branch: String,
        #[arg(long, default_value_t = 1e-3)]
        offset: f64,
        /// |ln D| above which a cycle counts as hyperbolic.
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
    },
    /// Rotation number of the GMC foliation on a torus of revolution.
    TorusRho {
        /// r/R.
        #[arg(long)]
        ratio: f64,
    },
    /// Umbilics, periods and rotation number of a triaxial ellipsoid.
    Ellipsoid {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c: f64,
        /// Number of section seeds for the traced return map (0 = skip).
        #[arg(long, default_value_t = 0)]
        sections: usize,
    },
    /// Parameter sweep of a model's rotation number.
    Sweep {
        #[arg(long, value_enum)]
        model: SweepModel,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Fixed ellipsoid axis a (ellipsoid sweeps vary b).
        #[arg(long, default_value_t = 3.0)]
        a: f64,
        /// Fixed ellipsoid axis c.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ClassifyUmbilic { .. } => "classify-umbilic",
            Command::Parabolic { .. } => "parabolic",
            Command::Trace { .. } => "trace",
            Command::Transition { .. } => "transition",
            Command::CycleCheck { .. } => "cycle-check",
            Command::TorusRho { .. } => "torus-rho",
            Command::Ellipsoid { .. } => "ellipsoid",
            Command::Sweep { .. } => "sweep",
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &common.chart {
        cfg.chart = Some(RunConfig::load_chart(p)?);
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    if let Some(f) = &common.format {
        cfg.formats = f.clone();
    }
    if let Some(v) = common.tol_k {
        cfg.tolerances.eps_k = v;
    }
    if let Some(v) = common.tol_umbilic {
        cfg.tolerances.eps_umbilic = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.step {
        cfg.trace.step_target = v;
    }
    if let Some(v) = common.max_length {
        cfg.trace.max_arclength = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.common)?;
    let name = cli.command.name();
    let out = match cli.command {
        Command::ClassifyUmbilic { jet, point, scan } => commands::classify_umbilic(&cfg, jet, point, scan)?,
        Command::Parabolic { jet, point, window } => commands::parabolic(&cfg, jet, point, window)?,
        Command::Trace {
            points,
            random,
            branch,
            extended,
            reflect,
            projection,
        } => commands::trace(
            &cfg,
            TraceArgs {
                points,
                random,
                branch,
                extended,
                reflect,
                projection,
            },
        )?,
        Command::Transition {
            point,
            branch,
            length,
            offset,
        } => commands::transition(&cfg, point, &branch, length, offset)?,
        Command::CycleCheck {
            point,
            branch,
            offset,
            threshold,
        } => commands::cycle_check(&cfg, point, &branch, offset, threshold)?,
        Command::TorusRho { ratio } => commands::torus_rho(&cfg, ratio)?,
        Command::Ellipsoid { a, b, c, sections } => commands::ellipsoid(&cfg, a, b, c, sections)?,
        Command::Sweep {
            model,
            from,
            to,
            n,
            workers,
            a,
            c,
        } => commands::sweep(
            &cfg,
            SweepArgs {
                model,
                from,
                to,
                n,
                workers,
                a,
                c,
            },
        )?,
    };
    let doc = json!({ "command": name, "config": cfg, "result": out.result });
    let text = serde_json::to_string_pretty(&doc).expect("serializable output") + "\n";
    match &cfg.out {
        Some(dir) => {
            let mut files = out.files;
            if cfg.wants(Format::Json) {
                files.push((format!("{name}.json"), text));
            }
            commands::write_files(dir, &files)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

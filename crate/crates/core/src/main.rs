use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tubemeasure::boundary::{estimate_boundary_measure, required_sample_count, BoxRegion};
use tubemeasure::curvature::{curvature_from_cloud, RadiiSchedule};
use tubemeasure::experiments::{
    area_suite, boundary_area_check, convexity_and_gradient_check, holder_knife_experiment, stability_experiment, symdiff_bound_check,
    symdiff_suite, KnifeResolution, StabilityReport, SuiteTrial,
};
use tubemeasure::geom::covering_number;
use tubemeasure::io::{boundary_estimate_to_json, curvature_to_json, read_points};
use tubemeasure::oracles::uniform_points;
use tubemeasure::Error;

const EXIT_PARSE: u8 = 2;
const EXIT_ARGS: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_BOUND: u8 = 5;

/// Boundary and curvature measures of point clouds by Monte-Carlo sampling.
#[derive(Parser)]
#[command(name = "tubemeasure", version)]
struct Cli {
    /// Worker count; results are reproducible for a fixed count.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Omit the run block (timestamp, elapsed time) from JSON output.
    #[arg(long, global = true)]
    no_meta: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Random seed.
    #[arg(long, env = "TUBEMEASURE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the boundary measure of a point cloud.
    Boundary {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: f64,
        /// Number of samples.
        #[arg(long)]
        n: Option<u64>,
        /// Target bounded-Lipschitz accuracy; picks the sample count.
        #[arg(long, requires = "confidence")]
        eps: Option<f64>,
        /// Probability of reaching `eps`.
        #[arg(long, requires = "eps")]
        confidence: Option<f64>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate curvature measures from boundary measures at dim+1 radii.
    Curvature {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated increasing radii, one more than the dimension.
        #[arg(long, value_delimiter = ',', conflicts_with = "r0")]
        radii: Option<Vec<f64>>,
        /// Smallest radius of a geometric schedule ending at 4 * r0.
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long)]
        n_per_radius: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Distance between boundary measures of a cloud and its perturbations.
    Stability {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        r: f64,
        /// Comma-separated perturbation sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Projection distance between a segment and knife blades converging to it.
    Knife {
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16, 32])]
        segments: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Points sampling the straight segment.
        #[arg(long, default_value_t = KnifeResolution::default().segment_points)]
        segment_points: usize,
        /// Spacing of blade samples along each arc.
        #[arg(long, default_value_t = KnifeResolution::default().arc_spacing)]
        arc_spacing: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Bound and property checks, on one cloud or on random clouds.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Point file; random planar clouds when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        r: f64,
        /// Perturbation size for the symdiff suite.
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        /// Finite-difference step for the area suite.
        #[arg(long, default_value_t = 0.005)]
        h: f64,
        /// Monte-Carlo samples per check.
        #[arg(long, default_value_t = 20_000)]
        n: u64,
        /// Random clouds (symdiff, area) or random points (convexity).
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Symdiff,
    Convexity,
    Area,
}

enum Failure {
    Lib(Error),
    Args(String),
    Bound(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io(_) | Error::Json(_) => EXIT_PARSE,
        Error::DegenerateSchedule { .. } | Error::SamplerExhausted { .. } | Error::Solver(_) => EXIT_NUMERIC,
        _ => EXIT_ARGS,
    }
}

struct Ctx {
    threads: usize,
    no_meta: bool,
    started: Instant,
}

impl Ctx {
    fn finish(&self, mut value: Value) -> Value {
        if let Value::Object(m) = &mut value {
            m.insert("threads".into(), json!(self.threads));
            if !self.no_meta {
                let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                m.insert("run".into(), json!({ "unix_time": now, "elapsed_s": self.started.elapsed().as_secs_f64() }));
            }
        }
        value
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Lib(e.into())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Lib(e.into()))
        }
    }
}

fn emit_json(ctx: &Ctx, path: Option<&Path>, value: Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(&ctx.finish(value)).map_err(|e| Failure::Lib(e.into()))?;
    text.push('\n');
    emit(path, &text)
}

fn report_json(report: &StabilityReport, checks: Value) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    v["checks"] = checks;
    v
}

fn suite_json(trials: &[SuiteTrial]) -> (Value, bool) {
    let pass = trials.iter().all(|t| t.check.pass);
    (json!({ "trials": trials, "failures": trials.iter().filter(|t| !t.check.pass).count(), "pass": pass }), pass)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx { threads: cli.threads.max(1), no_meta: cli.no_meta, started: Instant::now() };
    let workers = ctx.threads;
    if cli.threads == 0 {
        return Err(Failure::Args("--threads must be at least 1".into()));
    }
    match cli.command {
        Command::Boundary { input, r, n, eps, confidence, seed, output } => {
            let cloud = read_points(&input)?;
            let (samples, rule) = match (n, eps, confidence) {
                (Some(n), None, None) => (n, json!({ "mode": "fixed" })),
                (None, Some(eps), Some(conf)) => {
                    if !(conf > 0.0 && conf < 1.0) {
                        return Err(Failure::Args(format!("--confidence must lie in (0, 1), got {conf}")));
                    }
                    if !(eps > 0.0 && eps < 2.0) {
                        return Err(Failure::Args(format!("--eps must lie in (0, 2), got {eps}")));
                    }
                    let cover = covering_number(&cloud, eps / 16.0)?;
                    let n = required_sample_count(cover, eps, 1.0 - conf)?;
                    (n, json!({ "mode": "accuracy", "eps": eps, "confidence": conf, "covering_number": cover }))
                }
                _ => return Err(Failure::Args("give either --n or both --eps and --confidence".into())),
            };
            let est = estimate_boundary_measure(cloud, r, samples, seed.seed, workers)?;
            emit_json(&ctx, output.as_deref(), boundary_estimate_to_json(&est, json!({ "sample_rule": rule })))
        }
        Command::Curvature { input, radii, r0, n_per_radius, seed, output } => {
            let cloud = read_points(&input)?;
            let schedule = match (radii, r0) {
                (Some(radii), None) => RadiiSchedule::new(radii, cloud.dim())?,
                (None, Some(r0)) => RadiiSchedule::geometric(r0, cloud.dim())?,
                _ => return Err(Failure::Args("give either --radii or --r0".into())),
            };
            let profile = curvature_from_cloud(cloud, &schedule, n_per_radius, seed.seed, workers)?;
            let extra = json!({ "n_per_radius": n_per_radius, "seed": seed.seed });
            emit_json(&ctx, output.as_deref(), curvature_to_json(&profile, extra))
        }
        Command::Stability { input, r, eps, n, seed, output, csv } => {
            let cloud = read_points(&input)?;
            let report = stability_experiment(&cloud, r, &eps, n, seed.seed, workers)?;
            let bounded = report.final_over_median() <= 2.0;
            let no_trend = report.spearman_p >= 0.05;
            let checks = json!({
                "final_over_median": report.final_over_median(),
                "bounded": bounded,
                "no_growth_trend": no_trend,
            });
            if let Some(p) = csv.as_deref() {
                emit(Some(p), &report.to_csv())?;
            }
            emit_json(&ctx, output.as_deref(), report_json(&report, checks))?;
            if bounded && no_trend {
                Ok(())
            } else {
                Err(Failure::Bound("ratio to sqrt(eps) grows as eps decreases".into()))
            }
        }
        Command::Knife { length, radius, segments, n, segment_points, arc_spacing, seed, output, csv } => {
            if !(length > 0.0 && radius > 0.0) {
                return Err(Failure::Args("--length and --radius must be positive".into()));
            }
            let region = BoxRegion::new(vec![0.0, 0.0], vec![length, radius])?;
            let res = KnifeResolution { segment_points, arc_spacing };
            let report = holder_knife_experiment(length, radius, &segments, &region, n, seed.seed, workers, res)?;
            let slope_ok = (0.4..=0.6).contains(&report.fitted_slope);
            let band_ok = report.ratio_spread() <= 2.0;
            let checks = json!({ "slope_in_range": slope_ok, "ratio_spread": report.ratio_spread(), "ratio_band": band_ok });
            if let Some(p) = csv.as_deref() {
                emit(Some(p), &report.to_csv())?;
            }
            emit_json(&ctx, output.as_deref(), report_json(&report, checks))?;
            if slope_ok && band_ok {
                Ok(())
            } else {
                Err(Failure::Bound(format!("slope {} or ratio spread {} out of range", report.fitted_slope, report.ratio_spread())))
            }
        }
        Command::Check { suite, input, r, eps, h, n, trials, seed, output } => {
            let cloud = input.as_deref().map(read_points).transpose()?;
            let seed = seed.seed;
            let (value, pass) = match (suite, cloud) {
                (Suite::Symdiff, Some(c)) => {
                    let check = symdiff_bound_check(&c, r, eps, n, seed, workers)?;
                    (json!({ "suite": "symdiff", "r": r, "eps": eps, "check": check }), check.pass)
                }
                (Suite::Area, Some(c)) => {
                    let check = boundary_area_check(&c, r, h, n, seed, workers)?;
                    (json!({ "suite": "area", "r": r, "h": h, "check": check }), check.pass)
                }
                (Suite::Symdiff, None) => {
                    let (mut v, pass) = suite_json(&symdiff_suite(trials.unwrap_or(50) as usize, n, seed, workers)?);
                    v["suite"] = json!("symdiff");
                    (v, pass)
                }
                (Suite::Area, None) => {
                    let (mut v, pass) = suite_json(&area_suite(trials.unwrap_or(50) as usize, n, seed, workers)?);
                    v["suite"] = json!("area");
                    (v, pass)
                }
                (Suite::Convexity, cloud) => {
                    let c = match cloud {
                        Some(c) => c,
                        None => uniform_points(&[0.0, 0.0], &[1.0, 1.0], 50, seed)?,
                    };
                    let rep = convexity_and_gradient_check(&c, trials.unwrap_or(10_000), seed)?;
                    let pass = rep.pass;
                    (json!({ "suite": "convexity", "report": rep }), pass)
                }
            };
            let mut value = value;
            value["seed"] = json!(seed);
            value["samples"] = json!(n);
            emit_json(&ctx, output.as_deref(), value)?;
            if pass {
                Ok(())
            } else {
                Err(Failure::Bound("a check failed beyond its tolerance".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ARGS) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Args(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ARGS)
        }
        Err(Failure::Bound(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_BOUND)
        }
    }
}

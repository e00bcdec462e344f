use std::f64::consts::FRAC_PI_2;

use metric_scale::chart::format_f64;
use metric_scale::optimizer::clustered_problem;
use metric_scale::{
    equivalence_check, frechet_objective, geodesic_integrate, joint_descent, riemannian_gd, volume_scale_factor,
    BuiltinManifold, Chart, GeodesicPath, Manifold, ManifoldDescriptor, OptimizerConfig, ScaleFactor, ScaledManifold,
    StopReason,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Command, Format, RunConfig};
use crate::error::CliError;
use crate::report::{Sig17, VerificationReport};
use crate::verify::{run_verification, VerifyContext};

/// Iterate deviation allowed between the scaled run and the base run with step `η/λ`.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;

const DEFAULT_MANIFOLD: &str = "sphere:2";
const DEFAULT_POINTS: usize = 5;
const DEFAULT_ITERS: usize = 1000;
const DEFAULT_GRAD_TOL: f64 = 1e-10;
const CLUSTER_RADIUS: f64 = 1.0;

/// Rendered output of one command plus the status the process should exit with.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub body: String,
    pub exit_code: i32,
    /// Human-readable lines for stderr.
    pub notes: Vec<String>,
}

impl RunOutput {
    fn ok(body: String) -> Self {
        Self { body, exit_code: 0, notes: vec![] }
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    match cfg.command {
        Command::Verify => cmd_verify_output(cfg),
        Command::ScaleTable => cmd_scale_table(cfg),
        Command::Frechet => cmd_frechet(cfg),
        Command::Calibrate => cmd_calibrate(cfg),
        Command::Geodesic => cmd_geodesic(cfg),
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> VerificationReport {
    run_verification(&VerifyContext::new(cfg.seed, cfg.lambda, cfg.eta, cfg.manifold))
}

fn cmd_verify_output(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let report = cmd_verify(cfg);
    let body = match cfg.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv().map_err(|e| CliError::Failed(e.to_string()))?,
    };
    let mut notes = vec![format!(
        "verify: {}/{} properties passed ({} registered)",
        report.summary.passed, report.summary.total, report.summary.registered
    )];
    notes.extend(report.records.iter().filter(|r| !r.pass).map(|r| format!("FAILED {}", r.id)));
    Ok(RunOutput { body, exit_code: report.exit_code(), notes })
}

fn json_line<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// A header row and one data row.
fn csv_pair(fields: &[(&str, String)]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Failed(e.to_string());
    w.write_record(fields.iter().map(|(k, _)| *k)).map_err(fail)?;
    w.write_record(fields.iter().map(|(_, v)| v.as_str())).map_err(fail)?;
    let bytes = w.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn manifold_or_default(cfg: &RunConfig) -> ManifoldDescriptor {
    cfg.manifold.unwrap_or_else(|| DEFAULT_MANIFOLD.parse().expect("built-in spec"))
}

fn rng(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

// ---- scale-table ----

#[derive(Debug, Clone, Serialize)]
pub struct ScaleRow {
    pub quantity: &'static str,
    pub factor: &'static str,
    pub value: Sig17,
}

/// Scaling factor of each geometric quantity under `g ↦ λg` on an `n`-dimensional manifold.
pub fn scale_table(lambda: ScaleFactor, n: usize) -> Result<Vec<ScaleRow>, CliError> {
    let row = |quantity, factor, value| ScaleRow { quantity, factor, value: Sig17(value) };
    Ok(vec![
        row("norm", "sqrt(lambda)", lambda.length_factor()),
        row("length", "sqrt(lambda)", lambda.length_factor()),
        row("distance", "sqrt(lambda)", lambda.length_factor()),
        row("volume", "lambda^(n/2)", volume_scale_factor(lambda, n)?),
        row("gradient", "1/lambda", lambda.gradient_factor()),
        row("connection", "1", 1.0),
        row("geodesics", "1", 1.0),
        row("exp/log", "1", 1.0),
        row("transport", "1", 1.0),
    ])
}

#[derive(Serialize)]
struct ScaleTableOutput<'a> {
    command: &'static str,
    lambda: Sig17,
    n: usize,
    manifold: String,
    rows: &'a [ScaleRow],
}

fn cmd_scale_table(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let desc = cfg.manifold.unwrap_or_else(|| "euclidean:3".parse().expect("built-in spec"));
    let n = desc.intrinsic_dimension();
    let rows = scale_table(cfg.lambda, n)?;
    let body = match cfg.format {
        Format::Json => json_line(&ScaleTableOutput {
            command: "scale-table",
            lambda: Sig17(cfg.lambda.get()),
            n,
            manifold: desc.to_string(),
            rows: &rows,
        })?,
        Format::Csv => {
            let mut s = String::from("quantity,factor,value,lambda,n\n");
            for r in &rows {
                s.push_str(&format!("{},{},{},{},{n}\n", r.quantity, r.factor, r.value.text(), format_f64(cfg.lambda.get())));
            }
            s
        }
    };
    Ok(RunOutput::ok(body))
}

// ---- frechet ----

#[derive(Serialize)]
struct FrechetOutput {
    command: &'static str,
    manifold: String,
    lambda: Sig17,
    eta: Sig17,
    seed: u64,
    n_points: usize,
    iterations: usize,
    stop_reason: String,
    final_value: Sig17,
    final_grad_norm: Sig17,
    final_point: Vec<Sig17>,
    equivalence_deviation: Option<Sig17>,
    equivalence_tolerance: Option<Sig17>,
}

fn cmd_frechet(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let desc = manifold_or_default(cfg);
    let m = BuiltinManifold::from_descriptor(desc);
    let n_points = cfg.n_points.unwrap_or(DEFAULT_POINTS);
    let iters = cfg.iters.unwrap_or(DEFAULT_ITERS);
    let (points, x0) = clustered_problem(&m, n_points, CLUSTER_RADIUS, &mut rng(cfg))?;
    let objective = frechet_objective(m.clone(), points)?;
    let scaled = ScaledManifold::new(m.clone(), cfg.lambda);
    let trace = riemannian_gd(&scaled, &objective, &x0, &OptimizerConfig::new(cfg.eta, iters, DEFAULT_GRAD_TOL)?);

    let mut notes = vec![format!("frechet: {} after {} iterations", trace.stop_reason, trace.steps())];
    let mut exit_code = 0;
    if let StopReason::Failed(e) = &trace.stop_reason {
        notes.push(format!("error: optimizer failed: {e}"));
        exit_code = 1;
    }

    let mut equivalence = None;
    if cfg.check_equivalence && exit_code == 0 {
        match equivalence_check(&m, &objective, &x0, cfg.eta, cfg.lambda, trace.steps().max(1)) {
            Ok(dev) => {
                notes.push(format!("max iterate deviation vs base run with eta/lambda: {}", format_f64(dev)));
                if dev > EQUIVALENCE_TOLERANCE {
                    notes.push(format!("error: deviation exceeds {EQUIVALENCE_TOLERANCE:e}"));
                    exit_code = 1;
                }
                equivalence = Some(dev);
            }
            Err(e) => {
                notes.push(format!("error: {e}"));
                exit_code = 1;
            }
        }
    }

    let body = match cfg.format {
        Format::Csv => trace.to_csv(),
        Format::Json => json_line(&FrechetOutput {
            command: "frechet",
            manifold: desc.to_string(),
            lambda: Sig17(cfg.lambda.get()),
            eta: Sig17(cfg.eta),
            seed: cfg.seed,
            n_points,
            iterations: trace.steps(),
            stop_reason: trace.stop_reason.to_string(),
            final_value: Sig17(trace.values.last().copied().unwrap_or(f64::NAN)),
            final_grad_norm: Sig17(trace.grad_norms.last().copied().unwrap_or(f64::NAN)),
            final_point: trace.last().map(|p| p.flat_coords().into_iter().map(Sig17).collect()).unwrap_or_default(),
            equivalence_deviation: equivalence.map(Sig17),
            equivalence_tolerance: equivalence.map(|_| Sig17(EQUIVALENCE_TOLERANCE)),
        })?,
    };
    Ok(RunOutput { body, exit_code, notes })
}

// ---- calibrate ----

#[derive(Serialize)]
struct CalibrateOutput {
    command: &'static str,
    manifold: String,
    seed: u64,
    n_points: usize,
    scale_target: Sig17,
    lambda_star: Sig17,
    expected_lambda: Sig17,
    residual: Sig17,
    iterations: usize,
    stop_reason: String,
    equivalence_deviation: Sig17,
    equivalence_tolerance: Sig17,
}

fn cmd_calibrate(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let desc = manifold_or_default(cfg);
    let m = BuiltinManifold::from_descriptor(desc);
    let n_points = cfg.n_points.unwrap_or(DEFAULT_POINTS);
    if n_points < 2 {
        return Err(CliError::Usage("calibrate needs --points of at least 2".into()));
    }
    let (points, x0) = clustered_problem(&m, n_points, CLUSTER_RADIUS, &mut rng(cfg))?;
    let n = points.len();
    let mut targets = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            targets[(i, j)] = cfg.scale_target * m.distance(&points[i], &points[j])?;
            targets[(j, i)] = targets[(i, j)];
        }
    }
    let objective = frechet_objective(m.clone(), points.clone())?;
    let config = OptimizerConfig::new(cfg.eta, cfg.iters.unwrap_or(DEFAULT_ITERS), DEFAULT_GRAD_TOL)?;
    let run = joint_descent(&m, &points, &targets, &objective, &x0, &config)?;
    let dev = run.equivalence_deviation;
    let out = CalibrateOutput {
        command: "calibrate",
        manifold: desc.to_string(),
        seed: cfg.seed,
        n_points,
        scale_target: Sig17(cfg.scale_target),
        lambda_star: Sig17(run.calibration.lambda.get()),
        expected_lambda: Sig17(cfg.scale_target * cfg.scale_target),
        residual: Sig17(run.calibration.residual),
        iterations: run.trace.steps(),
        stop_reason: run.trace.stop_reason.to_string(),
        equivalence_deviation: Sig17(dev),
        equivalence_tolerance: Sig17(EQUIVALENCE_TOLERANCE),
    };
    let mut notes = vec![format!(
        "calibrate: lambda* = {}, residual = {}, deviation = {}",
        format_f64(run.calibration.lambda.get()),
        format_f64(run.calibration.residual),
        format_f64(dev)
    )];
    let exit_code = if dev <= EQUIVALENCE_TOLERANCE {
        0
    } else {
        notes.push(format!("error: deviation exceeds {EQUIVALENCE_TOLERANCE:e}"));
        1
    };
    let body = match cfg.format {
        Format::Json => json_line(&out)?,
        Format::Csv => csv_pair(&[
            ("manifold", out.manifold.clone()),
            ("seed", out.seed.to_string()),
            ("n_points", n_points.to_string()),
            ("scale_target", out.scale_target.text()),
            ("lambda_star", out.lambda_star.text()),
            ("expected_lambda", out.expected_lambda.text()),
            ("residual", out.residual.text()),
            ("iterations", out.iterations.to_string()),
            ("stop_reason", out.stop_reason.clone()),
            ("equivalence_deviation", out.equivalence_deviation.text()),
        ])?,
    };
    Ok(RunOutput { body, exit_code, notes })
}

// ---- geodesic ----

/// Default initial state per chart: the equator, a radial line, or a diagonal straight line.
pub fn default_initial_state(chart: &Chart) -> (Vec<f64>, Vec<f64>) {
    match chart.name() {
        "sphere-chart" => (vec![FRAC_PI_2, 0.0], vec![0.0, 1.0]),
        "polar" => (vec![1.0, 0.0], vec![1.0, 0.0]),
        _ => (vec![0.0; chart.dimension()], vec![1.0; chart.dimension()]),
    }
}

#[derive(Serialize)]
struct GeodesicRow {
    path: &'static str,
    t: Sig17,
    x: Vec<Sig17>,
    v: Vec<Sig17>,
}

#[derive(Serialize)]
struct GeodesicOutput {
    command: &'static str,
    chart: String,
    lambda: Sig17,
    steps: usize,
    t_end: Sig17,
    complete: bool,
    max_deviation: Option<Sig17>,
    rows: Vec<GeodesicRow>,
}

fn path_rows<'a>(label: &'static str, path: &'a GeodesicPath) -> impl Iterator<Item = GeodesicRow> + 'a {
    (0..path.len()).map(move |i| GeodesicRow {
        path: label,
        t: Sig17(path.times[i]),
        x: path.positions[i].iter().copied().map(Sig17).collect(),
        v: path.velocities[i].iter().copied().map(Sig17).collect(),
    })
}

fn path_csv(label: &str, path: &GeodesicPath, out: &mut String) {
    for i in 0..path.len() {
        out.push_str(label);
        out.push(',');
        out.push_str(&format_f64(path.times[i]));
        for x in path.positions[i].iter().chain(path.velocities[i].iter()) {
            out.push(',');
            out.push_str(&format_f64(*x));
        }
        out.push('\n');
    }
}

fn cmd_geodesic(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let name = cfg.chart.as_deref().unwrap_or("sphere-chart");
    let chart: Chart = name.parse()?;
    let (dx, dv) = default_initial_state(&chart);
    let x0 = DVector::from_vec(cfg.x0.clone().unwrap_or(dx));
    let v0 = DVector::from_vec(cfg.v0.clone().unwrap_or(dv));
    if x0.len() != chart.dimension() || v0.len() != chart.dimension() {
        return Err(CliError::Usage(format!("{name} needs --x0 and --v0 with {} entries", chart.dimension())));
    }
    if !chart.contains(&x0) {
        return Err(CliError::Usage(format!("initial point is outside the domain of {name}")));
    }
    let steps = cfg.iters.unwrap_or(DEFAULT_ITERS);
    let t_end = 1.0;

    let mut notes = vec![];
    let mut failure = None;
    let mut paths: Vec<(&'static str, GeodesicPath)> = vec![];
    let mut arms = vec![("base", chart.clone())];
    if cfg.lambda.get() != 1.0 {
        arms.push(("scaled", chart.scale_constant(cfg.lambda)));
    }
    for (label, c) in arms {
        match geodesic_integrate(&c, &x0, &v0, t_end, steps) {
            Ok(p) => paths.push((label, p)),
            Err(exit) => {
                notes.push(format!("error: {label} path: {exit}"));
                paths.push((label, exit.partial));
                failure = Some(exit.source);
                break;
            }
        }
    }
    let max_deviation = match (failure.is_none(), paths.as_slice()) {
        (true, [(_, a), (_, b)]) => Some(a.max_deviation(b)),
        (true, [_]) => Some(0.0),
        _ => None,
    };
    if let Some(d) = max_deviation {
        notes.push(format!("geodesic: max deviation between base and scaled paths {}", format_f64(d)));
    }

    let body = match cfg.format {
        Format::Csv => {
            let n = chart.dimension();
            let mut s = String::from("path,t");
            (1..=n).for_each(|i| s.push_str(&format!(",x{i}")));
            (1..=n).for_each(|i| s.push_str(&format!(",xdot{i}")));
            s.push('\n');
            for (label, p) in &paths {
                path_csv(label, p, &mut s);
            }
            s
        }
        Format::Json => json_line(&GeodesicOutput {
            command: "geodesic",
            chart: chart.name().to_string(),
            lambda: Sig17(cfg.lambda.get()),
            steps,
            t_end: Sig17(t_end),
            complete: failure.is_none(),
            max_deviation: max_deviation.map(Sig17),
            rows: paths.iter().flat_map(|(label, p)| path_rows(label, p)).collect(),
        })?,
    };
    Ok(RunOutput { body, exit_code: if failure.is_some() { 1 } else { 0 }, notes })
}

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use metric_scale::{Chart, ManifoldDescriptor, ScaleFactor};

use crate::error::CliError;

/// Environment variable naming the directory outputs go to when `--out` is absent.
pub const OUT_DIR_ENV: &str = "METRIC_SCALE_OUT_DIR";

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Verify,
    Frechet,
    ScaleTable,
    Calibrate,
    Geodesic,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Frechet => "frechet",
            Command::ScaleTable => "scale-table",
            Command::Calibrate => "calibrate",
            Command::Geodesic => "geodesic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Raw command-line flags.
#[derive(Debug, Clone, Parser)]
#[command(name = "metric-scale", version, about = "Constant metric scaling: verification suite and demos")]
pub struct Args {
    #[arg(long, value_enum)]
    pub command: Command,

    /// Manifold as family:dim (euclidean:3, sphere:2, spd:2).
    #[arg(long)]
    pub manifold: Option<String>,

    /// Coordinate chart (euclidean:<n>, polar, sphere-chart).
    #[arg(long)]
    pub chart: Option<String>,

    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,

    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub eta: f64,

    /// Optimizer iterations, or RK4 steps for `geodesic`.
    #[arg(long)]
    pub iters: Option<usize>,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[arg(long)]
    pub points: Option<usize>,

    /// Target distances are this multiple of the base distances (`calibrate`).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub scale_target: f64,

    /// Also run the base-metric arm with step eta/lambda and report the deviation.
    #[arg(long)]
    pub check_equivalence: bool,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Output file; defaults to $METRIC_SCALE_OUT_DIR/<command>.<ext> or stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Initial chart coordinates for `geodesic`, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,

    /// Initial chart velocity for `geodesic`, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<String>,
}

/// Validated configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub manifold: Option<ManifoldDescriptor>,
    pub chart: Option<String>,
    pub lambda: ScaleFactor,
    pub eta: f64,
    pub iters: Option<usize>,
    pub seed: u64,
    pub n_points: Option<usize>,
    pub scale_target: f64,
    pub check_equivalence: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub x0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
}

impl RunConfig {
    /// Parses and validates a full argument list (first item is the program name).
    pub fn parse_from<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let args = Args::try_parse_from(args).map_err(CliError::Args)?;
        Self::try_from(args)
    }

    /// `--out`, else `$METRIC_SCALE_OUT_DIR/<command>.<ext>`, else `None` (stdout).
    pub fn output_path(&self) -> Option<PathBuf> {
        self.out.clone().or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|d| !d.is_empty())
                .map(|d| PathBuf::from(d).join(format!("{}.{}", self.command.as_str(), self.format.extension())))
        })
    }
}

impl TryFrom<Args> for RunConfig {
    type Error = CliError;

    fn try_from(a: Args) -> Result<Self, CliError> {
        let lambda = ScaleFactor::new(a.lambda).map_err(|e| CliError::Usage(e.to_string()))?;
        if !(a.eta.is_finite() && a.eta > 0.0) {
            return Err(CliError::Usage(format!("--eta must be a positive number, got {}", a.eta)));
        }
        if a.iters == Some(0) {
            return Err(CliError::Usage("--iters must be at least 1".into()));
        }
        if a.points == Some(0) {
            return Err(CliError::Usage("--points must be at least 1".into()));
        }
        if !(a.scale_target.is_finite() && a.scale_target > 0.0) {
            return Err(CliError::Usage(format!("--scale-target must be positive, got {}", a.scale_target)));
        }
        let manifold = a
            .manifold
            .as_deref()
            .map(|s| s.parse::<ManifoldDescriptor>().map_err(|e| CliError::Usage(e.to_string())))
            .transpose()?;
        if let Some(name) = &a.chart {
            name.parse::<Chart>().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let x0 = a.x0.as_deref().map(parse_vector).transpose()?;
        let v0 = a.v0.as_deref().map(parse_vector).transpose()?;
        Ok(Self {
            command: a.command,
            manifold,
            chart: a.chart,
            lambda,
            eta: a.eta,
            iters: a.iters,
            seed: a.seed,
            n_points: a.points,
            scale_target: a.scale_target,
            check_equivalence: a.check_equivalence,
            format: a.format,
            out: a.out,
            x0,
            v0,
        })
    }
}

/// Parses a comma-separated list of finite floats, e.g. `1.5,-0.25`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    let xs = s
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad number {tok:?} in vector {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if xs.is_empty() || xs.len() > 64 {
        return Err(CliError::Usage(format!("vector {s:?} must have 1..=64 entries")));
    }
    Ok(xs)
}

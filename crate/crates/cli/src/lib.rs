//! Argument parsing and command execution for the `frd` binary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use frd_bandwidth::simlab::{run_monte_carlo_with, McConfig, McSummary};
use frd_bandwidth::{
    draw_sample, frd_estimate, load_csv, select_bandwidths, Design, DgpSpec, Execution,
    FrdEstimate, KernelSpec, Method, Mode, Selection,
};
use serde::Serialize;

/// Repetition count used by `simulate --full`.
pub const FULL_REPS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "frd",
    version,
    about = "Two-sided MMSE bandwidth selection for fuzzy regression discontinuity designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select (h+, h-) for a CSV with columns x, y, d.
    Select(SelectArgs),
    /// Estimate the discontinuity ratio at given or selected bandwidths.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo experiment on a simulation design.
    Simulate(SimulateArgs),
    /// Write one simulated dataset as CSV.
    DgpSample(DgpSampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Triangular,
    Uniform,
    Epanechnikov,
}

impl From<KernelArg> for KernelSpec {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Triangular => KernelSpec::Triangular,
            KernelArg::Uniform => KernelSpec::Uniform,
            KernelArg::Epanechnikov => KernelSpec::Epanechnikov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fuzzy,
    Sharp,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fuzzy => Mode::Fuzzy,
            ModeArg::Sharp => Mode::Sharp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(name = "mmse-f")]
    MmseF,
    #[value(name = "mmse-s")]
    MmseS,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::MmseF => Method::MmseF,
            MethodArg::MmseS => Method::MmseS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::One => Design::Design1,
            DesignArg::Two => Design::Design2,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header containing x, y and d.
    #[arg(long)]
    pub input: PathBuf,
    /// Cutoff of the running variable.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cutoff: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Triangular)]
    pub kernel: KernelArg,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Fuzzy)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long, requires = "h_minus", conflicts_with = "auto")]
    pub h_plus: Option<f64>,
    #[arg(long, requires = "h_plus", conflicts_with = "auto")]
    pub h_minus: Option<f64>,
    /// Select the bandwidths first.
    #[arg(long, required_unless_present = "h_plus")]
    pub auto: bool,
    /// Selection mode used with --auto.
    #[arg(long, value_enum, default_value_t = ModeArg::Fuzzy)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub design: DesignArg,
    #[arg(long, value_enum, default_value_t = MethodArg::MmseF)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Use 10000 replications (overrides --reps).
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = KernelArg::Triangular)]
    pub kernel: KernelArg,
    /// Write the summary JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Directory for cdf.csv and table.csv.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DgpSampleArgs {
    #[arg(long, value_enum)]
    pub design: DesignArg,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Replication index selecting the random stream.
    #[arg(long, default_value_t = 0)]
    pub rep: u64,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Select,
    Estimate,
    Simulate,
    DgpSample,
}

/// Where a run's main output goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputTarget {
    Stdout,
    File(PathBuf),
}

/// Bandwidth source for `estimate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthChoice {
    Fixed { h_plus: f64, h_minus: f64 },
    Auto,
}

/// A validated command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input_path: Option<PathBuf>,
    pub cutoff: f64,
    pub kernel: KernelSpec,
    pub mode: Mode,
    pub output: OutputTarget,
    pub bandwidths: Option<BandwidthChoice>,
    pub design: Option<Design>,
    pub method: Option<Method>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub rep: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// A failure that ends the process with a single diagnostic line.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: "UsageError".into(),
            message: message.into(),
            exit_code: 2,
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        CliError {
            kind: "IoError".into(),
            message: format!("{}: {e}", path.display()),
            exit_code: 1,
        }
    }

    /// `error: <Kind>: <message>` on one line.
    pub fn line(&self) -> String {
        let msg = self.message.replace(['\n', '\r'], " ");
        format!("error: {}: {}", self.kind, msg.trim())
    }
}

impl From<frd_bandwidth::Error> for CliError {
    fn from(e: frd_bandwidth::Error) -> Self {
        CliError {
            kind: e.kind().to_string(),
            message: e.to_string(),
            exit_code: 1,
        }
    }
}

fn target(p: Option<PathBuf>) -> OutputTarget {
    p.map_or(OutputTarget::Stdout, OutputTarget::File)
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("--{name} must be a positive number, got {v}")))
    }
}

impl RunConfig {
    fn empty(command: CommandKind) -> Self {
        RunConfig {
            command,
            input_path: None,
            cutoff: 0.0,
            kernel: KernelSpec::Triangular,
            mode: Mode::Fuzzy,
            output: OutputTarget::Stdout,
            bandwidths: None,
            design: None,
            method: None,
            n: None,
            reps: None,
            seed: None,
            rep: None,
            out_dir: None,
        }
    }

    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let cfg = match cli.command {
            Command::Select(a) => RunConfig {
                input_path: Some(a.io.input),
                cutoff: a.io.cutoff,
                kernel: a.io.kernel.into(),
                mode: a.mode.into(),
                output: target(a.io.output),
                ..RunConfig::empty(CommandKind::Select)
            },
            Command::Estimate(a) => {
                let bandwidths = match (a.auto, a.h_plus, a.h_minus) {
                    (true, _, _) => BandwidthChoice::Auto,
                    (false, Some(hp), Some(hm)) => BandwidthChoice::Fixed {
                        h_plus: positive("h-plus", hp)?,
                        h_minus: positive("h-minus", hm)?,
                    },
                    _ => return Err(CliError::usage("give --h-plus and --h-minus, or --auto")),
                };
                RunConfig {
                    input_path: Some(a.io.input),
                    cutoff: a.io.cutoff,
                    kernel: a.io.kernel.into(),
                    mode: a.mode.into(),
                    output: target(a.io.output),
                    bandwidths: Some(bandwidths),
                    ..RunConfig::empty(CommandKind::Estimate)
                }
            }
            Command::Simulate(a) => RunConfig {
                kernel: a.kernel.into(),
                output: target(a.output),
                design: Some(a.design.into()),
                method: Some(a.method.into()),
                n: Some(a.n),
                reps: Some(if a.full { FULL_REPS } else { a.reps }),
                seed: Some(a.seed),
                out_dir: Some(a.out_dir),
                ..RunConfig::empty(CommandKind::Simulate)
            },
            Command::DgpSample(a) => RunConfig {
                output: target(a.output),
                design: Some(a.design.into()),
                n: Some(a.n),
                seed: Some(a.seed),
                rep: Some(a.rep),
                ..RunConfig::empty(CommandKind::DgpSample)
            },
        };
        if !cfg.cutoff.is_finite() {
            return Err(CliError::usage("--cutoff must be finite"));
        }
        if let Some(n) = cfg.n {
            if n < 50 {
                return Err(CliError::usage(format!("--n must be at least 50, got {n}")));
            }
        }
        if cfg.reps == Some(0) {
            return Err(CliError::usage("--reps must be at least 1"));
        }
        Ok(cfg)
    }
}

/// Outcome of argument parsing: a config, or text clap wants printed
/// verbatim (help and version).
pub enum Parsed {
    Run(RunConfig),
    Display(String),
}

/// Parse `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => RunConfig::from_cli(cli).map(Parsed::Run),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp
            | clap::error::ErrorKind::DisplayVersion
            | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                Ok(Parsed::Display(e.render().to_string()))
            }
            _ => {
                let text = e.render().to_string();
                let first = text
                    .lines()
                    .find(|l| !l.trim().is_empty())
                    .unwrap_or("invalid arguments")
                    .trim_start_matches("error: ")
                    .to_string();
                Err(CliError::usage(first))
            }
        },
    }
}

fn write_target(target: &OutputTarget, body: &[u8]) -> Result<(), CliError> {
    match target {
        OutputTarget::Stdout => {
            let mut out = io::stdout().lock();
            out.write_all(body)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
        OutputTarget::File(p) => fs::write(p, body).map_err(|e| CliError::io(p, e)),
    }
}

fn write_json<T: Serialize>(target: &OutputTarget, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_vec_pretty(value).map_err(|e| CliError {
        kind: "SerializationError".into(),
        message: e.to_string(),
        exit_code: 1,
    })?;
    body.push(b'\n');
    write_target(target, &body)
}

/// JSON emitted by `select`.
#[derive(Debug, Serialize)]
pub struct SelectReport {
    pub h_plus: f64,
    pub h_minus: f64,
    pub regime: frd_bandwidth::Regime,
    pub objective_value: f64,
    pub pilots: frd_bandwidth::PilotEstimates,
    pub coefficients: frd_bandwidth::AmseCoefficients,
    pub bounds: frd_bandwidth::Bounds,
    pub kernel: KernelSpec,
    pub mode: Mode,
    pub n: usize,
}

impl SelectReport {
    fn new(sel: &Selection, kernel: KernelSpec, mode: Mode, n: usize) -> Self {
        SelectReport {
            h_plus: sel.bandwidths.h_plus,
            h_minus: sel.bandwidths.h_minus,
            regime: sel.bandwidths.regime,
            objective_value: sel.bandwidths.objective_value,
            pilots: sel.pilots,
            coefficients: sel.coefficients,
            bounds: sel.bounds,
            kernel,
            mode,
            n,
        }
    }
}

/// JSON emitted by `estimate`.
#[derive(Debug, Serialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub estimate: FrdEstimate,
    pub kernel: KernelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectReport>,
}

const TABLE_HEADER: [&str; 12] = [
    "design",
    "method",
    "n",
    "reps",
    "h_plus_mean",
    "h_plus_sd",
    "h_minus_mean",
    "h_minus_sd",
    "bias_trimmed",
    "rmse_trimmed",
    "efficiency",
    "reps_failed",
];

/// Insert or replace this run's row in `table.csv`, then recompute the
/// efficiency column (RMSE of mmse-f divided by the row's RMSE) per design
/// and sample size.
fn update_table(path: &Path, s: &McSummary) -> Result<(), CliError> {
    let parse_err = |e: csv::Error| CliError {
        kind: "ParseError".into(),
        message: format!("{}: {e}", path.display()),
        exit_code: 1,
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    if path.exists() {
        let mut rdr = csv::Reader::from_path(path).map_err(parse_err)?;
        let header: Vec<String> = rdr.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
        if header == TABLE_HEADER {
            for rec in rdr.records() {
                rows.push(rec.map_err(parse_err)?.iter().map(str::to_string).collect());
            }
        }
    }
    let design = s.design.number().to_string();
    let method = s.method.label().to_string();
    let n = s.n.to_string();
    rows.retain(|r| !(r[0] == design && r[1] == method && r[2] == n));
    rows.push(vec![
        design,
        method,
        n,
        s.reps_total.to_string(),
        s.h_plus_mean.to_string(),
        s.h_plus_sd.to_string(),
        s.h_minus_mean.to_string(),
        s.h_minus_sd.to_string(),
        s.bias_trimmed.to_string(),
        s.rmse_trimmed.to_string(),
        String::new(),
        s.reps_failed.to_string(),
    ]);
    rows.sort_by(|a, b| (&a[0], &a[2], &a[1]).cmp(&(&b[0], &b[2], &b[1])));
    let base: Vec<(String, String, f64)> = rows
        .iter()
        .filter(|r| r[1] == "mmse-f")
        .filter_map(|r| r[9].parse().ok().map(|v| (r[0].clone(), r[2].clone(), v)))
        .collect();
    for r in rows.iter_mut() {
        let rmse: Option<f64> = r[9].parse().ok();
        let reference = base.iter().find(|b| b.0 == r[0] && b.1 == r[2]).map(|b| b.2);
        r[10] = match (reference, rmse) {
            (Some(f), Some(m)) if m > 0.0 => (f / m).to_string(),
            _ => String::new(),
        };
    }
    let mut w = csv::Writer::from_path(path).map_err(parse_err)?;
    w.write_record(TABLE_HEADER).map_err(parse_err)?;
    for r in &rows {
        w.write_record(r).map_err(parse_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_cdf(path: &Path, s: &McSummary) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError {
        kind: "IoError".into(),
        message: format!("{}: {e}", path.display()),
        exit_code: 1,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["threshold", "fraction"]).map_err(err)?;
    for p in &s.cdf {
        w.write_record([p.threshold.to_string(), p.fraction.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Execute a validated configuration.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        CommandKind::Select => {
            let path = cfg.input_path.as_ref().expect("validated");
            let sample = load_csv(path, cfg.cutoff)?;
            let sel = select_bandwidths(&sample, cfg.kernel, cfg.mode, Execution::Parallel)?;
            write_json(&cfg.output, &SelectReport::new(&sel, cfg.kernel, cfg.mode, sample.len()))
        }
        CommandKind::Estimate => {
            let path = cfg.input_path.as_ref().expect("validated");
            let sample = load_csv(path, cfg.cutoff)?;
            let (hp, hm, selection) = match cfg.bandwidths.expect("validated") {
                BandwidthChoice::Fixed { h_plus, h_minus } => (h_plus, h_minus, None),
                BandwidthChoice::Auto => {
                    let sel = select_bandwidths(&sample, cfg.kernel, cfg.mode, Execution::Parallel)?;
                    let report = SelectReport::new(&sel, cfg.kernel, cfg.mode, sample.len());
                    (sel.bandwidths.h_plus, sel.bandwidths.h_minus, Some(report))
                }
            };
            let estimate = frd_estimate(&sample, hp, hm, cfg.kernel)?;
            write_json(
                &cfg.output,
                &EstimateReport {
                    estimate,
                    kernel: cfg.kernel,
                    selection,
                },
            )
        }
        CommandKind::Simulate => {
            let spec = DgpSpec::new(
                cfg.design.expect("validated"),
                cfg.n.expect("validated"),
                cfg.seed.expect("validated"),
            );
            let mc = McConfig::new(cfg.reps.expect("validated"), cfg.kernel);
            let summary = run_monte_carlo_with(&spec, cfg.method.expect("validated"), &mc)?;
            let dir = cfg.out_dir.as_ref().expect("validated");
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            write_cdf(&dir.join("cdf.csv"), &summary)?;
            update_table(&dir.join("table.csv"), &summary)?;
            write_json(&cfg.output, &summary)
        }
        CommandKind::DgpSample => {
            let spec = DgpSpec::new(
                cfg.design.expect("validated"),
                cfg.n.expect("validated"),
                cfg.seed.expect("validated"),
            );
            let sample = draw_sample(&spec, cfg.rep.unwrap_or(0))?;
            let mut buf = Vec::new();
            sample.write_csv(&mut buf)?;
            write_target(&cfg.output, &buf)
        }
    }
}

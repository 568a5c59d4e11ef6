//! Command-line definitions and dispatch.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use floquet_ratchet::floquet::{
    classify_floquet_states, ep_clusters, imag_sum_xi, pt_threshold, spectrum_for, OmegaSearch,
    ThresholdSearch, DEFAULT_DEGENERACY_TOL,
};
use floquet_ratchet::gpe::{
    gpe_evolve, momentum_to_grid, DEFAULT_GRID_SIZE, DEFAULT_STEPS_PER_PERIOD,
};
use floquet_ratchet::model::initial_state_zero_momentum;
use floquet_ratchet::observables::{linear_fit, time_averaged_current};
use floquet_ratchet::propagation::evolve_with_observables;
use floquet_ratchet::three_level::{
    analytic_current, build_t_matrix, rabi_period, three_level_ode_evolve, Resonance,
};
use floquet_ratchet::{DriveParams, PropagatorConfig, Scheme, TimeSeries};

use crate::config::{parse_config, ConfigError};
use crate::grid::{GridError, GridSpec};
use crate::output::{self, fmt_float};
use crate::record::ScanRecord;
use crate::sweep::{resolve_workers, run_sweep, Duration, Job};

pub const EXIT_OK: i32 = 0;
/// Output could not be written.
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] floquet_ratchet::Error),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use floquet_ratchet::Error as E;
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(
                E::InvalidParameter(_) | E::SizeMismatch { .. } | E::TooShort { .. },
            ) => EXIT_VALIDATION,
            CliError::Core(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "floquet-ratchet",
    version,
    about = "Floquet spectra, currents and thresholds of a PT-symmetric driven rotor"
)]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Sweep threads; defaults to $FLOQUET_RATCHET_WORKERS, then all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Quasienergies and state classes of the one-period operator.
    Spectrum(SpectrumArgs),
    /// PT-breaking threshold λ_c at fixed K and ω, optionally with a ξ(λ) scan.
    Threshold(ThresholdArgs),
    /// λ_c over a (K, ω) grid.
    ThresholdMap(ThresholdMapArgs),
    /// Time-averaged current versus ω.
    TacScan(TacScanArgs),
    /// Time-averaged current versus λ.
    TacVsLambda(TacVsLambdaArgs),
    /// Current and norm from |0⟩, or broken-phase plateaus over an ω grid.
    Evolve(EvolveArgs),
    /// Coalesced pairs in the spectrum and momentum cutoffs of the growing state.
    EpAnalyze(EpAnalyzeArgs),
    /// Frequency at which the two dominant states separate, versus K.
    OmegaC(OmegaCArgs),
    /// Nonlinear evolution on a position grid.
    GpeEvolve(GpeArgs),
    /// Effective three-level model: closed form and direct integration.
    Threelevel(ThreeLevelArgs),
}

#[derive(Args, Debug, Clone)]
pub struct NumericsArgs {
    /// Propagator steps per drive period.
    #[arg(long, default_value_t = PropagatorConfig::default().steps_per_period)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Midpoint)]
    pub scheme: SchemeArg,
    /// Largest tolerated population in |n| ∈ {M-1, M}.
    #[arg(long, default_value_t = PropagatorConfig::default().boundary_tolerance, allow_negative_numbers = true)]
    pub boundary_tol: f64,
}

impl NumericsArgs {
    fn config(&self) -> CliResult<PropagatorConfig> {
        let cfg = PropagatorConfig {
            steps_per_period: self.steps,
            scheme: match self.scheme {
                SchemeArg::Midpoint => Scheme::MidpointExponential,
                SchemeArg::Cf4 => Scheme::CommutatorFree4,
            },
            boundary_tolerance: self.boundary_tol,
            ..PropagatorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeArg {
    Midpoint,
    Cf4,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    #[arg(long = "K", alias = "k", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
}

impl PointArgs {
    fn params(&self) -> CliResult<DriveParams> {
        let p = DriveParams::new(self.k, self.lambda, self.omega)?.with_phi(self.phi);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunLength {
    /// Run length in drive periods (ignored when --t-max is given).
    #[arg(long, default_value_t = 200.0, allow_negative_numbers = true)]
    pub periods: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub samples_per_period: usize,
}

impl RunLength {
    fn duration(&self) -> CliResult<Duration> {
        let d = match self.t_max {
            Some(t) => Duration::Time(t),
            None => Duration::Periods(self.periods),
        };
        let ok = match d {
            Duration::Time(t) => t.is_finite() && t > 0.0,
            Duration::Periods(n) => n.is_finite() && n > 0.0,
        };
        if !ok || self.samples_per_period == 0 {
            return Err(CliError::Validation(
                "run length and samples per period must be positive".into(),
            ));
        }
        Ok(d)
    }
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Truncation M (2M+1 momentum states).
    #[arg(long, default_value_t = 255)]
    pub modes: usize,
    #[arg(long, default_value_t = DEFAULT_DEGENERACY_TOL, allow_negative_numbers = true)]
    pub degeneracy_tol: f64,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long = "K", alias = "k", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 255)]
    pub modes: usize,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    pub xi_tol: f64,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub resolution: f64,
    /// Also tabulate ξ on this λ grid (start:stop:step or a list).
    #[arg(long, allow_hyphen_values = true)]
    pub xi_scan: Option<GridSpec>,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct ThresholdMapArgs {
    #[arg(long = "K", alias = "k", allow_hyphen_values = true)]
    pub k: GridSpec,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: GridSpec,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 255)]
    pub modes: usize,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    pub xi_tol: f64,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub resolution: f64,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct TacScanArgs {
    #[arg(long = "K", alias = "k", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_max: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_step: f64,
    #[arg(long, default_value_t = 24)]
    pub modes: usize,
    #[command(flatten)]
    pub run: RunLength,
    /// Start of the averaging window.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub transient: f64,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct TacVsLambdaArgs {
    #[arg(long = "K", alias = "k", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: GridSpec,
    #[arg(long, default_value_t = 24)]
    pub modes: usize,
    #[command(flatten)]
    pub run: RunLength,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub transient: f64,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[arg(long = "K", alias = "k", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Required unless --sweep-omega is given.
    #[arg(
        long,
        required_unless_present = "sweep_omega",
        allow_negative_numbers = true
    )]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 64)]
    pub modes: usize,
    #[command(flatten)]
    pub run: RunLength,
    /// Write one population column per momentum.
    #[arg(long)]
    pub populations: bool,
    /// Renormalize once per period (needed when the norm grows exponentially).
    #[arg(long)]
    pub renormalize: bool,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub transient: f64,
    /// Broken-phase plateaus over this ω grid instead of a single run.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_omega: Option<GridSpec>,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct EpAnalyzeArgs {
    #[arg(long = "K", alias = "k", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 255)]
    pub modes: usize,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub overlap_tol: f64,
    /// Momentum cutoff of the evolved state over this ω grid.
    #[arg(long, allow_hyphen_values = true)]
    pub cutoff_omega: Option<GridSpec>,
    #[arg(long, default_value_t = 2000.0, allow_negative_numbers = true)]
    pub cutoff_t: f64,
    /// Population fraction (relative to the largest) defining the cutoff.
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
    pub cutoff_frac: f64,
    #[arg(long, default_value_t = 30)]
    pub cutoff_modes: usize,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct OmegaCArgs {
    #[arg(long = "K", alias = "k", allow_hyphen_values = true)]
    pub k: GridSpec,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 14.0, allow_negative_numbers = true)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub scan_step: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub s_tol: f64,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub resolution: f64,
    #[arg(long, default_value_t = 64)]
    pub modes: usize,
    #[command(flatten)]
    pub numerics: NumericsArgs,
}

#[derive(Args, Debug)]
pub struct GpeArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub g: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    /// Split-step steps per drive period (at least 256).
    #[arg(long, default_value_t = DEFAULT_STEPS_PER_PERIOD)]
    pub steps_per_period: usize,
    #[command(flatten)]
    pub run: RunLength,
    #[arg(long)]
    pub populations: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResonanceArg {
    Half,
    One,
}

#[derive(Args, Debug)]
pub struct ThreeLevelArgs {
    #[arg(long = "K", alias = "k", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = ResonanceArg::One)]
    pub resonance: ResonanceArg,
    /// Defaults to one Rabi period, or 2000 when the Rabi frequency is imaginary.
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    floquet_ratchet::use_sequential_kernels();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

const GLOBAL_VALUED: [&str; 3] = ["--config", "--out", "--workers"];

fn flag_value(args: &[String], name: &str) -> Option<String> {
    let eq = format!("{name}=");
    args.iter().enumerate().find_map(|(i, a)| {
        if a == name {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix(&eq).map(str::to_string)
        }
    })
}

/// Inserts `--key=value` for every config entry the command line does not
/// already set, directly after the subcommand name.
fn merge_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let text: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let Some(path) = flag_value(&text, "--config") else {
        return Ok(args);
    };
    let body = fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read config `{path}`: {e}")))?;
    let config = parse_config(&body)?;
    let root = Cli::command();
    let position = (1..text.len()).find(|&i| {
        root.find_subcommand(&text[i]).is_some() && !GLOBAL_VALUED.contains(&text[i - 1].as_str())
    });
    let Some(position) = position else {
        return Ok(args);
    };
    let sub = root.find_subcommand(&text[position]).expect("found above");
    let mut injected = Vec::new();
    for (key, value) in config.iter() {
        if key == "config" {
            return Err(CliError::Validation(
                "a config file cannot name another config file".into(),
            ));
        }
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| {
                a.get_long() == Some(key) || a.get_all_aliases().is_some_and(|al| al.contains(&key))
            })
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "unknown config key `{key}` for `{}`",
                    sub.get_name()
                ))
            })?;
        let long = arg.get_long().expect("config keys match long flags");
        let mut names = vec![long];
        names.extend(arg.get_all_aliases().unwrap_or_default());
        let given = text.iter().any(|a| {
            names
                .iter()
                .any(|n| a == &format!("--{n}") || a.starts_with(&format!("--{n}=")))
        });
        if given {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value {
                "true" => injected.push(OsString::from(format!("--{long}"))),
                "false" => {}
                _ => {
                    return Err(CliError::Validation(format!(
                        "`{key}` expects true or false"
                    )))
                }
            }
        } else {
            injected.push(OsString::from(format!("--{long}={value}")));
        }
    }
    let mut out = args;
    let tail = out.split_off(position + 1);
    out.extend(injected);
    out.extend(tail);
    Ok(out)
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn report(dir: &Path, names: &[&str]) {
    for n in names {
        println!("wrote {}", dir.join(n).display());
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    let workers = resolve_workers(cli.workers);
    match &cli.command {
        Command::Spectrum(a) => spectrum(a, out),
        Command::Threshold(a) => threshold(a, out, workers),
        Command::ThresholdMap(a) => threshold_map(a, out, workers),
        Command::TacScan(a) => tac_scan(a, out, workers),
        Command::TacVsLambda(a) => tac_vs_lambda(a, out, workers),
        Command::Evolve(a) => evolve(a, out, workers),
        Command::EpAnalyze(a) => ep_analyze(a, out, workers),
        Command::OmegaC(a) => omega_c(a, out, workers),
        Command::GpeEvolve(a) => gpe(a, out),
        Command::Threelevel(a) => three_level(a, out),
    }
}

fn require_modes(m: usize) -> CliResult<()> {
    if m == 0 {
        return Err(CliError::Validation("--modes must be at least 1".into()));
    }
    Ok(())
}

/// Writes `scan.csv` and `records.csv` and warns about failed points.
fn write_sweep(out: &Path, param: &str, axis: &[f64], records: &[ScanRecord]) -> CliResult<()> {
    output::write_scan(create(out, "scan.csv")?, param, axis, records)?;
    output::write_records(create(out, "records.csv")?, records)?;
    warn_failures(records);
    report(out, &["scan.csv", "records.csv"]);
    Ok(())
}

fn warn_failures(records: &[ScanRecord]) {
    let failed: Vec<&ScanRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if !failed.is_empty() {
        eprintln!(
            "warning: {} of {} points failed",
            failed.len(),
            records.len()
        );
        for r in failed.iter().take(5) {
            eprintln!("  point {}: {}", r.index, r.error.as_deref().unwrap_or(""));
        }
    }
}

fn points_over<F>(axis: &[f64], make: F) -> CliResult<Vec<DriveParams>>
where
    F: Fn(f64) -> floquet_ratchet::Result<DriveParams>,
{
    Ok(axis.iter().map(|&x| make(x)).collect::<Result<_, _>>()?)
}

fn spectrum(a: &SpectrumArgs, out: &Path) -> CliResult<()> {
    require_modes(a.modes)?;
    let p = a.point.params()?;
    let spec = spectrum_for(&p, a.modes, &a.numerics.config()?)?;
    let z = initial_state_zero_momentum(a.modes)?;
    let classes = classify_floquet_states(&spec, a.degeneracy_tol, &z);
    output::write_spectrum(create(out, "spectrum.csv")?, &spec, &classes)?;
    println!("xi = {}", fmt_float(imag_sum_xi(&spec)));
    report(out, &["spectrum.csv"]);
    Ok(())
}

fn threshold_search(lo: f64, hi: f64, tol: f64, resolution: f64, modes: usize) -> ThresholdSearch {
    ThresholdSearch {
        xi_tol: tol,
        resolution,
        truncation: modes,
        ..ThresholdSearch::new(lo, hi)
    }
}

fn threshold(a: &ThresholdArgs, out: &Path, workers: usize) -> CliResult<()> {
    require_modes(a.modes)?;
    let cfg = a.numerics.config()?;
    let base = DriveParams::new(a.k, a.lambda_min, a.omega)?.with_phi(a.phi);
    if let Some(grid) = &a.xi_scan {
        let axis = grid.values();
        let points = points_over(&axis, |l| base.with_lambda(l))?;
        let records = run_sweep(
            &points,
            &Job::Xi {
                truncation: a.modes,
            },
            &cfg,
            workers,
        );
        write_sweep(out, "lambda", &axis, &records)?;
    }
    let search = threshold_search(a.lambda_min, a.lambda_max, a.xi_tol, a.resolution, a.modes);
    let lc = pt_threshold(&base, &search, &cfg)?;
    output::write_summary(
        create(out, "threshold.csv")?,
        &[
            ("K", fmt_float(a.k)),
            ("omega", fmt_float(a.omega)),
            ("lambda_c", fmt_float(lc)),
        ],
    )?;
    println!("lambda_c = {}", fmt_float(lc));
    report(out, &["threshold.csv"]);
    Ok(())
}

fn threshold_map(a: &ThresholdMapArgs, out: &Path, workers: usize) -> CliResult<()> {
    require_modes(a.modes)?;
    let cfg = a.numerics.config()?;
    let mut coords = Vec::new();
    let mut points = Vec::new();
    for k in a.k.values() {
        for w in a.omega.values() {
            points.push(DriveParams::new(k, a.lambda_min, w)?.with_phi(a.phi));
            coords.push(vec![k, w]);
        }
    }
    let search = threshold_search(a.lambda_min, a.lambda_max, a.xi_tol, a.resolution, a.modes);
    let records = run_sweep(&points, &Job::LambdaC { search }, &cfg, workers);
    output::write_grid(
        create(out, "threshold_map.csv")?,
        &["K", "omega"],
        &coords,
        &records,
    )?;
    output::write_records(create(out, "records.csv")?, &records)?;
    warn_failures(&records);
    report(out, &["threshold_map.csv", "records.csv"]);
    Ok(())
}

fn tac_scan(a: &TacScanArgs, out: &Path, workers: usize) -> CliResult<()> {
    require_modes(a.modes)?;
    let grid = GridSpec::range(a.omega_min, a.omega_max, a.omega_step)?;
    let axis = grid.values();
    let points = points_over(&axis, |w| {
        Ok(DriveParams::new(a.k, a.lambda, w)?.with_phi(a.phi))
    })?;
    let job = Job::Tac {
        truncation: a.modes,
        duration: a.run.duration()?,
        samples_per_period: a.run.samples_per_period,
        transient: a.transient,
    };
    let records = run_sweep(&points, &job, &a.numerics.config()?, workers);
    write_sweep(out, "omega", &axis, &records)
}

fn tac_vs_lambda(a: &TacVsLambdaArgs, out: &Path, workers: usize) -> CliResult<()> {
    require_modes(a.modes)?;
    let axis = a.lambda.values();
    let points = points_over(&axis, |l| {
        Ok(DriveParams::new(a.k, l, a.omega)?.with_phi(a.phi))
    })?;
    let job = Job::Tac {
        truncation: a.modes,
        duration: a.run.duration()?,
        samples_per_period: a.run.samples_per_period,
        transient: a.transient,
    };
    let records = run_sweep(&points, &job, &a.numerics.config()?, workers);
    write_sweep(out, "lambda", &axis, &records)
}

fn summary_fields(ts: &TimeSeries, transient: f64) -> Option<Vec<(&'static str, String)>> {
    match time_averaged_current(ts, transient) {
        Ok(st) => Some(vec![
            ("tac", fmt_float(st.tac)),
            (
                "asymptotic",
                st.asymptotic.map_or_else(|| "NaN".into(), fmt_float),
            ),
            ("late_mean", fmt_float(st.late_mean)),
            ("plateau", st.plateau_detected.to_string()),
            ("converged", st.converged.to_string()),
            (
                "final_log_norm",
                fmt_float(*ts.log_norm.last().unwrap_or(&0.0)),
            ),
            (
                "max_boundary_population",
                fmt_float(ts.max_boundary_population),
            ),
            ("truncation_safe", ts.truncation_safe.to_string()),
        ]),
        Err(e) => {
            eprintln!("warning: no summary ({e})");
            None
        }
    }
}

fn write_run(out: &Path, ts: &TimeSeries, populations: bool, transient: f64) -> CliResult<()> {
    output::write_timeseries(create(out, "timeseries.csv")?, ts, populations)?;
    let mut names = vec!["timeseries.csv"];
    if let Some(fields) = summary_fields(ts, transient) {
        output::write_summary(create(out, "summary.csv")?, &fields)?;
        names.push("summary.csv");
    }
    if !ts.truncation_safe {
        eprintln!(
            "warning: boundary population reached {:e}; increase --modes",
            ts.max_boundary_population
        );
    }
    report(out, &names);
    Ok(())
}

fn evolve(a: &EvolveArgs, out: &Path, workers: usize) -> CliResult<()> {
    require_modes(a.modes)?;
    let mut cfg = a.numerics.config()?;
    let duration = a.run.duration()?;
    if let Some(grid) = &a.sweep_omega {
        let axis = grid.values();
        let points = points_over(&axis, |w| {
            Ok(DriveParams::new(a.k, a.lambda, w)?.with_phi(a.phi))
        })?;
        let job = Job::AsymptoticCurrent {
            truncation: a.modes,
            duration,
            samples_per_period: a.run.samples_per_period,
        };
        let records = run_sweep(&points, &job, &cfg, workers);
        write_sweep(out, "omega", &axis, &records)?;
        let (x, y): (Vec<f64>, Vec<f64>) = axis
            .iter()
            .zip(&records)
            .filter(|(_, r)| r.value.is_finite())
            .map(|(&w, r)| (w, r.value.abs()))
            .unzip();
        if x.len() >= 2 {
            let (slope, intercept, r2) = linear_fit(&x, &y);
            output::write_summary(
                create(out, "fit.csv")?,
                &[
                    ("slope", fmt_float(slope)),
                    ("intercept", fmt_float(intercept)),
                    ("r2", fmt_float(r2)),
                ],
            )?;
            println!(
                "|I| ~ {} omega + {} (R^2 = {})",
                fmt_float(slope),
                fmt_float(intercept),
                fmt_float(r2)
            );
            report(out, &["fit.csv"]);
        }
        return Ok(());
    }
    cfg.renormalize_each_step = a.renormalize;
    let omega = a
        .omega
        .expect("clap requires --omega without --sweep-omega");
    let p = DriveParams::new(a.k, a.lambda, omega)?.with_phi(a.phi);
    p.validate()?;
    let z = initial_state_zero_momentum(a.modes)?;
    let ts = evolve_with_observables(
        &z,
        &p,
        duration.t_max(p.period()),
        a.run.samples_per_period,
        &cfg,
    )?;
    write_run(out, &ts, a.populations, a.transient)
}

fn ep_analyze(a: &EpAnalyzeArgs, out: &Path, workers: usize) -> CliResult<()> {
    require_modes(a.modes)?;
    let cfg = a.numerics.config()?;
    let p = DriveParams::new(a.k, a.lambda, a.omega)?.with_phi(a.phi);
    let spec = spectrum_for(&p, a.modes, &cfg)?;
    let z = initial_state_zero_momentum(a.modes)?;
    let clusters = ep_clusters(&spec, a.gap_tol, a.overlap_tol, &z);
    let mut w = csv::Writer::from_writer(create(out, "ep.csv")?);
    w.write_record([
        "cluster",
        "re_eps",
        "im_eps",
        "mean_p",
        "pairs",
        "max_gap",
        "min_overlap",
    ])?;
    for (i, c) in clusters.iter().enumerate() {
        w.write_record([
            i.to_string(),
            fmt_float(c.quasienergy.re),
            fmt_float(c.quasienergy.im),
            fmt_float(c.mean_momentum),
            c.pairs.len().to_string(),
            fmt_float(c.max_gap),
            fmt_float(c.min_overlap),
        ])?;
    }
    w.flush()?;
    println!("{} coalesced clusters", clusters.len());
    report(out, &["ep.csv"]);
    if let Some(grid) = &a.cutoff_omega {
        require_modes(a.cutoff_modes)?;
        if !(a.cutoff_t > 0.0 && a.cutoff_frac > 0.0 && a.cutoff_frac < 1.0) {
            return Err(CliError::Validation(
                "need --cutoff-t > 0 and 0 < --cutoff-frac < 1".into(),
            ));
        }
        let axis = grid.values();
        let points = points_over(&axis, |om| {
            Ok(DriveParams::new(a.k, a.lambda, om)?.with_phi(a.phi))
        })?;
        let job = Job::Cutoff {
            truncation: a.cutoff_modes,
            t_max: a.cutoff_t,
            frac: a.cutoff_frac,
        };
        let records = run_sweep(&points, &job, &cfg, workers);
        write_sweep(out, "omega", &axis, &records)?;
    }
    Ok(())
}

fn omega_c(a: &OmegaCArgs, out: &Path, workers: usize) -> CliResult<()> {
    require_modes(a.modes)?;
    let axis = a.k.values();
    let points = points_over(&axis, |k| DriveParams::new(k, a.lambda, a.omega_min))?;
    let search = OmegaSearch {
        scan_step: a.scan_step,
        s_tol: a.s_tol,
        resolution: a.resolution,
        truncation: a.modes,
        ..OmegaSearch::new(a.omega_min, a.omega_max)
    };
    let records = run_sweep(
        &points,
        &Job::OmegaC { search },
        &a.numerics.config()?,
        workers,
    );
    write_sweep(out, "K", &axis, &records)
}

fn gpe(a: &GpeArgs, out: &Path) -> CliResult<()> {
    let p = a.point.params()?.with_g(a.g);
    if a.steps_per_period < 256 {
        return Err(CliError::Validation(
            "--steps-per-period must be at least 256".into(),
        ));
    }
    let n = a.grid_size;
    let z = initial_state_zero_momentum(1)?;
    let grid = momentum_to_grid(&z, n)?;
    let duration = a.run.duration()?;
    let ts = gpe_evolve(
        &grid,
        &p,
        duration.t_max(p.period()),
        p.period() / a.steps_per_period as f64,
        a.run.samples_per_period,
    )?;
    write_run(out, &ts, a.populations, 0.0)
}

fn three_level(a: &ThreeLevelArgs, out: &Path) -> CliResult<()> {
    let resonance = match a.resonance {
        ResonanceArg::Half => Resonance::Half,
        ResonanceArg::One => Resonance::One,
    };
    if !(a.k.is_finite() && a.k > 0.0 && a.lambda.is_finite() && a.lambda >= 0.0) || a.samples == 0
    {
        return Err(CliError::Validation(
            "need K > 0, lambda >= 0 and samples >= 1".into(),
        ));
    }
    let t_max = a
        .t_max
        .unwrap_or_else(|| rabi_period(a.k, a.lambda, resonance).unwrap_or(2000.0));
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(CliError::Validation("--t-max must be positive".into()));
    }
    let t = build_t_matrix(a.k, a.lambda, resonance);
    let ts = three_level_ode_evolve(&t, resonance, t_max, t_max / a.samples as f64)?;
    let analytic: Vec<f64> = ts
        .times
        .iter()
        .map(|&s| analytic_current(a.k, a.lambda, resonance, s))
        .collect();
    output::write_timeseries_with(
        create(out, "threelevel.csv")?,
        &ts,
        true,
        &[("analytic_current", &analytic)],
    )?;
    report(out, &["threelevel.csv"]);
    Ok(())
}

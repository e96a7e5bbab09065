//! The `dualrail` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dualrail_core::sweep::summarize;
use dualrail_core::tomography::TimeGrid;
use dualrail_core::{
    build_chain, build_schedule, certify, fit_scaling, ChainSpec, Convention, DisorderConfig, EndpointFunctions,
    LogicalQubit, SchedulerConfig, Shots, SpectralPropagator, SweepConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::parse_config;
use crate::error::{Error, Result};
use crate::formats::{read_chain, read_endpoints, write_endpoints, write_schedule, write_transfer_log, Header};
use crate::parallel;
use crate::report::{self, DEFAULT_FAILURE_GRID};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCAPABLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dualrail", version, about = "Conclusive dual-rail state transfer over disordered spin chains")]
struct Cli {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One chain pair, one schedule, a batch of transfers.
    Simulate(Params),
    /// Emit the measurement schedule of one chain pair as CSV.
    Schedule(Params),
    /// Disorder sweep with tabular summaries.
    Sweep(Params),
    /// Scaling-law fit t = a N^b |ln P| over a length sweep.
    Fit(Params),
    /// End-only characterization of a chain pair.
    Tomography {
        #[command(subcommand)]
        action: Tomography,
    },
}

#[derive(Debug, Subcommand)]
enum Tomography {
    /// Sample the four endpoint functions and write them as CSV.
    Estimate(Params),
    /// Decide capability from an endpoint CSV alone.
    Certify(Params),
}

#[derive(Debug, Clone, Default, Args)]
struct Params {
    /// Chain length(s), comma separated; two values give N1,N2 for single-pair commands.
    #[arg(long)]
    n: Option<String>,
    /// Disorder strength(s) Δ.
    #[arg(long)]
    delta: Option<String>,
    /// Sign correlation(s) c.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    target_failure: Option<String>,
    #[arg(long)]
    time_step: Option<String>,
    /// Longest wait per measurement (default: N / hopping).
    #[arg(long)]
    horizon: Option<String>,
    /// Relative amplitude tolerance ε.
    #[arg(long)]
    tolerance: Option<String>,
    /// Also match slopes d|F|/dt = d|G|/dt within this tolerance.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.01")]
    slope_match: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv or svg
    #[arg(long)]
    format: Option<String>,
    /// pauli (H = Σ J σ·σ) or half-pauli (H = Σ J/2 σ·σ)
    #[arg(long)]
    convention: Option<String>,
    #[arg(long)]
    max_measurements: Option<String>,
    /// Tomography shots per setting; 0 means exact amplitudes.
    #[arg(long)]
    shots: Option<String>,
    /// Tomography grid spacing.
    #[arg(long)]
    grid_step: Option<String>,
    /// Last tomography time; must cover the whole transfer (default: 40 N / hopping).
    #[arg(long)]
    grid_horizon: Option<String>,
    /// Number of transfers for `simulate`.
    #[arg(long)]
    trials: Option<String>,
    /// Bloch angles of the input qubit.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Chain files overriding the random pair.
    #[arg(long)]
    chain1: Option<String>,
    #[arg(long)]
    chain2: Option<String>,
    /// Endpoint CSV for `tomography certify`.
    #[arg(long)]
    endpoints: Option<String>,
    /// Failure probabilities for `fit`, comma separated.
    #[arg(long)]
    failures: Option<String>,
}

const KEYS: [&str; 24] = [
    "n",
    "delta",
    "c",
    "samples",
    "target_failure",
    "time_step",
    "horizon",
    "tolerance",
    "slope_match",
    "seed",
    "out",
    "format",
    "convention",
    "max_measurements",
    "shots",
    "grid_step",
    "trials",
    "theta",
    "phi",
    "chain1",
    "chain2",
    "endpoints",
    "failures",
    "grid_horizon",
];

impl Params {
    fn entries(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("n", &self.n),
            ("delta", &self.delta),
            ("c", &self.c),
            ("samples", &self.samples),
            ("target_failure", &self.target_failure),
            ("time_step", &self.time_step),
            ("horizon", &self.horizon),
            ("tolerance", &self.tolerance),
            ("slope_match", &self.slope_match),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
            ("convention", &self.convention),
            ("max_measurements", &self.max_measurements),
            ("shots", &self.shots),
            ("grid_step", &self.grid_step),
            ("grid_horizon", &self.grid_horizon),
            ("trials", &self.trials),
            ("theta", &self.theta),
            ("phi", &self.phi),
            ("chain1", &self.chain1),
            ("chain2", &self.chain2),
            ("endpoints", &self.endpoints),
            ("failures", &self.failures),
        ]
    }
}

/// Resolved settings: config file values overridden by flags.
#[derive(Debug, Clone)]
struct Settings(BTreeMap<String, String>);

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl Settings {
    fn resolve(file: Option<&Path>, params: &Params) -> Result<Self> {
        let mut map = match file {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(usage(format!("unknown config key {key:?}")));
        }
        for (key, value) in params.entries() {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| usage(format!("invalid value for --{}: {v:?}", key.replace('_', "-")))),
        }
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| usage(format!("invalid value for --{}: {v:?}", key.replace('_', "-"))))
            }
        }
    }

    fn list<T: std::str::FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| usage(format!("invalid value in --{}: {s:?}", key.replace('_', "-"))))
                })
                .collect(),
        }
    }

    fn convention(&self) -> Result<Convention> {
        match self.raw("convention") {
            None => Ok(Convention::default()),
            Some(name) => Convention::from_name(name).ok_or_else(|| usage(format!("unknown convention {name:?}"))),
        }
    }

    fn svg(&self) -> Result<bool> {
        match self.raw("format").unwrap_or("csv") {
            "csv" => Ok(false),
            "svg" => Ok(true),
            other => Err(usage(format!("unknown format {other:?}; expected csv or svg"))),
        }
    }

    fn scheduler(&self, len: usize) -> Result<SchedulerConfig> {
        let mut config = SchedulerConfig::for_chain(len, self.convention()?);
        config.time_step = self.get("time_step", config.time_step)?;
        config.horizon = self.get("horizon", config.horizon)?;
        config.amplitude_tolerance = self.get("tolerance", config.amplitude_tolerance)?;
        config.target_failure = self.get("target_failure", config.target_failure)?;
        config.max_measurements = self.get("max_measurements", config.max_measurements)?;
        config.slope_tolerance = self.opt("slope_match")?;
        config.validate().map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }

    fn sweep(&self) -> Result<SweepConfig> {
        let base = SchedulerConfig::for_length(2);
        let config = SweepConfig {
            lengths: self.list("n", &[20])?,
            strengths: self.list("delta", &[0.0])?,
            correlations: self.list("c", &[0.5])?,
            samples: self.get("samples", 10)?,
            target_failure: self.get("target_failure", base.target_failure)?,
            base_seed: self.get("seed", 0)?,
            convention: self.convention()?,
            time_step: self.get("time_step", base.time_step)?,
            horizon: self.opt("horizon")?,
            amplitude_tolerance: self.get("tolerance", base.amplitude_tolerance)?,
            slope_tolerance: self.opt("slope_match")?,
            max_measurements: self.get("max_measurements", base.max_measurements)?,
        };
        config.validate().map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }

    /// Chain pair from `--chain1/--chain2` files or drawn from the disorder flags.
    fn pair(&self) -> Result<(ChainSpec, ChainSpec)> {
        let convention = self.convention()?;
        let lengths: Vec<usize> = self.list("n", &[20])?;
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(usage("--n takes one length or two (N1,N2)"));
        }
        let strength: f64 = self.list("delta", &[0.0])?[0];
        let correlation: f64 = self.list("c", &[0.5])?[0];
        let seed: u64 = self.get("seed", 0)?;
        let draw = |key: &str, index: usize| -> Result<ChainSpec> {
            if let Some(path) = self.raw(key) {
                return Ok(read_chain(File::open(path)?)?.spec);
            }
            let len = lengths[index.min(lengths.len() - 1)];
            let disorder = DisorderConfig::new(strength, correlation, seed.wrapping_mul(2).wrapping_add(index as u64));
            Ok(build_chain(len, &disorder).map_err(|e| usage(e.to_string()))?.with_convention(convention))
        };
        Ok((draw("chain1", 0)?, draw("chain2", 1)?))
    }

    fn out(&self) -> Option<PathBuf> {
        self.raw("out").map(PathBuf::from)
    }
}

fn propagators(pair: &(ChainSpec, ChainSpec)) -> Result<(SpectralPropagator, SpectralPropagator)> {
    Ok((SpectralPropagator::from_chain(&pair.0)?, SpectralPropagator::from_chain(&pair.1)?))
}

/// Writes to `--out` when given, otherwise to `stdout`.
fn emit(settings: &Settings, stdout: &mut dyn Write, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match settings.out() {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => write(stdout),
    }
}

fn simulate(s: &Settings, stdout: &mut dyn Write) -> Result<i32> {
    let pair = s.pair()?;
    let (p1, p2) = propagators(&pair)?;
    let config = s.scheduler(pair.0.len().max(pair.1.len()))?;
    let schedule = build_schedule(&p1, &p2, &config)?;
    let qubit = LogicalQubit::from_bloch(s.get("theta", 1.0)?, s.get("phi", 0.5)?);
    let trials: u64 = s.get("trials", 1)?;
    let records =
        parallel::run_transfers(qubit, &schedule, config.amplitude_tolerance, &p1, &p2, trials, s.get("seed", 0)?)?;
    let successes: Vec<_> = records.iter().filter(|r| r.succeeded()).collect();
    let worst = successes.iter().filter_map(|r| r.fidelity).fold(1.0f64, f64::min);
    writeln!(
        stdout,
        "schedule: M={} t={:.3} achieved={} P={:.3e}",
        schedule.measurements(),
        schedule.total_time(),
        schedule.achieved,
        schedule.final_failure()
    )?;
    writeln!(stdout, "transfers: {}/{} succeeded, worst fidelity {worst:.12}", successes.len(), trials)?;
    if let Some(path) = s.out() {
        let mut file = BufWriter::new(File::create(path)?);
        write_transfer_log(&mut file, &records)?;
        file.flush()?;
    }
    Ok(EXIT_OK)
}

fn schedule(s: &Settings, stdout: &mut dyn Write) -> Result<i32> {
    let pair = s.pair()?;
    let (p1, p2) = propagators(&pair)?;
    let config = s.scheduler(pair.0.len().max(pair.1.len()))?;
    let schedule = build_schedule(&p1, &p2, &config)?;
    emit(s, stdout, |w| write_schedule(w, &schedule, &config))?;
    Ok(EXIT_OK)
}

fn write_file(dir: &Path, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut file = BufWriter::new(File::create(dir.join(name))?);
    write(&mut file)?;
    file.flush()?;
    Ok(())
}

fn sweep(s: &Settings, stdout: &mut dyn Write) -> Result<i32> {
    let config = s.sweep()?;
    let svg = s.svg()?;
    let dir = s.out().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let records = parallel::run_sweep(&config)?;
    let summaries = summarize(&records);
    write_file(&dir, "records.csv", |w| report::write_records(w, &records))?;
    write_file(&dir, "cells.csv", |w| report::write_cells(w, &summaries))?;
    for (stem, group, axis) in report::table_groups(&records) {
        write_file(&dir, &format!("{stem}.csv"), |w| report::write_table(w, &group, axis))?;
    }
    let failures: Vec<f64> = DEFAULT_FAILURE_GRID.iter().copied().filter(|&p| p >= config.target_failure).collect();
    let points = dualrail_core::fit::scaling_points(&records, &failures);
    write_file(&dir, "time_vs_failure.csv", |w| report::write_time_vs_failure(w, &points))?;
    if svg {
        write_file(&dir, "time_vs_failure.svg", |w| Ok(w.write_all(report::time_vs_failure_svg(&points).as_bytes())?))?;
    }
    for c in &summaries {
        writeln!(
            stdout,
            "N={} delta={} c={}: t={:.1} M={:.1} achieved {}/{}",
            c.cell.len, c.cell.strength, c.cell.correlation, c.mean_time, c.mean_measurements, c.achieved, c.samples
        )?;
    }
    Ok(EXIT_OK)
}

fn fit(s: &Settings, stdout: &mut dyn Write) -> Result<i32> {
    let mut config = s.sweep()?;
    if s.raw("n").is_none() {
        config.lengths = vec![5, 8, 11, 14, 17, 20];
    }
    let failures: Vec<f64> = s.list("failures", &DEFAULT_FAILURE_GRID)?;
    let records = parallel::run_sweep(&config)?;
    let mut fits = Vec::new();
    let mut all_points = Vec::new();
    for &strength in &config.strengths {
        for &correlation in &config.correlations {
            let subset: Vec<_> = records
                .iter()
                .filter(|r| r.cell.strength == strength && r.cell.correlation == correlation)
                .cloned()
                .collect();
            let points = dualrail_core::fit::scaling_points(&subset, &failures);
            let label = format!("delta={strength} c={correlation}");
            let fit = fit_scaling(&points)?;
            writeln!(
                stdout,
                "{label}: t = {:.4} N^{:.4} |ln P| (log rms {:.3})",
                fit.prefactor, fit.exponent, fit.log_rms
            )?;
            fits.push((label, fit));
            all_points.extend(points);
        }
    }
    if let Some(dir) = s.out() {
        fs::create_dir_all(&dir)?;
        write_file(&dir, "fit.csv", |w| report::write_fits(w, &fits))?;
        write_file(&dir, "time_vs_failure.csv", |w| report::write_time_vs_failure(w, &all_points))?;
        if s.svg()? {
            write_file(&dir, "time_vs_failure.svg", |w| {
                Ok(w.write_all(report::time_vs_failure_svg(&all_points).as_bytes())?)
            })?;
        }
    }
    Ok(EXIT_OK)
}

fn estimate(s: &Settings, stdout: &mut dyn Write) -> Result<i32> {
    let pair = s.pair()?;
    let (p1, p2) = propagators(&pair)?;
    let config = s.scheduler(pair.0.len().max(pair.1.len()))?;
    let shots = match s.get::<u64>("shots", 0)? {
        0 => Shots::Exact,
        n => Shots::Finite(n),
    };
    let longest = pair.0.len().max(pair.1.len()) as f64;
    let horizon = s.get("grid_horizon", 40.0 * longest / pair.0.convention().hopping())?;
    let grid = TimeGrid::covering(s.get("grid_step", 0.01)?, horizon.max(config.horizon));
    let mut rng = ChaCha8Rng::seed_from_u64(s.get("seed", 0)?);
    let endpoints = EndpointFunctions::estimate(&p1, &p2, shots, grid, &mut rng)?;
    let mut header = Header::new();
    header.insert("N1".into(), pair.0.len().to_string());
    header.insert("N2".into(), pair.1.len().to_string());
    header.insert("convention".into(), pair.0.convention().name().into());
    header.insert("shots".into(), s.get::<u64>("shots", 0)?.to_string());
    emit(s, stdout, |w| write_endpoints(w, &endpoints, &header))?;
    Ok(EXIT_OK)
}

fn certify_file(s: &Settings, stdout: &mut dyn Write) -> Result<i32> {
    let path = s.raw("endpoints").ok_or_else(|| usage("tomography certify needs --endpoints FILE"))?;
    let endpoints = read_endpoints(File::open(path)?)?;
    let config = s.scheduler(s.list::<usize>("n", &[20])?[0])?;
    let report = certify(&endpoints, &config)?;
    if !report.capable && report.schedule.total_time() + config.horizon > endpoints.grid.horizon() {
        writeln!(stdout, "note: the endpoint grid ends at t={} before the search finished", endpoints.grid.horizon())?;
    }
    writeln!(
        stdout,
        "{}: M={} t={:.3} P={:.3e} interpolation error {:.2e}",
        if report.capable { "capable" } else { "incapable" },
        report.schedule.measurements(),
        report.schedule.total_time(),
        report.schedule.final_failure(),
        report.interpolation_error
    )?;
    if let Some(out) = s.out() {
        let mut file = BufWriter::new(File::create(out)?);
        write_schedule(&mut file, &report.schedule, &config)?;
        file.flush()?;
    }
    Ok(if report.capable { EXIT_OK } else { EXIT_INCAPABLE })
}

type Action = fn(&Settings, &mut dyn Write) -> Result<i32>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(stderr, "{}", e.render()) } else { write!(stdout, "{}", e.render()) };
            return code;
        }
    };
    let (params, action): (&Params, Action) = match &cli.command {
        Command::Simulate(p) => (p, simulate),
        Command::Schedule(p) => (p, schedule),
        Command::Sweep(p) => (p, sweep),
        Command::Fit(p) => (p, fit),
        Command::Tomography { action: Tomography::Estimate(p) } => (p, estimate),
        Command::Tomography { action: Tomography::Certify(p) } => (p, certify_file),
    };
    let result = Settings::resolve(cli.config.as_deref(), params).and_then(|s| action(&s, stdout));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

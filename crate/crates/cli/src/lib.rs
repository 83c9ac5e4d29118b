//! `itrpower`: run the flexible power method, print reference values, or
//! self-check the solver.
//!
//! Exit codes: 0 on success, 1 on usage or I/O errors, 2 when the solver
//! fails (or a self-check does not pass).

pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use itrpower_core::{
    exact_eigenvalue, flexible_power_observed, CheckEvery, ModelKind, ModelSpec, RunConfig,
    Variant, DEFAULT_SEED,
};

use output::{CsvWriter, Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

/// Environment variable limiting the worker threads of the residual solves.
pub const THREADS_ENV: &str = "ITRPOWER_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "itrpower",
    version,
    about = "Smallest eigenvalue of infinite nearest-neighbour chains"
)]
pub struct Cli {
    /// Log progress to stderr (same as RUST_LOG=info).
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the flexible power method and log every residual check as CSV.
    Run(RunArgs),
    /// Print the reference eigenvalue per bond of a model.
    Exact(ModelArgs),
    /// Check the solver against brute-force references.
    Verify,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// ising, heisenberg-s1 or heisenberg-half.
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,
    /// Transverse field (ising only) [default: 2].
    #[arg(long)]
    pub g: Option<f64>,
    /// Z-anisotropy (heisenberg-s1 only) [default: 1].
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bond dimension r.
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 1e-1)]
    pub t_init: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub t_min: f64,
    /// Factor by which t shrinks when the residual stagnates.
    #[arg(long, default_value_t = 10.0)]
    pub t_shrink: f64,
    /// canonical or fast.
    #[arg(long, default_value = "fast", value_parser = parse_variant)]
    pub variant: Variant,
    /// Iterations between residual checks: `auto` (⌈1/t⌉) or a count.
    #[arg(long, default_value = "auto", value_parser = parse_check_every)]
    pub check_every: CheckEvery,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_iters: usize,
    /// Stop once the accumulated time Σt reaches this value.
    #[arg(long)]
    pub max_total_time: Option<f64>,
    /// Keep iterating at t_min after stagnation until another limit is hit.
    #[arg(long)]
    pub no_stop: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also report the projected averaged eigenvalue at every check.
    #[arg(long)]
    pub theta_hat: bool,
    /// CSV log [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary [default: stderr].
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse::<ModelKind>()
        .map_err(|_| "expected ising, heisenberg-s1 or heisenberg-half".to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse::<Variant>()
        .map_err(|_| "expected canonical or fast".to_string())
}

fn parse_check_every(s: &str) -> Result<CheckEvery, String> {
    if s == "auto" {
        return Ok(CheckEvery::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(CheckEvery::Fixed(n)),
        _ => Err("expected `auto` or a positive integer".to_string()),
    }
}

/// A usage error naming the offending flag.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

fn positive_finite(flag: &str, x: f64) -> Result<f64, UsageError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(usage(format!("{flag} must be a positive number, got {x}")))
    }
}

impl ModelArgs {
    pub fn spec(&self) -> Result<ModelSpec, UsageError> {
        if self.g.is_some() && self.model != ModelKind::Ising {
            return Err(usage(format!("--g does not apply to {}", self.model)));
        }
        if self.delta.is_some() && self.model != ModelKind::HeisenbergS1 {
            return Err(usage(format!("--delta does not apply to {}", self.model)));
        }
        let finite = |flag: &str, x: f64| {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(usage(format!("{flag} must be finite, got {x}")))
            }
        };
        Ok(match self.model {
            ModelKind::Ising => ModelSpec::Ising {
                g: finite("--g", self.g.unwrap_or(2.0))?,
            },
            ModelKind::HeisenbergS1 => ModelSpec::HeisenbergS1 {
                delta: finite("--delta", self.delta.unwrap_or(1.0))?,
            },
            ModelKind::HeisenbergHalf => ModelSpec::HeisenbergHalf,
        })
    }
}

/// Thread count from `ITRPOWER_THREADS`, 1 when unset.
pub fn threads_from_env(value: Option<&str>) -> Result<usize, UsageError> {
    match value {
        None => Ok(1),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

impl RunArgs {
    pub fn config(&self, threads: usize) -> Result<RunConfig, UsageError> {
        let mut c = RunConfig::new(self.model.spec()?, self.rank);
        if self.rank == 0 {
            return Err(usage("--rank must be positive"));
        }
        c.t_init = positive_finite("--t-init", self.t_init)?;
        c.t_min = positive_finite("--t-min", self.t_min)?;
        if c.t_min > c.t_init {
            return Err(usage(format!(
                "--t-min ({}) must not exceed --t-init ({})",
                c.t_min, c.t_init
            )));
        }
        c.t_shrink = positive_finite("--t-shrink", self.t_shrink)?;
        if c.t_shrink <= 1.0 {
            return Err(usage(format!(
                "--t-shrink must exceed 1, got {}",
                c.t_shrink
            )));
        }
        if self.max_iters == 0 {
            return Err(usage("--max-iters must be positive"));
        }
        c.max_iters = self.max_iters;
        c.max_total_time = self
            .max_total_time
            .map(|t| positive_finite("--max-total-time", t))
            .transpose()?;
        c.stop_on_stagnation = !self.no_stop;
        c.variant = self.variant;
        c.check_every = self.check_every;
        c.seed = self.seed;
        c.theta_hat = self.theta_hat;
        c.threads = threads;
        c.validate().map_err(|e| usage(e.to_string()))?;
        Ok(c)
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn run(args: &RunArgs) -> i32 {
    let threads = match threads_from_env(std::env::var(THREADS_ENV).ok().as_deref()) {
        Ok(n) => n,
        Err(e) => return fail(EXIT_USAGE, &e.0),
    };
    let config = match args.config(threads) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, &e.0),
    };
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => match create(p) {
            Ok(f) => Box::new(f),
            Err(e) => return fail(EXIT_USAGE, &e),
        },
        None => Box::new(io::stdout().lock()),
    };
    let mut csv = match CsvWriter::new(sink) {
        Ok(w) => w,
        Err(e) => return fail(EXIT_USAGE, &format!("cannot write CSV header: {e}")),
    };
    let mut io_error = None;
    let result = flexible_power_observed(&config, None, |rec| {
        if io_error.is_none() {
            if let Err(e) = csv.record(rec) {
                io_error = Some(e);
            }
        }
    });
    if let Some(e) = io_error {
        return fail(EXIT_USAGE, &format!("writing CSV failed: {e}"));
    }
    let outcome = match result {
        Ok(o) => o,
        Err(e) => return fail(EXIT_SOLVER, &format!("solver failed: {e}")),
    };
    let Some(summary) = Summary::new(&config, &outcome) else {
        return fail(EXIT_SOLVER, "solver produced no residual checks");
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    match &args.summary {
        Some(p) => {
            let written = create(p).and_then(|mut f| {
                writeln!(f, "{json}")
                    .and_then(|_| f.flush())
                    .map_err(|e| format!("cannot write {}: {e}", p.display()))
            });
            if let Err(e) = written {
                return fail(EXIT_USAGE, &e);
            }
        }
        None => eprintln!("{json}"),
    }
    EXIT_OK
}

fn exact(args: &ModelArgs) -> i32 {
    let spec = match args.spec() {
        Ok(s) => s,
        Err(e) => return fail(EXIT_USAGE, &e.0),
    };
    match exact_eigenvalue(&spec) {
        Some(v) => {
            println!("{v:.15}");
            EXIT_OK
        }
        None => fail(
            EXIT_USAGE,
            &format!("no reference value is known for {spec:?}"),
        ),
    }
}

fn verify() -> i32 {
    let start = Instant::now();
    let checks = verify::run_checks();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed in {:.2} s",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_SOLVER
    }
}

fn fail(code: i32, msg: &str) -> i32 {
    eprintln!("itrpower: {msg}");
    code
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Exact(a) => exact(a),
        Command::Verify => verify(),
    }
}

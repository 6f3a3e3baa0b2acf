//! The `modconv` command-line tool.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | a verification suite failed, or another runtime error |
//! | 2 | bad command line |
//! | 3 | malformed input file (polynomial or plan store, including a plan file version mismatch) |
//! | 4 | operands over different moduli |
//! | 5 | transform size not supported by the prime |
//! | 6 | I/O error |

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use modconv::{
    exec_signature, find_fourier_prime, poly_mul, ConvRequest, DensePoly, Engine, FourierPrime,
    PlanKey, PlanStore, Planner,
};

pub mod sweep;
pub mod verify;

pub use sweep::{SweepConfig, SweepRow, CSV_HEADER};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_MODULUS_MISMATCH: i32 = 4;
pub const EXIT_UNSUPPORTED_SIZE: i32 = 5;
pub const EXIT_IO: i32 = 6;

/// Sweep prime when neither `--prime` nor `--prime-bits` is given.
pub const DEFAULT_PRIME: u64 = 998_244_353;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: modconv::Error,
    },
    #[error(transparent)]
    Core(#[from] modconv::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} verification suites failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { source, .. } | CliError::Core(source) => core_exit_code(source),
            CliError::Io { .. } => EXIT_IO,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::VerifyFailed { .. } => EXIT_FAILURE,
        }
    }
}

fn core_exit_code(e: &modconv::Error) -> i32 {
    use modconv::Error as E;
    match e {
        E::Parse { .. } | E::VersionMismatch { .. } => EXIT_PARSE,
        E::ModulusMismatch { .. } => EXIT_MODULUS_MISMATCH,
        E::UnsupportedSize { .. } | E::NoFourierPrime { .. } => EXIT_UNSUPPORTED_SIZE,
        E::Io(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "modconv",
    version,
    about = "Exact polynomial multiplication over prime fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the built-in correctness suites.
    Verify(VerifyArgs),
    /// Multiply two polynomial files.
    Mul(MulArgs),
    /// Fill a plan store for all power-of-two sizes up to a limit.
    Plan(PlanArgs),
    /// Time engines over a range of product lengths and write CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest transform length exercised.
    #[arg(long, default_value_t = 1024)]
    pub cap: usize,
    /// Corrupt one twiddle factor in the tables handed to the transform suites.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct MulArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// definition, fft_pad, tft, split or auto.
    #[arg(long, default_value = "auto")]
    pub engine: Engine,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Plan store consulted (and updated) by the auto engine.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long = "max-l")]
    pub max_l: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = DEFAULT_PRIME)]
    pub prime: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub min: usize,
    #[arg(long)]
    pub max: usize,
    /// Stride between lengths, or `all` for every length.
    #[arg(long, default_value = "all", value_parser = parse_step)]
    pub step: usize,
    /// Comma-separated engines.
    #[arg(long, value_delimiter = ',', default_value = "fft_pad,tft")]
    pub engines: Vec<Engine>,
    #[arg(long, conflicts_with = "prime_bits")]
    pub prime: Option<u64>,
    /// Use the smallest Fourier prime of this many bits that supports the range.
    #[arg(long = "prime-bits")]
    pub prime_bits: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    /// Plan store for the auto engine.
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn parse_step(s: &str) -> Result<usize, String> {
    if s == "all" {
        return Ok(1);
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected a positive integer or `all`, got `{s}`")),
        Ok(k) => Ok(k),
    }
}

/// Parses `args` (program name first) and runs the command, writing the
/// report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Mul(a) => cmd_mul(&a, out),
        Command::Plan(a) => cmd_plan(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.cap < 2 || !a.cap.is_power_of_two() {
        return Err(CliError::Usage(format!(
            "--cap must be a power of two >= 2, got {}",
            a.cap
        )));
    }
    let reports = verify::run_suites(a.seed, a.cap, a.inject_fault);
    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.line());
        text.push('\n');
    }
    let failed = reports.iter().filter(|r| r.failure.is_some()).count();
    if failed == 0 {
        text.push_str(&format!("all {} suites passed\n", reports.len()));
    }
    write_out(out, &text)?;
    if failed > 0 {
        return Err(CliError::VerifyFailed {
            failed,
            total: reports.len(),
        });
    }
    Ok(())
}

fn load_poly(path: &Path) -> Result<DensePoly, CliError> {
    DensePoly::parse(&read_file(path)?).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads `path` if it exists, otherwise starts empty.
fn load_store(path: &Path) -> Result<PlanStore, CliError> {
    if !path.exists() {
        return Ok(PlanStore::new());
    }
    PlanStore::parse(&read_file(path)?).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn save_store(planner: Planner, path: &Path) -> Result<(), CliError> {
    planner
        .into_store()
        .save(path)
        .map_err(|source| match source {
            modconv::Error::Io(source) => CliError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => CliError::Core(other),
        })
}

fn planner_for(store: Option<&Path>, threads: usize) -> Result<Planner, CliError> {
    let contents = match store {
        Some(p) => load_store(p)?,
        None => PlanStore::new(),
    };
    Ok(Planner::new(contents, exec_signature(threads))?)
}

fn cmd_mul(a: &MulArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pa = load_poly(&a.a)?;
    let pb = load_poly(&a.b)?;
    let threads = a.threads.max(1);
    let planner = if a.engine == Engine::Auto {
        Some(planner_for(a.store.as_deref(), threads)?)
    } else {
        None
    };
    let mut req = ConvRequest::new(*pa.field(), a.engine).threads(threads);
    if let Some(pl) = &planner {
        req = req.planner(pl);
    }
    let product = poly_mul(&pa, &pb, &req)?;
    write_file(&a.out, &product.to_text())?;
    if let (Some(pl), Some(path)) = (planner, &a.store) {
        save_store(pl, path)?;
    }
    write_out(
        out,
        &format!(
            "wrote product of length {} to {}\n",
            product.len(),
            a.out.display()
        ),
    )
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.max_l == 0 {
        return Err(CliError::Usage("--max-l must be at least 1".into()));
    }
    let field = FourierPrime::new(a.prime)?;
    let top = if a.max_l.is_power_of_two() {
        a.max_l
    } else {
        a.max_l.next_power_of_two() / 2
    };
    field.check_transform_len(top)?;
    let threads = a.threads.max(1);
    let planner = planner_for(Some(&a.store), threads)?;
    let before = planner.snapshot().len();
    let mut len = 1;
    while len <= top {
        planner.lookup(&PlanKey::dft(a.prime, len, threads))?;
        planner.lookup(&PlanKey::tft(a.prime, len, threads))?;
        planner.lookup(&PlanKey::itft(a.prime, len, threads))?;
        len *= 2;
    }
    let searches = planner.searches();
    let after = planner.snapshot().len();
    save_store(planner, &a.store)?;
    write_out(
        out,
        &format!(
            "planned dft, tft and itft for L = 1..={top} (p = {}, threads = {threads})\nentries: {after} ({} new)\nsearches: {searches}\n",
            a.prime,
            after - before
        ),
    )
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.min == 0 || a.max < a.min {
        return Err(CliError::Usage(format!(
            "need 1 <= --min <= --max, got {}..{}",
            a.min, a.max
        )));
    }
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if a.engines.is_empty() {
        return Err(CliError::Usage(
            "--engines must name at least one engine".into(),
        ));
    }
    let field = match (a.prime, a.prime_bits) {
        (Some(p), _) => FourierPrime::new(p)?,
        (None, Some(bits)) => {
            let need = a.max.next_power_of_two().trailing_zeros();
            find_fourier_prime(need, bits)?
        }
        (None, None) => FourierPrime::new(DEFAULT_PRIME)?,
    };
    let threads = a.threads.max(1);
    let cfg = SweepConfig {
        n_min: a.min,
        n_max: a.max,
        step: a.step,
        engines: a.engines.clone(),
        field,
        threads,
        reps: a.reps,
        seed: a.seed,
    };
    let planner = if cfg.engines.contains(&Engine::Auto) {
        Some(planner_for(a.store.as_deref(), threads)?)
    } else {
        None
    };
    let rows = sweep::sweep(&cfg, planner.as_ref())?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    write_file(&a.out, &csv)?;
    if let (Some(pl), Some(path)) = (planner, &a.store) {
        save_store(pl, path)?;
    }
    let skipped = rows.iter().filter(|r| r.timing.is_none()).count();
    write_out(
        out,
        &format!(
            "wrote {} rows to {} (p = {}, {skipped} unsupported)\n",
            rows.len(),
            a.out.display(),
            field.modulus()
        ),
    )
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

mod commands;
mod presets;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

macro_rules! domain_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain(e.to_string())
            }
        })*
    };
}

domain_from!(
    edslab::formula::FormulaError,
    edslab::translate::ModelError,
    edslab::curve::CurveError,
    edslab::eds::EdsError,
    edslab::periodicity::PeriodicityError,
    edslab::arith::ArithError,
    edslab::arith::CacheError
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "edslab", version, about = "Elliptic divisibility sequences, definability translations and scans")]
pub struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for Pollard rho.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Factorization memo file of `n factorization` lines.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Config file with `[presets.NAME]` tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named curve/point/discriminant set.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prenex normalization and hierarchy classification.
    Formula {
        #[command(subcommand)]
        action: FormulaAction,
    },
    /// Translate a formula over Z through a model in Q.
    Translate(TranslateArgs),
    /// Elliptic divisibility sequence tables and checks.
    Eds {
        #[command(subcommand)]
        action: EdsAction,
    },
    /// Primitive divisor scans.
    Primitivity {
        #[command(subcommand)]
        action: PrimitivityAction,
    },
    /// Periods and Legendre symbols of B_n modulo a prime.
    Ward(WardArgs),
    /// Negative symbol classes per prime and the density of their union.
    Density(DensityArgs),
    /// Convergence flags of the counting heuristic.
    Heuristic(HeuristicArgs),
    /// Search of the conic fibration.
    K3 {
        #[command(subcommand)]
        action: K3Action,
    },
}

#[derive(Debug, Subcommand)]
enum FormulaAction {
    /// Print the positive prenex normal form.
    Normalize(FormulaArgs),
    /// Print class, block profile, t and c.
    Classify(FormulaArgs),
}

#[derive(Debug, Subcommand)]
enum EdsAction {
    /// A_n, B_n, C_n for n up to --max-n.
    Table(TableArgs),
    /// Check the divisibility laws.
    Check(CheckArgs),
    /// Decide m | n through the sequence.
    Divides(DividesArgs),
}

#[derive(Debug, Subcommand)]
enum PrimitivityAction {
    Scan(ScanArgs),
}

#[derive(Debug, Subcommand)]
enum K3Action {
    Scan(K3Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RingArg {
    Z,
    Q,
}

#[derive(Debug, Args)]
pub struct FormulaSource {
    /// Formula text.
    #[arg(long, conflicts_with_all = ["builtin", "file"])]
    pub formula: Option<String>,
    /// Built-in formula name.
    #[arg(long, conflicts_with = "file")]
    pub builtin: Option<String>,
    /// File holding the formula text.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Parse `|` between terms and `div(a, b)` as divisibility.
    #[arg(long)]
    pub divisibility: bool,
}

#[derive(Debug, Args)]
pub struct FormulaArgs {
    #[command(flatten)]
    pub source: FormulaSource,
    /// Ring whose inequations are encoded.
    #[arg(long, value_enum, default_value_t = RingArg::Q)]
    pub ring: RingArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    General,
    Divmodel,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[command(flatten)]
    pub source: FormulaSource,
    /// identity, synthetic, elliptic, or a path to a `.model` file.
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Rank multiplier r of the elliptic model.
    #[arg(long, default_value_t = 1)]
    pub rank: u64,
    /// Torsion order; computed from the curve when omitted.
    #[arg(long)]
    pub torsion: Option<u64>,
    #[arg(long, value_enum, default_value_t = TableArg::General)]
    pub table: TableArg,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CurveArgs {
    /// Curve coefficients a,b,c of y^2 = x^3 + a x^2 + b x + c.
    #[arg(long, allow_hyphen_values = true)]
    pub curve: Option<String>,
    /// Point xn/xd,yn/yd.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long = "max-n", default_value_t = 8)]
    pub max_n: usize,
    /// Factor every entry and mark non-primitive prime powers as [p^e].
    #[arg(long)]
    pub factor: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long = "max-n", default_value_t = 20)]
    pub max_n: usize,
    /// Largest multiplier t.
    #[arg(long = "max-t", default_value_t = 5)]
    pub max_t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrimesArg {
    All,
    Inert,
}

#[derive(Debug, Args, Clone)]
pub struct PrimeSetArgs {
    #[arg(long, value_enum, default_value_t = PrimesArg::All)]
    pub primes: PrimesArg,
    /// Discriminants d1,d2,... for `--primes inert`.
    #[arg(long, allow_hyphen_values = true)]
    pub discriminants: Option<String>,
}

#[derive(Debug, Args)]
pub struct DividesArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub set: PrimeSetArgs,
    /// Replace P by its least multiple in 2E(Q) nonsingular at every bad prime.
    #[arg(long)]
    pub good_multiple: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Sequence to scan: A, B or C.
    #[arg(long, default_value = "B")]
    pub seq: String,
    #[command(flatten)]
    pub set: PrimeSetArgs,
    #[arg(long = "odd-order")]
    pub odd_order: bool,
    /// Only indices 2^a p^b.
    #[arg(long)]
    pub weak: bool,
    #[arg(long = "max-n", default_value_t = 8)]
    pub max_n: usize,
    /// Terms with more digits are reported as truncated.
    #[arg(long = "digit-cap", default_value_t = 80)]
    pub digit_cap: usize,
}

#[derive(Debug, Args)]
pub struct WardArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    #[arg(long)]
    pub prime: u64,
    #[arg(long = "max-n", default_value_t = 200)]
    pub max_n: usize,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Primes whose negative classes are joined; repeat or separate by commas.
    #[arg(long, value_delimiter = ',')]
    pub prime: Vec<u64>,
    /// File of `modulus: r1 r2 ...` lines used instead of computed classes.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long = "max-n", default_value_t = 200)]
    pub max_n: usize,
}

#[derive(Debug, Args)]
pub struct HeuristicArgs {
    #[arg(long)]
    pub rank: u32,
    #[arg(long = "num-disc")]
    pub num_disc: u32,
    /// Summation cap.
    #[arg(long, default_value_t = 1_000_000)]
    pub bound: u64,
}

#[derive(Debug, Args)]
pub struct K3Args {
    #[arg(long, default_value_t = 20)]
    pub bound: i64,
}

/// Rendered result: text for humans and one JSON value per output line.
pub struct Output {
    pub text: String,
    pub json: Vec<Value>,
}

fn run(cli: Cli) -> Result<Output, CliError> {
    if let Some(k) = cli.global.jobs {
        if k == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Domain(e.to_string()))?;
    }
    let ctx = commands::Context::new(&cli.global)?;
    let out = match cli.command {
        Command::Formula { action: FormulaAction::Normalize(a) } => commands::normalize(&a)?,
        Command::Formula { action: FormulaAction::Classify(a) } => commands::classify(&a)?,
        Command::Translate(a) => commands::translate(&ctx, &a)?,
        Command::Eds { action: EdsAction::Table(a) } => commands::eds_table(&ctx, &a)?,
        Command::Eds { action: EdsAction::Check(a) } => commands::eds_check(&ctx, &a)?,
        Command::Eds { action: EdsAction::Divides(a) } => commands::eds_divides(&ctx, &a)?,
        Command::Primitivity { action: PrimitivityAction::Scan(a) } => commands::primitivity_scan(&ctx, &a)?,
        Command::Ward(a) => commands::ward(&ctx, &a)?,
        Command::Density(a) => commands::density(&ctx, &a)?,
        Command::Heuristic(a) => commands::heuristic(&a)?,
        Command::K3 { action: K3Action::Scan(a) } => commands::k3_scan(&a)?,
    };
    ctx.finish()?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let format = cli.global.format;
    match run(cli) {
        Ok(out) => {
            match format {
                Format::Text => print!("{}", out.text),
                Format::Json => {
                    for v in &out.json {
                        println!("{v}");
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

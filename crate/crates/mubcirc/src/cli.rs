//! Command-line front end. Exit codes: 0 pass, 1 verification failure,
//! 2 invalid input, 3 I/O error.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mubcirc_core::galois::{find_irreducible_with_guard, DEFAULT_SIZE_GUARD};
use mubcirc_core::mub::summary_line;
use mubcirc_core::operators::{commuting_classes_with, ClassPartition, EXHAUSTIVE_CLASS_LIMIT};
use mubcirc_core::weil::{evaluate_weil_sums, Sampling, WeilReport};
use mubcirc_core::{build_mub_set, verify_mub_set, Error, FieldSpec, Mode, MubReport, MubSet};
use serde::Serialize;

use crate::format::{self, FormatError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mubcirc", version, about = "Exact mutually unbiased bases in prime-power dimensions")]
pub struct Cli {
    /// Worker threads for verification (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the d + 1 bases and write them as JSON or CSV.
    Build(BuildArgs),
    /// Verify a MUB set file, or build and verify one for (p, n).
    Verify(VerifyArgs),
    /// Evaluate quadratic Weil sums and check |Σ|² = pⁿ.
    Weil(WeilArgs),
    /// List the commuting classes of the operators Z_a X_b.
    Classes(ClassesArgs),
    /// Describe the field and the construction regime.
    Info(InfoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Structural,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::Structural => Mode::Structural,
        }
    }
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Characteristic (prime).
    #[arg(short = 'p', long = "prime")]
    pub p: Option<u32>,
    /// Extension degree.
    #[arg(short = 'n', long = "degree")]
    pub n: Option<u32>,
    /// Irreducible polynomial coefficients c0,…,c(n−1) of the monic modulus.
    #[arg(long, value_delimiter = ',')]
    pub poly: Option<Vec<u32>>,
    /// Largest dimension accepted.
    #[arg(long, env = "MUBCIRC_SIZE_GUARD", default_value_t = DEFAULT_SIZE_GUARD)]
    pub size_guard: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write decimal approximations (CSV) to this file.
    #[arg(long)]
    pub float_export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// MUB set file written by `build`.
    pub file: Option<PathBuf>,
    #[command(flatten)]
    pub field: FieldArgs,
    /// Verification mode (default: full for d ≤ 49, structural above).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Seed for sampled checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WeilArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Evaluate the whole (d − 1)·d grid.
    #[arg(long, conflicts_with = "samples")]
    pub all: bool,
    /// Evaluate this many random pairs.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ClassesArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Verification(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID_INPUT,
            CliError::Verification(_) => EXIT_VERIFICATION_FAILED,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Verification(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::VerificationFailure(_) | Error::Internal(_) => CliError::Verification(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Serialize(_) => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

fn regime(spec: &FieldSpec) -> &'static str {
    if spec.p() == 2 {
        "modified group law regime"
    } else {
        "group law regime"
    }
}

fn field_spec(args: &FieldArgs) -> Result<FieldSpec, CliError> {
    let (Some(p), Some(n)) = (args.p, args.n) else {
        return Err(CliError::Invalid("both -p and -n are required".into()));
    };
    let spec = match &args.poly {
        Some(poly) => FieldSpec::with_guard(p, n, poly.clone(), args.size_guard)?,
        None => find_irreducible_with_guard(p, n, args.size_guard)?,
    };
    Ok(spec)
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn json_only(output: &OutputArgs, what: &str) -> Result<(), CliError> {
    if output.format == Format::Csv {
        return Err(CliError::Invalid(format!("{what} output is JSON only")));
    }
    Ok(())
}

/// Runs one command; `Ok` carries the exit code for completed runs.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Invalid("--threads must be positive".into()));
        }
        // Ignore the error when a pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Weil(args) => cmd_weil(args),
        Command::Classes(args) => cmd_classes(args),
        Command::Info(args) => cmd_info(args),
    }
}

fn cmd_build(args: BuildArgs) -> Result<i32, CliError> {
    let spec = field_spec(&args.field)?;
    let set = build_mub_set(&spec)?;
    let text = match args.output.format {
        Format::Json => format::to_json(&set)?,
        Format::Csv => format::mub_set_csv(&set)?,
    };
    write_output(&args.output.out, &text)?;
    if let Some(path) = &args.float_export {
        write_file(path, &format::float_export(&set)?)?;
    }
    eprintln!("built {} bases for d = {} over {}; {}", set.bases().len(), spec.d(), spec, regime(&spec));
    Ok(EXIT_PASS)
}

fn load_set(path: &Path, guard: u64) -> Result<MubSet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let set = format::read_mub_set(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    if set.spec().d() as u64 > guard {
        return Err(CliError::Invalid(format!("dimension {} exceeds the size guard {guard}", set.spec().d())));
    }
    Ok(set)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, CliError> {
    json_only(&args.output, "verify")?;
    let set = match &args.file {
        Some(path) => {
            if args.field.p.is_some() || args.field.n.is_some() {
                return Err(CliError::Invalid("give either a file or -p/-n, not both".into()));
            }
            load_set(path, args.field.size_guard)?
        }
        None => build_mub_set(&field_spec(&args.field)?)?,
    };
    let mode = args.mode.map(Mode::from).unwrap_or_else(|| Mode::default_for(set.spec().d()));
    let start = Instant::now();
    let mut report = verify_mub_set(&set, mode, args.seed)?;
    report.timing_ms = Some(start.elapsed().as_millis() as u64);
    write_output(&args.output.out, &format::to_json(&report)?)?;
    eprintln!("{}", summary_line(&report));
    if report.pass {
        return Ok(EXIT_PASS);
    }
    describe_failure(&report);
    Ok(EXIT_VERIFICATION_FAILED)
}

fn describe_failure(report: &MubReport) {
    for u in &report.non_unitary {
        eprintln!("basis {} is not unitary: (B*B)[{}][{}] is wrong", u.basis, u.row, u.col);
    }
    if let Some(s) = &report.structural {
        if !s.fourier_matches {
            eprintln!("basis 0 is not the Fourier matrix");
        }
        if let Some(th) = s.diagonal_failure {
            eprintln!("F R_θ F* is not diagonal and unimodular for θ index {th}");
        }
        if let Some(l) = &s.law_failure {
            eprintln!("law fails for θ = {}, θ' = {} at Fourier index {}", l.theta, l.theta_prime, l.index);
        }
    }
    if let Some(r) = report.first_failure() {
        match &r.witness {
            Some(w) => eprintln!(
                "witness: bases ({}, {}) entry ({}, {}) = {} with |·|² = {}",
                r.a, r.b, w.row, w.col, w.entry, w.norm_sq
            ),
            None => eprintln!("witness: bases ({}, {})", r.a, r.b),
        }
    }
}

fn cmd_weil(args: WeilArgs) -> Result<i32, CliError> {
    let spec = field_spec(&args.field)?;
    let sampling = match (args.all, args.samples) {
        (true, _) => Sampling::All,
        (false, Some(count)) => Sampling::Random { count, seed: args.seed },
        (false, None) => Sampling::default_for(spec.d(), args.seed),
    };
    let report: WeilReport = evaluate_weil_sums(&spec, sampling).map_err(|e| match e {
        Error::Unsupported(_) => CliError::Invalid(format!("{e}; the Weil sum theorem requires p ≥ 3")),
        e => e.into(),
    })?;
    let text = match args.output.format {
        Format::Json => format::to_json(&report)?,
        Format::Csv => format::weil_csv(&report)?,
    };
    write_output(&args.output.out, &text)?;
    let passed = report.rows.iter().filter(|r| r.pass).count();
    eprintln!("{passed}/{} Weil sums with |Σ|² = {}", report.rows.len(), report.target);
    Ok(if report.pass { EXIT_PASS } else { EXIT_VERIFICATION_FAILED })
}

#[derive(Serialize)]
struct ClassesDoc<'a> {
    field: &'a FieldSpec,
    z_convention: &'static str,
    class_count: usize,
    class_size: usize,
    note: &'static str,
    #[serde(flatten)]
    partition: &'a ClassPartition,
}

fn cmd_classes(args: ClassesArgs) -> Result<i32, CliError> {
    let spec = field_spec(&args.field)?;
    let part = commuting_classes_with(&spec, EXHAUSTIVE_CLASS_LIMIT, args.seed)?;
    let d = spec.d();
    let text = match args.output.format {
        Format::Json => format::to_json(&ClassesDoc {
            field: &spec,
            z_convention: "diagonal",
            class_count: d + 1,
            class_size: d - 1,
            note: "each class C_θ and F₀ has d − 1 members",
            partition: &part,
        })?,
        Format::Csv => classes_csv(&spec, &part)?,
    };
    write_output(&args.output.out, &text)?;
    eprintln!(
        "{} classes × {} + identity = {} labels; {} commuting pairs checked{}",
        d + 1,
        d - 1,
        part.total_labels,
        part.pairs_checked,
        if part.exhaustive { "" } else { " (sampled)" }
    );
    Ok(EXIT_PASS)
}

fn classes_csv(spec: &FieldSpec, part: &ClassPartition) -> Result<String, CliError> {
    let idx = |e| spec.index_of(e).map_err(CliError::from);
    let mut out = String::from("class,theta_index,z_index,x_index\n");
    for l in &part.f0 {
        out += &format!("F0,,{},{}\n", idx(&l.zpart)?, idx(&l.xpart)?);
    }
    for c in &part.classes {
        let th = idx(&c.theta)?;
        for l in &c.labels {
            out += &format!("C,{th},{},{}\n", idx(&l.zpart)?, idx(&l.xpart)?);
        }
    }
    out += &format!("I,,{},{}\n", idx(&part.identity.zpart)?, idx(&part.identity.xpart)?);
    Ok(out)
}

#[derive(Serialize)]
struct InfoDoc<'a> {
    field: &'a FieldSpec,
    description: String,
    d: usize,
    root_order: u32,
    bases: usize,
    regime: &'static str,
    default_mode: Mode,
    z_convention: &'static str,
}

fn cmd_info(args: InfoArgs) -> Result<i32, CliError> {
    json_only(&args.output, "info")?;
    let spec = field_spec(&args.field)?;
    let doc = InfoDoc {
        field: &spec,
        description: spec.to_string(),
        d: spec.d(),
        root_order: mubcirc_core::cyclotomic::order_for(spec.p()),
        bases: spec.d() + 1,
        regime: regime(&spec),
        default_mode: Mode::default_for(spec.d()),
        z_convention: "diagonal",
    };
    write_output(&args.output.out, &format::to_json(&doc)?)?;
    eprintln!("{spec}: d = {}, {}", spec.d(), regime(&spec));
    Ok(EXIT_PASS)
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.exit_code() {
                0 => EXIT_PASS,
                _ => EXIT_INVALID_INPUT,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 a
//! validation check failed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;

use super::bounds::{bound_report, write_bounds, BoundReportConfig};
use super::report::{write_compare, write_sweep, Format};
use super::sweep::{dependent_vs_iid, run_sweep, SweepConfig};
use super::{with_thread_cap, ParamFamily, PowerLaw, RateFamily};
use crate::dynamic_graph::init_stationary;
use crate::edge_dynamics::Hazard;
use crate::error::{Error, Result};
use crate::protocols::{run, Protocol};
use crate::validation::{all_passed, validate_cftp, validate_sst, CftpValidationConfig, SstValidationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "gossipdyn", version, about = "Rumor spreading on dynamic random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One trial; prints the informed-count trajectory.
    Simulate(SimulateArgs),
    /// Completion-time quantiles over an n grid.
    Sweep(GridArgs),
    /// Dependent dynamics against an i.i.d. graph of equal density.
    Compare(GridArgs),
    /// Exact separation distances and their bounds.
    Separation(SeparationArgs),
    /// Statistical checks of strong uniform times and the refresh coupling.
    SstValidate(SstArgs),
    /// Statistical checks of the coupling-from-the-past sampler.
    CftpValidate(CftpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Dynamics {
    Iid,
    Markov,
    Renewal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyName {
    /// Fixed --p, --q.
    Pq,
    Complete,
    /// f = f-const + f-coeff n^-f-exp, g likewise, with --m and --alpha-family.
    PowerGap,
    /// p = a/n^k, q = 1.
    Special,
    /// q fixed, pi(1) = a/n.
    Sparse,
    /// p = a/n^k, q = 1 - alpha.
    SpecialUpper,
    /// Constant edge probability --p.
    Iid,
    /// Hazard 1 - (i+2)/((i+1) n^lambda).
    RenewalExample,
    /// Constant hazard 1 - g/n^lambda.
    RenewalConstant,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    dynamics: Option<Dynamics>,
    #[arg(long, value_enum)]
    family: Option<FamilyName>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    alpha_family: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    f_const: Option<f64>,
    #[arg(long)]
    f_coeff: Option<f64>,
    #[arg(long)]
    f_exp: Option<f64>,
    #[arg(long)]
    g_const: Option<f64>,
    #[arg(long)]
    g_coeff: Option<f64>,
    #[arg(long)]
    g_exp: Option<f64>,
}

impl FamilyArgs {
    fn resolve(&self) -> Result<ParamFamily> {
        let name = match (self.family, self.dynamics) {
            (Some(f), _) => f,
            (None, Some(Dynamics::Iid)) => FamilyName::Iid,
            (None, Some(Dynamics::Renewal)) => FamilyName::RenewalExample,
            (None, _) => FamilyName::Pq,
        };
        let v = |x: Option<f64>, d: f64| x.unwrap_or(d);
        let family = match name {
            FamilyName::Pq => ParamFamily::Pq { p: v(self.p, 0.5), q: v(self.q, 0.5) },
            FamilyName::Complete => ParamFamily::Complete,
            FamilyName::PowerGap => ParamFamily::MarkovPowerGap {
                f: PowerLaw {
                    constant: v(self.f_const, 0.0),
                    coeff: v(self.f_coeff, 1.0),
                    exponent: v(self.f_exp, 2.0),
                },
                g: PowerLaw {
                    constant: v(self.g_const, 0.0),
                    coeff: v(self.g_coeff, 0.0),
                    exponent: v(self.g_exp, 0.0),
                },
                m: v(self.m, 1.0),
                alpha_family: v(self.alpha_family, 2.0),
                gamma_limit: v(self.g_const, 0.0),
            },
            FamilyName::Special => ParamFamily::MarkovSpecial { a: v(self.a, 1.0), k: v(self.k, 1.0) },
            FamilyName::Sparse => ParamFamily::MarkovSparse { a: v(self.a, 4.0), q: v(self.q, 0.5) },
            FamilyName::SpecialUpper => {
                ParamFamily::MarkovSpecialUpper { a: v(self.a, 1.0), k: v(self.k, 1.0), alpha: v(self.alpha, 0.3) }
            }
            FamilyName::Iid => ParamFamily::Iid { p: PowerLaw::constant(v(self.p, 0.5)) },
            FamilyName::RenewalExample => ParamFamily::RenewalExample { lambda: v(self.lambda, 1.0) },
            FamilyName::RenewalConstant => ParamFamily::RenewalConstant {
                lambda: v(self.lambda, 1.0),
                g: PowerLaw::constant(v(self.g_const, 1.0)),
            },
        };
        if let Some(d) = self.dynamics {
            let want = match d {
                Dynamics::Iid => "iid",
                Dynamics::Markov => "markov",
                Dynamics::Renewal => "renewal",
            };
            if family.dynamics() != want {
                return Err(Error::Config(format!(
                    "family {name:?} has {} dynamics, not {want}",
                    family.dynamics()
                )));
            }
        }
        Ok(family)
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

impl OutputArgs {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn parse_protocol(s: &str) -> std::result::Result<Protocol, String> {
    s.parse::<Protocol>().map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_parser = parse_protocol, default_value = "pushpull")]
    protocol: Protocol,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 0)]
    source: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    cap: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RateName {
    Log,
    Log2,
    Flood,
    Push,
    /// n^(k-1) ln n, with --k.
    Special,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// JSON sweep configuration; replaces the grid and family flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// A single n (shorthand for a one-point grid).
    #[arg(long, conflicts_with = "n_grid")]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_parser = parse_protocol, default_value = "pushpull")]
    protocol: Protocol,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_enum, default_value = "log2")]
    rate: RateName,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    cap: Option<u32>,
    #[command(flatten)]
    output: OutputArgs,
}

impl GridArgs {
    fn sweep_config(&self) -> Result<SweepConfig> {
        if let Some(path) = &self.config {
            return read_config(path);
        }
        let n_grid = match self.n {
            Some(n) => vec![n],
            None if self.n_grid.is_empty() => return Err(Error::Config("--n or --n-grid is required".into())),
            None => self.n_grid.clone(),
        };
        let rate = match self.rate {
            RateName::Log => RateFamily::Log,
            RateName::Log2 => RateFamily::Log2,
            RateName::Flood => RateFamily::FloodRate,
            RateName::Push => RateFamily::PushRate,
            RateName::Special => RateFamily::SpecialPush { k: self.family.k.unwrap_or(1.0) },
        };
        Ok(SweepConfig {
            n_grid,
            trials: self.trials,
            protocol: self.protocol,
            family: self.family.resolve()?,
            rate,
            seed: self.seed,
            cap: self.cap,
        })
    }
}

#[derive(Args, Debug)]
struct SeparationArgs {
    /// JSON bound-report configuration; replaces the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,
    /// Comma list, or an inclusive range `lo..hi`.
    #[arg(long, default_value = "4..200")]
    k_grid: String,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 5.0)]
    c: f64,
    #[arg(long, default_value_t = 25.0)]
    d: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_k_grid(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad k grid {s:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

#[derive(Args, Debug)]
struct SstArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum HazardName {
    /// Constant hazard --h.
    Constant,
    /// 1 - (i+2)/((i+1) scale).
    Rational,
}

#[derive(Args, Debug)]
struct CftpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    hazard: Option<HazardName>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_config<T: DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn json_out<T: serde::Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<i32> {
    let family = args.family.resolve()?;
    family.validate(args.n)?;
    let spec = family.spec(args.n)?;
    let mut graphs = init_stationary(&spec, args.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(crate::stream::derive_seed(args.seed, &[1]));
    let result = run(&mut graphs, args.protocol, args.source, args.cap, &mut rng)?;
    let mut w = args.output.writer()?;
    match Format::from(args.output.format) {
        Format::Csv => {
            writeln!(w, "round,informed")?;
            for (round, count) in result.informed_trajectory.iter().enumerate() {
                writeln!(w, "{round},{count}")?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &result)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Simulate(args) => simulate(&args),
        Command::Sweep(args) => {
            let report = run_sweep(&args.sweep_config()?)?;
            let mut w = args.output.writer()?;
            write_sweep(&report, args.output.format.into(), &mut w)?;
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::Compare(args) => {
            let rows = dependent_vs_iid(&args.sweep_config()?)?;
            let mut w = args.output.writer()?;
            write_compare(&rows, args.output.format.into(), &mut w)?;
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::Separation(args) => {
            let config = match &args.config {
                Some(path) => read_config(path)?,
                None => {
                    if args.n_grid.is_empty() {
                        return Err(Error::Config("--n-grid is required".into()));
                    }
                    let family = match args.family.family {
                        None => FamilyArgs { family: Some(FamilyName::PowerGap), ..args.family.clone() }.resolve()?,
                        Some(_) => args.family.resolve()?,
                    };
                    BoundReportConfig {
                        family,
                        n_grid: args.n_grid.clone(),
                        k_grid: parse_k_grid(&args.k_grid)?,
                        c: args.c,
                        d: args.d,
                    }
                }
            };
            let rows = bound_report(&config)?;
            let mut w = args.output.writer()?;
            match Format::from(args.output.format) {
                Format::Csv => write_bounds(&rows, &mut w)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &rows)?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::SstValidate(args) => {
            let mut config: SstValidationConfig = match &args.config {
                Some(path) => read_config(path)?,
                None => SstValidationConfig::default(),
            };
            config.p = args.p.unwrap_or(config.p);
            config.q = args.q.unwrap_or(config.q);
            config.seed = args.seed.unwrap_or(config.seed);
            let report = validate_sst(&config)?;
            json_out(&report, &args.out)?;
            Ok(if all_passed(&report.checks) { EXIT_OK } else { EXIT_VALIDATION })
        }
        Command::CftpValidate(args) => {
            let mut config: CftpValidationConfig = match &args.config {
                Some(path) => read_config(path)?,
                None => CftpValidationConfig::default(),
            };
            match args.hazard {
                Some(HazardName::Constant) => config.hazard = Hazard::Constant { value: args.h.unwrap_or(0.5) },
                Some(HazardName::Rational) => {
                    config.hazard = Hazard::RationalDecay { scale: args.scale.unwrap_or(10.0) }
                }
                None => {}
            }
            config.n = args.n.unwrap_or(config.n);
            config.samples = args.samples.unwrap_or(config.samples);
            config.seed = args.seed.unwrap_or(config.seed);
            let report = validate_cftp(&config)?;
            json_out(&report, &args.out)?;
            Ok(if all_passed(&report.checks) { EXIT_OK } else { EXIT_VALIDATION })
        }
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match with_thread_cap(|| execute(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

//! The `mhkz` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 verification failure, 3 I/O.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::approximator::{
    default_iterations, draw_samples, fit_spin, fit_with, l2_error, Approximant, FitOptions, Model,
    ModelMeta, SampleSet, SpinEnsemble, DEFAULT_C1, DEFAULT_MC_POINTS,
};
use crate::dyadic::check_level;
use crate::error::Error;
use crate::kaczmarz::KaczmarzConfig;
use crate::model_io::{self, Stored};
use crate::par;
use crate::registry::{self, TestFunction};
use crate::rng::derive_seed;
use crate::smolyak::{build_weight_vector, CenterSamples};
use crate::verify::{self, Mutation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_IO: i32 = 3;

const L_HELP: &str =
    "Number of samples and Kaczmarz steps [default: ceil(c1 * n * ln(n)^2) with n = 2^m, \
                      natural log; for --samples, the file's row count]";

#[derive(Debug, Parser)]
#[command(
    name = "mhkz",
    version,
    about = "Approximate mixed Hölder functions from random samples"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model from random samples and write it to a file.
    Fit(FitArgs),
    /// Fit a spin-cycled ensemble and write it to a directory.
    SpinFit(SpinFitArgs),
    /// Evaluate on a G x G grid and write CSV and PGM files.
    Grid(GridArgs),
    /// Print the integral of a model or of a freshly built approximation.
    Integrate(IntegrateArgs),
    /// Tabulate errors of every method across levels.
    Compare(CompareArgs),
    /// Run the exact-identity self checks.
    Verify(VerifyArgs),
}

/// Where samples come from and how the fit is sized.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Registry function to sample.
    #[arg(long, value_name = "NAME", conflicts_with = "samples")]
    pub function: Option<String>,
    /// CSV of `x,y,value` rows (header optional) instead of a registry function.
    #[arg(long, value_name = "FILE")]
    pub samples: Option<PathBuf>,
    /// Resolution level; the model has (m + 2) 2^(m-1) coefficients.
    #[arg(long)]
    pub m: Option<u32>,
    /// Oversampling constant c1.
    #[arg(long, default_value_t = DEFAULT_C1)]
    pub c1: f64,
    #[arg(long, help = L_HELP)]
    pub l: Option<usize>,
    /// Master seed for sample points, shifts and Monte Carlo checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fit f - f(X_1) and add f(X_1) back on evaluation.
    #[arg(long)]
    pub recenter: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReferenceArgs {
    /// Registry function to measure the L2 error against.
    #[arg(long, value_name = "NAME")]
    pub reference: Option<String>,
    /// Monte Carlo points for L2 error estimates.
    #[arg(long, default_value_t = DEFAULT_MC_POINTS)]
    pub mc_points: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpinFitArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// Number of random torus shifts.
    #[arg(long, default_value_t = 16)]
    pub spins: usize,
    /// Directory to write the ensemble into.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Smolyak combination from center values (the exact weight vector).
    Smolyak,
    /// One Kaczmarz fit on random samples.
    Random,
    /// Spin-cycled ensemble of Kaczmarz fits.
    Spin,
    /// Plain sample mean (integration only).
    Montecarlo,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Model file or ensemble directory; omit to build one with --mode.
    #[arg(
        value_name = "MODEL",
        required_unless_present = "mode",
        conflicts_with = "mode"
    )]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 16)]
    pub spins: usize,
    /// Grid resolution G.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Output path; `.csv` and `.pgm` are written next to each other.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Model file or ensemble directory; omit to build one with --mode.
    #[arg(
        value_name = "MODEL",
        required_unless_present = "mode",
        conflicts_with = "mode"
    )]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 16)]
    pub spins: usize,
    /// Registry function whose reference integral to compare against
    /// [default: --function].
    #[arg(long, value_name = "NAME")]
    pub reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_name = "NAME")]
    pub function: String,
    /// Inclusive level range such as `3..7`, or a single level.
    #[arg(long, default_value = "3..7", value_parser = parse_levels)]
    pub levels: RangeInclusive<u32>,
    /// Independent seeds per level; medians are reported.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 16)]
    pub spins: usize,
    #[arg(long, default_value_t = DEFAULT_C1)]
    pub c1: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub recenter: bool,
    #[arg(long, default_value_t = DEFAULT_MC_POINTS)]
    pub mc_points: usize,
    /// CSV file to write; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Inject a fault into the exactness check (it must then fail).
    #[arg(long, value_enum, default_value_t = Mutation::None)]
    pub mutate: Mutation,
}

pub fn parse_levels(s: &str) -> std::result::Result<RangeInclusive<u32>, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| format!("`{t}` is not a level"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty level range {lo}..{hi}"));
    }
    check_level(lo)
        .and(check_level(hi))
        .map_err(|e| e.to_string())?;
    Ok(lo..=hi)
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verify,
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn lookup(name: &str) -> CliResult<&'static TestFunction> {
    registry::get(name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown function `{name}` (known: {})",
            registry::names().join(", ")
        ))
    })
}

fn with_path(path: &Path, e: Error) -> CliError {
    match e {
        Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        Error::Format(msg) => CliError::Io(format!("{}: {msg}", path.display())),
        other => other.into(),
    }
}

/// Sample source and sizing, validated before any work starts.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub function: Option<&'static TestFunction>,
    pub samples: Option<PathBuf>,
    pub m: u32,
    pub c1: f64,
    pub l: Option<usize>,
    pub seed: u64,
    pub spins: usize,
    pub recenter: bool,
    pub mode: Mode,
}

impl RunConfig {
    pub fn resolve(src: &SourceArgs, mode: Mode, spins: usize) -> CliResult<Self> {
        let Some(m) = src.m else {
            return usage("--m is required");
        };
        check_level(m).map_err(|e| CliError::Usage(e.to_string()))?;
        if !(src.c1.is_finite() && src.c1 > 0.0) {
            return usage("--c1 must be positive");
        }
        if src.l == Some(0) {
            return usage("--l must be at least 1");
        }
        if spins == 0 {
            return usage("--spins must be at least 1");
        }
        let function = src.function.as_deref().map(lookup).transpose()?;
        match (function.is_some(), src.samples.is_some(), mode) {
            (false, _, Mode::Smolyak) => return usage("--mode smolyak needs --function"),
            (false, false, _) => return usage("one of --function or --samples is required"),
            _ => {}
        }
        Ok(Self {
            function,
            samples: src.samples.clone(),
            m,
            c1: src.c1,
            l: src.l,
            seed: src.seed,
            spins,
            recenter: src.recenter,
            mode,
        })
    }

    /// Loads or draws the samples and returns them with the step count.
    pub fn samples(&self) -> CliResult<(SampleSet, usize)> {
        match (&self.samples, self.function) {
            (Some(path), _) => {
                let s = SampleSet::read_csv_path(path).map_err(|e| with_path(path, e))?;
                let l = self.l.unwrap_or(s.len());
                Ok((s, l))
            }
            (None, Some(t)) => {
                let l = self
                    .l
                    .unwrap_or_else(|| default_iterations(self.m, self.c1));
                Ok((draw_samples(t.f, l, self.seed)?, l))
            }
            (None, None) => usage("one of --function or --samples is required"),
        }
    }

    fn kaczmarz(&self, l: usize) -> KaczmarzConfig {
        KaczmarzConfig::new(l, self.seed)
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions {
            recenter: self.recenter,
            c1: Some(self.c1),
        }
    }
}

/// An approximation built from flags rather than loaded from disk.
enum Built {
    Model(Model),
    Ensemble(SpinEnsemble),
    MonteCarlo(f64),
}

fn smolyak_model(t: &TestFunction, m: u32) -> CliResult<Model> {
    let w = build_weight_vector(&CenterSamples::from_fn(m, t.f)?)?;
    Ok(Model::new(w, ModelMeta::default()))
}

fn build(cfg: &RunConfig) -> CliResult<Built> {
    if cfg.mode == Mode::Smolyak {
        let t = cfg.function.expect("validated in resolve");
        return Ok(Built::Model(smolyak_model(t, cfg.m)?));
    }
    let (samples, l) = cfg.samples()?;
    Ok(match cfg.mode {
        Mode::Random => Built::Model(fit_with(
            &samples,
            cfg.m,
            &cfg.kaczmarz(l),
            cfg.fit_options(),
        )?),
        Mode::Spin => Built::Ensemble(fit_spin(
            &samples,
            cfg.m,
            &cfg.kaczmarz(l),
            cfg.spins,
            cfg.seed,
            cfg.fit_options(),
        )?),
        Mode::Montecarlo => {
            let n = l.min(samples.len());
            Built::MonteCarlo(samples.values()[..n].iter().sum::<f64>() / n as f64)
        }
        Mode::Smolyak => unreachable!(),
    })
}

fn l2_fields<A: Approximant + ?Sized>(
    a: &A,
    reference: &ReferenceArgs,
    seed: u64,
) -> CliResult<String> {
    let Some(name) = &reference.reference else {
        return Ok(String::new());
    };
    let t = lookup(name)?;
    let e = l2_error(a, t.f, reference.mc_points, seed)?;
    Ok(format!(
        " l2={:.6e} l2_std_error={:.3e}",
        e.estimate, e.std_error
    ))
}

fn validate_reference(reference: &ReferenceArgs) -> CliResult<()> {
    if let Some(name) = &reference.reference {
        lookup(name)?;
    }
    if reference.mc_points < crate::approximator::MIN_MC_POINTS {
        return usage(format!(
            "--mc-points must be at least {}",
            crate::approximator::MIN_MC_POINTS
        ));
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.source, Mode::Random, 1)?;
    validate_reference(&args.reference)?;
    let (samples, l) = cfg.samples()?;
    let start = Instant::now();
    let model = fit_with(&samples, cfg.m, &cfg.kaczmarz(l), cfg.fit_options())?;
    let secs = start.elapsed().as_secs_f64();
    model_io::save_model(&model, &args.out).map_err(|e| with_path(&args.out, e))?;
    let extra = l2_fields(&model, &args.reference, cfg.seed)?;
    writeln!(out, "m={} l={l} seconds={secs:.6}{extra}", cfg.m)?;
    Ok(())
}

fn cmd_spin_fit(args: &SpinFitArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.source, Mode::Spin, args.spins)?;
    validate_reference(&args.reference)?;
    let (samples, l) = cfg.samples()?;
    let start = Instant::now();
    let ens = fit_spin(
        &samples,
        cfg.m,
        &cfg.kaczmarz(l),
        cfg.spins,
        cfg.seed,
        cfg.fit_options(),
    )?;
    let secs = start.elapsed().as_secs_f64();
    model_io::save_ensemble(&ens, &args.out).map_err(|e| with_path(&args.out, e))?;
    let extra = l2_fields(&ens, &args.reference, cfg.seed)?;
    writeln!(
        out,
        "m={} l={l} spins={} seconds={secs:.6}{extra}",
        cfg.m, cfg.spins
    )?;
    Ok(())
}

fn load_stored(path: &Path) -> CliResult<Stored> {
    model_io::load_any(path).map_err(|e| with_path(path, e))
}

/// Values at `((i + 1/2)/G, (j + 1/2)/G)`, row `j` (y) outer, `i` (x) inner.
pub fn grid_values<A: Approximant + ?Sized>(a: &A, g: usize) -> Vec<f64> {
    let h = 1.0 / g as f64;
    par::map_range(g, |j| {
        let y = (j as f64 + 0.5) * h;
        (0..g)
            .map(|i| a.value([(i as f64 + 0.5) * h, y]))
            .collect::<Vec<_>>()
    })
    .concat()
}

pub fn write_grid_csv<W: Write>(mut w: W, g: usize, values: &[f64]) -> io::Result<()> {
    writeln!(w, "x,y,value")?;
    let h = 1.0 / g as f64;
    for j in 0..g {
        let y = (j as f64 + 0.5) * h;
        for i in 0..g {
            writeln!(w, "{},{},{:e}", (i as f64 + 0.5) * h, y, values[j * g + i])?;
        }
    }
    w.flush()
}

/// Binary PGM scaled linearly from the minimum (0) to the maximum (255).
/// The top image row is the largest y. A constant grid maps to 0.
pub fn write_pgm<W: Write>(mut w: W, g: usize, values: &[f64]) -> io::Result<()> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    write!(w, "P5\n{g} {g}\n255\n")?;
    let mut bytes = Vec::with_capacity(g * g);
    for j in (0..g).rev() {
        for &v in &values[j * g..(j + 1) * g] {
            let level = if span > 0.0 {
                ((v - lo) / span * 255.0).round()
            } else {
                0.0
            };
            bytes.push(level.clamp(0.0, 255.0) as u8);
        }
    }
    w.write_all(&bytes)?;
    w.flush()
}

/// `base.csv` and `base.pgm`, dropping a `.csv`/`.pgm` extension from `out`.
pub fn grid_paths(out: &Path) -> (PathBuf, PathBuf) {
    let base = match out.extension().and_then(|e| e.to_str()) {
        Some("csv" | "pgm") => out.with_extension(""),
        _ => out.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = base.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".csv"), with(".pgm"))
}

fn cmd_grid(args: &GridArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.grid < 2 {
        return usage("--grid must be at least 2");
    }
    let values = match (&args.model, args.mode) {
        (Some(path), _) => match load_stored(path)? {
            Stored::Single(m) if m.meta.shift.is_none() => grid_values(&m, args.grid),
            s => grid_values(&s.into_ensemble()?, args.grid),
        },
        (None, Some(Mode::Montecarlo)) => {
            return usage("--mode montecarlo has no pointwise values to grid")
        }
        (None, Some(mode)) => match build(&RunConfig::resolve(&args.source, mode, args.spins)?)? {
            Built::Model(m) => grid_values(&m, args.grid),
            Built::Ensemble(e) => grid_values(&e, args.grid),
            Built::MonteCarlo(_) => unreachable!(),
        },
        (None, None) => return usage("give a model path or --mode"),
    };
    let (csv, pgm) = grid_paths(&args.out);
    let create = |p: &Path| {
        fs::File::create(p)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    };
    write_grid_csv(create(&csv)?, args.grid, &values)?;
    write_pgm(create(&pgm)?, args.grid, &values)?;
    writeln!(out, "csv={} pgm={}", csv.display(), pgm.display())?;
    Ok(())
}

fn cmd_integrate(args: &IntegrateArgs, out: &mut dyn Write) -> CliResult<()> {
    let reference = match (&args.reference, &args.source.function) {
        (Some(name), _) | (None, Some(name)) => Some(lookup(name)?),
        _ => None,
    };
    let value = match (&args.model, args.mode) {
        (Some(path), _) => match load_stored(path)? {
            Stored::Single(m) => m.integrate(),
            Stored::Ensemble(e) => e.integrate(),
        },
        (None, Some(mode)) => match build(&RunConfig::resolve(&args.source, mode, args.spins)?)? {
            Built::Model(m) => m.integrate(),
            Built::Ensemble(e) => e.integrate(),
            Built::MonteCarlo(v) => v,
        },
        (None, None) => return usage("give a model path or --mode"),
    };
    write!(out, "integral={value:.17e}")?;
    if let Some(r) = reference.and_then(|t| t.reference_integral) {
        write!(
            out,
            " reference={r:.17e} abs_error={:.6e}",
            (value - r).abs()
        )?;
    }
    writeln!(out)?;
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// One (level, trial) pair of `compare`.
struct TrialErrors {
    random_l2: f64,
    spin_l2: f64,
    mc_int: Option<f64>,
    random_int: Option<f64>,
    spin_int: Option<f64>,
}

pub const COMPARE_HEADER: &str =
    "m,n,l,smolyak_l2,random_l2,spin_l2,montecarlo_int_err,smolyak_int_err,random_int_err,spin_int_err";

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let t = lookup(&args.function)?;
    if args.trials == 0 || args.spins == 0 {
        return usage("--trials and --spins must be at least 1");
    }
    if !(args.c1.is_finite() && args.c1 > 0.0) {
        return usage("--c1 must be positive");
    }
    validate_reference(&ReferenceArgs {
        reference: None,
        mc_points: args.mc_points,
    })?;
    let reference = t.reference_integral;
    if reference.is_none() {
        writeln!(
            err,
            "warning: `{}` has no reference integral; integration columns left empty",
            t.name
        )?;
    }
    let opts = FitOptions {
        recenter: args.recenter,
        c1: Some(args.c1),
    };
    let levels: Vec<u32> = args.levels.clone().collect();
    let pairs: Vec<(u32, usize)> = levels
        .iter()
        .flat_map(|&m| (0..args.trials).map(move |k| (m, k)))
        .collect();
    let eval_seed = args.seed;
    let trials = par::map_slice(&pairs, |&(m, k)| -> crate::Result<TrialErrors> {
        let seed = derive_seed(args.seed, k as u64);
        let l = default_iterations(m, args.c1);
        let samples = draw_samples(t.f, l, seed)?;
        let cfg = KaczmarzConfig::new(l, seed);
        let model = fit_with(&samples, m, &cfg, opts)?;
        let ens = fit_spin(&samples, m, &cfg, args.spins, seed, opts)?;
        let err_of = |v: f64| reference.map(|r| (v - r).abs());
        Ok(TrialErrors {
            random_l2: l2_error(&model, t.f, args.mc_points, eval_seed)?.estimate,
            spin_l2: l2_error(&ens, t.f, args.mc_points, eval_seed)?.estimate,
            mc_int: err_of(samples.mean_value()),
            random_int: err_of(model.integrate()),
            spin_int: err_of(ens.integrate()),
        })
    })
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;

    let mut table = String::new();
    table.push_str(COMPARE_HEADER);
    table.push('\n');
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
    for (i, &m) in levels.iter().enumerate() {
        let rows = &trials[i * args.trials..(i + 1) * args.trials];
        let med = |f: &dyn Fn(&TrialErrors) -> f64| median(rows.iter().map(f).collect());
        let med_opt = |f: &dyn Fn(&TrialErrors) -> Option<f64>| {
            rows.iter().map(f).collect::<Option<Vec<_>>>().map(median)
        };
        let oracle = smolyak_model(t, m)?;
        let smolyak_l2 = l2_error(&oracle, t.f, args.mc_points, eval_seed)?.estimate;
        let smolyak_int = reference.map(|r| (oracle.integrate() - r).abs());
        table.push_str(&format!(
            "{m},{},{},{:.6e},{:.6e},{:.6e},{},{},{},{}\n",
            1u64 << m,
            default_iterations(m, args.c1),
            smolyak_l2,
            med(&|r| r.random_l2),
            med(&|r| r.spin_l2),
            cell(med_opt(&|r| r.mc_int)),
            cell(smolyak_int),
            cell(med_opt(&|r| r.random_int)),
            cell(med_opt(&|r| r.spin_int)),
        ));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, table).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        }
        None => out.write_all(table.as_bytes())?,
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let start = Instant::now();
    let checks = verify::run_checks(args.mutate)?;
    let mut failed = 0;
    for c in &checks {
        writeln!(out, "{c}")?;
        failed += usize::from(!c.passed());
    }
    writeln!(
        out,
        "{} of {} checks passed in {:.2} s",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_secs_f64()
    )?;
    if failed > 0 {
        Err(CliError::Verify)
    } else {
        Ok(())
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::SpinFit(a) => cmd_spin_fit(a, out),
        Command::Grid(a) => cmd_grid(a, out),
        Command::Integrate(a) => cmd_integrate(a, out),
        Command::Compare(a) => cmd_compare(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
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
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    match execute(&cli, &mut out, &mut err) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Verify) => {
            let _ = writeln!(err, "verification failed");
            EXIT_VERIFY
        }
        Err(CliError::Io(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_IO
        }
    }
}

//! `skcap`: secret-key capacity points, sweeps, figure datasets and Monte
//! Carlo validation.
//!
//! Exit status: 0 success, 1 validation failure, 2 invalid input,
//! 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ini::Ini;
use skcap::sweep::{self, Axis, EvalOptions, Figure, Modes, Row, SweepSpec};
use skcap::{ChannelParams, Exec};

#[derive(Parser, Debug)]
#[command(name = "skcap", version, about = "Secret-key capacity bounds for complex and envelope channel sampling")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Every quantity at one parameter point.
    Point,
    /// One-axis parameter sweep.
    Sweep(SweepArgs),
    /// Recompute a reference figure dataset (fig2, fig4, fig5) with deltas.
    Figure {
        name: String,
    },
    /// Monte Carlo cross-checks, on the default grid or a sweep grid.
    Validate(SweepArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct SweepArgs {
    /// snr_db | rho | snr_alice_db | snr_eve_db
    #[arg(long, global = true)]
    axis: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    start: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    stop: Option<f64>,
    #[arg(long, global = true)]
    count: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Channel power.
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long = "snr-a-db", global = true, allow_hyphen_values = true)]
    snr_a_db: Option<f64>,
    #[arg(long = "snr-b-db", global = true, allow_hyphen_values = true)]
    snr_b_db: Option<f64>,
    #[arg(long = "snr-e-db", global = true, allow_hyphen_values = true)]
    snr_e_db: Option<f64>,
    /// Correlation magnitude between the legitimate channel and Eve's.
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Quadrature tolerance in bits for the envelope entropies.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Separate tolerance for the three-envelope entropy (defaults to 1e-3, or --tol if given).
    #[arg(long, global = true)]
    tol3: Option<f64>,
    /// Output file; a directory for `figure`. Standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Report negative lower bounds as zero.
    #[arg(long, global = true)]
    clamp: bool,
    /// Comma-separated subset of csi, rss, high_snr, oracle.
    #[arg(long, global = true)]
    modes: Option<String>,
    /// INI file; keys are flag names, flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra config section to read, above the subcommand's own section.
    #[arg(long, global = true)]
    section: Option<String>,
    #[arg(long, global = true, env = "SKC_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<skcap::Error> for Failure {
    fn from(e: skcap::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

/// Config file lookup: the `--section` section, then the subcommand's, then
/// keys outside any section.
struct Config {
    ini: Option<Ini>,
    sections: Vec<Option<String>>,
}

impl Config {
    fn load(path: Option<&Path>, cmd: &str, extra: Option<&str>) -> Result<Self, Failure> {
        let ini = path
            .map(|p| Ini::load_from_file(p).map_err(|e| Failure::Input(format!("config {}: {e}", p.display()))))
            .transpose()?;
        if let (Some(ini), Some(s)) = (&ini, extra) {
            if ini.section(Some(s)).is_none() {
                return Err(Failure::Input(format!("config has no section [{s}]")));
            }
        }
        let mut sections = Vec::new();
        if let Some(s) = extra {
            sections.push(Some(s.to_string()));
        }
        sections.push(Some(cmd.to_string()));
        sections.push(None);
        Ok(Self { ini, sections })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let ini = self.ini.as_ref()?;
        let alt = key.replace('_', "-");
        self.sections.iter().find_map(|s| {
            let sec = ini.section(s.as_deref())?;
            sec.get(key).or_else(|| sec.get(&alt))
        })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|e| Failure::Input(format!("config key '{key}' = '{v}': {e}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, Failure> {
        match self.raw(key).map(|v| v.trim().to_ascii_lowercase()) {
            None => Ok(false),
            Some(v) => match v.as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(Failure::Input(format!("config key '{key}' = '{v}' is not a boolean"))),
            },
        }
    }
}

/// Flags, then config, then the default.
macro_rules! pick {
    ($flag:expr, $cfg:expr, $key:literal) => {
        match $flag {
            Some(v) => Some(v),
            None => $cfg.get($key)?,
        }
    };
}

struct Settings {
    params: ChannelParams,
    snr: (f64, f64, f64),
    rho: f64,
    opts: EvalOptions,
    format: Format,
    out: Option<PathBuf>,
    modes_given: bool,
    sweep: SweepArgs,
}

fn resolve(cli: &Cli, cfg: &Config) -> Result<Settings, Failure> {
    let c = &cli.common;
    let p = pick!(c.p, cfg, "p").unwrap_or(1.0);
    let a = pick!(c.snr_a_db, cfg, "snr_a_db").unwrap_or(10.0);
    let b = pick!(c.snr_b_db, cfg, "snr_b_db").unwrap_or(10.0);
    let e = pick!(c.snr_e_db, cfg, "snr_e_db").unwrap_or(10.0);
    let rho = pick!(c.rho, cfg, "rho").unwrap_or(0.9);
    if !(0.0..=1.0).contains(&rho) {
        return Err(Failure::Input(format!("--rho must be in [0, 1], got {rho}")));
    }

    let mut opts = EvalOptions::default();
    if let Some(tol) = pick!(c.tol, cfg, "tol") {
        opts.rss.tol2 = tol;
        opts.rss.tol3 = tol;
    }
    if let Some(tol3) = pick!(c.tol3, cfg, "tol3") {
        opts.rss.tol3 = tol3;
    }
    for t in [opts.rss.tol2, opts.rss.tol3] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Input(format!("tolerance must be positive, got {t}")));
        }
    }
    if let Some(seed) = pick!(c.seed, cfg, "seed") {
        opts.validation.seed = seed;
    }
    if let Some(n) = pick!(c.samples, cfg, "samples") {
        opts.validation.samples = n;
    }
    opts.clamp = c.clamp || cfg.flag("clamp")?;
    let modes: Option<String> = pick!(c.modes.clone(), cfg, "modes");
    let modes_given = modes.is_some();
    if let Some(m) = modes {
        opts.modes = m.parse::<Modes>()?;
    }
    let format = pick!(c.format, cfg, "format").unwrap_or(Format::Csv);
    let out: Option<PathBuf> = pick!(c.out.clone(), cfg, "out");

    let sweep = match &cli.cmd {
        Cmd::Sweep(s) | Cmd::Validate(s) => SweepArgs {
            axis: pick!(s.axis.clone(), cfg, "axis"),
            start: pick!(s.start, cfg, "start"),
            stop: pick!(s.stop, cfg, "stop"),
            count: pick!(s.count, cfg, "count"),
        },
        _ => SweepArgs::default(),
    };
    let sigma = |snr: f64| skcap::params::sigma2_from_snr_db(p, snr);
    Ok(Settings {
        params: ChannelParams::with_real_rho(p, sigma(a), sigma(b), sigma(e), rho),
        snr: (a, b, e),
        rho,
        opts,
        format,
        out,
        modes_given,
        sweep,
    })
}

fn threads(cli: &Cli, cfg: &Config) -> Result<Exec, Failure> {
    let n: Option<usize> = pick!(cli.common.threads, cfg, "threads");
    match n {
        Some(0) => Err(Failure::Input("--threads must be at least 1".into())),
        Some(n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
            Ok(if n == 1 { Exec::Sequential } else { Exec::Parallel })
        }
        None => Ok(Exec::Parallel),
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep_spec(s: &Settings) -> Result<SweepSpec, Failure> {
    let axis = match &s.sweep.axis {
        Some(a) => a.parse::<Axis>()?,
        None => Axis::SnrDb,
    };
    let (start, stop) = match axis {
        Axis::Rho => (0.0, 1.0),
        _ => (0.0, 30.0),
    };
    let spec = SweepSpec {
        axis,
        start: s.sweep.start.unwrap_or(start),
        stop: s.sweep.stop.unwrap_or(stop),
        count: s.sweep.count.unwrap_or(10),
        p: s.params.p,
        snr_a_db: s.snr.0,
        snr_b_db: s.snr.1,
        snr_e_db: s.snr.2,
        rho: s.rho,
        opts: s.opts,
    };
    spec.validate()?;
    Ok(spec)
}

/// Exit status for rows: numerical failures win over rejected points.
fn row_status(rows: &[Row]) -> Result<(), Failure> {
    let failed: Vec<_> = rows.iter().filter(|r| !r.error_text().is_empty()).collect();
    if failed.is_empty() {
        return Ok(());
    }
    let msg = format!("{} of {} rows failed; see the error column", failed.len(), rows.len());
    if failed.iter().any(|r| r.has_numerical_error()) {
        Err(Failure::Numerical(msg))
    } else {
        Err(Failure::Input(msg))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cmd_name = match &cli.cmd {
        Cmd::Point => "point",
        Cmd::Sweep(_) => "sweep",
        Cmd::Figure { .. } => "figure",
        Cmd::Validate(_) => "validate",
    };
    let cfg = Config::load(cli.common.config.as_deref(), cmd_name, cli.common.section.as_deref())?;
    let exec = threads(&cli, &cfg)?;
    let mut s = resolve(&cli, &cfg)?;
    s.opts = s.opts.with_exec(exec);
    let out = s.out.clone();

    match &cli.cmd {
        Cmd::Point => {
            let report = sweep::point(&s.params, &s.opts)?;
            let text = match s.format {
                Format::Json => json(&report),
                Format::Csv => {
                    let row = Row {
                        axis: skcap::params::snr_db(s.params.p, s.params.sigma_a2),
                        report: Some(report.clone()),
                        reference: None,
                        error: None,
                    };
                    sweep::to_csv("snr_a_db", &[row], &[], s.opts.clamp)
                }
            };
            emit(out.as_deref(), &text)?;
            if report.has_numerical_error() {
                return Err(Failure::Numerical("numerical failure; see the error field".into()));
            }
            if !report.errors.is_empty() {
                return Err(Failure::Input("some quantities are undefined here; see the error field".into()));
            }
            Ok(())
        }
        Cmd::Sweep(_) => {
            let spec = sweep_spec(&s)?;
            let rows = sweep::sweep(&spec)?;
            let text = match s.format {
                Format::Json => json(&rows),
                Format::Csv => sweep::to_csv(spec.axis.name(), &rows, &[], s.opts.clamp),
            };
            emit(out.as_deref(), &text)?;
            row_status(&rows)?;
            if spec.opts.modes.oracle && !sweep::validation_passed(&rows) {
                return Err(Failure::Validation("oracle checks failed".into()));
            }
            Ok(())
        }
        Cmd::Figure { name } => {
            let fig: Figure = name.parse()?;
            let sets = sweep::figure(fig, &s.opts)?;
            let ext = match s.format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            let render = |set: &sweep::FigureSet| match s.format {
                Format::Json => json(set),
                Format::Csv => set.to_csv(s.opts.clamp),
            };
            match out.as_deref() {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("creating {}: {e}", dir.display())))?;
                    for set in &sets {
                        emit(Some(&dir.join(format!("{}.{ext}", set.stem()))), &render(set))?;
                    }
                }
                None if s.format == Format::Json => emit(None, &json(&sets))?,
                None => {
                    for set in &sets {
                        emit(None, &format!("# {}.{ext}\n{}", set.stem(), render(set)))?;
                    }
                }
            }
            let rows: Vec<Row> = sets.into_iter().flat_map(|set| set.rows).collect();
            row_status(&rows)
        }
        Cmd::Validate(_) => {
            let mut opts = s.opts;
            if !s.modes_given {
                opts.modes = Modes {
                    csi: false,
                    rss: false,
                    high_snr: false,
                    oracle: true,
                };
            }
            opts.modes.oracle = true;
            let (axis, rows) = if s.sweep.axis.is_some() {
                let spec = SweepSpec { opts, ..sweep_spec(&s)? };
                (spec.axis.name(), sweep::sweep(&spec)?)
            } else {
                ("snr_db", sweep::validate_default_grid(&opts))
            };
            let text = match s.format {
                Format::Json => json(&rows),
                Format::Csv => sweep::validation_csv(axis, &rows),
            };
            emit(out.as_deref(), &text)?;
            let checks: Vec<_> = rows
                .iter()
                .filter_map(|r| r.report.as_ref()?.validation.as_ref())
                .flat_map(|v| &v.checks)
                .collect();
            let passed = checks.iter().filter(|c| c.passed).count();
            eprintln!("validate: {passed}/{} checks passed over {} points", checks.len(), rows.len());
            row_status(&rows)?;
            if !sweep::validation_passed(&rows) {
                return Err(Failure::Validation(format!("{} checks failed", checks.len() - passed)));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("skcap: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

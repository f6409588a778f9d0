//! `sqlink`: evaluate, sweep and Monte Carlo-check a squeezed-light
//! entanglement-distribution link.
//!
//! Exit codes: 0 success, 2 usage error, 3 `--check` failure, 4 I/O error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sqlink_core::link::LinkParams;
use sqlink_core::sweep::{
    chain_rate, eta_from_length, run_sweep, write_chain_csv, write_fig2_csv, write_fig2_gnuplot,
    write_sweep_csv, ChainSpec, Config, RunRecord, SweepSpec, SweepVariable, DEFAULT_FIBER_SPEED,
    DEFAULT_LOSS_DB_PER_KM,
};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_MC_SAMPLES: u64 = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "sqlink", version)]
#[command(about = "Squeezed-light entanglement-distribution link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Probe amplitude α.
    #[arg(allow_hyphen_values = true, long, global = true)]
    alpha: Option<f64>,
    /// Source squeeze factor r.
    #[arg(allow_hyphen_values = true, long, global = true)]
    r: Option<f64>,
    /// Dispersive phase per station (rad).
    #[arg(allow_hyphen_values = true, long, global = true)]
    theta: Option<f64>,
    /// Fiber power transmittance η².
    #[arg(allow_hyphen_values = true, long = "eta-sq", global = true)]
    eta_sq: Option<f64>,
    /// Fiber length in km; sets η² through the attenuation law unless --eta-sq is given.
    #[arg(allow_hyphen_values = true, long = "length-km", global = true)]
    length_km: Option<f64>,
    /// Fiber attenuation (dB/km).
    #[arg(allow_hyphen_values = true, long = "loss-db-per-km", global = true)]
    loss_db_per_km: Option<f64>,
    /// Coherence factor ζ.
    #[arg(allow_hyphen_values = true, long, global = true)]
    zeta: Option<f64>,
    /// Homodyne half-window p_c.
    #[arg(allow_hyphen_values = true, long = "p-c", global = true)]
    p_c: Option<f64>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exit with code 3 unless Monte Carlo estimates lie within 4σ of the closed forms.
    #[arg(long, global = true)]
    check: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Re-run the inputs of a previously emitted run record.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Record,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate P_s, F, r', d and b_s for one link.
    Link,
    /// P_s and F against the selection window (figure data + gnuplot script).
    Fig2 {
        #[arg(allow_hyphen_values = true, long, default_value_t = 0.02)]
        start: f64,
        #[arg(allow_hyphen_values = true, long, default_value_t = 1.0)]
        stop: f64,
        #[arg(allow_hyphen_values = true, long, default_value_t = 0.02)]
        step: f64,
    },
    /// Sweep any one link parameter over a grid.
    Sweep {
        #[arg(long = "var")]
        variable: String,
        #[arg(allow_hyphen_values = true, long)]
        start: f64,
        #[arg(allow_hyphen_values = true, long)]
        stop: f64,
        #[arg(allow_hyphen_values = true, long)]
        step: f64,
        /// Add a Monte Carlo estimate at every grid point (uses --n, --seed).
        #[arg(long)]
        mc: bool,
    },
    /// Seeded Monte Carlo estimate of P_s and F.
    Mc,
    /// Per-link attempt statistics for a chain of equally spaced stations;
    /// η² follows from --spacing-km and the attenuation, not --eta-sq.
    ChainRate {
        #[arg(long, default_value_t = 1)]
        links: u32,
        #[arg(allow_hyphen_values = true, long = "spacing-km", default_value_t = 10.0)]
        spacing_km: f64,
        /// Signal speed in fiber (m/s).
        #[arg(allow_hyphen_values = true, long = "fiber-speed", default_value_t = DEFAULT_FIBER_SPEED)]
        fiber_speed: f64,
        /// Fixed time per attempt on top of the fiber transit (s).
        #[arg(allow_hyphen_values = true, long = "overhead-s", default_value_t = 1e-6)]
        overhead_s: f64,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Check(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<sqlink_core::Error> for CliError {
    fn from(e: sqlink_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Built-in defaults, then the config file, then flags.
fn resolve(common: &Common) -> Result<(LinkParams, Config), CliError> {
    let mut params = LinkParams::baseline();
    let config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    config.apply(&mut params)?;

    if let Some(v) = common.alpha {
        params.alpha = v;
    }
    if let Some(v) = common.r {
        params.r = v;
    }
    if let Some(v) = common.theta {
        params.theta = v;
    }
    if let Some(v) = common.zeta {
        params.zeta = v;
    }
    if let Some(v) = common.p_c {
        params.p_c = v;
    }
    if let Some(len) = common.length_km {
        let loss = match common.loss_db_per_km {
            Some(l) => l,
            None => config.get("loss_db_per_km")?.unwrap_or(DEFAULT_LOSS_DB_PER_KM),
        };
        params.eta_sq = eta_from_length(len, loss)?;
    }
    if let Some(v) = common.eta_sq {
        params.eta_sq = v;
    }
    params.validate()?;
    Ok((params, config))
}

fn loss_db_per_km(common: &Common, config: &Config) -> Result<f64, CliError> {
    Ok(match common.loss_db_per_km {
        Some(l) => l,
        None => config.get("loss_db_per_km")?.unwrap_or(DEFAULT_LOSS_DB_PER_KM),
    })
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => {
            let f = File::create(path).map_err(io_err(path))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let mut w = open_output(out)?;
    let target = out.unwrap_or(Path::new("<stdout>"));
    write(&mut *w).map_err(io_err(target))?;
    w.flush().map_err(io_err(target))
}

fn load_record(path: &Path) -> Result<RunRecord, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(RunRecord::from_json(&text)?)
}

fn write_record_text(rec: &RunRecord, w: &mut dyn Write) -> io::Result<()> {
    let p = &rec.params;
    let f = &rec.figures;
    writeln!(w, "{} {}", rec.tool, rec.version)?;
    writeln!(w, "alpha     {}", p.alpha)?;
    writeln!(w, "r         {}", p.r)?;
    writeln!(w, "theta     {}", p.theta)?;
    writeln!(w, "eta_sq    {}", p.eta_sq)?;
    writeln!(w, "zeta      {}", p.zeta)?;
    writeln!(w, "p_c       {}", p.p_c)?;
    writeln!(w, "r_prime   {:.6}", rec.r_prime)?;
    writeln!(w, "d         {:.6}", rec.d)?;
    writeln!(w, "b_-1      {:.6}", f.b[0])?;
    writeln!(w, "b_0       {:.6}", f.b[1])?;
    writeln!(w, "b_+1      {:.6}", f.b[2])?;
    writeln!(w, "P_s       {:.6}", f.p_s)?;
    writeln!(w, "F         {:.6}", f.fidelity)?;
    if let Some(mc) = &rec.monte_carlo {
        writeln!(w, "mc_n      {}", mc.n_samples)?;
        writeln!(w, "mc_seed   {}", mc.seed)?;
        writeln!(w, "mc_rng    {}", mc.rng)?;
        writeln!(w, "P_s_hat   {:.6} +/- {:.6}", mc.p_s_hat, mc.std_err_ps)?;
        match (mc.fidelity_hat, mc.std_err_f) {
            (Some(fh), Some(se)) => writeln!(w, "F_hat     {fh:.6} +/- {se:.6}")?,
            _ => writeln!(w, "F_hat     undefined (no accepted shots)")?,
        }
    }
    Ok(())
}

fn write_record(rec: &RunRecord, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    emit(out, |w| match format {
        Format::Table => write_record_text(rec, w),
        Format::Record => writeln!(w, "{}", rec.to_json()),
    })
}

fn check_estimate(rec: &RunRecord) -> Result<(), CliError> {
    let mc = rec.monte_carlo.as_ref().expect("mc record");
    let dps = (mc.p_s_hat - rec.figures.p_s).abs();
    if dps > 4.0 * mc.std_err_ps {
        return Err(CliError::Check(format!(
            "P_s estimate {} is {:.2} standard errors from {}",
            mc.p_s_hat,
            dps / mc.std_err_ps,
            rec.figures.p_s
        )));
    }
    match (mc.fidelity_hat, mc.std_err_f) {
        (Some(f), Some(se)) if (f - rec.figures.fidelity).abs() <= 4.0 * se => Ok(()),
        (Some(f), Some(se)) => Err(CliError::Check(format!(
            "F estimate {f} is {:.2} standard errors from {}",
            (f - rec.figures.fidelity).abs() / se,
            rec.figures.fidelity
        ))),
        _ => Err(CliError::Check("no accepted shots; fidelity estimate undefined".into())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    let out = common.out.as_deref();
    let (params, config) = resolve(common)?;
    let seed = match common.seed {
        Some(s) => s,
        None => config.get("seed")?.unwrap_or(DEFAULT_SEED),
    };
    let n = match common.n {
        Some(n) => n,
        None => config.get("n")?.unwrap_or(DEFAULT_MC_SAMPLES),
    };

    match cli.command {
        Command::Link => {
            let rec = match &common.replay {
                Some(path) => load_record(path)?.replay()?,
                None => RunRecord::analytic(&params)?,
            };
            write_record(&rec, common.format, out)
        }
        Command::Mc => {
            let rec = match &common.replay {
                Some(path) => {
                    let old = load_record(path)?;
                    if old.monte_carlo.is_none() {
                        return Err(CliError::Usage("record has no Monte Carlo section to replay".into()));
                    }
                    old.replay()?
                }
                None => RunRecord::with_monte_carlo(&params, n, seed)?,
            };
            write_record(&rec, common.format, out)?;
            if common.check {
                check_estimate(&rec)?;
            }
            Ok(())
        }
        Command::Fig2 { start, stop, step } => {
            let spec = SweepSpec { start, stop, step, ..SweepSpec::fig2(params) };
            let rows = run_sweep(&spec, None)?;
            match common.format {
                Format::Table => {
                    emit(out, |w| write_fig2_csv(&rows, w))?;
                    if let Some(path) = out {
                        let script = path.with_extension("gp");
                        let data = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        emit(Some(&script), |w| write_fig2_gnuplot(&data, w))?;
                    }
                    Ok(())
                }
                Format::Record => emit(out, |w| writeln!(w, "{}", to_json(&rows))),
            }
        }
        Command::Sweep { variable, start, stop, step, mc } => {
            let variable: SweepVariable = variable.parse()?;
            let spec = SweepSpec { variable, start, stop, step, fixed: params };
            let rows = run_sweep(&spec, mc.then_some((n, seed)))?;
            match common.format {
                Format::Table => emit(out, |w| write_sweep_csv(variable, &rows, w)),
                Format::Record => emit(out, |w| writeln!(w, "{}", to_json(&rows))),
            }
        }
        Command::ChainRate { links, spacing_km, fiber_speed, overhead_s } => {
            let spec = ChainSpec {
                n_links: links,
                spacing_km,
                loss_db_per_km: loss_db_per_km(common, &config)?,
                fiber_speed_m_per_s: fiber_speed,
                overhead_s,
            };
            let rows = chain_rate(&spec, &params)?;
            match common.format {
                Format::Table => emit(out, |w| write_chain_csv(&rows, w)),
                Format::Record => emit(out, |w| writeln!(w, "{}", to_json(&rows))),
            }
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("finite values serialize")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) => format!("error: {m}"),
                CliError::Check(m) => format!("check failed: {m}"),
                CliError::Io(m) => format!("i/o error: {m}"),
            };
            eprintln!("{msg}");
            ExitCode::from(e.code())
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pinching_wpc::config::load_config;
use pinching_wpc::deploy::{self, Metric};
use pinching_wpc::sweep::{self, Axis, RunRecord, RunSettings, SweepMetric, SweepSpec};
use pinching_wpc::validate::{self, SuiteOptions};
use pinching_wpc::{Error, Grid, McSpec, SystemConfig};

#[derive(Parser)]
#[command(name = "pawpc", version, about = "Wireless-powered pinching-antenna system performance model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; defaults apply to missing keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Monte Carlo user drops per point
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: u64,
    /// Chebyshev nodes, overrides the config
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Oracle resolution, e.g. 2000x2000
    #[arg(long, global = true, default_value = "2000x2000", value_parser = parse_grid)]
    grid: Grid,
    /// Treat unsupported closed-form geometry as an error instead of using the oracle
    #[arg(long, global = true)]
    no_fallback: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and write a CSV
    Sweep(SweepArgs),
    /// Write the CSVs behind one figure
    Figure {
        /// fig3, fig4a, fig4b, fig6, fig7, fig8a, fig8b or fig9
        id: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the validation suite and report pass/fail per criterion
    Validate {
        /// Directory for the figure CSVs checked by the suite
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal waveguide spacing: closed form for one user, or numerical search
    OptimalL {
        /// Lateral user offset for the closed-form optimum
        #[arg(long, allow_negative_numbers = true)]
        y: Option<f64>,
        #[arg(long, value_enum, default_value_t = MetricArg::Outage)]
        metric: MetricArg,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Optimal time-allocation factor by numerical search
    OptimalTau {
        #[arg(long, value_enum, default_value_t = MetricArg::Rate)]
        metric: MetricArg,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// SNR profile across y_m and the optimal user position
    PositionScan {
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    axis: String,
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    #[arg(long)]
    points: usize,
    /// Comma-separated subset of outage_cf, outage_mc, rate_cf, rate_mc, baseline_outage, baseline_rate
    #[arg(long, default_value = "outage_cf")]
    metrics: String,
    /// CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON run record here
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Outage,
    Rate,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Outage => Metric::Outage,
            MetricArg::Rate => Metric::Rate,
        }
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got `{s}`"))?;
    let nx: usize = a.parse().map_err(|_| format!("bad NX in `{s}`"))?;
    let ny: usize = b.parse().map_err(|_| format!("bad NY in `{s}`"))?;
    if nx == 0 || ny == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok(Grid { nx, ny })
}

enum Failure {
    Lib(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::UnknownKey { .. } | Error::InvalidConfig { .. } | Error::Sweep(_) => 2,
        Error::UnsupportedGeometry { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn resolve_config(c: &Common) -> Result<SystemConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => load_config(p).map_err(|e| match e {
            Error::Io(msg) => Error::Parse { line: 0, msg },
            other => other,
        })?,
        None => SystemConfig::default(),
    };
    if let Some(k) = c.k {
        cfg.k = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn settings(c: &Common) -> RunSettings {
    RunSettings { mc: McSpec::new(c.samples, c.seed), grid: c.grid, fallback: !c.no_fallback }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let cfg = resolve_config(c)?;
    match &cli.cmd {
        Command::Sweep(a) => cmd_sweep(&cfg, c, a)?,
        Command::Figure { id, out } => {
            for p in sweep::write_figure(id, &cfg, &settings(c), out)? {
                println!("{}", p.display());
            }
        }
        Command::Validate { out } => cmd_validate(&cfg, c, out.as_deref())?,
        Command::OptimalL { y, metric, tol } => {
            let r = match y {
                Some(y) => deploy::optimal_l_for_user(&cfg, &cfg.derived()?, *y),
                None => {
                    check_geometry(&cfg, c, (*metric).into())?;
                    deploy::search_optimal_l(&cfg, (*metric).into(), *tol)?
                }
            };
            print_json(&r);
        }
        Command::OptimalTau { metric, tol } => {
            check_geometry(&cfg, c, (*metric).into())?;
            print_json(&deploy::search_optimal_tau(&cfg, (*metric).into(), *tol)?);
        }
        Command::PositionScan { points, out } => {
            let best = deploy::optimal_user_position(&cfg, &cfg.derived()?);
            eprintln!("optimal user position: x = {}, y = +/-{} (case {})", best.argopt[0], best.argopt[1], deploy::placement_case(&cfg));
            let spec = SweepSpec::new(Axis::YM, -cfg.dy / 2.0, cfg.dy / 2.0, *points, &[]);
            let s = settings(c);
            let table = sweep::run_sweep(&cfg, &spec, &s)?;
            emit(out.as_deref(), &sweep::to_csv(&cfg, &spec, &s, &table))?;
        }
    }
    Ok(())
}

/// Outage searches on an `h <= L/2` base geometry need the oracle.
fn check_geometry(cfg: &SystemConfig, c: &Common, metric: Metric) -> Result<(), Error> {
    if c.no_fallback && metric == Metric::Outage && !cfg.has_closed_form_geometry() {
        return Err(Error::UnsupportedGeometry { h: cfg.h, l: cfg.l });
    }
    Ok(())
}

fn print_json(v: &deploy::PlacementResult) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable result"));
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_sweep(cfg: &SystemConfig, c: &Common, a: &SweepArgs) -> Result<(), Error> {
    let axis: Axis = a.axis.parse()?;
    let metrics = a
        .metrics
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(str::parse::<SweepMetric>)
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SweepSpec::new(axis, a.from, a.to, a.points, &metrics);
    let s = settings(c);
    let table = sweep::run_sweep(cfg, &spec, &s)?;
    emit(a.out.as_deref(), &sweep::to_csv(cfg, &spec, &s, &table))?;
    if let Some(path) = &a.record {
        let record = RunRecord {
            tool_version: sweep::VERSION.into(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            config: *cfg,
            settings: s,
            sweep: spec,
            table,
        };
        std::fs::write(path, serde_json::to_string_pretty(&record).expect("serializable record"))?;
    }
    Ok(())
}

fn cmd_validate(cfg: &SystemConfig, c: &Common, out: Option<&Path>) -> Result<(), Failure> {
    if cfg.alpha == 0.0 {
        println!("note: alpha = 0, outage and rate use the lossless closed forms");
    }
    if !cfg.has_closed_form_geometry() {
        println!("note: h <= L/2, outage uses the {}x{} quadrature oracle fallback", c.grid.nx, c.grid.ny);
    }
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| std::env::temp_dir().join(format!("pawpc-validate-{}", std::process::id())));
    let opts = SuiteOptions { mc: McSpec::new(c.samples, c.seed), grid: c.grid, ..SuiteOptions::default() };
    let reports = validate::run_suite(cfg, &opts, &dir);
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    println!("{} passed, {failed} failed", reports.len() - failed);
    if failed > 0 {
        Err(Failure::Validation)
    } else {
        Ok(())
    }
}

//! Parameter sweeps, CSV emission and the figure recipes.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, Provenance};
use crate::baseline;
use crate::config::to_config_string;
use crate::error::{Error, Result};
use crate::mc::{self, Grid, McSpec};
use crate::physics::{snr_aligned, SystemConfig, UserPosition};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    PsDbm,
    Alpha,
    L,
    Tau,
    Dx,
    Dy,
    /// Lateral user offset; emits SNR profiles instead of metrics.
    YM,
}

impl Axis {
    pub const ALL: [Axis; 7] = [Axis::PsDbm, Axis::Alpha, Axis::L, Axis::Tau, Axis::Dx, Axis::Dy, Axis::YM];

    pub fn name(self) -> &'static str {
        match self {
            Axis::PsDbm => "Ps_dBm",
            Axis::Alpha => "alpha",
            Axis::L => "L",
            Axis::Tau => "tau",
            Axis::Dx => "Dx",
            Axis::Dy => "Dy",
            Axis::YM => "y_m",
        }
    }

    /// `cfg` with this parameter set to `v`.
    pub fn apply(self, cfg: &SystemConfig, v: f64) -> SystemConfig {
        let mut c = *cfg;
        match self {
            Axis::PsDbm => c.ps_dbm = v,
            Axis::Alpha => c.alpha = v,
            Axis::L => c.l = v,
            Axis::Tau => c.tau = v,
            Axis::Dx => c.dx = v,
            Axis::Dy => c.dy = v,
            Axis::YM => {}
        }
        c
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Sweep(format!("unknown axis `{s}` (expected one of Ps_dBm, alpha, L, tau, Dx, Dy, y_m)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMetric {
    OutageCf,
    OutageMc,
    RateCf,
    RateMc,
    BaselineOutage,
    BaselineRate,
}

impl SweepMetric {
    pub const ALL: [SweepMetric; 6] = [
        SweepMetric::OutageCf,
        SweepMetric::OutageMc,
        SweepMetric::RateCf,
        SweepMetric::RateMc,
        SweepMetric::BaselineOutage,
        SweepMetric::BaselineRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepMetric::OutageCf => "outage_cf",
            SweepMetric::OutageMc => "outage_mc",
            SweepMetric::RateCf => "rate_cf",
            SweepMetric::RateMc => "rate_mc",
            SweepMetric::BaselineOutage => "baseline_outage",
            SweepMetric::BaselineRate => "baseline_rate",
        }
    }

    fn columns(self) -> Vec<String> {
        let n = self.name();
        match self {
            SweepMetric::OutageCf => vec![n.into(), format!("{n}_regime")],
            SweepMetric::RateCf => vec![n.into()],
            _ => vec![n.into(), format!("{n}_std_err")],
        }
    }
}

impl fmt::Display for SweepMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepMetric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Sweep(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub metrics: Vec<SweepMetric>,
}

impl SweepSpec {
    pub fn new(axis: Axis, lo: f64, hi: f64, points: usize, metrics: &[SweepMetric]) -> Self {
        Self { axis, lo, hi, points, metrics: metrics.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Sweep(format!("range must satisfy lo < hi (got [{}, {}])", self.lo, self.hi)));
        }
        if self.points < 2 {
            return Err(Error::Sweep(format!("points must be >= 2 (got {})", self.points)));
        }
        if self.axis != Axis::YM && self.metrics.is_empty() {
            return Err(Error::Sweep("at least one metric is required".into()));
        }
        Ok(())
    }

    /// Evenly spaced axis values, endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| if i + 1 == n { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64 })
            .collect()
    }
}

/// Evaluation knobs shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub mc: McSpec,
    /// Oracle resolution for outage when the closed form is unavailable.
    pub grid: Grid,
    /// Allow the oracle fallback; otherwise unsupported geometry is an error.
    pub fallback: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { mc: McSpec::default(), grid: Grid::default(), fallback: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v:.16e}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].clone()).collect())
    }

    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.iter().map(Cell::as_f64).collect()
    }
}

pub fn run_sweep(cfg: &SystemConfig, spec: &SweepSpec, settings: &RunSettings) -> Result<SweepTable> {
    spec.validate()?;
    cfg.validate()?;
    if spec.axis == Axis::YM {
        return snr_profile(cfg, spec);
    }
    let mut columns = vec![spec.axis.name().to_string()];
    for m in &spec.metrics {
        columns.extend(m.columns());
    }
    let rows = spec
        .values()
        .into_par_iter()
        .map(|v| {
            let c = spec.axis.apply(cfg, v);
            let mut row = vec![Cell::Num(v)];
            for m in &spec.metrics {
                row.extend(evaluate(&c, *m, settings)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { columns, rows })
}

fn evaluate(cfg: &SystemConfig, metric: SweepMetric, settings: &RunSettings) -> Result<Vec<Cell>> {
    let d = cfg.derived()?;
    let est = |e: mc::Estimate| vec![Cell::Num(e.value), Cell::Num(e.std_err)];
    Ok(match metric {
        SweepMetric::OutageCf => {
            let r = if settings.fallback {
                analytic::outage_with(cfg, &d, settings.grid)?
            } else {
                analytic::outage_closed_form(cfg, &d)?
            };
            let tag = match r.provenance {
                Provenance::ClosedForm(t) => t.to_string(),
                p @ Provenance::Oracle(_) => p.to_string(),
            };
            vec![Cell::Num(r.p_out), Cell::Text(tag)]
        }
        SweepMetric::OutageMc => est(mc::mc_outage_with(cfg, &d, &settings.mc)),
        SweepMetric::RateCf => vec![Cell::Num(analytic::ergodic_rate_with(cfg, &d)?.rate)],
        SweepMetric::RateMc => est(mc::mc_rate_with(cfg, &d, &settings.mc)),
        SweepMetric::BaselineOutage => est(baseline::baseline_outage_with(cfg, &d, &settings.mc)),
        SweepMetric::BaselineRate => est(baseline::baseline_rate_with(cfg, &d, &settings.mc)),
    })
}

fn snr_profile(cfg: &SystemConfig, spec: &SweepSpec) -> Result<SweepTable> {
    let d = cfg.derived()?;
    let rows = spec
        .values()
        .into_iter()
        .map(|y| {
            let u = UserPosition::new(0.0, y);
            vec![Cell::Num(y), Cell::Num(snr_aligned(cfg, &d, &u)), Cell::Num(baseline::baseline_snr(cfg, &d, &u))]
        })
        .collect();
    Ok(SweepTable { columns: vec!["y_m".into(), "snr".into(), "baseline_snr".into()], rows })
}

/// Comment preamble, header and rows. Contains nothing run-dependent beyond
/// the inputs, so identical inputs give identical bytes.
pub fn to_csv(cfg: &SystemConfig, spec: &SweepSpec, settings: &RunSettings, table: &SweepTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# pinching-wpc {VERSION}");
    let _ = writeln!(s, "# seed = {}", settings.mc.seed);
    let _ = writeln!(s, "# samples = {}", settings.mc.samples);
    let _ = writeln!(s, "# antithetic = {}", settings.mc.antithetic);
    let _ = writeln!(s, "# grid = {}x{}", settings.grid.nx, settings.grid.ny);
    let _ = writeln!(s, "# fallback = {}", settings.fallback);
    let _ = writeln!(s, "# sweep = {} [{:?}, {:?}] points {}", spec.axis, spec.lo, spec.hi, spec.points);
    for line in to_config_string(cfg).lines() {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

/// Parses CSV emitted by [`to_csv`], skipping the comment preamble.
pub fn parse_csv(text: &str) -> Result<SweepTable> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Sweep("csv has no header".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<Cell> =
            line.split(',').map(|f| f.parse::<f64>().map(Cell::Num).unwrap_or_else(|_| Cell::Text(f.to_string()))).collect();
        if row.len() != columns.len() {
            return Err(Error::Sweep(format!("csv row {} has {} fields, header has {}", i + 1, row.len(), columns.len())));
        }
        rows.push(row);
    }
    Ok(SweepTable { columns, rows })
}

/// Full record of one sweep run, for a JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub timestamp_unix: u64,
    pub config: SystemConfig,
    pub settings: RunSettings,
    pub sweep: SweepSpec,
    pub table: SweepTable,
}

pub const FIGURE_IDS: [&str; 8] = ["fig3", "fig4a", "fig4b", "fig6", "fig7", "fig8a", "fig8b", "fig9"];

pub const FIGURE_ALPHAS: [f64; 4] = [0.0, 0.01, 0.05, 0.1];
pub const FIGURE_SPACING_POWERS: [f64; 4] = [33.0, 35.0, 37.0, 39.0];

/// One CSV file of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSweep {
    pub file_name: String,
    pub cfg: SystemConfig,
    pub spec: SweepSpec,
}

/// The sweeps behind figure `id`, built on top of `base`.
pub fn figure_sweeps(id: &str, base: &SystemConfig) -> Result<Vec<FigureSweep>> {
    use SweepMetric::*;
    let ps_axis = |metrics: &[SweepMetric]| SweepSpec::new(Axis::PsDbm, 0.0, 50.0, 21, metrics);
    let square = |d: f64| SystemConfig { dx: d, dy: d, ..*base };
    let by_area = |prefix: &str, metrics: &[SweepMetric]| {
        [10.0, 30.0]
            .into_iter()
            .map(|d| FigureSweep { file_name: format!("{prefix}_D{d}.csv"), cfg: square(d), spec: ps_axis(metrics) })
            .collect::<Vec<_>>()
    };
    let by_alpha = |prefix: &str, d: f64, spec: SweepSpec, extra: &dyn Fn(SystemConfig) -> SystemConfig| {
        FIGURE_ALPHAS
            .into_iter()
            .map(|alpha| FigureSweep {
                file_name: format!("{prefix}_alpha{alpha}.csv"),
                cfg: extra(SystemConfig { alpha, ..square(d) }),
                spec: spec.clone(),
            })
            .collect::<Vec<_>>()
    };
    let same = |c: SystemConfig| c;
    Ok(match id {
        "fig3" => by_area("fig3", &[OutageCf, OutageMc, BaselineOutage]),
        "fig4a" => by_alpha("fig4a", 10.0, ps_axis(&[OutageCf, OutageMc, BaselineOutage]), &same),
        "fig4b" => by_alpha("fig4b", 30.0, ps_axis(&[OutageCf, OutageMc, BaselineOutage]), &same),
        "fig6" => FIGURE_SPACING_POWERS
            .into_iter()
            .map(|ps| FigureSweep {
                file_name: format!("fig6_Ps{ps}.csv"),
                cfg: SystemConfig { ps_dbm: ps, ..square(10.0) },
                spec: SweepSpec::new(Axis::L, 0.0, 10.0, 41, &[OutageCf, OutageMc]),
            })
            .collect(),
        "fig7" => by_area("fig7", &[RateCf, RateMc, BaselineRate]),
        "fig8a" => by_alpha("fig8a", 10.0, ps_axis(&[RateCf, RateMc, BaselineRate]), &same),
        "fig8b" => by_alpha("fig8b", 30.0, ps_axis(&[RateCf, RateMc, BaselineRate]), &same),
        "fig9" => by_alpha(
            "fig9",
            10.0,
            SweepSpec::new(Axis::Tau, 0.01, 0.99, 99, &[RateCf, RateMc]),
            &|c| SystemConfig { ps_dbm: 40.0, ..c },
        ),
        other => return Err(Error::Sweep(format!("unknown figure id `{other}` (expected one of {})", FIGURE_IDS.join(", ")))),
    })
}

/// Runs every sweep of figure `id` and writes one CSV per sweep into `dir`.
pub fn write_figure(id: &str, base: &SystemConfig, settings: &RunSettings, dir: &Path) -> Result<Vec<PathBuf>> {
    let sweeps = figure_sweeps(id, base)?;
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(sweeps.len());
    for f in sweeps {
        let table = run_sweep(&f.cfg, &f.spec, settings)?;
        let path = dir.join(&f.file_name);
        std::fs::write(&path, to_csv(&f.cfg, &f.spec, settings, &table))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> RunSettings {
        RunSettings { mc: McSpec::new(20_000, 42), grid: Grid { nx: 200, ny: 200 }, fallback: true }
    }

    #[test]
    fn spec_validation() {
        let m = [SweepMetric::OutageCf];
        assert!(SweepSpec::new(Axis::PsDbm, 0.0, 1.0, 2, &m).validate().is_ok());
        assert!(SweepSpec::new(Axis::PsDbm, 1.0, 1.0, 2, &m).validate().is_err());
        assert!(SweepSpec::new(Axis::PsDbm, 0.0, 1.0, 1, &m).validate().is_err());
        assert!(SweepSpec::new(Axis::PsDbm, 0.0, 1.0, 5, &[]).validate().is_err());
        assert!(SweepSpec::new(Axis::YM, -5.0, 5.0, 5, &[]).validate().is_ok());
    }

    #[test]
    fn names_round_trip() {
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        for m in SweepMetric::ALL {
            assert_eq!(m.name().parse::<SweepMetric>().unwrap(), m);
        }
        assert!("beta".parse::<Axis>().is_err());
    }

    #[test]
    fn endpoints_are_exact() {
        let v = SweepSpec::new(Axis::Tau, 0.01, 0.99, 99, &[SweepMetric::RateCf]).values();
        assert_eq!(v.len(), 99);
        assert_eq!((v[0], v[98]), (0.01, 0.99));
    }

    #[test]
    fn two_points_give_header_plus_two_rows() {
        let cfg = SystemConfig::default();
        let spec = SweepSpec::new(Axis::PsDbm, 20.0, 40.0, 2, &SweepMetric::ALL);
        let t = run_sweep(&cfg, &spec, &quick()).unwrap();
        let csv = to_csv(&cfg, &spec, &quick(), &t);
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 3);
        assert_eq!(
            body[0],
            "Ps_dBm,outage_cf,outage_cf_regime,outage_mc,outage_mc_std_err,rate_cf,rate_mc,rate_mc_std_err,\
             baseline_outage,baseline_outage_std_err,baseline_rate,baseline_rate_std_err"
        );
        assert!(body[1].starts_with("2.0000000000000000e1,"));
        assert_eq!(parse_csv(&csv).unwrap(), t);
    }

    #[test]
    fn oracle_columns_are_tagged() {
        let cfg = SystemConfig::default();
        let spec = SweepSpec::new(Axis::L, 4.0, 8.0, 2, &[SweepMetric::OutageCf]);
        let t = run_sweep(&cfg, &spec, &quick()).unwrap();
        let tags = t.column("outage_cf_regime").unwrap();
        assert!(matches!(&tags[0], Cell::Text(s) if s.starts_with("lossy:")));
        assert_eq!(tags[1], Cell::Text("oracle:200x200".into()));
        let strict = RunSettings { fallback: false, ..quick() };
        assert!(matches!(run_sweep(&cfg, &spec, &strict), Err(Error::UnsupportedGeometry { .. })));
    }

    #[test]
    fn profile_axis_is_even() {
        let cfg = SystemConfig::default();
        let t = run_sweep(&cfg, &SweepSpec::new(Axis::YM, -5.0, 5.0, 11, &[]), &quick()).unwrap();
        let snr = t.numeric_column("snr").unwrap();
        for i in 0..11 {
            assert_eq!(snr[i], snr[10 - i]);
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let cfg = SystemConfig::default();
        let spec = SweepSpec::new(Axis::PsDbm, 20.0, 50.0, 4, &[SweepMetric::OutageCf, SweepMetric::OutageMc]);
        let a = to_csv(&cfg, &spec, &quick(), &run_sweep(&cfg, &spec, &quick()).unwrap());
        let b = to_csv(&cfg, &spec, &quick(), &run_sweep(&cfg, &spec, &quick()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn every_figure_has_sweeps() {
        for id in FIGURE_IDS {
            let s = figure_sweeps(id, &SystemConfig::default()).unwrap();
            assert!(!s.is_empty());
            for f in &s {
                f.spec.validate().unwrap();
                f.cfg.validate().unwrap();
            }
        }
        assert!(figure_sweeps("fig5", &SystemConfig::default()).is_err());
    }

    #[test]
    fn invalid_point_is_reported() {
        let spec = SweepSpec::new(Axis::Tau, 0.5, 1.0, 3, &[SweepMetric::RateCf]);
        assert!(matches!(
            run_sweep(&SystemConfig::default(), &spec, &quick()),
            Err(Error::InvalidConfig { field: "tau", .. })
        ));
    }
}

//! Self-checks of the closed forms against the oracles, one function per
//! criterion. [`run_suite`] runs all of them on a base configuration.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::analytic::{self, Table};
use crate::deploy::{self, Metric};
use crate::error::Result;
use crate::mc::{self, Grid, McSpec};
use crate::physics::{path_product, snr_aligned, SystemConfig, UserPosition};
use crate::specfun::dilog;
use crate::sweep::{self, parse_csv, RunSettings, SweepTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CriterionReport {
    fn new(id: &str, name: &str, pass: bool, detail: String) -> Self {
        Self { id: id.into(), name: name.into(), pass, detail }
    }

    fn from_result(id: &str, name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((pass, detail)) => Self::new(id, name, pass, detail),
            Err(e) => Self::new(id, name, false, format!("error: {e}")),
        }
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {:>3} {}: {}", self.id, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub mc: McSpec,
    pub grid: Grid,
    pub ps_grid: Vec<f64>,
    /// Randomized configurations per table for the partition check.
    pub partition_draws: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            mc: McSpec::default(),
            grid: Grid::default(),
            ps_grid: vec![20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0],
            partition_draws: 100_000,
        }
    }
}

fn with_ps(base: &SystemConfig, ps: f64) -> SystemConfig {
    SystemConfig { ps_dbm: ps, ..*base }
}

fn outage(cfg: &SystemConfig, grid: Grid) -> Result<f64> {
    Ok(analytic::outage(cfg, grid)?.p_out)
}

fn rate(cfg: &SystemConfig) -> Result<f64> {
    Ok(analytic::ergodic_rate(cfg)?.rate)
}

pub fn outage_vs_monte_carlo(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let r = (|| {
        let start = Instant::now();
        let mut worst = (0.0f64, 0.0);
        let mut ok = true;
        for &ps in &opts.ps_grid {
            let c = with_ps(base, ps);
            let cf = outage(&c, opts.grid)?;
            let est = mc::mc_outage(&c, &opts.mc)?;
            let gap = (cf - est.value).abs();
            let tol = (3.0 * est.std_err).max(1e-4);
            ok &= gap <= tol;
            if gap / tol > worst.0 {
                worst = (gap / tol, ps);
            }
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((ok && secs <= 60.0, format!("worst gap/tol {:.3} at {} dBm, {:.1} s", worst.0, worst.1, secs)))
    })();
    CriterionReport::from_result("1", "outage closed form vs Monte Carlo", r)
}

pub fn outage_vs_quadrature(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let r = (|| {
        let mut worst = (0.0f64, 0.0);
        for &ps in &opts.ps_grid {
            let c = with_ps(base, ps);
            let gap = (outage(&c, opts.grid)? - mc::quad_outage(&c, opts.grid)?).abs();
            if gap >= worst.0 {
                worst = (gap, ps);
            }
        }
        Ok((worst.0 <= 1e-3, format!("max |diff| {:.3e} at {} dBm (tol 1e-3)", worst.0, worst.1)))
    })();
    CriterionReport::from_result("2", "outage closed form vs quadrature", r)
}

pub fn rate_vs_monte_carlo(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let r = (|| {
        let mut worst = (0.0f64, 0.0);
        for &ps in &opts.ps_grid {
            let c = with_ps(base, ps);
            let cf = rate(&c)?;
            let rel = (cf - mc::mc_rate(&c, &opts.mc)?.value).abs() / cf.max(0.01);
            if rel >= worst.0 {
                worst = (rel, ps);
            }
        }
        Ok((worst.0 <= 0.01, format!("max relative gap {:.3e} at {} dBm (tol 1e-2)", worst.0, worst.1)))
    })();
    CriterionReport::from_result("3", "rate closed form vs Monte Carlo", r)
}

pub fn lossless_consistency(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let r = (|| {
        let (mut d_out, mut d_rate) = (0.0f64, 0.0f64);
        for &ps in &opts.ps_grid {
            let tiny = SystemConfig { alpha: 1e-8, ..with_ps(base, ps) };
            let zero = SystemConfig { alpha: 0.0, ..tiny };
            d_out = d_out.max((outage(&tiny, opts.grid)? - outage(&zero, opts.grid)?).abs());
            d_rate = d_rate.max((rate(&tiny)? - rate(&zero)?).abs());
        }
        Ok((d_out <= 1e-3 && d_rate <= 1e-3, format!("max outage diff {d_out:.3e}, max rate diff {d_rate:.3e} (tol 1e-3)")))
    })();
    CriterionReport::from_result("4", "lossy limit equals lossless", r)
}

pub fn special_functions() -> CriterionReport {
    let r = (|| {
        let id = [(0.0, 0.0), (1.0, PI * PI / 6.0), (-1.0, -PI * PI / 12.0)];
        let mut e_id = 0.0f64;
        for (x, want) in id {
            e_id = e_id.max((dilog(x)? - want).abs());
        }
        let mut e_refl = 0.0f64;
        for i in 1..=100 {
            let x = i as f64 / 101.0;
            let rhs = PI * PI / 6.0 - x.ln() * (1.0 - x).ln();
            e_refl = e_refl.max((dilog(x)? + dilog(1.0 - x)? - rhs).abs());
        }
        Ok((e_id <= 1e-12 && e_refl <= 1e-10, format!("identity err {e_id:.2e}, reflection err {e_refl:.2e}")))
    })();
    CriterionReport::from_result("5", "dilogarithm identities", r)
}

fn k_gap(base: &SystemConfig, opts: &SuiteOptions, f: impl Fn(&SystemConfig) -> Result<f64>) -> Result<(f64, f64)> {
    let mut worst = (0.0f64, 0.0);
    for &ps in &opts.ps_grid {
        let c = with_ps(base, ps);
        let gap = (f(&SystemConfig { k: 50, ..c })? - f(&SystemConfig { k: 500, ..c })?).abs();
        if gap >= worst.0 {
            worst = (gap, ps);
        }
    }
    Ok(worst)
}

pub fn k_convergence_rate(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let r = k_gap(base, opts, rate).map(|(g, ps)| (g <= 1e-4, format!("max |K50 - K500| {g:.3e} at {ps} dBm (tol 1e-4)")));
    CriterionReport::from_result("6a", "rate K-convergence", r)
}

pub fn k_convergence_outage(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let grid = opts.grid;
    let r = k_gap(base, opts, |c| outage(c, grid))
        .map(|(g, ps)| (g <= 1e-4, format!("max |K50 - K500| {g:.3e} at {ps} dBm (tol 1e-4)")));
    CriterionReport::from_result("6b", "outage K-convergence", r)
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

/// Random valid configuration with `h > L/2`.
fn random_config(u: &mut Uniform, lossy: bool) -> SystemConfig {
    let h = u.range(0.5, 8.0);
    let l = u.range(0.0, 2.0 * h * 0.999);
    SystemConfig {
        alpha: if lossy { 10f64.powf(u.range(-4.0, 0.0)) } else { 0.0 },
        h,
        l,
        dx: u.range(1.0, 50.0),
        dy: u.range(1.0, 50.0),
        tau: u.range(0.05, 0.95),
        ps_dbm: u.range(-10.0, 70.0),
        rate: u.range(0.1, 5.0),
        ..SystemConfig::default()
    }
}

pub fn regime_partition(opts: &SuiteOptions, seed: u64) -> CriterionReport {
    let r = (|| {
        let mut u = Uniform::new(seed);
        let (mut bad_lossy, mut bad_lossless) = (0usize, 0usize);
        let (mut hits1, mut hits2) = ([0usize; 6], [0usize; 3]);
        for _ in 0..opts.partition_draws {
            let c = random_config(&mut u, true);
            let d = c.derived()?;
            let conds = analytic::lossy_row_conditions(&c, &d);
            let row = analytic::classify_regime(&c, &d, Table::Lossy)?.row as usize;
            if conds.iter().filter(|&&b| b).count() != 1 || !conds[row - 1] {
                bad_lossy += 1;
            }
            hits1[row - 1] += 1;

            let c = random_config(&mut u, false);
            let d = c.derived()?;
            let conds = analytic::lossless_row_conditions(&c, &d);
            let row = analytic::classify_regime(&c, &d, Table::Lossless)?.row as usize;
            if conds.iter().filter(|&&b| b).count() != 1 || !conds[row - 1] {
                bad_lossless += 1;
            }
            hits2[row - 1] += 1;
        }
        Ok((
            bad_lossy == 0 && bad_lossless == 0,
            format!(
                "{} draws each; violations lossy {bad_lossy}, lossless {bad_lossless}; rows hit {hits1:?} / {hits2:?}",
                opts.partition_draws
            ),
        ))
    })();
    CriterionReport::from_result("7", "regime partition", r)
}

pub fn monotonicity(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let r = (|| {
        let lin = |lo: f64, hi: f64| (0..5).map(move |i| lo + (hi - lo) * i as f64 / 4.0).collect::<Vec<_>>();
        let (alphas, dxs, dys) = (lin(0.01, 0.1), lin(5.0, 30.0), lin(5.0, 30.0));
        let mut out = [[[0.0; 5]; 5]; 5];
        let mut rt = [[[0.0; 5]; 5]; 5];
        for (i, &alpha) in alphas.iter().enumerate() {
            for (j, &dx) in dxs.iter().enumerate() {
                for (k, &dy) in dys.iter().enumerate() {
                    let c = SystemConfig { alpha, dx, dy, ..with_ps(base, 40.0) };
                    out[i][j][k] = outage(&c, opts.grid)?;
                    rt[i][j][k] = rate(&c)?;
                }
            }
        }
        let mut violations = 0;
        for a in 0..5 {
            for b in 0..5 {
                for s in 0..4 {
                    let steps = [
                        ((s, a, b), (s + 1, a, b)),
                        ((a, s, b), (a, s + 1, b)),
                        ((a, b, s), (a, b, s + 1)),
                    ];
                    for ((i0, j0, k0), (i1, j1, k1)) in steps {
                        violations += usize::from(out[i1][j1][k1] < out[i0][j0][k0]);
                        violations += usize::from(rt[i1][j1][k1] > rt[i0][j0][k0]);
                    }
                }
            }
        }
        Ok((violations == 0, format!("{violations} monotonicity violations over 5x5x5 grid")))
    })();
    CriterionReport::from_result("8", "monotone in alpha, Dx, Dy", r)
}

pub fn placement_formulas(base: &SystemConfig, seed: u64) -> CriterionReport {
    let r = (|| {
        let mut u = Uniform::new(seed);
        let dy = base.dy;
        let n = 10_000;
        let mut worst_l = 0.0f64;
        for _ in 0..1000 {
            let h = u.range(0.5, 6.0);
            let y = u.range(-dy / 2.0, dy / 2.0);
            let d = base.derived()?;
            let c = SystemConfig { h, ..*base };
            let want = deploy::optimal_l_for_user(&c, &d, y).argopt[0];
            let step = dy / (n - 1) as f64;
            let (mut arg, mut best) = (0.0, f64::INFINITY);
            for i in 0..n {
                let l = i as f64 * step;
                let f = path_product(h, l, y);
                if f < best {
                    best = f;
                    arg = l;
                }
            }
            worst_l = worst_l.max((arg - want).abs());
        }

        let mut worst_y = 0.0f64;
        let mut cases = [0usize; 3];
        for _ in 0..300 {
            let h = u.range(0.5, 6.0);
            let dyc = u.range(2.0, 40.0);
            let top = (dyc * dyc + 4.0 * h * h).sqrt();
            let l = match cases.iter().enumerate().min_by_key(|(_, &n)| n).map(|(i, _)| i).unwrap_or(0) {
                0 => u.range(0.0, 2.0 * h),
                1 => u.range(2.0 * h, top),
                _ => u.range(top, top + 20.0),
            };
            let c = SystemConfig { h, l, dy: dyc, ..*base };
            let d = c.derived()?;
            cases[usize::from(deploy::placement_case(&c)) - 1] += 1;
            let want = deploy::optimal_user_position(&c, &d).argopt[1];
            // spacing at most 5e-4 m
            let ny = (dyc / 5e-4).ceil() as usize + 1;
            let (mut arg, mut best) = (0.0f64, f64::NEG_INFINITY);
            for i in 0..ny {
                let y = -dyc / 2.0 + dyc * i as f64 / (ny - 1) as f64;
                let s = snr_aligned(&c, &d, &UserPosition::new(0.0, y));
                if s > best || (s == best && y.abs() < arg.abs()) {
                    best = s;
                    arg = y;
                }
            }
            worst_y = worst_y.max((arg.abs() - want).abs());
        }
        Ok((
            worst_l <= 1e-3 && worst_y <= 1e-3 && cases.iter().all(|&n| n > 0),
            format!("max |L_grid - L*| {worst_l:.2e} m, max |y_grid - y*| {worst_y:.2e} m, cases {cases:?}"),
        ))
    })();
    CriterionReport::from_result("9", "placement formulas vs grid search", r)
}

pub fn tau_optimum(base: &SystemConfig) -> CriterionReport {
    let r = (|| {
        let c = with_ps(base, 40.0);
        let res = deploy::search_optimal_tau(&c, Metric::Rate, 1e-6)?;
        let tau = res.argopt[0];
        let (lo, hi) = (rate(&SystemConfig { tau: 0.01, ..c })?, rate(&SystemConfig { tau: 0.99, ..c })?);
        let pass = tau > 0.0 && tau < 1.0 && res.objective > lo.max(hi);
        Ok((pass, format!("tau* {tau:.6}, rate {:.6} vs rate(0.01) {lo:.6}, rate(0.99) {hi:.6}", res.objective)))
    })();
    CriterionReport::from_result("10a", "interior optimal tau", r)
}

pub fn spacing_optimum(base: &SystemConfig) -> CriterionReport {
    let r = (|| {
        let c = with_ps(base, 40.0);
        let res = deploy::search_optimal_l(&c, Metric::Outage, 1e-6)?;
        let l = res.argopt[0];
        let at_zero = outage(&SystemConfig { l: 0.0, ..c }, deploy::SearchOptions::new(1e-6).fallback)?;
        let pass = res.objective < at_zero;
        Ok((
            pass,
            format!("L_opt {l:.6} (flat {}), outage {:.6e} vs outage(L=0) {at_zero:.6e}", res.flat, res.objective),
        ))
    })();
    CriterionReport::from_result("10b", "optimal spacing beats co-location", r)
}

pub fn array_scaling(base: &SystemConfig, opts: &SuiteOptions) -> CriterionReport {
    let r = (|| {
        let mut mismatches = 0usize;
        let mut checked = 0usize;
        for alpha in [0.0, base.alpha.max(1e-3)] {
            for &ps in &opts.ps_grid {
                let single = SystemConfig { n1: 1, n2: 1, alpha, ..with_ps(base, ps) };
                let array = SystemConfig { n1: 2, n2: 3, ..single };
                let scaled = single.derived()?.with_rho_scaled(6.0);
                let da = array.derived()?;
                let o1 = analytic::outage_closed_form(&array, &da).map(|r| r.p_out.to_bits());
                let o2 = analytic::outage_closed_form(&single, &scaled).map(|r| r.p_out.to_bits());
                let r1 = analytic::ergodic_rate_with(&array, &da)?.rate.to_bits();
                let r2 = analytic::ergodic_rate_with(&single, &scaled)?.rate.to_bits();
                mismatches += usize::from(o1 != o2) + usize::from(r1 != r2);
                checked += 2;
            }
        }
        Ok((mismatches == 0, format!("{mismatches} of {checked} outputs differ bitwise")))
    })();
    CriterionReport::from_result("11", "array gain equals power scaling", r)
}

fn load(dir: &Path, name: &str) -> Result<SweepTable> {
    parse_csv(&std::fs::read_to_string(dir.join(name))?)
}

fn monotone(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| if increasing { w[1] >= w[0] } else { w[1] <= w[0] })
}

/// Nonincreasing up to the first minimum and nondecreasing after it
/// (`minimum = true`), or the mirror image for a maximum.
pub fn unimodal(v: &[f64], minimum: bool) -> bool {
    let s: Vec<f64> = v.iter().map(|x| if minimum { *x } else { -*x }).collect();
    let Some(m) = s.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) else {
        return true;
    };
    monotone(&s[..=m], false) && monotone(&s[m..], true)
}

/// Shape checks on figure CSVs already written to `dir`.
pub fn figure_shapes_in(dir: &Path, base: &SystemConfig) -> CriterionReport {
    let r = (|| {
        let mut failures = Vec::new();
        let mut checks = 0usize;
        let mut check = |ok: bool, what: String| {
            checks += 1;
            if !ok {
                failures.push(what);
            }
        };
        for f in sweep::figure_sweeps("fig3", base)? {
            let t = load(dir, &f.file_name)?;
            let v = t.numeric_column("outage_cf").unwrap_or_default();
            check(!v.is_empty() && monotone(&v, false), format!("{} outage not decreasing in Ps", f.file_name));
        }
        for id in ["fig4a", "fig4b"] {
            let tables: Vec<Vec<f64>> = sweep::figure_sweeps(id, base)?
                .iter()
                .map(|f| load(dir, &f.file_name).map(|t| t.numeric_column("outage_cf").unwrap_or_default()))
                .collect::<Result<_>>()?;
            for (f, v) in sweep::figure_sweeps(id, base)?.iter().zip(&tables) {
                check(!v.is_empty() && monotone(v, false), format!("{} outage not decreasing in Ps", f.file_name));
            }
            let rows = tables.iter().map(Vec::len).min().unwrap_or(0);
            for i in 0..rows {
                let col: Vec<f64> = tables.iter().map(|t| t[i]).collect();
                check(monotone(&col, true), format!("{id} outage not increasing in alpha at row {i}"));
            }
        }
        for f in sweep::figure_sweeps("fig6", base)? {
            let v = load(dir, &f.file_name)?.numeric_column("outage_cf").unwrap_or_default();
            check(!v.is_empty() && unimodal(&v, true), format!("{} outage not unimodal in L", f.file_name));
        }
        for f in sweep::figure_sweeps("fig9", base)? {
            let v = load(dir, &f.file_name)?.numeric_column("rate_cf").unwrap_or_default();
            check(!v.is_empty() && unimodal(&v, false), format!("{} rate not unimodal in tau", f.file_name));
        }
        let detail = if failures.is_empty() {
            format!("{checks} shape checks passed")
        } else {
            format!("{} of {checks} shape checks failed: {}", failures.len(), failures.join("; "))
        };
        Ok((failures.is_empty(), detail))
    })();
    CriterionReport::from_result("12", "figure shapes", r)
}

/// Emits fig3, fig4a/b, fig6 and fig9 into `dir` and checks their shapes.
pub fn figure_shapes(base: &SystemConfig, settings: &RunSettings, dir: &Path) -> CriterionReport {
    for id in ["fig3", "fig4a", "fig4b", "fig6", "fig9"] {
        if let Err(e) = sweep::write_figure(id, base, settings, dir) {
            return CriterionReport::new("12", "figure shapes", false, format!("error emitting {id}: {e}"));
        }
    }
    figure_shapes_in(dir, base)
}

/// Every criterion on `base`. Figure CSVs for the shape check go to `dir`.
pub fn run_suite(base: &SystemConfig, opts: &SuiteOptions, dir: &Path) -> Vec<CriterionReport> {
    let settings = RunSettings { mc: opts.mc, grid: opts.grid, fallback: true };
    vec![
        outage_vs_monte_carlo(base, opts),
        outage_vs_quadrature(base, opts),
        rate_vs_monte_carlo(base, opts),
        lossless_consistency(base, opts),
        special_functions(),
        k_convergence_rate(base, opts),
        k_convergence_outage(base, opts),
        regime_partition(opts, opts.mc.seed),
        monotonicity(base, opts),
        placement_formulas(base, opts.mc.seed),
        tau_optimum(base),
        spacing_optimum(base),
        array_scaling(base, opts),
        figure_shapes(base, &settings, dir),
    ]
}

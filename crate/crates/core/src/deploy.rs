//! Optimal waveguide spacing and user placement, plus numerical search of the
//! time-allocation factor and waveguide spacing against the closed forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};
use crate::mc::Grid;
use crate::physics::{path_product, snr_aligned, DerivedParams, SystemConfig, UserPosition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    GridSearch,
    GoldenSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    /// Optimiser in native units. For [`optimal_user_position`] this is
    /// `[x*, y*, −y*]`.
    pub argopt: Vec<f64>,
    pub objective: f64,
    pub method: Method,
    /// The grid scan beat the golden-section optimum by more than `10·tol`.
    pub non_unimodal: bool,
    /// The objective is constant over the search range.
    pub flat: bool,
    /// Only set by [`search_optimal_l`]: whether `L_opt > √(Dy² − 4h²)`.
    pub exceeds_remark_bound: Option<bool>,
}

impl PlacementResult {
    fn closed(argopt: Vec<f64>, objective: f64) -> Self {
        Self { argopt, objective, method: Method::ClosedForm, non_unimodal: false, flat: false, exceeds_remark_bound: None }
    }
}

/// Spacing `L*` that minimises `p(y_m)` for a user at lateral offset `y_m`:
/// `0` for `|y_m| < h`, otherwise `2√(y_m² − h²)`. The objective is the
/// aligned SNR at `x_m = 0`.
pub fn optimal_l_for_user(cfg: &SystemConfig, d: &DerivedParams, y_m: f64) -> PlacementResult {
    let l = optimal_l(cfg.h, y_m);
    let snr = d.snr_scale / path_product(cfg.h, l, y_m);
    PlacementResult::closed(vec![l], snr)
}

fn optimal_l(h: f64, y_m: f64) -> f64 {
    if y_m.abs() < h {
        0.0
    } else {
        2.0 * (y_m * y_m - h * h).sqrt()
    }
}

/// Which of the three spacing ranges `cfg.l` falls into: 1 for `L < 2h`,
/// 2 for `2h ≤ L ≤ √(Dy² + 4h²)`, 3 above.
pub fn placement_case(cfg: &SystemConfig) -> u8 {
    if cfg.l < 2.0 * cfg.h {
        1
    } else if cfg.l <= (cfg.dy * cfg.dy + 4.0 * cfg.h * cfg.h).sqrt() {
        2
    } else {
        3
    }
}

/// SNR-maximising user location. Optima come in pairs `(0, ±y*)`.
pub fn optimal_user_position(cfg: &SystemConfig, d: &DerivedParams) -> PlacementResult {
    let y = match placement_case(cfg) {
        1 => 0.0,
        2 => (cfg.l * cfg.l / 4.0 - cfg.h * cfg.h).max(0.0).sqrt(),
        _ => cfg.dy / 2.0,
    };
    let snr = snr_aligned(cfg, d, &UserPosition::new(0.0, y));
    PlacementResult::closed(vec![0.0, y, -y], snr)
}

/// Aligned SNR along `y_grid` at fixed `x_m`.
pub fn snr_profile_y(cfg: &SystemConfig, d: &DerivedParams, x_m: f64, y_grid: &[f64]) -> Vec<(f64, f64)> {
    y_grid.iter().map(|&y| (y, snr_aligned(cfg, d, &UserPosition::new(x_m, y)))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// Minimised.
    Outage,
    /// Maximised.
    Rate,
}

impl Metric {
    pub fn evaluate(self, cfg: &SystemConfig, fallback: Grid) -> Result<f64> {
        let d = cfg.derived()?;
        match self {
            Metric::Outage => Ok(analytic::outage_with(cfg, &d, fallback)?.p_out),
            Metric::Rate => Ok(analytic::ergodic_rate_with(cfg, &d)?.rate),
        }
    }

    /// Sign turning the metric into a quantity to minimise.
    fn sign(self) -> f64 {
        match self {
            Metric::Outage => 1.0,
            Metric::Rate => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub tol: f64,
    pub scan_points: usize,
    /// Oracle resolution for outage when the closed form is unavailable.
    pub fallback: Grid,
}

impl SearchOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, scan_points: 10_000, fallback: Grid { nx: 200, ny: 200 } }
    }
}

pub const TAU_BOUNDS: (f64, f64) = (1e-4, 1.0 - 1e-4);

pub fn search_optimal_tau(cfg: &SystemConfig, metric: Metric, tol: f64) -> Result<PlacementResult> {
    search_optimal_tau_with(cfg, metric, &SearchOptions::new(tol))
}

pub fn search_optimal_tau_with(cfg: &SystemConfig, metric: Metric, opts: &SearchOptions) -> Result<PlacementResult> {
    let (lo, hi) = TAU_BOUNDS;
    search(lo, hi, metric, opts, |tau| SystemConfig { tau, ..*cfg })
}

pub fn search_optimal_l(cfg: &SystemConfig, metric: Metric, tol: f64) -> Result<PlacementResult> {
    search_optimal_l_with(cfg, metric, &SearchOptions::new(tol))
}

pub fn search_optimal_l_with(cfg: &SystemConfig, metric: Metric, opts: &SearchOptions) -> Result<PlacementResult> {
    let mut r = search(0.0, cfg.dy, metric, opts, |l| SystemConfig { l, ..*cfg })?;
    let bound2 = cfg.dy * cfg.dy - 4.0 * cfg.h * cfg.h;
    r.exceeds_remark_bound = Some(r.argopt[0] > bound2.max(0.0).sqrt());
    Ok(r)
}

fn search<F>(lo: f64, hi: f64, metric: Metric, opts: &SearchOptions, at: F) -> Result<PlacementResult>
where
    F: Fn(f64) -> SystemConfig + Sync,
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig { field: "tol", reason: format!("must be > 0 (got {})", opts.tol) });
    }
    if opts.scan_points < 2 {
        return Err(Error::InvalidConfig { field: "scan_points", reason: "must be >= 2".into() });
    }
    let cost = |v: f64| -> Result<f64> { Ok(metric.sign() * metric.evaluate(&at(v), opts.fallback)?) };

    let n = opts.scan_points;
    let step = (hi - lo) / (n - 1) as f64;
    let scan: Vec<f64> = (0..n).into_par_iter().map(|i| cost(lo + i as f64 * step)).collect::<Result<_>>()?;
    let (mut best_i, mut best, mut worst) = (0, scan[0], scan[0]);
    for (i, &c) in scan.iter().enumerate() {
        if c < best {
            best_i = i;
            best = c;
        }
        worst = worst.max(c);
    }
    let result = |arg: f64, c: f64, method, non_unimodal, flat| PlacementResult {
        argopt: vec![arg],
        objective: metric.sign() * c,
        method,
        non_unimodal,
        flat,
        exceeds_remark_bound: None,
    };
    if worst == best {
        return Ok(result(lo, scan[0], Method::GridSearch, false, true));
    }

    let (g_arg, g_cost) = golden_section(lo, hi, opts.tol, &cost)?;
    if best < g_cost - 10.0 * opts.tol {
        Ok(result(lo + best_i as f64 * step, best, Method::GridSearch, true, false))
    } else {
        Ok(result(g_arg, g_cost, Method::GoldenSection, false, false))
    }
}

fn golden_section(mut a: f64, mut b: f64, tol: f64, f: &impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    Ok([(c, fc), (d, fd), (mid, fm)].into_iter().fold((mid, fm), |acc, p| if p.1 < acc.1 { p } else { acc }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn spacing_examples() {
        let c = cfg();
        let d = c.derived().unwrap();
        assert_eq!(optimal_l_for_user(&c, &d, 0.0).argopt, vec![0.0]);
        assert_eq!(optimal_l_for_user(&c, &d, 5.0).argopt, vec![8.0]);
        assert_eq!(optimal_l_for_user(&c, &d, 3.0).argopt, vec![0.0]);
        assert_eq!(optimal_l_for_user(&c, &d, -5.0).argopt, vec![8.0]);
    }

    #[test]
    fn spacing_is_stationary() {
        // d/dL p = (L²/4 + h² − y²)·L
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let h = rng.random_range(0.5..5.0);
            let y: f64 = rng.random_range(h..3.0 * h);
            let l = optimal_l(h, y);
            assert!(((l * l / 4.0 + h * h - y * y) * l).abs() <= 1e-6 * (1.0 + y * y * y));
        }
    }

    #[test]
    fn spacing_dominates_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let h = rng.random_range(0.5..5.0);
            let y = rng.random_range(-15.0..15.0);
            let best = path_product(h, optimal_l(h, y), y);
            let top = 2.0 * (y * y + h * h).sqrt() + 1.0;
            for j in 0..1000 {
                let l = top * j as f64 / 999.0;
                assert!(best <= path_product(h, l, y) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn user_position_cases() {
        let base = cfg();
        for (l, want) in [(4.0, 0.0), (10.0, 4.0), (12.0, 5.0)] {
            let c = SystemConfig { l, ..base };
            let r = optimal_user_position(&c, &c.derived().unwrap());
            assert_eq!(r.argopt[0], 0.0);
            assert!((r.argopt[1] - want).abs() < 1e-12);
            assert_eq!(r.argopt[2], -r.argopt[1]);
        }
    }

    #[test]
    fn user_position_is_grid_argmax() {
        for l in [2.0, 5.9, 6.0, 8.0, 10.0, 11.6, 11.7, 15.0] {
            let c = SystemConfig { l, ..cfg() };
            let d = c.derived().unwrap();
            let r = optimal_user_position(&c, &d);
            let n = 10_001;
            let ys: Vec<f64> = (0..n).map(|i| -c.dy / 2.0 + c.dy * i as f64 / (n - 1) as f64).collect();
            let prof = snr_profile_y(&c, &d, 0.0, &ys);
            let top = prof.iter().map(|p| p.1).fold(f64::MIN, f64::max);
            let hit = prof.iter().filter(|p| p.1 == top).map(|p| p.0.abs()).fold(f64::MAX, f64::min);
            assert!((hit - r.argopt[1]).abs() <= 1e-3, "L={l}: grid {hit} vs {}", r.argopt[1]);
            for p in &prof {
                assert!(p.1 <= r.objective * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn profile_is_even() {
        let c = SystemConfig { l: 9.0, ..cfg() };
        let d = c.derived().unwrap();
        let ys: Vec<f64> = (0..=50).map(|i| i as f64 / 10.0).collect();
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        let (a, b) = (snr_profile_y(&c, &d, 2.0, &ys), snr_profile_y(&c, &d, 2.0, &neg));
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.1, q.1);
        }
    }

    #[test]
    fn tau_optimum_is_interior() {
        let c = SystemConfig { ps_dbm: 40.0, ..cfg() };
        let r = search_optimal_tau(&c, Metric::Rate, 1e-6).unwrap();
        let tau = r.argopt[0];
        assert!(tau > 0.01 && tau < 0.99);
        let rate = |t| Metric::Rate.evaluate(&SystemConfig { tau: t, ..c }, Grid::default()).unwrap();
        assert!(r.objective > rate(0.01) && r.objective > rate(0.99));
        assert!(!r.non_unimodal && !r.flat);
        assert_eq!(r.method, Method::GoldenSection);
    }

    #[test]
    fn tau_optimum_matches_scan() {
        let c = SystemConfig { ps_dbm: 35.0, ..cfg() };
        let tol = 1e-6;
        let r = search_optimal_tau(&c, Metric::Rate, tol).unwrap();
        let scan = (0..10_000)
            .map(|i| TAU_BOUNDS.0 + (TAU_BOUNDS.1 - TAU_BOUNDS.0) * i as f64 / 9999.0)
            .map(|t| Metric::Rate.evaluate(&SystemConfig { tau: t, ..c }, Grid::default()).unwrap())
            .fold(f64::MIN, f64::max);
        assert!(r.objective >= scan - tol);
    }

    #[test]
    fn spacing_optimum_beats_co_located() {
        let c = SystemConfig { ps_dbm: 35.0, ..cfg() };
        let tol = 1e-6;
        let r = search_optimal_l(&c, Metric::Outage, tol).unwrap();
        let l = r.argopt[0];
        assert!(l > 0.0 && l < c.dy);
        let at = |l| Metric::Outage.evaluate(&SystemConfig { l, ..c }, SearchOptions::new(tol).fallback).unwrap();
        assert!(r.objective < at(0.0));
        let scan = (0..10_000).map(|i| at(c.dy * i as f64 / 9999.0)).fold(f64::MAX, f64::min);
        assert!(r.objective <= scan + tol);
        assert_eq!(r.exceeds_remark_bound, Some(false));
    }

    #[test]
    fn flat_objective_returns_lower_bound() {
        let c = SystemConfig { ps_dbm: -50.0, ..cfg() };
        let r = search_optimal_l_with(&c, Metric::Outage, &SearchOptions { scan_points: 200, ..SearchOptions::new(1e-4) })
            .unwrap();
        assert!(r.flat);
        assert_eq!(r.argopt, vec![0.0]);
        assert_eq!(r.objective, 1.0);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(search_optimal_tau(&cfg(), Metric::Rate, 0.0).is_err());
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, fx) = golden_section(-3.0, 5.0, 1e-9, &|x| Ok((x - 1.25) * (x - 1.25))).unwrap();
        assert!((x - 1.25).abs() < 1e-8 && fx < 1e-15);
    }
}

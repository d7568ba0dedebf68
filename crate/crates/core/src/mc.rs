//! Validation oracles that share no machinery with the closed forms: seeded
//! Monte Carlo over random user drops, and midpoint-rule integration over
//! the user rectangle.
//!
//! Sample `i` of seed `s` always consumes words `4i..4i+4` of the ChaCha8
//! stream keyed by `s`, so results do not depend on how the index range is
//! split across threads. Partial sums are reduced in chunk order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::physics::{snr_aligned, DerivedParams, SystemConfig, UserPosition};

const CHUNK: u64 = 1 << 14;
const WORDS_PER_SAMPLE: u128 = 4;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSpec {
    pub samples: u64,
    pub seed: u64,
    /// Pair every drop `(x, y)` with `(Dx − x, −y)`.
    pub antithetic: bool,
}

impl Default for McSpec {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 42, antithetic: false }
    }
}

impl McSpec {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, antithetic: false }
    }
}

/// Sample mean with its standard error and a normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub samples: u64,
}

impl Estimate {
    fn new(value: f64, std_err: f64, samples: u64) -> Self {
        Self {
            value,
            std_err,
            ci95_low: value - Z95 * std_err,
            ci95_high: value + Z95 * std_err,
            samples,
        }
    }
}

/// Midpoint-rule resolution over `x ∈ [0, Dx]`, `y ∈ [−Dy/2, Dy/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { nx: 2000, ny: 2000 }
    }
}

/// Counter-addressed uniform stream: `(seed, index)` → two `U[0,1)` draws.
#[derive(Debug, Clone)]
pub struct UserSampler {
    rng: ChaCha8Rng,
}

impl UserSampler {
    pub fn new(seed: u64, first_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(u128::from(first_index) * WORDS_PER_SAMPLE);
        Self { rng }
    }

    fn unit(&mut self) -> f64 {
        // 53 high bits → [0, 1)
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Next user drop, uniform on `[0, Dx] × [−Dy/2, Dy/2]`.
    pub fn next_user(&mut self, cfg: &SystemConfig) -> UserPosition {
        let ux = self.unit();
        let uy = self.unit();
        UserPosition { x_m: ux * cfg.dx, y_m: (uy - 0.5) * cfg.dy }
    }
}

/// User drop number `index` for `seed`.
pub fn sample_user(cfg: &SystemConfig, seed: u64, index: u64) -> UserPosition {
    UserSampler::new(seed, index).next_user(cfg)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: KahanSum,
    sum_sq: KahanSum,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum.add(v);
        self.sum_sq.add(v * v);
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum.add(o.sum.value());
        self.sum_sq.add(o.sum_sq.value());
    }
}

/// Draws `spec.samples` users and averages `f` over them (antithetic pairs
/// count as one observation each pair).
fn sample_mean<F>(cfg: &SystemConfig, spec: &McSpec, f: F) -> Moments
where
    F: Fn(&UserPosition) -> f64 + Sync,
{
    let draws = if spec.antithetic { spec.samples.div_ceil(2) } else { spec.samples };
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(draws);
            let mut sampler = UserSampler::new(spec.seed, start);
            let mut m = Moments::default();
            for _ in start..end {
                let u = sampler.next_user(cfg);
                if spec.antithetic {
                    let mirror = UserPosition { x_m: cfg.dx - u.x_m, y_m: -u.y_m };
                    m.push(0.5 * (f(&u) + f(&mirror)));
                } else {
                    m.push(f(&u));
                }
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &partial {
        total.merge(m);
    }
    total
}

fn mean_estimate(m: &Moments, reported_samples: u64) -> Estimate {
    let n = m.n as f64;
    let mean = m.sum.value() / n;
    let var = if m.n > 1 { ((m.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Estimate::new(mean, (var / n).sqrt(), reported_samples)
}

/// Monte Carlo mean of an arbitrary per-user quantity.
pub fn mc_mean<F>(cfg: &SystemConfig, spec: &McSpec, f: F) -> Estimate
where
    F: Fn(&UserPosition) -> f64 + Sync,
{
    let m = sample_mean(cfg, spec, f);
    mean_estimate(&m, spec.samples)
}

/// Monte Carlo probability of an event, with binomial standard error.
pub fn mc_probability<F>(cfg: &SystemConfig, spec: &McSpec, event: F) -> Estimate
where
    F: Fn(&UserPosition) -> bool + Sync,
{
    if spec.antithetic {
        return mc_mean(cfg, spec, |u| f64::from(u8::from(event(u))));
    }
    let m = sample_mean(cfg, spec, |u| f64::from(u8::from(event(u))));
    let n = m.n as f64;
    let p = m.sum.value() / n;
    Estimate::new(p, (p * (1.0 - p) / n).sqrt(), spec.samples)
}

/// Instantaneous achievable rate `(1−τ)·log₂(1 + SNR)`.
pub fn instantaneous_rate(cfg: &SystemConfig, snr: f64) -> f64 {
    (1.0 - cfg.tau) * snr.ln_1p() / std::f64::consts::LN_2
}

/// Empirical frequency of `(1−τ)log₂(1 + SNR) < R` for the aligned deployment.
pub fn mc_outage(cfg: &SystemConfig, spec: &McSpec) -> crate::Result<Estimate> {
    let d = cfg.derived()?;
    Ok(mc_outage_with(cfg, &d, spec))
}

pub fn mc_outage_with(cfg: &SystemConfig, d: &DerivedParams, spec: &McSpec) -> Estimate {
    mc_probability(cfg, spec, |u| instantaneous_rate(cfg, snr_aligned(cfg, d, u)) < cfg.rate)
}

/// Sample mean of `(1−τ)log₂(1 + SNR)` for the aligned deployment.
pub fn mc_rate(cfg: &SystemConfig, spec: &McSpec) -> crate::Result<Estimate> {
    let d = cfg.derived()?;
    Ok(mc_rate_with(cfg, &d, spec))
}

pub fn mc_rate_with(cfg: &SystemConfig, d: &DerivedParams, spec: &McSpec) -> Estimate {
    mc_mean(cfg, spec, |u| instantaneous_rate(cfg, snr_aligned(cfg, d, u)))
}

/// Midpoint rule for the mean of `f` over the user rectangle.
pub fn grid_mean<F>(cfg: &SystemConfig, grid: Grid, f: F) -> f64
where
    F: Fn(&UserPosition) -> f64 + Sync,
{
    let hx = cfg.dx / grid.nx as f64;
    let hy = cfg.dy / grid.ny as f64;
    let rows: Vec<f64> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x_m = (i as f64 + 0.5) * hx;
            let mut s = KahanSum::default();
            for j in 0..grid.ny {
                let y_m = -cfg.dy / 2.0 + (j as f64 + 0.5) * hy;
                s.add(f(&UserPosition { x_m, y_m }));
            }
            s.value()
        })
        .collect();
    let mut total = KahanSum::default();
    for r in rows {
        total.add(r);
    }
    total.value() / (grid.nx as f64 * grid.ny as f64)
}

/// Deterministic outage probability by midpoint integration of the outage
/// indicator.
pub fn quad_outage(cfg: &SystemConfig, grid: Grid) -> crate::Result<f64> {
    let d = cfg.derived()?;
    Ok(quad_outage_with(cfg, &d, grid))
}

pub fn quad_outage_with(cfg: &SystemConfig, d: &DerivedParams, grid: Grid) -> f64 {
    grid_mean(cfg, grid, |u| f64::from(u8::from(instantaneous_rate(cfg, snr_aligned(cfg, d, u)) < cfg.rate)))
}

/// Deterministic ergodic rate by midpoint integration.
pub fn quad_rate(cfg: &SystemConfig, grid: Grid) -> crate::Result<f64> {
    let d = cfg.derived()?;
    Ok(quad_rate_with(cfg, &d, grid))
}

pub fn quad_rate_with(cfg: &SystemConfig, d: &DerivedParams, grid: Grid) -> f64 {
    grid_mean(cfg, grid, |u| instantaneous_rate(cfg, snr_aligned(cfg, d, u)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_stay_in_region() {
        let cfg = SystemConfig::default();
        let mut s = UserSampler::new(7, 0);
        for _ in 0..100_000 {
            let u = s.next_user(&cfg);
            assert!((0.0..=10.0).contains(&u.x_m) && (-5.0..=5.0).contains(&u.y_m));
        }
    }

    #[test]
    fn sample_user_is_addressable_by_index() {
        let cfg = SystemConfig::default();
        let mut s = UserSampler::new(99, 0);
        let seq: Vec<_> = (0..50).map(|_| s.next_user(&cfg)).collect();
        for (i, u) in seq.iter().enumerate() {
            assert_eq!(*u, sample_user(&cfg, 99, i as u64));
        }
        let mut mid = UserSampler::new(99, 17);
        assert_eq!(mid.next_user(&cfg), seq[17]);
    }

    #[test]
    fn x_mean_is_half_dx() {
        let cfg = SystemConfig::default();
        let e = mc_mean(&cfg, &McSpec::new(1_000_000, 3), |u| u.x_m);
        let sigma = 10.0 / 12f64.sqrt() / 1000.0;
        assert!((e.value - 5.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn same_seed_same_estimate() {
        let cfg = SystemConfig::default();
        let spec = McSpec::new(100_003, 11);
        let a = mc_rate(&cfg, &spec).unwrap();
        let b = mc_rate(&cfg, &spec).unwrap();
        assert_eq!(a, b);
        let other = mc_rate(&cfg, &McSpec::new(100_003, 12)).unwrap();
        assert_ne!(a.value, other.value);
    }

    #[test]
    fn estimate_independent_of_thread_count() {
        let cfg = SystemConfig::default();
        let spec = McSpec::new(200_000, 5);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| (mc_rate(&cfg, &spec).unwrap(), mc_outage(&cfg, &spec).unwrap()))
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn no_power_means_certain_outage() {
        let cfg = SystemConfig { ps_dbm: -300.0, ..Default::default() };
        let e = mc_outage(&cfg, &McSpec::new(10_000, 1)).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_err, 0.0);
        assert_eq!(quad_outage(&cfg, Grid { nx: 100, ny: 100 }).unwrap(), 1.0);
        let silent = cfg.derived().unwrap().with_rho_scaled(0.0);
        assert_eq!(quad_rate_with(&cfg, &silent, Grid { nx: 100, ny: 100 }), 0.0);
    }

    #[test]
    fn huge_power_means_no_outage() {
        let cfg = SystemConfig { ps_dbm: 60.0, ..Default::default() };
        let e = mc_outage(&cfg, &McSpec::new(10_000, 1)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(quad_outage(&cfg, Grid { nx: 100, ny: 100 }).unwrap(), 0.0);
    }

    #[test]
    fn rate_near_full_energy_phase_is_small_but_positive() {
        let cfg = SystemConfig { tau: 0.999, ..Default::default() };
        let e = mc_rate(&cfg, &McSpec::new(50_000, 2)).unwrap();
        assert!(e.value > 0.0 && e.value < 0.05, "{e:?}");
    }

    #[test]
    fn interval_brackets_value() {
        let cfg = SystemConfig::default();
        let e = mc_outage(&cfg, &McSpec::new(10_000, 4)).unwrap();
        assert!(e.ci95_low <= e.value && e.value <= e.ci95_high && e.std_err >= 0.0);
    }

    #[test]
    fn std_err_shrinks_as_inverse_sqrt() {
        let cfg = SystemConfig::default();
        let a = mc_rate(&cfg, &McSpec::new(100_000, 21)).unwrap();
        let b = mc_rate(&cfg, &McSpec::new(400_000, 21)).unwrap();
        let ratio = a.std_err / b.std_err;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
        let a = mc_outage(&cfg, &McSpec::new(100_000, 21)).unwrap();
        let b = mc_outage(&cfg, &McSpec::new(400_000, 21)).unwrap();
        assert!((a.std_err / b.std_err - 2.0).abs() < 0.4);
    }

    #[test]
    fn antithetic_agrees_with_plain() {
        let cfg = SystemConfig::default();
        let plain = mc_rate(&cfg, &McSpec::new(400_000, 8)).unwrap();
        let anti = mc_rate(&cfg, &McSpec { antithetic: true, ..McSpec::new(400_000, 8) }).unwrap();
        assert!((plain.value - anti.value).abs() < 3.0 * (plain.std_err + anti.std_err));
        assert_eq!(anti.samples, 400_000);
    }
}

//! Conventional wireless-powered benchmark: fixed LoS radiators at the two
//! waveguide feed points, no pinching antennas and no in-waveguide loss.

use crate::error::Result;
use crate::mc::{grid_mean, instantaneous_rate, mc_mean, mc_probability, Estimate, Grid, McSpec};
use crate::physics::{ap_feed, dist2, ps_feed, user_point, DerivedParams, SystemConfig, UserPosition};

/// `β²ρt·N1N2 / (‖ψm − ψp‖²·‖ψa − ψm‖²)` with `ψp = (0, L/2, h)` and
/// `ψa = (0, −L/2, h)`.
pub fn baseline_snr(cfg: &SystemConfig, d: &DerivedParams, user: &UserPosition) -> f64 {
    let m = user_point(user);
    d.snr_scale / (dist2(m, ps_feed(cfg)) * dist2(ap_feed(cfg), m))
}

fn in_outage(cfg: &SystemConfig, d: &DerivedParams, user: &UserPosition) -> bool {
    instantaneous_rate(cfg, baseline_snr(cfg, d, user)) < cfg.rate
}

pub fn baseline_outage(cfg: &SystemConfig, spec: &McSpec) -> Result<Estimate> {
    let d = cfg.derived()?;
    Ok(baseline_outage_with(cfg, &d, spec))
}

pub fn baseline_outage_with(cfg: &SystemConfig, d: &DerivedParams, spec: &McSpec) -> Estimate {
    mc_probability(cfg, spec, |u| in_outage(cfg, d, u))
}

pub fn baseline_rate(cfg: &SystemConfig, spec: &McSpec) -> Result<Estimate> {
    let d = cfg.derived()?;
    Ok(baseline_rate_with(cfg, &d, spec))
}

pub fn baseline_rate_with(cfg: &SystemConfig, d: &DerivedParams, spec: &McSpec) -> Estimate {
    mc_mean(cfg, spec, |u| instantaneous_rate(cfg, baseline_snr(cfg, d, u)))
}

/// Midpoint-rule outage of the benchmark.
pub fn baseline_quad_outage(cfg: &SystemConfig, d: &DerivedParams, grid: Grid) -> f64 {
    grid_mean(cfg, grid, |u| f64::from(u8::from(in_outage(cfg, d, u))))
}

/// Midpoint-rule ergodic rate of the benchmark.
pub fn baseline_quad_rate(cfg: &SystemConfig, d: &DerivedParams, grid: Grid) -> f64 {
    grid_mean(cfg, grid, |u| instantaneous_rate(cfg, baseline_snr(cfg, d, u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::physics::snr_aligned;

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn coincides_with_pas_at_origin_when_lossless() {
        let c = SystemConfig { alpha: 0.0, ..cfg() };
        let d = c.derived().unwrap();
        let u = UserPosition::new(0.0, 0.0);
        let (b, p) = (baseline_snr(&c, &d, &u), snr_aligned(&c, &d, &u));
        assert!((b - p).abs() <= 1e-15 * p);
    }

    #[test]
    fn strictly_worse_far_from_feed() {
        let c = SystemConfig { alpha: 0.0, ..cfg() };
        let d = c.derived().unwrap();
        let u = UserPosition::new(c.dx, 0.0);
        assert!(baseline_snr(&c, &d, &u) < snr_aligned(&c, &d, &u));
    }

    #[test]
    fn hand_evaluation_at_five_two() {
        let c = cfg();
        let d = c.derived().unwrap();
        let lambda = 299_792_458.0 / 2.7e9;
        let beta = (lambda / (4.0 * std::f64::consts::PI)).powi(2);
        let pt = 0.4 / 0.6 * 0.8 * 1.0;
        let rho = pt / 1e-12;
        // ‖(5,2,0) − (0,2,3)‖² = 34, ‖(0,−2,3) − (5,2,0)‖² = 50
        let want = beta * beta * rho / (34.0 * 50.0);
        let got = baseline_snr(&c, &d, &UserPosition::new(5.0, 2.0));
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn no_power_means_certain_outage() {
        let c = SystemConfig { ps_dbm: -200.0, ..cfg() };
        let e = baseline_outage(&c, &McSpec::new(10_000, 1)).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn monte_carlo_agrees_with_midpoint_oracle() {
        for ps in [30.0, 40.0] {
            let c = SystemConfig { ps_dbm: ps, dx: 30.0, dy: 30.0, ..cfg() };
            let d = c.derived().unwrap();
            let spec = McSpec::new(200_000, 9);
            let o = baseline_outage_with(&c, &d, &spec);
            let q = baseline_quad_outage(&c, &d, Grid { nx: 600, ny: 600 });
            assert!((o.value - q).abs() <= 4.0 * o.std_err + 5e-3, "ps {ps}: {} vs {q}", o.value);
            let r = baseline_rate_with(&c, &d, &spec);
            let qr = baseline_quad_rate(&c, &d, Grid { nx: 600, ny: 600 });
            assert!((r.value - qr).abs() <= 4.0 * r.std_err + 1e-3 * qr);
        }
    }

    #[test]
    fn pinching_dominates_at_low_loss() {
        let grid = Grid { nx: 400, ny: 400 };
        for i in 0..=10 {
            let c = SystemConfig { ps_dbm: 20.0 + 3.0 * i as f64, ..cfg() };
            let d = c.derived().unwrap();
            let pas = analytic::outage_with(&c, &d, grid).unwrap().p_out;
            let base = baseline_quad_outage(&c, &d, grid);
            assert!(pas <= base + 1e-12, "Ps {}: {pas} > {base}", c.ps_dbm);
        }
    }

    #[test]
    fn ordering_reverses_at_high_loss() {
        let grid = Grid { nx: 400, ny: 400 };
        let reversed = (0..=60).any(|i| {
            let c = SystemConfig { alpha: 0.1, dx: 30.0, dy: 30.0, ps_dbm: 20.0 + 0.5 * i as f64, ..cfg() };
            let d = c.derived().unwrap();
            analytic::outage_with(&c, &d, grid).unwrap().p_out > baseline_quad_outage(&c, &d, grid)
        });
        assert!(reversed);
    }
}

//! Geometry, channel, energy-harvesting and SNR model of the two-waveguide
//! wireless-powered pinching-antenna system.
//!
//! Coordinates: the PS waveguide runs along `y = +L/2`, the AP waveguide along
//! `y = -L/2`, both at height `h` and spanning `x ∈ [0, Dx]`. The user sits at
//! `(x_m, y_m, 0)`. External power quantities are in dBm; everything here is
//! converted to watts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest Gauss-Chebyshev node count accepted from configuration.
pub const MAX_CHEBYSHEV_NODES: usize = 1_000_000;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// All radio, geometry, harvesting and protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Carrier frequency, Hz.
    pub fc: f64,
    /// Effective refractive index of the dielectric waveguide.
    pub n_eff: f64,
    /// In-waveguide absorption coefficient, 1/m.
    pub alpha: f64,
    /// Waveguide height, m.
    pub h: f64,
    /// Separation between the PS and AP waveguides, m.
    pub l: f64,
    /// User region length along x, m.
    pub dx: f64,
    /// User region width along y, m.
    pub dy: f64,
    /// Fraction of the frame spent on energy transfer.
    pub tau: f64,
    /// Energy conversion efficiency.
    pub eta: f64,
    /// PS transmit power, dBm.
    pub ps_dbm: f64,
    /// AWGN power at the AP, dBm.
    pub sigma2_dbm: f64,
    /// Target rate, bits per channel use.
    pub rate: f64,
    /// Frame duration, s.
    pub frame: f64,
    /// Pinching antennas on the PS waveguide.
    pub n1: u32,
    /// Pinching antennas on the AP waveguide.
    pub n2: u32,
    /// Gauss-Chebyshev node count used by the closed forms.
    pub k: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            fc: 2.7e9,
            n_eff: 1.4,
            alpha: 0.01,
            h: 3.0,
            l: 4.0,
            dx: 10.0,
            dy: 10.0,
            tau: 0.4,
            eta: 0.8,
            ps_dbm: 30.0,
            sigma2_dbm: -90.0,
            rate: 2.5,
            frame: 1.0,
            n1: 1,
            n2: 1,
            k: 50,
        }
    }
}

fn require(ok: bool, field: &'static str, reason: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig { field, reason: reason.into() })
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("fc", self.fc),
            ("n_eff", self.n_eff),
            ("alpha", self.alpha),
            ("h", self.h),
            ("L", self.l),
            ("Dx", self.dx),
            ("Dy", self.dy),
            ("tau", self.tau),
            ("eta", self.eta),
            ("Ps_dBm", self.ps_dbm),
            ("sigma2_dBm", self.sigma2_dbm),
            ("R", self.rate),
            ("T", self.frame),
        ];
        for (field, v) in finite {
            require(v.is_finite(), field, format!("{v} is not finite"))?;
        }
        require(self.fc > 0.0, "fc", "must be > 0")?;
        require(self.n_eff >= 1.0, "n_eff", "must be >= 1")?;
        require(self.alpha >= 0.0, "alpha", "must be >= 0")?;
        require(self.h > 0.0, "h", "must be > 0")?;
        require(self.l >= 0.0, "L", "must be >= 0")?;
        require(self.dx > 0.0, "Dx", "must be > 0")?;
        require(self.dy > 0.0, "Dy", "must be > 0")?;
        require(self.tau > 0.0 && self.tau < 1.0, "tau", "must lie in (0, 1)")?;
        require(self.eta > 0.0 && self.eta <= 1.0, "eta", "must lie in (0, 1]")?;
        require(self.rate > 0.0, "R", "must be > 0")?;
        require(self.frame > 0.0, "T", "must be > 0")?;
        require(self.n1 >= 1, "N1", "must be >= 1")?;
        require(self.n2 >= 1, "N2", "must be >= 1")?;
        require(
            (1..=MAX_CHEBYSHEV_NODES).contains(&self.k),
            "K",
            format!("must lie in [1, {MAX_CHEBYSHEV_NODES}]"),
        )?;
        Ok(())
    }

    /// `h² − L²/4 > 0`, the geometry every closed-form outage row assumes.
    pub fn has_closed_form_geometry(&self) -> bool {
        self.h * self.h - self.l * self.l / 4.0 > 0.0
    }

    pub fn derived(&self) -> Result<DerivedParams> {
        self.validate()?;
        Ok(DerivedParams::new(self))
    }

    /// Product `∏ distance²` of the aligned deployment as a function of `y_m`:
    /// `(y² + h² − L²/4)² + h²L²`.
    pub fn path_product(&self, y: f64) -> f64 {
        path_product(self.h, self.l, y)
    }
}

/// `(y² + h² − L²/4)² + h²L²`.
pub fn path_product(h: f64, l: f64, y: f64) -> f64 {
    let t = y * y + h * h - l * l / 4.0;
    t * t + h * h * l * l
}

/// Scalars derived once from a [`SystemConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub lambda: f64,
    pub lambda_g: f64,
    /// Free-space path gain at 1 m, `(λ/4π)²`.
    pub beta: f64,
    pub ps_w: f64,
    pub sigma2_w: f64,
    /// Energy radiated by the PS during the ET phase, J.
    pub et: f64,
    /// `τ/(1−τ)·η·Ps`, W.
    pub pt: f64,
    /// `Pt/σ²` for a single antenna pair.
    pub rho_t: f64,
    /// `N1·N2` equal-power array factor.
    pub array_gain: f64,
    /// SNR threshold `2^{R/(1−τ)} − 1`.
    pub epsilon: f64,
    /// `β²·ρt·N1·N2`, the SNR numerator of the aligned deployment.
    pub snr_scale: f64,
    /// `snr_scale / ε`.
    pub chi: f64,
}

impl DerivedParams {
    fn new(cfg: &SystemConfig) -> Self {
        let lambda = SPEED_OF_LIGHT / cfg.fc;
        let lambda_g = lambda / cfg.n_eff;
        let beta = (lambda / (4.0 * PI)).powi(2);
        let ps_w = dbm_to_watts(cfg.ps_dbm);
        let sigma2_w = dbm_to_watts(cfg.sigma2_dbm);
        let et = cfg.tau * cfg.frame * ps_w;
        let pt = cfg.tau / (1.0 - cfg.tau) * cfg.eta * ps_w;
        let rho_t = pt / sigma2_w;
        let epsilon = (cfg.rate / (1.0 - cfg.tau)).exp2() - 1.0;
        let array_gain = f64::from(cfg.n1) * f64::from(cfg.n2);
        let mut d = Self {
            lambda,
            lambda_g,
            beta,
            ps_w,
            sigma2_w,
            et,
            pt,
            rho_t,
            array_gain,
            epsilon,
            snr_scale: 0.0,
            chi: 0.0,
        };
        d.refresh();
        d
    }

    fn refresh(&mut self) {
        self.snr_scale = self.beta * self.beta * (self.rho_t * self.array_gain);
        self.chi = self.snr_scale / self.epsilon;
    }

    /// Single-antenna parameters with `ρt` multiplied by `factor`.
    pub fn with_rho_scaled(&self, factor: f64) -> Self {
        let mut d = *self;
        d.rho_t = self.rho_t * factor;
        d.array_gain = 1.0;
        d.refresh();
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPosition {
    pub x_m: f64,
    pub y_m: f64,
}

impl UserPosition {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Self { x_m, y_m }
    }

    pub fn in_region(&self, cfg: &SystemConfig) -> bool {
        (0.0..=cfg.dx).contains(&self.x_m) && self.y_m.abs() <= cfg.dy / 2.0
    }
}

/// Abscissae of PA-1 (PS waveguide) and PA-2 (AP waveguide).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchPositions {
    pub x1_pin: f64,
    pub x2_pin: f64,
}

impl PinchPositions {
    pub fn new(x1_pin: f64, x2_pin: f64) -> Self {
        Self { x1_pin, x2_pin }
    }

    /// Both antennas directly above the user's abscissa.
    pub fn aligned(user: &UserPosition) -> Self {
        Self { x1_pin: user.x_m, x2_pin: user.x_m }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        require((0.0..=cfg.dx).contains(&self.x1_pin), "x1_pin", "must lie in [0, Dx]")?;
        require((0.0..=cfg.dx).contains(&self.x2_pin), "x2_pin", "must lie in [0, Dx]")
    }
}

pub(crate) type Point = [f64; 3];

pub(crate) fn dist2(a: Point, b: Point) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub(crate) fn user_point(user: &UserPosition) -> Point {
    [user.x_m, user.y_m, 0.0]
}

/// PA-1 on the PS waveguide.
fn pa1(cfg: &SystemConfig, x1: f64) -> Point {
    [x1, cfg.l / 2.0, cfg.h]
}

/// PA-2 on the AP waveguide.
fn pa2(cfg: &SystemConfig, x2: f64) -> Point {
    [x2, -cfg.l / 2.0, cfg.h]
}

/// Feed point of the PS waveguide.
pub fn ps_feed(cfg: &SystemConfig) -> Point {
    [0.0, cfg.l / 2.0, cfg.h]
}

/// Feed point of the AP waveguide.
pub fn ap_feed(cfg: &SystemConfig) -> Point {
    [0.0, -cfg.l / 2.0, cfg.h]
}

/// Received SNR at the AP for arbitrary PA positions.
///
/// `β²ρt·N1N2·e^{−α(x1+x2)} / (‖ψm − ψ1‖²·‖ψ2 − ψm‖²)`; the guided distances
/// from the feeds are exactly the PA abscissae.
pub fn snr_general(cfg: &SystemConfig, d: &DerivedParams, user: &UserPosition, pins: &PinchPositions) -> f64 {
    let m = user_point(user);
    let guided = dist2(pa1(cfg, pins.x1_pin), ps_feed(cfg)).sqrt() + dist2(ap_feed(cfg), pa2(cfg, pins.x2_pin)).sqrt();
    let d1 = dist2(m, pa1(cfg, pins.x1_pin));
    let d2 = dist2(pa2(cfg, pins.x2_pin), m);
    d.snr_scale * (-cfg.alpha * guided).exp() / (d1 * d2)
}

/// Received SNR with both PAs aligned to the user:
/// `β²ρt·N1N2·e^{−2αx_m} / ((y_m² + h² − L²/4)² + h²L²)`.
pub fn snr_aligned(cfg: &SystemConfig, d: &DerivedParams, user: &UserPosition) -> f64 {
    d.snr_scale * (-2.0 * cfg.alpha * user.x_m).exp() / cfg.path_product(user.y_m)
}

/// Energy harvested by the user during the ET phase, J.
pub fn harvested_energy(cfg: &SystemConfig, d: &DerivedParams, user: &UserPosition, x1_pin: f64) -> f64 {
    let d1 = dist2(user_point(user), pa1(cfg, x1_pin));
    cfg.eta * d.et * (-cfg.alpha * x1_pin).exp() * d.beta / d1
}

/// Uplink transmit power funded by the harvested energy, W.
pub fn uplink_power(cfg: &SystemConfig, d: &DerivedParams, user: &UserPosition, x1_pin: f64) -> f64 {
    harvested_energy(cfg, d, user, x1_pin) / ((1.0 - cfg.tau) * cfg.frame)
}

/// Complex channel coefficients: free-space `h_i` and in-waveguide phase `g_i`.
///
/// Only `|h_i g_i|²` enters the performance metrics; the phases are exposed
/// for inspection.
#[derive(Debug, Clone, Copy)]
pub struct ChannelCoefficients {
    pub h1: Complex64,
    pub g1: Complex64,
    pub h2: Complex64,
    pub g2: Complex64,
}

pub fn channel_coefficients(
    cfg: &SystemConfig,
    d: &DerivedParams,
    user: &UserPosition,
    pins: &PinchPositions,
) -> ChannelCoefficients {
    let m = user_point(user);
    let free = |p: Point| {
        let r = dist2(m, p).sqrt();
        Complex64::from_polar(d.beta.sqrt() / r, -2.0 * PI * r / d.lambda)
    };
    let guided = |p: Point, feed: Point| {
        let r = dist2(p, feed).sqrt();
        Complex64::from_polar(1.0, -2.0 * PI * r / d.lambda_g)
    };
    let p1 = pa1(cfg, pins.x1_pin);
    let p2 = pa2(cfg, pins.x2_pin);
    ChannelCoefficients {
        h1: free(p1),
        g1: guided(p1, ps_feed(cfg)),
        h2: free(p2),
        g2: guided(p2, ap_feed(cfg)),
    }
}

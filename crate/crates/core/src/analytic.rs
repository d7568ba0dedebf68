//! Closed-form outage probability and ergodic rate with both pinching
//! antennas aligned to the user.
//!
//! With `p(y) = (y² + h² − L²/4)² + h²L²` the aligned SNR is
//! `β²ρt·e^{−2αx}/p(y)` and an outage happens when `p(y) > χ·e^{−2αx}`.
//! While `h > L/2`, `p` grows with `|y|`, so the region splits into an
//! always-out strip (`x > b`), a never-out strip (`x < c`) and a band where
//! only the `y`-measure `F(z) = (2/Dy)·√(√(z − h²L²) + L²/4 − h²)` remains.
//! The six lossy rows and three lossless rows below are that decomposition.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::mc::{self, Grid};
use crate::physics::{DerivedParams, SystemConfig};
use crate::specfun::{dilog, ChebyshevRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    Lossy,
    Lossless,
}

/// Row of the lossy (1..=6) or lossless (1..=3) outage table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeTag {
    pub table: Table,
    pub row: u8,
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.table {
            Table::Lossy => write!(f, "lossy:{}", self.row),
            Table::Lossless => write!(f, "lossless:{}", self.row),
        }
    }
}

/// How an outage value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    ClosedForm(RegimeTag),
    /// Midpoint-grid quadrature, used where no closed form applies.
    Oracle(Grid),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ClosedForm(tag) => tag.fmt(f),
            Provenance::Oracle(g) => write!(f, "oracle:{}x{}", g.nx, g.ny),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageResult {
    pub p_out: f64,
    pub provenance: Provenance,
}

impl OutageResult {
    pub fn regime(&self) -> Option<RegimeTag> {
        match self.provenance {
            Provenance::ClosedForm(tag) => Some(tag),
            Provenance::Oracle(_) => None,
        }
    }
}

/// Which closed form produced an ergodic rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateForm {
    Lossy,
    Lossless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    pub form: RateForm,
}

/// Abscissae where `χe^{−2αx}` crosses `h²L²`, `p(0)` and `p(Dy/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossyThresholds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// The four comparisons every table row is built from.
#[derive(Debug, Clone, Copy)]
struct Levels {
    /// `p(0) = (h² − L²/4)² + h²L²`
    p0: f64,
    /// `p(Dy/2)`
    pd: f64,
    chi: f64,
    /// `χ·e^{−2αDx}`
    chi_far: f64,
    /// `h² − L²/4`
    offset: f64,
}

impl Levels {
    fn new(cfg: &SystemConfig, d: &DerivedParams) -> Self {
        Self {
            p0: cfg.path_product(0.0),
            pd: cfg.path_product(cfg.dy / 2.0),
            chi: d.chi,
            chi_far: d.chi * (-2.0 * cfg.alpha * cfg.dx).exp(),
            offset: cfg.h * cfg.h - cfg.l * cfg.l / 4.0,
        }
    }
}

pub fn lossy_thresholds(cfg: &SystemConfig, d: &DerivedParams) -> Result<LossyThresholds> {
    if cfg.alpha <= 0.0 {
        return Err(Error::InvalidAlpha(cfg.alpha));
    }
    let lv = Levels::new(cfg, d);
    let scale = 1.0 / (2.0 * cfg.alpha);
    let hl = cfg.h * cfg.h * cfg.l * cfg.l;
    Ok(LossyThresholds {
        a: scale * (lv.chi / hl).ln(),
        b: scale * (lv.chi / lv.p0).ln(),
        c: scale * (lv.chi / lv.pd).ln(),
    })
}

/// Evaluates each row condition of the lossy table exactly as tabulated.
///
/// Returns one flag per row; for a valid input exactly one is set.
pub fn lossy_row_conditions(cfg: &SystemConfig, d: &DerivedParams) -> [bool; 6] {
    let Levels { p0, pd, chi, chi_far, offset } = Levels::new(cfg, d);
    let open = offset > 0.0;
    [
        p0 >= chi,
        p0 < chi && p0 > chi_far && pd >= chi && open,
        p0 < chi && p0 > chi_far && pd < chi && pd > chi_far && open,
        p0 <= chi_far && pd >= chi && open,
        p0 <= chi_far && pd < chi && pd > chi_far && open,
        pd <= chi_far,
    ]
}

/// Evaluates each row condition of the lossless table as tabulated.
pub fn lossless_row_conditions(cfg: &SystemConfig, d: &DerivedParams) -> [bool; 3] {
    let Levels { p0, pd, chi, offset, .. } = Levels::new(cfg, d);
    [p0 > chi, offset > 0.0 && p0 <= chi && pd >= chi, pd < chi]
}

/// Picks the table row for `cfg`.
///
/// Decision order: `b ≤ 0`, then `b < Dx`, then the position of `c`, where
/// `b ≤ 0 ⇔ p(0) ≥ χ`, `b < Dx ⇔ p(0) > χe^{−2αDx}`, `c ≤ 0 ⇔ p(Dy/2) ≥ χ`
/// and `c < Dx ⇔ p(Dy/2) > χe^{−2αDx}`. The comparisons are evaluated on
/// those exact quantities so the result coincides with the tabulated
/// conditions, including at equality.
///
/// Requires `h > L/2` for both tables: with `h ≤ L/2`, `p(0)` is no longer the
/// minimum of `p` and even the boundary rows stop being exact.
pub fn classify_regime(cfg: &SystemConfig, d: &DerivedParams, table: Table) -> Result<RegimeTag> {
    if !cfg.has_closed_form_geometry() {
        return Err(Error::NoRegime { h: cfg.h, l: cfg.l });
    }
    let lv = Levels::new(cfg, d);
    let row = match table {
        Table::Lossy => {
            if cfg.alpha <= 0.0 {
                return Err(Error::InvalidAlpha(cfg.alpha));
            }
            if lv.p0 >= lv.chi {
                1
            } else if lv.p0 > lv.chi_far {
                if lv.pd >= lv.chi {
                    2
                } else {
                    3
                }
            } else if lv.pd >= lv.chi {
                4
            } else if lv.pd > lv.chi_far {
                5
            } else {
                6
            }
        }
        Table::Lossless => {
            if lv.p0 > lv.chi {
                1
            } else if lv.pd >= lv.chi {
                2
            } else {
                3
            }
        }
    };
    Ok(RegimeTag { table, row })
}

/// `√(√(z − h²L²) + L²/4 − h²)`, the half-width of the no-outage band in `y`
/// at level `z`. Clamped at zero against rounding at the band edge.
fn band_half_width(cfg: &SystemConfig, z: f64) -> f64 {
    let hl = cfg.h * cfg.h * cfg.l * cfg.l;
    let inner = (z - hl).max(0.0).sqrt() + cfg.l * cfg.l / 4.0 - cfg.h * cfg.h;
    inner.max(0.0).sqrt()
}

/// Outage probability for a lossy waveguide (`α > 0`, `h > L/2`).
pub fn outage_lossy(cfg: &SystemConfig) -> Result<OutageResult> {
    let d = cfg.derived()?;
    outage_lossy_with(cfg, &d)
}

/// [`outage_lossy`] with explicit derived parameters.
pub fn outage_lossy_with(cfg: &SystemConfig, d: &DerivedParams) -> Result<OutageResult> {
    if cfg.alpha <= 0.0 {
        return Err(Error::InvalidAlpha(cfg.alpha));
    }
    if !cfg.has_closed_form_geometry() {
        return Err(Error::UnsupportedGeometry { h: cfg.h, l: cfg.l });
    }
    let tag = classify_regime(cfg, d, Table::Lossy)?;
    let lv = Levels::new(cfg, d);
    let rule = ChebyshevRule::new(cfg.k);
    let (alpha, dx, dy) = (cfg.alpha, cfg.dx, cfg.dy);
    let chi = lv.chi;
    // Σ_k π/K·√(1−ϖ_k²)·√(√(χe^{−2αφ_k} − h²L²) + L²/4 − h²) with φ_k = slope·ϖ_k + mid
    let band_sum = |slope: f64, mid: f64| {
        rule.weighted_sum(|w| band_half_width(cfg, chi * (-2.0 * alpha * (slope * w + mid)).exp()))
    };

    let p = match tag.row {
        1 => 1.0,
        2 => {
            let th = lossy_thresholds(cfg, d)?;
            1.0 + 1.0 / (2.0 * alpha * dx * dy) * (lv.p0 / chi).ln() * band_sum(th.b / 2.0, th.b / 2.0)
        }
        3 => {
            let th = lossy_thresholds(cfg, d)?;
            1.0 + 1.0 / (2.0 * alpha * dx) * (lv.pd / chi).ln()
                - 1.0 / (2.0 * alpha * dx * dy)
                    * (lv.pd / lv.p0).ln()
                    * band_sum((th.b - th.c) / 2.0, (th.b + th.c) / 2.0)
        }
        4 => 1.0 - 1.0 / dy * band_sum(dx / 2.0, dx / 2.0),
        5 => {
            let th = lossy_thresholds(cfg, d)?;
            (1.0 + 1.0 / (2.0 * alpha * dx) * (lv.pd / chi).ln())
                * (1.0 - 1.0 / dy * band_sum((dx - th.c) / 2.0, (dx + th.c) / 2.0))
        }
        _ => 0.0,
    };
    Ok(OutageResult { p_out: p.clamp(0.0, 1.0), provenance: Provenance::ClosedForm(tag) })
}

/// Outage probability for a lossless waveguide (`α` ignored, taken as 0).
pub fn outage_lossless(cfg: &SystemConfig) -> Result<OutageResult> {
    let d = cfg.derived()?;
    outage_lossless_with(cfg, &d)
}

pub fn outage_lossless_with(cfg: &SystemConfig, d: &DerivedParams) -> Result<OutageResult> {
    let tag = classify_regime(cfg, d, Table::Lossless)
        .map_err(|_| Error::UnsupportedGeometry { h: cfg.h, l: cfg.l })?;
    let p = match tag.row {
        1 => 1.0,
        2 => 1.0 - 2.0 / cfg.dy * band_half_width(cfg, d.chi),
        _ => 0.0,
    };
    Ok(OutageResult { p_out: p.clamp(0.0, 1.0), provenance: Provenance::ClosedForm(tag) })
}

/// Ergodic rate for a lossy waveguide, bits per channel use.
pub fn ergodic_lossy(cfg: &SystemConfig) -> Result<f64> {
    let d = cfg.derived()?;
    ergodic_lossy_with(cfg, &d)
}

pub fn ergodic_lossy_with(cfg: &SystemConfig, d: &DerivedParams) -> Result<f64> {
    if cfg.alpha <= 0.0 {
        return Err(Error::InvalidAlpha(cfg.alpha));
    }
    let rule = ChebyshevRule::new(cfg.k);
    let far = (-2.0 * cfg.alpha * cfg.dx).exp();
    let g = d.snr_scale;
    // u_k = Dy/4·(ϖ_k + 1)
    let mut err = None;
    let sum = rule.weighted_sum(|w| {
        let pu = cfg.path_product(cfg.dy / 4.0 * (w + 1.0));
        match (dilog(-g * far / pu), dilog(-g / pu)) {
            (Ok(near), Ok(full)) => near - full,
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let rate = (1.0 - cfg.tau) / (4.0 * cfg.dx * cfg.alpha * LN_2) * sum;
    Ok(rate.max(0.0))
}

/// Ergodic rate for a lossless waveguide, bits per channel use.
///
/// Exact antiderivative of `(1−τ)/(Dy·ln2)·∫_{−Dy/2}^{Dy/2} ln(1 + β²ρt/p(y)) dy`,
/// obtained by factoring `p(y) + β²ρt = (y² + vy + u)(y² − vy + u)` and
/// `p(y) = (y² + Ly + h² + L²/4)(y² − Ly + h² + L²/4)`.
pub fn ergodic_lossless(cfg: &SystemConfig) -> Result<f64> {
    let d = cfg.derived()?;
    Ok(ergodic_lossless_with(cfg, &d))
}

pub fn ergodic_lossless_with(cfg: &SystemConfig, d: &DerivedParams) -> f64 {
    let (h, l, dy) = (cfg.h, cfg.l, cfg.dy);
    let offset = h * h - l * l / 4.0;
    let u = (offset * offset + h * h * l * l + d.snr_scale).sqrt();
    let v = (2.0 * (u - offset)).max(0.0).sqrt();
    let s = (u - v * v / 4.0).max(0.0).sqrt();
    let (r1, r2, r3, r4) = (dy + v, dy - v, dy + l, dy - l);
    let bracket = r1 * (r1 * r1 + 4.0 * s * s).ln() + r2 * (r2 * r2 + 4.0 * s * s).ln()
        - r3 * (r3 * r3 + 4.0 * h * h).ln()
        - r4 * (r4 * r4 + 4.0 * h * h).ln()
        + 4.0 * s * ((r1 / (2.0 * s)).atan() + (r2 / (2.0 * s)).atan())
        - 4.0 * h * ((r3 / (2.0 * h)).atan() + (r4 / (2.0 * h)).atan());
    ((1.0 - cfg.tau) / (dy * LN_2) * bracket).max(0.0)
}

/// Outage probability through the matching closed form: lossless tables for
/// `α = 0`, lossy tables otherwise. Geometries with `h ≤ L/2` fall back to
/// the midpoint-grid oracle at resolution `grid`.
pub fn outage(cfg: &SystemConfig, grid: Grid) -> Result<OutageResult> {
    let d = cfg.derived()?;
    outage_with(cfg, &d, grid)
}

pub fn outage_with(cfg: &SystemConfig, d: &DerivedParams, grid: Grid) -> Result<OutageResult> {
    let closed = if cfg.alpha == 0.0 { outage_lossless_with(cfg, d) } else { outage_lossy_with(cfg, d) };
    match closed {
        Err(Error::UnsupportedGeometry { .. }) => Ok(OutageResult {
            p_out: mc::quad_outage_with(cfg, d, grid),
            provenance: Provenance::Oracle(grid),
        }),
        other => other,
    }
}

/// Outage probability without the oracle fallback.
pub fn outage_closed_form(cfg: &SystemConfig, d: &DerivedParams) -> Result<OutageResult> {
    if cfg.alpha == 0.0 {
        outage_lossless_with(cfg, d)
    } else {
        outage_lossy_with(cfg, d)
    }
}

/// Ergodic rate through the matching closed form.
pub fn ergodic_rate(cfg: &SystemConfig) -> Result<RateResult> {
    let d = cfg.derived()?;
    ergodic_rate_with(cfg, &d)
}

pub fn ergodic_rate_with(cfg: &SystemConfig, d: &DerivedParams) -> Result<RateResult> {
    if cfg.alpha == 0.0 {
        Ok(RateResult { rate: ergodic_lossless_with(cfg, d), form: RateForm::Lossless })
    } else {
        Ok(RateResult { rate: ergodic_lossy_with(cfg, d)?, form: RateForm::Lossy })
    }
}

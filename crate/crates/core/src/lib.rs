//! Performance model of a wireless-powered pinching-antenna system.
//!
//! A power station (PS) charges a single-antenna user over one dielectric
//! waveguide; the user then transmits to an access point (AP) over a second
//! waveguide. Both waveguides carry a pinching antenna that is slid to the
//! user's abscissa. The crate provides:
//!
//! * [`physics`]: link budget, harvested energy and received SNR;
//! * [`specfun`]: real dilogarithm and Gauss-Chebyshev rule;
//! * [`analytic`]: closed-form outage probability and ergodic rate;
//! * [`mc`]: Monte Carlo and midpoint-grid oracles;
//! * [`deploy`]: optimal waveguide separation, user position, `τ` and `L`;
//! * [`baseline`]: fixed-antenna WPC benchmark;
//! * [`config`], [`sweep`], [`validate`]: plumbing behind the `pawpc` CLI.

pub mod analytic;
pub mod baseline;
pub mod config;
pub mod deploy;
pub mod error;
pub mod mc;
pub mod physics;
pub mod specfun;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use mc::{Estimate, Grid, McSpec};
pub use physics::{DerivedParams, PinchPositions, SystemConfig, UserPosition};

//! Plain-text `key = value` configuration files.
//!
//! ```text
//! # carrier
//! fc = 2.7e9
//! Ps_dBm = 40
//! ```
//!
//! Keys not listed are taken from [`SystemConfig::default`]. Unknown or
//! repeated keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::physics::SystemConfig;

pub const KEYS: [&str; 16] =
    ["fc", "n_eff", "alpha", "h", "L", "Dx", "Dy", "tau", "eta", "Ps_dBm", "sigma2_dBm", "R", "T", "N1", "N2", "K"];

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut cfg = SystemConfig::default();
    let mut seen = [false; KEYS.len()];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let slot = KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| Error::UnknownKey { line, key: key.to_string() })?;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::Parse { line, msg: format!("duplicate key `{key}`") });
        }
        set(&mut cfg, key, value).map_err(|msg| Error::Parse { line, msg })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn float(key: &str, v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("`{key}` expects a number, got `{v}`"))
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("`{key}` expects a non-negative integer, got `{v}`"))
}

fn set(cfg: &mut SystemConfig, key: &str, v: &str) -> std::result::Result<(), String> {
    match key {
        "fc" => cfg.fc = float(key, v)?,
        "n_eff" => cfg.n_eff = float(key, v)?,
        "alpha" => cfg.alpha = float(key, v)?,
        "h" => cfg.h = float(key, v)?,
        "L" => cfg.l = float(key, v)?,
        "Dx" => cfg.dx = float(key, v)?,
        "Dy" => cfg.dy = float(key, v)?,
        "tau" => cfg.tau = float(key, v)?,
        "eta" => cfg.eta = float(key, v)?,
        "Ps_dBm" => cfg.ps_dbm = float(key, v)?,
        "sigma2_dBm" => cfg.sigma2_dbm = float(key, v)?,
        "R" => cfg.rate = float(key, v)?,
        "T" => cfg.frame = float(key, v)?,
        "N1" => cfg.n1 = int(key, v)?,
        "N2" => cfg.n2 = int(key, v)?,
        "K" => cfg.k = int(key, v)?,
        _ => unreachable!("key list and setter out of sync"),
    }
    Ok(())
}

/// Every field, one `key = value` line each, floats in shortest round-trip form.
pub fn to_config_string(cfg: &SystemConfig) -> String {
    let mut s = String::new();
    for key in KEYS {
        let v = match key {
            "fc" => format!("{:?}", cfg.fc),
            "n_eff" => format!("{:?}", cfg.n_eff),
            "alpha" => format!("{:?}", cfg.alpha),
            "h" => format!("{:?}", cfg.h),
            "L" => format!("{:?}", cfg.l),
            "Dx" => format!("{:?}", cfg.dx),
            "Dy" => format!("{:?}", cfg.dy),
            "tau" => format!("{:?}", cfg.tau),
            "eta" => format!("{:?}", cfg.eta),
            "Ps_dBm" => format!("{:?}", cfg.ps_dbm),
            "sigma2_dBm" => format!("{:?}", cfg.sigma2_dbm),
            "R" => format!("{:?}", cfg.rate),
            "T" => format!("{:?}", cfg.frame),
            "N1" => cfg.n1.to_string(),
            "N2" => cfg.n2.to_string(),
            _ => cfg.k.to_string(),
        };
        let _ = writeln!(s, "{key} = {v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        assert_eq!(parse_config("").unwrap(), SystemConfig::default());
        assert_eq!(parse_config("# nothing\n\n   \n").unwrap(), SystemConfig::default());
    }

    #[test]
    fn overrides_and_comments() {
        let c = parse_config("Ps_dBm = 40 # strong\nalpha=0\n  L = 12.5\nK = 500\nN1 = 2").unwrap();
        assert_eq!(c.ps_dbm, 40.0);
        assert_eq!(c.alpha, 0.0);
        assert_eq!(c.l, 12.5);
        assert_eq!(c.k, 500);
        assert_eq!(c.n1, 2);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert_eq!(parse_config("fc = 1e9\nPs = 3").unwrap_err(), Error::UnknownKey { line: 2, key: "Ps".into() });
    }

    #[test]
    fn malformed_lines_name_the_line() {
        assert!(matches!(parse_config("tau 0.3"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("\nh = three"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config("K = -3"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("h = 1\nh = 2"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn invalid_values_name_the_field() {
        assert!(matches!(parse_config("tau = 1"), Err(Error::InvalidConfig { field: "tau", .. })));
    }

    #[test]
    fn round_trip_is_field_identical() {
        let c = SystemConfig { fc: 2.7e9, alpha: 0.1 + 0.2, ps_dbm: 1.0 / 3.0, l: 7.0, k: 123, n2: 3, ..Default::default() };
        let text = to_config_string(&c);
        assert_eq!(parse_config(&text).unwrap(), c);
        assert_eq!(to_config_string(&parse_config(&text).unwrap()), text);
    }
}

//! JSON configuration files.
//!
//! Two shapes are accepted; unknown keys are rejected and every omitted key
//! is filled with its default before validation.
//!
//! ```json
//! {"omega_rf": 1, "omega_opt": 800, "gamma": 400, "n_pulses": 8,
//!  "pulse_duration": 0.05, "rf_during_pulse": true,
//!  "integrator": {"dt": 1.25e-5, "record_stride": 50}}
//! ```
//!
//! ```json
//! {"n_modes": 4001, "mode_spacing": 0.001, "coupling": 0.01,
//!  "t_max": 8, "dt": 0.01, "record_stride": 1}
//! ```

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use zeno_core::bath::{BathConfig, PHASE_STEP_BOUND};
use zeno_core::lindblad::IntegratorConfig;
use zeno_core::zeno::ZenoConfig;

use crate::error::{lift, CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnyConfig {
    Zeno(ZenoConfig),
    Bath(BathConfig),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorFile {
    dt: Option<f64>,
    record_stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZenoFile {
    omega_rf: Option<f64>,
    omega_opt: Option<f64>,
    gamma: Option<f64>,
    n_pulses: Option<usize>,
    pulse_duration: Option<f64>,
    rf_during_pulse: Option<bool>,
    integrator: Option<IntegratorFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BathFile {
    n_modes: Option<usize>,
    mode_spacing: Option<f64>,
    coupling: Option<f64>,
    t_max: Option<f64>,
    dt: Option<f64>,
    record_stride: Option<usize>,
}

const BATH_KEYS: [&str; 4] = ["n_modes", "mode_spacing", "coupling", "t_max"];

fn finite(field: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::validation(field, "must be finite"))
    }
}

fn resolve_zeno(file: ZenoFile) -> Result<ZenoConfig> {
    let defaults = ZenoConfig::default();
    let mut cfg = ZenoConfig {
        omega_rf: finite("omega_rf", file.omega_rf.unwrap_or(defaults.omega_rf))?,
        omega_opt: finite("omega_opt", file.omega_opt.unwrap_or(defaults.omega_opt))?,
        gamma: finite("gamma", file.gamma.unwrap_or(defaults.gamma))?,
        n_pulses: file.n_pulses.unwrap_or(defaults.n_pulses),
        pulse_duration: finite("pulse_duration", file.pulse_duration.unwrap_or(defaults.pulse_duration))?,
        rf_during_pulse: file.rf_during_pulse.unwrap_or(defaults.rf_during_pulse),
        integrator: defaults.integrator,
    };
    let integ = file.integrator.unwrap_or_default();
    let stride = integ.record_stride.unwrap_or(IntegratorConfig::DEFAULT_STRIDE);
    cfg.integrator = match integ.dt {
        Some(dt) => IntegratorConfig { dt, record_stride: stride },
        None => IntegratorConfig::for_max_rate(cfg.max_rate(), stride),
    };
    cfg.validate().map_err(lift)?;
    Ok(cfg)
}

/// Default step: 0.01, or less if the band is too wide for it.
pub fn default_bath_dt(n_modes: usize, mode_spacing: f64) -> f64 {
    let half_band = 0.5 * n_modes.saturating_sub(1) as f64 * mode_spacing;
    if half_band > 0.0 {
        0.01f64.min(0.5 * PHASE_STEP_BOUND / half_band)
    } else {
        0.01
    }
}

fn resolve_bath(file: BathFile) -> Result<BathConfig> {
    let defaults = BathConfig::reference();
    let n_modes = file.n_modes.unwrap_or(defaults.n_modes);
    let mode_spacing = finite("mode_spacing", file.mode_spacing.unwrap_or(defaults.mode_spacing))?;
    let cfg = BathConfig {
        n_modes,
        mode_spacing,
        coupling: finite("coupling", file.coupling.unwrap_or(defaults.coupling))?,
        t_max: finite("t_max", file.t_max.unwrap_or(defaults.t_max))?,
        dt: finite("dt", file.dt.unwrap_or_else(|| default_bath_dt(n_modes, mode_spacing)))?,
        record_stride: file.record_stride.unwrap_or(defaults.record_stride),
    };
    cfg.validate().map_err(lift)?;
    Ok(cfg)
}

fn from_value<T: for<'de> Deserialize<'de>>(value: Value, source_name: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| CliError::parse(source_name, e))
}

/// Parses a config from JSON text. A document with any bath key
/// (`n_modes`, `mode_spacing`, `coupling`, `t_max`) is a bath config,
/// anything else a Zeno config.
pub fn parse_config_str(text: &str, source_name: &str) -> Result<AnyConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::parse(source_name, e))?;
    let Value::Object(map) = &value else {
        return Err(CliError::parse(source_name, "top level must be a JSON object"));
    };
    if BATH_KEYS.iter().any(|k| map.contains_key(*k)) {
        resolve_bath(from_value(value, source_name)?).map(AnyConfig::Bath)
    } else {
        resolve_zeno(from_value(value, source_name)?).map(AnyConfig::Zeno)
    }
}

pub fn parse_config(path: &Path) -> Result<AnyConfig> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(&name, e))?;
    parse_config_str(&text, &name)
}

pub fn parse_zeno_config(path: &Path) -> Result<ZenoConfig> {
    match parse_config(path)? {
        AnyConfig::Zeno(cfg) => Ok(cfg),
        AnyConfig::Bath(_) => Err(CliError::parse(path.display().to_string(), "expected a Zeno config, found a bath config")),
    }
}

pub fn parse_bath_config(path: &Path) -> Result<BathConfig> {
    match parse_config(path)? {
        AnyConfig::Bath(cfg) => Ok(cfg),
        AnyConfig::Zeno(_) => Err(CliError::parse(path.display().to_string(), "expected a bath config, found a Zeno config")),
    }
}

/// Parses `"1,2,4"`; an empty string is an empty list.
pub fn parse_list<T: std::str::FromStr>(text: &str, field: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| CliError::validation(field, format!("`{s}`: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeno(text: &str) -> Result<ZenoConfig> {
        match parse_config_str(text, "test")? {
            AnyConfig::Zeno(c) => Ok(c),
            AnyConfig::Bath(_) => panic!("expected zeno"),
        }
    }

    #[test]
    fn fills_defaults() {
        let cfg = zeno(r#"{"gamma":400,"omega_opt":800,"n_pulses":8,"pulse_duration":0.05}"#).unwrap();
        assert_eq!(cfg.omega_rf, 1.0);
        assert!(cfg.rf_during_pulse);
        assert_eq!(cfg.integrator.dt, 0.01 / 800.0);
        assert_eq!(cfg.integrator.record_stride, 50);
    }

    #[test]
    fn rejects_long_pulses() {
        let err = zeno(r#"{"pulse_duration":1.0,"n_pulses":8}"#).unwrap_err();
        assert!(matches!(&err, CliError::Validation { field, .. } if field == "pulse_duration"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_negative_rate() {
        let err = zeno(r#"{"gamma":-1}"#).unwrap_err();
        assert!(matches!(&err, CliError::Validation { field, .. } if field == "gamma"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_json() {
        assert!(matches!(zeno(r#"{"gama":4}"#), Err(CliError::Parse { .. })));
        assert!(matches!(zeno(r#"{"integrator":{"step":1}}"#), Err(CliError::Parse { .. })));
        assert!(matches!(zeno("{"), Err(CliError::Parse { .. })));
        assert!(matches!(zeno("[1]"), Err(CliError::Parse { .. })));
        assert!(matches!(zeno(r#"{"n_pulses":-3}"#), Err(CliError::Parse { .. })));
    }

    #[test]
    fn coarse_dt_is_rejected() {
        let err = zeno(r#"{"integrator":{"dt":0.001}}"#).unwrap_err();
        assert!(matches!(&err, CliError::Validation { field, .. } if field == "integrator.dt"), "{err}");
    }

    #[test]
    fn detects_bath_configs() {
        let cfg = parse_config_str(r#"{"n_modes":4001,"coupling":0.01}"#, "t").unwrap();
        assert_eq!(cfg, AnyConfig::Bath(BathConfig::reference()));
        let err = parse_config_str(r#"{"n_modes":4000}"#, "t").unwrap_err();
        assert!(matches!(&err, CliError::Validation { field, .. } if field == "n_modes"));
        assert!(parse_config_str(r#"{"n_modes":11,"gamma":3}"#, "t").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("1, 2,4", "n").unwrap(), vec![1, 2, 4]);
        assert!(parse_list::<usize>("", "n").unwrap().is_empty());
        assert!(parse_list::<usize>("1,x", "n").is_err());
    }
}

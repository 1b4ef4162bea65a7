//! Run configuration: TOML file, command-line overrides, validation.

use std::path::PathBuf;

use qflow_core::gluing::ScheduleKnobs;
use qflow_core::params::make_params;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub m: f64,
    /// Starting value of b for the constants solve.
    pub b: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let k = ScheduleKnobs::default();
        Self { delta0: k.delta0, delta1: k.delta1, delta2: k.delta2, m: k.m, b: 0.0 }
    }
}

impl ScheduleConfig {
    pub fn knobs(&self) -> ScheduleKnobs {
        ScheduleKnobs { delta0: self.delta0, delta1: self.delta1, delta2: self.delta2, m: self.m }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: u32,
    pub eps: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    /// Integrator step.
    pub step: f64,
    /// Shooting bisection tolerance.
    pub tol: f64,
    pub l_max: u32,
    pub schedule: ScheduleConfig,
    pub out_dir: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 5,
            eps: None,
            eps_grid: None,
            step: 1e-3,
            tol: 1e-12,
            l_max: 6,
            schedule: ScheduleConfig::default(),
            out_dir: None,
            cache: None,
        }
    }
}

/// Parses and validates a TOML config.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = match toml::from_str(text) {
        Ok(c) => c,
        Err(e) => return usage(format!("config: {}", e.message())),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let p = make_params(self.n)?;
        let check_eps = |e: f64| -> CliResult<()> {
            if !(e > 0.0 && e < p.v_cyl) {
                return usage(format!("eps = {e} must lie in (0, v_cyl) = (0, {})", p.v_cyl));
            }
            Ok(())
        };
        if let Some(e) = self.eps {
            check_eps(e)?;
        }
        if let Some(g) = &self.eps_grid {
            if g.is_empty() {
                return usage("eps_grid must not be empty");
            }
            for &e in g {
                check_eps(e)?;
            }
        }
        if !(self.step > 0.0 && self.step <= 0.1) {
            return usage(format!("step must lie in (0, 0.1], got {}", self.step));
        }
        if !(self.tol > 0.0 && self.tol < 1e-3) {
            return usage(format!("tol must lie in (0, 1e-3), got {}", self.tol));
        }
        if self.l_max < 2 || self.l_max > 64 {
            return usage(format!("l_max must lie in [2, 64], got {}", self.l_max));
        }
        self.schedule.knobs().validate(self.n)?;
        if !(self.schedule.b.abs() <= 0.5) {
            return usage(format!("schedule.b must satisfy |b| ≤ 1/2, got {}", self.schedule.b));
        }
        Ok(())
    }

    pub fn require_eps(&self) -> CliResult<f64> {
        match self.eps {
            Some(e) => Ok(e),
            None => usage("--eps is required"),
        }
    }

    /// Every default, as TOML.
    pub fn explain() -> String {
        let mut out = String::from("# qflow defaults (flags override a --config file, which overrides these)\n");
        out.push_str("# unset by default: eps, eps_grid, out_dir, cache\n");
        out.push_str("# cache path falls back to $QFLOW_CACHE; no cache when neither is set\n");
        out.push_str(&toml::to_string(&RunConfig::default()).expect("defaults serialize"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let d = RunConfig::default();
        d.validate().unwrap();
        let text = toml::to_string(&d).unwrap();
        assert_eq!(parse_config(&text).unwrap(), d);
        assert!(RunConfig::explain().contains("delta0"));
    }

    #[test]
    fn parses_a_full_file() {
        let c = parse_config(
            r#"
            n = 6
            eps = 0.2
            eps_grid = [0.3, 0.2]
            step = 5e-4
            l_max = 8
            out_dir = "out"
            [schedule]
            delta0 = 0.1
            b = 0.01
            "#,
        )
        .unwrap();
        assert_eq!((c.n, c.eps, c.l_max), (6, Some(0.2), 8));
        assert_eq!(c.schedule.delta0, 0.1);
        assert_eq!(c.schedule.m, ScheduleKnobs::default().m);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "n = 4",
            "eps = 0.99",
            "eps = -0.1",
            "eps_grid = []",
            "step = 0.0",
            "l_max = 1",
            "unknown = 1",
            "[schedule]\nm = 0.01",
            "[schedule]\nb = 0.7",
            "n = \"five\"",
        ] {
            assert!(parse_config(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_config("n = 4").unwrap_err().to_string(), "n must be ≥ 5");
    }
}

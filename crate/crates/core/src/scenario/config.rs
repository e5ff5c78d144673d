use std::path::PathBuf;

use serde::Deserialize;

use crate::dynamics::{IntegrationConfig, Method};
use crate::error::{Error, Result};
use crate::machine::{MachineParams, TargetSystem};

use super::Mode;

/// Config file as written, before defaults and overrides are applied.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub mode: Option<Mode>,
    #[serde(default)]
    pub machine: RawMachine,
    pub target: Option<TargetSystem>,
    #[serde(default)]
    pub integration: RawIntegration,
    pub sweep: Option<RawSweep>,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMachine {
    #[serde(rename = "E1")]
    pub e1: Option<f64>,
    #[serde(rename = "E2")]
    pub e2: Option<f64>,
    #[serde(rename = "T1")]
    pub t1: Option<f64>,
    #[serde(rename = "T2")]
    pub t2: Option<f64>,
    pub g: Option<f64>,
    pub p: Option<f64>,
    pub p2: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegration {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub method: Option<Method>,
    pub record_every: Option<usize>,
    pub hermitize: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub param: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown output format `{s}` (expected csv or json)"))),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub g: Option<f64>,
    pub p: Option<f64>,
    pub sweep: RawSweep,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RawConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        let m = &mut self.machine;
        for (slot, v) in [
            (&mut m.e1, o.e1),
            (&mut m.e2, o.e2),
            (&mut m.t1, o.t1),
            (&mut m.t2, o.t2),
            (&mut m.g, o.g),
            (&mut m.p, o.p),
        ] {
            if v.is_some() {
                *slot = v;
            }
        }
        let s = &o.sweep;
        if s.param.is_some() || s.from.is_some() || s.to.is_some() || s.steps.is_some() {
            let sweep = self.sweep.get_or_insert_with(RawSweep::default);
            if s.param.is_some() {
                sweep.param = s.param.clone();
            }
            sweep.from = s.from.or(sweep.from);
            sweep.to = s.to.or(sweep.to);
            sweep.steps = s.steps.or(sweep.steps);
        }
        if o.out.is_some() {
            self.output.path = o.out.clone();
        }
        if o.format.is_some() {
            self.output.format = o.format;
        }
    }

    /// Validated config for `mode`, or for the file's own mode.
    pub fn resolve(&self, mode: Option<Mode>) -> Result<ScenarioConfig> {
        let mode = mode
            .or(self.mode)
            .ok_or_else(|| Error::Config("missing field `mode`".into()))?;
        if let Some(file_mode) = self.mode {
            if file_mode != mode {
                return Err(Error::Config(format!(
                    "mode `{mode}` requested but the config declares `{file_mode}`"
                )));
            }
        }
        let sweep = match (mode, &self.sweep) {
            (Mode::Sweep, Some(s)) => Some(SweepSpec::from_raw(s)?),
            (Mode::Sweep, None) => {
                return Err(Error::Config("mode `sweep` needs a `[sweep]` section".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Config(format!(
                    "a `[sweep]` section is only allowed with mode `sweep`, not `{mode}`"
                )))
            }
            (_, None) => None,
        };
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("missing field `machine.{name}`")))
        };
        // the swept temperature need not be configured
        let swept = sweep.map(|s| (s.param, s.from));
        let temp = |v: Option<f64>, which: SweepParam, name: &str| match swept {
            Some((p, from)) if p == which => Ok(v.unwrap_or(from)),
            _ => need(v, name),
        };
        let m = &self.machine;
        let machine = MachineInput {
            e1: need(m.e1, "E1")?,
            e2: need(m.e2, "E2")?,
            t1: temp(m.t1, SweepParam::T1, "T1")?,
            t2: temp(m.t2, SweepParam::T2, "T2")?,
            g: m.g,
            p: m.p,
            p2: m.p2,
        };
        let format = self.output.format.unwrap_or(match mode {
            Mode::Sweep | Mode::Evolve => Format::Csv,
            _ => Format::Json,
        });
        Ok(ScenarioConfig {
            mode,
            machine,
            target: self.target,
            integration: self.integration.clone(),
            sweep,
            output: OutputSpec {
                path: self.output.path.clone(),
                format,
            },
        })
    }
}

/// Machine parameters as configured; coupling and rate are optional for
/// modes that only need temperatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineInput {
    pub e1: f64,
    pub e2: f64,
    pub t1: f64,
    pub t2: f64,
    pub g: Option<f64>,
    pub p: Option<f64>,
    pub p2: Option<f64>,
}

impl MachineInput {
    pub fn params(&self) -> Result<MachineParams> {
        let g = self.g.ok_or_else(|| Error::Config("missing field `machine.g`".into()))?;
        let p = self.p.ok_or_else(|| Error::Config("missing field `machine.p`".into()))?;
        let m = MachineParams::new(self.e1, self.e2, self.t1, self.t2, g, p)?;
        match self.p2 {
            Some(p2) => m.with_bath2_rate(p2),
            None => Ok(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    T1,
    T2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepSpec {
    fn from_raw(s: &RawSweep) -> Result<Self> {
        let param = match s.param.as_deref() {
            Some("T2") | None => SweepParam::T2,
            Some("T1") => SweepParam::T1,
            Some(other) => {
                return Err(Error::Config(format!(
                    "field `sweep.param`: cannot sweep `{other}` (supported: T1, T2)"
                )))
            }
        };
        let from = s.from.ok_or_else(|| Error::Config("missing field `sweep.from`".into()))?;
        let to = s.to.ok_or_else(|| Error::Config("missing field `sweep.to`".into()))?;
        let steps = s.steps.ok_or_else(|| Error::Config("missing field `sweep.steps`".into()))?;
        if steps < 2 {
            return Err(Error::Config(format!("field `sweep.steps`: need at least 2, got {steps}")));
        }
        if !(from.is_finite() && to.is_finite() && from < to) {
            return Err(Error::Config(format!("fields `sweep.from`/`sweep.to`: need from < to, got {from} and {to}")));
        }
        if from <= 0.0 {
            return Err(Error::Config(format!("field `sweep.from`: temperatures must be > 0, got {from}")));
        }
        Ok(SweepSpec { param, from, to, steps })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub machine: MachineInput,
    pub target: Option<TargetSystem>,
    pub integration: RawIntegration,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        RawConfig::from_toml_str(text)?.resolve(None)
    }

    pub fn target(&self) -> Result<TargetSystem> {
        self.target
            .ok_or_else(|| Error::Config(format!("mode `{}` needs a `[target]` section", self.mode)))
    }

    /// Integration settings, with `t_end` and `dt` falling back to the given
    /// defaults.
    pub fn integration_or(&self, t_end: Option<f64>, dt: Option<f64>) -> Result<IntegrationConfig> {
        let i = &self.integration;
        let t_end = i
            .t_end
            .or(t_end)
            .ok_or_else(|| Error::Config("missing field `integration.t_end`".into()))?;
        let dt = i
            .dt
            .or(dt)
            .ok_or_else(|| Error::Config("missing field `integration.dt`".into()))?;
        let mut cfg = IntegrationConfig::new(t_end, dt);
        if let Some(m) = i.method {
            cfg.method = m;
        }
        if let Some(r) = i.record_every {
            cfg.record_every = r;
        }
        if let Some(h) = i.hermitize {
            cfg.hermitize = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

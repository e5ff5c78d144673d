use serde::Serialize;

use crate::analytics::{asymptotic_solution, break_even_energy, AsymptoticSolution};
use crate::dynamics::{evolve, initial_state, stable_step, IntegrationConfig, ObservableTrace};
use crate::error::{Error, Result};
use crate::fit::{fit_line, mean, window_start};
use crate::liouvillian::assemble_liouvillian;
use crate::machine::{classify_regime, MachineParams, MachineRegime, TargetSystem};

use super::config::ScenarioConfig;
use super::RunStatus;

/// Relative tolerance on drift and heat-current rates.
pub const RATE_RTOL: f64 = 0.02;
/// Relative tolerance on the variance growth rate.
pub const SPREAD_RTOL: f64 = 0.05;
/// Relative tolerance on stationary machine expectations.
pub const EXPECTATION_RTOL: f64 = 0.01;
/// Absolute tolerance on `dQ₁/dt + dQ₂/dt − d⟨E_w⟩/dt`.
pub const BOOKKEEPING_ATOL: f64 = 1e-6;
/// Relative tolerance on the simulated break-even energy.
pub const BREAK_EVEN_RTOL: f64 = 0.05;
/// Default step for weight runs, reduced further if the guard requires.
const DEFAULT_DT: f64 = 0.5;
/// Samples aimed for when the stride is not configured.
const TARGET_SAMPLES: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceKind {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub name: String,
    pub analytic: f64,
    pub numeric: f64,
    /// Relative or absolute error, matching `kind`.
    pub error: f64,
    pub tolerance: f64,
    pub kind: ToleranceKind,
    pub pass: bool,
}

impl ValidationRow {
    pub fn relative(name: &str, analytic: f64, numeric: f64, tolerance: f64) -> Self {
        let error = (numeric - analytic).abs() / analytic.abs();
        ValidationRow {
            name: name.to_string(),
            analytic,
            numeric,
            error,
            tolerance,
            kind: ToleranceKind::Relative,
            pass: error <= tolerance,
        }
    }

    pub fn absolute(name: &str, analytic: f64, numeric: f64, tolerance: f64) -> Self {
        let error = (numeric - analytic).abs();
        ValidationRow {
            name: name.to_string(),
            analytic,
            numeric,
            error,
            tolerance,
            kind: ToleranceKind::Absolute,
            pass: error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub status: RunStatus,
    pub notes: Vec<String>,
}

impl ValidationReport {
    fn from_rows(rows: Vec<ValidationRow>, notes: Vec<String>) -> Self {
        let status = if rows.iter().all(|r| r.pass) {
            RunStatus::Pass
        } else {
            RunStatus::Fail
        };
        ValidationReport { rows, status, notes }
    }

    pub fn row(&self, name: &str) -> Option<&ValidationRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn weight_spacing(t: &TargetSystem) -> Result<f64> {
    match *t {
        TargetSystem::Weight { ew, .. } => Ok(ew),
        _ => Err(Error::Config("validation runs need a `weight` target".into())),
    }
}

/// Integration settings for a weight run: configured values first, then
/// `t_end = default_t_end` and the largest guard-compliant step up to 0.5.
fn weight_integration(
    cfg: &ScenarioConfig,
    m: &MachineParams,
    t: &TargetSystem,
    default_t_end: f64,
) -> Result<IntegrationConfig> {
    let l = assemble_liouvillian(m, t)?;
    let dt = DEFAULT_DT.min(stable_step(&l, &initial_state(m, t)?));
    let mut ic = cfg.integration_or(Some(default_t_end), Some(dt))?;
    if cfg.integration.record_every.is_none() {
        ic.record_every = (ic.steps() / TARGET_SAMPLES).max(1);
    }
    Ok(ic)
}

fn simulate(m: &MachineParams, t: &TargetSystem, ic: &IntegrationConfig) -> Result<ObservableTrace> {
    let l = assemble_liouvillian(m, t)?;
    evolve(&l, &initial_state(m, t)?, ic)
}

/// `max(5/α, 50/p)`: several drift times and many machine relaxation times.
pub fn default_engine_t_end(a: &AsymptoticSolution, p: f64) -> f64 {
    let drift = if a.rates.alpha > 0.0 { 5.0 / a.rates.alpha } else { 0.0 };
    drift.max(50.0 / p)
}

fn edge_note(trace: &ObservableTrace) -> String {
    format!(
        "weight edge population reached {:.3e} (limit 1e-6); widen the window [n_min, n_max]",
        trace.max_edge_population
    )
}

/// Late-time slopes and averages of a simulated weight run against the
/// closed-form asymptotics.
pub fn validate_engine(cfg: &ScenarioConfig) -> Result<ValidationReport> {
    let m = cfg.machine.params()?;
    let t = cfg.target()?;
    let ew = weight_spacing(&t)?;
    let a = asymptotic_solution(&m, ew)?;
    if m.weak_coupling_advisory() {
        return Ok(ValidationReport {
            rows: Vec::new(),
            status: RunStatus::Invalid,
            notes: vec![format!(
                "g = {} or p = {} reaches E1/10; the reset model is outside its weak-coupling range",
                m.g, m.p
            )],
        });
    }
    let ic = weight_integration(cfg, &m, &t, default_engine_t_end(&a, m.p))?;
    let trace = simulate(&m, &t, &ic)?;
    let report = compare_engine(&trace, &a, &m, ew, ic.t_end)?;
    if trace.edge_flag {
        return Ok(ValidationReport {
            status: RunStatus::Invalid,
            notes: vec![edge_note(&trace)],
            ..report
        });
    }
    Ok(report)
}

/// Row-by-row comparison of a weight trace against `a`, fitting over
/// `[t_end/2, t_end]`.
pub fn compare_engine(
    trace: &ObservableTrace,
    a: &AsymptoticSolution,
    m: &MachineParams,
    ew: f64,
    t_end: f64,
) -> Result<ValidationReport> {
    let times = trace.times();
    let from = window_start(&times, 0.5 * t_end);
    let window = &times[from..];
    let series = |name: &str| -> Result<Vec<f64>> { Ok(trace.series(name)?[from..].to_vec()) };
    let slope = |name: &str| -> Result<f64> { Ok(fit_line(window, &series(name)?)?.slope) };
    let avg = |name: &str| -> Result<f64> { Ok(mean(&series(name)?)) };

    let unbiased = a.zeq == 0.0;
    let zero_tol = 1e-6 * ew * a.rates.alpha;
    let rate_row = |name: &str, analytic: f64, numeric: f64, scale: f64| {
        if unbiased {
            ValidationRow::absolute(name, analytic, numeric, zero_tol * scale)
        } else {
            ValidationRow::relative(name, analytic, numeric, RATE_RTOL)
        }
    };
    let lift = slope("e_target")?;
    let dq1 = avg("dq1")?;
    let dq2 = avg("dq2")?;
    let mut rows = vec![
        rate_row("lift_rate", a.lift_rate, lift, 1.0),
        ValidationRow::relative("spread_rate", a.spread_rate, slope("var")?, SPREAD_RTOL),
        rate_row("dq1", a.dq1, dq1, m.e1 / ew),
        rate_row("dq2", a.dq2, dq2, m.e2 / ew),
        ValidationRow::absolute("heat_balance", 0.0, dq1 + dq2 - lift, BOOKKEEPING_ATOL),
    ];
    let expectations = [
        ("zv", a.zv),
        ("nv", a.nv),
        ("zbar", a.zbar),
        ("gamma1", a.gamma1),
        ("gamma2", a.gamma2),
        ("delta_im", a.delta.im),
    ];
    for (name, analytic) in expectations {
        let numeric = avg(name)?;
        rows.push(if analytic == 0.0 {
            ValidationRow::absolute(name, analytic, numeric, 1e-6)
        } else {
            ValidationRow::relative(name, analytic, numeric, EXPECTATION_RTOL)
        });
    }
    Ok(ValidationReport::from_rows(rows, Vec::new()))
}

/// First upward crossing of `⟨E_w⟩ − ⟨E_w⟩(0)` through `√Var(E_w)` after
/// the machine transient, as `(t, mean)` by linear interpolation.
pub fn first_crossing(trace: &ObservableTrace, after: f64) -> Option<(f64, f64)> {
    let r = &trace.records;
    let e0 = r.first()?.e_target;
    let gap = |i: usize| (r[i].e_target - e0) - r[i].var.max(0.0).sqrt();
    let start = r.iter().position(|x| x.t >= after)?.max(1);
    (start..r.len()).find_map(|i| {
        let (g0, g1) = (gap(i - 1), gap(i));
        (g0 < 0.0 && g1 >= 0.0).then(|| {
            let s = g0 / (g0 - g1);
            let t = r[i - 1].t + s * (r[i].t - r[i - 1].t);
            let mean = (r[i - 1].e_target - e0) + s * (r[i].e_target - r[i - 1].e_target);
            (t, mean)
        })
    })
}

/// Simulated mean weight energy at the drift-equals-spread crossing against
/// the closed-form break-even energy.
pub fn validate_breakeven(cfg: &ScenarioConfig) -> Result<ValidationReport> {
    let m = cfg.machine.params()?;
    let t = cfg.target()?;
    let ew = weight_spacing(&t)?;
    let regime = classify_regime(&m);
    let predicted = match break_even_energy(&m, ew) {
        Err(Error::InfiniteBreakEven) => {
            return Ok(ValidationReport {
                rows: Vec::new(),
                status: RunStatus::Inconclusive,
                notes: vec!["zero virtual bias: the weight never drifts, so there is no crossing".into()],
            })
        }
        other => other?,
    };
    if regime != MachineRegime::HeatEngine {
        return Err(Error::Regime(format!(
            "break-even needs a heat engine (T2 > (E2/E1)·T1); this machine is a {regime}"
        )));
    }
    let a = asymptotic_solution(&m, ew)?;
    let t_be = a.spread_rate / (a.lift_rate * a.lift_rate);
    let ic = weight_integration(cfg, &m, &t, (1.5 * t_be).max(50.0 / m.p))?;
    let trace = simulate(&m, &t, &ic)?;
    let mut notes = vec![format!("predicted crossing time {t_be:.6e}")];
    if trace.edge_flag {
        notes.push(edge_note(&trace));
        return Ok(ValidationReport {
            rows: Vec::new(),
            status: RunStatus::Invalid,
            notes,
        });
    }
    match first_crossing(&trace, 10.0 / m.p) {
        Some((t_cross, mean)) => {
            notes.push(format!("simulated crossing time {t_cross:.6e}"));
            let row = ValidationRow::relative("break_even_energy", predicted, mean, BREAK_EVEN_RTOL);
            Ok(ValidationReport::from_rows(vec![row], notes))
        }
        None => {
            notes.push(format!("no crossing before t_end = {}", ic.t_end));
            Ok(ValidationReport {
                rows: Vec::new(),
                status: RunStatus::Inconclusive,
                notes,
            })
        }
    }
}

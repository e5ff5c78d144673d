//! Configuration-driven runs: classification, stationary checks, traces,
//! sweeps and numerics-versus-closed-form validation reports.
//!
//! Every run produces a [`ScenarioOutput`] holding both a CSV table and a
//! JSON document; the caller picks one and writes it out.

mod config;
mod sweep;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analytics::{asymptotic_solution, break_even_energy, efficiency, MachineKind};
use crate::dynamics::{evolve, initial_state, predicted_stationary, stationary_state, ObservableRecord};
use crate::error::{Error, Result};
use crate::liouvillian::assemble_liouvillian;
use crate::machine::{classify, regime_boundaries, MachineRegime, VirtualQubit};

pub use config::{
    Format, MachineInput, OutputSpec, Overrides, RawConfig, RawIntegration, RawMachine, RawOutput,
    RawSweep, ScenarioConfig, SweepParam, SweepSpec,
};
pub use sweep::{sweep, sweep_t2, SweepRow};
pub use validate::{
    compare_engine, default_engine_t_end, first_crossing, validate_breakeven, validate_engine,
    ToleranceKind, ValidationReport, ValidationRow, BOOKKEEPING_ATOL, BREAK_EVEN_RTOL,
    EXPECTATION_RTOL, RATE_RTOL, SPREAD_RTOL,
};

/// Largest trace distance to the predicted state accepted in `stationary` mode.
pub const STATIONARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classify,
    Stationary,
    Evolve,
    Sweep,
    Engine,
    Breakeven,
    Validate,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Classify => "classify",
            Mode::Stationary => "stationary",
            Mode::Evolve => "evolve",
            Mode::Sweep => "sweep",
            Mode::Engine => "engine",
            Mode::Breakeven => "breakeven",
            Mode::Validate => "validate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    /// Completed; nothing was checked.
    Ok,
    Pass,
    Fail,
    /// The run breached a validity guard, so its comparison is meaningless.
    Invalid,
    /// The run could not decide; not a failure.
    Inconclusive,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Ok | RunStatus::Pass | RunStatus::Inconclusive => 0,
            RunStatus::Fail => 1,
            RunStatus::Invalid => 3,
        }
    }
}

/// Process exit status for an error: 2 for configuration and regime
/// problems, 3 for numerical guards.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::StepGuard { .. }
        | Error::NumericalGuard(_)
        | Error::AmbiguousStationary { .. }
        | Error::InvalidState(_) => 3,
        _ => 2,
    }
}

/// A CSV table: header plus rows of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits; empty for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub status: RunStatus,
    pub json: Value,
    pub table: Table,
}

impl ScenarioOutput {
    /// The document in `format`, newline-terminated.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("JSON values serialize");
                s.push('\n');
                s
            }
        }
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    match cfg.mode {
        Mode::Classify => run_classify(cfg),
        Mode::Stationary => run_stationary(cfg),
        Mode::Evolve => run_evolve(cfg),
        Mode::Sweep => run_sweep(cfg),
        Mode::Engine => run_engine(cfg),
        Mode::Validate => Ok(report_output(&validate_engine(cfg)?)),
        Mode::Breakeven => Ok(report_output(&validate_breakeven(cfg)?)),
    }
}

fn run_classify(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let MachineInput { e1, e2, t1, t2, .. } = cfg.machine;
    let vq = VirtualQubit::new(e1, e2, t1, t2)?;
    let regime = classify(e1, e2, t1, t2)?;
    let (low, high) = regime_boundaries(e1, e2, t1)?;
    let mut doc = Map::new();
    doc.insert("regime".into(), json!(regime.as_str()));
    doc.insert("beta_v".into(), num(vq.beta_v));
    doc.insert("T_v".into(), vq.temperature().map_or(Value::Null, num));
    doc.insert("Zeq".into(), num(vq.zeq));
    doc.insert("Neq".into(), num(vq.neq));
    doc.insert("Ev".into(), num(vq.ev));
    doc.insert("T2_boundaries".into(), json!([num(low), num(high)]));
    if cfg.machine.g.is_some() && cfg.machine.p.is_some() {
        doc.insert("weak_coupling_advisory".into(), json!(cfg.machine.params()?.weak_coupling_advisory()));
    }
    let mut table = Table::new(&["E1", "E2", "T1", "T2", "beta_v", "T_v", "Zeq", "Neq", "regime"]);
    table.rows.push(vec![
        fmt_num(e1),
        fmt_num(e2),
        fmt_num(t1),
        fmt_num(t2),
        fmt_num(vq.beta_v),
        vq.temperature().map_or(String::new(), fmt_num),
        fmt_num(vq.zeq),
        fmt_num(vq.neq),
        regime.as_str().into(),
    ]);
    Ok(ScenarioOutput {
        status: RunStatus::Ok,
        json: Value::Object(doc),
        table,
    })
}

fn run_stationary(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let m = cfg.machine.params()?;
    let t = cfg.target()?;
    let l = assemble_liouvillian(&m, &t)?;
    let s = stationary_state(&l.generator)?;
    let dims = l.layout.dims();
    let got = s.state.partial_trace_keep(&dims, 2).populations();
    let mut doc = Map::new();
    doc.insert("residual".into(), num(s.residual));
    doc.insert("nullspace_dim_estimate".into(), json!(s.nullspace_dim_estimate));
    doc.insert("smallest_singular_value".into(), num(s.smallest_singular_value));
    doc.insert("target_populations".into(), Value::Array(got.iter().map(|&x| num(x)).collect()));
    let mut table = Table::new(&["level", "population", "predicted"]);
    let (status, predicted) = match predicted_stationary(&m, &t) {
        Ok(want) => {
            let distance = s.state.trace_distance(&want);
            doc.insert("trace_distance".into(), num(distance));
            doc.insert("tolerance".into(), num(STATIONARY_TOL));
            let pops = want.partial_trace_keep(&dims, 2).populations();
            doc.insert("predicted_target_populations".into(), Value::Array(pops.iter().map(|&x| num(x)).collect()));
            let status = if distance <= STATIONARY_TOL { RunStatus::Pass } else { RunStatus::Fail };
            (status, Some(pops))
        }
        Err(Error::Unsupported(_)) => (RunStatus::Ok, None),
        Err(e) => return Err(e),
    };
    for (k, p) in got.iter().enumerate() {
        let pred = predicted.as_ref().map_or(String::new(), |v| fmt_num(v[k]));
        table.rows.push(vec![t.level(k).to_string(), fmt_num(*p), pred]);
    }
    doc.insert("status".into(), json!(status));
    Ok(ScenarioOutput {
        status,
        json: Value::Object(doc),
        table,
    })
}

const TRACE_COLUMNS: [&str; 16] = [
    "t", "e_target", "e_target_sq", "var", "zv", "nv", "zbar", "delta_re", "delta_im", "gamma1",
    "gamma2", "dq1", "dq2", "dq3", "edge_low", "edge_high",
];

fn trace_row(r: &ObservableRecord) -> Vec<f64> {
    vec![
        r.t, r.e_target, r.e_target_sq, r.var, r.zv, r.nv, r.zbar, r.delta.re, r.delta.im, r.gamma1,
        r.gamma2, r.dq1, r.dq2, r.dq3, r.edge_low, r.edge_high,
    ]
}

fn run_evolve(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let m = cfg.machine.params()?;
    let t = cfg.target()?;
    let ic = cfg.integration_or(None, None)?;
    let l = assemble_liouvillian(&m, &t)?;
    let trace = evolve(&l, &initial_state(&m, &t)?, &ic)?;
    let mut table = Table::new(&TRACE_COLUMNS);
    let mut records = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let vals = trace_row(r);
        table.rows.push(vals.iter().map(|&x| fmt_num(x)).collect());
        let obj: Map<String, Value> = TRACE_COLUMNS
            .iter()
            .zip(&vals)
            .map(|(k, &v)| (k.to_string(), num(v)))
            .collect();
        records.push(Value::Object(obj));
    }
    let json = json!({
        "records": records,
        "edge_flag": trace.edge_flag,
        "max_edge_population": num(trace.max_edge_population),
        "evolved_elements": trace.evolved_elements,
    });
    Ok(ScenarioOutput {
        status: RunStatus::Ok,
        json,
        table,
    })
}

fn run_sweep(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let spec = cfg
        .sweep
        .ok_or_else(|| Error::Config("mode `sweep` needs a `[sweep]` section".into()))?;
    let MachineInput { e1, e2, t1, t2, .. } = cfg.machine;
    let (fixed, col) = match spec.param {
        SweepParam::T2 => (t1, "T2"),
        SweepParam::T1 => (t2, "T1"),
    };
    let rows = sweep(e1, e2, fixed, &spec)?;
    let mut table = Table::new(&[col, "beta_v", "T_v", "Zeq", "Neq", "regime"]);
    let mut out = Vec::with_capacity(rows.len());
    for r in &rows {
        table.rows.push(vec![
            fmt_num(r.value),
            fmt_num(r.beta_v),
            r.t_v.map_or(String::new(), fmt_num),
            fmt_num(r.zeq),
            fmt_num(r.neq),
            r.regime.as_str().into(),
        ]);
        let mut obj = Map::new();
        obj.insert(col.into(), num(r.value));
        obj.insert("beta_v".into(), num(r.beta_v));
        obj.insert("T_v".into(), r.t_v.map_or(Value::Null, num));
        obj.insert("Zeq".into(), num(r.zeq));
        obj.insert("Neq".into(), num(r.neq));
        obj.insert("regime".into(), json!(r.regime.as_str()));
        out.push(Value::Object(obj));
    }
    Ok(ScenarioOutput {
        status: RunStatus::Ok,
        json: json!({ "rows": out }),
        table,
    })
}

fn run_engine(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let m = cfg.machine.params()?;
    let ew = match cfg.target {
        Some(t) => {
            t.validate()?;
            t.check_resonance(&m)?;
            t.spacing()
        }
        None => m.virtual_gap(),
    };
    let a = asymptotic_solution(&m, ew)?;
    let regime = classify(m.e1, m.e2, m.t1, m.t2)?;
    let break_even = match break_even_energy(&m, ew) {
        Ok(v) => num(v),
        Err(Error::InfiniteBreakEven) => Value::Null,
        Err(e) => return Err(e),
    };
    let quantities: Vec<(&str, f64)> = vec![
        ("alpha", a.rates.alpha),
        ("beta", a.rates.beta),
        ("Zeq", a.zeq),
        ("Neq", a.neq),
        ("lift_rate", a.lift_rate),
        ("spread_rate", a.spread_rate),
        ("dQ1", a.dq1),
        ("dQ2", a.dq2),
        ("Zv", a.zv),
        ("Nv", a.nv),
        ("Zbar_v", a.zbar),
        ("Delta_im", a.delta.im),
        ("Gamma1", a.gamma1),
        ("Gamma2", a.gamma2),
    ];
    let mut doc: Map<String, Value> = quantities.iter().map(|&(k, v)| (k.to_string(), num(v))).collect();
    doc.insert("Ew".into(), num(ew));
    doc.insert("regime".into(), json!(regime.as_str()));
    doc.insert("break_even_energy".into(), break_even.clone());
    if regime == MachineRegime::HeatEngine {
        let e = efficiency(MachineKind::HeatEngine, m.e1, m.e2, m.virtual_gap(), m.t1, m.t2, None)?;
        doc.insert(
            "efficiency".into(),
            json!({
                "eta_q": num(e.eta_q),
                "eta_carnot": num(e.eta_carnot),
                "correction_factor": num(e.correction_factor),
            }),
        );
    }
    let mut table = Table::new(&["quantity", "value"]);
    for (k, v) in &quantities {
        table.rows.push(vec![k.to_string(), fmt_num(*v)]);
    }
    table.rows.push(vec![
        "break_even_energy".into(),
        break_even.as_f64().map_or(String::new(), fmt_num),
    ]);
    Ok(ScenarioOutput {
        status: RunStatus::Ok,
        json: Value::Object(doc),
        table,
    })
}

fn report_output(r: &ValidationReport) -> ScenarioOutput {
    let mut table = Table::new(&["name", "analytic", "numeric", "error", "tolerance", "kind", "pass"]);
    let mut rows = Vec::with_capacity(r.rows.len());
    for row in &r.rows {
        let kind = match row.kind {
            ToleranceKind::Relative => "relative",
            ToleranceKind::Absolute => "absolute",
        };
        table.rows.push(vec![
            row.name.clone(),
            fmt_num(row.analytic),
            fmt_num(row.numeric),
            fmt_num(row.error),
            fmt_num(row.tolerance),
            kind.into(),
            row.pass.to_string(),
        ]);
        rows.push(json!({
            "name": row.name,
            "analytic": num(row.analytic),
            "numeric": num(row.numeric),
            "error": num(row.error),
            "tolerance": num(row.tolerance),
            "kind": kind,
            "pass": row.pass,
        }));
    }
    ScenarioOutput {
        status: r.status,
        json: json!({ "rows": rows, "status": r.status, "notes": r.notes }),
        table,
    }
}

//! Time evolution, observable traces, heat currents and stationary states.

mod integrate;
mod stationary;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{Factor, Liouvillian};
use crate::state::DensityMatrix;

pub use integrate::{evolve, initial_state, stable_step};
pub use stationary::{predicted_stationary, stationary_state, StationaryResult, NULL_THRESHOLD};

/// Largest allowed ratio `dt·‖L‖∞` for fixed-step RK4 on the evolved block.
pub const RK4_GUARD: f64 = 0.1;
/// Trace and Hermiticity tolerance for evolved states.
pub const EVOLUTION_TOL: f64 = 1e-9;
/// Edge population of a truncated weight above which a run is flagged.
pub const EDGE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    /// Repeated multiplication by the exact one-step propagator `exp(L·dt)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_stride")]
    pub record_every: usize,
    #[serde(default = "default_true")]
    pub hermitize: bool,
    #[serde(default)]
    pub retain_states: bool,
}

fn default_method() -> Method {
    Method::Rk4
}

fn default_stride() -> usize {
    1
}

fn default_true() -> bool {
    true
}

impl IntegrationConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        IntegrationConfig {
            t_end,
            dt,
            method: Method::Rk4,
            record_every: 1,
            hermitize: true,
            retain_states: false,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }

    pub fn retaining_states(mut self) -> Self {
        self.retain_states = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::param("t_end", format!("must be finite and >= 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Expectation values at one sampled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub t: f64,
    /// `⟨E_w⟩`, the target's mean energy.
    pub e_target: f64,
    pub e_target_sq: f64,
    pub var: f64,
    pub zv: f64,
    pub nv: f64,
    pub zbar: f64,
    /// `tr(ρΔ)`; purely imaginary for Hermitian states.
    #[serde(serialize_with = "serialize_complex")]
    pub delta: Complex64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Heat current from bath 1 into the machine.
    pub dq1: f64,
    pub dq2: f64,
    /// Heat current from the target's own bath, zero without one.
    pub dq3: f64,
    /// Population of the lowest target level.
    pub edge_low: f64,
    /// Population of the highest target level.
    pub edge_high: f64,
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}

impl ObservableRecord {
    pub const FIELDS: [&'static str; 15] = [
        "t", "e_target", "e_target_sq", "var", "zv", "nv", "zbar", "delta_im", "gamma1", "gamma2",
        "dq1", "dq2", "dq3", "edge_low", "edge_high",
    ];

    /// Real-valued field by name; `delta_im` is the imaginary part of `delta`.
    pub fn value(&self, name: &str) -> Option<f64> {
        Some(match name {
            "t" => self.t,
            "e_target" => self.e_target,
            "e_target_sq" => self.e_target_sq,
            "var" => self.var,
            "zv" => self.zv,
            "nv" => self.nv,
            "zbar" => self.zbar,
            "delta_im" => self.delta.im,
            "gamma1" => self.gamma1,
            "gamma2" => self.gamma2,
            "dq1" => self.dq1,
            "dq2" => self.dq2,
            "dq3" => self.dq3,
            "edge_low" => self.edge_low,
            "edge_high" => self.edge_high,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ObservableTrace {
    pub records: Vec<ObservableRecord>,
    /// Sampled states, when requested.
    pub states: Option<Vec<DensityMatrix>>,
    pub final_state: DensityMatrix,
    /// Set when a truncated weight's edge population exceeded
    /// [`EDGE_THRESHOLD`].
    pub edge_flag: bool,
    pub max_edge_population: f64,
    /// Number of matrix elements actually propagated.
    pub evolved_elements: usize,
}

impl ObservableTrace {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn series(&self, name: &str) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.value(name).ok_or_else(|| Error::UnknownObservable(name.to_string())))
            .collect()
    }
}

/// `tr(H_f·𝒟_f(ρ))`: heat flowing from the bath of `factor` into the system.
pub fn heat_current(rho: &DensityMatrix, factor: Factor, l: &Liouvillian) -> Result<f64> {
    if rho.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: rho.dim(),
        });
    }
    let d = l
        .dissipator(factor)
        .ok_or_else(|| Error::Unsupported(format!("no bath is attached to {factor:?}")))?;
    let h = l.local_hamiltonian(factor);
    Ok((&h * d.apply(rho.matrix())).trace().re)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceTarget {
    /// Trace distance to a reference state; needs retained states.
    State(DensityMatrix),
    /// Absolute deviations of named record fields from reference values.
    Observables(Vec<(String, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub times: Vec<f64>,
    pub deviations: Vec<f64>,
    pub final_deviation: f64,
    /// Deviations never grow over the final 20% of samples.
    pub monotone_tail: bool,
    pub converged: bool,
}

/// Deviation of a trace from a target over time.
pub fn convergence_check(
    trace: &ObservableTrace,
    target: &ConvergenceTarget,
    tol: f64,
) -> Result<ConvergenceReport> {
    if trace.records.is_empty() {
        return Err(Error::InvalidState("empty trace".into()));
    }
    let deviations: Vec<f64> = match target {
        ConvergenceTarget::State(reference) => {
            let states = trace.states.as_ref().ok_or_else(|| {
                Error::InvalidState("state convergence needs a trace with retained states".into())
            })?;
            states.iter().map(|s| s.trace_distance(reference)).collect()
        }
        ConvergenceTarget::Observables(targets) => {
            let mut out = Vec::with_capacity(trace.records.len());
            for r in &trace.records {
                let mut worst = 0.0f64;
                for (name, want) in targets {
                    let got = r
                        .value(name)
                        .ok_or_else(|| Error::UnknownObservable(name.clone()))?;
                    worst = worst.max((got - want).abs());
                }
                out.push(worst);
            }
            out
        }
    };
    let n = deviations.len();
    let tail = &deviations[n - (n / 5).max(1)..];
    let slack = (tol * 1e-2).max(1e-14);
    let monotone_tail = tail.windows(2).all(|w| w[1] <= w[0] + slack);
    let final_deviation = deviations[n - 1];
    Ok(ConvergenceReport {
        times: trace.times(),
        converged: final_deviation <= tol,
        final_deviation,
        monotone_tail,
        deviations,
    })
}

//! Machine parameters and the closed-form virtual-qubit algebra.
//!
//! The machine virtual qubit is spanned by `|1⟩₁|0⟩₂` (virtual ground) and
//! `|0⟩₁|1⟩₂` (virtual excited), with gap `E_v = E2 − E1`. With both machine
//! qubits thermal, its populations obey a Boltzmann ratio at the inverse
//! virtual temperature
//!
//! ```text
//! beta_v = (E2/T2 − E1/T1) / (E2 − E1)
//! ```
//!
//! which is finite and smooth everywhere, including the infinite-temperature
//! point `beta_v = 0` that separates heat pumps from heat engines.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{CMatrix, DensityMatrix};

/// Relative tolerance for the resonance condition `E_target = E2 − E1`.
pub const RESONANCE_RTOL: f64 = 1e-12;

/// Ratio `coupling / E1` at and above which the weak-coupling advisory is set.
pub const WEAK_COUPLING_RATIO: f64 = 0.1;

/// The engineered two-qubit machine.
///
/// `g = 0` is accepted as the decoupled limit. `p` is the reset rate of both
/// machine qubits. Unequal rates are accepted
/// for numerics through [`MachineParams::with_bath2_rate`]; closed-form
/// analytics refuse them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MachineParams {
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub g: f64,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

fn check_energies(e1: f64, e2: f64) -> Result<()> {
    positive("E1", e1)?;
    positive("E2", e2)?;
    if e2 == e1 {
        return Err(Error::ZeroVirtualGap);
    }
    if e2 < e1 {
        return Err(Error::param("E2", format!("must exceed E1 = {e1}, got {e2}")));
    }
    Ok(())
}

impl MachineParams {
    pub fn new(e1: f64, e2: f64, t1: f64, t2: f64, g: f64, p: f64) -> Result<Self> {
        let m = MachineParams {
            e1,
            e2,
            t1,
            t2,
            g,
            p,
            p2: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// Gives bath 2 its own reset rate.
    pub fn with_bath2_rate(mut self, p2: f64) -> Result<Self> {
        positive("p2", p2)?;
        self.p2 = Some(p2);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_energies(self.e1, self.e2)?;
        positive("T1", self.t1)?;
        positive("T2", self.t2)?;
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::param("g", format!("must be finite and >= 0, got {}", self.g)));
        }
        positive("p", self.p)?;
        if let Some(p2) = self.p2 {
            positive("p2", p2)?;
        }
        Ok(())
    }

    pub fn virtual_gap(&self) -> f64 {
        self.e2 - self.e1
    }

    /// Reset rates `(p1, p2)` of the two machine qubits.
    pub fn reset_rates(&self) -> (f64, f64) {
        (self.p, self.p2.unwrap_or(self.p))
    }

    pub fn has_equal_rates(&self) -> bool {
        let (p1, p2) = self.reset_rates();
        p1 == p2
    }

    /// True when `g` or a reset rate reaches `E1/10`, where the reset master
    /// equation stops being a faithful weak-coupling model.
    pub fn weak_coupling_advisory(&self) -> bool {
        let limit = WEAK_COUPLING_RATIO * self.e1;
        let (p1, p2) = self.reset_rates();
        self.g >= limit || p1 >= limit || p2 >= limit
    }

    pub fn virtual_qubit(&self) -> VirtualQubit {
        VirtualQubit::from_raw(self.e1, self.e2, self.t1, self.t2)
    }

    /// Boltzmann factors `(e^{−E1/T1}, e^{−E2/T2})`.
    pub fn boltzmann_factors(&self) -> (f64, f64) {
        ((-self.e1 / self.t1).exp(), (-self.e2 / self.t2).exp())
    }

    /// Equilibrium ground-state population `Γᵢ^eq = 1/(1 + e^{−Eᵢ/Tᵢ})` of
    /// machine qubit `i ∈ {1, 2}`.
    pub fn ground_population(&self, qubit: usize) -> f64 {
        match qubit {
            1 => logistic(self.e1 / self.t1),
            2 => logistic(self.e2 / self.t2),
            _ => panic!("machine qubits are numbered 1 and 2"),
        }
    }

    /// Equilibrium bias of the anti-virtual qubit, `tr(Z̄_v τ₁⊗τ₂)`.
    pub fn equilibrium_anti_bias(&self) -> f64 {
        let (x1, x2) = self.boltzmann_factors();
        (1.0 - x1 * x2) / ((1.0 + x1) * (1.0 + x2))
    }

    pub fn thermal_state(&self, qubit: usize) -> DensityMatrix {
        match qubit {
            1 => thermal_qubit_state(self.e1, self.t1),
            2 => thermal_qubit_state(self.e2, self.t2),
            _ => panic!("machine qubits are numbered 1 and 2"),
        }
    }
}

/// Derived quantities of the machine virtual qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirtualQubit {
    /// Gap `E2 − E1`.
    pub ev: f64,
    /// Inverse virtual temperature; zero at infinite `T_v`.
    pub beta_v: f64,
    /// Equilibrium bias `tr(Z_v τ₁⊗τ₂)`.
    pub zeq: f64,
    /// Equilibrium normalization `tr(N_v τ₁⊗τ₂)`.
    pub neq: f64,
}

impl VirtualQubit {
    pub fn new(e1: f64, e2: f64, t1: f64, t2: f64) -> Result<Self> {
        check_energies(e1, e2)?;
        positive("T1", t1)?;
        positive("T2", t2)?;
        Ok(Self::from_raw(e1, e2, t1, t2))
    }

    fn from_raw(e1: f64, e2: f64, t1: f64, t2: f64) -> Self {
        let a = e1 / t1;
        let b = e2 / t2;
        // Shared difference keeps sign(zeq) == sign(beta_v) bit-for-bit.
        let s = b - a;
        let ev = e2 - e1;
        let x1 = (-a).exp();
        let x2 = (-b).exp();
        let denom = (1.0 + x1) * (1.0 + x2);
        // near the boundary x1 − x2 = −e^{−a}·expm1(−s) avoids cancellation;
        // far from it the plain difference is exact enough and keeps its sign
        let diff = if s.abs() < 1.0 { -x1 * (-s).exp_m1() } else { x1 - x2 };
        let zeq = diff / denom;
        let neq = (x1 + x2) / denom;
        VirtualQubit {
            ev,
            beta_v: s / ev,
            zeq,
            neq,
        }
    }

    /// `T_v`, or `None` at infinite virtual temperature.
    pub fn temperature(&self) -> Option<f64> {
        (self.beta_v != 0.0).then(|| 1.0 / self.beta_v)
    }
}

/// Inverse virtual temperature `(E2/T2 − E1/T1)/(E2 − E1)`.
pub fn virtual_temperature(e1: f64, e2: f64, t1: f64, t2: f64) -> Result<f64> {
    Ok(VirtualQubit::new(e1, e2, t1, t2)?.beta_v)
}

pub fn equilibrium_bias(m: &MachineParams) -> f64 {
    m.virtual_qubit().zeq
}

pub fn equilibrium_norm(m: &MachineParams) -> f64 {
    m.virtual_qubit().neq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MachineRegime {
    Refrigerator,
    HeatPump,
    HeatEngine,
    /// `T_v = T1 = T2`: no temperature difference to exploit.
    ReversibleBoundary,
    /// `beta_v = 0`: the Carnot engine between pump and engine.
    EngineBoundary,
}

impl MachineRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            MachineRegime::Refrigerator => "Refrigerator",
            MachineRegime::HeatPump => "HeatPump",
            MachineRegime::HeatEngine => "HeatEngine",
            MachineRegime::ReversibleBoundary => "ReversibleBoundary",
            MachineRegime::EngineBoundary => "EngineBoundary",
        }
    }
}

impl std::fmt::Display for MachineRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime from raw energies and temperatures.
pub fn classify(e1: f64, e2: f64, t1: f64, t2: f64) -> Result<MachineRegime> {
    let vq = VirtualQubit::new(e1, e2, t1, t2)?;
    Ok(classify_virtual(&vq, t1, t2))
}

fn classify_virtual(vq: &VirtualQubit, t1: f64, t2: f64) -> MachineRegime {
    if vq.beta_v == 0.0 {
        MachineRegime::EngineBoundary
    } else if vq.beta_v < 0.0 {
        MachineRegime::HeatEngine
    } else if t1 == t2 {
        MachineRegime::ReversibleBoundary
    } else if t2 < t1 {
        // T_v < T2 < T1 follows from E2 > E1.
        MachineRegime::Refrigerator
    } else {
        MachineRegime::HeatPump
    }
}

pub fn classify_regime(m: &MachineParams) -> MachineRegime {
    classify_virtual(&m.virtual_qubit(), m.t1, m.t2)
}

/// `(T1, (E2/E1)·T1)`: values of `T2` separating refrigerator, heat pump and
/// heat engine for a fixed design and `T1`.
pub fn regime_boundaries(e1: f64, e2: f64, t1: f64) -> Result<(f64, f64)> {
    check_energies(e1, e2)?;
    positive("T1", t1)?;
    Ok((t1, e2 / e1 * t1))
}

/// `1/(1 + e^{−x})` without overflow for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Thermal qubit state at inverse temperature `beta`; `beta < 0` gives an
/// inverted state.
pub fn thermal_qubit_state_beta(e: f64, beta: f64) -> DensityMatrix {
    let ground = logistic(beta * e);
    let excited = logistic(-beta * e);
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = Complex64::new(ground, 0.0);
    m[(1, 1)] = Complex64::new(excited, 0.0);
    DensityMatrix::from_matrix_unchecked(m)
}

/// `diag(1, e^{−E/T})/(1 + e^{−E/T})`. `T = 0` is the ground state,
/// `T = ±∞` the maximally mixed state, and negative `T` is allowed.
pub fn thermal_qubit_state(e: f64, t: f64) -> DensityMatrix {
    let beta = if t == 0.0 { f64::INFINITY } else { 1.0 / t };
    thermal_qubit_state_beta(e, beta)
}

/// Populations of an equi-spaced ladder `E_n = n·spacing`, `n = 0..levels`,
/// at inverse temperature `beta` (any sign).
pub fn ladder_thermal_populations(levels: usize, spacing: f64, beta: f64) -> Vec<f64> {
    let exps: Vec<f64> = (0..levels).map(|n| -beta * spacing * n as f64).collect();
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = exps.iter().map(|x| (x - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Optional bath of its own on a qubit target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBath {
    #[serde(rename = "T3")]
    pub t3: f64,
    pub p3: f64,
}

/// The external system the machine acts upon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSystem {
    Qubit {
        #[serde(rename = "E3")]
        e3: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bath: Option<TargetBath>,
    },
    Ladder {
        #[serde(rename = "N")]
        levels: usize,
        #[serde(rename = "E3")]
        e3: f64,
    },
    Weight {
        #[serde(rename = "Ew")]
        ew: f64,
        n_min: i64,
        n_max: i64,
        n0: i64,
    },
}

/// Smallest admissible weight window `n_max − n_min + 1`.
pub const MIN_WEIGHT_WINDOW: i64 = 5;

impl TargetSystem {
    pub fn isolated_qubit(e3: f64) -> Self {
        TargetSystem::Qubit { e3, bath: None }
    }

    pub fn dim(&self) -> usize {
        match *self {
            TargetSystem::Qubit { .. } => 2,
            TargetSystem::Ladder { levels, .. } => levels,
            TargetSystem::Weight { n_min, n_max, .. } => (n_max - n_min + 1).max(0) as usize,
        }
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            TargetSystem::Qubit { e3, .. } | TargetSystem::Ladder { e3, .. } => e3,
            TargetSystem::Weight { ew, .. } => ew,
        }
    }

    /// Level number of local basis index `k`; weight levels keep their
    /// absolute index `n_min + k`.
    pub fn level(&self, k: usize) -> i64 {
        match *self {
            TargetSystem::Weight { n_min, .. } => n_min + k as i64,
            _ => k as i64,
        }
    }

    pub fn level_energy(&self, k: usize) -> f64 {
        self.level(k) as f64 * self.spacing()
    }

    pub fn bath(&self) -> Option<TargetBath> {
        match *self {
            TargetSystem::Qubit { bath, .. } => bath,
            _ => None,
        }
    }

    pub fn is_weight(&self) -> bool {
        matches!(self, TargetSystem::Weight { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TargetSystem::Qubit { e3, bath } => {
                positive("E3", e3)?;
                if let Some(b) = bath {
                    positive("T3", b.t3)?;
                    positive("p3", b.p3)?;
                }
            }
            TargetSystem::Ladder { levels, e3 } => {
                positive("E3", e3)?;
                if levels < 2 {
                    return Err(Error::param("N", format!("need at least 2 levels, got {levels}")));
                }
            }
            TargetSystem::Weight {
                ew,
                n_min,
                n_max,
                n0,
            } => {
                positive("Ew", ew)?;
                if n_max - n_min + 1 < MIN_WEIGHT_WINDOW {
                    return Err(Error::param(
                        "n_max",
                        format!(
                            "weight window [{n_min}, {n_max}] must hold at least {MIN_WEIGHT_WINDOW} levels"
                        ),
                    ));
                }
                if n0 < n_min || n0 > n_max {
                    return Err(Error::param(
                        "n0",
                        format!("initial level {n0} outside window [{n_min}, {n_max}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks `E_target = E2 − E1` to [`RESONANCE_RTOL`].
    pub fn check_resonance(&self, m: &MachineParams) -> Result<()> {
        let gap = m.virtual_gap();
        let e = self.spacing();
        if (e - gap).abs() > RESONANCE_RTOL * m.e2.abs().max(e.abs()) {
            return Err(Error::NotResonant { target: e, gap });
        }
        Ok(())
    }
}

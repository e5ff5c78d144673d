//! Closed-form results for machines with a common reset rate: asymptotic
//! engine solution, break-even energy, efficiencies and entropy flows.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::machine::{classify, MachineParams, MachineRegime, VirtualQubit};

/// Drift and diffusion constants of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstants {
    /// `g²p/(2g² + p²)`.
    pub alpha: f64,
    /// `2g⁴p(g² + 2p²)/(2g² + p²)³`.
    pub beta: f64,
}

pub fn rate_constants(g: f64, p: f64) -> Result<RateConstants> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::param("g", format!("must be finite and >= 0, got {g}")));
    }
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::param("p", format!("must be finite and >= 0, got {p}")));
    }
    if g == 0.0 && p == 0.0 {
        return Err(Error::param("p", "g and p cannot both vanish"));
    }
    let g2 = g * g;
    let p2 = p * p;
    let den = 2.0 * g2 + p2;
    Ok(RateConstants {
        alpha: g2 * p / den,
        beta: 2.0 * g2 * g2 * p * (g2 + 2.0 * p2) / (den * den * den),
    })
}

/// Long-time behaviour of a machine driving a weight with level spacing `Ew`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSolution {
    pub rates: RateConstants,
    pub zeq: f64,
    pub neq: f64,
    /// Stationary `tr(ρΔ)`, purely imaginary.
    pub delta: Complex64,
    pub zv: f64,
    pub nv: f64,
    pub zbar: f64,
    /// `d⟨E_w⟩/dt`.
    pub lift_rate: f64,
    /// `dVar(E_w)/dt`.
    pub spread_rate: f64,
    pub dq1: f64,
    pub dq2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

pub fn asymptotic_solution(m: &MachineParams, ew: f64) -> Result<AsymptoticSolution> {
    m.validate()?;
    if !m.has_equal_rates() {
        return Err(Error::Unsupported(
            "closed-form asymptotics need equal reset rates on both machine qubits".into(),
        ));
    }
    if !(ew.is_finite() && ew > 0.0) {
        return Err(Error::param("Ew", format!("must be finite and > 0, got {ew}")));
    }
    let (g, p) = (m.g, m.p);
    let rates = rate_constants(g, p)?;
    let vq = m.virtual_qubit();
    let (z, n) = (vq.zeq, vq.neq);
    let den = 2.0 * g * g + p * p;
    let shift = g * g * z / den;
    Ok(AsymptoticSolution {
        rates,
        zeq: z,
        neq: n,
        delta: Complex64::new(0.0, -g * p * z / den),
        zv: p * p * z / den,
        nv: n - g * g * z * z / den,
        zbar: m.equilibrium_anti_bias(),
        lift_rate: -rates.alpha * ew * z,
        spread_rate: ew * ew * (rates.alpha * n - rates.beta * z * z),
        dq1: rates.alpha * m.e1 * z,
        dq2: -rates.alpha * m.e2 * z,
        gamma1: m.ground_population(1) + shift,
        gamma2: m.ground_population(2) - shift,
    })
}

/// Mean weight energy at the moment the drift catches up with the spread,
/// `−Ew(N/Z − (β/α)Z)`.
pub fn break_even_energy(m: &MachineParams, ew: f64) -> Result<f64> {
    let a = asymptotic_solution(m, ew)?;
    if a.zeq == 0.0 {
        return Err(Error::InfiniteBreakEven);
    }
    let RateConstants { alpha, beta } = a.rates;
    Ok(-ew * (a.neq / a.zeq - beta / alpha * a.zeq))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MachineKind {
    Refrigerator,
    HeatPump,
    HeatEngine,
}

impl MachineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MachineKind::Refrigerator => "fridge",
            MachineKind::HeatPump => "pump",
            MachineKind::HeatEngine => "engine",
        }
    }
}

impl fmt::Display for MachineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MachineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fridge" | "refrigerator" => Ok(MachineKind::Refrigerator),
            "pump" | "heat-pump" => Ok(MachineKind::HeatPump),
            "engine" | "heat-engine" => Ok(MachineKind::HeatEngine),
            _ => Err(Error::param("kind", format!("unknown machine kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyReport {
    /// Efficiency from the energy ratios of the heat exchanged.
    pub eta_q: f64,
    pub eta_carnot: f64,
    pub correction_factor: f64,
    pub regime: MachineRegime,
    /// `|eta_q − eta_carnot·correction| / |eta_q|`.
    pub identity_residual: f64,
}

fn require_t3(kind: MachineKind, t3: Option<f64>) -> Result<f64> {
    match t3 {
        Some(t) if t.is_finite() && t > 0.0 => Ok(t),
        Some(t) => Err(Error::param("T3", format!("must be finite and > 0, got {t}"))),
        None => Err(Error::param("T3", format!("required for a {kind}"))),
    }
}

/// Efficiency of a machine in both its energy form and its Carnot-times-
/// correction form.
pub fn efficiency(
    kind: MachineKind,
    e1: f64,
    e2: f64,
    e3: f64,
    t1: f64,
    t2: f64,
    t3: Option<f64>,
) -> Result<EfficiencyReport> {
    let vq = VirtualQubit::new(e1, e2, t1, t2)?;
    let regime = classify(e1, e2, t1, t2)?;
    let gap = e2 - e1;
    if (e3 - gap).abs() > crate::machine::RESONANCE_RTOL * e2.max(e3.abs()) {
        return Err(Error::NotResonant { target: e3, gap });
    }
    let bv = vq.beta_v;
    let (b1, b2) = (1.0 / t1, 1.0 / t2);
    let (eta_q, eta_carnot, correction_factor) = match kind {
        MachineKind::Refrigerator => {
            let b3 = 1.0 / require_t3(kind, t3)?;
            let carnot = (b2 - b1) / (b3 - b2);
            (e3 / e1, carnot, 1.0 - (bv - b3) / (bv - b2))
        }
        MachineKind::HeatPump => {
            let b3 = 1.0 / require_t3(kind, t3)?;
            let carnot = (b1 - b2) / (b1 - b3);
            (e3 / e2, carnot, 1.0 - (b3 - bv) / (b1 - bv))
        }
        MachineKind::HeatEngine => (1.0 - e1 / e2, 1.0 - t1 / t2, b1 / (b1 - bv)),
    };
    if !(eta_carnot.is_finite() && eta_carnot > 0.0) {
        return Err(Error::Regime(format!(
            "the Carnot efficiency of a {kind} is {eta_carnot} for these temperatures; \
             the machine is a {regime}"
        )));
    }
    Ok(EfficiencyReport {
        eta_q,
        eta_carnot,
        correction_factor,
        regime,
        identity_residual: (eta_q - eta_carnot * correction_factor).abs() / eta_q.abs(),
    })
}

/// Entropy bookkeeping per unit of heat `Q3` exchanged with the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyFlow {
    /// `Q3·beta_v`: entropy carried by `Q3` at the virtual temperature.
    pub s_flow_v: f64,
    /// Total entropy production.
    pub delta_s: f64,
    pub second_law_ok: bool,
}

pub fn entropy_rates(kind: MachineKind, q3: f64, t3: Option<f64>, beta_v: f64) -> Result<EntropyFlow> {
    let (delta_s, scale) = match kind {
        MachineKind::Refrigerator => {
            let b3 = 1.0 / require_t3(kind, t3)?;
            (q3 * (beta_v - b3), q3.abs() * (beta_v.abs() + b3))
        }
        MachineKind::HeatPump => {
            let b3 = 1.0 / require_t3(kind, t3)?;
            (q3 * (b3 - beta_v), q3.abs() * (beta_v.abs() + b3))
        }
        MachineKind::HeatEngine => (-q3 * beta_v, q3.abs() * beta_v.abs()),
    };
    Ok(EntropyFlow {
        s_flow_v: q3 * beta_v,
        delta_s,
        second_law_ok: delta_s >= -1e-12 * scale,
    })
}

/// Residual of `Q2/T2 − Q1/T1 = Q3·beta_v` with `Q_i = q_unit·E_i`.
pub fn entropy_equality_check(e1: f64, e2: f64, e3: f64, t1: f64, t2: f64, q_unit: f64) -> Result<f64> {
    let beta_v = VirtualQubit::new(e1, e2, t1, t2)?.beta_v;
    let (q1, q2, q3) = (q_unit * e1, q_unit * e2, q_unit * e3);
    Ok(q2 / t2 - q1 / t1 - q3 * beta_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn engine() -> MachineParams {
        MachineParams::new(1.0, 2.0, 1.0, 4.0, 0.01, 0.01).unwrap()
    }

    #[test]
    fn rate_constants_at_equal_g_p() {
        let r = rate_constants(0.01, 0.01).unwrap();
        assert!((r.alpha - 0.01 / 3.0).abs() < 1e-17);
        assert!((r.beta - 2.0 / 9.0 * 0.01).abs() < 1e-17);
        let r0 = rate_constants(0.0, 0.01).unwrap();
        assert_eq!((r0.alpha, r0.beta), (0.0, 0.0));
        assert_eq!(rate_constants(0.01, 0.0).unwrap().alpha, 0.0);
        assert!(rate_constants(0.0, 0.0).is_err());
    }

    #[test]
    fn engine_asymptotics() {
        let a = asymptotic_solution(&engine(), 1.0).unwrap();
        assert!((a.lift_rate - 3.619_974_914_271_678_7e-4).abs() < 1e-15);
        assert!((a.dq1 + 3.619_974_914_271_678_7e-4).abs() < 1e-15);
        assert!((a.dq2 - 7.239_949_828_543_357e-4).abs() < 1e-15);
        assert!((a.spread_rate - 1.451_823_04e-3).abs() < 1e-11);
        assert!((a.dq1 + a.dq2 - a.lift_rate).abs() < 1e-15);
        assert!(a.delta.re == 0.0 && a.delta.im > 0.0);
        assert!(a.zv < 0.0 && a.zv > a.zeq);
        assert!(a.nv <= a.neq);
        assert!((a.zbar - 0.353_517_909_831_859_5).abs() < 1e-14);
    }

    #[test]
    fn boundary_machine_spreads_without_drift() {
        let m = MachineParams::new(1.0, 2.0, 1.0, 2.0, 0.01, 0.01).unwrap();
        let a = asymptotic_solution(&m, 1.0).unwrap();
        assert_eq!(a.lift_rate, 0.0);
        assert_eq!(a.dq1, 0.0);
        assert_eq!(a.dq2, 0.0);
        assert!((a.spread_rate - a.rates.alpha * a.neq).abs() < 1e-18);
        assert!(matches!(break_even_energy(&m, 1.0), Err(Error::InfiniteBreakEven)));
    }

    #[test]
    fn unequal_rates_unsupported() {
        let m = engine().with_bath2_rate(0.02).unwrap();
        assert!(matches!(asymptotic_solution(&m, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn break_even_example() {
        let e = break_even_energy(&engine(), 1.0).unwrap();
        assert!((e - 4.010_588_666_788_162).abs() < 1e-12);
        let vq = engine().virtual_qubit();
        let coth = 1.0 / (vq.ev * vq.beta_v / 2.0).tanh();
        assert!((vq.neq / vq.zeq - coth).abs() < 1e-12);
    }

    #[test]
    fn efficiency_examples() {
        let e = efficiency(MachineKind::HeatEngine, 1.0, 2.0, 1.0, 1.0, 4.0, None).unwrap();
        assert_eq!(e.eta_q, 0.5);
        assert_eq!(e.eta_carnot, 0.75);
        assert!((e.correction_factor - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.regime, MachineRegime::HeatEngine);

        let f = efficiency(MachineKind::Refrigerator, 1.0, 2.0, 1.0, 2.0, 1.0, Some(2.0 / 3.0)).unwrap();
        assert!((f.eta_q - 1.0).abs() < 1e-15);
        assert!((f.eta_carnot - 1.0).abs() < 1e-14);
        assert!((f.correction_factor - 1.0).abs() < 1e-14);

        let f = efficiency(MachineKind::Refrigerator, 1.0, 2.0, 1.0, 2.0, 1.0, Some(0.8)).unwrap();
        assert!((f.eta_carnot - 2.0).abs() < 1e-14);
        assert!((f.correction_factor - 0.5).abs() < 1e-14);
        assert!(f.identity_residual < 1e-15);
    }

    #[test]
    fn efficiency_errors() {
        // fridge with T1 <= T2 has no positive Carnot efficiency
        assert!(matches!(
            efficiency(MachineKind::Refrigerator, 1.0, 2.0, 1.0, 1.0, 2.0, Some(0.5)),
            Err(Error::Regime(_))
        ));
        assert!(efficiency(MachineKind::HeatPump, 1.0, 2.0, 1.0, 1.0, 1.5, None).is_err());
        assert!(matches!(
            efficiency(MachineKind::HeatEngine, 1.0, 2.0, 1.5, 1.0, 4.0, None),
            Err(Error::NotResonant { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let bv = 1.5;
        let carnot = entropy_rates(MachineKind::Refrigerator, 1.0, Some(1.0 / bv), bv).unwrap();
        assert_eq!(carnot.delta_s, 0.0);
        assert!(carnot.second_law_ok);
        let eng = entropy_rates(MachineKind::HeatEngine, 1.0, None, -0.5).unwrap();
        assert_eq!(eng.delta_s, 0.5);
        let fr = entropy_rates(MachineKind::Refrigerator, 1.0, Some(0.8), bv).unwrap();
        assert!((fr.delta_s - 0.25).abs() < 1e-15);
        assert!(entropy_rates(MachineKind::HeatPump, 1.0, None, 0.5).is_err());
        assert_eq!(entropy_equality_check(1.0, 2.0, 1.0, 1.0, 2.0, 1.0).unwrap(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bookkeeping_and_ratios(
            e1 in 0.2f64..5.0, de in 0.1f64..5.0, t1 in 0.1f64..10.0, t2 in 0.1f64..10.0,
            g in 1e-3f64..0.1, p in 1e-3f64..0.1, ew in 0.1f64..3.0,
        ) {
            let m = MachineParams::new(e1, e1 + de, t1, t2, g, p).unwrap();
            let a = asymptotic_solution(&m, ew).unwrap();
            // the identity is exact only when Ew matches the virtual gap
            let b = asymptotic_solution(&m, m.virtual_gap()).unwrap();
            prop_assert!((b.dq1 + b.dq2 - b.lift_rate).abs() <= 1e-15);
            prop_assert!((a.dq1.abs() * m.e2 - a.dq2.abs() * m.e1).abs() <= 1e-14 * a.dq2.abs() * m.e1);
            let ratio = a.rates.beta / a.rates.alpha;
            prop_assert!(ratio > 0.0 && ratio < 1.0);
            prop_assert!(a.spread_rate > 0.0);
        }

        #[test]
        fn sign_coherence(
            e1 in 0.2f64..5.0, de in 0.1f64..5.0, t1 in 0.1f64..10.0, t2 in 0.1f64..10.0,
        ) {
            let m = MachineParams::new(e1, e1 + de, t1, t2, 0.01, 0.01).unwrap();
            let a = asymptotic_solution(&m, 1.0).unwrap();
            let vq = m.virtual_qubit();
            let engine = crate::machine::classify_regime(&m) == MachineRegime::HeatEngine;
            prop_assert_eq!(engine, a.lift_rate > 0.0);
            prop_assert_eq!(engine, vq.zeq < 0.0);
            prop_assert_eq!(engine, vq.beta_v < 0.0);
        }

        #[test]
        fn break_even_is_self_intersection(
            e1 in 0.2f64..5.0, de in 0.1f64..5.0, t1 in 0.1f64..5.0, ratio in 1.05f64..20.0,
            g in 1e-3f64..0.1, p in 1e-3f64..0.1, ew in 0.1f64..3.0,
        ) {
            let e2 = e1 + de;
            let t2 = e2 / e1 * t1 * ratio;
            let m = MachineParams::new(e1, e2, t1, t2, g, p).unwrap();
            let a = asymptotic_solution(&m, ew).unwrap();
            // mean = lift·t and std = sqrt(spread·t) meet at t = spread/lift²
            let t_be = a.spread_rate / (a.lift_rate * a.lift_rate);
            let mean = a.lift_rate * t_be;
            let std = (a.spread_rate * t_be).sqrt();
            let be = break_even_energy(&m, ew).unwrap();
            prop_assert!(be > 0.0);
            prop_assert!((mean - be).abs() <= 1e-10 * be);
            prop_assert!((std - be).abs() <= 1e-10 * be);
        }

        #[test]
        fn break_even_grows_towards_infinite_virtual_temperature(
            t2 in 0.5f64..10.0, r in 1.01f64..5.0, dr in 0.001f64..1.0,
        ) {
            // raising T1 towards E1·T2/E2 sends beta_v to 0 from below and shrinks |Zeq|
            let edge = 0.5 * t2;
            let near = MachineParams::new(1.0, 2.0, edge / (r + dr), t2, 0.02, 0.03).unwrap();
            let far = MachineParams::new(1.0, 2.0, edge / r, t2, 0.02, 0.03).unwrap();
            let (vn, vf) = (near.virtual_qubit(), far.virtual_qubit());
            prop_assert!(vn.beta_v < vf.beta_v && vf.beta_v < 0.0);
            prop_assert!(vf.zeq.abs() < vn.zeq.abs());
            prop_assert!(break_even_energy(&far, 1.0).unwrap() > break_even_energy(&near, 1.0).unwrap());
        }

        #[test]
        fn entropy_equality_holds(
            e1 in 0.2f64..5.0, de in 0.1f64..5.0, t1 in 0.1f64..10.0, t2 in 0.1f64..10.0,
            q in 0.1f64..10.0,
        ) {
            let r = entropy_equality_check(e1, e1 + de, de, t1, t2, q).unwrap();
            prop_assert!(r.abs() <= 1e-12);
        }
    }
}

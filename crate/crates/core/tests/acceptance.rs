//! Acceptance checks: one PASS/FAIL line per criterion, with pinned
//! tolerances and wall-clock budgets.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqtherm_core::scenario::{
    sweep_t2, validate_breakeven, validate_engine, RunStatus, ScenarioConfig, ValidationReport,
};
use vqtherm_core::{
    assemble_liouvillian, asymptotic_solution, break_even_energy, efficiency, entropy_equality_check,
    entropy_rates, evolve, predicted_stationary, stationary_state, DensityMatrix, IntegrationConfig,
    MachineKind, MachineParams, MachineRegime, Method, TargetSystem, VirtualQubit,
};

fn report(id: u32, title: &str, pass: bool, detail: &str, elapsed: Duration, budget: Duration) -> bool {
    let within = elapsed <= budget;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} {verdict}: {title}; {detail}; {:.2?} (budget {:.0?})",
        elapsed, budget
    );
    pass && within
}

fn kinds() -> [MachineKind; 3] {
    [MachineKind::Refrigerator, MachineKind::HeatPump, MachineKind::HeatEngine]
}

/// Energies and temperatures placing the machine strictly inside `kind`.
fn random_machine(rng: &mut ChaCha8Rng, kind: MachineKind) -> (f64, f64, f64, f64) {
    let e1 = rng.random_range(0.5..1.5);
    let e2 = e1 + rng.random_range(0.5..1.5);
    let t1 = rng.random_range(0.5..2.0);
    let ratio = e2 / e1;
    let t2 = match kind {
        MachineKind::Refrigerator => t1 * rng.random_range(0.3..0.9),
        MachineKind::HeatPump => t1 * (1.0 + (ratio - 1.0) * rng.random_range(0.1..0.9)),
        MachineKind::HeatEngine => t1 * ratio * rng.random_range(1.2..3.0),
    };
    (e1, e2, t1, t2)
}

fn regime_of(kind: MachineKind) -> MachineRegime {
    match kind {
        MachineKind::Refrigerator => MachineRegime::Refrigerator,
        MachineKind::HeatPump => MachineRegime::HeatPump,
        MachineKind::HeatEngine => MachineRegime::HeatEngine,
    }
}

/// Exponential stepping long enough to damp the slowest target mode far
/// below 1e-6; ladder relaxation slows roughly as `levels²`.
fn relaxation_run(m: &MachineParams, levels: usize) -> IntegrationConfig {
    let a = asymptotic_solution(m, m.virtual_gap()).unwrap();
    let t_end = 15.0 * (levels * levels) as f64 / (a.rates.alpha * a.neq);
    IntegrationConfig::new(t_end, t_end / 400.0)
        .with_method(Method::Exponential)
        .with_record_every(400)
}

#[test]
fn criterion_01_stationary_theorem() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_residual, mut worst_distance) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let kind = kinds()[i % 3];
        let (e1, e2, t1, t2) = random_machine(&mut rng, kind);
        let g = rng.random_range(0.02..0.08);
        let p = rng.random_range(0.02..0.08);
        let m = MachineParams::new(e1, e2, t1, t2, g, p).unwrap();
        let t = TargetSystem::isolated_qubit(e2 - e1);
        let l = assemble_liouvillian(&m, &t).unwrap();
        let want = predicted_stationary(&m, &t).unwrap();
        worst_residual = worst_residual.max(l.generator.apply(want.matrix()).norm());
        let rho0 = DensityMatrix::basis_state(l.dim(), 0).unwrap();
        let tr = evolve(&l, &rho0, &relaxation_run(&m, 2)).unwrap();
        worst_distance = worst_distance.max(tr.final_state.trace_distance(&want));
    }
    let pass = worst_residual <= 1e-10 && worst_distance <= 1e-6;
    let detail = format!("max residual {worst_residual:.2e} (<= 1e-10), max trace distance {worst_distance:.2e} (<= 1e-6)");
    assert!(report(1, "stationary state of 20 random machines", pass, &detail, start.elapsed(), Duration::from_secs(10)));
}

#[test]
fn criterion_02_inverse_boltzmann_ladders() {
    let start = Instant::now();
    let m = MachineParams::new(1.0, 2.0, 1.0, 4.0, 0.05, 0.05).unwrap();
    let mut worst = 0.0f64;
    for levels in [3, 4, 5] {
        // geometric weights e^{n·Ev/2} at T_v = −2, Ev = 1
        let w: Vec<f64> = (0..levels).map(|n| (n as f64 / 2.0).exp()).collect();
        let z: f64 = w.iter().sum();
        let want: Vec<f64> = w.iter().map(|x| x / z).collect();
        let t = TargetSystem::Ladder { levels, e3: 1.0 };
        let l = assemble_liouvillian(&m, &t).unwrap();
        let dims = l.layout.dims();
        let solved = stationary_state(&l.generator).unwrap().state;
        let rho0 = DensityMatrix::basis_state(l.dim(), 0).unwrap();
        let evolved = evolve(&l, &rho0, &relaxation_run(&m, levels)).unwrap().final_state;
        for rho in [solved, evolved] {
            let got = rho.partial_trace_keep(&dims, 2).populations();
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
        }
    }
    let pass = worst <= 1e-6;
    let detail = format!("max population error {worst:.2e} (<= 1e-6)");
    assert!(report(2, "ladders N = 3, 4, 5 at T_v = -2", pass, &detail, start.elapsed(), Duration::from_secs(30)));
}

const ENGINE_RUN: &str = r#"
mode = "validate"
[machine]
E1 = 1.0
E2 = 2.0
T1 = 1.0
T2 = 4.0
g = 0.01
p = 0.01
[target]
kind = "weight"
Ew = 1.0
n_min = -30
n_max = 30
n0 = 0
[integration]
t_end = 5000.0
dt = 0.5
"#;

/// The shared engine run and how long it took.
fn engine_run() -> &'static (ValidationReport, Duration) {
    static RUN: OnceLock<(ValidationReport, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let cfg = ScenarioConfig::from_toml_str(ENGINE_RUN).unwrap();
        let r = validate_engine(&cfg).unwrap();
        (r, start.elapsed())
    })
}

fn engine_rows(names: &[&str]) -> (bool, String) {
    let (r, _) = engine_run();
    assert!(r.notes.is_empty(), "{:?}", r.notes);
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let row = r.row(name).unwrap_or_else(|| panic!("no row {name}"));
        pass &= row.pass;
        parts.push(format!(
            "{name} {:.5e} vs {:.5e} err {:.2e} (<= {:.0e})",
            row.numeric, row.analytic, row.error, row.tolerance
        ));
    }
    (pass, parts.join(", "))
}

#[test]
fn criterion_03_lift_rate() {
    let (_, took) = engine_run();
    let (pass, detail) = engine_rows(&["lift_rate"]);
    let a = asymptotic_solution(&MachineParams::new(1.0, 2.0, 1.0, 4.0, 0.01, 0.01).unwrap(), 1.0).unwrap();
    let pass = pass && (a.lift_rate - 3.620e-4).abs() < 5e-8;
    assert!(report(3, "engine lift rate", pass, &detail, *took, Duration::from_secs(120)));
}

#[test]
fn criterion_04_spread_rate() {
    let (_, took) = engine_run();
    let (pass, detail) = engine_rows(&["spread_rate"]);
    assert!(report(4, "engine spread rate", pass, &detail, *took, Duration::from_secs(120)));
}

#[test]
fn criterion_05_heat_currents() {
    let (_, took) = engine_run();
    let (pass, detail) = engine_rows(&["dq1", "dq2", "heat_balance"]);
    assert!(report(5, "engine heat currents", pass, &detail, *took, Duration::from_secs(120)));
}

#[test]
fn criterion_06_machine_expectations() {
    let (_, took) = engine_run();
    let (pass, detail) = engine_rows(&["zv", "nv", "zbar", "gamma1", "gamma2"]);
    assert!(report(6, "asymptotic machine expectations", pass, &detail, *took, Duration::from_secs(120)));
}

#[test]
fn criterion_07_efficiency_factorization() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut worst_at_tv) = (0.0f64, 0.0f64);
    for kind in kinds() {
        for _ in 0..1000 {
            let (e1, e2, t1, t2) = random_machine(&mut rng, kind);
            let tv = VirtualQubit::new(e1, e2, t1, t2).unwrap().temperature();
            // a target temperature the machine can act on
            let t3 = match kind {
                MachineKind::Refrigerator => Some(tv.unwrap() + (t2 - tv.unwrap()) * rng.random_range(0.05..0.95)),
                MachineKind::HeatPump => Some(t1.max(t2) + (tv.unwrap() - t1.max(t2)) * rng.random_range(0.05..0.95)),
                MachineKind::HeatEngine => None,
            };
            let r = efficiency(kind, e1, e2, e2 - e1, t1, t2, t3).unwrap();
            assert_eq!(r.regime, regime_of(kind));
            worst = worst.max(r.identity_residual);
            if kind != MachineKind::HeatEngine {
                let at_tv = efficiency(kind, e1, e2, e2 - e1, t1, t2, tv).unwrap();
                worst_at_tv = worst_at_tv.max((at_tv.correction_factor - 1.0).abs());
            }
        }
    }
    let pass = worst <= 1e-12 && worst_at_tv <= 1e-12;
    let detail = format!("max relative residual {worst:.2e} (<= 1e-12), max |correction - 1| at T3 = T_v {worst_at_tv:.2e} (<= 1e-12)");
    assert!(report(7, "efficiency = Carnot x correction", pass, &detail, start.elapsed(), Duration::from_secs(1)));
}

#[test]
fn criterion_08_entropy_equality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut second_law = true;
    for kind in kinds() {
        for _ in 0..1000 {
            let (e1, e2, t1, t2) = random_machine(&mut rng, kind);
            let q = rng.random_range(0.1..1.0);
            worst = worst.max(entropy_equality_check(e1, e2, e2 - e1, t1, t2, q).unwrap().abs());
            let bv = VirtualQubit::new(e1, e2, t1, t2).unwrap().beta_v;
            let q3 = q * (e2 - e1);
            let t3 = match kind {
                MachineKind::Refrigerator => Some(1.0 / bv + (t2 - 1.0 / bv) * rng.random_range(0.05..0.95)),
                MachineKind::HeatPump => Some(t1.max(t2) + (1.0 / bv - t1.max(t2)) * rng.random_range(0.05..0.95)),
                MachineKind::HeatEngine => None,
            };
            let inside = entropy_rates(kind, q3, t3, bv).unwrap();
            second_law &= inside.second_law_ok && inside.delta_s > 0.0;
            if kind != MachineKind::HeatEngine {
                let at_tv = entropy_rates(kind, q3, Some(1.0 / bv), bv).unwrap();
                second_law &= at_tv.second_law_ok && at_tv.delta_s.abs() <= 1e-12;
            }
        }
    }
    let pass = worst <= 1e-12 && second_law;
    let detail = format!("max residual {worst:.2e} (<= 1e-12), entropy production >= 0 with equality at T3 = T_v: {second_law}");
    assert!(report(8, "entropy equality and second law", pass, &detail, start.elapsed(), Duration::from_secs(1)));
}

const BREAK_EVEN_RUN: &str = r#"
mode = "breakeven"
[machine]
E1 = 1.0
E2 = 2.0
T1 = 1.0
T2 = 4.0
g = 0.01
p = 0.01
[target]
kind = "weight"
Ew = 1.0
n_min = -24
n_max = 39
n0 = 0
"#;

#[test]
fn criterion_09_break_even_energy() {
    let start = Instant::now();
    let m = MachineParams::new(1.0, 2.0, 1.0, 4.0, 0.01, 0.01).unwrap();
    let formula = break_even_energy(&m, 1.0).unwrap();
    let cfg = ScenarioConfig::from_toml_str(BREAK_EVEN_RUN).unwrap();
    let r = validate_breakeven(&cfg).unwrap();
    let row = r.row("break_even_energy").unwrap_or_else(|| panic!("{:?} {:?}", r.status, r.notes));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let (e1, e2, t1, t2) = random_machine(&mut rng, kinds()[i % 3]);
        let vq = VirtualQubit::new(e1, e2, t1, t2).unwrap();
        let coth = 1.0 / (vq.ev * vq.beta_v / 2.0).tanh();
        worst = worst.max((vq.neq / vq.zeq - coth).abs() / coth.abs());
    }
    let pass = (formula - 4.0106).abs() < 5e-5 && r.status == RunStatus::Pass && row.pass && worst <= 1e-12;
    let detail = format!(
        "formula {formula:.5}, simulated {:.5} err {:.2e} (<= 5e-2), max N/Z vs coth {worst:.2e} (<= 1e-12)",
        row.numeric, row.error
    );
    assert!(report(9, "break-even energy", pass, &detail, start.elapsed(), Duration::from_secs(120)));
}

#[test]
fn criterion_10_regime_map() {
    let start = Instant::now();
    use MachineRegime::*;
    let rows = sweep_t2(1.0, 2.0, 1.0, 0.5, 4.0, 8).unwrap();
    let regimes: Vec<MachineRegime> = rows.iter().map(|r| r.regime).collect();
    let mut pass = regimes
        == [Refrigerator, ReversibleBoundary, HeatPump, EngineBoundary, HeatEngine, HeatEngine, HeatEngine, HeatEngine];
    pass &= rows[1].t2 == 1.0 && rows[3].t2 == 2.0 && rows[3].beta_v == 0.0 && rows[3].t_v.is_none();
    pass &= (rows[7].t_v.unwrap() + 2.0).abs() < 1e-12;
    // either side of T2 = 2: T_v large and positive below, large and negative above
    let fine = sweep_t2(1.0, 2.0, 1.0, 1.99, 2.01, 201).unwrap();
    for w in fine.windows(2) {
        pass &= w[1].beta_v < w[0].beta_v && (w[1].beta_v - w[0].beta_v).abs() < 1e-3;
    }
    let below = fine.iter().rev().find(|r| r.t2 < 2.0).unwrap();
    let above = fine.iter().find(|r| r.t2 > 2.0).unwrap();
    pass &= below.t_v.unwrap() > 1e3 && above.t_v.unwrap() < -1e3;
    pass &= below.regime == HeatPump && above.regime == HeatEngine;
    let detail = "transitions at T2 = 1 and T2 = 2, T_v -> +inf below 2 and -inf above".to_string();
    assert!(report(10, "regime map over T2", pass, &detail, start.elapsed(), Duration::from_secs(1)));
}

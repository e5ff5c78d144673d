//! Simulation and closed-form analytics for the smallest self-contained
//! quantum thermal machines.
//!
//! Two machine qubits, each reset towards the thermal state of its own bath,
//! are coupled resonantly to a target system: a qubit, a finite equi-spaced
//! ladder, or a truncated weight. The pair of bath temperatures is seen by the
//! target through a single *virtual qubit* (the `|1⟩₁|0⟩₂`, `|0⟩₁|1⟩₂`
//! subspace) whose inverse temperature sets the regime the machine runs in.
//!
//! Units are ħ = k_B = 1. Temperatures are carried internally as inverse
//! temperatures so that infinite and negative virtual temperatures need no
//! special casing.
//!
//! Module map:
//!
//! - [`machine`]: parameters, virtual-qubit algebra, regime classification.
//! - [`liouvillian`]: Hamiltonians, reset dissipators and the sparse
//!   master-equation generator.
//! - [`dynamics`]: time evolution, observable traces, stationary states.
//! - [`analytics`]: asymptotic engine solution, break-even energy,
//!   efficiencies and entropy flows.
//! - [`scenario`]: configuration-driven runs, sweeps and validation reports.

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod liouvillian;
pub mod machine;
pub mod scenario;
mod sparse;
pub mod state;

pub use analytics::{
    asymptotic_solution, break_even_energy, efficiency, entropy_equality_check, entropy_rates,
    rate_constants, AsymptoticSolution, EfficiencyReport, EntropyFlow, MachineKind, RateConstants,
};
pub use dynamics::{
    convergence_check, evolve, heat_current, predicted_stationary, stationary_state,
    ConvergenceReport, ConvergenceTarget, IntegrationConfig, Method, ObservableRecord,
    ObservableTrace, StationaryResult,
};
pub use error::{Error, Result};
pub use liouvillian::{
    assemble_liouvillian, build_free_hamiltonian, build_interaction, build_observable,
    build_reset_dissipator, Factor, Layout, Liouvillian, Observable, Superoperator,
};
pub use machine::{
    classify_regime, equilibrium_bias, equilibrium_norm, regime_boundaries,
    thermal_qubit_state, virtual_temperature, MachineParams, MachineRegime, TargetBath,
    TargetSystem, VirtualQubit,
};
pub use scenario::{
    run_scenario, Format, Mode, RunStatus, ScenarioConfig, ScenarioOutput, SweepRow, ValidationReport,
    ValidationRow,
};
pub use state::{CMatrix, DensityMatrix, OperatorLabel, OperatorMatrix};

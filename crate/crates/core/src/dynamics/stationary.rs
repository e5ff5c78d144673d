use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liouvillian::{unvec, vec_row_major, Superoperator, MAX_DENSE_DIM};
use crate::machine::{ladder_thermal_populations, MachineParams, TargetSystem};
use crate::state::{hermitize, CMatrix, DensityMatrix};

/// Singular values below `NULL_THRESHOLD·σ_max` count towards the null space.
pub const NULL_THRESHOLD: f64 = 1e-9;
/// Largest accepted `‖L·vec(ρ)‖₂` for a stationary state.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub state: DensityMatrix,
    /// `‖L·vec(state)‖₂`.
    pub residual: f64,
    pub nullspace_dim_estimate: usize,
    pub smallest_singular_value: f64,
}

/// Trace-normalized, Hermitian, positive semidefinite version of `m`.
fn to_density(m: &CMatrix) -> Option<CMatrix> {
    let tr = m.trace();
    if tr.norm() < 1e-12 {
        return None;
    }
    let h = hermitize(&(m / tr));
    let eig = SymmetricEigen::new(h);
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let total: f64 = clamped.iter().sum();
    let d = CMatrix::from_diagonal(&clamped.map(|v| Complex64::new(v / total, 0.0)));
    Some(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Null vector of a dense generator, as a density matrix.
pub fn stationary_state(l: &Superoperator) -> Result<StationaryResult> {
    let d = l.dim();
    if d > MAX_DENSE_DIM {
        return Err(Error::DimensionCap {
            dim: d,
            cap: MAX_DENSE_DIM,
            context: "stationary solve",
        });
    }
    let dense = l.to_dense()?;
    let svd = dense.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NumericalGuard("singular value decomposition failed".into()))?;
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let s_max = sigma.iter().copied().fold(0.0, f64::max);
    let null: Vec<usize> = (0..sigma.len())
        .filter(|&i| sigma[i] <= NULL_THRESHOLD * s_max)
        .collect();
    let smallest = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    // right singular vector i is the conjugate of row i of Vᴴ
    let candidate = |i: usize| -> CMatrix {
        let v: Vec<Complex64> = v_t.row(i).iter().map(|z| z.conj()).collect();
        unvec(&v, d)
    };
    match null.len() {
        0 => Err(Error::NumericalGuard(format!(
            "generator has no null vector (smallest singular value {smallest:e})"
        ))),
        1 => {
            let m = to_density(&candidate(null[0])).ok_or_else(|| {
                Error::NumericalGuard("null vector has zero trace".into())
            })?;
            let residual = l
                .apply_vec(&vec_row_major(&m))
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            if residual > RESIDUAL_TOL {
                return Err(Error::NumericalGuard(format!(
                    "stationary residual {residual:e} exceeds {RESIDUAL_TOL:e}"
                )));
            }
            Ok(StationaryResult {
                state: DensityMatrix::from_matrix_unchecked(m),
                residual,
                nullspace_dim_estimate: 1,
                smallest_singular_value: smallest,
            })
        }
        k => {
            let mut small: Vec<f64> = null.iter().map(|&i| sigma[i]).collect();
            small.sort_by(f64::total_cmp);
            Err(Error::AmbiguousStationary {
                dim: k,
                singular_values: small,
                candidates: null.iter().filter_map(|&i| to_density(&candidate(i))).collect(),
            })
        }
    }
}

/// `τ₁ ⊗ τ₂ ⊗ τ_v`: the target thermalized at the machine's virtual
/// temperature. A vanishing `beta_v` gives the uniform state.
pub fn predicted_stationary(m: &MachineParams, t: &TargetSystem) -> Result<DensityMatrix> {
    m.validate()?;
    t.validate()?;
    t.check_resonance(m)?;
    if t.is_weight() {
        return Err(Error::Unsupported(
            "a driven weight has no stationary state".into(),
        ));
    }
    if t.bath().is_some() {
        return Err(Error::Unsupported(
            "a target with its own bath has no closed-form stationary state".into(),
        ));
    }
    let beta_v = m.virtual_qubit().beta_v;
    let pops = ladder_thermal_populations(t.dim(), t.spacing(), beta_v);
    let target = DensityMatrix::from_populations(&pops)?;
    Ok(m.thermal_state(1).kron(&m.thermal_state(2)).kron(&target))
}

//! Dense density matrices and labelled operators.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = hermiticity_error(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, not 1")));
        }
        let min_ev = hermitian_eigenvalues(&m)[0];
        if min_ev < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(DensityMatrix(m))
    }

    /// Wraps `m` without checking the invariants.
    pub fn from_matrix_unchecked(m: CMatrix) -> Self {
        DensityMatrix(m)
    }

    pub fn from_populations(pops: &[f64]) -> Result<Self> {
        let d = pops.len();
        let m = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(pops[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        DensityMatrix::new(m)
    }

    /// `|index⟩⟨index|` in a `dim`-dimensional space.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::param("index", format!("{index} out of range for dimension {dim}")));
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix(m))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(CMatrix::identity(dim, dim).unscale(dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(kron(&self.0, &other.0))
    }

    /// `tr(ρ O)`.
    pub fn expect(&self, op: &CMatrix) -> Complex64 {
        (&self.0 * op).trace()
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.0 - &other.0;
        0.5 * hermitian_eigenvalues(&diff)
            .iter()
            .map(|e| e.abs())
            .sum::<f64>()
    }

    /// Reduced state of factor `keep` in a tensor product with factor
    /// dimensions `dims`.
    pub fn partial_trace_keep(&self, dims: &[usize], keep: usize) -> DensityMatrix {
        let d_keep = dims[keep];
        let inner: usize = dims[keep + 1..].iter().product();
        let outer: usize = dims[..keep].iter().product();
        let mut out = CMatrix::zeros(d_keep, d_keep);
        for i in 0..d_keep {
            for j in 0..d_keep {
                let mut acc = Complex64::new(0.0, 0.0);
                for o in 0..outer {
                    for r in 0..inner {
                        let a = (o * d_keep + i) * inner + r;
                        let b = (o * d_keep + j) * inner + r;
                        acc += self.0[(a, b)];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        DensityMatrix(out)
    }
}

/// Semantic tag for operators on the full machine-plus-target space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorLabel {
    H0,
    Hint,
    H1,
    H2,
    Zv,
    Nv,
    ZbarV,
    Hw,
    Hw2,
    Gamma1,
    Gamma2,
    Delta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub label: OperatorLabel,
    pub matrix: CMatrix,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_error(&self.matrix) <= tol
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.matrix[(i, j)];
                if v != Complex64::new(0.0, 0.0) {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

//! Hamiltonians, reset dissipators and the master-equation generator
//!
//! ```text
//! dρ/dt = −i[H0 + H_int, ρ] + Σᵢ pᵢ (τᵢ ⊗ trᵢ ρ − ρ)
//! ```
//!
//! Basis order is `|q1⟩ ⊗ |q2⟩ ⊗ |target⟩`, so the full index of
//! `(q1, q2, k)` is `(2·q1 + q2)·d_target + k`. Superoperators act on the
//! row-major vectorization `vec(ρ)[a·D + b] = ρ[a, b]`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::machine::{thermal_qubit_state, MachineParams, TargetSystem};
use crate::sparse::Csr;
use crate::state::{CMatrix, DensityMatrix, OperatorLabel, OperatorMatrix};

/// Largest Hilbert-space dimension for sparse (matrix-free) generators.
pub const MAX_SPARSE_DIM: usize = 256;
/// Largest Hilbert-space dimension for dense `D² × D²` superoperators.
pub const MAX_DENSE_DIM: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tensor factor of the machine-plus-target space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    Qubit1,
    Qubit2,
    Target,
}

impl Factor {
    fn position(self) -> usize {
        match self {
            Factor::Qubit1 => 0,
            Factor::Qubit2 => 1,
            Factor::Target => 2,
        }
    }
}

/// Factor dimensions `[2, 2, d_target]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub target_dim: usize,
}

impl Layout {
    pub fn new(target_dim: usize) -> Self {
        Layout { target_dim }
    }

    pub fn for_target(t: &TargetSystem) -> Self {
        Layout::new(t.dim())
    }

    pub fn dims(&self) -> [usize; 3] {
        [2, 2, self.target_dim]
    }

    pub fn dim(&self) -> usize {
        4 * self.target_dim
    }

    pub fn index(&self, q1: usize, q2: usize, k: usize) -> usize {
        (2 * q1 + q2) * self.target_dim + k
    }

    pub fn split(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.target_dim;
        let m = idx / self.target_dim;
        [m / 2, m % 2, k]
    }

    fn join(&self, parts: [usize; 3]) -> usize {
        self.index(parts[0], parts[1], parts[2])
    }

    fn check_cap(&self, cap: usize, context: &'static str) -> Result<()> {
        if self.dim() > cap {
            return Err(Error::DimensionCap {
                dim: self.dim(),
                cap,
                context,
            });
        }
        Ok(())
    }
}

/// Linear map on row-major vectorized `D × D` matrices, stored sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: Csr,
}

impl Superoperator {
    pub(crate) fn from_triplets(dim: usize, t: Vec<(usize, usize, Complex64)>) -> Self {
        Superoperator {
            dim,
            matrix: Csr::from_triplets(dim * dim, t),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_triplets(dim, Vec::new())
    }

    /// Hilbert-space dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub(crate) fn csr(&self) -> &Csr {
        &self.matrix
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, other.dim);
        Superoperator {
            dim: self.dim,
            matrix: self.matrix.add(&other.matrix),
        }
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; x.len()];
        self.matrix.mul_vec(x, &mut y);
        y
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvec(&self.apply_vec(&vec_row_major(rho)), self.dim)
    }

    /// Explicit `D² × D²` matrix; refused above [`MAX_DENSE_DIM`].
    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.dim > MAX_DENSE_DIM {
            return Err(Error::DimensionCap {
                dim: self.dim,
                cap: MAX_DENSE_DIM,
                context: "dense superoperator assembly",
            });
        }
        Ok(self.matrix.to_dense())
    }

    /// Coefficients `c` with `tr(O · S(ρ)) = Σ_k c_k vec(ρ)_k`.
    pub fn dual_functional(&self, op: &CMatrix) -> Vec<Complex64> {
        // tr(O X) = Σ_ab O_ba X_ab = vec(Oᵀ) · vec(X)
        self.matrix.mul_vec_transpose(&vec_row_major(&op.transpose()))
    }
}

pub fn vec_row_major(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            v.push(m[(a, b)]);
        }
    }
    v
}

pub fn unvec(v: &[Complex64], dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |a, b| v[a * dim + b])
}

/// `ρ ↦ −i[H, ρ]`.
pub fn commutator_superoperator(h: &CMatrix) -> Superoperator {
    let d = h.nrows();
    let mut t = Vec::new();
    for a in 0..d {
        for c in 0..d {
            let v = h[(a, c)];
            if v == ZERO {
                continue;
            }
            // (Hρ)_ab = Σ_c H_ac ρ_cb ; (ρH)_ba = Σ_c ρ_bc H_ca, here with (c, a) roles
            for b in 0..d {
                t.push((a * d + b, c * d + b, -I * v));
                t.push((b * d + c, b * d + a, I * v));
            }
        }
    }
    Superoperator::from_triplets(d, t)
}

fn check_model(m: &MachineParams, t: &TargetSystem) -> Result<Layout> {
    m.validate()?;
    t.validate()?;
    t.check_resonance(m)?;
    let layout = Layout::for_target(t);
    layout.check_cap(MAX_SPARSE_DIM, "generator assembly")?;
    Ok(layout)
}

fn diagonal_operator(layout: &Layout, f: impl Fn([usize; 3]) -> f64) -> CMatrix {
    let d = layout.dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = Complex64::new(f(layout.split(i)), 0.0);
    }
    m
}

/// `H0 = E1|1⟩⟨1|₁ + E2|1⟩⟨1|₂ + Σ_n n·E_target |n⟩⟨n|`; weight levels keep
/// their absolute energies `n·Ew`.
pub fn build_free_hamiltonian(m: &MachineParams, t: &TargetSystem) -> Result<OperatorMatrix> {
    let layout = check_model(m, t)?;
    let matrix = diagonal_operator(&layout, |[q1, q2, k]| {
        m.e1 * q1 as f64 + m.e2 * q2 as f64 + t.level_energy(k)
    });
    Ok(OperatorMatrix {
        label: OperatorLabel::H0,
        matrix,
    })
}

/// `H_int = g Σ_k (|0,1,k⟩⟨1,0,k+1| + h.c.)`, truncated at the target's top
/// level without wraparound.
pub fn build_interaction(m: &MachineParams, t: &TargetSystem) -> Result<OperatorMatrix> {
    let layout = check_model(m, t)?;
    let d = layout.dim();
    let mut matrix = CMatrix::zeros(d, d);
    let g = Complex64::new(m.g, 0.0);
    for k in 0..layout.target_dim.saturating_sub(1) {
        let lower = layout.index(0, 1, k);
        let raised = layout.index(1, 0, k + 1);
        matrix[(lower, raised)] = g;
        matrix[(raised, lower)] = g;
    }
    Ok(OperatorMatrix {
        label: OperatorLabel::Hint,
        matrix,
    })
}

/// `ρ ↦ rate·(τ ⊗ tr_f ρ − ρ)`, with `τ` re-inserted in the slot of `factor`.
pub fn build_reset_dissipator(
    factor: Factor,
    rate: f64,
    tau: &DensityMatrix,
    layout: &Layout,
) -> Result<Superoperator> {
    let pos = factor.position();
    let fdim = layout.dims()[pos];
    if fdim != 2 {
        return Err(Error::NonQubitReset {
            factor: pos + 1,
            dim: fdim,
        });
    }
    if tau.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: tau.dim(),
        });
    }
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::param("rate", format!("must be finite and >= 0, got {rate}")));
    }
    layout.check_cap(MAX_SPARSE_DIM, "reset dissipator")?;
    let d = layout.dim();
    let tau = tau.matrix();
    let rate_c = Complex64::new(rate, 0.0);
    let mut t = Vec::new();
    for a in 0..d {
        let pa = layout.split(a);
        for b in 0..d {
            let pb = layout.split(b);
            let row = a * d + b;
            t.push((row, row, -rate_c));
            let w = tau[(pa[pos], pb[pos])];
            if w == ZERO {
                continue;
            }
            for k in 0..2 {
                let mut ak = pa;
                let mut bk = pb;
                ak[pos] = k;
                bk[pos] = k;
                t.push((row, layout.join(ak) * d + layout.join(bk), rate_c * w));
            }
        }
    }
    Ok(Superoperator::from_triplets(d, t))
}

/// The assembled master equation for one machine and target, with its parts
/// kept for inspection.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub machine: MachineParams,
    pub target: TargetSystem,
    pub layout: Layout,
    pub h0: OperatorMatrix,
    pub hint: OperatorMatrix,
    /// `−i[H0 + H_int, ·]`.
    pub unitary: Superoperator,
    pub dissipators: Vec<(Factor, Superoperator)>,
    pub generator: Superoperator,
}

/// `L = −i[H0 + H_int, ·] + 𝒟₁ + 𝒟₂ (+ 𝒟₃ when the qubit target has a bath)`.
pub fn assemble_liouvillian(m: &MachineParams, t: &TargetSystem) -> Result<Liouvillian> {
    let layout = check_model(m, t)?;
    let h0 = build_free_hamiltonian(m, t)?;
    let hint = build_interaction(m, t)?;
    let unitary = commutator_superoperator(&(&h0.matrix + &hint.matrix));
    let (p1, p2) = m.reset_rates();
    let mut dissipators = vec![
        (
            Factor::Qubit1,
            build_reset_dissipator(Factor::Qubit1, p1, &m.thermal_state(1), &layout)?,
        ),
        (
            Factor::Qubit2,
            build_reset_dissipator(Factor::Qubit2, p2, &m.thermal_state(2), &layout)?,
        ),
    ];
    if let Some(bath) = t.bath() {
        let tau3 = thermal_qubit_state(t.spacing(), bath.t3);
        dissipators.push((
            Factor::Target,
            build_reset_dissipator(Factor::Target, bath.p3, &tau3, &layout)?,
        ));
    }
    let generator = dissipators
        .iter()
        .fold(unitary.clone(), |acc, (_, d)| acc.add(d));
    Ok(Liouvillian {
        machine: *m,
        target: *t,
        layout,
        h0,
        hint,
        unitary,
        dissipators,
        generator,
    })
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn dissipator(&self, factor: Factor) -> Option<&Superoperator> {
        self.dissipators
            .iter()
            .find(|(f, _)| *f == factor)
            .map(|(_, d)| d)
    }

    /// Local free Hamiltonian of `factor`, embedded in the full space.
    pub fn local_hamiltonian(&self, factor: Factor) -> CMatrix {
        let obs = match factor {
            Factor::Qubit1 => Observable::H1,
            Factor::Qubit2 => Observable::H2,
            Factor::Target => Observable::Hw,
        };
        observable_matrix(obs, &self.machine, &self.target, &self.layout)
    }

    pub fn observable(&self, name: Observable) -> OperatorMatrix {
        OperatorMatrix {
            label: name.label(),
            matrix: observable_matrix(name, &self.machine, &self.target, &self.layout),
        }
    }
}

/// Named operators on the full space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    /// Virtual-qubit bias `|10⟩⟨10| − |01⟩⟨01|`.
    Zv,
    /// Virtual-qubit normalization `|10⟩⟨10| + |01⟩⟨01|`.
    Nv,
    /// Anti-virtual-qubit bias `|00⟩⟨00| − |11⟩⟨11|`.
    ZbarV,
    /// Target free Hamiltonian.
    Hw,
    Hw2,
    /// Ground-state projector of machine qubit 1.
    Gamma1,
    Gamma2,
    /// Transition asymmetry; `tr(ρ Δ)` is purely imaginary for Hermitian ρ.
    Delta,
    H1,
    H2,
    H0,
    Hint,
}

impl Observable {
    pub const ALL: [Observable; 12] = [
        Observable::Zv,
        Observable::Nv,
        Observable::ZbarV,
        Observable::Hw,
        Observable::Hw2,
        Observable::Gamma1,
        Observable::Gamma2,
        Observable::Delta,
        Observable::H1,
        Observable::H2,
        Observable::H0,
        Observable::Hint,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Zv => "Zv",
            Observable::Nv => "Nv",
            Observable::ZbarV => "Zbar_v",
            Observable::Hw => "Hw",
            Observable::Hw2 => "Hw2",
            Observable::Gamma1 => "Gamma1",
            Observable::Gamma2 => "Gamma2",
            Observable::Delta => "Delta",
            Observable::H1 => "H1",
            Observable::H2 => "H2",
            Observable::H0 => "H0",
            Observable::Hint => "Hint",
        }
    }

    fn label(&self) -> OperatorLabel {
        match self {
            Observable::Zv => OperatorLabel::Zv,
            Observable::Nv => OperatorLabel::Nv,
            Observable::ZbarV => OperatorLabel::ZbarV,
            Observable::Hw => OperatorLabel::Hw,
            Observable::Hw2 => OperatorLabel::Hw2,
            Observable::Gamma1 => OperatorLabel::Gamma1,
            Observable::Gamma2 => OperatorLabel::Gamma2,
            Observable::Delta => OperatorLabel::Delta,
            Observable::H1 => OperatorLabel::H1,
            Observable::H2 => OperatorLabel::H2,
            Observable::H0 => OperatorLabel::H0,
            Observable::Hint => OperatorLabel::Hint,
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .iter()
            .copied()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::UnknownObservable(s.to_string()))
    }
}

fn observable_matrix(
    name: Observable,
    m: &MachineParams,
    t: &TargetSystem,
    layout: &Layout,
) -> CMatrix {
    let machine_diag = |f: fn(usize, usize) -> f64| diagonal_operator(layout, |[q1, q2, _]| f(q1, q2));
    match name {
        Observable::Zv => machine_diag(|q1, q2| match (q1, q2) {
            (1, 0) => 1.0,
            (0, 1) => -1.0,
            _ => 0.0,
        }),
        Observable::Nv => machine_diag(|q1, q2| (q1 != q2) as u8 as f64),
        Observable::ZbarV => machine_diag(|q1, q2| match (q1, q2) {
            (0, 0) => 1.0,
            (1, 1) => -1.0,
            _ => 0.0,
        }),
        Observable::Gamma1 => machine_diag(|q1, _| (q1 == 0) as u8 as f64),
        Observable::Gamma2 => machine_diag(|_, q2| (q2 == 0) as u8 as f64),
        Observable::H1 => diagonal_operator(layout, |[q1, _, _]| m.e1 * q1 as f64),
        Observable::H2 => diagonal_operator(layout, |[_, q2, _]| m.e2 * q2 as f64),
        Observable::Hw => diagonal_operator(layout, |[_, _, k]| t.level_energy(k)),
        Observable::Hw2 => diagonal_operator(layout, |[_, _, k]| t.level_energy(k).powi(2)),
        Observable::H0 => diagonal_operator(layout, |[q1, q2, k]| {
            m.e1 * q1 as f64 + m.e2 * q2 as f64 + t.level_energy(k)
        }),
        Observable::Hint => {
            let d = layout.dim();
            let mut op = CMatrix::zeros(d, d);
            for k in 0..layout.target_dim.saturating_sub(1) {
                let lo = layout.index(0, 1, k);
                let hi = layout.index(1, 0, k + 1);
                op[(lo, hi)] = Complex64::new(m.g, 0.0);
                op[(hi, lo)] = Complex64::new(m.g, 0.0);
            }
            op
        }
        Observable::Delta => {
            let d = layout.dim();
            let mut op = CMatrix::zeros(d, d);
            for k in 0..layout.target_dim.saturating_sub(1) {
                let lo = layout.index(0, 1, k);
                let hi = layout.index(1, 0, k + 1);
                // tr(ρ op) = Σ_k ⟨01k|ρ|10,k+1⟩ − ⟨10,k+1|ρ|01k⟩
                op[(hi, lo)] = ONE;
                op[(lo, hi)] = -ONE;
            }
            op
        }
    }
}

/// Named operator on the full space of machine `m` with target `t`.
pub fn build_observable(
    name: Observable,
    m: &MachineParams,
    t: &TargetSystem,
) -> Result<OperatorMatrix> {
    let layout = check_model(m, t)?;
    Ok(OperatorMatrix {
        label: name.label(),
        matrix: observable_matrix(name, m, t, &layout),
    })
}

use num_complex::Complex64;

use super::{IntegrationConfig, Method, ObservableRecord, ObservableTrace, EDGE_THRESHOLD, EVOLUTION_TOL, RK4_GUARD};
use crate::error::{Error, Result};
use crate::liouvillian::{vec_row_major, Factor, Liouvillian, Observable};
use crate::machine::{MachineParams, TargetSystem};
use crate::sparse::Csr;
use crate::state::{hermitian_eigenvalues, CMatrix, DensityMatrix};

/// Largest evolved block for which exponential stepping builds a dense
/// propagator.
const MAX_EXPONENTIAL_BLOCK: usize = 1024;
/// Largest Hilbert-space dimension for which every sample is checked for
/// positivity; above it only the final state is.
const PSD_EVERY_SAMPLE_DIM: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Machine qubits at their bath temperatures; target in its ground level, or
/// in `|n0⟩` for a weight.
pub fn initial_state(m: &MachineParams, t: &TargetSystem) -> Result<DensityMatrix> {
    m.validate()?;
    t.validate()?;
    let k = match *t {
        TargetSystem::Weight { n_min, n0, .. } => (n0 - n_min) as usize,
        _ => 0,
    };
    let target = DensityMatrix::basis_state(t.dim(), k)?;
    Ok(m.thermal_state(1).kron(&m.thermal_state(2)).kron(&target))
}

/// Sparse linear functional `x ↦ Σ c_k x_k` on the evolved block.
struct Probe(Vec<(usize, Complex64)>);

impl Probe {
    fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.0.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

/// The part of the generator that a given initial state can ever reach.
struct Block {
    dim: usize,
    keep: Vec<usize>,
    /// Position of `(b, a)` for the element at `(a, b)`, if evolved.
    partner: Vec<Option<usize>>,
    diagonal: Vec<usize>,
    op: Csr,
}

impl Block {
    fn new(l: &Liouvillian, rho0: &CMatrix) -> Self {
        let dim = l.dim();
        let full = vec_row_major(rho0);
        let seeds: Vec<usize> = (0..full.len()).filter(|&i| full[i] != ZERO).collect();
        let keep = l.generator.csr().reachable_from(&seeds);
        let mut pos = vec![usize::MAX; dim * dim];
        for (r, &i) in keep.iter().enumerate() {
            pos[i] = r;
        }
        let partner = keep
            .iter()
            .map(|&i| {
                let (a, b) = (i / dim, i % dim);
                let j = pos[b * dim + a];
                (j != usize::MAX).then_some(j)
            })
            .collect();
        let diagonal = keep
            .iter()
            .enumerate()
            .filter(|&(_, &i)| i / dim == i % dim)
            .map(|(r, _)| r)
            .collect();
        let op = l.generator.csr().restrict(&keep);
        Block {
            dim,
            keep,
            partner,
            diagonal,
            op,
        }
    }

    fn gather(&self, m: &CMatrix) -> Vec<Complex64> {
        self.keep
            .iter()
            .map(|&i| m[(i / self.dim, i % self.dim)])
            .collect()
    }

    fn scatter(&self, x: &[Complex64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, &i) in self.keep.iter().enumerate() {
            m[(i / self.dim, i % self.dim)] = x[r];
        }
        m
    }

    /// `x ↦ tr(O ρ(x))`.
    fn probe(&self, op: &CMatrix) -> Probe {
        let mut c = Vec::new();
        for (r, &i) in self.keep.iter().enumerate() {
            let v = op[(i % self.dim, i / self.dim)];
            if v != ZERO {
                c.push((r, v));
            }
        }
        Probe(c)
    }

    /// Restriction of a full-space dual vector.
    fn probe_dual(&self, dual: &[Complex64]) -> Probe {
        Probe(
            self.keep
                .iter()
                .enumerate()
                .filter_map(|(r, &i)| (dual[i] != ZERO).then_some((r, dual[i])))
                .collect(),
        )
    }

    fn trace(&self, x: &[Complex64]) -> Complex64 {
        self.diagonal.iter().map(|&r| x[r]).sum()
    }

    fn hermiticity_error(&self, x: &[Complex64]) -> f64 {
        self.partner
            .iter()
            .enumerate()
            .map(|(r, p)| match p {
                Some(j) => (x[r] - x[*j].conj()).norm(),
                None => x[r].norm(),
            })
            .fold(0.0, f64::max)
    }

    fn hermitize(&self, x: &mut [Complex64]) {
        for r in 0..x.len() {
            if let Some(j) = self.partner[r] {
                if j > r {
                    let avg = 0.5 * (x[r] + x[j].conj());
                    x[r] = avg;
                    x[j] = avg.conj();
                } else if j == r {
                    x[r] = Complex64::new(x[r].re, 0.0);
                }
            }
        }
    }
}

struct Probes {
    hw: Probe,
    hw2: Probe,
    zv: Probe,
    nv: Probe,
    zbar: Probe,
    delta: Probe,
    gamma1: Probe,
    gamma2: Probe,
    heat: [Option<Probe>; 3],
    edge_low: Probe,
    edge_high: Probe,
}

impl Probes {
    fn new(l: &Liouvillian, block: &Block) -> Self {
        let obs = |o: Observable| block.probe(&l.observable(o).matrix);
        let heat = [Factor::Qubit1, Factor::Qubit2, Factor::Target].map(|f| {
            l.dissipator(f)
                .map(|d| block.probe_dual(&d.dual_functional(&l.local_hamiltonian(f))))
        });
        let layout = l.layout;
        let level_projector = |k: usize| {
            let d = layout.dim();
            let mut p = CMatrix::zeros(d, d);
            for q1 in 0..2 {
                for q2 in 0..2 {
                    let i = layout.index(q1, q2, k);
                    p[(i, i)] = Complex64::new(1.0, 0.0);
                }
            }
            p
        };
        Probes {
            hw: obs(Observable::Hw),
            hw2: obs(Observable::Hw2),
            zv: obs(Observable::Zv),
            nv: obs(Observable::Nv),
            zbar: obs(Observable::ZbarV),
            delta: obs(Observable::Delta),
            gamma1: obs(Observable::Gamma1),
            gamma2: obs(Observable::Gamma2),
            heat,
            edge_low: block.probe(&level_projector(0)),
            edge_high: block.probe(&level_projector(layout.target_dim - 1)),
        }
    }

    fn record(&self, t: f64, x: &[Complex64]) -> ObservableRecord {
        let re = |p: &Probe| p.eval(x).re;
        let heat = |i: usize| self.heat[i].as_ref().map_or(0.0, |p| p.eval(x).re);
        let e = re(&self.hw);
        let e2 = re(&self.hw2);
        ObservableRecord {
            t,
            e_target: e,
            e_target_sq: e2,
            var: e2 - e * e,
            zv: re(&self.zv),
            nv: re(&self.nv),
            zbar: re(&self.zbar),
            delta: self.delta.eval(x),
            gamma1: re(&self.gamma1),
            gamma2: re(&self.gamma2),
            dq1: heat(0),
            dq2: heat(1),
            dq3: heat(2),
            edge_low: re(&self.edge_low),
            edge_high: re(&self.edge_high),
        }
    }
}

enum Stepper {
    Rk4 {
        op: Csr,
        dt: f64,
        k: [Vec<Complex64>; 4],
        tmp: Vec<Complex64>,
    },
    Exponential {
        propagator: CMatrix,
        out: Vec<Complex64>,
    },
}

impl Stepper {
    fn new(block: &Block, cfg: &IntegrationConfig) -> Result<Self> {
        let n = block.keep.len();
        match cfg.method {
            Method::Rk4 => {
                let norm = block.op.inf_norm();
                let max_dt = if norm > 0.0 { RK4_GUARD / norm } else { f64::INFINITY };
                if cfg.dt > max_dt {
                    return Err(Error::StepGuard { dt: cfg.dt, max_dt });
                }
                Ok(Stepper::Rk4 {
                    op: block.op.clone(),
                    dt: cfg.dt,
                    k: std::array::from_fn(|_| vec![ZERO; n]),
                    tmp: vec![ZERO; n],
                })
            }
            Method::Exponential => {
                if n > MAX_EXPONENTIAL_BLOCK {
                    return Err(Error::DimensionCap {
                        dim: n,
                        cap: MAX_EXPONENTIAL_BLOCK,
                        context: "exponential stepping (evolved elements)",
                    });
                }
                let generator = block.op.to_dense() * Complex64::new(cfg.dt, 0.0);
                Ok(Stepper::Exponential {
                    propagator: generator.exp(),
                    out: vec![ZERO; n],
                })
            }
        }
    }

    fn step(&mut self, x: &mut [Complex64]) {
        match self {
            Stepper::Rk4 { op, dt, k, tmp } => {
                let h = *dt;
                let [k1, k2, k3, k4] = k;
                op.mul_vec(x, k1);
                for i in 0..x.len() {
                    tmp[i] = x[i] + k1[i] * (0.5 * h);
                }
                op.mul_vec(tmp, k2);
                for i in 0..x.len() {
                    tmp[i] = x[i] + k2[i] * (0.5 * h);
                }
                op.mul_vec(tmp, k3);
                for i in 0..x.len() {
                    tmp[i] = x[i] + k3[i] * h;
                }
                op.mul_vec(tmp, k4);
                for i in 0..x.len() {
                    x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
            }
            Stepper::Exponential { propagator, out } => {
                let n = x.len();
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for j in 0..n {
                        acc += propagator[(i, j)] * x[j];
                    }
                    *o = acc;
                }
                x.copy_from_slice(out);
            }
        }
    }
}

/// Largest RK4 step the guard allows when evolving from `rho0`.
pub fn stable_step(l: &Liouvillian, rho0: &DensityMatrix) -> f64 {
    let norm = Block::new(l, rho0.matrix()).op.inf_norm();
    if norm > 0.0 {
        RK4_GUARD / norm
    } else {
        f64::INFINITY
    }
}

fn check_sample(block: &Block, x: &[Complex64], t: f64, check_psd: bool) -> Result<()> {
    let tr = block.trace(x);
    if (tr - Complex64::new(1.0, 0.0)).norm() > EVOLUTION_TOL {
        return Err(Error::NumericalGuard(format!("trace drifted to {tr} at t = {t}")));
    }
    let herm = block.hermiticity_error(x);
    if herm > EVOLUTION_TOL {
        return Err(Error::NumericalGuard(format!(
            "Hermiticity error {herm:e} at t = {t}"
        )));
    }
    if check_psd {
        let min = hermitian_eigenvalues(&block.scatter(x))[0];
        if min < -EVOLUTION_TOL {
            return Err(Error::NumericalGuard(format!(
                "negative eigenvalue {min:e} at t = {t}"
            )));
        }
    }
    Ok(())
}

/// Integrates `dρ/dt = L(ρ)` from `rho0` and samples the standard observables.
///
/// Only matrix elements reachable from the support of `rho0` are propagated;
/// for diagonal initial states this drops every non-degenerate coherence and
/// with it the stiffness of the free Hamiltonian. The RK4 step guard is
/// `dt·‖L‖∞ ≤ 0.1` on that block.
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, cfg: &IntegrationConfig) -> Result<ObservableTrace> {
    cfg.validate()?;
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: rho0.dim(),
        });
    }
    DensityMatrix::new(rho0.matrix().clone())?;

    let block = Block::new(l, rho0.matrix());
    let probes = Probes::new(l, &block);
    let mut stepper = Stepper::new(&block, cfg)?;
    let psd_each = l.dim() <= PSD_EVERY_SAMPLE_DIM;
    let is_weight = l.target.is_weight();

    let mut x = block.gather(rho0.matrix());
    let steps = cfg.steps();
    let mut records = Vec::with_capacity(steps / cfg.record_every + 2);
    let mut states = cfg.retain_states.then(Vec::new);
    let mut max_edge = 0.0f64;

    let mut sample = |n: usize, x: &mut [Complex64]| -> Result<()> {
        let t = n as f64 * cfg.dt;
        if cfg.hermitize {
            block.hermitize(x);
        }
        check_sample(&block, x, t, psd_each)?;
        let r = probes.record(t, x);
        if is_weight {
            max_edge = max_edge.max(r.edge_low).max(r.edge_high);
        }
        records.push(r);
        if let Some(s) = states.as_mut() {
            s.push(DensityMatrix::from_matrix_unchecked(block.scatter(x)));
        }
        Ok(())
    };

    sample(0, &mut x)?;
    for n in 1..=steps {
        stepper.step(&mut x);
        if n % cfg.record_every == 0 || n == steps {
            sample(n, &mut x)?;
        }
    }

    let final_matrix = block.scatter(&x);
    if !psd_each {
        check_sample(&block, &x, steps as f64 * cfg.dt, true)?;
    }
    Ok(ObservableTrace {
        records,
        states,
        final_state: DensityMatrix::from_matrix_unchecked(final_matrix),
        edge_flag: max_edge > EDGE_THRESHOLD,
        max_edge_population: max_edge,
        evolved_elements: block.keep.len(),
    })
}

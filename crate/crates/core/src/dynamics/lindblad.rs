//! Density matrices and a fixed-step RK4 integrator for
//! `dρ/dt = −i[H, ρ] + Σ_k (c_k ρ c_k† − ½{c_k† c_k, ρ})`.
//!
//! Operators are in angular units (rad/s).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

pub type Operator = DMatrix<Complex64>;

/// Largest trace change tolerated in a single step.
pub const STEP_TRACE_TOLERANCE: f64 = 1e-7;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: Operator,
}

impl DensityMatrix {
    pub fn from_operator(rho: Operator) -> Result<Self> {
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(Error::validation("density matrix", "must be square and non-empty"));
        }
        Ok(DensityMatrix { rho })
    }

    /// |0⟩⟨0| in `dim` levels.
    pub fn ground(dim: usize) -> Self {
        let mut rho = Operator::zeros(dim, dim);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix { rho }
    }

    /// |n⟩⟨n|
    pub fn basis(dim: usize, n: usize) -> Self {
        let mut rho = Operator::zeros(dim, dim);
        rho[(n, n)] = Complex64::new(1.0, 0.0);
        DensityMatrix { rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.rho
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.rho[(i, j)]
    }

    pub fn population(&self, n: usize) -> f64 {
        self.rho[(n, n)].re
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// ⟨σ⁻⟩ = ρ₁₀ for the 0–1 transition.
    pub fn lowering_expectation(&self) -> Complex64 {
        self.rho[(1, 0)]
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace and positivity at the given tolerances.
    pub fn check(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        let tr = (self.trace() - 1.0).norm();
        let min = self.min_eigenvalue();
        if herm > tol || tr > tol || min < -tol {
            return Err(Error::Numerical(format!(
                "invalid density matrix: hermiticity {herm:.2e}, trace error {tr:.2e}, min eigenvalue {min:.2e}"
            )));
        }
        Ok(())
    }
}

/// A set of collapse operators with Σ c†c cached.
#[derive(Debug, Clone)]
pub struct Dissipator {
    ops: Vec<Operator>,
    ops_dag: Vec<Operator>,
    anti: Operator,
}

impl Dissipator {
    pub fn new(ops: Vec<Operator>, dim: usize) -> Self {
        let ops_dag: Vec<Operator> = ops.iter().map(|c| c.adjoint()).collect();
        let mut anti = Operator::zeros(dim, dim);
        for (c, cd) in ops.iter().zip(&ops_dag) {
            anti += cd * c;
        }
        Dissipator { ops, ops_dag, anti }
    }

    pub fn none(dim: usize) -> Self {
        Dissipator::new(Vec::new(), dim)
    }

    pub fn operators(&self) -> &[Operator] {
        &self.ops
    }
}

/// Right-hand side of the master equation.
pub fn lindblad_rhs(h: &Operator, diss: &Dissipator, rho: &Operator) -> Operator {
    let mut out = (h * rho - rho * h) * (-I);
    let half = Complex64::new(0.5, 0.0);
    out -= (&diss.anti * rho + rho * &diss.anti) * half;
    for (c, cd) in diss.ops.iter().zip(&diss.ops_dag) {
        out += c * rho * cd;
    }
    out
}

/// One RK4 step from `t` to `t + dt` with a time-dependent Hamiltonian.
pub fn lindblad_step<F>(rho: &DensityMatrix, hamiltonian: F, t: f64, diss: &Dissipator, dt: f64) -> Result<DensityMatrix>
where
    F: Fn(f64) -> Operator,
{
    let h0 = hamiltonian(t);
    let hm = hamiltonian(t + 0.5 * dt);
    let h1 = hamiltonian(t + dt);
    let r = &rho.rho;
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let k1 = lindblad_rhs(&h0, diss, r);
    let k2 = lindblad_rhs(&hm, diss, &(r + &k1 * half));
    let k3 = lindblad_rhs(&hm, diss, &(r + &k2 * half));
    let k4 = lindblad_rhs(&h1, diss, &(r + &k3 * full));
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let next = r + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * sixth;
    let drift = (next.trace() - r.trace()).norm();
    if drift > STEP_TRACE_TOLERANCE {
        return Err(Error::StepSize { drift });
    }
    Ok(DensityMatrix { rho: next })
}

/// Stationary state of a time-independent generator, from the linear system
/// `L ρ = 0` with the first row replaced by `Tr ρ = 1`.
pub fn steady_state(h: &Operator, diss: &Dissipator) -> Result<DensityMatrix> {
    let d = h.nrows();
    let n = d * d;
    let mut liouville = DMatrix::<Complex64>::zeros(n, n);
    for col in 0..n {
        let mut basis = Operator::zeros(d, d);
        basis[(col % d, col / d)] = Complex64::new(1.0, 0.0);
        let image = lindblad_rhs(h, diss, &basis);
        for row in 0..n {
            liouville[(row, col)] = image[(row % d, row / d)];
        }
    }
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(n);
    for col in 0..n {
        liouville[(0, col)] = Complex64::new(0.0, 0.0);
    }
    for k in 0..d {
        liouville[(0, k * d + k)] = Complex64::new(1.0, 0.0);
    }
    rhs[0] = Complex64::new(1.0, 0.0);
    let sol = liouville
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Liouvillian".into()))?;
    let rho = Operator::from_fn(d, d, |i, j| sol[i + d * j]);
    Ok(DensityMatrix { rho: (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lowering(dim: usize, from: usize) -> Operator {
        let mut c = Operator::zeros(dim, dim);
        c[(from - 1, from)] = Complex64::new(1.0, 0.0);
        c
    }

    fn projector(dim: usize, n: usize) -> Operator {
        let mut c = Operator::zeros(dim, dim);
        c[(n, n)] = Complex64::new(1.0, 0.0);
        c
    }

    #[test]
    fn free_evolution_is_identity() {
        let mut rho = Operator::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(0.3, 0.0);
        rho[(1, 1)] = Complex64::new(0.7, 0.0);
        rho[(0, 1)] = Complex64::new(0.1, 0.2);
        rho[(1, 0)] = Complex64::new(0.1, -0.2);
        let state = DensityMatrix::from_operator(rho).unwrap();
        let next = lindblad_step(&state, |_| Operator::zeros(2, 2), 0.0, &Dissipator::none(2), 1e-9).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn exponential_decay() {
        let gamma = crate::TWO_PI * 21e6;
        let diss = Dissipator::new(vec![lowering(2, 1) * Complex64::new(gamma.sqrt(), 0.0)], 2);
        let steps = 2000;
        let dt = 1.0 / gamma / steps as f64;
        let mut rho = DensityMatrix::basis(2, 1);
        for i in 0..steps {
            rho = lindblad_step(&rho, |_| Operator::zeros(2, 2), i as f64 * dt, &diss, dt).unwrap();
        }
        assert!((rho.population(1) - (-1.0f64).exp()).abs() < 1e-4);
        assert!((rho.trace() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn pure_dephasing() {
        let gphi = crate::TWO_PI * 8e6;
        // √(2Γφ)|1⟩⟨1| damps ρ01 at Γφ
        let diss = Dissipator::new(vec![projector(2, 1) * Complex64::new((2.0 * gphi).sqrt(), 0.0)], 2);
        let mut op = Operator::from_element(2, 2, Complex64::new(0.5, 0.0));
        op[(0, 1)] = Complex64::new(0.5, 0.0);
        let mut rho = DensityMatrix::from_operator(op).unwrap();
        let dt = 0.01 / gphi;
        for i in 0..100 {
            rho = lindblad_step(&rho, |_| Operator::zeros(2, 2), i as f64 * dt, &diss, dt).unwrap();
        }
        assert!((rho.population(1) - 0.5).abs() < 1e-14);
        assert!((rho.element(0, 1).norm() - 0.5 * (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn steady_state_of_decay_is_ground() {
        let diss = Dissipator::new(vec![lowering(3, 1), lowering(3, 2)], 3);
        let ss = steady_state(&Operator::zeros(3, 3), &diss).unwrap();
        assert!((ss.population(0) - 1.0).abs() < 1e-12);
        ss.check(1e-12).unwrap();
    }

    #[test]
    fn oversized_step_is_rejected() {
        // a non-trace-preserving "collapse" set exposes the drift check
        let bogus = Dissipator {
            ops: vec![],
            ops_dag: vec![],
            anti: Operator::identity(2, 2) * Complex64::new(1e9, 0.0),
        };
        let r = lindblad_step(&DensityMatrix::ground(2), |_| Operator::zeros(2, 2), 0.0, &bogus, 1e-9);
        assert!(matches!(r, Err(Error::StepSize { .. })));
    }
}

//! Critical-point computation.
//!
//! * [`closed_form`]: the scalar function `F(r)`, the radius `r₀` and the
//!   threshold `λ₁` of the mountain-pass geometry.
//! * [`embedding`]: sampled embedding constants and the Rayleigh infimum.
//! * [`sphere`]: minimization of the energy on `{‖u‖_q = 1}`.
//! * [`mountain_pass`]: path-deformation saddle search.
//! * [`homotopy`]: the `f_n → 0` continuation from P2 to P1.
//!
//! All iterative solvers use the Sobolev gradient: the Euclidean gradient
//! preconditioned by the `p = 2` Gagliardo stiffness matrix.

pub mod closed_form;
pub mod embedding;
pub mod homotopy;
pub mod mountain_pass;
pub mod sphere;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::functionals::{energy, gradient, EnergyModel};
use crate::mesh::{GridFunction, InteractionTable, SeminormWeight};

pub use closed_form::{
    f_profile, f_value, lambda1_exact, lambda1_threshold, r0_maximizer, r0_printed, FParams, R0Report,
};
pub use embedding::{
    estimate_embedding_constants, estimate_embedding_constants_with, rayleigh_inf_estimate, EmbeddingConstants,
    RayleighEstimate,
};
pub use homotopy::{homotopy_to_p1, HomotopyOptions, HomotopyReport, HomotopyStage};
pub use mountain_pass::{
    mountain_pass_geometry, mountain_pass_solve, MountainPassGeometry, MountainPassOptions, MountainPassReport,
};
pub use sphere::{sphere_constrained_solve, sphere_constrained_solve_from, SphereReport};

/// Armijo sufficient-decrease constant.
pub const ARMIJO: f64 = 1e-4;

/// Outcome of an iterative solve. Traces have one entry per iteration plus
/// the initial state.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub norm_w_trace: Vec<f64>,
    pub norm_q_trace: Vec<f64>,
    pub converged: bool,
    pub wallclock: f64,
}

impl SolveReport {
    pub(crate) fn start(u: &GridFunction) -> Self {
        SolveReport {
            solution: u.clone(),
            iterations: 0,
            energy_trace: Vec::new(),
            residual_trace: Vec::new(),
            norm_w_trace: Vec::new(),
            norm_q_trace: Vec::new(),
            converged: false,
            wallclock: 0.0,
        }
    }

    pub(crate) fn record(&mut self, m: &EnergyModel, u: &GridFunction, energy: f64, residual: f64) {
        self.energy_trace.push(energy);
        self.residual_trace.push(residual);
        self.norm_w_trace.push(m.w0_norm(u));
        self.norm_q_trace.push(m.lq_norm(u));
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_energy(&self) -> f64 {
        self.energy_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Inner product `⟨u, v⟩_A = ∬ (u(x)-u(y))(v(x)-v(y)) |x-y|^{-(N+sp)}` on the
/// interior nodal values, with a Cholesky factorization of `A`.
#[derive(Debug, Clone)]
pub struct SobolevMetric {
    a: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SobolevMetric {
    pub fn new(table: &InteractionTable) -> Result<Self> {
        let n = table.mesh().n_interior();
        let a = DMatrix::from_row_slice(n, n, &table.quadratic_form(SeminormWeight::Pure));
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Precondition("stiffness matrix is not positive definite".into()))?;
        Ok(SobolevMetric { a, chol })
    }

    /// `A⁻¹ g`.
    pub fn solve(&self, g: &[f64]) -> Vec<f64> {
        self.chol.solve(&DVector::from_column_slice(g)).as_slice().to_vec()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        DVector::from_column_slice(u).dot(&(&self.a * v))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(u: &[f64], c: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a + c * b).collect()
}

pub(crate) fn grid(m: &EnergyModel, interior: &[f64]) -> Result<GridFunction> {
    GridFunction::from_interior(m.mesh(), interior)
}

/// Energy and dual residual at `u`.
pub(crate) fn state(m: &EnergyModel, u: &GridFunction) -> Result<(f64, Vec<f64>, f64)> {
    let e = energy(u, m)?;
    let g = gradient(u, m)?;
    Ok((e, g.per_testfunction, g.dual_norm_estimate))
}

/// First trial step `1 / (1 + ‖g‖)`, where `‖g‖² = g · A⁻¹g` and `s = A⁻¹g`.
pub(crate) fn initial_step(g: &[f64], s: &[f64]) -> f64 {
    1.0 / (1.0 + dot(g, s).abs().sqrt())
}

/// Damped Newton iteration on `I'(u) = 0` with a finite-difference Jacobian.
/// Steps are halved until the dual residual decreases. Returns the iterates
/// as `(u, energy, residual)`; stops early when a step cannot reduce the
/// residual.
pub(crate) fn newton_polish(
    m: &EnergyModel,
    u0: &GridFunction,
    tol: f64,
    max_steps: usize,
) -> Result<Vec<(GridFunction, f64, f64)>> {
    let n = m.mesh().n_interior();
    let mut u = u0.interior().to_vec();
    let (_, mut g, mut res) = state(m, &grid(m, &u)?)?;
    let mut out = Vec::new();
    for _ in 0..max_steps {
        if res <= tol {
            break;
        }
        let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-3);
        let eps = 1e-6 * scale;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let mut up = u.clone();
            up[k] += eps;
            let mut um = u.clone();
            um[k] -= eps;
            let gp = gradient(&grid(m, &up)?, m)?.per_testfunction;
            let gm = gradient(&grid(m, &um)?, m)?.per_testfunction;
            for i in 0..n {
                jac[(i, k)] = (gp[i] - gm[i]) / (2.0 * eps);
            }
        }
        // the Jacobian of a gradient is symmetric up to rounding
        let sym = (&jac + jac.transpose()) * 0.5;
        let Some(delta) = sym.lu().solve(&(-DVector::from_column_slice(&g))) else {
            break;
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = axpy(&u, alpha, delta.as_slice());
            let tg = grid(m, &trial)?;
            let (e, tgv, tres) = state(m, &tg)?;
            if tres < res {
                accepted = Some((trial, tg, e, tgv, tres));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, tg, e, tgv, tres)) = accepted else {
            break;
        };
        u = trial;
        g = tgv;
        res = tres;
        out.push((tg, e, tres));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::mesh::{Mesh1D, QuadratureRule};

    #[test]
    fn metric_reproduces_seminorm() {
        let k = KernelSpec::standard(0.5, 2.0).unwrap();
        let m = Mesh1D::new(0.0, 1.0, 8).unwrap();
        let t = InteractionTable::build(&m, &k, &QuadratureRule::default_for(&k)).unwrap();
        let metric = SobolevMetric::new(&t).unwrap();
        let u = GridFunction::from_fn(&m, |x| x * (1.0 - x) * (2.0 + x));
        let a = metric.inner(u.interior(), u.interior());
        let s = t.seminorm_pow(&u, SeminormWeight::Pure);
        assert!((a - s).abs() < 1e-12 * s);
        let back = metric.solve(&vec![1.0; 7]);
        let check: Vec<f64> = (0..7)
            .map(|i| {
                let mut e = vec![0.0; 7];
                e[i] = 1.0;
                metric.inner(&e, &back)
            })
            .collect();
        assert!(check.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }
}

//! Continuation from P2 to P1 along `f_n = f₀ 2^{-n}`.
//!
//! Each stage minimizes the P2 energy on `𝔐 = {‖u‖_q = 1}`, warm-started
//! from the previous stage. A constrained minimizer satisfies
//! `I'(u_n) = μ_n |u_n|^{q-2} u_n` with a multiplier `μ_n` that need not
//! vanish, so the limit is a P1 solution only for the shifted parameter
//! `λ + μ`. The report gives the P1 residual of the limit at the model's `λ`
//! and, for power-type `Φ`, the residual of the rescaled limit
//! `((λ+μ)/λ)^{1/(q-p)} u`, which solves P1 at `λ` when `μ` has converged.

use log::warn;

use super::embedding::rayleigh_with_model;
use super::sphere::{sphere_constrained_solve, sphere_constrained_solve_from};
use super::SolveReport;
use crate::error::{Error, Result};
use crate::functionals::{residual_p1, EnergyModel, Problem, WeakResidual};
use crate::kernels::{KernelSpec, PhiKind, PhiSpec};
use crate::mesh::{duality_pairing, GridFunction, QuadratureRule};

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyOptions {
    pub n_steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Known Rayleigh estimate; computed when absent.
    pub rayleigh: Option<f64>,
    pub seed: u64,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        HomotopyOptions { n_steps: 12, tol: 1e-8, max_iter: 5000, rayleigh: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyStage {
    pub n: usize,
    /// `2^{-n}`.
    pub f_scale: f64,
    pub f_norm: f64,
    pub energy: f64,
    pub multiplier: f64,
    pub constrained_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub w0_norm: f64,
    /// `‖u_n - u_{n-1}‖_{W₀}`, absent for the first stage.
    pub cauchy_diff: Option<f64>,
    /// `Λ⁻² ‖u_n‖^p_{W₀} - λ`.
    pub chain_lhs: f64,
    /// `∫ f_n u_n`.
    pub chain_rhs: f64,
}

impl HomotopyStage {
    pub fn chain_holds(&self) -> bool {
        self.chain_lhs <= self.chain_rhs
    }
}

#[derive(Debug, Clone)]
pub struct HomotopyReport {
    pub stages: Vec<HomotopyStage>,
    /// Solve of the last stage.
    pub report: SolveReport,
    /// P1 residual of the last stage's solution.
    pub residual_p1: WeakResidual,
    /// Rescaled limit and its P1 residual (power `Φ` only).
    pub rescaled: Option<(GridFunction, WeakResidual)>,
    pub rayleigh: f64,
    pub warnings: Vec<String>,
}

impl HomotopyReport {
    /// `‖u_{n+1} - u_n‖` is non-increasing from stage `from` on.
    pub fn cauchy_monotone_after(&self, from: usize) -> bool {
        let diffs: Vec<f64> = self.stages.iter().filter(|s| s.n > from).filter_map(|s| s.cauchy_diff).collect();
        diffs.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn homotopy_to_p1(m: &EnergyModel, opts: &HomotopyOptions) -> Result<HomotopyReport> {
    if opts.n_steps < 2 {
        return Err(Error::InvalidParameter(format!("n_steps ≥ 2 required, got {}", opts.n_steps)));
    }
    if m.problem() != Problem::P2 {
        return Err(Error::WrongVariant("homotopy needs a model with source f₀".into()));
    }
    let f0 = m.source().expect("P2 has a source").clone();
    let mut warnings = Vec::new();
    let rayleigh = match opts.rayleigh {
        Some(r) => r,
        None => {
            let p = m.p();
            let standard = KernelSpec::standard(m.kernel().s(), p)?;
            let rm = EnergyModel::new(
                PhiSpec::power(p)?,
                standard.clone(),
                1.0,
                m.q(),
                None,
                *m.mesh(),
                QuadratureRule::default_for(&standard),
            )?;
            rayleigh_with_model(&rm, 200, opts.seed, opts.tol, opts.max_iter)?.ratio
        }
    };
    if m.lambda() > rayleigh {
        let msg =
            format!("λ = {} exceeds the Rayleigh estimate {rayleigh}: λ ∈ (0, inf ‖u‖_W/‖u‖_q] not met", m.lambda());
        warn!("{msg}");
        warnings.push(msg);
    }

    let lam_cap = m.lambda_cap();
    let p = m.p();
    let g = m.quad().gauss_order;
    let mut stages = Vec::new();
    let mut prev: Option<GridFunction> = None;
    let mut last = None;
    for n in 0..=opts.n_steps {
        let scale = 0.5f64.powi(n as i32);
        let stage_model = m.with_source(Some(f0.scaled(scale)))?;
        let sol = match &prev {
            None => sphere_constrained_solve(&stage_model, opts.tol, opts.max_iter)?,
            Some(u) => sphere_constrained_solve_from(&stage_model, u, opts.tol, opts.max_iter)?,
        };
        let u = sol.report.solution.clone();
        let w0 = stage_model.w0_norm(&u);
        let cauchy_diff = match &prev {
            Some(v) => Some(stage_model.w0_norm(&u.axpy(-1.0, v)?)),
            None => None,
        };
        let chain_rhs = duality_pairing(stage_model.source().expect("stage has a source"), &u, g)?;
        stages.push(HomotopyStage {
            n,
            f_scale: scale,
            f_norm: stage_model.source_dual_norm(),
            energy: sol.report.final_energy(),
            multiplier: sol.multiplier,
            constrained_residual: sol.constrained_residual,
            iterations: sol.report.iterations,
            converged: sol.report.converged,
            w0_norm: w0,
            cauchy_diff,
            chain_lhs: lam_cap.powi(-2) * w0.powf(p) - m.lambda(),
            chain_rhs,
        });
        if !sol.report.converged {
            let msg = format!("stage {n}: constrained solve stopped at residual {}", sol.constrained_residual);
            warn!("{msg}");
            warnings.push(msg);
        }
        prev = Some(u);
        last = Some(sol);
    }
    let last = last.expect("at least one stage");
    let p1 = m.with_source(None)?;
    let u = &last.report.solution;
    let res1 = residual_p1(u, &p1)?;
    let shifted = m.lambda() + last.multiplier;
    let rescaled = match m.phi().kind() {
        PhiKind::Power if shifted > 0.0 => {
            let t = (shifted / m.lambda()).powf(1.0 / (m.q() - p));
            let v = u.scaled(t);
            let r = residual_p1(&v, &p1)?;
            Some((v, r))
        }
        _ => None,
    };
    Ok(HomotopyReport { stages, report: last.report, residual_p1: res1, rescaled, rayleigh, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh1D, Source};

    fn model(f0: Source) -> EnergyModel {
        let k = KernelSpec::standard(0.5, 2.0).unwrap();
        EnergyModel::new(
            PhiSpec::power(2.0).unwrap(),
            k.clone(),
            1.0,
            3.0,
            Some(f0),
            Mesh1D::new(0.0, 1.0, 16).unwrap(),
            QuadratureRule::default_for(&k),
        )
        .unwrap()
    }

    #[test]
    fn zero_source_gives_constant_sequence() {
        let m = model(Source::analytic(|_| 0.0));
        let opts = HomotopyOptions { n_steps: 3, rayleigh: Some(10.0), ..Default::default() };
        let r = homotopy_to_p1(&m, &opts).unwrap();
        for s in &r.stages[1..] {
            assert!(s.cauchy_diff.unwrap() < 1e-6, "{:?}", s.cauchy_diff);
        }
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn lambda_above_rayleigh_warns() {
        let m = model(Source::analytic(|x| x)).with_lambda(50.0).unwrap();
        let opts = HomotopyOptions { n_steps: 2, rayleigh: Some(3.0), max_iter: 50, ..Default::default() };
        let r = homotopy_to_p1(&m, &opts).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("Rayleigh")));
        let short = HomotopyOptions { n_steps: 1, ..opts };
        assert!(homotopy_to_p1(&m, &short).is_err());
    }

    #[test]
    fn rescaled_limit_solves_p1() {
        let m = model(Source::analytic(|x| (3.0 * x).sin()));
        let opts = HomotopyOptions { n_steps: 6, ..Default::default() };
        let r = homotopy_to_p1(&m, &opts).unwrap();
        let norm_q = m.lq_norm(&r.report.solution);
        assert!((norm_q - 1.0).abs() < 1e-10);
        let (_, res) = r.rescaled.as_ref().unwrap();
        // remaining source 2^{-6} f₀ limits how well the rescaled limit solves P1
        assert!(res.dual_norm_estimate < 0.1 * r.residual_p1.dual_norm_estimate);
    }
}

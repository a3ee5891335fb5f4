//! Energy functionals, their derivatives and weak-solution residuals.
//!
//! ```text
//! I(u)        = ∬ 𝒫Φ(u(x)-u(y)) K dx dy - (λ/q) ∫ |u|^q - ∫ f u
//! ⟨I'(u), v⟩  = ∬ Φ(u(x)-u(y)) (v(x)-v(y)) K dx dy - λ ∫ |u|^{q-2} u v - ∫ f v
//! ```
//!
//! The `f` terms are present only for problem P2. The derivative of the
//! double-integral term equals the operator pairing when `Φ` is odd, which
//! holds for every built-in `Φ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PhiSpec};
use crate::mesh::{
    duality_pairing, element_points, load_vector, lq_integral, GridFunction, InteractionTable, Mesh1D, QuadratureRule,
    SeminormWeight, Source,
};

/// Which of the two problems a model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// `-L_Φ u = λ |u|^{q-2} u`.
    P1,
    /// `-L_Φ u = λ |u|^{q-2} u + f`.
    P2,
}

/// Full problem datum. Owns the interaction table of its mesh.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    phi: PhiSpec,
    kernel: KernelSpec,
    lambda: f64,
    q: f64,
    source: Option<Source>,
    mesh: Mesh1D,
    quad: QuadratureRule,
    table: Arc<InteractionTable>,
    load: Option<Arc<Vec<f64>>>,
    basis_norms: Arc<Vec<f64>>,
    declared_cap: Option<f64>,
}

/// Checks `q ∈ (p, p*_s)` and `q > 2`.
pub fn check_exponents(p: f64, q: f64, kernel: &KernelSpec) -> Result<()> {
    let crit = kernel.critical_exponent();
    if !(q.is_finite() && q > p && q < crit) {
        return Err(Error::InvalidParameter(format!("q ∈ (p, p_s^*) violated: q = {q}, p = {p}, p_s^* = {crit}")));
    }
    if q <= 2.0 {
        return Err(Error::InvalidParameter(format!("q > 2 required so that |u|^(q-2) u is C¹ at 0, got q = {q}")));
    }
    Ok(())
}

impl EnergyModel {
    pub fn new(
        phi: PhiSpec,
        kernel: KernelSpec,
        lambda: f64,
        q: f64,
        source: Option<Source>,
        mesh: Mesh1D,
        quad: QuadratureRule,
    ) -> Result<Self> {
        if (phi.p() - kernel.p()).abs() > 1e-15 {
            return Err(Error::InvalidParameter(format!("Φ and K must share p, got {} and {}", phi.p(), kernel.p())));
        }
        let table = Arc::new(InteractionTable::build(&mesh, &kernel, &quad)?);
        let basis_norms = Arc::new(table.basis_seminorms());
        Self::assemble(phi, kernel, lambda, q, source, mesh, quad, table, basis_norms)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        phi: PhiSpec,
        kernel: KernelSpec,
        lambda: f64,
        q: f64,
        source: Option<Source>,
        mesh: Mesh1D,
        quad: QuadratureRule,
        table: Arc<InteractionTable>,
        basis_norms: Arc<Vec<f64>>,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("λ > 0 required, got {lambda}")));
        }
        check_exponents(phi.p(), q, &kernel)?;
        let load = match &source {
            Some(f) => Some(Arc::new(load_vector(f, &mesh, quad.gauss_order)?)),
            None => None,
        };
        Ok(EnergyModel { phi, kernel, lambda, q, source, mesh, quad, table, load, basis_norms, declared_cap: None })
    }

    /// Same model with another `λ`; the interaction table is shared.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut m = self.clone();
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("λ > 0 required, got {lambda}")));
        }
        m.lambda = lambda;
        Ok(m)
    }

    /// Same model with a larger declared `Λ`. Any constant at least as large
    /// as the one of `Φ` and `K` is a valid ellipticity bound.
    pub fn with_lambda_cap(&self, lambda_cap: f64) -> Result<Self> {
        let derived = self.phi.lambda_cap().max(self.kernel.lambda_cap());
        if !(lambda_cap.is_finite() && lambda_cap >= derived) {
            return Err(Error::InvalidParameter(format!(
                "declared Λ = {lambda_cap} is below the constant {derived} of Φ and K"
            )));
        }
        let mut m = self.clone();
        m.declared_cap = Some(lambda_cap);
        Ok(m)
    }

    /// Same model with another source; the interaction table is shared.
    pub fn with_source(&self, source: Option<Source>) -> Result<Self> {
        let declared = self.declared_cap;
        let mut m = Self::assemble(
            self.phi.clone(),
            self.kernel.clone(),
            self.lambda,
            self.q,
            source,
            self.mesh,
            self.quad,
            self.table.clone(),
            self.basis_norms.clone(),
        )?;
        m.declared_cap = declared;
        Ok(m)
    }

    pub fn phi(&self) -> &PhiSpec {
        &self.phi
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.phi.p()
    }

    /// `Λ` of the combined structure: the declared constant if any, else the
    /// larger of the `Φ` and `K` constants.
    pub fn lambda_cap(&self) -> f64 {
        self.declared_cap.unwrap_or_else(|| self.phi.lambda_cap().max(self.kernel.lambda_cap()))
    }

    pub fn source(&self) -> Option<&Source> {
        self.source.as_ref()
    }

    pub fn problem(&self) -> Problem {
        if self.source.is_some() {
            Problem::P2
        } else {
            Problem::P1
        }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn quad(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn table(&self) -> &InteractionTable {
        &self.table
    }

    /// `[e_i]_{s,p}` for every node; boundary entries are zero.
    pub fn basis_norms(&self) -> &[f64] {
        &self.basis_norms
    }

    /// `‖u‖_{W₀} = [u]_{s,p}`.
    pub fn w0_norm(&self, u: &GridFunction) -> f64 {
        self.table.w0_norm(u)
    }

    /// `‖u‖_q`.
    pub fn lq_norm(&self, u: &GridFunction) -> f64 {
        lq_integral(u, self.q, self.quad.gauss_order).powf(1.0 / self.q)
    }

    /// `‖f‖_{p'}`, zero for P1.
    pub fn source_dual_norm(&self) -> f64 {
        let Some(f) = &self.source else { return 0.0 };
        let pc = self.p() / (self.p() - 1.0);
        let s: f64 = element_points(&self.mesh, self.quad.gauss_order)
            .into_iter()
            .map(|(_, x, w, _)| w * f.eval(x).abs().powf(pc))
            .sum();
        s.powf(1.0 / pc)
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if *u.mesh() != self.mesh {
            return Err(Error::MeshMismatch(format!("model mesh {:?} vs {:?}", self.mesh, u.mesh())));
        }
        Ok(())
    }
}

/// `⟨-L_Φ u, v⟩ = ∬ Φ(u(x)-u(y)) (v(x)-v(y)) K(x,y) dx dy`.
pub fn operator_pairing(u: &GridFunction, v: &GridFunction, m: &EnergyModel) -> Result<f64> {
    m.check(u)?;
    m.check(v)?;
    let phi = &m.phi;
    Ok(m.table.pairing(u, v, SeminormWeight::Kernel, |t| phi.phi(t)))
}

/// The three terms of the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `∬ 𝒫Φ(u(x)-u(y)) K dx dy`.
    pub nonlocal: f64,
    /// `∫ |u|^q`.
    pub lq_pow: f64,
    /// `∫ f u` (zero for P1).
    pub source: f64,
}

impl EnergyParts {
    pub fn total(&self, lambda: f64, q: f64) -> f64 {
        self.nonlocal - lambda / q * self.lq_pow - self.source
    }
}

pub fn energy_parts(u: &GridFunction, m: &EnergyModel) -> Result<EnergyParts> {
    m.check(u)?;
    let phi = &m.phi;
    let nonlocal = m.table.even_sum(u, SeminormWeight::Kernel, |t| phi.primitive(t));
    let lq_pow = lq_integral(u, m.q, m.quad.gauss_order);
    let source = match &m.source {
        Some(f) => duality_pairing(f, u, m.quad.gauss_order)?,
        None => 0.0,
    };
    Ok(EnergyParts { nonlocal, lq_pow, source })
}

/// `I_{P1}(u)` or `I_{P2}(u)` depending on the model.
pub fn energy(u: &GridFunction, m: &EnergyModel) -> Result<f64> {
    Ok(energy_parts(u, m)?.total(m.lambda, m.q))
}

/// Pairings of `I'(u)` with the nodal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual {
    /// `⟨I'(u), e_i⟩` for the interior nodes `i = 1..n_elem-1`.
    pub per_testfunction: Vec<f64>,
    /// `max_i |⟨I'(u), e_i⟩| / ‖e_i‖_{W₀}`.
    pub dual_norm_estimate: f64,
}

impl WeakResidual {
    fn new(per_testfunction: Vec<f64>, basis_norms: &[f64]) -> Self {
        let dual_norm_estimate =
            per_testfunction.iter().zip(&basis_norms[1..]).fold(0.0f64, |acc, (g, n)| acc.max(g.abs() / n));
        WeakResidual { per_testfunction, dual_norm_estimate }
    }

    /// The assembled gradient as a grid function (for solver use).
    pub fn as_grid(&self, mesh: &Mesh1D) -> GridFunction {
        let mut v = Vec::with_capacity(mesh.n_nodes());
        v.push(0.0);
        v.extend_from_slice(&self.per_testfunction);
        v.push(0.0);
        GridFunction::from_nodal_unchecked(mesh, v)
    }
}

/// `(∫ |u|^{q-2} u e_i)_i` over all nodes.
pub fn reaction_vector(u: &GridFunction, q: f64, gauss_order: usize) -> Vec<f64> {
    let vals = u.nodal();
    let mut out = vec![0.0; vals.len()];
    for (e, _, w, xi) in element_points(u.mesh(), gauss_order) {
        let v = (1.0 - xi) * vals[e] + xi * vals[e + 1];
        let r = if v == 0.0 { 0.0 } else { w * v.abs().powf(q - 2.0) * v };
        out[e] += r * (1.0 - xi);
        out[e + 1] += r * xi;
    }
    out
}

/// Interior part of the derivative, before the dual-norm reduction.
pub(crate) fn gradient_vector(u: &GridFunction, m: &EnergyModel) -> Vec<f64> {
    let phi = &m.phi;
    let op = m.table.pairing_gradient(u, SeminormWeight::Kernel, |t| phi.phi(t));
    let react = reaction_vector(u, m.q, m.quad.gauss_order);
    let n = m.mesh.n_elem();
    (1..n)
        .map(|i| {
            let f = m.load.as_ref().map_or(0.0, |l| l[i]);
            op[i] - m.lambda * react[i] - f
        })
        .collect()
}

/// `⟨I'(u), e_i⟩` for every interior nodal basis function.
pub fn gradient(u: &GridFunction, m: &EnergyModel) -> Result<WeakResidual> {
    m.check(u)?;
    Ok(WeakResidual::new(gradient_vector(u, m), &m.basis_norms))
}

/// Residual of the P1 weak formulation.
pub fn residual_p1(u: &GridFunction, m: &EnergyModel) -> Result<WeakResidual> {
    if m.problem() != Problem::P1 {
        return Err(Error::WrongVariant("residual_p1 needs a model without source".into()));
    }
    gradient(u, m)
}

/// Residual of the P2 weak formulation.
pub fn residual_p2(u: &GridFunction, m: &EnergyModel) -> Result<WeakResidual> {
    if m.problem() != Problem::P2 {
        return Err(Error::WrongVariant("residual_p2 needs a model with a source".into()));
    }
    gradient(u, m)
}

/// Palais–Smale monitoring quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsDiagnostic {
    /// `q I(u) - ⟨I'(u), u⟩ + (q-1) ∫ f u`.
    pub qi_minus_pairing: f64,
    /// `‖u‖_{W₀}`.
    pub w0_norm: f64,
    /// `⟨-L_Φ u, u⟩ / ‖u‖^p_{W₀}`; lies in `[Λ⁻², Λ²]`.
    pub pairing_ratio: f64,
    /// `((q - pΛ⁴)/(Λ² p)) ‖u‖^p_{W₀}`, the lower side of the boundedness chain.
    pub chain_lhs_lambda4: f64,
    /// Same with `Λ²` in place of `Λ⁴`.
    pub chain_lhs_lambda2: f64,
    /// `chain_lhs_lambda4 / qi_minus_pairing` (0 when both vanish).
    pub bound_ratio: f64,
    /// `chain_lhs_lambda2 / qi_minus_pairing`.
    pub bound_ratio_lambda2: f64,
}

pub fn ps_diagnostic(u: &GridFunction, m: &EnergyModel) -> Result<PsDiagnostic> {
    let parts = energy_parts(u, m)?;
    let i = parts.total(m.lambda, m.q);
    let pairing = operator_pairing(u, u, m)?;
    let i_prime_u = pairing - m.lambda * parts.lq_pow - parts.source;
    let q = m.q;
    let p = m.p();
    let lam = m.lambda_cap();
    let qi_minus_pairing = q * i - i_prime_u + (q - 1.0) * parts.source;
    let w0_pow = m.table.seminorm_pow(u, SeminormWeight::Pure);
    let chain_lhs_lambda4 = (q - p * lam.powi(4)) / (lam * lam * p) * w0_pow;
    let chain_lhs_lambda2 = (q - p * lam * lam) / (lam * lam * p) * w0_pow;
    let ratio = |lhs: f64| if qi_minus_pairing == 0.0 { 0.0 } else { lhs / qi_minus_pairing };
    Ok(PsDiagnostic {
        qi_minus_pairing,
        w0_norm: w0_pow.powf(1.0 / p),
        pairing_ratio: if w0_pow == 0.0 { 0.0 } else { pairing / w0_pow },
        chain_lhs_lambda4,
        chain_lhs_lambda2,
        bound_ratio: ratio(chain_lhs_lambda4),
        bound_ratio_lambda2: ratio(chain_lhs_lambda2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::random_nodal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(n: usize, q: f64, source: Option<Source>) -> EnergyModel {
        let k = KernelSpec::standard(0.5, 2.0).unwrap();
        EnergyModel::new(
            PhiSpec::power(2.0).unwrap(),
            k.clone(),
            1.0,
            q,
            source,
            Mesh1D::new(0.0, 1.0, n).unwrap(),
            QuadratureRule::default_for(&k),
        )
        .unwrap()
    }

    #[test]
    fn exponent_guards() {
        let k = KernelSpec::standard(0.5, 2.0).unwrap();
        let mk = |q: f64, lambda: f64| {
            EnergyModel::new(
                PhiSpec::power(2.0).unwrap(),
                k.clone(),
                lambda,
                q,
                None,
                Mesh1D::new(0.0, 1.0, 4).unwrap(),
                QuadratureRule::default_for(&k),
            )
        };
        // sp = 1 = N, so p*_s = ∞
        assert!(mk(3.0, 1.0).is_ok());
        let err = mk(1.5, 1.0).unwrap_err();
        assert!(err.to_string().contains("q ∈ (p, p_s^*)"));
        assert!(mk(3.0, 0.0).is_err());
        let k2 = KernelSpec::standard(0.25, 2.0).unwrap();
        // p*_s = 2 / (1 - 0.5) = 4
        let m = EnergyModel::new(
            PhiSpec::power(2.0).unwrap(),
            k2.clone(),
            1.0,
            4.0,
            None,
            Mesh1D::new(0.0, 1.0, 4).unwrap(),
            QuadratureRule::default_for(&k2),
        );
        assert!(m.is_err());
    }

    #[test]
    fn zero_function_is_trivial_solution() {
        let m = model(8, 3.0, None);
        let z = GridFunction::zero(m.mesh());
        assert_eq!(energy(&z, &m).unwrap(), 0.0);
        let r = residual_p1(&z, &m).unwrap();
        assert_eq!(r.dual_norm_estimate, 0.0);
        assert!(residual_p2(&z, &m).is_err());
        let d = ps_diagnostic(&z, &m).unwrap();
        assert_eq!(d.qi_minus_pairing, 0.0);
        assert_eq!(d.bound_ratio, 0.0);
    }

    #[test]
    fn zero_function_with_source_reports_load() {
        let m = model(8, 3.0, Some(Source::analytic(|x| 1.0 + x)));
        let z = GridFunction::zero(m.mesh());
        let r = residual_p2(&z, &m).unwrap();
        let load = load_vector(m.source().unwrap(), m.mesh(), 4).unwrap();
        let expect = (1..8).map(|i| load[i] / m.basis_norms()[i]).fold(0.0f64, f64::max);
        assert!((r.dual_norm_estimate - expect).abs() < 1e-15);
        assert!(residual_p1(&z, &m).is_err());
    }

    #[test]
    fn p2_quadratic_identities() {
        let m = model(8, 3.0, None);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_nodal(m.mesh(), &mut rng);
        let semi = m.table().seminorm_pow(&u, SeminormWeight::Pure);
        let pair = operator_pairing(&u, &u, &m).unwrap();
        assert!((pair - semi).abs() < 1e-13 * semi);
        let parts = energy_parts(&u, &m).unwrap();
        assert!((parts.nonlocal - 0.5 * semi).abs() < 1e-13 * semi);
        let d = ps_diagnostic(&u, &m).unwrap();
        assert!((d.pairing_ratio - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gradient_pairs_with_direction() {
        let m = model(8, 3.0, Some(Source::analytic(|x| x.sin())));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_nodal(m.mesh(), &mut rng);
        let v = random_nodal(m.mesh(), &mut rng);
        let g = gradient(&u, &m).unwrap();
        let via_grad: f64 = g.per_testfunction.iter().zip(v.interior()).map(|(a, b)| a * b).sum();
        let react: f64 = reaction_vector(&u, 3.0, 4).iter().zip(v.nodal()).map(|(a, b)| a * b).sum();
        let direct =
            operator_pairing(&u, &v, &m).unwrap() - react - duality_pairing(m.source().unwrap(), &v, 4).unwrap();
        assert!((via_grad - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn declared_lambda_cap_only_grows() {
        let m = model(4, 3.0, Some(Source::analytic(|x| x)));
        assert_eq!(m.lambda_cap(), 1.0);
        assert!(m.with_lambda_cap(0.9).is_err());
        let d = m.with_lambda_cap(1.1).unwrap();
        assert_eq!(d.lambda_cap(), 1.1);
        assert_eq!(d.with_source(None).unwrap().lambda_cap(), 1.1);
    }
}

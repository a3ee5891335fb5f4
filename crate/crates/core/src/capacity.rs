//! `(s,q)`-capacity of compact subsets of the domain and a probe of the
//! measure-data necessary condition.
//!
//! The capacity of `K` is the infimum of `‖φ‖^q_{W^{s,q}}` over `0 ≤ φ ≤ 1`
//! with `φ = 1` on `K`. Minimizing over grid functions gives an upper bound
//! for the continuum value.

use std::fmt;

use crate::error::{Error, Result};
use crate::functionals::{operator_pairing, reaction_vector, EnergyModel};
use crate::kernels::KernelSpec;
use crate::mesh::{lq_integral, GridFunction, InteractionTable, Mesh1D, QuadratureRule, SeminormWeight};

/// Finite union of disjoint closed intervals (possibly single points).
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSet1D {
    intervals: Vec<(f64, f64)>,
}

impl CompactSet1D {
    /// Intervals are sorted; overlapping or touching intervals are rejected.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!("bad interval [{lo}, {hi}]")));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        if intervals.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(Error::InvalidParameter("intervals must be pairwise disjoint".into()));
        }
        Ok(CompactSet1D { intervals })
    }

    pub fn empty() -> Self {
        CompactSet1D { intervals: Vec::new() }
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(vec![(x, x)])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// `K ⊂ (a, b)`.
    pub fn check_inside(&self, mesh: &Mesh1D) -> Result<()> {
        for &(lo, hi) in &self.intervals {
            if !(lo > mesh.a() && hi < mesh.b()) {
                return Err(Error::Domain(format!(
                    "[{lo}, {hi}] is not inside the domain ({}, {})",
                    mesh.a(),
                    mesh.b()
                )));
            }
        }
        Ok(())
    }

    /// Nodes where admissible grid functions must equal 1: nodes in `K` and
    /// both ends of every element whose open interior meets `K`, so that the
    /// piecewise-linear interpolant is 1 on all of `K`.
    pub fn constrained_nodes(&self, mesh: &Mesh1D) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 0..mesh.n_nodes() {
            if self.contains(mesh.node(i)) {
                out.push(i);
            }
        }
        for e in 0..mesh.n_elem() {
            let (x0, x1) = (mesh.node(e), mesh.node(e + 1));
            if self.intervals.iter().any(|&(lo, hi)| lo < x1 && hi > x0) {
                out.push(e);
                out.push(e + 1);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for CompactSet1D {
    /// Comma-free form, safe inside CSV fields: `empty`, `{0.5}`, `[0.4;0.6]U{0.8}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("empty");
        }
        for (k, &(lo, hi)) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str("U")?;
            }
            if lo == hi {
                write!(f, "{{{lo}}}")?;
            } else {
                write!(f, "[{lo};{hi}]")?;
            }
        }
        Ok(())
    }
}

/// Atoms plus an optional nonnegative density.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<GridFunction>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<GridFunction>) -> Result<Self> {
        if let Some(&(x, m)) = atoms.iter().find(|(x, m)| !(m.is_finite() && *m >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter(format!("atom ({x}, {m}) needs finite location and mass ≥ 0")));
        }
        if let Some(d) = &density {
            if d.nodal().iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidParameter("density must be nonnegative".into()));
            }
        }
        Ok(DiscreteMeasure { atoms, density })
    }

    pub fn zero() -> Self {
        DiscreteMeasure { atoms: Vec::new(), density: None }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&GridFunction> {
        self.density.as_ref()
    }

    /// `μ(K)`: atoms in `K` plus the density integrated over `K`.
    pub fn mass_on(&self, k: &CompactSet1D, gauss_order: usize) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|(x, _)| k.contains(*x)).map(|(_, m)| m).sum();
        let dens = match &self.density {
            None => 0.0,
            Some(d) => {
                let rule = crate::quad::GaussRule::unit(gauss_order);
                let mesh = d.mesh();
                let mut s = 0.0;
                for &(lo, hi) in k.intervals() {
                    // split at mesh nodes so each piece is linear
                    let mut cuts = vec![lo, hi];
                    cuts.extend(mesh.nodes().into_iter().filter(|x| *x > lo && *x < hi));
                    cuts.sort_by(f64::total_cmp);
                    for w in cuts.windows(2) {
                        s += rule.integrate(w[0], w[1], |x| d.eval(x));
                    }
                }
                s
            }
        };
        atoms + dens
    }
}

#[derive(Debug, Clone)]
pub struct CapacityReport {
    /// `‖φ‖^q_{W^{s,q}}` at the computed minimizer: an upper bound for the capacity.
    pub capacity_upper_bound: f64,
    pub minimizer: GridFunction,
    pub iterations: usize,
    /// Objective after each iteration (non-increasing), initial value first.
    pub energy_trace: Vec<f64>,
    /// Final projected-gradient measure.
    pub projected_gradient: f64,
    pub converged: bool,
    pub constrained_nodes: Vec<usize>,
}

struct CapacityProblem {
    table: InteractionTable,
    q: f64,
    gauss_order: usize,
    fixed: Vec<bool>,
    scale: Vec<f64>,
}

impl CapacityProblem {
    fn objective(&self, phi: &GridFunction) -> f64 {
        lq_integral(phi, self.q, self.gauss_order) + self.table.seminorm_pow(phi, SeminormWeight::Pure)
    }

    fn gradient(&self, phi: &GridFunction) -> Vec<f64> {
        let q = self.q;
        let semi = self.table.pairing_gradient(phi, SeminormWeight::Pure, |d| q * d.abs().powf(q - 2.0) * d);
        let react = reaction_vector(phi, q, self.gauss_order);
        // the pairing gradient counts both orderings, matching ∬ |d|^q
        semi.iter().zip(&react).map(|(a, b)| a + q * b).collect()
    }

    fn project(&self, v: &mut [f64]) {
        let n = v.len();
        for (i, x) in v.iter_mut().enumerate() {
            *x = if i == 0 || i == n - 1 {
                0.0
            } else if self.fixed[i] {
                1.0
            } else {
                x.clamp(0.0, 1.0)
            };
        }
    }

    /// `max_i |P(φ - g) - φ|_i / ‖e_i‖`, zero exactly at KKT points.
    fn projected_gradient(&self, phi: &[f64], g: &[f64]) -> f64 {
        let mut t: Vec<f64> = phi.iter().zip(g).map(|(a, b)| a - b).collect();
        self.project(&mut t);
        t.iter()
            .zip(phi)
            .zip(&self.scale)
            .skip(1)
            .take(phi.len() - 2)
            .fold(0.0f64, |m, ((a, b), s)| m.max((a - b).abs() / s))
    }
}

/// Capacity solve keeping every iterate (used by the necessary-condition probe).
fn capacity_iterates(
    k: &CompactSet1D,
    mesh: &Mesh1D,
    s: f64,
    q: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(CapacityReport, Vec<GridFunction>)> {
    k.check_inside(mesh)?;
    let weight = KernelSpec::gagliardo_weight(s, q)?;
    let rule = QuadratureRule::default_for(&weight);
    let nodes = k.constrained_nodes(mesh);
    let zero = GridFunction::zero(mesh);
    if nodes.is_empty() {
        let report = CapacityReport {
            capacity_upper_bound: 0.0,
            minimizer: zero.clone(),
            iterations: 0,
            energy_trace: vec![0.0],
            projected_gradient: 0.0,
            converged: true,
            constrained_nodes: nodes,
        };
        return Ok((report, vec![zero]));
    }
    if nodes.iter().any(|&i| i == 0 || i == mesh.n_elem()) {
        return Err(Error::Domain(format!("{k} is within one element of the boundary on this mesh")));
    }
    let table = InteractionTable::build(mesh, &weight, &rule)?;
    let mut fixed = vec![false; mesh.n_nodes()];
    for &i in &nodes {
        fixed[i] = true;
    }
    let scale: Vec<f64> = table.basis_seminorms().into_iter().map(|v| v.max(f64::MIN_POSITIVE)).collect();
    let prob = CapacityProblem { table, q, gauss_order: rule.gauss_order, fixed, scale };

    let mut phi: Vec<f64> = vec![0.0; mesh.n_nodes()];
    prob.project(&mut phi);
    let mut u = GridFunction::from_interior(mesh, &phi[1..mesh.n_elem()])?;
    let mut j = prob.objective(&u);
    let mut g = prob.gradient(&u);
    let mut trace = vec![j];
    let mut iterates = vec![u.clone()];
    let mut pg = prob.projected_gradient(&phi, &g);
    let mut alpha = 1.0 / g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut iterations = 0;
    while pg > tol && iterations < max_iter {
        let mut a = alpha;
        let mut accepted = None;
        while a > 1e-20 {
            let mut trial: Vec<f64> = phi.iter().zip(&g).map(|(x, d)| x - a * d).collect();
            prob.project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&phi).map(|(t, x)| t - x).collect();
            let decrease: f64 = step.iter().zip(&g).map(|(s, d)| s * d).sum();
            let tu = GridFunction::from_interior(mesh, &trial[1..mesh.n_elem()])?;
            let tj = prob.objective(&tu);
            if tj <= j + 1e-4 * decrease {
                accepted = Some((trial, step, tu, tj));
                break;
            }
            a *= 0.5;
        }
        let Some((trial, step, tu, tj)) = accepted else { break };
        let tg = prob.gradient(&tu);
        // Barzilai–Borwein step for the next iteration
        let y: Vec<f64> = tg.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = step.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = step.iter().map(|a| a * a).sum();
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 2.0 * a };
        phi = trial;
        u = tu;
        j = tj;
        g = tg;
        pg = prob.projected_gradient(&phi, &g);
        trace.push(j);
        iterates.push(u.clone());
        iterations += 1;
    }
    let report = CapacityReport {
        capacity_upper_bound: j,
        minimizer: u,
        iterations,
        energy_trace: trace,
        projected_gradient: pg,
        converged: pg <= tol,
        constrained_nodes: nodes,
    };
    Ok((report, iterates))
}

/// Upper bound for `Cap_{s,q}(K)`; `s` is taken from `kernel`.
pub fn capacity_estimate(
    k: &CompactSet1D,
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    q: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CapacityReport> {
    Ok(capacity_iterates(k, mesh, kernel.s(), q, tol, max_iter)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub c6: f64,
    pub c7: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { c6: 1.0, c7: 1.0, tol: 1e-8, max_iter: 2000 }
    }
}

/// One member of the test-function family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    /// `‖φ‖_{W^{s,q}}`.
    pub phi_norm: f64,
    /// `|⟨-L_Φ u, φ⟩ - λ ∫ |u|^{q-2} u φ|`.
    pub lhs: f64,
    /// `(C₆ ‖-L_Φ u‖_* + C₇ ‖u‖_q^{q-1}) ‖φ‖_{W^{s,q}}`.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub mu_k: f64,
    pub capacity_upper_bound: f64,
    /// `‖-L_Φ u‖` through the nodal dual-norm surrogate.
    pub operator_dual_norm: f64,
    pub samples: Vec<ProbeSample>,
    /// Smallest bound on `μ(K)` over the family.
    pub smallest_bound: f64,
    /// `μ(K) ≤ smallest_bound`.
    pub compatible: bool,
}

/// Evaluates both sides of `μ(K) ≤ |∫ φ dμ| ≤ (C₆‖-L_Φ u‖ + C₇‖u‖_q^{q-1}) ‖φ‖_{s,q}`
/// along the capacity-solve iterates, whose norms decrease toward
/// `Cap_{s,q}(K)^{1/q}`.
pub fn necessary_condition_probe(
    u: &GridFunction,
    m: &EnergyModel,
    mu: &DiscreteMeasure,
    k: &CompactSet1D,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let (p, q) = (m.p(), m.q());
    if !(2.0 < p && p < q) {
        return Err(Error::Precondition(format!("2 < p < q required, got p = {p}, q = {q}")));
    }
    let g = m.quad().gauss_order;
    let mu_k = mu.mass_on(k, g);
    let (cap, family) = capacity_iterates(k, m.mesh(), m.kernel().s(), q, opts.tol, opts.max_iter)?;
    let react = reaction_vector(u, q, g);
    let op: Vec<f64> = {
        let phi = m.phi();
        m.table().pairing_gradient(u, SeminormWeight::Kernel, |t| phi.phi(t))
    };
    let norms = m.basis_norms();
    let operator_dual_norm = (1..m.mesh().n_elem()).fold(0.0f64, |acc, i| acc.max(op[i].abs() / norms[i]));
    let uq = m.lq_norm(u).powf(q - 1.0);
    let factor = opts.c6 * operator_dual_norm + opts.c7 * uq;
    let mut samples = Vec::with_capacity(family.len());
    for (phi, j) in family.iter().zip(&cap.energy_trace) {
        let phi_norm = j.powf(1.0 / q);
        let pair = operator_pairing(u, phi, m)?;
        let r: f64 = react.iter().zip(phi.nodal()).map(|(a, b)| a * b).sum();
        samples.push(ProbeSample { phi_norm, lhs: (pair - m.lambda() * r).abs(), bound: factor * phi_norm });
    }
    let smallest_bound = samples.iter().map(|s| s.bound).fold(f64::INFINITY, f64::min);
    Ok(ProbeReport {
        mu_k,
        capacity_upper_bound: cap.capacity_upper_bound,
        operator_dual_norm,
        samples,
        smallest_bound,
        compatible: mu_k <= smallest_bound,
    })
}

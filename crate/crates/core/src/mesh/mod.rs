//! Uniform one-dimensional meshes, piecewise-linear grid functions with zero
//! exterior extension, and the quadrature of single and singular double
//! integrals built on them.

mod io;
mod table;

use std::sync::Arc;

pub use io::{read_grid_function, write_grid_function};
pub use table::{Cell, InteractionTable, PairEntry, SeminormWeight, SingleEntry};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::quad::GaussRule;
use crate::reduce::CompensatedSum;

/// Uniform mesh of `[a, b]` with an exterior truncation radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    a: f64,
    b: f64,
    n_elem: usize,
    tail_radius: f64,
}

impl Mesh1D {
    /// Mesh with the default truncation radius `10 (b - a)`.
    pub fn new(a: f64, b: f64, n_elem: usize) -> Result<Self> {
        Self::with_tail_radius(a, b, n_elem, 10.0 * (b - a))
    }

    pub fn with_tail_radius(a: f64, b: f64, n_elem: usize, tail_radius: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!("need a < b, got a = {a}, b = {b}")));
        }
        if n_elem < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 elements, got {n_elem}")));
        }
        if !(tail_radius.is_finite() && tail_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("tail radius must be > 0, got {tail_radius}")));
        }
        Ok(Mesh1D { a, b, n_elem, tail_radius })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_elem(&self) -> usize {
        self.n_elem
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elem + 1
    }

    /// Number of interior (free) nodes.
    pub fn n_interior(&self) -> usize {
        self.n_elem - 1
    }

    pub fn tail_radius(&self) -> f64 {
        self.tail_radius
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n_elem as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_elem {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }
}

/// How the far tail beyond `[a - R, b + R]` is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailQuadrature {
    /// Closed form `∫_D^∞ r^{-1-sp} dr`; standard kernel only.
    Analytic,
    /// Gauss quadrature after the substitution `z = r^{-sp}`.
    GradedNumeric,
}

/// Quadrature parameters. Part of the discrete problem definition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub gauss_order: usize,
    pub diagonal_refinement: usize,
    pub grading_ratio: f64,
    pub tail: TailQuadrature,
}

impl QuadratureRule {
    /// Defaults: 4 Gauss points, 6 grading levels at ratio 0.5, analytic tail
    /// for the standard kernel and graded-numeric otherwise.
    pub fn default_for(kernel: &KernelSpec) -> Self {
        QuadratureRule {
            gauss_order: 4,
            diagonal_refinement: 6,
            grading_ratio: 0.5,
            tail: if kernel.is_standard() { TailQuadrature::Analytic } else { TailQuadrature::GradedNumeric },
        }
    }

    pub fn validate(&self, kernel: &KernelSpec) -> Result<()> {
        if self.gauss_order < 2 {
            return Err(Error::Configuration(format!("gauss_order must be >= 2, got {}", self.gauss_order)));
        }
        if self.diagonal_refinement < 1 {
            return Err(Error::Configuration("diagonal_refinement must be >= 1".into()));
        }
        if !(self.grading_ratio > 0.0 && self.grading_ratio < 1.0) {
            return Err(Error::Configuration(format!("grading ratio must lie in (0,1), got {}", self.grading_ratio)));
        }
        if self.tail == TailQuadrature::Analytic && !kernel.is_standard() {
            return Err(Error::Configuration(format!(
                "analytic tail requested for non-standard kernel `{}`",
                kernel.name()
            )));
        }
        Ok(())
    }
}

/// Piecewise-linear function on a mesh, zero at `a`, `b` and outside `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Mesh1D,
    // full nodal vector including the two boundary zeros
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zero(mesh: &Mesh1D) -> Self {
        GridFunction { mesh: *mesh, values: vec![0.0; mesh.n_nodes()] }
    }

    /// From the `n_elem - 1` interior nodal values.
    pub fn from_interior(mesh: &Mesh1D, interior: &[f64]) -> Result<Self> {
        if interior.len() != mesh.n_interior() {
            return Err(Error::MeshMismatch(format!(
                "expected {} interior values, got {}",
                mesh.n_interior(),
                interior.len()
            )));
        }
        if let Some(v) = interior.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("grid values must be finite, got {v}")));
        }
        let mut values = Vec::with_capacity(mesh.n_nodes());
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        Ok(GridFunction { mesh: *mesh, values })
    }

    /// Nodal interpolant of `f`; boundary values are forced to zero.
    pub fn from_fn(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        let mut values: Vec<f64> = (0..mesh.n_nodes()).map(|i| f(mesh.node(i))).collect();
        values[0] = 0.0;
        values[mesh.n_elem()] = 0.0;
        GridFunction { mesh: *mesh, values }
    }

    /// Nodal basis function of interior node `i` (`1 <= i < n_elem`).
    pub fn hat(mesh: &Mesh1D, i: usize) -> Self {
        assert!(i >= 1 && i < mesh.n_elem(), "hat index must be interior");
        let mut g = Self::zero(mesh);
        g.values[i] = 1.0;
        g
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    /// Full nodal vector, boundary zeros included.
    pub fn nodal(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.mesh.n_elem()]
    }

    /// Point evaluation; zero outside `[a, b]`.
    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = (self.mesh.a(), self.mesh.b());
        if !(x > a && x < b) {
            return 0.0;
        }
        let h = self.mesh.h();
        let t = (x - a) / h;
        let i = (t.floor() as usize).min(self.mesh.n_elem() - 1);
        let xi = t - i as f64;
        (1.0 - xi) * self.values[i] + xi * self.values[i + 1]
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction { mesh: self.mesh, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> Result<Self> {
        self.check_same_mesh(other)?;
        Ok(GridFunction {
            mesh: self.mesh,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn check_same_mesh(&self, other: &GridFunction) -> Result<()> {
        if self.mesh != other.mesh {
            return Err(Error::MeshMismatch(format!("{:?} vs {:?}", self.mesh, other.mesh)));
        }
        Ok(())
    }

    pub(crate) fn from_nodal_unchecked(mesh: &Mesh1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.n_nodes());
        GridFunction { mesh: *mesh, values }
    }
}

/// Right-hand side datum: a grid function or an analytic profile.
#[derive(Clone)]
pub enum Source {
    Grid(GridFunction),
    Analytic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Grid(g) => f.debug_tuple("Grid").field(g).finish(),
            Source::Analytic(_) => f.write_str("Analytic(..)"),
        }
    }
}

impl Source {
    pub fn analytic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::Analytic(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Source::Grid(g) => g.eval(x),
            Source::Analytic(f) => f(x),
        }
    }

    /// `c · self`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Source::Grid(g) => Source::Grid(g.scaled(c)),
            Source::Analytic(f) => {
                let f = f.clone();
                Source::Analytic(Arc::new(move |x| c * f(x)))
            }
        }
    }
}

/// Gauss points of every element, in element order: `(element, x, weight, ξ)`.
pub fn element_points(mesh: &Mesh1D, gauss_order: usize) -> Vec<(usize, f64, f64, f64)> {
    let rule = GaussRule::unit(gauss_order);
    let h = mesh.h();
    let mut out = Vec::with_capacity(mesh.n_elem() * gauss_order);
    for e in 0..mesh.n_elem() {
        let x0 = mesh.node(e);
        for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((e, x0 + xi * h, w * h, *xi));
        }
    }
    out
}

/// `(∫_Ω |u|^q dx)^{1/q}` with `gauss_order` points per element.
pub fn lq_norm(u: &GridFunction, q: f64, gauss_order: usize) -> f64 {
    lq_integral(u, q, gauss_order).powf(1.0 / q)
}

/// `∫_Ω |u|^q dx`.
pub fn lq_integral(u: &GridFunction, q: f64, gauss_order: usize) -> f64 {
    let vals = u.nodal();
    element_points(u.mesh(), gauss_order)
        .into_iter()
        .map(|(e, _, w, xi)| {
            let v = (1.0 - xi) * vals[e] + xi * vals[e + 1];
            w * v.abs().powf(q)
        })
        .collect::<CompensatedSum>()
        .value()
}

/// `∫_Ω f u dx`.
pub fn duality_pairing(f: &Source, u: &GridFunction, gauss_order: usize) -> Result<f64> {
    if let Source::Grid(g) = f {
        g.check_same_mesh(u)?;
    }
    let vals = u.nodal();
    Ok(element_points(u.mesh(), gauss_order)
        .into_iter()
        .map(|(e, x, w, xi)| {
            let v = (1.0 - xi) * vals[e] + xi * vals[e + 1];
            w * f.eval(x) * v
        })
        .collect::<CompensatedSum>()
        .value())
}

/// `(∫_Ω f e_i dx)_i` over interior nodal basis functions, indexed by node
/// (boundary entries are zero).
pub fn load_vector(f: &Source, mesh: &Mesh1D, gauss_order: usize) -> Result<Vec<f64>> {
    if let Source::Grid(g) = f {
        if g.mesh() != mesh {
            return Err(Error::MeshMismatch("source lives on a different mesh".into()));
        }
    }
    let mut out = vec![0.0; mesh.n_nodes()];
    for (e, x, w, xi) in element_points(mesh, gauss_order) {
        let fx = f.eval(x) * w;
        out[e] += fx * (1.0 - xi);
        out[e + 1] += fx * xi;
    }
    out[0] = 0.0;
    let n = mesh.n_elem();
    out[n] = 0.0;
    Ok(out)
}

/// Gagliardo seminorm `[u]` with weight `|x-y|^{-(N+sp)}` (pure) or
/// `K(x, y)` (kernel-weighted), on a freshly assembled table.
pub fn gagliardo_seminorm(
    u: &GridFunction,
    kernel: &KernelSpec,
    rule: &QuadratureRule,
    weight: SeminormWeight,
) -> Result<f64> {
    let table = InteractionTable::build(u.mesh(), kernel, rule)?;
    table.seminorm(u, weight)
}

/// `‖u‖_{W^{s,p}} = (‖u‖_p^p + [u]^p)^{1/p}`. Also see [`InteractionTable::seminorm`]
/// for the equivalent `W₀` norm.
pub fn sobolev_norm(u: &GridFunction, kernel: &KernelSpec, rule: &QuadratureRule) -> Result<f64> {
    let table = InteractionTable::build(u.mesh(), kernel, rule)?;
    Ok(table.sobolev_norm(u))
}

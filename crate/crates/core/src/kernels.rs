//! Structural data of the nonlocal operator: the nonlinearity `Φ` with its
//! growth bounds and the interaction kernel `K(x, y)` with its two-sided
//! power-law bounds.
//!
//! Both specs are immutable after construction. Custom instances are built
//! from closures; their bounds are *not* checked at construction so that
//! [`PhiSpec::validate`] and [`KernelSpec::validate`] can report violations.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quad;

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type KernelMap = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Relative tolerance of the numeric primitive.
pub const PRIMITIVE_REL_TOL: f64 = 1e-12;

#[derive(Clone)]
pub enum PhiKind {
    /// `|t|^{p-2} t`.
    Power,
    /// `|t|^{p-2} t · (1.5 + 0.5 cos t) / 1.5`, declared with `Λ = 2`.
    CosinePerturbed,
    Custom(ScalarMap),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveMode {
    ClosedForm,
    NumericQuadrature,
}

/// The nonlinearity `Φ` together with its exponent `p` and constant `Λ`.
#[derive(Clone)]
pub struct PhiSpec {
    name: String,
    p: f64,
    lambda_cap: f64,
    kind: PhiKind,
}

impl fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("lambda_cap", &self.lambda_cap)
            .finish()
    }
}

fn check_exponent_and_cap(p: f64, lambda_cap: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p must be > 1, got {p}")));
    }
    if !(lambda_cap.is_finite() && lambda_cap >= 1.0) {
        return Err(Error::InvalidParameter(format!("ellipticity constant must be >= 1, got {lambda_cap}")));
    }
    Ok(())
}

impl PhiSpec {
    pub fn power(p: f64) -> Result<Self> {
        check_exponent_and_cap(p, 1.0)?;
        Ok(PhiSpec { name: "power".into(), p, lambda_cap: 1.0, kind: PhiKind::Power })
    }

    pub fn cosine_perturbed(p: f64) -> Result<Self> {
        check_exponent_and_cap(p, 2.0)?;
        Ok(PhiSpec { name: "perturbed".into(), p, lambda_cap: 2.0, kind: PhiKind::CosinePerturbed })
    }

    /// A user-supplied `Φ`. Only `Φ(0) = 0` is enforced here.
    pub fn custom(
        name: impl Into<String>,
        p: f64,
        lambda_cap: f64,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_exponent_and_cap(p, lambda_cap)?;
        if phi(0.0) != 0.0 {
            return Err(Error::InvalidParameter("custom phi must vanish at 0".into()));
        }
        Ok(PhiSpec { name: name.into(), p, lambda_cap, kind: PhiKind::Custom(Arc::new(phi)) })
    }

    /// Looks up a built-in instance by name (`power` or `perturbed`).
    pub fn by_name(name: &str, p: f64) -> Result<Self> {
        match name {
            "power" => Self::power(p),
            "perturbed" => Self::cosine_perturbed(p),
            other => Err(Error::InvalidParameter(format!("unknown phi instance `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda_cap(&self) -> f64 {
        self.lambda_cap
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn primitive_mode(&self) -> PrimitiveMode {
        match self.kind {
            PhiKind::Power => PrimitiveMode::ClosedForm,
            _ => PrimitiveMode::NumericQuadrature,
        }
    }

    /// `Φ(t)` without input checks; the assembly hot path.
    #[inline]
    pub fn phi(&self, t: f64) -> f64 {
        match &self.kind {
            PhiKind::Power => power_phi(t, self.p),
            PhiKind::CosinePerturbed => power_phi(t, self.p) * (1.5 + 0.5 * t.cos()) / 1.5,
            PhiKind::Custom(f) => f(t),
        }
    }

    /// `∫_0^{|t|} Φ(τ) dτ` without input checks.
    #[inline]
    pub fn primitive(&self, t: f64) -> f64 {
        let a = t.abs();
        if a == 0.0 {
            return 0.0;
        }
        match &self.kind {
            PhiKind::Power => a.powf(self.p) / self.p,
            _ => quad::adaptive(&|tau: f64| self.phi(tau), 0.0, a, PRIMITIVE_REL_TOL),
        }
    }

    pub fn eval_phi(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("phi argument must be finite, got {t}")));
        }
        Ok(self.phi(t))
    }

    pub fn eval_primitive(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("primitive argument must be finite, got {t}")));
        }
        Ok(self.primitive(t))
    }

    /// Worst-case ratios `Φ(t) t / |t|^p` over `samples` (zeros skipped).
    pub fn validate(&self, samples: &[f64]) -> Result<BoundReport> {
        if samples.is_empty() {
            return Err(Error::Domain("validate_phi needs at least one sample".into()));
        }
        let mut ratios = Vec::with_capacity(samples.len());
        for &t in samples {
            if !t.is_finite() {
                return Err(Error::Domain(format!("non-finite sample {t}")));
            }
            if t == 0.0 {
                continue;
            }
            ratios.push((t, self.phi(t) * t / t.abs().powf(self.p)));
        }
        if ratios.is_empty() {
            return Err(Error::Domain("validate_phi needs a nonzero sample".into()));
        }
        Ok(BoundReport::from_ratios(ratios.into_iter().map(|(t, r)| ((t, 0.0), r)), self.lambda_cap))
    }

    /// Largest jump of `Φ` between neighbours of a uniform grid on `[-2, 2]`
    /// with spacing `step`.
    pub fn continuity_modulus(&self, step: f64) -> f64 {
        let n = (4.0 / step).round() as usize;
        let mut worst = 0.0f64;
        let mut prev = self.phi(-2.0);
        for i in 1..=n {
            let t = -2.0 + 4.0 * i as f64 / n as f64;
            let cur = self.phi(t);
            worst = worst.max((cur - prev).abs());
            prev = cur;
        }
        worst
    }

    /// Continuity check: the modulus must shrink under grid refinement.
    pub fn looks_continuous(&self) -> bool {
        let m1 = self.continuity_modulus(1e-2);
        let m2 = self.continuity_modulus(1e-3);
        let m3 = self.continuity_modulus(1e-4);
        m3 < m2 && m2 < m1 && m3 < 0.1
    }
}

#[inline]
fn power_phi(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if p == 2.0 {
        t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

#[derive(Clone)]
pub enum KernelKind {
    /// `|x - y|^{-(N + sp)}`.
    Standard,
    /// `(1.5 + 0.5 sin(x + y)) |x - y|^{-(N + sp)}`, declared with `Λ = 2`.
    SinePerturbed,
    Custom(KernelMap),
}

/// The kernel `K(x, y)` with order `s`, exponent `p` and constant `Λ`.
#[derive(Clone)]
pub struct KernelSpec {
    name: String,
    s: f64,
    p: f64,
    lambda_cap: f64,
    dim: usize,
    kind: KernelKind,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("s", &self.s)
            .field("p", &self.p)
            .field("lambda_cap", &self.lambda_cap)
            .field("dim", &self.dim)
            .finish()
    }
}

impl KernelSpec {
    fn checked(name: &str, s: f64, p: f64, lambda_cap: f64, dim: usize, kind: KernelKind) -> Result<Self> {
        check_exponent_and_cap(p, lambda_cap)?;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("order s must lie in (0,1), got {s}")));
        }
        if dim != 1 {
            return Err(Error::InvalidParameter(format!("only dimension N = 1 is supported, got {dim}")));
        }
        let n = dim as f64;
        if p <= 2.0 - s / n {
            return Err(Error::InvalidParameter(format!("p > 2 - s/N required, got p = {p}, s = {s}")));
        }
        Ok(KernelSpec { name: name.into(), s, p, lambda_cap, dim, kind })
    }

    pub fn standard(s: f64, p: f64) -> Result<Self> {
        Self::checked("standard", s, p, 1.0, 1, KernelKind::Standard)
    }

    /// Weight `|x - y|^{-(1 + sq)}` of the `W^{s,q}` seminorm for any `q > 1`,
    /// without the `p > 2 - s/N` restriction of the problem kernels.
    pub fn gagliardo_weight(s: f64, q: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("order s must lie in (0,1), got {s}")));
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("need q > 1, got {q}")));
        }
        Ok(KernelSpec { name: "standard".into(), s, p: q, lambda_cap: 1.0, dim: 1, kind: KernelKind::Standard })
    }

    pub fn sine_perturbed(s: f64, p: f64) -> Result<Self> {
        Self::checked("perturbed", s, p, 2.0, 1, KernelKind::SinePerturbed)
    }

    pub fn custom(
        name: impl Into<String>,
        s: f64,
        p: f64,
        lambda_cap: f64,
        dim: usize,
        kernel: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        Self::checked(&name, s, p, lambda_cap, dim, KernelKind::Custom(Arc::new(kernel)))
    }

    pub fn by_name(name: &str, s: f64, p: f64) -> Result<Self> {
        match name {
            "standard" => Self::standard(s, p),
            "perturbed" => Self::sine_perturbed(s, p),
            other => Err(Error::InvalidParameter(format!("unknown kernel instance `{other}`"))),
        }
    }

    /// The same kernel family with a different exponent.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        Self::checked(&self.name, self.s, p, self.lambda_cap, self.dim, self.kind.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda_cap(&self) -> f64 {
        self.lambda_cap
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_standard(&self) -> bool {
        matches!(self.kind, KernelKind::Standard)
    }

    /// `N + sp`, the homogeneity degree of the comparison kernel.
    pub fn exponent(&self) -> f64 {
        self.dim as f64 + self.s * self.p
    }

    /// Fractional Sobolev conjugate `Np/(N - sp)`, infinite when `sp >= N`.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim as f64;
        if self.s * self.p >= n {
            f64::INFINITY
        } else {
            n * self.p / (n - self.s * self.p)
        }
    }

    /// `K(x, y) |x - y|^{N + sp}`, bounded in `[1/Λ, Λ]` for valid kernels.
    #[inline]
    pub fn reduced(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            KernelKind::Standard => 1.0,
            KernelKind::SinePerturbed => 1.5 + 0.5 * (x + y).sin(),
            KernelKind::Custom(k) => k(x, y) * (x - y).abs().powf(self.exponent()),
        }
    }

    /// `K(x, y)` for `x != y` without input checks.
    #[inline]
    pub fn k(&self, x: f64, y: f64) -> f64 {
        match &self.kind {
            KernelKind::Custom(k) => k(x, y),
            _ => self.reduced(x, y) * (x - y).abs().powf(-self.exponent()),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Domain("kernel arguments must be finite".into()));
        }
        if x == y {
            return Err(Error::Domain(format!("kernel is singular on the diagonal (x = y = {x})")));
        }
        Ok(self.k(x, y))
    }

    /// Worst-case ratios `K(x,y) |x-y|^{N+sp}` over the given pairs.
    pub fn validate(&self, pairs: &[(f64, f64)]) -> Result<BoundReport> {
        if pairs.is_empty() {
            return Err(Error::Domain("validate_kernel needs at least one pair".into()));
        }
        let mut ratios = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            let k = self.eval(x, y)?;
            ratios.push(((x, y), k * (x - y).abs().powf(self.exponent())));
        }
        Ok(BoundReport::from_ratios(ratios, self.lambda_cap))
    }
}

/// Relative rounding slack allowed when comparing a ratio with `[1/Λ, Λ]`.
pub const RATIO_SLACK: f64 = 1e-12;

/// Min/max of a normalized bound ratio over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lambda_cap: f64,
    /// Sample (or pair) attaining the worst violation, if any.
    pub worst_sample: Option<(f64, f64)>,
    pub violated: bool,
    pub samples: usize,
}

impl BoundReport {
    fn from_ratios(ratios: impl IntoIterator<Item = ((f64, f64), f64)>, lambda_cap: f64) -> Self {
        // ratios are computed with a few roundings; equality at Λ must not flag
        let hi = lambda_cap * (1.0 + RATIO_SLACK);
        let lo = (1.0 - RATIO_SLACK) / lambda_cap;
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = f64::NEG_INFINITY;
        let mut worst: Option<((f64, f64), f64)> = None;
        let mut samples = 0;
        for (at, r) in ratios {
            samples += 1;
            min_ratio = min_ratio.min(r);
            max_ratio = max_ratio.max(r);
            // excess over the admissible band, measured multiplicatively
            let excess = if r > hi {
                r / lambda_cap
            } else if r < lo {
                lo / r.max(f64::MIN_POSITIVE)
            } else {
                1.0
            };
            if excess > 1.0 && worst.is_none_or(|(_, e)| excess > e) {
                worst = Some((at, excess));
            }
        }
        BoundReport {
            min_ratio,
            max_ratio,
            lambda_cap,
            worst_sample: worst.map(|(at, _)| at),
            violated: worst.is_some(),
            samples,
        }
    }
}

/// Default `Φ` sample grid: 100 log-spaced magnitudes in `[1e-6, 1e6]`, both signs.
pub fn default_phi_samples() -> Vec<f64> {
    let n = 100;
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let e = -6.0 + 12.0 * i as f64 / (n - 1) as f64;
        let t = 10f64.powf(e);
        out.push(t);
        out.push(-t);
    }
    out
}

/// `count` random off-diagonal pairs in `[lo, hi]^2`, seeded.
pub fn random_pairs(count: usize, lo: f64, hi: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = rng.gen_range(lo..hi);
        let y = rng.gen_range(lo..hi);
        if x != y {
            out.push((x, y));
        }
    }
    out
}

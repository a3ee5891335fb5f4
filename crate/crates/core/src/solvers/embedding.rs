//! Sampled embedding constants of `W₀^{s,p}` into `L^p` and `L^q`, and the
//! Rayleigh-type infimum `inf ‖u‖_{W₀} / ‖u‖_q`.
//!
//! Sampling over a finite family gives lower bounds for the embedding
//! constants and an upper bound for the infimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sphere::sphere_constrained_solve_from;
use super::SolveReport;
use crate::error::Result;
use crate::functionals::{check_exponents, EnergyModel};
use crate::kernels::{KernelSpec, PhiSpec};
use crate::mesh::{lq_integral, GridFunction, InteractionTable, Mesh1D, QuadratureRule, SeminormWeight};
use crate::suite::{random_smooth, test_suite};

/// Highest sine mode of the random smooth samples.
const MAX_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConstants {
    /// `max ‖w‖_p^p` over `W₀`-normalized samples (a lower bound for `C₄`).
    pub c4: f64,
    /// `max ‖w‖_q^q` over the same samples (a lower bound for `C₅`).
    pub c5: f64,
    pub suite_size: usize,
    pub random_samples: usize,
}

/// Suite plus `samples` random smooth profiles drawn from a seeded stream.
/// The stream is prefix-stable: more samples only add candidates.
pub fn estimate_embedding_constants_with(
    table: &InteractionTable,
    q: f64,
    samples: usize,
    seed: u64,
) -> EmbeddingConstants {
    let mesh = table.mesh();
    let p = table.p();
    let g = table.rule().gauss_order;
    let measure = |w: &GridFunction| {
        let norm = table.w0_norm(w);
        (lq_integral(w, p, g) / norm.powf(p), lq_integral(w, q, g) / norm.powf(q))
    };
    let (mut c4, mut c5) = (0.0f64, 0.0f64);
    let suite = test_suite(mesh);
    for (_, w) in &suite {
        let (a, b) = measure(w);
        c4 = c4.max(a);
        c5 = c5.max(b);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let modes = rng.gen_range(1..=MAX_MODES);
        let w = random_smooth(mesh, &mut rng, modes);
        let (a, b) = measure(&w);
        c4 = c4.max(a);
        c5 = c5.max(b);
    }
    EmbeddingConstants { c4, c5, suite_size: suite.len(), random_samples: samples }
}

pub fn estimate_embedding_constants(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    q: f64,
    samples: usize,
    seed: u64,
) -> Result<EmbeddingConstants> {
    check_exponents(kernel.p(), q, kernel)?;
    let table = InteractionTable::build(mesh, kernel, &QuadratureRule::default_for(kernel))?;
    Ok(estimate_embedding_constants_with(&table, q, samples, seed))
}

#[derive(Debug, Clone)]
pub struct RayleighEstimate {
    /// `min(solver ratio, sample ratio)`: an upper bound for the infimum.
    pub ratio: f64,
    /// `‖w‖_{W₀}` at the constrained minimizer (with `‖w‖_q = 1`).
    pub solver_ratio: f64,
    /// Smallest ratio among the suite and random samples.
    pub sample_ratio: f64,
    /// The constrained minimizer.
    pub minimizer: GridFunction,
    pub report: SolveReport,
}

/// The `W₀` norm does not involve `K`; only `s` and `p` are taken from
/// `kernel`. Minimizes `‖u‖^p_{W₀} / p` on `{‖u‖_q = 1}` and compares with
/// `samples` random ratios.
pub fn rayleigh_inf_estimate(
    mesh: &Mesh1D,
    kernel: &KernelSpec,
    q: f64,
    samples: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<RayleighEstimate> {
    let p = kernel.p();
    let standard = KernelSpec::standard(kernel.s(), p)?;
    let model = EnergyModel::new(
        PhiSpec::power(p)?,
        standard.clone(),
        1.0,
        q,
        None,
        *mesh,
        QuadratureRule::default_for(&standard),
    )?;
    rayleigh_with_model(&model, samples, seed, tol, max_iter)
}

/// Same as [`rayleigh_inf_estimate`] on a model whose energy is `[u]^p / p`
/// up to the constant `λ/q` on the sphere.
pub(crate) fn rayleigh_with_model(
    model: &EnergyModel,
    samples: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<RayleighEstimate> {
    let table = model.table();
    let g = model.quad().gauss_order;
    let q = model.q();
    let ratio = |w: &GridFunction| table.w0_norm(w) / lq_integral(w, q, g).powf(1.0 / q);
    let mut sample_ratio = f64::INFINITY;
    let suite = test_suite(model.mesh());
    for (_, w) in &suite {
        sample_ratio = sample_ratio.min(ratio(w));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let modes = rng.gen_range(1..=MAX_MODES);
        sample_ratio = sample_ratio.min(ratio(&random_smooth(model.mesh(), &mut rng, modes)));
    }
    let start =
        suite.iter().map(|(_, w)| w).min_by(|a, b| ratio(a).total_cmp(&ratio(b))).expect("suite is nonempty").clone();
    let sphere = sphere_constrained_solve_from(model, &start, tol, max_iter)?;
    let minimizer = sphere.report.solution.clone();
    let solver_ratio =
        table.seminorm_pow(&minimizer, SeminormWeight::Pure).powf(1.0 / table.p()) / model.lq_norm(&minimizer);
    Ok(RayleighEstimate {
        ratio: solver_ratio.min(sample_ratio),
        solver_ratio,
        sample_ratio,
        minimizer,
        report: sphere.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_grow_with_samples_and_bound_suite() {
        let mesh = Mesh1D::new(0.0, 1.0, 16).unwrap();
        let k = KernelSpec::standard(0.5, 2.0).unwrap();
        let c_small = estimate_embedding_constants(&mesh, &k, 3.0, 20, 7).unwrap();
        let c_big = estimate_embedding_constants(&mesh, &k, 3.0, 60, 7).unwrap();
        assert!(c_big.c4 >= c_small.c4 && c_big.c5 >= c_small.c5);
        assert!(c_small.c4 > 0.0 && c_small.c4.is_finite());
        let t = InteractionTable::build(&mesh, &k, &QuadratureRule::default_for(&k)).unwrap();
        for (_, w) in test_suite(&mesh) {
            let n = t.w0_norm(&w);
            assert!(lq_integral(&w, 2.0, 4) / n.powi(2) <= c_small.c4 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rayleigh_is_scale_invariant_and_below_samples() {
        let mesh = Mesh1D::new(0.0, 1.0, 16).unwrap();
        let k = KernelSpec::standard(0.5, 2.0).unwrap();
        let est = rayleigh_inf_estimate(&mesh, &k, 3.0, 30, 1, 1e-8, 500).unwrap();
        assert!(est.ratio <= est.sample_ratio);
        assert!(est.report.converged);
        let t = InteractionTable::build(&mesh, &k, &QuadratureRule::default_for(&k)).unwrap();
        let w = &est.minimizer;
        let r1 = t.w0_norm(w) / lq_integral(w, 3.0, 4).powf(1.0 / 3.0);
        let w2 = w.scaled(-3.7);
        let r2 = t.w0_norm(&w2) / lq_integral(&w2, 3.0, 4).powf(1.0 / 3.0);
        assert!((r1 - r2).abs() < 1e-12 * r1);
    }
}

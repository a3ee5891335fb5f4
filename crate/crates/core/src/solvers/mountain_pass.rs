//! Mountain-pass saddle search for P2.
//!
//! A discrete path from `u₀ = 0` to `u₁` (where `I(u₁) < 0`) is deformed by
//! moving its highest interior point along the Sobolev gradient with the
//! path tangent removed. Once the residual at the path maximum is small the
//! point is polished by damped Newton. The path maximum never increases,
//! since only the maximizer moves and every accepted move lowers its energy.

use std::time::Instant;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::closed_form::{f_profile, lambda1_threshold, r0_maximizer, FParams};
use super::embedding::{estimate_embedding_constants_with, rayleigh_with_model};
use super::{axpy, dot, grid, initial_step, newton_polish, state, SobolevMetric, SolveReport, ARMIJO};
use crate::error::{Error, Result};
use crate::functionals::{energy, EnergyModel, Problem};
use crate::kernels::{KernelSpec, PhiSpec};
use crate::mesh::{GridFunction, QuadratureRule};
use crate::suite::random_smooth;

#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub path_points: usize,
    pub sphere_samples: usize,
    pub embedding_samples: usize,
    pub seed: u64,
    /// Residual at the path maximum below which Newton polishing starts.
    pub newton_switch: f64,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions {
            tol: 1e-6,
            max_iter: 2000,
            path_points: 33,
            sphere_samples: 200,
            embedding_samples: 500,
            seed: 0,
            newton_switch: 1e-2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MountainPassGeometry {
    pub c4: f64,
    pub c5: f64,
    pub f_norm: f64,
    /// The reference threshold evaluated with the sampled constants.
    pub lambda1: f64,
    /// The closed-form radius formula.
    pub r0_printed: f64,
    /// The maximizer of `F`; used as the radius of the sampled sphere.
    pub r0: f64,
    /// `(r, F(r))` on a log grid over `[r0/100, 100 r0]`.
    pub f_profile: Vec<(f64, f64)>,
    pub u1: GridFunction,
    pub energy_u1: f64,
    /// Smallest sampled energy on `‖v‖_{W₀} = r0`.
    pub sphere_min_estimate: f64,
    pub sphere_samples: usize,
}

impl MountainPassGeometry {
    /// `min_{‖v‖=r0} I(v) > max(I(0), I(u₁))` on the samples.
    pub fn separates(&self) -> bool {
        self.sphere_min_estimate > self.energy_u1.max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct MountainPassReport {
    pub report: SolveReport,
    pub geometry: MountainPassGeometry,
    /// Path maximum before each deformation step.
    pub path_max_trace: Vec<f64>,
    pub newton_steps: usize,
    pub warnings: Vec<String>,
}

/// Guard within 10% of a hard boundary: returns a warning message.
fn near(value: f64, bound: f64) -> bool {
    value >= 0.9 * bound
}

/// Embedding constants, `λ₁`, `r0`, `u₁` and the sampled sphere minimum.
/// Errors when `λ ≥ λ₁` or `Λ ≥ (q/p)^{1/4}`; warns within 10% of either.
pub fn mountain_pass_geometry(
    m: &EnergyModel,
    opts: &MountainPassOptions,
) -> Result<(MountainPassGeometry, Vec<String>)> {
    if m.problem() != Problem::P2 {
        return Err(Error::Precondition("mountain pass needs a source f".into()));
    }
    let mut warnings = Vec::new();
    let (p, q, lam_cap, lambda) = (m.p(), m.q(), m.lambda_cap(), m.lambda());
    let cap_bound = (q / p).powf(0.25);
    if lam_cap >= cap_bound {
        return Err(Error::Precondition(format!("Λ ∈ [1, (q/p)^(1/4)) violated: Λ = {lam_cap}, bound {cap_bound}")));
    }
    if near(lam_cap, cap_bound) && lam_cap > 1.0 {
        warnings.push(format!("Λ = {lam_cap} within 10% of (q/p)^(1/4) = {cap_bound}"));
    }
    let consts = estimate_embedding_constants_with(m.table(), q, opts.embedding_samples, opts.seed);
    let f_norm = m.source_dual_norm();
    let lambda1 =
        if f_norm > 0.0 { lambda1_threshold(p, q, lam_cap, consts.c4, consts.c5, f_norm)? } else { f64::INFINITY };
    if lambda >= lambda1 {
        return Err(Error::Precondition(format!("λ < λ₁ violated: λ = {lambda}, λ₁ ≈ {lambda1}")));
    }
    if near(lambda, lambda1) {
        warnings.push(format!("λ = {lambda} within 10% of the estimated λ₁ = {lambda1}"));
    }
    let r0 = r0_maximizer(p, q, lam_cap, lambda, consts.c5)?;
    let fp = FParams { p, q, lambda_cap: lam_cap, lambda, c4: consts.c4, c5: consts.c5, f_norm };
    let profile = f_profile(&fp, r0.stationary / 100.0, r0.stationary * 100.0, 201);

    // u₁ = k w with w the W₀-normalized minimizer of ‖·‖_{W₀} on 𝔐
    let standard = KernelSpec::standard(m.kernel().s(), p)?;
    let rayleigh_model = EnergyModel::new(
        PhiSpec::power(p)?,
        standard.clone(),
        1.0,
        q,
        None,
        *m.mesh(),
        QuadratureRule::default_for(&standard),
    )?;
    let ray = rayleigh_with_model(&rayleigh_model, 0, opts.seed, 1e-8, 2000)?;
    let mut w = ray.minimizer.scaled(1.0 / m.w0_norm(&ray.minimizer));
    if let Some(f) = m.source() {
        if crate::mesh::duality_pairing(f, &w, m.quad().gauss_order)? < 0.0 {
            w = w.scaled(-1.0);
        }
    }
    let mut k = 1.0;
    let mut u1 = w.scaled(k);
    let mut e1 = energy(&u1, m)?;
    while e1 >= 0.0 || k <= r0.stationary {
        k *= 2.0;
        if k > 1e12 {
            return Err(Error::Precondition("no k with I(k w) < 0 found".into()));
        }
        u1 = w.scaled(k);
        e1 = energy(&u1, m)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut sphere_min = f64::INFINITY;
    for _ in 0..opts.sphere_samples {
        let modes = rng.gen_range(1..=8);
        let v = random_smooth(m.mesh(), &mut rng, modes);
        let v = v.scaled(r0.stationary / m.w0_norm(&v));
        sphere_min = sphere_min.min(energy(&v, m)?);
    }
    for msg in &warnings {
        warn!("{msg}");
    }
    Ok((
        MountainPassGeometry {
            c4: consts.c4,
            c5: consts.c5,
            f_norm,
            lambda1,
            r0_printed: r0.printed,
            r0: r0.stationary,
            f_profile: profile,
            u1,
            energy_u1: e1,
            sphere_min_estimate: sphere_min,
            sphere_samples: opts.sphere_samples,
        },
        warnings,
    ))
}

/// Index of the highest interior path point; lowest index on ties.
fn path_argmax(energies: &[f64]) -> usize {
    let mut best = 1;
    for j in 2..energies.len() - 1 {
        if energies[j] > energies[best] {
            best = j;
        }
    }
    best
}

pub fn mountain_pass_solve(m: &EnergyModel, opts: &MountainPassOptions) -> Result<MountainPassReport> {
    let clock = Instant::now();
    let (geometry, warnings) = mountain_pass_geometry(m, opts)?;
    let metric = SobolevMetric::new(m.table())?;
    let npts = opts.path_points.max(3);
    let mut path: Vec<GridFunction> = (0..npts).map(|j| geometry.u1.scaled(j as f64 / (npts - 1) as f64)).collect();
    let mut energies = path.iter().map(|u| energy(u, m)).collect::<Result<Vec<_>>>()?;

    let mut j = path_argmax(&energies);
    let (e, mut g, mut res) = state(m, &path[j])?;
    let mut report = SolveReport::start(&path[j]);
    report.record(m, &path[j], e, res);
    let mut path_max_trace = vec![energies[j]];
    let mut switch = opts.newton_switch;
    let mut newton_steps = 0;
    let mut solution = path[j].clone();

    while res > opts.tol && report.iterations < opts.max_iter {
        if res <= switch {
            let budget = (opts.max_iter - report.iterations).min(50);
            let steps = newton_polish(m, &path[j], opts.tol, budget)?;
            let done = steps.last().is_some_and(|(_, ne, nr)| *nr <= opts.tol && *ne > geometry.energy_u1.max(0.0));
            if done {
                for (u, ne, nr) in &steps {
                    report.iterations += 1;
                    newton_steps += 1;
                    report.record(m, u, *ne, *nr);
                }
                let (u, _, nr) = steps.last().unwrap().clone();
                solution = u;
                res = nr;
                break;
            }
            // Newton stalled or left the mountain-pass level: keep deforming
            switch /= 10.0;
            continue;
        }
        let s = metric.solve(&g);
        let tangent = axpy(path[j + 1].interior(), -1.0, path[j - 1].interior());
        let ts = metric.inner(&tangent, &tangent);
        let dir = if ts > 0.0 { axpy(&s, -dot(&g, &tangent) / ts, &tangent) } else { s.clone() };
        let slope = dot(&g, &dir);
        if !(slope > 0.0) {
            break;
        }
        let mut alpha = initial_step(&g, &s);
        let mut accepted = None;
        while alpha > 1e-14 {
            let trial = grid(m, &axpy(path[j].interior(), -alpha, &dir))?;
            let te = energy(&trial, m)?;
            if te <= energies[j] - ARMIJO * alpha * slope {
                accepted = Some((trial, te));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, te)) = accepted else { break };
        path[j] = trial;
        energies[j] = te;
        j = path_argmax(&energies);
        let e;
        (e, g, res) = state(m, &path[j])?;
        solution = path[j].clone();
        report.iterations += 1;
        report.record(m, &path[j], e, res);
        path_max_trace.push(energies[j]);
    }
    report.converged = res <= opts.tol;
    report.solution = solution;
    report.wallclock = clock.elapsed().as_secs_f64();
    Ok(MountainPassReport { report, geometry, path_max_trace, newton_steps, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh1D, Source};

    fn model(lambda: f64) -> EnergyModel {
        let k = KernelSpec::standard(0.5, 2.0).unwrap();
        EnergyModel::new(
            PhiSpec::power(2.0).unwrap(),
            k.clone(),
            lambda,
            4.0,
            Some(Source::analytic(|x| 0.1 * (std::f64::consts::PI * x).sin())),
            Mesh1D::new(0.0, 1.0, 16).unwrap(),
            QuadratureRule::default_for(&k),
        )
        .unwrap()
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(path_argmax(&[0.0, 1.0, 3.0, 3.0, 2.0, -1.0]), 2);
    }

    #[test]
    fn lambda_above_threshold_is_rejected() {
        let opts = MountainPassOptions { embedding_samples: 50, sphere_samples: 20, ..Default::default() };
        let err = mountain_pass_geometry(&model(1e9), &opts).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let no_source = model(1.0).with_source(None).unwrap();
        assert!(mountain_pass_geometry(&no_source, &opts).is_err());
    }

    #[test]
    fn small_saddle_search_converges() {
        let opts = MountainPassOptions { embedding_samples: 50, sphere_samples: 50, ..Default::default() };
        let probe = model(1.0);
        let (geo, _) = mountain_pass_geometry(&probe, &opts).unwrap();
        let m = probe.with_lambda(0.5 * geo.lambda1).unwrap();
        let r = mountain_pass_solve(&m, &opts).unwrap();
        assert!(r.report.converged, "residual {}", r.report.final_residual());
        assert!(r.path_max_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.report.final_energy() > 0.0 && r.geometry.energy_u1 < 0.0);
        assert!(r.geometry.separates());
    }
}

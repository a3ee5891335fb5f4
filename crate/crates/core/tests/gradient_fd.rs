use fracvar_core::functionals::{energy, gradient, EnergyModel};
use fracvar_core::kernels::{KernelSpec, PhiSpec};
use fracvar_core::mesh::{Mesh1D, QuadratureRule, Source};
use fracvar_core::suite::{random_nodal, random_smooth};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-6;

fn fd_check(m: &EnergyModel, seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..count {
        let u = if k % 2 == 0 { random_nodal(m.mesh(), &mut rng) } else { random_smooth(m.mesh(), &mut rng, 5) };
        let v = random_nodal(m.mesh(), &mut rng);
        let g = gradient(&u, m).unwrap();
        let exact: f64 = g.per_testfunction.iter().zip(v.interior()).map(|(a, b)| a * b).sum();
        let plus = energy(&u.axpy(EPS, &v).unwrap(), m).unwrap();
        let minus = energy(&u.axpy(-EPS, &v).unwrap(), m).unwrap();
        let fd = (plus - minus) / (2.0 * EPS);
        let err = (fd - exact).abs() / exact.abs();
        assert!(err <= 1e-5, "pair {k}: fd {fd} vs {exact}");
        worst = worst.max(err);
    }
    worst
}

#[test]
fn power_instance_gradient_matches_central_differences() {
    let k = KernelSpec::standard(0.5, 2.0).unwrap();
    let m = EnergyModel::new(
        PhiSpec::power(2.0).unwrap(),
        k.clone(),
        0.7,
        3.0,
        Some(Source::analytic(|x| (3.0 * x).cos())),
        Mesh1D::new(0.0, 1.0, 16).unwrap(),
        QuadratureRule::default_for(&k),
    )
    .unwrap();
    fd_check(&m, 21, 50);
}

#[test]
fn perturbed_instance_gradient_matches_central_differences() {
    let k = KernelSpec::sine_perturbed(0.4, 2.5).unwrap();
    let m = EnergyModel::new(
        PhiSpec::cosine_perturbed(2.5).unwrap(),
        k.clone(),
        1.3,
        3.5,
        Some(Source::analytic(|x| 1.0 - x)),
        Mesh1D::new(0.0, 1.0, 16).unwrap(),
        QuadratureRule::default_for(&k),
    )
    .unwrap();
    fd_check(&m, 22, 50);
}

use fracvar_core::capacity::{capacity_estimate, CompactSet1D};
use fracvar_core::kernels::KernelSpec;
use fracvar_core::mesh::Mesh1D;
use fracvar_core::solvers::{estimate_embedding_constants, rayleigh_inf_estimate};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn rayleigh_estimate_is_mesh_stable() {
    let k = KernelSpec::standard(0.5, 2.0).unwrap();
    let est = |n: usize| {
        let mesh = Mesh1D::new(0.0, 1.0, n).unwrap();
        rayleigh_inf_estimate(&mesh, &k, 3.0, 200, 0, 1e-8, 3000).unwrap()
    };
    let (c, f) = (est(64), est(128));
    assert!(c.ratio > 0.0 && c.ratio <= c.sample_ratio);
    assert!(rel(c.ratio, f.ratio) <= 0.02, "{} vs {}", c.ratio, f.ratio);
}

#[test]
fn embedding_constants_are_sample_stable() {
    let k = KernelSpec::standard(0.5, 2.0).unwrap();
    let mesh = Mesh1D::new(0.0, 1.0, 64).unwrap();
    let a = estimate_embedding_constants(&mesh, &k, 3.0, 500, 1).unwrap();
    let b = estimate_embedding_constants(&mesh, &k, 3.0, 1000, 2).unwrap();
    for (x, y) in [(a.c4, b.c4), (a.c5, b.c5)] {
        assert!(x > 0.0 && x.is_finite());
        assert!(rel(x, y) <= 0.05, "{x} vs {y}");
    }
    // the larger sample set with the same seed is a superset
    let c = estimate_embedding_constants(&mesh, &k, 3.0, 1000, 1).unwrap();
    assert!(c.c4 >= a.c4 && c.c5 >= a.c5);
}

#[test]
fn capacity_is_mesh_stable_and_monotone() {
    let k = KernelSpec::standard(0.5, 2.0).unwrap();
    let set = CompactSet1D::interval(0.4, 0.6).unwrap();
    let cap = |n: usize, set: &CompactSet1D| {
        let mesh = Mesh1D::new(0.0, 1.0, n).unwrap();
        let r = capacity_estimate(set, &mesh, &k, 2.0, 1e-8, 5000).unwrap();
        assert!(r.converged, "n = {n}: projected gradient {}", r.projected_gradient);
        r.capacity_upper_bound
    };
    let (c, f) = (cap(64, &set), cap(128, &set));
    assert!(rel(c, f) <= 0.05, "{c} vs {f}");
    let wider = CompactSet1D::interval(0.3, 0.7).unwrap();
    assert!(cap(64, &wider) >= c);
}

//! Built-in test functions used to estimate embedding constants, check the
//! Poincaré inequality and sweep energies.

use std::f64::consts::PI;

use rand::Rng;

use crate::mesh::{GridFunction, Mesh1D};

/// Named grid functions covering smooth, kinked, oscillating, off-centre and
/// boundary-layer profiles on `mesh`.
pub fn test_suite(mesh: &Mesh1D) -> Vec<(String, GridFunction)> {
    let (a, b) = (mesh.a(), mesh.b());
    let len = b - a;
    let t = move |x: f64| (x - a) / len;
    let mut out = Vec::new();
    let mut add = |name: String, f: &dyn Fn(f64) -> f64| {
        let g = GridFunction::from_fn(mesh, |x| f(t(x)));
        if !g.is_zero() {
            out.push((name, g));
        }
    };
    add("tent".into(), &|s| 1.0 - (2.0 * s - 1.0).abs());
    add("parabola".into(), &|s| 4.0 * s * (1.0 - s));
    add("sqrt_distance".into(), &|s| (s * (1.0 - s)).sqrt());
    add("skewed".into(), &|s| s * s * (1.0 - s) * 6.75);
    add("plateau".into(), &|s| ((s * (1.0 - s)) * 12.0).min(1.0));
    add("bump".into(), &|s| {
        let r = 2.0 * s - 1.0;
        if r.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    });
    for k in 1..=5 {
        add(format!("sine_{k}"), &move |s| (k as f64 * PI * s).sin());
    }
    for c in [0.2, 0.35, 0.65, 0.8] {
        add(format!("tent_at_{c}"), &move |s| {
            if s < c {
                s / c
            } else {
                (1.0 - s) / (1.0 - c)
            }
        });
    }
    out
}

/// Random smooth profile: a sine series with decaying random coefficients.
pub fn random_smooth<R: Rng>(mesh: &Mesh1D, rng: &mut R, modes: usize) -> GridFunction {
    let coefs: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect();
    let (a, len) = (mesh.a(), mesh.b() - mesh.a());
    let g = GridFunction::from_fn(mesh, |x| {
        let s = (x - a) / len;
        coefs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * s).sin()).sum()
    });
    if g.is_zero() {
        GridFunction::from_fn(mesh, |x| ((x - a) / len * PI).sin())
    } else {
        g
    }
}

/// Random interior nodal values in `[-1, 1]`.
pub fn random_nodal<R: Rng>(mesh: &Mesh1D, rng: &mut R) -> GridFunction {
    let vals: Vec<f64> = (0..mesh.n_interior()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridFunction::from_interior(mesh, &vals).expect("finite values of the right length")
}

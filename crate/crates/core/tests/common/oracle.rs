//! Brute-force double sums over every quadrature node of `[a-R, b+R]²`.
//!
//! No table, no folding of orderings and no shape-function bookkeeping: the
//! node set of each ordered cell pair is generated explicitly, grid functions
//! are evaluated pointwise and the integrand is summed directly.

#![allow(dead_code)]

use fracvar_core::kernels::KernelSpec;
use fracvar_core::mesh::{GridFunction, Mesh1D, QuadratureRule, TailQuadrature};
use fracvar_core::quad::GaussRule;

#[derive(Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
    interior: bool,
}

/// Ordered quadrature nodes `(x, y, w)` plus the tail nodes
/// `(x, kernel forward, kernel backward, pure)`, weights already integrated
/// over `y` beyond the truncation radius.
pub struct NodeSet {
    pub nodes: Vec<(f64, f64, f64)>,
    pub tail: Vec<(f64, f64, f64, f64)>,
}

fn gauss(n: usize) -> Vec<(f64, f64)> {
    let g = GaussRule::unit(n);
    g.nodes.into_iter().zip(g.weights).collect()
}

fn cells(mesh: &Mesh1D) -> Vec<Interval> {
    let (a, b, h, r) = (mesh.a(), mesh.b(), mesh.h(), mesh.tail_radius());
    let mut out: Vec<Interval> =
        (0..mesh.n_elem()).map(|i| Interval { lo: mesh.node(i), hi: mesh.node(i + 1), interior: true }).collect();
    // sizes h, 2h, 4h, ... away from the domain; a remainder shorter than half
    // the next size is merged into the last cell
    let mut pos = 0.0f64;
    let mut size = h;
    while pos < r {
        let mut end = (pos + size).min(r);
        if r - end < 0.5 * size {
            end = r;
        }
        out.push(Interval { lo: a - end, hi: a - pos, interior: false });
        out.push(Interval { lo: b + pos, hi: b + end, interior: false });
        pos = end;
        size *= 2.0;
    }
    out
}

/// Graded `L`-shaped rings toward the corner plus a Duffy-split innermost square.
fn corner_rule(h: f64, rule: &QuadratureRule) -> Vec<(f64, f64, f64)> {
    let g = gauss(rule.gauss_order);
    let mut out = Vec::new();
    let push_box = |x0: f64, x1: f64, y0: f64, y1: f64, out: &mut Vec<(f64, f64, f64)>| {
        for &(a, wa) in &g {
            for &(b, wb) in &g {
                out.push((x0 + a * (x1 - x0), y0 + b * (y1 - y0), wa * wb * (x1 - x0) * (y1 - y0)));
            }
        }
    };
    let mut hi = h;
    for _ in 0..rule.diagonal_refinement {
        let lo = hi * rule.grading_ratio;
        push_box(lo, hi, 0.0, lo, &mut out);
        push_box(0.0, lo, lo, hi, &mut out);
        push_box(lo, hi, lo, hi, &mut out);
        hi = lo;
    }
    for &(r, wr) in &g {
        for &(t, wt) in &g {
            out.push((hi * r, hi * r * t, wr * wt * hi * hi * r));
            out.push((hi * r * t, hi * r, wr * wt * hi * hi * r));
        }
    }
    out
}

/// Offsets `t ∈ (0, h)` graded toward 0, innermost interval through `t = T τ^m`.
fn diagonal_rule(h: f64, rule: &QuadratureRule, s: f64, p: f64) -> Vec<(f64, f64)> {
    let g = gauss(rule.gauss_order);
    let m = (1.0 / (p * (1.0 - s))).ceil().max(1.0) as i32;
    let mut out = Vec::new();
    let mut hi = h;
    for _ in 0..rule.diagonal_refinement {
        let lo = hi * rule.grading_ratio;
        for &(a, w) in &g {
            out.push((lo + a * (hi - lo), w * (hi - lo)));
        }
        hi = lo;
    }
    for &(tau, w) in &g {
        out.push((hi * tau.powi(m), w * hi * m as f64 * tau.powi(m - 1)));
    }
    out
}

pub fn node_set(mesh: &Mesh1D, kernel: &KernelSpec, rule: &QuadratureRule) -> NodeSet {
    let all = cells(mesh);
    let g = gauss(rule.gauss_order);
    let h = mesh.h();
    let corner = corner_rule(h, rule);
    let diag = diagonal_rule(h, rule, kernel.s(), kernel.p());
    let mut nodes = Vec::new();
    for c1 in &all {
        for c2 in &all {
            if !c1.interior && !c2.interior {
                continue;
            }
            if c1.lo == c2.lo && c1.hi == c2.hi {
                // both triangles of the diagonal square
                for &(t, wt) in &diag {
                    let len = c1.hi - c1.lo - t;
                    for &(a, wa) in &g {
                        let x = c1.lo + t + a * len;
                        nodes.push((x, x - t, wt * wa * len));
                        nodes.push((x - t, x, wt * wa * len));
                    }
                }
            } else if c1.hi == c2.lo {
                let c = c1.hi;
                for &(al, be, w) in &corner {
                    nodes.push((c - al, c + be, w));
                }
            } else if c2.hi == c1.lo {
                let c = c1.lo;
                for &(al, be, w) in &corner {
                    nodes.push((c + be, c - al, w));
                }
            } else {
                let (l1, l2) = (c1.hi - c1.lo, c2.hi - c2.lo);
                for &(a, wa) in &g {
                    for &(b, wb) in &g {
                        nodes.push((c1.lo + a * l1, c2.lo + b * l2, wa * wb * l1 * l2));
                    }
                }
            }
        }
    }

    let sp = kernel.s() * kernel.p();
    let r = mesh.tail_radius();
    let mut tail = Vec::new();
    for c in all.iter().filter(|c| c.interior) {
        for &(a, wa) in &g {
            let x = c.lo + a * h;
            let w = wa * h;
            let (dr, dl) = (mesh.b() + r - x, x - (mesh.a() - r));
            let pure = w * (dr.powf(-sp) + dl.powf(-sp)) / sp;
            match rule.tail {
                TailQuadrature::Analytic => tail.push((x, pure, pure, pure)),
                TailQuadrature::GradedNumeric => {
                    let (mut fwd, mut bwd) = (0.0, 0.0);
                    for (dist, dir) in [(dr, 1.0), (dl, -1.0)] {
                        // r^{-1-sp} dr = dz / sp with z = r^{-sp}, 8 panels
                        let zmax = dist.powf(-sp);
                        let panel = zmax / 8.0;
                        for k in 0..8 {
                            for &(b, wb) in &g {
                                let z = (k as f64 + b) * panel;
                                let y = x + dir * z.powf(-1.0 / sp);
                                fwd += wb * panel * kernel.reduced(x, y) / sp;
                                bwd += wb * panel * kernel.reduced(y, x) / sp;
                            }
                        }
                    }
                    tail.push((x, w * fwd, w * bwd, pure));
                }
            }
        }
    }
    NodeSet { nodes, tail }
}

impl NodeSet {
    /// `∬ f(u(x)-u(y)) (v(x)-v(y)) K(x,y)` with `K` evaluated at every node.
    pub fn pairing(&self, kernel: &KernelSpec, u: &GridFunction, v: &GridFunction, f: impl Fn(f64) -> f64) -> f64 {
        let mut sum = 0.0;
        for &(x, y, w) in &self.nodes {
            sum += w * f(u.eval(x) - u.eval(y)) * (v.eval(x) - v.eval(y)) * kernel.k(x, y);
        }
        for &(x, wf, wb, _) in &self.tail {
            let (ux, vx) = (u.eval(x), v.eval(x));
            sum += wf * f(ux) * vx + wb * f(-ux) * (-vx);
        }
        sum
    }

    /// `∬ |u(x)-u(y)|^p |x-y|^{-(1+sp)}`.
    pub fn seminorm_pow(&self, kernel: &KernelSpec, u: &GridFunction) -> f64 {
        let p = kernel.p();
        let e = kernel.exponent();
        let mut sum = 0.0;
        for &(x, y, w) in &self.nodes {
            sum += w * (u.eval(x) - u.eval(y)).abs().powf(p) * (x - y).abs().powf(-e);
        }
        for &(x, _, _, pure) in &self.tail {
            sum += 2.0 * pure * u.eval(x).abs().powf(p);
        }
        sum
    }
}

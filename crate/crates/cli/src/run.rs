//! Pipelines behind each subcommand.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fracvar_core::capacity::capacity_estimate;
use fracvar_core::functionals::{check_exponents, energy, EnergyModel};
use fracvar_core::kernels::{default_phi_samples, random_pairs, KernelSpec, PhiSpec};
use fracvar_core::mesh::{read_grid_function, write_grid_function, Mesh1D, QuadratureRule, Source, TailQuadrature};
use fracvar_core::solvers::{
    estimate_embedding_constants_with, homotopy_to_p1, lambda1_exact, lambda1_threshold, mountain_pass_geometry,
    mountain_pass_solve, r0_maximizer, rayleigh_inf_estimate, sphere_constrained_solve, HomotopyOptions,
    MountainPassOptions, SolveReport,
};
use thiserror::Error;

use crate::config::{Auto, Mode, RunConfig, SourceSpec, TailChoice};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("check failed: {0}")]
    Failed(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::NotConverged(_) => 3,
            RunError::Io(_) => 4,
            RunError::Failed(_) => 1,
        }
    }
}

impl From<fracvar_core::Error> for RunError {
    fn from(e: fracvar_core::Error) -> Self {
        RunError::Config(e.to_string())
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

/// CSV text with the schema header, a column header and rows.
fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("# schema=1\n{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn key_values(pairs: &[(&str, String)]) -> String {
    csv("key,value", pairs.iter().map(|(k, v)| format!("{k},{v}")))
}

fn trace_csv(r: &SolveReport) -> String {
    csv(
        "iter,energy,residual,norm_W,norm_q",
        (0..r.energy_trace.len()).map(|i| {
            format!("{i},{},{},{},{}", r.energy_trace[i], r.residual_trace[i], r.norm_w_trace[i], r.norm_q_trace[i])
        }),
    )
}

fn summary_csv(converged: bool, iterations: usize, residual: f64, energy: f64) -> String {
    csv("converged,iterations,residual,energy", [format!("{converged},{iterations},{residual},{energy}")])
}

pub fn mesh(cfg: &RunConfig) -> Result<Mesh1D> {
    Ok(match cfg.tail_radius {
        Auto::Auto => Mesh1D::new(cfg.a, cfg.b, cfg.n_elem)?,
        Auto::Value(r) => Mesh1D::with_tail_radius(cfg.a, cfg.b, cfg.n_elem, r)?,
    })
}

pub fn rule(cfg: &RunConfig, kernel: &KernelSpec) -> Result<QuadratureRule> {
    let base = QuadratureRule::default_for(kernel);
    let rule = QuadratureRule {
        gauss_order: cfg.gauss_order,
        diagonal_refinement: cfg.diagonal_refinement,
        grading_ratio: cfg.grading_ratio,
        tail: match cfg.tail {
            TailChoice::Auto => base.tail,
            TailChoice::Analytic => TailQuadrature::Analytic,
            TailChoice::Numeric => TailQuadrature::GradedNumeric,
        },
    };
    rule.validate(kernel)?;
    Ok(rule)
}

pub fn source(cfg: &RunConfig, mesh: &Mesh1D) -> Result<Option<Source>> {
    let (a, len, amp) = (mesh.a(), mesh.b() - mesh.a(), cfg.source_amplitude);
    Ok(match &cfg.source {
        SourceSpec::None => None,
        SourceSpec::Named(name) => {
            let profile: fn(f64) -> f64 = match name.as_str() {
                "sin" => |t| (std::f64::consts::PI * t).sin(),
                "one" => |_| 1.0,
                "linear" => |t| t,
                _ => |t| 1.0 - (2.0 * t - 1.0).abs(),
            };
            Some(Source::analytic(move |x| amp * profile((x - a) / len)))
        }
        SourceSpec::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
            let g = read_grid_function(&text, Some(mesh.tail_radius()))?;
            if g.mesh() != mesh {
                return Err(RunError::Config(format!("source file {} is on a different mesh", path.display())));
            }
            Some(Source::Grid(g))
        }
    })
}

/// Model with `λ = 1` as a placeholder until the mode resolves it.
pub fn model(cfg: &RunConfig) -> Result<EnergyModel> {
    let mesh = mesh(cfg)?;
    let kernel = KernelSpec::by_name(&cfg.kernel, cfg.s, cfg.p)?;
    let phi = PhiSpec::by_name(&cfg.phi, cfg.p)?;
    let rule = rule(cfg, &kernel)?;
    let src = source(cfg, &mesh)?;
    let lambda = match cfg.lambda {
        Auto::Value(l) => l,
        Auto::Auto => 1.0,
    };
    let m = EnergyModel::new(phi, kernel, lambda, cfg.q, src, mesh, rule)?;
    Ok(match cfg.lambda_cap {
        Auto::Auto => m,
        Auto::Value(l) => m.with_lambda_cap(l)?,
    })
}

/// `λ₁` from the sampled embedding constants (infinite without a source).
pub fn lambda1_estimate(m: &EnergyModel, cfg: &RunConfig) -> Result<f64> {
    let f_norm = m.source_dual_norm();
    if f_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    let c = estimate_embedding_constants_with(m.table(), m.q(), cfg.embedding_samples, cfg.seed);
    Ok(lambda1_threshold(m.p(), m.q(), m.lambda_cap(), c.c4, c.c5, f_norm)?)
}

fn rayleigh(m: &EnergyModel, cfg: &RunConfig) -> Result<f64> {
    Ok(rayleigh_inf_estimate(m.mesh(), m.kernel(), m.q(), 200, cfg.seed, 1e-8, cfg.max_iter.max(2000))?.ratio)
}

fn resolve_lambda(m: &EnergyModel, cfg: &RunConfig, reference: impl FnOnce() -> Result<f64>) -> Result<EnergyModel> {
    match cfg.lambda {
        Auto::Value(_) => Ok(m.clone()),
        Auto::Auto => {
            let r = reference()?;
            if !r.is_finite() {
                return Err(RunError::Config("lambda=auto needs a finite reference value; set lambda".into()));
            }
            Ok(m.with_lambda(cfg.lambda_fraction * r)?)
        }
    }
}

fn mp_options(cfg: &RunConfig) -> MountainPassOptions {
    MountainPassOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        path_points: cfg.path_points,
        sphere_samples: cfg.sphere_samples,
        embedding_samples: cfg.embedding_samples,
        seed: cfg.seed,
        newton_switch: cfg.newton_switch,
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub fn run(mode: Mode, cfg: &RunConfig) -> Result<()> {
    let echo = cfg.echo(mode);
    print!("{echo}");
    if mode == Mode::Validate {
        return validate(cfg);
    }
    fs::create_dir_all(&cfg.out).map_err(|e| RunError::Io(format!("{}: {e}", cfg.out.display())))?;
    let dir = cfg.out.as_path();
    write(dir, "config_echo.txt", &echo)?;
    match mode {
        Mode::SolveP2 => solve_p2(cfg, dir),
        Mode::Homotopy => homotopy(cfg, dir),
        Mode::SphereMin => sphere_min(cfg, dir),
        Mode::Capacity => capacity(cfg, dir),
        Mode::Geometry => geometry(cfg, dir),
        Mode::CheckKernel => check_kernel(cfg, dir),
        Mode::Validate => unreachable!(),
    }
}

fn finish(dir: &Path, converged: bool, iterations: usize, residual: f64, energy: f64) -> Result<()> {
    let s = summary_csv(converged, iterations, residual, energy);
    write(dir, "summary.csv", &s)?;
    println!("{}", s.lines().last().unwrap_or_default());
    if converged {
        Ok(())
    } else {
        Err(RunError::NotConverged(format!("residual {residual} after {iterations} iterations")))
    }
}

fn solve_p2(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let m = model(cfg)?;
    let m = resolve_lambda(&m, cfg, || lambda1_estimate(&m, cfg))?;
    let r = mountain_pass_solve(&m, &mp_options(cfg))?;
    warn_all(&r.warnings);
    write(dir, "solution.csv", &write_grid_function(&r.report.solution))?;
    write(dir, "trace.csv", &trace_csv(&r.report))?;
    write(dir, "geometry.csv", &geometry_rows(&m, &r.geometry))?;
    write(
        dir,
        "path_max.csv",
        &csv("step,path_max", r.path_max_trace.iter().enumerate().map(|(i, v)| format!("{i},{v}"))),
    )?;
    finish(dir, r.report.converged, r.report.iterations, r.report.final_residual(), r.report.final_energy())
}

fn geometry_rows(m: &EnergyModel, g: &fracvar_core::solvers::MountainPassGeometry) -> String {
    let exact = lambda1_exact(m.p(), m.q(), m.lambda_cap(), g.c4, g.c5, g.f_norm).unwrap_or(f64::NAN);
    key_values(&[
        ("p", m.p().to_string()),
        ("q", m.q().to_string()),
        ("Lambda", m.lambda_cap().to_string()),
        ("lambda", m.lambda().to_string()),
        ("c4", g.c4.to_string()),
        ("c5", g.c5.to_string()),
        ("f_norm", g.f_norm.to_string()),
        ("lambda1", g.lambda1.to_string()),
        ("lambda1_exact", exact.to_string()),
        ("r0_printed", g.r0_printed.to_string()),
        ("r0", g.r0.to_string()),
        ("energy_u1", g.energy_u1.to_string()),
        ("sphere_min_estimate", g.sphere_min_estimate.to_string()),
        ("sphere_samples", g.sphere_samples.to_string()),
        ("separates", g.separates().to_string()),
    ])
}

fn geometry(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let m = model(cfg)?;
    let m = resolve_lambda(&m, cfg, || lambda1_estimate(&m, cfg))?;
    let (g, warnings) = mountain_pass_geometry(&m, &mp_options(cfg))?;
    warn_all(&warnings);
    let r0 = r0_maximizer(m.p(), m.q(), m.lambda_cap(), m.lambda(), g.c5)?;
    if !r0.printed_is_maximizer {
        eprintln!(
            "warning: the closed-form radius {} is not a local maximizer of F; the stationary point {} is used",
            r0.printed, r0.stationary
        );
    }
    let rows = geometry_rows(&m, &g);
    print!("{rows}");
    write(dir, "geometry.csv", &rows)?;
    write(dir, "f_profile.csv", &csv("r,F", g.f_profile.iter().map(|(r, f)| format!("{r},{f}"))))?;
    write(dir, "u1.csv", &write_grid_function(&g.u1))?;
    Ok(())
}

fn sphere_min(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let m = model(cfg)?;
    let m = resolve_lambda(&m, cfg, || rayleigh(&m, cfg))?;
    let r = sphere_constrained_solve(&m, cfg.tol, cfg.max_iter)?;
    write(dir, "solution.csv", &write_grid_function(&r.report.solution))?;
    write(dir, "trace.csv", &trace_csv(&r.report))?;
    write(
        dir,
        "sphere.csv",
        &key_values(&[
            ("lambda", m.lambda().to_string()),
            ("multiplier", r.multiplier.to_string()),
            ("constrained_residual", r.constrained_residual.to_string()),
            ("unconstrained_residual", r.unconstrained_residual.to_string()),
            ("max_constraint_error", r.max_constraint_error.to_string()),
        ]),
    )?;
    finish(dir, r.report.converged, r.report.iterations, r.constrained_residual, r.report.final_energy())
}

fn homotopy(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let m = model(cfg)?;
    let ray = rayleigh(&m, cfg)?;
    let m = resolve_lambda(&m, cfg, || Ok(ray))?;
    let opts = HomotopyOptions {
        n_steps: cfg.n_steps,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        rayleigh: Some(ray),
        seed: cfg.seed,
    };
    let r = homotopy_to_p1(&m, &opts)?;
    warn_all(&r.warnings);
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let stages = csv(
        "n,f_scale,f_norm,energy,multiplier,constrained_residual,iterations,converged,w0_norm,cauchy_diff,chain_lhs,chain_rhs",
        r.stages.iter().map(|s| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.n,
                s.f_scale,
                s.f_norm,
                s.energy,
                s.multiplier,
                s.constrained_residual,
                s.iterations,
                s.converged,
                s.w0_norm,
                opt(s.cauchy_diff),
                s.chain_lhs,
                s.chain_rhs
            )
        }),
    );
    write(dir, "homotopy.csv", &stages)?;
    let u = &r.report.solution;
    let p1 = m.with_source(None)?;
    let last = r.stages.last().expect("at least two stages");
    write(dir, "solution.csv", &write_grid_function(u))?;
    write(dir, "trace.csv", &trace_csv(&r.report))?;
    if let Some((v, _)) = &r.rescaled {
        write(dir, "rescaled.csv", &write_grid_function(v))?;
    }
    write(
        dir,
        "homotopy_summary.csv",
        &key_values(&[
            ("lambda", m.lambda().to_string()),
            ("rayleigh", r.rayleigh.to_string()),
            ("multiplier", last.multiplier.to_string()),
            ("norm_q", m.lq_norm(u).to_string()),
            ("residual_p1", r.residual_p1.dual_norm_estimate.to_string()),
            ("rescaled_residual_p1", opt(r.rescaled.as_ref().map(|(_, w)| w.dual_norm_estimate))),
            ("cauchy_monotone_after_3", r.cauchy_monotone_after(3).to_string()),
        ]),
    )?;
    let iterations = r.stages.iter().map(|s| s.iterations).sum();
    let res = r.residual_p1.dual_norm_estimate;
    finish(dir, res <= cfg.tol, iterations, res, energy(u, &p1)?)
}

fn capacity(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let mesh = mesh(cfg)?;
    let kernel = KernelSpec::gagliardo_weight(cfg.s, cfg.q)?;
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let (mut all_converged, mut iterations, mut worst, mut last) = (true, 0, 0.0f64, 0.0);
    for (k, set) in cfg.sets.iter().enumerate() {
        let r = capacity_estimate(set, &mesh, &kernel, cfg.q, cfg.tol, cfg.max_iter)?;
        rows.push(format!("{set},{},{},{},{}", cfg.q, cfg.s, mesh.n_elem(), r.capacity_upper_bound));
        traces.extend(r.energy_trace.iter().enumerate().map(|(i, e)| format!("{k},{i},{e}")));
        write(dir, &format!("capacity_minimizer_{k}.csv"), &write_grid_function(&r.minimizer))?;
        all_converged &= r.converged;
        iterations += r.iterations;
        worst = worst.max(r.projected_gradient);
        last = r.capacity_upper_bound;
    }
    let table = csv("set_description,q,s,n_elem,capacity_upper_bound", rows);
    print!("{table}");
    write(dir, "capacity.csv", &table)?;
    write(dir, "trace.csv", &csv("set,iter,energy", traces))?;
    finish(dir, all_converged, iterations, worst, last)
}

fn check_kernel(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let phi = PhiSpec::by_name(&cfg.phi, cfg.p)?;
    let kernel = KernelSpec::by_name(&cfg.kernel, cfg.s, cfg.p)?;
    let pr = phi.validate(&default_phi_samples())?;
    let kr = kernel.validate(&random_pairs(200, cfg.a, cfg.b, cfg.seed))?;
    let continuous = phi.looks_continuous();
    let row = |obj: &str, name: &str, r: &fracvar_core::kernels::BoundReport, extra: bool| {
        format!("{obj},{name},{},{},{},{},{}", r.min_ratio, r.max_ratio, r.lambda_cap, r.samples, r.violated || extra)
    };
    let table = csv(
        "object,name,min_ratio,max_ratio,lambda_cap,samples,violated",
        [row("phi", phi.name(), &pr, !continuous), row("kernel", kernel.name(), &kr, false)],
    );
    print!("{table}");
    write(dir, "check_kernel.csv", &table)?;
    if pr.violated || kr.violated || !continuous {
        return Err(RunError::Failed("bound ratios outside [1/Λ, Λ] or Φ not continuous".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub error: bool,
    pub message: String,
}

/// Dry-run constraint report. Empty for a consistent configuration.
pub fn diagnostics(cfg: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut error = |m: String| out.push(Diagnostic { error: true, message: m });
    if let Auto::Value(l) = cfg.lambda {
        if !(l > 0.0) {
            error(format!("λ > 0 required, got {l}"));
        }
    } else if !(cfg.lambda_fraction > 0.0) {
        error(format!("lambda_fraction > 0 required, got {}", cfg.lambda_fraction));
    }
    if !(cfg.tol > 0.0) {
        error(format!("tol > 0 required, got {}", cfg.tol));
    }
    if cfg.max_iter == 0 {
        error("max_iter ≥ 1 required".into());
    }
    let mesh = match mesh(cfg) {
        Ok(m) => Some(m),
        Err(e) => {
            error(e.to_string());
            None
        }
    };
    if let Some(mesh) = &mesh {
        for set in &cfg.sets {
            if let Err(e) = set.check_inside(mesh) {
                error(format!("set {set}: {e}"));
            }
        }
    }
    let kernel = KernelSpec::by_name(&cfg.kernel, cfg.s, cfg.p).map_err(|e| error(e.to_string())).ok();
    let phi = PhiSpec::by_name(&cfg.phi, cfg.p).map_err(|e| error(e.to_string())).ok();
    if let Some(k) = &kernel {
        if let Err(e) = check_exponents(cfg.p, cfg.q, k) {
            error(e.to_string());
        }
        if let Err(e) = rule(cfg, k) {
            error(e.to_string());
        }
    }
    let (Some(_), Some(k), Some(f)) = (mesh, kernel, phi) else { return out };
    let derived = f.lambda_cap().max(k.lambda_cap());
    let cap = match cfg.lambda_cap {
        Auto::Auto => derived,
        Auto::Value(l) => l,
    };
    if cap < derived {
        error(format!("declared Λ = {cap} is below the constant {derived} of Φ and K"));
    }
    let bound = (cfg.q / cfg.p).powf(0.25);
    let mut warn = |m: String| out.push(Diagnostic { error: false, message: m });
    if cfg.q <= cfg.p {
    } else if cap >= bound {
        warn(format!("Λ ∈ [1, (q/p)^(1/4)) violated: Λ = {cap} ≥ {bound}"));
    } else if cap > 1.0 && cap >= 0.9 * bound {
        warn(format!("Λ = {cap} within 10% of (q/p)^(1/4) = {bound}"));
    }
    if out.iter().any(|d| d.error) {
        return out;
    }
    match model(cfg) {
        Err(e) => out.push(Diagnostic { error: true, message: e.to_string() }),
        Ok(m) => match lambda1_estimate(&m, cfg) {
            Err(e) => out.push(Diagnostic { error: true, message: e.to_string() }),
            Ok(l1) if l1.is_finite() => {
                let lambda = match cfg.lambda {
                    Auto::Value(l) => l,
                    Auto::Auto => cfg.lambda_fraction * l1,
                };
                if lambda >= l1 {
                    out.push(Diagnostic {
                        error: false, message: format!("λ < λ₁ violated: λ = {lambda}, λ₁ ≈ {l1}")
                    });
                } else if lambda >= 0.9 * l1 {
                    out.push(Diagnostic {
                        error: false,
                        message: format!("λ = {lambda} within 10% of the estimated λ₁ = {l1}"),
                    });
                }
            }
            Ok(_) => {}
        },
    }
    out
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let diags = diagnostics(cfg);
    let mut s = String::new();
    for d in &diags {
        let _ = writeln!(s, "{}: {}", if d.error { "error" } else { "warning" }, d.message);
    }
    print!("{s}");
    if diags.iter().any(|d| d.error) {
        return Err(RunError::Config(format!(
            "{} error(s) in configuration",
            diags.iter().filter(|d| d.error).count()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn cfg(pairs: &[(&str, &str)]) -> RunConfig {
        let v: Vec<(String, String)> = pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        RunConfig::resolve(&v, &[]).unwrap()
    }

    #[test]
    fn consistent_config_has_no_diagnostics() {
        let d = diagnostics(&cfg(&[("n_elem", "16"), ("embedding_samples", "50")]));
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn lambda_cap_at_boundary_warns() {
        let bound = 2f64.powf(0.25).to_string();
        let d = diagnostics(&cfg(&[("n_elem", "16"), ("embedding_samples", "50"), ("Lambda", &bound)]));
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(!d[0].error && d[0].message.contains("(q/p)^(1/4)"));
    }

    #[test]
    fn zero_lambda_and_bad_exponent_are_errors() {
        let d = diagnostics(&cfg(&[("n_elem", "16"), ("lambda", "0")]));
        assert!(d.iter().any(|d| d.error && d.message.contains("λ > 0")));
        let d = diagnostics(&cfg(&[("n_elem", "16"), ("q", "1.5")]));
        assert!(d.iter().any(|d| d.error && d.message.contains("q ∈ (p, p_s^*)")));
        let d = diagnostics(&cfg(&[("n_elem", "16"), ("kernel", "perturbed"), ("tail", "analytic")]));
        assert!(d.iter().any(|d| d.error && d.message.contains("analytic tail")));
    }

    #[test]
    fn lambda_above_threshold_warns() {
        let d = diagnostics(&cfg(&[("n_elem", "16"), ("embedding_samples", "50"), ("lambda", "1e6")]));
        assert!(d.iter().any(|d| !d.error && d.message.contains("λ < λ₁")));
    }
}

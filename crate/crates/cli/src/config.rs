//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use fracvar_core::capacity::CompactSet1D;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Every recognized key with its default, in echo order.
pub const KEYS: &[(&str, &str)] = &[
    ("a", "0"),
    ("b", "1"),
    ("n_elem", "64"),
    ("tail_radius", "auto"),
    ("s", "0.5"),
    ("p", "2"),
    ("q", "4"),
    ("lambda", "auto"),
    ("lambda_fraction", "0.5"),
    ("Lambda", "auto"),
    ("phi", "power"),
    ("kernel", "standard"),
    ("source", "sin"),
    ("source_amplitude", "0.1"),
    ("tol", "1e-6"),
    ("max_iter", "2000"),
    ("seed", "0"),
    ("gauss_order", "4"),
    ("diagonal_refinement", "6"),
    ("grading_ratio", "0.5"),
    ("tail", "auto"),
    ("n_steps", "12"),
    ("path_points", "33"),
    ("sphere_samples", "200"),
    ("embedding_samples", "500"),
    ("newton_switch", "1e-2"),
    ("sets", "{0.5} [0.45;0.55] [0.4;0.6] [0.3;0.7]"),
    ("out", "fracvar_out"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SolveP2,
    Homotopy,
    SphereMin,
    Capacity,
    Geometry,
    CheckKernel,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SolveP2 => "solve-p2",
            Mode::Homotopy => "homotopy",
            Mode::SphereMin => "sphere-min",
            Mode::Capacity => "capacity",
            Mode::Geometry => "geometry",
            Mode::CheckKernel => "check-kernel",
            Mode::Validate => "validate",
        }
    }

    /// The problem class the run works on.
    pub fn problem(self) -> &'static str {
        match self {
            Mode::SolveP2 => "p2",
            Mode::SphereMin => "p1",
            Mode::Homotopy => "homotopy",
            Mode::Capacity => "capacity",
            Mode::Geometry | Mode::CheckKernel | Mode::Validate => "geometry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    None,
    /// `sin`, `one`, `linear` or `tent`, scaled by `source_amplitude`.
    Named(String),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailChoice {
    Auto,
    Analytic,
    Numeric,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub n_elem: usize,
    pub tail_radius: Auto,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub lambda: Auto,
    pub lambda_fraction: f64,
    pub lambda_cap: Auto,
    pub phi: String,
    pub kernel: String,
    pub source: SourceSpec,
    pub source_amplitude: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub gauss_order: usize,
    pub diagonal_refinement: usize,
    pub grading_ratio: f64,
    pub tail: TailChoice,
    pub n_steps: usize,
    pub path_points: usize,
    pub sphere_samples: usize,
    pub embedding_samples: usize,
    pub newton_switch: f64,
    pub sets: Vec<CompactSet1D>,
    pub out: PathBuf,
    /// Resolved `(key, value)` pairs in echo order.
    pub resolved: Vec<(String, String)>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected `key = value`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parses `--key value` pairs (also `--key=value`).
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let key =
            arg.strip_prefix("--").ok_or_else(|| ConfigError(format!("expected `--key value`, found `{arg}`")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it.next().ok_or_else(|| ConfigError(format!("missing value for `--{key}`")))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| ConfigError(format!("`{key}`: cannot parse `{v}`: {e}")))
}

fn auto(key: &str, v: &str) -> Result<Auto, ConfigError> {
    if v == "auto" {
        Ok(Auto::Auto)
    } else {
        Ok(Auto::Value(num(key, v)?))
    }
}

/// Parses `{x}` or `[lo;hi]`, joined by `U`; `empty` is the empty set.
pub fn parse_set(text: &str) -> Result<CompactSet1D, ConfigError> {
    if text == "empty" {
        return Ok(CompactSet1D::empty());
    }
    let mut intervals = Vec::new();
    for part in text.split('U') {
        let bad = || ConfigError(format!("bad set `{text}`: use {{x}}, [lo;hi] or unions with U"));
        let iv = if let Some(inner) = part.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let x: f64 = inner.trim().parse().map_err(|_| bad())?;
            (x, x)
        } else if let Some(inner) = part.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let (lo, hi) = inner.split_once(';').ok_or_else(bad)?;
            (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        intervals.push(iv);
    }
    CompactSet1D::new(intervals).map_err(|e| ConfigError(format!("bad set `{text}`: {e}")))
}

impl RunConfig {
    /// Defaults, then the file entries, then the overrides.
    pub fn resolve(file: &[(String, String)], overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut values: Vec<(String, String)> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (i, (k, _)) in file.iter().enumerate() {
            if file[..i].iter().any(|(prev, _)| prev == k) {
                return Err(ConfigError(format!("key `{k}` given twice in the config file")));
            }
        }
        for (k, v) in file.iter().chain(overrides) {
            let slot =
                values.iter_mut().find(|(key, _)| key == k).ok_or_else(|| ConfigError(format!("unknown key `{k}`")))?;
            slot.1 = v.clone();
        }
        let get = |k: &str| values.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str()).unwrap();
        let source = match get("source") {
            "none" => SourceSpec::None,
            s if s.starts_with("file:") => SourceSpec::File(PathBuf::from(&s[5..])),
            s @ ("sin" | "one" | "linear" | "tent") => SourceSpec::Named(s.to_string()),
            other => {
                return Err(ConfigError(format!(
                    "unknown source `{other}` (none, sin, one, linear, tent, file:<path>)"
                )))
            }
        };
        let tail = match get("tail") {
            "auto" => TailChoice::Auto,
            "analytic" => TailChoice::Analytic,
            "numeric" => TailChoice::Numeric,
            other => return Err(ConfigError(format!("unknown tail `{other}` (auto, analytic, numeric)"))),
        };
        let sets = get("sets").split_whitespace().map(parse_set).collect::<Result<Vec<_>, _>>()?;
        Ok(RunConfig {
            a: num("a", get("a"))?,
            b: num("b", get("b"))?,
            n_elem: num("n_elem", get("n_elem"))?,
            tail_radius: auto("tail_radius", get("tail_radius"))?,
            s: num("s", get("s"))?,
            p: num("p", get("p"))?,
            q: num("q", get("q"))?,
            lambda: auto("lambda", get("lambda"))?,
            lambda_fraction: num("lambda_fraction", get("lambda_fraction"))?,
            lambda_cap: auto("Lambda", get("Lambda"))?,
            phi: get("phi").to_string(),
            kernel: get("kernel").to_string(),
            source,
            source_amplitude: num("source_amplitude", get("source_amplitude"))?,
            tol: num("tol", get("tol"))?,
            max_iter: num("max_iter", get("max_iter"))?,
            seed: num("seed", get("seed"))?,
            gauss_order: num("gauss_order", get("gauss_order"))?,
            diagonal_refinement: num("diagonal_refinement", get("diagonal_refinement"))?,
            grading_ratio: num("grading_ratio", get("grading_ratio"))?,
            tail,
            n_steps: num("n_steps", get("n_steps"))?,
            path_points: num("path_points", get("path_points"))?,
            sphere_samples: num("sphere_samples", get("sphere_samples"))?,
            embedding_samples: num("embedding_samples", get("embedding_samples"))?,
            newton_switch: num("newton_switch", get("newton_switch"))?,
            sets,
            out: PathBuf::from(get("out")),
            resolved: values.clone(),
        })
    }

    /// `# schema=1` header, the mode, then every key in fixed order.
    pub fn echo(&self, mode: Mode) -> String {
        let mut s = String::from("# schema=1\n");
        let _ = writeln!(s, "mode={}", mode.name());
        let _ = writeln!(s, "problem={}", mode.problem());
        for (k, v) in &self.resolved {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

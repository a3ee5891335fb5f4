//! Plain-text CSV form of a grid function.
//!
//! ```text
//! # schema=1
//! # mesh a=0 b=1 n=4
//! x,value
//! 0,0
//! 0.25,0.5
//! ...
//! ```

use std::fmt::Write as _;

use super::{GridFunction, Mesh1D};
use crate::error::{Error, Result};

/// Serializes `u` with shortest round-trip float formatting, boundary
/// zeros included.
pub fn write_grid_function(u: &GridFunction) -> String {
    let m = u.mesh();
    let mut out = String::new();
    out.push_str("# schema=1\n");
    let _ = writeln!(out, "# mesh a={} b={} n={}", m.a(), m.b(), m.n_elem());
    out.push_str("x,value\n");
    for (i, v) in u.nodal().iter().enumerate() {
        let _ = writeln!(out, "{},{}", m.node(i), v);
    }
    out
}

/// Parses the output of [`write_grid_function`]. The tail radius is not part
/// of the format and is taken from `tail_radius` (default `10 (b - a)`).
pub fn read_grid_function(text: &str, tail_radius: Option<f64>) -> Result<GridFunction> {
    let mut mesh_line = None;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line == "x,value" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(spec) = rest.strip_prefix("mesh") {
                mesh_line = Some(parse_mesh(spec, lineno + 1)?);
            }
            continue;
        }
        let (_, v) =
            line.split_once(',').ok_or_else(|| Error::Parse(format!("line {}: expected `x,value`", lineno + 1)))?;
        let v: f64 = v.trim().parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        values.push(v);
    }
    let (a, b, n) = mesh_line.ok_or_else(|| Error::Parse("missing `# mesh` header".into()))?;
    let mesh = match tail_radius {
        Some(r) => Mesh1D::with_tail_radius(a, b, n, r)?,
        None => Mesh1D::new(a, b, n)?,
    };
    if values.len() != mesh.n_nodes() {
        return Err(Error::Parse(format!("expected {} rows, found {}", mesh.n_nodes(), values.len())));
    }
    if values[0] != 0.0 || values[n] != 0.0 {
        return Err(Error::Domain("boundary values must be zero".into()));
    }
    GridFunction::from_interior(&mesh, &values[1..n])
}

fn parse_mesh(spec: &str, lineno: usize) -> Result<(f64, f64, usize)> {
    let (mut a, mut b, mut n) = (None, None, None);
    for tok in spec.split_whitespace() {
        let (k, v) =
            tok.split_once('=').ok_or_else(|| Error::Parse(format!("line {lineno}: bad mesh token `{tok}`")))?;
        let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("line {lineno}: {k}: {e}"));
        match k {
            "a" => a = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            "b" => b = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            "n" => n = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
            _ => return Err(Error::Parse(format!("line {lineno}: unknown mesh key `{k}`"))),
        }
    }
    match (a, b, n) {
        (Some(a), Some(b), Some(n)) => Ok((a, b, n)),
        _ => Err(Error::Parse(format!("line {lineno}: mesh header needs a, b and n"))),
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracvar(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracvar")).args(args).arg("--out").arg(out).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn exponent_outside_range_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracvar(&["solve-p2", "--q", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("q ∈ (p, p_s^*)"), "{}", text(&o.stderr));
}

#[test]
fn unknown_key_and_bad_value_exit_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fracvar(&["geometry", "--bogus", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(fracvar(&["geometry", "--n_elem", "many"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_file_is_layered_under_overrides_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nn_elem = 16\nq = 3\n").unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_fracvar"))
        .args(["check-kernel", "--config"])
        .arg(&cfg)
        .args(["--q", "3.5", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o.stderr));
    let echo = fs::read_to_string(out.join("config_echo.txt")).unwrap();
    assert!(echo.starts_with("# schema=1\n"));
    assert!(echo.contains("\nn_elem=16\n") && echo.contains("\nq=3.5\n"), "{echo}");
    assert!(text(&o.stdout).starts_with(&echo));
    let table = fs::read_to_string(out.join("check_kernel.csv")).unwrap();
    assert!(table.contains("phi,power,") && table.contains("kernel,standard,"));
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(fracvar(&["sphere-min", "--n_elem", "24", "--seed", "7"], out).status.success());
    }
    for name in ["solution.csv", "trace.csv", "summary.csv", "sphere.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn geometry_reports_threshold_and_radius() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracvar(&["geometry", "--n_elem", "24"], dir.path());
    assert!(o.status.success(), "{}", text(&o.stderr));
    let g = fs::read_to_string(dir.path().join("geometry.csv")).unwrap();
    let value =
        |key: &str| -> f64 { g.lines().find_map(|l| l.strip_prefix(&format!("{key},"))).unwrap().parse().unwrap() };
    assert!(value("lambda1") > 0.0);
    assert!(value("r0") > 0.0);
    assert!((value("lambda") - 0.5 * value("lambda1")).abs() <= 1e-12 * value("lambda1"));
    // the stationary radius of F is the printed one to the power 1/(q-p)
    assert!((value("r0") - value("r0_printed").powf(0.5)).abs() <= 1e-12);
    assert!(fs::read_to_string(dir.path().join("f_profile.csv")).unwrap().contains("\nr,F\n"));
}

#[test]
fn non_convergence_exits_3_and_keeps_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracvar(&["sphere-min", "--n_elem", "24", "--max_iter", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", text(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().last().unwrap().starts_with("false,"), "{summary}");
    assert!(dir.path().join("solution.csv").exists());
}

#[test]
fn capacity_table_lists_every_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracvar(&["capacity", "--n_elem", "32", "--sets", "{0.5} [0.4;0.6]"], dir.path());
    assert!(o.status.success(), "{}", text(&o.stderr));
    let t = fs::read_to_string(dir.path().join("capacity.csv")).unwrap();
    let rows: Vec<&str> = t.lines().skip(2).collect();
    assert_eq!(t.lines().nth(1), Some("set_description,q,s,n_elem,capacity_upper_bound"));
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("{0.5},4,0.5,32,") && rows[1].starts_with("[0.4;0.6],"));
}

#[test]
fn validate_flags_lambda_cap_at_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cap = 2f64.powf(0.25).to_string();
    let o = fracvar(&["validate", "--n_elem", "16", "--Lambda", &cap], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o.stdout).contains("warning: Λ ∈ [1, (q/p)^(1/4)) violated"));
    let o = fracvar(&["validate", "--n_elem", "16", "--Lambda", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

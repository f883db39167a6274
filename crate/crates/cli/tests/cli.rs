use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: [&str; 6] = ["--x-min", "-15", "--x-max", "15", "--nx", "601"];

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_marchenko-kit"));
    cmd.env_remove("MARCHENKO_KIT_THREADS");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("-o").arg(out).output().unwrap()
}

fn ok(output: &Output) {
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

/// Data rows of a CSV file, skipping the hash and column lines.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn potential_file(dir: &Path, name: &str, f: impl Fn(f64) -> f64) -> PathBuf {
    let x: Vec<f64> = (0..=600).map(|i| -15.0 + 0.05 * i as f64).collect();
    let v: Vec<f64> = x.iter().map(|&x| f(x)).collect();
    write(dir, name, &serde_json::json!({"x": x, "v": v}).to_string())
}

fn free_data(dir: &Path) -> PathBuf {
    let k: Vec<f64> = (0..=160).map(|i| 0.05 * i as f64).collect();
    let zeros = vec![0.0; k.len()];
    write(dir, "free.json", &serde_json::json!({"k": k, "r_re": zeros, "r_im": zeros, "bound_states": []}).to_string())
}

fn soliton_data(dir: &Path) -> PathBuf {
    let out = dir.join("sol");
    let mut args = vec!["soliton", "--kappa", "1", "--c", "1.4142135623730951"];
    args.extend(SMALL);
    ok(&run(&args, &out));
    out.join("scattering_data.json")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn forward_finds_the_soliton_bound_state() {
    let dir = TempDir::new().unwrap();
    let input = potential_file(dir.path(), "v.json", |x| -2.0 / x.cosh().powi(2));
    let out = dir.path().join("fwd");
    ok(&run(&["forward", path(&input)], &out));
    let states: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bound_states.json")).unwrap()).unwrap();
    let states = states["bound_states"].as_array().unwrap();
    assert_eq!(states.len(), 1);
    assert!((states[0]["kappa"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    let text = std::fs::read_to_string(out.join("scattering.csv")).unwrap();
    let line = text.lines().nth(2).unwrap();
    for cell in line.split(',') {
        let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
    }
    for row in rows(&out.join("scattering.csv")) {
        assert!(row[1].hypot(row[2]) < 1e-3);
    }
}

#[test]
fn forward_of_zero_potential_has_zero_reflection() {
    let dir = TempDir::new().unwrap();
    let input = potential_file(dir.path(), "zero.json", |_| 0.0);
    let out = dir.path().join("fwd");
    ok(&run(&["forward", path(&input)], &out));
    for row in rows(&out.join("scattering.csv")) {
        assert!(row[1].hypot(row[2]) < 1e-9, "k = {}", row[0]);
    }
}

#[test]
fn input_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"x\": [0, 1,");
    let out = dir.path().join("o");
    let result = run(&["forward", path(&bad)], &out);
    assert_eq!(result.status.code(), Some(2));
    assert!(!result.stderr.is_empty());

    assert_eq!(run(&["forward", "missing.json"], &out).status.code(), Some(2));

    let k: Vec<f64> = (0..=160).map(|i| 0.05 * i as f64).collect();
    let r_re: Vec<f64> = k.iter().map(|k| if (k - 1.0).abs() < 0.2 { 1.2 } else { 0.0 }).collect();
    let r_im = vec![0.0; k.len()];
    let strong = write(
        dir.path(),
        "strong.json",
        &serde_json::json!({"k": k, "r_re": r_re, "r_im": r_im, "bound_states": []}).to_string(),
    );
    let result = run(&["invert", path(&strong)], &out);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("validation"));

    let result = bin().args(["deriv", "dpsi-dr", path(&free_data(dir.path())), "--k", "1"]).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn invert_soliton_and_free_data() {
    let dir = TempDir::new().unwrap();
    let data = soliton_data(dir.path());
    let out = dir.path().join("inv");
    let mut args = vec!["invert", path(&data)];
    args.extend(SMALL);
    ok(&run(&args, &out));
    for row in rows(&out.join("potential.csv")) {
        assert!((row[1] + 2.0 / row[0].cosh().powi(2)).abs() <= 0.01 * 2.0);
    }
    assert!(out.join("kernel.csv").exists() && out.join("wavefunctions.csv").exists());

    let out = dir.path().join("free");
    let free = free_data(dir.path());
    let mut args = vec!["invert", path(&free)];
    args.extend(SMALL);
    ok(&run(&args, &out));
    assert!(rows(&out.join("potential.csv")).iter().all(|r| r[1] == 0.0));
}

#[test]
fn derivative_fields_on_free_data() {
    let dir = TempDir::new().unwrap();
    let free = free_data(dir.path());
    let out = dir.path().join("d");
    let mut args = vec!["deriv", "dv-dr", path(&free), "--k", "1"];
    args.extend(SMALL);
    ok(&run(&args, &out));
    for row in rows(&out.join("deriv_dv_dr.csv")) {
        let (x, re, im) = (row[0], row[2], row[3]);
        let (er, ei) = (-2.0 / PI * (2.0 * x).sin(), -2.0 / PI * (2.0 * x).cos());
        assert!((re - er).hypot(im - ei) < 1e-4, "x = {x}");
    }

    let mut args = vec!["deriv", "dr-dv", path(&free), "--k", "0.7", "--k", "1.5"];
    args.extend(SMALL);
    ok(&run(&args, &out));
    let table = rows(&out.join("deriv_dr_dv.csv"));
    assert_eq!(table.len(), 2 * 601);
    for row in table {
        let (x, k) = (row[0], row[1]);
        // e^{-2ikx} / 2ik
        let (er, ei) = ((-2.0 * k * x).sin() / (2.0 * k), -(-2.0 * k * x).cos() / (2.0 * k));
        assert!((row[2] - er).hypot(row[3] - ei) < 1e-4, "x = {x}, k = {k}");
    }

    let mut args = vec!["deriv", "dpsi-dr", path(&free), "--k", "1", "--q", "1.01"];
    args.extend(SMALL);
    let result = run(&args, &out);
    ok(&result);
    assert!(String::from_utf8_lossy(&result.stderr).contains("resonance"));
    assert_eq!(rows(&out.join("deriv_dpsi_dr.csv"))[0].len(), 5);
}

#[test]
fn checks_pass_on_good_data_and_fail_on_coarse_grids() {
    let dir = TempDir::new().unwrap();
    let data = soliton_data(dir.path());
    let out = dir.path().join("c");
    let mut args = vec!["check", "trace", path(&data)];
    args.extend(SMALL);
    ok(&run(&args, &out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["checks"][0]["check_name"], "trace");
    for key in ["parameters", "lhs", "rhs", "residual", "pass"] {
        assert!(report["checks"][0].get(key).is_some(), "{key}");
    }

    let free = free_data(dir.path());
    let mut args = vec!["check", "all", path(&free)];
    args.extend(SMALL);
    ok(&run(&args, &out));

    let coarse = run(&["check", "roundtrip", path(&data), "--x-min", "-15", "--x-max", "15", "--nx", "16"], &out);
    assert_eq!(coarse.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&coarse.stderr);
    assert!(stderr.contains("FAIL") && stderr.contains("residual"), "{stderr}");
}

#[test]
fn tmap_reproduces_forward_transmission() {
    let dir = TempDir::new().unwrap();
    let input = potential_file(dir.path(), "well.json", |x| -0.3 * (-x * x / 4.0).exp());
    let fwd = dir.path().join("fwd");
    ok(&run(&["forward", path(&input), "--k-max", "8"], &fwd));
    let out = dir.path().join("t");
    ok(&run(&["tmap", path(&fwd.join("scattering_data.json"))], &out));
    let forward = rows(&fwd.join("scattering.csv"));
    let mapped = rows(&out.join("transmission.csv"));
    for (f, m) in forward.iter().zip(&mapped[1..]).filter(|(f, _)| (0.2..=5.0).contains(&f[0])) {
        assert_eq!(f[0], m[0]);
        assert!((f[3] - m[3]).hypot(f[4] - m[4]) < 1e-3, "k = {}", f[0]);
    }
}

#[test]
fn outputs_are_deterministic_and_stamped() {
    let dir = TempDir::new().unwrap();
    let input = potential_file(dir.path(), "v.json", |x| -1.0 / x.cosh().powi(2));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&bin().args(["forward", path(&input), "--threads", "1", "-o", path(&a)]).output().unwrap());
    ok(&bin().args(["forward", path(&input), "-o", path(&b)]).env("MARCHENKO_KIT_THREADS", "3").output().unwrap());
    let mut hashes = Vec::new();
    for name in ["scattering.csv", "scattering_data.json", "bound_states.json"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name}");
        let text = String::from_utf8(x).unwrap();
        let after = text.split("config_hash").nth(1).unwrap();
        let hash: String = after.chars().skip_while(|c| !c.is_ascii_hexdigit()).take(64).collect();
        assert!(hash.len() == 64 && hash.chars().all(|c| c.is_ascii_hexdigit()), "{name}: {hash}");
        hashes.push(hash);
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = TempDir::new().unwrap();
    let config = write(
        dir.path(),
        "run.json",
        r#"{"spatial": {"min": -10, "max": 10, "n": 401}, "io": {"format": "json"}}"#,
    );
    let out = dir.path().join("o");
    let args = ["soliton", "--kappa", "1", "--c", "1.5", "--config", path(&config), "--nx", "201"];
    ok(&run(&args, &out));
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("potential.json")).unwrap()).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 201);
    assert_eq!(table["columns"], serde_json::json!(["x", "v"]));

    let bad = write(dir.path(), "bad.json", r#"{"spatial": {"spacing": 0.1}}"#);
    assert_eq!(run(&["soliton", "--kappa", "1", "--c", "1", "--config", path(&bad)], &out).status.code(), Some(2));
}

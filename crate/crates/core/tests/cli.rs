use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frictionwork"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// `name value` pairs from the quantity lines of `check` output.
fn quantities(text: &str) -> Vec<(String, f64)> {
    text.lines()
        .filter(|l| l.starts_with("  ") && !l.trim_end().ends_with("ok") && !l.trim_end().ends_with("FAILED"))
        .map(|l| {
            let (name, value) = l.trim().rsplit_once(' ').unwrap();
            (name.trim().to_string(), value.parse().unwrap())
        })
        .collect()
}

#[test]
fn check_fixture_matches_golden() {
    let out = run(&["check", "--n", "8", "--L", "1", "--Ti", "3", "--hi", "1.5", "--dh", "2", "--tau", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}\n{}", String::from_utf8_lossy(&out.stderr));
    let identity_lines: Vec<&str> = text.lines().filter(|l| l.trim_end().ends_with("ok")).collect();
    assert_eq!(identity_lines.len(), 10, "{text}");
    assert!(!text.contains("FAILED"));

    let golden = include_str!("golden/check_fixture.txt");
    assert_eq!(text.lines().next(), golden.lines().next());
    let (got, want) = (quantities(&text), quantities(golden));
    assert_eq!(got.len(), want.len());
    for ((name, g), (wname, w)) in got.iter().zip(&want) {
        assert_eq!(name, wname);
        if name == "unitarity deviation" {
            assert!(*g < 1e-9 * 256.0);
        } else {
            assert!((g - w).abs() <= 1e-9 * w.abs().max(1e-3), "{name}: {g} vs golden {w}");
        }
    }
}

#[test]
fn sweep_writes_schema_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "small.conf",
        "[chain]\nn = 4\nL = 0.5\n[protocol]\nT_i = 2\n[sweep]\naxis = tau\ngrid_start = 0.2\ngrid_stop = 2\ngrid_points = 3\ngrid_scale = log\n",
    );
    let out_dir = dir.path().join("out");
    let out_str = out_dir.to_str().unwrap();
    for workers in ["1", "3"] {
        let o = run(&["sweep", &cfg, "--out", out_str, "--name", &format!("w{workers}.csv"), "--workers", workers]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(out_dir.join("w1.csv")).unwrap();
    let b = std::fs::read(out_dir.join("w3.csv")).unwrap();
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# units: energy g, time 1/g, temperature g, entropy nats; config_hash="));
    assert!(lines[1].starts_with("tau,W_tau,W_A,W_fric,TA,dSd,TA_dSd,D_tau_A,D_diag_A,delta,W_opt,"));
    assert_eq!(lines.len(), 5);
    let width = lines[1].split(',').count();
    for row in &lines[2..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), width);
        assert_eq!(cells[width - 2], "0");
        for c in &cells[..11] {
            let (mantissa, _) = c.split_once('e').unwrap();
            assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 12, "{c}");
        }
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.conf", "n = 4\nwobble = 3\n");
    let o = run(&["sweep", &bad, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = run(&["sweep", dir.path().join("missing.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["figure", "fig9"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["check", "--n", "3", "--Ti", "-1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["modes", "--n", "10", "--L", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_and_keeps_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "coarse.conf", "n = 4\nstep_dt = 0.4\naxis = tau\ngrid = 2\n");
    let o = run(&["sweep", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unitarity"));
    let csv = std::fs::read_to_string(dir.path().join("coarse.csv")).unwrap();
    let row = csv.lines().nth(2).unwrap();
    assert!(row.contains(",error,"), "{row}");
}

#[test]
fn mode_figure_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = run(&["figure", "fig4c", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        outputs.push((
            std::fs::read(out.join("fig4c.csv")).unwrap(),
            std::fs::read(out.join("fig4c.plot.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let plot: serde_json::Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(plot["format"], "frictionwork-plot/1");
    assert_eq!(plot["panels"][0]["x"]["column"], "omega_f");
}

#[test]
fn modes_command_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["modes", "--n", "64", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 64);
    assert!(csv.lines().nth(1).unwrap().starts_with("j,theta,omega_i,omega_f,TA_j,W_fric_j"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mobnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mobnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

const ONOFF: &str = r#"{
  "states": ["off", "on"],
  "constants": {"lambda": 0.25, "c": 2.857},
  "reactions": [
    {"consumed": [1, 0], "produced": [0, 1], "rate": "lambda * off"},
    {"consumed": [0, 1], "produced": [1, 0], "rate": "c * min(on, 1)"}
  ],
  "mu": [MU, 0.0],
  "initial": [{"kind": "constant", "value": 0.0}, INITIAL],
  "horizon": 10
}"#;

fn onoff_config(dir: &Path, mu: &str, initial: &str) -> String {
    let p = dir.join("net.json");
    fs::write(&p, ONOFF.replace("MU", mu).replace("INITIAL", initial)).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn validate_accepts_builtins_and_configs() {
    for s in ["epidemic", "p2p", "onoff", "heat"] {
        assert_eq!(code(&mobnet(&["validate", "--scenario", s])), 0, "{s}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = onoff_config(dir.path(), "0.001", r#"{"kind": "theta", "scale": 10}"#);
    assert_eq!(code(&mobnet(&["validate", "--config", &cfg])), 0);
}

#[test]
fn validate_names_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = onoff_config(dir.path(), "-0.5", r#"{"kind": "theta", "scale": 10}"#);
    let o = mobnet(&["validate", "--config", &cfg]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("mu[0]"), "{}", stderr(&o));

    let cfg = onoff_config(dir.path(), "0.001", r#"{"kind": "constant", "value": 2}"#);
    let o = mobnet(&["validate", "--config", &cfg]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("(0, 0)"), "{}", stderr(&o));
}

#[test]
fn malformed_and_missing_configs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\n  \"states\": [\"a\"],\n  oops\n}").unwrap();
    let o = mobnet(&["validate", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = mobnet(&["validate", "--config", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn usage_errors_exit_with_validation_code() {
    assert_eq!(code(&mobnet(&["sim", "--scenario", "onoff", "--config", "x.json"])), 1);
    assert_eq!(code(&mobnet(&["sim"])), 1);
    assert_eq!(
        code(&mobnet(&["ode", "--scenario", "heat", "--dt", "0.1", "--auto-dt"])),
        1
    );
    assert_eq!(code(&mobnet(&["sim", "--scenario", "nope"])), 1);
    assert_eq!(code(&mobnet(&["sim", "--scenario", "heat", "--mu2", "0.1"])), 1);
    assert_eq!(code(&mobnet(&["--help"])), 0);
}

#[test]
fn numeric_failures_exit_with_code_two() {
    let o = mobnet(&["pde", "--scenario", "heat", "--ds", "1/16", "--dt", "0.01"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("stability"));
    let o = mobnet(&["ode", "--scenario", "heat", "--K", "8", "--dt", "0.3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_exits_with_code_three() {
    let o = mobnet(&[
        "rwcheck",
        "--replicas",
        "10",
        "--seed",
        "1",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn sim_is_reproducible_from_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let traj = dir.path().join(format!("traj-{name}"));
        let o = mobnet(&[
            "sim",
            "--scenario",
            "onoff",
            "--V",
            "10",
            "--mu1",
            "0.01",
            "--seed",
            "99",
            "--replicas-min",
            "20",
            "--out",
            out.to_str().unwrap(),
            "--trajectory-out",
            traj.to_str().unwrap(),
            "--snapshot-times",
            "0,5,10",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (fs::read(out).unwrap(), fs::read(traj).unwrap())
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a.0).unwrap();
    assert!(text.starts_with("metric,mean,ci_low,ci_high,replicas\nfraction_off,"));
    let traj = String::from_utf8(a.1).unwrap();
    assert!(traj.starts_with("t,region_x,region_y,state,count\n"));
    // 36 interior regions, two states, three times
    assert_eq!(traj.lines().count(), 1 + 36 * 2 * 3);

    let o = mobnet(&[
        "sim",
        "--scenario",
        "onoff",
        "--replicas-min",
        "2",
        "--replica-cap",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("seed: "));
}

#[test]
fn stochastic_commands_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let compare = |name: &str| {
        let out = dir.path().join(name);
        let o = mobnet(&[
            "compare",
            "--scenario",
            "onoff",
            "--V",
            "10",
            "--mu",
            "0.01",
            "--K-list",
            "3,5",
            "--ds",
            "1/32",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        csv_rows(&out)
    };
    let rows = compare("c1.csv");
    assert_eq!(rows, compare("c2.csv"));
    assert_eq!(
        rows[0].join(","),
        "N,K,V,mu,nodes,ctmc_mean,ctmc_ci,replicas,pde_metric,abs_error"
    );
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        let mean: f64 = r[5].parse().unwrap();
        let pde: f64 = r[8].parse().unwrap();
        let err: f64 = r[9].parse().unwrap();
        assert_eq!(err, (mean - pde).abs());
        assert_eq!(r[2], "10");
        assert_eq!(r[3], "0.01");
    }

    let rw = |name: &str| {
        let out = dir.path().join(name);
        let o = mobnet(&[
            "rwcheck",
            "--k",
            "1,2",
            "--r",
            "4",
            "--scale-rate",
            "--t",
            "2",
            "--replicas",
            "500",
            "--seed",
            "8",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        csv_rows(&out)
    };
    let rows = rw("r1.csv");
    assert_eq!(rows, rw("r2.csv"));
    assert_eq!(rows[0].join(","), "k,r,t,msd,ci_low,ci_high,theory");
    assert_eq!(rows[1][6], "8");
    assert_eq!((rows[2][1].as_str(), rows[2][6].as_str()), ("16", "8"));
}

#[test]
fn rwcheck_theory_column() {
    let o = mobnet(&[
        "rwcheck",
        "--k",
        "1",
        "--r",
        "4",
        "--t",
        "2",
        "--replicas",
        "100",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[6], "8");
}

#[test]
fn ode_snapshots_have_zero_boundary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ode.csv");
    let o = mobnet(&[
        "ode",
        "--scenario",
        "heat",
        "--K",
        "16",
        "--dt",
        "auto",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&out);
    assert_eq!(rows[0].join(","), "t,region_x,region_y,state,density");
    let mut boundary = 0;
    for r in &rows[1..] {
        let x: f64 = r[1].parse().unwrap();
        let y: f64 = r[2].parse().unwrap();
        if x == 0.0 || y == 0.0 || x == 1.0 || y == 1.0 {
            assert_eq!(r[4], "0");
            boundary += 1;
        }
    }
    assert_eq!(boundary, 2 * 4 * 16);
}

#[test]
fn pde_fields_and_refinement_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pde.csv");
    let o = mobnet(&[
        "pde",
        "--scenario",
        "heat",
        "--ds",
        "1/16",
        "--snapshot-times",
        "0,1",
        "--clamp",
        "on",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv_rows(&out).len(), 1 + 2 * 17 * 17);

    let o = mobnet(&["pde", "--scenario", "heat", "--refine", "1/8,1/16,1/32"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ds_coarse,ds_fine,sup_norm_diff,metric_rel_diff");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.125,0.0625,"));
}

#[test]
fn output_is_replaced_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("msd.csv");
    fs::write(&out, "stale").unwrap();
    let o = mobnet(&[
        "rwcheck",
        "--replicas",
        "10",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(&out).unwrap().starts_with("k,r,t,msd"));
    let leftovers = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

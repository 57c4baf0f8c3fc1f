use std::process::{Command, Output};

fn cssl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cssl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn theory_sweep_has_one_row_per_point() {
    let o = cssl(&["theory", "--preset", "fig2-left", "--sweep", "cu=0:10:0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 22);
    assert!(lines[0].starts_with("cu,laplacian,centered,spectral"));
    // c_u = 0 has no centered prediction but keeps the Laplacian one
    assert!(lines[1].contains("c_u > 0"));
    let lap: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(lap.iter().all(|&v| (v - 0.792892).abs() < 1e-6));
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let args = ["simulate", "--preset", "fig2-left", "--sweep", "cu=1", "--trials", "2", "--seed", "7"];
    let a = cssl(&args);
    assert!(a.status.success());
    let mut with_file = args.to_vec();
    with_file.extend(["--threads", "1", "-o", out.to_str().unwrap()]);
    assert!(cssl(&with_file).status.success());
    assert_eq!(stdout(&a), std::fs::read_to_string(&out).unwrap());
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("cu,method,accuracy,ci99,parameter,best,trials,failures,theory\n"));
    let other = cssl(&["simulate", "--preset", "fig2-left", "--sweep", "cu=1", "--trials", "2", "--seed", "8"]);
    assert_ne!(text, stdout(&other));
}

#[test]
fn exit_codes_separate_usage_from_runtime_errors() {
    assert_eq!(cssl(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(cssl(&["simulate", "--preset", "nope"]).status.code(), Some(1));
    let missing = cssl(&["simulate", "--config", "/definitely/not/here.ini", "--preset", "a"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}

#[test]
fn help_lists_the_flags() {
    let o = cssl(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for cmd in ["simulate", "theory", "sbm", "optimal", "graph-export"] {
        assert!(text.contains(cmd), "{cmd}");
    }
    let text = stdout(&cssl(&["simulate", "--help"]));
    for flag in ["--preset", "--config", "--sweep", "--trials", "--methods", "--seed", "--a-grid", "--t-grid", "--out"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn graph_export_writes_edges_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    let scores = dir.path().join("scores.csv");
    let o = cssl(&[
        "graph-export",
        "--preset",
        "fig2-left",
        "--sweep",
        "cu=2",
        "--solver",
        "centered",
        "--scores",
        scores.to_str().unwrap(),
        "-o",
        edges.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e = std::fs::read_to_string(&edges).unwrap();
    assert!(e.starts_with("i,j,w\n"));
    // dense kernel graph on 400 points, upper triangle with diagonal
    assert_eq!(e.lines().count(), 1 + 400 * 401 / 2);
    let s = std::fs::read_to_string(&scores).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "index,score,label");
    assert!(lines[1].starts_with("200,"));
    assert_eq!(lines.len(), 201);
}

#[test]
fn optimal_reports_the_isotropic_columns() {
    let o = cssl(&["optimal", "--preset", "fig8", "--sweep", "cu=10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 10.0);
    assert!((row[1] - 0.9150).abs() < 1e-3);
    assert!((row[2] - 0.9141).abs() < 1e-3);
    assert!((row[4] - 0.841345).abs() < 1e-6);
    assert_eq!(cssl(&["optimal", "--preset", "fig2-right"]).status.code(), Some(2));
}

mod common;

use std::collections::BTreeMap;

use centered_ssl::asymptotics::TheoryForm;
use centered_ssl::experiment::{
    config_from_section, parse_config, parse_sections, parse_trials, parse_values, preset, range, DataSource,
    MethodKind, Sweep, SweepVar, Trials, PRESETS,
};
use centered_ssl::graph::WeightedGraph;
use centered_ssl::io::{format_float, read_features_csv, write_assignment, write_edge_list, write_scores, write_features_csv};
use centered_ssl::solvers::{balanced_label_scores, laplacian_regularization};
use centered_ssl::spectral::spectral_cluster_centered;
use centered_ssl::Error;
use nalgebra::DMatrix;

#[test]
fn feature_csv_round_trips_exactly() {
    let x = common::two_blob_features(&common::alternating(9), 4, 0.3, 51);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    write_features_csv(&path, &x).unwrap();
    assert_eq!(read_features_csv(&path).unwrap(), x);
    for v in [0.1, -1.0 / 3.0, 1e-300, 6.02e23] {
        assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
    }
    assert_eq!(format_float(f64::NAN), "NaN");
}

#[test]
fn edge_lists_hold_the_upper_triangle() {
    let w = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.0, 0.5, 1.0, 2.0, 0.0, 2.0, 0.0]);
    for g in [
        WeightedGraph::from_dense(w.clone()).unwrap(),
        WeightedGraph::from_dense_storage(w.clone()).unwrap(),
    ] {
        let mut out = Vec::new();
        write_edge_list(&g, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,w");
        let edges: Vec<(usize, usize, f64)> = lines[1..]
            .iter()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
            })
            .collect();
        assert_eq!(edges, vec![(0, 1, 0.5), (1, 1, 1.0), (1, 2, 2.0)]);
    }
}

#[test]
fn score_files_list_unlabeled_nodes() {
    let (g, classes) = common::small_graph(10, 3, 52);
    let f_l = balanced_label_scores(&classes[..4], 2).unwrap();
    let s = laplacian_regularization(&g, &f_l, -1.0).unwrap();
    let mut out = Vec::new();
    write_scores(&s, 4, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,score,label");
    assert_eq!(lines.len(), 7);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "4");
    assert_eq!(first[1].parse::<f64>().unwrap(), s.f_u[(0, 0)]);
    assert_eq!(first[2], s.predict()[0].to_string());

    let multi = balanced_label_scores(&[0, 1, 2, 0, 1, 2], 3).unwrap();
    let s = laplacian_regularization(&g, &multi, -1.0).unwrap();
    let mut out = Vec::new();
    write_scores(&s, 6, &mut out).unwrap();
    assert!(String::from_utf8(out).unwrap().starts_with("index,score_0,score_1,score_2,label\n6,"));

    let a = spectral_cluster_centered(&g).unwrap();
    let mut out = Vec::new();
    write_assignment(&a, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("index,label,vector\n0,"));
}

#[test]
fn value_lists_and_ranges() {
    assert_eq!(parse_values("1,2.5, 4").unwrap(), vec![1.0, 2.5, 4.0]);
    assert_eq!(parse_values("[0.5,1]").unwrap(), vec![0.5, 1.0]);
    assert_eq!(parse_values("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(parse_values("-2:0:1").unwrap(), vec![-2.0, -1.0, 0.0]);
    let r = range(-2.0, 0.0, 0.02);
    assert_eq!(r.len(), 101);
    assert_eq!(*r.last().unwrap(), 0.0);
    assert_eq!(range(0.0, 10.0, 0.5).len(), 21);
    assert!(parse_values("1:0:1").is_err());
    assert!(parse_values("0:1:0").is_err());
    assert!(parse_values("a,b").is_err());
}

#[test]
fn sweeps_and_trials_parse() {
    let s: Sweep = "cu=2:10:2".parse().unwrap();
    assert_eq!(s.var, SweepVar::Cu);
    assert_eq!(s.values, vec![2.0, 4.0, 6.0, 8.0, 10.0]);
    assert_eq!("lf=0.05".parse::<Sweep>().unwrap().var, SweepVar::LabeledFraction);
    assert!("cu".parse::<Sweep>().is_err());
    assert!("xx=1".parse::<Sweep>().is_err());
    assert_eq!(parse_trials("auto").unwrap(), Trials::Auto);
    assert_eq!(parse_trials("12").unwrap(), Trials::Fixed(12));
    assert!(parse_trials("-1").is_err());
    assert_eq!(Trials::Auto.count(1000), 50);
    assert_eq!(Trials::Auto.count(300), 167);
    assert_eq!(Trials::Fixed(3).count(10), 3);
    assert_eq!("iterated".parse::<MethodKind>().unwrap(), MethodKind::IteratedLaplacian);
    assert!("bogus".parse::<MethodKind>().is_err());
}

#[test]
fn every_preset_is_valid() {
    for name in PRESETS {
        let cfg = preset(name).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.name, name);
    }
    let f2 = preset("fig2-left").unwrap();
    let m = f2.mixture().unwrap();
    assert_eq!((m.p(), m.c_l, m.c_u), (100, 2.0, 10.0));
    assert_eq!(m.mean_gap().norm_squared(), 4.0);
    assert_eq!(f2.grids.a, vec![-1.0]);
    assert_eq!(f2.form, TheoryForm::Lifted);
    match preset("table1-case2").unwrap().source {
        DataSource::Sbm { spec, labeled_fraction } => {
            assert_eq!(spec.n(), 1000);
            assert!((spec.q_in - 0.035).abs() < 1e-15);
            assert!(spec.degree_law.is_some());
            assert_eq!(labeled_fraction, 0.05);
        }
        other => panic!("unexpected source {other:?}"),
    }
    assert!(matches!(preset("nope"), Err(Error::Config(_))));
}

#[test]
fn config_files_override_presets() {
    let text = "
        # comment
        [small]
        preset = fig2-right
        c_u = 3   # inline comment
        trials = 4
        seed = 11
        methods = laplacian,centered
        t_grid = -1:1:1
        form = direct

        [graph]
        source = sbm
        n = 200
        q_in = 20/n
        q_out = 0.02
        degree_law = 0.5:0.5,1:0.5
        labeled_fraction = 0.1
    ";
    let cfgs = parse_config(text).unwrap();
    let small = &cfgs["small"];
    assert_eq!(small.mixture().unwrap().c_u, 3.0);
    assert_eq!(small.mixture().unwrap().cov[0][(0, 1)], 0.1);
    assert_eq!(small.trials, Trials::Fixed(4));
    assert_eq!(small.seed, 11);
    assert_eq!(small.methods, vec![MethodKind::Laplacian, MethodKind::Centered]);
    assert_eq!(small.grids.t, vec![-1.0, 0.0, 1.0]);
    assert_eq!(small.form, TheoryForm::Direct);
    assert_eq!(small.sweep.as_ref().unwrap().values.len(), 5, "sweep inherited");
    match &cfgs["graph"].source {
        DataSource::Sbm { spec, labeled_fraction } => {
            assert_eq!(spec.q_in, 0.1);
            assert_eq!(spec.degree_law.as_ref().unwrap().values, vec![0.5, 1.0]);
            assert_eq!(*labeled_fraction, 0.1);
        }
        other => panic!("unexpected source {other:?}"),
    }
}

#[test]
fn custom_mixtures_from_keys() {
    let mut keys = BTreeMap::new();
    for (k, v) in [
        ("p", "3"),
        ("mu1", "1,0"),
        ("mu2", "0,1,2"),
        ("c1", "identity"),
        ("c2", "toeplitz:0.5"),
        ("rho1", "0.25"),
        ("c_l", "0.5"),
        ("c_u", "2"),
        ("kernel", "gaussian:2"),
    ] {
        keys.insert(k.to_string(), v.to_string());
    }
    let cfg = config_from_section("custom", &keys).unwrap();
    let m = cfg.mixture().unwrap();
    assert_eq!(m.mu[0].as_slice(), &[1.0, 0.0, 0.0]);
    assert_eq!(m.cov[1][(0, 2)], 0.25);
    assert_eq!(m.rho, [0.25, 0.75]);
    assert_eq!(cfg.kernel.bandwidth, 2.0);
    assert_eq!(cfg.trials, Trials::Auto);
}

#[test]
fn bad_configs_are_reported() {
    let cases = [
        "[a]\npreset = fig2-left\nbogus = 1\n",
        "key = 1\n",
        "[a]\nno equals sign\n",
        "[a]\npreset = fig2-left\ntrials = 0\n",
        "[a]\npreset = fig2-left\nkernel = laplace\n",
        "[a]\npreset = fig2-left\nform = sideways\n",
        "[a]\np = 4\n",
        "[a]\nsource = sbm\nn = 100\n",
        "[a]\npreset = fig2-left\nseed = -3\n",
        "[a]\nsource = csv\npath = x.csv\n",
    ];
    for text in cases {
        assert!(parse_config(text).is_err(), "accepted {text:?}");
    }
    let sections = parse_sections("[x]\nKey = Value\n").unwrap();
    assert_eq!(sections["x"]["key"], "Value");
}

use centered_ssl::asymptotics::{
    bayes_optimal_isotropic, centered_isotropic, centered_isotropic_theory, direct_statistics, expected_tanh,
    g_of_q, gauss_hermite, isotropic_condition_xi, isotropic_theory, laplacian_theory, lift_statistics, phi,
    q_tail, r_ctr_consistency_check, r_lap, toeplitz, CenteredTheory, LiftedStatistics, MixtureModel, TheoryForm,
};
use centered_ssl::graph::GaussianKernel;
use nalgebra::{DMatrix, DVector};

const P: usize = 100;

fn fig2_left(c_u: f64) -> MixtureModel {
    MixtureModel::antipodal(P, 4.0, DMatrix::identity(P, P), 2.0, c_u).unwrap()
}

fn fig2_right(c_u: f64) -> MixtureModel {
    MixtureModel::antipodal(P, 4.0, toeplitz(P, 0.1), 2.0, c_u).unwrap()
}

fn theory(model: &MixtureModel, form: TheoryForm) -> CenteredTheory {
    CenteredTheory::from_model(model, &GaussianKernel::default(), form).unwrap()
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn normal_cdf(x: f64) -> f64 {
    let density = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 + simpson(density, 0.0, x, 20_000)
}

/// `E tanh(z)`, `z ~ N(q, q)`, by direct integration.
fn tanh_mean(q: f64) -> f64 {
    let sd = q.sqrt();
    let f = |z: f64| z.tanh() * (-(z - q).powi(2) / (2.0 * q)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    simpson(f, q - 12.0 * sd, q + 12.0 * sd, 40_000)
}

/// Root of `q = m2 − m2/(1 + m2(c_l + u(q)c_u))` by bisection on `[0, m2]`.
fn overlap_root(m2: f64, c_l: f64, c_u: f64, u: impl Fn(f64) -> f64) -> f64 {
    let gap = |q: f64| m2 - m2 / (1.0 + m2 * (c_l + u(q) * c_u)) - q;
    let (mut lo, mut hi) = (1e-12, m2);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// θ, q, s with an explicit inverse of `I − ξΣ̄`.
fn resolvent_oracle(stats: &LiftedStatistics, rr: f64, p: f64, xi: f64) -> (f64, f64, f64) {
    let d = stats.dim();
    let inv = (DMatrix::identity(d, d) - &stats.sigma_bar * xi).try_inverse().unwrap();
    let gap: DVector<f64> = &stats.nu[0] - &stats.nu[1];
    let theta = rr * xi * gap.dot(&(&inv * &gap));
    let sq = &stats.sigma_bar * &inv;
    let q = xi * xi * (&sq * &sq).trace() / p;
    let s = rr * xi * xi * (&inv * &gap).dot(&(&stats.sigma_bar * (&inv * &gap)));
    (theta, q, s)
}

#[test]
fn laplacian_prediction_is_flat_in_unlabeled_ratio() {
    let expected = normal_cdf((2.0f64 / 3.0).sqrt());
    assert!((expected - 0.7929).abs() < 5e-4);
    for c_u in [2.0, 4.0, 6.0, 8.0, 10.0] {
        let pred = laplacian_theory(&fig2_left(c_u), &GaussianKernel::default()).unwrap();
        assert!((pred.accuracy - expected).abs() < 1e-9, "c_u = {c_u}: {}", pred.accuracy);
    }
}

#[test]
fn laplacian_prediction_matches_variance_ratio() {
    for model in [fig2_left(3.0), fig2_right(3.0)] {
        let pred = laplacian_theory(&model, &GaussianKernel::default()).unwrap();
        let r = r_lap(&model).unwrap();
        // balanced classes: accuracy Φ(1/(2√r))
        assert!((pred.accuracy - normal_cdf(0.5 / r.sqrt())).abs() < 1e-9);
        assert!((pred.r - r).abs() < 1e-9 * r);
    }
    let hetero = MixtureModel::new(
        0.5,
        [DVector::zeros(4), DVector::from_element(4, 1.0)],
        [DMatrix::identity(4, 4), DMatrix::identity(4, 4) * 2.0],
        1.0,
        1.0,
    )
    .unwrap();
    assert!(r_lap(&hetero).is_err());
}

#[test]
fn normal_cdf_matches_quadrature() {
    for x in [-3.0, -1.0, 0.0, 0.4, 1.5, 4.0] {
        assert!((phi(x) - normal_cdf(x)).abs() < 1e-10);
        assert!((phi(x) + q_tail(x) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn resolvent_functionals_match_explicit_inverse() {
    let kernel = GaussianKernel::default();
    for model in [fig2_left(4.0), fig2_right(4.0)] {
        for stats in [direct_statistics(&model), lift_statistics(&model, &kernel).unwrap()] {
            let t = CenteredTheory::new(&model, &stats).unwrap();
            let pole = t.xi_domain().xi_pole;
            for frac in [0.05, 0.3, 0.7, 0.95] {
                let xi = frac * pole;
                let got = t.theta_q_s(xi).unwrap();
                let (theta, q, s) = resolvent_oracle(&stats, 0.25, P as f64, xi);
                assert!((got.theta - theta).abs() < 1e-10 * theta.max(1.0));
                assert!((got.q - q).abs() < 1e-10 * q.max(1.0));
                assert!((got.s - s).abs() < 1e-10 * s.max(1.0));
                assert_eq!(got.s_class, [got.s, got.s]);
            }
            assert!(t.theta_q_s(pole).is_err());
            assert!(t.theta_q_s(0.0).is_err());
        }
    }
}

#[test]
fn domain_boundaries_solve_their_equations() {
    let t = theory(&fig2_right(6.0), TheoryForm::Lifted);
    let d = t.xi_domain();
    assert!((t.theta_q_s(d.xi_m).unwrap().theta - 1.0).abs() < 1e-9);
    assert!((t.theta_q_s(d.xi_sigma2).unwrap().q - 6.0).abs() < 1e-8);
    assert_eq!(d.xi_sup, d.xi_m.min(d.xi_sigma2));
    let grid: Vec<f64> = (1..50).map(|i| d.xi_sup * i as f64 / 50.0).collect();
    let thetas: Vec<f64> = grid.iter().map(|&x| t.theta_q_s(x).unwrap().theta).collect();
    assert!(thetas.windows(2).all(|w| w[1] > w[0]));
    let xi = t.xi_for_theta(0.4).unwrap();
    assert!((t.theta_q_s(xi).unwrap().theta - 0.4).abs() < 1e-10);
}

#[test]
fn centered_optima_on_identity_covariance() {
    let expected = [0.8052, 0.8130, 0.8181, 0.8218, 0.8244];
    for (c_u, target) in [2.0, 4.0, 6.0, 8.0, 10.0].into_iter().zip(expected) {
        for form in [TheoryForm::Lifted, TheoryForm::Direct] {
            let best = theory(&fig2_left(c_u), form).optimize().unwrap();
            assert!((best.accuracy - target).abs() < 2e-3, "c_u = {c_u}, {form:?}: {}", best.accuracy);
        }
    }
}

#[test]
fn optimum_dominates_every_norm_level() {
    let t = theory(&fig2_right(5.0), TheoryForm::Lifted);
    let best = t.optimize().unwrap();
    let laplacian = laplacian_theory(&fig2_right(5.0), &GaussianKernel::default()).unwrap();
    assert!(best.accuracy > laplacian.accuracy);
    for e in [0.01, 0.1, 0.3, 1.0, 3.0, 10.0] {
        if let Ok(pred) = t.predict(e) {
            assert!(pred.accuracy <= best.accuracy + 1e-12, "e = {e}");
        }
    }
}

#[test]
fn norm_level_round_trips_through_xi() {
    for model in [fig2_left(4.0), fig2_right(8.0)] {
        let t = theory(&model, TheoryForm::Lifted);
        for e in [0.01, 0.2, 1.0, 4.0] {
            let xi = t.solve_xi_for_e(e).unwrap();
            let back = t.e_of_xi(xi).unwrap();
            assert!((back - e).abs() <= 1e-8 * e.max(1.0), "e = {e}: {back}");
            assert_eq!(t.predict(e).unwrap().xi, Some(xi));
        }
        let sup = t.xi_domain().xi_sup;
        for frac in [0.1, 0.5, 0.9] {
            let e = t.e_of_xi(frac * sup).unwrap();
            let xi = t.solve_xi_for_e(e).unwrap();
            assert!((xi - frac * sup).abs() < 1e-8 * sup);
        }
        assert!(t.solve_xi_for_e(0.0).is_err());
        assert!(t.solve_xi_for_e(f64::NAN).is_err());
    }
}

#[test]
fn variance_ratio_identity_holds() {
    let kernel = GaussianKernel::default();
    for model in [fig2_left(2.0), fig2_left(10.0), fig2_right(6.0)] {
        for e in [0.05, 0.5, 2.0] {
            let residual = r_ctr_consistency_check(e, &model, &kernel).unwrap();
            assert!(residual <= 1e-8, "residual {residual}");
        }
    }
}

#[test]
fn vanishing_norm_recovers_the_laplacian_prediction() {
    let kernel = GaussianKernel::default();
    for model in [fig2_left(4.0), fig2_right(4.0)] {
        let lap = laplacian_theory(&model, &kernel).unwrap().accuracy;
        assert!((theory(&model, TheoryForm::Direct).small_e_limit().accuracy - lap).abs() < 1e-9);
        // the lifted trace coordinate only adds an O(1/p) term
        let t = theory(&model, TheoryForm::Lifted);
        assert!((t.small_e_limit().accuracy - lap).abs() < 1e-3);
        let tiny = t.predict(1e-5).unwrap().accuracy;
        assert!((tiny - lap).abs() < 1e-3, "{tiny} vs {lap}");
    }
}

#[test]
fn unlabeled_data_is_required() {
    let t = theory(&fig2_left(0.0), TheoryForm::Lifted);
    assert!(t.optimize().is_err());
    assert!(t.predict(1.0).is_err());
    let moved = theory(&fig2_left(3.0), TheoryForm::Lifted).with_ratios(2.0, 7.0);
    let fresh = theory(&fig2_left(7.0), TheoryForm::Lifted);
    assert!((moved.optimize().unwrap().accuracy - fresh.optimize().unwrap().accuracy).abs() < 1e-12);
}

#[test]
fn spectral_limit_is_trivial_below_the_threshold() {
    let t = theory(&fig2_left(4.0), TheoryForm::Direct);
    assert_eq!(t.spectral_limit(1e-3).accuracy, 0.5);
    let good = t.spectral_limit(20.0).accuracy;
    let better = t.spectral_limit(40.0).accuracy;
    assert!(good > 0.5 && better > good);
}

#[test]
fn gauss_hermite_integrates_polynomials() {
    let root_pi = std::f64::consts::PI.sqrt();
    for n in [8, 20, 64, 300] {
        let (x, w) = gauss_hermite(n);
        let moment = |k: i32| x.iter().zip(&w).map(|(a, b)| b * a.powi(k)).sum::<f64>();
        assert!((moment(0) - root_pi).abs() < 1e-12);
        assert!(moment(1).abs() < 1e-12);
        assert!((moment(2) - root_pi / 2.0).abs() < 1e-12);
        assert!((moment(4) - 3.0 * root_pi / 4.0).abs() < 1e-11);
        assert!(x.windows(2).all(|p| p[0] > p[1]));
    }
}

#[test]
fn tanh_expectation_and_g_match_quadrature() {
    // 64 nodes resolve the poles of tanh less well as q grows
    for (q, tol) in [(0.01, 1e-12), (0.5, 1e-12), (1.0, 1e-9), (3.0, 1e-6), (10.0, 1e-5)] {
        assert!((expected_tanh(q) - tanh_mean(q)).abs() < tol, "q = {q}");
    }
    let g3 = g_of_q(3.0).unwrap();
    assert!((g3 - tanh_mean(3.0) * 4.0 / 3.0).abs() < 1e-6);
    assert!((g3 - 1.168).abs() < 3e-3);
    let g0 = g_of_q(1e-4).unwrap();
    assert!((0.99..=1.01).contains(&g0), "{g0}");
    assert!(g_of_q(0.0).is_err());
}

#[test]
fn isotropic_fixed_points_match_bisection() {
    for (m2, bayes, centered) in [(2.0, 0.9150, 0.9141), (1.0, 0.8211, 0.8195)] {
        let b = bayes_optimal_isotropic(m2, 0.5, 10.0).unwrap();
        let c = centered_isotropic(m2, 0.5, 10.0).unwrap();
        assert!((b.q - overlap_root(m2, 0.5, 10.0, tanh_mean)).abs() < 1e-7);
        assert!((c.q - overlap_root(m2, 0.5, 10.0, |q| q / (q + 1.0))).abs() < 1e-7);
        assert!((b.accuracy - normal_cdf(b.q.sqrt())).abs() < 1e-10);
        assert!((b.accuracy - bayes).abs() < 1e-3, "bayes {}", b.accuracy);
        assert!((c.accuracy - centered).abs() < 1e-3, "centered {}", c.accuracy);
        assert!(c.accuracy < b.accuracy);
    }
    assert!(bayes_optimal_isotropic(0.0, 0.5, 1.0).is_err());
}

#[test]
fn isotropic_condition_reproduces_the_fixed_point() {
    for (m2, c_u) in [(2.0, 10.0), (1.0, 5.0), (4.0 / 3.0, 10.0)] {
        let fixed = centered_isotropic(m2, 0.5, c_u).unwrap().accuracy;
        let at_condition = centered_isotropic_theory(m2, 0.5, c_u).unwrap().accuracy;
        assert!((fixed - at_condition).abs() < 1e-6, "{fixed} vs {at_condition}");
        let t = isotropic_theory(m2, 0.5, c_u).unwrap();
        let best = t.optimize().unwrap();
        assert!((best.accuracy - fixed).abs() < 1e-6);
        let xi = isotropic_condition_xi(&t).unwrap();
        assert!((best.xi.unwrap() - xi).abs() < 1e-3 * xi);
    }
}

#[test]
fn isotropic_stand_in_agrees_with_full_dimension() {
    // ±μ with ‖μ‖² = 2 in p = 100 has mean gap 8
    let full = MixtureModel::antipodal(P, 8.0, DMatrix::identity(P, P), 0.5, 10.0).unwrap();
    let t = CenteredTheory::new(&full, &direct_statistics(&full)).unwrap();
    let small = isotropic_theory(2.0, 0.5, 10.0).unwrap();
    assert!((t.optimize().unwrap().accuracy - small.optimize().unwrap().accuracy).abs() < 1e-2);
}

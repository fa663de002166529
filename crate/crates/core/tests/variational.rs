use aptail::ap_count::count_tk_density;
use aptail::domain::{entropy_sum, relative_entropy};
use aptail::variational::*;
use aptail::{AmbientSet, DensityFunction, Params};
use proptest::prelude::*;

#[test]
fn entropy_values() {
    assert_eq!(relative_entropy(0.3, 0.3).unwrap(), 0.0);
    assert!((relative_entropy(1.0, 0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
    let (p, x) = (1e-4, 1e-6);
    let approx = x * x / (2.0 * p);
    assert!((relative_entropy(p + x, p).unwrap() - approx).abs() / approx < 0.01);
    let amb = AmbientSet::interval(10);
    let f = DensityFunction::constant(amb, 1.0).unwrap();
    assert!((entropy_sum(&f, 0.5).unwrap() - 10.0 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn gamma_values() {
    assert_eq!(rational_string(&gamma_k(3).unwrap()), "28/3");
    assert_eq!(rational_string(&gamma_k(4).unwrap()), "17");
    assert_eq!(rational_string(&gamma_k(5).unwrap()), "728/27");
    for k in [3, 4] {
        let exact = gamma_k_f64(k);
        assert!((gamma_k_via_riemann(k, 100_000) - exact).abs() / exact < 1e-3);
    }
    for k in 3..=200 {
        assert!(gamma_k_f64(k) >= (k * k) as f64);
    }
    assert!(gamma_k(2).is_err());
}

#[test]
fn gamma_limit_picks_the_thirty_candidate() {
    let r = gamma_limit_ratio();
    assert!((r.value - 1.14).abs() < 0.01);
    assert_eq!(r.matches.as_deref(), Some("(30-2pi^2)/9"));
}

#[test]
fn regime_indicator_values() {
    let e = std::f64::consts::E;
    let p = Params::new(3, 1.0 / e, 1.0).unwrap();
    assert!((regime_indicator(&p) - 1.0 / e).abs() < 1e-12);
    let p = 0.1f64;
    let delta = p.powf(1.0 / 3.0) * (1.0 / p).ln().powf(2.0 / 3.0);
    assert!((regime_indicator(&Params::new(3, p, delta).unwrap()) - 1.0).abs() < 1e-12);
}

#[test]
fn macroscopic_branches() {
    let params = Params::new(3, 0.1, 1.0).unwrap();
    let cyc = rate_macroscopic(&AmbientSet::cyclic(101), &params);
    let want = (2.0f64).sqrt() * 0.1f64.powf(1.5) * 101.0 * 10f64.ln();
    assert!((cyc.value - want).abs() / want < 1e-9);
    let int = rate_macroscopic(&AmbientSet::interval(1000), &params);
    let t = aptail::extremal::interval_tk(1000, 3) as f64;
    let general = 10f64.ln() * (2.0 * 1e-3 * t).sqrt();
    assert!((int.value - general).abs() / general < 1e-6);
    let branch = 1e-1f64.powf(1.5) * 1000.0 * 10f64.ln();
    assert!((int.branch_value - branch).abs() / branch < 1e-2);
}

#[test]
fn microscopic_general_tends_to_branch() {
    let params = Params::new(3, 0.05, 0.01).unwrap();
    let cyc = rate_microscopic(&AmbientSet::cyclic(100), &params);
    assert!((cyc.value - cyc.branch_value).abs() / cyc.branch_value < 1e-12);
    let gaps: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let r = rate_microscopic(&AmbientSet::interval(n), &params);
            (r.value - r.branch_value).abs() / r.branch_value
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn constructions_at_zero_delta() {
    let params = Params::new(3, 0.2, 0.0).unwrap();
    for amb in [AmbientSet::interval(20), AmbientSet::cyclic(20)] {
        let s = constant_tilt(&amb, &params).unwrap();
        assert_eq!(s.objective, 0.0);
        let s = solve_variational(&amb, &params, &SolverConfig::default()).unwrap();
        assert!(s.objective.abs() < 1e-12);
    }
}

#[test]
fn interval_tilt_objective_is_entropy_of_ones() {
    let amb = AmbientSet::interval(60);
    let params = Params::new(3, 0.2, 1.0).unwrap();
    let s = interval_tilt(&amb, &params).unwrap();
    let m = interval_tilt_size(&amb, &params);
    assert!((s.objective - m as f64 * 5f64.ln()).abs() < 1e-9);
    assert!(count_tk_density(&s.f, 3) >= s.threshold);
}

#[test]
fn nu_tilt_on_group_is_constant() {
    let amb = AmbientSet::cyclic(50);
    let params = Params::new(3, 0.1, 0.3).unwrap();
    let s = nu_tilt(&amb, &params).unwrap();
    let g = 0.1 * 0.3 / 3.0;
    assert!(s.f.values().iter().all(|&v| (v - 0.1 - g).abs() < 1e-15));
}

#[test]
fn nu_tilt_feasible_on_interval() {
    let amb = AmbientSet::interval(200);
    let params = Params::new(3, 0.05, 0.01).unwrap();
    let s = nu_tilt(&amb, &params).unwrap();
    assert!(count_tk_density(&s.f, 3) >= s.threshold);
}

#[test]
fn solver_beats_interval_tilt() {
    let amb = AmbientSet::interval(60);
    let params = Params::new(3, 0.2, 1.0).unwrap();
    let sol = solve_variational(&amb, &params, &SolverConfig::default()).unwrap();
    let it = interval_tilt(&amb, &params).unwrap();
    assert!(sol.feasible);
    assert!(sol.objective <= it.objective);
}

#[test]
fn solver_near_nu_tilt_in_microscopic_regime() {
    let amb = AmbientSet::interval(200);
    let params = Params::new(3, 0.05, 0.005).unwrap();
    let sol = solve_variational(&amb, &params, &SolverConfig::default()).unwrap();
    let nu = nu_tilt(&amb, &params).unwrap();
    assert!(sol.objective <= nu.objective);
    assert!(sol.objective >= 0.95 * nu.objective);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructions_are_feasible(n in 10usize..50, cyc in any::<bool>(), k in 3usize..5, p in 0.02f64..0.6, delta in 0.0f64..1.5) {
        let amb = if cyc { AmbientSet::cyclic(n) } else { AmbientSet::interval(n) };
        let params = Params::new(k, p, delta).unwrap();
        for sol in [interval_tilt(&amb, &params), constant_tilt(&amb, &params), nu_tilt(&amb, &params)].into_iter().flatten() {
            prop_assert!(sol.f.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!(count_tk_density(&sol.f, k) >= sol.threshold * (1.0 - 1e-9));
            prop_assert!(sol.objective >= 0.0);
        }
    }

    #[test]
    fn delta_round_trip(p in 0.01f64..0.9, t in 0.0f64..1.0, k in 3usize..7) {
        let q = p + t * (1.0 - p);
        let d = delta_for_constant(p, q, k);
        prop_assert!((p * (1.0 + d).powf(1.0 / k as f64) - q).abs() < 1e-12);
    }

    #[test]
    fn indicator_decreases_in_delta(p in 0.01f64..0.9, d in 0.01f64..2.0, k in 3usize..6) {
        let a = regime_indicator(&Params::new(k, p, d).unwrap());
        let b = regime_indicator(&Params::new(k, p, d * 1.1).unwrap());
        prop_assert!(b < a);
    }
}

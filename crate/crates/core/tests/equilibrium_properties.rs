use kinetic::dynamics::{random_initial_state, rhs, Invariants};
use kinetic::equilibrium::{
    moment_sums, solve_equilibrium_with_momentum, solve_exponential_equilibrium, solve_wke_equilibrium,
    solve_wke_equilibrium_in, temperature_slope, verify_stationary, Bracket, EquilibriumKind,
};
use kinetic::interaction::InteractionLaw;
use kinetic::model::{extend_model, grow_within_box, seed_broadwell, Model};
use proptest::prelude::*;

fn symmetric7() -> Model {
    extend_model(&seed_broadwell(2).unwrap(), (1, 3, 4)).unwrap()
}

fn wke_ab(kind: &EquilibriumKind) -> (f64, f64) {
    match kind {
        EquilibriumKind::Wke { a, b } => (*a, *b),
        other => panic!("unexpected {other:?}"),
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn temperature_is_decreasing_with_the_closed_form_slope() {
    let v = grow_within_box(&seed_broadwell(2).unwrap(), 2, 4)
        .unwrap()
        .pop()
        .unwrap()
        .velocities;
    let m = v.max_speed_sq();
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let b = -0.95 / m + k as f64 * 0.1;
        let t = moment_sums(&v, b).unwrap().t;
        assert!(t < prev);
        prev = t;
        let eps = 1e-6 * (1.0 + b.abs());
        let fd = (moment_sums(&v, b + eps).unwrap().t - moment_sums(&v, b - eps).unwrap().t) / (2.0 * eps);
        let slope = temperature_slope(&v, b).unwrap();
        assert!(slope < 0.0);
        assert!((fd - slope).abs() <= 1e-6 * slope.abs(), "b = {b}: {fd} vs {slope}");
    }
}

#[test]
fn bisection_does_not_depend_on_the_starting_bracket() {
    let v = symmetric7().velocities;
    for t in [0.3, 0.8, 1.0, 1.3, 1.7] {
        let a = solve_wke_equilibrium(&v, 2.0, t).unwrap();
        let wide = Bracket {
            lo_eps: 1e-3,
            hi_start: 1e4,
        };
        let b = solve_wke_equilibrium_in(&v, 2.0, t, &wide).unwrap();
        let (_, b1) = wke_ab(&a.kind);
        let (_, b2) = wke_ab(&b.kind);
        assert!((b1 - b2).abs() <= 1e-13 * (1.0 + b1.abs()), "T = {t}: {b1} vs {b2}");
    }
}

#[test]
fn bisection_agrees_with_the_dual_newton_route() {
    // p(x) = −1/x, so the exponential family of the wave kinetic law is
    // exactly a/(1+b|v|²); Newton on the dual gets there independently
    let model = symmetric7();
    let v = &model.velocities;
    for seed in 0..10 {
        let f0 = random_initial_state(v, seed, 1.0).unwrap();
        let inv = Invariants::of(v, &f0);
        let bis = solve_wke_equilibrium(v, inv.rho, inv.temperature).unwrap();
        let newton = solve_exponential_equilibrium(v, &InteractionLaw::Wke, inv.rho, inv.temperature).unwrap();
        let fa = bis.state(v, &InteractionLaw::Wke).unwrap();
        let fb = newton.state(v, &InteractionLaw::Wke).unwrap();
        assert!(sup_diff(&fa, &fb) <= 1e-12 * inv.rho, "seed {seed}");
    }
}

#[test]
fn out_of_range_temperatures_are_rejected() {
    let v = symmetric7().velocities;
    // |v|² ranges over [0, 2]
    assert!(solve_wke_equilibrium(&v, 1.0, 0.0).is_err());
    assert!(solve_wke_equilibrium(&v, 1.0, 2.0).is_err());
    assert!(solve_wke_equilibrium(&v, 1.0, -1.0).is_err());
    assert!(solve_wke_equilibrium(&v, -1.0, 1.0).is_err());
}

#[test]
fn perturbed_equilibrium_fails_on_moments_not_on_stationarity() {
    let model = symmetric7();
    let params = solve_wke_equilibrium(&model.velocities, 1.0, 1.1).unwrap();
    let ok = verify_stationary(&model, &InteractionLaw::Wke, &params).unwrap();
    assert!(ok.pass);
    let off = verify_stationary(&model, &InteractionLaw::Wke, &params.perturbed(0.1)).unwrap();
    assert!(off.stationary);
    assert!(!off.moments_match && !off.pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_law_has_a_stationary_state_with_given_moments(
        law_index in 0usize..5,
        seed in 0u64..1000,
    ) {
        let law = InteractionLaw::all_families()[law_index];
        let model = grow_within_box(&seed_broadwell(2).unwrap(), 2, 4).unwrap().pop().unwrap();
        let v = &model.velocities;
        let scale = if law.upper_bound().is_finite() { 0.45 } else { 1.0 };
        let f0 = random_initial_state(v, seed, scale).unwrap();
        let inv = Invariants::of(v, &f0);
        let params = solve_equilibrium_with_momentum(v, &law, inv.rho, &inv.momentum, inv.temperature).unwrap();
        let f = params.state(v, &law).unwrap();
        let got = Invariants::of(v, &f);
        prop_assert!((got.rho - inv.rho).abs() <= 1e-11 * inv.rho);
        prop_assert!((got.energy - inv.energy).abs() <= 1e-11 * inv.energy);
        for (a, b) in got.momentum.iter().zip(&inv.momentum) {
            prop_assert!((a - b).abs() <= 1e-11 * inv.rho);
        }
        let q = rhs(&model, &law, &f).unwrap();
        prop_assert!(q.iter().all(|x| x.abs() <= 1e-11));
        let rep = verify_stationary(&model, &law, &params).unwrap();
        prop_assert!(rep.pass);
    }

    #[test]
    fn symmetric_exponential_states_carry_no_momentum(law_index in 0usize..5, t in 0.2f64..1.8) {
        let law = InteractionLaw::all_families()[law_index];
        let model = symmetric7();
        let v = &model.velocities;
        let rho = if law.upper_bound().is_finite() { 1.5 } else { 3.0 };
        let params = solve_exponential_equilibrium(v, &law, rho, t).unwrap();
        prop_assert!(params.momentum.iter().all(|p| p.abs() <= 1e-12 * rho));
        prop_assert!(verify_stationary(&model, &law, &params).unwrap().pass);
    }
}

use kinetic::dynamics::{integrate, random_initial_state, rhs, weak_form, IntegrateOptions, Invariants, Sampling};
use kinetic::equilibrium::solve_wke_equilibrium;
use kinetic::interaction::{dissipation_w, InteractionLaw};
use kinetic::model::{
    autopopulate_reactions, extend_model, grow_within_box, seed_broadwell, Model, RateRule, VelocitySet,
};
use proptest::prelude::*;

fn grown() -> Model {
    grow_within_box(&seed_broadwell(2).unwrap(), 2, 4)
        .unwrap()
        .pop()
        .unwrap()
}

fn law_strategy() -> impl Strategy<Value = InteractionLaw> {
    prop_oneof![
        Just(InteractionLaw::Boltzmann),
        Just(InteractionLaw::Wke),
        Just(InteractionLaw::all_families()[1]),
        Just(InteractionLaw::all_families()[2]),
        (0.05f64..0.95).prop_map(|a| InteractionLaw::anion(a).unwrap()),
    ]
}

/// A state strictly inside the range of `law`.
fn state_for(law: &InteractionLaw, raw: &[f64]) -> Vec<f64> {
    let cap = law.upper_bound();
    let scale = if cap.is_finite() { 0.9 * cap } else { 2.0 };
    raw.iter().map(|u| 1e-3 + u * scale).collect()
}

fn moments(v: &VelocitySet, q: &[f64]) -> Vec<f64> {
    let mut out = vec![q.iter().sum::<f64>()];
    for axis in 0..v.dim() {
        out.push((0..v.len()).map(|i| q[i] * v.velocity(i)[axis]).sum());
    }
    out.push((0..v.len()).map(|i| q[i] * v.speed_sq(i)).sum());
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn collision_term_conserves_mass_momentum_energy(
        law in law_strategy(),
        raw in proptest::collection::vec(0.0f64..1.0, 10),
    ) {
        let model = grown();
        let f = state_for(&law, &raw);
        let q = rhs(&model, &law, &f).unwrap();
        let scale = q.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        for m in moments(&model.velocities, &q) {
            prop_assert!(m.abs() <= 1e-13 * scale * 4.0, "moment {m}");
        }
    }

    #[test]
    fn weak_form_matches_collision_term(
        law in law_strategy(),
        raw in proptest::collection::vec(0.0f64..1.0, 10),
        h in proptest::collection::vec(-3.0f64..3.0, 10),
    ) {
        let model = grown();
        let f = state_for(&law, &raw);
        let q = rhs(&model, &law, &f).unwrap();
        let direct: f64 = q.iter().zip(&h).map(|(a, b)| a * b).sum();
        let weak = weak_form(&model, &law, &f, &h).unwrap();
        prop_assert!((direct - weak).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn collision_term_is_linear_in_the_rates(
        law in law_strategy(),
        raw in proptest::collection::vec(0.0f64..1.0, 10),
        c in 0.0f64..5.0,
    ) {
        let model = grown();
        let scaled = Model::new(model.velocities.clone(), model.reactions.scaled(c)).unwrap();
        let f = state_for(&law, &raw);
        let q = rhs(&model, &law, &f).unwrap();
        let qc = rhs(&scaled, &law, &f).unwrap();
        for (a, b) in q.iter().zip(&qc) {
            prop_assert!((c * a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn dissipation_is_minus_the_entropy_rate(
        law in law_strategy(),
        raw in proptest::collection::vec(0.0f64..1.0, 10),
    ) {
        // W = −Σ p(f_i) Q_i, and every reaction contributes ≥ 0
        let model = grown();
        let f = state_for(&law, &raw);
        let q = rhs(&model, &law, &f).unwrap();
        let rate: f64 = f.iter().zip(&q).map(|(x, qi)| law.p_eval(*x).unwrap() * qi).sum();
        let w = dissipation_w(&law, &model, &f).unwrap();
        prop_assert!(w >= -1e-12);
        prop_assert!((w + rate).abs() <= 1e-10 * (1.0 + w.abs()), "W {w} vs -dH/dt {}", -rate);
    }

    #[test]
    fn broadwell_four_reduces_to_one_scalar_flux(
        law in law_strategy(),
        raw in proptest::collection::vec(0.0f64..1.0, 4),
        gamma in 0.1f64..3.0,
    ) {
        let v = VelocitySet::broadwell_four();
        let model = Model::new(v.clone(), autopopulate_reactions(&v, &RateRule::Constant(gamma)).unwrap()).unwrap();
        let f = state_for(&law, &raw);
        let q = rhs(&model, &law, &f).unwrap();
        // the only reaction is {(e1,−e1),(e2,−e2)}
        let flux = 2.0 * gamma * law.f_eval(f[0], f[1], f[2], f[3]).unwrap();
        let expected = [flux, flux, -flux, -flux];
        for (a, b) in q.iter().zip(expected) {
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn entropy_rate_matches_finite_differences_along_a_trajectory() {
    let model = seed_broadwell(2).unwrap();
    for (law, scale) in [
        (InteractionLaw::Wke, 1.0),
        (InteractionLaw::Boltzmann, 1.0),
        (InteractionLaw::all_families()[2], 0.45),
    ] {
        let f0 = random_initial_state(&model.velocities, 9, scale).unwrap();
        let (t, dt) = (0.05, 1e-4);
        let opts = IntegrateOptions {
            rtol: 1e-13,
            atol: 1e-16,
            sampling: Sampling::Times(vec![t - dt, t, t + dt]),
            ..IntegrateOptions::default()
        };
        let traj = integrate(&model, &law, &f0, t + dt, &opts).unwrap();
        let s = &traj.samples;
        assert_eq!(s.len(), 4);
        let slope = (s[3].h - s[1].h) / (2.0 * dt);
        assert!(
            (slope + s[2].w).abs() <= 1e-5 * s[2].w.abs().max(1e-3),
            "{law}: dH/dt {slope} vs W {}",
            s[2].w
        );
    }
}

#[test]
fn equilibrium_is_a_fixed_point_of_the_integrator() {
    // the symmetric 7-point set {±e1, ±e2, 0, ±(e1+e2)}
    let model = extend_model(&seed_broadwell(2).unwrap(), (1, 3, 4)).unwrap();
    let v = &model.velocities;
    let f0 = random_initial_state(v, 4, 1.0).unwrap();
    let inv = Invariants::of(v, &f0);
    let params = solve_wke_equilibrium(v, inv.rho, inv.temperature).unwrap();
    let f_st = params.state(v, &InteractionLaw::Wke).unwrap();
    let traj = integrate(&model, &InteractionLaw::Wke, &f_st, 10.0, &IntegrateOptions::default()).unwrap();
    let gap = traj
        .last()
        .f
        .iter()
        .zip(&f_st)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-10, "drift from equilibrium {gap:e}");
}

#[test]
fn integration_is_deterministic() {
    let model = grown();
    let f0 = random_initial_state(&model.velocities, 5, 1.0).unwrap();
    let run = || integrate(&model, &InteractionLaw::Wke, &f0, 50.0, &IntegrateOptions::default()).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a, b);
}

#[test]
fn fermion_states_stay_below_one() {
    let model = grown();
    let law = InteractionLaw::all_families()[2];
    let mut f0 = random_initial_state(&model.velocities, 8, 0.45).unwrap();
    f0[0] = 0.999;
    let traj = integrate(&model, &law, &f0, 100.0, &IntegrateOptions::default()).unwrap();
    for s in &traj.samples {
        assert!(s.f.iter().all(|&x| x > 0.0 && x < 1.0));
    }
}

#[test]
fn wke_rejects_data_with_momentum_when_asked() {
    let model = seed_broadwell(2).unwrap();
    let f0 = vec![1.0, 0.2, 0.5, 0.5, 0.5, 0.5];
    let opts = IntegrateOptions {
        require_zero_momentum: true,
        ..IntegrateOptions::default()
    };
    assert!(integrate(&model, &InteractionLaw::Wke, &f0, 1.0, &opts).is_err());
    let free = IntegrateOptions::default();
    assert!(integrate(&model, &InteractionLaw::Wke, &f0, 1.0, &free).is_ok());
}

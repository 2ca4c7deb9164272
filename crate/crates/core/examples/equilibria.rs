//! Stationary states: a/(1+b|v|²) by bisection, and the exponential family of
//! each law by Newton on the convex dual.

use kinetic::equilibrium::{
    moment_sums, solve_equilibrium_with_momentum, solve_exponential_equilibrium, solve_wke_equilibrium,
    verify_stationary,
};
use kinetic::interaction::InteractionLaw;
use kinetic::model::{extend_model, seed_broadwell};

fn main() {
    let seed = seed_broadwell(2).unwrap();
    let p = solve_wke_equilibrium(&seed.velocities, 1.0, 1.0).unwrap();
    println!("seed d=2, rho=1, T=1: {:?}", p.kind);

    // {±e1, ±e2, 0, ±(e1+e2)}: centrally symmetric
    let model = extend_model(&seed, (1, 3, 4)).unwrap();
    let v = &model.velocities;
    println!("\nT(b) on the symmetric set:");
    for b in [-0.45, -0.2, 0.0, 0.5, 2.0, 10.0] {
        println!("  b = {b:>6}  T = {:.6}", moment_sums(v, b).unwrap().t);
    }

    for t in [0.4, 0.9, 1.5] {
        let p = solve_wke_equilibrium(v, 2.0, t).unwrap();
        let rep = verify_stationary(&model, &InteractionLaw::Wke, &p).unwrap();
        println!(
            "WKE T = {t:.4}: {:?}  |Q| = {:.1e} pass = {}",
            p.kind, rep.q_sup, rep.pass
        );
    }

    println!();
    for law in InteractionLaw::all_families() {
        let rho = if law.upper_bound().is_finite() { 1.5 } else { 2.0 };
        let p = solve_exponential_equilibrium(v, &law, rho, 1.0).unwrap();
        let rep = verify_stationary(&model, &law, &p).unwrap();
        println!("{:<12} {:?}  pass = {}", law.to_string(), p.kind, rep.pass);
    }

    // with net momentum the full family α + β·v + γ|v|² is needed
    let p = solve_equilibrium_with_momentum(v, &InteractionLaw::Boltzmann, 2.0, &[0.3, -0.1], 1.0).unwrap();
    println!("\nboltzmann with P = (0.3, -0.1): {:?}", p.kind);
}

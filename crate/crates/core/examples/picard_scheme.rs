//! The monotone iteration for the mild form of the wave kinetic equation,
//! compared with the adaptive integrator.

use kinetic::dynamics::{integrate, picard_solve, random_initial_state, IntegrateOptions, PicardOptions, Sampling};
use kinetic::interaction::InteractionLaw;
use kinetic::model::seed_broadwell;

fn main() {
    let model = seed_broadwell(2).unwrap();
    let law = InteractionLaw::Wke;
    let f0 = random_initial_state(&model.velocities, 3, 1.0).unwrap();
    let t = 1.0;

    let rk_opts = IntegrateOptions {
        rtol: 1e-13,
        atol: 1e-16,
        sampling: Sampling::Times(vec![t]),
        ..Default::default()
    };
    let rk = integrate(&model, &law, &f0, t, &rk_opts).unwrap();
    let reference = &rk.last().f;

    for nodes in [None, Some(1024), Some(4096), Some(16384)] {
        let res = picard_solve(
            &model,
            &law,
            &f0,
            t,
            &PicardOptions {
                nodes,
                ..Default::default()
            },
        )
        .unwrap();
        let gap = res
            .state
            .f
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let top = reference.iter().cloned().fold(0.0, f64::max);
        println!(
            "intervals {:>6}  windows {:>3}  iterations/window ~{:>3}  relative gap {:.2e}",
            res.intervals,
            res.windows,
            res.iterations.iter().sum::<usize>() / res.windows,
            gap / top
        );
    }

    // the iterates of the first window increase monotonically
    let res = picard_solve(&model, &law, &f0, t, &PicardOptions::default()).unwrap();
    println!("\nλ = {:.3}, first window end, component 1:", res.lambda);
    for (k, phi) in res.history.iter().enumerate().take(8) {
        println!("  k = {:>2}  {:.15}", k + 1, phi[0]);
    }
}

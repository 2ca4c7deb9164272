//! Relaxation of the wave kinetic equation on the seed model to its
//! stationary state, with the entropy trace and the invariant drifts.
//!
//! ```text
//! cargo run --release --example wke_relaxation -- [seed] [csv path]
//! ```

use std::fs::File;
use std::io::BufWriter;

use kinetic::cli::matching_equilibrium;
use kinetic::dynamics::{integrate, random_initial_state, IntegrateOptions, Invariants};
use kinetic::interaction::InteractionLaw;
use kinetic::model::seed_broadwell;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let csv = args.next();

    let model = seed_broadwell(2).unwrap();
    let v = &model.velocities;
    let law = InteractionLaw::Wke;
    let f0 = random_initial_state(v, seed, 1.0).unwrap();
    let inv = Invariants::of(v, &f0);
    let opts = IntegrateOptions {
        require_zero_momentum: true,
        ..Default::default()
    };
    let traj = integrate(&model, &law, &f0, 200.0, &opts).unwrap();

    let f_st = matching_equilibrium(v, &law, &inv).unwrap().state(v, &law).unwrap();
    for s in traj.samples.iter().step_by(20) {
        let gap = s.f.iter().zip(&f_st).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "t = {:>9.4}  H = {:>10.6}  W = {:.3e}  |f - f_st| = {gap:.3e}",
            s.t, s.h, s.w
        );
    }
    let st = &traj.stats;
    println!(
        "\n{} steps ({} rejected); drift mass {:.1e}, energy {:.1e}, momentum {:.1e}",
        st.accepted, st.rejected, st.max_mass_drift, st.max_energy_drift, st.max_momentum_drift
    );

    if let Some(path) = csv {
        traj.write_csv(BufWriter::new(File::create(&path).unwrap())).unwrap();
        println!("trajectory written to {path}");
    }
}

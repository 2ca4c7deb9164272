//! Building normal discrete velocity models: the 4-point Broadwell set is
//! degenerate, the extended seeds are normal, and right-angle extensions keep
//! them normal.

use kinetic::model::{
    autopopulate_reactions, check_normal, grow_within_box, model_to_json, seed_broadwell, Model, RateRule, VelocitySet,
};

fn main() {
    let v = VelocitySet::broadwell_four();
    let bw = Model::new(v.clone(), autopopulate_reactions(&v, &RateRule::Constant(1.0)).unwrap()).unwrap();
    let rep = check_normal(&bw);
    println!(
        "broadwell-4: (a) {} (b) {} (c) {}  rank_phi {}",
        rep.condition_a, rep.condition_b, rep.condition_c, rep.rank_phi
    );

    for d in 2..=4 {
        let m = seed_broadwell(d).unwrap();
        let rep = check_normal(&m);
        println!(
            "seed d={d}: n={:<3} reactions={}  rank_p={} (max {})  normal={}",
            m.n(),
            m.reactions.len(),
            rep.rank_p,
            rep.p_max,
            rep.is_normal()
        );
    }

    let chain = grow_within_box(&seed_broadwell(2).unwrap(), 3, 10).unwrap();
    for m in &chain[1..] {
        let rep = check_normal(m);
        let p = m.velocities.points().last().unwrap();
        println!(
            "  + {p:?} -> n={:<3} rank_p={:<3} normal={}",
            m.n(),
            rep.rank_p,
            rep.is_normal()
        );
    }

    println!("\n{}", model_to_json(&seed_broadwell(2).unwrap(), None));
}

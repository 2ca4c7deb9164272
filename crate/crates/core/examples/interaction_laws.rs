//! The five interaction laws on the same state: collision terms, entropy and
//! dissipation. The weak form is evaluated as a second route to `Σ Q_i h_i`.

use kinetic::dynamics::{rhs, weak_form};
use kinetic::interaction::{dissipation_w, InteractionLaw};
use kinetic::model::seed_broadwell;

fn main() {
    let model = seed_broadwell(2).unwrap();
    let f = [0.30, 0.22, 0.41, 0.18, 0.35, 0.27];
    let h: Vec<f64> = (0..model.n())
        .map(|i| model.velocities.speed_sq(i) - 0.5 * i as f64)
        .collect();

    for law in InteractionLaw::all_families() {
        let q = rhs(&model, &law, &f).unwrap();
        let direct: f64 = q.iter().zip(&h).map(|(a, b)| a * b).sum();
        let weak = weak_form(&model, &law, &f, &h).unwrap();
        println!(
            "{:<12} H = {:>9.5}  W = {:.4e}  |ΣQh - weak| = {:.1e}",
            law.to_string(),
            law.h_eval(&f).unwrap(),
            dissipation_w(&law, &model, &f).unwrap(),
            (direct - weak).abs()
        );
        let cells: Vec<String> = q.iter().map(|x| format!("{x:+.4e}")).collect();
        println!("             Q = [{}]", cells.join(", "));
    }

    // anions interpolate between the two quantum statistics
    for alpha in [0.01, 0.5, 0.99] {
        let law = InteractionLaw::anion(alpha).unwrap();
        println!(
            "anion:{alpha:<5} F = {:+.6e}",
            law.f_eval(f[0], f[1], f[2], f[3]).unwrap()
        );
    }
}

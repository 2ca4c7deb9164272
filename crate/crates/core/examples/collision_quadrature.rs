//! Lattice quadrature of the continuum collision operator in d = 3, checked
//! against a Monte-Carlo evaluation as the mesh is refined.
//!
//! ```text
//! cargo run --release --example collision_quadrature
//! ```

use std::time::Instant;

use kinetic::interaction::InteractionLaw;
use kinetic::lattice::LatticePoint;
use kinetic::model::Model;
use kinetic::quadrature::{build_gamma, continuum_operator_mc, discrete_operator, point_operator, QuadratureSpec};

fn f(v: &[f64]) -> f64 {
    (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp() * (1.0 + 0.8 * v[0] * v[0])
}

fn main() {
    let law = InteractionLaw::Boltzmann;

    let start = Instant::now();
    let spec = QuadratureSpec::new(3, 0.5, 6).unwrap();
    let v = spec.velocity_box().unwrap();
    let table = build_gamma(&spec, &v).unwrap();
    println!(
        "box radius 6, h = 0.5: {} points, {} reactions ({:.2?})",
        v.len(),
        table.len(),
        start.elapsed()
    );
    let model = Model::new(v, table).unwrap();
    let gauss: Vec<f64> = (0..model.n()).map(|i| (-model.velocities.speed_sq(i)).exp()).collect();
    let k = discrete_operator(&spec, &model, &law, &gauss).unwrap();
    println!(
        "Gaussian: sup |K_h| = {:.2e} (exact discrete equilibrium)\n",
        k.iter().map(|x| x.abs()).fold(0.0, f64::max)
    );

    for p in [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]] {
        let mc = continuum_operator_mc(&law, &f, None, &p, 0.8, 4_000_000, 7);
        print!("v = {p:?}  MC {:+.4} ± {:.4}", mc.mean, mc.std_error);
        for h in [0.5, 0.25, 0.125] {
            let spec = QuadratureSpec::new(3, h, (4.0 / h) as i64).unwrap();
            let v = spec.velocity_box().unwrap();
            let fs: Vec<f64> = (0..v.len()).map(|i| f(&v.velocity(i))).collect();
            let at = LatticePoint::new(p.iter().map(|x| (x / h).round() as i64).collect());
            let kh = point_operator(&spec, &v, &law, &fs, v.index_of(&at).unwrap()).unwrap();
            print!("  h={h}: {kh:+.4}");
        }
        println!();
    }
}

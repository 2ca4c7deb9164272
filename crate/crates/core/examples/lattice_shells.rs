//! Integer points on spheres: counts, empty shells and how evenly the points
//! cover the unit sphere.
//!
//! ```text
//! cargo run --example lattice_shells
//! ```

use kinetic::lattice::{enumerate_sphere_points, is_excluded_by_three_squares};
use kinetic::quadrature::sphere_average_error;

fn main() {
    println!("{:>6} {:>4} {:>6} {:>12}", "m", "m%8", "r_3", "err(w1^4)");
    let quart = |w: &[f64]| w[0].powi(4);
    for m in [1u64, 2, 3, 5, 6, 7, 9, 15, 28, 101, 1001, 10001] {
        let shell = enumerate_sphere_points(m, 3).unwrap();
        let err = if shell.is_empty() {
            "-".to_owned()
        } else {
            format!("{:.3e}", sphere_average_error(m, 3, &quart).unwrap())
        };
        println!("{m:>6} {:>4} {:>6} {err:>12}", m % 8, shell.count());
        assert_eq!(shell.is_empty(), is_excluded_by_three_squares(m));
    }

    let empty: Vec<u64> = (1..=100).filter(|&m| is_excluded_by_three_squares(m)).collect();
    println!("\nnot a sum of three squares, m <= 100: {empty:?}");
}

//! Exponential sums over integer points of circles: |S(m,k)|/r_2(m) is small
//! for most radii, which is what makes lattice points equidistribute.

use kinetic::quadrature::{exponential_sum, mean_normalized_exponential_sum};

fn main() {
    for m in [5u64, 25, 65, 325, 1105, 5525, 32045] {
        let row: Vec<String> = [4, 8, 12]
            .iter()
            .map(|&k| format!("{:.4}", exponential_sum(m, k).normalized()))
            .collect();
        println!(
            "m = {m:>6}  r_2 = {:>4}  |S|/r_2 at k = 4, 8, 12: {}",
            exponential_sum(m, 0).count,
            row.join("  ")
        );
    }
    println!();
    for hi in [100u64, 1000, 10000, 100000] {
        println!(
            "mean over m <= {hi:>6}: k=4 {:.4}  k=8 {:.4}",
            mean_normalized_exponential_sum(4, 1, hi),
            mean_normalized_exponential_sum(8, 1, hi)
        );
    }
}

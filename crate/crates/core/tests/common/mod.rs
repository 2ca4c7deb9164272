//! Exact rational linear algebra, used as an independent route to the
//! fraction-free integer elimination in the library.
#![allow(dead_code, clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

fn to_rational(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect()
}

/// Reduced row echelon form; returns the matrix and its pivot columns.
fn rref(mut m: Vec<Vec<BigRational>>, cols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = BigRational::one() / m[row][c].clone();
        for x in &mut m[row] {
            *x = x.clone() * inv.clone();
        }
        for r in 0..m.len() {
            if r != row && !m[r][c].is_zero() {
                let factor = m[r][c].clone();
                for k in 0..cols {
                    let sub = factor.clone() * m[row][k].clone();
                    m[r][k] = m[r][k].clone() - sub;
                }
            }
        }
        pivots.push(c);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    (m, pivots)
}

pub fn rational_rank(rows: &[Vec<i64>]) -> usize {
    let Some(cols) = rows.first().map(Vec::len) else {
        return 0;
    };
    rref(to_rational(rows), cols).1.len()
}

/// Basis of `{x : A x = 0}` for `A` with `cols` columns.
pub fn null_space(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<BigRational>> {
    if rows.is_empty() {
        return (0..cols)
            .map(|c| {
                (0..cols)
                    .map(|k| {
                        if k == c {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
    }
    let (m, pivots) = rref(to_rational(rows), cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![BigRational::zero(); cols];
            x[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                x[p] = -m[r][f].clone();
            }
            x
        })
        .collect()
}

/// Rank of rational rows.
pub fn rank_of(rows: Vec<Vec<BigRational>>) -> usize {
    let Some(cols) = rows.first().map(Vec::len) else {
        return 0;
    };
    rref(rows, cols).1.len()
}

pub fn rationals(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    to_rational(rows)
}

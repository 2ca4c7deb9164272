//! Integer-lattice geometry.
//!
//! Points of the velocity grid `hℤᵈ` are stored by their integer coordinates;
//! every conservation test in this crate is done on those integers so that
//! rectangles in velocity space are classified exactly.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Supported lattice dimensions.
pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension {0} is outside the supported range {MIN_DIM}..={MAX_DIM}")]
    UnsupportedDimension(usize),
}

/// A point of `ℤᵈ`. The physical velocity is `h · coords`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// Unit vector along axis `axis` (0-based).
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut c = vec![0; d];
        c[axis] = 1;
        Self(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn dot(&self, other: &Self) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// True when every coordinate is even.
    pub fn is_even(&self) -> bool {
        self.0.iter().all(|x| x % 2 == 0)
    }

    /// Coordinate-wise halving; only meaningful for even points.
    pub fn half(&self) -> Self {
        Self(self.0.iter().map(|x| x / 2).collect())
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Add for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: Self) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: Self) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| -a).collect())
    }
}

/// All integer points on the sphere `|x|² = m` in `ℤᵈ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SphereShell {
    pub m: u64,
    pub d: usize,
    pub points: Vec<LatticePoint>,
}

impl SphereShell {
    /// `r_d(m)`, the number of representations of `m` as a sum of `d` squares.
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn isqrt(m: u64) -> u64 {
    let mut r = (m as f64).sqrt() as u64;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    r
}

/// Enumerates `{x ∈ ℤᵈ : Σ x_l² = m}` in lexicographic order.
pub fn enumerate_sphere_points(m: u64, d: usize) -> Result<SphereShell, LatticeError> {
    if !(MIN_DIM..=MAX_DIM).contains(&d) {
        return Err(LatticeError::UnsupportedDimension(d));
    }
    let mut points = Vec::new();
    let mut prefix = Vec::with_capacity(d);
    fill_shell(m, d, &mut prefix, &mut points);
    Ok(SphereShell { m, d, points })
}

fn fill_shell(rest: u64, left: usize, prefix: &mut Vec<i64>, out: &mut Vec<LatticePoint>) {
    if left == 1 {
        let r = isqrt(rest);
        if r * r == rest {
            let r = r as i64;
            let candidates: &[i64] = if r == 0 { &[0] } else { &[-r, r] };
            for &x in candidates {
                prefix.push(x);
                out.push(LatticePoint(prefix.clone()));
                prefix.pop();
            }
        }
        return;
    }
    let r = isqrt(rest) as i64;
    for x in -r..=r {
        prefix.push(x);
        fill_shell(rest - (x * x) as u64, left - 1, prefix, out);
        prefix.pop();
    }
}

/// True when `m = 4ᵃ(8k+7)`, i.e. when `m` is not a sum of three squares.
pub fn is_excluded_by_three_squares(m: u64) -> bool {
    if m == 0 {
        return false;
    }
    let mut m = m;
    while m.is_multiple_of(4) {
        m /= 4;
    }
    m % 8 == 7
}

/// A collision quadruple `{(i,j),(k,l)}` with 0-based indices in canonical order:
/// `i < j`, `k < l`, `(i,j) < (k,l)` lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quadruple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl Quadruple {
    /// Builds the canonical representative of the unordered reaction
    /// `{{a,b},{c,d}}`.
    pub fn canonical(a: usize, b: usize, c: usize, d: usize) -> Self {
        let p = (a.min(b), a.max(b));
        let q = (c.min(d), c.max(d));
        let (first, second) = if p <= q { (p, q) } else { (q, p) };
        Self {
            i: first.0,
            j: first.1,
            k: second.0,
            l: second.1,
        }
    }

    pub fn indices(&self) -> [usize; 4] {
        [self.i, self.j, self.k, self.l]
    }
}

/// True when `{v_a, v_b}` and `{v_c, v_d}` share momentum and energy.
pub fn conserves(points: &[LatticePoint], q: &Quadruple) -> bool {
    let (a, b, c, d) = (&points[q.i], &points[q.j], &points[q.k], &points[q.l]);
    (a + b) == (c + d) && a.norm_sq() + b.norm_sq() == c.norm_sq() + d.norm_sq()
}

/// Every reaction `{(i,j),(k,l)}` on `points` with `v_i+v_j = v_k+v_l` and
/// `|v_i|²+|v_j|² = |v_k|²+|v_l|²`, with `{i,j} ≠ {k,l}`.
///
/// Pairs are bucketed by (momentum, energy). Two distinct pairs in one bucket
/// can't share an index (that would force two equal points), so every pair of
/// pairs in a bucket is a reaction with four distinct indices.
pub fn find_collision_quadruples(points: &[LatticePoint]) -> Vec<Quadruple> {
    let n = points.len();
    let mut buckets: HashMap<(LatticePoint, i64), Vec<(usize, usize)>> = HashMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let key = (&points[i] + &points[j], points[i].norm_sq() + points[j].norm_sq());
            buckets.entry(key).or_default().push((i, j));
        }
    }
    let mut out = Vec::new();
    for pairs in buckets.values() {
        for (s, &(i, j)) in pairs.iter().enumerate() {
            for &(k, l) in &pairs[s + 1..] {
                out.push(Quadruple::canonical(i, j, k, l));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Rank over ℚ of a list of integer rows, by fraction-free elimination.
///
/// Rows are kept primitive (divided by their content) after every update, so
/// entries stay small for the ±1 reaction vectors this is mostly used on.
pub fn exact_integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut mat: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let Some(cols) = mat.first().map(Vec::len) else {
        return 0;
    };
    assert!(mat.iter().all(|r| r.len() == cols), "ragged rows");

    let mut rank = 0;
    for col in 0..cols {
        if rank == mat.len() {
            break;
        }
        // smallest nonzero pivot keeps growth down
        let pivot = (rank..mat.len())
            .filter(|&r| !mat[r][col].is_zero())
            .min_by(|&a, &b| mat[a][col].abs().cmp(&mat[b][col].abs()));
        let Some(p) = pivot else { continue };
        mat.swap(rank, p);
        let (head, tail) = mat.split_at_mut(rank + 1);
        let prow = &head[rank];
        for row in tail.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let g = prow[col].gcd(&row[col]);
            let mp = &row[col] / &g;
            let mr = &prow[col] / &g;
            for c in col..cols {
                row[c] = &row[c] * &mr - &prow[c] * &mp;
            }
            make_primitive(row);
        }
        rank += 1;
    }
    rank
}

fn make_primitive(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g > BigInt::from(1) {
        for x in row.iter_mut() {
            *x = &*x / &g;
        }
    }
}

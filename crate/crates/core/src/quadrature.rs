//! Lattice quadrature of the continuum collision operator
//!
//! `K[f](v) = ∫ dw ∫_{S^{d−1}} dω R(u, u') F(f(v), f(w); f(v'), f(w'))`,
//! `u = v − w`, `u' = |u|ω`, `v' = (v + w + u')/2`, `w' = (v + w − u')/2`,
//! on the grid `hℤᵈ`. Any `|u|^{d−2}` weight is taken to be part of `R`.
//!
//! The `w`-integral becomes a rectangle rule over `v_j ∈ v_i + 2hℤᵈ` and the
//! sphere average becomes an average over the integer points of the shell
//! `|x|² = |v_i − v_j|²/4h²`, which makes every post-collision pair land on
//! the grid and every reaction exactly conservative.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::rhs_into;
use crate::interaction::{InteractionError, InteractionLaw};
use crate::lattice::{enumerate_sphere_points, LatticeError, LatticePoint, Quadruple, SphereShell};
use crate::model::{Model, ModelError, Reaction, ReactionTable, VelocitySet};

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Domain(#[from] InteractionError),
    #[error("box radius must be at least 2, got {0}")]
    BoxTooSmall(i64),
    #[error("mesh step must be positive and finite, got {0}")]
    BadMeshStep(f64),
    #[error("velocity set does not match the specification ({0})")]
    SetMismatch(String),
    #[error("shell |x|² = {m} in dimension {d} has no integer points")]
    EmptyShell { m: u64, d: usize },
    #[error("point index {0} out of range")]
    IndexOutOfRange(usize),
}

/// Symmetric collision kernel `R(u, u')` on physical relative velocities.
pub type Kernel = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Grid and kernel of a lattice quadrature.
#[derive(Clone)]
pub struct QuadratureSpec {
    pub d: usize,
    pub h: f64,
    /// The box is `{−r..r}ᵈ` in lattice units.
    pub box_radius: i64,
    /// `None` means `R ≡ 1`.
    pub kernel: Option<Kernel>,
}

impl std::fmt::Debug for QuadratureSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadratureSpec")
            .field("d", &self.d)
            .field("h", &self.h)
            .field("box_radius", &self.box_radius)
            .field("kernel", &self.kernel.as_ref().map(|_| "custom"))
            .finish()
    }
}

impl QuadratureSpec {
    pub fn new(d: usize, h: f64, box_radius: i64) -> Result<Self, QuadratureError> {
        if !(2..=4).contains(&d) {
            return Err(LatticeError::UnsupportedDimension(d).into());
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(QuadratureError::BadMeshStep(h));
        }
        if box_radius < 2 {
            return Err(QuadratureError::BoxTooSmall(box_radius));
        }
        Ok(Self {
            d,
            h,
            box_radius,
            kernel: None,
        })
    }

    pub fn with_kernel(mut self, kernel: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.kernel = Some(Arc::new(kernel));
        self
    }

    fn kernel_at(&self, u: &[f64], u2: &[f64]) -> f64 {
        self.kernel.as_ref().map_or(1.0, |k| k(u, u2))
    }

    /// The full box `{−r..r}ᵈ · h`.
    pub fn velocity_box(&self) -> Result<VelocitySet, QuadratureError> {
        Ok(VelocitySet::grid(self.d, self.h, self.box_radius)?)
    }

    /// `(2h)ᵈ`, the cell volume of the `v_j` sum.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * self.h).powi(self.d as i32)
    }
}

/// A test function on the unit sphere.
pub type SphereFn = dyn Fn(&[f64]) -> f64;

/// `|S^{d−1}|`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("unsupported dimension {d}"),
    }
}

/// Point lookup over the bounding box of a set.
struct DenseIndex {
    lo: Vec<i64>,
    ext: Vec<i64>,
    slots: Vec<u32>,
}

impl DenseIndex {
    const NONE: u32 = u32::MAX;

    fn new(points: &[LatticePoint]) -> Self {
        let d = points[0].dim();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for p in points {
            for (a, &c) in p.coords().iter().enumerate() {
                lo[a] = lo[a].min(c);
                hi[a] = hi[a].max(c);
            }
        }
        let ext: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let size = ext.iter().product::<i64>() as usize;
        let mut slots = vec![Self::NONE; size];
        let mut out = Self {
            lo,
            ext,
            slots: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            slots[out.offset(p.coords()).unwrap()] = i as u32;
        }
        out.slots = slots;
        out
    }

    fn offset(&self, c: &[i64]) -> Option<usize> {
        let mut off = 0i64;
        for a in 0..c.len() {
            let r = c[a] - self.lo[a];
            if r < 0 || r >= self.ext[a] {
                return None;
            }
            off = off * self.ext[a] + r;
        }
        Some(off as usize)
    }

    fn get(&self, c: &[i64]) -> Option<usize> {
        let s = *self.slots.get(self.offset(c)?)?;
        (s != Self::NONE).then_some(s as usize)
    }
}

/// Shells `V_d(m)` for `m = 0..=m_max`, built once.
struct ShellCache {
    shells: Vec<SphereShell>,
}

impl ShellCache {
    fn new(d: usize, m_max: u64) -> Result<Self, LatticeError> {
        let shells = (0..=m_max)
            .into_par_iter()
            .map(|m| enumerate_sphere_points(m, d))
            .collect::<Result<_, _>>()?;
        Ok(Self { shells })
    }

    fn get(&self, m: u64) -> &SphereShell {
        &self.shells[m as usize]
    }
}

fn check_set(spec: &QuadratureSpec, v: &VelocitySet) -> Result<(), QuadratureError> {
    if v.dim() != spec.d {
        return Err(QuadratureError::SetMismatch(format!(
            "dimension {} vs {}",
            v.dim(),
            spec.d
        )));
    }
    if (v.mesh_step() - spec.h).abs() > 1e-15 * spec.h {
        return Err(QuadratureError::SetMismatch(format!(
            "mesh step {} vs {}",
            v.mesh_step(),
            spec.h
        )));
    }
    if let Some(p) = v.points().iter().find(|p| p.max_abs() > spec.box_radius) {
        return Err(QuadratureError::SetMismatch(format!("{p:?} lies outside the box")));
    }
    Ok(())
}

fn largest_shell(v: &VelocitySet) -> u64 {
    // |u/2|² over pairs is bounded by the half-extent of the bounding box
    let d = v.dim();
    let mut bound = 0u64;
    for a in 0..d {
        let lo = v.points().iter().map(|p| p.coords()[a]).min().unwrap_or(0);
        let hi = v.points().iter().map(|p| p.coords()[a]).max().unwrap_or(0);
        let half = ((hi - lo) / 2) as u64;
        bound += half * half;
    }
    bound
}

fn scaled(p: &LatticePoint, s: f64) -> Vec<f64> {
    p.coords().iter().map(|&c| c as f64 * s).collect()
}

/// Reaction table with `Γ_ij^kl = R(v_i−v_j, v_k−v_l)·|S^{d−1}|/r_d(m)`,
/// `m = |v_i − v_j|²/4h²`, over every quadruple whose differences are even
/// lattice vectors and whose post-collision points lie in `v`.
pub fn build_gamma(spec: &QuadratureSpec, v: &VelocitySet) -> Result<ReactionTable, QuadratureError> {
    check_set(spec, v)?;
    let n = v.len();
    let pts = v.points();
    let index = DenseIndex::new(pts);
    let shells = ShellCache::new(spec.d, largest_shell(v))?;
    let area = sphere_area(spec.d);
    let two_h = 2.0 * spec.h;

    let mut reactions: Vec<Reaction> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut local = Vec::new();
            let mut k_buf = vec![0i64; spec.d];
            let mut l_buf = vec![0i64; spec.d];
            for j in (i + 1)..n {
                let diff = &pts[i] - &pts[j];
                if !diff.is_even() {
                    continue;
                }
                let half = diff.half();
                let m = half.norm_sq() as u64;
                let shell = shells.get(m);
                let weight = area / shell.count() as f64;
                let centre = (&pts[i] + &pts[j]).half();
                let u = scaled(&half, two_h);
                for x in &shell.points {
                    for a in 0..spec.d {
                        k_buf[a] = centre.coords()[a] + x.coords()[a];
                        l_buf[a] = centre.coords()[a] - x.coords()[a];
                    }
                    let (Some(k), Some(l)) = (index.get(&k_buf), index.get(&l_buf)) else {
                        continue;
                    };
                    // each reaction once: k < l and (i,j) before (k,l); also
                    // drops the trivial x = ±u/2
                    if k >= l || (i, j) >= (k, l) {
                        continue;
                    }
                    let gamma = spec.kernel_at(&u, &scaled(x, two_h)) * weight;
                    if gamma > 0.0 {
                        local.push(Reaction {
                            quadruple: Quadruple { i, j, k, l },
                            gamma,
                        });
                    }
                }
            }
            local
        })
        .collect();
    reactions.par_sort_unstable_by(|a, b| a.quadruple.cmp(&b.quadruple));
    Ok(ReactionTable::from_canonical_unchecked(n, reactions))
}

/// `K_h[f](v_i) = (2h)ᵈ Σ_{j,k,l} Γ_ij^kl F(f_i,f_j;f_k,f_l)` for every `i`.
pub fn discrete_operator(
    spec: &QuadratureSpec,
    model: &Model,
    law: &InteractionLaw,
    f: &[f64],
) -> Result<Vec<f64>, QuadratureError> {
    if f.len() != model.n() {
        return Err(InteractionError::LengthMismatch {
            got: f.len(),
            expected: model.n(),
        }
        .into());
    }
    law.check_state(f)?;
    let mut out = vec![0.0; f.len()];
    rhs_into(model, law, f, &mut out);
    let vol = spec.cell_volume();
    out.iter_mut().for_each(|x| *x *= vol);
    Ok(out)
}

/// `K_h[f](v_i)` at a single point, summed directly over partners `v_j` and
/// shell points without building a reaction table.
pub fn point_operator(
    spec: &QuadratureSpec,
    v: &VelocitySet,
    law: &InteractionLaw,
    f: &[f64],
    i: usize,
) -> Result<f64, QuadratureError> {
    check_set(spec, v)?;
    if i >= v.len() {
        return Err(QuadratureError::IndexOutOfRange(i));
    }
    if f.len() != v.len() {
        return Err(InteractionError::LengthMismatch {
            got: f.len(),
            expected: v.len(),
        }
        .into());
    }
    law.check_state(f)?;
    let pts = v.points();
    let index = DenseIndex::new(pts);
    let area = sphere_area(spec.d);
    let two_h = 2.0 * spec.h;
    let mut shells: HashMap<u64, SphereShell> = HashMap::new();

    let terms: Vec<f64> = (0..v.len())
        .filter(|&j| j != i && (&pts[i] - &pts[j]).is_even())
        .map(|j| -> Result<f64, QuadratureError> {
            let half = (&pts[i] - &pts[j]).half();
            let m = half.norm_sq() as u64;
            let shell = match shells.entry(m) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => e.insert(enumerate_sphere_points(m, spec.d)?),
            };
            let weight = area / shell.count() as f64;
            let centre = (&pts[i] + &pts[j]).half();
            let u = scaled(&half, two_h);
            let mut acc = 0.0;
            for x in &shell.points {
                let k = index.get((&centre + x).coords());
                let l = index.get((&centre - x).coords());
                if let (Some(k), Some(l)) = (k, l) {
                    acc += spec.kernel_at(&u, &scaled(x, two_h)) * weight * law.f_unchecked(f[i], f[j], f[k], f[l]);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_, _>>()?;
    Ok(spec.cell_volume() * terms.iter().sum::<f64>())
}

/// Largest sample on the outer faces of the box relative to the largest
/// sample overall: a truncation indicator for the `v_j` sum.
pub fn boundary_fraction(v: &VelocitySet, f: &[f64]) -> f64 {
    let r = v.points().iter().map(LatticePoint::max_abs).max().unwrap_or(0);
    let top = f.iter().cloned().fold(0.0, f64::max);
    let edge = v
        .points()
        .iter()
        .zip(f)
        .filter(|(p, _)| p.max_abs() == r)
        .map(|(_, &x)| x)
        .fold(0.0, f64::max);
    if top > 0.0 {
        edge / top
    } else {
        0.0
    }
}

/// Monte-Carlo estimate of the continuum operator at `v`, with mean and
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Evaluates `K[f](v)` by sampling `w ~ N(0, σ²I)` and `ω` uniform on the
/// sphere; `σ` should match the spread of `f`.
pub fn continuum_operator_mc(
    law: &InteractionLaw,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    kernel: Option<&Kernel>,
    v: &[f64],
    sigma: f64,
    samples: usize,
    seed: u64,
) -> MonteCarloEstimate {
    let d = v.len();
    let area = sphere_area(d);
    let chunks = 64usize;
    let per_chunk = samples.div_ceil(chunks);
    let fv = f(v);
    let norm = (2.0 * PI * sigma * sigma).powf(d as f64 / 2.0);
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut w = vec![0.0; d];
            let mut omega = vec![0.0; d];
            let mut vp = vec![0.0; d];
            let mut wp = vec![0.0; d];
            let mut u = vec![0.0; d];
            let mut up = vec![0.0; d];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..per_chunk {
                let mut r2 = 0.0;
                for a in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    w[a] = sigma * z;
                    r2 += z * z;
                }
                let density = (-0.5 * r2).exp() / norm;
                let mut on: f64 = 0.0;
                for o in omega.iter_mut() {
                    *o = rng.sample(StandardNormal);
                    on += *o * *o;
                }
                let on = on.sqrt();
                let mut un = 0.0;
                for a in 0..d {
                    u[a] = v[a] - w[a];
                    un += u[a] * u[a];
                }
                let un = un.sqrt();
                for a in 0..d {
                    up[a] = un * omega[a] / on;
                    vp[a] = 0.5 * (v[a] + w[a] + up[a]);
                    wp[a] = 0.5 * (v[a] + w[a] - up[a]);
                }
                let r = kernel.map_or(1.0, |k| k(&u, &up));
                let value = area * r * law.f_unchecked(fv, f(&w), f(&vp), f(&wp)) / density;
                s1 += value;
                s2 += value * value;
            }
            (s1, s2, per_chunk)
        })
        .collect();
    let total: usize = partial.iter().map(|p| p.2).sum();
    let s1: f64 = partial.iter().map(|p| p.0).sum();
    let s2: f64 = partial.iter().map(|p| p.1).sum();
    let mean = s1 / total as f64;
    let var = (s2 / total as f64 - mean * mean).max(0.0);
    MonteCarloEstimate {
        mean,
        std_error: (var / total as f64).sqrt(),
        samples: total,
    }
}

/// `(1/|S^{d−1}|) ∫ φ dω` by a product rule: Gauss–Legendre in the polar
/// variable(s), trapezoid in the periodic angle(s).
pub fn sphere_average(d: usize, phi: &dyn Fn(&[f64]) -> f64) -> f64 {
    const ANGLES: usize = 128;
    let gl = GaussLegendre::new(NonZeroUsize::new(64).unwrap());
    let ring = |r: f64, out: &mut dyn FnMut(f64, f64)| {
        for a in 0..ANGLES {
            let t = 2.0 * PI * a as f64 / ANGLES as f64;
            out(r * t.cos(), r * t.sin());
        }
    };
    match d {
        2 => {
            let mut s = 0.0;
            ring(1.0, &mut |x, y| s += phi(&[x, y]));
            s / ANGLES as f64
        }
        // z uniform on [−1, 1] for the 2-sphere
        3 => {
            let value = gl.integrate(-1.0, 1.0, |z| {
                let r = (1.0 - z * z).max(0.0).sqrt();
                let mut s = 0.0;
                ring(r, &mut |x, y| s += phi(&[x, y, z]));
                s / ANGLES as f64
            });
            value / 2.0
        }
        // Hopf coordinates: s = sin²η is uniform on [0, 1]
        4 => gl.integrate(0.0, 1.0, |s| {
            let (r1, r2) = ((1.0 - s).max(0.0).sqrt(), s.sqrt());
            let mut acc = 0.0;
            ring(r1, &mut |x1, x2| ring(r2, &mut |x3, x4| acc += phi(&[x1, x2, x3, x4])));
            acc / (ANGLES * ANGLES) as f64
        }),
        _ => panic!("unsupported dimension {d}"),
    }
}

/// Average of `φ(x/√m)` over the integer points of the shell `|x|² = m`.
pub fn shell_average(m: u64, d: usize, phi: &dyn Fn(&[f64]) -> f64) -> Result<f64, QuadratureError> {
    let shell = enumerate_sphere_points(m, d)?;
    if shell.is_empty() || m == 0 {
        return Err(QuadratureError::EmptyShell { m, d });
    }
    let s = (m as f64).sqrt();
    let sum: f64 = shell.points.iter().map(|p| phi(&scaled(p, 1.0 / s))).sum();
    Ok(sum / shell.count() as f64)
}

/// `|shell average − sphere average|` for `φ` on `S^{d−1}`.
pub fn sphere_average_error(m: u64, d: usize, phi: &dyn Fn(&[f64]) -> f64) -> Result<f64, QuadratureError> {
    Ok((shell_average(m, d, phi)? - sphere_average(d, phi)).abs())
}

/// `S(m, k) = Σ_{|u|² = m} e^{ikθ_u}` over integer points of a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialSum {
    #[serde(skip)]
    pub value: Complex64,
    pub count: usize,
}

impl ExponentialSum {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `|S(m,k)| / r₂(m)`, zero for an empty circle.
    pub fn normalized(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.value.norm() / self.count as f64
        }
    }
}

pub fn exponential_sum(m: u64, k: i32) -> ExponentialSum {
    let shell = enumerate_sphere_points(m, 2).expect("d = 2 is supported");
    if m == 0 {
        return ExponentialSum {
            value: Complex64::new(0.0, 0.0),
            count: 0,
        };
    }
    let r = (m as f64).sqrt();
    let value = shell
        .points
        .iter()
        .map(|p| Complex64::new(p.coords()[0] as f64 / r, p.coords()[1] as f64 / r).powi(k))
        .sum();
    ExponentialSum {
        value,
        count: shell.count(),
    }
}

/// Mean of `|S(m,k)|/r₂(m)` over nonempty circles with `m ∈ [lo, hi]`.
pub fn mean_normalized_exponential_sum(k: i32, lo: u64, hi: u64) -> f64 {
    let (sum, count) = (lo.max(1)..=hi)
        .into_par_iter()
        .map(|m| exponential_sum(m, k))
        .filter(|s| !s.is_empty())
        .map(|s| (s.normalized(), 1usize))
        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// One row of the shell diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellStats {
    pub m: u64,
    pub residue_mod_8: u64,
    pub count: usize,
    /// Sphere-average error per test function; `None` for an empty shell.
    pub errors: Vec<Option<f64>>,
}

pub fn shell_stats(m: u64, d: usize, tests: &[&SphereFn]) -> Result<ShellStats, QuadratureError> {
    let count = enumerate_sphere_points(m, d)?.count();
    let errors = tests
        .iter()
        .map(|phi| {
            if count == 0 || m == 0 {
                Ok(None)
            } else {
                sphere_average_error(m, d, *phi).map(Some)
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(ShellStats {
        m,
        residue_mod_8: m % 8,
        count,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::conserves;

    #[test]
    fn shell_two_weight() {
        let spec = QuadratureSpec::new(3, 1.0, 2).unwrap();
        let v = spec.velocity_box().unwrap();
        let table = build_gamma(&spec, &v).unwrap();
        // pair (−1,−1,0) / (1,1,0): u/2 = (−1,−1,0), m = 2
        let a = v.index_of(&LatticePoint::new(vec![-1, -1, 0])).unwrap();
        let b = v.index_of(&LatticePoint::new(vec![1, 1, 0])).unwrap();
        let r = table
            .reactions()
            .iter()
            .find(|r| (r.quadruple.i, r.quadruple.j) == (a.min(b), a.max(b)))
            .unwrap();
        assert!((r.gamma - 4.0 * PI / 12.0).abs() < 1e-15);
    }

    #[test]
    fn every_reaction_is_even_and_conservative() {
        let spec = QuadratureSpec::new(2, 0.5, 3).unwrap();
        let v = spec.velocity_box().unwrap();
        let table = build_gamma(&spec, &v).unwrap();
        assert!(!table.is_empty());
        for r in table.reactions() {
            assert!(conserves(v.points(), &r.quadruple));
            let [i, j, k, l] = r.quadruple.indices();
            assert!((&v.points()[i] - &v.points()[j]).is_even());
            assert!((&v.points()[k] - &v.points()[l]).is_even());
        }
        let mut qs: Vec<_> = table.reactions().iter().map(|r| r.quadruple).collect();
        qs.dedup();
        assert_eq!(qs.len(), table.len());
    }

    #[test]
    fn constant_state_is_annihilated() {
        let spec = QuadratureSpec::new(2, 1.0, 3).unwrap();
        let v = spec.velocity_box().unwrap();
        let model = Model::new(v.clone(), build_gamma(&spec, &v).unwrap()).unwrap();
        let k = discrete_operator(&spec, &model, &InteractionLaw::Wke, &vec![0.3; v.len()]).unwrap();
        assert!(k.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn point_operator_matches_table() {
        let spec = QuadratureSpec::new(3, 0.5, 3).unwrap();
        let v = spec.velocity_box().unwrap();
        let model = Model::new(v.clone(), build_gamma(&spec, &v).unwrap()).unwrap();
        let f: Vec<f64> = (0..v.len())
            .map(|i| (-v.speed_sq(i)).exp() * (1.0 + 0.3 * v.velocity(i)[0]))
            .collect();
        let law = InteractionLaw::Boltzmann;
        let all = discrete_operator(&spec, &model, &law, &f).unwrap();
        for i in [0, 13, 40, 62] {
            let one = point_operator(&spec, &v, &law, &f, i).unwrap();
            assert!(
                (one - all[i]).abs() < 1e-13 * (1.0 + all[i].abs()),
                "{i}: {one} vs {}",
                all[i]
            );
        }
    }

    #[test]
    fn sphere_average_of_constants_and_odd_functions() {
        for d in 2..=4 {
            assert!((sphere_average(d, &|_| 1.0) - 1.0).abs() < 1e-14);
            assert!(sphere_average(d, &|w| w[0]).abs() < 1e-14);
            let second = sphere_average(d, &|w| w[0] * w[0]);
            assert!((second - 1.0 / d as f64).abs() < 1e-14, "d={d}: {second}");
        }
        // ⟨ω₁⁴⟩ = 3/(d(d+2))
        let fourth = sphere_average(3, &|w| w[0].powi(4));
        assert!((fourth - 0.2).abs() < 1e-14);
    }

    #[test]
    fn trivial_shell_errors_vanish() {
        assert!(sphere_average_error(5, 3, &|_| 1.0).unwrap() < 1e-14);
        assert!(sphere_average_error(6, 3, &|w| w[0]).unwrap() < 1e-14);
        assert!(matches!(
            sphere_average_error(7, 3, &|_| 1.0),
            Err(QuadratureError::EmptyShell { .. })
        ));
    }

    #[test]
    fn exponential_sum_anchors() {
        let s = exponential_sum(1, 4);
        assert_eq!(s.count, 4);
        assert!((s.value - Complex64::new(4.0, 0.0)).norm() < 1e-14);
        assert!(exponential_sum(1, 1).value.norm() < 1e-14);
        assert!(exponential_sum(3, 1).is_empty());
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            QuadratureSpec::new(3, 1.0, 1),
            Err(QuadratureError::BoxTooSmall(1))
        ));
        assert!(QuadratureSpec::new(5, 1.0, 3).is_err());
        assert!(QuadratureSpec::new(3, 0.0, 3).is_err());
    }

    #[test]
    fn boundary_fraction_of_gaussian() {
        let spec = QuadratureSpec::new(2, 1.0, 4).unwrap();
        let v = spec.velocity_box().unwrap();
        let f: Vec<f64> = (0..v.len()).map(|i| (-v.speed_sq(i)).exp()).collect();
        let frac = boundary_fraction(&v, &f);
        assert!((frac - (-16.0f64).exp()).abs() < 1e-20);
    }
}

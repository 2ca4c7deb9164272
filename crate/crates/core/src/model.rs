//! Velocity sets, reaction tables and normality certification.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{self, exact_integer_rank, LatticePoint, Quadruple, MAX_DIM, MIN_DIM};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension {0} is outside the supported range")]
    UnsupportedDimension(usize),
    #[error("mesh step must be positive and finite, got {0}")]
    BadMeshStep(f64),
    #[error("velocity set needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("duplicate velocity {0:?}")]
    DuplicatePoint(LatticePoint),
    #[error("reaction index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("reaction {0:?} does not conserve momentum and energy")]
    NotConservative(Quadruple),
    #[error("reaction {0:?} repeats an index or pairs a couple with itself")]
    DegenerateReaction([usize; 4]),
    #[error("reaction {0:?} listed twice")]
    DuplicateReaction(Quadruple),
    #[error("negative or non-finite rate {gamma} for reaction {quadruple:?}")]
    BadRate { quadruple: Quadruple, gamma: f64 },
    #[error("anchor is not a right angle: (v_c - v_b)·(v_c - v_a) = {0}")]
    NotOrthogonal(i64),
    #[error("candidate point {0:?} is already in the set")]
    CandidateExists(LatticePoint),
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

/// The phase set `V ⊂ hℤᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySet {
    d: usize,
    h: f64,
    points: Vec<LatticePoint>,
}

impl VelocitySet {
    pub fn new(d: usize, h: f64, points: Vec<LatticePoint>) -> Result<Self, ModelError> {
        if !(MIN_DIM..=MAX_DIM).contains(&d) {
            return Err(ModelError::UnsupportedDimension(d));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(ModelError::BadMeshStep(h));
        }
        if points.len() < 4 {
            return Err(ModelError::TooFewPoints(points.len()));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (index, p) in points.iter().enumerate() {
            if p.dim() != d {
                return Err(ModelError::DimensionMismatch {
                    index,
                    got: p.dim(),
                    expected: d,
                });
            }
            if !seen.insert(p) {
                return Err(ModelError::DuplicatePoint(p.clone()));
            }
        }
        Ok(Self { d, h, points })
    }

    /// The four-velocity plane Broadwell set `{e₁, −e₁, e₂, −e₂}`.
    pub fn broadwell_four() -> Self {
        let p = |x, y| LatticePoint::new(vec![x, y]);
        Self::new(2, 1.0, vec![p(1, 0), p(-1, 0), p(0, 1), p(0, -1)]).expect("valid set")
    }

    /// The full grid `{−r..r}ᵈ` with mesh step `h`, in lexicographic order.
    pub fn grid(d: usize, h: f64, radius: i64) -> Result<Self, ModelError> {
        if !(MIN_DIM..=MAX_DIM).contains(&d) {
            return Err(ModelError::UnsupportedDimension(d));
        }
        let side = (2 * radius + 1).max(0) as usize;
        let total = side.pow(d as u32);
        let points = (0..total)
            .map(|mut idx| {
                let mut c = vec![0i64; d];
                for slot in c.iter_mut().rev() {
                    *slot = (idx % side) as i64 - radius;
                    idx /= side;
                }
                LatticePoint::new(c)
            })
            .collect();
        Self::new(d, h, points)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mesh_step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    /// Physical velocity `h · k` of point `i`.
    pub fn velocity(&self, i: usize) -> Vec<f64> {
        self.points[i].coords().iter().map(|&k| self.h * k as f64).collect()
    }

    /// Physical `|v_i|²`.
    pub fn speed_sq(&self, i: usize) -> f64 {
        self.h * self.h * self.points[i].norm_sq() as f64
    }

    /// `M = max |v_i|²`.
    pub fn max_speed_sq(&self) -> f64 {
        (0..self.len()).map(|i| self.speed_sq(i)).fold(0.0, f64::max)
    }

    pub fn contains_origin(&self) -> bool {
        self.points.iter().any(LatticePoint::is_zero)
    }

    /// True when `−v ∈ V` for every `v ∈ V`.
    pub fn is_symmetric(&self) -> bool {
        let set: HashSet<&LatticePoint> = self.points.iter().collect();
        self.points.iter().all(|p| set.contains(&-p))
    }

    /// Index of `−v_i`, when present.
    pub fn antipode(&self, i: usize) -> Option<usize> {
        self.index_of(&-&self.points[i])
    }
}

/// Shifts every point by the lattice vector `a`.
pub fn translate_set(v: &VelocitySet, a: &LatticePoint) -> Result<VelocitySet, ModelError> {
    if a.dim() != v.dim() {
        return Err(ModelError::DimensionMismatch {
            index: 0,
            got: a.dim(),
            expected: v.dim(),
        });
    }
    let points = v.points.iter().map(|p| p + a).collect();
    VelocitySet::new(v.d, v.h, points)
}

/// One canonical reaction with rate `Γ_ij^kl`; 0-based indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reaction {
    pub quadruple: Quadruple,
    pub gamma: f64,
}

/// Canonical reactions. Each entry stands for all eight index symmetries
/// `Γ_ij^kl = Γ_ji^kl = Γ_ij^lk = Γ_kl^ij = …` of the full rate tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReactionTable {
    n: usize,
    reactions: Vec<Reaction>,
}

impl ReactionTable {
    /// Validates and canonicalizes. Reactions must be conservative on `v`,
    /// with four distinct indices, nonnegative finite rates and no repeats.
    pub fn new(v: &VelocitySet, raw: Vec<Reaction>) -> Result<Self, ModelError> {
        let n = v.len();
        let mut seen = HashSet::with_capacity(raw.len());
        let mut reactions = Vec::with_capacity(raw.len());
        for r in raw {
            let q = r.quadruple;
            let idx = q.indices();
            if let Some(&bad) = idx.iter().find(|&&x| x >= n) {
                return Err(ModelError::IndexOutOfRange(bad));
            }
            let distinct: HashSet<usize> = idx.iter().copied().collect();
            if distinct.len() != 4 {
                return Err(ModelError::DegenerateReaction(idx));
            }
            let q = Quadruple::canonical(q.i, q.j, q.k, q.l);
            if !lattice::conserves(v.points(), &q) {
                return Err(ModelError::NotConservative(q));
            }
            if !(r.gamma.is_finite() && r.gamma >= 0.0) {
                return Err(ModelError::BadRate {
                    quadruple: q,
                    gamma: r.gamma,
                });
            }
            if !seen.insert(q) {
                return Err(ModelError::DuplicateReaction(q));
            }
            reactions.push(Reaction {
                quadruple: q,
                gamma: r.gamma,
            });
        }
        reactions.sort_by_key(|r| r.quadruple);
        Ok(Self { n, reactions })
    }

    /// Skips validation; the caller guarantees canonical, conservative,
    /// sorted and unique entries.
    pub(crate) fn from_canonical_unchecked(n: usize, reactions: Vec<Reaction>) -> Self {
        Self { n, reactions }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    /// Reactions with `Γ > 0`.
    pub fn active(&self) -> impl Iterator<Item = &Reaction> {
        self.reactions.iter().filter(|r| r.gamma > 0.0)
    }

    /// Same table with every rate multiplied by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for r in &mut out.reactions {
            r.gamma *= factor;
        }
        out
    }

    /// The eight ordered tensor entries `(i,j,k,l,Γ)` implied by each canonical
    /// reaction.
    pub fn expanded(&self) -> impl Iterator<Item = ([usize; 4], f64)> + '_ {
        self.reactions.iter().flat_map(|r| {
            let Quadruple { i, j, k, l } = r.quadruple;
            let g = r.gamma;
            [
                [i, j, k, l],
                [j, i, k, l],
                [i, j, l, k],
                [j, i, l, k],
                [k, l, i, j],
                [l, k, i, j],
                [k, l, j, i],
                [l, k, j, i],
            ]
            .into_iter()
            .map(move |idx| (idx, g))
        })
    }

    /// `g = 2 max_{i,j,k} Σ_l Γ_ij^kl`, the damping constant of the monotone
    /// iteration.
    pub fn damping_constant(&self) -> f64 {
        let mut sums: HashMap<(usize, usize, usize), f64> = HashMap::new();
        for ([i, j, k, _], g) in self.expanded() {
            *sums.entry((i, j, k)).or_insert(0.0) += g;
        }
        2.0 * sums.values().copied().fold(0.0, f64::max)
    }
}

/// A velocity set together with its reaction table.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub velocities: VelocitySet,
    pub reactions: ReactionTable,
}

impl Model {
    pub fn new(velocities: VelocitySet, reactions: ReactionTable) -> Result<Self, ModelError> {
        if reactions.n() != velocities.len() {
            return Err(ModelError::IndexOutOfRange(reactions.n()));
        }
        Ok(Self { velocities, reactions })
    }

    pub fn n(&self) -> usize {
        self.velocities.len()
    }

    pub fn dim(&self) -> usize {
        self.velocities.dim()
    }
}

/// `φ₁ = 1`, `φ_{α+1} = v^α`, `φ_{d+2} = |v|²` over the set, in lattice units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantVectors {
    pub phi: Vec<Vec<i64>>,
}

pub fn invariant_vectors(v: &VelocitySet) -> InvariantVectors {
    let mut phi = Vec::with_capacity(v.dim() + 2);
    phi.push(vec![1; v.len()]);
    for axis in 0..v.dim() {
        phi.push(v.points().iter().map(|p| p.coords()[axis]).collect());
    }
    phi.push(v.points().iter().map(LatticePoint::norm_sq).collect());
    InvariantVectors { phi }
}

/// `θ` with +1 at `i, j` and −1 at `k, l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionVector {
    pub theta: Vec<i64>,
}

impl ReactionVector {
    pub fn new(n: usize, q: &Quadruple) -> Self {
        let mut theta = vec![0; n];
        theta[q.i] += 1;
        theta[q.j] += 1;
        theta[q.k] -= 1;
        theta[q.l] -= 1;
        Self { theta }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormalityReport {
    /// Points are not confined to an affine hyperplane or a sphere.
    pub condition_a: bool,
    /// Every point takes part in at least one active reaction.
    pub condition_b: bool,
    /// The active reaction vectors have the maximal rank `n − (d+2)`.
    pub condition_c: bool,
    pub rank_phi: usize,
    pub rank_p: usize,
    pub p_max: i64,
    pub isolated_points: Vec<usize>,
}

impl NormalityReport {
    pub fn is_normal(&self) -> bool {
        self.condition_a && self.condition_b && self.condition_c
    }
}

/// Certifies conditions (a)–(c) of normality with exact ranks.
///
/// `rank{φ₁..φ_{d+2}} = d+2` covers both degeneracies of (a): an affine
/// dependency among `1, v¹..vᵈ` means a hyperplane, one involving `|v|²`
/// means a common sphere.
pub fn check_normal(model: &Model) -> NormalityReport {
    let v = &model.velocities;
    let n = v.len();
    let d = v.dim();
    let rank_phi = exact_integer_rank(&invariant_vectors(v).phi);

    let mut touched = vec![false; n];
    let mut thetas = Vec::new();
    for r in model.reactions.active() {
        for idx in r.quadruple.indices() {
            touched[idx] = true;
        }
        thetas.push(ReactionVector::new(n, &r.quadruple).theta);
    }
    let isolated_points: Vec<usize> = (0..n).filter(|&i| !touched[i]).collect();
    let rank_p = exact_integer_rank(&thetas);
    let p_max = n as i64 - (d as i64 + 2);

    NormalityReport {
        condition_a: rank_phi == d + 2,
        condition_b: isolated_points.is_empty(),
        condition_c: rank_p as i64 == p_max,
        rank_phi,
        rank_p,
        p_max,
        isolated_points,
    }
}

/// The `n = 2d+2` seed `{±e₁,…,±e_d, 0, e₁+e₂}` with unit rates on
/// `{(e₁,−e₁),(e_k,−e_k)}` for `k = 2..d` and on `{(e₁,e₂),(0,e₁+e₂)}`.
pub fn seed_broadwell(d: usize) -> Result<Model, ModelError> {
    if !(MIN_DIM..=MAX_DIM).contains(&d) {
        return Err(ModelError::UnsupportedDimension(d));
    }
    let mut points = Vec::with_capacity(2 * d + 2);
    for axis in 0..d {
        let e = LatticePoint::unit(d, axis);
        let minus = -&e;
        points.push(e);
        points.push(minus);
    }
    points.push(LatticePoint::zero(d));
    points.push(&LatticePoint::unit(d, 0) + &LatticePoint::unit(d, 1));
    let v = VelocitySet::new(d, 1.0, points)?;

    let mut raw: Vec<Reaction> = (1..d)
        .map(|k| Reaction {
            quadruple: Quadruple::canonical(0, 1, 2 * k, 2 * k + 1),
            gamma: 1.0,
        })
        .collect();
    raw.push(Reaction {
        quadruple: Quadruple::canonical(0, 2, 2 * d, 2 * d + 1),
        gamma: 1.0,
    });
    let table = ReactionTable::new(&v, raw)?;
    Model::new(v, table)
}

/// Appends `v_new = v_a + v_b − v_c` and the unit-rate reaction
/// `{(a,b),(c,new)}`, given `(v_c − v_b)·(v_c − v_a) = 0`.
pub fn extend_model(model: &Model, anchor: (usize, usize, usize)) -> Result<Model, ModelError> {
    let v = &model.velocities;
    let (a, b, c) = anchor;
    for idx in [a, b, c] {
        if idx >= v.len() {
            return Err(ModelError::IndexOutOfRange(idx));
        }
    }
    let (pa, pb, pc) = (&v.points()[a], &v.points()[b], &v.points()[c]);
    let dot = (pc - pb).dot(&(pc - pa));
    if dot != 0 {
        return Err(ModelError::NotOrthogonal(dot));
    }
    let candidate = &(pa + pb) - pc;
    if v.index_of(&candidate).is_some() {
        return Err(ModelError::CandidateExists(candidate));
    }
    let mut points = v.points().to_vec();
    points.push(candidate);
    let new_index = points.len() - 1;
    let extended = VelocitySet::new(v.dim(), v.mesh_step(), points)?;

    let mut raw = model.reactions.reactions().to_vec();
    raw.push(Reaction {
        quadruple: Quadruple::canonical(a, b, c, new_index),
        gamma: 1.0,
    });
    let table = ReactionTable::new(&extended, raw)?;
    Model::new(extended, table)
}

/// Every admissible anchor `(a, b, c)` of [`extend_model`] on the current set,
/// with the point it would add. Anchors are listed with `a < b`.
pub fn extension_candidates(v: &VelocitySet) -> Vec<((usize, usize, usize), LatticePoint)> {
    let n = v.len();
    let set: HashSet<&LatticePoint> = v.points().iter().collect();
    let mut out = Vec::new();
    for c in 0..n {
        for a in 0..n {
            for b in (a + 1)..n {
                if a == c || b == c {
                    continue;
                }
                let (pa, pb, pc) = (&v.points()[a], &v.points()[b], &v.points()[c]);
                if (pc - pb).dot(&(pc - pa)) != 0 {
                    continue;
                }
                let cand = &(pa + pb) - pc;
                if !set.contains(&cand) {
                    out.push(((a, b, c), cand));
                }
            }
        }
    }
    out
}

/// Extends one point at a time until every admissible candidate inside the
/// box `|k|_∞ ≤ radius` has been added. Returns the chain of models, starting
/// with the input.
pub fn grow_within_box(model: &Model, radius: i64, max_steps: usize) -> Result<Vec<Model>, ModelError> {
    let mut chain = vec![model.clone()];
    for _ in 0..max_steps {
        let current = chain.last().expect("non-empty chain");
        let next = extension_candidates(&current.velocities)
            .into_iter()
            .filter(|(_, p)| p.max_abs() <= radius)
            .min_by(|x, y| x.1.cmp(&y.1));
        match next {
            Some((anchor, _)) => {
                let grown = extend_model(current, anchor)?;
                chain.push(grown);
            }
            None => break,
        }
    }
    Ok(chain)
}

/// Rate assignment for automatically discovered quadruples.
pub enum RateRule<'a> {
    Constant(f64),
    /// `Γ` as a function of `|v_i − v_j|²` and `(v_i − v_j)·(v_k − v_l)`,
    /// both in physical units.
    Kernel(&'a dyn Fn(f64, f64) -> f64),
}

/// Assigns a rate to every conservative quadruple of `v`.
pub fn autopopulate_reactions(v: &VelocitySet, rule: &RateRule<'_>) -> Result<ReactionTable, ModelError> {
    let h2 = v.mesh_step() * v.mesh_step();
    let raw: Vec<Reaction> = lattice::find_collision_quadruples(v.points())
        .into_iter()
        .map(|q| {
            let gamma = match rule {
                RateRule::Constant(c) => *c,
                RateRule::Kernel(kernel) => {
                    let p = v.points();
                    let u = &p[q.i] - &p[q.j];
                    let w = &p[q.k] - &p[q.l];
                    kernel(h2 * u.norm_sq() as f64, h2 * u.dot(&w) as f64)
                }
            };
            Reaction { quadruple: q, gamma }
        })
        .collect();
    ReactionTable::new(v, raw)
}

/// On-disk model. Reaction indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub h: f64,
    pub points: Vec<Vec<i64>>,
    pub reactions: Vec<ReactionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionRecord {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub gamma: f64,
}

impl ModelFile {
    pub fn from_model(model: &Model) -> Self {
        let v = &model.velocities;
        Self {
            d: v.dim(),
            h: v.mesh_step(),
            points: v.points().iter().map(|p| p.coords().to_vec()).collect(),
            reactions: model
                .reactions
                .reactions()
                .iter()
                .map(|r| ReactionRecord {
                    i: r.quadruple.i + 1,
                    j: r.quadruple.j + 1,
                    k: r.quadruple.k + 1,
                    l: r.quadruple.l + 1,
                    gamma: r.gamma,
                })
                .collect(),
            warning: None,
        }
    }

    pub fn into_model(self) -> Result<Model, ModelError> {
        let points = self.points.into_iter().map(LatticePoint::new).collect();
        let v = VelocitySet::new(self.d, self.h, points)?;
        let mut raw = Vec::with_capacity(self.reactions.len());
        for r in self.reactions {
            let mut idx = [0usize; 4];
            for (slot, one_based) in idx.iter_mut().zip([r.i, r.j, r.k, r.l]) {
                *slot = one_based.checked_sub(1).ok_or(ModelError::IndexOutOfRange(one_based))?;
            }
            raw.push(Reaction {
                quadruple: Quadruple {
                    i: idx[0],
                    j: idx[1],
                    k: idx[2],
                    l: idx[3],
                },
                gamma: r.gamma,
            });
        }
        let table = ReactionTable::new(&v, raw)?;
        Model::new(v, table)
    }
}

/// Canonical JSON text of a model, with an optional warning field.
pub fn model_to_json(model: &Model, warning: Option<&str>) -> String {
    let mut file = ModelFile::from_model(model);
    file.warning = warning.map(str::to_owned);
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str) -> Result<Model, ModelError> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.into_model()
}

pub fn write_model(path: &Path, model: &Model, warning: Option<&str>) -> Result<(), ModelError> {
    std::fs::write(path, model_to_json(model, warning))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<Model, ModelError> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn broadwell4_model() -> Model {
        let v = VelocitySet::broadwell_four();
        let t = autopopulate_reactions(&v, &RateRule::Constant(1.0)).unwrap();
        Model::new(v, t).unwrap()
    }

    #[test]
    fn broadwell_four_is_on_a_circle() {
        let m = broadwell4_model();
        assert_eq!(m.reactions.len(), 1);
        assert_eq!(m.reactions.reactions()[0].gamma, 1.0);
        let phi = invariant_vectors(&m.velocities).phi;
        assert_eq!(phi[3], phi[0]);
        let rep = check_normal(&m);
        assert!(!rep.condition_a);
        assert!(!rep.is_normal());
    }

    #[test]
    fn seed_two_is_normal() {
        let m = seed_broadwell(2).unwrap();
        assert_eq!(m.n(), 6);
        assert_eq!(
            m.velocities.points().last().unwrap().coords(),
            &[1, 1],
            "extra point is e1+e2"
        );
        let phi = invariant_vectors(&m.velocities).phi;
        assert_eq!(phi[3], vec![1, 1, 1, 1, 0, 2]);
        assert_eq!(exact_integer_rank(&phi), 4);
        let rep = check_normal(&m);
        assert!(rep.is_normal(), "{rep:?}");
        assert_eq!(rep.rank_p, 2);
        assert_eq!(rep.p_max, 2);
    }

    #[test]
    fn seed_three_is_normal() {
        let m = seed_broadwell(3).unwrap();
        assert_eq!(m.n(), 8);
        let rep = check_normal(&m);
        assert!(rep.is_normal());
        assert_eq!(rep.rank_p, 3);
    }

    #[test]
    fn removing_a_reaction_isolates_its_private_points() {
        let m = seed_broadwell(2).unwrap();
        let kept: Vec<Reaction> = m
            .reactions
            .reactions()
            .iter()
            .copied()
            .filter(|r| !r.quadruple.indices().contains(&5))
            .collect();
        let t = ReactionTable::new(&m.velocities, kept).unwrap();
        let rep = check_normal(&Model::new(m.velocities.clone(), t).unwrap());
        assert!(!rep.condition_b);
        assert_eq!(rep.isolated_points, vec![4, 5]);
    }

    #[test]
    fn zero_rate_isolates_everything() {
        let m = seed_broadwell(2).unwrap();
        let t = autopopulate_reactions(&m.velocities, &RateRule::Constant(0.0)).unwrap();
        assert!(t.reactions().iter().all(|r| r.gamma == 0.0));
        let rep = check_normal(&Model::new(m.velocities, t).unwrap());
        assert!(!rep.condition_b);
    }

    #[test]
    fn extension_rejects_existing_point() {
        let m = seed_broadwell(2).unwrap();
        // a = e1 (0), b = e2 (2), c = 0 (4): candidate e1+e2 already present
        let err = extend_model(&m, (0, 2, 4)).unwrap_err();
        assert!(matches!(err, ModelError::CandidateExists(_)));
    }

    #[test]
    fn extension_rejects_non_right_angle() {
        let m = seed_broadwell(2).unwrap();
        // c = e1+e2, a = -e1, b = -e2: (c-b)·(c-a) = (1,2)·(2,1) = 4
        let err = extend_model(&m, (1, 3, 5)).unwrap_err();
        assert!(matches!(err, ModelError::NotOrthogonal(4)));
    }

    #[test]
    fn extension_keeps_normality() {
        let m = seed_broadwell(2).unwrap();
        // a = -e1, b = -e2, c = 0 adds -(e1+e2)
        let ext = extend_model(&m, (1, 3, 4)).unwrap();
        assert_eq!(ext.velocities.points()[6].coords(), &[-1, -1]);
        assert!(check_normal(&ext).is_normal());
        assert!(ext.velocities.is_symmetric());
    }

    #[test]
    fn kernel_rule_uses_relative_speed() {
        let m = seed_broadwell(2).unwrap();
        let kernel = |u2: f64, _dot: f64| u2;
        let t = autopopulate_reactions(&m.velocities, &RateRule::Kernel(&kernel)).unwrap();
        for r in t.reactions() {
            let p = m.velocities.points();
            let u = &p[r.quadruple.i] - &p[r.quadruple.j];
            assert_eq!(r.gamma, u.norm_sq() as f64);
        }
    }

    #[test]
    fn negative_kernel_is_rejected() {
        let v = VelocitySet::broadwell_four();
        let kernel = |_: f64, _: f64| -1.0;
        assert!(matches!(
            autopopulate_reactions(&v, &RateRule::Kernel(&kernel)),
            Err(ModelError::BadRate { .. })
        ));
    }

    #[test]
    fn translation_by_zero_is_identity() {
        let m = seed_broadwell(2).unwrap();
        let t = translate_set(&m.velocities, &LatticePoint::zero(2)).unwrap();
        assert_eq!(t, m.velocities);
    }

    #[test]
    fn expanded_tensor_has_eight_entries_per_reaction() {
        let m = seed_broadwell(2).unwrap();
        assert_eq!(m.reactions.expanded().count(), 8 * m.reactions.len());
        assert_eq!(m.reactions.damping_constant(), 2.0);
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = VelocitySet::grid(2, 0.5, 1).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.points()[0].coords(), &[-1, -1]);
        assert_eq!(g.points()[1].coords(), &[-1, 0]);
        assert_eq!(g.points()[8].coords(), &[1, 1]);
    }

    #[test]
    fn json_reads_unordered_reactions() {
        let text = r#"{"d":2,"h":1.0,"points":[[1,0],[-1,0],[0,1],[0,-1]],
            "reactions":[{"i":4,"j":3,"k":2,"l":1,"gamma":2.5}]}"#;
        let m = model_from_json(text).unwrap();
        let r = m.reactions.reactions()[0];
        assert_eq!(r.quadruple, Quadruple { i: 0, j: 1, k: 2, l: 3 });
        assert_eq!(r.gamma, 2.5);
    }

    #[test]
    fn json_rejects_negative_gamma() {
        let text = r#"{"d":2,"h":1.0,"points":[[1,0],[-1,0],[0,1],[0,-1]],
            "reactions":[{"i":1,"j":2,"k":3,"l":4,"gamma":-1.0}]}"#;
        assert!(matches!(model_from_json(text), Err(ModelError::BadRate { .. })));
    }
}

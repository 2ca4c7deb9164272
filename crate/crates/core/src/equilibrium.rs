//! Stationary states: the wave kinetic equilibrium `a/(1 + b|v|²)` and the
//! exponential family `p(f_i) = α + β·v_i + γ|v_i|²` of the other laws.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{rhs_into, Invariants};
use crate::interaction::{dissipation_unchecked, InteractionError, InteractionLaw};
use crate::model::{Model, VelocitySet};

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("1 + b|v|² vanishes or changes sign at point {index} (b = {b})")]
    Pole { index: usize, b: f64 },
    #[error("temperature {t} outside the admissible interval ({lo}, {hi})")]
    TemperatureOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("mass must be positive and finite, got {0}")]
    BadMass(f64),
    #[error("momentum has {got} components, expected {expected}")]
    MomentumDimension { got: usize, expected: usize },
    #[error("could not bracket the root of T(b) = {0}")]
    NoBracket(f64),
    #[error("Newton iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("target moments are not attainable for {0}")]
    Infeasible(InteractionLaw),
    #[error(transparent)]
    Domain(#[from] InteractionError),
}

/// `S₀(b)`, `S₁(b)` and `T(b) = S₁/S₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSums {
    pub s0: f64,
    pub s1: f64,
    pub t: f64,
}

/// `S_k(b) = Σ |v_i|^{2k} (1 + b|v_i|²)^{−1}` for `k = 0, 1`.
pub fn moment_sums(v: &VelocitySet, b: f64) -> Result<MomentSums, EquilibriumError> {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for i in 0..v.len() {
        let x = v.speed_sq(i);
        let den = 1.0 + b * x;
        if den <= 0.0 {
            return Err(EquilibriumError::Pole { index: i, b });
        }
        s0 += 1.0 / den;
        s1 += x / den;
    }
    Ok(MomentSums { s0, s1, t: s1 / s0 })
}

/// Closed-form `T'(b)`; a sum of negative squares divided by `S₀²`.
pub fn temperature_slope(v: &VelocitySet, b: f64) -> Result<f64, EquilibriumError> {
    let s = moment_sums(v, b)?;
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let xi = v.speed_sq(i);
        let ui = 1.0 / (1.0 + b * xi);
        for j in 0..n {
            let xj = v.speed_sq(j);
            let uj = 1.0 / (1.0 + b * xj);
            acc += (ui * uj * (xi - xj)).powi(2);
        }
    }
    Ok(-0.5 * acc / (s.s0 * s.s0))
}

/// Parameters of a stationary state.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EquilibriumKind {
    /// `f_i = a / (1 + b|v_i|²)`.
    Wke { a: f64, b: f64 },
    /// `p(f_i) = alpha + beta·v_i + gamma|v_i|²`.
    Exponential { alpha: f64, beta: Vec<f64>, gamma: f64 },
}

/// A stationary state together with the moments it was solved for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumParams {
    #[serde(flatten)]
    pub kind: EquilibriumKind,
    pub law: String,
    pub rho: f64,
    pub temperature: f64,
    pub momentum: Vec<f64>,
}

impl EquilibriumParams {
    /// Evaluates the state on `v`. Exponential parameters are mapped through
    /// `p⁻¹` of `law`.
    pub fn state(&self, v: &VelocitySet, law: &InteractionLaw) -> Result<Vec<f64>, EquilibriumError> {
        match &self.kind {
            EquilibriumKind::Wke { a, b } => (0..v.len())
                .map(|i| {
                    let den = 1.0 + b * v.speed_sq(i);
                    if den <= 0.0 {
                        Err(EquilibriumError::Pole { index: i, b: *b })
                    } else {
                        Ok(a / den)
                    }
                })
                .collect(),
            EquilibriumKind::Exponential { alpha, beta, gamma } => (0..v.len())
                .map(|i| {
                    let vi = v.velocity(i);
                    let y = alpha + beta.iter().zip(&vi).map(|(b, c)| b * c).sum::<f64>() + gamma * v.speed_sq(i);
                    law.p_inverse(y).ok_or(EquilibriumError::Infeasible(*law))
                })
                .collect(),
        }
    }

    /// The same parameters with `b` (wave kinetic) or `gamma` shifted by `by`.
    pub fn perturbed(&self, by: f64) -> Self {
        let mut out = self.clone();
        match &mut out.kind {
            EquilibriumKind::Wke { b, .. } => *b += by,
            EquilibriumKind::Exponential { gamma, .. } => *gamma += by,
        }
        out
    }
}

fn check_targets(v: &VelocitySet, rho: f64, t: f64) -> Result<(), EquilibriumError> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(EquilibriumError::BadMass(rho));
    }
    let lo = (0..v.len()).map(|i| v.speed_sq(i)).fold(f64::INFINITY, f64::min);
    let hi = v.max_speed_sq();
    if !(t > lo && t < hi) {
        return Err(EquilibriumError::TemperatureOutOfRange { t, lo, hi });
    }
    Ok(())
}

/// Solves `T(b) = t` on `(−1/M, ∞)` by bracketing and bisection; `T` is
/// strictly decreasing there, so the root is unique. Sets that are not
/// centrally symmetric are accepted: the result then carries nonzero
/// momentum, reported in the returned parameters.
pub fn solve_wke_equilibrium(v: &VelocitySet, rho: f64, t: f64) -> Result<EquilibriumParams, EquilibriumError> {
    solve_wke_equilibrium_in(v, rho, t, &Bracket::default())
}

/// Starting bracket for [`solve_wke_equilibrium_in`]: the left end is
/// `(−1 + lo_eps)/M`, moved towards the pole if needed; the right end starts
/// at `hi_start` and doubles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo_eps: f64,
    pub hi_start: f64,
}

impl Default for Bracket {
    fn default() -> Self {
        Self {
            lo_eps: 1e-9,
            hi_start: 1.0,
        }
    }
}

pub fn solve_wke_equilibrium_in(
    v: &VelocitySet,
    rho: f64,
    t: f64,
    bracket: &Bracket,
) -> Result<EquilibriumParams, EquilibriumError> {
    check_targets(v, rho, t)?;
    let m = v.max_speed_sq();
    let t_of = |b: f64| moment_sums(v, b).map(|s| s.t);

    let mut eps = bracket.lo_eps;
    let mut lo = -1.0 / m + eps / m;
    while t_of(lo)? <= t {
        eps *= 1e-2;
        let next = -1.0 / m + eps / m;
        if eps < 1e-18 || next == lo {
            return Err(EquilibriumError::NoBracket(t));
        }
        lo = next;
    }
    let mut hi = bracket.hi_start;
    while t_of(hi)? >= t {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(EquilibriumError::NoBracket(t));
        }
    }
    if lo > hi {
        return Err(EquilibriumError::NoBracket(t));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t_of(mid)? > t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = if (t_of(lo)? - t).abs() <= (t_of(hi)? - t).abs() {
        lo
    } else {
        hi
    };
    let s = moment_sums(v, b)?;
    let a = rho / s.s0;
    let kind = EquilibriumKind::Wke { a, b };
    let mut params = EquilibriumParams {
        kind,
        law: InteractionLaw::Wke.to_string(),
        rho,
        temperature: t,
        momentum: vec![0.0; v.dim()],
    };
    let f = params.state(v, &InteractionLaw::Wke)?;
    params.momentum = Invariants::of(v, &f).momentum;
    Ok(params)
}

/// Convex dual `D(μ) = Σ J(μ·φ_i) − μ·c` with `J' = p⁻¹`; its minimiser gives
/// `p(f_i) = μ·φ_i` with moments `Σ f_i φ_i = c`.
struct Dual<'a> {
    law: &'a InteractionLaw,
    features: Vec<Vec<f64>>,
    target: Vec<f64>,
}

impl Dual<'_> {
    fn y(&self, mu: &[f64], i: usize) -> f64 {
        self.features[i].iter().zip(mu).map(|(a, b)| a * b).sum()
    }

    /// `J(y) = y·x − I(x)` with `x = p⁻¹(y)`; `None` outside the range of `p`.
    fn j(&self, y: f64) -> Option<(f64, f64)> {
        let x = self.law.p_inverse(y)?;
        if !(x > 0.0 && self.law.admits(x)) {
            return None;
        }
        let value = match self.law {
            // closed form avoids cancellation in y·x − I(x)
            InteractionLaw::Wke => -1.0 - (-y).ln(),
            InteractionLaw::Boltzmann => x,
            _ => y * x - self.law.i_unchecked(x),
        };
        Some((value, x))
    }

    fn value(&self, mu: &[f64]) -> Option<f64> {
        let mut sum = -mu.iter().zip(&self.target).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..self.features.len() {
            sum += self.j(self.y(mu, i))?.0;
        }
        Some(sum)
    }

    fn state(&self, mu: &[f64]) -> Option<Vec<f64>> {
        (0..self.features.len())
            .map(|i| self.j(self.y(mu, i)).map(|(_, x)| x))
            .collect()
    }

    fn gradient_and_hessian(&self, mu: &[f64], f: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let k = mu.len();
        let mut g = DVector::from_iterator(k, self.target.iter().map(|c| -c));
        let mut h = DMatrix::zeros(k, k);
        for (phi, &x) in self.features.iter().zip(f) {
            let w = 1.0 / self.law.p_derivative(x);
            for a in 0..k {
                g[a] += x * phi[a];
                for b in 0..k {
                    h[(a, b)] += w * phi[a] * phi[b];
                }
            }
        }
        (g, h)
    }

    fn residual(&self, f: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, c) in self.target.iter().enumerate() {
            let got: f64 = self.features.iter().zip(f).map(|(phi, x)| phi[a] * x).sum();
            worst = worst.max((got - c).abs());
        }
        worst
    }

    /// Damped Newton from the uniform state `f_i = ρ/n`.
    fn solve(&self, rho: f64, tol: f64) -> Result<Vec<f64>, EquilibriumError> {
        let n = self.features.len();
        let k = self.target.len();
        let start = self
            .law
            .p_eval(rho / n as f64)
            .map_err(|_| EquilibriumError::Infeasible(*self.law))?;
        let mut mu = vec![0.0; k];
        mu[0] = start;
        let mut f = self.state(&mu).ok_or(EquilibriumError::Infeasible(*self.law))?;
        let mut value = self.value(&mu).ok_or(EquilibriumError::Infeasible(*self.law))?;
        const MAX_ITER: usize = 200;
        for iter in 0..MAX_ITER {
            let residual = self.residual(&f);
            if residual <= tol {
                return Ok(mu);
            }
            let (g, h) = self.gradient_and_hessian(&mu, &f);
            let step = h
                .clone()
                .cholesky()
                .map(|c| c.solve(&g))
                .or_else(|| h.lu().solve(&g))
                .ok_or(EquilibriumError::NoConvergence {
                    residual,
                    iterations: iter,
                })?;
            let slope = -g.dot(&step);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = mu.iter().zip(step.iter()).map(|(m, s)| m - t * s).collect();
                if let (Some(v), Some(ft)) = (self.value(&trial), self.state(&trial)) {
                    let decreased = v <= value + 1e-4 * t * slope;
                    // near the optimum D is flat to rounding; fall back on the residual
                    if decreased || self.residual(&ft) < residual {
                        mu = trial;
                        value = v;
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                return Err(EquilibriumError::NoConvergence {
                    residual,
                    iterations: iter,
                });
            }
        }
        let residual = self.residual(&f);
        if residual <= tol {
            Ok(mu)
        } else {
            Err(EquilibriumError::NoConvergence {
                residual,
                iterations: MAX_ITER,
            })
        }
    }
}

/// Exponential-family equilibrium with `β = 0`: solves
/// `Σ f_i = ρ`, `Σ f_i|v_i|² = ρT` for `f_i = p⁻¹(α + γ|v_i|²)`.
pub fn solve_exponential_equilibrium(
    v: &VelocitySet,
    law: &InteractionLaw,
    rho: f64,
    t: f64,
) -> Result<EquilibriumParams, EquilibriumError> {
    check_targets(v, rho, t)?;
    let features = (0..v.len()).map(|i| vec![1.0, v.speed_sq(i)]).collect();
    let dual = Dual {
        law,
        features,
        target: vec![rho, rho * t],
    };
    let mu = dual.solve(rho, 1e-13 * rho * v.max_speed_sq().max(1.0))?;
    let mut params = EquilibriumParams {
        kind: EquilibriumKind::Exponential {
            alpha: mu[0],
            beta: vec![0.0; v.dim()],
            gamma: mu[1],
        },
        law: law.to_string(),
        rho,
        temperature: t,
        momentum: vec![0.0; v.dim()],
    };
    let f = params.state(v, law)?;
    params.momentum = Invariants::of(v, &f).momentum;
    Ok(params)
}

/// Full equilibrium `p(f_i) = α + β·v_i + γ|v_i|²` matching mass, momentum
/// and energy. Needed on sets without central symmetry, where the
/// `β = 0` family cannot carry the momentum of the data.
pub fn solve_equilibrium_with_momentum(
    v: &VelocitySet,
    law: &InteractionLaw,
    rho: f64,
    momentum: &[f64],
    t: f64,
) -> Result<EquilibriumParams, EquilibriumError> {
    check_targets(v, rho, t)?;
    if momentum.len() != v.dim() {
        return Err(EquilibriumError::MomentumDimension {
            got: momentum.len(),
            expected: v.dim(),
        });
    }
    let features = (0..v.len())
        .map(|i| {
            let mut phi = vec![1.0];
            phi.extend(v.velocity(i));
            phi.push(v.speed_sq(i));
            phi
        })
        .collect();
    let mut target = vec![rho];
    target.extend_from_slice(momentum);
    target.push(rho * t);
    let d = v.dim();
    let dual = Dual { law, features, target };
    let mu = dual.solve(rho, 1e-13 * rho * v.max_speed_sq().max(1.0))?;
    let kind = EquilibriumKind::Exponential {
        alpha: mu[0],
        beta: mu[1..=d].to_vec(),
        gamma: mu[d + 1],
    };
    let mut params = EquilibriumParams {
        kind,
        law: law.to_string(),
        rho,
        temperature: t,
        momentum: momentum.to_vec(),
    };
    let f = params.state(v, law)?;
    params.momentum = Invariants::of(v, &f).momentum;
    Ok(params)
}

/// Outcome of [`verify_stationary`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryReport {
    pub f_st: Vec<f64>,
    pub q_sup: f64,
    pub w: f64,
    /// Size of the individual gain and loss terms, used to scale tolerances.
    pub flux_scale: f64,
    pub invariants: Invariants,
    pub mass_error: f64,
    pub temperature_error: f64,
    pub stationary: bool,
    pub moments_match: bool,
    pub pass: bool,
}

/// Evaluates `‖Q(f^st)‖∞`, `W(f^st)` and the moments of `f^st`. Passes when
/// both are below `1e−11` relative to the flux scale and the state carries
/// the mass and temperature it was solved for.
pub fn verify_stationary(
    model: &Model,
    law: &InteractionLaw,
    params: &EquilibriumParams,
) -> Result<StationaryReport, EquilibriumError> {
    let v = &model.velocities;
    let f = params.state(v, law)?;
    law.check_state(&f)?;
    let mut q = vec![0.0; f.len()];
    rhs_into(model, law, &f, &mut q);
    let q_sup = q.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let w = dissipation_unchecked(law, model, &f);

    // every term of F is bounded by the product of two factors times the
    // quantum correction; that is the natural size of the cancellation
    let fmax = f.iter().cloned().fold(0.0, f64::max);
    let correction = match law {
        InteractionLaw::Boltzmann => 1.0,
        InteractionLaw::Wke => 2.0 * fmax,
        _ => (1.0 + fmax).powi(2),
    };
    let mut per_point = vec![0.0; f.len()];
    for r in model.reactions.reactions() {
        let [i, j, k, l] = r.quadruple.indices();
        let size = 2.0 * r.gamma * (f[i] * f[j] + f[k] * f[l]) * correction;
        for idx in [i, j, k, l] {
            per_point[idx] += size;
        }
    }
    let flux_scale = per_point.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let stationary = q_sup <= 1e-11 * flux_scale.max(1.0) && w.abs() <= 1e-11 * flux_scale.max(1.0);

    let invariants = Invariants::of(v, &f);
    let mass_error = (invariants.rho - params.rho).abs() / params.rho;
    let temperature_error = (invariants.temperature - params.temperature).abs() / v.max_speed_sq();
    let moments_match = mass_error <= 1e-11 && temperature_error <= 1e-11;
    Ok(StationaryReport {
        f_st: f,
        q_sup,
        w,
        flux_scale,
        invariants,
        mass_error,
        temperature_error,
        stationary,
        moments_match,
        pass: stationary && moments_match,
    })
}

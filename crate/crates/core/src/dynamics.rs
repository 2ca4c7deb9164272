//! Right-hand side `Q(f)`, time integration and the monotone mild-form
//! iteration for the wave kinetic law.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::interaction::{dissipation_unchecked, InteractionError, InteractionLaw};
use crate::model::{Model, VelocitySet};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Domain(#[from] InteractionError),
    #[error("initial momentum {norm:e} is not zero (tolerance {tol:e})")]
    NonzeroMomentum { norm: f64, tol: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit reached at t = {t}")]
    TooManySteps { t: f64 },
    #[error("invariant drift {drift:e} exceeds tolerance {tol:e} at t = {t}")]
    InvariantDrift { drift: f64, t: f64, tol: f64 },
    #[error("end time must be finite and nonnegative, got {0}")]
    BadEndTime(f64),
    #[error("monotone iteration requires the wave kinetic law, got {0}")]
    LawNotSupported(InteractionLaw),
    #[error("iterate {k} decreased by {by:e} at node {node}; quadrature grid too coarse")]
    NonMonotone { k: usize, node: usize, by: f64 },
    #[error("cannot build a zero-momentum state on this set: {0}")]
    NoZeroMomentumState(String),
}

/// Occupation numbers at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct State {
    pub t: f64,
    pub f: Vec<f64>,
}

impl State {
    pub fn new(f: Vec<f64>) -> Self {
        Self { t: 0.0, f }
    }
}

/// Mass, momentum, energy and temperature, in physical units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariants {
    pub rho: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub temperature: f64,
}

impl Invariants {
    pub fn of(v: &VelocitySet, f: &[f64]) -> Self {
        let mut rho = 0.0;
        let mut energy = 0.0;
        let mut momentum = vec![0.0; v.dim()];
        for (i, &fi) in f.iter().enumerate() {
            rho += fi;
            energy += fi * v.speed_sq(i);
            for (m, vi) in momentum.iter_mut().zip(v.velocity(i)) {
                *m += fi * vi;
            }
        }
        Self {
            rho,
            temperature: energy / rho,
            momentum,
            energy,
        }
    }

    pub fn momentum_norm(&self) -> f64 {
        self.momentum.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn check_len(model: &Model, f: &[f64]) -> Result<(), InteractionError> {
    if f.len() != model.n() {
        return Err(InteractionError::LengthMismatch {
            got: f.len(),
            expected: model.n(),
        });
    }
    Ok(())
}

/// `Q_i(f) = Σ_{j,k,l} Γ_ij^kl F(f_i,f_j;f_k,f_l)`.
pub fn rhs(model: &Model, law: &InteractionLaw, f: &[f64]) -> Result<Vec<f64>, InteractionError> {
    check_len(model, f)?;
    law.check_state(f)?;
    let mut q = vec![0.0; f.len()];
    rhs_into(model, law, f, &mut q);
    Ok(q)
}

/// Unchecked kernel of [`rhs`]; `out` is overwritten.
pub(crate) fn rhs_into(model: &Model, law: &InteractionLaw, f: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for r in model.reactions.reactions() {
        let [i, j, k, l] = r.quadruple.indices();
        let flux = 2.0 * r.gamma * law.f_unchecked(f[i], f[j], f[k], f[l]);
        out[i] += flux;
        out[j] += flux;
        out[k] -= flux;
        out[l] -= flux;
    }
}

/// Gain/loss split of the wave kinetic right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct WkeSplit {
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
    /// `B_i = Σ Γ_ij^kl f_j (f_k + f_l)`, so that `loss_i = f_i B_i`.
    pub loss_rate: Vec<f64>,
}

pub fn wke_split(model: &Model, f: &[f64]) -> Result<WkeSplit, InteractionError> {
    check_len(model, f)?;
    InteractionLaw::Wke.check_state(f)?;
    let n = f.len();
    let mut gain = vec![0.0; n];
    let mut rate = vec![0.0; n];
    for r in model.reactions.reactions() {
        let [i, j, k, l] = r.quadruple.indices();
        let g2 = 2.0 * r.gamma;
        let into_ij = g2 * f[k] * f[l];
        let into_kl = g2 * f[i] * f[j];
        gain[i] += into_ij * (f[i] + f[j]);
        gain[j] += into_ij * (f[i] + f[j]);
        gain[k] += into_kl * (f[k] + f[l]);
        gain[l] += into_kl * (f[k] + f[l]);
        rate[i] += g2 * f[j] * (f[k] + f[l]);
        rate[j] += g2 * f[i] * (f[k] + f[l]);
        rate[k] += g2 * f[l] * (f[i] + f[j]);
        rate[l] += g2 * f[k] * (f[i] + f[j]);
    }
    let loss = f.iter().zip(&rate).map(|(a, b)| a * b).collect();
    Ok(WkeSplit {
        gain,
        loss,
        loss_rate: rate,
    })
}

/// `−¼ Σ_{i,j,k,l} Γ_ij^kl F(f_i,f_j;f_k,f_l)(h_k+h_l−h_i−h_j)`, summed over the
/// expanded tensor. Equals `Σ Q_i h_i`.
pub fn weak_form(model: &Model, law: &InteractionLaw, f: &[f64], h: &[f64]) -> Result<f64, InteractionError> {
    check_len(model, f)?;
    check_len(model, h)?;
    law.check_state(f)?;
    let sum: f64 = model
        .reactions
        .expanded()
        .map(|([i, j, k, l], g)| g * law.f_unchecked(f[i], f[j], f[k], f[l]) * (h[k] + h[l] - h[i] - h[j]))
        .sum();
    Ok(-0.25 * sum)
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub f: Vec<f64>,
    pub invariants: Invariants,
    pub h: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest `|Δρ|/ρ₀` seen over accepted steps.
    pub max_mass_drift: f64,
    /// Largest `|ΔE|/E₀`.
    pub max_energy_drift: f64,
    /// Largest `‖ΔP‖ / (ρ₀√M)`.
    pub max_momentum_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub law: String,
    pub samples: Vec<Sample>,
    pub stats: TrajectoryStats,
    /// `g` of the reaction table and `λ = gρ₀²`.
    pub damping: f64,
    pub lambda: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Smallest and largest `H(t_{k+1}) − H(t_k)` over consecutive samples.
    pub fn h_step_range(&self) -> (f64, f64) {
        self.samples
            .windows(2)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| {
                let d = w[1].h - w[0].h;
                (lo.min(d), hi.max(d))
            })
    }

    /// Writes `t,f_1..f_n,rho,px..,E,H,W` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let Some(first) = self.samples.first() else {
            return Ok(());
        };
        let n = first.f.len();
        let d = first.invariants.momentum.len();
        let mut header = vec!["t".to_owned()];
        header.extend((1..=n).map(|i| format!("f_{i}")));
        header.push("rho".into());
        header.extend(["px", "py", "pz", "pw"].iter().take(d).map(|s| s.to_string()));
        header.extend(["E", "H", "W"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = Vec::with_capacity(n + d + 5);
            row.push(s.t);
            row.extend(&s.f);
            row.push(s.invariants.rho);
            row.extend(&s.invariants.momentum);
            row.extend([s.invariants.energy, s.h, s.w]);
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Where samples are recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// `uniform` evenly spaced samples on `[0, 1/λ]`, then `geometric`
    /// log-spaced samples up to `t_end`.
    Cadence { uniform: usize, geometric: usize },
    /// Explicit increasing sample times (0 is always included).
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    pub min_step: f64,
    pub sampling: Sampling,
    /// Reject initial data with nonzero momentum.
    pub require_zero_momentum: bool,
    /// Fail if any relative invariant drift exceeds this.
    pub drift_tolerance: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-14,
            initial_step: None,
            max_steps: 5_000_000,
            min_step: 1e-14,
            sampling: Sampling::Cadence {
                uniform: 50,
                geometric: 150,
            },
            require_zero_momentum: false,
            drift_tolerance: 1e-10,
        }
    }
}

/// Tolerance for the zero-momentum precondition.
pub fn momentum_tolerance(v: &VelocitySet, rho: f64) -> f64 {
    1e-12 * (rho * v.max_speed_sq().sqrt()).max(1.0)
}

fn sample_times(opts: &IntegrateOptions, t_end: f64, lambda: f64) -> Vec<f64> {
    let mut times = match &opts.sampling {
        Sampling::Times(ts) => ts.iter().copied().filter(|&t| t > 0.0 && t <= t_end).collect(),
        Sampling::Cadence { uniform, geometric } => {
            let switch = if lambda > 0.0 { (1.0 / lambda).min(t_end) } else { t_end };
            let mut ts: Vec<f64> = (1..=*uniform).map(|k| switch * k as f64 / *uniform as f64).collect();
            if t_end > switch && *geometric > 0 {
                let ratio = (t_end / switch).ln() / *geometric as f64;
                ts.extend((1..=*geometric).map(|k| switch * (ratio * k as f64).exp()));
                if let Some(last) = ts.last_mut() {
                    *last = t_end;
                }
            }
            ts
        }
    };
    times.insert(0, 0.0);
    times.dedup_by(|a, b| a <= b);
    if *times.last().unwrap() < t_end {
        times.push(t_end);
    }
    times
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    model: &'a Model,
    law: &'a InteractionLaw,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    err: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a Model, law: &'a InteractionLaw) -> Self {
        let n = model.n();
        Self {
            model,
            law,
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            err: vec![0.0; n],
        }
    }

    /// Attempts one step from `y` (with `k[0] = Q(y)`), writing the candidate
    /// into `out`. Returns the scaled error norm, or `None` when a stage or the
    /// candidate leaves the admissible range.
    fn attempt(&mut self, y: &[f64], h: f64, rtol: f64, atol: f64, out: &mut [f64]) -> Option<f64> {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (r, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[r][i];
                }
                self.stage[i] = y[i] + h * acc;
            }
            if !self.stage.iter().all(|&x| x > 0.0 && self.law.admits(x)) {
                return None;
            }
            let (done, rest) = self.k.split_at_mut(s);
            let _ = done;
            rhs_into(self.model, self.law, &self.stage, &mut rest[0]);
        }
        // stage 6 evaluated at the 5th-order solution (FSAL)
        out.copy_from_slice(&self.stage);
        let mut sum = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (r, coef) in E.iter().enumerate() {
                e += coef * self.k[r][i];
            }
            self.err[i] = h * e;
            let scale = atol + rtol * y[i].abs().max(out[i].abs());
            sum += (self.err[i] / scale).powi(2);
        }
        let _ = C;
        Some((sum / n as f64).sqrt())
    }
}

/// Integrates `df/dt = Q(f)` with an adaptive Dormand–Prince 5(4) pair.
///
/// Steps whose stages or result leave the admissible range are rejected and
/// the step is halved.
pub fn integrate(
    model: &Model,
    law: &InteractionLaw,
    f0: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, DynamicsError> {
    check_len(model, f0)?;
    law.check_state(f0)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(DynamicsError::BadEndTime(t_end));
    }
    let v = &model.velocities;
    let inv0 = Invariants::of(v, f0);
    if opts.require_zero_momentum {
        let tol = momentum_tolerance(v, inv0.rho);
        let norm = inv0.momentum_norm();
        if norm > tol {
            return Err(DynamicsError::NonzeroMomentum { norm, tol });
        }
    }
    let g = model.reactions.damping_constant();
    let lambda = g * inv0.rho * inv0.rho;
    let times = sample_times(opts, t_end, lambda);

    let sample = |t: f64, f: &[f64]| Sample {
        t,
        f: f.to_vec(),
        invariants: Invariants::of(v, f),
        h: law.h_unchecked(f),
        w: dissipation_unchecked(law, model, f),
    };

    let momentum_scale = (inv0.rho * v.max_speed_sq().sqrt()).max(f64::MIN_POSITIVE);
    let mut stats = TrajectoryStats {
        accepted: 0,
        rejected: 0,
        max_mass_drift: 0.0,
        max_energy_drift: 0.0,
        max_momentum_drift: 0.0,
    };

    let mut samples = vec![sample(0.0, f0)];
    let mut stepper = Stepper::new(model, law);
    let mut y = f0.to_vec();
    let mut candidate = vec![0.0; y.len()];
    rhs_into(model, law, &y, &mut stepper.k[0]);
    let mut t = 0.0;
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let qmax = stepper.k[0].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let ymax = y.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if qmax > 0.0 {
            (1e-3 * ymax / qmax).min(t_end.max(1e-12))
        } else {
            t_end.max(1e-12)
        }
    });

    for &target in &times[1..] {
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(DynamicsError::TooManySteps { t });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < opts.min_step && !last {
                return Err(DynamicsError::StepUnderflow { t, h: step });
            }
            match stepper.attempt(&y, step, opts.rtol, opts.atol, &mut candidate) {
                None => {
                    stats.rejected += 1;
                    h = step * 0.5;
                }
                Some(err) if err > 1.0 => {
                    stats.rejected += 1;
                    h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 0.5);
                }
                Some(err) => {
                    stats.accepted += 1;
                    t = if last { target } else { t + step };
                    std::mem::swap(&mut y, &mut candidate);
                    let (first, rest) = stepper.k.split_at_mut(6);
                    first[0].copy_from_slice(&rest[0]);

                    let inv = Invariants::of(v, &y);
                    stats.max_mass_drift = stats.max_mass_drift.max((inv.rho - inv0.rho).abs() / inv0.rho);
                    if inv0.energy > 0.0 {
                        stats.max_energy_drift = stats
                            .max_energy_drift
                            .max((inv.energy - inv0.energy).abs() / inv0.energy);
                    }
                    let dp = inv
                        .momentum
                        .iter()
                        .zip(&inv0.momentum)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    stats.max_momentum_drift = stats.max_momentum_drift.max(dp / momentum_scale);
                    let drift = stats
                        .max_mass_drift
                        .max(stats.max_energy_drift)
                        .max(stats.max_momentum_drift);
                    if drift > opts.drift_tolerance {
                        return Err(DynamicsError::InvariantDrift {
                            drift,
                            t,
                            tol: opts.drift_tolerance,
                        });
                    }
                    let grow = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // a clipped final step says nothing about the natural step size
                    if !last || step >= h {
                        h = step * grow;
                    }
                }
            }
        }
        samples.push(sample(t, &y));
    }

    Ok(Trajectory {
        law: law.to_string(),
        samples,
        stats,
        damping: g,
        lambda,
    })
}

/// `ρ^{−(n−1)} Π_j f_j(0)`, the uniform lower bound implied by the decay of
/// `H = −Σ log f`.
pub fn product_lower_bound(f0: &[f64], rho0: f64) -> f64 {
    let n = f0.len() as f64;
    // in logs to stay finite for larger n
    let log = f0.iter().map(|x| x.ln()).sum::<f64>() - (n - 1.0) * rho0.ln();
    log.exp()
}

/// Checks `f_i(t) ≥ ρ^{−(n−1)} Π_j f_j(0)` for every component.
pub fn lower_bound_check(f0: &[f64], ft: &[f64], rho0: f64) -> bool {
    let bound = product_lower_bound(f0, rho0);
    ft.iter().all(|&x| x >= bound * (1.0 - 1e-12))
}

/// Checks `f_i(0) e^{−λt} ≤ f_i(t) ≤ ρ₀` with `λ = gρ₀²`.
pub fn exponential_bound_check(f0: &[f64], ft: &[f64], t: f64, g: f64) -> bool {
    let rho0: f64 = f0.iter().sum();
    let decay = (-g * rho0 * rho0 * t).exp();
    f0.iter()
        .zip(ft)
        .all(|(&a, &b)| b >= a * decay * (1.0 - 1e-12) && b <= rho0 * (1.0 + 1e-12))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub k_max: usize,
    /// Total number of quadrature intervals on `[0, t_end]`; `None` uses
    /// `max(64, ⌈16 λ t_end⌉)`.
    pub nodes: Option<usize>,
    /// Largest `λ·(window length)`. The iteration is restarted on windows of
    /// this size; see [`picard_solve`].
    pub window: f64,
    /// Stop once the sup-change between iterates is below `tol` times the
    /// sup of the new iterate at the same node.
    pub tol: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            k_max: 200,
            nodes: None,
            window: 1.0,
            tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    pub state: State,
    pub windows: usize,
    /// Iterations per window.
    pub iterations: Vec<usize>,
    pub converged: bool,
    /// `φ^(k)(t)` at the end of the first window, `k = 1..`.
    pub history: Vec<Vec<f64>>,
    /// `max_t ρ[φ^(k)(t)]` over every iterate of every window, and the mass
    /// that bounds it (the initial mass of that window).
    pub max_mass: f64,
    pub mass_bound: f64,
    pub g: f64,
    pub lambda: f64,
    pub intervals: usize,
}

struct Window {
    end: Vec<f64>,
    iterations: usize,
    converged: bool,
    history: Vec<Vec<f64>>,
    max_mass: f64,
}

/// Exact integrals of the two hat functions of an interval of length `dt`
/// against `e^{−λs}`: the weights of `A` at the left and right node.
fn kernel_weights(lambda: f64, dt: f64) -> (f64, f64) {
    let x = lambda * dt;
    if x == 0.0 {
        return (0.5 * dt, 0.5 * dt);
    }
    let w0 = -(-x).exp_m1() / lambda;
    let w1 = if x < 1e-4 {
        dt * (0.5 - x / 3.0 + x * x / 8.0)
    } else {
        (-(-x).exp_m1() - x * (-x).exp()) / (lambda * x)
    };
    (w1, w0 - w1)
}

fn picard_window(
    model: &Model,
    law: &InteractionLaw,
    start: &[f64],
    length: f64,
    intervals: usize,
    g: f64,
    opts: &PicardOptions,
) -> Result<Window, DynamicsError> {
    let n = start.len();
    let rho0: f64 = start.iter().sum();
    let lambda = g * rho0 * rho0;
    let dt = length / intervals as f64;
    let decay = (-lambda * dt).exp();
    let (w_left, w_right) = kernel_weights(lambda, dt);

    let drive = |phi: &[f64], out: &mut [f64]| {
        rhs_into(model, law, phi, out);
        let rho: f64 = phi.iter().sum();
        for (o, p) in out.iter_mut().zip(phi) {
            *o += g * p * rho * rho;
        }
    };

    let mut current = vec![vec![0.0; n]; intervals + 1];
    let mut next = vec![vec![0.0; n]; intervals + 1];
    let mut a_prev = vec![0.0; n];
    let mut a_cur = vec![0.0; n];
    let mut history = Vec::new();
    let mut max_mass: f64 = 0.0;
    let slack = 1e-13 * rho0;

    for k in 1..=opts.k_max {
        next[0].copy_from_slice(start);
        drive(&current[0], &mut a_prev);
        for m in 0..intervals {
            drive(&current[m + 1], &mut a_cur);
            let (head, tail) = next.split_at_mut(m + 1);
            for i in 0..n {
                tail[0][i] = decay * head[m][i] + w_left * a_prev[i] + w_right * a_cur[i];
            }
            std::mem::swap(&mut a_prev, &mut a_cur);
        }

        let mut settled = true;
        for (node, (new, old)) in next.iter().zip(&current).enumerate() {
            for (a, b) in new.iter().zip(old) {
                // also traps NaN
                if a - b < -slack || (a - b).is_nan() {
                    return Err(DynamicsError::NonMonotone { k, node, by: b - a });
                }
                if a - b > opts.tol * a {
                    settled = false;
                }
            }
            max_mass = max_mass.max(new.iter().sum());
        }
        history.push(next[intervals].clone());
        std::mem::swap(&mut current, &mut next);
        if settled {
            return Ok(Window {
                end: current[intervals].clone(),
                iterations: k,
                converged: true,
                history,
                max_mass,
            });
        }
    }
    Ok(Window {
        end: current[intervals].clone(),
        iterations: opts.k_max,
        converged: false,
        history,
        max_mass,
    })
}

/// Solves the wave kinetic system through the damped integral form
/// `φ(t) = f₀e^{−λt} + ∫₀ᵗ e^{−λ(t−τ)} A[φ(τ)] dτ`,
/// `A_i(φ) = Q_i(φ) + gφ_iρ(φ)²`, iterating from `φ^(0) = 0`.
///
/// `A` is interpolated linearly between grid nodes and integrated exactly
/// against the exponential kernel, so every weight is nonnegative: the
/// discrete iterates inherit monotonicity in `k` and the bound `ρ ≤ ρ₀`.
///
/// The fixed point `ρ = ρ₀` of the mass recursion is repelling with factor 3,
/// so over one interval of length `t` rounding grows like `e^{3λt}`. The
/// iteration therefore runs on consecutive windows with `λ·length ≤ window`,
/// each started from the end state of the previous one.
pub fn picard_solve(
    model: &Model,
    law: &InteractionLaw,
    f0: &[f64],
    t_end: f64,
    opts: &PicardOptions,
) -> Result<PicardResult, DynamicsError> {
    if *law != InteractionLaw::Wke {
        return Err(DynamicsError::LawNotSupported(*law));
    }
    check_len(model, f0)?;
    law.check_state(f0)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(DynamicsError::BadEndTime(t_end));
    }
    let rho0: f64 = f0.iter().sum();
    let g = model.reactions.damping_constant();
    let lambda = g * rho0 * rho0;
    let intervals = opts
        .nodes
        .unwrap_or_else(|| 64.max((16.0 * lambda * t_end).ceil() as usize))
        .max(1);
    let windows = ((lambda * t_end / opts.window).ceil() as usize).clamp(1, intervals);
    let per_window = intervals.div_ceil(windows);
    let length = t_end / windows as f64;

    let mut state = f0.to_vec();
    let mut iterations = Vec::with_capacity(windows);
    let mut converged = true;
    let mut history = Vec::new();
    let mut max_mass: f64 = 0.0;
    let mut mass_bound: f64 = 0.0;
    for w in 0..windows {
        let win = picard_window(model, law, &state, length, per_window, g, opts)?;
        mass_bound = mass_bound.max(state.iter().sum());
        max_mass = max_mass.max(win.max_mass);
        iterations.push(win.iterations);
        converged &= win.converged;
        if w == 0 {
            history = win.history;
        }
        state = win.end;
    }

    Ok(PicardResult {
        state: State { t: t_end, f: state },
        windows,
        iterations,
        converged,
        history,
        max_mass,
        mass_bound,
        g,
        lambda,
        intervals: per_window * windows,
    })
}

/// Random positive initial data: `f_i ~ U(0.1, 1)·scale`, then momentum
/// removed. Symmetric sets are symmetrized, `f(v) ← (f(v)+f(−v))/2`; other
/// sets need `±e_k` for every axis, and the momentum is cancelled by adding
/// mass on the opposite axis point.
pub fn random_initial_state(v: &VelocitySet, seed: u64, scale: f64) -> Result<Vec<f64>, DynamicsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<f64> = (0..v.len()).map(|_| rng.gen_range(0.1..1.0) * scale).collect();
    if v.is_symmetric() {
        let orig = f.clone();
        for (i, fi) in f.iter_mut().enumerate() {
            let j = v.antipode(i).expect("symmetric set");
            *fi = 0.5 * (orig[i] + orig[j]);
        }
        return Ok(f);
    }
    let d = v.dim();
    let mut axis_points = Vec::with_capacity(d);
    for axis in 0..d {
        let e = crate::lattice::LatticePoint::unit(d, axis);
        let plus = v.index_of(&e);
        let minus = v.index_of(&-&e);
        match (plus, minus) {
            (Some(p), Some(m)) => axis_points.push((p, m)),
            _ => {
                return Err(DynamicsError::NoZeroMomentumState(format!(
                    "set is not symmetric and lacks ±e_{}",
                    axis + 1
                )))
            }
        }
    }
    // lattice momentum, exact up to rounding of the float sums
    let mut momentum = vec![0.0; d];
    for (i, fi) in f.iter().enumerate() {
        for (m, &c) in momentum.iter_mut().zip(v.points()[i].coords()) {
            *m += fi * c as f64;
        }
    }
    for (axis, &(plus, minus)) in axis_points.iter().enumerate() {
        let p = momentum[axis];
        if p > 0.0 {
            f[minus] += p;
        } else {
            f[plus] -= p;
        }
    }
    Ok(f)
}

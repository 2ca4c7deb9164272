//! Interaction laws `F(x₁,x₂;x₃,x₄) = P(x₃,x₄;x₁,x₂) − P(x₁,x₂;x₃,x₄)`.
//!
//! Every law here admits a strictly increasing `p(x)` with
//! `F · [p(x₃)+p(x₄)−p(x₁)−p(x₂)] ≥ 0`, which is what drives the H-theorem.
//! `I(x)` is an antiderivative of `p`, so `H(f) = Σ I(f_i)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::Model;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InteractionError {
    #[error("argument {value} outside the admissible range of {law} (must lie in (0, {upper}))")]
    OutOfRange {
        law: InteractionLaw,
        value: f64,
        upper: f64,
    },
    #[error("argument {value} is negative or not finite")]
    Negative { value: f64 },
    #[error("unknown interaction law {0:?}; expected boltzmann | nuu-boson | nuu-fermion | anion:ALPHA | wke")]
    UnknownLaw(String),
    #[error("anion parameter must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("state has length {got}, model has {expected} points")]
    LengthMismatch { got: usize, expected: usize },
}

/// Quantum statistics of the NUU law: `θ = +1` or `θ = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    pub fn theta(self) -> f64 {
        match self {
            Self::Boson => 1.0,
            Self::Fermion => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionLaw {
    Boltzmann,
    Nuu(Statistics),
    /// Fractional statistics interpolating bosons (`α → 0`) and fermions (`α → 1`).
    Anion {
        alpha: f64,
    },
    Wke,
}

impl InteractionLaw {
    pub fn anion(alpha: f64) -> Result<Self, InteractionError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self::Anion { alpha })
        } else {
            Err(InteractionError::BadAlpha(alpha))
        }
    }

    pub fn all_families() -> [Self; 5] {
        [
            Self::Boltzmann,
            Self::Nuu(Statistics::Boson),
            Self::Nuu(Statistics::Fermion),
            Self::Anion { alpha: 0.5 },
            Self::Wke,
        ]
    }

    /// Supremum of admissible occupation numbers.
    pub fn upper_bound(&self) -> f64 {
        match self {
            Self::Nuu(Statistics::Fermion) => 1.0,
            Self::Anion { alpha } => 1.0 / alpha,
            _ => f64::INFINITY,
        }
    }

    /// `x ≥ 0` and below the upper bound.
    pub fn admits(&self, x: f64) -> bool {
        x.is_finite() && x >= 0.0 && x < self.upper_bound()
    }

    fn check(&self, x: f64) -> Result<(), InteractionError> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(InteractionError::Negative { value: x });
        }
        if x >= self.upper_bound() {
            return Err(InteractionError::OutOfRange {
                law: *self,
                value: x,
                upper: self.upper_bound(),
            });
        }
        Ok(())
    }

    fn check_positive(&self, x: f64) -> Result<(), InteractionError> {
        self.check(x)?;
        if x == 0.0 {
            return Err(InteractionError::Negative { value: x });
        }
        Ok(())
    }

    /// Checks a whole state: strictly positive and inside the range.
    pub fn check_state(&self, f: &[f64]) -> Result<(), InteractionError> {
        f.iter().try_for_each(|&x| self.check_positive(x))
    }

    /// The factor function `Φ(x)` with `F = x₃x₄Φ(x₁)Φ(x₂) − x₁x₂Φ(x₃)Φ(x₄)`.
    /// Not defined for the wave kinetic law.
    pub fn phi(&self, x: f64) -> Option<f64> {
        match *self {
            Self::Boltzmann => Some(1.0),
            Self::Nuu(s) => Some(1.0 / (1.0 + s.theta() * x)),
            Self::Anion { alpha } => Some(anion_phi(alpha, x)),
            Self::Wke => None,
        }
    }

    /// `F(x₁,x₂;x₃,x₄)` with range checks.
    pub fn f_eval(&self, x1: f64, x2: f64, x3: f64, x4: f64) -> Result<f64, InteractionError> {
        for x in [x1, x2, x3, x4] {
            self.check(x)?;
        }
        Ok(self.f_unchecked(x1, x2, x3, x4))
    }

    #[inline]
    pub(crate) fn f_unchecked(&self, x1: f64, x2: f64, x3: f64, x4: f64) -> f64 {
        match *self {
            Self::Boltzmann => x3 * x4 - x1 * x2,
            Self::Nuu(s) => {
                let t = s.theta();
                x3 * x4 * (1.0 + t * x1) * (1.0 + t * x2) - x1 * x2 * (1.0 + t * x3) * (1.0 + t * x4)
            }
            Self::Anion { alpha } => {
                let phi = |x| anion_phi(alpha, x);
                x3 * x4 * phi(x1) * phi(x2) - x1 * x2 * phi(x3) * phi(x4)
            }
            Self::Wke => x3 * x4 * (x1 + x2) - x1 * x2 * (x3 + x4),
        }
    }

    /// The monotone function `p(x)`, `x > 0`.
    pub fn p_eval(&self, x: f64) -> Result<f64, InteractionError> {
        self.check_positive(x)?;
        Ok(self.p_unchecked(x))
    }

    #[inline]
    pub(crate) fn p_unchecked(&self, x: f64) -> f64 {
        match *self {
            Self::Boltzmann => x.ln(),
            Self::Nuu(s) => (x / (1.0 + s.theta() * x)).ln(),
            Self::Anion { alpha } => x.ln() - anion_phi(alpha, x).ln(),
            Self::Wke => -1.0 / x,
        }
    }

    /// `p'(x)`, strictly positive on the admissible range.
    pub fn p_derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Boltzmann => 1.0 / x,
            Self::Nuu(s) => 1.0 / (x * (1.0 + s.theta() * x)),
            Self::Anion { alpha } => {
                let beta = 1.0 - alpha;
                1.0 / x + alpha * alpha / (1.0 - alpha * x) - beta * beta / (1.0 + beta * x)
            }
            Self::Wke => 1.0 / (x * x),
        }
    }

    /// Inverse of `p`; `None` when `y` is outside the image of `p`.
    pub fn p_inverse(&self, y: f64) -> Option<f64> {
        if !y.is_finite() {
            return None;
        }
        match *self {
            Self::Boltzmann => Some(y.exp()),
            Self::Nuu(Statistics::Boson) => (y < 0.0).then(|| 1.0 / (-y).exp_m1()),
            Self::Nuu(Statistics::Fermion) => Some(1.0 / ((-y).exp() + 1.0)),
            Self::Wke => (y < 0.0).then(|| -1.0 / y),
            Self::Anion { alpha } => Some(invert_increasing(|x| self.p_unchecked(x), y, 1.0 / alpha)),
        }
    }

    /// The H-integrand `I(x)` with `I' = p`.
    pub fn i_eval(&self, x: f64) -> Result<f64, InteractionError> {
        self.check_positive(x)?;
        Ok(self.i_unchecked(x))
    }

    pub(crate) fn i_unchecked(&self, x: f64) -> f64 {
        match *self {
            Self::Boltzmann => x * x.ln() - x,
            Self::Nuu(s) => {
                let t = s.theta();
                let y = 1.0 + t * x;
                x * x.ln() - t * y * y.ln()
            }
            Self::Anion { alpha } => {
                let a = 1.0 - alpha * x;
                let b = 1.0 + (1.0 - alpha) * x;
                x * x.ln() + xlogx(a) - b * b.ln()
            }
            Self::Wke => -x.ln(),
        }
    }

    /// `H(f) = Σ I(f_i)`.
    pub fn h_eval(&self, f: &[f64]) -> Result<f64, InteractionError> {
        self.check_state(f)?;
        Ok(self.h_unchecked(f))
    }

    pub(crate) fn h_unchecked(&self, f: &[f64]) -> f64 {
        f.iter().map(|&x| self.i_unchecked(x)).sum()
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `Φ(x) = (1−αx)^α [1+(1−α)x]^{1−α}`; zero at `x = 1/α`.
fn anion_phi(alpha: f64, x: f64) -> f64 {
    let a = (1.0 - alpha * x).max(0.0);
    a.powf(alpha) * (1.0 + (1.0 - alpha) * x).powf(1.0 - alpha)
}

/// Solves `g(x) = y` for increasing `g` on `(0, upper)` by bisection.
fn invert_increasing(g: impl Fn(f64) -> f64, y: f64, upper: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl fmt::Display for InteractionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Boltzmann => write!(f, "boltzmann"),
            Self::Nuu(Statistics::Boson) => write!(f, "nuu-boson"),
            Self::Nuu(Statistics::Fermion) => write!(f, "nuu-fermion"),
            Self::Anion { alpha } => write!(f, "anion:{alpha}"),
            Self::Wke => write!(f, "wke"),
        }
    }
}

impl FromStr for InteractionLaw {
    type Err = InteractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "boltzmann" => Ok(Self::Boltzmann),
            "nuu-boson" => Ok(Self::Nuu(Statistics::Boson)),
            "nuu-fermion" => Ok(Self::Nuu(Statistics::Fermion)),
            "wke" => Ok(Self::Wke),
            other => match other.strip_prefix("anion:") {
                Some(a) => {
                    let alpha: f64 = a.parse().map_err(|_| InteractionError::UnknownLaw(other.to_owned()))?;
                    Self::anion(alpha)
                }
                None => Err(InteractionError::UnknownLaw(other.to_owned())),
            },
        }
    }
}

/// Entropy dissipation `W(f) = ¼ Σ Γ_ij^kl F(f_i,f_j;f_k,f_l)[p(f_k)+p(f_l)−p(f_i)−p(f_j)]`,
/// so that `dH/dt = −W`. Each canonical reaction accounts for eight
/// identical tensor terms.
pub fn dissipation_w(law: &InteractionLaw, model: &Model, f: &[f64]) -> Result<f64, InteractionError> {
    if f.len() != model.n() {
        return Err(InteractionError::LengthMismatch {
            got: f.len(),
            expected: model.n(),
        });
    }
    law.check_state(f)?;
    Ok(dissipation_unchecked(law, model, f))
}

pub(crate) fn dissipation_unchecked(law: &InteractionLaw, model: &Model, f: &[f64]) -> f64 {
    let p: Vec<f64> = f.iter().map(|&x| law.p_unchecked(x)).collect();
    model
        .reactions
        .active()
        .map(|r| {
            let [i, j, k, l] = r.quadruple.indices();
            let flux = law.f_unchecked(f[i], f[j], f[k], f[l]);
            2.0 * r.gamma * flux * (p[k] + p[l] - p[i] - p[j])
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FERMION: InteractionLaw = InteractionLaw::Nuu(Statistics::Fermion);
    const BOSON: InteractionLaw = InteractionLaw::Nuu(Statistics::Boson);

    #[test]
    fn f_anchors() {
        use InteractionLaw::*;
        assert_eq!(Boltzmann.f_eval(1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(Wke.f_eval(1.0, 2.0, 3.0, 4.0).unwrap(), 22.0);
        assert_eq!(BOSON.f_eval(1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn anion_tends_to_fermion() {
        // the gap closes linearly in 1 − α
        let (a, b, c, d) = (0.2, 0.3, 0.1, 0.4);
        let ff = FERMION.f_eval(a, b, c, d).unwrap();
        let gap = |eps: f64| {
            let anion = InteractionLaw::anion(1.0 - eps).unwrap();
            (anion.f_eval(a, b, c, d).unwrap() - ff).abs()
        };
        assert!(gap(1e-6) < 2e-8);
        assert!(gap(1e-8) < 1e-9);
        let ratio = gap(1e-5) / gap(1e-6);
        assert!((ratio - 10.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn anion_tends_to_boson() {
        let anion = InteractionLaw::anion(1e-9).unwrap();
        let fa = anion.f_eval(0.2, 0.3, 0.1, 0.4).unwrap();
        let fb = BOSON.f_eval(0.2, 0.3, 0.1, 0.4).unwrap();
        assert!((fa - fb).abs() < 1e-8);
    }

    #[test]
    fn p_anchors() {
        assert_eq!(InteractionLaw::Boltzmann.p_eval(1.0).unwrap(), 0.0);
        assert_eq!(InteractionLaw::Wke.p_eval(2.0).unwrap(), -0.5);
        assert_eq!(BOSON.p_eval(1.0).unwrap(), 0.5f64.ln());
    }

    #[test]
    fn h_anchors() {
        let e = std::f64::consts::E;
        assert_eq!(InteractionLaw::Wke.h_eval(&[1.0; 6]).unwrap(), 0.0);
        assert!((InteractionLaw::Wke.h_eval(&[e; 6]).unwrap() + 6.0).abs() < 1e-14);
        assert_eq!(InteractionLaw::Boltzmann.h_eval(&[1.0; 6]).unwrap(), -6.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            FERMION.f_eval(1.0, 0.5, 0.5, 0.5),
            Err(InteractionError::OutOfRange { .. })
        ));
        let anion = InteractionLaw::anion(0.5).unwrap();
        assert!(anion.p_eval(2.0).is_err());
        assert!(anion.p_eval(1.99).is_ok());
        assert!(InteractionLaw::Wke.p_eval(0.0).is_err());
        assert!(InteractionLaw::Boltzmann.h_eval(&[1.0, -1.0]).is_err());
        assert!(BOSON.p_eval(100.0).is_ok());
    }

    #[test]
    fn anion_phi_vanishes_at_boundary() {
        assert_eq!(anion_phi(0.5, 2.0), 0.0);
    }

    #[test]
    fn parsing_round_trips() {
        for law in InteractionLaw::all_families() {
            let back: InteractionLaw = law.to_string().parse().unwrap();
            assert_eq!(back, law);
        }
        assert!("anion:1.5".parse::<InteractionLaw>().is_err());
        assert!("maxwell".parse::<InteractionLaw>().is_err());
    }

    #[test]
    fn p_inverse_inverts() {
        for law in InteractionLaw::all_families() {
            for &x in &[0.05, 0.3, 0.7, 0.95] {
                let y = law.p_eval(x).unwrap();
                let back = law.p_inverse(y).unwrap();
                assert!((back - x).abs() < 1e-12 * (1.0 + x), "{law}: {x} -> {back}");
            }
        }
        assert!(InteractionLaw::Wke.p_inverse(0.5).is_none());
    }

    #[test]
    fn i_derivative_is_p() {
        let eps = 1e-6;
        for law in InteractionLaw::all_families() {
            for &x in &[0.1, 0.4, 0.8] {
                let fd = (law.i_unchecked(x + eps) - law.i_unchecked(x - eps)) / (2.0 * eps);
                assert!((fd - law.p_unchecked(x)).abs() < 1e-7, "{law} at {x}");
                let dp = (law.p_unchecked(x + eps) - law.p_unchecked(x - eps)) / (2.0 * eps);
                assert!(
                    (dp - law.p_derivative(x)).abs() < 1e-5 * dp.abs().max(1.0),
                    "{law} p' at {x}"
                );
            }
        }
    }
}

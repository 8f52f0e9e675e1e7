//! Concentration bounds, average-error formulas and register sizing.
//!
//! Real-valued results are generic over the float type; averages are exact.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fxp::pow2;
use crate::rounding::{semantic_round_probability, RoundingMethod};
use crate::sim::Scalar;
use crate::{Error, Rational, Result};

/// Largest register size tried by [`solve_n_tilde`].
pub const DEFAULT_N_TILDE_CAP: u32 = 126;

fn cast<T: Scalar>(x: f64) -> T {
    T::from(x).expect("f64 converts to the scalar type")
}

/// Base of the exponential in the two-sided Chernoff bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChernoffForm {
    /// `2·exp(−μδ²/3)`.
    #[default]
    NaturalExp,
    /// `2·2^(−μδ²/3)`.
    PowerOfTwo,
}

/// `Pr[|X − μ| ≥ δμ] ≤ 2·exp(−μδ²/3)` for a sum of independent Bernoullis.
pub fn chernoff_failure_probability<T: Scalar>(mu: T, delta: T) -> Result<T> {
    chernoff_failure_probability_with(mu, delta, ChernoffForm::NaturalExp)
}

pub fn chernoff_failure_probability_with<T: Scalar>(mu: T, delta: T, form: ChernoffForm) -> Result<T> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::OutOfRange(format!("delta = {delta:?} not in (0, 1)")));
    }
    if mu < T::zero() {
        return Err(Error::OutOfRange(format!("mu = {mu:?} is negative")));
    }
    let x = mu * delta * delta / cast(3.0);
    let two: T = cast(2.0);
    Ok(match form {
        ChernoffForm::NaturalExp => two * (-x).exp(),
        ChernoffForm::PowerOfTwo => two * (-x).exp2(),
    })
}

/// The `δ` that makes the Chernoff bound equal `alpha` for `N` shots at
/// probability `r`.
pub fn chernoff_delta<T: Scalar>(samples: u64, alpha: T, r: T) -> T {
    (cast::<T>(3.0) * (cast::<T>(2.0) / alpha).ln() / (cast::<T>(samples as f64) * r)).sqrt()
}

fn root_term<T: Scalar>(samples: u64, alpha: T) -> T {
    (cast::<T>(3.0) * (cast::<T>(2.0) / alpha).ln() / cast(samples as f64)).sqrt()
}

/// `ε_RD·√(3 ln(2/α)/N)`: deviation of the sampled estimate that holds with
/// probability at least `1 − α`.
pub fn qr_error_bound<T: Scalar>(samples: u64, alpha: T, eps_rd: T) -> T {
    eps_rd * root_term(samples, alpha)
}

/// Probability error from a rotation with angle error `eps_rot`.
pub fn rotation_bias<T: Scalar>(eps_rot: T) -> T {
    cast::<T>(2.0) * eps_rot + eps_rot * eps_rot
}

/// Bound plus the rotation-bias term `ε_RD·(2ε_rot + ε_rot²)`.
pub fn qr_error_bound_with_bias<T: Scalar>(samples: u64, alpha: T, eps_rd: T, eps_rot: T) -> T {
    qr_error_bound(samples, alpha, eps_rd) + eps_rd * rotation_bias(eps_rot)
}

/// Ratio of the sampled bound to the round-nearest error `2^−(n−p−1)`:
/// `½·√(3 ln(2/α)/N)`.
pub fn error_factor<T: Scalar>(samples: u64, alpha: T) -> T {
    root_term(samples, alpha) / cast(2.0)
}

/// Same ratio against the half-ulp round-nearest error `2^−(n−p+1)`.
pub fn error_factor_half_ulp<T: Scalar>(samples: u64, alpha: T) -> T {
    root_term(samples, alpha) * cast(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvgErrorKind {
    RoundDown,
    SemiRound,
    SemiRoundL(u32),
}

/// Closed-form average error over uniform remainders, in units of `ε_RD`.
pub fn avg_error(kind: AvgErrorKind, m: u32) -> Result<Rational> {
    let p = |k: i64| pow2(k);
    let m_i = m as i64;
    let int = |v: i64| Rational::from_integer(BigInt::from(v));
    match kind {
        AvgErrorKind::RoundDown => {
            if m == 0 {
                return Err(Error::NoRemainderBits);
            }
            Ok((p(m_i) - int(1)) / p(m_i + 1))
        }
        AvgErrorKind::SemiRound => {
            if m < 2 {
                return Err(Error::OutOfRange(format!("semi-rounding average needs m ≥ 2, got {m}")));
            }
            Ok((p(2 * m_i) - int(3) * p(m_i) + int(2)) / (int(3) * p(2 * m_i + 1)))
        }
        AvgErrorKind::SemiRoundL(l) => {
            if m < 2 || l == 0 || l >= m {
                return Err(Error::OutOfRange(format!("need 1 ≤ l ≤ m − 1, got l = {l}, m = {m}")));
            }
            let l = l as i64;
            let num = int(2) * p(2 * m_i - l) - int(3) * p(m_i) - int(8) * p(-l) + int(6);
            Ok(num / (int(3) * p(2 * m_i + l)))
        }
    }
}

/// Method averaged by the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AveragedMethod {
    RoundDown,
    Rounding(RoundingMethod),
}

impl From<AvgErrorKind> for AveragedMethod {
    fn from(k: AvgErrorKind) -> Self {
        match k {
            AvgErrorKind::RoundDown => AveragedMethod::RoundDown,
            AvgErrorKind::SemiRound => AveragedMethod::Rounding(RoundingMethod::SemiRound),
            AvgErrorKind::SemiRoundL(l) => AveragedMethod::Rounding(RoundingMethod::SemiRoundL(l)),
        }
    }
}

/// `(1/2^m)·Σ_r |E[rounded] − x̄|` in units of `ε_RD`, by enumeration.
pub fn brute_force_avg_error(method: AveragedMethod, m: u32) -> Result<Rational> {
    if m == 0 {
        return Err(Error::NoRemainderBits);
    }
    if m > 16 {
        return Err(Error::OutOfRange(format!("enumeration limited to m ≤ 16, got {m}")));
    }
    if let AveragedMethod::Rounding(r) = method {
        r.check(m)?;
    }
    let scale = pow2(-(m as i64));
    let total = (0..1u128 << m)
        .into_par_iter()
        .map(|r| -> Result<Rational> {
            let exact = Rational::from_integer(BigInt::from(r)) * &scale;
            let up = match method {
                AveragedMethod::RoundDown => Rational::zero(),
                AveragedMethod::Rounding(method) => semantic_round_probability(method, r, m)?,
            };
            Ok((up - exact).abs())
        })
        .try_reduce(Rational::zero, |a, b| Ok(a + b))?;
    Ok(total * scale)
}

/// One closed-form versus enumeration comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgErrorRecord {
    pub kind: AvgErrorKind,
    pub m: u32,
    pub closed_form: String,
    pub brute_force: String,
    pub ratio: Option<String>,
    pub equal: bool,
}

/// Compares every closed form with enumeration for `m ≤ max_m` and
/// `l ≤ max_l` wherever the closed form is defined.
pub fn reconcile_avg_errors(max_m: u32, max_l: u32) -> Result<Vec<AvgErrorRecord>> {
    let mut kinds = vec![AvgErrorKind::RoundDown, AvgErrorKind::SemiRound];
    kinds.extend((1..=max_l).map(AvgErrorKind::SemiRoundL));
    let mut out = Vec::new();
    for kind in kinds {
        for m in 1..=max_m {
            let Ok(closed) = avg_error(kind, m) else { continue };
            let brute = brute_force_avg_error(kind.into(), m)?;
            let ratio = (!closed.is_zero()).then(|| (&brute / &closed).to_string());
            out.push(AvgErrorRecord {
                kind,
                m,
                equal: closed == brute,
                closed_form: closed.to_string(),
                brute_force: brute.to_string(),
                ratio,
            });
        }
    }
    Ok(out)
}

/// Target accuracy and sampling parameters for sizing a register.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget<T> {
    pub target_eps: Rational,
    pub alpha: T,
    pub samples: u64,
}

impl<T: Scalar> ErrorBudget<T> {
    pub fn new(target_eps: Rational, alpha: T, samples: u64) -> Result<Self> {
        if !target_eps.is_positive() {
            return Err(Error::OutOfRange("target error must be positive".into()));
        }
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::OutOfRange(format!("alpha = {alpha:?} not in (0, 1)")));
        }
        if samples == 0 {
            return Err(Error::NoSamples);
        }
        Ok(Self { target_eps, alpha, samples })
    }

    /// Target `n/2^(n−p)` and `α = 1/N`.
    pub fn multiplication_default(n: u32, p: u32, samples: u64) -> Result<Self> {
        let target = Rational::from_integer(BigInt::from(n)) * pow2(-(n as i64 - p as i64));
        let alpha = if samples > 1 { cast(1.0 / samples as f64) } else { cast(0.5) };
        Self::new(target, alpha, samples)
    }
}

/// Smallest `ñ ≥ p + 1` with `2^−(ñ−p)·√(3 ln(2/α)/N) ≤ target`.
pub fn solve_n_tilde<T: Scalar>(budget: &ErrorBudget<T>, p: u32) -> Result<u32> {
    solve_n_tilde_capped(budget, p, DEFAULT_N_TILDE_CAP)
}

pub fn solve_n_tilde_capped<T: Scalar>(budget: &ErrorBudget<T>, p: u32, cap: u32) -> Result<u32> {
    let root = root_term(budget.samples, budget.alpha).to_f64().unwrap_or(f64::NAN);
    let target = budget.target_eps.to_f64().unwrap_or(f64::NAN);
    (p + 1..=cap).find(|&n| n_tilde_satisfied(root, target, n, p)).ok_or(Error::NoFeasibleSize { cap })
}

fn n_tilde_satisfied(root: f64, target: f64, n: u32, p: u32) -> bool {
    (-((n - p) as f64)).exp2() * root <= target
}

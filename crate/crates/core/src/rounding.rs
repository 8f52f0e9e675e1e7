//! Rounding circuits and their exact probability oracles.
//!
//! Every circuit shares one layout: `main` (the `n` retained bits), `rem`
//! (the `m` remainder bits), a `flag` qubit that decides the rounding
//! direction, and a `work` pool reused by the comparator, the detectors and
//! the controlled adder. Classical bit 0 receives the measured flag, which is
//! then reset.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::blocks::{self, comparator_ancillas, macro_gate, propagate_ancillas};
use crate::circuit::{Angle, Circuit, Gate, Qubit, RegisterRole};
use crate::fxp::pow2;
use crate::{Error, Rational, Result};

pub const MAIN: &str = "main";
pub const REM: &str = "rem";
pub const FLAG: &str = "flag";
pub const WORK: &str = "work";
pub const UNIFORM: &str = "uniform";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingMethod {
    /// Fair coin on a nonzero remainder.
    Stochastic,
    /// Remainder compared against a uniform register.
    QrComparator,
    /// Remainder loaded into the flag amplitude by a rotation.
    QrRotation,
    /// Only the most significant set remainder bit is rounded.
    SemiRound,
    /// The `l` bits starting at the most significant set bit are rounded.
    SemiRoundL(u32),
}

impl fmt::Display for RoundingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundingMethod::Stochastic => f.write_str("stochastic"),
            RoundingMethod::QrComparator => f.write_str("qr-comparator"),
            RoundingMethod::QrRotation => f.write_str("qr-rotation"),
            RoundingMethod::SemiRound => f.write_str("qsr"),
            RoundingMethod::SemiRoundL(l) => write!(f, "qsr-l{l}"),
        }
    }
}

impl FromStr for RoundingMethod {
    type Err = Error;

    /// Accepts `stochastic`, `qr-comparator`, `qr-rotation`, `qsr` and
    /// `qsr-l<l>`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "stochastic" => RoundingMethod::Stochastic,
            "qr-comparator" | "qr" => RoundingMethod::QrComparator,
            "qr-rotation" => RoundingMethod::QrRotation,
            "qsr" | "semi-round" => RoundingMethod::SemiRound,
            other => {
                let l = other
                    .strip_prefix("qsr-l")
                    .and_then(|l| l.parse::<u32>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown rounding method `{other}`")))?;
                RoundingMethod::SemiRoundL(l)
            }
        })
    }
}

impl RoundingMethod {
    pub fn check(&self, m: u32) -> Result<()> {
        if m == 0 {
            return Err(Error::NoRemainderBits);
        }
        if let RoundingMethod::SemiRoundL(l) = self {
            if *l == 0 || *l > m {
                return Err(Error::Unsupported(format!("l = {l} needs 1 ≤ l ≤ m = {m}")));
            }
        }
        Ok(())
    }
}

/// Exact probability that `method` rounds up for the given remainder.
pub fn semantic_round_probability(method: RoundingMethod, remainder_bits: u128, m: u32) -> Result<Rational> {
    method.check(m)?;
    if m < 128 && remainder_bits >> m != 0 {
        return Err(Error::ValueOutOfRange { bits: remainder_bits, width: m });
    }
    if remainder_bits == 0 {
        return Ok(Rational::zero());
    }
    let scale = pow2(-(m as i64));
    let top = 127 - remainder_bits.leading_zeros();
    let window = |l: u32| -> Rational {
        let low = top.saturating_sub(l - 1);
        let kept = (remainder_bits >> low) << low;
        Rational::from_integer(BigInt::from(kept)) * &scale
    };
    Ok(match method {
        RoundingMethod::Stochastic => Rational::new(1.into(), 2.into()),
        RoundingMethod::QrComparator | RoundingMethod::QrRotation => {
            Rational::from_integer(BigInt::from(remainder_bits)) * scale
        }
        RoundingMethod::SemiRound => window(1),
        RoundingMethod::SemiRoundL(l) => window(l),
    })
}

/// Qubits in the shared pool: enough for the controlled adder and for the
/// largest preparation stage.
fn work_size(method: RoundingMethod, n: usize, m: usize) -> usize {
    let adder = 2 * n + propagate_ancillas(n);
    let prep = match method {
        RoundingMethod::QrComparator => comparator_ancillas(m),
        RoundingMethod::Stochastic => m.saturating_sub(1),
        RoundingMethod::SemiRoundL(l) => l as usize - 1,
        _ => 0,
    };
    adder.max(prep)
}

fn ctrl_add_gate(n: usize, flag: Qubit, main: &[Qubit], work: &[Qubit]) -> Gate {
    let mut ops = vec![flag];
    ops.extend_from_slice(main);
    ops.extend_from_slice(&work[..2 * n + propagate_ancillas(n)]);
    macro_gate(blocks::CTRL_ADD_CONST, vec![n as i64, 1], ops)
}

fn arcsin_sqrt(p: Rational) -> Angle {
    Angle::ArcsinSqrt(p)
}

/// Builds the rounding circuit for an `(n+m)`-bit value.
pub fn build(method: RoundingMethod, n: usize, m: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::Unsupported("n must be at least 1".into()));
    }
    method.check(m as u32)?;
    let mut c = Circuit::new();
    let main = c.add_register(MAIN, n, RegisterRole::Data);
    let rem = c.add_register(REM, m, RegisterRole::Data);
    let flag = c.add_register(FLAG, 1, RegisterRole::Additional)[0];
    let bit = c.add_cbit();
    match method {
        RoundingMethod::QrComparator => {
            let uniform = c.add_register(UNIFORM, m, RegisterRole::Additional);
            let work = c.add_register(WORK, work_size(method, n, m), RegisterRole::Ancilla);
            for &q in &uniform {
                c.add(Gate::H(q));
            }
            let mut ops = uniform.clone();
            ops.extend_from_slice(&rem);
            ops.push(flag);
            ops.extend_from_slice(&work[..comparator_ancillas(m)]);
            c.add(macro_gate(blocks::COMPARATOR, vec![m as i64], ops));
            c.add(ctrl_add_gate(n, flag, &main, &work));
        }
        RoundingMethod::QrRotation => {
            let work = c.add_register(WORK, work_size(method, n, m), RegisterRole::Ancilla);
            let mut ops = rem.clone();
            ops.push(flag);
            c.add(macro_gate(blocks::PHASE_LOAD, vec![m as i64], ops));
            c.add(ctrl_add_gate(n, flag, &main, &work));
        }
        RoundingMethod::Stochastic => {
            let coin = c.add_register("coin", 1, RegisterRole::Ancilla)[0];
            let nz = c.add_register("nonzero", 1, RegisterRole::Ancilla)[0];
            let work = c.add_register(WORK, work_size(method, n, m), RegisterRole::Ancilla);
            // nz = OR(rem) as NOT(AND(NOT rem)) over a Toffoli ladder
            let mut ladder = Vec::new();
            for &q in &rem {
                ladder.push(Gate::X(q));
            }
            let mut acc = rem[0];
            for (k, &q) in rem.iter().enumerate().skip(1) {
                ladder.push(Gate::Toffoli { controls: [acc, q], target: work[k - 1] });
                acc = work[k - 1];
            }
            for g in &ladder {
                c.add(g.clone());
            }
            c.add(Gate::Cnot { control: acc, target: nz });
            c.add(Gate::X(nz));
            for g in ladder.iter().rev() {
                c.add(g.clone());
            }
            c.add(Gate::H(coin));
            c.add(Gate::Toffoli { controls: [coin, nz], target: flag });
            c.add(ctrl_add_gate(n, flag, &main, &work));
        }
        RoundingMethod::SemiRound | RoundingMethod::SemiRoundL(_) => {
            let l = match method {
                RoundingMethod::SemiRoundL(l) => l as usize,
                _ => 1,
            };
            let detect = c.add_register("detect", (2 * m).saturating_sub(3), RegisterRole::Ancilla);
            let work = c.add_register(WORK, work_size(method, n, m), RegisterRole::Ancilla);
            semi_round_loading(&mut c, &rem, &detect, &work, flag, l, m);
            c.add(ctrl_add_gate(n, flag, &main, &work));
        }
    }
    c.add(Gate::Measure { target: flag, bit });
    c.add(Gate::ConditionalX { target: flag, bit });
    Ok(c)
}

/// Leading-one detection ladder followed by one controlled rotation per
/// position (and per pattern of the `l − 1` bits below it).
///
/// `d_{m−1}` is the top remainder bit itself; `d_{m−2}` is one Toffoli on the
/// inverted top bit; below that each position uses a pair: `e_k` (all bits
/// above are zero) and `d_k = e_k ∧ x_k`. Each processed bit is inverted so
/// the next `e` can be chained from it.
fn semi_round_loading(
    c: &mut Circuit,
    rem: &[Qubit],
    detect: &[Qubit],
    scratch: &[Qubit],
    flag: Qubit,
    l: usize,
    m: usize,
) {
    let mut next = detect.iter().copied();
    let mut e_prev: Option<Qubit> = None;
    for k in (0..m).rev() {
        let d = if k == m - 1 {
            rem[k]
        } else if k == m - 2 {
            let d = next.next().unwrap();
            c.add(Gate::Toffoli { controls: [rem[m - 1], rem[k]], target: d });
            d
        } else {
            let e = next.next().unwrap();
            let above = match e_prev {
                None => [rem[m - 1], rem[m - 2]],
                Some(prev) => [prev, rem[k + 1]],
            };
            c.add(Gate::Toffoli { controls: above, target: e });
            e_prev = Some(e);
            let d = next.next().unwrap();
            c.add(Gate::Toffoli { controls: [e, rem[k]], target: d });
            d
        };
        load_position(c, rem, scratch, flag, d, k, l, m);
        if k > 0 {
            c.add(Gate::X(rem[k]));
        }
    }
}

/// Rotations for leading position `k`, one per pattern of the bits below it
/// inside the window.
#[allow(clippy::too_many_arguments)]
fn load_position(
    c: &mut Circuit,
    rem: &[Qubit],
    scratch: &[Qubit],
    flag: Qubit,
    d: Qubit,
    k: usize,
    l: usize,
    m: usize,
) {
    let below = (l - 1).min(k);
    let scale = pow2(-(m as i64));
    for pattern in 0..1u64 << below {
        // pattern bit s-1 is the value of rem[k - s]
        let mut kept = 1u128 << k;
        for s in 1..=below {
            if (pattern >> (s - 1)) & 1 == 1 {
                kept |= 1 << (k - s);
            }
        }
        let angle = arcsin_sqrt(Rational::from_integer(BigInt::from(kept)) * &scale);
        let mut compute = Vec::new();
        let mut acc = d;
        for s in 1..=below {
            let q = rem[k - s];
            let zero = (pattern >> (s - 1)) & 1 == 0;
            if zero {
                compute.push(Gate::X(q));
            }
            compute.push(Gate::Toffoli { controls: [acc, q], target: scratch[s - 1] });
            if zero {
                compute.push(Gate::X(q));
            }
            acc = scratch[s - 1];
        }
        for g in &compute {
            c.add(g.clone());
        }
        c.add(Gate::Cry { control: acc, target: flag, angle });
        for g in compute.iter().rev() {
            c.add(g.clone());
        }
    }
}

/// Initial basis state for a rounding circuit holding `value`.
pub fn initial_state(c: &Circuit, value: &crate::fxp::ExtendedValue) -> Result<u64> {
    let main = c.reg(MAIN);
    let rem = c.reg(REM);
    if main.len as u32 != value.format.n() || rem.len as u32 != value.m {
        return Err(Error::InvalidCircuit(format!(
            "circuit is built for n={}, m={} but value has n={}, m={}",
            main.len,
            rem.len,
            value.format.n(),
            value.m
        )));
    }
    if c.num_qubits() > 64 {
        return Err(Error::QubitCap { required: c.num_qubits(), cap: 64 });
    }
    Ok(((value.retained_bits() as u64) << main.start) | ((value.remainder_bits() as u64) << rem.start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{expand, Regime};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(semantic_round_probability(RoundingMethod::SemiRound, 0b11, 2).unwrap(), q(1, 2));
        assert_eq!(semantic_round_probability(RoundingMethod::QrComparator, 0b101, 3).unwrap(), q(5, 8));
        assert_eq!(semantic_round_probability(RoundingMethod::Stochastic, 0b001, 3).unwrap(), q(1, 2));
        assert_eq!(semantic_round_probability(RoundingMethod::Stochastic, 0, 3).unwrap(), q(0, 1));
        assert_eq!(semantic_round_probability(RoundingMethod::SemiRoundL(2), 0b0111, 4).unwrap(), q(6, 16));
        for m in 1..=6u32 {
            for r in 0..1u128 << m {
                assert_eq!(
                    semantic_round_probability(RoundingMethod::SemiRoundL(m), r, m).unwrap(),
                    semantic_round_probability(RoundingMethod::QrRotation, r, m).unwrap()
                );
            }
        }
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        assert!(semantic_round_probability(RoundingMethod::QrComparator, 4, 2).is_err());
        assert_eq!(semantic_round_probability(RoundingMethod::QrComparator, 0, 0), Err(Error::NoRemainderBits));
        assert!(semantic_round_probability(RoundingMethod::SemiRoundL(3), 1, 2).is_err());
        assert!(build(RoundingMethod::SemiRoundL(0), 2, 2).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in [
            RoundingMethod::Stochastic,
            RoundingMethod::QrComparator,
            RoundingMethod::QrRotation,
            RoundingMethod::SemiRound,
            RoundingMethod::SemiRoundL(3),
        ] {
            assert_eq!(m.to_string().parse::<RoundingMethod>().unwrap(), m);
        }
        assert!("nearest".parse::<RoundingMethod>().is_err());
    }

    #[test]
    fn circuits_expand_and_fit() {
        for method in [
            RoundingMethod::Stochastic,
            RoundingMethod::QrComparator,
            RoundingMethod::QrRotation,
            RoundingMethod::SemiRound,
            RoundingMethod::SemiRoundL(2),
        ] {
            for m in 2..=4 {
                let c = build(method, 3, m).unwrap();
                let e = expand(&c, Regime::Ft).unwrap();
                assert!(e.gates().iter().all(|g| !matches!(g, Gate::Cswap { .. })));
                assert_eq!(e.num_qubits(), c.num_qubits());
            }
        }
    }

    #[test]
    fn semi_round_ladder_counts() {
        for m in 2..=8usize {
            let c = build(RoundingMethod::SemiRound, 2, m).unwrap();
            let before_add: Vec<&Gate> = c.gates().iter().take_while(|g| !matches!(g, Gate::Macro { .. })).collect();
            let toffolis = before_add.iter().filter(|g| matches!(g, Gate::Toffoli { .. })).count();
            let crys = before_add.iter().filter(|g| matches!(g, Gate::Cry { .. })).count();
            assert_eq!(toffolis, 2 * m - 3);
            assert_eq!(crys, m);
        }
    }
}

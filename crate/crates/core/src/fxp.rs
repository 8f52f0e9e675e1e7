//! Unsigned fixed-point values with an exact remainder.
//!
//! Bit 0 is always the least significant bit. An [`ExtendedValue`] holds the
//! `n` retained bits followed by `m` remainder bits, so its exact value is
//! `bits * 2^-(n - p + m)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Rational, Result};

/// Largest supported `n + m`.
pub const MAX_WIDTH: u32 = 126;

/// `2^k` as an exact rational, for any sign of `k`.
pub fn pow2(k: i64) -> Rational {
    let mag = BigInt::one() << k.unsigned_abs();
    if k >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new(BigInt::one(), mag)
    }
}

/// Fixed-point layout: `n` total bits of which `p` are integer bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxFormat {
    n: u32,
    p: u32,
}

impl FxFormat {
    pub fn new(n: u32, p: u32) -> Result<Self> {
        if n == 0 || p > n || n > MAX_WIDTH {
            return Err(Error::InvalidFormat { n, p });
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn frac_bits(&self) -> u32 {
        self.n - self.p
    }

    /// Value of one unit in the last place, `2^-(n-p)`.
    pub fn ulp(&self) -> Rational {
        pow2(-(self.frac_bits() as i64))
    }

    /// Round-nearest error constant as printed alongside the truncation bound,
    /// `2^-(n-p-1)`.
    pub fn eps_rn_stated(&self) -> Rational {
        pow2(1 - self.frac_bits() as i64)
    }

    /// Conventional half-ulp round-nearest bound, `2^-(n-p+1)`.
    pub fn eps_rn_half_ulp(&self) -> Rational {
        pow2(-(self.frac_bits() as i64) - 1)
    }

    pub fn max_bits(&self) -> u128 {
        low_mask(self.n)
    }
}

fn low_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// An `n`-bit fixed-point value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedValue {
    pub format: FxFormat,
    pub bits: u128,
}

impl FixedValue {
    pub fn new(format: FxFormat, bits: u128) -> Result<Self> {
        if bits > format.max_bits() {
            return Err(Error::ValueOutOfRange { bits, width: format.n });
        }
        Ok(Self { format, bits })
    }

    pub fn value(&self) -> Rational {
        Rational::from_integer(BigInt::from(self.bits)) * self.format.ulp()
    }
}

/// An `(n+m)`-bit value: `n` retained bits and `m` remainder bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtendedValue {
    pub format: FxFormat,
    pub m: u32,
    pub bits: u128,
}

impl ExtendedValue {
    pub fn new(format: FxFormat, m: u32, bits: u128) -> Result<Self> {
        let width = format.n + m;
        if width > MAX_WIDTH {
            return Err(Error::OutOfRange(format!("n + m = {width} exceeds {MAX_WIDTH}")));
        }
        if bits > low_mask(width) {
            return Err(Error::ValueOutOfRange { bits, width });
        }
        Ok(Self { format, m, bits })
    }

    /// Builds the value from its retained part and its remainder part.
    pub fn from_parts(format: FxFormat, m: u32, retained: u128, remainder: u128) -> Result<Self> {
        if retained > format.max_bits() {
            return Err(Error::ValueOutOfRange { bits: retained, width: format.n });
        }
        if remainder > low_mask(m) {
            return Err(Error::ValueOutOfRange { bits: remainder, width: m });
        }
        Self::new(format, m, (retained << m) | remainder)
    }

    pub fn width(&self) -> u32 {
        self.format.n + self.m
    }

    /// The integer `x̄_r` formed by the low `m` bits.
    pub fn remainder_bits(&self) -> u128 {
        self.bits & low_mask(self.m)
    }

    /// The retained `n` bits, i.e. the truncated value `⌊x⌋`.
    pub fn retained_bits(&self) -> u128 {
        self.bits >> self.m
    }

    pub fn floor(&self) -> FixedValue {
        FixedValue { format: self.format, bits: self.retained_bits() }
    }

    /// Exact value `bits * 2^-(n-p+m)`.
    pub fn value(&self) -> Rational {
        Rational::from_integer(BigInt::from(self.bits)) * pow2(-((self.format.frac_bits() + self.m) as i64))
    }

    /// `⌊x⌋ + ulp`, or a saturation error when the register is all ones.
    pub fn ceil_step(&self) -> Result<FixedValue> {
        let up = self.retained_bits() + 1;
        if up > self.format.max_bits() {
            return Err(Error::Saturation { n: self.format.n });
        }
        Ok(FixedValue { format: self.format, bits: up })
    }
}

/// Remainder `r = x̄_r / 2^m`, exact and in `[0, 1)`.
pub fn remainder(v: &ExtendedValue) -> Result<Rational> {
    if v.m == 0 {
        return Err(Error::NoRemainderBits);
    }
    Ok(Rational::from_integer(BigInt::from(v.remainder_bits())) * pow2(-(v.m as i64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingMode {
    Down,
    Up,
    /// Nearest, ties (`r = 1/2`) round up.
    Nearest,
    /// Up or down with probability 1/2 each when `r > 0`.
    Stochastic,
    /// Up with probability `r`.
    ExpectedLoad,
}

impl RoundingMode {
    fn name(&self) -> &'static str {
        match self {
            RoundingMode::Down => "down",
            RoundingMode::Up => "up",
            RoundingMode::Nearest => "nearest",
            RoundingMode::Stochastic => "stochastic",
            RoundingMode::ExpectedLoad => "expected-load",
        }
    }
}

/// Rounds `v` to its `n`-bit format. `rng` is only consulted by the two
/// randomized modes.
pub fn classical_round<R: Rng + ?Sized>(
    v: &ExtendedValue,
    mode: RoundingMode,
    rng: Option<&mut R>,
) -> Result<FixedValue> {
    let rem = v.remainder_bits();
    let half = if v.m == 0 { 0 } else { 1u128 << (v.m - 1) };
    let go_up = match mode {
        RoundingMode::Down => false,
        RoundingMode::Up => rem > 0,
        RoundingMode::Nearest => v.m > 0 && rem >= half,
        RoundingMode::Stochastic => {
            let rng = rng.ok_or(Error::MissingRng(mode.name()))?;
            rem > 0 && rng.gen_bool(0.5)
        }
        RoundingMode::ExpectedLoad => {
            let rng = rng.ok_or(Error::MissingRng(mode.name()))?;
            // Draw a uniform m-bit integer and compare, which keeps the
            // probability exactly x̄_r / 2^m.
            rem > 0 && uniform_below_pow2(rng, v.m) < rem
        }
    };
    if go_up {
        v.ceil_step()
    } else {
        Ok(v.floor())
    }
}

fn uniform_below_pow2<R: Rng + ?Sized>(rng: &mut R, bits: u32) -> u128 {
    let raw: u128 = rng.gen();
    raw & low_mask(bits)
}

/// Exact outcome distribution of expected-value loading: `(probability, value)`.
pub fn expected_load_distribution(v: &ExtendedValue) -> Result<Vec<(Rational, FixedValue)>> {
    let r = remainder(v)?;
    if r.is_zero() {
        return Ok(vec![(Rational::one(), v.floor())]);
    }
    Ok(vec![(Rational::one() - &r, v.floor()), (r, v.ceil_step()?)])
}

/// Sample estimate `x_QR = (X/N) * ulp + floor`.
pub fn estimate_from_samples(round_ups: u64, samples: u64, eps_rd: &Rational, floor: &Rational) -> Result<Rational> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if round_ups > samples {
        return Err(Error::OutOfRange(format!("X = {round_ups} exceeds N = {samples}")));
    }
    Ok(Rational::new(BigInt::from(round_ups), BigInt::from(samples)) * eps_rd + floor)
}

impl fmt::Display for ExtendedValue {
    /// `<int bits>.<frac bits>|<remainder bits>`, most significant bit first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.width();
        let digits: String = (0..width).rev().map(|i| if (self.bits >> i) & 1 == 1 { '1' } else { '0' }).collect();
        let p = self.format.p as usize;
        let n = self.format.n as usize;
        write!(f, "{}.{}|{}", &digits[..p], &digits[p..n], &digits[n..])
    }
}

impl FromStr for ExtendedValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (fixed, rem) = match s.split_once('|') {
            Some((a, b)) => (a, b),
            None => (s, ""),
        };
        let (int, frac) = fixed.split_once('.').ok_or_else(|| Error::Parse(format!("missing '.' in `{s}`")))?;
        let all = format!("{int}{frac}{rem}");
        if let Some(c) = all.chars().find(|c| *c != '0' && *c != '1') {
            return Err(Error::Parse(format!("unexpected character `{c}` in `{s}`")));
        }
        let p = int.len() as u32;
        let n = p + frac.len() as u32;
        let format = FxFormat::new(n, p)?;
        let m = rem.len() as u32;
        if n + m > MAX_WIDTH {
            return Err(Error::Parse(format!("`{s}` is wider than {MAX_WIDTH} bits")));
        }
        let bits =
            if all.is_empty() { 0 } else { u128::from_str_radix(&all, 2).map_err(|e| Error::Parse(e.to_string()))? };
        ExtendedValue::new(format, m, bits)
    }
}

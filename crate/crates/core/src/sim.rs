//! Sparse statevector simulation with exact branch enumeration over
//! mid-circuit measurements, and a seeded counter-based sampler.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, ToPrimitive};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::qr_error_bound;
use crate::blocks::PHASE_LOAD;
use crate::circuit::{expand, Angle, Circuit, Gate, Qubit, Regime, RegisterRole};
use crate::fxp::{estimate_from_samples, ExtendedValue};
use crate::rounding::{self, RoundingMethod, MAIN};
use crate::{Error, Rational, Result};

/// Default simulator width limit.
pub const DEFAULT_QUBIT_CAP: usize = 24;
/// Sampling result schema version.
pub const SAMPLE_SCHEMA_VERSION: u32 = 1;

const SAMPLE_CHUNK: u64 = 1 << 16;

pub trait Scalar: Float + Debug + Send + Sync + 'static {}
impl<T: Float + Debug + Send + Sync + 'static> Scalar for T {}

fn cast<T: Scalar>(x: f64) -> T {
    T::from(x).expect("f64 converts to the scalar type")
}

/// Amplitudes of the computational basis states with nonzero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    qubits: usize,
    amps: BTreeMap<u64, Complex<T>>,
}

impl<T: Scalar> StateVector<T> {
    pub fn basis(qubits: usize, index: u64) -> Result<Self> {
        if qubits > 64 || (qubits < 64 && index >> qubits != 0) {
            return Err(Error::OutOfRange(format!("basis index {index} for {qubits} qubits")));
        }
        let mut amps = BTreeMap::new();
        amps.insert(index, Complex::new(T::one(), T::zero()));
        Ok(Self { qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, index: u64) -> Complex<T> {
        self.amps.get(&index).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (u64, Complex<T>)> + '_ {
        self.amps.iter().map(|(i, a)| (*i, *a))
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// Probability that qubit `q` reads 1.
    pub fn probability_one(&self, q: Qubit) -> T {
        self.amps.iter().filter(|(i, _)| (*i >> q) & 1 == 1).fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr())
    }

    fn permute(&mut self, f: impl Fn(u64) -> u64) {
        let old = std::mem::take(&mut self.amps);
        self.amps = old.into_iter().map(|(i, a)| (f(i), a)).collect();
    }

    /// Applies a real 2x2 rotation `[[c, -s], [s, c]]` on `q` wherever
    /// `angle_at(index)` returns an angle.
    fn rotate(&mut self, q: Qubit, angle_at: impl Fn(u64) -> Option<f64>) {
        let bit = 1u64 << q;
        let mut out: BTreeMap<u64, Complex<T>> = BTreeMap::new();
        for (&i, &a) in &self.amps {
            match angle_at(i) {
                None => bump(&mut out, i, a),
                Some(theta) => {
                    let c: T = cast((theta / 2.0).cos());
                    let s: T = cast((theta / 2.0).sin());
                    let (i0, i1) = (i & !bit, i | bit);
                    if i & bit == 0 {
                        bump(&mut out, i0, a * c);
                        bump(&mut out, i1, a * s);
                    } else {
                        bump(&mut out, i0, -(a * s));
                        bump(&mut out, i1, a * c);
                    }
                }
            }
        }
        self.amps = out;
        self.prune();
    }

    fn prune(&mut self) {
        let tiny: T = cast(1e-28);
        self.amps.retain(|_, a| a.norm_sqr() > tiny);
    }

    /// Applies a unitary gate (or the semantic loading macro).
    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        let set = |i: u64, q: Qubit| (i >> q) & 1 == 1;
        match g {
            Gate::X(q) => {
                let q = *q;
                self.permute(|i| i ^ (1 << q))
            }
            Gate::Cnot { control, target } => {
                let (c, t) = (*control, *target);
                self.permute(|i| if set(i, c) { i ^ (1 << t) } else { i })
            }
            Gate::Toffoli { controls: [x, y], target } => {
                let (x, y, t) = (*x, *y, *target);
                self.permute(|i| if set(i, x) && set(i, y) { i ^ (1 << t) } else { i })
            }
            Gate::Swap(a, b) => {
                let (a, b) = (*a, *b);
                self.permute(|i| swap_bits(i, a, b))
            }
            Gate::Cswap { control, a, b } => {
                let (c, a, b) = (*control, *a, *b);
                self.permute(|i| if set(i, c) { swap_bits(i, a, b) } else { i })
            }
            Gate::H(q) => self.hadamard(*q),
            Gate::Ry { target, angle } => {
                let theta = angle.radians();
                self.rotate(*target, |_| Some(theta))
            }
            Gate::Cry { control, target, angle } => {
                let (c, theta) = (*control, angle.radians());
                self.rotate(*target, |i| set(i, c).then_some(theta))
            }
            Gate::Macro { name, params, operands } if name == PHASE_LOAD => {
                let m = params.first().copied().unwrap_or(0) as usize;
                if operands.len() != m + 1 {
                    return Err(Error::InvalidGate(format!("{PHASE_LOAD} expects {} operands", m + 1)));
                }
                let (rem, flag) = (operands[..m].to_vec(), operands[m]);
                let scale = (m as f64).exp2();
                self.rotate(flag, |i| {
                    let v = rem.iter().enumerate().map(|(k, q)| ((i >> q) & 1) << k).sum::<u64>();
                    (v > 0).then(|| {
                        let q = crate::Rational::new((v as i64).into(), (scale as i64).into());
                        Angle::ArcsinSqrt(q).radians()
                    })
                })
            }
            other => return Err(Error::InvalidGate(format!("{} is not a unitary gate", other.kind()))),
        }
        Ok(())
    }

    fn hadamard(&mut self, q: Qubit) {
        let bit = 1u64 << q;
        let h: T = cast(std::f64::consts::FRAC_1_SQRT_2);
        let mut out: BTreeMap<u64, Complex<T>> = BTreeMap::new();
        for (&i, &a) in &self.amps {
            let (i0, i1) = (i & !bit, i | bit);
            let sign = if i & bit == 0 { T::one() } else { -T::one() };
            bump(&mut out, i0, a * h);
            bump(&mut out, i1, a * h * sign);
        }
        self.amps = out;
        self.prune();
    }

    /// Projects qubit `q` onto `outcome` and renormalizes. Returns the
    /// probability of that outcome (zero leaves an empty state).
    pub fn project(&mut self, q: Qubit, outcome: bool) -> T {
        self.amps.retain(|i, _| ((i >> q) & 1 == 1) == outcome);
        let p = self.norm_sqr();
        if p > T::zero() {
            let s = p.sqrt();
            for a in self.amps.values_mut() {
                *a = *a / s;
            }
        }
        p
    }
}

fn bump<T: Scalar>(out: &mut BTreeMap<u64, Complex<T>>, k: u64, v: Complex<T>) {
    let e = out.entry(k).or_insert_with(|| Complex::new(T::zero(), T::zero()));
    *e = *e + v;
}

fn swap_bits(i: u64, a: Qubit, b: Qubit) -> u64 {
    let (x, y) = ((i >> a) & 1, (i >> b) & 1);
    if x == y {
        i
    } else {
        i ^ (1 << a) ^ (1 << b)
    }
}

/// One measurement history: its probability, the classical bits it wrote and
/// the normalized post-measurement state.
#[derive(Debug, Clone)]
pub struct Branch<T> {
    pub probability: T,
    pub cbits: u64,
    pub state: StateVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Simulator {
    pub qubit_cap: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Self { qubit_cap: DEFAULT_QUBIT_CAP }
    }
}

impl Simulator {
    pub fn with_cap(qubit_cap: usize) -> Self {
        Self { qubit_cap: qubit_cap.min(64) }
    }

    fn check(&self, c: &Circuit) -> Result<()> {
        if c.num_qubits() > self.qubit_cap {
            return Err(Error::QubitCap { required: c.num_qubits(), cap: self.qubit_cap });
        }
        if c.num_cbits() > 64 {
            return Err(Error::Unsupported("more than 64 classical bits".into()));
        }
        Ok(())
    }

    /// Runs the circuit from a basis state, splitting on every measurement.
    pub fn run<T: Scalar>(&self, c: &Circuit, initial: u64) -> Result<Vec<Branch<T>>> {
        self.check(c)?;
        let c = expand(c, Regime::Nisq)?;
        let tiny: T = cast(1e-14);
        let mut branches =
            vec![Branch { probability: T::one(), cbits: 0, state: StateVector::basis(c.num_qubits(), initial)? }];
        for g in c.gates() {
            match g {
                Gate::Measure { target, bit } => {
                    let mut next = Vec::with_capacity(branches.len() * 2);
                    for b in branches {
                        for outcome in [false, true] {
                            let mut s = b.state.clone();
                            let p = s.project(*target, outcome);
                            if p * b.probability > tiny {
                                let cbits = if outcome { b.cbits | (1 << bit) } else { b.cbits & !(1 << bit) };
                                next.push(Branch { probability: b.probability * p, cbits, state: s });
                            }
                        }
                    }
                    branches = next;
                }
                Gate::ConditionalX { target, bit } => {
                    for b in &mut branches {
                        if (b.cbits >> bit) & 1 == 1 {
                            b.state.apply(&Gate::X(*target))?;
                        }
                    }
                }
                g => {
                    for b in &mut branches {
                        b.state.apply(g)?;
                    }
                }
            }
        }
        Ok(branches)
    }

    /// Marginal distribution of a named register.
    pub fn register_distribution<T: Scalar>(&self, c: &Circuit, initial: u64, name: &str) -> Result<BTreeMap<u64, T>> {
        let reg = c.register(name).ok_or_else(|| Error::InvalidCircuit(format!("no register `{name}`")))?.clone();
        let mut out = BTreeMap::new();
        for b in self.run::<T>(c, initial)? {
            for (i, a) in b.state.amplitudes() {
                let v = reg.range().enumerate().map(|(k, q)| ((i >> q) & 1) << k).sum::<u64>();
                let e = out.entry(v).or_insert(T::zero());
                *e = *e + b.probability * a.norm_sqr();
            }
        }
        Ok(out)
    }

    /// Joint distribution of the rounded `main` register and the measured
    /// flag (classical bit 0).
    pub fn outcome_distribution<T: Scalar>(&self, c: &Circuit, initial: u64) -> Result<BTreeMap<(u64, bool), T>> {
        let main = c.reg(MAIN).clone();
        let mut out = BTreeMap::new();
        for b in self.run::<T>(c, initial)? {
            let flag = b.cbits & 1 == 1;
            for (i, a) in b.state.amplitudes() {
                let v = main.range().enumerate().map(|(k, q)| ((i >> q) & 1) << k).sum::<u64>();
                let key = (v, flag);
                let e = out.entry(key).or_insert(T::zero());
                *e = *e + b.probability * a.norm_sqr();
            }
        }
        Ok(out)
    }
}

/// Exact branch enumeration with the default cap.
pub fn run<T: Scalar>(c: &Circuit, initial: u64) -> Result<Vec<Branch<T>>> {
    Simulator::default().run(c, initial)
}

/// Replaces every measurement with a CNOT onto a fresh qubit and every
/// classically controlled X with a CNOT from that qubit.
pub fn defer_measurements(c: &Circuit) -> Result<Circuit> {
    let measures = c.gates().iter().filter(|g| matches!(g, Gate::Measure { .. })).count();
    let mut out = c.with_gates(vec![]);
    let fresh = out.add_register("deferred", measures, RegisterRole::Additional);
    let mut fresh = fresh.into_iter();
    let mut holder: BTreeMap<usize, Qubit> = BTreeMap::new();
    for g in c.gates() {
        match g {
            Gate::Measure { target, bit } => {
                let q = fresh.next().expect("one fresh qubit per measurement");
                holder.insert(*bit, q);
                out.push(Gate::Cnot { control: *target, target: q })?;
            }
            Gate::ConditionalX { target, bit } => {
                let q = *holder
                    .get(bit)
                    .ok_or_else(|| Error::InvalidCircuit(format!("bit {bit} used before measurement")))?;
                out.push(Gate::Cnot { control: q, target: *target })?;
            }
            g => out.push(g.clone())?,
        }
    }
    Ok(out)
}

/// Source of the per-shot round-up probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Simulate the rounding circuit.
    Circuit,
    /// Use the exact probability oracle.
    Semantic,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circuit" => Ok(Backend::Circuit),
            "semantic" => Ok(Backend::Semantic),
            _ => Err(Error::Parse(format!("unknown backend `{s}`"))),
        }
    }
}

/// Probability that the rounding circuit sets the flag for `value`.
pub fn circuit_round_probability<T: Scalar>(
    sim: &Simulator,
    method: RoundingMethod,
    value: &ExtendedValue,
) -> Result<T> {
    let c = rounding::build(method, value.format.n() as usize, value.m as usize)?;
    sim.check(&c)?;
    let initial = rounding::initial_state(&c, value)?;
    let dist = sim.outcome_distribution::<T>(&c, initial)?;
    Ok(dist.iter().filter(|((_, f), _)| *f).fold(T::zero(), |acc, (_, p)| acc + *p))
}

/// Number of shots in `0..samples` whose uniform draw falls below `p`. Shot
/// `i` reads the 64-bit word at stream position `2i` of a ChaCha8 stream keyed
/// by `seed`, so the count does not depend on how shots are chunked.
pub fn count_round_ups(p: f64, samples: u64, seed: u64) -> u64 {
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let start = k * SAMPLE_CHUNK;
            let end = (start + SAMPLE_CHUNK).min(samples);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_word_pos(2 * start as u128);
            (start..end).filter(|_| uniform_unit(rng.next_u64()) < p).count() as u64
        })
        .sum()
}

/// Uniform double in `[0, 1)` from the top 53 bits.
pub fn uniform_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (-53f64).exp2()
}

/// One sampling request.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRequest {
    pub method: RoundingMethod,
    pub value: ExtendedValue,
    pub samples: u64,
    pub seed: u64,
    pub backend: Backend,
    /// Failure probability; `1/N` when unset.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats<T> {
    pub method: RoundingMethod,
    pub value: ExtendedValue,
    pub backend: Backend,
    pub samples: u64,
    pub round_ups: u64,
    pub probability: T,
    pub estimate: Rational,
    pub chernoff_bound: T,
    pub alpha: T,
    pub within_bound: bool,
    pub seed: u64,
}

/// Draws `N` seeded Bernoulli shots at the method's exact round-up
/// probability and checks the estimate against the concentration bound.
pub fn sample<T: Scalar>(req: &SampleRequest, sim: &Simulator) -> Result<SampleStats<T>> {
    if req.samples == 0 {
        return Err(Error::NoSamples);
    }
    let v = &req.value;
    let probability: T = match req.backend {
        Backend::Semantic => {
            let p = rounding::semantic_round_probability(req.method, v.remainder_bits(), v.m)?;
            cast(p.to_f64().unwrap_or(f64::NAN))
        }
        Backend::Circuit => circuit_round_probability(sim, req.method, v)?,
    };
    let p64 = probability.to_f64().unwrap_or(f64::NAN);
    let round_ups = count_round_ups(p64, req.samples, req.seed);
    let ulp = v.format.ulp();
    let floor = v.floor().value();
    let estimate = estimate_from_samples(round_ups, req.samples, &ulp, &floor)?;
    let alpha: T = cast(req.alpha.unwrap_or(1.0 / req.samples as f64));
    let bound = qr_error_bound(req.samples, alpha, cast(ulp.to_f64().unwrap_or(f64::NAN)));
    let err = (&estimate - v.value()).to_f64().unwrap_or(f64::INFINITY).abs();
    Ok(SampleStats {
        method: req.method,
        value: *v,
        backend: req.backend,
        samples: req.samples,
        round_ups,
        probability,
        estimate,
        chernoff_bound: bound,
        alpha,
        within_bound: cast::<T>(err) <= bound,
        seed: req.seed,
    })
}

/// JSON form of a sampling result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub schema_version: u32,
    pub method: String,
    pub backend: Backend,
    pub n: u32,
    pub m: u32,
    pub value: String,
    pub remainder: String,
    #[serde(rename = "N")]
    pub samples: u64,
    #[serde(rename = "X")]
    pub round_ups: u64,
    pub estimate: String,
    pub estimate_f64: f64,
    pub bound: f64,
    pub alpha: f64,
    pub within_bound: bool,
    pub seed: u64,
}

impl<T: Scalar> From<&SampleStats<T>> for SampleRecord {
    fn from(s: &SampleStats<T>) -> Self {
        let r = crate::fxp::remainder(&s.value).unwrap_or_default();
        SampleRecord {
            schema_version: SAMPLE_SCHEMA_VERSION,
            method: s.method.to_string(),
            backend: s.backend,
            n: s.value.format.n(),
            m: s.value.m,
            value: s.value.to_string(),
            remainder: r.to_string(),
            samples: s.samples,
            round_ups: s.round_ups,
            estimate: s.estimate.to_string(),
            estimate_f64: s.estimate.to_f64().unwrap_or(f64::NAN),
            bound: s.chernoff_bound.to_f64().unwrap_or(f64::NAN),
            alpha: s.alpha.to_f64().unwrap_or(f64::NAN),
            within_bound: s.within_bound,
            seed: s.seed,
        }
    }
}

//! Gate-level circuit IR and the per-class resource walker.
//!
//! Toffoli, RY and CRY are terminal cost units: expansion never lowers them to
//! Clifford+T sequences, the walker charges them per regime instead. Macro
//! gates (comparator, adders) are lowered by [`expand`] through the
//! constructors in [`crate::blocks`].

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{blocks, Error, Rational, Result};

pub type Qubit = usize;

/// Current circuit JSON schema version.
pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

/// CNOT depth charged per Toffoli in the fault-tolerant regime. The CNOT count
/// charge stays 10; a depth charge of 5 is what composes into the comparator
/// loading depth `10⌈log2 m⌉ + 27`.
pub const FT_TOFFOLI_CNOT_DEPTH: u64 = 5;
pub const FT_TOFFOLI_CNOT_COUNT: u64 = 10;
pub const FT_TOFFOLI_T_COUNT: u64 = 4;
pub const FT_TOFFOLI_T_DEPTH: u64 = 1;
pub const FT_TOFFOLI_ANCILLAS: u64 = 2;
pub const NISQ_TOFFOLI_TWO_QUBIT: u64 = 5;

/// Rotation angle, kept symbolic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Angle {
    /// `q * π`.
    PiMultiple(Rational),
    /// `2 * arcsin(sqrt(q))`: the angle that takes `|0⟩` to a state whose
    /// probability of `|1⟩` is exactly `q`.
    ArcsinSqrt(Rational),
    Neg(Box<Angle>),
}

impl Angle {
    pub fn radians(&self) -> f64 {
        match self {
            Angle::PiMultiple(q) => q.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI,
            Angle::ArcsinSqrt(q) => 2.0 * q.to_f64().unwrap_or(f64::NAN).sqrt().asin(),
            Angle::Neg(a) => -a.radians(),
        }
    }

    pub fn negated(&self) -> Angle {
        match self {
            Angle::Neg(a) => (**a).clone(),
            other => Angle::Neg(Box::new(other.clone())),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::PiMultiple(q) => write!(f, "pi*{q}"),
            Angle::ArcsinSqrt(q) => write!(f, "2asin(sqrt({q}))"),
            Angle::Neg(a) => write!(f, "-{a}"),
        }
    }
}

impl std::str::FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('-') {
            return Ok(Angle::Neg(Box::new(rest.parse()?)));
        }
        if let Some(q) = s.strip_prefix("pi*") {
            return Ok(Angle::PiMultiple(parse_rational(q)?));
        }
        if let Some(q) = s.strip_prefix("2asin(sqrt(").and_then(|r| r.strip_suffix("))")) {
            return Ok(Angle::ArcsinSqrt(parse_rational(q)?));
        }
        Err(Error::Parse(format!("bad angle `{s}`")))
    }
}

pub(crate) fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    X(Qubit),
    H(Qubit),
    Cnot {
        control: Qubit,
        target: Qubit,
    },
    Toffoli {
        controls: [Qubit; 2],
        target: Qubit,
    },
    Swap(Qubit, Qubit),
    Cswap {
        control: Qubit,
        a: Qubit,
        b: Qubit,
    },
    Ry {
        target: Qubit,
        angle: Angle,
    },
    Cry {
        control: Qubit,
        target: Qubit,
        angle: Angle,
    },
    /// Measure in the computational basis into a classical bit.
    Measure {
        target: Qubit,
        bit: usize,
    },
    /// Classically controlled X; measure followed by this is a conditional reset.
    ConditionalX {
        target: Qubit,
        bit: usize,
    },
    Macro {
        name: String,
        params: Vec<i64>,
        operands: Vec<Qubit>,
    },
}

impl Gate {
    pub fn kind(&self) -> &'static str {
        match self {
            Gate::X(_) => "x",
            Gate::H(_) => "h",
            Gate::Cnot { .. } => "cnot",
            Gate::Toffoli { .. } => "toffoli",
            Gate::Swap(..) => "swap",
            Gate::Cswap { .. } => "cswap",
            Gate::Ry { .. } => "ry",
            Gate::Cry { .. } => "cry",
            Gate::Measure { .. } => "measure",
            Gate::ConditionalX { .. } => "cx_classical",
            Gate::Macro { .. } => "macro",
        }
    }

    /// Qubit operands, controls first and target last.
    pub fn qubits(&self) -> Vec<Qubit> {
        match self {
            Gate::X(q) | Gate::H(q) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Toffoli { controls, target } => vec![controls[0], controls[1], *target],
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Cswap { control, a, b } => vec![*control, *a, *b],
            Gate::Ry { target, .. } => vec![*target],
            Gate::Cry { control, target, .. } => vec![*control, *target],
            Gate::Measure { target, .. } | Gate::ConditionalX { target, .. } => vec![*target],
            Gate::Macro { operands, .. } => operands.clone(),
        }
    }

    pub fn classical_bit(&self) -> Option<usize> {
        match self {
            Gate::Measure { bit, .. } | Gate::ConditionalX { bit, .. } => Some(*bit),
            _ => None,
        }
    }

    /// Qubits that must be `|1⟩` for the gate to act (plain quantum controls).
    pub fn controls(&self) -> Vec<Qubit> {
        match self {
            Gate::Cnot { control, .. } | Gate::Cry { control, .. } | Gate::Cswap { control, .. } => {
                vec![*control]
            }
            Gate::Toffoli { controls, .. } => controls.to_vec(),
            _ => vec![],
        }
    }

    /// True for X, CNOT and Toffoli, the gates the constant-adder reduction
    /// manipulates.
    pub fn is_classical_x_family(&self) -> bool {
        matches!(self, Gate::X(_) | Gate::Cnot { .. } | Gate::Toffoli { .. })
    }

    /// Rebuilds the gate with every qubit index passed through `f`.
    pub fn map_qubits(&self, f: impl Fn(Qubit) -> Qubit) -> Gate {
        match self {
            Gate::X(q) => Gate::X(f(*q)),
            Gate::H(q) => Gate::H(f(*q)),
            Gate::Cnot { control, target } => Gate::Cnot { control: f(*control), target: f(*target) },
            Gate::Toffoli { controls, target } => {
                Gate::Toffoli { controls: [f(controls[0]), f(controls[1])], target: f(*target) }
            }
            Gate::Swap(a, b) => Gate::Swap(f(*a), f(*b)),
            Gate::Cswap { control, a, b } => Gate::Cswap { control: f(*control), a: f(*a), b: f(*b) },
            Gate::Ry { target, angle } => Gate::Ry { target: f(*target), angle: angle.clone() },
            Gate::Cry { control, target, angle } => {
                Gate::Cry { control: f(*control), target: f(*target), angle: angle.clone() }
            }
            Gate::Measure { target, bit } => Gate::Measure { target: f(*target), bit: *bit },
            Gate::ConditionalX { target, bit } => Gate::ConditionalX { target: f(*target), bit: *bit },
            Gate::Macro { name, params, operands } => Gate::Macro {
                name: name.clone(),
                params: params.clone(),
                operands: operands.iter().map(|q| f(*q)).collect(),
            },
        }
    }

    /// Inverse of a unitary gate; `None` for measurement, classical control
    /// and macros.
    pub fn inverse(&self) -> Option<Gate> {
        match self {
            Gate::Ry { target, angle } => Some(Gate::Ry { target: *target, angle: angle.negated() }),
            Gate::Cry { control, target, angle } => {
                Some(Gate::Cry { control: *control, target: *target, angle: angle.negated() })
            }
            Gate::Measure { .. } | Gate::ConditionalX { .. } | Gate::Macro { .. } => None,
            g => Some(g.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegisterRole {
    /// Inputs and outputs that exist independently of the circuit.
    Data,
    /// Qubits the circuit adds and leaves in use (counted as additional qubits).
    Additional,
    /// Working qubits returned to `|0⟩` or left as uncomputable garbage.
    Ancilla,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
    pub role: RegisterRole,
}

impl Register {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    pub fn qubit(&self, i: usize) -> Qubit {
        assert!(i < self.len, "index {i} outside register {}", self.name);
        self.start + i
    }

    pub fn qubits(&self) -> Vec<Qubit> {
        self.range().collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Circuit {
    qubits: usize,
    cbits: usize,
    registers: Vec<Register>,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn num_cbits(&self) -> usize {
        self.cbits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    /// Looks a register up, panicking with its name when missing. Meant for
    /// constructors that just created the register.
    pub fn reg(&self, name: &str) -> &Register {
        self.register(name).unwrap_or_else(|| panic!("no register `{name}`"))
    }

    /// Appends a fresh register and returns its qubits. Zero-length registers
    /// are allowed and recorded.
    pub fn add_register(&mut self, name: &str, len: usize, role: RegisterRole) -> Vec<Qubit> {
        assert!(self.register(name).is_none(), "duplicate register `{name}`");
        let start = self.qubits;
        self.qubits += len;
        self.registers.push(Register { name: name.to_string(), start, len, role });
        (start..start + len).collect()
    }

    pub fn add_cbit(&mut self) -> usize {
        self.cbits += 1;
        self.cbits - 1
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        self.validate_gate(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Infallible push for constructors that allocate their own qubits.
    pub(crate) fn add(&mut self, gate: Gate) {
        if let Err(e) = self.validate_gate(&gate) {
            panic!("constructor emitted an invalid gate: {e}");
        }
        self.gates.push(gate);
    }

    fn validate_gate(&self, gate: &Gate) -> Result<()> {
        let qs = gate.qubits();
        let distinct: BTreeSet<_> = qs.iter().collect();
        if distinct.len() != qs.len() {
            return Err(Error::InvalidGate(format!("repeated operand in {gate:?}")));
        }
        if let Some(q) = qs.iter().find(|q| **q >= self.qubits) {
            return Err(Error::InvalidGate(format!("qubit {q} out of range ({} qubits)", self.qubits)));
        }
        if let Some(b) = gate.classical_bit() {
            if b >= self.cbits {
                return Err(Error::InvalidGate(format!("classical bit {b} out of range")));
            }
        }
        Ok(())
    }

    /// Inlines `other`, sending its qubit `i` to `map[i]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[Qubit]) {
        assert!(map.len() >= other.qubits, "qubit map too short");
        for g in &other.gates {
            self.add(g.map_qubits(|q| map[q]));
        }
    }

    /// Inverse of a unitary circuit (same registers, reversed gates).
    pub fn inverse(&self) -> Result<Circuit> {
        let mut out = Circuit { gates: Vec::with_capacity(self.gates.len()), ..self.clone() };
        for g in self.gates.iter().rev() {
            let inv =
                g.inverse().ok_or_else(|| Error::InvalidCircuit(format!("{} has no unitary inverse", g.kind())))?;
            out.gates.push(inv);
        }
        Ok(out)
    }

    pub fn with_gates(&self, gates: Vec<Gate>) -> Circuit {
        Circuit { gates, ..self.clone() }
    }

    /// Drops the named registers and compacts the remaining qubit indices.
    /// Fails if a remaining gate still touches a removed qubit.
    pub fn remove_registers(&self, names: &[&str]) -> Result<Circuit> {
        let removed: BTreeSet<Qubit> =
            self.registers.iter().filter(|r| names.contains(&r.name.as_str())).flat_map(|r| r.range()).collect();
        let mut new_index = vec![usize::MAX; self.qubits];
        let mut next = 0;
        for (q, slot) in new_index.iter_mut().enumerate() {
            if !removed.contains(&q) {
                *slot = next;
                next += 1;
            }
        }
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            if g.qubits().iter().any(|q| removed.contains(q)) {
                return Err(Error::InvalidCircuit(format!("{g:?} still uses a removed register")));
            }
            gates.push(g.map_qubits(|q| new_index[q]));
        }
        let mut registers = Vec::new();
        for r in &self.registers {
            if names.contains(&r.name.as_str()) {
                continue;
            }
            let start =
                if r.len == 0 { (0..r.start).filter(|q| !removed.contains(q)).count() } else { new_index[r.start] };
            registers.push(Register { start, ..r.clone() });
        }
        Ok(Circuit { qubits: next, cbits: self.cbits, registers, gates })
    }

    pub fn count_kind(&self, kind: &str) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    /// As-soon-as-possible unit layering: each gate occupies one layer on all
    /// of its qubit and classical-bit operands.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let mut qtime = vec![0usize; self.qubits];
        let mut ctime = vec![0usize; self.cbits];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let qs = g.qubits();
            let cb = g.classical_bit();
            let start = qs.iter().map(|q| qtime[*q]).chain(cb.map(|b| ctime[b])).max().unwrap_or(0);
            for q in &qs {
                qtime[*q] = start + 1;
            }
            if let Some(b) = cb {
                ctime[b] = start + 1;
            }
            if layers.len() <= start {
                layers.resize_with(start + 1, Vec::new);
            }
            layers[start].push(i);
        }
        layers
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&CircuitDocument::from(self)).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        let doc: CircuitDocument = serde_json::from_str(s).map_err(|e| Error::Serde(e.to_string()))?;
        doc.try_into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct GateRecord {
    kind: String,
    operands: Vec<Qubit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    angle: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    params: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    bit: Option<usize>,
}

/// Versioned JSON form of a circuit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CircuitDocument {
    version: u32,
    qubits: usize,
    cbits: usize,
    registers: Vec<Register>,
    gates: Vec<GateRecord>,
}

impl From<&Circuit> for CircuitDocument {
    fn from(c: &Circuit) -> Self {
        let gates = c
            .gates
            .iter()
            .map(|g| {
                let mut rec = GateRecord {
                    kind: g.kind().to_string(),
                    operands: g.qubits(),
                    angle: None,
                    params: None,
                    name: None,
                    bit: g.classical_bit(),
                };
                match g {
                    Gate::Ry { angle, .. } | Gate::Cry { angle, .. } => rec.angle = Some(angle.to_string()),
                    Gate::Macro { name, params, .. } => {
                        rec.name = Some(name.clone());
                        rec.params = Some(params.clone());
                    }
                    _ => {}
                }
                rec
            })
            .collect();
        CircuitDocument {
            version: CIRCUIT_SCHEMA_VERSION,
            qubits: c.qubits,
            cbits: c.cbits,
            registers: c.registers.clone(),
            gates,
        }
    }
}

impl TryFrom<CircuitDocument> for Circuit {
    type Error = Error;

    fn try_from(doc: CircuitDocument) -> Result<Circuit> {
        if doc.version != CIRCUIT_SCHEMA_VERSION {
            return Err(Error::Serde(format!("unsupported circuit version {}", doc.version)));
        }
        let mut c = Circuit { qubits: doc.qubits, cbits: doc.cbits, registers: doc.registers, gates: vec![] };
        for rec in doc.gates {
            let ops = &rec.operands;
            let need = |k: usize| -> Result<()> {
                if ops.len() != k {
                    return Err(Error::Serde(format!("{} expects {k} operands", rec.kind)));
                }
                Ok(())
            };
            let angle = || -> Result<Angle> {
                rec.angle.as_deref().ok_or_else(|| Error::Serde("missing angle".into()))?.parse()
            };
            let bit = || rec.bit.ok_or_else(|| Error::Serde("missing classical bit".into()));
            let gate = match rec.kind.as_str() {
                "x" => {
                    need(1)?;
                    Gate::X(ops[0])
                }
                "h" => {
                    need(1)?;
                    Gate::H(ops[0])
                }
                "cnot" => {
                    need(2)?;
                    Gate::Cnot { control: ops[0], target: ops[1] }
                }
                "toffoli" => {
                    need(3)?;
                    Gate::Toffoli { controls: [ops[0], ops[1]], target: ops[2] }
                }
                "swap" => {
                    need(2)?;
                    Gate::Swap(ops[0], ops[1])
                }
                "cswap" => {
                    need(3)?;
                    Gate::Cswap { control: ops[0], a: ops[1], b: ops[2] }
                }
                "ry" => {
                    need(1)?;
                    Gate::Ry { target: ops[0], angle: angle()? }
                }
                "cry" => {
                    need(2)?;
                    Gate::Cry { control: ops[0], target: ops[1], angle: angle()? }
                }
                "measure" => {
                    need(1)?;
                    Gate::Measure { target: ops[0], bit: bit()? }
                }
                "cx_classical" => {
                    need(1)?;
                    Gate::ConditionalX { target: ops[0], bit: bit()? }
                }
                "macro" => Gate::Macro {
                    name: rec.name.clone().ok_or_else(|| Error::Serde("macro without name".into()))?,
                    params: rec.params.clone().unwrap_or_default(),
                    operands: ops.clone(),
                },
                other => return Err(Error::Serde(format!("unknown gate kind `{other}`"))),
            };
            c.push(gate)?;
        }
        Ok(c)
    }
}

/// Cost regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Ft,
    Nisq,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Ft => "ft",
            Regime::Nisq => "nisq",
        })
    }
}

/// Macros that stay terminal after expansion: they are simulated natively and
/// charged as cost units.
pub const TERMINAL_MACROS: &[&str] = &[blocks::PHASE_LOAD];

/// Lowers macros to primitive gates and each CSWAP to CNOT, Toffoli, CNOT.
/// Toffoli, RY and CRY stay as they are. The result is a fixpoint. Both
/// regimes lower to the same gates; only their charges differ.
pub fn expand(c: &Circuit, _regime: Regime) -> Result<Circuit> {
    let mut gates = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        expand_gate(g, &mut gates)?;
    }
    Ok(c.with_gates(gates))
}

fn expand_gate(g: &Gate, out: &mut Vec<Gate>) -> Result<()> {
    match g {
        Gate::Cswap { control, a, b } => {
            out.push(Gate::Cnot { control: *b, target: *a });
            out.push(Gate::Toffoli { controls: [*control, *a], target: *b });
            out.push(Gate::Cnot { control: *b, target: *a });
        }
        Gate::Macro { name, params, operands } => {
            if TERMINAL_MACROS.contains(&name.as_str()) {
                out.push(g.clone());
                return Ok(());
            }
            let body = blocks::macro_body(name, params)?;
            if body.num_qubits() != operands.len() {
                return Err(Error::InvalidGate(format!(
                    "macro `{name}` expects {} operands, got {}",
                    body.num_qubits(),
                    operands.len()
                )));
            }
            for inner in body.gates() {
                expand_gate(&inner.map_qubits(|q| operands[q]), out)?;
            }
        }
        other => out.push(other.clone()),
    }
    Ok(())
}

/// Gate classes tracked by the walker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateClass {
    T,
    Cnot,
    TwoQubit,
    SingleQubit,
}

impl GateClass {
    pub const ALL: [GateClass; 4] = [GateClass::T, GateClass::Cnot, GateClass::TwoQubit, GateClass::SingleQubit];
}

/// Count and depth charged to each class by one gate, plus the uncomputed
/// ancillas it borrows while active.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Charge {
    pub t: (u64, u64),
    pub cnot: (u64, u64),
    pub two: (u64, u64),
    pub single: (u64, u64),
    pub ancillas: u64,
}

impl Charge {
    fn class(&self, class: GateClass) -> (u64, u64) {
        match class {
            GateClass::T => self.t,
            GateClass::Cnot => self.cnot,
            GateClass::TwoQubit => self.two,
            GateClass::SingleQubit => self.single,
        }
    }

    fn scaled(self, k: u64) -> Charge {
        let s = |(c, d): (u64, u64)| (c * k, d * k);
        Charge { t: s(self.t), cnot: s(self.cnot), two: s(self.two), single: s(self.single), ancillas: self.ancillas }
    }
}

/// Average T-count (and T-depth) of a repeat-until-success RY at precision
/// `eps`: `⌈1.149 log2(1/eps) + 9.2⌉`. Exact when `eps` is a power of two.
pub fn ry_t_cost(eps: &Rational) -> Result<u64> {
    if !eps.is_positive() || *eps >= Rational::one() {
        return Err(Error::OutOfRange(format!("rotation precision {eps} not in (0, 1)")));
    }
    if let Some(k) = exact_log2_inverse(eps) {
        let scaled = Rational::new(BigInt::from(1149 * k + 9200), BigInt::from(1000));
        return Ok(scaled.ceil().to_integer().to_u64().unwrap_or(u64::MAX));
    }
    let l = -eps.to_f64().unwrap_or(f64::MIN_POSITIVE).log2();
    Ok((1.149 * l + 9.2).ceil() as u64)
}

/// `k` such that `eps = 2^-k`, when it exists.
pub(crate) fn exact_log2_inverse(eps: &Rational) -> Option<i64> {
    if !eps.numer().is_one() {
        return None;
    }
    let d = eps.denom();
    let bits = d.bits();
    if bits == 0 {
        return None;
    }
    let k = bits - 1;
    if *d == BigInt::one() << k {
        Some(k as i64)
    } else {
        None
    }
}

/// Per-regime gate charges.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub regime: Regime,
    pub rotation_eps: Option<Rational>,
    pub toffoli_cnot_depth: u64,
}

impl CostModel {
    pub fn new(regime: Regime, rotation_eps: Option<Rational>) -> Self {
        Self { regime, rotation_eps, toffoli_cnot_depth: FT_TOFFOLI_CNOT_DEPTH }
    }

    fn ry_cost(&self) -> Result<u64> {
        match &self.rotation_eps {
            Some(eps) => ry_t_cost(eps),
            None => Err(Error::MissingRotationEps),
        }
    }

    pub fn charge(&self, g: &Gate) -> Result<Charge> {
        let one = (1, 1);
        let ft = self.regime == Regime::Ft;
        Ok(match g {
            Gate::X(_) | Gate::H(_) => Charge { single: one, ..Default::default() },
            Gate::Cnot { .. } => Charge { cnot: one, two: one, ..Default::default() },
            Gate::Swap(..) => Charge { cnot: (3, 3), two: (3, 3), ..Default::default() },
            Gate::Toffoli { .. } if ft => {
                let c = (FT_TOFFOLI_CNOT_COUNT, self.toffoli_cnot_depth);
                Charge {
                    t: (FT_TOFFOLI_T_COUNT, FT_TOFFOLI_T_DEPTH),
                    cnot: c,
                    two: c,
                    ancillas: FT_TOFFOLI_ANCILLAS,
                    ..Default::default()
                }
            }
            Gate::Toffoli { .. } => {
                let c = (NISQ_TOFFOLI_TWO_QUBIT, NISQ_TOFFOLI_TWO_QUBIT);
                Charge { cnot: c, two: c, ..Default::default() }
            }
            Gate::Ry { .. } if ft => {
                let k = self.ry_cost()?;
                Charge { t: (k, k), single: one, ..Default::default() }
            }
            Gate::Ry { .. } => Charge { single: one, ..Default::default() },
            Gate::Cry { .. } if ft => {
                let k = self.ry_cost()?;
                Charge { t: (3 * k, k), cnot: (4, 4), two: (4, 4), ancillas: 1, ..Default::default() }
            }
            Gate::Cry { .. } => Charge { two: one, ..Default::default() },
            Gate::Measure { .. } | Gate::ConditionalX { .. } => Charge::default(),
            Gate::Macro { name, params, .. } if name == blocks::PHASE_LOAD => {
                // m bitwise controlled rotations onto the same ancilla
                let m = params.first().copied().unwrap_or(0).max(0) as u64;
                self.charge(&Gate::Cry { control: 0, target: 1, angle: Angle::PiMultiple(Rational::zero()) })?.scaled(m)
            }
            Gate::Cswap { .. } | Gate::Macro { .. } => {
                return Err(Error::InvalidCircuit(format!("{} must be expanded before costing", g.kind())))
            }
        })
    }
}

/// Resource totals for one circuit in one regime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub regime: Regime,
    pub additional_qubits: u64,
    pub uncomputed_ancillas: u64,
    pub t_count: u64,
    pub t_depth: u64,
    pub cnot_count: u64,
    pub cnot_depth: u64,
    pub two_qubit_count: u64,
    pub two_qubit_depth: u64,
    pub single_qubit_count: u64,
    pub single_qubit_depth: u64,
}

/// Metric names in schema order.
pub const METRICS: [&str; 10] = [
    "additional_qubits",
    "uncomputed_ancillas",
    "t_count",
    "t_depth",
    "cnot_count",
    "cnot_depth",
    "two_qubit_count",
    "two_qubit_depth",
    "single_qubit_count",
    "single_qubit_depth",
];

impl ResourceReport {
    pub fn zero(regime: Regime) -> Self {
        ResourceReport {
            regime,
            additional_qubits: 0,
            uncomputed_ancillas: 0,
            t_count: 0,
            t_depth: 0,
            cnot_count: 0,
            cnot_depth: 0,
            two_qubit_count: 0,
            two_qubit_depth: 0,
            single_qubit_count: 0,
            single_qubit_depth: 0,
        }
    }

    pub fn metric(&self, name: &str) -> Option<u64> {
        Some(match name {
            "additional_qubits" => self.additional_qubits,
            "uncomputed_ancillas" => self.uncomputed_ancillas,
            "t_count" => self.t_count,
            "t_depth" => self.t_depth,
            "cnot_count" => self.cnot_count,
            "cnot_depth" => self.cnot_depth,
            "two_qubit_count" => self.two_qubit_count,
            "two_qubit_depth" => self.two_qubit_depth,
            "single_qubit_count" => self.single_qubit_count,
            "single_qubit_depth" => self.single_qubit_depth,
            _ => return None,
        })
    }

    pub fn metrics(&self) -> Vec<(&'static str, u64)> {
        METRICS.iter().map(|m| (*m, self.metric(m).unwrap())).collect()
    }

    /// Sequential composition: counts and depths add, additional qubits add,
    /// uncomputed ancillas are reused (max).
    pub fn then(&self, next: &ResourceReport) -> ResourceReport {
        ResourceReport {
            regime: self.regime,
            additional_qubits: self.additional_qubits + next.additional_qubits,
            uncomputed_ancillas: self.uncomputed_ancillas.max(next.uncomputed_ancillas),
            t_count: self.t_count + next.t_count,
            t_depth: self.t_depth + next.t_depth,
            cnot_count: self.cnot_count + next.cnot_count,
            cnot_depth: self.cnot_depth + next.cnot_depth,
            two_qubit_count: self.two_qubit_count + next.two_qubit_count,
            two_qubit_depth: self.two_qubit_depth + next.two_qubit_depth,
            single_qubit_count: self.single_qubit_count + next.single_qubit_count,
            single_qubit_depth: self.single_qubit_depth + next.single_qubit_depth,
        }
    }
}

/// Total charged count of one class.
pub fn count_by_class(c: &Circuit, model: &CostModel, class: GateClass) -> Result<u64> {
    c.gates.iter().try_fold(0u64, |acc, g| Ok(acc + model.charge(g)?.class(class).0))
}

/// Critical-path depth of one class: ASAP over qubit and classical-bit
/// dependencies, each gate holding its operands for its charged depth.
pub fn depth_by_class(c: &Circuit, model: &CostModel, class: GateClass) -> Result<u64> {
    let mut qtime = vec![0u64; c.qubits];
    let mut ctime = vec![0u64; c.cbits];
    let mut depth = 0;
    for g in &c.gates {
        let d = model.charge(g)?.class(class).1;
        let qs = g.qubits();
        let cb = g.classical_bit();
        let start = qs.iter().map(|q| qtime[*q]).chain(cb.map(|b| ctime[b])).max().unwrap_or(0);
        let end = start + d;
        for q in qs {
            qtime[q] = end;
        }
        if let Some(b) = cb {
            ctime[b] = end;
        }
        depth = depth.max(end);
    }
    Ok(depth)
}

/// Walks an expanded circuit and totals every class.
pub fn count_resources(c: &Circuit, regime: Regime, rotation_eps: Option<&Rational>) -> Result<ResourceReport> {
    let model = CostModel::new(regime, rotation_eps.cloned());
    let mut report = ResourceReport::zero(regime);
    for class in GateClass::ALL {
        let count = count_by_class(c, &model, class)?;
        let depth = depth_by_class(c, &model, class)?;
        match class {
            GateClass::T => (report.t_count, report.t_depth) = (count, depth),
            GateClass::Cnot => (report.cnot_count, report.cnot_depth) = (count, depth),
            GateClass::TwoQubit => (report.two_qubit_count, report.two_qubit_depth) = (count, depth),
            GateClass::SingleQubit => (report.single_qubit_count, report.single_qubit_depth) = (count, depth),
        }
    }
    report.additional_qubits = role_qubits(c, RegisterRole::Additional) as u64;
    let mut borrowed = 0u64;
    for layer in c.layers() {
        let mut sum = 0;
        for i in layer {
            sum += model.charge(&c.gates[i])?.ancillas;
        }
        borrowed = borrowed.max(sum);
    }
    report.uncomputed_ancillas = role_qubits(c, RegisterRole::Ancilla) as u64 + borrowed;
    Ok(report)
}

pub fn role_qubits(c: &Circuit, role: RegisterRole) -> usize {
    c.registers.iter().filter(|r| r.role == role).map(|r| r.len).sum()
}

/// `⌈log2 n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: u64) -> u64 {
    assert!(n >= 1);
    64 - (n - 1).leading_zeros() as u64
}

/// `⌊log2 n⌋` for `n ≥ 1`.
pub fn floor_log2(n: u64) -> u64 {
    assert!(n >= 1);
    63 - n.leading_zeros() as u64
}

/// `⌊log2(num/den)⌋` for a positive rational.
pub fn floor_log2_ratio(num: u64, den: u64) -> i64 {
    assert!(num > 0 && den > 0);
    let mut k = floor_log2(num) as i64 - floor_log2(den) as i64;
    // adjust so that 2^k <= num/den < 2^(k+1)
    let le = |k: i64| -> bool {
        if k >= 0 {
            (den as u128) << k <= num as u128
        } else {
            den as u128 <= (num as u128) << (-k)
        }
    };
    while !le(k) {
        k -= 1;
    }
    while le(k + 1) {
        k += 1;
    }
    k
}

/// Ceiling of a rational as `i64`.
pub(crate) fn ceil_i64(q: &Rational) -> i64 {
    let (d, r) = q.numer().div_rem(q.denom());
    let base = d.to_i64().unwrap_or(i64::MAX);
    if r.is_positive() {
        base + 1
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circuit(n: usize) -> Circuit {
        let mut c = Circuit::new();
        c.add_register("q", n, RegisterRole::Data);
        c
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cswap_expands_to_fig7_shape() {
        let mut c = circuit(3);
        c.push(Gate::Cswap { control: 0, a: 1, b: 2 }).unwrap();
        let e = expand(&c, Regime::Ft).unwrap();
        assert_eq!(e.count_kind("toffoli"), 1);
        assert_eq!(e.count_kind("cnot"), 2);
        assert_eq!(e.gates().len(), 3);
    }

    #[test]
    fn empty_circuit_expands_to_empty() {
        let c = circuit(2);
        assert!(expand(&c, Regime::Nisq).unwrap().is_empty());
        let r = count_resources(&c, Regime::Ft, None).unwrap();
        assert_eq!(r, ResourceReport::zero(Regime::Ft));
    }

    #[test]
    fn unknown_macro_is_rejected() {
        let mut c = circuit(2);
        c.push(Gate::Macro { name: "frobnicate".into(), params: vec![], operands: vec![0, 1] }).unwrap();
        assert_eq!(expand(&c, Regime::Ft), Err(Error::UnknownMacro("frobnicate".into())));
    }

    #[test]
    fn single_toffoli_ft() {
        let mut c = circuit(3);
        c.push(Gate::Toffoli { controls: [0, 1], target: 2 }).unwrap();
        let r = count_resources(&c, Regime::Ft, None).unwrap();
        assert_eq!((r.t_count, r.t_depth, r.cnot_count, r.uncomputed_ancillas), (4, 1, 10, 2));
        assert_eq!(r.cnot_depth, FT_TOFFOLI_CNOT_DEPTH);
        let r = count_resources(&c, Regime::Nisq, None).unwrap();
        assert_eq!((r.two_qubit_count, r.two_qubit_depth, r.single_qubit_count), (5, 5, 0));
    }

    #[test]
    fn single_cry_ft() {
        let mut c = circuit(2);
        c.push(Gate::Cry { control: 0, target: 1, angle: Angle::ArcsinSqrt(q(1, 2)) }).unwrap();
        let eps = q(1, 1024);
        let r = count_resources(&c, Regime::Ft, Some(&eps)).unwrap();
        assert_eq!((r.t_count, r.t_depth, r.cnot_count, r.uncomputed_ancillas), (63, 21, 4, 1));
        assert_eq!(count_resources(&c, Regime::Ft, None), Err(Error::MissingRotationEps));
        assert_eq!(count_resources(&c, Regime::Nisq, None).unwrap().two_qubit_count, 1);
    }

    #[test]
    fn ry_cost_values() {
        assert_eq!(ry_t_cost(&q(1, 1024)).unwrap(), 21);
        assert_eq!(ry_t_cost(&q(1, 2)).unwrap(), 11);
        // non power of two goes through floating point
        assert_eq!(ry_t_cost(&q(1, 1000)).unwrap(), (1.149f64 * 1000f64.log2() + 9.2).ceil() as u64);
        assert!(ry_t_cost(&q(3, 2)).is_err());
    }

    #[test]
    fn cnot_layering() {
        let mut par = circuit(4);
        par.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
        par.push(Gate::Cnot { control: 2, target: 3 }).unwrap();
        let r = count_resources(&par, Regime::Ft, None).unwrap();
        assert_eq!((r.cnot_count, r.cnot_depth), (2, 1));

        let k = 7;
        let mut chain = circuit(k + 1);
        for i in 0..k {
            chain.push(Gate::Cnot { control: 0, target: i + 1 }).unwrap();
        }
        let model = CostModel::new(Regime::Ft, None);
        assert_eq!(depth_by_class(&chain, &model, GateClass::Cnot).unwrap(), k as u64);
        assert_eq!(count_by_class(&chain, &model, GateClass::Cnot).unwrap(), k as u64);

        let mut disjoint = circuit(2 * k);
        for i in 0..k {
            disjoint.push(Gate::Cnot { control: 2 * i, target: 2 * i + 1 }).unwrap();
        }
        assert_eq!(depth_by_class(&disjoint, &model, GateClass::Cnot).unwrap(), 1);
        assert_eq!(depth_by_class(&circuit(3), &model, GateClass::T).unwrap(), 0);
    }

    #[test]
    fn classical_bits_order_gates() {
        let mut c = circuit(3);
        let b = c.add_cbit();
        c.push(Gate::Measure { target: 0, bit: b }).unwrap();
        c.push(Gate::ConditionalX { target: 1, bit: b }).unwrap();
        c.push(Gate::X(2)).unwrap();
        let layers = c.layers();
        assert_eq!(layers, vec![vec![0, 2], vec![1]]);
        let r = count_resources(&c, Regime::Nisq, None).unwrap();
        assert_eq!(r.single_qubit_count, 1);
    }

    #[test]
    fn invalid_operands() {
        let mut c = circuit(2);
        assert!(c.push(Gate::Cnot { control: 1, target: 1 }).is_err());
        assert!(c.push(Gate::X(2)).is_err());
        assert!(c.push(Gate::Measure { target: 0, bit: 0 }).is_err());
    }

    #[test]
    fn unexpanded_gates_are_not_costed() {
        let mut c = circuit(3);
        c.push(Gate::Cswap { control: 0, a: 1, b: 2 }).unwrap();
        assert!(count_resources(&c, Regime::Ft, None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut c = circuit(3);
        let b = c.add_cbit();
        c.add_register("anc", 1, RegisterRole::Ancilla);
        c.push(Gate::H(0)).unwrap();
        c.push(Gate::Cry { control: 0, target: 1, angle: Angle::ArcsinSqrt(q(3, 8)) }).unwrap();
        c.push(Gate::Ry { target: 2, angle: Angle::PiMultiple(q(-1, 4)).negated() }).unwrap();
        c.push(Gate::Cswap { control: 0, a: 1, b: 3 }).unwrap();
        c.push(Gate::Measure { target: 1, bit: b }).unwrap();
        c.push(Gate::ConditionalX { target: 1, bit: b }).unwrap();
        c.push(Gate::Macro { name: "add_const".into(), params: vec![1, 1], operands: vec![2, 3] }).unwrap();
        let s = c.to_json().unwrap();
        let back = Circuit::from_json(&s).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json().unwrap(), s);
    }

    #[test]
    fn remove_registers_compacts_indices() {
        let mut c = Circuit::new();
        c.add_register("a", 2, RegisterRole::Data);
        c.add_register("b", 2, RegisterRole::Data);
        c.push(Gate::Cnot { control: 2, target: 3 }).unwrap();
        let r = c.remove_registers(&["a"]).unwrap();
        assert_eq!(r.num_qubits(), 2);
        assert_eq!(r.gates(), &[Gate::Cnot { control: 0, target: 1 }]);
        assert_eq!(r.reg("b").start, 0);
        let mut bad = c.clone();
        bad.push(Gate::X(0)).unwrap();
        assert!(bad.remove_registers(&["a"]).is_err());
    }

    #[test]
    fn log_helpers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(10), 4);
        assert_eq!(ceil_log2(16), 4);
        assert_eq!(floor_log2(10), 3);
        assert_eq!(floor_log2_ratio(10, 3), 1);
        assert_eq!(floor_log2_ratio(9, 3), 1);
        assert_eq!(floor_log2_ratio(2, 3), -1);
        assert_eq!(floor_log2_ratio(1, 3), -2);
        assert_eq!(floor_log2_ratio(8, 1), 3);
        assert_eq!(ceil_i64(&q(221 * 10, 5)), 442);
        assert_eq!(ceil_i64(&q(-3, 2)), -1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_gate(nq: usize) -> impl Strategy<Value = Gate> {
            let three = proptest::sample::subsequence((0..nq).collect::<Vec<_>>(), 3).prop_shuffle();
            (0u8..6, three).prop_map(|(k, qs)| match k {
                0 => Gate::X(qs[0]),
                1 => Gate::H(qs[0]),
                2 => Gate::Cnot { control: qs[0], target: qs[1] },
                3 => Gate::Toffoli { controls: [qs[0], qs[1]], target: qs[2] },
                4 => Gate::Cswap { control: qs[0], a: qs[1], b: qs[2] },
                _ => Gate::Swap(qs[0], qs[1]),
            })
        }

        proptest! {
            #[test]
            fn expand_is_idempotent(gates in proptest::collection::vec(arb_gate(5), 0..30)) {
                let mut c = circuit(5);
                for g in gates { c.push(g).unwrap(); }
                let once = expand(&c, Regime::Ft).unwrap();
                prop_assert_eq!(expand(&once, Regime::Ft).unwrap(), once);
            }

            #[test]
            fn appending_never_decreases_counts(
                gates in proptest::collection::vec(arb_gate(5), 0..30),
                extra in arb_gate(5),
            ) {
                let mut c = circuit(5);
                for g in gates { c.push(g).unwrap(); }
                let c = expand(&c, Regime::Ft).unwrap();
                let mut d = c.clone();
                d.push(extra).unwrap();
                let d = expand(&d, Regime::Ft).unwrap();
                for regime in [Regime::Ft, Regime::Nisq] {
                    let a = count_resources(&c, regime, None).unwrap();
                    let b = count_resources(&d, regime, None).unwrap();
                    for (name, v) in a.metrics() {
                        prop_assert!(b.metric(name).unwrap() >= v, "{} decreased", name);
                        if name.ends_with("_depth") {
                            let count = a.metric(&name.replace("_depth", "_count")).unwrap();
                            prop_assert!(v <= count.max(v.min(count)) || count >= v);
                        }
                    }
                }
            }

            #[test]
            fn layers_are_operand_disjoint(gates in proptest::collection::vec(arb_gate(6), 0..40)) {
                let mut c = circuit(6);
                for g in gates { c.push(g).unwrap(); }
                for layer in c.layers() {
                    let mut seen = BTreeSet::new();
                    for i in layer {
                        for q in c.gates()[i].qubits() {
                            prop_assert!(seen.insert(q));
                        }
                    }
                }
            }
        }
    }
}

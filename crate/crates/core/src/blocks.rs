//! Circuit constructors: carry-lookahead adder, constant-adder reduction,
//! controlled wrapping and the register comparator.

use std::collections::{BTreeMap, BTreeSet};

use crate::circuit::{expand, floor_log2, floor_log2_ratio, Circuit, Gate, Qubit, Regime, RegisterRole};
use crate::{Error, Result};

pub const PHASE_LOAD: &str = "phase_load";
pub const COMPARATOR: &str = "comparator";
pub const ADD_REGISTERS: &str = "add_registers";
pub const ADD_CONST: &str = "add_const";
pub const CTRL_ADD_CONST: &str = "ctrl_add_const";

/// Width and carry flag of a register-register adder. The carry-out always
/// lands in the top qubit of the `z` register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdderSpec {
    pub n: usize,
    pub carry_out: bool,
}

/// Number of propagate ancillas used by the carry network on `k` bits.
pub fn propagate_ancillas(k: usize) -> usize {
    if k < 2 {
        return 0;
    }
    let lg = floor_log2(k as u64) as usize;
    (1..lg).map(|t| (k >> t) - 1).sum()
}

struct CarryNetwork<'a> {
    z: &'a [Qubit],
    b: &'a [Qubit],
    p: &'a BTreeMap<(usize, usize), Qubit>,
}

impl CarryNetwork<'_> {
    fn z(&self, i: usize) -> Qubit {
        self.z[i - 1]
    }

    fn prop(&self, t: usize, m: usize) -> Qubit {
        if t == 0 {
            self.b[m]
        } else {
            self.p[&(t, m)]
        }
    }

    fn p_round(&self, k: usize, lg: usize, out: &mut Vec<Gate>, forward: bool) {
        let ts: Vec<usize> = if forward { (1..lg).collect() } else { (1..lg).rev().collect() };
        for t in ts {
            for m in 1..(k >> t) {
                out.push(Gate::Toffoli {
                    controls: [self.prop(t - 1, 2 * m), self.prop(t - 1, 2 * m + 1)],
                    target: self.prop(t, m),
                });
            }
        }
    }

    /// Generate/propagate tree that leaves the carry into bit `i` in `z_i`
    /// for `1 ≤ i ≤ k`, given `z_{i+1} = g_i` and `b_i = p_i`.
    fn gates(&self, k: usize) -> Vec<Gate> {
        let mut out = Vec::new();
        if k < 2 {
            return out;
        }
        let lg = floor_log2(k as u64) as usize;
        self.p_round(k, lg, &mut out, true);
        for t in 1..=lg {
            for m in 0..(k >> t) {
                out.push(Gate::Toffoli {
                    controls: [self.z((m << t) + (1 << (t - 1))), self.prop(t - 1, 2 * m + 1)],
                    target: self.z((m << t) + (1 << t)),
                });
            }
        }
        let tc = floor_log2_ratio(2 * k as u64, 3);
        for t in (1..=tc.max(0) as usize).rev() {
            let mut m = 1;
            while (m << t) + (1 << (t - 1)) <= k {
                out.push(Gate::Toffoli {
                    controls: [self.z(m << t), self.prop(t - 1, 2 * m)],
                    target: self.z((m << t) + (1 << (t - 1))),
                });
                m += 1;
            }
        }
        self.p_round(k, lg, &mut out, false);
        out
    }
}

/// In-place logarithmic-depth adder `|a⟩|b⟩|0⟩ → |a⟩|a+b mod 2^n⟩|0…0,c⟩`.
///
/// Registers: `a` and `b` (data, bit 0 least significant), `z` (carry bits
/// `z_1..z_n`, with `z_n` the carry-out and the rest restored to zero) and
/// `p` (propagate ancillas, restored).
pub fn add_registers(n: usize) -> Circuit {
    assert!(n >= 1, "adder width must be at least 1");
    let mut c = Circuit::new();
    let a = c.add_register("a", n, RegisterRole::Data);
    let b = c.add_register("b", n, RegisterRole::Data);
    let z = c.add_register("z", n, RegisterRole::Ancilla);
    let p_qubits = c.add_register("p", propagate_ancillas(n), RegisterRole::Ancilla);
    let mut p = BTreeMap::new();
    let mut next = p_qubits.iter();
    if n >= 2 {
        let lg = floor_log2(n as u64) as usize;
        for t in 1..lg {
            for m in 1..(n >> t) {
                p.insert((t, m), *next.next().expect("propagate ancilla count"));
            }
        }
    }
    let net = CarryNetwork { z: &z, b: &b, p: &p };
    let zq = |i: usize| z[i - 1];

    for i in 0..n {
        c.add(Gate::Toffoli { controls: [a[i], b[i]], target: zq(i + 1) });
    }
    for i in 0..n {
        c.add(Gate::Cnot { control: a[i], target: b[i] });
    }
    for g in net.gates(n) {
        c.add(g);
    }
    for (i, &bi) in b.iter().enumerate().skip(1) {
        c.add(Gate::Cnot { control: zq(i), target: bi });
    }
    for &bi in &b[..n - 1] {
        c.add(Gate::X(bi));
    }
    for i in 1..n.saturating_sub(1) {
        c.add(Gate::Cnot { control: a[i], target: b[i] });
    }
    for g in net.gates(n - 1).into_iter().rev() {
        c.add(g);
    }
    for i in 1..n.saturating_sub(1) {
        c.add(Gate::Cnot { control: a[i], target: b[i] });
    }
    for i in 0..n - 1 {
        c.add(Gate::Toffoli { controls: [a[i], b[i]], target: zq(i + 1) });
    }
    for &bi in &b[..n - 1] {
        c.add(Gate::X(bi));
    }
    c
}

/// Adder built from a spec; the carry qubit is present either way and is
/// simply ignored when `carry_out` is false.
pub fn adder(spec: AdderSpec) -> Circuit {
    add_registers(spec.n)
}

/// Drops gates controlled on a known-zero qubit. A qubit is known zero while
/// it is in `zeros` and no surviving gate has targeted it.
fn drop_zero_controlled(gates: Vec<Gate>, mut zeros: BTreeSet<Qubit>) -> Vec<Gate> {
    let mut out = Vec::with_capacity(gates.len());
    for g in gates {
        if g.controls().iter().any(|q| zeros.contains(q)) {
            continue;
        }
        let qs = g.qubits();
        if let Some(t) = qs.last() {
            zeros.remove(t);
        }
        if let Gate::Swap(x, y) | Gate::Cswap { a: x, b: y, .. } = g {
            zeros.remove(&x);
            zeros.remove(&y);
        }
        out.push(g);
    }
    out
}

/// Removes pairs of identical X/CNOT/Toffoli gates with nothing in between on
/// any of their wires, repeating until nothing changes.
pub fn cancel_adjacent_pairs(gates: Vec<Gate>) -> Vec<Gate> {
    let mut current = gates;
    loop {
        let mut out: Vec<Gate> = Vec::with_capacity(current.len());
        for g in current.iter() {
            let qs = g.qubits();
            let last = out.iter().rposition(|h| h.qubits().iter().any(|q| qs.contains(q)));
            match last {
                Some(i) if g.is_classical_x_family() && out[i] == *g => {
                    out.remove(i);
                }
                _ => out.push(g.clone()),
            }
        }
        if out.len() == current.len() {
            return out;
        }
        current = out;
    }
}

/// Specializes a register-register adder to add the classical constant `c`:
/// drop gates controlled on zero bits of `c`, drop gates controlled on
/// untouched zero ancillas, cancel adjacent self-inverse pairs, strip controls
/// on one bits of `c`, then delete the `a` register.
pub fn reduce_to_add_constant(adder: &Circuit, constant: u128) -> Result<Circuit> {
    let a = adder.register("a").ok_or_else(|| Error::InvalidCircuit("adder has no `a` register".into()))?.clone();
    if a.len < 128 && constant >> a.len != 0 {
        return Err(Error::ConstantWidth { constant, width: a.len });
    }
    let bit = |q: Qubit| -> Option<bool> { a.range().contains(&q).then(|| (constant >> (q - a.start)) & 1 == 1) };

    let zero_a: BTreeSet<Qubit> = a.range().filter(|q| bit(*q) == Some(false)).collect();
    let gates = drop_zero_controlled(adder.gates().to_vec(), zero_a);

    let ancillas: BTreeSet<Qubit> =
        adder.registers().iter().filter(|r| r.role == RegisterRole::Ancilla).flat_map(|r| r.range()).collect();
    let gates = drop_zero_controlled(gates, ancillas);

    let gates = cancel_adjacent_pairs(gates);

    let mut stripped = Vec::with_capacity(gates.len());
    for g in gates {
        let g = match g {
            Gate::Cnot { control, target } if bit(control) == Some(true) => Gate::X(target),
            Gate::Toffoli { controls: [x, y], target } => match (bit(x) == Some(true), bit(y) == Some(true)) {
                (true, true) => Gate::X(target),
                (true, false) => Gate::Cnot { control: y, target },
                (false, true) => Gate::Cnot { control: x, target },
                (false, false) => g,
            },
            other => other,
        };
        stripped.push(g);
    }
    adder.with_gates(stripped).remove_registers(&["a"])
}

/// `|b⟩ → |b + c mod 2^n⟩` with carry-out in the top `z` qubit.
pub fn add_constant(n: usize, constant: u128) -> Result<Circuit> {
    reduce_to_add_constant(&add_registers(n), constant)
}

/// Runs a classical (X/CNOT/Toffoli/SWAP/CSWAP) circuit on a bit vector.
/// Macros are expanded first.
pub fn simulate_classical(c: &Circuit, state: &mut [bool]) -> Result<()> {
    let c = expand(c, Regime::Ft)?;
    for g in c.gates() {
        match *g {
            Gate::X(q) => state[q] ^= true,
            Gate::Cnot { control, target } => state[target] ^= state[control],
            Gate::Toffoli { controls: [x, y], target } => state[target] ^= state[x] & state[y],
            Gate::Swap(x, y) => state.swap(x, y),
            Gate::Cswap { control, a, b } => {
                if state[control] {
                    state.swap(a, b)
                }
            }
            _ => return Err(Error::InvalidCircuit(format!("{} is not a classical gate", g.kind()))),
        }
    }
    Ok(())
}

/// Reads the named register of a bit vector as an integer, bit 0 first.
pub fn read_register(c: &Circuit, state: &[bool], name: &str) -> u128 {
    c.reg(name).range().enumerate().map(|(i, q)| (state[q] as u128) << i).sum()
}

pub fn write_register(c: &Circuit, state: &mut [bool], name: &str, value: u128) {
    for (i, q) in c.reg(name).range().enumerate() {
        state[q] = (value >> i) & 1 == 1;
    }
}

/// Wraps an in-place body so it acts only when a new `ctrl` qubit is `|1⟩`.
///
/// When the control is off, the target register is swapped into a fresh
/// `swap` register, the body runs on zeros, and the result is swapped back; a
/// final layer of CNOTs clears the body's action on zero from the swap
/// register. The body must be classical so that its action on zero is known.
pub fn make_controlled(body: &Circuit, target: &str) -> Result<Circuit> {
    let target_reg =
        body.register(target).ok_or_else(|| Error::InvalidCircuit(format!("body has no `{target}` register")))?.clone();
    let mut zero = vec![false; body.num_qubits()];
    simulate_classical(body, &mut zero)?;
    let residue: Vec<bool> = target_reg.range().map(|q| zero[q]).collect();

    let mut c = Circuit::new();
    let ctrl = c.add_register("ctrl", 1, RegisterRole::Additional)[0];
    let mut map = Vec::with_capacity(body.num_qubits());
    for r in body.registers() {
        map.extend(c.add_register(&r.name, r.len, r.role));
    }
    let swap = c.add_register("swap", target_reg.len, RegisterRole::Ancilla);
    let data: Vec<Qubit> = target_reg.range().map(|q| map[q]).collect();

    let sandwich = |c: &mut Circuit| {
        c.add(Gate::X(ctrl));
        for (d, s) in data.iter().zip(&swap) {
            c.add(Gate::Cswap { control: ctrl, a: *d, b: *s });
        }
    };
    sandwich(&mut c);
    c.add(Gate::X(ctrl));
    c.append_mapped(body, &map);
    sandwich(&mut c);
    for (s, r) in swap.iter().zip(&residue) {
        if *r {
            c.add(Gate::Cnot { control: ctrl, target: *s });
        }
    }
    c.add(Gate::X(ctrl));
    Ok(c)
}

/// Controlled `|b⟩ → |b + c mod 2^n⟩`.
pub fn ctrl_add_constant(n: usize, constant: u128) -> Result<Circuit> {
    make_controlled(&add_constant(n, constant)?, "b")
}

#[derive(Debug, Clone)]
struct Node {
    lo: usize,
    hi: usize,
    split: Option<usize>,
    height: usize,
}

fn comparator_tree(lo: usize, hi: usize, nodes: &mut Vec<Node>) -> usize {
    if hi - lo == 1 {
        nodes.push(Node { lo, hi, split: None, height: 0 });
        return 0;
    }
    let mid = lo + (hi - lo).div_ceil(2);
    let h1 = comparator_tree(lo, mid, nodes);
    let h2 = comparator_tree(mid, hi, nodes);
    let height = h1.max(h2) + 1;
    nodes.push(Node { lo, hi, split: Some(mid), height });
    height
}

/// Working ancillas of the comparator on `m` bits: one generate bit per
/// position plus one propagate bit per internal node off the left spine.
pub fn comparator_ancillas(m: usize) -> usize {
    let mut nodes = Vec::new();
    comparator_tree(0, m, &mut nodes);
    m + nodes.iter().filter(|n| n.split.is_some() && n.lo != 0).count()
}

/// `|a⟩|b⟩|0⟩ → |a⟩|b⟩|[a < b]⟩`, evaluated as the carry-out of `¬a + b` over a
/// generate/propagate tree. Registers `a`, `b` (data), `out` (additional),
/// `g` and `p` (ancillas, restored).
pub fn comparator(m: usize) -> Circuit {
    assert!(m >= 1, "comparator width must be at least 1");
    let mut nodes = Vec::new();
    comparator_tree(0, m, &mut nodes);
    let p_count = nodes.iter().filter(|n| n.split.is_some() && n.lo != 0).count();

    let mut c = Circuit::new();
    let a = c.add_register("a", m, RegisterRole::Data);
    let b = c.add_register("b", m, RegisterRole::Data);
    let out = c.add_register("out", 1, RegisterRole::Additional)[0];
    let g = c.add_register("g", m, RegisterRole::Ancilla);
    let p_anc = c.add_register("p", p_count, RegisterRole::Ancilla);

    // propagate qubit of each node; leaves use b_i after the CNOT
    let mut prop: BTreeMap<(usize, usize), Qubit> = BTreeMap::new();
    let mut free = p_anc.iter();
    for n in &nodes {
        match n.split {
            None => {
                prop.insert((n.lo, n.hi), b[n.lo]);
            }
            Some(_) if n.lo != 0 => {
                prop.insert((n.lo, n.hi), *free.next().expect("propagate ancilla count"));
            }
            Some(_) => {}
        }
    }

    let mut forward = Vec::new();
    for &q in &a {
        forward.push(Gate::X(q));
    }
    for i in 0..m {
        forward.push(Gate::Toffoli { controls: [a[i], b[i]], target: g[i] });
    }
    for i in 1..m {
        forward.push(Gate::Cnot { control: a[i], target: b[i] });
    }
    let mut internal: Vec<&Node> = nodes.iter().filter(|n| n.split.is_some()).collect();
    internal.sort_by_key(|n| (n.height, n.lo));
    for n in &internal {
        let mid = n.split.unwrap();
        if n.lo != 0 {
            forward.push(Gate::Toffoli {
                controls: [prop[&(n.lo, mid)], prop[&(mid, n.hi)]],
                target: prop[&(n.lo, n.hi)],
            });
        }
    }
    for n in &internal {
        let mid = n.split.unwrap();
        forward.push(Gate::Toffoli { controls: [prop[&(mid, n.hi)], g[mid - 1]], target: g[n.hi - 1] });
    }
    for gate in &forward {
        c.add(gate.clone());
    }
    c.add(Gate::Cnot { control: g[m - 1], target: out });
    for gate in forward.iter().rev() {
        c.add(gate.clone());
    }
    c
}

/// Body of a registered macro, with operands in register order.
pub fn macro_body(name: &str, params: &[i64]) -> Result<Circuit> {
    let param = |i: usize| -> Result<i64> {
        params.get(i).copied().ok_or_else(|| Error::InvalidGate(format!("macro `{name}` is missing parameter {i}")))
    };
    let width = |i: usize| -> Result<usize> {
        let v = param(i)?;
        if v < 1 {
            return Err(Error::InvalidGate(format!("macro `{name}` width must be positive")));
        }
        Ok(v as usize)
    };
    let constant = |i: usize| -> Result<u128> {
        let v = param(i)?;
        u128::try_from(v).map_err(|_| Error::InvalidGate(format!("macro `{name}` constant must be nonnegative")))
    };
    match name {
        COMPARATOR => Ok(comparator(width(0)?)),
        ADD_REGISTERS => Ok(add_registers(width(0)?)),
        ADD_CONST => add_constant(width(0)?, constant(1)?),
        CTRL_ADD_CONST => ctrl_add_constant(width(0)?, constant(1)?),
        _ => Err(Error::UnknownMacro(name.to_string())),
    }
}

/// A macro gate for a registered body, placed on `operands`.
pub fn macro_gate(name: &str, params: Vec<i64>, operands: Vec<Qubit>) -> Gate {
    Gate::Macro { name: name.to_string(), params, operands }
}

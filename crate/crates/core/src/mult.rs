//! Fixed-point multiplication as controlled shifted additions: planning the
//! per-addend widths, building the circuit and costing the three methods.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{solve_n_tilde, ErrorBudget};
use crate::blocks::{macro_gate, propagate_ancillas, ADD_REGISTERS};
use crate::circuit::{count_resources, expand, Circuit, Gate, Regime, RegisterRole, ResourceReport};
use crate::cost::compose_qr_cost;
use crate::fxp::{pow2, FxFormat};
use crate::rounding::{self, RoundingMethod};
use crate::{Error, Rational, Result};

pub const A: &str = "a";
pub const B: &str = "b";
pub const OUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplyMethod {
    /// All addends at full width, `2n`-bit product.
    Exact,
    /// Addends truncated against a worst-case budget, no rounding stage.
    Haner,
    /// Exact product at a reduced width followed by one comparator rounding.
    QRound,
}

impl MultiplyMethod {
    pub const ALL: [MultiplyMethod; 3] = [MultiplyMethod::Exact, MultiplyMethod::Haner, MultiplyMethod::QRound];
}

impl fmt::Display for MultiplyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultiplyMethod::Exact => "exact",
            MultiplyMethod::Haner => "haner",
            MultiplyMethod::QRound => "qround",
        })
    }
}

impl FromStr for MultiplyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MultiplyMethod::Exact),
            "haner" => Ok(MultiplyMethod::Haner),
            "qround" => Ok(MultiplyMethod::QRound),
            _ => Err(Error::Parse(format!("unknown multiplication method `{s}`"))),
        }
    }
}

/// How the truncation error of one addend is charged against its share of
/// the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AddendRule {
    /// `2^j · 2^(p_b − f_j) ≤ ε/n_a`, with `2^j` the weight of `a_j`.
    #[default]
    PerAddend,
    /// `2^(p_b − f_j) ≤ ε/n_a` for every addend.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplyPlan {
    pub method: MultiplyMethod,
    pub a: FxFormat,
    pub b: FxFormat,
    /// Total error budget; zero for exact products.
    pub eps: Rational,
    pub rule: AddendRule,
    /// `f_j` for each bit of `a`, least significant first.
    pub schedule: Vec<u32>,
    pub out: FxFormat,
    pub n_tilde: Option<u32>,
    pub samples: Option<u64>,
    pub alpha: Option<f64>,
}

/// Optional inputs to [`plan`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanOptions {
    /// Overrides the method's default budget (ignored for exact plans).
    pub eps: Option<Rational>,
    pub samples: Option<u64>,
    pub alpha: Option<f64>,
    pub rule: AddendRule,
}

/// Weight `2^j` of bit `index` of `a`, as an exponent.
fn weight_exponent(a: FxFormat, index: usize) -> i64 {
    index as i64 - a.frac_bits() as i64
}

/// Smallest `f_j ≤ n_b` meeting the per-addend share of `eps`; `n_b` when
/// the budget is zero or cannot be met.
pub fn addend_bits_for(index: usize, a: FxFormat, b: FxFormat, eps: &Rational, rule: AddendRule) -> u32 {
    if eps.is_zero() {
        return b.n();
    }
    let share = eps / Rational::from_integer(a.n().into());
    let shift = match rule {
        AddendRule::PerAddend => weight_exponent(a, index),
        AddendRule::Literal => 0,
    };
    (0..=b.n()).find(|&f| pow2(shift + b.p() as i64 - f as i64) <= share).unwrap_or(b.n())
}

/// `f_j` for bit `index` of `a` under `plan`.
pub fn addend_bits(index: usize, plan: &MultiplyPlan) -> Result<u32> {
    plan.schedule
        .get(index)
        .copied()
        .ok_or_else(|| Error::OutOfRange(format!("addend {index} outside 0..{}", plan.schedule.len())))
}

/// Output LSB position (in units of `2^−frac`) of addend `index`.
fn addend_position(a: FxFormat, b: FxFormat, index: usize, f: u32, frac_out: i64) -> i64 {
    b.p() as i64 - f as i64 + weight_exponent(a, index) + frac_out
}

/// Truncated schoolbook plan for arbitrary formats and budget.
pub fn truncated_plan(
    method: MultiplyMethod,
    a: FxFormat,
    b: FxFormat,
    eps: Rational,
    rule: AddendRule,
) -> Result<MultiplyPlan> {
    if eps < Rational::zero() {
        return Err(Error::OutOfRange("error budget must be nonnegative".into()));
    }
    let schedule: Vec<u32> = (0..a.n() as usize).map(|i| addend_bits_for(i, a, b, &eps, rule)).collect();
    // finest bit any kept addend touches
    let frac_out = schedule
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(i, &f)| f as i64 - b.p() as i64 - weight_exponent(a, i))
        .max()
        .unwrap_or(0)
        .max(0) as u32;
    let p_out = a.p() + b.p();
    let out = FxFormat::new((p_out + frac_out).max(1), p_out)?;
    Ok(MultiplyPlan { method, a, b, eps, rule, schedule, out, n_tilde: None, samples: None, alpha: None })
}

/// Plan for `n`-bit inputs with `p` integer bits.
pub fn plan(method: MultiplyMethod, n: u32, p: u32, opts: &PlanOptions) -> Result<MultiplyPlan> {
    if n < 2 {
        return Err(Error::OutOfRange("multiplication needs n ≥ 2".into()));
    }
    let fmt = FxFormat::new(n, p)?;
    let default_eps = || Rational::from_integer(n.into()) * pow2(p as i64 - n as i64);
    match method {
        MultiplyMethod::Exact => truncated_plan(method, fmt, fmt, Rational::zero(), opts.rule),
        MultiplyMethod::Haner => {
            truncated_plan(method, fmt, fmt, opts.eps.clone().unwrap_or_else(default_eps), opts.rule)
        }
        MultiplyMethod::QRound => {
            let samples = opts.samples.ok_or_else(|| Error::OutOfRange("quantum rounding needs N".into()))?;
            let mut budget = ErrorBudget::<f64>::multiplication_default(n, p, samples)?;
            if let Some(eps) = &opts.eps {
                budget.target_eps = eps.clone();
            }
            if let Some(alpha) = opts.alpha {
                budget.alpha = alpha;
            }
            // the rounding stage needs at least two bits on each side
            let n_tilde = solve_n_tilde(&budget, p)?.max(2).max(p + 1);
            let small = FxFormat::new(n_tilde, p)?;
            let mut plan = truncated_plan(method, small, small, Rational::zero(), opts.rule)?;
            plan.eps = budget.target_eps;
            plan.n_tilde = Some(n_tilde);
            plan.samples = Some(samples);
            plan.alpha = Some(budget.alpha);
            Ok(plan)
        }
    }
}

/// `|a⟩|b⟩|0⟩ → |a⟩|b⟩|Σ_j a_j·2^j·trunc_j(b)⟩` with one shared work block.
fn multiplier_core(plan: &MultiplyPlan) -> Circuit {
    let (fa, fb) = (plan.a, plan.b);
    let n_out = plan.out.n() as i64;
    let frac_out = plan.out.frac_bits() as i64;
    let additions: Vec<(usize, u32, usize)> = plan
        .schedule
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(i, &f)| {
            let pos = addend_position(fa, fb, i, f, frac_out);
            debug_assert!(pos >= 0 && pos + f as i64 <= n_out);
            (i, f, pos as usize)
        })
        .collect();
    let widest = additions.iter().map(|&(_, _, pos)| plan.out.n() as usize - pos).max().unwrap_or(0);

    let mut c = Circuit::new();
    let a = c.add_register(A, fa.n() as usize, RegisterRole::Data);
    let b = c.add_register(B, fb.n() as usize, RegisterRole::Data);
    let out = c.add_register(OUT, plan.out.n() as usize, RegisterRole::Additional);
    let t = c.add_register("addend", widest, RegisterRole::Ancilla);
    let z = c.add_register("carry", widest, RegisterRole::Ancilla);
    let p = c.add_register("propagate", propagate_ancillas(widest), RegisterRole::Ancilla);

    for (i, f, pos) in additions {
        let width = out.len() - pos;
        let copy: Vec<Gate> = (0..f as usize)
            .map(|k| Gate::Toffoli { controls: [a[i], b[b.len() - f as usize + k]], target: t[k] })
            .collect();
        for g in &copy {
            c.add(g.clone());
        }
        let mut ops = t[..width].to_vec();
        ops.extend_from_slice(&out[pos..]);
        ops.extend_from_slice(&z[..width]);
        ops.extend_from_slice(&p[..propagate_ancillas(width)]);
        c.add(macro_gate(ADD_REGISTERS, vec![width as i64], ops));
        for g in copy.iter().rev() {
            c.add(g.clone());
        }
    }
    c
}

/// Multiplier circuit; quantum-rounding plans also round the product's
/// lower half into the upper half.
pub fn build_multiplier(plan: &MultiplyPlan) -> Result<Circuit> {
    let mut c = multiplier_core(plan);
    if plan.method == MultiplyMethod::QRound {
        let nt = plan.n_tilde.expect("quantum-rounding plan carries its width") as usize;
        let stage = rounding::build(RoundingMethod::QrComparator, nt, nt)?;
        let out = c.reg(OUT).qubits();
        let mut map = Vec::with_capacity(stage.num_qubits());
        for r in stage.registers() {
            match r.name.as_str() {
                rounding::MAIN => map.extend_from_slice(&out[nt..2 * nt]),
                rounding::REM => map.extend_from_slice(&out[..nt]),
                name => map.extend(c.add_register(&format!("round_{name}"), r.len, r.role)),
            }
        }
        while c.num_cbits() < stage.num_cbits() {
            c.add_cbit();
        }
        c.append_mapped(&stage, &map);
    }
    Ok(c)
}

/// Resources of one multiplication under `regime`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplyResources {
    pub report: ResourceReport,
    /// Input qubits plus additional qubits plus uncomputed ancillas.
    pub qubits: u64,
}

/// Walker cost of the multiplier, plus the composed rounding stage for
/// quantum-rounding plans.
pub fn method_resources(plan: &MultiplyPlan, regime: Regime) -> Result<MultiplyResources> {
    let core = expand(&multiplier_core(plan), regime)?;
    let mut report = count_resources(&core, regime, None)?;
    if let Some(nt) = plan.n_tilde {
        report = report.then(&compose_qr_cost(nt, nt, regime)?);
    }
    let inputs = (plan.a.n() + plan.b.n()) as u64;
    Ok(MultiplyResources { qubits: inputs + report.additional_qubits + report.uncomputed_ancillas, report })
}

pub const BENCH_HEADER: [&str; 12] = [
    "method",
    "n",
    "p",
    "N",
    "n_tilde",
    "qubits",
    "ancillas",
    "t_count",
    "t_depth",
    "cnot_count",
    "cnot_depth",
    "regime",
];

/// One benchmark grid point for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: MultiplyMethod,
    pub n: u32,
    pub p: u32,
    #[serde(rename = "N")]
    pub samples: u64,
    pub n_tilde: Option<u32>,
    pub qubits: u64,
    pub ancillas: u64,
    pub t_count: u64,
    pub t_depth: u64,
    pub cnot_count: u64,
    pub cnot_depth: u64,
    pub regime: Regime,
}

pub fn bench_point(method: MultiplyMethod, n: u32, p: u32, samples: u64, regime: Regime) -> Result<BenchRow> {
    let opts = PlanOptions { samples: Some(samples), ..PlanOptions::default() };
    let plan = plan(method, n, p, &opts)?;
    let res = method_resources(&plan, regime)?;
    let r = &res.report;
    Ok(BenchRow {
        method,
        n,
        p,
        samples,
        n_tilde: plan.n_tilde,
        qubits: res.qubits,
        ancillas: r.uncomputed_ancillas,
        t_count: r.t_count,
        t_depth: r.t_depth,
        cnot_count: r.cnot_count,
        cnot_depth: r.cnot_depth,
        regime,
    })
}

/// Rows for every `(n, N)` pair and method, ordered by `n`, then `N`, then
/// method.
pub fn bench_grid(ns: &[u32], samples: &[u64], p: u32, regime: Regime) -> Result<Vec<BenchRow>> {
    let points: Vec<(u32, u64, MultiplyMethod)> = ns
        .iter()
        .flat_map(|&n| samples.iter().flat_map(move |&s| MultiplyMethod::ALL.into_iter().map(move |m| (n, s, m))))
        .filter(|&(n, _, _)| n > p && n >= 2)
        .collect();
    points.into_par_iter().map(|(n, s, m)| bench_point(m, n, p, s, regime)).collect()
}

/// CSV with the pinned header.
pub fn bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(BENCH_HEADER).map_err(ser)?;
    for r in rows {
        w.serialize(r).map_err(ser)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Serde(e.to_string()))?).map_err(|e| Error::Serde(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Simulator;

    fn fmt(n: u32, p: u32) -> FxFormat {
        FxFormat::new(n, p).unwrap()
    }

    /// Classical truncated schoolbook product in output units.
    fn oracle(plan: &MultiplyPlan, a: u64, b: u64) -> u64 {
        let frac_out = plan.out.frac_bits() as i64;
        let mut acc = 0u64;
        for (i, &f) in plan.schedule.iter().enumerate() {
            if f == 0 || (a >> i) & 1 == 0 {
                continue;
            }
            let drop = plan.b.n() - f;
            let pos = addend_position(plan.a, plan.b, i, f, frac_out);
            acc += (b >> drop) << pos;
        }
        acc
    }

    fn simulate(plan: &MultiplyPlan, a: u64, b: u64) -> u64 {
        let c = multiplier_core(plan);
        let (ra, rb, ro) = (c.reg(A).clone(), c.reg(B).clone(), c.reg(OUT).clone());
        let init = (a << ra.start) | (b << rb.start);
        let sim = Simulator::with_cap(64);
        let dist = sim.register_distribution::<f64>(&c, init, OUT).unwrap();
        assert_eq!(dist.len(), 1, "classical circuit stays in a basis state");
        let (&v, &pr) = dist.iter().next().unwrap();
        assert!((pr - 1.0).abs() < 1e-12);
        // inputs and work qubits are untouched
        let branches = sim.run::<f64>(&c, init).unwrap();
        let idx = branches[0].state.amplitudes().next().unwrap().0;
        let mask = |r: &crate::circuit::Register| ((1u64 << r.len) - 1) << r.start;
        assert_eq!(idx & !mask(&ro), init);
        v
    }

    #[test]
    fn haner_budget_at_ten() {
        let p = plan(MultiplyMethod::Haner, 10, 0, &PlanOptions::default()).unwrap();
        assert_eq!(p.eps, Rational::new(10.into(), 1024.into()));
        let total: u32 = p.schedule.iter().sum();
        assert!(total < 100);
        assert_eq!(p.schedule, (0..10).collect::<Vec<u32>>());
        let literal =
            plan(MultiplyMethod::Haner, 10, 0, &PlanOptions { rule: AddendRule::Literal, ..Default::default() })
                .unwrap();
        assert!(total < literal.schedule.iter().sum::<u32>());
    }

    #[test]
    fn qround_width_at_ten_thousand() {
        let p =
            plan(MultiplyMethod::QRound, 10, 0, &PlanOptions { samples: Some(10_000), ..Default::default() }).unwrap();
        assert_eq!(p.n_tilde, Some(3));
        assert_eq!(p.out.n(), 6);
        assert!(plan(MultiplyMethod::QRound, 10, 0, &PlanOptions::default()).is_err());
    }

    #[test]
    fn exact_schedule() {
        let p = plan(MultiplyMethod::Exact, 4, 0, &PlanOptions::default()).unwrap();
        assert_eq!(p.schedule, vec![4; 4]);
        assert_eq!(p.out.n(), 8);
        assert_eq!(p.out.p(), 0);
        assert!(addend_bits(4, &p).is_err());
    }

    #[test]
    fn degenerate_budgets() {
        let (a, b) = (fmt(4, 2), fmt(4, 2));
        assert_eq!(addend_bits_for(3, a, b, &Rational::from_integer(1000.into()), AddendRule::PerAddend), 0);
        assert_eq!(addend_bits_for(3, a, b, &Rational::zero(), AddendRule::PerAddend), 4);
    }

    #[test]
    fn exact_two_bit_exhaustive() {
        let p = plan(MultiplyMethod::Exact, 2, 0, &PlanOptions::default()).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(simulate(&p, a, b), a * b, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn zero_multiplicand() {
        let p = plan(MultiplyMethod::Exact, 3, 1, &PlanOptions::default()).unwrap();
        for b in 0..8 {
            assert_eq!(simulate(&p, 0, b), 0);
        }
    }

    #[test]
    fn truncated_three_bit_within_budget() {
        let p = plan(MultiplyMethod::Haner, 3, 0, &PlanOptions::default()).unwrap();
        let ulp = pow2(-(p.out.frac_bits() as i64));
        let unit = pow2(-3);
        for a in 0..8u64 {
            for b in 0..8u64 {
                let got = simulate(&p, a, b);
                assert_eq!(got, oracle(&p, a, b));
                let exact = Rational::from_integer((a * b).into()) * &unit * &unit;
                let approx = Rational::from_integer(got.into()) * &ulp;
                assert!(exact.clone() - approx.clone() <= p.eps && approx <= exact, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn schedule_shrinks_as_budget_grows() {
        let (a, b) = (fmt(6, 1), fmt(5, 2));
        for rule in [AddendRule::PerAddend, AddendRule::Literal] {
            for i in 0..6 {
                let mut last = u32::MAX;
                for k in 0..16 {
                    let eps = pow2(k - 10);
                    let f = addend_bits_for(i, a, b, &eps, rule);
                    assert!(f <= last && f <= b.n());
                    last = f;
                }
            }
        }
    }

    #[test]
    fn exact_dominates_haner() {
        for n in 2..=8 {
            for regime in [Regime::Ft, Regime::Nisq] {
                let e =
                    method_resources(&plan(MultiplyMethod::Exact, n, 0, &Default::default()).unwrap(), regime).unwrap();
                let h =
                    method_resources(&plan(MultiplyMethod::Haner, n, 0, &Default::default()).unwrap(), regime).unwrap();
                for (name, v) in h.report.metrics() {
                    assert!(e.report.metric(name).unwrap() >= v, "n={n} {regime} {name}");
                }
                assert!(e.qubits >= h.qubits);
            }
        }
    }

    #[test]
    fn qround_circuit_appends_rounding() {
        let p =
            plan(MultiplyMethod::QRound, 4, 0, &PlanOptions { samples: Some(100_000), ..Default::default() }).unwrap();
        let c = build_multiplier(&p).unwrap();
        assert!(c.register("round_flag").is_some());
        assert_eq!(c.num_cbits(), 1);
        let core = multiplier_core(&p);
        assert!(c.gates().len() > core.gates().len());
    }

    #[test]
    fn bench_csv_header() {
        let rows = bench_grid(&[4], &[100], 0, Regime::Ft).unwrap();
        assert_eq!(rows.len(), 3);
        let csv = bench_csv(&rows).unwrap();
        assert!(csv.starts_with("method,n,p,N,n_tilde,qubits,ancillas,t_count,t_depth,cnot_count,cnot_depth,regime\n"));
        assert!(csv.lines().nth(1).unwrap().starts_with("exact,4,0,100,,"));
        assert_eq!(bench_csv(&bench_grid(&[], &[100], 0, Regime::Ft).unwrap()).unwrap().lines().count(), 1);
    }
}

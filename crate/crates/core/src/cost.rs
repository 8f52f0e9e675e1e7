//! Closed-form resource tables for loading and controlled addition, their
//! composition, and reconciliation against the circuit walker.

use serde::{Deserialize, Serialize};

use crate::blocks::{comparator_ancillas, ctrl_add_constant, macro_gate, COMPARATOR};
use crate::circuit::{
    ceil_i64, ceil_log2, count_resources, exact_log2_inverse, expand, floor_log2, floor_log2_ratio, Circuit, Gate,
    Regime, RegisterRole, ResourceReport, METRICS,
};
use crate::fxp::pow2;
use crate::rounding::{self, RoundingMethod};
use crate::{Error, Rational, Result};

pub const RECONCILIATION_SCHEMA_VERSION: u32 = 1;

/// Regime plus the rotation precision used for RY synthesis costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRegime {
    pub regime: Regime,
    pub rotation_eps: Rational,
}

impl CostRegime {
    /// Rotation precision `2^−m`.
    pub fn with_default_eps(regime: Regime, m: u32) -> Self {
        Self { regime, rotation_eps: pow2(-(m as i64)) }
    }
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::OutOfRange(what.to_string()))
    }
}

fn nonneg(v: i64) -> u64 {
    v.max(0) as u64
}

/// `Σ_{i=1}^{⌊log2 n⌋} ⌊n/2^i⌋`.
pub fn halving_sum(n: u64) -> i64 {
    if n == 0 {
        return 0;
    }
    (1..=floor_log2(n)).map(|i| (n >> i) as i64).sum()
}

/// Loading the remainder by comparison against a uniform register.
pub fn loading_cost_qr(m: u32, regime: Regime) -> Result<ResourceReport> {
    require(m >= 2, "loading needs m ≥ 2")?;
    let (m, l) = (m as i64, ceil_log2(m as u64) as i64);
    let mut r = ResourceReport::zero(regime);
    r.additional_qubits = nonneg(m + 1);
    match regime {
        Regime::Ft => {
            r.uncomputed_ancillas = nonneg(4 * m - l - 2);
            r.t_count = nonneg(24 * m - 8 * l - 16);
            r.t_depth = nonneg(2 * l + 5);
            r.cnot_count = nonneg(62 * m - 20 * l - 42);
            r.cnot_depth = nonneg(10 * l + 27);
            r.two_qubit_count = r.cnot_count;
            r.two_qubit_depth = r.cnot_depth;
        }
        Regime::Nisq => {
            r.uncomputed_ancillas = nonneg(2 * m - l - 2);
            r.two_qubit_count = nonneg(32 * m - 10 * l - 22);
            r.two_qubit_depth = nonneg(12 * l + 32);
            r.single_qubit_count = nonneg(32 * m - 10 * l - 22);
            r.single_qubit_depth = nonneg(10 * l + 27);
        }
    }
    Ok(r)
}

/// `log2(1/ε)` as a real number.
fn log2_inverse(eps: &Rational) -> Result<f64> {
    use num_traits::{Signed, ToPrimitive};
    if !eps.is_positive() || *eps >= Rational::from_integer(1.into()) {
        return Err(Error::OutOfRange(format!("rotation precision {eps} not in (0, 1)")));
    }
    Ok(match exact_log2_inverse(eps) {
        Some(k) => k as f64,
        None => -eps.to_f64().unwrap_or(f64::MIN_POSITIVE).log2(),
    })
}

/// `⌈c·log2(1/ε)⌉` with `c` given in thousandths, exact when `ε` is a power
/// of two.
fn ceil_scaled_log(thousandths: i64, eps: &Rational) -> Result<i64> {
    if let Some(k) = exact_log2_inverse(eps) {
        let v = thousandths * k;
        return Ok(v.div_euclid(1000) + i64::from(v.rem_euclid(1000) != 0));
    }
    Ok((thousandths as f64 / 1000.0 * log2_inverse(eps)?).ceil() as i64)
}

/// Loading by leading-one detection and per-position rotations.
pub fn loading_cost_qsr(m: u32, regime: Regime, rotation_eps: &Rational) -> Result<ResourceReport> {
    require(m >= 2, "loading needs m ≥ 2")?;
    log2_inverse(rotation_eps)?;
    let m = m as i64;
    let mut r = ResourceReport::zero(regime);
    r.additional_qubits = 1;
    match regime {
        Regime::Ft => {
            r.uncomputed_ancillas = nonneg(2 * m - 2);
            r.t_count = nonneg(36 * m + 3 * m * ceil_scaled_log(1149, rotation_eps)? - 12);
            r.t_depth = nonneg(12 * m + ceil_scaled_log(1149 * m, rotation_eps)? - 3);
            r.cnot_count = nonneg(20 * m - 30);
            r.cnot_depth = nonneg(20 * m - 30);
            r.two_qubit_count = r.cnot_count;
            r.two_qubit_depth = r.cnot_depth;
        }
        Regime::Nisq => {
            r.uncomputed_ancillas = nonneg(2 * m - 3);
            r.two_qubit_count = nonneg(12 * m - 15);
            r.two_qubit_depth = nonneg(12 * m - 15);
            r.single_qubit_count = nonneg(2 * m - 2);
            r.single_qubit_depth = nonneg(2 * m - 2);
        }
    }
    Ok(r)
}

/// Controlled addition of one ulp to an `n`-qubit register.
pub fn ctrl_add_cost(n: u32, regime: Regime) -> Result<ResourceReport> {
    require(n >= 2, "controlled addition needs n ≥ 2")?;
    let n64 = n as u64;
    let n = n as i64;
    let lg = floor_log2(n64) as i64;
    let lg1 = floor_log2(n64 - 1) as i64;
    let lg3 = floor_log2_ratio(n64, 3);
    let lg13 = floor_log2_ratio(n64 - 1, 3);
    let s = halving_sum(n64);
    let s1 = halving_sum(n64 - 1);
    let mut r = ResourceReport::zero(regime);
    r.additional_qubits = 1;
    match regime {
        Regime::Ft => {
            r.uncomputed_ancillas = nonneg(3 * n - lg + s - 5);
            r.t_count = nonneg(34 * n - 12 * lg - 12 * lg1 + 12 * s + 12 * s1 - 12);
            r.t_depth = nonneg(lg + lg1 + lg3 + lg13 + 11);
            r.cnot_count = nonneg(77 * n - 30 * lg - 30 * lg1 + 30 * s + 30 * s1 - 29);
            r.cnot_depth = nonneg(10 * (lg + lg1 + lg3 + lg13) + 111);
            r.two_qubit_count = r.cnot_count;
            r.two_qubit_depth = r.cnot_depth;
        }
        Regime::Nisq => {
            let lead = ceil_i64(&Rational::new((221 * n).into(), 5.into()));
            r.uncomputed_ancillas = nonneg(n - lg + s - 1);
            r.two_qubit_count = nonneg(lead - 15 * lg - 15 * lg1 + 15 * s + 15 * s1 - 14);
            r.two_qubit_depth = nonneg(5 * (lg + lg1 + lg3 + lg13) + 56);
            r.single_qubit_count = nonneg(2 * n + 1);
            r.single_qubit_depth = 2;
        }
    }
    Ok(r)
}

/// Sequential composition: counts and depths add, ancillas are reused.
pub fn compose(stages: &[ResourceReport]) -> Result<ResourceReport> {
    let first = stages.first().ok_or_else(|| Error::OutOfRange("nothing to compose".into()))?;
    let mut acc = ResourceReport::zero(first.regime);
    for s in stages {
        if s.regime != acc.regime {
            return Err(Error::RegimeMismatch(acc.regime.to_string(), s.regime.to_string()));
        }
        acc = acc.then(s);
    }
    Ok(acc)
}

/// Comparator loading followed by the controlled addition.
pub fn compose_qr_cost(n: u32, m: u32, regime: Regime) -> Result<ResourceReport> {
    compose(&[loading_cost_qr(m, regime)?, ctrl_add_cost(n, regime)?])
}

/// Semi-rounding loading followed by the controlled addition.
pub fn compose_qsr_cost(n: u32, m: u32, regime: Regime, rotation_eps: &Rational) -> Result<ResourceReport> {
    compose(&[loading_cost_qsr(m, regime, rotation_eps)?, ctrl_add_cost(n, regime)?])
}

/// Printed fault-tolerant totals for `n = m = 10`.
pub fn published_totals() -> ResourceReport {
    ResourceReport {
        regime: Regime::Ft,
        additional_qubits: 12,
        uncomputed_ancillas: 34,
        t_count: 588,
        t_depth: 32,
        cnot_count: 1509,
        cnot_depth: 323,
        two_qubit_count: 1509,
        two_qubit_depth: 323,
        single_qubit_count: 0,
        single_qubit_depth: 0,
    }
}

/// Loading-only circuit: uniform register prepared and compared with the
/// remainder into the flag.
pub fn loading_circuit_qr(m: usize) -> Circuit {
    let mut c = Circuit::new();
    let rem = c.add_register("rem", m, RegisterRole::Data);
    let uniform = c.add_register("uniform", m, RegisterRole::Additional);
    let flag = c.add_register("flag", 1, RegisterRole::Additional);
    let work = c.add_register("work", comparator_ancillas(m), RegisterRole::Ancilla);
    for &q in &uniform {
        c.add(Gate::H(q));
    }
    let mut ops = uniform;
    ops.extend(rem);
    ops.extend(flag);
    ops.extend(work);
    c.add(macro_gate(COMPARATOR, vec![m as i64], ops));
    c
}

/// Walker cost of the loading stage.
pub fn walker_loading_qr(m: u32, regime: Regime) -> Result<ResourceReport> {
    let c = expand(&loading_circuit_qr(m as usize), regime)?;
    count_resources(&c, regime, None)
}

/// Walker cost of the controlled one-ulp addition.
pub fn walker_ctrl_add(n: u32, regime: Regime) -> Result<ResourceReport> {
    let c = expand(&ctrl_add_constant(n as usize, 1)?, regime)?;
    count_resources(&c, regime, None)
}

/// Walker cost of a whole rounding circuit, rotations at precision `2^−m`.
pub fn walker_rounding(method: RoundingMethod, n: u32, m: u32, regime: Regime) -> Result<ResourceReport> {
    let c = expand(&rounding::build(method, n as usize, m as usize)?, regime)?;
    count_resources(&c, regime, Some(&pow2(-(m as i64))))
}

/// One metric across the formula, walker and printed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub formula: u64,
    pub walker: u64,
    pub published: Option<u64>,
    pub walker_minus_formula: i64,
    pub walker_relative: Option<f64>,
    pub formula_minus_published: Option<i64>,
    pub published_relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationReport {
    pub schema_version: u32,
    pub regime: Regime,
    pub rows: Vec<MetricRow>,
    pub notes: Vec<String>,
}

impl ReconciliationReport {
    pub fn row(&self, metric: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    /// Metrics where the formula and the printed value differ.
    pub fn published_deltas(&self) -> Vec<(&str, i64)> {
        self.rows
            .iter()
            .filter_map(|r| r.formula_minus_published.filter(|d| *d != 0).map(|d| (r.metric.as_str(), d)))
            .collect()
    }
}

fn relative(delta: i64, base: u64) -> Option<f64> {
    (base != 0).then(|| delta as f64 / base as f64)
}

/// Per-metric diff of the formula path against the walker and, when given,
/// the printed values.
pub fn reconcile(
    formula: &ResourceReport,
    walker: &ResourceReport,
    published: Option<&ResourceReport>,
) -> Result<ReconciliationReport> {
    for other in std::iter::once(walker).chain(published) {
        if other.regime != formula.regime {
            return Err(Error::RegimeMismatch(formula.regime.to_string(), other.regime.to_string()));
        }
    }
    let rows = METRICS
        .iter()
        .map(|name| {
            let f = formula.metric(name).unwrap();
            let w = walker.metric(name).unwrap();
            let p = published.map(|p| p.metric(name).unwrap());
            let wd = w as i64 - f as i64;
            let pd = p.map(|p| f as i64 - p as i64);
            MetricRow {
                metric: name.to_string(),
                formula: f,
                walker: w,
                published: p,
                walker_minus_formula: wd,
                walker_relative: relative(wd, f),
                formula_minus_published: pd,
                published_relative: pd.and_then(|d| p.and_then(|p| relative(d, p))),
            }
        })
        .collect();
    Ok(ReconciliationReport {
        schema_version: RECONCILIATION_SCHEMA_VERSION,
        regime: formula.regime,
        rows,
        notes: Vec::new(),
    })
}

/// Formula, walker and printed totals for comparator rounding at `(n, m)`.
pub fn reconcile_qr(n: u32, m: u32, regime: Regime) -> Result<ReconciliationReport> {
    let formula = compose_qr_cost(n, m, regime)?;
    let walker = walker_rounding(RoundingMethod::QrComparator, n, m, regime)?;
    let published = (regime == Regime::Ft && n == 10 && m == 10).then(published_totals);
    let mut report = reconcile(&formula, &walker, published.as_ref())?;
    report.notes.push(format!(
        "formula: comparator loading (m = {m}) then controlled one-ulp addition (n = {n}); ancillas combine by max"
    ));
    report.notes.push("walker: expanded rounding circuit with per-regime gate charges".to_string());
    if published.is_some() {
        report.notes.push("published: printed totals for n = m = 10".to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loading_examples() {
        let r = loading_cost_qr(10, Regime::Ft).unwrap();
        assert_eq!(
            (r.additional_qubits, r.uncomputed_ancillas, r.t_count, r.t_depth, r.cnot_count, r.cnot_depth),
            (11, 34, 192, 13, 498, 67)
        );
        assert_eq!(loading_cost_qr(2, Regime::Ft).unwrap().t_count, 24);
        assert_eq!(loading_cost_qr(10, Regime::Nisq).unwrap().two_qubit_count, 258);
        assert!(loading_cost_qr(1, Regime::Ft).is_err());
    }

    #[test]
    fn semi_round_loading_examples() {
        let eps = pow2(-10);
        let r = loading_cost_qsr(10, Regime::Nisq, &eps).unwrap();
        assert_eq!((r.two_qubit_count, r.single_qubit_count, r.additional_qubits), (105, 18, 1));
        let f = loading_cost_qsr(10, Regime::Ft, &eps).unwrap();
        assert_eq!((f.two_qubit_count, f.additional_qubits), (170, 1));
        // 36·10 + 3·10·⌈11.49⌉ − 12 and 12·10 + ⌈114.9⌉ − 3
        assert_eq!(f.t_count, 360 + 30 * 12 - 12);
        assert_eq!(f.t_depth, 120 + 115 - 3);
    }

    #[test]
    fn ctrl_add_examples() {
        let r = ctrl_add_cost(10, Regime::Ft).unwrap();
        assert_eq!((r.t_count, r.t_depth, r.cnot_count, r.cnot_depth, r.additional_qubits), (436, 19, 1011, 191, 1));
        assert_eq!(r.uncomputed_ancillas, 30);
        assert_eq!(ctrl_add_cost(10, Regime::Nisq).unwrap().two_qubit_count, 563);
        assert!(ctrl_add_cost(1, Regime::Ft).is_err());
    }

    #[test]
    fn composition_at_ten() {
        let r = compose_qr_cost(10, 10, Regime::Ft).unwrap();
        assert_eq!(
            (r.additional_qubits, r.uncomputed_ancillas, r.t_count, r.t_depth, r.cnot_count, r.cnot_depth),
            (12, 34, 628, 32, 1509, 258)
        );
    }

    #[test]
    fn leading_order_ratio_values() {
        // composed T-count against 24m + 30n; the controlled addition grows
        // like 58n, so the ratio climbs toward 82/54
        let ratio = |n: u32| compose_qr_cost(n, n, Regime::Ft).unwrap().t_count as f64 / (54 * n) as f64;
        let (r16, r32, r64) = (ratio(16), ratio(32), ratio(64));
        assert!(r16 < r32 && r32 < r64 && r64 < 82.0 / 54.0);
        assert_eq!(compose_qr_cost(16, 16, Regime::Ft).unwrap().t_count, 1096);
    }

    #[test]
    fn reconcile_identical_is_zero() {
        let r = compose_qr_cost(6, 5, Regime::Ft).unwrap();
        let rep = reconcile(&r, &r, Some(&r)).unwrap();
        assert_eq!(rep.rows.len(), METRICS.len());
        assert!(rep.rows.iter().all(|row| row.walker_minus_formula == 0 && row.formula_minus_published == Some(0)));
    }

    #[test]
    fn reconcile_published_deltas() {
        let rep = reconcile_qr(10, 10, Regime::Ft).unwrap();
        let mut deltas = rep.published_deltas();
        deltas.retain(|(m, _)| !m.starts_with("two_qubit"));
        assert_eq!(deltas, vec![("t_count", 40), ("cnot_depth", -65)]);
    }

    #[test]
    fn reconcile_rejects_mixed_regimes() {
        let a = loading_cost_qr(4, Regime::Ft).unwrap();
        let b = loading_cost_qr(4, Regime::Nisq).unwrap();
        assert!(matches!(reconcile(&a, &b, None), Err(Error::RegimeMismatch(..))));
    }

    #[test]
    fn walker_agrees_on_comparator_loading() {
        for m in [2u32, 4, 8, 10, 16] {
            let f = loading_cost_qr(m, Regime::Ft).unwrap();
            let w = walker_loading_qr(m, Regime::Ft).unwrap();
            assert_eq!(w.t_count, f.t_count, "m={m}");
            assert_eq!(w.additional_qubits, f.additional_qubits, "m={m}");
            // separate output qubit: one copy CNOT and one working qubit more
            assert_eq!(w.cnot_count, f.cnot_count + 1, "m={m}");
            assert_eq!(w.uncomputed_ancillas, f.uncomputed_ancillas + 1, "m={m}");
        }
        assert_eq!(walker_loading_qr(10, Regime::Ft).unwrap().t_count, 4 * 48);
    }

    #[test]
    fn composition_is_monotone() {
        for regime in [Regime::Ft, Regime::Nisq] {
            for n in 2..40u32 {
                for m in 2..40u32 {
                    let base = compose_qr_cost(n, m, regime).unwrap();
                    for next in [compose_qr_cost(n + 1, m, regime).unwrap(), compose_qr_cost(n, m + 1, regime).unwrap()]
                    {
                        for (name, v) in base.metrics() {
                            assert!(next.metric(name).unwrap() >= v, "{regime} n={n} m={m} {name}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn halving_sums() {
        assert_eq!(halving_sum(10), 8);
        assert_eq!(halving_sum(9), 7);
        assert_eq!(halving_sum(1), 0);
    }
}

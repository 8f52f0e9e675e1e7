//! Command-line front end. Every subcommand writes a versioned JSON, CSV or
//! plain-table document to stdout or `--output`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 bound violation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::blocks;
use crate::circuit::{expand, Circuit, Regime, ResourceReport};
use crate::cost::{self, ReconciliationReport};
use crate::fxp::ExtendedValue;
use crate::mult::{self, MultiplyMethod, PlanOptions};
use crate::rounding::{self, RoundingMethod};
use crate::sim::{sample, Backend, SampleRecord, SampleRequest, Simulator};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BOUND: i32 = 2;

pub const ESTIMATE_SCHEMA_VERSION: u32 = 1;
pub const BENCH_SCHEMA_VERSION: u32 = 1;

pub const ESTIMATE_HEADER: [&str; 15] = [
    "source",
    "method",
    "regime",
    "n",
    "m",
    "qubits",
    "ancillas",
    "t_count",
    "t_depth",
    "cnot_count",
    "cnot_depth",
    "two_qubit_count",
    "two_qubit_depth",
    "single_qubit_count",
    "single_qubit_depth",
];

#[derive(Debug, Parser)]
#[command(name = "qround", version, about = "Quantum rounding of fixed-point registers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a rounding method on one value and check the concentration bound.
    Round(RoundArgs),
    /// Closed-form and walker resource estimates for one rounding method.
    Estimate(EstimateArgs),
    /// Multiplication benchmark sweeps as CSV.
    Bench(BenchArgs),
    /// Per-metric reconciliation of formula, walker and printed totals.
    Reconcile(ReconcileArgs),
    /// Emit a circuit as JSON.
    Circuit(CircuitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Ft,
    Nisq,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Regime {
        match r {
            RegimeArg::Ft => Regime::Ft,
            RegimeArg::Nisq => Regime::Nisq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Circuit,
    Semantic,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Circuit => Backend::Circuit,
            BackendArg::Semantic => Backend::Semantic,
        }
    }
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoundArgs {
    /// Value as `<int>.<frac>|<remainder>` bits, most significant first.
    #[arg(long)]
    pub value: String,
    #[arg(long, default_value = "qr-comparator")]
    pub method: String,
    /// Window size for semi-rounding (`--method qsr`).
    #[arg(long)]
    pub l: Option<u32>,
    /// Expected retained width; must match the value.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long = "samples", short = 'N', default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, env = "QROUND_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "semantic")]
    pub backend: BackendArg,
    /// Failure probability of the bound; `1/N` by default.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Simulator qubit cap for the circuit backend.
    #[arg(long, default_value_t = 24)]
    pub qubit_cap: usize,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: u32,
    #[arg(long, value_enum, default_value = "ft")]
    pub regime: RegimeArg,
    #[arg(long, default_value = "qr-comparator")]
    pub method: String,
    #[arg(long)]
    pub l: Option<u32>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMode {
    SizeSweep,
    SampleSweep,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub mode: BenchMode,
    /// Register sizes; defaults to 4..=16 for size sweeps and 10 otherwise.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u32>,
    /// Sample counts; defaults to 10^4 for size sweeps and 10..=10^6 by
    /// decades otherwise.
    #[arg(long = "samples", short = 'N', value_delimiter = ',')]
    pub samples: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    pub p: u32,
    #[arg(long, value_enum, default_value = "ft")]
    pub regime: RegimeArg,
    /// Also write a gnuplot script reading the CSV to this path.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconcileArgs {
    #[arg(long, default_value_t = 10)]
    pub n: u32,
    #[arg(long, default_value_t = 10)]
    pub m: u32,
    #[arg(long, value_enum, default_value = "ft")]
    pub regime: RegimeArg,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    /// A rounding method, or one of add-const, add-registers, ctrl-add-const,
    /// comparator, mult-exact, mult-haner, mult-qround.
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub m: u32,
    #[arg(long)]
    pub l: Option<u32>,
    /// Constant for the constant adders.
    #[arg(long, default_value_t = 1)]
    pub c: u128,
    #[arg(long, default_value_t = 0)]
    pub p: u32,
    #[arg(long = "samples", short = 'N')]
    pub samples: Option<u64>,
    /// Expand macros for this regime before emitting.
    #[arg(long, value_enum)]
    pub expand: Option<RegimeArg>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Round(a) => cmd_round(&a, stdout),
        Command::Estimate(a) => cmd_estimate(&a, stdout),
        Command::Bench(a) => cmd_bench(&a, stdout),
        Command::Reconcile(a) => cmd_reconcile(&a, stdout),
        Command::Circuit(a) => cmd_circuit(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) | Err(Failure::Io(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn emit(text: &str, path: Option<&PathBuf>, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<S: Serialize>(v: &S) -> std::result::Result<String, Failure> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Failure::Io(e.to_string()))
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> std::result::Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn table_text(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn rounding_method(name: &str, l: Option<u32>) -> std::result::Result<RoundingMethod, Failure> {
    let method: RoundingMethod = name.parse()?;
    Ok(match (method, l) {
        (RoundingMethod::SemiRound, Some(l)) if l > 1 => RoundingMethod::SemiRoundL(l),
        (m, _) => m,
    })
}

fn cmd_round(a: &RoundArgs, stdout: &mut dyn Write) -> CmdResult {
    let value: ExtendedValue = a.value.parse()?;
    if let Some(n) = a.n {
        if n != value.format.n() {
            return Err(Failure::Usage(format!(
                "--n {n} does not match the {} retained bits of `{}`",
                value.format.n(),
                a.value
            )));
        }
    }
    let method = rounding_method(&a.method, a.l)?;
    let req =
        SampleRequest { method, value, samples: a.samples, seed: a.seed, backend: a.backend.into(), alpha: a.alpha };
    let stats = sample::<f64>(&req, &Simulator::with_cap(a.qubit_cap))?;
    let record = SampleRecord::from(&stats);
    let text = match a.out.format {
        Format::Json => to_json(&record)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&record).map_err(|e| Failure::Io(e.to_string()))?;
            String::from_utf8(w.into_inner().map_err(|e| Failure::Io(e.to_string()))?)
                .map_err(|e| Failure::Io(e.to_string()))?
        }
        Format::Table => {
            let v = serde_json::to_value(&record).map_err(|e| Failure::Io(e.to_string()))?;
            table_text(&flatten(&v))
        }
    };
    emit(&text, a.out.output.as_ref(), stdout)?;
    Ok(if record.within_bound { EXIT_OK } else { EXIT_BOUND })
}

fn flatten(v: &Value) -> Vec<(String, String)> {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), s)
            })
            .collect(),
        other => vec![("value".into(), other.to_string())],
    }
}

/// Metrics reported for each regime.
pub fn regime_metrics(regime: Regime) -> &'static [&'static str] {
    match regime {
        Regime::Ft => &["additional_qubits", "uncomputed_ancillas", "t_count", "t_depth", "cnot_count", "cnot_depth"],
        Regime::Nisq => &[
            "additional_qubits",
            "uncomputed_ancillas",
            "two_qubit_count",
            "two_qubit_depth",
            "single_qubit_count",
            "single_qubit_depth",
        ],
    }
}

/// A report restricted to the metrics of its regime.
pub fn report_json(r: &ResourceReport) -> Value {
    let mut map = Map::new();
    map.insert("regime".into(), json!(r.regime.to_string()));
    for name in regime_metrics(r.regime) {
        map.insert((*name).into(), json!(r.metric(name).unwrap()));
    }
    Value::Object(map)
}

fn reconciliation_json(rep: &ReconciliationReport) -> Value {
    let keep = regime_metrics(rep.regime);
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .filter(|r| keep.contains(&r.metric.as_str()))
        .map(|r| serde_json::to_value(r).unwrap_or(Value::Null))
        .collect();
    json!({
        "schema_version": rep.schema_version,
        "regime": rep.regime.to_string(),
        "rows": rows,
        "notes": rep.notes,
    })
}

/// Formula and walker paths for one rounding method.
pub struct Estimate {
    pub method: RoundingMethod,
    pub n: u32,
    pub m: u32,
    pub formula: Option<ResourceReport>,
    pub walker: ResourceReport,
    pub reconciliation: Option<ReconciliationReport>,
}

pub fn estimate(method: RoundingMethod, n: u32, m: u32, regime: Regime) -> Result<Estimate> {
    let walker = cost::walker_rounding(method, n, m, regime)?;
    let eps = crate::fxp::pow2(-(m as i64));
    let formula = match method {
        RoundingMethod::QrComparator => Some(cost::compose_qr_cost(n, m, regime)?),
        RoundingMethod::SemiRound => Some(cost::compose_qsr_cost(n, m, regime, &eps)?),
        _ => None,
    };
    let reconciliation = match (method, &formula) {
        (RoundingMethod::QrComparator, _) => Some(cost::reconcile_qr(n, m, regime)?),
        (_, Some(f)) => Some(cost::reconcile(f, &walker, None)?),
        _ => None,
    };
    Ok(Estimate { method, n, m, formula, walker, reconciliation })
}

fn estimate_row(source: &str, e: &Estimate, r: &ResourceReport) -> Vec<String> {
    let keep = regime_metrics(r.regime);
    let field = |name: &str| {
        if keep.contains(&name) {
            r.metric(name).unwrap().to_string()
        } else {
            String::new()
        }
    };
    let mut row = vec![
        source.to_string(),
        e.method.to_string(),
        r.regime.to_string(),
        e.n.to_string(),
        e.m.to_string(),
        field("additional_qubits"),
        field("uncomputed_ancillas"),
    ];
    for name in &ESTIMATE_HEADER[7..] {
        row.push(field(name));
    }
    row
}

fn cmd_estimate(a: &EstimateArgs, stdout: &mut dyn Write) -> CmdResult {
    let method = rounding_method(&a.method, a.l)?;
    let regime: Regime = a.regime.into();
    let e = estimate(method, a.n, a.m, regime)?;
    let published = (regime == Regime::Ft && method == RoundingMethod::QrComparator && a.n == 10 && a.m == 10)
        .then(cost::published_totals);
    let text = match a.out.format {
        Format::Json => {
            let mut doc = json!({
                "schema_version": ESTIMATE_SCHEMA_VERSION,
                "method": method.to_string(),
                "regime": regime.to_string(),
                "n": a.n,
                "m": a.m,
                "formula": e.formula.as_ref().map(report_json),
                "walker": report_json(&e.walker),
                "reconciliation": e.reconciliation.as_ref().map(reconciliation_json),
            });
            if let (Some(p), Some(rep)) = (&published, &e.reconciliation) {
                doc["comparison"] = json!({
                    "published": report_json(p),
                    "formula_minus_published": rep
                        .published_deltas()
                        .into_iter()
                        .filter(|(m, _)| regime_metrics(regime).contains(m))
                        .map(|(m, d)| (m.to_string(), json!(d)))
                        .collect::<Map<String, Value>>(),
                });
            }
            to_json(&doc)?
        }
        Format::Csv => {
            let mut rows = Vec::new();
            if let Some(f) = &e.formula {
                rows.push(estimate_row("formula", &e, f));
            }
            rows.push(estimate_row("walker", &e, &e.walker));
            if let Some(p) = &published {
                rows.push(estimate_row("published", &e, p));
            }
            csv_text(&ESTIMATE_HEADER, &rows)?
        }
        Format::Table => {
            let mut rows = vec![("metric".to_string(), "formula  walker  published".to_string())];
            for name in regime_metrics(regime) {
                let f = e.formula.as_ref().map_or("-".to_string(), |r| r.metric(name).unwrap().to_string());
                let w = e.walker.metric(name).unwrap().to_string();
                let p = published.as_ref().map_or("-".to_string(), |r| r.metric(name).unwrap().to_string());
                rows.push((name.to_string(), format!("{f:>7}  {w:>6}  {p:>5}")));
            }
            table_text(&rows)
        }
    };
    emit(&text, a.out.output.as_ref(), stdout)?;
    Ok(EXIT_OK)
}

fn gnuplot_script(csv_name: &str, mode: BenchMode) -> String {
    let (x, col, logx) = match mode {
        BenchMode::SizeSweep => ("n", 2, ""),
        BenchMode::SampleSweep => ("N", 4, "set logscale x\n"),
    };
    let mut s = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel '{x}'\n{logx}set terminal pngcairo size 900,600\n"
    );
    for (metric, column) in [("t_count", 8), ("t_depth", 9), ("cnot_count", 10), ("cnot_depth", 11), ("qubits", 6)] {
        s += &format!("set output '{metric}.png'\nset ylabel '{metric}'\nplot ");
        let plots: Vec<String> = MultiplyMethod::ALL
            .iter()
            .map(|m| {
                format!("'{csv_name}' using (strcol(1) eq '{m}' ? ${col} : 1/0):{column} with linespoints title '{m}'")
            })
            .collect();
        s += &plots.join(", \\\n     ");
        s += "\n";
    }
    s
}

fn cmd_bench(a: &BenchArgs, stdout: &mut dyn Write) -> CmdResult {
    let ns = if a.n.is_empty() {
        match a.mode {
            BenchMode::SizeSweep => (4..=16).collect(),
            BenchMode::SampleSweep => vec![10],
        }
    } else {
        a.n.clone()
    };
    let samples = if a.samples.is_empty() {
        match a.mode {
            BenchMode::SizeSweep => vec![10_000],
            BenchMode::SampleSweep => (1..=6).map(|k| 10u64.pow(k)).collect(),
        }
    } else {
        a.samples.clone()
    };
    if samples.contains(&0) {
        return Err(Failure::Usage("sample counts must be positive".into()));
    }
    let rows = mult::bench_grid(&ns, &samples, a.p, a.regime.into())?;
    let text = match a.format {
        Format::Csv => mult::bench_csv(&rows)?,
        Format::Json => to_json(&json!({ "schema_version": BENCH_SCHEMA_VERSION, "rows": rows }))?,
        Format::Table => {
            let csv = mult::bench_csv(&rows)?;
            csv.replace(',', "\t")
        }
    };
    emit(&text, a.output.as_ref(), stdout)?;
    if let Some(path) = &a.gnuplot {
        let csv_name = a
            .output
            .as_ref()
            .and_then(|p| p.file_name())
            .map_or("bench.csv".to_string(), |f| f.to_string_lossy().into_owned());
        std::fs::write(path, gnuplot_script(&csv_name, a.mode))?;
    }
    Ok(EXIT_OK)
}

fn cmd_reconcile(a: &ReconcileArgs, stdout: &mut dyn Write) -> CmdResult {
    let mut rep = cost::reconcile_qr(a.n, a.m, a.regime.into())?;
    let keep = regime_metrics(rep.regime);
    rep.rows.retain(|r| keep.contains(&r.metric.as_str()));
    let text = match a.out.format {
        Format::Json => to_json(&reconciliation_json(&rep))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.metric.clone(),
                        r.formula.to_string(),
                        r.walker.to_string(),
                        r.published.map_or(String::new(), |p| p.to_string()),
                        r.walker_minus_formula.to_string(),
                        r.formula_minus_published.map_or(String::new(), |d| d.to_string()),
                    ]
                })
                .collect();
            csv_text(
                &["metric", "formula", "walker", "published", "walker_minus_formula", "formula_minus_published"],
                &rows,
            )?
        }
        Format::Table => {
            let rows: Vec<(String, String)> = rep
                .rows
                .iter()
                .map(|r| {
                    let published = r.formula_minus_published.map_or("-".into(), |d| format!("{d:+}"));
                    (
                        r.metric.clone(),
                        format!("{} walker{:+} published{}", r.formula, r.walker_minus_formula, published),
                    )
                })
                .collect();
            table_text(&rows)
        }
    };
    emit(&text, a.out.output.as_ref(), stdout)?;
    Ok(EXIT_OK)
}

/// Builds the circuit named by `--method`.
pub fn named_circuit(a: &CircuitArgs) -> Result<Circuit> {
    let n = a.n as usize;
    let multiplier = |method: MultiplyMethod| -> Result<Circuit> {
        let opts = PlanOptions { samples: a.samples, ..PlanOptions::default() };
        mult::build_multiplier(&mult::plan(method, a.n, a.p, &opts)?)
    };
    match a.method.as_str() {
        "add-const" => blocks::add_constant(n, a.c),
        "add-registers" => Ok(blocks::add_registers(n.max(1))),
        "ctrl-add-const" => blocks::ctrl_add_constant(n, a.c),
        "comparator" => Ok(blocks::comparator(n.max(1))),
        "mult-exact" => multiplier(MultiplyMethod::Exact),
        "mult-haner" => multiplier(MultiplyMethod::Haner),
        "mult-qround" => multiplier(MultiplyMethod::QRound),
        other => {
            let method: RoundingMethod = other.parse()?;
            let method = match (method, a.l) {
                (RoundingMethod::SemiRound, Some(l)) if l > 1 => RoundingMethod::SemiRoundL(l),
                (m, _) => m,
            };
            rounding::build(method, n, a.m as usize)
        }
    }
}

fn cmd_circuit(a: &CircuitArgs, stdout: &mut dyn Write) -> CmdResult {
    let mut c = named_circuit(a)?;
    if let Some(r) = a.expand {
        c = expand(&c, r.into())?;
    }
    emit(&(c.to_json()? + "\n"), a.output.as_ref(), stdout)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("qround").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn round_emits_json() {
        let (code, out, _) = call(&[
            "round",
            "--value",
            "00.10|11",
            "--method",
            "qr-comparator",
            "--n",
            "4",
            "--samples",
            "10000",
            "--seed",
            "7",
        ]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["N"], 10000);
        assert_eq!(v["within_bound"], true);
    }

    #[test]
    fn zero_remainder_round_is_exact() {
        let (code, out, _) = call(&["round", "--value", "01.10|00", "--seed", "1"]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["X"], 0);
        assert_eq!(v["estimate"], "3/2");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&["round", "--value", "0.1x|1"]).0, EXIT_USAGE);
        assert_eq!(call(&["round", "--value", "0.1|1", "--n", "5"]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn nisq_estimate_has_no_t_fields() {
        let (code, out, _) = call(&["estimate", "--n", "10", "--m", "10", "--regime", "nisq"]);
        assert_eq!(code, EXIT_OK);
        assert!(!out.contains("\"t_count\"") && !out.contains("\"cnot_depth\""));
        assert!(out.contains("two_qubit_count"));
    }

    #[test]
    fn estimate_comparison_block() {
        let (_, out, _) = call(&["estimate", "--n", "10", "--m", "10", "--regime", "ft", "--method", "qr-comparator"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["comparison"]["formula_minus_published"]["t_count"], 40);
        assert_eq!(v["comparison"]["formula_minus_published"]["cnot_depth"], -65);
        assert_eq!(v["formula"]["t_count"], 628);
        let (_, qsr, _) = call(&["estimate", "--n", "4", "--m", "4", "--method", "qsr"]);
        let v: Value = serde_json::from_str(&qsr).unwrap();
        assert!(v["formula"].is_object() && v.get("comparison").is_none());
    }

    #[test]
    fn empty_bench_grid_is_header_only() {
        let (code, out, _) = call(&["bench", "--mode", "size-sweep", "--n", "1", "--samples", "100"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out, format!("{}\n", mult::BENCH_HEADER.join(",")));
    }

    #[test]
    fn circuit_json_round_trips() {
        let (code, out, _) = call(&["circuit", "--method", "qr-comparator", "--n", "2", "--m", "2"]);
        assert_eq!(code, EXIT_OK);
        let c = Circuit::from_json(&out).unwrap();
        assert_eq!(c.to_json().unwrap() + "\n", out);
    }
}

use std::process::Command;

use serde_json::Value;

fn qround(args: &[&str]) -> (i32, String) {
    let out =
        Command::new(env!("CARGO_BIN_EXE_qround")).args(args).env_remove("QROUND_SEED").output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out) = qround(args);
    assert_eq!(code, 0, "{args:?}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn circuit_and_semantic_backends_agree_statistically() {
    let base = ["round", "--value", "0.11|0101", "--samples", "20000", "--seed", "5"];
    let mut x = Vec::new();
    for backend in ["circuit", "semantic"] {
        let mut args = base.to_vec();
        args.extend(["--backend", backend]);
        x.push(json(&args)["X"].as_u64().unwrap() as f64);
    }
    // same seed and same probability up to float error: identical counts
    assert_eq!(x[0], x[1]);
    let mut other = Vec::new();
    for (backend, seed) in [("circuit", "8"), ("semantic", "9")] {
        let mut args = base.to_vec();
        args.extend(["--backend", backend]);
        args[6] = seed;
        other.push(json(&args)["X"].as_u64().unwrap() as f64);
    }
    // independent seeds: counts within four standard deviations of each other
    let p: f64 = 5.0 / 16.0;
    let sd = (2.0 * 20000.0 * p * (1.0 - p)).sqrt();
    assert!((other[0] - other[1]).abs() < 4.0 * sd);
}

#[test]
fn seed_falls_back_to_environment() {
    let flag = qround(&["round", "--value", "0.1|011", "--seed", "42"]);
    let env = Command::new(env!("CARGO_BIN_EXE_qround"))
        .args(["round", "--value", "0.1|011"])
        .env("QROUND_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(flag.1, String::from_utf8(env.stdout).unwrap());
}

#[test]
fn biased_method_reports_bound_violation() {
    let (code, out) = qround(&["round", "--value", "1.01|101", "--method", "qsr", "--seed", "3"]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["within_bound"], false);
}

#[test]
fn output_file_and_gnuplot_script() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let gp = dir.path().join("sweep.gp");
    let (code, stdout) = qround(&[
        "bench",
        "--mode",
        "sample-sweep",
        "--samples",
        "10,10000",
        "--output",
        csv.to_str().unwrap(),
        "--gnuplot",
        gp.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    let script = std::fs::read_to_string(&gp).unwrap();
    assert!(script.contains("'sweep.csv'") && script.contains("t_count"));
}

#[test]
fn size_sweep_ordering() {
    let (code, out) = qround(&["bench", "--mode", "size-sweep", "--n", "6,8,10,12"]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 12);
    for chunk in rows.chunks(3) {
        let t: Vec<u64> = chunk.iter().map(|r| r[7].parse().unwrap()).collect();
        assert_eq!((&chunk[0][0], &chunk[1][0], &chunk[2][0]), ("exact", "haner", "qround"));
        assert!(t[2] < t[1] && t[1] < t[0], "{t:?}");
    }
}

#[test]
fn reconcile_reports_two_table_deltas() {
    let v = json(&["reconcile", "--n", "10", "--m", "10", "--regime", "ft"]);
    let deltas: Vec<(String, i64)> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|r| {
            let d = r["formula_minus_published"].as_i64().filter(|d| *d != 0)?;
            Some((r["metric"].as_str().unwrap().to_string(), d))
        })
        .collect();
    assert_eq!(deltas, vec![("t_count".to_string(), 40), ("cnot_depth".to_string(), -65)]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn add_constant_circuit_emission() {
    let v = json(&["circuit", "--method", "add-const", "--n", "10", "--c", "1"]);
    let gates = v["gates"].as_array().unwrap();
    let count = |kind: &str| gates.iter().filter(|g| g["kind"] == kind).count();
    assert_eq!(count("toffoli"), 39);
    assert_eq!(v["qubits"], 25);
}

#[test]
fn estimate_csv_schema() {
    let (code, out) = qround(&["estimate", "--n", "10", "--m", "10", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "source,method,regime,n,m,qubits,ancillas,t_count,t_depth,cnot_count,cnot_depth,two_qubit_count,two_qubit_depth,single_qubit_count,single_qubit_depth"
    );
    assert!(lines[1].starts_with("formula,qr-comparator,ft,10,10,12,34,628,32,1509,258,,"));
    assert!(lines[3].starts_with("published,qr-comparator,ft,10,10,12,34,588,32,1509,323"));
}

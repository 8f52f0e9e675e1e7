use num_traits::ToPrimitive;
use qround::analysis::{avg_error, qr_error_bound, AvgErrorKind};
use qround::fxp::{ExtendedValue, FxFormat};
use qround::rounding::{semantic_round_probability, RoundingMethod};
use qround::sim::{circuit_round_probability, sample, Backend, SampleRequest, Simulator};

const METHODS: [RoundingMethod; 5] = [
    RoundingMethod::Stochastic,
    RoundingMethod::QrComparator,
    RoundingMethod::QrRotation,
    RoundingMethod::SemiRound,
    RoundingMethod::SemiRoundL(2),
];

#[test]
fn circuits_match_probability_oracles() {
    let sim = Simulator::with_cap(48);
    let format = FxFormat::new(2, 1).unwrap();
    for method in METHODS {
        for m in 3..=4u32 {
            for r in 0..1u128 << m {
                let v = ExtendedValue::from_parts(format, m, 2, r).unwrap();
                let circuit: f64 = circuit_round_probability(&sim, method, &v).unwrap();
                let oracle = semantic_round_probability(method, r, m).unwrap().to_f64().unwrap();
                assert!((circuit - oracle).abs() < 1e-10, "{method} m={m} r={r}: {circuit} vs {oracle}");
            }
        }
    }
}

#[test]
fn semi_rounding_average_from_circuits() {
    let sim = Simulator::with_cap(48);
    let format = FxFormat::new(1, 0).unwrap();
    for m in 2..=4u32 {
        let mut total = 0.0;
        for r in 0..1u128 << m {
            let v = ExtendedValue::from_parts(format, m, 0, r).unwrap();
            let p: f64 = circuit_round_probability(&sim, RoundingMethod::SemiRound, &v).unwrap();
            total += (p - r as f64 / (1u64 << m) as f64).abs();
        }
        let avg = total / (1u64 << m) as f64;
        let closed = avg_error(AvgErrorKind::SemiRound, m).unwrap().to_f64().unwrap();
        assert!((avg - closed).abs() < 1e-10, "m={m}: {avg} vs {closed}");
    }
}

#[test]
fn estimates_tighten_with_more_samples() {
    let v: ExtendedValue = "0.1011|100101".parse().unwrap();
    let exact = v.value().to_f64().unwrap();
    let ulp = v.format.ulp().to_f64().unwrap();
    let sim = Simulator::default();
    for samples in [100u64, 10_000, 1_000_000] {
        let req = SampleRequest {
            method: RoundingMethod::QrComparator,
            value: v,
            samples,
            seed: 2024,
            backend: Backend::Semantic,
            alpha: Some(1e-6),
        };
        let stats = sample::<f64>(&req, &sim).unwrap();
        let err = (stats.estimate.to_f64().unwrap() - exact).abs();
        assert!(err <= qr_error_bound(samples, 1e-6, ulp), "N={samples}: {err}");
        assert!(stats.within_bound);
    }
}

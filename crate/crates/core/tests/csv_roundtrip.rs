use bmpce::harness::{read_results, write_results, TrialRecord, CSV_HEADER};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(f64::NAN),
        Just(f64::INFINITY),
        Just(0.0),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ]
}

fn record() -> impl Strategy<Value = TrialRecord> {
    (
        0usize..10_000,
        -50.0f64..100.0,
        0.001f64..0.999,
        1usize..256,
        prop::sample::select(vec!["bmp", "omp", "cosamp", "sl0", "oracle", "perfect_csi"]),
        value(),
        value(),
        any::<u32>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(trial, snr_db, p1, pilots, alg, mse, ber, micros, hit, failed)| TrialRecord {
            trial,
            snr_db,
            p1,
            pilots,
            algorithm: alg.to_string(),
            mse,
            ber,
            cpu_micros: micros as u64,
            support_recovered: hit,
            failed,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_survive_a_round_trip(records in prop::collection::vec(record(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_results(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        prop_assert_eq!(text.lines().next(), Some(CSV_HEADER));
        prop_assert_eq!(text.lines().count(), records.len() + 1);
        let back = read_results(&path).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            prop_assert!(a.same_outcome(b), "{a:?} vs {b:?}");
            prop_assert_eq!(a.cpu_micros, b.cpu_micros);
        }
    }
}

mod common;

use bmpce::bmp::{pi_delta, pi_direct, search, CandidateNode};
use bmpce::linalg::spectral_norm;
use bmpce::{FieldMode, SupportIndicator, C64};
use common::{case, dense_covariance};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn field() -> impl Strategy<Value = FieldMode> {
    prop_oneof![Just(FieldMode::Real), Just(FieldMode::Complex)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deltas_match_dense_differences(seed in any::<u64>(), taps in 4usize..=32, field in field(), depth in 0usize..5) {
        let pilots = (taps * 2 / 3).max(3);
        let c = case(seed, taps, pilots, 0.15, 15.0, field);
        let chosen: Vec<usize> = (0..depth).map(|i| (seed as usize / 7 + 5 * i) % taps).collect();
        let support = SupportIndicator::from_indices(taps, &chosen).unwrap();
        let node = CandidateNode::from_support(&support, &c.y, &c.system, &c.config).unwrap();
        let base = pi_direct(&support, &c.y, &c.system, &c.config).unwrap();
        prop_assert!((node.pi - base).abs() < 1e-8 * (1.0 + base.abs()));
        for tap in (0..taps).filter(|&t| !support.is_active(t)) {
            let d = pi_delta(&node, tap, &c.y, &c.system, &c.config).unwrap();
            let direct = pi_direct(&support.with(tap), &c.y, &c.system, &c.config).unwrap() - base;
            prop_assert!((d.gain - direct).abs() < 1e-8, "tap {tap}: {} vs {direct}", d.gain);
            prop_assert!(d.beta > 0.0 && d.beta <= 1.0);
        }
    }

    #[test]
    fn cached_inverse_matches_dense(seed in any::<u64>(), size in 0usize..=8, field in field()) {
        let c = case(seed, 32, 20, 0.1, 20.0, field);
        let chosen: Vec<usize> = (0..size).map(|i| (seed as usize % 29 + 3 * i) % 32).collect();
        let support = SupportIndicator::from_indices(32, &chosen).unwrap();
        let node = CandidateNode::from_support(&support, &c.y, &c.system, &c.config).unwrap();
        let inv = node.inverse_covariance(c.system.rows(), &c.config).unwrap();
        let prod = inv * dense_covariance(&c.system, &support.active(), &c.config);
        let err = spectral_norm(&(prod - DMatrix::<C64>::identity(20, 20)));
        prop_assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn retained_candidates_are_consistent(seed in any::<u64>(), d in 1usize..6, field in field()) {
        let c = case(seed, 24, 14, 0.15, 20.0, field);
        let config = c.config.with_branch_width(d).with_max_support(5);
        let set = search(&c.y, &c.system, &config).unwrap();
        let total: f64 = set.weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut supports: Vec<Vec<usize>> = set.candidates.iter().map(|n| n.support.active()).collect();
        supports.sort();
        supports.dedup();
        prop_assert_eq!(supports.len(), set.len());
        for node in &set.candidates {
            let direct = pi_direct(&node.support, &c.y, &c.system, &config).unwrap();
            prop_assert!((node.pi - direct).abs() < 1e-8 * (1.0 + direct.abs()));
            prop_assert!(node.betas().iter().all(|&b| b > 0.0 && b <= 1.0));
        }
    }
}

mod common;

use proptest::prelude::*;

use common::link_spreads;
use entnet::doqkd::{
    analyze_link_key, binary_entropy, estimate_qber, leakage_bound, mutual_information, secret_fraction, secure_key_rate,
    symmetric_channel_information, zero_crossing_qber, QkdParams, SiftedKeyMaterial,
};
use entnet::photonics::{dispersion_time_shift, nm_per_ghz, DispersionConfig, DispersionPath};
use entnet::plan::{build_plan, ChannelGrid, PlanSpec, SubnetId};
use entnet::sim::{run_scenario, Scenario};

/// Key material realising a `d`-ary symmetric channel exactly: per input
/// symbol, `keep` correct outputs and `wrong` of each other symbol.
fn symmetric_material(d: u32, keep: u32, wrong: u32) -> SiftedKeyMaterial {
    let mut pairs = Vec::new();
    for a in 0..d {
        pairs.extend(std::iter::repeat_n((a, a), keep as usize));
        for b in (0..d).filter(|&b| b != a) {
            pairs.extend(std::iter::repeat_n((a, b), wrong as usize));
        }
    }
    SiftedKeyMaterial::from_pairs(d, pairs)
}

proptest! {
    #[test]
    fn plug_in_information_matches_closed_form(log_d in 1u32..=4, keep in 1u32..400, wrong in 0u32..30) {
        let d = 1 << log_d;
        let m = symmetric_material(d, keep, wrong);
        let q = estimate_qber(&m).unwrap();
        let expected_q = (wrong * (d - 1)) as f64 / (keep + wrong * (d - 1)) as f64;
        prop_assert!((q - expected_q).abs() < 1e-12);
        let closed = log_d as f64 - binary_entropy(q) - q * ((d - 1) as f64).log2();
        prop_assert!((mutual_information(&m).unwrap() - closed).abs() < 1e-9);
        prop_assert!((symmetric_channel_information(q, d) - closed).abs() < 1e-9);
    }

    #[test]
    fn secret_fraction_is_bounded(i in 0f64..8.0, q in 0f64..=1.0, beta in 0.01f64..=1.0, log_d in 1u32..=5) {
        let d = 1 << log_d;
        let f = secret_fraction(i, q, beta, d);
        prop_assert!(f >= 0.0);
        prop_assert!(f <= log_d as f64 + 1e-12);
    }

    #[test]
    fn rates_vanish_beyond_the_zero_crossing(beta in 0.5f64..=1.0, excess in 0f64..=1.0) {
        let q0 = zero_crossing_qber(beta, 8);
        let q = q0 + excess * (1.0 - q0);
        prop_assert_eq!(secret_fraction(symmetric_channel_information(q, 8), q, beta, 8), 0.0);
        prop_assert!(leakage_bound(q, 8) >= beta * symmetric_channel_information(q, 8) - 1e-12);
    }
}

#[test]
fn key_rate_clamps_at_the_zero_crossing() {
    let q0 = zero_crossing_qber(0.9, 8);
    // Closest realisable QBER at or above q0 with 7 wrong symbols per input.
    let wrong = 1000;
    let keep = ((wrong * 7) as f64 * (1.0 - q0) / q0).floor() as u32;
    let m = symmetric_material(8, keep, wrong);
    let q = estimate_qber(&m).unwrap();
    assert!(q >= q0);
    assert_eq!(secure_key_rate(&m, 1000.0, 0.9, None).unwrap().secure_rate, 0.0);
    let clean = symmetric_material(8, keep * 2, wrong);
    assert!(secure_key_rate(&clean, 1000.0, 0.9, None).unwrap().secure_rate > 0.0);
}

#[test]
fn opposite_paths_cancel_to_first_order() {
    let grid = ChannelGrid::default();
    let d = 1980.0;
    for offset in [5, 12, 19] {
        let (s, i) = (grid.channel(40 + offset).unwrap(), grid.channel(40 - offset).unwrap());
        for nu in [-50.0, -20.0, 0.0, 35.0, 50.0] {
            let normal = DispersionConfig::new(d, DispersionPath::Normal);
            let anomalous = DispersionConfig::new(d, DispersionPath::Anomalous);
            let residual = dispersion_time_shift(nu, s, &normal) - dispersion_time_shift(-nu, i, &anomalous);
            let expected = d * nu.abs() * (nm_per_ghz(i) - nm_per_ghz(s)).abs();
            assert!((residual.abs() - expected).abs() < 1e-9, "C{}/C{} {nu}: {residual}", 40 + offset, 40 - offset);
            let same = dispersion_time_shift(nu, s, &normal) - dispersion_time_shift(-nu, i, &normal);
            assert!((same.abs() - d * nu.abs() * (nm_per_ghz(s) + nm_per_ghz(i))).abs() < 1e-9);
        }
    }
}

#[test]
fn cancellation_holds_across_bandwidths() {
    let mut same_sign = Vec::new();
    for bandwidth in [25.0, 50.0, 100.0] {
        let s = link_spreads(bandwidth, 5, 2.0, 31);
        assert!(s.matched_pairs > 300 && s.same_sign_pairs > 300, "{} / {}", s.matched_pairs, s.same_sign_pairs);
        assert!(s.matched_ps <= 1.2 * s.jitter_floor_ps, "{bandwidth} GHz: {} vs floor {}", s.matched_ps, s.jitter_floor_ps);
        same_sign.push(s.same_sign_ps);
    }
    // Same-sign broadening scales with bandwidth once it dominates the jitter.
    let ratio = same_sign[2] / same_sign[1];
    assert!((ratio - 2.0).abs() < 0.3, "{same_sign:?}");
    assert!(same_sign[0] < same_sign[1]);
}

#[test]
fn dark_counts_only_lower_the_secure_rate() {
    let plan = build_plan(&PlanSpec::new(1, 2)).unwrap();
    let (a, b) = (plan.user_at(SubnetId(0), 0), plan.user_at(SubnetId(0), 1));
    let rate = |dark: f64| {
        let mut sc = Scenario::default();
        sc.source.pair_rate = 4e6;
        sc.detector.dark_rate = dark;
        let out = run_scenario(&plan, &sc, 1.0, 9).unwrap();
        analyze_link_key(&out, &plan, &sc, a, b, &QkdParams::default()).unwrap()
    };
    let clean = rate(0.0);
    let noisy = rate(3e5);
    assert!(clean.qber().unwrap() < noisy.qber().unwrap(), "{:?} vs {:?}", clean.qber(), noisy.qber());
    assert!(clean.secure_rate() > noisy.secure_rate(), "{} vs {}", clean.secure_rate(), noisy.secure_rate());
}

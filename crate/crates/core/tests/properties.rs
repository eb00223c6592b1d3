use bellsim_core::analytic::{ch_analysis, q_joint, q_single, Analysis, MultiwindowMode};
use bellsim_core::detector::{gain, multi_coincidence_prob, multi_single_prob, HalfWindowParams};
use bellsim_core::inequality::{
    ch_to_chsh, ch_value, chsh_value, eval_discrete_lhv, AngleQuad, DiscreteLhvModel, ProbabilityTable,
    SettingIndices, THEOREM_TOLERANCE,
};
use bellsim_core::waveform::{intensity_at, Waveform};
use proptest::prelude::*;

fn lhv_model() -> impl Strategy<Value = DiscreteLhvModel> {
    (1usize..=64).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), n),
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), n),
        )
            .prop_map(|(raw, ra, rb)| {
                let mut raw = raw;
                raw[0] += 1e-3;
                let total: f64 = raw.iter().sum();
                let weights = raw.into_iter().map(|w| w / total).collect();
                DiscreteLhvModel::new(weights, ra, rb).expect("valid model")
            })
    })
}

fn table() -> impl Strategy<Value = ProbabilityTable> {
    prop::array::uniform8(0.0f64..=1.0).prop_map(|v| ProbabilityTable {
        p_a: v[0],
        p_b: v[1],
        p_ab: v[2],
        p_ab_prime: v[3],
        p_a_prime_b: v[4],
        p_a_prime_b_prime: v[5],
        p_a_prime: Some(v[6]),
        p_b_prime: Some(v[7]),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn local_models_obey_ch(model in lhv_model()) {
        let t = eval_discrete_lhv(&model, SettingIndices::default()).unwrap();
        let ch = ch_value(&t).unwrap().ch;
        prop_assert!(ch >= -THEOREM_TOLERANCE, "CH = {ch}");
        let chsh = chsh_value(&ch_to_chsh(&t).unwrap()).unwrap();
        prop_assert!(chsh <= 2.0 + 4.0 * THEOREM_TOLERANCE, "CHSH = {chsh}");
    }
}

proptest! {
    #[test]
    fn chsh_identity(t in table()) {
        let ch = ch_value(&t).unwrap().ch;
        let chsh = chsh_value(&ch_to_chsh(&t).unwrap()).unwrap();
        prop_assert!((chsh - (2.0 - 4.0 * ch)).abs() < 1e-12);
    }

    #[test]
    fn ch_is_affine(t1 in table(), t2 in table(), alpha in 0.0f64..=1.0) {
        let mix = |x: f64, y: f64| alpha * x + (1.0 - alpha) * y;
        let m = ProbabilityTable {
            p_a: mix(t1.p_a, t2.p_a),
            p_b: mix(t1.p_b, t2.p_b),
            p_ab: mix(t1.p_ab, t2.p_ab),
            p_ab_prime: mix(t1.p_ab_prime, t2.p_ab_prime),
            p_a_prime_b: mix(t1.p_a_prime_b, t2.p_a_prime_b),
            p_a_prime_b_prime: mix(t1.p_a_prime_b_prime, t2.p_a_prime_b_prime),
            p_a_prime: None,
            p_b_prime: None,
        };
        let expected = mix(ch_value(&t1).unwrap().ch, ch_value(&t2).unwrap().ch);
        prop_assert!((ch_value(&m).unwrap().ch - expected).abs() < 1e-12);
    }

    #[test]
    fn ch_symmetric_under_party_swap(t in table()) {
        let swapped = ProbabilityTable {
            p_a: t.p_b,
            p_b: t.p_a,
            p_ab_prime: t.p_a_prime_b,
            p_a_prime_b: t.p_ab_prime,
            p_a_prime: t.p_b_prime,
            p_b_prime: t.p_a_prime,
            ..t
        };
        prop_assert!((ch_value(&t).unwrap().ch - ch_value(&swapped).unwrap().ch).abs() < 1e-15);
    }

    #[test]
    fn half_window_probabilities(p in 0.0f64..=1.0, frac in 0.0f64..=1.0) {
        let q = p + frac * (1.0 - p);
        let hw = HalfWindowParams::new(p, q).unwrap();
        let ps = multi_single_prob(p).unwrap();
        let pc = multi_coincidence_prob(&hw);
        prop_assert!((0.0..=1.0).contains(&ps) && ps >= p - 1e-15);
        prop_assert!((0.0..=1.0).contains(&pc));
        if p > 0.0 {
            prop_assert!(gain(&hw).unwrap() > 0.0);
        }
    }

    #[test]
    fn no_detection_probabilities_are_ordered(k in 1e-3f64..100.0, t in -3.2f64..3.2, f in -3.2f64..3.2) {
        let qt = q_single(k, t).unwrap();
        let qtf = q_joint(k, t, f).unwrap();
        prop_assert!(qt > 0.0 && qt <= 1.0);
        // Missing both is harder than missing one.
        prop_assert!(qtf <= qt.min(q_single(k, f).unwrap()) + 1e-15);
    }

    #[test]
    fn shared_shot_analysis_is_local(
        k in 1e-3f64..100.0,
        angles in prop::array::uniform4(0.0f64..std::f64::consts::PI),
    ) {
        let quad = AngleQuad::new(angles[0], angles[1], angles[2], angles[3]).unwrap();
        for analysis in [Analysis::Standard, Analysis::Multiwindow(MultiwindowMode::SharedShots)] {
            let ch = ch_analysis(k, &quad, analysis).unwrap().ch;
            prop_assert!(ch >= -1e-12, "{} CH = {ch}", analysis.name());
        }
    }

    #[test]
    fn waveform_intensity_nonnegative(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..6),
        t in -100.0f64..100.0,
    ) {
        let w = Waveform::from_coefficients(&coeffs, 1.3, 0.7).unwrap();
        prop_assert!(intensity_at(&w, t) >= 0.0);
    }
}

use proptest::prelude::*;

use qot_core::datagen::{label_scenario, scenario_from_seed, GenConfig};
use qot_core::features::{cumsum_mean, extract};
use qot_core::linkmodel::{read_jsonl, write_jsonl};
use qot_core::physics::{combine_snr, eta_closed_form, linear_noise, optimal_power};
use qot_core::{ChannelPlan, LabeledRecord, Link, Scenario, Span};

fn small_config() -> GenConfig {
    GenConfig {
        span_count_values: vec![1, 3, 5, 7],
        ..GenConfig::default()
    }
}

fn scenario(seed: u64) -> Scenario {
    scenario_from_seed(&small_config(), seed).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn spans_strategy() -> impl Strategy<Value = Vec<Span>> {
    prop::collection::vec((10u32..=120, 0.19f64..0.275), 1..8)
        .prop_map(|v| v.into_iter().map(|(l, a)| Span::ssmf(l as f64, a)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cumsum_reversal_identity(xs in prop::collection::vec(0.0f64..200.0, 1..60)) {
        let n = xs.len() as f64;
        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        let lhs = cumsum_mean(&xs) + cumsum_mean(&rev);
        let rhs = (1.0 + 1.0 / n) * xs.iter().sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eta_adds_over_concatenated_links(seed in any::<u64>(), a in spans_strategy(), b in spans_strategy()) {
        let plan = scenario(seed).plan;
        let la = Link::new(a.clone()).unwrap();
        let lb = Link::new(b.clone()).unwrap();
        let lab = Link::new(a.into_iter().chain(b).collect()).unwrap();
        let sum = eta_closed_form(&la, &plan).unwrap() + eta_closed_form(&lb, &plan).unwrap();
        prop_assert!(close(eta_closed_form(&lab, &plan).unwrap(), sum, 1e-12));
        let cut = plan.cut();
        let noise = linear_noise(&la, cut, 5.0) + linear_noise(&lb, cut, 5.0);
        prop_assert!(close(linear_noise(&lab, cut, 5.0), noise, 1e-12));
    }

    #[test]
    fn eta_ignores_uniform_power_shift(seed in any::<u64>(), shift in -10.0f64..10.0) {
        let s = scenario(seed);
        let mut shifted = s.plan.clone();
        for c in &mut shifted.channels {
            c.launch_power += shift;
        }
        let a = eta_closed_form(&s.link, &s.plan).unwrap();
        let b = eta_closed_form(&s.link, &shifted).unwrap();
        prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
    }

    #[test]
    fn optimal_power_maximizes_snr(seed in any::<u64>()) {
        let r = label_scenario(scenario(seed), 5.0).unwrap();
        let p_opt = optimal_power(r.sigma2, r.eta).unwrap();
        let best = combine_snr(p_opt, r.sigma2, r.eta, 0.0).unwrap();
        for k in -300..=300 {
            let p = p_opt + k as f64 * 0.01;
            prop_assert!(combine_snr(p, r.sigma2, r.eta, 0.0).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn features_ignore_channel_order(seed in any::<u64>(), rot in 0usize..200) {
        let s = scenario(seed);
        let mut shuffled = s.clone();
        let n = shuffled.plan.channels.len();
        shuffled.plan.channels.rotate_left(rot % n);
        shuffled.plan.channels.reverse();
        shuffled.plan.cut_index = shuffled.plan.channels.iter().position(|c| c.is_cut).unwrap();
        prop_assert_eq!(extract(&s), extract(&shuffled));
        prop_assert!(close(
            eta_closed_form(&s.link, &s.plan).unwrap(),
            eta_closed_form(&shuffled.link, &shuffled.plan).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn window_counts_never_exceed_channel_count(seed in any::<u64>()) {
        let f = extract(&scenario(seed));
        let total: f64 = f.window_counts().iter().sum();
        prop_assert!(total <= f.0[qot_core::features::IDX_CHANNEL_COUNT]);
        prop_assert!(f.window_counts().iter().all(|c| c.fract() == 0.0 && *c >= 0.0));
    }

    #[test]
    fn plan_json_round_trip(seed in any::<u64>()) {
        let plan = scenario(seed).plan;
        let back: ChannelPlan = serde_json::from_str(&serde_json::to_string(&plan).unwrap()).unwrap();
        prop_assert_eq!(back, plan);
    }
}

#[test]
fn jsonl_round_trip_is_bit_exact() {
    let records: Vec<LabeledRecord> = (0..50)
        .map(|i| label_scenario(scenario(i), 5.0).unwrap())
        .collect();
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &records).unwrap();
    let back: Vec<LabeledRecord> = read_jsonl(buf.as_slice()).unwrap();
    assert_eq!(back, records);
    for (a, b) in back.iter().zip(&records) {
        assert_eq!(a.eta.to_bits(), b.eta.to_bits());
        assert_eq!(a.sigma2.to_bits(), b.sigma2.to_bits());
    }
}

#[test]
fn jsonl_errors_carry_line_numbers() {
    let text = "\n{\"a\":1}\nnot json\n";
    let err = read_jsonl::<serde_json::Value>(text.as_bytes()).unwrap_err();
    assert!(err.to_string().starts_with("line 3:"), "{err}");
}

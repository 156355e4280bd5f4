use adsafe_core::trustworthiness::{
    classify_confidence, classify_trustworthiness, confidence, trust_stddev, trust_value, trustworthiness,
    BehaviorCounts, ConfidenceBand, TrustworthinessBand, TrustworthinessParams,
};
use proptest::prelude::*;
use statrs::distribution::{Beta, Continuous};

const GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 50.0];

fn counts(a: f64, b: f64) -> BehaviorCounts {
    BehaviorCounts::new(a, b).unwrap()
}

/// Standard deviation of Beta(a, b) by trapezoid integration of its density.
fn numeric_stddev(a: f64, b: f64, points: usize) -> f64 {
    let beta = Beta::new(a, b).unwrap();
    let h = 1.0 / (points - 1) as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for k in 0..points {
        let x = k as f64 * h;
        let w = if k == 0 || k == points - 1 { 0.5 } else { 1.0 };
        let f = beta.pdf(x);
        m1 += w * x * f;
        m2 += w * x * x * f;
    }
    m1 *= h;
    m2 *= h;
    (m2 - m1 * m1).sqrt()
}

#[test]
fn stddev_matches_numeric_integration_on_grid() {
    for &a in &GRID {
        for &b in &GRID {
            let closed = trust_stddev(&counts(a, b));
            let numeric = numeric_stddev(a, b, 100_000);
            assert!((closed - numeric).abs() < 1e-6, "A={a} B={b}: {closed} vs {numeric}");
        }
    }
}

#[test]
fn trustworthiness_is_monotone_on_grid() {
    let p = TrustworthinessParams::default();
    let steps: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    for &t in &steps {
        for w in steps.windows(2) {
            assert!(trustworthiness(t, w[0], &p).unwrap() <= trustworthiness(t, w[1], &p).unwrap());
            assert!(trustworthiness(w[0], t, &p).unwrap() <= trustworthiness(w[1], t, &p).unwrap());
        }
    }
}

fn slopes(t: f64, c: f64, p: &TrustworthinessParams) -> (f64, f64) {
    let h = 1e-6;
    let dt = (trustworthiness(t + h, c, p).unwrap() - trustworthiness(t - h, c, p).unwrap()) / (2.0 * h);
    let dc = (trustworthiness(t, c + h, p).unwrap() - trustworthiness(t, c - h, p).unwrap()) / (2.0 * h);
    (dt, dc)
}

#[test]
fn equal_deficits_cost_more_in_trust() {
    let p = TrustworthinessParams::default();
    for i in 1..50 {
        let v = i as f64 / 50.0;
        assert!(trustworthiness(v, 1.0, &p).unwrap() < trustworthiness(1.0, v, &p).unwrap());
        for j in i..50 {
            let (t, c) = (v, j as f64 / 50.0);
            let (dt, dc) = slopes(t, c, &p);
            assert!(dt > dc, "t={t} c={c}: {dt} <= {dc}");
        }
    }
}

#[test]
fn slope_ratio_follows_the_axis_weights() {
    let p = TrustworthinessParams::default();
    for i in 1..50 {
        for j in 1..50 {
            let (t, c) = (i as f64 / 50.0, j as f64 / 50.0);
            let (dt, dc) = slopes(t, c, &p);
            let expected = ((1.0 - t) / (p.x() * p.x())) / ((1.0 - c) / (p.y() * p.y()));
            assert!((dt / dc - expected).abs() < 1e-5 * expected.max(1.0), "t={t} c={c}");
        }
    }
}

proptest! {
    #[test]
    fn trust_value_monotone(a in 1.0f64..1e4, b in 1.0f64..1e4, step in 0.01f64..100.0) {
        prop_assert!(trust_value(&counts(a + step, b)) > trust_value(&counts(a, b)));
        prop_assert!(trust_value(&counts(a, b + step)) < trust_value(&counts(a, b)));
    }

    #[test]
    fn swap_symmetry(a in 1.0f64..1e4, b in 1.0f64..1e4) {
        prop_assert!((confidence(&counts(a, b)) - confidence(&counts(b, a))).abs() < 1e-12);
        prop_assert!((trust_value(&counts(a, b)) + trust_value(&counts(b, a)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outputs_stay_in_unit_range(a in 1.0f64..1e6, b in 1.0f64..1e6) {
        let c = counts(a, b);
        let (t, conf) = (trust_value(&c), confidence(&c));
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((0.0..=1.0).contains(&conf));
        let tw = trustworthiness(t, conf, &TrustworthinessParams::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&tw));
    }

    #[test]
    fn bands_are_total_and_exclusive(v in 0.0f64..=1.0) {
        let band = classify_confidence(v).unwrap();
        let expected = [
            (v < 0.2, ConfidenceBand::None),
            ((0.2..0.5).contains(&v), ConfidenceBand::Low),
            ((0.5..0.8).contains(&v), ConfidenceBand::Good),
            (v >= 0.8, ConfidenceBand::High),
        ];
        prop_assert_eq!(expected.iter().filter(|(hit, _)| *hit).count(), 1);
        prop_assert_eq!(Some(band), expected.iter().find(|(hit, _)| *hit).map(|(_, b)| *b));

        let band = classify_trustworthiness(v).unwrap();
        let expected = [
            (v < 0.2, TrustworthinessBand::NotTrustworthy),
            ((0.2..0.5).contains(&v), TrustworthinessBand::Low),
            ((0.5..0.8).contains(&v), TrustworthinessBand::Good),
            (v >= 0.8, TrustworthinessBand::High),
        ];
        prop_assert_eq!(Some(band), expected.iter().find(|(hit, _)| *hit).map(|(_, b)| *b));
    }
}

#[test]
fn bands_reject_out_of_range() {
    for v in [-0.01, 1.01, f64::NAN] {
        assert!(classify_confidence(v).is_err());
        assert!(classify_trustworthiness(v).is_err());
    }
}

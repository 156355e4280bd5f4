use adsafe_core::trust_qad::{
    apply_operator, column_subvector, rate_of_change, step_society, Assessment, AssessmentMatrix, OperatorChoice,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn assessment() -> impl Strategy<Value = Assessment> {
    prop_oneof![
        1 => Just(Assessment::Undefined),
        4 => (-2i8..=2).prop_map(Assessment::Defined),
    ]
}

fn matrix() -> impl Strategy<Value = AssessmentMatrix> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(assessment(), n), n)
            .prop_map(|rows| AssessmentMatrix::from_rows(rows).unwrap())
    })
}

fn operator() -> impl Strategy<Value = OperatorChoice> {
    prop::sample::select(OperatorChoice::ALL.to_vec())
}

/// Mean of the column as an exact rational `sum / n1`.
fn column_mean(m: &AssessmentMatrix, j: usize) -> Option<(i32, i32)> {
    let col = column_subvector(m, j).unwrap();
    (!col.is_empty()).then(|| (col.iter().map(|&v| v as i32).sum(), col.len() as i32))
}

proptest! {
    #[test]
    fn closure_and_absorption(m in matrix(), op in operator(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m.size();
        for i in 0..n {
            for j in 0..n {
                let out = apply_operator(&m, i, j, op, &mut rng).unwrap();
                match m.get(i, j).unwrap() {
                    Assessment::Undefined => prop_assert_eq!(out, Assessment::Undefined),
                    Assessment::Defined(_) => {
                        let v = out.value().expect("defined stays defined");
                        prop_assert!((-2..=2).contains(&v));
                    }
                }
            }
        }
    }

    #[test]
    fn moderate_operators_are_monotone(m in matrix(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m.size();
        for i in 0..n {
            for j in 0..n {
                let Some(before) = m.get(i, j).unwrap().value() else { continue };
                let up = apply_operator(&m, i, j, OperatorChoice::ModerateOptimistic, &mut rng).unwrap().value().unwrap();
                let down = apply_operator(&m, i, j, OperatorChoice::ModeratePessimistic, &mut rng).unwrap().value().unwrap();
                prop_assert!(up >= before && up - before <= 1);
                prop_assert!(down <= before && before - down <= 1);
            }
        }
    }

    #[test]
    fn moderate_operators_follow_the_column_mean(m in matrix(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m.size();
        for i in 0..n {
            for j in 0..n {
                let Some(before) = m.get(i, j).unwrap().value() else { continue };
                let (sum, n1) = column_mean(&m, j).expect("column holds the entry itself");
                let mean = sum as f64 / n1 as f64;
                let up = apply_operator(&m, i, j, OperatorChoice::ModerateOptimistic, &mut rng).unwrap().value().unwrap();
                let down = apply_operator(&m, i, j, OperatorChoice::ModeratePessimistic, &mut rng).unwrap().value().unwrap();
                prop_assert_eq!(up, if mean <= before as f64 { before } else { before + 1 });
                prop_assert_eq!(down, if mean >= before as f64 { before } else { before - 1 });
            }
        }
    }

    #[test]
    fn consensus_depends_only_on_the_column(m in matrix(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m.size();
        for j in 0..n {
            let outputs: Vec<i8> = (0..n)
                .filter(|&i| m.get(i, j).unwrap().is_defined())
                .map(|i| apply_operator(&m, i, j, OperatorChoice::ConsensusSeeker, &mut rng).unwrap().value().unwrap())
                .collect();
            if let Some(&first) = outputs.first() {
                prop_assert!(outputs.iter().all(|&v| v == first));
                let (sum, n1) = column_mean(&m, j).unwrap();
                let mean = sum as f64 / n1 as f64;
                let expected = if mean < 0.0 { mean.ceil() } else { mean.floor() };
                prop_assert_eq!(first as f64, expected);
            }
        }
    }

    #[test]
    fn step_is_deterministic(m in matrix(), ops in prop::collection::vec(operator(), 6), seed in any::<u64>()) {
        let ops = &ops[..m.size()];
        let a = step_society(&m, ops, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = step_society(&m, ops, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let roc = rate_of_change(&m, &a).unwrap();
        prop_assert!((1..=10).contains(&roc));
    }

    #[test]
    fn step_uses_the_pre_step_matrix(m in matrix(), ops in prop::collection::vec(operator(), 6), seed in any::<u64>()) {
        let ops = &ops[..m.size()];
        let stepped = step_society(&m, ops, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, &op) in ops.iter().enumerate() {
            for j in 0..m.size() {
                prop_assert_eq!(stepped.get(i, j).unwrap(), apply_operator(&m, i, j, op, &mut rng).unwrap());
            }
        }
    }
}

#[test]
fn hopping_is_uniform() {
    const DRAWS: usize = 10_000;
    let m = AssessmentMatrix::filled(1, Assessment::Defined(0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 5];
    for _ in 0..DRAWS {
        let v = apply_operator(&m, 0, 0, OperatorChoice::AssessmentHopping, &mut rng).unwrap().value().unwrap();
        counts[(v + 2) as usize] += 1;
    }
    let expected = DRAWS as f64 / 5.0;
    for &c in &counts {
        let freq = c as f64 / DRAWS as f64;
        assert!((0.17..=0.23).contains(&freq), "{counts:?}");
    }
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(4.0).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

//! Algebraic invariants of the fusion metrics.

use descimg_core::{
    average_reorder, fuse, one_hot, validate_matrix, Family, LabelSet, Level, MetricId,
    SchemaMode, ScoreMatrix, ScoreRow,
};
use proptest::prelude::*;

/// Random softmax-like matrix with 1..=20 rows and `classes` columns. Ordinals
/// are increasing but may skip values.
fn matrix(classes: usize) -> impl Strategy<Value = ScoreMatrix> {
    (1usize..=20)
        .prop_flat_map(move |n| {
            (
                proptest::sample::subsequence((1u8..=20).collect::<Vec<_>>(), n),
                proptest::collection::vec(
                    proptest::collection::vec(0.001f64..1.0, classes),
                    n,
                ),
            )
        })
        .prop_map(|(ordinals, raw)| {
            let rows = ordinals
                .into_iter()
                .zip(raw)
                .map(|(o, r)| {
                    let s: f64 = r.iter().sum();
                    ScoreRow::new(o, r.iter().map(|v| v / s).collect())
                })
                .collect();
            ScoreMatrix::new("p", rows)
        })
}

fn any_matrix() -> impl Strategy<Value = ScoreMatrix> {
    prop_oneof![matrix(2), matrix(4), matrix(7)]
}

fn labels_for(m: &ScoreMatrix) -> LabelSet {
    LabelSet::new((0..m.classes()).map(|i| format!("c{i}"))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn generated_matrices_are_valid(m in any_matrix()) {
        prop_assert!(validate_matrix(&m, &labels_for(&m), SchemaMode::Softmax).is_valid());
    }

    #[test]
    fn full_depth_a_equals_s(m in any_matrix()) {
        let s = fuse(&m, MetricId::new(Family::S, Level::K20)).unwrap();
        let a = fuse(&m, MetricId::new(Family::A, Level::K20)).unwrap();
        let sb: Vec<u64> = s.per_class.iter().map(|v| v.to_bits()).collect();
        let ab: Vec<u64> = a.per_class.iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(sb, ab);
        prop_assert_eq!(s.decided, a.decided);
    }

    #[test]
    fn truncation_saturates(m in any_matrix()) {
        let n = m.len();
        for family in Family::ALL {
            let covering = fuse(&m, MetricId::new(family, Level::covering(n))).unwrap();
            for level in Level::ALL.into_iter().filter(|l| l.k() >= n) {
                let f = fuse(&m, MetricId::new(family, level)).unwrap();
                prop_assert_eq!(&f.per_class, &covering.per_class);
                prop_assert_eq!(f.decided, covering.decided);
                prop_assert_eq!(f.images_used, n);
            }
        }
    }

    #[test]
    fn one_hot_is_idempotent(m in any_matrix()) {
        let once = one_hot(&m);
        let twice = one_hot(&once.to_score_matrix());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn reorder_is_a_stable_permutation(m in any_matrix()) {
        let once = average_reorder(&m);
        let mut before: Vec<(u8, Vec<u64>)> = m.rows.iter()
            .map(|r| (r.ordinal, r.scores.iter().map(|v| v.to_bits()).collect()))
            .collect();
        let mut after: Vec<(u8, Vec<u64>)> = once.rows.iter()
            .map(|r| (r.ordinal, r.scores.iter().map(|v| v.to_bits()).collect()))
            .collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);
        let d = once.dominant;
        prop_assert!(once.rows.windows(2).all(|w| w[0].scores[d] >= w[1].scores[d]));

        // Reordering an already reordered matrix keeps the row order.
        let twice = average_reorder(&once.to_score_matrix());
        prop_assert_eq!(twice.original_ordinals(), once.original_ordinals());
    }

    #[test]
    fn one_hot_counts_sum_to_rows_used(m in any_matrix()) {
        for level in Level::ALL {
            let h = fuse(&m, MetricId::new(Family::H, level)).unwrap();
            prop_assert!(h.per_class.iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
            let total: f64 = h.per_class.iter().sum();
            prop_assert_eq!(total as usize, level.k().min(m.len()));
        }
    }

    #[test]
    fn summation_decision_is_scale_invariant(m in any_matrix(), lambda in 0.01f64..100.0) {
        let scaled = m.scaled(lambda);
        for level in Level::ALL {
            let metric = MetricId::new(Family::S, level);
            let a = fuse(&m, metric).unwrap();
            let b = fuse(&scaled, metric).unwrap();
            // Scaling can in principle merge two sums that differ by one ulp;
            // only compare decisions when the winner is clear.
            let mut sorted = a.per_class.clone();
            sorted.sort_by(|x, y| y.total_cmp(x));
            if sorted[0] - sorted[1] > 1e-9 {
                prop_assert_eq!(a.decided, b.decided);
            }
        }
    }

    #[test]
    fn fuse_is_deterministic(m in any_matrix()) {
        for metric in MetricId::FUSION {
            prop_assert_eq!(fuse(&m, metric).unwrap(), fuse(&m, metric).unwrap());
        }
    }
}

#[test]
fn scaled_by_three_point_seven() {
    let m = ScoreMatrix::from_scores(
        "s",
        [
            vec![0.2, 0.5, 0.3, 0.0],
            vec![0.6, 0.1, 0.2, 0.1],
            vec![0.1, 0.1, 0.7, 0.1],
        ],
    );
    for level in Level::ALL {
        let metric = MetricId::new(Family::S, level);
        assert_eq!(
            fuse(&m, metric).unwrap().decided,
            fuse(&m.scaled(3.7), metric).unwrap().decided
        );
    }
}

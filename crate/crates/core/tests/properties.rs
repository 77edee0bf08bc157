use pimax_core::composer::{combine_split_policies, split_index, upsample_policy, SplitPair};
use pimax_core::{
    entropy_of, floor_project, mutual_information, Binner, ConditionalTable, JointTable,
    LearnerState, PROB_FLOOR,
};
use proptest::prelude::*;

fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1.0, len)
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

fn table(rows: usize, cols: usize) -> impl Strategy<Value = ConditionalTable<f64>> {
    prop::collection::vec(weights(cols), rows).prop_map(|rows| {
        ConditionalTable::from_rows(rows.iter().map(|r| normalized(r)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn floor_projection_is_a_distribution(w in prop::collection::vec(0.0f64..1.0, 2..12), floor in 1e-9f64..0.05) {
        let mut row = w.clone();
        if row.iter().sum::<f64>() == 0.0 {
            row[0] = 1.0;
        }
        let z: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= z);
        floor_project(&mut row, floor);
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(row.iter().all(|x| *x >= floor * (1.0 - 1e-12)));
    }

    #[test]
    fn entropy_is_bounded(w in prop::collection::vec(0.0f64..1.0, 1..20)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let p = normalized(&w);
        let h = entropy_of(&p);
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).log2() + 1e-12);
    }

    #[test]
    fn mutual_information_is_symmetric_and_bounded(r in 2usize..6, c in 2usize..6, seed in weights(36)) {
        let probs = normalized(&seed[..r * c]);
        let j = JointTable::new(r, c, probs).unwrap();
        let mi = mutual_information(&j);
        prop_assert!((mi - mutual_information(&j.transpose())).abs() < 1e-12);
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= entropy_of(&j.row_marginal()).min(entropy_of(&j.col_marginal())) + 1e-12);
    }

    #[test]
    fn binner_round_trips_bin_centers(k in 2usize..40, x in -1.5f64..1.5) {
        let b = Binner::<f64>::unit(k).unwrap();
        for i in 0..k {
            prop_assert_eq!(b.encode(b.decode(i)), i);
        }
        let i = b.encode(x);
        prop_assert!(i < k);
        if (-1.0..1.0).contains(&x) {
            prop_assert!((b.decode(i) - x).abs() <= b.width() / 2.0 + 1e-12);
        }
    }

    #[test]
    fn upsampling_coarse_grains_back(coarse in table(4, 4), factor in 1usize..4) {
        let fine = upsample_policy(&coarse, factor).unwrap();
        prop_assert_eq!(fine.shape(), (4 * factor, 4 * factor));
        for s in 0..4 * factor {
            let row = fine.row(s);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for a in 0..4 {
                let mass: f64 = row[a * factor..(a + 1) * factor].iter().sum();
                prop_assert!((mass - coarse.get(s / factor, a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn combined_policy_marginalizes_to_its_parts(left in table(4, 4), right in table(4, 4)) {
        let combined = combine_split_policies(&SplitPair::new(left.clone(), right.clone()).unwrap());
        for sc in 0..16 {
            let (sl, sr) = split_index(sc, 4);
            for al in 0..4 {
                let mass: f64 = (0..4).map(|ar| combined.get(sc, al + 4 * ar)).sum();
                prop_assert!((mass - left.get(sl, al)).abs() < 1e-12);
            }
            for ar in 0..4 {
                let mass: f64 = (0..4).map(|al| combined.get(sc, al + 4 * ar)).sum();
                prop_assert!((mass - right.get(sr, ar)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn learning_keeps_every_table_stochastic(obs in prop::collection::vec((0usize..4, 0usize..4), 1..300)) {
        let mut learner = LearnerState::<f64>::init_uniform(4, 4).unwrap();
        let mut prev = (0, 0);
        for (s, a) in obs {
            learner.learning_step(prev.0, prev.1, s);
            prev = (s, a);
        }
        let p = learner.sensor_distribution().probs();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for t in [learner.policy(), learner.world_model()] {
            for r in 0..t.rows() {
                prop_assert!((t.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(t.row(r).iter().all(|x| *x >= PROB_FLOOR * (1.0 - 1e-9)));
            }
        }
        let pi = learner.predictive_information();
        prop_assert!((0.0..=2.0 + 1e-9).contains(&pi));
    }

    #[test]
    fn table_text_round_trip(t in table(5, 3), counters in prop::collection::vec(0u64..1_000_000, 5)) {
        let t = t.with_counters(counters).unwrap();
        let back = ConditionalTable::<f64>::from_text(&t.to_text()).unwrap();
        prop_assert_eq!(back, t);
    }
}

//! Policy-space constructions: fusing two per-wheel (split) controllers into
//! one combined controller, refining the bin resolution of a policy, and the
//! L2 distance between policies.
//!
//! Product indices put the left component in the low-order digit:
//! `s_c = s_l + |S| * s_r` and `a_c = a_l + |A| * a_r`.

use crate::error::{dim, Error, Result};
use crate::learner::LearnerState;
use crate::scalar::Scalar;
use crate::table::{ConditionalTable, DiscreteDistribution};

/// Two split policies of identical shape, one per wheel.
#[derive(Debug, Clone)]
pub struct SplitPair<T> {
    pub left: ConditionalTable<T>,
    pub right: ConditionalTable<T>,
}

impl<T: Scalar> SplitPair<T> {
    pub fn new(left: ConditionalTable<T>, right: ConditionalTable<T>) -> Result<Self> {
        if left.shape() != right.shape() {
            return Err(Error::Config(format!(
                "split policies differ in shape: {:?} vs {:?}",
                left.shape(),
                right.shape()
            )));
        }
        Ok(Self { left, right })
    }
}

/// Splits a product index into its (left, right) components.
pub fn split_index(combined: usize, base: usize) -> (usize, usize) {
    (combined % base, combined / base)
}

pub fn combine_index(left: usize, right: usize, base: usize) -> usize {
    left + base * right
}

/// `α_c(a_c|s_c) = α_l(a_l|s_l) α_r(a_r|s_r)`. Counters take the smaller of
/// the two source counters.
pub fn combine_split_policies<T: Scalar>(pair: &SplitPair<T>) -> ConditionalTable<T> {
    let (n_s, n_a) = pair.left.shape();
    let mut rows = Vec::with_capacity(n_s * n_s);
    let mut counters = Vec::with_capacity(n_s * n_s);
    for sc in 0..n_s * n_s {
        let (sl, sr) = split_index(sc, n_s);
        let row = (0..n_a * n_a)
            .map(|ac| {
                let (al, ar) = split_index(ac, n_a);
                pair.left.get(sl, al) * pair.right.get(sr, ar)
            })
            .collect();
        rows.push(row);
        counters.push(pair.left.counter(sl).min(pair.right.counter(sr)));
    }
    ConditionalTable::from_rows(rows)
        .and_then(|t| t.with_counters(counters))
        .expect("product of stochastic rows is stochastic")
}

/// `p_c(s_c) = p_l(s_l) p_r(s_r)`.
pub fn combine_distributions<T: Scalar>(
    left: &DiscreteDistribution<T>,
    right: &DiscreteDistribution<T>,
) -> Result<DiscreteDistribution<T>> {
    dim("right sensor distribution", left.len(), right.len())?;
    let n = left.len();
    let probs = (0..n * n)
        .map(|sc| {
            let (sl, sr) = split_index(sc, n);
            left.get(sl) * right.get(sr)
        })
        .collect();
    DiscreteDistribution::new(probs)
}

/// `δ_c(s'_c|s_c,a_c) = δ_l(s'_l|s_l,a_l) δ_r(s'_r|s_r,a_r)`, the world model
/// of two wheels whose dynamics are independent.
pub fn combine_world_models<T: Scalar>(
    left: &ConditionalTable<T>,
    right: &ConditionalTable<T>,
    n_actions: usize,
) -> Result<ConditionalTable<T>> {
    if left.shape() != right.shape() {
        return Err(Error::Config("split world models differ in shape".into()));
    }
    let n_s = left.cols();
    dim("world model rows", n_s * n_actions, left.rows())?;
    let n_sc = n_s * n_s;
    let n_ac = n_actions * n_actions;
    let mut rows = Vec::with_capacity(n_sc * n_ac);
    let mut counters = Vec::with_capacity(n_sc * n_ac);
    for sc in 0..n_sc {
        let (sl, sr) = split_index(sc, n_s);
        for ac in 0..n_ac {
            let (al, ar) = split_index(ac, n_actions);
            let rl = sl * n_actions + al;
            let rr = sr * n_actions + ar;
            let row = (0..n_sc)
                .map(|nc| {
                    let (nl, nr) = split_index(nc, n_s);
                    left.get(rl, nl) * right.get(rr, nr)
                })
                .collect();
            rows.push(row);
            counters.push(left.counter(rl).min(right.counter(rr)));
        }
    }
    ConditionalTable::from_rows(rows)?.with_counters(counters)
}

/// Combined learner built from two split learners: product sensor
/// distribution, product world model and product policy. The step count is
/// the smaller of the two, so learning resumes at the later, slower rate.
pub fn compose_learners<T: Scalar>(
    left: &LearnerState<T>,
    right: &LearnerState<T>,
) -> Result<LearnerState<T>> {
    let pair = SplitPair::new(left.policy().clone(), right.policy().clone())?;
    if left.world_model().shape() != right.world_model().shape() {
        return Err(Error::Config("split world models differ in shape".into()));
    }
    let policy = combine_split_policies(&pair);
    let sensor = combine_distributions(left.sensor_distribution(), right.sensor_distribution())?;
    let model = combine_world_models(left.world_model(), right.world_model(), left.num_actions())?;
    Ok(
        LearnerState::from_parts(sensor, model, policy, left.steps().min(right.steps()))?
            .with_schedule(left.schedule()),
    )
}

/// Refines a policy by `factor` in both sensor and action resolution: child
/// sensor bin `j` inherits the row of parent bin `j / factor`, and each
/// parent action's mass is split equally over its `factor` child actions,
/// `p_fine(a_i|s_j) = p_coarse(a_{i/f}|s_{j/f}) / f`.
pub fn upsample_policy<T: Scalar>(
    coarse: &ConditionalTable<T>,
    factor: usize,
) -> Result<ConditionalTable<T>> {
    if factor == 0 {
        return Err(Error::Config("upsampling factor must be positive".into()));
    }
    let (n_s, n_a) = coarse.shape();
    let share = T::one() / T::count(factor as u64);
    let rows = (0..n_s * factor)
        .map(|j| {
            (0..n_a * factor)
                .map(|i| coarse.get(j / factor, i / factor) * share)
                .collect()
        })
        .collect();
    let counters = (0..n_s * factor)
        .map(|j| coarse.counter(j / factor))
        .collect();
    ConditionalTable::from_rows(rows)?.with_counters(counters)
}

/// `sqrt(Σ_ij (a_ij - b_ij)^2)`.
pub fn policy_distance<T: Scalar>(a: &ConditionalTable<T>, b: &ConditionalTable<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::Config(format!(
            "cannot compare policies of shape {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<T>()
        .sqrt())
}

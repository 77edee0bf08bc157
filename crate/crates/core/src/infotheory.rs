//! Entropy, mutual information and predictive information over discrete
//! distributions. All logarithms are base two; results are in bits.

use std::collections::HashMap;

use crate::error::{dim, Error, Result};
use crate::scalar::Scalar;
use crate::table::{ConditionalTable, DiscreteDistribution, JointTable};

/// Uniform discretization of `[lo, hi]` into `k` equal-width bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binner<T> {
    k: usize,
    lo: T,
    hi: T,
}

impl<T: Scalar> Binner<T> {
    pub fn new(k: usize, lo: T, hi: T) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!(
                "a binner needs at least 2 bins, got {k}"
            )));
        }
        if !(lo < hi) {
            return Err(Error::Config(format!(
                "empty binning interval [{lo}, {hi}]"
            )));
        }
        Ok(Self { k, lo, hi })
    }

    /// `k` bins over the normalized wheel-velocity interval `[-1, 1]`.
    pub fn unit(k: usize) -> Result<Self> {
        Self::new(k, -T::one(), T::one())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> T {
        (self.hi - self.lo) / T::count(self.k as u64)
    }

    /// Bin index of `x`. Values outside the interval land in the edge bins;
    /// the upper bound belongs to the last bin.
    pub fn encode(&self, x: T) -> usize {
        let t = ((x - self.lo) / self.width()).floor();
        if !(t > T::zero()) {
            0
        } else {
            t.to_usize().unwrap_or(usize::MAX).min(self.k - 1)
        }
    }

    /// Center of bin `b`.
    pub fn decode(&self, b: usize) -> T {
        assert!(b < self.k, "bin {b} out of range for {} bins", self.k);
        self.lo + self.width() * (T::count(b as u64) + T::of(0.5))
    }
}

/// `-Σ p log2 p` over the strictly positive entries of `probs`.
pub fn entropy_of<T: Scalar>(probs: &[T]) -> T {
    probs
        .iter()
        .filter(|p| **p > T::zero())
        .map(|p| -*p * p.lg())
        .sum()
}

pub fn entropy<T: Scalar>(d: &DiscreteDistribution<T>) -> T {
    entropy_of(d.probs())
}

/// `Σ p(x,y) log2 [p(x,y) / (p(x) p(y))]`, zero-mass cells skipped.
pub fn mutual_information<T: Scalar>(j: &JointTable<T>) -> T {
    let px = j.row_marginal();
    let py = j.col_marginal();
    let mut mi = T::zero();
    for (x, row) in j.probs().chunks(j.cols()).enumerate() {
        for (y, &pxy) in row.iter().enumerate() {
            if pxy > T::zero() {
                mi += pxy * (pxy / (px[x] * py[y])).lg();
            }
        }
    }
    // Rounding can leave an independent joint a hair below zero.
    mi.max(T::zero())
}

fn check_components<T: Scalar>(
    p: &DiscreteDistribution<T>,
    policy: &ConditionalTable<T>,
    model: &ConditionalTable<T>,
) -> Result<()> {
    let n_s = p.len();
    dim("policy rows (sensor states)", n_s, policy.rows())?;
    dim(
        "world model rows (sensor states x actions)",
        n_s * policy.cols(),
        model.rows(),
    )?;
    dim("world model columns (sensor states)", n_s, model.cols())
}

/// `p(s', s) = Σ_a p(s) α(a|s) δ(s'|s,a)`; rows are `s'`, columns `s`.
pub fn joint_from_components<T: Scalar>(
    p: &DiscreteDistribution<T>,
    policy: &ConditionalTable<T>,
    model: &ConditionalTable<T>,
) -> Result<JointTable<T>> {
    check_components(p, policy, model)?;
    let n_s = p.len();
    let n_a = policy.cols();
    let mut probs = vec![T::zero(); n_s * n_s];
    for s in 0..n_s {
        for a in 0..n_a {
            let w = p.get(s) * policy.get(s, a);
            for (next, &d) in model.row(s * n_a + a).iter().enumerate() {
                probs[next * n_s + s] += w * d;
            }
        }
    }
    JointTable::new(n_s, n_s, probs)
}

/// Intrinsic predictive information `I(S'; S)` of a sensor distribution,
/// policy and world model.
pub fn predictive_information<T: Scalar>(
    p: &DiscreteDistribution<T>,
    policy: &ConditionalTable<T>,
    model: &ConditionalTable<T>,
) -> Result<T> {
    joint_from_components(p, policy, model).map(|j| mutual_information(&j))
}

/// Mutual information between consecutive entries of a discrete state
/// sequence, estimated from the last `window` transitions.
pub fn empirical_mi_from_states(states: &[usize], window: usize) -> Result<f64> {
    if window == 0 || states.len() < window + 1 {
        return Err(Error::WindowTooLarge {
            len: states.len(),
            window,
        });
    }
    let tail = &states[states.len() - window - 1..];
    let mut pairs: HashMap<(usize, usize), u64> = HashMap::new();
    let mut prev_counts: HashMap<usize, u64> = HashMap::new();
    let mut next_counts: HashMap<usize, u64> = HashMap::new();
    for w in tail.windows(2) {
        *pairs.entry((w[0], w[1])).or_default() += 1;
        *prev_counts.entry(w[0]).or_default() += 1;
        *next_counts.entry(w[1]).or_default() += 1;
    }
    let n = window as f64;
    let mut mi = 0.0;
    for (&(a, b), &c) in &pairs {
        let c = c as f64;
        mi += c / n * (c * n / (prev_counts[&a] as f64 * next_counts[&b] as f64)).log2();
    }
    Ok(mi.max(0.0))
}

/// A-posteriori predictive information of one robot from its recorded wheel
/// velocities: each wheel is binned, the pair fused into one product state
/// (left wheel is the low-order digit), and the mutual information of
/// consecutive product states is taken over the last `window` transitions.
pub fn empirical_mi_from_series<T: Scalar>(
    series: &[[T; 2]],
    binner: &Binner<T>,
    window: usize,
) -> Result<f64> {
    let k = binner.k();
    let states: Vec<usize> = series
        .iter()
        .map(|[l, r]| binner.encode(*l) + k * binner.encode(*r))
        .collect();
    empirical_mi_from_states(&states, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binner_centers_for_four_bins() {
        let b = Binner::<f64>::unit(4).unwrap();
        let centers: Vec<f64> = (0..4).map(|i| b.decode(i)).collect();
        assert_eq!(centers, vec![-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(b.encode(-1.0), 0);
        assert_eq!(b.encode(-0.5), 1);
        assert_eq!(b.encode(0.0), 2);
        assert_eq!(b.encode(1.0), 3);
        assert_eq!(b.encode(7.0), 3);
        assert_eq!(b.encode(-7.0), 0);
    }

    #[test]
    fn binner_rejects_degenerate_configs() {
        assert!(Binner::<f64>::unit(1).is_err());
        assert!(Binner::new(4, 1.0, 1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        let d = DiscreteDistribution::new(vec![0.5f64, 0.5]).unwrap();
        assert!((entropy(&d) - 1.0).abs() < 1e-15);
        let d = DiscreteDistribution::<f64>::uniform(4);
        assert!((entropy(&d) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_joint_carries_two_bits() {
        let mut probs = vec![0.0; 16];
        for i in 0..4 {
            probs[i * 4 + i] = 0.25;
        }
        let j = JointTable::<f64>::new(4, 4, probs).unwrap();
        assert!((mutual_information(&j) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn product_joint_carries_nothing() {
        let px = [0.1, 0.2, 0.7];
        let py = [0.4, 0.6];
        let probs = px
            .iter()
            .flat_map(|x| py.iter().map(move |y| x * y))
            .collect();
        let j = JointTable::<f64>::new(3, 2, probs).unwrap();
        assert!(mutual_information(&j).abs() < 1e-12);
    }

    #[test]
    fn component_dimensions_are_checked() {
        let p = DiscreteDistribution::<f64>::uniform(4);
        let policy = ConditionalTable::uniform(4, 3);
        let model = ConditionalTable::uniform(16, 4);
        assert!(matches!(
            joint_from_components(&p, &policy, &model),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn empirical_mi_edge_cases() {
        assert_eq!(empirical_mi_from_states(&[3; 100], 50).unwrap(), 0.0);
        let alternating: Vec<usize> = (0..101).map(|i| i % 2).collect();
        assert!((empirical_mi_from_states(&alternating, 100).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            empirical_mi_from_states(&[0, 1, 2], 3),
            Err(Error::WindowTooLarge { len: 3, window: 3 })
        ));
    }

    #[test]
    fn empirical_mi_from_wheel_series() {
        let b = Binner::<f64>::unit(30).unwrap();
        let constant = vec![[0.3, -0.2]; 20];
        assert_eq!(empirical_mi_from_series(&constant, &b, 10).unwrap(), 0.0);
        let flip: Vec<[f64; 2]> = (0..41)
            .map(|i| if i % 2 == 0 { [0.9, 0.9] } else { [-0.9, 0.1] })
            .collect();
        assert!((empirical_mi_from_series(&flip, &b, 40).unwrap() - 1.0).abs() < 1e-12);
    }
}

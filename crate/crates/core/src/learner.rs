//! Tabular learner maximizing the one-step predictive information `I(S';S)`.
//!
//! Per control tick the learner
//!
//! 1. folds the new sensor state into the running sensor distribution `p(s)`,
//! 2. folds the observed transition `(s, a) -> s'` into the world model
//!    `δ(s'|s,a)`, each row with its own sample counter,
//! 3. takes one natural-gradient step on the policy `α(a|s)`.
//!
//! Under the Fisher metric on the simplex the natural gradient has replicator
//! form, `Δα(a|s) = η α(a|s) (F(s,a) - Σ_a' α(a'|s) F(s,a'))`, where `F` is the
//! partial derivative of `I(S';S)` with respect to `α(a|s)` with `p(s)` held
//! fixed.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::infotheory;
use crate::scalar::Scalar;
use crate::table::{floor_project, ConditionalTable, DiscreteDistribution, PROB_FLOOR};

/// Step-size schedule of the policy update, indexed by the sample weight
/// `n` (number of completed steps plus one for the uniform prior).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RateSchedule {
    /// `1 / (n + 1)`.
    #[default]
    Reciprocal,
    /// `max(1 / (n + 1), floor)`.
    Floor(f64),
    /// `1 / (k + 1)` while `n < k`, then `1 / (n + 1)`.
    Warmup(u64),
}

impl RateSchedule {
    pub fn rate<T: Scalar>(&self, n: u64) -> T {
        let reciprocal = 1.0 / (n as f64 + 1.0);
        let r = match *self {
            RateSchedule::Reciprocal => reciprocal,
            RateSchedule::Floor(f) => reciprocal.max(f),
            RateSchedule::Warmup(k) if n < k => 1.0 / (k as f64 + 1.0),
            RateSchedule::Warmup(_) => reciprocal,
        };
        T::of(r)
    }
}

impl fmt::Display for RateSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateSchedule::Reciprocal => write!(f, "reciprocal"),
            RateSchedule::Floor(x) => write!(f, "floor:{x}"),
            RateSchedule::Warmup(k) => write!(f, "warmup:{k}"),
        }
    }
}

impl FromStr for RateSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "unknown rate schedule `{s}` (reciprocal | floor:F | warmup:K)"
            ))
        };
        match s.split_once(':') {
            None if s == "reciprocal" => Ok(RateSchedule::Reciprocal),
            Some(("floor", v)) => {
                let f: f64 = v.parse().map_err(|_| bad())?;
                if f > 0.0 && f <= 1.0 {
                    Ok(RateSchedule::Floor(f))
                } else {
                    Err(bad())
                }
            }
            Some(("warmup", v)) => v.parse().map(RateSchedule::Warmup).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// `F(s, a)` for every sensor state and action, row-major by sensor state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradient<T> {
    n_actions: usize,
    values: Vec<T>,
}

impl<T: Scalar> PolicyGradient<T> {
    pub fn get(&self, s: usize, a: usize) -> T {
        self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Sensor distribution, world model and policy of one controller.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState<T> {
    sensor: DiscreteDistribution<T>,
    world_model: ConditionalTable<T>,
    policy: ConditionalTable<T>,
    steps: u64,
    /// Sensor observations folded into `sensor`, excluding the uniform prior.
    observations: u64,
    prev_sensor: Option<usize>,
    schedule: RateSchedule,
}

impl<T: Scalar> LearnerState<T> {
    pub fn init_uniform(num_sensors: usize, num_actions: usize) -> Result<Self> {
        if num_sensors < 2 || num_actions < 2 {
            return Err(Error::Config(format!(
                "a learner needs at least 2 sensor states and 2 actions, got {num_sensors} and {num_actions}"
            )));
        }
        Ok(Self {
            sensor: DiscreteDistribution::uniform(num_sensors),
            world_model: ConditionalTable::uniform(num_sensors * num_actions, num_sensors),
            policy: ConditionalTable::uniform(num_sensors, num_actions),
            steps: 0,
            observations: 0,
            prev_sensor: None,
            schedule: RateSchedule::default(),
        })
    }

    /// Assembles a learner from existing tables, e.g. a checkpoint or a
    /// composition. Rows with entries below the floor are projected.
    pub fn from_parts(
        sensor: DiscreteDistribution<T>,
        mut world_model: ConditionalTable<T>,
        mut policy: ConditionalTable<T>,
        steps: u64,
    ) -> Result<Self> {
        let n_s = sensor.len();
        if n_s < 2 || policy.cols() < 2 {
            return Err(Error::Config(
                "learner tables need at least 2 states and 2 actions".into(),
            ));
        }
        crate::error::dim("policy rows", n_s, policy.rows())?;
        crate::error::dim("world model rows", n_s * policy.cols(), world_model.rows())?;
        crate::error::dim("world model columns", n_s, world_model.cols())?;
        let mut probs = sensor.probs().to_vec();
        if probs.iter().any(|x| *x < T::of(PROB_FLOOR)) {
            floor_project(&mut probs, T::of(PROB_FLOOR));
        }
        world_model.enforce_floor();
        policy.enforce_floor();
        Ok(Self {
            sensor: DiscreteDistribution::new(probs)?,
            world_model,
            policy,
            steps,
            observations: steps,
            prev_sensor: None,
            schedule: RateSchedule::default(),
        })
    }

    pub fn with_schedule(mut self, schedule: RateSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn num_sensors(&self) -> usize {
        self.sensor.len()
    }

    pub fn num_actions(&self) -> usize {
        self.policy.cols()
    }

    pub fn sensor_distribution(&self) -> &DiscreteDistribution<T> {
        &self.sensor
    }

    pub fn world_model(&self) -> &ConditionalTable<T> {
        &self.world_model
    }

    pub fn policy(&self) -> &ConditionalTable<T> {
        &self.policy
    }

    /// Number of completed learning steps.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }

    pub fn prev_sensor(&self) -> Option<usize> {
        self.prev_sensor
    }

    pub fn schedule(&self) -> RateSchedule {
        self.schedule
    }

    /// Row of the world model holding `δ(·|s,a)`.
    pub fn model_row(&self, s: usize, a: usize) -> usize {
        s * self.num_actions() + a
    }

    /// Intrinsic `I(S';S)` from the learner's own `p`, `α` and `δ`.
    pub fn predictive_information(&self) -> T {
        infotheory::predictive_information(&self.sensor, &self.policy, &self.world_model)
            .expect("learner tables have consistent shapes")
    }

    /// Running-mean update of `p(s)`. The uniform prior counts as one
    /// observation, so the weight of the incoming sample is `1 / (n + 2)`
    /// with `n` earlier observations.
    pub fn update_sensor_distribution(&mut self, observed: usize) {
        assert!(
            observed < self.num_sensors(),
            "sensor state {observed} out of range"
        );
        let w = T::count(self.observations + 1);
        let keep = w / (w + T::one());
        let add = T::one() / (w + T::one());
        let probs = self.sensor.probs_mut();
        for (s, p) in probs.iter_mut().enumerate() {
            *p = *p * keep + if s == observed { add } else { T::zero() };
        }
        floor_project(probs, T::of(PROB_FLOOR));
        self.observations += 1;
    }

    /// Running-mean update of row `(s, a)` of the world model with its own
    /// counter; every other row is left untouched.
    pub fn update_world_model(&mut self, s: usize, a: usize, s_next: usize) {
        assert!(
            s < self.num_sensors() && s_next < self.num_sensors(),
            "sensor state out of range"
        );
        assert!(a < self.num_actions(), "action {a} out of range");
        let r = self.model_row(s, a);
        let w = T::count(self.world_model.counter(r) + 1);
        let keep = w / (w + T::one());
        let add = T::one() / (w + T::one());
        let row = self.world_model.row_mut(r);
        for (next, d) in row.iter_mut().enumerate() {
            *d = *d * keep + if next == s_next { add } else { T::zero() };
        }
        floor_project(row, T::of(PROB_FLOOR));
        *self.world_model.counter_mut(r) += 1;
    }

    /// `F(s,a) = p(s) Σ_s' δ(s'|s,a) log2[ m(s'|s) / q(s') ]` with
    /// `m(s'|s) = Σ_a α(a|s) δ(s'|s,a)` and `q(s') = Σ_s p(s) m(s'|s)`.
    pub fn policy_gradient(&self) -> PolicyGradient<T> {
        let n_s = self.num_sensors();
        let n_a = self.num_actions();
        let p = self.sensor.probs();

        let mut m = vec![T::zero(); n_s * n_s];
        for s in 0..n_s {
            let m_row = &mut m[s * n_s..(s + 1) * n_s];
            for a in 0..n_a {
                let alpha = self.policy.get(s, a);
                for (acc, &d) in m_row.iter_mut().zip(self.world_model.row(s * n_a + a)) {
                    *acc += alpha * d;
                }
            }
        }
        let mut q = vec![T::zero(); n_s];
        for s in 0..n_s {
            for (acc, &x) in q.iter_mut().zip(&m[s * n_s..(s + 1) * n_s]) {
                *acc += p[s] * x;
            }
        }
        // m now holds log2(m / q)
        for s in 0..n_s {
            for (x, &qq) in m[s * n_s..(s + 1) * n_s].iter_mut().zip(&q) {
                *x = (*x / qq).lg();
            }
        }

        let mut values = vec![T::zero(); n_s * n_a];
        for s in 0..n_s {
            let log_ratio = &m[s * n_s..(s + 1) * n_s];
            for a in 0..n_a {
                let dot: T = self
                    .world_model
                    .row(s * n_a + a)
                    .iter()
                    .zip(log_ratio)
                    .map(|(d, l)| *d * *l)
                    .sum();
                values[s * n_a + a] = p[s] * dot;
            }
        }
        PolicyGradient {
            n_actions: n_a,
            values,
        }
    }

    /// Step size the next policy update will use.
    pub fn policy_rate(&self) -> T {
        self.schedule.rate(self.steps + 1)
    }

    /// Raw replicator increments `η α(a|s) (F(s,a) - Σ α F)`, before the
    /// floor projection. Each row sums to zero up to rounding.
    pub fn replicator_increments(&self, grad: &PolicyGradient<T>) -> Vec<T> {
        let rate = self.policy_rate();
        let n_a = self.num_actions();
        let mut inc = vec![T::zero(); self.policy.data().len()];
        for s in 0..self.num_sensors() {
            let alpha = self.policy.row(s);
            let f = grad.row(s);
            let mean: T = alpha.iter().zip(f).map(|(x, y)| *x * *y).sum();
            for a in 0..n_a {
                inc[s * n_a + a] = rate * alpha[a] * (f[a] - mean);
            }
        }
        inc
    }

    /// One natural-gradient step on every row of the policy.
    pub fn update_policy(&mut self) {
        let grad = self.policy_gradient();
        let inc = self.replicator_increments(&grad);
        let n_a = self.num_actions();
        let floor = T::of(PROB_FLOOR);
        for s in 0..self.num_sensors() {
            let row = self.policy.row_mut(s);
            for (x, d) in row.iter_mut().zip(&inc[s * n_a..(s + 1) * n_a]) {
                *x += *d;
            }
            floor_project(row, floor);
            *self.policy.counter_mut(s) += 1;
        }
    }

    /// Draws an action from `α(·|s)`.
    pub fn sample_action<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        sample_row(self.policy.row(s), rng)
    }

    /// Sensor update, world-model update, then policy update, once each.
    pub fn learning_step(&mut self, s_prev: usize, a_prev: usize, s_now: usize) {
        self.update_sensor_distribution(s_now);
        self.update_world_model(s_prev, a_prev, s_now);
        self.update_policy();
        self.steps += 1;
        self.prev_sensor = Some(s_now);
    }
}

/// Inverse-CDF draw from a probability row; the last index absorbs rounding.
pub fn sample_row<T: Scalar, R: Rng + ?Sized>(row: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_parse_and_round_trip() {
        for s in ["reciprocal", "floor:0.001", "warmup:500"] {
            let parsed: RateSchedule = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("floor:0".parse::<RateSchedule>().is_err());
        assert!("warmup:-1".parse::<RateSchedule>().is_err());
        assert!("adam".parse::<RateSchedule>().is_err());
    }

    #[test]
    fn schedule_values() {
        assert_eq!(RateSchedule::Reciprocal.rate::<f64>(3), 0.25);
        assert_eq!(RateSchedule::Floor(0.1).rate::<f64>(100), 0.1);
        assert_eq!(RateSchedule::Floor(0.1).rate::<f64>(1), 0.5);
        assert_eq!(RateSchedule::Warmup(9).rate::<f64>(2), 0.1);
        assert_eq!(RateSchedule::Warmup(9).rate::<f64>(19), 0.05);
    }

    #[test]
    fn init_rejects_tiny_alphabets() {
        assert!(LearnerState::<f64>::init_uniform(1, 4).is_err());
        assert!(LearnerState::<f64>::init_uniform(4, 1).is_err());
    }

    #[test]
    fn first_sensor_observation_weighs_one_half() {
        let mut l = LearnerState::<f64>::init_uniform(4, 4).unwrap();
        l.update_sensor_distribution(0);
        let expect = [0.625, 0.125, 0.125, 0.125];
        for (x, e) in l.sensor_distribution().probs().iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn fresh_world_model_row_update() {
        let mut l = LearnerState::<f64>::init_uniform(4, 4).unwrap();
        l.update_world_model(1, 3, 2);
        let r = l.model_row(1, 3);
        let expect = [0.125, 0.125, 0.625, 0.125];
        for (x, e) in l.world_model().row(r).iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
        assert_eq!(l.world_model().counter(r), 1);
        let touched: u64 = l.world_model().counters().iter().sum();
        assert_eq!(touched, 1);
        for other in (0..16).filter(|i| *i != r) {
            assert_eq!(l.world_model().row(other), &[0.25; 4]);
        }
    }

    #[test]
    fn uniform_learner_has_zero_gradient() {
        let l = LearnerState::<f64>::init_uniform(4, 4).unwrap();
        assert!(l.policy_gradient().values().iter().all(|f| f.abs() < 1e-15));
        let mut l2 = l.clone();
        l2.update_policy();
        assert_eq!(l2.policy().data(), l.policy().data());
    }

    #[test]
    fn from_parts_checks_shapes() {
        let err = LearnerState::<f64>::from_parts(
            DiscreteDistribution::uniform(4),
            ConditionalTable::uniform(12, 4),
            ConditionalTable::uniform(4, 4),
            0,
        );
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn sample_row_degenerate_rows() {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let row = [0.0, 0.0, 1.0, 0.0];
        assert!((0..1000).all(|_| sample_row(&row, &mut rng) == 2));
    }
}

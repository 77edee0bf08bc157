//! Predictive-information maximization for tabular sensorimotor policies.
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the simulator and CLI use.

pub mod composer;
pub mod error;
pub mod infotheory;
pub mod learner;
pub mod scalar;
pub mod table;

pub use error::{Error, Result};
pub use infotheory::{
    empirical_mi_from_series, empirical_mi_from_states, entropy, entropy_of, joint_from_components,
    mutual_information, predictive_information, Binner,
};
pub use learner::{sample_row, LearnerState, PolicyGradient, RateSchedule};
pub use scalar::Scalar;
pub use table::{floor_project, ConditionalTable, DiscreteDistribution, JointTable, PROB_FLOOR};

pub type Real = f64;
pub type Distribution = DiscreteDistribution<Real>;
pub type Joint = JointTable<Real>;
pub type Table = ConditionalTable<Real>;
pub type Learner = LearnerState<Real>;
pub type WheelBinner = Binner<Real>;

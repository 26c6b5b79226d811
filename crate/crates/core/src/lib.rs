//! Event-triggered Nash equilibrium seeking for quadratic N-player games.

// NaN must fail validation, so `!(x > 0)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dither;
pub mod error;
pub mod game;
pub mod linalg;
pub mod output;
pub mod scenario;
pub mod run;
pub mod scalar;
pub mod sim;
pub mod trigger;

pub use dither::{common_period, validate_frequencies, CommonPeriod, DitherConfig, FrequencyViolation, Rational};
pub use error::{Error, ErrorClass, Result};
pub use game::{nash_equilibrium, oligopoly_game, pseudo_gradient_matrix, PseudoGradientMatrix, QuadraticGame};
pub use scalar::Scalar;
pub use sim::{simulate, simulate_average, SimConfig, SimMode, SimTrace};
pub use trigger::TriggerConfig;

pub type Game = QuadraticGame<f64>;
pub type Dither = DitherConfig<f64>;
pub type Trigger = TriggerConfig<f64>;
pub type Sim = SimConfig<f64>;
pub type Trace = SimTrace<f64>;
pub type Mat = linalg::Matrix<f64>;

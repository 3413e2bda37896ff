//! Reward shaping and the sampling-based controller that uses predicted
//! model error to steer around terrain the canonical model cannot describe.

mod mppi;
mod navigate;
mod predictor;
mod reward;

pub use mppi::{mppi_step, sample_sequence, softmax_weights, weighted_mean, MppiConfig, MppiDiagnostics, MppiStep};
pub use navigate::{navigate, NavConfig, NavOutcome, NavResult, NavStep};
pub use predictor::{ConstantPredictor, Predictor};
pub use reward::{goal_reward, normalized_goal_reward, total_reward, traversability_reward, RewardConfig, EXPONENT_CAP};

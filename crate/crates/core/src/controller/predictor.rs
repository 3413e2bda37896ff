use crate::dynamics::ActionSequence;
use crate::error::Result;
use crate::labeling::ImageHistory;
use crate::regressor::{ImageEncoding, RegressorParams};

/// Source of model-error estimates for the controller. `encode` runs once
/// per control cycle, `predict` once per candidate sequence.
pub trait Predictor {
    type Encoding;

    fn encode(&self, history: &ImageHistory) -> Result<Self::Encoding>;

    fn predict(&self, enc: &Self::Encoding, actions: &ActionSequence) -> f64;
}

impl Predictor for RegressorParams {
    type Encoding = ImageEncoding;

    fn encode(&self, history: &ImageHistory) -> Result<ImageEncoding> {
        RegressorParams::encode(self, history)
    }

    fn predict(&self, enc: &ImageEncoding, actions: &ActionSequence) -> f64 {
        self.predict_encoded(enc, actions)
    }
}

/// Predicts the same error for everything. `ConstantPredictor(0.0)` turns
/// the controller into a pure goal seeker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPredictor(pub f64);

impl Predictor for ConstantPredictor {
    type Encoding = ();

    fn encode(&self, _history: &ImageHistory) -> Result<()> {
        Ok(())
    }

    fn predict(&self, _enc: &(), _actions: &ActionSequence) -> f64 {
        self.0
    }
}

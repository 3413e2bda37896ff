//! Learned model-error prediction for navigating deformable terrain.
//!
//! The crate bundles a canonical Dubins-car model, a terrain simulator whose
//! realized motion deviates from that model, self-supervised labeling of the
//! deviation, a small convolutional/recurrent regressor trained from scratch,
//! a sampling-based MPPI controller that penalises predicted deviation, and
//! the iterative collect/retrain campaign that ties them together.

pub mod controller;
pub mod dynamics;
pub mod error;
pub mod labeling;
pub mod pipeline;
pub mod plot;
pub mod regressor;
pub mod tensor_io;
pub mod terrain;

pub use error::{Error, Result};

//! Patch-based music encoder and autoregressive palette decoder.
//!
//! The encoder turns full-height temporal patches of the feature matrix into
//! tokens with sinusoidal position codes. The decoder cross-attends to the
//! pooled (optionally noised) embedding followed by those tokens and emits
//! one color per step plus a stop logit.

mod config;
mod net;
mod objective;
mod state;

pub use config::ModelConfig;
pub use net::{
    augment, decode_step, encode, forward_train, generate, positional_encoding, DecodeStep,
    Encoded, Memory,
};
pub use objective::{objective, ObjectiveOptions, ObjectiveOutput, TrainExample};
pub use state::ModelState;

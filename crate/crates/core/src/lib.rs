//! Emotion-aligned color palette generation from music.
//!
//! The crate is organised bottom-up:
//!
//! - [`colorlab`]: sRGB / CIELAB / CIELCh conversion, CIEDE2000 and palette handling.
//! - [`audiofeat`]: WAV decoding and the 539-row standardized feature matrix.
//! - [`emotion`]: eight-octant emotion vectors, similarity, matching and providers.
//! - [`autograd`]: a small reverse-mode tape used by the model and the losses.
//! - [`model`]: temporal-patch transformer encoder and autoregressive color decoder.
//! - [`losses`]: assignment-based color distance, hue diversity, emotion consistency, stop.
//! - [`metrics`]: Div, Multi, CHO, BC, ES and JS evaluation.
//! - [`pipeline`]: dataset construction, training, generation and evaluation drivers.

pub mod audiofeat;
pub mod autograd;
pub mod colorlab;
pub mod emotion;
mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod pipeline;

pub use error::{Error, Result};

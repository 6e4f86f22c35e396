//! Minimal reverse-mode automatic differentiation over dense `f64` matrices.

mod graph;
mod mat;
mod real;

pub use graph::{Gradients, Graph, Var};
pub use mat::Mat;
pub use real::Real;

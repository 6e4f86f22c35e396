use std::ops::{Add, Div, Mul, Neg, Sub};

use super::graph::Var;

/// Scalar arithmetic shared by plain `f64` evaluation and the tape.
///
/// Formulas written against `Real` (CIEDE2000, the palette emotion heuristic,
/// the loss terms) run unchanged on both routes. Branches inspect
/// [`Real::val`], so on the tape they are frozen at the current point.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn val(self) -> f64;
    /// A constant living in the same context as `self`.
    fn lift(self, v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn relu(self) -> Self;
    fn sigmoid(self) -> Self;
    fn softplus(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// `atan2(self, x)`
    fn atan2(self, x: Self) -> Self;
}

impl Real for f64 {
    fn val(self) -> f64 {
        self
    }
    fn lift(self, v: f64) -> Self {
        v
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn relu(self) -> Self {
        self.max(0.0)
    }
    fn sigmoid(self) -> Self {
        if self >= 0.0 {
            1.0 / (1.0 + f64::exp(-self))
        } else {
            let e = f64::exp(self);
            e / (1.0 + e)
        }
    }
    fn softplus(self) -> Self {
        self.max(0.0) + f64::exp(-f64::abs(self)).ln_1p()
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

impl<'g> Real for Var<'g> {
    fn val(self) -> f64 {
        self.item()
    }
    fn lift(self, v: f64) -> Self {
        self.graph().scalar(v)
    }
    fn sin(self) -> Self {
        Var::sin(self)
    }
    fn cos(self) -> Self {
        Var::cos(self)
    }
    fn exp(self) -> Self {
        Var::exp(self)
    }
    fn sqrt(self) -> Self {
        Var::sqrt(self)
    }
    fn abs(self) -> Self {
        Var::abs(self)
    }
    fn relu(self) -> Self {
        Var::relu(self)
    }
    fn sigmoid(self) -> Self {
        Var::sigmoid(self)
    }
    fn softplus(self) -> Self {
        Var::softplus(self)
    }
    fn powi(self, n: i32) -> Self {
        Var::powi(self, n)
    }
    fn atan2(self, x: Self) -> Self {
        Var::atan2(self, x)
    }
}

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Closed arithmetic surface shared by every differentiable payload.
///
/// Implemented by `f64`, by tape variables, and by tangent bundles over
/// either, so the same energy pipeline runs in plain evaluation mode, in
/// reverse mode, and in nested forward-over-reverse mode.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Primal payload; drives branching in `relu`, `min`, `max` and guards.
    fn val(self) -> f64;
    /// `c * self` for a plain constant.
    fn scale(self, c: f64) -> Self;
    /// `self + c` for a plain constant.
    fn shift(self, c: f64) -> Self;
    fn recip(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    /// `max(self, 0)` with derivative 0 at exactly 0.
    fn relu(self) -> Self;
    /// Selects the smaller operand by primal value; ties pick `self`.
    fn min(self, other: Self) -> Self;
    /// Selects the larger operand by primal value; ties pick `self`.
    fn max(self, other: Self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn val(self) -> f64 {
        self
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        c * self
    }
    #[inline]
    fn shift(self, c: f64) -> Self {
        self + c
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }
    #[inline]
    fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

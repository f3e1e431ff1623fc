use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic shared by plain floats, dual numbers and tape variables.
///
/// The op set is deliberately small: `+ - * /`, negation, `tanh`, `sin` and
/// `square`, plus the `sum`/`mean` reductions below.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(value: f64) -> Self;
    fn value(&self) -> f64;
    fn tanh(self) -> Self;
    fn sin(self) -> Self;
    fn square(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
}

/// Left-to-right sum; `constant(0)` for an empty input.
pub fn sum<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    let mut it = items.into_iter();
    match it.next() {
        Some(first) => it.fold(first, |acc, v| acc + v),
        None => S::constant(0.0),
    }
}

/// Arithmetic mean, or `None` for an empty input.
pub fn mean<S: Scalar>(items: &[S]) -> Option<S> {
    if items.is_empty() {
        None
    } else {
        Some(sum(items.iter().copied()) / S::constant(items.len() as f64))
    }
}

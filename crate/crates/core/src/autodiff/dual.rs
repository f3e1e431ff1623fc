use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// Forward-mode dual number `value + tangent·ε` with `ε² = 0`.
///
/// Generic over the underlying scalar so a dual can itself be recorded on a
/// reverse tape (forward-over-reverse).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualScalar<S> {
    pub value: S,
    pub tangent: S,
}

impl<S: Scalar> DualScalar<S> {
    pub fn new(value: S, tangent: S) -> Self {
        Self { value, tangent }
    }

    /// A point with unit tangent: the seed of a directional derivative.
    pub fn variable(value: S) -> Self {
        Self { value, tangent: S::constant(1.0) }
    }

    pub fn lift(value: S) -> Self {
        Self { value, tangent: S::constant(0.0) }
    }
}

impl<S: Scalar> Add for DualScalar<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.tangent + rhs.tangent)
    }
}

impl<S: Scalar> Sub for DualScalar<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.tangent - rhs.tangent)
    }
}

impl<S: Scalar> Mul for DualScalar<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.tangent * rhs.value + self.value * rhs.tangent,
        )
    }
}

impl<S: Scalar> Div for DualScalar<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        Self::new(q, (self.tangent - q * rhs.tangent) / rhs.value)
    }
}

impl<S: Scalar> Neg for DualScalar<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.tangent)
    }
}

impl<S: Scalar> Scalar for DualScalar<S> {
    fn constant(value: f64) -> Self {
        Self::lift(S::constant(value))
    }

    fn value(&self) -> f64 {
        self.value.value()
    }

    fn tanh(self) -> Self {
        let y = self.value.tanh();
        let slope = S::constant(1.0) - y.square();
        Self::new(y, slope * self.tangent)
    }

    fn sin(self) -> Self {
        // cos(v) = sin(v + π/2) keeps the op set closed.
        let cos = (self.value + S::constant(std::f64::consts::FRAC_PI_2)).sin();
        Self::new(self.value.sin(), cos * self.tangent)
    }

    fn square(self) -> Self {
        Self::new(self.value.square(), S::constant(2.0) * self.value * self.tangent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = DualScalar<f64>;

    #[test]
    fn chain_rule_on_composite() {
        // f(x) = sin(x²) / (1 + tanh x)
        let x = 0.7;
        let d = D::variable(x);
        let f = (d.square()).sin() / (D::constant(1.0) + d.tanh());
        let g = 1.0 + x.tanh();
        let expected_val = (x * x).sin() / g;
        let expected_der =
            (2.0 * x * (x * x).cos() * g - (x * x).sin() * (1.0 - x.tanh().powi(2))) / (g * g);
        assert!((f.value - expected_val).abs() < 1e-15);
        assert!((f.tangent - expected_der).abs() < 1e-14);
    }

    #[test]
    fn lifted_constants_have_zero_tangent() {
        let c = D::lift(3.0) * D::lift(2.0) + D::constant(1.0);
        assert_eq!(c, D::new(7.0, 0.0));
    }
}

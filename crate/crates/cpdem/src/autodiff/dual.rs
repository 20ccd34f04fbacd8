use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{AdError, Scalar};

/// Maximum number of tangent slots: one per spatial coordinate.
pub const MAX_TANGENTS: usize = 3;

/// A forward-mode value with up to [`MAX_TANGENTS`] directional derivatives.
///
/// `n = 0` means "constant": a value with no active tangent slots behaves
/// identically to a plain scalar under every operation, and binary rules
/// treat the missing side as exact zeros without doing the work. Payload
/// slots beyond `n` hold a copy of the value and are never read.
#[derive(Clone, Copy, Debug)]
pub struct TangentValue<V: Scalar> {
    value: V,
    tangents: [V; MAX_TANGENTS],
    n: u8,
}

impl<V: Scalar> TangentValue<V> {
    /// A value with no active tangent slots.
    #[inline]
    pub fn constant(value: V) -> Self {
        Self {
            value,
            tangents: [value; MAX_TANGENTS],
            n: 0,
        }
    }

    /// A value with explicit tangent slots.
    pub fn new(value: V, tangents: &[V]) -> Self {
        assert!(tangents.len() <= MAX_TANGENTS, "too many tangent slots");
        let mut t = [value; MAX_TANGENTS];
        t[..tangents.len()].copy_from_slice(tangents);
        Self {
            value,
            tangents: t,
            n: tangents.len() as u8,
        }
    }

    #[inline]
    pub fn value(&self) -> V {
        self.value
    }

    /// Number of active tangent slots.
    #[inline]
    pub fn n_tangents(&self) -> usize {
        self.n as usize
    }

    /// Tangent in slot `k`; panics if `k` is not an active slot.
    #[inline]
    pub fn tangent(&self, k: usize) -> V {
        assert!(k < self.n as usize, "tangent slot {k} not active");
        self.tangents[k]
    }

    /// Tangent in slot `k`, or a plain zero if the bundle is constant.
    /// Only meaningful when `V = f64`-like payloads are wanted as numbers.
    #[inline]
    pub fn tangent_or_zero(&self, k: usize) -> f64
    where
        V: Scalar,
    {
        if k < self.n as usize {
            self.tangents[k].val()
        } else {
            0.0
        }
    }

    /// Tangent in slot `k`, or `fallback` when the slot is not active.
    #[inline]
    pub fn tangent_or(&self, k: usize, fallback: V) -> V {
        if k < self.n as usize {
            self.tangents[k]
        } else {
            fallback
        }
    }

    /// Chain rule for a unary op: `value = w`, `tangent[k] = coeff * t[k]`.
    #[inline]
    fn unary(&self, w: V, coeff: V) -> Self {
        let mut t = [w; MAX_TANGENTS];
        for k in 0..self.n as usize {
            t[k] = coeff * self.tangents[k];
        }
        Self {
            value: w,
            tangents: t,
            n: self.n,
        }
    }

    /// `ln` that rejects non-positive primal values instead of producing NaN.
    pub fn try_ln(self) -> Result<Self, AdError> {
        if self.value.val() <= 0.0 {
            return Err(AdError::LnDomain {
                value: self.value.val(),
            });
        }
        Ok(Scalar::ln(self))
    }

    /// Division that rejects a denominator recorded as exactly zero.
    pub fn try_div(self, rhs: Self) -> Result<Self, AdError> {
        if rhs.value.val() == 0.0 {
            return Err(AdError::DivisionByZero);
        }
        Ok(self / rhs)
    }
}

impl TangentValue<f64> {
    /// Input `i` of a `dim`-dimensional program, seeded with unit tangent in
    /// its own slot.
    pub fn seeded(value: f64, dim: usize, slot: usize) -> Self {
        assert!(dim <= MAX_TANGENTS && slot < dim);
        let mut t = [0.0; MAX_TANGENTS];
        t[slot] = 1.0;
        Self {
            value,
            tangents: t,
            n: dim as u8,
        }
    }
}

#[inline]
fn merged_n(a: u8, b: u8) -> u8 {
    debug_assert!(a == 0 || b == 0 || a == b, "tangent slot count mismatch");
    a.max(b)
}

impl<V: Scalar> Add for TangentValue<V> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let value = self.value + rhs.value;
        let n = merged_n(self.n, rhs.n);
        let mut t = [value; MAX_TANGENTS];
        for k in 0..n as usize {
            t[k] = if self.n == 0 {
                rhs.tangents[k]
            } else if rhs.n == 0 {
                self.tangents[k]
            } else {
                self.tangents[k] + rhs.tangents[k]
            };
        }
        Self { value, tangents: t, n }
    }
}

impl<V: Scalar> Sub for TangentValue<V> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let value = self.value - rhs.value;
        let n = merged_n(self.n, rhs.n);
        let mut t = [value; MAX_TANGENTS];
        for k in 0..n as usize {
            t[k] = if self.n == 0 {
                -rhs.tangents[k]
            } else if rhs.n == 0 {
                self.tangents[k]
            } else {
                self.tangents[k] - rhs.tangents[k]
            };
        }
        Self { value, tangents: t, n }
    }
}

impl<V: Scalar> Mul for TangentValue<V> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let value = self.value * rhs.value;
        let n = merged_n(self.n, rhs.n);
        let mut t = [value; MAX_TANGENTS];
        for k in 0..n as usize {
            t[k] = if self.n == 0 {
                self.value * rhs.tangents[k]
            } else if rhs.n == 0 {
                self.tangents[k] * rhs.value
            } else {
                self.tangents[k] * rhs.value + self.value * rhs.tangents[k]
            };
        }
        Self { value, tangents: t, n }
    }
}

impl<V: Scalar> Div for TangentValue<V> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let rb = rhs.value.recip();
        let value = self.value * rb;
        let n = merged_n(self.n, rhs.n);
        let mut t = [value; MAX_TANGENTS];
        for k in 0..n as usize {
            t[k] = if self.n == 0 {
                -(value * rhs.tangents[k]) * rb
            } else if rhs.n == 0 {
                self.tangents[k] * rb
            } else {
                (self.tangents[k] - value * rhs.tangents[k]) * rb
            };
        }
        Self { value, tangents: t, n }
    }
}

impl<V: Scalar> Neg for TangentValue<V> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let value = -self.value;
        let mut t = [value; MAX_TANGENTS];
        for k in 0..self.n as usize {
            t[k] = -self.tangents[k];
        }
        Self {
            value,
            tangents: t,
            n: self.n,
        }
    }
}

impl<V: Scalar> Scalar for TangentValue<V> {
    #[inline]
    fn val(self) -> f64 {
        self.value.val()
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        let value = self.value.scale(c);
        let mut t = [value; MAX_TANGENTS];
        for k in 0..self.n as usize {
            t[k] = self.tangents[k].scale(c);
        }
        Self {
            value,
            tangents: t,
            n: self.n,
        }
    }

    #[inline]
    fn shift(self, c: f64) -> Self {
        Self {
            value: self.value.shift(c),
            ..self
        }
    }

    #[inline]
    fn recip(self) -> Self {
        let r = self.value.recip();
        self.unary(r, -(r * r))
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(self.value.powi(0)),
            1 => self,
            _ => {
                let w = self.value.powi(n);
                let coeff = self.value.powi(n - 1).scale(n as f64);
                self.unary(w, coeff)
            }
        }
    }

    #[inline]
    fn exp(self) -> Self {
        let w = self.value.exp();
        self.unary(w, w)
    }

    #[inline]
    fn ln(self) -> Self {
        let w = self.value.ln();
        self.unary(w, self.value.recip())
    }

    #[inline]
    fn tanh(self) -> Self {
        let w = self.value.tanh();
        // d tanh = 1 - tanh^2
        self.unary(w, (w * w).scale(-1.0).shift(1.0))
    }

    #[inline]
    fn relu(self) -> Self {
        if self.value.val() > 0.0 {
            self
        } else {
            // dead branch: value clamps, tangents vanish
            Self::constant(self.value.relu())
        }
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        if self.value.val() <= other.value.val() {
            self
        } else {
            other
        }
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        if self.value.val() >= other.value.val() {
            self
        } else {
            other
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d1(v: TangentValue<f64>) -> f64 {
        v.tangent(0)
    }

    #[test]
    fn square_has_polynomial_derivative() {
        let x = TangentValue::seeded(3.0, 1, 0);
        let y = x * x;
        assert_eq!(y.value(), 9.0);
        assert_eq!(d1(y), 6.0);
    }

    #[test]
    fn tanh_derivative_at_zero_is_one() {
        let x = TangentValue::seeded(0.0, 1, 0);
        let y = Scalar::tanh(x);
        assert_eq!(y.value(), 0.0);
        assert_eq!(d1(y), 1.0);
    }

    #[test]
    fn nested_duals_give_second_derivative_of_cube() {
        // f(x) = x^3, f''(2) = 12 via a dual whose payload is itself a dual
        let inner = TangentValue::seeded(2.0, 1, 0);
        let one = TangentValue::new(1.0, &[0.0]);
        let x: TangentValue<TangentValue<f64>> = TangentValue::new(inner, &[one]);
        let y = x.powi(3);
        assert_eq!(y.value().value(), 8.0);
        assert_eq!(y.value().tangent(0), 12.0); // f'(2)
        assert_eq!(y.tangent(0).tangent(0), 12.0); // f''(2)
    }

    #[test]
    fn constant_tangents_behave_like_plain_scalars() {
        let c = TangentValue::constant(2.5);
        let x = TangentValue::seeded(1.5, 2, 1);
        let y = (x * c + c).scale(2.0) / c;
        let plain = (1.5 * 2.5 + 2.5) * 2.0 / 2.5;
        assert!((y.value() - plain).abs() < 1e-15);
        assert_eq!(y.n_tangents(), 2);
        assert_eq!(y.tangent(0), 0.0);
        assert!((y.tangent(1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn relu_subgradient_zero_at_exactly_zero() {
        let x = TangentValue::seeded(0.0, 1, 0);
        let y = Scalar::relu(x);
        assert_eq!(y.value(), 0.0);
        assert_eq!(y.tangent_or_zero(0), 0.0);

        let x = TangentValue::seeded(1e-12, 1, 0);
        assert_eq!(d1(Scalar::relu(x)), 1.0);
    }

    #[test]
    fn try_ln_rejects_non_positive() {
        let x = TangentValue::seeded(-1.0, 1, 0);
        match x.try_ln() {
            Err(AdError::LnDomain { value }) => assert_eq!(value, -1.0),
            other => panic!("expected LnDomain, got {other:?}"),
        }
    }

    #[test]
    fn try_div_rejects_zero_denominator() {
        let x = TangentValue::seeded(1.0, 1, 0);
        let z = TangentValue::constant(0.0);
        assert!(matches!(x.try_div(z), Err(AdError::DivisionByZero)));
    }

    #[test]
    fn division_quotient_rule() {
        let x = TangentValue::seeded(2.0, 1, 0);
        let y = TangentValue::new(3.0, &[0.5]);
        let q = x / y;
        // d(x/y) = (x' y - x y') / y^2 = (3 - 2*0.5)/9
        assert!((q.value() - 2.0 / 3.0).abs() < 1e-15);
        assert!((d1(q) - 2.0 / 9.0).abs() < 1e-15);
    }
}

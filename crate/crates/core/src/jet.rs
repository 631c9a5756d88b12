//! Second-order forward-mode automatic differentiation in two variables.
//!
//! [`Taylor2`] carries a value, its gradient and its (symmetric) Hessian with
//! respect to the two chart coordinates. Every elementary function is
//! propagated by the second-order chain rule
//!
//! ```text
//! f(u).grad = f'(u) u.grad
//! f(u).hess = f'(u) u.hess + f''(u) u.grad u.gradᵀ
//! ```
//!
//! Charts are written once against the [`Smooth`] trait and evaluated either
//! in plain arithmetic (`T`) or in jet arithmetic (`Taylor2<T>`).

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;

use crate::scalar::Real;

/// Arithmetic needed to evaluate a chart embedding.
pub trait Smooth<T: Real>:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<T, Output = Self>
    + Mul<T, Output = Self>
{
    fn constant(c: T) -> Self;
    fn value(&self) -> T;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, p: T) -> Self;
    /// `|x|`, differentiated as `sign(x)` (undefined at 0).
    fn abs(self) -> Self;
}

impl<T: Real> Smooth<T> for T {
    #[inline]
    fn constant(c: T) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> T {
        *self
    }
    #[inline]
    fn sin(self) -> Self {
        num_traits::Float::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        num_traits::Float::cos(self)
    }
    #[inline]
    fn sinh(self) -> Self {
        num_traits::Float::sinh(self)
    }
    #[inline]
    fn cosh(self) -> Self {
        num_traits::Float::cosh(self)
    }
    #[inline]
    fn exp(self) -> Self {
        num_traits::Float::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        num_traits::Float::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        num_traits::Float::sqrt(self)
    }
    #[inline]
    fn powf(self, p: T) -> Self {
        num_traits::Float::powf(self, p)
    }
    #[inline]
    fn abs(self) -> Self {
        num_traits::Float::abs(self)
    }
}

/// Value, gradient and Hessian of a scalar function of two variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor2<T> {
    pub val: T,
    pub grad: [T; 2],
    /// Hessian entries `[∂₀∂₀, ∂₀∂₁, ∂₁∂₁]`; symmetry holds by construction.
    pub hess: [T; 3],
}

impl<T: Real> Taylor2<T> {
    /// The independent variable `index` (0 or 1) evaluated at `at`.
    pub fn variable(at: T, index: usize) -> Self {
        let mut grad = [T::zero(); 2];
        grad[index] = T::one();
        Self {
            val: at,
            grad,
            hess: [T::zero(); 3],
        }
    }

    pub fn hessian(&self, mu: usize, nu: usize) -> T {
        self.hess[mu + nu]
    }

    /// Applies `f` with derivatives `d1 = f'(val)`, `d2 = f''(val)`.
    #[inline]
    fn chain(self, f: T, d1: T, d2: T) -> Self {
        let [g0, g1] = self.grad;
        Self {
            val: f,
            grad: [d1 * g0, d1 * g1],
            hess: [
                d1 * self.hess[0] + d2 * g0 * g0,
                d1 * self.hess[1] + d2 * g0 * g1,
                d1 * self.hess[2] + d2 * g1 * g1,
            ],
        }
    }
}

impl<T: Real> Add for Taylor2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            val: self.val + o.val,
            grad: [self.grad[0] + o.grad[0], self.grad[1] + o.grad[1]],
            hess: [
                self.hess[0] + o.hess[0],
                self.hess[1] + o.hess[1],
                self.hess[2] + o.hess[2],
            ],
        }
    }
}

impl<T: Real> Sub for Taylor2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Real> Neg for Taylor2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * (-T::one())
    }
}

impl<T: Real> Mul for Taylor2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self {
            val: a.val * b.val,
            grad: [
                a.grad[0] * b.val + a.val * b.grad[0],
                a.grad[1] * b.val + a.val * b.grad[1],
            ],
            hess: [
                a.hess[0] * b.val + a.val * b.hess[0] + T::two() * a.grad[0] * b.grad[0],
                a.hess[1] * b.val
                    + a.val * b.hess[1]
                    + a.grad[0] * b.grad[1]
                    + a.grad[1] * b.grad[0],
                a.hess[2] * b.val + a.val * b.hess[2] + T::two() * a.grad[1] * b.grad[1],
            ],
        }
    }
}

impl<T: Real> Div for Taylor2<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = Float::recip(o.val);
        self * o.chain(inv, -inv * inv, T::two() * inv * inv * inv)
    }
}

impl<T: Real> Add<T> for Taylor2<T> {
    type Output = Self;
    #[inline]
    fn add(mut self, c: T) -> Self {
        self.val += c;
        self
    }
}

impl<T: Real> Mul<T> for Taylor2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, c: T) -> Self {
        Self {
            val: self.val * c,
            grad: [self.grad[0] * c, self.grad[1] * c],
            hess: [self.hess[0] * c, self.hess[1] * c, self.hess[2] * c],
        }
    }
}

impl<T: Real> Smooth<T> for Taylor2<T> {
    fn constant(c: T) -> Self {
        Self {
            val: c,
            grad: [T::zero(); 2],
            hess: [T::zero(); 3],
        }
    }
    fn value(&self) -> T {
        self.val
    }
    fn sin(self) -> Self {
        let (s, c) = Float::sin_cos(self.val);
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = Float::sin_cos(self.val);
        self.chain(c, -s, -c)
    }
    fn sinh(self) -> Self {
        let (s, c) = (Float::sinh(self.val), Float::cosh(self.val));
        self.chain(s, c, s)
    }
    fn cosh(self) -> Self {
        let (s, c) = (Float::sinh(self.val), Float::cosh(self.val));
        self.chain(c, s, c)
    }
    fn exp(self) -> Self {
        let e = Float::exp(self.val);
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let inv = Float::recip(self.val);
        self.chain(Float::ln(self.val), inv, -inv * inv)
    }
    fn sqrt(self) -> Self {
        let r = Float::sqrt(self.val);
        let d1 = T::half() / r;
        self.chain(r, d1, -d1 / (T::two() * self.val))
    }
    fn powf(self, p: T) -> Self {
        let f = Float::powf(self.val, p);
        let d1 = p * Float::powf(self.val, p - T::one());
        let d2 = p * (p - T::one()) * Float::powf(self.val, p - T::two());
        self.chain(f, d1, d2)
    }
    fn abs(self) -> Self {
        if self.val < T::zero() {
            -self
        } else {
            self
        }
    }
}

/// Evaluates `f` at `(u, v)` in jet arithmetic.
pub fn differentiate2<T: Real, F>(u: T, v: T, f: F) -> Taylor2<T>
where
    F: Fn(Taylor2<T>, Taylor2<T>) -> Taylor2<T>,
{
    f(Taylor2::variable(u, 0), Taylor2::variable(v, 1))
}

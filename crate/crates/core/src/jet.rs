//! Second-order forward-mode jets: a value with its first two derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// `(f, f', f'')` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    #[must_use]
    pub const fn constant(c: f64) -> Self {
        Self { v: c, d1: 0.0, d2: 0.0 }
    }

    /// The independent variable at `x`.
    #[must_use]
    pub const fn variable(x: f64) -> Self {
        Self { v: x, d1: 1.0, d2: 0.0 }
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    #[must_use]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f0,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
        }
    }

    #[must_use]
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    #[must_use]
    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    #[must_use]
    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    #[must_use]
    pub fn sinh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    #[must_use]
    pub fn cosh(self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    /// Integer power by repeated squaring.
    #[must_use]
    pub fn powi(self, mut n: u32) -> Self {
        let mut base = self;
        let mut acc = Self::constant(1.0);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            n >>= 1;
            if n > 0 {
                base = base * base;
            }
        }
        acc
    }

    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        let q1 = (self.d1 - q * o.d1) * inv;
        let q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) * inv;
        Self { v: q, d1: q1, d2: q2 }
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
        let h = 1e-4;
        let d1 = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
        let d2 = (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h)
            - f(x + 2.0 * h))
            / (12.0 * h * h);
        (d1, d2)
    }

    #[test]
    fn quotient_rule_matches_finite_differences() {
        let x = 0.7;
        let j = {
            let t = Jet2::variable(x);
            (t.sin() * t.exp()) / (Jet2::constant(2.0) + t.cosh())
        };
        let (d1, d2) = fd(|t| t.sin() * t.exp() / (2.0 + t.cosh()), x);
        assert!((j.d1 - d1).abs() < 1e-9);
        assert!((j.d2 - d2).abs() < 1e-6);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let t = Jet2::variable(1.3);
        let p = t.powi(5);
        assert!((p.v - 1.3f64.powi(5)).abs() < 1e-12);
        assert!((p.d1 - 5.0 * 1.3f64.powi(4)).abs() < 1e-11);
        assert!((p.d2 - 20.0 * 1.3f64.powi(3)).abs() < 1e-11);
        assert_eq!(t.powi(0), Jet2::constant(1.0));
    }
}

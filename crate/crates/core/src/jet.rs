//! Truncated Taylor series for exact low-order derivatives.
//!
//! `c[k]` holds f^{(k)}(x0)/k!.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl<const N: usize> Jet<N> {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        Self { c }
    }

    /// The independent variable expanded at `x`.
    pub fn var(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        if N > 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    /// Builds a jet from derivative values f, f', f'', ...
    pub fn from_derivs(d: &[f64]) -> Self {
        let mut c = [0.0; N];
        for (k, slot) in c.iter_mut().enumerate() {
            if k < d.len() {
                *slot = d[k] / factorial(k);
            }
        }
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn deriv(&self, k: usize) -> f64 {
        self.c[k] * factorial(k)
    }

    pub fn scale(mut self, s: f64) -> Self {
        for x in self.c.iter_mut() {
            *x *= s;
        }
        self
    }

    pub fn exp(&self) -> Self {
        let mut b = [0.0; N];
        b[0] = self.c[0].exp();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * b[k - j];
            }
            b[k] = s / k as f64;
        }
        Self { c: b }
    }

    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; N];
        b[0] = a0.ln();
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * b[j] * self.c[k - j];
            }
            b[k] = (self.c[k] - s / k as f64) / a0;
        }
        Self { c: b }
    }

    /// x^alpha for a positive base.
    pub fn powf(&self, alpha: f64) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; N];
        b[0] = a0.powf(alpha);
        for k in 1..N {
            let mut s = 0.0;
            for j in 1..=k {
                s += ((alpha + 1.0) * j as f64 - k as f64) * self.c[j] * b[k - j];
            }
            b[k] = s / (k as f64 * a0);
        }
        Self { c: b }
    }

    pub fn cosh(&self) -> Self {
        let e = self.exp();
        let m = (-*self).exp();
        (e + m).scale(0.5)
    }

    pub fn sinh(&self) -> Self {
        let e = self.exp();
        let m = (-*self).exp();
        (e - m).scale(0.5)
    }

    /// f∘self where `d` lists f, f', f'', ... at `self.value()`.
    pub fn compose(&self, d: &[f64]) -> Self {
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Self::constant(0.0);
        for k in (0..N.min(d.len())).rev() {
            out = out * delta + Self::constant(d[k] / factorial(k));
        }
        out
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for k in 0..N {
            self.c[k] += o.c[k];
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for k in 0..N {
            self.c[k] -= o.c[k];
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for i in 0..N {
            for j in 0..N - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Self { c }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut b = [0.0; N];
        for k in 0..N {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= o.c[j] * b[k - j];
            }
            b[k] = s / o.c[0];
        }
        Self { c: b }
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, x: f64) -> Self {
        self.c[0] += x;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, x: f64) -> Self {
        self.scale(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type J = Jet<5>;

    #[test]
    fn exp_ln_round_trip() {
        let x = J::var(0.7);
        let y = x.exp().ln();
        for k in 0..5 {
            assert_relative_eq!(y.c[k], x.c[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn power_matches_closed_form() {
        let m = -2.5;
        let r = 1.3_f64;
        let j = J::var(r).powf(m);
        let mut fall = 1.0;
        for k in 0..5 {
            assert_relative_eq!(j.deriv(k), fall * r.powf(m - k as f64), max_relative = 1e-13);
            fall *= m - k as f64;
        }
    }

    #[test]
    fn cosh_derivatives() {
        let t = 0.4_f64;
        let j = J::var(t).cosh();
        assert_relative_eq!(j.deriv(0), t.cosh(), max_relative = 1e-15);
        assert_relative_eq!(j.deriv(1), t.sinh(), max_relative = 1e-14);
        assert_relative_eq!(j.deriv(4), t.cosh(), max_relative = 1e-14);
        assert_relative_eq!(J::var(t).sinh().deriv(3), t.cosh(), max_relative = 1e-14);
    }

    #[test]
    fn quotient_and_compose() {
        let x = J::var(2.0);
        let q = J::constant(1.0) / x;
        assert_relative_eq!(q.deriv(2), 2.0 / 8.0, max_relative = 1e-15);
        // sin composed with x²: derivatives of sin(x²) at x = 0.5
        let x = J::var(0.5);
        let g = x * x;
        let a = g.value();
        let f = g.compose(&[a.sin(), a.cos(), -a.sin(), -a.cos(), a.sin()]);
        let d1 = 2.0 * 0.5 * a.cos();
        assert_relative_eq!(f.deriv(1), d1, max_relative = 1e-14);
        let d2 = 2.0 * a.cos() - 4.0 * 0.25 * a.sin();
        assert_relative_eq!(f.deriv(2), d2, max_relative = 1e-14);
    }
}

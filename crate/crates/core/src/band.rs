//! Banded LU with partial pivoting.
//!
//! Row i stores columns i−kl ..= i+ku+kl; the extra kl columns absorb fill-in
//! from row swaps.

use crate::error::{QflowError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    pub size: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(size: usize, kl: usize, ku: usize) -> Self {
        Self { size, kl, ku, data: vec![0.0; size * (2 * kl + ku + 1)] }
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.size || j >= self.size || j + self.kl < i || j > i + self.ku + self.kl {
            return None;
        }
        Some(i * self.width() + j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics if (i, j) lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let k = self.slot(i, j).expect("index in range");
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.size - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.size)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.size - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j))
    }

    pub fn lu(&self) -> Result<BandLu> {
        let n = self.size;
        let mut a = self.clone();
        let mut piv = vec![0usize; n];
        let reach = self.kl + self.ku;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let p = (k..=last_row)
                .max_by(|&x, &y| a.get(x, k).abs().total_cmp(&a.get(y, k).abs()))
                .unwrap_or(k);
            if a.get(p, k).abs() <= scale * f64::EPSILON * n as f64 || a.get(p, k) == 0.0 {
                return Err(QflowError::Solve(format!("zero pivot in column {k}")));
            }
            piv[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (x, y) = (a.get(k, j), a.get(p, j));
                    let (sk, sp) = (a.slot(k, j).unwrap(), a.slot(p, j).unwrap());
                    a.data[sk] = y;
                    a.data[sp] = x;
                }
            }
            let d = a.get(k, k);
            for i in k + 1..=last_row {
                let f = a.get(i, k) / d;
                let si = a.slot(i, k).unwrap();
                a.data[si] = f;
                if f != 0.0 {
                    for j in k + 1..=last_col {
                        let u = a.get(k, j);
                        if u != 0.0 {
                            let s = a.slot(i, j).unwrap();
                            a.data[s] -= f * u;
                        }
                    }
                }
            }
        }
        Ok(BandLu { a, piv })
    }
}

/// Factors from [`BandMatrix::lu`].
#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.a.size;
        if b.len() != n {
            return Err(QflowError::Solve(format!("rhs has length {}, expected {n}", b.len())));
        }
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            for i in k + 1..=(k + self.a.kl).min(n - 1) {
                x[i] -= self.a.get(i, k) * x[k];
            }
        }
        let reach = self.a.kl + self.a.ku;
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= self.a.get(k, j) * x[j];
            }
            x[k] = s / self.a.get(k, k);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn needs_pivoting() {
        // zero on the diagonal forces a swap
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 0, 0.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 2.0);
        m.set(1, 1, 1.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        m.set(2, 2, 3.0);
        let x = m.lu().unwrap().solve(&[1.0, 4.0, 7.0]).unwrap();
        let back = m.mul_vec(&x);
        for (a, b) in back.iter().zip([1.0, 4.0, 7.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let m = BandMatrix::zeros(4, 2, 2);
        assert!(matches!(m.lu(), Err(QflowError::Solve(_))));
    }

    proptest! {
        #[test]
        fn matches_dense_lu(
            size in 1usize..25,
            kl in 0usize..4,
            ku in 0usize..4,
            seed in proptest::collection::vec(-1.0f64..1.0, 25 * 25),
        ) {
            let mut m = BandMatrix::zeros(size, kl, ku);
            for i in 0..size {
                for j in i.saturating_sub(kl)..=(i + ku).min(size - 1) {
                    let v = seed[i * 25 + j] + if i == j { 0.05 } else { 0.0 };
                    m.set(i, j, v);
                }
            }
            let dense = m.to_dense();
            let b: Vec<f64> = (0..size).map(|i| (i as f64 * 0.37).sin()).collect();
            let reference = dense.clone().lu().solve(&nalgebra::DVector::from_column_slice(&b));
            if let (Ok(lu), Some(r)) = (m.lu(), reference) {
                let cond = dense.clone().svd(false, false).singular_values;
                let ratio = cond.max() / cond.min();
                prop_assume!(ratio < 1e8);
                let x = lu.solve(&b).unwrap();
                for i in 0..size {
                    prop_assert!((x[i] - r[i]).abs() < 1e-12 * ratio * (1.0 + r[i].abs()));
                }
            }
        }
    }
}

//! Banded LU without pivoting. The linearized operators here are close to
//! M-matrices (negative definite up to a small shift), so elimination in
//! natural order is stable enough; a vanishing pivot is reported instead.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
    factored: bool,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![T::zero(); n * (kl + ku + 1)], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = T::zero());
        self.factored = false;
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.ku, "({r},{c}) outside the band");
        r * (self.kl + self.ku + 1) + (c + self.kl - r)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        if c + self.kl < r || c > r + self.ku {
            return T::zero();
        }
        self.data[self.idx(r, c)]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        let k = self.idx(r, c);
        self.data[k] = self.data[k] + v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert!(!self.factored, "matvec on a factored matrix");
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.idx(r, c)] * x[c]).sum()
            })
            .collect()
    }

    /// In-place `A = LU` with unit lower `L`.
    pub fn factor(&mut self) -> Result<()> {
        let w = self.kl + self.ku + 1;
        let scale = self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let floor = scale * T::epsilon() * T::lit(16.0);
        for k in 0..self.n {
            let pivot = self.data[k * w + self.kl];
            if !(pivot.abs() > floor) {
                return Err(Error::SingularLinearization { row: k, pivot: pivot.as_f64() });
            }
            let last_col = (k + self.ku).min(self.n - 1);
            let last_row = (k + self.kl).min(self.n - 1);
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let l = self.data[ir] / pivot;
                self.data[ir] = l;
                if l == T::zero() {
                    continue;
                }
                let row_k = k * w + self.kl;
                let row_r = ir;
                for off in 1..=last_col - k {
                    let v = self.data[row_k + off];
                    self.data[row_r + off] = self.data[row_r + off] - l * v;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert!(self.factored, "solve before factor");
        let w = self.kl + self.ku + 1;
        for r in 0..self.n {
            let lo = r.saturating_sub(self.kl);
            let mut acc = b[r];
            for c in lo..r {
                acc = acc - self.data[r * w + c + self.kl - r] * b[c];
            }
            b[r] = acc;
        }
        for r in (0..self.n).rev() {
            let hi = (r + self.ku).min(self.n - 1);
            let mut acc = b[r];
            for c in r + 1..=hi {
                acc = acc - self.data[r * w + c + self.kl - r] * b[c];
            }
            b[r] = acc / self.data[r * w + self.kl];
        }
    }
}

//! Square band matrices with `lower` sub-diagonals and `upper` super-diagonals.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    // row-major, `lower + upper + 1` slots per row; slot `lower` is the diagonal
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.n || col >= self.n {
            return None;
        }
        if col + self.lower < row || col > row + self.upper {
            return None;
        }
        Some(row * (self.lower + self.upper + 1) + col + self.lower - row)
    }

    /// Entry `(row, col)`; zero outside the band.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |i| self.data[i])
    }

    /// Sets an entry inside the band.
    ///
    /// # Panics
    /// If `(row, col)` lies outside the band or the matrix.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let i = self
            .slot(row, col)
            .expect("band matrix entry outside the stored band");
        self.data[i] = value;
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let width = self.lower + self.upper + 1;
        for (row, out) in y.iter_mut().enumerate() {
            let first = row.saturating_sub(self.lower);
            let last = (row + self.upper).min(self.n - 1);
            let base = row * width + self.lower - row;
            *out = (first..=last).map(|col| self.data[base + col] * x[col]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c)).collect())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| (0..self.n).all(|c| self.get(r, c) == self.get(c, r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_storage_and_product() {
        let mut a = BandMatrix::zeros(4, 2, 1);
        for r in 0..4 {
            a.set(r, r, 1.0 + r as f64);
            if r + 1 < 4 {
                a.set(r, r + 1, -1.0);
            }
            if r >= 2 {
                a.set(r, r - 2, 0.5);
            }
        }
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.get(3, 1), 0.5);
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = a.mul_vec(&x);
        let dense = a.to_dense();
        for r in 0..4 {
            let expect: f64 = (0..4).map(|c| dense[r][c] * x[c]).sum();
            assert_eq!(y[r], expect);
        }
        assert!(!a.is_symmetric());
    }

    #[test]
    #[should_panic]
    fn set_outside_band_panics() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.set(0, 2, 1.0);
    }
}

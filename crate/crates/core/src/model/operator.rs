use nalgebra::DMatrix;

use crate::C64;

/// Compressed-row Hermitian matrix.
///
/// Built from entries that are always inserted in conjugate pairs, so the
/// stored pattern is symmetric and `H = H^dagger` holds entry by entry.
#[derive(Clone, Debug)]
pub struct SparseHermitian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseHermitian {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub(crate) fn from_triplets(dim: usize, triplets: Vec<(usize, usize, C64)>) -> Self {
        let (row_ptr, cols, vals) = super::assemble(dim, triplets);
        Self { dim, row_ptr, cols, vals }
    }

    /// Zero-valued operator with a given pattern.
    pub(crate) fn from_csr(dim: usize, row_ptr: Vec<usize>, cols: Vec<usize>) -> Self {
        let vals = vec![C64::new(0.0, 0.0); cols.len()];
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(i) => self.vals[range.start + i],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i]];
            }
            *out = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[i])] += self.vals[i];
            }
        }
        m
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[i];
                let d = (self.vals[i] - self.get(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest absolute row sum; bounds the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [C64] {
        &mut self.vals
    }

    pub(crate) fn pattern(&self) -> (&[usize], &[usize]) {
        (&self.row_ptr, &self.cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_apply() {
        let i = C64::new(0.0, 1.0);
        let h = SparseHermitian::from_triplets(
            2,
            vec![(0, 0, C64::new(1.0, 0.0)), (0, 1, i), (1, 0, -i), (0, 0, C64::new(2.0, 0.0))],
        );
        assert_eq!(h.nnz(), 3);
        assert_eq!(h.get(0, 0), C64::new(3.0, 0.0));
        assert_eq!(h.hermiticity_residual(), 0.0);
        let mut y = vec![C64::new(0.0, 0.0); 2];
        h.apply(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)], &mut y);
        assert_eq!(y[0], C64::new(3.0, 1.0));
        assert_eq!(y[1], -i);
        assert!((h.norm_bound() - 4.0).abs() < 1e-15);
    }
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::C64;

/// Eigenpairs of a Hermitian matrix, energies in descending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<C64>,
}

/// Full Hermitian eigendecomposition; `None` if the QR sweep stalls.
pub fn eigh_desc(h: DMatrix<C64>) -> Option<Eigen> {
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Some(Eigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigvalsh_desc(h: DMatrix<C64>) -> DVector<f64> {
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(v)
}

/// Largest `||H v - e v||` over all pairs.
pub fn max_residual(h: &DMatrix<C64>, e: &Eigen) -> f64 {
    (0..e.values.len())
        .map(|i| {
            let v = e.vectors.column(i);
            (h * v - v * C64::new(e.values[i], 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_y() {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        let h = DMatrix::from_row_slice(2, 2, &[z, -i, i, z]);
        let e = eigh_desc(h.clone()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        assert!(max_residual(&h, &e) < 1e-14);
        let v = eigvalsh_desc(h);
        assert!((v[0] - 1.0).abs() < 1e-14);
    }
}

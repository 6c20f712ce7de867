use nalgebra::DMatrix;
use num_complex::Complex64;

/// All eigenvalues of a square complex matrix, read off the diagonal of its Schur form.
pub(crate) fn schur_eigenvalues(m: DMatrix<Complex64>) -> Vec<Complex64> {
    let (_, t) = m.schur().unpack();
    t.diagonal().iter().copied().collect()
}

//! Internal dense complex linear-algebra helpers shared by the Fock engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) struct HermEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

pub(crate) fn hermitian_eigen(m: DMatrix<C64>) -> HermEig {
    let se = m.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let vectors = se.eigenvectors.select_columns(order.iter());
    HermEig { values, vectors }
}

/// (m + m†)/2.
pub(crate) fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Scale each row k of `m` by `f(k)` in place.
pub(crate) fn scale_rows(m: &mut DMatrix<C64>, f: impl Fn(usize) -> C64) {
    for j in 0..m.ncols() {
        let mut col = m.column_mut(j);
        for (k, v) in col.iter_mut().enumerate() {
            *v *= f(k);
        }
    }
}

/// Scale each column k of `m` by `f(k)` in place.
pub(crate) fn scale_cols(m: &mut DMatrix<C64>, f: impl Fn(usize) -> C64) {
    for j in 0..m.ncols() {
        let s = f(j);
        for v in m.column_mut(j).iter_mut() {
            *v *= s;
        }
    }
}

/// Dense complex matrix product tuned for the sizes used here.
///
/// nalgebra's generic path for `Complex<f64>` is an order of magnitude slower
/// than this packed kernel at the dimensions the Fock engine works with.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k) = (a.nrows(), a.ncols());
    let n = b.ncols();
    assert_eq!(k, b.nrows(), "matmul: inner dimensions differ");
    let mut out = DMatrix::<C64>::zeros(m, n);
    // Column-major accumulation: out[:, j] += b[l, j] * a[:, l].
    let a_slice = a.as_slice();
    let b_slice = b.as_slice();
    let out_slice = out.as_mut_slice();
    for j in 0..n {
        let b_col = &b_slice[j * k..(j + 1) * k];
        let out_col = &mut out_slice[j * m..(j + 1) * m];
        for (l, &w) in b_col.iter().enumerate() {
            if w == C64::ZERO {
                continue;
            }
            let a_col = &a_slice[l * m..(l + 1) * m];
            for (o, &av) in out_col.iter_mut().zip(a_col) {
                *o += av * w;
            }
        }
    }
    out
}

/// a · b†.
pub(crate) fn matmul_adjoint(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    matmul(a, &b.adjoint())
}

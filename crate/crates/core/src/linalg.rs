//! Dense kernels backed by faer, always run sequentially so results do not
//! depend on thread scheduling.

use faer::linalg::matmul::matmul as faer_matmul;
use faer::{Accum, MatRef, Par, Side};
use ndarray::{Array1, Array2, ArrayView2};

use crate::{DreError, Result};

fn with_ref<R>(a: ArrayView2<'_, f64>, f: impl FnOnce(MatRef<'_, f64>) -> R) -> R {
    let (rows, cols) = a.dim();
    let a = a.as_standard_layout();
    let slice = a.as_slice().expect("standard layout is contiguous");
    f(MatRef::from_row_major_slice(slice, rows, cols))
}

fn product(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((lhs.nrows(), rhs.ncols()));
    let (rows, cols) = out.dim();
    let dst = faer::MatMut::from_row_major_slice_mut(
        out.as_slice_mut().expect("fresh array is contiguous"),
        rows,
        cols,
    );
    faer_matmul(dst, Accum::Replace, lhs, rhs, 1.0, Par::Seq);
    out
}

/// `a · b`
pub fn matmul(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul inner dimensions");
    with_ref(a, |a| with_ref(b, |b| product(a, b)))
}

/// `aᵀ · b`
pub fn matmul_tn(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    assert_eq!(a.nrows(), b.nrows(), "matmul_tn inner dimensions");
    with_ref(a, |a| with_ref(b, |b| product(a.transpose(), b)))
}

/// `a · bᵀ`
pub fn matmul_nt(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.ncols(), "matmul_nt inner dimensions");
    with_ref(a, |a| with_ref(b, |b| product(a, b.transpose())))
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors in
/// the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

pub fn sym_eigen(a: ArrayView2<'_, f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(DreError::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    with_ref(a, |m| {
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| DreError::Decomposition)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = Array1::from_shape_fn(n, |i| s[i]);
        let vectors = Array2::from_shape_fn((n, n), |(i, j)| u[(i, j)]);
        Ok(SymEigen { values, vectors })
    })
}

/// Solves `a x = b` for a square `a` by partial-pivot LU.
pub fn solve(a: ArrayView2<'_, f64>, b: &Array1<f64>) -> Array1<f64> {
    use faer::linalg::solvers::Solve;
    let n = a.nrows();
    with_ref(a, |m| {
        let lu = m.partial_piv_lu();
        let rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        Array1::from_shape_fn(n, |i| x[(i, 0)])
    })
}

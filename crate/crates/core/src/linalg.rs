//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Hermitian part of a square complex matrix: (X + Xᴴ) / 2.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Symmetric part of a square real matrix: (X + Xᵀ) / 2.
pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()).scale(0.5)
}

/// Largest absolute deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Re Tr(A · B) for complex square matrices of equal size.
///
/// For Hermitian A and B the trace is real; the imaginary part is discarded.
pub fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            let p = a[(i, k)] * b[(k, i)];
            acc += p.re;
        }
    }
    acc
}

/// ⟨A, B⟩ = Tr(AᵀB) = Σ aᵢⱼ bᵢⱼ for real matrices.
pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvector `k` in column `k`.
/// Each eigenvector is phase-normalized so its largest-magnitude entry is
/// real positive, which makes the decomposition deterministic up to
/// degenerate eigenspaces.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigen expects a square matrix");
    let se = hermitian_part(m).symmetric_eigen();

    // Sort ascending by eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        values[k] = se.eigenvalues[src];
        let mut col = se.eigenvectors.column(src).clone_owned();
        normalize_phase(&mut col);
        vectors.set_column(k, &col);
    }
    (values, vectors)
}

/// Rotate a complex vector by a global phase so its largest-magnitude entry
/// is real positive. Zero vectors are left untouched.
pub fn normalize_phase(v: &mut DVector<Complex64>) {
    let mut best = 0usize;
    let mut best_norm = 0.0;
    for (i, z) in v.iter().enumerate() {
        let nz = z.norm();
        if nz > best_norm {
            best_norm = nz;
            best = i;
        }
    }
    if best_norm > 0.0 {
        let phase = v[best] / Complex64::new(best_norm, 0.0);
        let rot = phase.conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn hermitian_lambda_max(m: &DMatrix<Complex64>) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals[vals.len() - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigen_of_pauli_y_like_matrix() {
        // [[0, -j], [j, 0]] has eigenvalues -1 and +1.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert_relative_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 1.0, epsilon = 1e-12);
        // Reconstruct and compare.
        let mut rec = DMatrix::zeros(2, 2);
        for k in 0..2 {
            let v = vecs.column(k).clone_owned();
            rec += (&v * v.adjoint()).scale(vals[k]);
        }
        assert!((rec - m).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn eigenvectors_are_phase_normalized() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(1.0, 0.0)],
        );
        let (_, vecs) = hermitian_eigen(&m);
        for k in 0..2 {
            let col = vecs.column(k);
            let (idx, _) = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
                .unwrap();
            assert!(col[idx].im.abs() < 1e-12, "largest entry should be real");
            assert!(col[idx].re > 0.0);
        }
    }

    #[test]
    fn trace_product_matches_naive() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(1.0, 0.0)]);
        let full = (&a * &b).trace();
        assert_relative_eq!(trace_product(&a, &b), full.re, epsilon = 1e-12);
    }
}

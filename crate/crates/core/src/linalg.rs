//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{Complex, DMatrix, DVector};

/// Relative asymmetry `‖M − Mᵀ‖∞ / max(1, ‖M‖∞)`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() / scale
}

/// Replace `M` by `(M + Mᵀ)/2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let mt = m.transpose();
    *m += mt;
    *m *= 0.5;
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    symmetrize(&mut out);
    out
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = symmetrized(m).symmetric_eigen();
    eig.eigenvalues.min()
}

/// 2-norm condition number estimate via singular values; `f64::INFINITY`
/// when the smallest singular value underflows.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 || !smin.is_finite() {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Spectral radius (largest eigenvalue modulus) of a square real matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// Symmetric positive-semidefinite square root; eigenvalues below zero are
/// clipped. Returns the clipped magnitude alongside the root.
pub fn sqrt_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = symmetrized(m).symmetric_eigen();
    let clipped = eig.eigenvalues.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    let sqrt_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
    );
    let v = eig.eigenvectors;
    let root = &v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose();
    (symmetrized(&root), clipped)
}

/// Factor `L` with `L Lᵀ = M` for a symmetric PSD `M`, clipping negative
/// eigenvalues at zero. Works where Cholesky would reject semidefinite input.
pub fn psd_factor(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = symmetrized(m).symmetric_eigen();
    let clipped = eig.eigenvalues.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    let sqrt_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
    );
    let mut factor = eig.eigenvectors;
    for (j, s) in sqrt_vals.iter().enumerate() {
        factor.column_mut(j).scale_mut(*s);
    }
    (factor, clipped)
}

/// PBH rank test: `(A, B)` is stabilizable iff `[λI − A, B]` has full row
/// rank at every eigenvalue `λ` of `A` with `|λ| ≥ 1`.
pub fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    let d = a.nrows();
    assert_eq!(b.nrows(), d, "B must have as many rows as A");
    let eigs = a.clone().complex_eigenvalues();
    for lambda in eigs.iter().filter(|l| l.norm() >= 1.0 - tol) {
        let mut m = DMatrix::<Complex<f64>>::zeros(d, d + b.ncols());
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = Complex::new(-a[(r, c)], 0.0);
            }
            m[(r, r)] += lambda;
            for c in 0..b.ncols() {
                m[(r, d + c)] = Complex::new(b[(r, c)], 0.0);
            }
        }
        let sv = m.singular_values();
        let smax = sv.max().max(1.0);
        if sv.min() <= tol * smax {
            return false;
        }
    }
    true
}

/// PBH detectability test: `(A, C)` detectable iff `(Aᵀ, Cᵀ)` stabilizable.
pub fn is_detectable(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: f64) -> bool {
    is_stabilizable(&a.transpose(), &c.transpose(), tol)
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Solve `F X = K` by LU with a condition-number gate. `name` and `t` feed
/// the error message when `F` is effectively singular.
///
/// The degenerate pair `F = 0, K = 0` (a costless channel, where any gain
/// is optimal) resolves to the zero gain instead of an error.
pub fn gated_solve(
    f: &DMatrix<f64>,
    k: &DMatrix<f64>,
    name: &str,
    t: usize,
    cond_limit: f64,
) -> crate::Result<DMatrix<f64>> {
    if f.amax() == 0.0 && k.amax() == 0.0 {
        return Ok(DMatrix::zeros(f.ncols(), k.ncols()));
    }
    let cond = condition_number(f);
    if !cond.is_finite() || cond > cond_limit {
        return Err(crate::Error::SingularFactor {
            matrix: name.to_string(),
            t,
            cond,
        });
    }
    f.clone()
        .lu()
        .solve(k)
        .ok_or_else(|| crate::Error::SingularFactor {
            matrix: name.to_string(),
            t,
            cond,
        })
}

/// Block-diagonal 2×2 assembly `diag(m1, m2)`.
pub fn block_diag2(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = m1.shape();
    let (r2, c2) = m2.shape();
    let mut out = DMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(m1);
    out.view_mut((r1, c1), (r2, c2)).copy_from(m2);
    out
}

/// 2×2 block assembly from equally sized blocks.
pub fn block2x2(
    m11: &DMatrix<f64>,
    m12: &DMatrix<f64>,
    m21: &DMatrix<f64>,
    m22: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (r, c) = m11.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    out.view_mut((0, 0), (r, c)).copy_from(m11);
    out.view_mut((0, c), (r, c)).copy_from(m12);
    out.view_mut((r, 0), (r, c)).copy_from(m21);
    out.view_mut((r, c), (r, c)).copy_from(m22);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spectral_radius_of_rotation_like_matrix() {
        // Eigenvalues 0.5 ± 0.5i, modulus √0.5.
        let m = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, 0.5, 0.5]);
        assert_abs_diff_eq!(spectral_radius(&m), 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn pbh_detects_uncontrollable_unstable_mode() {
        // Mode 2.0 is unreachable from B.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(!is_stabilizable(&a, &b, 1e-9));
        let b_ok = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(is_stabilizable(&a, &b_ok, 1e-9));
        // Stable matrix is vacuously stabilizable.
        let a_stable = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.5]);
        assert!(is_stabilizable(&a_stable, &DMatrix::zeros(2, 1), 1e-9));
    }

    #[test]
    fn psd_factor_reproduces_matrix_and_reports_clipping() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (l, clipped) = psd_factor(&m);
        assert_abs_diff_eq!(&l * l.transpose(), m, epsilon = 1e-12);
        assert_eq!(clipped, 0.0);

        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        let (l, clipped) = psd_factor(&indefinite);
        assert_abs_diff_eq!(clipped, 1e-3, epsilon = 1e-15);
        let rebuilt = &l * l.transpose();
        assert_abs_diff_eq!(rebuilt[(1, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn trace_product_matches_full_product() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -1.0, 2.0, 0.0, 1.0]);
        assert_abs_diff_eq!(trace_product(&a, &b), (&a * &b).trace(), epsilon = 1e-14);
    }
}

//! Dense complex linear algebra helpers shared by the pipeline stages.
//!
//! Everything here works on Hermitian positive (semi-)definite matrices of
//! modest size (tens of rows), so plain dense factorizations are used.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest allowed Hermitian asymmetry, relative to the matrix norm, before a
/// log-determinant argument is rejected.
const HERMITIAN_TOL: f64 = 1e-9;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(m + m†) / 2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

fn check_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::numerical(format!("{what}: matrix is not square")));
    }
    let scale = m.norm().max(1.0);
    let asym = (m - m.adjoint()).norm();
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::numerical(format!(
            "{what}: matrix is not Hermitian (asymmetry {asym:e})"
        )));
    }
    Ok(())
}

/// Lower Cholesky factor of a Hermitian matrix, or `None` when a pivot is not
/// strictly positive.
pub fn cholesky_lower(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for p in 0..j {
            d -= l[(j, p)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = c(d);
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for p in 0..j {
                v -= l[(i, p)] * l[(j, p)].conj();
            }
            l[(i, j)] = v / d;
        }
    }
    Some(l)
}

fn factor(m: &CMatrix, what: &str) -> Result<CMatrix> {
    check_hermitian(m, what)?;
    cholesky_lower(&hermitize(m))
        .ok_or_else(|| Error::numerical(format!("{what}: matrix is not positive definite")))
}

/// log2 det of a Hermitian positive-definite matrix via Cholesky.
pub fn log2_det_hpd(m: &CMatrix) -> Result<f64> {
    let l = factor(m, "log-det")?;
    let ln_det: f64 = (0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
    Ok(ln_det / std::f64::consts::LN_2)
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn inverse_hpd(m: &CMatrix) -> Result<CMatrix> {
    let l = factor(m, "inverse")?;
    let l_inv = l
        .solve_lower_triangular(&identity(m.nrows()))
        .ok_or_else(|| Error::numerical("inverse: singular factor"))?;
    Ok(hermitize(&(l_inv.adjoint() * l_inv)))
}

/// Hermitian eigendecomposition with eigenvalues sorted descending and the
/// eigenvector columns permuted to match.
pub fn hermitian_eigen_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Orthonormal basis for the span of the columns of `f`, built column by
/// column with a re-orthogonalized Gram-Schmidt pass. A column whose residual
/// energy falls below `rel_tol` times its own energy is treated as dependent
/// and skipped.
pub fn orthonormal_basis(f: &CMatrix, rel_tol: f64) -> CMatrix {
    let mut cols: Vec<CVector> = Vec::new();
    for j in 0..f.ncols() {
        let h = f.column(j).into_owned();
        let energy = h.norm_squared();
        if energy == 0.0 {
            continue;
        }
        let mut r = h;
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&r);
                r -= q * proj;
            }
        }
        let res = r.norm_squared();
        if res <= rel_tol * energy {
            continue;
        }
        cols.push(r.unscale(res.sqrt()));
    }
    if cols.is_empty() {
        CMatrix::zeros(f.nrows(), 0)
    } else {
        CMatrix::from_columns(&cols)
    }
}

/// `b += weight · x† x`
pub fn add_gram(b: &mut CMatrix, x: &CMatrix, weight: f64) {
    let g = x.adjoint() * x;
    *b += g.scale(weight);
}

/// Relative Frobenius distance `‖a − b‖ / ‖b‖`.
pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// Spectral-norm ratio `σ_min / σ_max`; zero for an all-zero matrix.
pub fn singular_value_ratio(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, m: usize, seed: u64) -> CMatrix {
        // small LCG so the test has no RNG dependency
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(n, m, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn logdet_matches_determinant() {
        let x = sample(5, 4, 3);
        let mut b = identity(4);
        add_gram(&mut b, &x, 2.0);
        let direct = b.determinant().re.log2();
        assert!((log2_det_hpd(&b).unwrap() - direct).abs() < 1e-10);
        let inv = inverse_hpd(&b).unwrap();
        assert!((&inv * &b - identity(4)).norm() < 1e-10);
    }

    #[test]
    fn logdet_rejects_indefinite_and_asymmetric() {
        let mut m = identity(3);
        m[(1, 1)] = c(-1.0);
        assert!(matches!(log2_det_hpd(&m), Err(Error::Numerical(_))));
        let mut a = identity(3);
        a[(0, 1)] = c(0.5);
        assert!(matches!(log2_det_hpd(&a), Err(Error::Numerical(_))));
    }

    #[test]
    fn eigen_sorted_descending_and_reconstructs() {
        let x = sample(6, 4, 9);
        let g = x.adjoint() * &x;
        let (vals, vecs) = hermitian_eigen_desc(&g);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(4, vals.iter().map(|&v| c(v))));
        let rec = &vecs * d * vecs.adjoint();
        assert!(rel_frobenius(&rec, &g) < 1e-12);
    }

    #[test]
    fn basis_skips_dependent_columns() {
        let x = sample(4, 2, 1);
        let dup = CMatrix::from_columns(&[
            x.column(0).into_owned(),
            x.column(1).into_owned(),
            x.column(0) * c(2.0) + x.column(1),
        ]);
        let q = orthonormal_basis(&dup, 1e-12);
        assert_eq!(q.ncols(), 2);
        assert!((q.adjoint() * &q - identity(2)).norm() < 1e-12);
    }
}

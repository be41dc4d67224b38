//! Oracles shared by the integration tests. None of these call into the
//! library's factorizations or update paths.

#![allow(dead_code)]

use cran_dimred::linalg::{CMatrix, CVector};
use num_complex::Complex64;

/// log2 det through an LU determinant.
pub fn log2_det_lu(m: &CMatrix) -> f64 {
    m.clone().determinant().re.log2()
}

/// `log2 det(I + ρ Σ_l H_l† F_l (F_l† F_l)^{-1} F_l† H_l)`: the information of
/// `F_l† y_l` without any orthonormalisation.
pub fn mi_raw_filters(filters: &[CMatrix], h: &[CMatrix], rho: f64) -> f64 {
    let k = h[0].ncols();
    let mut b = CMatrix::identity(k, k);
    for (f, hl) in filters.iter().zip(h) {
        if f.ncols() == 0 {
            continue;
        }
        let gram = (f.adjoint() * f).try_inverse().expect("independent filters");
        let s = f.adjoint() * hl;
        b += (s.adjoint() * gram * s) * Complex64::new(rho, 0.0);
    }
    log2_det_lu(&b)
}

pub fn full_mi_lu(h: &[CMatrix], rho: f64) -> f64 {
    let k = h[0].ncols();
    let mut b = CMatrix::identity(k, k);
    for hl in h {
        b += (hl.adjoint() * hl) * Complex64::new(rho, 0.0);
    }
    log2_det_lu(&b)
}

/// Classical Gram-Schmidt residual of `v` against orthonormal `cols`.
pub fn gs_residual(cols: &[CVector], v: &CVector) -> CVector {
    let mut r = v.clone();
    for q in cols {
        let p = q.dotc(v);
        r -= q * p;
    }
    for q in cols {
        let p = q.dotc(&r);
        r -= q * p;
    }
    r
}

/// Greedy round-robin selection that re-evaluates the joint MI from scratch
/// for every candidate. Ties (within 1e-12 relative) go to the lower index.
pub fn brute_force_greedy(h: &[CMatrix], rho: f64, n: usize) -> Vec<Vec<usize>> {
    let n_rx = h.len();
    let k = h[0].ncols();
    let mut sel: Vec<Vec<usize>> = vec![Vec::new(); n_rx];
    let mut cols: Vec<Vec<CVector>> = vec![Vec::new(); n_rx];
    for _ in 0..n {
        for l in 0..n_rx {
            let mut best: Option<(usize, f64, CVector)> = None;
            for cand in 0..k {
                if sel[l].contains(&cand) {
                    continue;
                }
                let raw = h[l].column(cand).into_owned();
                let r = gs_residual(&cols[l], &raw);
                if r.norm_squared() <= 1e-12 * raw.norm_squared() {
                    continue;
                }
                let q = r.unscale(r.norm());
                let mut trial: Vec<CMatrix> = cols
                    .iter()
                    .zip(h)
                    .map(|(c, hl)| {
                        if c.is_empty() {
                            CMatrix::zeros(hl.nrows(), 0)
                        } else {
                            CMatrix::from_columns(c)
                        }
                    })
                    .collect();
                let mut ext = cols[l].clone();
                ext.push(q.clone());
                trial[l] = CMatrix::from_columns(&ext);
                let mi = mi_raw_filters(&trial, h, rho);
                if best.as_ref().is_none_or(|(_, b, _)| mi > b + 1e-12 * b.abs().max(1.0)) {
                    best = Some((cand, mi, q));
                }
            }
            if let Some((cand, _, q)) = best {
                sel[l].push(cand);
                cols[l].push(q);
            }
        }
    }
    sel
}

/// Eigenvalues (descending) of `Σ_l Q_l-weighted` equivalent channel
/// `Σ_l H_l† Q_l Q_l† H_l`, computed directly.
pub fn equivalent_eigenvalues(bases: &[CMatrix], h: &[CMatrix]) -> Vec<f64> {
    let k = h[0].ncols();
    let mut e = CMatrix::zeros(k, k);
    for (q, hl) in bases.iter().zip(h) {
        if q.ncols() > 0 {
            let s = q.adjoint() * hl;
            e += s.adjoint() * s;
        }
    }
    let e = (&e + e.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(e).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

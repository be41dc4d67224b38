//! Sum capacity, LMMSE per-user capacities and the cut-set bound for the
//! compressed equivalent channels `z̃_l = G_l x + η + δ_l`.

use serde::{Deserialize, Serialize};

use crate::dimred::full_mi;
use crate::error::{Error, Result};
use crate::linalg::{c, identity, inverse_hpd, log2_det_hpd, CMatrix};

/// Whether a capacity figure is exact (perfect CSI) or the lower bound
/// obtained from estimated channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsiKind {
    Perfect,
    LowerBound,
}

fn check_inputs(g: &[CMatrix], phi: &[Vec<f64>]) -> Result<usize> {
    let first = g
        .first()
        .ok_or_else(|| Error::invalid("at least one receiver is required"))?;
    let k = first.ncols();
    if g.len() != phi.len() {
        return Err(Error::invalid("one noise vector per receiver is required"));
    }
    for (gl, pl) in g.iter().zip(phi) {
        if gl.ncols() != k || gl.nrows() != pl.len() {
            return Err(Error::invalid("equivalent channel and noise sizes differ"));
        }
        if pl.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::numerical("quantisation noise must be finite and >= 0"));
        }
    }
    Ok(k)
}

/// `I_K + ρ Σ_l G_l† (Φ_l + I)^{-1} G_l`
pub fn information_matrix(g: &[CMatrix], phi: &[Vec<f64>], rho: f64) -> Result<CMatrix> {
    let k = check_inputs(g, phi)?;
    let mut b = identity(k);
    for (gl, pl) in g.iter().zip(phi) {
        let mut scaled = gl.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= c(1.0 / (pl[i] + 1.0));
        }
        b += (gl.adjoint() * scaled).scale(rho);
    }
    Ok(b)
}

/// `log2 det(I_K + ρ Σ_l G_l† (Φ_l + I)^{-1} G_l)`
pub fn sum_capacity(g: &[CMatrix], phi: &[Vec<f64>], rho: f64) -> Result<f64> {
    log2_det_hpd(&information_matrix(g, phi, rho)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmmseReport {
    pub sqinr: Vec<f64>,
    pub user_capacity: Vec<f64>,
}

pub fn lmmse_sqinr(g: &[CMatrix], phi: &[Vec<f64>], rho: f64) -> Result<LmmseReport> {
    let inv = inverse_hpd(&information_matrix(g, phi, rho)?)?;
    let sqinr: Vec<f64> = (0..inv.nrows())
        .map(|k| (1.0 / inv[(k, k)].re - 1.0).max(0.0))
        .collect();
    let user_capacity = sqinr.iter().map(|s| (1.0 + s).log2()).collect();
    Ok(LmmseReport {
        sqinr,
        user_capacity,
    })
}

/// Explicit LMMSE combiners
/// `W_l = ρ (I + ρ Σ_i G_i† (Φ_i + I)^{-1} G_i)^{-1} G_l† (Φ_l + I)^{-1}`.
pub fn lmmse_weights(g: &[CMatrix], phi: &[Vec<f64>], rho: f64) -> Result<Vec<CMatrix>> {
    let inv = inverse_hpd(&information_matrix(g, phi, rho)?)?;
    Ok(g.iter()
        .zip(phi)
        .map(|(gl, pl)| {
            let mut w = (&inv * gl.adjoint()).scale(rho);
            for (i, mut col) in w.column_iter_mut().enumerate() {
                col *= c(1.0 / (pl[i] + 1.0));
            }
            w
        })
        .collect())
}

/// SQINR of each user when detecting with the combiners `w`, evaluated from
/// first principles: desired power over interference plus filtered noise.
pub fn sqinr_from_weights(
    w: &[CMatrix],
    g: &[CMatrix],
    phi: &[Vec<f64>],
    rho: f64,
) -> Result<Vec<f64>> {
    let k = check_inputs(g, phi)?;
    let mut effective = CMatrix::zeros(k, k);
    for (wl, gl) in w.iter().zip(g) {
        effective += wl * gl;
    }
    Ok((0..k)
        .map(|user| {
            let signal = rho * effective[(user, user)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&j| j != user)
                .map(|j| rho * effective[(user, j)].norm_sqr())
                .sum();
            let noise: f64 = w
                .iter()
                .zip(phi)
                .map(|(wl, pl)| {
                    wl.row(user)
                        .iter()
                        .zip(pl)
                        .map(|(x, p)| x.norm_sqr() * (p + 1.0))
                        .sum::<f64>()
                })
                .sum();
            signal / (interference + noise)
        })
        .collect())
}

/// `min(R L, log2 det(I_K + ρ Σ_l H_l† H_l))`
pub fn cutset_bound(h: &[CMatrix], rho: f64, fronthaul_rate: f64) -> Result<f64> {
    if !(fronthaul_rate >= 0.0) {
        return Err(Error::invalid("fronthaul rate must be >= 0"));
    }
    let rate_limit = fronthaul_rate * h.len() as f64;
    if rate_limit == 0.0 {
        return Ok(0.0);
    }
    Ok(rate_limit.min(full_mi(h, rho)?))
}

/// All capacity figures of one scheme on one channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub sum_capacity: f64,
    pub user_capacity: Vec<f64>,
    pub sqinr: Vec<f64>,
    pub cutset: f64,
    pub full_mi: f64,
    pub reduced_mi: f64,
    pub csi_mode: CsiKind,
}

impl CapacityReport {
    pub fn lmmse_sum(&self) -> f64 {
        self.user_capacity.iter().sum()
    }

    /// The per-realisation ordering
    /// `Σ C_k ≤ C_sum ≤ reduced MI ≤ full MI` and `C_sum ≤ cut-set`,
    /// each with `slack`.
    pub fn ordering_holds(&self, slack: f64) -> bool {
        let lmmse = self.lmmse_sum();
        lmmse >= -slack
            && lmmse <= self.sum_capacity + slack
            && self.sum_capacity <= self.reduced_mi + slack
            && self.reduced_mi <= self.full_mi + slack
            && self.sum_capacity <= self.cutset + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CVector, add_gram};
    use num_complex::Complex64;

    fn sample(n: usize, m: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(n, m, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn scalar_case() {
        let g = vec![CMatrix::from_element(1, 1, Complex64::new(0.3, 1.2))];
        let (rho, phi) = (5.0, 0.7);
        let got = sum_capacity(&g, &[vec![phi]], rho).unwrap();
        let expect = (1.0 + rho * g[0][(0, 0)].norm_sqr() / (phi + 1.0)).log2();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn empty_plan_is_zero() {
        let g = vec![CMatrix::zeros(0, 4), CMatrix::zeros(0, 4)];
        assert_eq!(sum_capacity(&g, &[vec![], vec![]], 10.0).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_quantizer_equals_reduced_mi() {
        let g = vec![sample(3, 4, 1), sample(2, 4, 2)];
        let got = sum_capacity(&g, &[vec![0.0; 3], vec![0.0; 2]], 4.0).unwrap();
        let mut b = identity(4);
        for gl in &g {
            add_gram(&mut b, gl, 4.0);
        }
        assert!((got - b.determinant().re.log2()).abs() < 1e-8);
    }

    #[test]
    fn single_user_matched_filter() {
        let h = sample(4, 1, 3);
        let lm = lmmse_sqinr(std::slice::from_ref(&h), &[vec![0.0; 4]], 2.0).unwrap();
        assert!((lm.sqinr[0] - 2.0 * h.norm_squared()).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_channels_make_lmmse_optimal() {
        // G†G diagonal: columns of G orthogonal
        let g = CMatrix::from_diagonal(&CVector::from_column_slice(&[
            Complex64::new(1.0, 1.0),
            c(0.5),
            Complex64::new(0.0, 2.0),
        ]));
        let phi = vec![vec![0.2, 0.0, 1.5]];
        let lm = lmmse_sqinr(std::slice::from_ref(&g), &phi, 3.0).unwrap();
        let cs = sum_capacity(&[g], &phi, 3.0).unwrap();
        assert!((lm.user_capacity.iter().sum::<f64>() - cs).abs() < 1e-8);
    }

    #[test]
    fn explicit_weights_reproduce_sqinr() {
        for seed in 0..10 {
            let g = vec![sample(2, 3, seed), sample(3, 3, seed + 100)];
            let phi = vec![vec![0.3, 1.1], vec![0.05, 0.0, 2.0]];
            let lm = lmmse_sqinr(&g, &phi, 6.0).unwrap();
            let w = lmmse_weights(&g, &phi, 6.0).unwrap();
            let direct = sqinr_from_weights(&w, &g, &phi, 6.0).unwrap();
            for (a, b) in lm.sqinr.iter().zip(direct) {
                assert!((a - b).abs() < 1e-9 * a.max(1.0));
            }
            let cs = sum_capacity(&g, &phi, 6.0).unwrap();
            assert!(lm.user_capacity.iter().sum::<f64>() <= cs + 1e-9);
        }
    }

    #[test]
    fn cutset_regimes() {
        let h = vec![sample(4, 3, 7), sample(4, 3, 8)];
        assert_eq!(cutset_bound(&h, 10.0, 0.0).unwrap(), 0.0);
        let full = full_mi(&h, 10.0).unwrap();
        assert_eq!(cutset_bound(&h, 10.0, 1e6).unwrap(), full);
        assert_eq!(cutset_bound(&h, 10.0, 0.1).unwrap(), 0.2);
    }

    #[test]
    fn rejects_infinite_noise() {
        let g = vec![sample(1, 2, 1)];
        let r = sum_capacity(&g, &[vec![f64::INFINITY]], 1.0);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}

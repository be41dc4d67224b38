//! MMSE channel estimation from orthogonal pilots and noise whitening.
//!
//! Each user sends one pilot symbol at SNR `ρ_pl` over unit-variance noise.
//! The estimation error of an i.i.d. link is isotropic, so the equivalent
//! noise covariance `Ω_l = I + ρ Σ_k C_{l,k}` is diagonal and whitening is
//! elementwise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::scenario::{complex_gaussian, ChannelRealization, PilotSnr};

#[derive(Debug, Clone, PartialEq)]
pub struct CsiModel {
    pub h_hat: Vec<CMatrix>,
    /// L×K per-antenna error variances; `C_{l,k} = err_var[(l,k)] · I`.
    pub err_var: DMatrix<f64>,
    /// Diagonals of `Ω_l`.
    pub omega: Vec<DVector<f64>>,
    /// Diagonals of `Ω_l^{-1/2}`.
    pub omega_inv_sqrt: Vec<DVector<f64>>,
    /// Whitened estimates `Ω_l^{-1/2} Ĥ_l`.
    pub h_check: Vec<CMatrix>,
    pub h_true: Vec<CMatrix>,
    pub perfect: bool,
}

/// Per-antenna MMSE error variance `σ² / (1 + ρ_pl σ²)`.
pub fn mmse_error_variance(prior_var: f64, pilot_snr: f64) -> f64 {
    prior_var / (1.0 + pilot_snr * prior_var)
}

/// Estimates every link from one noisy pilot observation. With
/// [`PilotSnr::Perfect`] the estimate is the true channel and no randomness
/// is consumed.
pub fn estimate_channels<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    pilot_snr: PilotSnr,
    rho: f64,
    rng: &mut R,
) -> Result<CsiModel> {
    let n_rx = channels.h.len();
    let k_users = channels.num_users();
    let (h_hat, err_var, perfect) = match pilot_snr {
        PilotSnr::Perfect => (
            channels.h.clone(),
            DMatrix::zeros(n_rx, k_users),
            true,
        ),
        PilotSnr::Linear(snr) => {
            if !(snr > 0.0) || !snr.is_finite() {
                return Err(Error::invalid(format!("pilot SNR must be positive, got {snr}")));
            }
            let mut err_var = DMatrix::zeros(n_rx, k_users);
            let mut h_hat = Vec::with_capacity(n_rx);
            for (l, h) in channels.h.iter().enumerate() {
                let mut est = CMatrix::zeros(h.nrows(), k_users);
                for k in 0..k_users {
                    let var = channels.link_variance(l, k);
                    let gain = snr.sqrt() * var / (1.0 + snr * var);
                    err_var[(l, k)] = mmse_error_variance(var, snr);
                    for a in 0..h.nrows() {
                        let y = h[(a, k)] * snr.sqrt() + complex_gaussian(rng, 1.0);
                        est[(a, k)] = y * gain;
                    }
                }
                h_hat.push(est);
            }
            (h_hat, err_var, false)
        }
    };
    let (omega, omega_inv_sqrt, h_check) = whiten(&h_hat, &err_var, rho)?;
    Ok(CsiModel {
        h_hat,
        err_var,
        omega,
        omega_inv_sqrt,
        h_check,
        h_true: channels.h.clone(),
        perfect,
    })
}

type Whitening = (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<CMatrix>);

/// Builds `Ω_l`, its inverse square root and the whitened channels
/// `Ω_l^{-1/2} Ĥ_l`.
pub fn whiten(h_hat: &[CMatrix], err_var: &DMatrix<f64>, rho: f64) -> Result<Whitening> {
    let mut omegas = Vec::with_capacity(h_hat.len());
    let mut inv_sqrts = Vec::with_capacity(h_hat.len());
    let mut whitened = Vec::with_capacity(h_hat.len());
    for (l, h) in h_hat.iter().enumerate() {
        let total_err: f64 = err_var.row(l).iter().sum();
        let w = 1.0 + rho * total_err;
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::numerical(format!(
                "receiver {l}: equivalent noise covariance is not positive definite"
            )));
        }
        let omega = DVector::from_element(h.nrows(), w);
        let inv_sqrt = omega.map(|x| 1.0 / x.sqrt());
        let mut hc = h.clone();
        for (a, mut row) in hc.row_iter_mut().enumerate() {
            row *= c(inv_sqrt[a]);
        }
        omegas.push(omega);
        inv_sqrts.push(inv_sqrt);
        whitened.push(hc);
    }
    Ok((omegas, inv_sqrts, whitened))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{draw_realization, trial_rng, SystemConfig};
    use num_complex::Complex64;

    #[test]
    fn perfect_csi_is_identity() {
        let cfg = SystemConfig::default();
        let ch = draw_realization(&cfg, &mut trial_rng(1, 0)).unwrap();
        let csi = estimate_channels(&ch, PilotSnr::Perfect, cfg.rho, &mut trial_rng(1, 1)).unwrap();
        assert_eq!(csi.h_hat, ch.h);
        assert_eq!(csi.h_check, ch.h);
        assert!(csi.omega.iter().all(|o| o.iter().all(|&x| x == 1.0)));
        assert!(csi.err_var.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn error_variance_hand_case_and_monotonicity() {
        assert_eq!(mmse_error_variance(1.0, 1.0), 0.5);
        let mut prev = f64::INFINITY;
        for snr in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let e = mmse_error_variance(2.0, snr);
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn scalar_whitening() {
        let h_hat = vec![CMatrix::from_element(1, 1, Complex64::new(0.6, -0.8))];
        let err = DMatrix::from_element(1, 1, 0.25);
        let rho = 4.0;
        let (omega, inv, hc) = whiten(&h_hat, &err, rho).unwrap();
        assert_eq!(omega[0][0], 2.0);
        let expect = Complex64::new(0.6, -0.8) / 2f64.sqrt();
        assert!((hc[0][(0, 0)] - expect).norm() < 1e-15);
        // Ω^{-1/2} Ω Ω^{-1/2} = I
        assert!((inv[0][0] * omega[0][0] * inv[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_omega_is_reported() {
        let h_hat = vec![CMatrix::zeros(2, 1)];
        let err = DMatrix::from_element(1, 1, -1.0);
        assert!(matches!(whiten(&h_hat, &err, 2.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn rejects_bad_pilot_snr() {
        let cfg = SystemConfig::default();
        let ch = draw_realization(&cfg, &mut trial_rng(1, 0)).unwrap();
        let r = estimate_channels(&ch, PilotSnr::Linear(-1.0), cfg.rho, &mut trial_rng(1, 1));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}

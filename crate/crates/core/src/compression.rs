//! Local transform coding of the reduced-dimension signals.
//!
//! Each receiver decorrelates its `N` components, splits its fronthaul rate
//! across them by waterfilling on the log-eigenvalues, and is modelled as
//! adding independent Gaussian quantisation noise whose variance follows the
//! Gaussian rate-distortion function of each component.

use crate::csi::CsiModel;
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen_desc, CMatrix};
use nalgebra::DVector;

/// Extra bits per scalar needed by a fixed-rate Lloyd-Max quantiser to match
/// the Gaussian quantisation noise.
pub const LLOYD_MAX_SURCHARGE_BITS: f64 = 1.4;

/// Eigenvalues below this fraction of the largest are treated as zero.
const EIGEN_FLOOR: f64 = 1e-12;

/// Hermitian eigendecomposition of `Q† H H† Q`, descending.
pub fn decorrelate(q: &CMatrix, h: &CMatrix) -> (CMatrix, Vec<f64>) {
    let s = q.adjoint() * h;
    let cov = &s * s.adjoint();
    let (mut lambda, v) = hermitian_eigen_desc(&cov);
    let top = lambda.first().copied().unwrap_or(0.0).max(0.0);
    for x in lambda.iter_mut() {
        if *x <= EIGEN_FLOOR * top {
            *x = 0.0;
        }
    }
    (v, lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    /// Rate of each component, zero for dropped components.
    pub rates: Vec<f64>,
    /// Number of components with positive rate.
    pub active: usize,
}

/// Active-set waterfilling of `total_rate` bits over components with
/// eigenvalues `lambda`:
/// `r_i = R/N_l + log2 λ_i − (1/N_l) Σ_j log2 λ_j` over the active set.
///
/// `surcharge` bits are reserved per active component before allocation;
/// use zero for ideal Gaussian quantisers.
pub fn waterfill(lambda: &[f64], total_rate: f64, surcharge: f64) -> RateAllocation {
    let mut rates = vec![0.0; lambda.len()];
    if !(total_rate > 0.0) {
        return RateAllocation { rates, active: 0 };
    }
    let mut active: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
    loop {
        if active.is_empty() {
            return RateAllocation { rates, active: 0 };
        }
        let n = active.len() as f64;
        let budget = total_rate - surcharge * n;
        if budget <= 0.0 {
            let weakest = active
                .iter()
                .enumerate()
                .min_by(|a, b| lambda[*a.1].total_cmp(&lambda[*b.1]))
                .map(|(pos, _)| pos)
                .unwrap();
            active.remove(weakest);
            continue;
        }
        // log-ratios against the strongest active component keep equal
        // eigenvalues exactly equal
        let top = active.iter().map(|&i| lambda[i]).fold(0.0, f64::max);
        let logs: Vec<f64> = active.iter().map(|&i| (lambda[i] / top).log2()).collect();
        let mean_log = logs.iter().sum::<f64>() / n;
        let trial: Vec<f64> = logs.iter().map(|lg| budget / n + lg - mean_log).collect();
        if trial.iter().all(|&r| r > 0.0) {
            for (&i, r) in active.iter().zip(trial) {
                rates[i] = r;
            }
            return RateAllocation {
                rates,
                active: active.len(),
            };
        }
        active = active
            .into_iter()
            .zip(trial)
            .filter(|&(_, r)| r > 0.0)
            .map(|(i, _)| i)
            .collect();
    }
}

/// Gaussian quantisation noise `variance / (2^r − 1)`; infinite for a
/// dropped (zero-rate) component.
pub fn quant_noise(variances: &[f64], rates: &[f64]) -> Result<Vec<f64>> {
    if variances.len() != rates.len() {
        return Err(Error::invalid("one rate per component is required"));
    }
    variances
        .iter()
        .zip(rates)
        .map(|(&var, &r)| {
            if r < 0.0 || r.is_nan() {
                Err(Error::invalid(format!("negative rate {r}")))
            } else if r == 0.0 {
                Ok(f64::INFINITY)
            } else {
                Ok(var / (r * std::f64::consts::LN_2).exp_m1())
            }
        })
        .collect()
}

/// Variances `ρ λ_i + 1` of the decorrelated components under perfect CSI.
pub fn perfect_variances(lambda: &[f64], rho: f64) -> Vec<f64> {
    lambda.iter().map(|&l| rho * l + 1.0).collect()
}

/// Variances of the decorrelated components when the transform was built from
/// whitened estimates but the signal passes through the true channel:
/// `diag(V† Q† Ω^{-1/2} (ρ H H† + I) Ω^{-1/2} Q V)`.
pub fn imperfect_variances(
    v: &CMatrix,
    q: &CMatrix,
    omega_inv_sqrt: &DVector<f64>,
    h_true: &CMatrix,
    rho: f64,
) -> Vec<f64> {
    let mut t = q * v;
    for (a, mut row) in t.row_iter_mut().enumerate() {
        row *= c(omega_inv_sqrt[a]);
    }
    let ht = h_true.adjoint() * &t;
    (0..t.ncols())
        .map(|i| rho * ht.column(i).norm_squared() + t.column(i).norm_squared())
        .collect()
}

/// High-rate approximation `ρ (Π λ_j)^{1/N} 2^{−R/N}` of the per-component
/// quantisation noise, valid when every component is active.
pub fn approx_quant_noise(lambda: &[f64], total_rate: f64, rho: f64) -> f64 {
    let n = lambda.len() as f64;
    let geo_log = lambda.iter().map(|l| l.log2()).sum::<f64>() / n;
    rho * (geo_log - total_rate / n).exp2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverPlan {
    /// Decorrelating transform, N×N.
    pub v: CMatrix,
    pub lambda: Vec<f64>,
    pub rates: Vec<f64>,
    /// Component variances seen by the quantisers.
    pub variances: Vec<f64>,
    /// Quantisation noise per component, infinite when dropped.
    pub phi: Vec<f64>,
    /// Equivalent channel rows of the active components, N_l×K.
    pub g: CMatrix,
    /// Quantisation noise of the active components.
    pub phi_active: Vec<f64>,
    pub active: usize,
}

impl ReceiverPlan {
    /// `Σ_i log2(1 + var_i / Φ_ii)` over active components, which equals the
    /// allocated rate under the Gaussian model.
    pub fn compression_rate(&self) -> f64 {
        self.rates
            .iter()
            .zip(&self.variances)
            .zip(&self.phi)
            .filter(|((r, _), _)| **r > 0.0)
            .map(|((_, var), phi)| (1.0 + var / phi).log2())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionPlan {
    pub receivers: Vec<ReceiverPlan>,
}

impl CompressionPlan {
    pub fn g(&self) -> Vec<CMatrix> {
        self.receivers.iter().map(|r| r.g.clone()).collect()
    }

    pub fn phi_active(&self) -> Vec<Vec<f64>> {
        self.receivers.iter().map(|r| r.phi_active.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionOptions {
    pub fronthaul_rate: f64,
    pub rho: f64,
    pub lloyd_max: bool,
}

impl CompressionOptions {
    fn surcharge(&self) -> f64 {
        if self.lloyd_max {
            LLOYD_MAX_SURCHARGE_BITS
        } else {
            0.0
        }
    }
}

/// Compresses one receiver. `h_est` is the channel the transform and rates
/// are designed for. `truth` carries the true channel and whitening when the
/// quantiser variances must be evaluated against it (imperfect CSI).
pub fn plan_receiver(
    q: &CMatrix,
    h_est: &CMatrix,
    truth: Option<(&CMatrix, &DVector<f64>)>,
    opts: &CompressionOptions,
) -> Result<ReceiverPlan> {
    if q.nrows() != h_est.nrows() {
        return Err(Error::invalid("basis and channel row counts differ"));
    }
    let (v, lambda) = decorrelate(q, h_est);
    let alloc = waterfill(&lambda, opts.fronthaul_rate, opts.surcharge());
    let variances = match truth {
        None => perfect_variances(&lambda, opts.rho),
        Some((h_true, inv_sqrt)) => imperfect_variances(&v, q, inv_sqrt, h_true, opts.rho),
    };
    let phi = quant_noise(&variances, &alloc.rates)?;
    let full_g = v.adjoint() * q.adjoint() * h_est;
    let keep: Vec<usize> = (0..alloc.rates.len()).filter(|&i| alloc.rates[i] > 0.0).collect();
    let mut g = CMatrix::zeros(keep.len(), h_est.ncols());
    for (row, &i) in keep.iter().enumerate() {
        g.set_row(row, &full_g.row(i));
    }
    let phi_active = keep.iter().map(|&i| phi[i]).collect();
    Ok(ReceiverPlan {
        v,
        lambda,
        rates: alloc.rates,
        variances,
        phi,
        g,
        phi_active,
        active: alloc.active,
    })
}

/// Compression plan for all receivers given their reduction bases.
pub fn plan(bases: &[CMatrix], csi: &CsiModel, opts: &CompressionOptions) -> Result<CompressionPlan> {
    if bases.len() != csi.h_check.len() {
        return Err(Error::invalid("one basis per receiver is required"));
    }
    let receivers = bases
        .iter()
        .enumerate()
        .map(|(l, q)| {
            let truth = (!csi.perfect).then(|| (&csi.h_true[l], &csi.omega_inv_sqrt[l]));
            plan_receiver(q, &csi.h_check[l], truth, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompressionPlan { receivers })
}

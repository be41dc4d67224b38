//! System geometry, large-scale fading, power control and Rayleigh channel
//! draws.
//!
//! Users and receivers are dropped uniformly in a square service area.
//! Large-scale gains follow a log-distance law referenced to 1 m with
//! independent log-normal shadowing per link, and the small-scale channel of
//! every link is i.i.d. circularly-symmetric complex Gaussian.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_value_ratio, CMatrix};

/// Pilot quality used for channel estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PilotSnr {
    Perfect,
    /// Linear pilot SNR.
    Linear(f64),
}

impl PilotSnr {
    pub fn from_db(db: f64) -> Self {
        PilotSnr::Linear(db_to_linear(db))
    }

    pub fn label(&self) -> String {
        match self {
            PilotSnr::Perfect => "perfect".to_string(),
            PilotSnr::Linear(v) => format!("pilot_{:.6}dB", linear_to_db(*v)),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// All scalar parameters of one simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// K
    pub users: usize,
    /// L
    pub receivers: usize,
    /// M
    pub antennas: usize,
    /// N, the reduced dimension per receiver.
    pub dimension: usize,
    /// Uplink SNR, linear.
    pub rho: f64,
    /// Fronthaul rate per receiver in bits per channel use.
    pub fronthaul_rate: f64,
    pub pilot_snr: PilotSnr,
    pub area_side_m: f64,
    pub user_height_m: f64,
    pub rx_height_m: f64,
    pub pathloss_exponent: f64,
    pub shadow_sigma_db: f64,
    /// Charge 1.4 extra bits per quantised scalar (fixed-rate Lloyd-Max).
    pub lloyd_max: bool,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            users: 8,
            receivers: 4,
            antennas: 8,
            dimension: 2,
            rho: db_to_linear(15.0),
            fronthaul_rate: 10.0,
            pilot_snr: PilotSnr::Perfect,
            area_side_m: 200.0,
            user_height_m: 1.0,
            rx_height_m: 6.0,
            pathloss_exponent: 2.9,
            shadow_sigma_db: 5.7,
            lloyd_max: false,
            rng_seed: 1,
        }
    }
}

impl SystemConfig {
    /// t = min(M, K)
    pub fn full_dimension(&self) -> usize {
        self.antennas.min(self.users)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.receivers == 0 || self.antennas == 0 {
            return Err(Error::invalid("K, L and M must be positive"));
        }
        if self.dimension == 0 || self.dimension > self.full_dimension() {
            return Err(Error::invalid(format!(
                "N = {} must lie in [1, min(M, K) = {}]",
                self.dimension,
                self.full_dimension()
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid("rho must be positive and finite"));
        }
        if !(self.fronthaul_rate >= 0.0 && self.fronthaul_rate.is_finite()) {
            return Err(Error::invalid("fronthaul rate must be finite and >= 0"));
        }
        if let PilotSnr::Linear(v) = self.pilot_snr {
            if !(v > 0.0) {
                return Err(Error::invalid("pilot SNR must be positive"));
            }
        }
        if !(self.area_side_m > 0.0) || self.shadow_sigma_db < 0.0 {
            return Err(Error::invalid("area side must be > 0 and shadow sigma >= 0"));
        }
        Ok(())
    }

    /// The spread condition N >= K/L under which the central processor sees
    /// at least as many components as there are users.
    pub fn has_enough_components(&self) -> bool {
        self.dimension * self.receivers >= self.users
    }
}

/// Generator for trial `trial` of the experiment seeded with `master_seed`.
/// Streams are independent of the order in which trials execute.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// User positions (x, y, z) in meters.
    pub users: Vec<[f64; 3]>,
    /// Receiver positions (x, y, z) in meters.
    pub receivers: Vec<[f64; 3]>,
    /// L×K large-scale gains, linear.
    pub beta: DMatrix<f64>,
}

pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Log-distance gain `(d / 1 m)^(-exponent) · 10^(shadow_db / 10)`.
pub fn large_scale_gain(distance_m: f64, exponent: f64, shadow_db: f64) -> f64 {
    distance_m.powf(-exponent) * 10f64.powf(shadow_db / 10.0)
}

pub fn generate_geometry<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Geometry {
    let side = config.area_side_m;
    let place = |n: usize, h: f64, rng: &mut R| -> Vec<[f64; 3]> {
        (0..n)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side, h])
            .collect()
    };
    let users = place(config.users, config.user_height_m, rng);
    let receivers = place(config.receivers, config.rx_height_m, rng);
    let mut beta = DMatrix::zeros(config.receivers, config.users);
    for l in 0..config.receivers {
        for k in 0..config.users {
            let z: f64 = StandardNormal.sample(rng);
            let d = distance(&receivers[l], &users[k]);
            beta[(l, k)] =
                large_scale_gain(d, config.pathloss_exponent, z * config.shadow_sigma_db);
        }
    }
    Geometry {
        users,
        receivers,
        beta,
    }
}

/// Power control equalising the average received power of every user:
/// `p_k Σ_l β_{l,k} / L = 1`.
pub fn power_control(beta: &DMatrix<f64>) -> Result<Vec<f64>> {
    if beta.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::invalid("large-scale gains must be strictly positive"));
    }
    let l = beta.nrows() as f64;
    Ok(beta
        .column_iter()
        .map(|col| l / col.iter().sum::<f64>())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// One M×K matrix per receiver; column k is the channel of user k.
    pub h: Vec<CMatrix>,
    /// L×K large-scale gains.
    pub beta: DMatrix<f64>,
    /// Power-control coefficients, one per user.
    pub p: Vec<f64>,
    pub users: Vec<[f64; 3]>,
    pub receivers: Vec<[f64; 3]>,
}

impl ChannelRealization {
    /// Per-antenna variance `p_k β_{l,k}` of link (l, k).
    pub fn link_variance(&self, l: usize, k: usize) -> f64 {
        self.p[k] * self.beta[(l, k)]
    }

    pub fn num_users(&self) -> usize {
        self.p.len()
    }

    /// Receivers whose channel matrix is numerically rank deficient.
    pub fn rank_deficient_receivers(&self) -> Vec<usize> {
        self.h
            .iter()
            .enumerate()
            .filter(|(_, h)| singular_value_ratio(h) <= 1e-10)
            .map(|(l, _)| l)
            .collect()
    }
}

/// Draws a CN(0, variance) scalar.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

pub fn generate_channels<R: Rng + ?Sized>(
    config: &SystemConfig,
    geometry: &Geometry,
    p: &[f64],
    rng: &mut R,
) -> ChannelRealization {
    let (m, k_users) = (config.antennas, config.users);
    let h = (0..config.receivers)
        .map(|l| {
            let mut hl = CMatrix::zeros(m, k_users);
            for k in 0..k_users {
                let var = p[k] * geometry.beta[(l, k)];
                for a in 0..m {
                    hl[(a, k)] = complex_gaussian(rng, var);
                }
            }
            hl
        })
        .collect();
    ChannelRealization {
        h,
        beta: geometry.beta.clone(),
        p: p.to_vec(),
        users: geometry.users.clone(),
        receivers: geometry.receivers.clone(),
    }
}

/// Geometry, power control and small-scale fading in one go.
pub fn draw_realization<R: Rng + ?Sized>(
    config: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    config.validate()?;
    let geometry = generate_geometry(config, rng);
    let p = power_control(&geometry.beta)?;
    let realization = generate_channels(config, &geometry, &p, rng);
    for l in realization.rank_deficient_receivers() {
        log::warn!("receiver {l}: channel matrix is numerically rank deficient");
    }
    Ok(realization)
}

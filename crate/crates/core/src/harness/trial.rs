//! One Monte-Carlo trial: draw a channel, estimate it, reduce, compress and
//! evaluate every scheme on the same draw.

use serde::Serialize;

use crate::capacity::{cutset_bound, lmmse_sqinr, sum_capacity, CapacityReport, CsiKind};
use crate::compression::{plan, CompressionOptions, CompressionPlan};
use crate::csi::{estimate_channels, CsiModel};
use crate::dimred::{full_mi, mfgs_select, mi_from_bases, DimensionReductionResult, DEGENERATE_PROJECTION};
use crate::error::Result;
use crate::linalg::{orthonormal_basis, CMatrix};
use crate::scenario::{draw_realization, trial_rng, ChannelRealization, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// MF-GS reduction to N components, then local transform coding.
    Proposed,
    /// Local transform coding of the full t-dimensional signal.
    LocalBaseline,
    /// MF-GS reduction with no quantisation.
    Unquantized,
    /// `min(R L, full MI)`.
    Cutset,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::LocalBaseline => "local_baseline",
            Scheme::Unquantized => "unquantized",
            Scheme::Cutset => "cutset",
        }
    }
}

/// Channel draw and CSI of one trial.
#[derive(Debug, Clone)]
pub struct TrialInputs {
    pub trial: u64,
    pub seed: u64,
    pub channels: ChannelRealization,
    pub csi: CsiModel,
}

impl TrialInputs {
    pub fn csi_kind(&self) -> CsiKind {
        if self.csi.perfect {
            CsiKind::Perfect
        } else {
            CsiKind::LowerBound
        }
    }
}

/// Draws trial `trial` of `config`. Pilot noise is drawn after the channel
/// from the same stream, so all CSI settings see identical channels.
pub fn draw_trial(config: &SystemConfig, trial: u64) -> Result<TrialInputs> {
    let seed = config.rng_seed;
    let inner = || -> Result<TrialInputs> {
        let mut rng = trial_rng(seed, trial);
        let channels = draw_realization(config, &mut rng)?;
        let csi = estimate_channels(&channels, config.pilot_snr, config.rho, &mut rng)?;
        Ok(TrialInputs {
            trial,
            seed,
            channels,
            csi,
        })
    };
    inner().map_err(|e| e.in_trial(trial, seed))
}

/// Orthonormal bases of the full signal space of each (whitened) channel,
/// i.e. the identity dimension reduction with `N = t`.
pub fn baseline_bases(csi: &CsiModel) -> Vec<CMatrix> {
    csi.h_check
        .iter()
        .map(|h| orthonormal_basis(h, DEGENERATE_PROJECTION))
        .collect()
}

fn compression_options(config: &SystemConfig) -> CompressionOptions {
    CompressionOptions {
        fronthaul_rate: config.fronthaul_rate,
        rho: config.rho,
        lloyd_max: config.lloyd_max,
    }
}

/// Compresses with the given bases and evaluates every capacity figure.
pub fn evaluate_bases(
    config: &SystemConfig,
    inputs: &TrialInputs,
    bases: &[CMatrix],
    full: f64,
) -> Result<(CompressionPlan, CapacityReport)> {
    let plan = plan(bases, &inputs.csi, &compression_options(config))?;
    let g = plan.g();
    let phi = plan.phi_active();
    let sum = sum_capacity(&g, &phi, config.rho)?;
    let lmmse = lmmse_sqinr(&g, &phi, config.rho)?;
    let report = CapacityReport {
        sum_capacity: sum,
        user_capacity: lmmse.user_capacity,
        sqinr: lmmse.sqinr,
        cutset: config.fronthaul_rate * config.receivers as f64,
        full_mi: full,
        reduced_mi: mi_from_bases(bases, &inputs.channels.h, config.rho)?,
        csi_mode: inputs.csi_kind(),
    };
    Ok((plan, report))
}

/// Every scheme on one draw, with the proposed scheme evaluated at each of
/// `n_candidates` from a single MF-GS run.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub full_mi: f64,
    pub cutset: f64,
    pub baseline: CapacityReport,
    /// `(N, report)` in the order of the requested candidates.
    pub proposed: Vec<(usize, CapacityReport)>,
    pub selection: DimensionReductionResult,
}

pub fn evaluate_trial(config: &SystemConfig, trial: u64, n_candidates: &[usize]) -> Result<TrialOutcome> {
    let seed = config.rng_seed;
    let inputs = draw_trial(config, trial)?;
    let inner = || -> Result<TrialOutcome> {
        let h = &inputs.channels.h;
        let full = full_mi(h, config.rho)?;
        let cutset = cutset_bound(h, config.rho, config.fronthaul_rate)?;
        let n_max = n_candidates.iter().copied().max().unwrap_or(config.dimension);
        let selection = mfgs_select(&inputs.csi.h_check, config.rho, n_max)?;

        let (_, mut baseline) = evaluate_bases(config, &inputs, &baseline_bases(&inputs.csi), full)?;
        baseline.cutset = cutset;
        let mut proposed = Vec::with_capacity(n_candidates.len());
        for &n in n_candidates {
            let view = selection.prefix(n);
            let (_, mut report) = evaluate_bases(config, &inputs, &view.bases, full)?;
            report.cutset = cutset;
            proposed.push((n, report));
        }
        Ok(TrialOutcome {
            trial,
            seed,
            full_mi: full,
            cutset,
            baseline,
            proposed,
            selection,
        })
    };
    inner().map_err(|e| e.in_trial(trial, seed))
}

/// Metrics of one scheme on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub config: SystemConfig,
    pub scheme: Scheme,
    pub csi_mode: CsiKind,
    /// Dimension per receiver used by the scheme.
    pub dimension: usize,
    pub sum_capacity: f64,
    pub user_capacity: Vec<f64>,
    pub reduced_mi: f64,
    pub full_mi: f64,
    pub cutset: f64,
}

/// Runs one scheme at `config.dimension` on trial `trial`.
pub fn run_trial(config: &SystemConfig, trial: u64, scheme: Scheme) -> Result<TrialRecord> {
    let seed = config.rng_seed;
    let outcome = evaluate_trial(config, trial, &[config.dimension])?;
    let (_, proposed) = &outcome.proposed[0];
    let t = config.full_dimension();
    let (dimension, sum, users, reduced) = match scheme {
        Scheme::Proposed => (
            config.dimension,
            proposed.sum_capacity,
            proposed.user_capacity.clone(),
            proposed.reduced_mi,
        ),
        Scheme::LocalBaseline => (
            t,
            outcome.baseline.sum_capacity,
            outcome.baseline.user_capacity.clone(),
            outcome.baseline.reduced_mi,
        ),
        Scheme::Unquantized => (config.dimension, proposed.reduced_mi, Vec::new(), proposed.reduced_mi),
        Scheme::Cutset => (t, outcome.cutset, Vec::new(), outcome.full_mi),
    };
    Ok(TrialRecord {
        trial,
        seed,
        config: config.clone(),
        scheme,
        csi_mode: proposed.csi_mode,
        dimension,
        sum_capacity: sum,
        user_capacity: users,
        reduced_mi: reduced,
        full_mi: outcome.full_mi,
        cutset: outcome.cutset,
    })
}

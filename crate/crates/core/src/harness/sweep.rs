//! Monte-Carlo sweeps, best-dimension selection and aggregation into CSV
//! rows.
//!
//! Trials run in parallel; each owns the generator stream of its index, and
//! results are reduced in trial order, so output does not depend on
//! scheduling.

use rayon::prelude::*;

use crate::capacity::CsiKind;
use crate::dimred::{full_mi, mfgs_select, mi_from_bases};
use crate::error::{Error, Result};
use crate::harness::config::{Output, SweepSpec, SweepVariable};
use crate::harness::csv::CsvRow;
use crate::harness::stats::{mean, p05};
use crate::harness::trial::{draw_trial, evaluate_trial, TrialOutcome};
use crate::scenario::{db_to_linear, SystemConfig};

/// Evaluates `trials` paired trials of `config`.
pub fn run_point(config: &SystemConfig, trials: usize, n_candidates: &[usize]) -> Result<Vec<TrialOutcome>> {
    if !config.has_enough_components() {
        log::warn!(
            "N = {} with L = {} gives fewer components than K = {} users",
            config.dimension,
            config.receivers,
            config.users
        );
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|t| evaluate_trial(config, t, n_candidates))
        .collect()
}

/// Per-trial sum capacities of candidate `idx`.
pub fn candidate_sum_capacities(outcomes: &[TrialOutcome], idx: usize) -> Vec<f64> {
    outcomes.iter().map(|o| o.proposed[idx].1.sum_capacity).collect()
}

/// Index of the candidate with the highest mean sum capacity; ties go to the
/// first listed.
pub fn best_candidate(outcomes: &[TrialOutcome]) -> Option<usize> {
    let n = outcomes.first()?.proposed.len();
    let mut best: Option<(usize, f64)> = None;
    for idx in 0..n {
        let m = mean(&candidate_sum_capacities(outcomes, idx));
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((idx, m));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestDimension {
    pub dimension: usize,
    pub mean_sum_capacity: f64,
    /// Sum capacity of the chosen dimension on every trial.
    pub per_trial: Vec<f64>,
}

/// Picks the reduced dimension maximising mean sum capacity at fronthaul
/// rate `rate`. One MF-GS run at the largest candidate serves all of them.
pub fn best_dimension(
    config: &SystemConfig,
    rate: f64,
    n_candidates: &[usize],
    trials: usize,
) -> Result<BestDimension> {
    let t = config.full_dimension();
    if n_candidates.is_empty() || n_candidates.iter().any(|&n| n == 0 || n > t) {
        return Err(Error::invalid(format!("candidates must lie in [1, {t}]")));
    }
    let cfg = SystemConfig {
        fronthaul_rate: rate,
        dimension: *n_candidates.iter().max().unwrap(),
        ..config.clone()
    };
    let outcomes = run_point(&cfg, trials, n_candidates)?;
    let idx = best_candidate(&outcomes).expect("at least one candidate");
    let per_trial = candidate_sum_capacities(&outcomes, idx);
    Ok(BestDimension {
        dimension: n_candidates[idx],
        mean_sum_capacity: mean(&per_trial),
        per_trial,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiProportion {
    pub snr_db: f64,
    pub dimension: usize,
    /// Mean of reduced MI over full MI.
    pub mean: f64,
}

/// Mean fraction of the full-dimension MI captured by MF-GS reduction to
/// each of `dims` components, at each SNR in `snr_db`.
pub fn mi_proportion_sweep(
    config: &SystemConfig,
    snr_db: &[f64],
    dims: &[usize],
    trials: usize,
) -> Result<Vec<MiProportion>> {
    let n_max = dims.iter().copied().max().unwrap_or(1);
    let mut rows = Vec::with_capacity(snr_db.len() * dims.len());
    for &db in snr_db {
        let cfg = SystemConfig {
            rho: db_to_linear(db),
            dimension: n_max,
            ..config.clone()
        };
        cfg.validate()?;
        let per_trial: Vec<Vec<f64>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| -> Result<Vec<f64>> {
                let inputs = draw_trial(&cfg, t)?;
                let h = &inputs.channels.h;
                let full = full_mi(h, cfg.rho)?;
                let sel = mfgs_select(&inputs.csi.h_check, cfg.rho, n_max)?;
                dims.iter()
                    .map(|&n| Ok(mi_from_bases(&sel.prefix(n).bases, h, cfg.rho)? / full))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (j, &n) in dims.iter().enumerate() {
            let xs: Vec<f64> = per_trial.iter().map(|v| v[j]).collect();
            rows.push(MiProportion {
                snr_db: db,
                dimension: n,
                mean: mean(&xs),
            });
        }
    }
    Ok(rows)
}

fn csi_label(kind: CsiKind) -> &'static str {
    match kind {
        CsiKind::Perfect => "perfect",
        CsiKind::LowerBound => "lower_bound",
    }
}

struct RowBuilder<'a> {
    spec: &'a SweepSpec,
    value: f64,
    csi: &'static str,
    trials: usize,
    rows: Vec<CsvRow>,
}

impl RowBuilder<'_> {
    fn push(&mut self, mode: &str, n: usize, metric: &str, samples: &[f64]) {
        self.rows.push(CsvRow {
            sweep_var: self.spec.variable.name().to_string(),
            value: self.value,
            mode: mode.to_string(),
            csi_mode: self.csi.to_string(),
            dimension: n,
            metric: metric.to_string(),
            mean: mean(samples),
            p05: p05(samples),
            trials: self.trials,
            seed: self.spec.base.rng_seed,
        });
    }
}

/// Aggregated rows for one sweep point.
pub fn summarize_point(spec: &SweepSpec, value: f64, config: &SystemConfig, outcomes: &[TrialOutcome]) -> Vec<CsvRow> {
    let Some(first) = outcomes.first() else {
        return Vec::new();
    };
    let t = config.full_dimension();
    let mut b = RowBuilder {
        spec,
        value,
        csi: csi_label(first.baseline.csi_mode),
        trials: outcomes.len(),
        rows: Vec::new(),
    };
    let dims: Vec<usize> = first.proposed.iter().map(|(n, _)| *n).collect();
    let best = best_candidate(outcomes).unwrap_or(0);
    let pooled_users = |idx: Option<usize>| -> Vec<f64> {
        outcomes
            .iter()
            .flat_map(|o| match idx {
                Some(i) => o.proposed[i].1.user_capacity.clone(),
                None => o.baseline.user_capacity.clone(),
            })
            .collect()
    };

    let mut outputs = spec.outputs.clone();
    outputs.sort();
    outputs.dedup();
    for output in outputs {
        match output {
            Output::SumCapacity => {
                for (i, &n) in dims.iter().enumerate() {
                    b.push("proposed", n, "sum_capacity", &candidate_sum_capacities(outcomes, i));
                }
                b.push("best_n", dims[best], "sum_capacity", &candidate_sum_capacities(outcomes, best));
            }
            Output::UserCapacity => {
                for (i, &n) in dims.iter().enumerate() {
                    b.push("proposed", n, "user_capacity", &pooled_users(Some(i)));
                }
                b.push("best_n", dims[best], "user_capacity", &pooled_users(Some(best)));
            }
            Output::MiProportion => {
                for (i, &n) in dims.iter().enumerate() {
                    let reduced: Vec<f64> = outcomes.iter().map(|o| o.proposed[i].1.reduced_mi).collect();
                    let prop: Vec<f64> = outcomes
                        .iter()
                        .map(|o| o.proposed[i].1.reduced_mi / o.full_mi)
                        .collect();
                    b.push("unquantized", n, "reduced_mi", &reduced);
                    b.push("unquantized", n, "mi_proportion", &prop);
                }
                let full: Vec<f64> = outcomes.iter().map(|o| o.full_mi).collect();
                b.push("unquantized", t, "full_mi", &full);
            }
            Output::Cutset => {
                let cs: Vec<f64> = outcomes.iter().map(|o| o.cutset).collect();
                b.push("cutset", t, "sum_capacity", &cs);
            }
            Output::Baseline => {
                let bs: Vec<f64> = outcomes.iter().map(|o| o.baseline.sum_capacity).collect();
                b.push("local_baseline", t, "sum_capacity", &bs);
                b.push("local_baseline", t, "user_capacity", &pooled_users(None));
            }
        }
    }
    b.rows
}

/// Runs every point of `spec` and returns the aggregated rows in sweep
/// order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CsvRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &value in &spec.values {
        let config = spec.variable.apply(&spec.base, value)?;
        let candidates = match spec.variable {
            SweepVariable::Dimension => vec![config.dimension],
            _ => spec.n_candidates.clone(),
        };
        log::info!("{} = {value}: {} trials", spec.variable.name(), spec.trials);
        let outcomes = run_point(&config, spec.trials, &candidates)?;
        rows.extend(summarize_point(spec, value, &config, &outcomes));
    }
    Ok(rows)
}

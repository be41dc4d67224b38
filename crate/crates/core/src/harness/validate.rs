//! Self-check suite behind the `validate` subcommand. Each check compares a
//! fast path against a slower independent recomputation on random draws.

use crate::compression::{quant_noise, perfect_variances, waterfill};
use crate::dimred::{
    full_mi, joint_mi, mfgs_select, mi_from_bases, stage_gain_diagnostics, DEGENERATE_PROJECTION,
    TIE_TOLERANCE,
};
use crate::error::Result;
use crate::harness::trial::{draw_trial, evaluate_trial};
use crate::linalg::{add_gram, identity, inverse_hpd, orthonormal_basis, rel_frobenius, CMatrix};
use crate::scenario::{db_to_linear, SystemConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn small_config(index: u64, seed: u64) -> SystemConfig {
    let k = 2 + (index % 5) as usize; // 2..=6
    let l = 1 + (index % 3) as usize; // 1..=3
    let m = 1 + ((index / 3) % 4) as usize; // 1..=4
    let t = k.min(m);
    SystemConfig {
        users: k,
        receivers: l,
        antennas: m,
        dimension: 1 + (index as usize % t),
        rho: db_to_linear(10.0),
        rng_seed: seed,
        ..Default::default()
    }
}

/// Replays an MF-GS run, re-deciding each stage by recomputing the joint MI
/// from scratch for every admissible candidate. Returns the number of
/// mismatching stages.
fn greedy_mismatches(h: &[CMatrix], rho: f64, n: usize) -> Result<usize> {
    let res = mfgs_select(h, rho, n)?;
    let mut bases: Vec<CMatrix> = h.iter().map(|hl| CMatrix::zeros(hl.nrows(), 0)).collect();
    let mut picked: Vec<Vec<usize>> = vec![Vec::new(); h.len()];
    let mut mismatches = 0;
    for step in &res.steps {
        let l = step.receiver;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..h[l].ncols() {
            if picked[l].contains(&k) {
                continue;
            }
            let mut cols: Vec<_> = bases[l].column_iter().map(|c| c.into_owned()).collect();
            cols.push(h[l].column(k).into_owned());
            let ext = orthonormal_basis(&CMatrix::from_columns(&cols), DEGENERATE_PROJECTION);
            if ext.ncols() != bases[l].ncols() + 1 {
                continue;
            }
            let mut trial = bases.clone();
            trial[l] = ext;
            let mi = mi_from_bases(&trial, h, rho)?;
            if best.is_none_or(|(_, b)| mi > b + TIE_TOLERANCE * b.abs().max(1.0)) {
                best = Some((k, mi));
            }
        }
        if best.map(|(k, _)| k) != Some(step.user) {
            mismatches += 1;
        }
        picked[l].push(step.user);
        let col = picked[l].len();
        bases[l] = res.bases[l].columns(0, col).into_owned();
    }
    Ok(mismatches)
}

pub fn run_validation(seed: u64, instances: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let mut mismatches = 0;
    for i in 0..instances as u64 {
        let cfg = small_config(i, seed);
        let inputs = draw_trial(&cfg, i)?;
        mismatches += greedy_mismatches(&inputs.channels.h, cfg.rho, cfg.dimension)?;
    }
    out.push(check(
        "greedy stage matches scratch MI search",
        mismatches == 0,
        format!("{mismatches} mismatching stages over {instances} instances"),
    ));

    let reference = SystemConfig {
        dimension: 4,
        rho: db_to_linear(15.0),
        rng_seed: seed,
        ..Default::default()
    };
    let mut worst_a = 0.0_f64;
    let mut worst_dp = 0.0_f64;
    let mut worst_eigen = 0.0_f64;
    for i in 0..instances as u64 {
        let inputs = draw_trial(&reference, i)?;
        let h = &inputs.channels.h;
        let res = mfgs_select(h, reference.rho, reference.dimension)?;
        let mut b = identity(reference.users);
        for (q, hl) in res.bases.iter().zip(h) {
            add_gram(&mut b, &(q.adjoint() * hl), reference.rho);
        }
        worst_a = worst_a.max(rel_frobenius(&res.a_final, &inverse_hpd(&b)?));

        let raw: Vec<CMatrix> = res
            .selected
            .iter()
            .zip(h)
            .map(|(s, hl)| CMatrix::from_columns(&s.iter().map(|&k| hl.column(k)).collect::<Vec<_>>()))
            .collect();
        let via_raw = joint_mi(&raw, h, reference.rho)?;
        let via_q = mi_from_bases(&res.bases, h, reference.rho)?;
        worst_dp = worst_dp.max((via_raw - via_q).abs());

        // replay stage gains from the eigen view
        let mut a = identity(reference.users);
        for step in &res.steps {
            let col = res.selected[step.receiver].iter().position(|&u| u == step.user).unwrap();
            let q = res.bases[step.receiver].column(col).into_owned();
            let d = stage_gain_diagnostics(&a, &h[step.receiver], &q, reference.rho);
            worst_eigen = worst_eigen.max((d.gain_lemma - d.gain_eigen).abs());
            a = crate::dimred::rank1_update(&a, &h[step.receiver], &q, reference.rho);
        }
    }
    out.push(check(
        "rank-1 updated inverse matches direct inversion",
        worst_a < 1e-8,
        format!("max relative Frobenius error {worst_a:.3e}"),
    ));
    out.push(check(
        "raw filters and orthonormal bases give equal MI",
        worst_dp < 1e-8,
        format!("max difference {worst_dp:.3e} bits"),
    ));
    out.push(check(
        "determinant-lemma and eigen stage gains agree",
        worst_eigen < 1e-8,
        format!("max difference {worst_eigen:.3e} bits"),
    ));

    let lossless = {
        let cfg = SystemConfig {
            dimension: 8,
            ..reference.clone()
        };
        let inputs = draw_trial(&cfg, 0)?;
        let res = mfgs_select(&inputs.channels.h, cfg.rho, 8)?;
        (res.mi_trajectory.last().unwrap() - full_mi(&inputs.channels.h, cfg.rho)?).abs()
    };
    out.push(check(
        "N = min(M, K) recovers the full MI",
        lossless < 1e-8,
        format!("difference {lossless:.3e} bits"),
    ));

    let a = waterfill(&[4.0, 1.0], 4.0, 0.0);
    let b = waterfill(&[8.0, 1e-3], 2.0, 0.0);
    let var = perfect_variances(&[5.0, 2.0, 0.3], 20.0);
    let alloc = waterfill(&[5.0, 2.0, 0.3], 7.0, 0.0);
    let phi = quant_noise(&var, &alloc.rates)?;
    let rate: f64 = var
        .iter()
        .zip(&phi)
        .filter(|(_, p)| p.is_finite())
        .map(|(v, p)| (1.0 + v / p).log2())
        .sum();
    out.push(check(
        "waterfilling hand cases and rate identity",
        a.rates == [3.0, 1.0] && b.rates == [2.0, 0.0] && (rate - 7.0).abs() < 1e-6,
        format!("[4,1]/4 -> {:?}, [8,1e-3]/2 -> {:?}, rate {rate}", a.rates, b.rates),
    ));

    let mut violations = 0;
    for i in 0..instances as u64 {
        let cfg = SystemConfig {
            fronthaul_rate: 2.0 + (i % 20) as f64,
            ..reference.clone()
        };
        let o = evaluate_trial(&cfg, i, &[1, 2, 4, 8])?;
        let ok = o.baseline.ordering_holds(1e-9) && o.proposed.iter().all(|(_, r)| r.ordering_holds(1e-9));
        if !ok {
            violations += 1;
        }
    }
    out.push(check(
        "capacity ordering chain",
        violations == 0,
        format!("{violations} violating trials of {instances}"),
    ));

    Ok(out)
}

//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::time::Instant;

use cran_dimred::capacity::cutset_bound;
use cran_dimred::compression::{perfect_variances, quant_noise, waterfill};
use cran_dimred::dimred::{joint_mi, mfgs_select, mi_from_bases, rank1_update, stage_gain_diagnostics};
use cran_dimred::harness::config::{Output, SweepSpec, SweepVariable};
use cran_dimred::harness::stats::{mean, paired_t_greater, spearman};
use cran_dimred::harness::sweep::{best_candidate, candidate_sum_capacities, mi_proportion_sweep, run_point};
use cran_dimred::harness::{draw_trial, evaluate_trial, render_csv, run_sweep};
use cran_dimred::linalg::{c, CMatrix, CVector};
use cran_dimred::scenario::{db_to_linear, trial_rng, PilotSnr, SystemConfig};
use num_complex::Complex64;
use rand::Rng;

use common::*;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn reference_config() -> SystemConfig {
    SystemConfig {
        users: 8,
        receivers: 4,
        antennas: 8,
        dimension: 4,
        rho: db_to_linear(15.0),
        rng_seed: 2024,
        ..Default::default()
    }
}

#[test]
fn c01_greedy_stage_matches_exhaustive_search() {
    let start = Instant::now();
    let mut rng = trial_rng(77, 0);
    let mut mismatches = 0;
    let mut stages = 0;
    for i in 0..50u64 {
        let k = rng.random_range(2..=6);
        let l = rng.random_range(1..=3);
        let m = rng.random_range(1..=4);
        let n = rng.random_range(1..=k.min(m));
        let snr_db = [0.0, 10.0, 20.0][i as usize % 3];
        let cfg = SystemConfig {
            users: k,
            receivers: l,
            antennas: m,
            dimension: n,
            rho: db_to_linear(snr_db),
            rng_seed: 500 + i,
            ..Default::default()
        };
        let h = draw_trial(&cfg, i).unwrap().channels.h;
        let got = mfgs_select(&h, cfg.rho, n).unwrap();
        let want = brute_force_greedy(&h, cfg.rho, n);
        stages += n * l;
        for (a, b) in got.selected.iter().zip(&want) {
            mismatches += a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "greedy stage = exhaustive per-stage MI search",
        mismatches == 0 && secs < 60.0,
        format!("{mismatches} mismatches over {stages} stages, {secs:.2}s"),
    );
}

#[test]
fn c02_rank1_update_fidelity() {
    let cfg = reference_config();
    let mut worst = 0.0_f64;
    for t in 0..100 {
        let h = draw_trial(&cfg, t).unwrap().channels.h;
        let res = mfgs_select(&h, cfg.rho, 4).unwrap();
        let mut b = CMatrix::identity(8, 8);
        for (q, hl) in res.bases.iter().zip(&h) {
            let s = q.adjoint() * hl;
            b += s.adjoint() * s * c(cfg.rho);
        }
        let direct = b.try_inverse().unwrap();
        worst = worst.max((&res.a_final - &direct).norm() / direct.norm());
    }
    report(2, "rank-1 inverse vs direct inversion", worst < 1e-8, format!("max rel. Frobenius {worst:.2e}"));
}

#[test]
fn c03_data_processing_identity() {
    let cfg = reference_config();
    let mut rng = trial_rng(3, 99);
    let mut worst_raw = 0.0_f64;
    let mut worst_full = 0.0_f64;
    for t in 0..100 {
        let h = draw_trial(&cfg, t).unwrap().channels.h;
        // raw random filters
        let n = 1 + (t as usize % 8);
        let filters: Vec<CMatrix> = (0..4)
            .map(|_| CMatrix::from_fn(8, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
            .collect();
        let oracle = mi_raw_filters(&filters, &h, cfg.rho);
        worst_raw = worst_raw.max((joint_mi(&filters, &h, cfg.rho).unwrap() - oracle).abs());

        // matched filters of the MF-GS selection vs its Q
        let res = mfgs_select(&h, cfg.rho, 4).unwrap();
        let mf: Vec<CMatrix> = res
            .selected
            .iter()
            .zip(&h)
            .map(|(s, hl)| CMatrix::from_columns(&s.iter().map(|&k| hl.column(k)).collect::<Vec<_>>()))
            .collect();
        let via_q = mi_from_bases(&res.bases, &h, cfg.rho).unwrap();
        worst_raw = worst_raw.max((mi_raw_filters(&mf, &h, cfg.rho) - via_q).abs());

        let lossless = mfgs_select(&h, cfg.rho, 8).unwrap();
        worst_full = worst_full.max((lossless.mi_trajectory.last().unwrap() - full_mi_lu(&h, cfg.rho)).abs());
    }
    report(
        3,
        "raw F vs orthonormal Q MI; lossless dimension",
        worst_raw < 1e-8 && worst_full < 1e-8,
        format!("max |F-Q| {worst_raw:.2e} bits, max |N=t - full| {worst_full:.2e} bits"),
    );
}

/// Builds A for a 3-user equivalent channel with eigenvalues `ups`
/// and a channel/filter pair with `H† q = sqrt(gamma) · target`.
fn constructed_case(ups: [f64; 3], basis_seed: u64, target: usize, gamma: f64, rho: f64) -> (CMatrix, CMatrix, CVector, CMatrix) {
    let mut rng = trial_rng(basis_seed, 0);
    let raw = CMatrix::from_fn(3, 3, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let u = raw.qr().q();
    let d = CMatrix::from_diagonal(&CVector::from_iterator(3, ups.iter().map(|&v| c(v))));
    let e = &u * d * u.adjoint();
    let a = (CMatrix::identity(3, 3) + &e * c(rho)).try_inverse().unwrap();
    // q = e_1, so H† q is the conjugated first row of H
    let mut h = CMatrix::from_fn(3, 3, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>()));
    let row = u.column(target).adjoint() * c(gamma.sqrt());
    h.set_row(0, &row);
    let q = CVector::from_column_slice(&[c(1.0), c(0.0), c(0.0)]);
    (a, h, q, e)
}

#[test]
fn c04_eigen_gain_identity() {
    let cfg = reference_config();
    let mut worst_gain = 0.0_f64;
    let mut worst_drop = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    for t in 0..50 {
        let h = draw_trial(&cfg, t).unwrap().channels.h;
        let res = mfgs_select(&h, cfg.rho, 4).unwrap();
        let mut a = CMatrix::identity(8, 8);
        let mut bases: Vec<CMatrix> = h.iter().map(|_| CMatrix::zeros(8, 0)).collect();
        let mut before = equivalent_eigenvalues(&bases, &h);
        for step in &res.steps {
            let l = step.receiver;
            let col = bases[l].ncols();
            let q = res.bases[l].column(col).into_owned();
            let d = stage_gain_diagnostics(&a, &h[l], &q, cfg.rho);
            worst_gain = worst_gain.max((d.gain_lemma - d.gain_eigen).abs());
            let s: f64 = d.projections.iter().sum();
            worst_gain = worst_gain.max((s - 1.0).abs());
            bases[l] = res.bases[l].columns(0, col + 1).into_owned();
            let after = equivalent_eigenvalues(&bases, &h);
            for (x, y) in after.iter().zip(&before) {
                worst_drop = worst_drop.max(y - x);
            }
            for (x, y) in d.updated_upsilon.iter().zip(&after) {
                worst_oracle = worst_oracle.max((x - y).abs() / y.abs().max(1.0));
            }
            before = after;
            a = rank1_update(&a, &h[l], &q, cfg.rho);
        }
    }

    let mut worst_shift = 0.0_f64;
    let ups = [5.0, 2.0, 0.5];
    let gamma = 0.8;
    for (seed, target) in [(1u64, 2usize), (2, 0), (3, 2), (4, 0)] {
        let (a, h, q, _) = constructed_case(ups, seed, target, gamma, 4.0);
        let d = stage_gain_diagnostics(&a, &h, &q, 4.0);
        let mut want = ups.to_vec();
        want[target] += gamma;
        want.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in d.updated_upsilon.iter().zip(&want) {
            worst_shift = worst_shift.max((x - y).abs());
        }
        worst_gain = worst_gain.max((d.gain_lemma - d.gain_eigen).abs());
        for (x, y) in d.upsilon.iter().zip(&ups) {
            worst_shift = worst_shift.max((x - y).abs());
        }
    }
    report(
        4,
        "eigen-form stage gain, aligned shifts, non-decreasing eigenvalues",
        worst_gain < 1e-8 && worst_shift < 1e-8 && worst_drop <= 1e-10 && worst_oracle < 1e-8,
        format!(
            "gain gap {worst_gain:.2e}, shift err {worst_shift:.2e}, max eigen drop {worst_drop:.2e}, updated-eigen err {worst_oracle:.2e}"
        ),
    );
}

#[test]
fn c05_waterfilling() {
    let hand_a = waterfill(&[4.0, 1.0], 4.0, 0.0).rates;
    let hand_b = waterfill(&[8.0, 1e-3], 2.0, 0.0).rates;
    let mut rng = trial_rng(5, 5);
    let mut worst_sum = 0.0_f64;
    let mut worst_id = 0.0_f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let mut lambda: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-4.0..3.0))).collect();
        lambda.sort_by(|a, b| b.total_cmp(a));
        let rate = rng.random_range(0.1..100.0);
        let rho = db_to_linear(rng.random_range(0.0..30.0));
        let alloc = waterfill(&lambda, rate, 0.0);
        worst_sum = worst_sum.max((alloc.rates.iter().sum::<f64>() - rate).abs());
        let var = perfect_variances(&lambda, rho);
        let phi = quant_noise(&var, &alloc.rates).unwrap();
        let id: f64 = var
            .iter()
            .zip(&phi)
            .zip(&alloc.rates)
            .filter(|(_, r)| **r > 0.0)
            .map(|((v, p), _)| (1.0 + v / p).log2())
            .sum();
        worst_id = worst_id.max((id - rate).abs());
    }
    report(
        5,
        "waterfilling budget, rate identity, hand cases",
        worst_sum < 1e-9 && worst_id < 1e-6 && hand_a == [3.0, 1.0] && hand_b == [2.0, 0.0],
        format!("sum err {worst_sum:.2e}, identity err {worst_id:.2e}, [4,1]/4 -> {hand_a:?}, [8,1e-3]/2 -> {hand_b:?}"),
    );
}

#[test]
fn c06_capacity_ordering_chain() {
    let base = reference_config();
    let mut violations = Vec::new();
    let mut checked = 0;
    for t in 0..200u64 {
        let cfg = SystemConfig {
            fronthaul_rate: [1.0, 2.5, 5.0, 10.0, 20.0, 40.0, 80.0][t as usize % 7],
            ..base.clone()
        };
        let o = evaluate_trial(&cfg, t, &[1, 2, 3, 4, 6, 8]).unwrap();
        let bound = cutset_bound(&draw_trial(&cfg, t).unwrap().channels.h, cfg.rho, cfg.fronthaul_rate).unwrap();
        let reports = std::iter::once(&o.baseline).chain(o.proposed.iter().map(|(_, r)| r));
        for r in reports {
            checked += 1;
            let lm = r.lmmse_sum();
            let ok = lm >= -1e-9
                && lm <= r.sum_capacity + 1e-9
                && r.sum_capacity <= r.reduced_mi + 1e-9
                && r.reduced_mi <= r.full_mi + 1e-9
                && r.sum_capacity <= bound + 1e-9
                && (r.cutset - bound).abs() < 1e-12;
            if !ok {
                violations.push(t);
            }
        }
    }
    report(
        6,
        "sum LMMSE <= C_sum <= reduced MI <= full MI, C_sum <= cut-set",
        violations.is_empty(),
        format!("{} violations over {checked} scheme evaluations", violations.len()),
    );
}

#[test]
fn c07_mi_proportion_trends() {
    let start = Instant::now();
    let cfg = SystemConfig {
        dimension: 8,
        ..reference_config()
    };
    let snrs = [0.0, 10.0, 20.0, 30.0];
    let dims: Vec<usize> = (1..=8).collect();
    let rows = mi_proportion_sweep(&cfg, &snrs, &dims, 500).unwrap();
    let at = |db: f64, n: usize| rows.iter().find(|r| r.snr_db == db && r.dimension == n).unwrap().mean;

    let full_ok = snrs.iter().all(|&db| (at(db, 8) - 1.0).abs() < 1e-9);
    let n_monotone = snrs.iter().all(|&db| dims.windows(2).all(|w| at(db, w[1]) > at(db, w[0])));
    let mut spear = Vec::new();
    for n in [2, 3, 4] {
        let ys: Vec<f64> = snrs.iter().map(|&db| at(db, n)).collect();
        spear.push(spearman(&snrs, &ys));
    }
    let table: Vec<String> = snrs
        .iter()
        .map(|&db| format!("{db}dB: {:?}", [2, 4, 8].map(|n| (at(db, n) * 1e3).round() / 1e3)))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    report(
        7,
        "MI proportion: 1 at N=8, increasing in N and in SNR",
        full_ok && n_monotone && spear.iter().all(|&s| s > 0.9) && secs < 600.0,
        format!("spearman N=2,3,4 {spear:?}; {}; {secs:.1}s", table.join(" ")),
    );
}

struct RateSweep {
    rates: Vec<f64>,
    best: Vec<Vec<f64>>,
    best_n: Vec<usize>,
    n2: Vec<Vec<f64>>,
    baseline: Vec<Vec<f64>>,
    cutset: Vec<Vec<f64>>,
}

const CANDIDATES: [usize; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

fn rate_sweep(cfg: &SystemConfig, total_rates: &[f64], trials: usize) -> RateSweep {
    let mut s = RateSweep {
        rates: total_rates.to_vec(),
        best: vec![],
        best_n: vec![],
        n2: vec![],
        baseline: vec![],
        cutset: vec![],
    };
    for &total in total_rates {
        let point = SystemConfig {
            fronthaul_rate: total / cfg.receivers as f64,
            dimension: 8,
            ..cfg.clone()
        };
        let out = run_point(&point, trials, &CANDIDATES).unwrap();
        let idx = best_candidate(&out).unwrap();
        s.best.push(candidate_sum_capacities(&out, idx));
        s.best_n.push(CANDIDATES[idx]);
        s.n2.push(candidate_sum_capacities(&out, 1));
        s.baseline.push(out.iter().map(|o| o.baseline.sum_capacity).collect());
        s.cutset.push(out.iter().map(|o| o.cutset).collect());
    }
    s
}

const TOTAL_RATES: [f64; 9] = [8.0, 16.0, 24.0, 32.0, 40.0, 60.0, 80.0, 120.0, 160.0];

#[test]
fn c08_best_n_dominates_baseline_and_tracks_cutset() {
    let cfg = SystemConfig {
        rng_seed: 808,
        ..reference_config()
    };
    let s = rate_sweep(&cfg, &TOTAL_RATES, 200);
    let mut worst_p = 0.0_f64;
    let mut worst_ratio = f64::INFINITY;
    let mut lines = Vec::new();
    for i in 0..s.rates.len() {
        let p = paired_t_greater(&s.best[i], &s.baseline[i]);
        worst_p = worst_p.max(p);
        let ratio = mean(&s.n2[i]) / mean(&s.cutset[i]);
        if s.rates[i] <= 40.0 {
            worst_ratio = worst_ratio.min(ratio);
        }
        lines.push(format!(
            "RL={} N*={} best={:.2} base={:.2} cut={:.2} p={p:.1e}",
            s.rates[i],
            s.best_n[i],
            mean(&s.best[i]),
            mean(&s.baseline[i]),
            mean(&s.cutset[i])
        ));
    }
    report(
        8,
        "best-N beats local baseline at every rate; N=2 >= 85% of cut-set for RL <= 40",
        worst_p < 0.05 && worst_ratio >= 0.85,
        format!("max p {worst_p:.2e}, min N=2/cut-set {worst_ratio:.3}; {}", lines.join("; ")),
    );
}

#[test]
fn c09_imperfect_csi_bound() {
    let cfg = SystemConfig {
        rng_seed: 909,
        ..reference_config()
    };
    let rates = [8.0, 16.0, 40.0, 80.0, 160.0];
    let perfect = rate_sweep(&cfg, &rates, 200);
    let pilots = [30.0, 20.0, 10.0];
    let curves: Vec<RateSweep> = pilots
        .iter()
        .map(|&db| {
            let c = SystemConfig {
                pilot_snr: PilotSnr::from_db(db),
                ..cfg.clone()
            };
            rate_sweep(&c, &rates, 200)
        })
        .collect();
    let mut worst_gap = 0.0_f64;
    let mut monotone = true;
    let mut lines = Vec::new();
    for (i, rate) in rates.iter().enumerate() {
        let p = mean(&perfect.best[i]);
        let m: Vec<f64> = curves.iter().map(|c| mean(&c.best[i])).collect();
        worst_gap = worst_gap.max((p - m[0]).abs() / p);
        monotone &= m[0] <= p + 1e-9 && m.windows(2).all(|w| w[1] <= w[0] + 1e-9);
        lines.push(format!("RL={rate}: perfect {p:.2} pilot30/20/10 {:.2}/{:.2}/{:.2}", m[0], m[1], m[2]));
    }
    report(
        9,
        "30 dB pilot bound within 10% of perfect CSI, non-increasing in pilot SNR",
        worst_gap <= 0.10 && monotone,
        format!("max rel gap {worst_gap:.3}; {}", lines.join("; ")),
    );
}

fn acceptance_sweep_csv() -> String {
    let base = SystemConfig {
        rng_seed: 1010,
        ..reference_config()
    };
    let rate = SweepSpec {
        base: base.clone(),
        variable: SweepVariable::FronthaulRate,
        values: TOTAL_RATES.iter().map(|r| r / 4.0).collect(),
        trials: 60,
        outputs: Output::ALL.to_vec(),
        n_candidates: CANDIDATES.to_vec(),
    };
    let pilot = SweepSpec {
        base: SystemConfig {
            fronthaul_rate: 10.0,
            ..base
        },
        variable: SweepVariable::PilotSnrDb,
        values: vec![30.0, 20.0, 10.0],
        ..rate.clone()
    };
    let mut rows = run_sweep(&rate).unwrap();
    rows.extend(run_sweep(&pilot).unwrap());
    render_csv(&rows)
}

#[test]
fn c10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    std::fs::write(&a, acceptance_sweep_csv()).unwrap();
    std::fs::write(&b, acceptance_sweep_csv()).unwrap();
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    report(
        10,
        "identical seed gives byte-identical CSV",
        x == y && x.len() > 1000,
        format!("{} bytes, {} lines", x.len(), x.iter().filter(|&&ch| ch == b'\n').count()),
    );
}

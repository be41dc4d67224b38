//! Matched-filter Gram-Schmidt (MF-GS) dimension reduction.
//!
//! Each receiver keeps `N` filtered components of its received signal. The
//! filters are matched filters towards a subset of users, orthonormalised
//! with Gram-Schmidt. Selection is greedy and round-robin over receivers: at
//! every stage the chosen user vector maximises the joint mutual information
//! of all reduced signals, evaluated through the determinant lemma against
//! a running inverse
//!
//! ```text
//! A = (I_K + ρ Σ_l Σ_i H_l† q_{l,i} q_{l,i}† H_l)^{-1}
//! ```
//!
//! which is kept current with a rank-1 update after every pick.
//!
//! User indices are zero based.

use crate::error::{Error, Result};
use crate::linalg::{
    add_gram, c, hermitian_eigen_desc, hermitize, identity, log2_det_hpd, orthonormal_basis,
    CMatrix, CVector,
};

/// Candidates whose projected energy falls below this fraction of their raw
/// energy are excluded from selection.
pub const DEGENERATE_PROJECTION: f64 = 1e-12;

/// Relative margin a candidate must beat the incumbent by to win; ties go to
/// the lowest user index.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep {
    pub round: usize,
    pub receiver: usize,
    pub user: usize,
    /// Mutual-information increase of this step, bits.
    pub gain: f64,
    /// Joint mutual information after this step, bits.
    pub mi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReductionResult {
    /// Selected users per receiver, in selection order.
    pub selected: Vec<Vec<usize>>,
    /// Orthonormal bases `Q_l` (M×|S_l|).
    pub bases: Vec<CMatrix>,
    /// Joint MI after every selection step, bits.
    pub mi_trajectory: Vec<f64>,
    pub steps: Vec<SelectionStep>,
    /// Final K×K inverse `A`.
    pub a_final: CMatrix,
}

impl DimensionReductionResult {
    /// Result of running only the first `rounds` rounds. Greedy selection is
    /// prefix-stable, so this equals a fresh run with `N = rounds`, apart from
    /// `a_final`, which is not reconstructed.
    pub fn prefix(&self, rounds: usize) -> PrefixView {
        let mut counts = vec![0usize; self.selected.len()];
        let mut mi = 0.0;
        for st in self.steps.iter().filter(|st| st.round < rounds) {
            counts[st.receiver] += 1;
            mi = st.mi;
        }
        PrefixView {
            selected: self
                .selected
                .iter()
                .zip(&counts)
                .map(|(s, &n)| s[..n].to_vec())
                .collect(),
            bases: self
                .bases
                .iter()
                .zip(&counts)
                .map(|(q, &n)| q.columns(0, n).into_owned())
                .collect(),
            mi,
        }
    }
}

/// The first rounds of a [`DimensionReductionResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixView {
    pub selected: Vec<Vec<usize>>,
    pub bases: Vec<CMatrix>,
    pub mi: f64,
}

fn check_channels(h: &[CMatrix]) -> Result<usize> {
    let first = h
        .first()
        .ok_or_else(|| Error::invalid("at least one receiver is required"))?;
    let k = first.ncols();
    if h.iter().any(|hl| hl.ncols() != k) {
        return Err(Error::invalid("all receivers must see the same users"));
    }
    Ok(k)
}

/// `log2 det(I_K + ρ Σ_l H_l† H_l)`, the information of the unreduced signals.
pub fn full_mi(h: &[CMatrix], rho: f64) -> Result<f64> {
    let k = check_channels(h)?;
    let mut b = identity(k);
    for hl in h {
        add_gram(&mut b, hl, rho);
    }
    log2_det_hpd(&b)
}

/// Joint MI of the reduced signals `Q_l† y_l` for orthonormal `Q_l`.
pub fn mi_from_bases(bases: &[CMatrix], h: &[CMatrix], rho: f64) -> Result<f64> {
    let k = check_channels(h)?;
    if bases.len() != h.len() {
        return Err(Error::invalid("one basis per receiver is required"));
    }
    let mut b = identity(k);
    for (q, hl) in bases.iter().zip(h) {
        if q.ncols() == 0 {
            continue;
        }
        if q.nrows() != hl.nrows() {
            return Err(Error::invalid("basis and channel row counts differ"));
        }
        add_gram(&mut b, &(q.adjoint() * hl), rho);
    }
    log2_det_hpd(&b)
}

/// Joint MI of the filtered signals `F_l† y_l`. The filters are first
/// orthonormalised; linearly dependent columns are dropped since they carry
/// no extra information.
pub fn joint_mi(filters: &[CMatrix], h: &[CMatrix], rho: f64) -> Result<f64> {
    let bases: Vec<CMatrix> = filters
        .iter()
        .map(|f| orthonormal_basis(f, DEGENERATE_PROJECTION))
        .collect();
    mi_from_bases(&bases, h, rho)
}

/// `A − (A H† q q† H A) / (1/ρ + q† H A H† q)`, re-symmetrised.
pub fn rank1_update(a: &CMatrix, h: &CMatrix, q: &CVector, rho: f64) -> CMatrix {
    let w = h.adjoint() * q;
    let aw = a * &w;
    let denom = 1.0 / rho + w.dotc(&aw).re;
    let update = (&aw * aw.adjoint()).unscale(denom);
    hermitize(&(a - update))
}

/// Determinant-lemma MI increase `log2(1 + ρ q† H A H† q)`.
pub fn stage_gain(a: &CMatrix, h: &CMatrix, q: &CVector, rho: f64) -> f64 {
    let w = h.adjoint() * q;
    (1.0 + rho * w.dotc(&(a * &w)).re).log2()
}

/// Selection metric `h† P H A H† P h / h† P h` for a projected candidate.
fn selection_metric(a: &CMatrix, h: &CMatrix, projected: &CVector, energy: f64) -> f64 {
    let w = h.adjoint() * projected;
    w.dotc(&(a * &w)).re / energy
}

/// Runs MF-GS for `n` rounds over the given (possibly whitened) channels.
pub fn mfgs_select(h: &[CMatrix], rho: f64, n: usize) -> Result<DimensionReductionResult> {
    let k = check_channels(h)?;
    if !(rho > 0.0) {
        return Err(Error::invalid("rho must be positive"));
    }
    for hl in h {
        if n > hl.nrows().min(k) {
            return Err(Error::invalid(format!(
                "N = {n} exceeds min(M, K) = {}",
                hl.nrows().min(k)
            )));
        }
    }

    let n_rx = h.len();
    let mut a = identity(k);
    let mut proj: Vec<CMatrix> = h.iter().map(|hl| identity(hl.nrows())).collect();
    let mut selected: Vec<Vec<usize>> = vec![Vec::with_capacity(n); n_rx];
    let mut columns: Vec<Vec<CVector>> = vec![Vec::with_capacity(n); n_rx];
    let mut steps = Vec::with_capacity(n * n_rx);
    let mut mi = 0.0;

    for round in 0..n {
        for l in 0..n_rx {
            let hl = &h[l];
            let mut best: Option<(usize, f64, CVector)> = None;
            for cand in 0..k {
                if selected[l].contains(&cand) {
                    continue;
                }
                let raw = hl.column(cand);
                let raw_energy = raw.norm_squared();
                let p = &proj[l] * raw;
                let energy = p.norm_squared();
                if raw_energy == 0.0 || energy <= DEGENERATE_PROJECTION * raw_energy {
                    continue;
                }
                let metric = selection_metric(&a, hl, &p, energy);
                let better = match &best {
                    None => true,
                    Some((_, m, _)) => metric > m * (1.0 + TIE_TOLERANCE),
                };
                if better {
                    best = Some((cand, metric, p));
                }
            }
            let Some((user, _, p)) = best else {
                log::warn!("round {round}: receiver {l} has no admissible candidate, skipped");
                continue;
            };

            let mut q = p.unscale(p.norm());
            // second Gram-Schmidt pass against the stored basis
            for prev in &columns[l] {
                let overlap = prev.dotc(&q);
                q -= prev * overlap;
            }
            q.unscale_mut(q.norm());

            let gain = stage_gain(&a, hl, &q, rho);
            a = rank1_update(&a, hl, &q, rho);
            proj[l] -= &q * q.adjoint();
            mi += gain;

            selected[l].push(user);
            columns[l].push(q);
            steps.push(SelectionStep {
                round,
                receiver: l,
                user,
                gain,
                mi,
            });
        }
    }

    let bases = columns
        .iter()
        .zip(h)
        .map(|(cols, hl)| {
            if cols.is_empty() {
                CMatrix::zeros(hl.nrows(), 0)
            } else {
                CMatrix::from_columns(cols)
            }
        })
        .collect();

    Ok(DimensionReductionResult {
        selected,
        bases,
        mi_trajectory: steps.iter().map(|s| s.mi).collect(),
        steps,
        a_final: a,
    })
}

/// Eigen-view of a single selection stage.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannelDiagnostics {
    /// Eigenvalues of the current equivalent channel, descending.
    pub upsilon: Vec<f64>,
    /// Matching eigenvectors as columns.
    pub u: CMatrix,
    /// Normalised signal power `q† H H† q`.
    pub gamma: f64,
    /// `H† q / ‖H† q‖`, absent when `H† q = 0`.
    pub c: Option<CVector>,
    /// `|u_i† c|²` per eigenvector.
    pub projections: Vec<f64>,
    /// Eigenvalues of the equivalent channel after the update, descending.
    pub updated_upsilon: Vec<f64>,
    /// Gain from the determinant lemma, bits.
    pub gain_lemma: f64,
    /// Gain from the eigen-decomposed form, bits.
    pub gain_eigen: f64,
}

impl EquivalentChannelDiagnostics {
    pub fn gains_agree(&self, tol: f64) -> bool {
        (self.gain_lemma - self.gain_eigen).abs() <= tol
    }
}

/// Decomposes the stage gain of adding `q` at a receiver with channel `h`
/// given the current inverse `a`.
pub fn stage_gain_diagnostics(
    a: &CMatrix,
    h: &CMatrix,
    q: &CVector,
    rho: f64,
) -> EquivalentChannelDiagnostics {
    let k = a.nrows();
    // A = U (I + ρΥ)^{-1} U†; descending υ pairs with ascending eigenvalues of A.
    let (a_vals, a_vecs) = hermitian_eigen_desc(a);
    let mut upsilon = Vec::with_capacity(k);
    let mut u = CMatrix::zeros(k, k);
    for (dst, src) in (0..k).rev().enumerate() {
        upsilon.push(((1.0 / a_vals[src] - 1.0) / rho).max(0.0));
        u.set_column(dst, &a_vecs.column(src));
    }

    let w = h.adjoint() * q;
    let gamma = w.norm_squared();
    let gain_lemma = stage_gain(a, h, q, rho);

    let equivalent = {
        let d = CMatrix::from_diagonal(&CVector::from_iterator(k, upsilon.iter().map(|&v| c(v))));
        &u * d * u.adjoint()
    };
    let (updated_upsilon, _) = hermitian_eigen_desc(&(equivalent + &w * w.adjoint()));

    if gamma == 0.0 {
        return EquivalentChannelDiagnostics {
            upsilon,
            u,
            gamma,
            c: None,
            projections: vec![0.0; k],
            updated_upsilon,
            gain_lemma,
            gain_eigen: 0.0,
        };
    }

    let cvec = w.unscale(gamma.sqrt());
    let projections: Vec<f64> = (0..k).map(|i| u.column(i).dotc(&cvec).norm_sqr()).collect();
    let weighted: f64 = projections
        .iter()
        .zip(&upsilon)
        .map(|(p, v)| rho * p / (1.0 + rho * v))
        .sum();
    let gain_eigen = (1.0 + gamma * weighted).log2();

    EquivalentChannelDiagnostics {
        upsilon,
        u,
        gamma,
        c: Some(cvec),
        projections,
        updated_upsilon,
        gain_lemma,
        gain_eigen,
    }
}

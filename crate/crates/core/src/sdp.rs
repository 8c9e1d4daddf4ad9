//! First-order solvers for the k-means SDP
//!
//! ```text
//!   minimize   ⟨Y, A⟩
//!   subject to Y·1 = (n/k)·1,  diag(Y) = 1,  Y ⪰ 0,  Y ≥ 0
//! ```
//!
//! Two ADMM variants are available, selected by [`SolverMethod`]:
//!
//! * [`SolverMethod::Dual`] (default) works on the dual problem
//!   `max bᵀy  s.t.  𝒜*(y) + S + Z = A,  S ⪰ 0,  Z ≥ 0` with the primal `Y`
//!   as multiplier. Each iteration updates `y`, `Z`, `y` again and then `S`
//!   (a symmetric Gauss–Seidel sweep, which keeps the scheme convergent), so
//!   the returned `Y` is exactly positive semidefinite up to round-off.
//! * [`SolverMethod::Consensus`] runs three-block consensus ADMM on the
//!   primal, projecting onto the affine set, the PSD cone and the orthant.
//!
//! Every projection has a closed form. The affine pieces are `O(n²)`; the
//! PSD step needs one symmetric eigendecomposition per iteration.

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, psd_project, PsdPart, PsdProjector, SymMatrix};

/// Which splitting scheme [`solve_sdp`] runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolverMethod {
    #[default]
    Dual,
    Consensus,
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolverMethod::Dual => "dual",
            SolverMethod::Consensus => "consensus",
        }
    }
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual" => Ok(SolverMethod::Dual),
            "consensus" => Ok(SolverMethod::Consensus),
            other => Err(Error::input(format!(
                "unknown solver method {other:?} (expected dual or consensus)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Initial penalty; `None` uses `‖A‖_F / n` (or 1 if `A = 0`).
    pub rho: Option<f64>,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Record residuals every `log_every` iterations (0 disables the history).
    pub log_every: usize,
    /// Residual balancing: double or halve ρ when the primal and dual
    /// residuals differ by more than 10×, at most once per 50 iterations.
    pub adaptive_rho: bool,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: None,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            max_iter: 5000,
            log_every: 0,
            adaptive_rho: true,
            method: SolverMethod::Dual,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(rho) = self.rho {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(Error::input(format!("rho must be positive, got {rho}")));
            }
        }
        for (name, tol) in [("tol_primal", self.tol_primal), ("tol_dual", self.tol_dual)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::input(format!("{name} must lie in (0, 1), got {tol}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::input("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Constraint violations of a candidate `Y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// `max_i |(Y·1)_i − n/k| / (n/k)`.
    pub row_sum_resid: f64,
    /// `max_i |Y_ii − 1|`.
    pub diag_resid: f64,
    /// `max(0, −min_ij Y_ij)`.
    pub neg_entry: f64,
    /// Smallest eigenvalue of `Y` (NaN if the eigensolver failed).
    pub min_eig: f64,
}

/// One entry of the solver's residual history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub rho: f64,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// The estimate Ŷ, symmetric.
    pub y: SymMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: FeasibilityReport,
    /// Final primal residual in the method's own measure (see [`solve_sdp`]).
    pub primal_residual: f64,
    /// Final dual residual in the method's own measure.
    pub dual_residual: f64,
    /// Objective minus a certified lower bound on the optimum, relative to
    /// `1 + |objective|` (dual method only; NaN for consensus).
    pub gap: f64,
    /// Final penalty, in the units of `A`.
    pub rho: f64,
    pub method: SolverMethod,
    pub history: Vec<IterationLog>,
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if n < 4 || k < 2 {
        return Err(Error::input(format!("need n >= 4 and k >= 2, got n = {n}, k = {k}")));
    }
    if n % k != 0 {
        return Err(Error::input(format!("n = {n} is not a multiple of k = {k}")));
    }
    Ok(())
}

/// Frobenius-nearest symmetric matrix with row sums `n/k` and unit diagonal.
///
/// The correction `Y − M = λ1ᵀ + 1λᵀ + Diag(ν)` is determined in closed form:
/// with `b_i = n/k − 1 − (M·1)_i + M_ii` and `s = Σb / (2n − 2)`, the
/// multipliers are `λ_i = (b_i − s)/(n − 2)` and `ν_i = 1 − M_ii − 2λ_i`.
pub fn affine_project(m: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let n = m.order();
    check_sizes(n, k)?;
    let mut out = m.as_slice().to_vec();
    affine_project_in_place(&mut out, n, n as f64 / k as f64);
    Ok(SymMatrix::from_raw(n, out))
}

fn affine_project_in_place(m: &mut [f64], n: usize, row_target: f64) {
    let nf = n as f64;
    let b: Vec<f64> = (0..n)
        .map(|i| {
            let row = &m[i * n..(i + 1) * n];
            row_target - 1.0 - row.iter().sum::<f64>() + row[i]
        })
        .collect();
    let s = b.iter().sum::<f64>() / (2.0 * nf - 2.0);
    let lambda: Vec<f64> = b.iter().map(|bi| (bi - s) / (nf - 2.0)).collect();
    for i in 0..n {
        let row = &mut m[i * n..(i + 1) * n];
        for (j, v) in row.iter_mut().enumerate() {
            *v += lambda[i] + lambda[j];
        }
        row[i] = 1.0;
    }
}

/// Measures how far `y` is from the feasible set.
pub fn feasibility(y: &SymMatrix, k: usize) -> FeasibilityReport {
    let n = y.order();
    let (row_sum_resid, diag_resid, neg_entry) = linear_residuals(y.as_slice(), n, n as f64 / k as f64);
    FeasibilityReport {
        row_sum_resid,
        diag_resid,
        neg_entry,
        min_eig: min_eigenvalue(y).unwrap_or(f64::NAN),
    }
}

/// Row-sum, diagonal and sign violations of a row-major `n×n` matrix.
fn linear_residuals(y: &[f64], n: usize, row_target: f64) -> (f64, f64, f64) {
    let mut row_sum = 0.0f64;
    let mut diag = 0.0f64;
    let mut min_entry = f64::INFINITY;
    for i in 0..n {
        let row = &y[i * n..(i + 1) * n];
        row_sum = row_sum.max((row.iter().sum::<f64>() - row_target).abs() / row_target);
        diag = diag.max((row[i] - 1.0).abs());
        min_entry = row.iter().copied().fold(min_entry, f64::min);
    }
    (row_sum, diag, (-min_entry).max(0.0))
}

/// Thresholds each entry at 1/2 (ties round up).
pub fn elementwise_round(y: &SymMatrix) -> SymMatrix {
    let data = y
        .as_slice()
        .iter()
        .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
        .collect();
    SymMatrix::from_raw(y.order(), data)
}

/// Starting point `αJ + (1 − α)I` with `α = (n/k − 1)/(n − 1)`: the average
/// of all balanced cluster matrices, so it satisfies every constraint.
fn barycenter(n: usize, k: usize) -> Vec<f64> {
    let alpha = (n as f64 / k as f64 - 1.0) / (n as f64 - 1.0);
    let mut z = vec![alpha; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    z
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn frob_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const RHO_UPDATE_EVERY: usize = 50;
const RHO_IMBALANCE: f64 = 10.0;
/// The adaptive penalty stays within this factor of its starting value.
const RHO_RANGE: f64 = 1e4;
/// Multiplier step length of the dual method.
const STEP_LENGTH: f64 = 1.618;
/// Largest factor rank applied entry by entry instead of forming `G·Gᵀ`.
const FUSED_RANK_MAX: usize = 16;

/// Solves the SDP for the distance matrix `a` with `k` clusters.
///
/// Stopping rules, with `tol_p = tol_primal` and `tol_d = tol_dual`:
///
/// * dual method: `max(row_sum_resid, diag_resid, neg_entry) ≤ tol_p` for
///   the iterate `Y` (which is PSD by construction),
///   `‖𝒜*(y) + S + Z − A‖_F ≤ tol_d·(‖A‖_F/n)·(1 + n)`, and the objective
///   exceeds a certified lower bound on the optimum by at most
///   `tol_d·(1 + |objective|)`;
/// * consensus method: `max_i ‖Y_i − Z‖_F ≤ tol_p·(1 + ‖Z‖_F)` and
///   `ρ‖Z_new − Z_old‖_F ≤ tol_d·(1 + ‖Z‖_F)`.
///
/// Hitting `max_iter` is not an error: the iterate with the smallest
/// normalized residual is returned with `converged = false`.
pub fn solve_sdp(a: &SymMatrix, k: usize, config: &SolverConfig) -> Result<SdpSolution> {
    config.validate()?;
    let n = a.order();
    check_sizes(n, k)?;
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::input("distance matrix has non-finite entries"));
    }
    let a_norm = a.frobenius_norm();
    let scale = if a_norm > 0.0 { a_norm / n as f64 } else { 1.0 };
    let rho = config.rho.unwrap_or(scale);
    match config.method {
        SolverMethod::Dual => solve_dual(a, k, config, scale, rho),
        SolverMethod::Consensus => solve_consensus(a, k, config, rho),
    }
}

/// Best iterate seen so far, by normalized merit.
struct Best {
    merit: f64,
    y: Vec<f64>,
    iteration: usize,
    primal: f64,
    dual: f64,
    gap: f64,
}

impl Best {
    fn offer(slot: &mut Option<Best>, merit: f64, y: &[f64], iteration: usize, residuals: (f64, f64, f64)) {
        if slot.as_ref().is_none_or(|b| merit < b.merit) {
            *slot = Some(Best {
                merit,
                y: y.to_vec(),
                iteration,
                primal: residuals.0,
                dual: residuals.1,
                gap: residuals.2,
            });
        }
    }
}

/// Row sums and diagonal of a row-major `n×n` matrix.
fn row_sums_and_diag(m: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sums = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        sums.push(row.iter().sum());
        diag.push(row[i]);
    }
    (sums, diag)
}

/// Solves `𝒜𝒜*(λ, ν) = (r₁, r₂)` where `𝒜(Y) = (Y·1, diag Y)` on symmetric
/// matrices and `𝒜*(λ, ν) = (λ1ᵀ + 1λᵀ)/2 + Diag(ν)`.
fn solve_normal_equations(r1: &[f64], r2: &[f64], lambda: &mut [f64], nu: &mut [f64]) {
    let n = r1.len() as f64;
    let diff_sum: f64 = r1.iter().zip(r2).map(|(a, b)| a - b).sum();
    let lambda_sum = diff_sum / (n - 1.0);
    for i in 0..r1.len() {
        lambda[i] = (r1[i] - r2[i] - 0.5 * lambda_sum) / (0.5 * n - 1.0);
        nu[i] = r2[i] - lambda[i];
    }
}

#[cfg(test)]
fn fill_adjoint(lambda: &[f64], nu: &[f64], out: &mut [f64]) {
    let n = lambda.len();
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.5 * (lambda[i] + lambda[j]);
        }
        row[i] += nu[i];
    }
}

fn solve_dual(a: &SymMatrix, k: usize, config: &SolverConfig, scale: f64, rho0: f64) -> Result<SdpSolution> {
    let n = a.order();
    let nn = n * n;
    let row_target = n as f64 / k as f64;
    // Work with the cost normalized to ‖C‖_F = n; ρ is rescaled to match.
    let c: Vec<f64> = a.as_slice().iter().map(|v| v / scale).collect();
    let c_norm = frob(&c);
    let (c_rows, c_diag) = row_sums_and_diag(&c, n);
    let mu0 = rho0 / scale;
    let mut mu = mu0;
    let y_norm_bound = n as f64 / (k as f64).sqrt();

    // `y` is the multiplier, `ybar` the latest projected (PSD) iterate; they
    // differ when the step length is not 1. Row sums and diagonals of every
    // block are tracked so the y-steps cost O(n).
    let mut y = barycenter(n, k);
    let mut ybar = y.clone();
    let mut s = vec![0.0; nn];
    let mut z = vec![0.0; nn];
    let (mut y_rows, mut y_diag) = row_sums_and_diag(&y, n);
    let (mut s_rows, mut s_diag) = (vec![0.0; n], vec![0.0; n]);
    let (mut z_rows, mut z_diag) = (vec![0.0; n], vec![0.0; n]);
    let mut lambda = vec![0.0; n];
    let mut nu = vec![0.0; n];
    let mut rhs1 = vec![0.0; n];
    let mut rhs2 = vec![0.0; n];
    let mut w_buf = vec![0.0; nn];
    let mut projector = PsdProjector::new();
    let mut history = Vec::new();
    let mut best: Option<Best> = None;
    let mut last_rho_update = 0;
    let (mut primal, mut dual, mut gap) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for iter in 1..=config.max_iter {
        let mut y_step = |z_rows: &[f64], z_diag: &[f64], lambda: &mut [f64], nu: &mut [f64]| {
            for i in 0..n {
                rhs1[i] = mu * (row_target - y_rows[i]) - (s_rows[i] + z_rows[i] - c_rows[i]);
                rhs2[i] = mu * (1.0 - y_diag[i]) - (s_diag[i] + z_diag[i] - c_diag[i]);
            }
            solve_normal_equations(&rhs1, &rhs2, lambda, nu);
        };

        y_step(&z_rows, &z_diag, &mut lambda, &mut nu);
        for i in 0..n {
            let range = i * n..(i + 1) * n;
            let (zr, cr, sr, yr) = (&mut z[range.clone()], &c[range.clone()], &s[range.clone()], &y[range]);
            let li = lambda[i];
            let mut sum = 0.0;
            for j in 0..n {
                let aty = 0.5 * (li + lambda[j]);
                let v = (cr[j] - aty - sr[j] - mu * yr[j]).max(0.0);
                zr[j] = v;
                sum += v;
            }
            // The diagonal also carries ν.
            zr[i] = (cr[i] - li - nu[i] - sr[i] - mu * yr[i]).max(0.0);
            z_rows[i] = sum - (cr[i] - li - sr[i] - mu * yr[i]).max(0.0) + zr[i];
            z_diag[i] = zr[i];
        }
        y_step(&z_rows, &z_diag, &mut lambda, &mut nu);

        // W = −V with V = C − 𝒜*y − Z − μY; Π₊(W) = μY_new and S = Π₊(W) − W.
        for i in 0..n {
            let range = i * n..(i + 1) * n;
            let (wr, cr, zr, yr) = (&mut w_buf[range.clone()], &c[range.clone()], &z[range.clone()], &y[range]);
            let li = lambda[i];
            for j in 0..n {
                wr[j] = mu * yr[j] - cr[j] + 0.5 * (li + lambda[j]) + zr[j];
            }
            wr[i] += nu[i];
        }
        let w = SymMatrix::from_raw(n, std::mem::take(&mut w_buf));
        let part = projector
            .project_parts(&w)
            .map_err(|e| Error::numerical(format!("iteration {iter}: {e}")))?;

        let proj_dense;
        let mut factor = Vec::new();
        let rank = match &part {
            PsdPart::Factor(g) if g.ncols() <= FUSED_RANK_MAX => {
                let r = g.ncols();
                factor.resize(n * r, 0.0);
                for i in 0..n {
                    for l in 0..r {
                        factor[i * r + l] = g[(i, l)];
                    }
                }
                proj_dense = None;
                r
            }
            _ => {
                proj_dense = Some(part.into_dense());
                0
            }
        };

        let inv_mu = 1.0 / mu;
        let mut dual_sq = 0.0;
        let mut pobj = 0.0;
        let mut min_entry = f64::INFINITY;
        let (mut row_resid, mut diag_resid) = (0.0f64, 0.0f64);
        let wv = w.as_slice();
        for i in 0..n {
            let range = i * n..(i + 1) * n;
            let (sr, yr, br) = (&mut s[range.clone()], &mut y[range.clone()], &mut ybar[range.clone()]);
            let (wr, cr, zr) = (&wv[range.clone()], &c[range.clone()], &z[range.clone()]);
            let gi = &factor[i * rank..(i + 1) * rank];
            let li = lambda[i];
            let (mut s_sum, mut y_sum, mut b_sum) = (0.0, 0.0, 0.0);
            for j in 0..n {
                let p = match &proj_dense {
                    Some(m) => m.as_slice()[i * n + j],
                    None => {
                        let gj = &factor[j * rank..(j + 1) * rank];
                        gi.iter().zip(gj).map(|(a, b)| a * b).sum()
                    }
                };
                let sv = p - wr[j];
                let yb = p * inv_mu;
                let yv = (1.0 - STEP_LENGTH) * yr[j] + STEP_LENGTH * yb;
                sr[j] = sv;
                yr[j] = yv;
                br[j] = yb;
                s_sum += sv;
                y_sum += yv;
                b_sum += yb;
                pobj += cr[j] * yb;
                min_entry = min_entry.min(yb);
                let r = 0.5 * (li + lambda[j]) + sv + zr[j] - cr[j];
                dual_sq += r * r;
            }
            let r_diag = nu[i] + 0.5 * (li + li) + sr[i] + zr[i] - cr[i];
            let r_off = 0.5 * (li + li) + sr[i] + zr[i] - cr[i];
            dual_sq += r_diag * r_diag - r_off * r_off;
            s_rows[i] = s_sum;
            s_diag[i] = sr[i];
            y_rows[i] = y_sum;
            y_diag[i] = yr[i];
            row_resid = row_resid.max((b_sum - row_target).abs() / row_target);
            diag_resid = diag_resid.max((br[i] - 1.0).abs());
        }
        w_buf = w.into_vec();
        if !pobj.is_finite() || !dual_sq.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite value in ADMM iterate at iteration {iter}"
            )));
        }

        primal = row_resid.max(diag_resid).max((-min_entry).max(0.0));
        dual = dual_sq.max(0.0).sqrt() / (1.0 + c_norm);
        // Every feasible Y has ‖Y‖_F ≤ n/√k, so bᵀy − ‖R‖·n/√k is a valid
        // lower bound on the optimum despite the dual residual R. The gap is
        // measured in the caller's units so it bounds the objective error
        // relative to the objective itself.
        let dobj = row_target * lambda.iter().sum::<f64>() + nu.iter().sum::<f64>();
        let lower = dobj - dual_sq.max(0.0).sqrt() * y_norm_bound;
        gap = scale * (pobj - lower).abs() / (1.0 + scale * pobj.abs());

        if config.log_every > 0 && (iter % config.log_every == 0 || iter == 1) {
            history.push(IterationLog {
                iteration: iter,
                primal,
                dual,
                rho: mu * scale,
                objective: pobj * scale,
            });
        }

        let p_rel = primal / config.tol_primal;
        let d_rel = dual.max(gap) / config.tol_dual;
        if p_rel <= 1.0 && d_rel <= 1.0 && projector.last_was_partial() {
            // The Krylov projection cannot rule out a missed positive
            // eigenvalue, which would leave S indefinite without showing in
            // the residual. Confirm before stopping.
            let s_mat = SymMatrix::from_raw(n, s.clone());
            if min_eigenvalue(&s_mat)? < -config.tol_dual * (1.0 + c_norm) {
                projector.force_full();
                continue;
            }
        }
        if p_rel <= 1.0 && d_rel <= 1.0 {
            let mut sol = finish(a, k, ybar, iter, true, (primal, dual, gap), mu * scale, history);
            sol.method = SolverMethod::Dual;
            return Ok(sol);
        }
        Best::offer(&mut best, p_rel.max(d_rel), &ybar, iter, (primal, dual, gap));

        // Checked on a fixed cadence so a balanced run is left alone.
        if config.adaptive_rho && iter - last_rho_update >= RHO_UPDATE_EVERY {
            if primal > RHO_IMBALANCE * dual && mu < mu0 * RHO_RANGE {
                mu *= 2.0;
            } else if dual > RHO_IMBALANCE * primal && mu > mu0 / RHO_RANGE {
                mu *= 0.5;
            }
            last_rho_update = iter;
        }
    }

    let b = best.unwrap_or(Best {
        merit: f64::INFINITY,
        y: ybar,
        iteration: config.max_iter,
        primal,
        dual,
        gap,
    });
    let mut sol = finish(a, k, b.y, config.max_iter, false, (b.primal, b.dual, b.gap), mu * scale, history);
    sol.method = SolverMethod::Dual;
    note_best(&mut sol, b.iteration, config.max_iter);
    Ok(sol)
}

fn solve_consensus(a: &SymMatrix, k: usize, config: &SolverConfig, rho0: f64) -> Result<SdpSolution> {
    let n = a.order();
    let row_target = n as f64 / k as f64;
    let mut rho = rho0;

    let nn = n * n;
    let mut z = barycenter(n, k);
    let mut u = [vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]];
    let mut y1 = vec![0.0; nn];
    let mut y3 = vec![0.0; nn];
    let mut history = Vec::new();

    let mut best: Option<Best> = None;
    let mut last_rho_update = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    for iter in 1..=config.max_iter {
        // Affine block carries the objective: prox of ⟨A,·⟩ + indicator.
        let inv_rho = 1.0 / rho;
        for ((y, (zv, uv)), av) in y1.iter_mut().zip(z.iter().zip(&u[0])).zip(a.as_slice()) {
            *y = zv - uv - av * inv_rho;
        }
        affine_project_in_place(&mut y1, n, row_target);

        let psd_in: Vec<f64> = z.iter().zip(&u[1]).map(|(zv, uv)| zv - uv).collect();
        let y2 = psd_project(&SymMatrix::symmetrized(n, psd_in))
            .map_err(|e| Error::numerical(format!("iteration {iter}: {e}")))?
            .into_vec();

        for (y, (zv, uv)) in y3.iter_mut().zip(z.iter().zip(&u[2])) {
            *y = (zv - uv).max(0.0);
        }

        let z_old = std::mem::take(&mut z);
        z = (0..nn)
            .map(|p| (y1[p] + u[0][p] + y2[p] + u[1][p] + y3[p] + u[2][p]) / 3.0)
            .collect();
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite value in ADMM iterate at iteration {iter}"
            )));
        }

        primal = 0.0;
        for (ui, yi) in u.iter_mut().zip([&y1, &y2, &y3]) {
            let mut sq = 0.0;
            for p in 0..nn {
                let r = yi[p] - z[p];
                ui[p] += r;
                sq += r * r;
            }
            primal = f64::max(primal, sq.sqrt());
        }
        dual = rho * frob_diff(&z, &z_old);

        let scale = 1.0 + frob(&z);
        let p_rel = primal / (config.tol_primal * scale);
        let d_rel = dual / (config.tol_dual * scale);

        if config.log_every > 0 && (iter % config.log_every == 0 || iter == 1) {
            history.push(IterationLog {
                iteration: iter,
                primal,
                dual,
                rho,
                objective: dot(&z, a.as_slice()),
            });
        }

        if p_rel <= 1.0 && d_rel <= 1.0 {
            let mut sol = finish(a, k, z, iter, true, (primal, dual, f64::NAN), rho, history);
            sol.method = SolverMethod::Consensus;
            return Ok(sol);
        }
        Best::offer(&mut best, p_rel.max(d_rel), &z, iter, (primal, dual, f64::NAN));

        if config.adaptive_rho && iter - last_rho_update >= RHO_UPDATE_EVERY {
            // Scaled duals U = λ/ρ must be rescaled together with ρ.
            let factor = if primal > RHO_IMBALANCE * dual && rho < rho0 * RHO_RANGE {
                2.0
            } else if dual > RHO_IMBALANCE * primal && rho > rho0 / RHO_RANGE {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                for ui in u.iter_mut() {
                    ui.iter_mut().for_each(|v| *v /= factor);
                }
                last_rho_update = iter;
            }
        }
    }

    let b = best.unwrap_or(Best {
        merit: f64::INFINITY,
        y: z,
        iteration: config.max_iter,
        primal,
        dual,
        gap: f64::NAN,
    });
    let mut sol = finish(a, k, b.y, config.max_iter, false, (b.primal, b.dual, b.gap), rho, history);
    sol.method = SolverMethod::Consensus;
    note_best(&mut sol, b.iteration, config.max_iter);
    Ok(sol)
}

/// Appends the returned iterate to the history when it is not the last one.
fn note_best(sol: &mut SdpSolution, iteration: usize, max_iter: usize) {
    if iteration != max_iter {
        sol.history.push(IterationLog {
            iteration,
            primal: sol.primal_residual,
            dual: sol.dual_residual,
            rho: sol.rho,
            objective: sol.objective,
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    a: &SymMatrix,
    k: usize,
    y: Vec<f64>,
    iterations: usize,
    converged: bool,
    (primal, dual, gap): (f64, f64, f64),
    rho: f64,
    history: Vec<IterationLog>,
) -> SdpSolution {
    let y = SymMatrix::symmetrized(a.order(), y);
    let objective = y.inner(a);
    let residuals = feasibility(&y, k);
    SdpSolution {
        y,
        objective,
        iterations,
        converged,
        residuals,
        primal_residual: primal,
        dual_residual: dual,
        gap,
        rho,
        method: SolverMethod::Dual,
        history,
    }
}

//! Dense symmetric matrix kernels: storage, spectral decomposition, projection
//! onto the PSD cone and pairwise squared distances.
//!
//! Matrices are stored dense and row-major. Experiment sizes stay in the low
//! thousands, so `n²` storage is never the bottleneck; the `O(n³)`
//! eigendecomposition inside [`psd_project`] is.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Square symmetric matrix with finite entries, stored dense row-major.
///
/// Symmetry is exact: every constructor either checks `a[i][j] == a[j][i]`
/// bit-for-bit or builds the lower triangle as a mirror of the upper one.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Matrix with every entry equal to `value`.
    pub fn filled(n: usize, value: f64) -> Self {
        SymMatrix {
            n,
            data: vec![value; n * n],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle (`i <= j`)
    /// and mirroring it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Wraps row-major data, rejecting non-square, asymmetric or non-finite input.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::input(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry at ({}, {})",
                pos / n,
                pos % n
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::input(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Averages `data` with its transpose. Used on iterates that are symmetric
    /// only up to rounding.
    pub(crate) fn symmetrized(n: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    /// Internal constructor for data known to be exactly symmetric.
    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        SymMatrix { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise ℓ₁ norm `Σ |a_ij|`.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Trace inner product `⟨self, other⟩ = Σ a_ij b_ij`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n, "order mismatch in inner product");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `P · self · Pᵀ` for the permutation sending index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[perm[i] * n + perm[j]] = self.data[i * n + j];
            }
        }
        SymMatrix::from_raw(n, out)
    }

    pub(crate) fn view(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.n, self.n)
    }
}

/// Full spectral decomposition `M = V · diag(values) · Vᵀ`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, row-major `n × n`: `vectors[r * n + c]` is
    /// component `r` of the eigenvector for `values[c]`.
    pub vectors: Vec<f64>,
}

impl EigenPair {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// Column `c` as an owned vector.
    pub fn vector(&self, c: usize) -> Vec<f64> {
        let n = self.order();
        (0..n).map(|r| self.vectors[r * n + c]).collect()
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.order();
        let v = MatRef::from_row_major_slice(&self.vectors, n, n);
        let scaled = Mat::from_fn(n, n, |r, c| v[(r, c)] * f(self.values[c]));
        let prod = &scaled * v.transpose();
        mat_to_sym(prod.as_ref())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

fn mat_to_sym(m: MatRef<'_, f64>) -> SymMatrix {
    let n = m.nrows();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = m[(i, j)];
        }
    }
    SymMatrix::symmetrized(n, data)
}

fn check_finite(m: &SymMatrix) -> Result<()> {
    match m.as_slice().iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::input(format!(
            "non-finite entry at ({}, {})",
            pos / m.order(),
            pos % m.order()
        ))),
        None => Ok(()),
    }
}

/// Symmetric eigendecomposition, eigenvalues sorted descending.
///
/// Each eigenvector is normalized so that its first component with magnitude
/// above `1e-12` is positive, which makes the output reproducible.
pub fn sym_eig(m: &SymMatrix) -> Result<EigenPair> {
    check_finite(m)?;
    let n = m.order();
    if n == 0 {
        return Ok(EigenPair {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let evd = m.view().self_adjoint_eigen(Side::Lower).map_err(|e| {
        Error::numerical(format!(
            "symmetric eigensolver did not converge within its iteration budget (order {n}): {e:?}"
        ))
    })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer returns ascending eigenvalues; flip to descending.
    let values: Vec<f64> = (0..n).rev().map(|c| s[c]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, src) in (0..n).rev().enumerate() {
        let sign = (0..n)
            .map(|r| u[(r, src)])
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        for r in 0..n {
            vectors[r * n + dst] = sign * u[(r, src)];
        }
    }
    Ok(EigenPair { values, vectors })
}

/// Smallest eigenvalue of `m`.
pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    check_finite(m)?;
    if m.order() == 0 {
        return Ok(0.0);
    }
    let s = m
        .view()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::numerical(format!("eigenvalue computation failed: {e:?}")))?;
    Ok(s.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Frobenius-nearest positive semidefinite matrix: `V · diag(max(λ, 0)) · Vᵀ`.
pub fn psd_project(m: &SymMatrix) -> Result<SymMatrix> {
    check_finite(m)?;
    Ok(full_projection(m)?.into_dense())
}

/// Positive part `Π(M)` of a symmetric matrix.
#[derive(Clone, Debug)]
pub enum PsdPart {
    /// `Π(M) = G·Gᵀ`, with the `n × rank` factor `G = U·diag(√λ₊)`.
    Factor(Mat<f64>),
    Dense(SymMatrix),
}

impl PsdPart {
    pub fn into_dense(self) -> SymMatrix {
        match self {
            PsdPart::Dense(m) => m,
            PsdPart::Factor(g) => mat_to_sym((&g * g.transpose()).as_ref()),
        }
    }
}

fn full_projection(m: &SymMatrix) -> Result<PsdPart> {
    let n = m.order();
    if n == 0 {
        return Ok(PsdPart::Dense(m.clone()));
    }
    let evd = m
        .view()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("PSD projection: eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let positive: Vec<usize> = (0..n).filter(|&c| s[c] > 0.0).collect();
    if positive.len() == n {
        return Ok(PsdPart::Dense(m.clone()));
    }

    // Rebuild from whichever side of the spectrum has fewer terms.
    if positive.len() <= n / 2 {
        Ok(PsdPart::Factor(Mat::from_fn(n, positive.len(), |r, c| {
            u[(r, positive[c])] * s[positive[c]].sqrt()
        })))
    } else {
        let negative: Vec<usize> = (0..n).filter(|&c| s[c] <= 0.0).collect();
        let v = Mat::from_fn(n, negative.len(), |r, c| {
            u[(r, negative[c])] * (-s[negative[c]]).sqrt()
        });
        let neg_part = &v * v.transpose();
        let mut data = m.as_slice().to_vec();
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] += neg_part[(i, j)];
            }
        }
        Ok(PsdPart::Dense(SymMatrix::symmetrized(n, data)))
    }
}

const PARTIAL_MIN_ORDER: usize = 80;
const EXTRA_VECTORS: usize = 4;
const KRYLOV_STEPS: usize = 2;
const RITZ_TOL: f64 = 1e-4;

/// PSD projection for a sequence of slowly changing matrices whose positive
/// part has low rank, as produced by an iterative solver.
///
/// Each call first tries a block Krylov subspace seeded with the previous
/// call's positive eigenvectors and a few random vectors, and keeps the
/// Rayleigh–Ritz result if every positive Ritz pair has a residual below
/// `1e-4 · ‖M‖_F` and the subspace has spare room beyond them. Otherwise it
/// falls back to a full decomposition. The Krylov result is always PSD, but
/// it is an approximation: it can be inexact and can miss a positive
/// eigenvalue with no overlap on the subspace. Callers that need the exact
/// projection check the discarded part with [`min_eigenvalue`] and switch to
/// [`PsdProjector::force_full`].
pub struct PsdProjector {
    basis: Option<Mat<f64>>,
    rng: SeededRng,
    full_only: bool,
    last_partial: bool,
    partial_calls: usize,
    full_calls: usize,
}

impl Default for PsdProjector {
    fn default() -> Self {
        Self::new()
    }
}

impl PsdProjector {
    pub fn new() -> Self {
        PsdProjector {
            basis: None,
            rng: SeededRng::new(0x5eed_9e37),
            full_only: false,
            last_partial: false,
            partial_calls: 0,
            full_calls: 0,
        }
    }

    /// Use the full decomposition for every later call.
    pub fn force_full(&mut self) {
        self.full_only = true;
    }

    /// Whether the most recent projection came from the Krylov path.
    pub fn last_was_partial(&self) -> bool {
        self.last_partial
    }

    /// `(partial, full)` call counts so far.
    pub fn counts(&self) -> (usize, usize) {
        (self.partial_calls, self.full_calls)
    }

    pub fn project(&mut self, m: &SymMatrix) -> Result<SymMatrix> {
        Ok(self.project_parts(m)?.into_dense())
    }

    /// Like [`PsdProjector::project`], returning the low-rank factor when
    /// there is one instead of forming the dense matrix.
    pub fn project_parts(&mut self, m: &SymMatrix) -> Result<PsdPart> {
        check_finite(m)?;
        if !self.full_only && m.order() >= PARTIAL_MIN_ORDER {
            // A single step is less accurate; use it only when the positive
            // part is too wide for a deeper subspace.
            let width = self.basis.as_ref().map_or(0, |b| b.ncols()) + EXTRA_VECTORS;
            let ladder: &[usize] = if width * (KRYLOV_STEPS + 1) > m.order() / 2 {
                &[1, KRYLOV_STEPS, 2 * KRYLOV_STEPS]
            } else {
                &[KRYLOV_STEPS, 2 * KRYLOV_STEPS]
            };
            for &steps in ladder {
                if let Some(g) = self.try_krylov(m, steps) {
                    self.basis = Some(g.clone());
                    self.last_partial = true;
                    self.partial_calls += 1;
                    return Ok(PsdPart::Factor(g));
                }
            }
        }
        let part = full_projection(m)?;
        // A dense result means a high-rank positive part; the Krylov path
        // would not pay off next time either, so drop the warm start.
        self.basis = match &part {
            PsdPart::Factor(g) => Some(g.clone()),
            PsdPart::Dense(_) => None,
        };
        self.last_partial = false;
        self.full_calls += 1;
        Ok(part)
    }

    fn try_krylov(&mut self, m: &SymMatrix, steps: usize) -> Option<Mat<f64>> {
        let n = m.order();
        let prev = self.basis.as_ref().map_or(0, |b| b.ncols());
        let width = prev + EXTRA_VECTORS;
        let dim = width * (steps + 1);
        if dim > n / 2 {
            return None;
        }
        let a = m.view();
        let norm = a.norm_l2();
        if norm == 0.0 {
            return Some(Mat::zeros(n, 0));
        }

        let mut start = Mat::<f64>::zeros(n, width);
        for c in 0..width {
            for r in 0..n {
                start[(r, c)] = match &self.basis {
                    Some(b) if c < prev => b[(r, c)],
                    _ => self.rng.normal(),
                };
            }
        }
        let mut q = Mat::<f64>::zeros(n, dim);
        q.as_mut()
            .submatrix_mut(0, 0, n, width)
            .copy_from(start.qr().compute_thin_Q());
        let mut aq = Mat::<f64>::zeros(n, dim);
        for j in 0..=steps {
            let cols = j * width..(j + 1) * width;
            let block = q.as_ref().submatrix(0, cols.start, n, width);
            let next = a * block;
            aq.as_mut()
                .submatrix_mut(0, cols.start, n, width)
                .copy_from(&next);
            if j == steps {
                break;
            }
            // Two passes of block Gram–Schmidt against everything so far.
            let mut p = next;
            let done = q.as_ref().submatrix(0, 0, n, cols.end);
            for _ in 0..2 {
                let coef = done.transpose() * &p;
                p -= done * &coef;
            }
            let qb = p.qr().compute_thin_Q();
            q.as_mut()
                .submatrix_mut(0, cols.end, n, width)
                .copy_from(&qb);
        }

        let t = q.transpose() * &aq;
        let t = Mat::from_fn(dim, dim, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
        let evd = t.self_adjoint_eigen(Side::Lower).ok()?;
        let theta = evd.S().column_vector();
        let v = evd.U();
        let positive: Vec<usize> = (0..dim).filter(|&c| theta[c] > 0.0).collect();
        if positive.len() + width > dim {
            return None;
        }
        let vp = Mat::from_fn(dim, positive.len(), |r, c| v[(r, positive[c])]);
        let u = &q * &vp;
        let mut resid = &aq * &vp;
        for (c, &idx) in positive.iter().enumerate() {
            for r in 0..n {
                resid[(r, c)] -= theta[idx] * u[(r, c)];
            }
            if resid.col(c).norm_l2() > RITZ_TOL * norm {
                return None;
            }
        }
        Some(Mat::from_fn(n, positive.len(), |r, c| {
            u[(r, c)] * theta[positive[c]].sqrt()
        }))
    }
}

/// `A_ij = ‖h_i − h_j‖²` for the given points.
pub fn pairwise_sq_dists<P: AsRef<[f64]>>(points: &[P]) -> Result<SymMatrix> {
    let n = points.len();
    if n < 2 {
        return Err(Error::input(format!("need at least 2 points, got {n}")));
    }
    let d = points[0].as_ref().len();
    if let Some(i) = points.iter().position(|p| p.as_ref().len() != d) {
        return Err(Error::input(format!(
            "point {i} has dimension {}, expected {d}",
            points[i].as_ref().len()
        )));
    }
    Ok(SymMatrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        points[i]
            .as_ref()
            .iter()
            .zip(points[j].as_ref())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_eigenvalues_are_one() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values.len(), 3);
        for v in &e.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_eigenpairs_are_axes() {
        let e = sym_eig(&SymMatrix::from_diag(&[3.0, 1.0, -2.0])).unwrap();
        for (got, want) in e.values.iter().zip([3.0, 1.0, -2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        for c in 0..3 {
            let v = e.vector(c);
            for (r, x) in v.iter().enumerate() {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((x - want).abs() < 1e-12, "vector {c}: {v:?}");
            }
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut m = SymMatrix::identity(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(sym_eig(&m), Err(Error::Input(_))));
        assert!(matches!(psd_project(&m), Err(Error::Input(_))));
    }

    #[test]
    fn from_row_major_checks_symmetry() {
        assert!(SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0]).is_ok());
        assert!(SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.5, 1.0]).is_err());
        assert!(SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn psd_project_clips_negative_eigenvalue() {
        let p = psd_project(&SymMatrix::from_diag(&[2.0, -3.0])).unwrap();
        assert!((p.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(p.get(1, 1).abs() < 1e-12);
        assert!(p.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn psd_input_is_fixed_point() {
        let m = SymMatrix::from_fn(3, |i, j| if i == j { 2.0 } else { 0.5 });
        let p = psd_project(&m).unwrap();
        for (a, b) in m.as_slice().iter().zip(p.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn pairwise_examples() {
        let a = pairwise_sq_dists(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(a.as_slice(), &[0.0; 4]);
        let a = pairwise_sq_dists(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.get(0, 1), 25.0);
        assert_eq!(a.get(1, 0), 25.0);
    }

    #[test]
    fn pairwise_rejects_ragged_points() {
        let err = pairwise_sq_dists(&[vec![0.0, 0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        assert!(pairwise_sq_dists(&[vec![0.0]]).is_err());
    }

    #[test]
    fn permuted_moves_entries() {
        let m = SymMatrix::from_fn(3, |i, j| (i * 3 + j) as f64 + (j * 3 + i) as f64);
        let perm = [2, 0, 1];
        let p = m.permuted(&perm);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.get(perm[i], perm[j]), m.get(i, j));
            }
        }
    }

    /// `G·Gᵀ − 50·I + small symmetric noise`: a low-rank positive part on
    /// top of a large negative bulk, the shape the solver produces.
    fn low_rank_plus_bulk(n: usize, rank: usize, seed: u64) -> SymMatrix {
        let mut rng = SeededRng::new(seed);
        let g: Vec<Vec<f64>> = (0..rank).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
        let noise: Vec<f64> = (0..n * n).map(|_| 0.1 * rng.normal()).collect();
        SymMatrix::from_fn(n, |i, j| {
            let low: f64 = g.iter().map(|v| 4.0 * v[i] * v[j]).sum();
            let bulk = if i == j { -50.0 } else { 0.0 };
            low + bulk + 0.5 * (noise[i * n + j] + noise[j * n + i])
        })
    }

    fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn projector_tracks_a_drifting_sequence() {
        let n = 150;
        let mut proj = PsdProjector::new();
        let base = low_rank_plus_bulk(n, 3, 11);
        let drift = low_rank_plus_bulk(n, 3, 12);
        for step in 0..6 {
            let t = step as f64 * 0.01;
            let m = SymMatrix::from_fn(n, |i, j| base.get(i, j) + t * drift.get(i, j));
            let got = proj.project(&m).unwrap();
            let want = psd_project(&m).unwrap();
            let scale = m.frobenius_norm();
            assert!(max_abs_diff(&got, &want) < 1e-3 * scale, "step {step}");
            assert!(min_eigenvalue(&got).unwrap() > -1e-9 * scale);
        }
        let (partial, full) = proj.counts();
        assert_eq!(partial + full, 6);
        assert!(partial > 0, "warm start never used");
    }

    #[test]
    fn projector_handles_repeated_top_eigenvalue() {
        // Two equal clusters give the eigenvalue n/2 twice.
        let n = 120;
        let y = SymMatrix::from_fn(n, |i, j| if i % 2 == j % 2 { 1.0 } else { 0.0 });
        let m = SymMatrix::from_fn(n, |i, j| y.get(i, j) - if i == j { 3.0 } else { 0.0 });
        let mut proj = PsdProjector::new();
        for _ in 0..3 {
            let got = proj.project(&m).unwrap();
            let want = psd_project(&m).unwrap();
            assert!(max_abs_diff(&got, &want) < 1e-3 * m.frobenius_norm());
        }
    }

    #[test]
    fn forced_full_matches_exactly() {
        let m = low_rank_plus_bulk(100, 2, 5);
        let mut proj = PsdProjector::new();
        proj.force_full();
        let got = proj.project(&m).unwrap();
        assert!(!proj.last_was_partial());
        assert!(max_abs_diff(&got, &psd_project(&m).unwrap()) < 1e-9);
        match proj.project_parts(&m).unwrap() {
            PsdPart::Factor(g) => assert_eq!(g.ncols(), 2),
            PsdPart::Dense(_) => panic!("rank-2 positive part should come back as a factor"),
        }
    }
}

//! The oracle integer program: assign noise-amplified points to the *true*
//! centers, and measure the worst-case error among all assignments that are
//! no worse than the truth.
//!
//! This module needs the ground truth and is a diagnostic only. With
//! `h̄_i = μ_{σ*(i)} + 4·g_i` and `η(F) = Σ_j ‖h̄_j − μ_{F(j)}‖²`, the worst-case
//! error is `max { ½‖F − F*‖₁ : η(F) ≤ η(F*) }`.

use crate::assignment::{Assignment, AssignmentMatrix};
use crate::error::{Error, Result};
use crate::mixture::{sq_dist, Dataset};

/// Margin constant; noise is amplified by `(2c)⁻¹ = 4`.
pub const MARGIN_C: f64 = 0.125;

/// `δ_j(a) = ‖h̄_j − μ_a‖² − ‖h̄_j − μ_{σ*(j)}‖²`, the increase of `η` when
/// point `j` alone moves to cluster `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginTable {
    k: usize,
    delta: Vec<f64>,
}

impl MarginTable {
    pub fn get(&self, j: usize, a: usize) -> f64 {
        self.delta[j * self.k + a]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.delta[j * self.k..(j + 1) * self.k]
    }

    pub fn len(&self) -> usize {
        self.delta.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleInstance {
    pub points_bar: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub c: f64,
    pub margins: MarginTable,
}

/// Result of [`ip_worst_error`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IpError {
    /// Maximum number of reassigned points, `½‖F − F*‖₁`.
    pub count: usize,
    /// Per-point fraction `count / n`. The normalized matrix error
    /// `‖F − F*‖₁ / ‖F*‖₁` equals `2 · ratio`.
    pub ratio: f64,
}

impl IpError {
    /// `‖F − F*‖₁ / ‖F*‖₁ = 2·count/n`.
    pub fn matrix_ratio(&self) -> f64 {
        2.0 * self.ratio
    }
}

/// Builds the oracle instance from a dataset that carries its generating spec.
pub fn build_instance(dataset: &Dataset) -> Result<OracleInstance> {
    let spec = dataset
        .spec
        .as_ref()
        .ok_or_else(|| Error::input("oracle instance needs the true centers (dataset has no spec)"))?;
    let k = spec.k;
    let scale = 1.0 / (2.0 * MARGIN_C);
    let points_bar: Vec<Vec<f64>> = dataset
        .points
        .iter()
        .zip(&dataset.labels)
        .map(|(h, &l)| {
            let mu = &spec.centers[l];
            h.iter().zip(mu).map(|(x, m)| m + scale * (x - m)).collect()
        })
        .collect();

    let mut delta = vec![0.0; dataset.n() * k];
    for (j, hb) in points_bar.iter().enumerate() {
        let own = dataset.labels[j];
        let base = sq_dist(hb, &spec.centers[own]);
        for a in 0..k {
            if a != own {
                delta[j * k + a] = sq_dist(hb, &spec.centers[a]) - base;
            }
        }
    }

    Ok(OracleInstance {
        points_bar,
        centers: spec.centers.clone(),
        labels: dataset.labels.clone(),
        c: MARGIN_C,
        margins: MarginTable { k, delta },
    })
}

impl OracleInstance {
    pub fn n(&self) -> usize {
        self.points_bar.len()
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// `η(F)` for the labeling `labels`.
    pub fn eta(&self, labels: &[usize]) -> f64 {
        self.points_bar
            .iter()
            .zip(labels)
            .map(|(h, &a)| sq_dist(h, &self.centers[a]))
            .sum()
    }

    /// `β_ja = ⟨μ_a − μ_{σ*(j)}, g_j⟩ − c·‖μ_a − μ_{σ*(j)}‖²`, with `g_j`
    /// recovered from `h̄_j`.
    pub fn beta(&self, j: usize, a: usize) -> f64 {
        let own = &self.centers[self.labels[j]];
        let other = &self.centers[a];
        let scale = 2.0 * self.c;
        let inner: f64 = self.points_bar[j]
            .iter()
            .zip(own)
            .zip(other)
            .map(|((hb, mo), ma)| (ma - mo) * scale * (hb - mo))
            .sum();
        inner - self.c * sq_dist(own, other)
    }
}

/// Nearest true center for every amplified point (ties to the lowest index).
pub fn oracle_assign(inst: &OracleInstance) -> AssignmentMatrix {
    let labels: Vec<usize> = inst
        .points_bar
        .iter()
        .map(|h| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (a, mu) in inst.centers.iter().enumerate() {
                let d = sq_dist(h, mu);
                if d < best_d {
                    best = a;
                    best_d = d;
                }
            }
            best
        })
        .collect();
    AssignmentMatrix::from_labels(&labels, inst.k())
}

/// Exact worst-case oracle error.
///
/// Moving point `j` costs at least `m_j = min_{a ≠ σ*(j)} δ_j(a)`, and the
/// constraint `η(F) ≤ η(F*)` is `Σ_{moved} m_j ≤ 0`, so the best strategy
/// moves the points with the smallest `m_j`. The answer is the largest prefix
/// of the ascending `m_j` (ties by index) whose sum is `≤ 0`.
pub fn ip_worst_error(inst: &OracleInstance) -> IpError {
    let n = inst.n();
    let mut costs: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let own = inst.labels[j];
            let m = inst
                .margins
                .row(j)
                .iter()
                .enumerate()
                .filter(|&(a, _)| a != own)
                .map(|(_, &d)| d)
                .fold(f64::INFINITY, f64::min);
            (m, j)
        })
        .collect();
    costs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut count = 0;
    let mut sum = 0.0;
    for (i, (m, _)) in costs.iter().enumerate() {
        sum += m;
        if sum <= 0.0 {
            count = i + 1;
        }
    }
    IpError {
        count,
        ratio: count as f64 / n as f64,
    }
}

/// Largest number of points for which enumeration stays cheap.
const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Worst-case error by enumerating all `k^n` assignments, evaluating `η`
/// directly on the amplified points. Test oracle for [`ip_worst_error`].
pub fn ip_worst_error_bruteforce(inst: &OracleInstance) -> Result<usize> {
    let n = inst.n();
    let k = inst.k();
    let total = (k as u64).checked_pow(n as u32).filter(|&t| t <= BRUTE_FORCE_LIMIT);
    let Some(total) = total else {
        return Err(Error::input(format!(
            "k^n = {k}^{n} exceeds the enumeration limit of {BRUTE_FORCE_LIMIT}"
        )));
    };
    let eta_star = inst.eta(&inst.labels);
    let f_star = AssignmentMatrix::from_labels(&inst.labels, k);
    let mut labels = vec![0usize; n];
    let mut best = 0;
    for code in 0..total {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = (c % k as u64) as usize;
            c /= k as u64;
        }
        if inst.eta(&labels) <= eta_star {
            let changed = AssignmentMatrix::from_labels(&labels, k).l1_distance(&f_star) / 2;
            best = best.max(changed);
        }
    }
    Ok(best)
}

/// Oracle labels as an [`Assignment`] (not necessarily balanced).
pub fn oracle_labels(inst: &OracleInstance) -> Assignment {
    let f = oracle_assign(inst);
    let labels = (0..f.rows()).map(|j| f.label(j)).collect();
    Assignment::new(labels, inst.k()).expect("oracle labels are in range")
}

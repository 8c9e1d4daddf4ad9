//! Error functionals: misclassification rate, ℓ₁ error of the matrix
//! estimate and center estimation error.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::mixture::dist;

/// Minimum-cost perfect assignment on a square integer cost matrix
/// (Hungarian method with row/column potentials, `O(m³)`).
///
/// Returns `(cost, assignment)` where `assignment[row] = column`.
pub fn hungarian(cost: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let m = cost.len();
    if m == 0 {
        return (0, Vec::new());
    }
    assert!(cost.iter().all(|r| r.len() == m), "cost matrix must be square");
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; m];
    for j in 1..=m {
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    (total, assignment)
}

/// Lexicographically smallest optimal assignment: row 0 gets the smallest
/// column compatible with an optimum, then row 1, and so on.
fn lexicographic_assignment(cost: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let m = cost.len();
    let (opt, _) = hungarian(cost);
    let mut fixed: Vec<usize> = Vec::with_capacity(m);
    let mut fixed_cost = 0;
    for row in 0..m {
        for col in 0..m {
            if fixed.contains(&col) {
                continue;
            }
            let rows: Vec<usize> = (row + 1..m).collect();
            let cols: Vec<usize> = (0..m).filter(|c| *c != col && !fixed.contains(c)).collect();
            let sub: Vec<Vec<i64>> = rows
                .iter()
                .map(|&r| cols.iter().map(|&c| cost[r][c]).collect())
                .collect();
            let (sub_cost, _) = hungarian(&sub);
            if fixed_cost + cost[row][col] + sub_cost == opt {
                fixed.push(col);
                fixed_cost += cost[row][col];
                break;
            }
        }
    }
    (opt, fixed)
}

fn check_labels(labels: &[usize], k: usize, which: &str) -> Result<()> {
    match labels.iter().position(|&l| l >= k) {
        Some(i) => Err(Error::input(format!(
            "{which} label {} at position {i} out of range for k = {k}",
            labels[i] + 1
        ))),
        None => Ok(()),
    }
}

/// `confusion[a][b] = #{i : σ̂_i = a, σ*_i = b}`.
pub fn confusion(labels_hat: &[usize], labels_star: &[usize], k: usize) -> Vec<Vec<i64>> {
    let mut c = vec![vec![0i64; k]; k];
    for (&a, &b) in labels_hat.iter().zip(labels_star) {
        c[a][b] += 1;
    }
    c
}

/// Fraction of misclassified points, minimized over relabelings.
///
/// Returns the rate and the optimal permutation `π` (estimated label `a`
/// corresponds to true label `π[a]`). Among optimal permutations the
/// lexicographically smallest is returned.
pub fn misrate(labels_hat: &[usize], labels_star: &[usize], k: usize) -> Result<(f64, Vec<usize>)> {
    if labels_hat.len() != labels_star.len() {
        return Err(Error::input(format!(
            "label vectors differ in length: {} vs {}",
            labels_hat.len(),
            labels_star.len()
        )));
    }
    check_labels(labels_hat, k, "estimated")?;
    check_labels(labels_star, k, "true")?;
    let n = labels_hat.len();
    if n == 0 {
        return Ok((0.0, (0..k).collect()));
    }
    let c = confusion(labels_hat, labels_star, k);
    let neg: Vec<Vec<i64>> = c.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let (cost, perm) = lexicographic_assignment(&neg);
    let matched = -cost;
    Ok(((n as i64 - matched) as f64 / n as f64, perm))
}

/// Misclassification rate by enumerating all `k!` permutations (for checking
/// [`misrate`]; use only for small `k`).
pub fn misrate_bruteforce(labels_hat: &[usize], labels_star: &[usize], k: usize) -> f64 {
    let n = labels_hat.len();
    let c = confusion(labels_hat, labels_star, k);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let matched: i64 = p.iter().enumerate().map(|(a, &b)| c[a][b]).sum();
        best = best.max(matched);
    });
    (n as i64 - best) as f64 / n as f64
}

fn permute(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}

/// `(‖Ŷ − Y*‖₁, ‖Ŷ − Y*‖₁ / ‖Y*‖₁)`.
pub fn l1_error(y_hat: &SymMatrix, y_star: &SymMatrix) -> Result<(f64, f64)> {
    if y_hat.order() != y_star.order() {
        return Err(Error::input(format!(
            "matrix orders differ: {} vs {}",
            y_hat.order(),
            y_star.order()
        )));
    }
    let err: f64 = y_hat
        .as_slice()
        .iter()
        .zip(y_star.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    let norm = y_star.l1_norm();
    let ratio = if norm > 0.0 { err / norm } else { f64::NAN };
    Ok((err, ratio))
}

/// Center estimation error, `(perm_matched, nearest)`:
///
/// * `nearest = max_a min_b ‖μ̂_a − μ_b‖`;
/// * `perm_matched = min_π max_a ‖μ̂_a − μ_{π(a)}‖` over bijections π.
pub fn center_error(mu_hat: &[Vec<f64>], mu: &[Vec<f64>]) -> Result<(f64, f64)> {
    let k = mu.len();
    if mu_hat.len() != k {
        return Err(Error::input(format!(
            "expected {k} estimated centers, got {}",
            mu_hat.len()
        )));
    }
    let d = mu.first().map_or(0, Vec::len);
    if mu.iter().chain(mu_hat).any(|c| c.len() != d) {
        return Err(Error::input("centers have mismatched dimensions"));
    }
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let table: Vec<Vec<f64>> = mu_hat
        .iter()
        .map(|a| mu.iter().map(|b| dist(a, b)).collect())
        .collect();
    let nearest = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);

    // Bottleneck assignment: smallest threshold admitting a perfect matching.
    let mut thresholds: Vec<f64> = table.iter().flatten().copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let (mut lo, mut hi) = (0, thresholds.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&table, thresholds[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok((thresholds[lo], nearest))
}

fn has_perfect_matching(table: &[Vec<f64>], threshold: f64) -> bool {
    let k = table.len();
    let mut owner: Vec<Option<usize>> = vec![None; k];
    fn augment(
        a: usize,
        table: &[Vec<f64>],
        threshold: f64,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for b in 0..table.len() {
            if table[a][b] <= threshold && !seen[b] {
                seen[b] = true;
                if owner[b].is_none_or(|o| augment(o, table, threshold, seen, owner)) {
                    owner[b] = Some(a);
                    return true;
                }
            }
        }
        false
    }
    (0..k).all(|a| augment(a, table, threshold, &mut vec![false; k], &mut owner))
}

/// All error functionals for one clustering run.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub misrate: f64,
    pub l1_error: f64,
    pub l1_ratio: f64,
    pub center_err_perm: f64,
    pub center_err_nearest: f64,
    pub best_perm: Vec<usize>,
}

impl ErrorReport {
    pub fn compute(
        labels_hat: &[usize],
        labels_star: &[usize],
        k: usize,
        y_hat: &SymMatrix,
        y_star: &SymMatrix,
        centers_hat: &[Vec<f64>],
        centers: &[Vec<f64>],
    ) -> Result<Self> {
        let (misrate, best_perm) = misrate(labels_hat, labels_star, k)?;
        let (l1_error, l1_ratio) = l1_error(y_hat, y_star)?;
        let (center_err_perm, center_err_nearest) = center_error(centers_hat, centers)?;
        Ok(ErrorReport {
            misrate,
            l1_error,
            l1_ratio,
            center_err_perm,
            center_err_nearest,
            best_perm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::Assignment;

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let (c, a) = hungarian(&cost);
        assert_eq!(c, 5);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn misrate_examples() {
        let star = [0, 0, 0, 1, 1, 1];
        assert_eq!(misrate(&star, &star, 2).unwrap(), (0.0, vec![0, 1]));
        let swapped = [1, 1, 1, 0, 0, 0];
        assert_eq!(misrate(&swapped, &star, 2).unwrap(), (0.0, vec![1, 0]));
        let flipped = [0, 0, 1, 1, 1, 1];
        assert!((misrate(&flipped, &star, 2).unwrap().0 - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn misrate_ties_pick_lexicographic_permutation() {
        // Every permutation matches exactly one point of each true cluster.
        let hat = [0, 1, 1, 0];
        let star = [0, 0, 1, 1];
        let (rate, perm) = misrate(&hat, &star, 2).unwrap();
        assert_eq!(rate, 0.5);
        assert_eq!(perm, vec![0, 1]);
    }

    #[test]
    fn misrate_rejects_bad_labels() {
        assert!(misrate(&[0, 2], &[0, 1], 2).is_err());
        assert!(misrate(&[0, 1, 1], &[0, 1], 2).is_err());
    }

    #[test]
    fn l1_error_examples() {
        let y = Assignment::new(vec![0, 0, 1, 1], 2).unwrap().cluster_matrix();
        assert_eq!(l1_error(&y, &y).unwrap(), (0.0, 0.0));
        let mut flipped = y.clone();
        flipped.set(0, 1, 0.0);
        let (e, r) = l1_error(&flipped, &y).unwrap();
        assert_eq!(e, 2.0);
        assert!((r - 2.0 * 2.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn center_error_examples() {
        let mu = vec![vec![0.0], vec![10.0]];
        assert_eq!(center_error(&mu, &mu).unwrap(), (0.0, 0.0));
        let rev = vec![vec![10.0], vec![0.0]];
        assert_eq!(center_error(&rev, &mu).unwrap(), (0.0, 0.0));
        let est = vec![vec![0.5], vec![9.0]];
        assert_eq!(center_error(&est, &mu).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn center_error_literal_reading_can_collapse() {
        // Both estimates near the first center: nearest is small, the
        // bijective version must pay for the second center.
        let mu = vec![vec![0.0], vec![10.0]];
        let est = vec![vec![0.1], vec![-0.2]];
        let (perm, nearest) = center_error(&est, &mu).unwrap();
        assert!((nearest - 0.2).abs() < 1e-12);
        assert!((perm - 9.9).abs() < 1e-12);
    }

    #[test]
    fn center_error_dimension_mismatch() {
        assert!(center_error(&[vec![0.0]], &[vec![0.0, 1.0]]).is_err());
        assert!(center_error(&[vec![0.0]], &[vec![0.0], vec![1.0]]).is_err());
    }
}

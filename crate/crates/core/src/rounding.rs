//! Rounding a fractional SDP solution into an explicit balanced clustering.
//!
//! Step one covers the index set with ℓ₁ balls around rows of Ŷ: the ball
//! with the most remaining rows is emitted (trimmed to `n/k`) and removed,
//! until nothing is left. Step two keeps the `k` largest sets and tops them
//! up to exactly `n/k` points each with the leftovers.

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Default ball radius is `n / (RADIUS_DIVISOR · k)`.
pub const RADIUS_DIVISOR: f64 = 4.0;

/// Disjoint index sets covering `0..n`, each of size at most `n/k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallCover {
    pub sets: Vec<Vec<usize>>,
}

impl BallCover {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Checks disjointness, coverage of `0..n` and the size cap.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        let cap = n / k;
        let mut seen = vec![false; n];
        for (t, set) in self.sets.iter().enumerate() {
            if set.len() > cap {
                return Err(Error::input(format!(
                    "set {t} has {} elements, more than n/k = {cap}",
                    set.len()
                )));
            }
            for &i in set {
                if i >= n || seen[i] {
                    return Err(Error::input(format!("index {i} out of range or repeated")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::input(format!("index {i} not covered")));
        }
        Ok(())
    }
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if k == 0 || n == 0 || n % k != 0 {
        return Err(Error::input(format!("n = {n} must be a positive multiple of k = {k}")));
    }
    Ok(())
}

fn row_l1(y: &SymMatrix, u: usize, w: usize) -> f64 {
    y.row(u)
        .iter()
        .zip(y.row(w))
        .map(|(a, b)| (a - b).abs())
        .sum()
}

/// Ball cover with the default radius `n/(4k)`.
pub fn extract_balls(y: &SymMatrix, k: usize) -> Result<BallCover> {
    let n = y.order();
    extract_balls_with_radius(y, k, n as f64 / (RADIUS_DIVISOR * k as f64))
}

/// Ball cover with an explicit ℓ₁ radius.
///
/// The largest ball wins, ties going to the lowest center index. An oversize
/// ball keeps the `n/k` members closest to its center (ties by index).
pub fn extract_balls_with_radius(y: &SymMatrix, k: usize, radius: f64) -> Result<BallCover> {
    let n = y.order();
    check_sizes(n, k)?;
    let cap = n / k;

    let mut dist = vec![0.0; n * n];
    for u in 0..n {
        for w in (u + 1)..n {
            let d = row_l1(y, u, w);
            dist[u * n + w] = d;
            dist[w * n + u] = d;
        }
    }

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut sets = Vec::new();
    while !remaining.is_empty() {
        let mut best_u = remaining[0];
        let mut best_size = 0;
        for &u in &remaining {
            let size = remaining
                .iter()
                .filter(|&&w| dist[u * n + w] <= radius)
                .count();
            if size > best_size {
                best_u = u;
                best_size = size;
            }
        }
        let mut ball: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&w| dist[best_u * n + w] <= radius)
            .collect();
        if ball.len() > cap {
            ball.sort_by(|&a, &b| {
                dist[best_u * n + a]
                    .total_cmp(&dist[best_u * n + b])
                    .then(a.cmp(&b))
            });
            ball.truncate(cap);
        }
        ball.sort_unstable();
        remaining.retain(|i| ball.binary_search(i).is_err());
        sets.push(ball);
    }
    Ok(BallCover { sets })
}

/// Turns a cover into a balanced labeling.
///
/// The `k` largest sets are kept (ties to the earlier set) and labeled in
/// their cover order. Points of the other sets, in increasing index order,
/// fill the kept sets that are short of `n/k`, smallest first.
pub fn equalize(cover: &BallCover, n: usize, k: usize) -> Result<Assignment> {
    check_sizes(n, k)?;
    cover.validate(n, k)?;
    if cover.len() < k {
        return Err(Error::input(format!(
            "cover has {} sets, fewer than k = {k}",
            cover.len()
        )));
    }
    let cap = n / k;

    let mut by_size: Vec<usize> = (0..cover.len()).collect();
    by_size.sort_by(|&a, &b| cover.sets[b].len().cmp(&cover.sets[a].len()).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = by_size[..k].to_vec();
    chosen.sort_unstable();

    let mut labels = vec![usize::MAX; n];
    let mut sizes = vec![0; k];
    for (label, &t) in chosen.iter().enumerate() {
        for &i in &cover.sets[t] {
            labels[i] = label;
        }
        sizes[label] = cover.sets[t].len();
    }

    let leftovers: Vec<usize> = (0..n).filter(|&i| labels[i] == usize::MAX).collect();
    let mut deficient: Vec<usize> = (0..k).filter(|&l| sizes[l] < cap).collect();
    deficient.sort_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(a.cmp(&b)));
    let mut targets = deficient.into_iter();
    let mut current = targets.next();
    for i in leftovers {
        while let Some(l) = current {
            if sizes[l] < cap {
                break;
            }
            current = targets.next();
        }
        let l = current.expect("leftover count equals total deficit");
        labels[i] = l;
        sizes[l] += 1;
    }

    Assignment::balanced(labels, k)
}

/// Full rounding: [`extract_balls`] followed by [`equalize`].
pub fn cluster(y: &SymMatrix, k: usize) -> Result<Assignment> {
    let cover = extract_balls(y, k)?;
    equalize(&cover, y.order(), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster_matrix(labels: &[usize], k: usize) -> SymMatrix {
        Assignment::new(labels.to_vec(), k).unwrap().cluster_matrix()
    }

    #[test]
    fn exact_input_gives_true_clusters() {
        let labels = [1, 0, 2, 2, 0, 1, 0, 1, 2];
        let cover = extract_balls(&cluster_matrix(&labels, 3), 3).unwrap();
        assert_eq!(cover.sets, vec![vec![0, 5, 7], vec![1, 4, 6], vec![2, 3, 8]]);
    }

    #[test]
    fn identical_rows_are_split_into_capped_sets() {
        let y = SymMatrix::filled(8, 0.25);
        let cover = extract_balls(&y, 4).unwrap();
        assert_eq!(cover.len(), 4);
        assert!(cover.sets.iter().all(|s| s.len() == 2));
        cover.validate(8, 4).unwrap();
        let a = equalize(&cover, 8, 4).unwrap();
        assert!(a.is_balanced());
    }

    #[test]
    fn equalize_keeps_order_for_exact_cover() {
        let cover = BallCover {
            sets: vec![vec![2, 3], vec![0, 1], vec![4, 5]],
        };
        let a = equalize(&cover, 6, 3).unwrap();
        assert_eq!(a.labels(), &[1, 1, 0, 0, 2, 2]);
    }

    #[test]
    fn equalize_fills_deficient_set() {
        // n = 12, k = 3: sizes (4, 4, 1, 3) → the leftover set {11} tops up.
        let cover = BallCover {
            sets: vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![11], vec![8, 9, 10]],
        };
        let a = equalize(&cover, 12, 3).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn equalize_smallest_deficient_first() {
        let cover = BallCover {
            sets: vec![vec![0, 1, 2], vec![3], vec![4], vec![5, 6], vec![7]],
        };
        let a = equalize(&cover, 8, 2).unwrap();
        // Largest sets: {0,1,2} (3) and {5,6} (2) → labels 0 and 1 in cover order.
        assert_eq!(a.labels()[0..3], [0, 0, 0]);
        assert_eq!(a.labels()[5], 1);
        assert_eq!(a.labels()[6], 1);
        // Leftovers 3, 4, 7: the size-2 set needs 2, the size-3 set needs 1.
        assert_eq!(a.labels()[3], 1);
        assert_eq!(a.labels()[4], 1);
        assert_eq!(a.labels()[7], 0);
    }

    #[test]
    fn invalid_cover_rejected() {
        let cover = BallCover {
            sets: vec![vec![0, 1, 2], vec![3]],
        };
        assert!(equalize(&cover, 4, 2).is_err());
        let cover = BallCover {
            sets: vec![vec![0, 1], vec![1, 2]],
        };
        assert!(equalize(&cover, 4, 2).is_err());
    }

    #[test]
    fn uniform_matrix_gives_some_balanced_assignment() {
        let a = cluster(&SymMatrix::filled(12, 1.0 / 3.0), 3).unwrap();
        assert!(a.is_balanced());
    }
}

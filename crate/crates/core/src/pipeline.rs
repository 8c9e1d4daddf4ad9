//! End-to-end estimation: points → Ŷ → σ̂ → μ̂, plus a Lloyd's baseline.

use std::time::Instant;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::linalg::pairwise_sq_dists;
use crate::mixture::sq_dist;
use crate::rng::SeededRng;
use crate::rounding::{equalize, extract_balls_with_radius, RADIUS_DIVISOR};
use crate::sdp::{solve_sdp, SdpSolution, SolverConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringConfig {
    pub solver: SolverConfig,
    /// Rounding ball radius is `n / (radius_divisor · k)`.
    pub radius_divisor: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            solver: SolverConfig::default(),
            radius_divisor: RADIUS_DIVISOR,
        }
    }
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub distances_ms: f64,
    pub sdp_ms: f64,
    pub rounding_ms: f64,
    pub centers_ms: f64,
}

impl StageTimes {
    pub fn total_ms(&self) -> f64 {
        self.distances_ms + self.sdp_ms + self.rounding_ms + self.centers_ms
    }
}

#[derive(Clone, Debug)]
pub struct ClusteringResult {
    pub sdp: SdpSolution,
    pub assignment: Assignment,
    pub centers_hat: Vec<Vec<f64>>,
    pub runtime: StageTimes,
}

/// Empirical cluster means `μ̂_a = (k/n)·Σ_{σ̂_i = a} h_i`; the labels must be
/// balanced so that `n/k` is each cluster's size.
pub fn estimate_centers(points: &[Vec<f64>], labels: &Assignment) -> Result<Vec<Vec<f64>>> {
    if points.len() != labels.len() {
        return Err(Error::input(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    labels.check_balanced()?;
    let k = labels.k();
    let d = points.first().map_or(0, Vec::len);
    let mut centers = vec![vec![0.0; d]; k];
    for (p, &a) in points.iter().zip(labels.labels()) {
        for (c, x) in centers[a].iter_mut().zip(p) {
            *c += x;
        }
    }
    let scale = k as f64 / points.len() as f64;
    for c in centers.iter_mut() {
        c.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(centers)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Distances, SDP, rounding and center estimation in sequence. A
/// non-converged SDP is not an error; check `result.sdp.converged`.
pub fn cluster_dataset(
    points: &[Vec<f64>],
    k: usize,
    config: &ClusteringConfig,
) -> Result<ClusteringResult> {
    let n = points.len();
    if k < 2 || n < 4 || n % k != 0 {
        return Err(Error::input(format!(
            "need k >= 2, n >= 4 and n a multiple of k; got n = {n}, k = {k}"
        )));
    }
    let mut runtime = StageTimes::default();

    let t = Instant::now();
    let a = pairwise_sq_dists(points)?;
    runtime.distances_ms = ms_since(t);

    let t = Instant::now();
    let sdp = solve_sdp(&a, k, &config.solver)?;
    runtime.sdp_ms = ms_since(t);

    let t = Instant::now();
    let radius = n as f64 / (config.radius_divisor * k as f64);
    let cover = extract_balls_with_radius(&sdp.y, k, radius)?;
    let assignment = equalize(&cover, n, k)?;
    runtime.rounding_ms = ms_since(t);

    let t = Instant::now();
    let centers_hat = estimate_centers(points, &assignment)?;
    runtime.centers_ms = ms_since(t);

    Ok(ClusteringResult {
        sdp,
        assignment,
        centers_hat,
        runtime,
    })
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (a, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (a, d);
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding. Output labels are not forced to
/// be balanced. A cluster that empties is reseeded at the point farthest
/// from its current center.
pub fn lloyd_baseline(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Assignment> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(Error::input(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::input("points have mismatched dimensions"));
    }
    let mut rng = SeededRng::new(seed);

    let mut centers = vec![points[rng.below(n as u64) as usize].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.below(n as u64) as usize
        };
        centers.push(points[idx].clone());
        for (dist, p) in d2.iter_mut().zip(points) {
            *dist = dist.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (l, p) in labels.iter_mut().zip(points) {
            let (a, _) = nearest_center(p, &centers);
            if *l != a {
                *l = a;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&labels) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for a in 0..k {
            if counts[a] > 0 {
                centers[a] = sums[a].iter().map(|s| s / counts[a] as f64).collect();
            }
        }
        let empty: Vec<usize> = (0..k).filter(|&a| counts[a] == 0).collect();
        for a in empty {
            let far = (0..n)
                .max_by(|&i, &j| {
                    let di = sq_dist(&points[i], &centers[labels[i]]);
                    let dj = sq_dist(&points[j], &centers[labels[j]]);
                    di.total_cmp(&dj).then(j.cmp(&i))
                })
                .expect("n >= k >= 1");
            centers[a] = points[far].clone();
            labels[far] = a;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Assignment::new(labels, k)
}

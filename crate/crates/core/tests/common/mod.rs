//! Reference implementations used as test oracles. Everything here is
//! written from the definitions, deliberately naive, and shares no code with
//! the library beyond its data types.

#![allow(dead_code)]

use kmsdp::oracle::OracleInstance;
use kmsdp::rng::SeededRng;
use kmsdp::SymMatrix;

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// sorted descending.
pub fn jacobi_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.order();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

pub fn random_symmetric(n: usize, rng: &mut SeededRng, scale: f64) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| scale * rng.normal())
}

pub fn random_points(n: usize, d: usize, rng: &mut SeededRng, spread: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| spread * rng.normal()).collect()).collect()
}

pub fn naive_sq_dists(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            points
                .iter()
                .map(|q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect()
        })
        .collect()
}

/// Every labeling of `n` points into `k` clusters of equal size, each
/// partition listed once (labels canonical by first appearance).
pub fn balanced_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, k: usize, size: usize, labels: &mut Vec<usize>, counts: &mut Vec<usize>, used: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(labels.clone());
            return;
        }
        for a in 0..k.min(used + 1) {
            if counts[a] < size {
                counts[a] += 1;
                labels.push(a);
                rec(i + 1, n, k, size, labels, counts, used.max(a + 1), out);
                labels.pop();
                counts[a] -= 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, n / k, &mut Vec::new(), &mut vec![0; k], 0, &mut out);
    out
}

/// `min ⟨Y, A⟩` over all balanced cluster matrices `Y`.
pub fn min_balanced_objective(a: &SymMatrix, k: usize) -> f64 {
    let n = a.order();
    balanced_partitions(n, k)
        .iter()
        .map(|labels| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == labels[j] {
                        s += a.get(i, j);
                    }
                }
            }
            s
        })
        .fold(f64::INFINITY, f64::min)
}

fn eta(inst: &OracleInstance, labels: &[usize]) -> f64 {
    inst.points_bar
        .iter()
        .zip(labels)
        .map(|(h, &a)| h.iter().zip(&inst.centers[a]).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum()
}

/// `max #{j : F(j) ≠ σ*(j)}` over all `k^n` labelings `F` with `η(F) ≤ η(F*)`.
pub fn ip_worst_error_enumerated(inst: &OracleInstance) -> usize {
    let n = inst.points_bar.len();
    let k = inst.centers.len();
    let eta_star = eta(inst, &inst.labels);
    let mut labels = vec![0usize; n];
    let mut best = 0;
    loop {
        if eta(inst, &labels) <= eta_star {
            let changed = labels.iter().zip(&inst.labels).filter(|(a, b)| a != b).count();
            best = best.max(changed);
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// `min_π (1/n)·#{i : π(σ̂(i)) ≠ σ*(i)}` over all `k!` permutations.
pub fn misrate_enumerated(hat: &[usize], star: &[usize], k: usize) -> f64 {
    let n = hat.len();
    permutations(k)
        .iter()
        .map(|p| hat.iter().zip(star).filter(|(&h, &s)| p[h] != s).count())
        .min()
        .unwrap() as f64
        / n as f64
}

pub fn balanced_labels(n: usize, k: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    rng.shuffle(&mut labels);
    labels
}

pub fn cluster_matrix_of(labels: &[usize]) -> SymMatrix {
    SymMatrix::from_fn(labels.len(), |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 })
}

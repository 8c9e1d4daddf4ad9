mod common;

use common::*;
use kmsdp::harness::{run_experiment, summarize_records, LayoutKind, ModelConfig, NoiseKind, SweepConfig, SweepKind};
use kmsdp::harness::{ExperimentConfig, CSV_HEADER};
use kmsdp::linalg::min_eigenvalue;
use kmsdp::rng::SeededRng;
use kmsdp::*;
use proptest::prelude::*;

fn gaussian_data(n: usize, k: usize, d: usize, delta: f64, seed: u64) -> Dataset {
    let spec = MixtureSpec::with_layout(
        n,
        k,
        d,
        &CenterLayout::Simplex { delta },
        Noise::SphericalGaussian { sigma: 1.0 },
        1.0,
    )
    .unwrap();
    sample_dataset(&spec, seed).unwrap()
}

fn frob_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sym_matrix(max_n: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-10.0f64..10.0, n * n).prop_map(move |v| {
            SymMatrix::from_fn(n, |i, j| if i <= j { v[i * n + j] } else { v[j * n + i] })
        })
    })
}

/// (n, k) with n a multiple of k.
fn balanced_shape(max_per: usize, max_k: usize) -> impl Strategy<Value = (usize, usize)> {
    (2..=max_k, 2..=max_per).prop_map(|(k, per)| (k * per, k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs_with_orthonormal_vectors(m in sym_matrix(12)) {
        let e = sym_eig(&m).unwrap();
        let n = m.order();
        prop_assert!(frob_diff(&e.reconstruct(), &m) <= 1e-8 * (1.0 + m.frobenius_norm()));
        let mut off = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|r| e.vectors[r * n + a] * e.vectors[r * n + b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                off += (dot - want) * (dot - want);
            }
        }
        prop_assert!(off.sqrt() <= 1e-8);
    }

    #[test]
    fn psd_projection_is_psd_and_idempotent(m in sym_matrix(12)) {
        let n = m.order() as f64;
        let p = psd_project(&m).unwrap();
        prop_assert!(min_eigenvalue(&p).unwrap() >= -1e-9 * n);
        let pp = psd_project(&p).unwrap();
        prop_assert!(frob_diff(&p, &pp) <= 1e-8 * (1.0 + p.frobenius_norm()));
    }

    #[test]
    fn squared_distances_satisfy_relaxed_triangle(
        pts in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..12)
    ) {
        let a = pairwise_sq_dists(&pts).unwrap();
        let n = pts.len();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    prop_assert!(a.get(i, j) <= 2.0 * a.get(i, l) + 2.0 * a.get(l, j) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_balanced((n, k) in balanced_shape(10, 5), d in 1usize..6, seed: u64) {
        let data = gaussian_data(n, k, d.max(k), 3.0, seed);
        prop_assert_eq!(&data, &gaussian_data(n, k, d.max(k), 3.0, seed));
        let mut counts = vec![0; k];
        for &l in &data.labels {
            counts[l] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c == n / k));
    }

    #[test]
    fn truth_matrix_is_feasible((n, k) in balanced_shape(8, 5), seed: u64) {
        let mut rng = SeededRng::new(seed);
        let gt = ground_truth(&balanced_labels(n, k, &mut rng), k).unwrap();
        let r = feasibility(&gt.cluster_matrix, k);
        prop_assert!(r.row_sum_resid < 1e-12 && r.diag_resid == 0.0 && r.neg_entry == 0.0);
        prop_assert!(r.min_eig >= -1e-9);
        prop_assert!((gt.cluster_matrix.l1_norm() - (n * n / k) as f64).abs() < 1e-9);
    }

    #[test]
    fn affine_projection_is_idempotent(m in sym_matrix(12), k in 2usize..4) {
        let n = m.order();
        prop_assume!(n % k == 0 && n >= 4);
        let p = affine_project(&m, k).unwrap();
        let pp = affine_project(&p, k).unwrap();
        prop_assert!(frob_diff(&p, &pp) <= 1e-10 * (1.0 + p.frobenius_norm()));
        for (i, r) in p.row_sums().iter().enumerate() {
            prop_assert!((r - (n / k) as f64).abs() <= 1e-10 * (1.0 + m.frobenius_norm()));
            prop_assert_eq!(p.get(i, i), 1.0);
        }
    }

    #[test]
    fn misrate_ignores_relabeling_and_beats_chance(
        k in 1usize..6,
        raw in prop::collection::vec((0usize..6, 0usize..6), 1..40),
        seed: u64,
    ) {
        let hat: Vec<usize> = raw.iter().map(|p| p.0 % k).collect();
        let star: Vec<usize> = raw.iter().map(|p| p.1 % k).collect();
        let (base, _) = misrate(&hat, &star, k).unwrap();
        let mut rng = SeededRng::new(seed);
        let mut pi: Vec<usize> = (0..k).collect();
        rng.shuffle(&mut pi);
        let hat2: Vec<usize> = hat.iter().map(|&l| pi[l]).collect();
        let star2: Vec<usize> = star.iter().map(|&l| pi[l]).collect();
        prop_assert_eq!(misrate(&hat2, &star, k).unwrap().0, base);
        prop_assert_eq!(misrate(&hat, &star2, k).unwrap().0, base);
        prop_assert!(base <= 1.0 - 1.0 / k as f64 + 1e-12);
    }

    #[test]
    fn l1_error_is_a_metric_on_cluster_matrices((n, k) in balanced_shape(6, 4), seed: u64) {
        let mut rng = SeededRng::new(seed);
        let [x, y, z] = [0; 3].map(|_| cluster_matrix_of(&balanced_labels(n, k, &mut rng)));
        let d = |a: &SymMatrix, b: &SymMatrix| l1_error(a, b).unwrap().0;
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        if x != y {
            prop_assert!(d(&x, &y) > 0.0);
        }
    }

    #[test]
    fn ball_cover_is_a_capped_partition(
        (n, k) in balanced_shape(10, 5),
        noise in 0.0f64..0.8,
        seed: u64,
    ) {
        let mut rng = SeededRng::new(seed);
        let star = cluster_matrix_of(&balanced_labels(n, k, &mut rng));
        let y = SymMatrix::from_fn(n, |i, j| {
            if i == j { 1.0 } else { (star.get(i, j) + noise * rng.normal()).clamp(0.0, 1.0) }
        });
        let cover = extract_balls(&y, k).unwrap();
        prop_assert!(cover.validate(n, k).is_ok());
        let mut seen: Vec<usize> = cover.sets.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let assignment = equalize(&cover, n, k).unwrap();
        prop_assert!(assignment.is_balanced());
    }

    #[test]
    fn eta_beta_identity(seed: u64, k in 2usize..4, per in 2usize..5, pick in prop::collection::vec(0usize..4, 12)) {
        let n = k * per;
        let data = gaussian_data(n, k, 3.max(k), 2.0, seed);
        let inst = build_instance(&data).unwrap();
        let f: Vec<usize> = (0..n).map(|j| pick[j % pick.len()] % k).collect();
        let lhs = inst.eta(&inst.labels) - inst.eta(&f);
        let rhs: f64 = (0..n).map(|j| inst.beta(j, f[j])).sum::<f64>() / inst.c;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn ip_error_dominates_nearest_center_assignment(seed: u64, k in 2usize..5, delta in 0.5f64..8.0) {
        let data = gaussian_data(8 * k, k, 6, delta, seed);
        let inst = build_instance(&data).unwrap();
        let f = oracle_assign(&inst);
        let wrong = (0..inst.n()).filter(|&j| f.label(j) != inst.labels[j]).count();
        prop_assert!(ip_worst_error(&inst).count >= wrong);
    }

    #[test]
    fn shrinking_noise_never_raises_ip_error(seed: u64, k in 2usize..4, delta in 0.5f64..4.0) {
        let data = gaussian_data(10 * k, k, 4, delta, seed);
        let spec = data.spec.clone().unwrap();
        let noise: Vec<Vec<f64>> = (0..data.n()).map(|i| data.noise(i).unwrap()).collect();
        let mut last = usize::MAX;
        for t in [1.0, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0] {
            let points = data.labels.iter().zip(&noise)
                .map(|(&l, g)| spec.centers[l].iter().zip(g).map(|(m, x)| m + t * x).collect())
                .collect();
            let scaled = Dataset { points, ..data.clone() };
            let count = ip_worst_error(&build_instance(&scaled).unwrap()).count;
            prop_assert!(count <= last, "t = {t}: {count} > {last}");
            last = count;
        }
        prop_assert_eq!(last, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rounding_recovers_any_truth_matrix(k in 2usize..=10, per in 1usize..=100, seed: u64) {
        let n = k * per;
        prop_assume!(n >= 4);
        let mut rng = SeededRng::new(seed);
        let labels = balanced_labels(n, k, &mut rng);
        let got = cluster(&cluster_matrix_of(&labels), k).unwrap();
        prop_assert_eq!(misrate(got.labels(), &labels, k).unwrap().0, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn converged_solutions_are_feasible_and_beat_the_truth(
        (n, k) in balanced_shape(8, 3),
        s in 1.0f64..8.0,
        seed: u64,
    ) {
        prop_assume!(n >= 4);
        let data = gaussian_data(n, k, 4, s, seed);
        let a = pairwise_sq_dists(&data.points).unwrap();
        let cfg = SolverConfig::default();
        let sol = solve_sdp(&a, k, &cfg).unwrap();
        prop_assume!(sol.converged);
        let truth = ground_truth(&data.labels, k).unwrap().cluster_matrix;
        let at_truth = truth.inner(&a);
        prop_assert!(
            sol.objective <= at_truth + cfg.tol_dual * (1.0 + at_truth.abs()),
            "{} vs {at_truth}", sol.objective
        );
        let r = feasibility(&sol.y, k);
        let tol = 10.0 * cfg.tol_primal;
        prop_assert!(r.row_sum_resid <= tol && r.diag_resid <= tol && r.neg_entry <= tol, "{r:?}");
        prop_assert!(r.min_eig >= -tol * n as f64, "{r:?}");
    }

    #[test]
    fn relabeling_points_permutes_the_solution(k in 2usize..4, seed: u64) {
        let n = 6 * k;
        let data = gaussian_data(n, k, 4, 8.0, seed);
        let mut rng = SeededRng::new(seed ^ 0x5eed);
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let mut moved = vec![Vec::new(); n];
        for (i, p) in data.points.iter().enumerate() {
            moved[perm[i]] = p.clone();
        }
        let cfg = SolverConfig::default();
        let y = solve_sdp(&pairwise_sq_dists(&data.points).unwrap(), k, &cfg).unwrap().y;
        let y_moved = solve_sdp(&pairwise_sq_dists(&moved).unwrap(), k, &cfg).unwrap().y;
        let diff = frob_diff(&y.permuted(&perm), &y_moved);
        prop_assert!(diff <= 1e-3 * y.frobenius_norm(), "diff = {diff}");
    }

    #[test]
    fn clustering_is_deterministic_and_exact_when_rounding_is(k in 2usize..4, s in 2.0f64..10.0, seed: u64) {
        let data = gaussian_data(10 * k, k, 5, s, seed);
        let cfg = ClusteringConfig::default();
        let r1 = cluster_dataset(&data.points, k, &cfg).unwrap();
        let r2 = cluster_dataset(&data.points, k, &cfg).unwrap();
        prop_assert_eq!(&r1.sdp.y, &r2.sdp.y);
        prop_assert_eq!(&r1.assignment, &r2.assignment);
        prop_assert_eq!(&r1.centers_hat, &r2.centers_hat);
        let truth = ground_truth(&data.labels, k).unwrap().cluster_matrix;
        if r1.sdp.converged && elementwise_round(&r1.sdp.y) == truth {
            prop_assert_eq!(misrate(r1.assignment.labels(), &data.labels, k).unwrap().0, 0.0);
        }
    }
}

#[test]
fn ball_noise_marginal_has_subgaussian_scale() {
    for d in [2, 10, 50] {
        let spec = MixtureSpec::with_layout(100_000, 2, d, &CenterLayout::TwoPoint { delta: 1.0 }, Noise::UniformBall, 1.0).unwrap();
        let data = sample_dataset(&spec, 11).unwrap();
        let mut rng = SeededRng::new(12);
        let a = rng.unit_vector(d);
        let proj: Vec<f64> = (0..data.n())
            .map(|i| data.noise(i).unwrap().iter().zip(&a).map(|(g, x)| g * x).sum())
            .collect();
        let mean = proj.iter().sum::<f64>() / proj.len() as f64;
        let var = proj.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / proj.len() as f64;
        assert!(var.sqrt() <= 2.0 / (d as f64).sqrt(), "d = {d}: std {}", var.sqrt());
        assert!(proj.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }
}

#[test]
fn rounding_is_stable_under_small_perturbations() {
    // The misrate per unit of relative ℓ₁ error is measured, not bounded.
    let mut worst: f64 = 0.0;
    let mut rng = SeededRng::new(13);
    for trial in 0..200 {
        let k = 2 + trial % 4;
        let n = k * (5 + trial % 20);
        let labels = balanced_labels(n, k, &mut rng);
        let star = cluster_matrix_of(&labels);
        let budget = n as f64 / (16.0 * k as f64) * rng.uniform();
        // Spend the budget on a few random symmetric entry pairs.
        let mut y = star.clone();
        let mut spent = 0.0;
        while spent < budget {
            let (i, j) = (rng.below(n as u64) as usize, rng.below(n as u64) as usize);
            if i == j {
                continue;
            }
            let step = (budget - spent).min(2.0) / 2.0;
            let v = (y.get(i, j) + if star.get(i, j) > 0.5 { -step } else { step }).clamp(0.0, 1.0);
            spent += 2.0 * (v - y.get(i, j)).abs();
            y.set(i, j, v);
            y.set(j, i, v);
            if step == 0.0 {
                break;
            }
        }
        let (l1, ratio) = l1_error(&y, &star).unwrap();
        assert!(l1 <= n as f64 / (16.0 * k as f64) + 1e-9);
        let rate = misrate(cluster(&y, k).unwrap().labels(), &labels, k).unwrap().0;
        if ratio > 0.0 {
            worst = worst.max(rate / ratio);
        } else {
            assert_eq!(rate, 0.0);
        }
    }
    println!("rounding stability: max misrate / (‖Y − Y*‖₁/‖Y*‖₁) = {worst:.3}");
}

fn small_experiment(seed: u64) -> ExperimentConfig {
    let model = ModelConfig {
        n: 12,
        k: 2,
        d: 3,
        layout: LayoutKind::TwoPoint,
        center_file: None,
        noise: NoiseKind::Gaussian,
        sigma: 1.0,
        ball_constant: 1.0,
    };
    let sweep = SweepConfig { kind: SweepKind::Snr, values: vec![2.0, 4.0, 6.0], replicates: 3, base_seed: seed, threads: 1 };
    let mut cfg = ExperimentConfig::new(model, sweep);
    cfg.record_runtime = false;
    cfg
}

#[test]
fn replicate_seeds_are_distinct() {
    let mut cfg = small_experiment(0);
    cfg.sweep.values = (1..=20).map(f64::from).collect();
    cfg.sweep.replicates = 500;
    let mut seeds: Vec<u64> = (0..20).flat_map(|p| (0..500).map(move |r| (p, r))).map(|(p, r)| cfg.seed(p, r)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 20 * 500);
}

#[test]
fn summary_is_a_function_of_the_config() {
    let cfg = small_experiment(21);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.len(), 9);
    assert_eq!(summarize_records(&a).to_table(), summarize_records(&b).to_table());
    assert_eq!(CSV_HEADER.len(), a[0].to_fields().len());
}

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kmsdp::{cluster, psd_project, solve_sdp, sym_eig, PsdProjector, SolverConfig};
use kmsdp_bench::{distance_matrix, low_rank_plus_negative};

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen");
    for n in [50, 200] {
        let m = low_rank_plus_negative(n, 1);
        group.bench_with_input(BenchmarkId::new("sym_eig", n), &m, |b, m| b.iter(|| sym_eig(m).unwrap()));
        group.bench_with_input(BenchmarkId::new("psd_project", n), &m, |b, m| {
            b.iter(|| psd_project(m).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("projector_warm", n), &m, |b, m| {
            let mut p = PsdProjector::new();
            p.project(m).unwrap();
            b.iter(|| p.project(m).unwrap())
        });
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_sdp");
    group.sample_size(10);
    for n in [50, 100] {
        let a = distance_matrix(n, 6.0, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| solve_sdp(a, 2, &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn rounding(c: &mut Criterion) {
    let a = distance_matrix(200, 6.0, 3);
    let y = solve_sdp(&a, 2, &SolverConfig::default()).unwrap().y;
    c.bench_function("cluster/200", |b| b.iter(|| cluster(&y, 2).unwrap()));
}

criterion_group!(benches, eigen, solver, rounding);
criterion_main!(benches);

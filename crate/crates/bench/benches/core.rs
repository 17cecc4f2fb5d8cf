use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dyadic_sparse::maximal::pairing_ms;
use dyadic_sparse::measure::{build_mu, build_nu};
use dyadic_sparse::pointsets::{construct_p, construct_z, verify_separation};
use dyadic_sparse::sparse::{candidate_pool, check_sparse, greedy_max_form, RectCollection};
use num_rational::BigRational;

fn bench_construct_p(c: &mut Criterion) {
    let mut g = c.benchmark_group("construct_p");
    for m in [3u32, 5, 7] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| construct_p(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn bench_separation(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify_separation");
    g.sample_size(10);
    for m in [3u32, 4, 5] {
        let p = construct_p(m).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &p, |b, p| {
            b.iter(|| verify_separation(black_box(p)))
        });
    }
    g.finish();
}

fn bench_ms_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("pairing_ms");
    g.sample_size(10);
    for (m, k) in [(3u32, 1u32), (4, 1), (5, 2)] {
        let p = construct_p(m).unwrap();
        let z = construct_z(&p, k).unwrap();
        let (mu, nu) = (build_mu(&p), build_nu(&z).unwrap());
        g.bench_with_input(BenchmarkId::new("m_k", format!("{m}_{k}")), &(mu, nu), |b, (mu, nu)| {
            b.iter(|| pairing_ms(black_box(mu), black_box(nu)).unwrap())
        });
    }
    g.finish();
}

fn bench_check_sparse(c: &mut Criterion) {
    let mut g = c.benchmark_group("check_sparse");
    g.sample_size(10);
    let eta = BigRational::new(1.into(), 4.into());
    for m in [3u32, 4] {
        let p = construct_p(m).unwrap();
        let z = construct_z(&p, 1).unwrap();
        let (mu, nu) = (build_mu(&p), build_nu(&z).unwrap());
        let pool = candidate_pool(&mu, &nu, 2 * m + 3);
        let found = greedy_max_form(&mu, &nu, &eta, &pool, 500).unwrap();
        let s = RectCollection::new(found.collection);
        g.bench_with_input(BenchmarkId::from_parameter(m), &s, |b, s| {
            b.iter(|| check_sparse(black_box(s), &eta).unwrap())
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_construct_p,
    bench_separation,
    bench_ms_eval,
    bench_check_sparse
);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phdae_core::condense::{dirac_condense, extended_condense, lagrange_condense, ExtendedVariant};
use phdae_core::oracle::{random_dirac, random_extended_regular, random_lagrange};
use phdae_core::TolerancePolicy;

const SIZES: [usize; 3] = [5, 10, 20];

fn condense(c: &mut Criterion) {
    let tol = TolerancePolicy::with_rank_tol(1e-9);
    let mut g = c.benchmark_group("condense");
    for n in SIZES {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let lp = random_lagrange(&mut rng, n);
        let dp = random_dirac(&mut rng, n);
        let ext = random_extended_regular(&mut rng, n);
        g.bench_with_input(BenchmarkId::new("lagrange", n), &lp, |b, lp| b.iter(|| lagrange_condense(lp, &tol).unwrap()));
        g.bench_with_input(BenchmarkId::new("dirac", n), &dp, |b, dp| b.iter(|| dirac_condense(dp, &tol).unwrap()));
        g.bench_with_input(BenchmarkId::new("extended", n), &ext, |b, ext| {
            b.iter(|| extended_condense(ext, ExtendedVariant::LagrangeFirst, &tol).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, condense);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phdae_core::analyze::{check_dh_equivalence, index, DHVariant, Pencil};
use phdae_core::convert::to_x_representation;
use phdae_core::oracle::{random_dh, random_extended_regular, random_weierstrass};
use phdae_core::TolerancePolicy;

const SIZES: [usize; 3] = [5, 10, 20];

fn analyze(c: &mut Criterion) {
    let tol = TolerancePolicy::with_rank_tol(1e-9);
    let mut g = c.benchmark_group("analyze");
    for n in SIZES {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let w = random_weierstrass(&mut rng, n, 3).pencil;
        let dh = Pencil::try_from(&random_dh(&mut rng, n)).unwrap();
        let ext = random_extended_regular(&mut rng, n);
        g.bench_with_input(BenchmarkId::new("index", n), &w, |b, p| b.iter(|| index(p, &tol).unwrap()));
        g.bench_with_input(BenchmarkId::new("dh_check", n), &dh, |b, p| {
            b.iter(|| check_dh_equivalence(p, DHVariant::WithQ, &tol).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("x_representation", n), &ext, |b, s| {
            b.iter(|| to_x_representation(s, &tol).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, analyze);
criterion_main!(benches);

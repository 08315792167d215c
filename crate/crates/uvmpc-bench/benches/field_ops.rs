//! Raw field arithmetic across prime widths: the unit costs every protocol
//! counter is denominated in.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use uvmpc_core::{FieldElem, FieldParams};

fn rand_elem(f: &FieldParams, rng: &mut ChaCha20Rng) -> FieldElem {
    let mut buf = vec![0u8; (f.lambda() as usize + 7) / 8 + 8];
    rng.fill_bytes(&mut buf);
    f.elem(num_bigint::BigUint::from_bytes_be(&buf))
}

fn bench_field_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("field");
    for bits in [64u32, 256, 1024] {
        let f = FieldParams::generate(bits, Some(1)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let a = rand_elem(&f, &mut rng);
        let b = rand_elem(&f, &mut rng);
        let e = f.prime() - 2u8;

        group.bench_with_input(BenchmarkId::new("mul", bits), &bits, |bch, _| {
            bch.iter(|| std::hint::black_box(f.mul(&a, &b)))
        });
        group.bench_with_input(BenchmarkId::new("exp", bits), &bits, |bch, _| {
            bch.iter(|| std::hint::black_box(f.pow(&a, &e)))
        });
        group.bench_with_input(BenchmarkId::new("inv", bits), &bits, |bch, _| {
            bch.iter(|| std::hint::black_box(f.inv(&a).unwrap()))
        });
    }
    group.finish();
}

fn bench_prime_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("prime_gen");
    group.sample_size(10);
    for bits in [64u32, 256] {
        group.bench_with_input(BenchmarkId::from_parameter(bits), &bits, |bch, &bits| {
            let mut seed = 0u64;
            bch.iter(|| {
                seed += 1;
                std::hint::black_box(FieldParams::generate(bits, Some(seed)).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_field_ops, bench_prime_generation);
criterion_main!(benches);

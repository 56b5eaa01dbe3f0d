use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stablab::ou_stein::functions::Cosine;
use stablab::ou_stein::{FracLaplacian, LaplacianQuadrature};
use stablab::rng::from_seed;
use stablab::sampler::VectorSampler;
use stablab::transport::{wasserstein1_exact, EmpiricalMeasure};
use stablab::StableLaw;

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_1000");
    for name in ["uniform", "atomic", "cantor", "mixture"] {
        let law = StableLaw::preset(1.5, name, 2).unwrap();
        let s = VectorSampler::new(&law);
        let mut rng = from_seed(1);
        g.bench_function(name, |b| b.iter(|| s.sample_n(1000, &mut rng)));
    }
    g.finish();
}

fn psi(c: &mut Criterion) {
    let law = StableLaw::preset(1.5, "mixture", 2).unwrap();
    c.bench_function("psi_mixture", |b| b.iter(|| law.psi_value(black_box(&[0.7, -1.3]))));
}

fn assignment(c: &mut Criterion) {
    let law = StableLaw::preset(1.5, "uniform", 2).unwrap();
    let s = VectorSampler::new(&law);
    let mut g = c.benchmark_group("w1_exact");
    g.sample_size(10);
    for n in [128usize, 512, 1024] {
        let p = EmpiricalMeasure::new(s.sample_n(n, &mut from_seed(2))).unwrap();
        let q = EmpiricalMeasure::new(s.sample_n(n, &mut from_seed(3))).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| wasserstein1_exact(&p, &q).unwrap()));
    }
    g.finish();
}

fn fractional_operator(c: &mut Criterion) {
    let law = StableLaw::preset(1.5, "tilted", 2).unwrap();
    let op = FracLaplacian::new(&law, LaplacianQuadrature::default()).unwrap();
    let h = Cosine { a: vec![0.8, -0.4] };
    c.bench_function("frac_laplacian_cosine", |b| b.iter(|| op.apply(&h, black_box(&[0.5, 1.0])).unwrap()));
}

criterion_group!(benches, sampling, psi, assignment, fractional_operator);
criterion_main!(benches);

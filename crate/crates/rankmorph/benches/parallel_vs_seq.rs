//! Compares the rayon kernels against their sequential fallbacks on the
//! two hot loops: rank-image morphology and the pairwise loss sweep.
//!
//! Run with `cargo bench -p rankmorph`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rankmorph::color::{ColorImage, ColorValue};
use rankmorph::mlp::MlpParams;
use rankmorph::morphology::{
    rank_dilate_par, rank_dilate_seq, rank_erode_par, rank_erode_seq, StructuringElement,
};
use rankmorph::ordering::{RankLut, ReducedMapping};
use rankmorph::sco::{batch_soft_loss, batch_soft_loss_seq};

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, n_colors: usize) -> ColorImage {
    let palette: Vec<ColorValue> = (0..n_colors)
        .map(|_| ColorValue::rgb8(rng.random(), rng.random(), rng.random()))
        .collect();
    let pixels: Vec<ColorValue> = (0..w * h)
        .map(|_| palette[rng.random_range(0..palette.len())].clone())
        .collect();
    ColorImage::from_pixels(w, h, &pixels).unwrap()
}

fn bench_morphology(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let img = random_image(&mut rng, 128, 128, 64);
    let lut = RankLut::build(&ReducedMapping::lex_rgb(), &img).unwrap();
    let ranks = lut.encode(&img).unwrap();

    let mut group = c.benchmark_group("rank_morphology");
    for radius in [2u32, 5] {
        let se = StructuringElement::disk(radius);
        group.bench_with_input(BenchmarkId::new("dilate_seq", radius), &se, |b, se| {
            b.iter(|| rank_dilate_seq(&ranks, se).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dilate_par", radius), &se, |b, se| {
            b.iter(|| rank_dilate_par(&ranks, se).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("erode_seq", radius), &se, |b, se| {
            b.iter(|| rank_erode_seq(&ranks, se).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("erode_par", radius), &se, |b, se| {
            b.iter(|| rank_erode_par(&ranks, se).unwrap())
        });
    }
    group.finish();
}

fn bench_pairwise_loss(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let family = ReducedMapping::lex_family();
    let params = MlpParams::glorot(&mut rng);

    let mut group = c.benchmark_group("batch_soft_loss");
    group.sample_size(20);
    for size in [256usize, 1024] {
        let batch: Vec<ColorValue> = (0..size)
            .map(|_| ColorValue::rgb8(rng.random(), rng.random(), rng.random()))
            .collect();
        group.bench_with_input(BenchmarkId::new("seq", size), &batch, |b, batch| {
            b.iter(|| batch_soft_loss_seq(&params, batch, &family, 1.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("par", size), &batch, |b, batch| {
            b.iter(|| batch_soft_loss(&params, batch, &family, 1.0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_morphology, bench_pairwise_loss);
criterion_main!(benches);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use olfactor::analyze::auroc;
use olfactor::cil::{total_loss, LossConfig};
use olfactor::hmfm::{encode, encode_backward, HmfmConfig, HmfmParams};
use olfactor::smiles::parse_smiles;
use olfactor::synthetic::random_smiles;
use olfactor::train::{fit, Model, ModelConfig, ModelMode, TrainConfig, Trainer};
use olfactor::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

fn parsing(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let corpus: Vec<String> = (0..256).map(|_| random_smiles(&mut rng)).collect();
    c.bench_function("parse_smiles/256", |b| {
        b.iter(|| {
            for s in &corpus {
                black_box(parse_smiles(s).unwrap());
            }
        })
    });
}

fn encoder(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let config = HmfmConfig {
        dim: 64,
        ..HmfmConfig::default()
    };
    let params = HmfmParams::init(22, &config, &mut rng).unwrap();
    let x = uniform(&mut rng, 32, 22, -1.0, 1.0);
    let upstream = uniform(&mut rng, 32, 128, -1.0, 1.0);
    c.bench_function("hmfm/encode 32x22 d64", |b| {
        b.iter(|| black_box(encode(&x, &params).unwrap()))
    });
    c.bench_function("hmfm/backward 32x22 d64", |b| {
        b.iter(|| black_box(encode_backward(&x, &params, &upstream).unwrap()))
    });
}

fn loss(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let logits = uniform(&mut rng, 32, 154, -4.0, 4.0);
    let y = Matrix::from_fn(32, 154, |_, _| if rng.random_bool(0.03) { 1.0 } else { 0.0 });
    let s = uniform(&mut rng, 32, 22, 0.0, 1.0);
    let cfg = LossConfig::default();
    c.bench_function("cil/total_loss 32x154", |b| {
        b.iter(|| black_box(total_loss(&logits, &y, &s, &cfg, None).unwrap()))
    });
}

fn metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scores: Vec<f64> = (0..5000).map(|_| rng.random_range(0.0..1.0)).collect();
    let labels: Vec<bool> = (0..5000).map(|_| rng.random_bool(0.1)).collect();
    c.bench_function("analyze/auroc 5000", |b| {
        b.iter(|| black_box(auroc(&scores, &labels)))
    });
}

fn training(c: &mut Criterion) {
    let data = olfactor::synthetic::generate(&Default::default()).unwrap();
    let report = olfactor::smiles::clean_dataset(&data.records);
    let vocab = olfactor::train::LabelVocabulary::from_records(report.kept_records());
    let samples = olfactor::train::build_samples(&report, &vocab).unwrap();
    let config = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for mode in [ModelMode::Mlp, ModelMode::Graph] {
        let model = Model::new(ModelConfig {
            mode,
            hidden_dims: vec![64, 64],
            hmfm: HmfmConfig {
                dim: 32,
                ..HmfmConfig::default()
            },
            input_dim: olfactor::featurize::ATOM_FEATURES,
            num_labels: vocab.len(),
            seed: 0,
        })
        .unwrap();
        group.bench_function(format!("epoch {mode:?} 200 molecules"), |b| {
            b.iter_batched(
                || Trainer::new(model.clone(), config, LossConfig::default()).unwrap(),
                |mut t| black_box(fit(&mut t, &samples, &[], |_| {}).unwrap()),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, parsing, encoder, loss, metrics, training);
criterion_main!(benches);

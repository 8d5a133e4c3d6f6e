use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stormlens::data::{prepare, synth_generate, PlantSpec};
use stormlens::lime::explain_local;
use stormlens::model::{train, LstmParams};
use stormlens::shap::{exact_shapley, gradient_shap, kernel_shap};
use stormlens::{Background, Discretizer, LimeConfig, LstmModel, Mat, TrainConfig};

struct Fixture {
    model: LstmModel,
    background: Background,
    sample: Mat,
    rows: Mat,
}

fn fixture() -> Fixture {
    let samples = synth_generate(40, 20, 7, &PlantSpec::default()).unwrap();
    let prep = prepare(&samples, 0.8, 7, 10).unwrap();
    let config = TrainConfig {
        hidden: 8,
        epochs: 2,
        learning_rate: 5e-3,
        ..TrainConfig::default()
    };
    let params: LstmParams = train(&prep.train, &config).unwrap().params;
    let windows: Vec<Mat> = prep.train.windows.iter().map(|w| w.data.clone()).collect();
    let finals: Vec<Vec<f64>> = windows.iter().map(|w| w.row(w.rows() - 1).to_vec()).collect();
    Fixture {
        model: LstmModel::new(params).unwrap(),
        background: Background::sample(&windows, 10, 1).unwrap(),
        sample: prep.test.windows[0].data.clone(),
        rows: Mat::from_rows(&finals).unwrap(),
    }
}

fn bench_forward(c: &mut Criterion) {
    let f = fixture();
    c.bench_function("lstm_forward_t10_h8", |b| b.iter(|| f.model.forward(black_box(&f.sample)).unwrap()));
}

fn bench_shap(c: &mut Criterion) {
    let f = fixture();
    let mut g = c.benchmark_group("shap");
    g.sample_size(10);
    g.bench_function("exact_d12", |b| b.iter(|| exact_shapley(&f.model, black_box(&f.sample), &f.background).unwrap()));
    for n in [256, 1024] {
        g.bench_with_input(BenchmarkId::new("kernel_d12", n), &n, |b, &n| {
            b.iter(|| kernel_shap(&f.model, black_box(&f.sample), &f.background, n, 3).unwrap())
        });
    }
    g.bench_function("gradient_d12", |b| {
        b.iter(|| gradient_shap(&f.model, black_box(&f.sample), &f.background, 8, 3).unwrap())
    });
    g.finish();
}

fn bench_lime(c: &mut Criterion) {
    let f = fixture();
    let names = stormlens::data::feature_names();
    let disc = Discretizer::fit(&f.rows, &names).unwrap();
    let config = LimeConfig::default();
    let mut g = c.benchmark_group("lime");
    g.sample_size(10);
    g.bench_function("explain_local_5000", |b| {
        b.iter(|| explain_local(&f.model, black_box(&f.sample), &disc, &config, 3).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_forward, bench_shap, bench_lime);
criterion_main!(benches);

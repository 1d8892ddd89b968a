use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edf_calibration::classical::bootstrap_null;
use edf_calibration::par;
use edf_calibration::simulate::{generate_trial, power_study, ScenarioConfig, TestSpec};
use edf_calibration::universal::{subsampled_test, SplitConfig, StatisticKind};

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn bootstrap(c: &mut Criterion) {
    let data = generate_trial(&ScenarioConfig::new(20_000, 0.9), 1).unwrap();
    let mut group = c.benchmark_group("bootstrap_null_n20000_b100");
    group.sample_size(10);
    for (name, seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| bootstrap_null(&data.sample, 100, 7).unwrap());
        });
    }
    par::set_sequential(false);
    group.finish();
}

fn subsampled(c: &mut Criterion) {
    let data = generate_trial(&ScenarioConfig::new(20_000, 0.8), 2).unwrap();
    let mut group = c.benchmark_group("subsampled_split_n20000");
    group.sample_size(10);
    for (kind, b_max) in [(StatisticKind::Split, 200), (StatisticKind::MeanPower, 20)] {
        let cfg = SplitConfig {
            b_max,
            seed: 3,
            ..SplitConfig::default()
        };
        for (name, seq) in modes() {
            group.bench_function(BenchmarkId::new(kind.label(true), name), |b| {
                par::set_sequential(seq);
                b.iter(|| subsampled_test(&data.sample, &cfg, kind).unwrap());
            });
        }
    }
    par::set_sequential(false);
    group.finish();
}

fn study(c: &mut Criterion) {
    let cells = [ScenarioConfig::new(5000, 0.8)];
    let tests = [TestSpec::universal(StatisticKind::Split, 0.5, 20)];
    let mut group = c.benchmark_group("power_study_n5000_20_trials");
    group.sample_size(10);
    for (name, seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| power_study(&cells, &tests, 20, 5).unwrap());
        });
    }
    par::set_sequential(false);
    group.finish();
}

criterion_group!(benches, bootstrap, subsampled, study);
criterion_main!(benches);

//! Sequential versus rayon execution of the two replicate loops: bootstrap
//! resamples of one study, and Monte Carlo worlds of a violation scenario.
//!
//! Both paths produce identical numbers; only wall time should differ.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mbe_core::estimator::{bootstrap_ci, BootstrapConfig, BootstrapMode, EffectScale, StudyData};
use mbe_core::glm::{fit_records, FitOptions, ModelSpec};
use mbe_core::synth::{generate, GeneratorConfig};
use mbe_core::violations::{run_scenario, Scenario, ScenarioKind};
use mbe_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bootstrap(c: &mut Criterion) {
    let world = generate(&GeneratorConfig::with_seed(1)).unwrap();
    let fit = fit_records(&world.pre.records, &ModelSpec::default_spec(), &FitOptions::default()).unwrap();
    let treated = world.post_treated();
    let data = StudyData {
        pre: &world.pre.records,
        post_treated: &treated,
    };

    let mut group = c.benchmark_group("bootstrap_500");
    for mode in [BootstrapMode::FixedModel, BootstrapMode::Full] {
        for (name, execution) in MODES {
            let cfg = BootstrapConfig {
                n_replicates: 500,
                seed: 7,
                mode,
                execution,
                ..BootstrapConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(format!("{mode:?}"), name), &cfg, |b, cfg| {
                b.iter(|| {
                    bootstrap_ci(
                        black_box(&data),
                        &fit,
                        EffectScale::RiskDifference,
                        cfg,
                        &FitOptions::default(),
                    )
                })
            });
        }
    }
    group.finish();
}

fn scenario(c: &mut Criterion) {
    let s = Scenario {
        n_replicates: 100,
        ..Scenario::preset(ScenarioKind::Baseline, 3)
    };
    let mut group = c.benchmark_group("baseline_100_worlds");
    for (name, execution) in MODES {
        group.bench_function(name, |b| b.iter(|| run_scenario(black_box(&s), execution).unwrap()));
    }
    group.finish();
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(10).configure_from_args();
    targets = bootstrap, scenario
);
criterion_main!(benches);

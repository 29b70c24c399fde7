use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nlu_core::synthetic;
use nlu_core::taskmodels::{
    batch_gradients, build_model, evaluate, prepare_classification, Arch, Task, TaskConfig,
};
use nlu_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn setup() -> (
    nlu_core::taskmodels::Network,
    Vec<nlu_core::taskmodels::Example>,
) {
    let corpus = synthetic::emotion_corpus(256, 1);
    let cfg = TaskConfig::with_arch(Task::Emotion, Arch::Bilstm);
    let prepared = prepare_classification(&corpus, &cfg).expect("synthetic corpus prepares");
    let net = build_model(
        &prepared.config,
        prepared.vocab.table_size(),
        prepared.label_names.len(),
        None,
    )
    .expect("default widths build");
    (net, prepared.train)
}

fn gradients(c: &mut Criterion) {
    let (net, train) = setup();
    let batch: Vec<usize> = (0..32).collect();
    let mut group = c.benchmark_group("batch_gradients_bilstm_32");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                batch_gradients(&net, &train, black_box(&batch), 42, 0, exec).expect("gradients")
            })
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let (net, train) = setup();
    let mut group = c.benchmark_group("evaluate_bilstm");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| evaluate(&net, black_box(&train), exec).expect("evaluation"))
        });
    }
    group.finish();
}

criterion_group!(benches, gradients, evaluation);
criterion_main!(benches);

//! Sequential versus data-parallel execution of the hot loops: per-program
//! featurization, vocabulary counting, Gram matrices and grid search.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use jstrack::features::{fit_vocabulary, vectorize_with, FeatureModelSpec, FeatureVector};
use jstrack::learn::grid::{grid_search, ocsvm_objective, GridSpec};
use jstrack::learn::{Gram, KernelSpec, Points, SolverOptions};
use jstrack::par::Exec;
use jstrack::pipeline::featurize_records;
use jstrack::synth::{synth_corpus, SynthConfig};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn corpus() -> jstrack::corpus::Dataset {
    synth_corpus(&SynthConfig::default()).expect("synthetic corpus")
}

fn vectors(spec: &FeatureModelSpec) -> Vec<FeatureVector> {
    let d = corpus();
    let (terms, _) = featurize_records(&d.records, spec, Exec::default());
    let vocab = fit_vocabulary(&terms, spec, Exec::default()).unwrap();
    let fp = vocab.fingerprint();
    d.records
        .iter()
        .zip(&terms)
        .map(|(r, t)| vectorize_with(&r.id, t, &vocab, fp.clone()).normalized())
        .collect()
}

fn featurize(c: &mut Criterion) {
    let d = corpus();
    let mut g = c.benchmark_group("featurize");
    g.sample_size(10);
    for model in ["seq7", "pdg7"] {
        let spec: FeatureModelSpec = model.parse().unwrap();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, model), &spec, |b, spec| {
                b.iter(|| {
                    let (terms, _) = featurize_records(&d.records, spec, exec);
                    fit_vocabulary(&terms, spec, exec).unwrap()
                })
            });
        }
    }
    g.finish();
}

fn gram(c: &mut Criterion) {
    let points = Points::from_vectors(&vectors(&"seq7".parse().unwrap()));
    let kernel = KernelSpec::rbf(0.125);
    let mut g = c.benchmark_group("gram");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| Gram::compute(&points, &kernel, exec)));
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let vs = vectors(&"seq4".parse().unwrap());
    let points = Points::from_vectors(&vs[..200]);
    let positives: Vec<usize> = (0..160).collect();
    let pool: Vec<usize> = (160..200).collect();
    let spec = GridSpec::coarse();
    let opts = SolverOptions::default();
    let mut g = c.benchmark_group("grid_search");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                grid_search(&spec, &points, exec, |gram, nu| {
                    ocsvm_objective(gram, &positives, &pool, nu, &spec, &opts)
                })
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, featurize, gram, grid);
criterion_main!(benches);

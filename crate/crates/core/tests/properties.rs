//! Property tests over randomized inputs.

use proptest::prelude::*;

use jstrack::canon::{canonicalize_source, emit};
use jstrack::corpus::{load_dataset, save_dataset, Dataset, Label, Origin, ScriptRecord, Tool};
use jstrack::eval::cdf_table;
use jstrack::features::{fit_vocabulary, vectorize, FeatureModelSpec, TermSet};
use jstrack::learn::qp::project_capped_simplex;
use jstrack::par::Exec;
use jstrack::pipeline::split;
use jstrack::rng::SplitMix64;
use jstrack::synth::{mutate, Mutation, TEMPLATES};

fn record(id: String, label: Option<Label>) -> ScriptRecord {
    ScriptRecord {
        source: format!("var x = {};", id.len()),
        id,
        origin: Origin::External,
        page_id: None,
        tool: Tool::Off,
        url: None,
        label,
        label_rule: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn obfuscation_preserves_canonical_form(t in 0..TEMPLATES.len(), seed in any::<u64>()) {
        let src = TEMPLATES[t].source();
        let m = mutate(&src, Mutation::OBFUSCATE, &mut SplitMix64::new(seed)).unwrap();
        prop_assert_eq!(
            emit(&canonicalize_source(&src).unwrap()),
            emit(&canonicalize_source(&m).unwrap())
        );
    }

    #[test]
    fn tfidf_weights_are_nonnegative_and_shared(
        docs in prop::collection::vec(prop::collection::btree_set("[a-e]{1,2}", 0..8), 1..12)
    ) {
        let docs: Vec<TermSet> = docs;
        let spec = FeatureModelSpec::sequential(4);
        let vocab = fit_vocabulary(&docs, &spec, Exec::Sequential).unwrap();
        let par = fit_vocabulary(&docs, &spec, Exec::Parallel).unwrap();
        prop_assert_eq!(vocab.to_text(), par.to_text());
        for d in &docs {
            let v = vectorize("d", d, &vocab);
            prop_assert_eq!(v.entries.len(), d.len());
            prop_assert!(v.entries.iter().all(|&(_, w)| w >= 0.0));
            prop_assert!(v.entries.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn capped_simplex_projection_is_feasible(
        v in prop::collection::vec(-5.0f64..5.0, 1..20),
        frac in 0.05f64..1.0,
    ) {
        let n = v.len() as f64;
        let upper = 1.0 / (frac * n).max(1.0);
        let s = (upper * n).min(1.0);
        let p = project_capped_simplex(&v, s, upper);
        prop_assert!((p.iter().sum::<f64>() - s).abs() < 1e-9);
        prop_assert!(p.iter().all(|&x| (-1e-12..=upper + 1e-12).contains(&x)));
    }

    #[test]
    fn empirical_cdf_is_monotone(values in prop::collection::vec(-1e3f64..1e3, 1..50)) {
        let cdf = cdf_table(&values).unwrap();
        prop_assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert!((cdf.last().unwrap().1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_partitions_records(n_pos in 0usize..40, n_neg in 0usize..40, n_unl in 0usize..10, seed in any::<u64>()) {
        let mut rs = Vec::new();
        for i in 0..n_pos + n_neg + n_unl {
            let label = if i < n_pos { Some(Label::Tracking) } else if i < n_pos + n_neg { Some(Label::Functional) } else { None };
            rs.push(record(format!("r{i}"), label));
        }
        let sp = split(&rs, 0.8, seed);
        let mut all: Vec<usize> = [&sp.train_pos, &sp.test_pos, &sp.train_neg, &sp.test_neg, &sp.unlabelled]
            .into_iter()
            .flatten()
            .copied()
            .collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..rs.len()).collect::<Vec<_>>());
        prop_assert_eq!(sp.train_pos.len() + sp.test_pos.len(), n_pos);
        prop_assert_eq!(split(&rs, 0.8, seed), sp);
    }

    #[test]
    fn manifest_round_trips_awkward_ids(ids in prop::collection::btree_set("[a-z%|\t/ ]{1,12}", 1..8)) {
        let rs: Vec<ScriptRecord> = ids.into_iter().map(|id| record(id, Some(Label::Functional))).collect();
        let d = Dataset::new(rs, Vec::new()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("manifest.tsv");
        save_dataset(&d, &m).unwrap();
        prop_assert_eq!(load_dataset(&m).unwrap(), d);
    }
}

//! The validation protocol: featurize a labelled dataset under each feature
//! model, train each classifier on an 80% split (with grid search) and score
//! the held-out part.
//!
//! * One-class SVM and PU train on 80% of the tracking records and are tested
//!   on the remaining tracking records plus every functional record.
//! * The two-class SVM trains on 80% of each class and is tested on the rest.
//!
//! PU needs an unlabelled pool, and the one-class grid search needs
//! pseudo-negatives. Both use the records outside the labelled training
//! set with their labels hidden (the test records plus any unlabelled ones).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{Dataset, Label, ScriptRecord};
use crate::eval::{ConfusionReport, EvalError};
use crate::features::{fit_vocabulary, unit, terms_from_source, vectorize_with, FeatureError, FeatureModelSpec, TermSet};
use crate::learn::grid::{ocsvm_objective, pu_objective, ssvm_objective};
use crate::learn::{
    grid_search, train_ocsvm_points, train_pu_points, train_ssvm_points, ClassifierKind, GridSpec, KernelSpec,
    LearnError, Model, Points, PuOptions, SolverOptions, TrainedModel,
};
use crate::par::Exec;
use crate::report::{Cell, Table};
use crate::rng::SplitMix64;

/// Fewest tracking records the protocol accepts.
pub const MIN_POSITIVES: usize = 10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("need at least {need} tracking records, found {found}")]
    InsufficientPositives { need: usize, found: usize },
    #[error("no functional records to test against")]
    NoNegatives,
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// How hyper-parameters are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Tuning {
    Grid(GridSpec),
    /// `gamma` and `nu` (`cost = 1 / nu` for PU).
    Fixed { gamma: f64, nu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateConfig {
    pub features: Vec<FeatureModelSpec>,
    pub classifiers: Vec<ClassifierKind>,
    pub tuning: Tuning,
    pub train_fraction: f64,
    pub seed: u64,
    pub solver: SolverOptions,
    pub pu: PuOptions,
    pub exec: Exec,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            features: FeatureModelSpec::paper_models(),
            classifiers: ClassifierKind::ALL.to_vec(),
            tuning: Tuning::Grid(GridSpec::standard()),
            train_fraction: 0.8,
            seed: 0,
            solver: SolverOptions::default(),
            pu: PuOptions::default(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub features: String,
    pub classifier: ClassifierKind,
    pub gamma: f64,
    pub nu: f64,
    /// Cross-validation objective at the chosen point (grid search only).
    pub cv_objective: Option<f64>,
    pub report: ConfusionReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// Records per feature model whose source could not be featurized
    /// (they enter training and testing as empty vectors).
    pub unparsed: Vec<(String, usize)>,
}

impl ValidationReport {
    pub fn row(&self, features: &str, classifier: ClassifierKind) -> Option<&ValidationRow> {
        self.rows
            .iter()
            .find(|r| r.features == features && r.classifier == classifier)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            "features",
            "classifier",
            "gamma",
            "nu",
            "tp",
            "fp",
            "tn",
            "fn",
            "aer",
            "positives",
            "negatives",
        ]);
        for r in &self.rows {
            let c = &r.report;
            t.push(vec![
                r.features.clone().into(),
                r.classifier.name().into(),
                Cell::Num(r.gamma),
                Cell::Num(r.nu),
                c.tp.into(),
                c.fp.into(),
                c.tn.into(),
                c.fn_.into(),
                c.aer.into(),
                c.positives.into(),
                c.negatives.into(),
            ]);
        }
        t
    }
}

/// Indices of the training part of each class after a seeded shuffle.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train_pos: Vec<usize>,
    pub test_pos: Vec<usize>,
    pub train_neg: Vec<usize>,
    pub test_neg: Vec<usize>,
    pub unlabelled: Vec<usize>,
}

fn train_count(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Seeded 80/20 split of each class; indices refer to `records`.
pub fn split(records: &[ScriptRecord], train_fraction: f64, seed: u64) -> Split {
    let mut rng = SplitMix64::new(seed);
    let mut by = |label: Label| {
        let mut idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == Some(label)).collect();
        rng.shuffle(&mut idx);
        let k = if idx.is_empty() { 0 } else { train_count(idx.len(), train_fraction) };
        let test = idx.split_off(k);
        (idx, test)
    };
    let (train_pos, test_pos) = by(Label::Tracking);
    let (train_neg, test_neg) = by(Label::Functional);
    let unlabelled = (0..records.len()).filter(|&i| records[i].label.is_none()).collect();
    Split {
        train_pos,
        test_pos,
        train_neg,
        test_neg,
        unlabelled,
    }
}

/// Term sets for every record; failures become empty sets and are counted.
pub fn featurize_records(records: &[ScriptRecord], spec: &FeatureModelSpec, exec: Exec) -> (Vec<TermSet>, usize) {
    let out: Vec<Option<TermSet>> = exec.map(records, |r| terms_from_source(&r.source, spec).ok());
    let failed = out.iter().filter(|t| t.is_none()).count();
    (out.into_iter().map(Option::unwrap_or_default).collect(), failed)
}

/// Train one classifier. `train` are the labelled training records (for the
/// two-class SVM both classes, otherwise tracking only); `pool` is the
/// unlabelled pool used by PU and by the one-class grid objective.
#[allow(clippy::too_many_arguments)]
fn fit(
    kind: ClassifierKind,
    points: &Points,
    train: &[usize],
    labels: &[bool],
    pool: &[usize],
    cfg: &ValidateConfig,
    vocab_fp: &str,
) -> Result<(Model, f64, f64, Option<f64>), LearnError> {
    let (gamma, nu, cv) = match &cfg.tuning {
        Tuning::Fixed { gamma, nu } => (*gamma, *nu, None),
        Tuning::Grid(spec) => {
            let spec = GridSpec {
                seed: cfg.seed,
                ..spec.clone()
            };
            // Grid over train ∪ pool; objectives index into that union.
            let mut all: Vec<usize> = train.to_vec();
            all.extend_from_slice(pool);
            let sub = points.subset(&all);
            let pos: Vec<usize> = (0..train.len()).collect();
            let pl: Vec<usize> = (train.len()..all.len()).collect();
            let opts = &cfg.solver;
            let best = match kind {
                ClassifierKind::Ocsvm => grid_search(&spec, &sub, cfg.exec, |g, nu| {
                    ocsvm_objective(g, &pos, &pl, nu, &spec, opts)
                })?,
                ClassifierKind::Pu => grid_search(&spec, &sub, cfg.exec, |g, nu| {
                    pu_objective(g, &pos, &pl, nu, &spec, opts, &cfg.pu)
                })?,
                ClassifierKind::Ssvm => grid_search(&spec, &sub, cfg.exec, |g, nu| {
                    ssvm_objective(g, &pos, labels, nu, &spec, opts)
                })?,
            };
            (best.gamma, best.nu, Some(best.objective))
        }
    };
    let kernel = KernelSpec::rbf(gamma);
    let fp = vocab_fp.to_string();
    let model = match kind {
        ClassifierKind::Ocsvm => Model::Ocsvm(train_ocsvm_points(&points.subset(train), kernel, nu, &cfg.solver, fp)?),
        ClassifierKind::Pu => Model::Pu(train_pu_points(
            &points.subset(train),
            &points.subset(pool),
            kernel,
            1.0 / nu,
            &cfg.solver,
            &cfg.pu,
            fp,
        )?),
        ClassifierKind::Ssvm => {
            Model::Ssvm(train_ssvm_points(&points.subset(train), labels, kernel, nu, &cfg.solver, fp)?)
        }
    };
    Ok((model, gamma, nu, cv))
}

fn predict(model: &Model, row: &[(u32, f64)]) -> bool {
    match model {
        Model::Ocsvm(m) => m.accepts(m.decision_sparse(row)),
        Model::Pu(m) => m.prob_sparse(row) >= m.threshold,
        Model::Ssvm(m) => m.decision_sparse(row) > 0.0,
    }
}

/// Run the validation protocol over every (feature model, classifier) pair.
pub fn pipeline_validate(dataset: &Dataset, cfg: &ValidateConfig) -> Result<ValidationReport, PipelineError> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(PipelineError::BadFraction(cfg.train_fraction));
    }
    let records: Vec<ScriptRecord> = dataset
        .records
        .iter()
        .filter(|r| !r.is_missing_source())
        .cloned()
        .collect();
    let positives = records.iter().filter(|r| r.label == Some(Label::Tracking)).count();
    if positives < MIN_POSITIVES {
        return Err(PipelineError::InsufficientPositives {
            need: MIN_POSITIVES,
            found: positives,
        });
    }
    if !records.iter().any(|r| r.label == Some(Label::Functional)) {
        return Err(PipelineError::NoNegatives);
    }
    let sp = split(&records, cfg.train_fraction, cfg.seed);
    let mut pool: Vec<usize> = sp.test_pos.iter().chain(&sp.train_neg).chain(&sp.test_neg).copied().collect();
    pool.extend(&sp.unlabelled);
    pool.sort_unstable();

    let mut report = ValidationReport::default();
    for spec in &cfg.features {
        let (terms, failed) = featurize_records(&records, spec, cfg.exec);
        report.unparsed.push((spec.to_string(), failed));
        let vocab = fit_vocabulary(&terms, spec, cfg.exec)?;
        let fp = vocab.fingerprint();
        let rows: Vec<_> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| unit(&vectorize_with(&records[i].id, t, &vocab, fp.clone()).entries))
            .collect();
        let points = Points::new(rows);

        for &kind in &cfg.classifiers {
            let (train, labels, test): (Vec<usize>, Vec<bool>, Vec<usize>) = match kind {
                ClassifierKind::Ssvm => {
                    let train: Vec<usize> = sp.train_pos.iter().chain(&sp.train_neg).copied().collect();
                    let labels = train.iter().map(|&i| records[i].label == Some(Label::Tracking)).collect();
                    let test = sp.test_pos.iter().chain(&sp.test_neg).copied().collect();
                    (train, labels, test)
                }
                _ => {
                    let labels = vec![true; sp.train_pos.len()];
                    let test = sp.test_pos.iter().chain(&sp.train_neg).chain(&sp.test_neg).copied().collect();
                    (sp.train_pos.clone(), labels, test)
                }
            };
            let pool: &[usize] = if kind == ClassifierKind::Ssvm { &[] } else { &pool };
            let (model, gamma, nu, cv) = fit(kind, &points, &train, &labels, pool, cfg, &fp)?;
            let pairs: Vec<(Label, Label)> = test
                .iter()
                .map(|&i| {
                    let pred = if predict(&model, points.row(i)) {
                        Label::Tracking
                    } else {
                        Label::Functional
                    };
                    (pred, records[i].label.expect("labelled test record"))
                })
                .collect();
            report.rows.push(ValidationRow {
                features: spec.to_string(),
                classifier: kind,
                gamma,
                nu,
                cv_objective: cv,
                report: ConfusionReport::from_pairs(pairs)?,
            });
        }
    }
    Ok(report)
}

/// Train a single classifier on every labelled record of `dataset` (tracking
/// only for OCSVM/PU, whose unlabelled pool is everything else).
pub fn train_model(
    dataset: &Dataset,
    spec: &FeatureModelSpec,
    kind: ClassifierKind,
    cfg: &ValidateConfig,
) -> Result<TrainedModel, PipelineError> {
    let records: Vec<&ScriptRecord> = dataset.records.iter().filter(|r| !r.is_missing_source()).collect();
    let owned: Vec<ScriptRecord> = records.iter().map(|r| (*r).clone()).collect();
    let (terms, _) = featurize_records(&owned, spec, cfg.exec);
    let vocab = fit_vocabulary(&terms, spec, cfg.exec)?;
    let fp = vocab.fingerprint();
    let points = Points::new(
        terms
            .iter()
            .enumerate()
            .map(|(i, t)| unit(&vectorize_with(&owned[i].id, t, &vocab, fp.clone()).entries))
            .collect(),
    );
    let is = |i: usize, l: Label| owned[i].label == Some(l);
    let pos: Vec<usize> = (0..owned.len()).filter(|&i| is(i, Label::Tracking)).collect();
    if pos.is_empty() {
        return Err(PipelineError::InsufficientPositives { need: 1, found: 0 });
    }
    let (train, labels, pool) = match kind {
        ClassifierKind::Ssvm => {
            let train: Vec<usize> = (0..owned.len()).filter(|&i| owned[i].label.is_some()).collect();
            let labels = train.iter().map(|&i| is(i, Label::Tracking)).collect();
            (train, labels, Vec::new())
        }
        _ => {
            let pool: Vec<usize> = (0..owned.len()).filter(|&i| !is(i, Label::Tracking)).collect();
            (pos.clone(), vec![true; pos.len()], pool)
        }
    };
    let (model, ..) = fit(kind, &points, &train, &labels, &pool, cfg, &fp)?;
    Ok(TrainedModel { model, vocab })
}

/// Prediction lines `id<TAB>label<TAB>score`.
pub fn predictions_to_text(rows: &[(String, Label, f64)]) -> String {
    let mut out = String::new();
    for (id, l, s) in rows {
        let _ = writeln!(out, "{id}\t{l}\t{s}");
    }
    out
}

/// Read `id<TAB>label[<TAB>...]` lines (predictions, labels or tool
/// outcomes). Blank lines and `#` comments are skipped.
pub fn parse_label_map(text: &str) -> Result<BTreeMap<String, Label>, FeatureError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split('\t');
        let (Some(id), Some(l)) = (it.next(), it.next()) else {
            return Err(FeatureError::Parse {
                line: n + 1,
                msg: "expected id<TAB>label".into(),
            });
        };
        let l: Label = l.parse().map_err(|msg| FeatureError::Parse { line: n + 1, msg })?;
        out.insert(id.to_string(), l);
    }
    Ok(out)
}

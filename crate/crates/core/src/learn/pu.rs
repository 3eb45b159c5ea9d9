//! Learning from positive and unlabeled examples (Elkan and Noto, 2008).
//!
//! A C-SVC `g` separates labeled positives from the unlabeled pool. Its
//! class penalties are balanced: inside the positive region only a fraction
//! `c` of points is labeled, and with `c < 1/2` an unweighted hinge loss
//! would score both regions alike. Its scores are calibrated with a sigmoid fitted on out-of-fold decisions, and
//! `c = P(labeled | positive)` is estimated as the mean calibrated score on a
//! held-out slice of the labeled positives. The final estimate is
//! `f(x) = min(1, g(x) / c)`.

use super::grid::stratified_folds;
use super::kernel::{Gram, GramQ, KernelSpec, Points, Sparse};
use super::platt::{self, Sigmoid};
use super::svm::{check_vocab, solve_csvc, KernelExpansion, SolverOptions};
use super::LearnError;
use crate::features::FeatureVector;
use crate::par::Exec;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuOptions {
    /// Fraction of the labeled positives held out to estimate `c`, in `(0, 0.5]`.
    /// The same fraction of the pool is left out of training so the labeled
    /// share seen by `g` is not skewed.
    pub holdout: f64,
    /// Folds for the out-of-fold scores the sigmoid is fitted on.
    pub calibration_folds: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for PuOptions {
    fn default() -> Self {
        PuOptions {
            holdout: 0.2,
            calibration_folds: 3,
            threshold: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuModel {
    /// Raw scorer separating labeled from unlabeled points.
    pub g: KernelExpansion,
    /// C-SVC penalty `g` was trained with.
    pub cost: f64,
    pub vocab: String,
    pub sigmoid: Sigmoid,
    pub c: f64,
    pub threshold: f64,
    /// Set when calibration failed (decreasing sigmoid or `c` near zero).
    pub collapsed: bool,
}

impl PuModel {
    pub fn ensure_calibrated(&self) -> Result<&Self, LearnError> {
        if self.collapsed {
            Err(LearnError::CollapsedCalibration { c: self.c })
        } else {
            Ok(self)
        }
    }

    /// Calibrated `g(x) = P(labeled | x)`.
    pub fn g_prob_sparse(&self, x: &[(u32, f64)]) -> f64 {
        self.sigmoid.prob(self.g.decision(x))
    }

    /// `min(1, g(x) / c)`.
    pub fn prob_sparse(&self, x: &[(u32, f64)]) -> f64 {
        (self.g_prob_sparse(x) / self.c).min(1.0)
    }

    pub fn prob(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        check_vocab(&self.vocab, x)?;
        Ok(self.prob_sparse(&x.entries))
    }

    pub fn is_tracking(&self, x: &FeatureVector) -> Result<bool, LearnError> {
        Ok(self.prob(x)? >= self.threshold)
    }
}

/// Result of fitting on a slice of a Gram matrix.
pub(crate) struct PuFit {
    /// Indices (into the Gram matrix) `g` was trained on.
    pub train: Vec<usize>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub sigmoid: Sigmoid,
    pub c: f64,
    pub collapsed: bool,
}

impl PuFit {
    pub fn decision(&self, gram: &Gram, j: usize) -> f64 {
        gram_decision(gram, &self.train, &self.coef, self.rho, j)
    }

    pub fn prob(&self, gram: &Gram, j: usize) -> f64 {
        (self.sigmoid.prob(self.decision(gram, j)) / self.c).min(1.0)
    }
}

pub(crate) fn gram_decision(gram: &Gram, train: &[usize], coef: &[f64], rho: f64, j: usize) -> f64 {
    train
        .iter()
        .zip(coef)
        .filter(|(_, &c)| c != 0.0)
        .map(|(&i, c)| c * gram.get(i, j))
        .sum::<f64>()
        - rho
}

pub(crate) fn fit_pu_gram(
    gram: &Gram,
    labeled: &[usize],
    unlabeled: &[usize],
    cost: f64,
    opts: &SolverOptions,
    pu: &PuOptions,
) -> Result<PuFit, LearnError> {
    if !(pu.holdout > 0.0 && pu.holdout <= 0.5) {
        return Err(LearnError::InvalidParam(format!(
            "validation fraction must be in (0, 0.5], got {}",
            pu.holdout
        )));
    }
    let mut rng = SplitMix64::new(pu.seed);
    let mut lab = labeled.to_vec();
    rng.shuffle(&mut lab);
    let h = ((lab.len() as f64 * pu.holdout).round() as usize).max(1);
    if h >= lab.len() {
        return Err(LearnError::EmptyValidation);
    }
    if unlabeled.is_empty() {
        return Err(LearnError::TooFewPoints { need: 1, got: 0 });
    }
    let (held, rest) = lab.split_at(h);
    // Hold out the same fraction of the pool so the labeled share of the
    // training set stays an estimate of `c`.
    let mut unl = unlabeled.to_vec();
    rng.shuffle(&mut unl);
    let hu = ((unl.len() as f64 * pu.holdout).round() as usize).min(unl.len() - 1);
    let train: Vec<usize> = rest.iter().chain(&unl[hu..]).copied().collect();
    let labels: Vec<bool> = (0..train.len()).map(|i| i < rest.len()).collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    // Out-of-fold decisions for the sigmoid.
    let k = pu.calibration_folds.max(2);
    let fold = stratified_folds(&labels, k, &mut rng);
    let mut oof = vec![0.0; train.len()];
    for f in 0..k {
        let inner: Vec<usize> = (0..train.len()).filter(|&i| fold[i] != f).collect();
        let idx: Vec<usize> = inner.iter().map(|&i| train[i]).collect();
        let yi: Vec<f64> = inner.iter().map(|&i| y[i]).collect();
        let mut q = GramQ::new(gram, &idx, &yi);
        let dual = solve_csvc(&mut q, &yi, cost, opts)?;
        for i in (0..train.len()).filter(|&i| fold[i] == f) {
            oof[i] = gram_decision(gram, &idx, &dual.coef, dual.rho, train[i]);
        }
    }
    let sigmoid = platt::fit(&oof, &labels);

    let mut q = GramQ::new(gram, &train, &y);
    let dual = solve_csvc(&mut q, &y, cost, opts)?;
    let c = held
        .iter()
        .map(|&j| sigmoid.prob(gram_decision(gram, &train, &dual.coef, dual.rho, j)))
        .sum::<f64>()
        / held.len() as f64;
    let collapsed = !sigmoid.is_increasing() || !c.is_finite() || c < 1e-6;
    Ok(PuFit {
        train,
        coef: dual.coef,
        rho: dual.rho,
        sigmoid,
        c,
        collapsed,
    })
}

pub fn train_pu(
    labeled: &[FeatureVector],
    unlabeled: &[FeatureVector],
    kernel: KernelSpec,
    cost: f64,
    opts: &SolverOptions,
    pu: &PuOptions,
) -> Result<PuModel, LearnError> {
    let vocab = labeled.first().or(unlabeled.first()).map(|v| v.vocab.clone()).unwrap_or_default();
    if let Some(v) = labeled.iter().chain(unlabeled).find(|v| v.vocab != vocab) {
        return Err(LearnError::VocabMismatch {
            expected: vocab,
            found: v.vocab.clone(),
        });
    }
    train_pu_points(
        &Points::from_vectors(labeled),
        &Points::from_vectors(unlabeled),
        kernel,
        cost,
        opts,
        pu,
        vocab,
    )
}

pub fn train_pu_points(
    labeled: &Points,
    unlabeled: &Points,
    kernel: KernelSpec,
    cost: f64,
    opts: &SolverOptions,
    pu: &PuOptions,
    vocab: String,
) -> Result<PuModel, LearnError> {
    kernel.validate()?;
    let rows: Vec<Sparse> = (0..labeled.len())
        .map(|i| labeled.row(i).to_vec())
        .chain((0..unlabeled.len()).map(|i| unlabeled.row(i).to_vec()))
        .collect();
    let all = Points::new(rows);
    let gram = Gram::compute(&all, &kernel, Exec::default());
    let lab: Vec<usize> = (0..labeled.len()).collect();
    let unl: Vec<usize> = (labeled.len()..all.len()).collect();
    let fit = fit_pu_gram(&gram, &lab, &unl, cost, opts, pu)?;
    let support = all.subset(&fit.train);
    Ok(PuModel {
        g: KernelExpansion::from_dual(&support, kernel, &fit.coef, fit.rho),
        cost,
        vocab,
        sigmoid: fit.sigmoid,
        c: fit.c,
        threshold: pu.threshold,
        collapsed: fit.collapsed,
    })
}

//! Hyper-parameter grid search with k-fold cross-validation.
//!
//! For every `gamma` the kernel matrix over all points is computed once; the
//! `nu` values are then evaluated in parallel on slices of it. Lower
//! objective wins; ties go to the smallest `gamma`, then the smallest `nu`.

use super::kernel::{Gram, GramQ, KernelSpec, Points};
use super::pu::{fit_pu_gram, gram_decision, PuOptions};
use super::svm::{solve_nusvc, solve_ocsvm, SolverOptions};
use super::LearnError;
use crate::par::Exec;
use crate::rng::SplitMix64;

/// What cross-validation minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Mean of the miss rate and the false-alarm rate.
    #[default]
    Aer,
    /// Plain error rate over all held-out items.
    Accuracy,
}

impl Objective {
    fn score(self, missed: usize, pos: usize, false_alarms: usize, neg: usize) -> f64 {
        match self {
            Objective::Aer => (rate(missed, pos) + rate(false_alarms, neg)) / 2.0,
            Objective::Accuracy => rate(missed + false_alarms, pos + neg),
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = LearnError;
    fn from_str(s: &str) -> Result<Self, LearnError> {
        match s {
            "aer" => Ok(Objective::Aer),
            "accuracy" => Ok(Objective::Accuracy),
            _ => Err(LearnError::InvalidParam(format!("unknown objective `{s}`"))),
        }
    }
}

/// The second grid axis is `nu` for the one-class and two-class SVMs. PU
/// trains a C-SVC and reads the same axis as `cost = 1 / nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    pub nus: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub objective: Objective,
}

impl GridSpec {
    /// `gamma in 2^-15..=2^0`, `nu in 2^-10..=2^0`, five folds.
    pub fn standard() -> Self {
        GridSpec {
            gammas: (-15..=0).map(|e| 2f64.powi(e)).collect(),
            nus: (-10..=0).map(|e| 2f64.powi(e)).collect(),
            folds: 5,
            seed: 0,
            objective: Objective::Aer,
        }
    }

    /// A coarser grid (every other exponent) for quick runs.
    pub fn coarse() -> Self {
        GridSpec {
            gammas: (-15..=0).step_by(2).map(|e| 2f64.powi(e)).collect(),
            nus: (-10..=0).step_by(2).map(|e| 2f64.powi(e)).collect(),
            folds: 5,
            seed: 0,
            objective: Objective::Aer,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if self.gammas.is_empty() || self.nus.is_empty() || self.folds < 2 {
            return Err(LearnError::InvalidParam("grid needs gammas, nus and at least 2 folds".into()));
        }
        if self.gammas.iter().any(|&g| !(g > 0.0 && g.is_finite())) || self.nus.iter().any(|&n| !(n > 0.0 && n <= 1.0)) {
            return Err(LearnError::InvalidParam("gamma must be positive and nu in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub gamma: f64,
    pub nu: f64,
    /// `None` when training failed at this point (infeasible nu, no convergence).
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub gamma: f64,
    pub nu: f64,
    pub objective: f64,
    pub points: Vec<GridPoint>,
}

/// Assign each item to one of `k` folds, spreading both classes evenly.
pub fn stratified_folds(labels: &[bool], k: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut idx);
        for (n, i) in idx.into_iter().enumerate() {
            fold[i] = n % k;
        }
    }
    fold
}

/// Evaluate `objective(gram, nu)` over the grid, in parallel across `nu`.
pub fn grid_search<F>(spec: &GridSpec, points: &Points, exec: Exec, objective: F) -> Result<GridResult, LearnError>
where
    F: Fn(&Gram, f64) -> Option<f64> + Sync + Send,
{
    spec.validate()?;
    let mut all = Vec::new();
    for &gamma in &spec.gammas {
        let gram = Gram::compute(points, &KernelSpec::rbf(gamma), exec);
        let scores = exec.map(&spec.nus, |&nu| objective(&gram, nu));
        for (&nu, objective) in spec.nus.iter().zip(scores) {
            all.push(GridPoint { gamma, nu, objective });
        }
    }
    pick_best(all)
}

fn pick_best(points: Vec<GridPoint>) -> Result<GridResult, LearnError> {
    let mut best: Option<GridPoint> = None;
    // Points arrive in ascending gamma then nu order, and only a strictly
    // better objective replaces the incumbent.
    let mut ordered = points.clone();
    ordered.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.nu.total_cmp(&b.nu)));
    for p in ordered {
        let Some(o) = p.objective.filter(|o| o.is_finite()) else {
            continue;
        };
        if best.is_none_or(|b| o < b.objective.unwrap()) {
            best = Some(p);
        }
    }
    let b = best.ok_or(LearnError::GridExhausted)?;
    Ok(GridResult {
        gamma: b.gamma,
        nu: b.nu,
        objective: b.objective.unwrap(),
        points,
    })
}

fn rate(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

/// Model-selection score from positives and an unlabelled pool:
/// `-recall^2 / Pr[pool predicted positive]` (Lee and Liu). The pool may
/// hide positives, so the false-alarm rate on it is not a usable proxy;
/// this ratio is proportional to `precision * recall` instead. Lower is
/// better, like every grid objective.
pub fn pool_score(hits: usize, positives: usize, accepted: usize, pool: usize) -> f64 {
    let r = rate(hits, positives);
    let p = rate(accepted, pool).max(1.0 / pool.max(1) as f64);
    -(r * r) / p
}

/// One-class objective: mean over folds of [`pool_score`], with held-out
/// positives for recall and the pool for the acceptance rate.
pub fn ocsvm_objective(
    gram: &Gram,
    positives: &[usize],
    pool: &[usize],
    nu: f64,
    spec: &GridSpec,
    opts: &SolverOptions,
) -> Option<f64> {
    let folds = spec.folds;
    let mut rng = SplitMix64::new(spec.seed);
    let fold = stratified_folds(&vec![true; positives.len()], folds, &mut rng);
    let mut total = 0.0;
    for f in 0..folds {
        let train: Vec<usize> = (0..positives.len()).filter(|&i| fold[i] != f).map(|i| positives[i]).collect();
        let test: Vec<usize> = (0..positives.len()).filter(|&i| fold[i] == f).map(|i| positives[i]).collect();
        if train.is_empty() {
            return None;
        }
        let y = vec![1.0; train.len()];
        let dual = solve_ocsvm(&mut GramQ::new(gram, &train, &y), nu, opts).ok()?;
        let dec = |j: usize| gram_decision(gram, &train, &dual.alpha, dual.rho, j);
        let hits = test.iter().filter(|&&j| dual.accepts(dec(j))).count();
        let accepted = pool.iter().filter(|&&j| dual.accepts(dec(j))).count();
        total += pool_score(hits, test.len(), accepted, pool.len());
    }
    Some(total / folds as f64)
}

/// PU objective: as [`ocsvm_objective`] with the PU classifier trained on
/// the in-fold positives against the pool, at `cost = 1 / nu`.
pub fn pu_objective(
    gram: &Gram,
    positives: &[usize],
    pool: &[usize],
    nu: f64,
    spec: &GridSpec,
    opts: &SolverOptions,
    pu: &PuOptions,
) -> Option<f64> {
    let folds = spec.folds;
    let mut rng = SplitMix64::new(spec.seed);
    let fold = stratified_folds(&vec![true; positives.len()], folds, &mut rng);
    let mut total = 0.0;
    for f in 0..folds {
        let train: Vec<usize> = (0..positives.len()).filter(|&i| fold[i] != f).map(|i| positives[i]).collect();
        let test: Vec<usize> = (0..positives.len()).filter(|&i| fold[i] == f).map(|i| positives[i]).collect();
        let fit = fit_pu_gram(gram, &train, pool, 1.0 / nu, opts, pu).ok()?;
        if fit.collapsed {
            return None;
        }
        let hits = test.iter().filter(|&&j| fit.prob(gram, j) >= pu.threshold).count();
        let accepted = pool.iter().filter(|&&j| fit.prob(gram, j) >= pu.threshold).count();
        total += pool_score(hits, test.len(), accepted, pool.len());
    }
    Some(total / folds as f64)
}

/// Two-class objective: mean over stratified folds.
pub fn ssvm_objective(
    gram: &Gram,
    items: &[usize],
    labels: &[bool],
    nu: f64,
    spec: &GridSpec,
    opts: &SolverOptions,
) -> Option<f64> {
    let folds = spec.folds;
    let mut rng = SplitMix64::new(spec.seed);
    let fold = stratified_folds(labels, folds, &mut rng);
    let mut total = 0.0;
    for f in 0..folds {
        let inner: Vec<usize> = (0..items.len()).filter(|&i| fold[i] != f).collect();
        let train: Vec<usize> = inner.iter().map(|&i| items[i]).collect();
        let y: Vec<f64> = inner.iter().map(|&i| if labels[i] { 1.0 } else { -1.0 }).collect();
        let dual = solve_nusvc(&mut GramQ::new(gram, &train, &y), &y, nu, opts).ok()?;
        let (mut fp, mut fn_, mut pos, mut neg) = (0, 0, 0, 0);
        for i in (0..items.len()).filter(|&i| fold[i] == f) {
            let tracking = gram_decision(gram, &train, &dual.coef, dual.rho, items[i]) > 0.0;
            if labels[i] {
                pos += 1;
                fn_ += usize::from(!tracking);
            } else {
                neg += 1;
                fp += usize::from(tracking);
            }
        }
        total += spec.objective.score(fn_, pos, fp, neg);
    }
    Some(total / folds as f64)
}

//! One-class SVM and nu-SVC on top of the SMO solver.
//!
//! The one-class dual is solved in the usual `sum a = nu l`, `a <= 1`
//! scaling and rescaled afterwards to `sum a = 1`, `a <= 1/(nu l)`. The
//! decision function is `sum_i a_i K(x_i, x) - rho`; non-negative means
//! inside the learned support (tracking).

use super::kernel::{CachedQ, KernelSpec, Points, Sparse};
use super::solver::{self, Mode, Problem, QMatrix};
use super::LearnError;
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// KKT tolerance.
    pub eps: f64,
    pub max_iter: usize,
    /// Memory budget for the kernel row cache.
    pub cache_bytes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eps: 1e-3,
            max_iter: 1_000_000,
            cache_bytes: 100 << 20,
        }
    }
}

fn check_nu(nu: f64) -> Result<(), LearnError> {
    if nu.is_finite() && nu > 0.0 && nu <= 1.0 {
        Ok(())
    } else {
        Err(LearnError::InvalidParam(format!("nu must be in (0, 1], got {nu}")))
    }
}

/// Dual solution of the one-class problem, already in `sum a = 1` scaling.
#[derive(Debug, Clone)]
pub struct OcsvmDual {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
    /// Width of the band around the boundary that the stopping tolerance
    /// leaves undetermined, in decision units.
    pub margin: f64,
}

impl OcsvmDual {
    /// Inside the estimated support, boundary band included.
    pub fn accepts(&self, decision: f64) -> bool {
        decision >= -self.margin
    }
}

pub fn solve_ocsvm<Q: QMatrix>(q: &mut Q, nu: f64, opts: &SolverOptions) -> Result<OcsvmDual, LearnError> {
    check_nu(nu)?;
    let l = q.size();
    if l == 0 {
        return Err(LearnError::TooFewPoints { need: 1, got: 0 });
    }
    let total = nu * l as f64;
    let whole = (total.floor() as usize).min(l);
    let mut alpha = vec![0.0; l];
    for a in alpha.iter_mut().take(whole) {
        *a = 1.0;
    }
    if whole < l {
        alpha[whole] = total - whole as f64;
    }
    let zeros = vec![0.0; l];
    let ones = vec![1.0; l];
    let sol = solver::solve(
        q,
        Problem {
            p: &zeros,
            y: &ones,
            c: &ones,
            alpha,
            eps: opts.eps,
            max_iter: opts.max_iter,
            mode: Mode::Standard,
        },
    );
    if !sol.converged {
        return Err(LearnError::NoConvergence { iterations: sol.iterations });
    }
    Ok(OcsvmDual {
        alpha: sol.alpha.iter().map(|a| a / total).collect(),
        rho: sol.rho / total,
        objective: sol.objective / (total * total),
        iterations: sol.iterations,
        margin: opts.eps / total,
    })
}

/// Dual solution of nu-SVC. `coef_i = y_i a_i / r`; `objective` is in the
/// unscaled `sum a = nu l` form.
#[derive(Debug, Clone)]
pub struct NuSvcDual {
    pub coef: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// Largest feasible nu for the given class sizes.
pub fn max_feasible_nu(pos: usize, neg: usize) -> f64 {
    let l = (pos + neg) as f64;
    if l == 0.0 {
        0.0
    } else {
        (2.0 * pos.min(neg) as f64 / l).min(1.0)
    }
}

pub fn solve_nusvc<Q: QMatrix>(q: &mut Q, y: &[f64], nu: f64, opts: &SolverOptions) -> Result<NuSvcDual, LearnError> {
    check_nu(nu)?;
    let l = q.size();
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    let neg = l - pos;
    if pos == 0 || neg == 0 {
        return Err(LearnError::TooFewPoints { need: 1, got: 0 });
    }
    let max = max_feasible_nu(pos, neg);
    if nu > max + 1e-12 {
        return Err(LearnError::InfeasibleNu { nu, max });
    }
    let (mut sp, mut sn) = (nu * l as f64 / 2.0, nu * l as f64 / 2.0);
    let alpha: Vec<f64> = y
        .iter()
        .map(|&yi| {
            let s = if yi > 0.0 { &mut sp } else { &mut sn };
            let a = s.min(1.0);
            *s -= a;
            a
        })
        .collect();
    let zeros = vec![0.0; l];
    let ones = vec![1.0; l];
    let sol = solver::solve(
        q,
        Problem {
            p: &zeros,
            y,
            c: &ones,
            alpha,
            eps: opts.eps,
            max_iter: opts.max_iter,
            mode: Mode::Nu,
        },
    );
    if !sol.converged {
        return Err(LearnError::NoConvergence { iterations: sol.iterations });
    }
    // `r` only rescales the decision function. When the classes overlap
    // completely it can end up at (or numerically below) zero; dividing by
    // it would then flip the sign, so the unscaled solution is kept.
    if !sol.r.is_finite() || !sol.rho.is_finite() {
        return Err(LearnError::Numeric(format!("nu-SVC produced non-finite margin (r = {})", sol.r)));
    }
    let r = if sol.r > 1e-12 { sol.r } else { 1.0 };
    Ok(NuSvcDual {
        coef: sol.alpha.iter().zip(y).map(|(a, yi)| a * yi / r).collect(),
        rho: sol.rho / r,
        objective: sol.objective,
        iterations: sol.iterations,
    })
}

/// Dual solution of C-SVC with class-balanced bounds: `coef_i = y_i a_i`,
/// `0 <= a_i <= C l / (2 n_class(i))`, so each class carries the same total
/// penalty whatever its size.
pub fn solve_csvc<Q: QMatrix>(q: &mut Q, y: &[f64], c: f64, opts: &SolverOptions) -> Result<NuSvcDual, LearnError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(LearnError::InvalidParam(format!("C must be positive, got {c}")));
    }
    let l = q.size();
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    if pos == 0 || pos == l {
        return Err(LearnError::TooFewPoints { need: 1, got: 0 });
    }
    let minus = vec![-1.0; l];
    let half = l as f64 / 2.0;
    let (cp, cn) = (c * half / pos as f64, c * half / (l - pos) as f64);
    let cs: Vec<f64> = y.iter().map(|&v| if v > 0.0 { cp } else { cn }).collect();
    let sol = solver::solve(
        q,
        Problem {
            p: &minus,
            y,
            c: &cs,
            alpha: vec![0.0; l],
            eps: opts.eps,
            max_iter: opts.max_iter,
            mode: Mode::Standard,
        },
    );
    if !sol.converged {
        return Err(LearnError::NoConvergence { iterations: sol.iterations });
    }
    Ok(NuSvcDual {
        coef: sol.alpha.iter().zip(y).map(|(a, yi)| a * yi).collect(),
        rho: sol.rho,
        objective: sol.objective,
        iterations: sol.iterations,
    })
}

/// `f(x) = sum_i coef_i K(s_i, x) - rho` over the support vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion {
    pub kernel: KernelSpec,
    pub support: Points,
    pub coef: Vec<f64>,
    pub rho: f64,
}

impl KernelExpansion {
    /// Keep the points with non-zero coefficients.
    pub fn from_dual(points: &Points, kernel: KernelSpec, coef: &[f64], rho: f64) -> Self {
        let idx: Vec<usize> = (0..coef.len()).filter(|&i| coef[i] != 0.0).collect();
        KernelExpansion {
            kernel,
            support: points.subset(&idx),
            coef: idx.iter().map(|&i| coef[i]).collect(),
            rho,
        }
    }

    pub fn decision(&self, x: &[(u32, f64)]) -> f64 {
        let nx: f64 = x.iter().map(|(_, w)| w * w).sum();
        let mut s = 0.0;
        for (i, c) in self.coef.iter().enumerate() {
            s += c * self.kernel.eval(self.support.row(i), self.support.norm(i), x, nx);
        }
        s - self.rho
    }

    pub fn support_count(&self) -> usize {
        self.coef.len()
    }
}

fn common_vocab(xs: &[FeatureVector]) -> Result<String, LearnError> {
    let first = xs.first().map(|v| v.vocab.clone()).unwrap_or_default();
    for v in xs {
        if v.vocab != first {
            return Err(LearnError::VocabMismatch {
                expected: first,
                found: v.vocab.clone(),
            });
        }
    }
    Ok(first)
}

pub(crate) fn check_vocab(model: &str, x: &FeatureVector) -> Result<(), LearnError> {
    if !model.is_empty() && model != x.vocab {
        return Err(LearnError::VocabMismatch {
            expected: model.to_string(),
            found: x.vocab.clone(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    pub expansion: KernelExpansion,
    pub nu: f64,
    /// Fingerprint of the training vocabulary; empty for raw point data.
    pub vocab: String,
    /// Set when every training vector was identical; see [`Self::ensure_nondegenerate`].
    pub degenerate: bool,
    /// Report scores as `rho - sum a K` instead of `sum a K - rho`.
    pub paper_sign: bool,
    /// Decisions in `[-margin, 0)` are within solver tolerance of the
    /// boundary and count as inside.
    pub margin: f64,
}

impl OcsvmModel {
    pub fn ensure_nondegenerate(&self) -> Result<&Self, LearnError> {
        if self.degenerate {
            Err(LearnError::DegenerateTraining)
        } else {
            Ok(self)
        }
    }

    pub fn decision_sparse(&self, x: &[(u32, f64)]) -> f64 {
        self.expansion.decision(x)
    }

    pub fn decision(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        check_vocab(&self.vocab, x)?;
        Ok(self.decision_sparse(&x.entries))
    }

    /// Score in the configured sign convention.
    pub fn score(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        let d = self.decision(x)?;
        Ok(if self.paper_sign { -d } else { d })
    }

    pub fn is_tracking(&self, x: &FeatureVector) -> Result<bool, LearnError> {
        Ok(self.accepts(self.decision(x)?))
    }

    pub fn accepts(&self, decision: f64) -> bool {
        decision >= -self.margin
    }
}

pub fn train_ocsvm(xs: &[FeatureVector], kernel: KernelSpec, nu: f64, opts: &SolverOptions) -> Result<OcsvmModel, LearnError> {
    let vocab = common_vocab(xs)?;
    train_ocsvm_points(&Points::from_vectors(xs), kernel, nu, opts, vocab)
}

pub fn train_ocsvm_points(
    points: &Points,
    kernel: KernelSpec,
    nu: f64,
    opts: &SolverOptions,
    vocab: String,
) -> Result<OcsvmModel, LearnError> {
    kernel.validate()?;
    check_nu(nu)?;
    if points.len() < 2 {
        return Err(LearnError::TooFewPoints {
            need: 2,
            got: points.len(),
        });
    }
    if points.all_identical() {
        // Every point sits on the boundary; the model is usable but carries
        // no information about the class shape.
        let m = points.len() as f64;
        let k = points.kernel(&kernel, 0, 0);
        return Ok(OcsvmModel {
            expansion: KernelExpansion {
                kernel,
                support: points.subset(&[0]),
                coef: vec![1.0],
                rho: k,
            },
            nu,
            vocab,
            degenerate: m > 0.0,
            paper_sign: false,
            margin: 0.0,
        });
    }
    let y = vec![1.0; points.len()];
    let mut q = CachedQ::new(points, kernel, &y, opts.cache_bytes);
    let dual = solve_ocsvm(&mut q, nu, opts)?;
    Ok(OcsvmModel {
        expansion: KernelExpansion::from_dual(points, kernel, &dual.alpha, dual.rho),
        nu,
        vocab,
        degenerate: false,
        paper_sign: false,
        margin: dual.margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsvmModel {
    pub expansion: KernelExpansion,
    pub nu: f64,
    pub vocab: String,
}

impl SsvmModel {
    pub fn decision_sparse(&self, x: &[(u32, f64)]) -> f64 {
        self.expansion.decision(x)
    }

    pub fn decision(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        check_vocab(&self.vocab, x)?;
        Ok(self.decision_sparse(&x.entries))
    }

    /// Positive class (tracking) iff the decision is strictly positive.
    pub fn is_tracking(&self, x: &FeatureVector) -> Result<bool, LearnError> {
        Ok(self.decision(x)? > 0.0)
    }
}

/// Two-class nu-SVC; `labels[i]` is true for the positive (tracking) class.
pub fn train_ssvm(
    xs: &[FeatureVector],
    labels: &[bool],
    kernel: KernelSpec,
    nu: f64,
    opts: &SolverOptions,
) -> Result<SsvmModel, LearnError> {
    let vocab = common_vocab(xs)?;
    train_ssvm_points(&Points::from_vectors(xs), labels, kernel, nu, opts, vocab)
}

pub fn train_ssvm_points(
    points: &Points,
    labels: &[bool],
    kernel: KernelSpec,
    nu: f64,
    opts: &SolverOptions,
    vocab: String,
) -> Result<SsvmModel, LearnError> {
    kernel.validate()?;
    assert_eq!(points.len(), labels.len(), "one label per point");
    let y: Vec<f64> = labels.iter().map(|&t| if t { 1.0 } else { -1.0 }).collect();
    let mut q = CachedQ::new(points, kernel, &y, opts.cache_bytes);
    let dual = solve_nusvc(&mut q, &y, nu, opts)?;
    Ok(SsvmModel {
        expansion: KernelExpansion::from_dual(points, kernel, &dual.coef, dual.rho),
        nu,
        vocab,
    })
}

/// Sparse rows of a point set (for serialization).
pub(crate) fn rows_of(p: &Points) -> Vec<Sparse> {
    (0..p.len()).map(|i| p.row(i).to_vec()).collect()
}

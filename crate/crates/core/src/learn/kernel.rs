//! Kernels, point sets and the `Q` matrix backends the solver reads from.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::solver::QMatrix;
use super::LearnError;
use crate::features::{sparse_dot, FeatureVector};
use crate::par::Exec;

pub type Sparse = Vec<(u32, f64)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `exp(-gamma * |a - b|^2)`
    Rbf { gamma: f64 },
    Linear,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        KernelSpec::Rbf { gamma }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma.is_finite() && gamma > 0.0) => {
                Err(LearnError::InvalidParam(format!("gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value from the two vectors and their squared norms.
    pub fn eval(&self, a: &[(u32, f64)], na: f64, b: &[(u32, f64)], nb: f64) -> f64 {
        let dot = sparse_dot(a, b);
        match *self {
            KernelSpec::Linear => dot,
            KernelSpec::Rbf { gamma } => (-gamma * (na + nb - 2.0 * dot).max(0.0)).exp(),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Rbf { gamma } => write!(f, "rbf:{gamma}"),
            KernelSpec::Linear => write!(f, "linear"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = LearnError;
    fn from_str(s: &str) -> Result<Self, LearnError> {
        if s == "linear" {
            return Ok(KernelSpec::Linear);
        }
        let bad = || LearnError::InvalidParam(format!("bad kernel `{s}`"));
        let g = s.strip_prefix("rbf:").ok_or_else(bad)?;
        let k = KernelSpec::Rbf {
            gamma: g.parse().map_err(|_| bad())?,
        };
        k.validate()?;
        Ok(k)
    }
}

/// `exp(-gamma |a - b|^2)` between two feature vectors of the same vocabulary.
pub fn rbf(a: &FeatureVector, b: &FeatureVector, gamma: f64) -> Result<f64, LearnError> {
    if a.vocab != b.vocab {
        return Err(LearnError::VocabMismatch {
            expected: a.vocab.clone(),
            found: b.vocab.clone(),
        });
    }
    let k = KernelSpec::rbf(gamma);
    k.validate()?;
    Ok(k.eval(&a.entries, a.norm_sq(), &b.entries, b.norm_sq()))
}

/// Sparse points with cached squared norms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Points {
    rows: Vec<Sparse>,
    norms: Vec<f64>,
}

impl Points {
    pub fn new(rows: Vec<Sparse>) -> Self {
        let norms = rows.iter().map(|r| r.iter().map(|(_, w)| w * w).sum()).collect();
        Points { rows, norms }
    }

    pub fn from_vectors<'a>(vs: impl IntoIterator<Item = &'a FeatureVector>) -> Self {
        Self::new(vs.into_iter().map(|v| v.entries.clone()).collect())
    }

    /// Dense rows; zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        Self::new(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &x)| x != 0.0)
                        .map(|(i, &x)| (i as u32, x))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn subset(&self, idx: &[usize]) -> Points {
        Points {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            norms: idx.iter().map(|&i| self.norms[i]).collect(),
        }
    }

    pub fn kernel(&self, k: &KernelSpec, i: usize, j: usize) -> f64 {
        k.eval(&self.rows[i], self.norms[i], &self.rows[j], self.norms[j])
    }

    /// True when every point equals the first one.
    pub fn all_identical(&self) -> bool {
        self.rows.windows(2).all(|w| w[0] == w[1])
    }
}

/// Full symmetric kernel matrix, computed once and shared by every fold of
/// a grid search.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn compute(points: &Points, kernel: &KernelSpec, exec: Exec) -> Gram {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        exec.for_each_chunk_mut(&mut data, n.max(1), |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = points.kernel(kernel, i, j);
            }
        });
        Gram { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// `Q` over a subset of a precomputed [`Gram`] matrix.
pub struct GramQ<'a> {
    gram: &'a Gram,
    idx: &'a [usize],
    y: &'a [f64],
    buf: Vec<f64>,
}

impl<'a> GramQ<'a> {
    pub fn new(gram: &'a Gram, idx: &'a [usize], y: &'a [f64]) -> Self {
        assert_eq!(idx.len(), y.len());
        GramQ {
            gram,
            idx,
            y,
            buf: vec![0.0; idx.len()],
        }
    }
}

impl QMatrix for GramQ<'_> {
    fn size(&self) -> usize {
        self.idx.len()
    }
    fn diag(&self, i: usize) -> f64 {
        self.gram.get(self.idx[i], self.idx[i])
    }
    fn row(&mut self, i: usize) -> &[f64] {
        let base = self.idx[i] * self.gram.n;
        let yi = self.y[i];
        for (k, (&j, &yj)) in self.idx.iter().zip(self.y).enumerate() {
            self.buf[k] = yi * yj * self.gram.data[base + j];
        }
        &self.buf
    }
}

/// `Q` computed on demand with a least-recently-used row cache bounded by
/// a memory budget.
pub struct CachedQ<'a> {
    points: &'a Points,
    kernel: KernelSpec,
    y: &'a [f64],
    diag: Vec<f64>,
    capacity: usize,
    rows: HashMap<usize, (Vec<f64>, u64)>,
    clock: u64,
    pub hits: u64,
    pub misses: u64,
}

impl<'a> CachedQ<'a> {
    pub fn new(points: &'a Points, kernel: KernelSpec, y: &'a [f64], cache_bytes: usize) -> Self {
        let l = points.len();
        let row_bytes = (l * std::mem::size_of::<f64>()).max(1);
        let capacity = (cache_bytes / row_bytes).max(2);
        let diag = (0..l).map(|i| points.kernel(&kernel, i, i)).collect();
        CachedQ {
            points,
            kernel,
            y,
            diag,
            capacity,
            rows: HashMap::new(),
            clock: 0,
            hits: 0,
            misses: 0,
        }
    }
}

impl QMatrix for CachedQ<'_> {
    fn size(&self) -> usize {
        self.points.len()
    }
    fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }
    fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        let clock = self.clock;
        if self.rows.contains_key(&i) {
            self.hits += 1;
        } else {
            self.misses += 1;
            if self.rows.len() >= self.capacity {
                let oldest = self
                    .rows
                    .iter()
                    .min_by_key(|(_, (_, t))| *t)
                    .map(|(&k, _)| k)
                    .expect("non-empty cache");
                self.rows.remove(&oldest);
            }
            let yi = self.y[i];
            let row = (0..self.points.len())
                .map(|j| yi * self.y[j] * self.points.kernel(&self.kernel, i, j))
                .collect();
            self.rows.insert(i, (row, clock));
        }
        let entry = self.rows.get_mut(&i).expect("row present");
        entry.1 = clock;
        &entry.0
    }
}

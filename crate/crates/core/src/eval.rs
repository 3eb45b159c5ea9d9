//! Evaluation metrics: aggressiveness, confusion/AER, agreement, CDFs.
//!
//! Tracking is the positive class throughout: a script a blocker removes, or
//! a classifier labels tracking, counts as a positive prediction.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::corpus::{normalized_source, source_hash, Label, ScriptRecord};
use crate::report::{Cell, Table};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("page `{0}` has no scripts with the tool off")]
    EmptyPage(String),
    #[error("page `{page}`: script {script} appears only with the tool on")]
    ContainmentViolation { page: String, script: String },
    #[error("record `{0}` has a prediction but no label")]
    MissingLabel(String),
    #[error("no {0} records to normalize by")]
    EmptyClass(Label),
    #[error("outputs cover different record sets ({0})")]
    UniverseMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("surrogate list line {line}: {msg}")]
    BadSurrogate { line: usize, msg: String },
}

// ---- surrogates ----

/// Stubs injected by blockers in place of the scripts they remove.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SurrogateList {
    hashes: BTreeSet<String>,
    patterns: BTreeSet<String>,
}

impl SurrogateList {
    /// Lines `hash:<sha256 of unpacked source>` or `pattern:<substring>`;
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut list = SurrogateList::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once(':') {
                Some(("hash", h)) if !h.is_empty() => {
                    list.hashes.insert(h.to_ascii_lowercase());
                }
                Some(("pattern", p)) if !p.is_empty() => {
                    list.patterns.insert(p.to_string());
                }
                _ => {
                    return Err(EvalError::BadSurrogate {
                        line: n + 1,
                        msg: format!("expected hash:<hex> or pattern:<text>, got `{line}`"),
                    })
                }
            }
        }
        Ok(list)
    }

    pub fn add_source(&mut self, source: &str) {
        self.hashes.insert(source_hash(&normalized_source(source)));
    }

    pub fn add_pattern(&mut self, pattern: &str) {
        self.patterns.insert(pattern.to_string());
    }

    pub fn len(&self) -> usize {
        self.hashes.len() + self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, source: &str) -> bool {
        (!self.hashes.is_empty() && self.hashes.contains(&source_hash(&normalized_source(source))))
            || self.patterns.iter().any(|p| source.contains(p.as_str()))
    }
}

// ---- aggressiveness ----

/// `a(h) = 1 - |js(p(h))| / |js(h)|` with surrogates removed from both sides.
pub fn aggressiveness(
    page: &str,
    off: &[ScriptRecord],
    on: &[ScriptRecord],
    surrogates: &SurrogateList,
) -> Result<f64, EvalError> {
    let keep = |rs: &[ScriptRecord]| -> BTreeSet<String> {
        rs.iter()
            .filter(|r| !surrogates.matches(&r.source))
            .map(ScriptRecord::identity)
            .collect()
    };
    let off = keep(off);
    let on = keep(on);
    if off.is_empty() {
        return Err(EvalError::EmptyPage(page.to_string()));
    }
    if let Some(extra) = on.difference(&off).next() {
        return Err(EvalError::ContainmentViolation {
            page: page.to_string(),
            script: extra.clone(),
        });
    }
    Ok(1.0 - on.len() as f64 / off.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggressivenessReport {
    pub per_page: Vec<(String, f64)>,
    pub cdf: Vec<(f64, f64)>,
    pub mean: f64,
}

impl AggressivenessReport {
    pub fn from_values(per_page: Vec<(String, f64)>) -> Result<Self, EvalError> {
        let values: Vec<f64> = per_page.iter().map(|(_, a)| *a).collect();
        let cdf = cdf_table(&values)?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(AggressivenessReport { per_page, cdf, mean })
    }

    pub fn pages_table(&self) -> Table {
        let mut t = Table::new(["page", "aggressiveness"]);
        for (p, a) in &self.per_page {
            t.push(vec![p.clone().into(), (*a).into()]);
        }
        t
    }

    pub fn cdf_table(&self) -> Table {
        cdf_to_table(&self.cdf, "aggressiveness")
    }
}

// ---- confusion ----

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionReport {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    pub fn_: f64,
    pub aer: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl ConfusionReport {
    /// From `(predicted, truth)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Result<Self, EvalError> {
        let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (pred, truth) in pairs {
            match (pred.is_tracking(), truth.is_tracking()) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        let pos = tp + fn_;
        let neg = fp + tn;
        if pos == 0 {
            return Err(EvalError::EmptyClass(Label::Tracking));
        }
        if neg == 0 {
            return Err(EvalError::EmptyClass(Label::Functional));
        }
        let tpr = tp as f64 / pos as f64;
        let fpr = fp as f64 / neg as f64;
        Ok(ConfusionReport {
            tp: tpr,
            fp: fpr,
            tn: tn as f64 / neg as f64,
            fn_: fn_ as f64 / pos as f64,
            aer: (fpr + fn_ as f64 / pos as f64) / 2.0,
            positives: pos,
            negatives: neg,
        })
    }
}

/// Rates of `predictions` against `labels`, both keyed by record id.
pub fn confusion(
    predictions: &BTreeMap<String, Label>,
    labels: &BTreeMap<String, Label>,
) -> Result<ConfusionReport, EvalError> {
    let mut pairs = Vec::with_capacity(predictions.len());
    for (id, &p) in predictions {
        let &t = labels.get(id).ok_or_else(|| EvalError::MissingLabel(id.clone()))?;
        pairs.push((p, t));
    }
    ConfusionReport::from_pairs(pairs)
}

// ---- agreement ----

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    /// `|T_c ∩ T_p| / |J|`
    pub tc_tp: f64,
    /// `|T_c ∩ F_p| / |J|`
    pub tc_fp: f64,
    /// `|F_c ∩ T_p| / |J|`
    pub fc_tp: f64,
    /// `|F_c ∩ F_p| / |J|`
    pub fc_fp: f64,
    pub agreement: f64,
    pub disagreement: f64,
    pub total: usize,
    /// Ids the classifier calls tracking and the tool lets through.
    pub only_classifier: Vec<String>,
    /// Ids the tool blocks and the classifier calls functional.
    pub only_tool: Vec<String>,
}

pub fn agreement(
    classifier: &BTreeMap<String, Label>,
    tool: &BTreeMap<String, Label>,
) -> Result<AgreementReport, EvalError> {
    if classifier.len() != tool.len() || classifier.keys().any(|k| !tool.contains_key(k)) {
        let missing = classifier
            .keys()
            .find(|k| !tool.contains_key(*k))
            .or_else(|| tool.keys().find(|k| !classifier.contains_key(*k)))
            .cloned()
            .unwrap_or_default();
        return Err(EvalError::UniverseMismatch(format!("e.g. `{missing}`")));
    }
    if classifier.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    fn set(m: &BTreeMap<String, Label>, l: Label) -> BTreeSet<&String> {
        m.iter().filter(|(_, &v)| v == l).map(|(k, _)| k).collect()
    }
    let tc = set(classifier, Label::Tracking);
    let fc = set(classifier, Label::Functional);
    let tp = set(tool, Label::Tracking);
    let fp = set(tool, Label::Functional);
    let n = classifier.len() as f64;
    let ratio = |a: &BTreeSet<&String>, b: &BTreeSet<&String>| a.intersection(b).count() as f64 / n;
    let (tc_tp, tc_fp, fc_tp, fc_fp) = (ratio(&tc, &tp), ratio(&tc, &fp), ratio(&fc, &tp), ratio(&fc, &fp));
    let agreement = tc_tp + fc_fp;
    Ok(AgreementReport {
        tc_tp,
        tc_fp,
        fc_tp,
        fc_fp,
        agreement,
        disagreement: 1.0 - agreement,
        total: classifier.len(),
        only_classifier: tc.intersection(&fp).map(|s| s.to_string()).collect(),
        only_tool: fc.intersection(&tp).map(|s| s.to_string()).collect(),
    })
}

impl AgreementReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["cell", "ratio"]);
        for (k, v) in [
            ("Tc&Tp", self.tc_tp),
            ("Tc&Fp", self.tc_fp),
            ("Fc&Tp", self.fc_tp),
            ("Fc&Fp", self.fc_fp),
            ("agreement", self.agreement),
            ("disagreement", self.disagreement),
        ] {
            t.push(vec![k.into(), v.into()]);
        }
        t
    }
}

// ---- CDF ----

/// Empirical CDF: distinct sorted values with the fraction of inputs `<=` each.
pub fn cdf_table(values: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = frac,
            _ => out.push((*x, frac)),
        }
    }
    Ok(out)
}

pub fn cdf_to_table(cdf: &[(f64, f64)], value_column: &str) -> Table {
    let mut t = Table::new([value_column, "cdf"]);
    for &(v, f) in cdf {
        t.push(vec![Cell::Num(v), Cell::Num(f)]);
    }
    t
}

/// Value at quantile `q` of an empirical CDF (smallest value whose
/// fraction reaches `q`).
pub fn cdf_quantile(cdf: &[(f64, f64)], q: f64) -> f64 {
    cdf.iter()
        .find(|&&(_, f)| f + 1e-12 >= q)
        .or(cdf.last())
        .map(|&(v, _)| v)
        .unwrap_or(f64::NAN)
}

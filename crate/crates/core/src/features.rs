//! Boolean tf-idf features over three term definitions.
//!
//! * **syntactic**: each non-blank line of the unpacked source, trimmed;
//! * **sequential n-gram**: for canonical statement `i`, statements
//!   `max(0, i-n+1)..=i` joined with `⇐` (windows at the start are truncated,
//!   not dropped);
//! * **PDG n-gram**: for each statement, its backward dependency paths of up
//!   to `n` nodes, serialized and sorted, joined with ` ∥ `.
//!
//! Term frequency is boolean, `idf(t) = ln(|J| / df(t))`. When a cap is set,
//! the vocabulary keeps the `cap` terms with the largest corpus-summed tf-idf
//! (`df * idf` under boolean tf), ties broken lexicographically.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canon::{canonicalize_source, CanonError, CanonicalProgram, StmtKind};
use crate::corpus::unpack;
use crate::eval::cdf_table;
use crate::par::Exec;
use crate::pdg::{backward_paths_with, build_pdg, serialize_path, DependencyGraph, PATH_SEP, TERM_SEP};

pub type TermSet = BTreeSet<String>;

/// Default vocabulary cap for the syntactic model.
pub const SYNTACTIC_CAP: usize = 200;
const VOCAB_MAGIC: &str = "# jstrack vocabulary v1";

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("vectors come from different vocabularies ({0} vs {1})")]
    VocabMismatch(String, String),
    #[error("the pdg model needs a dependency graph")]
    MissingGraph,
    #[error("the syntactic model works on source text, not canonical form")]
    NeedsSource,
    #[error("invalid feature model: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Canon(#[from] CanonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Syntactic,
    SequentialNgram,
    PdgNgram,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureModelSpec {
    pub kind: FeatureKind,
    /// Gram length; `None` for the syntactic model.
    pub n: Option<usize>,
    pub cap: Option<usize>,
    /// Whether `begin`/`end` lines take part in sequential n-grams.
    pub markers: bool,
    /// Keep PDG paths that end before reaching `n` nodes.
    pub maximal_paths: bool,
}

impl FeatureModelSpec {
    pub fn syntactic() -> Self {
        FeatureModelSpec {
            kind: FeatureKind::Syntactic,
            n: None,
            cap: Some(SYNTACTIC_CAP),
            markers: true,
            maximal_paths: true,
        }
    }

    pub fn sequential(n: usize) -> Self {
        FeatureModelSpec {
            kind: FeatureKind::SequentialNgram,
            n: Some(n),
            cap: None,
            markers: true,
            maximal_paths: true,
        }
    }

    pub fn pdg(n: usize) -> Self {
        FeatureModelSpec {
            kind: FeatureKind::PdgNgram,
            n: Some(n),
            ..Self::sequential(n)
        }
    }

    pub fn with_cap(mut self, cap: Option<usize>) -> Self {
        self.cap = cap;
        self
    }

    /// The five models of the validation table.
    pub fn paper_models() -> Vec<FeatureModelSpec> {
        ["syntactic", "seq4", "seq7", "pdg4", "pdg7"]
            .iter()
            .map(|s| s.parse().expect("known model"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        match (self.kind, self.n) {
            (FeatureKind::Syntactic, None) => {}
            (FeatureKind::Syntactic, Some(_)) => {
                return Err(FeatureError::InvalidSpec("syntactic model takes no n".into()))
            }
            (_, Some(n)) if (1..=16).contains(&n) => {}
            (_, n) => return Err(FeatureError::InvalidSpec(format!("n must be in 1..=16, got {n:?}"))),
        }
        if self.cap == Some(0) {
            return Err(FeatureError::InvalidSpec("cap must be positive".into()));
        }
        Ok(())
    }

    fn gram(&self) -> usize {
        self.n.unwrap_or(1)
    }
}

impl fmt::Display for FeatureModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FeatureKind::Syntactic => f.write_str("syntactic"),
            FeatureKind::SequentialNgram => write!(f, "seq{}", self.gram()),
            FeatureKind::PdgNgram => write!(f, "pdg{}", self.gram()),
        }
    }
}

impl FromStr for FeatureModelSpec {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, FeatureError> {
        let bad = || FeatureError::InvalidSpec(format!("unknown feature model `{s}`"));
        let spec = if s == "syntactic" {
            Self::syntactic()
        } else if let Some(n) = s.strip_prefix("seq") {
            Self::sequential(n.parse().map_err(|_| bad())?)
        } else if let Some(n) = s.strip_prefix("pdg") {
            Self::pdg(n.parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        spec.validate()?;
        Ok(spec)
    }
}

// ---- terms ----

/// Non-blank lines of the unpacked source. Source that does not lex is
/// split as-is.
pub fn syntactic_terms(source: &str) -> TermSet {
    let text = unpack(source).unwrap_or_else(|_| source.to_string());
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn sequential_terms(program: &CanonicalProgram, n: usize, markers: bool) -> TermSet {
    let lines: Vec<&str> = program
        .statements
        .iter()
        .filter(|s| markers || !matches!(s.kind, StmtKind::Begin | StmtKind::End))
        .map(|s| s.text.as_str())
        .collect();
    (0..lines.len())
        .map(|i| lines[(i + 1).saturating_sub(n)..=i].join(PATH_SEP))
        .collect()
}

pub fn pdg_terms(program: &CanonicalProgram, g: &DependencyGraph, n: usize, maximal: bool) -> TermSet {
    let mut out = TermSet::new();
    for anchor in 0..program.len() {
        let set = backward_paths_with(g, anchor, n, maximal);
        if set.paths.is_empty() {
            continue;
        }
        let paths: BTreeSet<String> = set.paths.iter().map(|p| serialize_path(program, p)).collect();
        out.insert(paths.into_iter().collect::<Vec<_>>().join(TERM_SEP));
    }
    out
}

/// Terms of a canonical program under a semantic model.
pub fn extract_terms(
    program: &CanonicalProgram,
    g: Option<&DependencyGraph>,
    spec: &FeatureModelSpec,
) -> Result<TermSet, FeatureError> {
    match spec.kind {
        FeatureKind::Syntactic => Err(FeatureError::NeedsSource),
        FeatureKind::SequentialNgram => Ok(sequential_terms(program, spec.gram(), spec.markers)),
        FeatureKind::PdgNgram => {
            let g = g.ok_or(FeatureError::MissingGraph)?;
            Ok(pdg_terms(program, g, spec.gram(), spec.maximal_paths))
        }
    }
}

/// Terms of raw source under any model.
pub fn terms_from_source(source: &str, spec: &FeatureModelSpec) -> Result<TermSet, FeatureError> {
    if spec.kind == FeatureKind::Syntactic {
        return Ok(syntactic_terms(source));
    }
    let program = canonicalize_source(source)?;
    let g = (spec.kind == FeatureKind::PdgNgram).then(|| build_pdg(&program));
    extract_terms(&program, g.as_ref(), spec)
}

// ---- vocabulary ----

#[derive(Debug, Clone, PartialEq)]
pub struct TermVocabulary {
    pub spec: FeatureModelSpec,
    pub corpus_size: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
    df: Vec<u32>,
    index: HashMap<String, u32>,
}

impl TermVocabulary {
    fn from_parts(spec: FeatureModelSpec, corpus_size: usize, rows: Vec<(String, u32, f64)>) -> Self {
        let mut v = TermVocabulary {
            spec,
            corpus_size,
            terms: Vec::with_capacity(rows.len()),
            idf: Vec::with_capacity(rows.len()),
            df: Vec::with_capacity(rows.len()),
            index: HashMap::with_capacity(rows.len()),
        };
        for (i, (t, df, idf)) in rows.into_iter().enumerate() {
            v.index.insert(t.clone(), i as u32);
            v.terms.push(t);
            v.df.push(df);
            v.idf.push(idf);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self, i: usize) -> f64 {
        self.idf[i]
    }

    pub fn df(&self, i: usize) -> u32 {
        self.df[i]
    }

    pub fn lookup(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| i as usize)
    }

    /// Short content hash identifying this vocabulary.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{VOCAB_MAGIC}");
        let _ = writeln!(out, "model={}", self.spec);
        let _ = writeln!(out, "n={}", self.spec.n.map_or("none".into(), |n| n.to_string()));
        let _ = writeln!(out, "cap={}", self.spec.cap.map_or("none".into(), |c| c.to_string()));
        let _ = writeln!(out, "markers={}", self.spec.markers);
        let _ = writeln!(out, "maximal_paths={}", self.spec.maximal_paths);
        let _ = writeln!(out, "log=natural");
        let _ = writeln!(out, "rank=sum_tfidf");
        let _ = writeln!(out, "corpus_size={}", self.corpus_size);
        for (i, t) in self.terms.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{}\t{}\t{}", self.idf[i], self.df[i], escape_term(t));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FeatureError> {
        let mut lines = text.lines().enumerate();
        let perr = |line: usize, msg: &str| FeatureError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        match lines.next() {
            Some((_, l)) if l == VOCAB_MAGIC => {}
            _ => return Err(perr(0, "not a vocabulary file (bad header)")),
        }
        let mut header = HashMap::new();
        let mut rows = Vec::new();
        for (n, line) in lines {
            if rows.is_empty() && !line.contains('\t') {
                let (k, v) = line.split_once('=').ok_or_else(|| perr(n, "expected key=value"))?;
                header.insert(k.to_string(), v.to_string());
                continue;
            }
            let mut parts = line.splitn(4, '\t');
            let (Some(rank), Some(idf), Some(df), Some(term)) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(perr(n, "expected rank, idf, df and term"));
            };
            if rank.parse::<usize>().ok() != Some(rows.len()) {
                return Err(perr(n, "ranks must be consecutive from 0"));
            }
            let idf: f64 = idf.parse().map_err(|_| perr(n, "bad idf"))?;
            let df: u32 = df.parse().map_err(|_| perr(n, "bad df"))?;
            rows.push((unescape_term(term), df, idf));
        }
        let get = |k: &str| header.get(k).ok_or_else(|| perr(0, &format!("missing header `{k}`")));
        let mut spec: FeatureModelSpec = get("model")?.parse()?;
        spec.cap = match get("cap")?.as_str() {
            "none" => None,
            c => Some(c.parse().map_err(|_| perr(0, "bad cap"))?),
        };
        spec.markers = get("markers")? == "true";
        spec.maximal_paths = get("maximal_paths")? == "true";
        if get("log")? != "natural" {
            return Err(perr(0, "only natural-log vocabularies are supported"));
        }
        let corpus_size = get("corpus_size")?.parse().map_err(|_| perr(0, "bad corpus_size"))?;
        Ok(Self::from_parts(spec, corpus_size, rows))
    }
}

fn escape_term(t: &str) -> String {
    t.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape_term(t: &str) -> String {
    let mut out = String::with_capacity(t.len());
    let mut it = t.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(o) => out.push(o),
            None => out.push('\\'),
        }
    }
    out
}

/// Count document frequencies (in parallel chunks) and rank the terms.
pub fn fit_vocabulary(
    corpus: &[TermSet],
    spec: &FeatureModelSpec,
    exec: Exec,
) -> Result<TermVocabulary, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    spec.validate()?;
    const CHUNK: usize = 64;
    let chunks: Vec<&[TermSet]> = corpus.chunks(CHUNK).collect();
    let partial: Vec<HashMap<&str, u32>> = exec.map(&chunks, |docs| {
        let mut m = HashMap::new();
        for d in docs.iter() {
            for t in d {
                *m.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        m
    });
    let mut df: HashMap<&str, u32> = HashMap::new();
    for m in partial {
        for (t, c) in m {
            *df.entry(t).or_insert(0) += c;
        }
    }
    let n = corpus.len() as f64;
    let mut rows: Vec<(String, u32, f64)> = df
        .into_iter()
        .map(|(t, d)| (t.to_string(), d, (n / d as f64).ln()))
        .collect();
    rows.sort_by(|a, b| {
        let sa = a.1 as f64 * a.2;
        let sb = b.1 as f64 * b.2;
        sb.total_cmp(&sa).then_with(|| a.0.cmp(&b.0))
    });
    if let Some(cap) = spec.cap {
        rows.truncate(cap);
    }
    Ok(TermVocabulary::from_parts(spec.clone(), corpus.len(), rows))
}

// ---- vectors ----

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub program_id: String,
    /// Fingerprint of the vocabulary the indices refer to.
    pub vocab: String,
    /// `(term index, idf)` with strictly increasing indices.
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        sparse_dot(&self.entries, &other.entries)
    }

    pub fn scaled(&self, k: f64) -> FeatureVector {
        FeatureVector {
            entries: self.entries.iter().map(|&(i, w)| (i, w * k)).collect(),
            ..self.clone()
        }
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn normalized(&self) -> FeatureVector {
        FeatureVector {
            entries: unit(&self.entries),
            ..self.clone()
        }
    }
}

/// Scale sparse entries to unit Euclidean length (zero stays zero).
pub fn unit(entries: &[(u32, f64)]) -> Vec<(u32, f64)> {
    let n: f64 = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if n == 0.0 {
        return entries.to_vec();
    }
    entries.iter().map(|&(i, w)| (i, w / n)).collect()
}

pub fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Boolean tf-idf vector; out-of-vocabulary terms are dropped.
pub fn vectorize(program_id: &str, terms: &TermSet, vocab: &TermVocabulary) -> FeatureVector {
    vectorize_with(program_id, terms, vocab, vocab.fingerprint())
}

/// As [`vectorize`] with a precomputed fingerprint (hashing the vocabulary
/// once per batch rather than once per program).
pub fn vectorize_with(program_id: &str, terms: &TermSet, vocab: &TermVocabulary, fingerprint: String) -> FeatureVector {
    let mut entries: Vec<(u32, f64)> = terms
        .iter()
        .filter_map(|t| vocab.lookup(t))
        .map(|i| (i as u32, vocab.idf[i]))
        .collect();
    entries.sort_unstable_by_key(|e| e.0);
    FeatureVector {
        program_id: program_id.to_string(),
        vocab: fingerprint,
        entries,
    }
}

pub fn check_same_vocab(a: &FeatureVector, b: &FeatureVector) -> Result<(), FeatureError> {
    if a.vocab != b.vocab {
        return Err(FeatureError::VocabMismatch(a.vocab.clone(), b.vocab.clone()));
    }
    Ok(())
}

/// `a·b / (|a||b|)`, 0 when either vector is zero.
pub fn cosine(a: &FeatureVector, b: &FeatureVector) -> Result<f64, FeatureError> {
    check_same_vocab(a, b)?;
    let na = a.norm_sq();
    let nb = b.norm_sq();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((a.dot(b) / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0))
}

/// Empirical CDF of all cross-group cosine similarities.
pub fn similarity_cdf(
    group_a: &[FeatureVector],
    group_b: &[FeatureVector],
    exec: Exec,
) -> Result<Vec<(f64, f64)>, FeatureError> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let rows: Vec<Result<Vec<f64>, FeatureError>> =
        exec.map(group_a, |a| group_b.iter().map(|b| cosine(a, b)).collect());
    let mut values = Vec::with_capacity(group_a.len() * group_b.len());
    for r in rows {
        values.extend(r?);
    }
    Ok(cdf_table(&values).expect("non-empty"))
}

/// `# vocab=<fingerprint>` then `program_id<TAB>idx:weight,...` per vector.
pub fn write_vectors(vectors: &[FeatureVector]) -> String {
    let mut out = String::new();
    if let Some(v) = vectors.first() {
        let _ = writeln!(out, "# vocab={}", v.vocab);
    }
    for v in vectors {
        let entries: Vec<String> = v.entries.iter().map(|(i, w)| format!("{i}:{w}")).collect();
        let _ = writeln!(out, "{}\t{}", v.program_id, entries.join(","));
    }
    out
}

pub fn read_vectors(text: &str) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut vocab = String::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let perr = |msg: &str| FeatureError::Parse {
            line: n + 1,
            msg: msg.to_string(),
        };
        if let Some(v) = line.strip_prefix("# vocab=") {
            vocab = v.to_string();
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line.split_once('\t').ok_or_else(|| perr("expected id<TAB>entries"))?;
        let mut entries = Vec::new();
        for e in rest.split(',').filter(|e| !e.is_empty()) {
            let (i, w) = e.split_once(':').ok_or_else(|| perr("expected idx:weight"))?;
            let i: u32 = i.parse().map_err(|_| perr("bad index"))?;
            let w: f64 = w.parse().map_err(|_| perr("bad weight"))?;
            if entries.last().is_some_and(|&(p, _)| p >= i) {
                return Err(perr("indices must increase"));
            }
            entries.push((i, w));
        }
        out.push(FeatureVector {
            program_id: id.to_string(),
            vocab: vocab.clone(),
            entries,
        });
    }
    Ok(out)
}

//! Trained classifiers bundled with their vocabulary, and the text format
//! they are saved in.
//!
//! ```text
//! # jstrack model v1
//! kind=ocsvm            (ocsvm | pu | ssvm)
//! kernel=rbf:0.125
//! nu=0.0625           (cost=... for pu)
//! rho=...
//! ...                   (kind-specific keys)
//! vocab=<fingerprint>
//! support=<count>
//! <coef>\t<idx>:<w>,...
//! vocab_lines=<count>
//! <vocabulary text>
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so a reloaded model
//! reproduces decision values exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::kernel::{KernelSpec, Points, Sparse};
use super::platt::Sigmoid;
use super::pu::PuModel;
use super::svm::{rows_of, KernelExpansion, OcsvmModel, SsvmModel};
use super::LearnError;
use crate::features::{vectorize_with, FeatureVector, TermSet, TermVocabulary};

pub const MODEL_MAGIC: &str = "# jstrack model v";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Ocsvm,
    Pu,
    Ssvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Ocsvm, ClassifierKind::Pu, ClassifierKind::Ssvm];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Ocsvm => "ocsvm",
            ClassifierKind::Pu => "pu",
            ClassifierKind::Ssvm => "ssvm",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = LearnError;
    fn from_str(s: &str) -> Result<Self, LearnError> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LearnError::InvalidParam(format!("unknown classifier `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Ocsvm(OcsvmModel),
    Pu(PuModel),
    Ssvm(SsvmModel),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Ocsvm(_) => ClassifierKind::Ocsvm,
            Model::Pu(_) => ClassifierKind::Pu,
            Model::Ssvm(_) => ClassifierKind::Ssvm,
        }
    }

    fn expansion(&self) -> &KernelExpansion {
        match self {
            Model::Ocsvm(m) => &m.expansion,
            Model::Pu(m) => &m.g,
            Model::Ssvm(m) => &m.expansion,
        }
    }

    fn vocab_fp(&self) -> &str {
        match self {
            Model::Ocsvm(m) => &m.vocab,
            Model::Pu(m) => &m.vocab,
            Model::Ssvm(m) => &m.vocab,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub tracking: bool,
    /// Decision value (OCSVM, SSVM) or probability (PU).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub vocab: TermVocabulary,
}

impl TrainedModel {
    /// Classify a vector over this model's vocabulary. It is scaled to unit
    /// length first, as the training vectors were.
    pub fn classify(&self, x: &FeatureVector) -> Result<Prediction, LearnError> {
        let x = &x.normalized();
        Ok(match &self.model {
            Model::Ocsvm(m) => {
                let d = m.decision(x)?;
                Prediction {
                    tracking: m.accepts(d),
                    score: if m.paper_sign { -d } else { d },
                }
            }
            Model::Pu(m) => {
                let p = m.prob(x)?;
                Prediction {
                    tracking: p >= m.threshold,
                    score: p,
                }
            }
            Model::Ssvm(m) => {
                let d = m.decision(x)?;
                Prediction {
                    tracking: d > 0.0,
                    score: d,
                }
            }
        })
    }

    /// Vectorize `terms` with the stored vocabulary and classify.
    pub fn classify_terms(&self, program_id: &str, terms: &TermSet) -> Result<Prediction, LearnError> {
        self.classify(&vectorize_with(program_id, terms, &self.vocab, self.model.vocab_fp().to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.model;
        let e = m.expansion();
        let _ = writeln!(out, "{MODEL_MAGIC}{MODEL_VERSION}");
        let _ = writeln!(out, "kind={}", m.kind());
        let _ = writeln!(out, "kernel={}", e.kernel);
        match m {
            Model::Ocsvm(o) => {
                let _ = writeln!(out, "nu={}", o.nu);
                let _ = writeln!(out, "degenerate={}", o.degenerate);
                let _ = writeln!(out, "paper_sign={}", o.paper_sign);
                let _ = writeln!(out, "margin={}", o.margin);
            }
            Model::Pu(p) => {
                let _ = writeln!(out, "cost={}", p.cost);
                let _ = writeln!(out, "sigmoid_a={}", p.sigmoid.a);
                let _ = writeln!(out, "sigmoid_b={}", p.sigmoid.b);
                let _ = writeln!(out, "c={}", p.c);
                let _ = writeln!(out, "threshold={}", p.threshold);
                let _ = writeln!(out, "collapsed={}", p.collapsed);
            }
            Model::Ssvm(s) => {
                let _ = writeln!(out, "nu={}", s.nu);
            }
        }
        let _ = writeln!(out, "rho={}", e.rho);
        let _ = writeln!(out, "vocab={}", m.vocab_fp());
        let _ = writeln!(out, "support={}", e.coef.len());
        for (c, row) in e.coef.iter().zip(rows_of(&e.support)) {
            let cells: Vec<String> = row.iter().map(|(i, w)| format!("{i}:{w}")).collect();
            let _ = writeln!(out, "{c}\t{}", cells.join(","));
        }
        let vt = self.vocab.to_text();
        let _ = writeln!(out, "vocab_lines={}", vt.lines().count());
        out.push_str(&vt);
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let corrupt = |msg: String| LearnError::CorruptModel(msg);
        let mut lines = text.lines();
        let first = lines.next().ok_or_else(|| corrupt("empty file".into()))?;
        let version: u32 = first
            .strip_prefix(MODEL_MAGIC)
            .ok_or_else(|| corrupt("missing model header".into()))?
            .trim()
            .parse()
            .map_err(|_| corrupt("bad version".into()))?;
        if version != MODEL_VERSION {
            return Err(LearnError::VersionMismatch {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let mut kv = BTreeMap::new();
        let support_n: usize = loop {
            let l = lines.next().ok_or_else(|| corrupt("truncated header".into()))?;
            let (k, v) = l.split_once('=').ok_or_else(|| corrupt(format!("bad header line `{l}`")))?;
            if k == "support" {
                break v.parse().map_err(|_| corrupt("bad support count".into()))?;
            }
            kv.insert(k.to_string(), v.to_string());
        };
        let get = |k: &str| kv.get(k).ok_or_else(|| corrupt(format!("missing `{k}`")));
        let num = |k: &str| -> Result<f64, LearnError> { get(k)?.parse().map_err(|_| corrupt(format!("bad `{k}`"))) };
        let flag = |k: &str| -> Result<bool, LearnError> { get(k)?.parse().map_err(|_| corrupt(format!("bad `{k}`"))) };

        let mut coef = Vec::with_capacity(support_n);
        let mut rows: Vec<Sparse> = Vec::with_capacity(support_n);
        for _ in 0..support_n {
            let l = lines.next().ok_or_else(|| corrupt("truncated support vectors".into()))?;
            let (c, cells) = l.split_once('\t').ok_or_else(|| corrupt("bad support line".into()))?;
            coef.push(c.parse().map_err(|_| corrupt("bad coefficient".into()))?);
            let mut row = Vec::new();
            for cell in cells.split(',').filter(|s| !s.is_empty()) {
                let (i, w) = cell.split_once(':').ok_or_else(|| corrupt("bad support entry".into()))?;
                row.push((
                    i.parse().map_err(|_| corrupt("bad index".into()))?,
                    w.parse().map_err(|_| corrupt("bad weight".into()))?,
                ));
            }
            rows.push(row);
        }
        let vl = lines.next().ok_or_else(|| corrupt("missing vocabulary".into()))?;
        let vn: usize = vl
            .strip_prefix("vocab_lines=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| corrupt("bad vocab_lines".into()))?;
        let mut vt = String::new();
        for _ in 0..vn {
            vt.push_str(lines.next().ok_or_else(|| corrupt("truncated vocabulary".into()))?);
            vt.push('\n');
        }
        if lines.next() != Some("end") {
            return Err(corrupt("missing end trailer".into()));
        }
        let vocab = TermVocabulary::from_text(&vt).map_err(|e| corrupt(format!("vocabulary: {e}")))?;
        let fp = get("vocab")?.clone();
        if vocab.fingerprint() != fp {
            return Err(corrupt("vocabulary does not match its fingerprint".into()));
        }

        let kernel: KernelSpec = get("kernel")?.parse()?;
        let expansion = KernelExpansion {
            kernel,
            support: Points::new(rows),
            coef,
            rho: num("rho")?,
        };
        let model = match get("kind")?.parse::<ClassifierKind>()? {
            ClassifierKind::Ocsvm => Model::Ocsvm(OcsvmModel {
                expansion,
                nu: num("nu")?,
                vocab: fp,
                degenerate: flag("degenerate")?,
                paper_sign: flag("paper_sign")?,
                margin: num("margin")?,
            }),
            ClassifierKind::Ssvm => Model::Ssvm(SsvmModel {
                expansion,
                nu: num("nu")?,
                vocab: fp,
            }),
            ClassifierKind::Pu => Model::Pu(PuModel {
                g: expansion,
                cost: num("cost")?,
                vocab: fp,
                sigmoid: Sigmoid {
                    a: num("sigmoid_a")?,
                    b: num("sigmoid_b")?,
                },
                c: num("c")?,
                threshold: num("threshold")?,
                collapsed: flag("collapsed")?,
            }),
        };
        Ok(TrainedModel { model, vocab })
    }
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), LearnError> {
    std::fs::write(path, model.to_text()).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, LearnError> {
    let text = std::fs::read_to_string(path).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TrainedModel::from_text(&text)
}

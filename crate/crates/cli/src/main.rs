//! `jstrack` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad or missing data, 3 numeric
//! failure in a solver.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use jstrack::canon::{canonicalize_source, emit};
use jstrack::corpus::{apply_labels, ingest_bundle, load_dataset, save_dataset, unpack, Dataset, Label, Tool};
use jstrack::eval::{agreement, aggressiveness, cdf_quantile, confusion, AggressivenessReport, SurrogateList};
use jstrack::features::{fit_vocabulary, similarity_cdf, vectorize_with, write_vectors, FeatureModelSpec, FeatureVector};
use jstrack::learn::{save_model, load_model, ClassifierKind, GridSpec, Model};
use jstrack::par::Exec;
use jstrack::pdg::{build_pdg, to_dot};
use jstrack::pipeline::{
    featurize_records, parse_label_map, pipeline_validate, predictions_to_text, train_model, Tuning, ValidateConfig,
};
use jstrack::report::{Cell, Table};
use jstrack::synth::{write_bundle, BundleConfig, SynthConfig};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] jstrack::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

/// Shorthand for lifting any core error into a `CliError`.
fn core<E: Into<jstrack::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "jstrack", version, about = "Classify JavaScript programs as tracking or functional")]
struct Cli {
    #[command(flatten)]
    opts: Flags,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. The same keys are accepted in the
/// `--config` TOML file; flags given on the command line win.
#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML file with default values for the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Feature models: syntactic, seq4, seq7, pdg4, pdg7 (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    features: Vec<String>,
    /// Classifiers: ocsvm, pu, ssvm (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    model: Vec<String>,
    /// Fixed nu (cost = 1/nu for PU); needs --gamma.
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Fixed RBF gamma; needs --nu.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Choose gamma and nu by 5-fold grid search (the default without --nu/--gamma).
    #[arg(long, global = true)]
    grid_search: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report one-class scores as `rho - sum a K` (lower is more tracking-like).
    #[arg(long, global = true)]
    paper_sign: bool,
    /// Vocabulary size cap; 0 disables it. Defaults to 200 for syntactic.
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Text,
    Jsonl,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    features: Option<String>,
    model: Option<String>,
    nu: Option<f64>,
    gamma: Option<f64>,
    grid_search: Option<bool>,
    seed: Option<u64>,
    threads: Option<usize>,
    paper_sign: Option<bool>,
    cap: Option<usize>,
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic page bundle (off and AP snapshots, labels, tool outcomes).
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        size: usize,
        #[arg(long, default_value_t = 20)]
        pages: usize,
    },
    /// Extract scripts from a snapshot bundle into a dataset manifest.
    Ingest {
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only this blocker configuration (off, NS, GT, AP, DC, PB, ...).
        #[arg(long)]
        tool: Option<String>,
        /// `identity<TAB>label[<TAB>rule]` lines to apply.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Pretty-print packed or minified JavaScript.
    Unpack {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the canonical form of a script.
    Canonicalize {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the program dependency graph of a script as Graphviz DOT.
    Pdg {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the vocabulary and tf-idf vectors of a dataset per feature model.
    Featurize {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one classifier on every labelled record and save it.
    Train {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label every record of a dataset with a saved model.
    Classify {
        #[arg(value_name = "MODEL")]
        model_file: PathBuf,
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the held-out validation protocol.
    Validate {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Confusion rates of predictions against the labels of a dataset.
    Evaluate {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-page share of scripts removed by a blocker, and its CDF.
    Aggressiveness {
        #[arg(long)]
        off: PathBuf,
        #[arg(long)]
        on: PathBuf,
        #[arg(long)]
        surrogates: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-page values here.
        #[arg(long)]
        per_page: Option<PathBuf>,
    },
    /// Agreement between classifier predictions and blocker outcomes.
    Agree {
        #[arg(long)]
        classifier: PathBuf,
        #[arg(long)]
        tool: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cosine-similarity deciles of tracking-vs-tracking and tracking-vs-functional pairs.
    Simbench {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags merged with the config file.
struct Settings {
    features: Vec<String>,
    models: Vec<String>,
    nu: Option<f64>,
    gamma: Option<f64>,
    grid_search: bool,
    seed: u64,
    threads: Option<usize>,
    paper_sign: bool,
    cap: Option<usize>,
    format: Format,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

impl Settings {
    fn resolve(flags: Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => toml::from_str::<FileConfig>(&read(p)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
            None => FileConfig::default(),
        };
        let pick = |flag: Vec<String>, conf: Option<String>| {
            if flag.is_empty() {
                conf.map(|c| split_list(&c)).unwrap_or_default()
            } else {
                flag
            }
        };
        Ok(Settings {
            features: pick(flags.features, file.features),
            models: pick(flags.model, file.model),
            nu: flags.nu.or(file.nu),
            gamma: flags.gamma.or(file.gamma),
            grid_search: flags.grid_search || file.grid_search.unwrap_or(false),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            threads: flags.threads.or(file.threads),
            paper_sign: flags.paper_sign || file.paper_sign.unwrap_or(false),
            cap: flags.cap.or(file.cap),
            format: flags.format.or(file.format).unwrap_or_default(),
        })
    }

    fn exec(&self) -> Exec {
        match self.threads {
            Some(1) => Exec::Sequential,
            _ => Exec::default(),
        }
    }

    fn feature_specs(&self, default: &[&str]) -> Result<Vec<FeatureModelSpec>> {
        let names: Vec<String> = if self.features.is_empty() {
            default.iter().map(|s| s.to_string()).collect()
        } else {
            self.features.clone()
        };
        names
            .iter()
            .map(|n| {
                let spec: FeatureModelSpec = n.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
                Ok(match self.cap {
                    Some(0) => spec.with_cap(None),
                    Some(c) => spec.with_cap(Some(c)),
                    None => spec,
                })
            })
            .collect()
    }

    fn classifiers(&self, default: &[ClassifierKind]) -> Result<Vec<ClassifierKind>> {
        if self.models.is_empty() {
            return Ok(default.to_vec());
        }
        self.models
            .iter()
            .map(|m| m.parse().map_err(|e| CliError::Usage(format!("{e}"))))
            .collect()
    }

    fn tuning(&self) -> Result<Tuning> {
        if self.grid_search {
            return Ok(Tuning::Grid(GridSpec::standard()));
        }
        match (self.gamma, self.nu) {
            (Some(gamma), Some(nu)) => Ok(Tuning::Fixed { gamma, nu }),
            (None, None) => Ok(Tuning::Grid(GridSpec::standard())),
            _ => Err(CliError::Usage("--nu and --gamma must be given together".into())),
        }
    }

    fn validate_config(&self, features: Vec<FeatureModelSpec>, classifiers: Vec<ClassifierKind>) -> Result<ValidateConfig> {
        Ok(ValidateConfig {
            features,
            classifiers,
            tuning: self.tuning()?,
            seed: self.seed,
            exec: self.exec(),
            ..ValidateConfig::default()
        })
    }

    fn render(&self, t: &Table) -> String {
        match self.format {
            Format::Text => t.to_text(),
            Format::Jsonl => t.to_jsonl(),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dataset(manifest: &Path) -> Result<Dataset> {
    load_dataset(manifest).map_err(core)
}

fn single<T: Copy>(items: &[T], what: &str) -> Result<T> {
    match items {
        [one] => Ok(*one),
        _ => Err(CliError::Usage(format!("this command takes exactly one {what}"))),
    }
}

fn single_spec(mut specs: Vec<FeatureModelSpec>) -> Result<FeatureModelSpec> {
    match specs.len() {
        1 => Ok(specs.remove(0)),
        _ => Err(CliError::Usage("this command takes exactly one --features".into())),
    }
}

fn run(cli: Cli) -> Result<()> {
    let s = Settings::resolve(cli.opts)?;
    if let Some(n) = s.threads {
        Exec::init_threads(n);
    }
    match cli.command {
        Command::Synth { out, size, pages } => {
            let cfg = BundleConfig {
                corpus: SynthConfig {
                    size,
                    seed: s.seed,
                    ..SynthConfig::default()
                },
                pages,
                ..BundleConfig::default()
            };
            write_bundle(&out, &cfg).map_err(CliError::Core)?;
            eprintln!("wrote {size} scripts on {pages} pages to {}", out.display());
        }
        Command::Ingest { bundle, out, tool, labels } => {
            let tool: Option<Tool> = tool.map(|t| t.parse().map_err(CliError::Usage)).transpose()?;
            let mut d = ingest_bundle(&bundle, tool.as_ref()).map_err(core)?;
            if let Some(l) = labels {
                let hits = apply_labels(&mut d, &read(&l)?).map_err(core)?;
                eprintln!("labelled {hits} of {} records", d.len());
            }
            save_dataset(&d, &out).map_err(core)?;
            eprintln!("{} records from {} snapshots", d.len(), d.pages.len());
        }
        Command::Unpack { file, out } => output(out.as_deref(), &unpack(&read(&file)?).map_err(core)?)?,
        Command::Canonicalize { file, out } => {
            let p = canonicalize_source(&read(&file)?).map_err(core)?;
            output(out.as_deref(), &emit(&p))?;
        }
        Command::Pdg { file, out } => {
            let p = canonicalize_source(&read(&file)?).map_err(core)?;
            output(out.as_deref(), &to_dot(&p, &build_pdg(&p)))?;
        }
        Command::Featurize { manifest, out } => {
            let d = dataset(&manifest)?;
            let records: Vec<_> = d.records.into_iter().filter(|r| !r.is_missing_source()).collect();
            for spec in s.feature_specs(&["seq7"])? {
                let (terms, failed) = featurize_records(&records, &spec, s.exec());
                let vocab = fit_vocabulary(&terms, &spec, s.exec()).map_err(core)?;
                let fp = vocab.fingerprint();
                let vs: Vec<FeatureVector> = records
                    .iter()
                    .zip(&terms)
                    .map(|(r, t)| vectorize_with(&r.id, t, &vocab, fp.clone()))
                    .collect();
                write_file(&out.join(format!("{spec}.vocab")), &vocab.to_text())?;
                write_file(&out.join(format!("{spec}.vectors")), &write_vectors(&vs))?;
                eprintln!("{spec}: {} terms, {} vectors, {failed} unparsed", vocab.len(), vs.len());
            }
        }
        Command::Train { manifest, out } => {
            let spec = single_spec(s.feature_specs(&["seq7"])?)?;
            let kind = single(&s.classifiers(&[ClassifierKind::Ocsvm])?, "--model")?;
            let cfg = s.validate_config(vec![spec.clone()], vec![kind])?;
            let d = dataset(&manifest)?;
            let mut m = train_model(&d, &spec, kind, &cfg).map_err(core)?;
            if let Model::Ocsvm(o) = &mut m.model {
                o.paper_sign = s.paper_sign;
            }
            save_model(&m, &out).map_err(core)?;
            eprintln!("trained {kind} on {spec}");
        }
        Command::Classify { model_file, manifest, out } => {
            let m = load_model(&model_file).map_err(core)?;
            let d = dataset(&manifest)?;
            let records: Vec<_> = d.records.into_iter().filter(|r| !r.is_missing_source()).collect();
            let (terms, _) = featurize_records(&records, &m.vocab.spec, s.exec());
            let mut rows = Vec::with_capacity(records.len());
            for (r, t) in records.iter().zip(&terms) {
                let p = m.classify_terms(&r.id, t).map_err(core)?;
                let l = if p.tracking { Label::Tracking } else { Label::Functional };
                rows.push((r.id.clone(), l, p.score));
            }
            output(out.as_deref(), &predictions_to_text(&rows))?;
        }
        Command::Validate { manifest, out } => {
            let names: Vec<String> = FeatureModelSpec::paper_models().iter().map(|f| f.to_string()).collect();
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let cfg = s.validate_config(s.feature_specs(&names)?, s.classifiers(&ClassifierKind::ALL)?)?;
            let d = dataset(&manifest)?;
            let report = pipeline_validate(&d, &cfg).map_err(core)?;
            for (spec, n) in report.unparsed.iter().filter(|(_, n)| *n > 0) {
                eprintln!("{spec}: {n} records could not be parsed and were featurized as empty");
            }
            output(out.as_deref(), &s.render(&report.to_table()))?;
        }
        Command::Evaluate { labels, predictions, out } => {
            let truth: BTreeMap<String, Label> = dataset(&labels)?
                .records
                .into_iter()
                .filter_map(|r| r.label.map(|l| (r.id, l)))
                .collect();
            let preds = parse_label_map(&read(&predictions)?).map_err(core)?;
            let preds: BTreeMap<String, Label> = preds.into_iter().filter(|(id, _)| truth.contains_key(id)).collect();
            let c = confusion(&preds, &truth).map_err(core)?;
            let mut t = Table::new(["tp", "fp", "tn", "fn", "aer", "positives", "negatives"]);
            t.push(vec![
                c.tp.into(),
                c.fp.into(),
                c.tn.into(),
                c.fn_.into(),
                c.aer.into(),
                c.positives.into(),
                c.negatives.into(),
            ]);
            output(out.as_deref(), &s.render(&t))?;
        }
        Command::Aggressiveness {
            off,
            on,
            surrogates,
            out,
            per_page,
        } => {
            let off = dataset(&off)?;
            let on = dataset(&on)?;
            let sur = match surrogates {
                Some(p) => SurrogateList::parse(&read(&p)?).map_err(core)?,
                None => SurrogateList::default(),
            };
            let pages: BTreeSet<&str> = off.records.iter().filter_map(|r| r.page_id.as_deref()).collect();
            let on_page = |d: &Dataset, p: &str| -> Vec<_> {
                d.records.iter().filter(|r| r.page_id.as_deref() == Some(p)).cloned().collect()
            };
            let mut values = Vec::new();
            for p in pages {
                values.push((p.to_string(), aggressiveness(p, &on_page(&off, p), &on_page(&on, p), &sur).map_err(core)?));
            }
            let report = AggressivenessReport::from_values(values).map_err(core)?;
            if let Some(pp) = per_page {
                write_file(&pp, &s.render(&report.pages_table()))?;
            }
            eprintln!("mean aggressiveness {:.4}", report.mean);
            output(out.as_deref(), &s.render(&report.cdf_table()))?;
        }
        Command::Agree { classifier, tool, out } => {
            let c = parse_label_map(&read(&classifier)?).map_err(core)?;
            let t = parse_label_map(&read(&tool)?).map_err(core)?;
            let r = agreement(&c, &t).map_err(core)?;
            output(out.as_deref(), &s.render(&r.to_table()))?;
        }
        Command::Simbench { manifest, out } => {
            let d = dataset(&manifest)?;
            let records: Vec<_> = d.records.into_iter().filter(|r| r.label.is_some() && !r.is_missing_source()).collect();
            let mut t = Table::new(["features", "decile", "tracking_vs_tracking", "tracking_vs_functional"]);
            for spec in s.feature_specs(&["seq4", "seq7"])? {
                let (terms, _) = featurize_records(&records, &spec, s.exec());
                let vocab = fit_vocabulary(&terms, &spec, s.exec()).map_err(core)?;
                let fp = vocab.fingerprint();
                let (mut a, mut b, mut f) = (Vec::new(), Vec::new(), Vec::new());
                for (r, ts) in records.iter().zip(&terms) {
                    let v = vectorize_with(&r.id, ts, &vocab, fp.clone());
                    match r.label {
                        // Alternate tracking records between two disjoint halves.
                        Some(Label::Tracking) if a.len() <= b.len() => a.push(v),
                        Some(Label::Tracking) => b.push(v),
                        _ => f.push(v),
                    }
                }
                let tt = similarity_cdf(&a, &b, s.exec()).map_err(core)?;
                let tf = similarity_cdf(&a, &f, s.exec()).map_err(core)?;
                for d in 1..=10 {
                    let q = d as f64 / 10.0;
                    t.push(vec![
                        spec.to_string().into(),
                        Cell::Num(q),
                        cdf_quantile(&tt, q).into(),
                        cdf_quantile(&tf, q).into(),
                    ]);
                }
            }
            output(out.as_deref(), &s.render(&t))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

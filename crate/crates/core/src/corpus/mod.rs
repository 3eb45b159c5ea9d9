//! Script records, page snapshots and dataset manifests.
//!
//! A dataset manifest has one record per line, `key=value` pairs separated
//! by `|`:
//!
//! ```text
//! id=p001/off/0|page=p001|tool=off|origin=in_page|label=tracking|rule=R5|path=scripts/00000.js
//! ```
//!
//! `path` is resolved relative to the manifest. Values escape `%`, `|`, tab
//! and newline as `%25`, `%7C`, `%09`, `%0A`. Unknown keys are ignored.
//!
//! Snapshot bundles are laid out as `pages/<page_id>/<tool>/index.html`,
//! with external scripts stored next to it as `ext/<key>.js` where `<key>`
//! is [`sidecar_key`] of the script URL.

mod unpack;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use unpack::unpack;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("record `{id}` references unknown page `{page}`")]
    UnknownPage { id: String, page: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    InPage,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Tracking,
    Functional,
}

impl Label {
    pub fn is_tracking(self) -> bool {
        self == Label::Tracking
    }
}

/// Blocker configuration that produced a DOM dump.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tool {
    Off,
    NoScript,
    Ghostery,
    AdblockPlus,
    Disconnect,
    PrivacyBadger,
    Other(String),
}

macro_rules! text_enum {
    ($ty:ty { $($variant:path => $text:literal),* $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $text),* })
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($variant),)*
                    _ => Err(format!("unknown {} `{s}`", stringify!($ty).to_lowercase())),
                }
            }
        }
    };
}

text_enum!(Origin { Origin::InPage => "in_page", Origin::External => "external" });
text_enum!(Label { Label::Tracking => "tracking", Label::Functional => "functional" });

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tool::Off => "off",
            Tool::NoScript => "NS",
            Tool::Ghostery => "GT",
            Tool::AdblockPlus => "AP",
            Tool::Disconnect => "DC",
            Tool::PrivacyBadger => "PB",
            Tool::Other(s) => s,
        })
    }
}

impl FromStr for Tool {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "off" => Tool::Off,
            "NS" => Tool::NoScript,
            "GT" => Tool::Ghostery,
            "AP" => Tool::AdblockPlus,
            "DC" => Tool::Disconnect,
            "PB" => Tool::PrivacyBadger,
            "" => return Err("empty tool tag".into()),
            other => Tool::Other(other.to_string()),
        })
    }
}

/// One JavaScript program found on a page or loaded from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptRecord {
    pub id: String,
    pub source: String,
    pub origin: Origin,
    pub page_id: Option<String>,
    pub tool: Tool,
    pub url: Option<String>,
    pub label: Option<Label>,
    /// Labelling rule tag (`R1`..`R12`); only present with a label.
    pub label_rule: Option<String>,
}

impl ScriptRecord {
    /// External script whose body was not captured; kept for counting but
    /// not featurized.
    pub fn is_missing_source(&self) -> bool {
        self.origin == Origin::External && self.source.is_empty()
    }

    /// Identity used to match scripts across snapshots of the same page: the
    /// URL for external scripts, a hash of the unpacked source otherwise.
    pub fn identity(&self) -> String {
        match (&self.origin, &self.url) {
            (Origin::External, Some(u)) => format!("url:{u}"),
            _ => format!("sha256:{}", source_hash(&normalized_source(&self.source))),
        }
    }
}

/// Unpacked source, falling back to trimmed text when it does not lex.
pub fn normalized_source(source: &str) -> String {
    unpack(source).unwrap_or_else(|_| source.trim().to_string())
}

pub fn source_hash(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Sidecar file stem for an external script URL.
pub fn sidecar_key(url: &str) -> String {
    source_hash(url)[..16].to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageSnapshot {
    pub page_id: String,
    pub html_path: PathBuf,
    pub tool: Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub records: Vec<ScriptRecord>,
    pub pages: Vec<PageSnapshot>,
}

impl Dataset {
    /// Build a dataset, checking id uniqueness and page references. Pages
    /// referenced by records but not listed are added in first-use order.
    pub fn new(records: Vec<ScriptRecord>, mut pages: Vec<PageSnapshot>) -> Result<Self, CorpusError> {
        let mut ids = HashSet::new();
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        let mut known: HashSet<(String, Tool)> = pages
            .iter()
            .map(|p| (p.page_id.clone(), p.tool.clone()))
            .collect();
        for r in &records {
            if let Some(page) = &r.page_id {
                if known.insert((page.clone(), r.tool.clone())) {
                    pages.push(PageSnapshot {
                        page_id: page.clone(),
                        html_path: bundle_html_path(page, &r.tool),
                        tool: r.tool.clone(),
                    });
                }
            } else if r.origin == Origin::InPage {
                return Err(CorpusError::UnknownPage {
                    id: r.id.clone(),
                    page: String::new(),
                });
            }
        }
        Ok(Dataset { records, pages })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labelled(&self) -> impl Iterator<Item = &ScriptRecord> {
        self.records.iter().filter(|r| r.label.is_some())
    }

    /// Keep the first record for each distinct source; records without a
    /// captured source are all kept.
    pub fn dedup(&self) -> Dataset {
        let mut seen = HashSet::new();
        let records: Vec<ScriptRecord> = self
            .records
            .iter()
            .filter(|r| r.is_missing_source() || seen.insert(source_hash(&r.source)))
            .cloned()
            .collect();
        Dataset {
            records,
            pages: self.pages.clone(),
        }
    }
}

pub fn bundle_html_path(page_id: &str, tool: &Tool) -> PathBuf {
    Path::new("pages").join(page_id).join(tool.to_string()).join("index.html")
}

// ---- manifest ----

fn escape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for c in v.chars() {
        match c {
            '%' => out.push_str("%25"),
            '|' => out.push_str("%7C"),
            '\t' => out.push_str("%09"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(v: &str) -> Option<String> {
    let mut out = String::with_capacity(v.len());
    let mut rest = v;
    while let Some(i) = rest.find('%') {
        out.push_str(&rest[..i]);
        let code = rest.get(i + 1..i + 3)?;
        out.push(match code {
            "25" => '%',
            "7C" => '|',
            "09" => '\t',
            "0A" => '\n',
            "0D" => '\r',
            _ => return None,
        });
        rest = &rest[i + 3..];
    }
    out.push_str(rest);
    Some(out)
}

pub fn load_dataset(manifest: &Path) -> Result<Dataset, CorpusError> {
    let text = fs::read_to_string(manifest).map_err(io_err(manifest))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let at = |line: usize, msg: String| CorpusError::Parse {
        path: manifest.display().to_string(),
        line,
        msg,
    };
    let mut records = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        if raw.contains('\t') {
            return Err(at(line, "tab in manifest line".into()));
        }
        let mut fields = BTreeMap::new();
        for part in raw.split('|') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| at(line, format!("field `{part}` is not key=value")))?;
            let v = unescape(v).ok_or_else(|| at(line, format!("bad escape in `{part}`")))?;
            fields.insert(k.trim(), v);
        }
        let get = |k: &str| fields.get(k).cloned().filter(|v| !v.is_empty());
        let id = get("id").ok_or_else(|| at(line, "missing id".into()))?;
        let origin = match get("origin") {
            Some(o) => o.parse().map_err(|e| at(line, e))?,
            None => Origin::InPage,
        };
        let tool = match get("tool") {
            Some(t) => t.parse().map_err(|e| at(line, e))?,
            None => Tool::Off,
        };
        let label: Option<Label> = get("label").map(|l| l.parse()).transpose().map_err(|e| at(line, e))?;
        let label_rule = get("rule");
        if label_rule.is_some() && label.is_none() {
            return Err(at(line, "rule given without label".into()));
        }
        if let Some(r) = &label_rule {
            let ok = r
                .strip_prefix('R')
                .and_then(|d| d.parse::<u8>().ok())
                .is_some_and(|d| (1..=12).contains(&d));
            if !ok {
                return Err(at(line, format!("rule `{r}` is not one of R1..R12")));
            }
        }
        let source = match get("path") {
            Some(p) => {
                let full = base.join(&p);
                fs::read_to_string(&full).map_err(io_err(&full))?
            }
            None => String::new(),
        };
        records.push(ScriptRecord {
            id,
            source,
            origin,
            page_id: get("page"),
            tool,
            url: get("url"),
            label,
            label_rule,
        });
    }
    Dataset::new(records, Vec::new())
}

/// Write `manifest` plus one source file per record under `scripts/` next
/// to it.
pub fn save_dataset(dataset: &Dataset, manifest: &Path) -> Result<(), CorpusError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let dir = base.join("scripts");
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut out = String::new();
    for (i, r) in dataset.records.iter().enumerate() {
        let mut fields = vec![
            format!("id={}", escape(&r.id)),
            format!("origin={}", r.origin),
            format!("tool={}", escape(&r.tool.to_string())),
        ];
        if let Some(p) = &r.page_id {
            fields.push(format!("page={}", escape(p)));
        }
        if let Some(u) = &r.url {
            fields.push(format!("url={}", escape(u)));
        }
        if let Some(l) = r.label {
            fields.push(format!("label={l}"));
        }
        if let Some(rule) = &r.label_rule {
            fields.push(format!("rule={}", escape(rule)));
        }
        if !r.is_missing_source() {
            let rel = format!("scripts/{i:05}.js");
            let full = base.join(&rel);
            fs::write(&full, &r.source).map_err(io_err(&full))?;
            fields.push(format!("path={rel}"));
        }
        out.push_str(&fields.join("|"));
        out.push('\n');
    }
    fs::write(manifest, out).map_err(io_err(manifest))
}

// ---- snapshots ----

struct ScriptTag<'a> {
    attrs: &'a str,
    body: &'a str,
}

fn find_ci(hay: &str, needle: &str, from: usize) -> Option<usize> {
    let h = hay.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (from..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

/// Tolerant scan for `<script ...>body</script>` pairs in document order.
fn script_tags(html: &str) -> Vec<ScriptTag<'_>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(start) = find_ci(html, "<script", pos) {
        let after = start + "<script".len();
        // `<scripts>` or `<script-foo>` are other elements
        match html.as_bytes().get(after) {
            Some(b) if b.is_ascii_whitespace() || *b == b'>' || *b == b'/' => {}
            None => break,
            _ => {
                pos = after;
                continue;
            }
        }
        let Some(gt) = html[after..].find('>').map(|i| after + i) else {
            break;
        };
        let attrs = &html[after..gt];
        let body_start = gt + 1;
        if attrs.trim_end().ends_with('/') {
            out.push(ScriptTag { attrs, body: "" });
            pos = body_start;
            continue;
        }
        let end = find_ci(html, "</script", body_start).unwrap_or(html.len());
        out.push(ScriptTag {
            attrs,
            body: &html[body_start..end],
        });
        pos = match html[end..].find('>') {
            Some(i) => end + i + 1,
            None => html.len(),
        };
    }
    out
}

fn attr<'a>(attrs: &'a str, name: &str) -> Option<&'a str> {
    let bytes = attrs.as_bytes();
    let mut from = 0;
    while let Some(i) = find_ci(attrs, name, from) {
        from = i + name.len();
        let boundary = i == 0 || bytes[i - 1].is_ascii_whitespace();
        let rest = attrs[from..].trim_start();
        if !boundary || !rest.starts_with('=') {
            continue;
        }
        let v = rest[1..].trim_start();
        return Some(match v.chars().next() {
            Some(q @ ('"' | '\'')) => {
                let inner = &v[1..];
                &inner[..inner.find(q).unwrap_or(inner.len())]
            }
            _ => &v[..v.find(|c: char| c.is_ascii_whitespace() || c == '>').unwrap_or(v.len())],
        });
    }
    None
}

/// Extract one record per script element. External scripts take their
/// body from `sidecars/<sidecar_key(url)>.js` when that file exists.
pub fn ingest_page(
    html: &str,
    page_id: &str,
    tool: &Tool,
    sidecars: Option<&Path>,
) -> Result<Vec<ScriptRecord>, CorpusError> {
    let mut out = Vec::new();
    for (k, tag) in script_tags(html).into_iter().enumerate() {
        let id = format!("{page_id}/{tool}/{k}");
        let (origin, url, source) = match attr(tag.attrs, "src") {
            Some(url) => {
                let mut source = String::new();
                if let Some(dir) = sidecars {
                    let file = dir.join(format!("{}.js", sidecar_key(url)));
                    if file.exists() {
                        source = fs::read_to_string(&file).map_err(io_err(&file))?;
                    }
                }
                (Origin::External, Some(url.to_string()), source)
            }
            None => (Origin::InPage, None, tag.body.to_string()),
        };
        out.push(ScriptRecord {
            id,
            source,
            origin,
            page_id: Some(page_id.to_string()),
            tool: tool.clone(),
            url,
            label: None,
            label_rule: None,
        });
    }
    Ok(out)
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(io_err(dir))? {
        let e = e.map_err(io_err(dir))?;
        if e.file_type().map_err(io_err(dir))?.is_dir() {
            out.push(e.path());
        }
    }
    out.sort();
    Ok(out)
}

/// Ingest every `pages/<page>/<tool>/index.html` under `root`, optionally
/// restricted to one tool. Pages are processed in sorted order.
pub fn ingest_bundle(root: &Path, only_tool: Option<&Tool>) -> Result<Dataset, CorpusError> {
    let mut records = Vec::new();
    let mut pages = Vec::new();
    for page_dir in sorted_dirs(&root.join("pages"))? {
        let page_id = page_dir.file_name().unwrap_or_default().to_string_lossy().to_string();
        for tool_dir in sorted_dirs(&page_dir)? {
            let tool: Tool = tool_dir
                .file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .parse()
                .map_err(|msg| CorpusError::Parse {
                    path: tool_dir.display().to_string(),
                    line: 0,
                    msg,
                })?;
            if only_tool.is_some_and(|t| *t != tool) {
                continue;
            }
            let html_path = tool_dir.join("index.html");
            if !html_path.exists() {
                continue;
            }
            let html = fs::read(&html_path).map_err(io_err(&html_path))?;
            let html = String::from_utf8_lossy(&html);
            records.extend(ingest_page(&html, &page_id, &tool, Some(&tool_dir.join("ext")))?);
            pages.push(PageSnapshot {
                page_id: page_id.clone(),
                html_path: bundle_html_path(&page_id, &tool),
                tool,
            });
        }
    }
    Dataset::new(records, pages)
}

/// Apply `identity<TAB>label[<TAB>rule]` lines to matching records.
pub fn apply_labels(dataset: &mut Dataset, labels: &str) -> Result<usize, CorpusError> {
    let mut map = BTreeMap::new();
    for (n, line) in labels.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split('\t');
        let (Some(ident), Some(label)) = (it.next(), it.next()) else {
            return Err(CorpusError::Parse {
                path: "labels".into(),
                line: n + 1,
                msg: "expected identity<TAB>label".into(),
            });
        };
        let label: Label = label.parse().map_err(|msg| CorpusError::Parse {
            path: "labels".into(),
            line: n + 1,
            msg,
        })?;
        map.insert(ident.to_string(), (label, it.next().map(str::to_string)));
    }
    let mut hits = 0;
    for r in &mut dataset.records {
        if let Some((l, rule)) = map.get(&r.identity()) {
            r.label = Some(*l);
            r.label_rule = rule.clone();
            hits += 1;
        }
    }
    Ok(hits)
}

//! Canonical statements, their text format and read/write analysis.

use std::collections::BTreeSet;
use std::fmt;

use super::lexer::{lex, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Begin,
    End,
    Assign,
    GuardIf,
    GuardWhile,
    Return,
    Call,
    /// `break`, `continue`, `throw x`.
    Jump,
    /// Opaque marker for a statement outside the supported grammar.
    Skip,
}

impl StmtKind {
    pub fn is_guard(self) -> bool {
        matches!(self, StmtKind::GuardIf | StmtKind::GuardWhile)
    }

    /// Classify a canonical statement from its text.
    pub fn of_text(text: &str) -> StmtKind {
        match text {
            "begin" => return StmtKind::Begin,
            "end" => return StmtKind::End,
            "skip" => return StmtKind::Skip,
            "return" => return StmtKind::Return,
            "break" | "continue" => return StmtKind::Jump,
            _ => {}
        }
        if text.starts_with("if(") {
            StmtKind::GuardIf
        } else if text.starts_with("while(") {
            StmtKind::GuardWhile
        } else if text.starts_with("return ") {
            StmtKind::Return
        } else if text.starts_with("throw ") {
            StmtKind::Jump
        } else if lex(text)
            .map(|t| assign_split(&t).is_some())
            .unwrap_or(false)
        {
            StmtKind::Assign
        } else {
            StmtKind::Call
        }
    }
}

impl fmt::Display for StmtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StmtKind::Begin => "begin",
            StmtKind::End => "end",
            StmtKind::Assign => "assign",
            StmtKind::GuardIf => "guard_if",
            StmtKind::GuardWhile => "guard_while",
            StmtKind::Return => "ret",
            StmtKind::Call => "call",
            StmtKind::Jump => "jump",
            StmtKind::Skip => "skip",
        };
        f.write_str(s)
    }
}

/// One line of the canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalStmt {
    pub kind: StmtKind,
    pub text: String,
    /// Guard nesting depth (two spaces of indentation each when emitted).
    pub depth: usize,
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
    /// The write goes through a property or index (`v0.p = x`): it updates
    /// the root object without replacing it, so it does not kill earlier
    /// definitions.
    pub member_store: bool,
}

impl CanonicalStmt {
    pub fn new(kind: StmtKind, text: String, depth: usize) -> Self {
        let (reads, writes, member_store) = analyze(kind, &text);
        CanonicalStmt {
            kind,
            text,
            depth,
            reads,
            writes,
            member_store,
        }
    }

    /// True if the write replaces the previous value of its target.
    pub fn kills(&self) -> bool {
        !self.writes.is_empty() && !self.member_store
    }
}

/// Ordered canonical statements for one program.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CanonicalProgram {
    pub statements: Vec<CanonicalStmt>,
    pub temp_count: usize,
}

impl CanonicalProgram {
    /// One statement per line, two spaces of indentation per guard level.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for s in &self.statements {
            for _ in 0..s.depth {
                out.push_str("  ");
            }
            out.push_str(&s.text);
            out.push('\n');
        }
        out
    }

    /// Parse emitted text back. Blank lines are ignored.
    pub fn from_text(text: &str) -> CanonicalProgram {
        let mut temps = BTreeSet::new();
        let statements: Vec<CanonicalStmt> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let indent = line.len() - line.trim_start_matches(' ').len();
                let body = line.trim();
                let s = CanonicalStmt::new(StmtKind::of_text(body), body.to_string(), indent / 2);
                for n in s.reads.iter().chain(s.writes.iter()) {
                    if is_temp(n) {
                        temps.insert(n.clone());
                    }
                }
                s
            })
            .collect();
        CanonicalProgram {
            statements,
            temp_count: temps.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

pub fn is_temp(name: &str) -> bool {
    name.len() > 1 && name.starts_with('$') && name[1..].bytes().all(|b| b.is_ascii_digit())
}

/// Index of the top-level `=` of an assignment, if any.
fn assign_split(toks: &[Token]) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Punctuator {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "=" if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

fn names(toks: &[Token], out: &mut BTreeSet<String>) {
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Identifier || t.text == "undefined" {
            continue;
        }
        if i > 0 && toks[i - 1].is_punct(".") {
            continue;
        }
        if toks.get(i + 1).is_some_and(|n| n.is_punct(":")) {
            continue;
        }
        out.insert(t.text.clone());
    }
}

fn analyze(kind: StmtKind, text: &str) -> (BTreeSet<String>, BTreeSet<String>, bool) {
    let mut reads = BTreeSet::new();
    let mut writes = BTreeSet::new();
    let toks = match lex(text) {
        Ok(t) => t,
        Err(_) => return (reads, writes, false),
    };
    let split = if kind == StmtKind::Assign {
        assign_split(&toks)
    } else {
        None
    };
    match split {
        Some(eq) => {
            let (target, rhs) = (&toks[..eq], &toks[eq + 1..]);
            names(rhs, &mut reads);
            if target.len() == 1 && target[0].kind == TokenKind::Identifier {
                writes.insert(target[0].text.clone());
                (reads, writes, false)
            } else {
                names(target, &mut reads);
                if let Some(root) = target.first().filter(|t| t.kind == TokenKind::Identifier) {
                    writes.insert(root.text.clone());
                }
                (reads, writes, true)
            }
        }
        None => {
            names(&toks, &mut reads);
            (reads, writes, false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(text: &str) -> CanonicalStmt {
        CanonicalStmt::new(StmtKind::of_text(text), text.to_string(), 0)
    }

    #[test]
    fn kinds_from_text() {
        assert_eq!(StmtKind::of_text("begin"), StmtKind::Begin);
        assert_eq!(StmtKind::of_text("if($0)"), StmtKind::GuardIf);
        assert_eq!(StmtKind::of_text("while($2)"), StmtKind::GuardWhile);
        assert_eq!(StmtKind::of_text("return true"), StmtKind::Return);
        assert_eq!(StmtKind::of_text("$0 = v0 === v1"), StmtKind::Assign);
        assert_eq!(StmtKind::of_text("v0.push(1)"), StmtKind::Call);
        assert_eq!(StmtKind::of_text("throw $1"), StmtKind::Jump);
    }

    #[test]
    fn reads_and_writes() {
        let s = st("$0 = v0 === v1");
        assert_eq!(s.writes, ["$0".to_string()].into());
        assert_eq!(s.reads, ["v0".to_string(), "v1".to_string()].into());
        assert!(s.kills());

        let s = st("document.cookie = $3");
        assert!(s.member_store);
        assert!(!s.kills());
        assert!(s.writes.contains("document"));
        assert!(s.reads.contains("$3") && s.reads.contains("document"));

        let s = st("$1 = {a: v0, b: \"x\"}");
        assert_eq!(s.reads, ["v0".to_string()].into());

        let s = st("v2 = undefined");
        assert!(s.reads.is_empty());

        let s = st("$4 = $2.split(\";\")");
        assert_eq!(s.reads, ["$2".to_string()].into());
    }

    #[test]
    fn emit_round_trip() {
        let text = "begin\n$0 = v0 === v1\nif($0)\n  return true\nreturn false\nend\n";
        let p = CanonicalProgram::from_text(text);
        assert_eq!(p.len(), 6);
        assert_eq!(p.temp_count, 1);
        assert_eq!(p.statements[3].depth, 1);
        assert_eq!(p.emit(), text);
    }
}

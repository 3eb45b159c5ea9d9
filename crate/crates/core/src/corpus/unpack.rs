//! Deterministic pretty-printer for packed or minified code.
//!
//! Only whitespace changes: the token stream of the output is exactly the
//! token stream of the input. Lines break after `;` outside parentheses,
//! after `{` and around `}`; line breaks already present in the input are
//! kept (ASI depends on them). Tokens on a line are separated by one space
//! except around brackets, member dots and before `,`/`;`, where the space
//! is dropped unless the two tokens would then lex differently.

use crate::canon::{lex, CanonError, Token, TokenKind};

const INDENT: &str = "  ";

pub fn unpack(source: &str) -> Result<String, CanonError> {
    let toks = lex(source)?;
    let mut out = String::new();
    let mut line = String::new();
    let mut braces = 0usize;
    let mut parens = 0usize;

    for (i, t) in toks.iter().enumerate() {
        if t.is_punct("}") {
            braces = braces.saturating_sub(1);
        }
        match i.checked_sub(1).map(|p| &toks[p]) {
            None => push_indent(&mut line, braces),
            Some(prev) => {
                if breaks(prev, t, parens) {
                    out.push_str(&line);
                    out.push('\n');
                    line.clear();
                    push_indent(&mut line, braces);
                } else if spaced(prev, t) || glues(prev, t) {
                    line.push(' ');
                }
            }
        }
        line.push_str(&t.text);
        match t.text.as_str() {
            "{" if t.kind == TokenKind::Punctuator => braces += 1,
            "(" if t.kind == TokenKind::Punctuator => parens += 1,
            ")" if t.kind == TokenKind::Punctuator => parens = parens.saturating_sub(1),
            _ => {}
        }
    }
    if !line.is_empty() {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn push_indent(line: &mut String, depth: usize) {
    for _ in 0..depth {
        line.push_str(INDENT);
    }
}

fn breaks(prev: &Token, t: &Token, parens: usize) -> bool {
    if t.line > prev.end_line() {
        return true;
    }
    if prev.is_punct(";") {
        return parens == 0;
    }
    if prev.is_punct("{") {
        return !t.is_punct("}");
    }
    if t.is_punct("}") {
        return !prev.is_punct("{");
    }
    if prev.is_punct("}") {
        let tight = [")", ",", ";", "]", ".", "(", "?."];
        return !(t.kind == TokenKind::Punctuator && tight.contains(&t.text.as_str()));
    }
    false
}

fn spaced(prev: &Token, t: &Token) -> bool {
    let p = |tok: &Token, set: &[&str]| tok.kind == TokenKind::Punctuator && set.contains(&tok.text.as_str());
    if prev.is_punct("{") && t.is_punct("}") {
        return false;
    }
    if p(t, &[")", "]", ";", ",", ".", "?."]) {
        return false;
    }
    if p(prev, &["(", "[", ".", "?.", "!", "~"]) {
        return false;
    }
    if p(t, &["(", "["]) {
        let callee = matches!(prev.kind, TokenKind::Identifier | TokenKind::String | TokenKind::Template)
            || p(prev, &[")", "]"])
            || prev.is_keyword("this")
            || prev.is_keyword("function");
        return !callee;
    }
    true
}

/// True if printing the two tokens without a space would re-lex differently.
fn glues(prev: &Token, t: &Token) -> bool {
    let joined = format!("{}{}", prev.text, t.text);
    match lex(&joined) {
        Ok(v) => v.len() != 2 || v[0] != *prev || v[1] != *t,
        Err(_) => true,
    }
}

//! Front end and lowering to the canonical form.
//!
//! ```text
//! source --lex--> tokens --parse--> AST --canonicalize--> CanonicalProgram --emit--> text
//! ```
//!
//! The canonical text is one statement per line: `begin`/`end` around each
//! function body, assignments with at most one operation, `if(t)` and
//! `while(t)` guards over temporaries (guarded statements are indented two
//! spaces per level), `return x`, call statements and `skip` for anything the
//! parser could not handle.

pub mod ast;
pub mod lexer;
mod lower;
pub mod parser;
mod stmt;

use thiserror::Error;

pub use lexer::{lex, Token, TokenKind};
pub use lower::canonicalize;
pub use parser::parse;
pub use stmt::{is_temp, CanonicalProgram, CanonicalStmt, StmtKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CanonError {
    #[error("lex error at line {line}: {msg}")]
    Lex { line: usize, msg: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Emit canonical text; see [`CanonicalProgram::emit`].
pub fn emit(program: &CanonicalProgram) -> String {
    program.emit()
}

/// Lex, parse and lower in one step.
pub fn canonicalize_source(source: &str) -> Result<CanonicalProgram, CanonError> {
    let tokens = lex(source)?;
    let ast = parse(&tokens)?;
    Ok(canonicalize(&ast))
}

/// Identifiers the program declares or assigns, i.e. the names canonical
/// form replaces with `vN` aliases.
pub fn user_names(source: &str) -> Result<std::collections::BTreeSet<String>, CanonError> {
    let ast = parse(&lex(source)?)?;
    Ok(lower::collect_user_names(&ast).into_iter().collect())
}

#[cfg(test)]
mod tests;

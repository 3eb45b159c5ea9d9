//! Recursive-descent parser for an ES5-flavoured subset.
//!
//! Statements outside the subset (classes, arrow functions, destructuring,
//! ...) are not fatal: the statement is skipped up to its terminating `;` or
//! balanced `}` and replaced by [`Stmt::Skipped`]. Only a stray `}` at the top
//! level is unrecoverable.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::CanonError;

struct Fail;

type PResult<T> = Result<T, Fail>;

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
}

pub fn parse(tokens: &[Token]) -> Result<Program, CanonError> {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
    };
    let mut body = Vec::new();
    while p.pos < p.toks.len() {
        if p.at_punct("}") {
            return Err(CanonError::Parse {
                line: p.toks[p.pos].line,
                msg: "unbalanced '}' at top level".into(),
            });
        }
        body.push(p.statement_recovering());
    }
    Ok(Program { body })
}

fn binary_precedence(t: &Token) -> Option<u8> {
    let p = match (t.kind, t.text.as_str()) {
        (TokenKind::Punctuator, "??") => 1,
        (TokenKind::Punctuator, "||") => 1,
        (TokenKind::Punctuator, "&&") => 2,
        (TokenKind::Punctuator, "|") => 3,
        (TokenKind::Punctuator, "^") => 4,
        (TokenKind::Punctuator, "&") => 5,
        (TokenKind::Punctuator, "==" | "!=" | "===" | "!==") => 6,
        (TokenKind::Punctuator, "<" | ">" | "<=" | ">=") => 7,
        (TokenKind::Keyword, "instanceof" | "in") => 7,
        (TokenKind::Punctuator, "<<" | ">>" | ">>>") => 8,
        (TokenKind::Punctuator, "+" | "-") => 9,
        (TokenKind::Punctuator, "*" | "/" | "%") => 10,
        (TokenKind::Punctuator, "**") => 11,
        _ => return None,
    };
    Some(p)
}

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", ">>>=", "&=", "|=", "^=", "**=", "&&=", "||=",
    "??=",
];

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + off)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_keyword(&self, k: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(k))
    }

    fn bump(&mut self) -> PResult<&'t Token> {
        let t = self.toks.get(self.pos).ok_or(Fail)?;
        self.pos += 1;
        Ok(t)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(Fail)
        }
    }

    fn newline_before(&self) -> bool {
        match (self.pos.checked_sub(1).and_then(|i| self.toks.get(i)), self.peek()) {
            (Some(prev), Some(cur)) => cur.line > prev.end_line(),
            _ => true,
        }
    }

    fn consume_semicolon(&mut self) -> PResult<()> {
        if self.eat_punct(";") || self.at_punct("}") || self.peek().is_none() || self.newline_before()
        {
            Ok(())
        } else {
            Err(Fail)
        }
    }

    fn identifier(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => Err(Fail),
        }
    }

    fn line(&self) -> usize {
        self.peek()
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    // ---- statements ----

    fn statement_recovering(&mut self) -> Stmt {
        let start = self.pos;
        let line = self.line();
        match self.statement() {
            Ok(s) => s,
            Err(Fail) => {
                self.pos = start;
                self.skip_statement();
                Stmt::Skipped { line }
            }
        }
    }

    /// Advance past the current statement: up to a `;` at bracket depth zero,
    /// or the `}` that closes a brace opened inside it. Always makes progress
    /// unless positioned on a closing brace of the enclosing block.
    fn skip_statement(&mut self) {
        let mut depth = 0usize;
        let begin = self.pos;
        while let Some(t) = self.peek() {
            if t.kind == TokenKind::Punctuator {
                match t.text.as_str() {
                    "{" | "(" | "[" => depth += 1,
                    "}" | ")" | "]" => {
                        if depth == 0 {
                            if t.text == "}" {
                                break;
                            }
                        } else {
                            depth -= 1;
                            if depth == 0 && t.text == "}" {
                                self.pos += 1;
                                // `class A {}` or `x = {...};`
                                if !self.newline_before() {
                                    self.eat_punct(";");
                                }
                                return;
                            }
                        }
                    }
                    ";" if depth == 0 => {
                        self.pos += 1;
                        return;
                    }
                    _ => {}
                }
            }
            self.pos += 1;
        }
        if self.pos == begin && self.pos < self.toks.len() && !self.at_punct("}") {
            self.pos += 1;
        }
    }

    fn block_body(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut body = Vec::new();
        loop {
            match self.peek() {
                None => return Err(Fail),
                Some(t) if t.is_punct("}") => {
                    self.pos += 1;
                    return Ok(body);
                }
                Some(_) => body.push(self.statement_recovering()),
            }
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let t = self.peek().ok_or(Fail)?;
        match (t.kind, t.text.as_str()) {
            (TokenKind::Punctuator, "{") => Ok(Stmt::Block(self.block_body()?)),
            (TokenKind::Punctuator, ";") => {
                self.pos += 1;
                Ok(Stmt::Empty)
            }
            (TokenKind::Keyword, "var" | "let" | "const") => {
                self.pos += 1;
                let decls = self.declarators()?;
                self.consume_semicolon()?;
                Ok(Stmt::Var(decls))
            }
            (TokenKind::Keyword, "function") => {
                self.pos += 1;
                let f = self.function_rest(true)?;
                Ok(Stmt::Function(f))
            }
            (TokenKind::Keyword, "if") => {
                self.pos += 1;
                self.expect_punct("(")?;
                let cond = self.expression()?;
                self.expect_punct(")")?;
                let then = Box::new(self.statement()?);
                let otherwise = if self.at_keyword("else") {
                    self.pos += 1;
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then,
                    otherwise,
                })
            }
            (TokenKind::Keyword, "while") => {
                self.pos += 1;
                self.expect_punct("(")?;
                let cond = self.expression()?;
                self.expect_punct(")")?;
                let body = Box::new(self.statement()?);
                Ok(Stmt::While { cond, body })
            }
            (TokenKind::Keyword, "do") => {
                self.pos += 1;
                let body = Box::new(self.statement()?);
                if !self.at_keyword("while") {
                    return Err(Fail);
                }
                self.pos += 1;
                self.expect_punct("(")?;
                let cond = self.expression()?;
                self.expect_punct(")")?;
                self.eat_punct(";");
                Ok(Stmt::DoWhile { body, cond })
            }
            (TokenKind::Keyword, "for") => self.for_statement(),
            (TokenKind::Keyword, "return") => {
                self.pos += 1;
                let arg = if self.at_punct(";")
                    || self.at_punct("}")
                    || self.peek().is_none()
                    || self.newline_before()
                {
                    None
                } else {
                    Some(self.expression()?)
                };
                self.consume_semicolon()?;
                Ok(Stmt::Return(arg))
            }
            (TokenKind::Keyword, kw @ ("break" | "continue")) => {
                self.pos += 1;
                if !self.newline_before() && self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
                    self.pos += 1; // label
                }
                self.consume_semicolon()?;
                Ok(if kw == "break" {
                    Stmt::Break
                } else {
                    Stmt::Continue
                })
            }
            (TokenKind::Keyword, "throw") => {
                self.pos += 1;
                let e = self.expression()?;
                self.consume_semicolon()?;
                Ok(Stmt::Throw(e))
            }
            (TokenKind::Keyword, "try") => self.try_statement(),
            (TokenKind::Keyword, "switch") => self.switch_statement(),
            (TokenKind::Keyword, "class" | "import" | "export" | "with" | "debugger") => Err(Fail),
            (TokenKind::Identifier, _) if self.peek_at(1).is_some_and(|n| n.is_punct(":")) => {
                // labelled statement; the label carries no structure we keep
                self.pos += 2;
                self.statement()
            }
            _ => {
                let e = self.expression()?;
                self.consume_semicolon()?;
                Ok(Stmt::Expr(e))
            }
        }
    }

    fn declarators(&mut self) -> PResult<Vec<Declarator>> {
        let mut out = Vec::new();
        loop {
            let name = self.identifier()?;
            let init = if self.eat_punct("=") {
                Some(self.assignment()?)
            } else {
                None
            };
            out.push(Declarator { name, init });
            if !self.eat_punct(",") {
                return Ok(out);
            }
        }
    }

    fn for_statement(&mut self) -> PResult<Stmt> {
        self.pos += 1;
        self.expect_punct("(")?;
        // for (var x in o) / for (x in o)
        let decl_kw = self
            .peek()
            .is_some_and(|t| t.is_keyword("var") || t.is_keyword("let") || t.is_keyword("const"));
        let off = usize::from(decl_kw);
        if self
            .peek_at(off)
            .is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(off + 1).is_some_and(|t| t.is_keyword("in"))
        {
            self.pos += off;
            let var = self.identifier()?;
            self.pos += 1;
            let object = self.expression()?;
            self.expect_punct(")")?;
            let body = Box::new(self.statement()?);
            return Ok(Stmt::ForIn {
                var,
                declared: decl_kw,
                object,
                body,
            });
        }
        let init = if self.at_punct(";") {
            None
        } else if decl_kw {
            self.pos += 1;
            Some(ForInit::Var(self.declarators()?))
        } else {
            Some(ForInit::Expr(self.expression()?))
        };
        self.expect_punct(";")?;
        let cond = if self.at_punct(";") {
            None
        } else {
            Some(self.expression()?)
        };
        self.expect_punct(";")?;
        let step = if self.at_punct(")") {
            None
        } else {
            Some(self.expression()?)
        };
        self.expect_punct(")")?;
        let body = Box::new(self.statement()?);
        Ok(Stmt::For {
            init,
            cond,
            step,
            body,
        })
    }

    fn try_statement(&mut self) -> PResult<Stmt> {
        self.pos += 1;
        let block = self.block_body()?;
        let mut param = None;
        let mut handler = None;
        let mut finalizer = None;
        if self.at_keyword("catch") {
            self.pos += 1;
            if self.eat_punct("(") {
                param = Some(self.identifier()?);
                self.expect_punct(")")?;
            }
            handler = Some(self.block_body()?);
        }
        if self.at_keyword("finally") {
            self.pos += 1;
            finalizer = Some(self.block_body()?);
        }
        if handler.is_none() && finalizer.is_none() {
            return Err(Fail);
        }
        Ok(Stmt::Try {
            block,
            param,
            handler,
            finalizer,
        })
    }

    fn switch_statement(&mut self) -> PResult<Stmt> {
        self.pos += 1;
        self.expect_punct("(")?;
        let disc = self.expression()?;
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut cases = Vec::new();
        loop {
            let t = self.peek().ok_or(Fail)?;
            if t.is_punct("}") {
                self.pos += 1;
                break;
            }
            let test = if t.is_keyword("case") {
                self.pos += 1;
                Some(self.expression()?)
            } else if t.is_keyword("default") {
                self.pos += 1;
                None
            } else {
                return Err(Fail);
            };
            self.expect_punct(":")?;
            let mut body = Vec::new();
            while let Some(t) = self.peek() {
                if t.is_keyword("case") || t.is_keyword("default") || t.is_punct("}") {
                    break;
                }
                body.push(self.statement_recovering());
            }
            cases.push(SwitchCase { test, body });
        }
        Ok(Stmt::Switch { disc, cases })
    }

    /// After the `function` keyword.
    fn function_rest(&mut self, require_name: bool) -> PResult<Function> {
        if self.eat_punct("*") {
            return Err(Fail); // generators
        }
        let name = if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            Some(self.identifier()?)
        } else if require_name {
            return Err(Fail);
        } else {
            None
        };
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                params.push(self.identifier()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        let body = self.block_body()?;
        Ok(Function { name, params, body })
    }

    // ---- expressions ----

    fn expression(&mut self) -> PResult<Expr> {
        let first = self.assignment()?;
        if !self.at_punct(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_punct(",") {
            items.push(self.assignment()?);
        }
        Ok(Expr::Sequence(items))
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.conditional()?;
        if self.at_punct("=>") {
            return Err(Fail);
        }
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Punctuator && ASSIGN_OPS.contains(&t.text.as_str()) {
                if !matches!(lhs, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }) {
                    return Err(Fail);
                }
                self.pos += 1;
                let value = self.assignment()?;
                return Ok(Expr::Assign {
                    op: t.text.clone(),
                    target: Box::new(lhs),
                    value: Box::new(value),
                });
            }
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let cond = self.binary(0)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let then = self.assignment()?;
        self.expect_punct(":")?;
        let otherwise = self.assignment()?;
        Ok(Expr::Conditional {
            cond: Box::new(cond),
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut left = self.unary()?;
        while let Some(t) = self.peek() {
            let Some(prec) = binary_precedence(t) else {
                break;
            };
            if prec <= min_prec {
                break;
            }
            self.pos += 1;
            // `**` is right-associative
            let right = if prec == 11 {
                self.binary(prec - 1)?
            } else {
                self.binary(prec)?
            };
            let op = t.text.clone();
            left = if matches!(op.as_str(), "&&" | "||" | "??") {
                Expr::Logical {
                    op,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            } else {
                Expr::Binary {
                    op,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = self.peek().ok_or(Fail)?;
        match (t.kind, t.text.as_str()) {
            (TokenKind::Punctuator, "!" | "-" | "+" | "~")
            | (TokenKind::Keyword, "typeof" | "void" | "delete") => {
                self.pos += 1;
                let arg = self.unary()?;
                Ok(Expr::Unary {
                    op: t.text.clone(),
                    arg: Box::new(arg),
                })
            }
            (TokenKind::Punctuator, "++" | "--") => {
                self.pos += 1;
                let target = self.unary()?;
                if !matches!(target, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }) {
                    return Err(Fail);
                }
                Ok(Expr::Update {
                    op: t.text.clone(),
                    prefix: true,
                    target: Box::new(target),
                })
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let e = self.call_member()?;
        if let Some(t) = self.peek() {
            if (t.is_punct("++") || t.is_punct("--")) && !self.newline_before() {
                if !matches!(e, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }) {
                    return Err(Fail);
                }
                self.pos += 1;
                return Ok(Expr::Update {
                    op: t.text.clone(),
                    prefix: false,
                    target: Box::new(e),
                });
            }
        }
        Ok(e)
    }

    fn property_name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword) => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => Err(Fail),
        }
    }

    fn arguments(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            if self.at_punct("...") {
                return Err(Fail);
            }
            args.push(self.assignment()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
            if self.eat_punct(")") {
                return Ok(args);
            }
        }
    }

    fn call_member(&mut self) -> PResult<Expr> {
        let mut e = if self.at_keyword("new") {
            self.new_expression()?
        } else {
            self.primary()?
        };
        loop {
            if self.eat_punct(".") || self.eat_punct("?.") {
                if self.at_punct("(") {
                    e = Expr::Call {
                        callee: Box::new(e),
                        args: self.arguments()?,
                    };
                    continue;
                }
                if self.eat_punct("[") {
                    let index = self.expression()?;
                    self.expect_punct("]")?;
                    e = Expr::Index {
                        object: Box::new(e),
                        index: Box::new(index),
                    };
                    continue;
                }
                let property = self.property_name()?;
                e = Expr::Member {
                    object: Box::new(e),
                    property,
                };
            } else if self.eat_punct("[") {
                let index = self.expression()?;
                self.expect_punct("]")?;
                e = Expr::Index {
                    object: Box::new(e),
                    index: Box::new(index),
                };
            } else if self.at_punct("(") {
                e = Expr::Call {
                    callee: Box::new(e),
                    args: self.arguments()?,
                };
            } else if self.peek().is_some_and(|t| t.kind == TokenKind::Template) {
                let t = self.bump()?;
                e = Expr::Call {
                    callee: Box::new(e),
                    args: vec![Expr::Literal(Literal::Template(t.text.clone()))],
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn new_expression(&mut self) -> PResult<Expr> {
        self.pos += 1; // new
        let mut callee = if self.at_keyword("new") {
            self.new_expression()?
        } else {
            self.primary()?
        };
        loop {
            if self.eat_punct(".") {
                let property = self.property_name()?;
                callee = Expr::Member {
                    object: Box::new(callee),
                    property,
                };
            } else if self.eat_punct("[") {
                let index = self.expression()?;
                self.expect_punct("]")?;
                callee = Expr::Index {
                    object: Box::new(callee),
                    index: Box::new(index),
                };
            } else {
                break;
            }
        }
        let args = if self.at_punct("(") {
            self.arguments()?
        } else {
            Vec::new()
        };
        Ok(Expr::New {
            callee: Box::new(callee),
            args,
        })
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.bump()?;
        match t.kind {
            TokenKind::Identifier => Ok(Expr::Ident(t.text.clone())),
            TokenKind::String => Ok(Expr::Literal(Literal::Str(t.text.clone()))),
            TokenKind::Number => Ok(Expr::Literal(Literal::Num(t.text.clone()))),
            TokenKind::Regex => Ok(Expr::Literal(Literal::Regex(t.text.clone()))),
            TokenKind::Template => Ok(Expr::Literal(Literal::Template(t.text.clone()))),
            TokenKind::Keyword => match t.text.as_str() {
                "this" => Ok(Expr::This),
                "true" => Ok(Expr::Literal(Literal::Bool(true))),
                "false" => Ok(Expr::Literal(Literal::Bool(false))),
                "null" => Ok(Expr::Literal(Literal::Null)),
                "function" => Ok(Expr::Function(Box::new(self.function_rest(false)?))),
                _ => Err(Fail),
            },
            TokenKind::Punctuator => match t.text.as_str() {
                "(" => {
                    let e = self.expression()?;
                    self.expect_punct(")")?;
                    Ok(e)
                }
                "[" => {
                    let mut items = Vec::new();
                    loop {
                        if self.eat_punct("]") {
                            break;
                        }
                        if self.eat_punct(",") {
                            items.push(None);
                            continue;
                        }
                        if self.at_punct("...") {
                            return Err(Fail);
                        }
                        items.push(Some(self.assignment()?));
                        if self.eat_punct("]") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                    Ok(Expr::Array(items))
                }
                "{" => {
                    let mut props = Vec::new();
                    loop {
                        if self.eat_punct("}") {
                            break;
                        }
                        let kt = self.bump()?;
                        let key = match kt.kind {
                            TokenKind::Identifier | TokenKind::Keyword => {
                                PropKey::Ident(kt.text.clone())
                            }
                            TokenKind::String => PropKey::Str(kt.text.clone()),
                            TokenKind::Number => PropKey::Num(kt.text.clone()),
                            _ => return Err(Fail),
                        };
                        // getters/setters, shorthand and methods are outside the subset
                        self.expect_punct(":")?;
                        let value = self.assignment()?;
                        props.push((key, value));
                        if self.eat_punct("}") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                    Ok(Expr::Object(props))
                }
                _ => Err(Fail),
            },
        }
    }
}

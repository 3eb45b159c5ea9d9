//! Lowering from the syntax tree to canonical statements.
//!
//! Every compound expression is split so each emitted statement performs at
//! most one operation; intermediate results go to temporaries. Identifiers
//! the program declares or assigns are renamed `v0, v1, ...` per function in
//! source order; free names (`document`, `unescape`, ...) and property names
//! are kept. Loops become `while` over a guard temporary that is recomputed at
//! the end of the body.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::stmt::{CanonicalProgram, CanonicalStmt, StmtKind};

const TEMP_OPEN: char = '\u{1}';
const TEMP_CLOSE: char = '\u{2}';

type ScopeKey = usize;
const TOP_SCOPE: ScopeKey = 0;

fn fn_key(f: &Function) -> ScopeKey {
    f as *const Function as usize
}

/// Lower a parsed program to canonical form.
pub fn canonicalize(program: &Program) -> CanonicalProgram {
    let user = collect_user_names(program);
    let mut renamer = Renamer {
        user: &user,
        scopes: HashMap::new(),
        stack: vec![TOP_SCOPE],
    };
    renamer.scopes.insert(TOP_SCOPE, HashMap::new());
    for s in &program.body {
        renamer.stmt(s);
    }

    let mut lw = Lowerer {
        user: &user,
        scopes: renamer.scopes,
        stack: vec![TOP_SCOPE],
        out: Vec::new(),
        depth: 0,
        next_temp: 0,
    };

    // Top-level function declarations become units of their own, ahead of the
    // pseudo-function holding the remaining top-level statements.
    for s in &program.body {
        if let Stmt::Function(f) = s {
            lw.function(f);
        }
    }
    let rest: Vec<&Stmt> = program
        .body
        .iter()
        .filter(|s| !matches!(s, Stmt::Function(_)))
        .collect();
    let mark = lw.out.len();
    lw.emit(StmtKind::Begin, "begin".into());
    for s in &rest {
        lw.stmt(s);
    }
    if lw.out.len() == mark + 1 {
        lw.out.pop();
    } else {
        lw.emit(StmtKind::End, "end".into());
    }

    finish(lw.out)
}

/// Names the program introduces: declarations, parameters and bare
/// assignment targets. Everything else is a free (host) name.
pub(crate) fn collect_user_names(program: &Program) -> HashSet<String> {
    fn stmt(s: &Stmt, out: &mut HashSet<String>) {
        match s {
            Stmt::Function(f) => {
                if let Some(n) = &f.name {
                    out.insert(n.clone());
                }
                func(f, out);
            }
            Stmt::Var(ds) => decls(ds, out),
            Stmt::Expr(e) | Stmt::Throw(e) => expr(e, out),
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                expr(cond, out);
                stmt(then, out);
                if let Some(o) = otherwise {
                    stmt(o, out);
                }
            }
            Stmt::While { cond, body } | Stmt::DoWhile { body, cond } => {
                expr(cond, out);
                stmt(body, out);
            }
            Stmt::For {
                init,
                cond,
                step,
                body,
            } => {
                match init {
                    Some(ForInit::Var(ds)) => decls(ds, out),
                    Some(ForInit::Expr(e)) => expr(e, out),
                    None => {}
                }
                for e in cond.iter().chain(step.iter()) {
                    expr(e, out);
                }
                stmt(body, out);
            }
            Stmt::ForIn {
                var, object, body, ..
            } => {
                out.insert(var.clone());
                expr(object, out);
                stmt(body, out);
            }
            Stmt::Return(e) => {
                if let Some(e) = e {
                    expr(e, out)
                }
            }
            Stmt::Try {
                block,
                param,
                handler,
                finalizer,
            } => {
                block.iter().for_each(|s| stmt(s, out));
                if let Some(p) = param {
                    out.insert(p.clone());
                }
                for b in handler.iter().chain(finalizer.iter()) {
                    b.iter().for_each(|s| stmt(s, out));
                }
            }
            Stmt::Switch { disc, cases } => {
                expr(disc, out);
                for c in cases {
                    if let Some(t) = &c.test {
                        expr(t, out);
                    }
                    c.body.iter().for_each(|s| stmt(s, out));
                }
            }
            Stmt::Block(b) => b.iter().for_each(|s| stmt(s, out)),
            Stmt::Break | Stmt::Continue | Stmt::Empty | Stmt::Skipped { .. } => {}
        }
    }
    fn decls(ds: &[Declarator], out: &mut HashSet<String>) {
        for d in ds {
            out.insert(d.name.clone());
            if let Some(e) = &d.init {
                expr(e, out);
            }
        }
    }
    fn func(f: &Function, out: &mut HashSet<String>) {
        out.extend(f.params.iter().cloned());
        f.body.iter().for_each(|s| stmt(s, out));
    }
    fn expr(e: &Expr, out: &mut HashSet<String>) {
        match e {
            Expr::Ident(_) | Expr::Literal(_) | Expr::This => {}
            Expr::Array(items) => items.iter().flatten().for_each(|e| expr(e, out)),
            Expr::Object(props) => props.iter().for_each(|(_, v)| expr(v, out)),
            Expr::Function(f) => func(f, out),
            Expr::Member { object, .. } => expr(object, out),
            Expr::Index { object, index } => {
                expr(object, out);
                expr(index, out);
            }
            Expr::Call { callee, args } | Expr::New { callee, args } => {
                expr(callee, out);
                args.iter().for_each(|a| expr(a, out));
            }
            Expr::Unary { arg, .. } => expr(arg, out),
            Expr::Update { target, .. } => {
                if let Expr::Ident(n) = &**target {
                    out.insert(n.clone());
                }
                expr(target, out);
            }
            Expr::Binary { left, right, .. } | Expr::Logical { left, right, .. } => {
                expr(left, out);
                expr(right, out);
            }
            Expr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                expr(cond, out);
                expr(then, out);
                expr(otherwise, out);
            }
            Expr::Assign { target, value, .. } => {
                if let Expr::Ident(n) = &**target {
                    out.insert(n.clone());
                }
                expr(target, out);
                expr(value, out);
            }
            Expr::Sequence(items) => items.iter().for_each(|e| expr(e, out)),
        }
    }
    let mut out = HashSet::new();
    program.body.iter().for_each(|s| stmt(s, &mut out));
    out
}

/// Assigns `vN` aliases per function in source order of first occurrence.
struct Renamer<'u> {
    user: &'u HashSet<String>,
    scopes: HashMap<ScopeKey, HashMap<String, String>>,
    stack: Vec<ScopeKey>,
}

impl Renamer<'_> {
    fn occur(&mut self, name: &str) {
        if !self.user.contains(name) {
            return;
        }
        let key = *self.stack.last().expect("scope stack");
        let scope = self.scopes.entry(key).or_default();
        if !scope.contains_key(name) {
            let alias = format!("v{}", scope.len());
            scope.insert(name.to_string(), alias);
        }
    }

    fn function(&mut self, f: &Function) {
        let key = fn_key(f);
        self.scopes.insert(key, HashMap::new());
        self.stack.push(key);
        for p in &f.params {
            self.occur(p);
        }
        for s in &f.body {
            self.stmt(s);
        }
        self.stack.pop();
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Function(f) => self.function(f),
            Stmt::Var(ds) => self.decls(ds),
            Stmt::Expr(e) | Stmt::Throw(e) => self.expr(e),
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                self.expr(cond);
                self.stmt(then);
                if let Some(o) = otherwise {
                    self.stmt(o);
                }
            }
            Stmt::While { cond, body } => {
                self.expr(cond);
                self.stmt(body);
            }
            Stmt::DoWhile { body, cond } => {
                self.stmt(body);
                self.expr(cond);
            }
            Stmt::For {
                init,
                cond,
                step,
                body,
            } => {
                match init {
                    Some(ForInit::Var(ds)) => self.decls(ds),
                    Some(ForInit::Expr(e)) => self.expr(e),
                    None => {}
                }
                if let Some(c) = cond {
                    self.expr(c);
                }
                if let Some(st) = step {
                    self.expr(st);
                }
                self.stmt(body);
            }
            Stmt::ForIn {
                var, object, body, ..
            } => {
                self.occur(var);
                self.expr(object);
                self.stmt(body);
            }
            Stmt::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            Stmt::Try {
                block,
                param,
                handler,
                finalizer,
            } => {
                block.iter().for_each(|s| self.stmt(s));
                if let Some(p) = param {
                    self.occur(p);
                }
                for b in handler.iter().chain(finalizer.iter()) {
                    b.iter().for_each(|s| self.stmt(s));
                }
            }
            Stmt::Switch { disc, cases } => {
                self.expr(disc);
                for c in cases {
                    if let Some(t) = &c.test {
                        self.expr(t);
                    }
                    c.body.iter().for_each(|s| self.stmt(s));
                }
            }
            Stmt::Block(b) => b.iter().for_each(|s| self.stmt(s)),
            Stmt::Break | Stmt::Continue | Stmt::Empty | Stmt::Skipped { .. } => {}
        }
    }

    fn decls(&mut self, ds: &[Declarator]) {
        for d in ds {
            self.occur(&d.name);
            if let Some(e) = &d.init {
                self.expr(e);
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Ident(n) => self.occur(n),
            Expr::Literal(_) | Expr::This => {}
            Expr::Array(items) => items.iter().flatten().for_each(|e| self.expr(e)),
            Expr::Object(props) => props.iter().for_each(|(_, v)| self.expr(v)),
            Expr::Function(f) => self.function(f),
            Expr::Member { object, .. } => self.expr(object),
            Expr::Index { object, index } => {
                self.expr(object);
                self.expr(index);
            }
            Expr::Call { callee, args } | Expr::New { callee, args } => {
                self.expr(callee);
                args.iter().for_each(|a| self.expr(a));
            }
            Expr::Unary { arg, .. } => self.expr(arg),
            Expr::Update { target, .. } => self.expr(target),
            Expr::Binary { left, right, .. } | Expr::Logical { left, right, .. } => {
                self.expr(left);
                self.expr(right);
            }
            Expr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                self.expr(cond);
                self.expr(then);
                self.expr(otherwise);
            }
            Expr::Assign { target, value, .. } => {
                self.expr(target);
                self.expr(value);
            }
            Expr::Sequence(items) => items.iter().for_each(|e| self.expr(e)),
        }
    }
}

/// Right-hand side of a canonical assignment.
enum Rv {
    /// Operand with no operation: name, temporary or literal.
    Atom(String),
    /// Exactly one operation over atomic operands.
    Op(String),
}

impl Rv {
    fn text(self) -> String {
        match self {
            Rv::Atom(s) | Rv::Op(s) => s,
        }
    }
}

struct Lowerer<'u> {
    user: &'u HashSet<String>,
    scopes: HashMap<ScopeKey, HashMap<String, String>>,
    stack: Vec<ScopeKey>,
    out: Vec<(StmtKind, String, usize)>,
    depth: usize,
    next_temp: usize,
}

impl Lowerer<'_> {
    fn emit(&mut self, kind: StmtKind, text: String) {
        self.out.push((kind, text, self.depth));
    }

    fn fresh(&mut self) -> String {
        let t = format!("{TEMP_OPEN}{}{TEMP_CLOSE}", self.next_temp);
        self.next_temp += 1;
        t
    }

    fn name(&mut self, n: &str) -> String {
        if !self.user.contains(n) {
            return n.to_string();
        }
        let key = *self.stack.last().expect("scope stack");
        let scope = self.scopes.entry(key).or_default();
        let next = scope.len();
        scope
            .entry(n.to_string())
            .or_insert_with(|| format!("v{next}"))
            .clone()
    }

    fn function(&mut self, f: &Function) {
        self.stack.push(fn_key(f));
        self.emit(StmtKind::Begin, "begin".into());
        for s in &f.body {
            self.stmt(s);
        }
        self.emit(StmtKind::End, "end".into());
        self.stack.pop();
    }

    fn nested<F: FnOnce(&mut Self)>(&mut self, f: F) {
        self.depth += 1;
        f(self);
        self.depth -= 1;
    }

    fn guard_if(&mut self, cond: String) {
        self.emit(StmtKind::GuardIf, format!("if({cond})"));
    }

    // ---- statements ----

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Function(f) => self.function(f),
            Stmt::Var(ds) => self.decls(ds),
            Stmt::Expr(e) => self.expr_stmt(e),
            Stmt::If {
                cond,
                then,
                otherwise,
            } => {
                let c = self.operand(cond);
                self.guard_if(c.clone());
                self.nested(|lw| lw.stmt(then));
                if let Some(o) = otherwise {
                    let n = self.fresh();
                    self.emit(StmtKind::Assign, format!("{n} = !{c}"));
                    self.guard_if(n);
                    self.nested(|lw| lw.stmt(o));
                }
            }
            Stmt::While { cond, body } => self.while_loop(cond, |lw| lw.stmt(body)),
            Stmt::DoWhile { body, cond } => {
                self.stmt(body);
                self.while_loop(cond, |lw| lw.stmt(body));
            }
            Stmt::For {
                init,
                cond,
                step,
                body,
            } => {
                match init {
                    Some(ForInit::Var(ds)) => self.decls(ds),
                    Some(ForInit::Expr(e)) => self.expr_stmt(e),
                    None => {}
                }
                let cond = cond.clone().unwrap_or(Expr::Literal(Literal::Bool(true)));
                self.while_loop(&cond, |lw| {
                    lw.stmt(body);
                    if let Some(st) = step {
                        lw.expr_stmt(st);
                    }
                });
            }
            Stmt::ForIn {
                var, object, body, ..
            } => {
                let v = self.name(var);
                let o = self.operand(object);
                let t = self.fresh();
                let test = format!("{t} = {v} in {o}");
                self.emit(StmtKind::Assign, test.clone());
                self.emit(StmtKind::GuardWhile, format!("while({t})"));
                self.nested(|lw| {
                    lw.stmt(body);
                    lw.emit(StmtKind::Assign, test);
                });
            }
            Stmt::Return(e) => match e {
                None => self.emit(StmtKind::Return, "return".into()),
                Some(e) => {
                    let a = self.operand(e);
                    self.emit(StmtKind::Return, format!("return {a}"));
                }
            },
            Stmt::Break => self.emit(StmtKind::Jump, "break".into()),
            Stmt::Continue => self.emit(StmtKind::Jump, "continue".into()),
            Stmt::Throw(e) => {
                let a = self.operand(e);
                self.emit(StmtKind::Jump, format!("throw {a}"));
            }
            Stmt::Try {
                block,
                param,
                handler,
                finalizer,
            } => {
                block.iter().for_each(|s| self.stmt(s));
                if let Some(p) = param {
                    self.name(p);
                }
                for b in handler.iter().chain(finalizer.iter()) {
                    b.iter().for_each(|s| self.stmt(s));
                }
            }
            Stmt::Switch { disc, cases } => {
                let d = self.operand(disc);
                for c in cases {
                    match &c.test {
                        Some(test) => {
                            let v = self.operand(test);
                            let t = self.fresh();
                            self.emit(StmtKind::Assign, format!("{t} = {d} === {v}"));
                            self.guard_if(t);
                        }
                        None => self.guard_if("true".into()),
                    }
                    self.nested(|lw| c.body.iter().for_each(|s| lw.stmt(s)));
                }
            }
            Stmt::Block(b) => b.iter().for_each(|s| self.stmt(s)),
            Stmt::Empty => {}
            Stmt::Skipped { .. } => self.emit(StmtKind::Skip, "skip".into()),
        }
    }

    fn decls(&mut self, ds: &[Declarator]) {
        for d in ds {
            let n = self.name(&d.name);
            match &d.init {
                Some(e) => self.assign_into(n, e),
                None => self.emit(StmtKind::Assign, format!("{n} = undefined")),
            }
        }
    }

    /// `cond; while(cond) { body; recompute cond }`.
    fn while_loop<F: FnOnce(&mut Self)>(&mut self, cond: &Expr, body: F) {
        if let Some(a) = self.simple_atom(cond) {
            self.emit(StmtKind::GuardWhile, format!("while({a})"));
            self.nested(body);
            return;
        }
        let t = self.fresh();
        self.assign_into(t.clone(), cond);
        self.emit(StmtKind::GuardWhile, format!("while({t})"));
        self.nested(|lw| {
            body(lw);
            lw.assign_into(t, cond);
        });
    }

    fn simple_atom(&mut self, e: &Expr) -> Option<String> {
        match e {
            Expr::Ident(n) => Some(self.name(n)),
            Expr::Literal(l) => Some(l.text().to_string()),
            Expr::This => Some("this".into()),
            _ => None,
        }
    }

    fn expr_stmt(&mut self, e: &Expr) {
        match e {
            Expr::Call { .. } | Expr::New { .. } => {
                let text = self.rvalue(e).text();
                self.emit(StmtKind::Call, text);
            }
            Expr::Sequence(items) => items.iter().for_each(|e| self.expr_stmt(e)),
            Expr::Ident(_) | Expr::Literal(_) | Expr::This | Expr::Function(_) => {
                // no effect; a bare function expression still gets its body lowered
                if let Expr::Function(f) = e {
                    self.function(f);
                }
            }
            _ => {
                self.operand(e);
            }
        }
    }

    // ---- expressions ----

    /// Lower `e` to an atomic operand, spilling to a temporary if needed.
    fn operand(&mut self, e: &Expr) -> String {
        match self.rvalue(e) {
            Rv::Atom(a) => a,
            Rv::Op(text) => {
                let t = self.fresh();
                self.emit(StmtKind::Assign, format!("{t} = {text}"));
                t
            }
        }
    }

    /// Emit `target = e`, writing short-circuit results straight into `target`.
    fn assign_into(&mut self, target: String, e: &Expr) {
        match e {
            Expr::Logical { op, left, right } => self.logical_into(&target, op, left, right),
            Expr::Conditional {
                cond,
                then,
                otherwise,
            } => self.conditional_into(&target, cond, then, otherwise),
            _ => {
                let rv = self.rvalue(e).text();
                self.emit(StmtKind::Assign, format!("{target} = {rv}"));
            }
        }
    }

    fn logical_into(&mut self, target: &str, op: &str, left: &Expr, right: &Expr) {
        self.assign_into(target.to_string(), left);
        if op == "&&" {
            self.guard_if(target.to_string());
        } else {
            let n = self.fresh();
            self.emit(StmtKind::Assign, format!("{n} = !{target}"));
            self.guard_if(n);
        }
        self.nested(|lw| lw.assign_into(target.to_string(), right));
    }

    fn conditional_into(&mut self, target: &str, cond: &Expr, then: &Expr, otherwise: &Expr) {
        let c = self.operand(cond);
        self.guard_if(c.clone());
        self.nested(|lw| lw.assign_into(target.to_string(), then));
        let n = self.fresh();
        self.emit(StmtKind::Assign, format!("{n} = !{c}"));
        self.guard_if(n);
        self.nested(|lw| lw.assign_into(target.to_string(), otherwise));
    }

    fn args(&mut self, args: &[Expr]) -> String {
        args.iter()
            .map(|a| self.operand(a))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn rvalue(&mut self, e: &Expr) -> Rv {
        match e {
            Expr::Ident(n) => Rv::Atom(self.name(n)),
            Expr::Literal(l) => Rv::Atom(l.text().to_string()),
            Expr::This => Rv::Atom("this".into()),
            Expr::Function(f) => {
                self.function(f);
                Rv::Atom("function".into())
            }
            Expr::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|i| match i {
                        Some(e) => self.operand(e),
                        None => String::new(),
                    })
                    .collect();
                Rv::Op(format!("[{}]", parts.join(", ")))
            }
            Expr::Object(props) => {
                let parts: Vec<String> = props
                    .iter()
                    .map(|(k, v)| {
                        let v = self.operand(v);
                        format!("{}: {v}", k.text())
                    })
                    .collect();
                Rv::Op(format!("{{{}}}", parts.join(", ")))
            }
            Expr::Member { object, property } => {
                let o = self.operand(object);
                Rv::Op(format!("{o}.{property}"))
            }
            Expr::Index { object, index } => {
                let o = self.operand(object);
                let i = self.operand(index);
                Rv::Op(format!("{o}[{i}]"))
            }
            Expr::Call { callee, args } => {
                let callee = self.callee(callee);
                let a = self.args(args);
                Rv::Op(format!("{callee}({a})"))
            }
            Expr::New { callee, args } => {
                let callee = self.callee(callee);
                let a = self.args(args);
                Rv::Op(format!("new {callee}({a})"))
            }
            Expr::Unary { op, arg } => {
                if op == "-" {
                    if let Expr::Literal(Literal::Num(n)) = &**arg {
                        return Rv::Atom(format!("-{n}"));
                    }
                }
                if op == "delete" {
                    if let Expr::Member { object, property } = &**arg {
                        let o = self.operand(object);
                        return Rv::Op(format!("delete {o}.{property}"));
                    }
                    if let Expr::Index { object, index } = &**arg {
                        let o = self.operand(object);
                        let i = self.operand(index);
                        return Rv::Op(format!("delete {o}[{i}]"));
                    }
                }
                let a = self.operand(arg);
                if op.chars().all(|c| c.is_ascii_alphabetic()) {
                    Rv::Op(format!("{op} {a}"))
                } else {
                    Rv::Op(format!("{op}{a}"))
                }
            }
            Expr::Binary { op, left, right } => {
                let a = self.operand(left);
                let b = self.operand(right);
                let op = match op.as_str() {
                    "==" => "===",
                    "!=" => "!==",
                    other => other,
                };
                Rv::Op(format!("{a} {op} {b}"))
            }
            Expr::Logical { op, left, right } => {
                let t = self.fresh();
                self.logical_into(&t, op, left, right);
                Rv::Atom(t)
            }
            Expr::Conditional {
                cond,
                then,
                otherwise,
            } => {
                let t = self.fresh();
                self.conditional_into(&t, cond, then, otherwise);
                Rv::Atom(t)
            }
            Expr::Assign { op, target, value } => Rv::Atom(self.assign(op, target, value)),
            Expr::Update {
                op,
                prefix,
                target,
            } => Rv::Atom(self.update(op, *prefix, target)),
            Expr::Sequence(items) => {
                let (last, init) = items.split_last().expect("non-empty sequence");
                init.iter().for_each(|e| self.expr_stmt(e));
                self.rvalue(last)
            }
        }
    }

    /// Callee text for a call or `new`: `name`, `obj.method` or a spilled operand.
    fn callee(&mut self, callee: &Expr) -> String {
        match callee {
            Expr::Ident(n) => self.name(n),
            Expr::Member { object, property } => {
                let o = self.operand(object);
                format!("{o}.{property}")
            }
            Expr::Function(f) => {
                self.function(f);
                "function".into()
            }
            other => self.operand(other),
        }
    }

    /// Store-target text for a member or index expression.
    fn place(&mut self, target: &Expr) -> String {
        match target {
            Expr::Member { object, property } => {
                let o = self.operand(object);
                format!("{o}.{property}")
            }
            Expr::Index { object, index } => {
                let o = self.operand(object);
                let i = self.operand(index);
                format!("{o}[{i}]")
            }
            _ => unreachable!("parser only admits identifiers and member targets"),
        }
    }

    /// Lower an assignment and return the operand holding its value.
    fn assign(&mut self, op: &str, target: &Expr, value: &Expr) -> String {
        let binop = op.strip_suffix('=').filter(|s| !s.is_empty());
        match target {
            Expr::Ident(n) => {
                let name = self.name(n);
                match binop {
                    None => self.assign_into(name.clone(), value),
                    Some(b) => {
                        let v = self.operand(value);
                        self.emit(StmtKind::Assign, format!("{name} = {name} {b} {v}"));
                    }
                }
                name
            }
            _ => {
                let place = self.place(target);
                match binop {
                    None => {
                        let v = self.operand(value);
                        self.emit(StmtKind::Assign, format!("{place} = {v}"));
                        v
                    }
                    Some(b) => {
                        let old = self.fresh();
                        self.emit(StmtKind::Assign, format!("{old} = {place}"));
                        let v = self.operand(value);
                        let new = self.fresh();
                        self.emit(StmtKind::Assign, format!("{new} = {old} {b} {v}"));
                        self.emit(StmtKind::Assign, format!("{place} = {new}"));
                        new
                    }
                }
            }
        }
    }

    fn update(&mut self, op: &str, prefix: bool, target: &Expr) -> String {
        let b = &op[..1];
        match target {
            Expr::Ident(n) => {
                let name = self.name(n);
                if prefix {
                    self.emit(StmtKind::Assign, format!("{name} = {name} {b} 1"));
                    name
                } else {
                    let old = self.fresh();
                    self.emit(StmtKind::Assign, format!("{old} = {name}"));
                    self.emit(StmtKind::Assign, format!("{name} = {name} {b} 1"));
                    old
                }
            }
            _ => {
                let place = self.place(target);
                let old = self.fresh();
                self.emit(StmtKind::Assign, format!("{old} = {place}"));
                let new = self.fresh();
                self.emit(StmtKind::Assign, format!("{new} = {old} {b} 1"));
                self.emit(StmtKind::Assign, format!("{place} = {new}"));
                if prefix {
                    new
                } else {
                    old
                }
            }
        }
    }
}

/// Renumber temporaries by first appearance and derive read/write sets.
fn finish(raw: Vec<(StmtKind, String, usize)>) -> CanonicalProgram {
    let mut numbering: HashMap<String, usize> = HashMap::new();
    let mut statements = Vec::with_capacity(raw.len());
    for (kind, text, depth) in raw {
        let mut out = String::with_capacity(text.len());
        let mut rest = text.as_str();
        while let Some(open) = rest.find(TEMP_OPEN) {
            out.push_str(&rest[..open]);
            let after = &rest[open + TEMP_OPEN.len_utf8()..];
            let close = after.find(TEMP_CLOSE).expect("balanced temp marker");
            let id = &after[..close];
            let next = numbering.len();
            let k = *numbering.entry(id.to_string()).or_insert(next);
            out.push('$');
            out.push_str(&k.to_string());
            rest = &after[close + TEMP_CLOSE.len_utf8()..];
        }
        out.push_str(rest);
        statements.push(CanonicalStmt::new(kind, out, depth));
    }
    CanonicalProgram {
        statements,
        temp_count: numbering.len(),
    }
}

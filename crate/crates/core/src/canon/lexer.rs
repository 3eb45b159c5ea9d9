use std::fmt;

use super::CanonError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    String,
    Number,
    Regex,
    Punctuator,
    Template,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line on which the token starts.
    pub line: usize,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punctuator && self.text == p
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == k
    }

    /// Line on which the token ends (templates and continued strings may span lines).
    pub fn end_line(&self) -> usize {
        self.line + self.text.matches('\n').count()
    }
}

/// Tokens compare by kind and text; positions are not part of identity.
impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.text == other.text
    }
}

impl Eq for Token {}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub const KEYWORDS: &[&str] = &[
    "break", "case", "catch", "class", "const", "continue", "debugger", "default", "delete", "do",
    "else", "export", "extends", "false", "finally", "for", "function", "if", "import", "in",
    "instanceof", "let", "new", "null", "return", "super", "switch", "this", "throw", "true",
    "try", "typeof", "var", "void", "while", "with",
];

// Longest first within each leading character is handled by trying lengths 4..1.
const PUNCTUATORS: &[&str] = &[
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "??=", "=>", "==",
    "!=", "<=", ">=", "&&", "||", "??", "?.", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "<<", ">>", "**", "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "+", "-",
    "*", "/", "%", "&", "|", "^", "!", "~", "?", ":", "=", ".", "@", "#",
];

fn is_id_start(c: char) -> bool {
    c == '$' || c == '_' || c.is_alphabetic()
}

fn is_id_continue(c: char) -> bool {
    is_id_start(c) || c.is_ascii_digit() || c == '\u{200c}' || c == '\u{200d}' || c.is_numeric()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    tokens: Vec<Token>,
}

/// Tokenize `source`, dropping comments and whitespace.
pub fn lex(source: &str) -> Result<Vec<Token>, CanonError> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn err(&self, msg: impl Into<String>) -> CanonError {
        CanonError::Lex {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: usize) {
        let text: String = self.chars[start..self.pos].iter().collect();
        self.tokens.push(Token { kind, text, line });
    }

    fn regex_allowed(&self) -> bool {
        match self.tokens.last() {
            None => true,
            Some(t) => match t.kind {
                TokenKind::Identifier
                | TokenKind::Number
                | TokenKind::String
                | TokenKind::Regex
                | TokenKind::Template => false,
                TokenKind::Keyword => !matches!(t.text.as_str(), "this" | "true" | "false" | "null" | "super"),
                TokenKind::Punctuator => !matches!(t.text.as_str(), ")" | "]" | "}" | "++" | "--"),
            },
        }
    }

    fn run(&mut self) -> Result<(), CanonError> {
        while let Some(c) = self.peek(0) {
            match c {
                '\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                c if c.is_whitespace() || c == '\u{feff}' => self.pos += 1,
                '/' if self.peek(1) == Some('/') => self.skip_line_comment(),
                '/' if self.peek(1) == Some('*') => self.skip_block_comment()?,
                '<' if self.starts_with("<!--") => self.skip_line_comment(),
                '-' if self.starts_with("-->") && self.at_line_start() => self.skip_line_comment(),
                '"' | '\'' => self.string(c)?,
                '`' => self.template()?,
                c if c.is_ascii_digit() => self.number(),
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number(),
                '/' if self.regex_allowed() => self.regex()?,
                c if is_id_start(c) || c == '\\' => self.identifier()?,
                _ => self.punctuator()?,
            }
        }
        Ok(())
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn at_line_start(&self) -> bool {
        self.tokens.last().is_none_or(|t| t.end_line() < self.line)
    }

    fn skip_line_comment(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), CanonError> {
        let line = self.line;
        self.pos += 2;
        loop {
            match self.peek(0) {
                None => {
                    return Err(CanonError::Lex {
                        line,
                        msg: "unterminated comment".into(),
                    })
                }
                Some('*') if self.peek(1) == Some('/') => {
                    self.pos += 2;
                    return Ok(());
                }
                Some('\n') => {
                    self.line += 1;
                    self.pos += 1;
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn string(&mut self, quote: char) -> Result<(), CanonError> {
        let start = self.pos;
        let line = self.line;
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some('\n') => {
                    return Err(CanonError::Lex {
                        line,
                        msg: "unterminated string".into(),
                    })
                }
                Some('\\') => {
                    if self.peek(1) == Some('\n') {
                        self.line += 1;
                    }
                    if self.peek(1).is_none() {
                        return Err(self.err("unterminated string"));
                    }
                    self.pos += 2;
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.push(TokenKind::String, start, line);
        Ok(())
    }

    fn template(&mut self) -> Result<(), CanonError> {
        let start = self.pos;
        let line = self.line;
        self.pos += 1;
        let mut depth = 0usize;
        loop {
            match self.peek(0) {
                None => {
                    return Err(CanonError::Lex {
                        line,
                        msg: "unterminated template".into(),
                    })
                }
                Some('\\') => self.pos += 2,
                Some('\n') => {
                    self.line += 1;
                    self.pos += 1;
                }
                Some('$') if depth == 0 && self.peek(1) == Some('{') => {
                    depth = 1;
                    self.pos += 2;
                }
                Some('{') if depth > 0 => {
                    depth += 1;
                    self.pos += 1;
                }
                Some('}') if depth > 0 => {
                    depth -= 1;
                    self.pos += 1;
                }
                Some(q @ ('"' | '\'')) if depth > 0 => {
                    self.pos += 1;
                    while let Some(c) = self.peek(0) {
                        self.pos += 1;
                        if c == '\\' {
                            self.pos += 1;
                        } else if c == q || c == '\n' {
                            break;
                        }
                    }
                }
                Some('`') if depth == 0 => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.pos = self.pos.min(self.chars.len());
        self.push(TokenKind::Template, start, line);
        Ok(())
    }

    fn number(&mut self) {
        let start = self.pos;
        let line = self.line;
        if self.peek(0) == Some('0')
            && matches!(self.peek(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B'))
        {
            self.pos += 2;
            while self.peek(0).is_some_and(|c| c.is_ascii_hexdigit() || c == '_') {
                self.pos += 1;
            }
        } else {
            while self.peek(0).is_some_and(|c| c.is_ascii_digit() || c == '_') {
                self.pos += 1;
            }
            if self.peek(0) == Some('.') {
                self.pos += 1;
                while self.peek(0).is_some_and(|c| c.is_ascii_digit() || c == '_') {
                    self.pos += 1;
                }
            }
            if matches!(self.peek(0), Some('e' | 'E'))
                && (self.peek(1).is_some_and(|c| c.is_ascii_digit())
                    || (matches!(self.peek(1), Some('+' | '-'))
                        && self.peek(2).is_some_and(|c| c.is_ascii_digit())))
            {
                self.pos += 2;
                while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        if self.peek(0) == Some('n') {
            self.pos += 1;
        }
        self.push(TokenKind::Number, start, line);
    }

    fn regex(&mut self) -> Result<(), CanonError> {
        let start = self.pos;
        let line = self.line;
        self.pos += 1;
        let mut in_class = false;
        loop {
            match self.peek(0) {
                None | Some('\n') => {
                    return Err(CanonError::Lex {
                        line,
                        msg: "unterminated regular expression".into(),
                    })
                }
                Some('\\') => {
                    if matches!(self.peek(1), None | Some('\n')) {
                        return Err(self.err("unterminated regular expression"));
                    }
                    self.pos += 2;
                }
                Some('[') => {
                    in_class = true;
                    self.pos += 1;
                }
                Some(']') => {
                    in_class = false;
                    self.pos += 1;
                }
                Some('/') if !in_class => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        while self.peek(0).is_some_and(is_id_continue) {
            self.pos += 1;
        }
        self.push(TokenKind::Regex, start, line);
        Ok(())
    }

    fn identifier(&mut self) -> Result<(), CanonError> {
        let start = self.pos;
        let line = self.line;
        loop {
            match self.peek(0) {
                Some('\\') => {
                    // \uXXXX escapes inside identifiers
                    if self.peek(1) != Some('u') {
                        return Err(self.err("illegal escape in identifier"));
                    }
                    self.pos += 2;
                    while self.peek(0).is_some_and(|c| c.is_ascii_hexdigit() || c == '{' || c == '}') {
                        self.pos += 1;
                    }
                }
                Some(c) if is_id_continue(c) => self.pos += 1,
                _ => break,
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let kind = if KEYWORDS.contains(&text.as_str()) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        };
        self.tokens.push(Token { kind, text, line });
        Ok(())
    }

    fn punctuator(&mut self) -> Result<(), CanonError> {
        let line = self.line;
        for len in (1..=4).rev() {
            if self.pos + len > self.chars.len() {
                continue;
            }
            let cand: String = self.chars[self.pos..self.pos + len].iter().collect();
            if PUNCTUATORS.contains(&cand.as_str()) {
                // `?.` followed by a digit is a conditional, not optional chaining.
                if cand == "?." && self.peek(2).is_some_and(|c| c.is_ascii_digit()) {
                    continue;
                }
                let start = self.pos;
                self.pos += len;
                self.push(TokenKind::Punctuator, start, line);
                return Ok(());
            }
        }
        Err(self.err(format!("illegal character {:?}", self.chars[self.pos])))
    }
}

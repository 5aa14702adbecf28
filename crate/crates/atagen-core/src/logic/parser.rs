//! Parser for the fact/rule language: Prolog-style clauses terminated by `.`,
//! `%` line comments, and `%# desc:` / `%# risk:` rule directives.

use super::{Atom, Clause, Program, Term};
use thiserror::Error;

/// Parse or load failure, with source position where one exists.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("predicate {predicate}/{arity} appears both as a fact and as a rule head")]
    PredicateOverlap { predicate: String, arity: usize },
}

impl ParseError {
    fn at(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: pos.line, col: pos.col, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Dot,
    If,
    /// Lowercase-initial identifier; constant or predicate name.
    Ident(String),
    /// Quoted constant, quotes stripped and escapes resolved.
    Quoted(String),
    /// Numeric constant, text as written.
    Number(String),
    /// Uppercase-initial identifier or `_Named` wildcard.
    Var(String),
    /// Bare `_`.
    Wild,
    /// Text following `%#`, trimmed.
    Directive(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    tok: Tok,
    pos: Pos,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), at: 0, line: 1, col: 1 }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let byte = self.peek()?;
        self.at += 1;
        if byte == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(byte)
    }

    fn take_while(&mut self, keep: impl Fn(u8) -> bool) -> String {
        let start = self.at;
        while self.peek().is_some_and(&keep) {
            self.bump();
        }
        String::from_utf8_lossy(&self.src[start..self.at]).into_owned()
    }

    fn next_token(&mut self) -> Result<Option<Token>, ParseError> {
        loop {
            match self.peek() {
                None => return Ok(None),
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    self.bump();
                    if self.peek() == Some(b'#') {
                        let pos = self.pos();
                        self.bump();
                        let text = self.take_while(|b| b != b'\n');
                        return Ok(Some(Token {
                            tok: Tok::Directive(text.trim().to_string()),
                            pos,
                        }));
                    }
                    self.take_while(|b| b != b'\n');
                }
                Some(_) => break,
            }
        }
        let pos = self.pos();
        let byte = self.peek().unwrap();
        let tok = match byte {
            b'(' => {
                self.bump();
                Tok::LParen
            }
            b')' => {
                self.bump();
                Tok::RParen
            }
            b',' => {
                self.bump();
                Tok::Comma
            }
            b'.' => {
                self.bump();
                Tok::Dot
            }
            b':' => {
                self.bump();
                if self.peek() == Some(b'-') {
                    self.bump();
                    Tok::If
                } else {
                    return Err(ParseError::at(pos, "expected `:-`"));
                }
            }
            b'\'' | b'"' => self.quoted(byte, pos)?,
            b'0'..=b'9' => {
                let mut text = self.take_while(|b| b.is_ascii_digit());
                if self.peek() == Some(b'.') && self.src.get(self.at + 1).is_some_and(u8::is_ascii_digit) {
                    self.bump();
                    text.push('.');
                    text.push_str(&self.take_while(|b| b.is_ascii_digit()));
                }
                Tok::Number(text)
            }
            b'_' => {
                let text = self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_');
                if text == "_" {
                    Tok::Wild
                } else {
                    Tok::Var(text)
                }
            }
            b if b.is_ascii_alphabetic() => {
                let text = self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_');
                if byte.is_ascii_uppercase() {
                    Tok::Var(text)
                } else {
                    Tok::Ident(text)
                }
            }
            other => {
                return Err(ParseError::at(pos, format!("unexpected character `{}`", other as char)))
            }
        };
        Ok(Some(Token { tok, pos }))
    }

    /// Reads a quoted constant; a doubled quote escapes itself.
    fn quoted(&mut self, quote: u8, pos: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut bytes = Vec::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => {
                    return Err(ParseError::at(pos, "unterminated quoted constant"))
                }
                Some(b) if b == quote => {
                    self.bump();
                    if self.peek() == Some(quote) {
                        self.bump();
                        bytes.push(quote);
                    } else {
                        return Ok(Tok::Quoted(String::from_utf8_lossy(&bytes).into_owned()));
                    }
                }
                Some(b) => {
                    self.bump();
                    bytes.push(b);
                }
            }
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn bump(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.at).cloned();
        if token.is_some() {
            self.at += 1;
        }
        token
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::If => "`:-`".into(),
            Tok::Ident(s) | Tok::Var(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::Quoted(s) => format!("`'{s}'`"),
            Tok::Wild => "`_`".into(),
            Tok::Directive(_) => "directive".into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        match self.bump() {
            Some(token) if token.tok == want => Ok(()),
            Some(token) => Err(ParseError::at(
                token.pos,
                format!("expected {what}, found {}", Self::describe(&token.tok)),
            )),
            None => Err(ParseError::at(self.end, format!("expected {what}, found end of input"))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Some(Token { tok: Tok::Ident(text), .. }) => Ok(Term::Constant(text)),
            Some(Token { tok: Tok::Quoted(text), .. }) => Ok(Term::Constant(text)),
            Some(Token { tok: Tok::Number(text), .. }) => Ok(Term::Constant(text)),
            Some(Token { tok: Tok::Var(name), .. }) => Ok(Term::Variable(name)),
            Some(Token { tok: Tok::Wild, .. }) => Ok(Term::Wildcard),
            Some(token) => Err(ParseError::at(
                token.pos,
                format!("expected term, found {}", Self::describe(&token.tok)),
            )),
            None => Err(ParseError::at(self.end, "expected term, found end of input")),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let predicate = match self.bump() {
            Some(Token { tok: Tok::Ident(name), .. }) => name,
            Some(token) => {
                return Err(ParseError::at(
                    token.pos,
                    format!("expected predicate name, found {}", Self::describe(&token.tok)),
                ))
            }
            None => {
                return Err(ParseError::at(self.end, "expected predicate name, found end of input"))
            }
        };
        let mut args = Vec::new();
        if self.peek().map(|t| &t.tok) == Some(&Tok::LParen) {
            self.bump();
            args.push(self.term()?);
            while self.peek().map(|t| &t.tok) == Some(&Tok::Comma) {
                self.bump();
                args.push(self.term()?);
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        Ok(Atom::new(predicate, args))
    }

    fn clause(&mut self, label: Option<String>, risk: Option<f64>) -> Result<Clause, ParseError> {
        let head = self.atom()?;
        let mut body = Vec::new();
        match self.bump() {
            Some(Token { tok: Tok::Dot, .. }) => {}
            Some(Token { tok: Tok::If, .. }) => {
                body.push(self.atom()?);
                loop {
                    match self.bump() {
                        Some(Token { tok: Tok::Comma, .. }) => body.push(self.atom()?),
                        Some(Token { tok: Tok::Dot, .. }) => break,
                        Some(token) => {
                            return Err(ParseError::at(
                                token.pos,
                                format!("expected `,` or `.`, found {}", Self::describe(&token.tok)),
                            ))
                        }
                        None => {
                            return Err(ParseError::at(self.end, "expected `,` or `.`, found end of input"))
                        }
                    }
                }
            }
            Some(token) => {
                return Err(ParseError::at(
                    token.pos,
                    format!("expected `.` or `:-`, found {}", Self::describe(&token.tok)),
                ))
            }
            None => return Err(ParseError::at(self.end, "expected `.` or `:-`, found end of input")),
        }
        Ok(Clause { head, body, label, risk, ordinal: 0 })
    }

    fn directive(
        &mut self,
        pos: Pos,
        text: &str,
        label: &mut Option<String>,
        risk: &mut Option<f64>,
    ) -> Result<(), ParseError> {
        if let Some(rest) = text.strip_prefix("desc:") {
            *label = Some(rest.trim().to_string());
            return Ok(());
        }
        if let Some(rest) = text.strip_prefix("risk:") {
            let value: f64 = rest
                .trim()
                .parse()
                .map_err(|_| ParseError::at(pos, format!("invalid risk value `{}`", rest.trim())))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(ParseError::at(pos, format!("risk {value} outside [0,1]")));
            }
            *risk = Some(value);
            return Ok(());
        }
        Err(ParseError::at(pos, format!("unknown directive `%#{text}`; expected `desc:` or `risk:`")))
    }
}

/// Parses a source file into a program.
///
/// Facts and rules each receive ordinals in order of appearance; directives
/// attach to the clause that follows them.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let mut lexer = Lexer::new(source);
    let mut tokens = Vec::new();
    while let Some(token) = lexer.next_token()? {
        tokens.push(token);
    }
    let end = lexer.pos();
    let mut parser = Parser { tokens, at: 0, end };

    let mut facts = Vec::new();
    let mut rules = Vec::new();
    let mut label = None;
    let mut risk = None;
    let mut directive_pos = None;
    while let Some(token) = parser.peek() {
        if let Tok::Directive(text) = &token.tok {
            let (pos, text) = (token.pos, text.clone());
            parser.bump();
            directive_pos.get_or_insert(pos);
            parser.directive(pos, &text, &mut label, &mut risk)?;
            continue;
        }
        let clause = parser.clause(label.take(), risk.take())?;
        directive_pos = None;
        if clause.is_fact() {
            facts.push(clause);
        } else {
            rules.push(clause);
        }
    }
    if let Some(pos) = directive_pos {
        return Err(ParseError::at(pos, "directive is not followed by a clause"));
    }
    Program::new(facts, rules)
}

//! Surface syntax: lexing, parsing and scope resolution into core terms.
//!
//! ```text
//! program  := { decl }
//! decl     := "def" NAME [ ":" term ] ":=" term "."
//!           | "axiom" NAME ":" term "."
//!           | "assume" NAME ":" term "."
//!           | "#check" term "."
//!           | "#reduce" [ "[" ("whnf" | "nf") "]" ] term "."
//! term     := "forall" binder "," term | "fun" binder "," term
//!           | app "->" term | app
//! app      := atom { atom }
//! atom     := NAME | "Prop" | "Type" | "(" term ")"
//!           | "Eq" atom atom atom | "refl" atom atom
//!           | "Eq_rec" atom atom atom atom atom atom
//!           | "cast" atom atom atom atom | "J" atom atom atom
//! binder   := "(" NAME ":" term ")"
//! ```
//!
//! `∀`, `λ` and `→` are accepted for `forall`, `fun` and `->`. Comments run
//! from `--` to the end of the line.

use std::collections::HashSet;
use std::fmt;

use crate::reduce::Strategy;
use crate::syntax::{is_ident_continue, is_ident_start, shift, Name, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    /// Byte offset into the source.
    pub offset: usize,
    /// 1-based line.
    pub line: usize,
    /// 1-based column, counted in characters.
    pub column: usize,
}

impl Position {
    fn at(src: &str, offset: usize) -> Position {
        let before = &src[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        Position { offset, line, column: src[line_start..offset].chars().count() + 1 }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    Lexical(char),
    #[error("expected {}, found {found}", expected.join(" or "))]
    Unexpected { found: String, expected: Vec<String> },
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("`{form}` expects {expected} arguments, found {found}")]
    Arity { form: &'static str, expected: usize, found: usize },
    #[error("`{0}` is already declared")]
    Duplicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Position,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Pragma(&'static str),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Define,
    Comma,
    Dot,
    Arrow,
    Forall,
    Lambda,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Pragma(p) => write!(f, "`{p}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Define => f.write_str("`:=`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Forall => f.write_str("`forall`"),
            Tok::Lambda => f.write_str("`fun`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = src.char_indices().peekable();
    let err = |c, at| ParseError { kind: ParseErrorKind::Lexical(c), pos: Position::at(src, at) };
    while let Some(&(at, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let rest = &src[at..];
        if rest.starts_with("--") {
            while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                chars.next();
            }
            continue;
        }
        let (tok, len) = if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with(":=") {
            (Tok::Define, 2)
        } else if rest.starts_with("#check") {
            (Tok::Pragma("#check"), 6)
        } else if rest.starts_with("#reduce") {
            (Tok::Pragma("#reduce"), 7)
        } else {
            match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBracket, 1),
                ']' => (Tok::RBracket, 1),
                ':' => (Tok::Colon, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '→' => (Tok::Arrow, c.len_utf8()),
                '∀' => (Tok::Forall, c.len_utf8()),
                'λ' => (Tok::Lambda, c.len_utf8()),
                c if is_ident_start(c) => {
                    let len = rest.find(|c| !is_ident_continue(c)).unwrap_or(rest.len());
                    let word = &rest[..len];
                    let tok = match word {
                        "forall" => Tok::Forall,
                        "fun" => Tok::Lambda,
                        _ => Tok::Ident(word.to_owned()),
                    };
                    (tok, len)
                }
                c => return Err(err(c, at)),
            }
        };
        if let Tok::Pragma(_) = tok {
            // `#checked` is not `#check` followed by `ed`
            if rest[len..].chars().next().is_some_and(is_ident_continue) {
                return Err(err('#', at));
            }
        }
        toks.push((tok, at));
        while chars.peek().is_some_and(|&(i, _)| i < at + len) {
            chars.next();
        }
    }
    toks.push((Tok::Eof, src.len()));
    Ok(toks)
}

/// Names visible while parsing: bound locals (innermost last) and globals.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    pub locals: Vec<Name>,
    pub globals: HashSet<Name>,
}

impl Scope {
    pub fn new(locals: Vec<Name>, globals: impl IntoIterator<Item = Name>) -> Scope {
        Scope { locals, globals: globals.into_iter().collect() }
    }

    fn resolve(&self, name: &str) -> Option<Term> {
        if let Some(i) = self.locals.iter().rev().position(|n| n.as_str() == name) {
            return Some(Term::Var(i));
        }
        self.globals.iter().find(|g| g.as_str() == name).map(|g| Term::Global(g.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Declaration {
    Def { name: Name, ty: Option<Term>, body: Term },
    Axiom { name: Name, ty: Term },
    Assume { name: Name, ty: Term },
    Check { term: Term },
    Reduce { term: Term, strategy: Option<Strategy> },
}

impl Declaration {
    pub fn name(&self) -> Option<&Name> {
        match self {
            Declaration::Def { name, .. } | Declaration::Axiom { name, .. } | Declaration::Assume { name, .. } => {
                Some(name)
            }
            _ => None,
        }
    }

    pub fn is_pragma(&self) -> bool {
        matches!(self, Declaration::Check { .. } | Declaration::Reduce { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub declarations: Vec<Declaration>,
}

struct Parser<'s> {
    src: &'s str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    scope: Scope,
}

const PRIMITIVES: &[(&str, usize)] = &[("Eq", 3), ("refl", 2), ("Eq_rec", 6), ("cast", 4), ("J", 3)];

impl<'s> Parser<'s> {
    fn new(src: &'s str, scope: Scope) -> Result<Parser<'s>, ParseError> {
        Ok(Parser { src, toks: lex(src)?, pos: 0, scope })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> Position {
        Position::at(self.src, self.toks[self.pos].1)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { kind, pos: self.here() }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error(ParseErrorKind::Unexpected {
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&tok.to_string()]))
        }
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => match Name::new(&s) {
                Ok(n) => {
                    self.bump();
                    Ok(n)
                }
                Err(_) => Err(self.unexpected(&["a name"])),
            },
            _ => Err(self.unexpected(&["a name"])),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Forall | Tok::Lambda => {
                let is_pi = *self.peek() == Tok::Forall;
                self.bump();
                self.expect(Tok::LParen)?;
                let name = self.name()?;
                self.expect(Tok::Colon)?;
                let domain = self.term()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Comma)?;
                self.scope.locals.push(name.clone());
                let body = self.term();
                self.scope.locals.pop();
                let body = body?;
                Ok(if is_pi { Term::pi(name, domain, body) } else { Term::lam(name, domain, body) })
            }
            _ => {
                let lhs = self.app()?;
                if *self.peek() == Tok::Arrow {
                    self.bump();
                    let rhs = self.term()?;
                    Ok(Term::pi(Name::anonymous(), lhs, shift(&rhs, 0, 1)))
                } else {
                    Ok(lhs)
                }
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::LParen)
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        if !self.starts_atom() {
            return Err(self.unexpected(&["a term"]));
        }
        let mut t = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let start = self.here();
        match self.bump() {
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(word) => {
                if word == "Prop" {
                    return Ok(Term::Sort(Sort::Prop));
                }
                if word == "Type" {
                    return Ok(Term::Sort(Sort::Type));
                }
                if let Some(&(form, arity)) = PRIMITIVES.iter().find(|(k, _)| *k == word) {
                    let mut args = Vec::with_capacity(arity);
                    for found in 0..arity {
                        if !self.starts_atom() {
                            return Err(ParseError {
                                kind: ParseErrorKind::Arity { form, expected: arity, found },
                                pos: start,
                            });
                        }
                        args.push(self.atom()?);
                    }
                    let mut a = args.into_iter();
                    let mut n = || a.next().unwrap();
                    return Ok(match form {
                        "Eq" => Term::eq(n(), n(), n()),
                        "refl" => Term::refl(n(), n()),
                        "Eq_rec" => Term::eq_rec(n(), n(), n(), n(), n(), n()),
                        "cast" => Term::cast(n(), n(), n(), n()),
                        _ => Term::j(n(), n(), n()),
                    });
                }
                if Name::new(&word).is_err() {
                    self.pos -= 1;
                    return Err(self.unexpected(&["a term"]));
                }
                self.scope
                    .resolve(&word)
                    .ok_or(ParseError { kind: ParseErrorKind::Unbound(word), pos: start })
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected(&["a term"]))
            }
        }
    }

    fn end(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn declare(&mut self, name: &Name, at: Position, seen: &mut HashSet<Name>) -> Result<(), ParseError> {
        if !seen.insert(name.clone()) {
            return Err(ParseError { kind: ParseErrorKind::Duplicate(name.to_string()), pos: at });
        }
        Ok(())
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut declarations = Vec::new();
        let mut seen = HashSet::new();
        loop {
            let decl = match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "def" => {
                    self.bump();
                    let at = self.here();
                    let name = self.name()?;
                    self.declare(&name, at, &mut seen)?;
                    let ty = if *self.peek() == Tok::Colon {
                        self.bump();
                        Some(self.term()?)
                    } else {
                        None
                    };
                    if *self.peek() != Tok::Define {
                        return Err(self.unexpected(if ty.is_some() { &["`:=`"] } else { &["`:`", "`:=`"] }));
                    }
                    self.bump();
                    let body = self.term()?;
                    self.scope.globals.insert(name.clone());
                    Declaration::Def { name, ty, body }
                }
                Tok::Ident(kw) if kw == "axiom" || kw == "assume" => {
                    self.bump();
                    let at = self.here();
                    let name = self.name()?;
                    self.declare(&name, at, &mut seen)?;
                    self.expect(Tok::Colon)?;
                    let ty = self.term()?;
                    if kw == "axiom" {
                        self.scope.globals.insert(name.clone());
                        Declaration::Axiom { name, ty }
                    } else {
                        self.scope.locals.push(name.clone());
                        Declaration::Assume { name, ty }
                    }
                }
                Tok::Pragma("#check") => {
                    self.bump();
                    Declaration::Check { term: self.term()? }
                }
                Tok::Pragma(_) => {
                    self.bump();
                    let strategy = if *self.peek() == Tok::LBracket {
                        self.bump();
                        let s = match self.peek() {
                            Tok::Ident(w) => w.parse::<Strategy>().ok(),
                            _ => None,
                        };
                        let s = s.ok_or_else(|| self.unexpected(&["`whnf`", "`nf`"]))?;
                        self.bump();
                        self.expect(Tok::RBracket)?;
                        Some(s)
                    } else {
                        None
                    };
                    Declaration::Reduce { term: self.term()?, strategy }
                }
                _ => return Err(self.unexpected(&["`def`", "`axiom`", "`assume`", "`#check`", "`#reduce`"])),
            };
            self.expect(Tok::Dot)?;
            declarations.push(decl);
        }
        Ok(Program { declarations })
    }
}

/// Parses a single term against `scope`.
pub fn parse_term(src: &str, scope: &Scope) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, scope.clone())?;
    let t = p.term()?;
    p.end()?;
    Ok(t)
}

/// Parses a whole file. Each declaration sees only the ones before it.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    Parser::new(src, Scope::default())?.program()
}

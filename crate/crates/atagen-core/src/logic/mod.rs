//! Terms, atoms, and clauses for the Datalog-style modeling language,
//! plus parsing, unification, and fixpoint evaluation.

pub mod eval;
pub mod parser;
pub mod unify;

pub use eval::{evaluate, BodyRef, Derivation, DerivationIndex};
pub use parser::{parse_program, ParseError};
pub use unify::{unify, Substitution};

use std::collections::BTreeSet;
use std::fmt;

/// One argument position of an atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// Bare `_`: matches anything, binds nothing.
    Wildcard,
    /// Logic variable, scoped to its clause (`Agent`, `_Severity`).
    Variable(String),
    /// Opaque constant; quoting style is not part of its identity.
    Constant(String),
}

impl Term {
    pub fn constant(text: impl Into<String>) -> Term {
        Term::Constant(text.into())
    }

    pub fn variable(name: impl Into<String>) -> Term {
        Term::Variable(name.into())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_))
    }

    /// Constant text if this term is a constant.
    pub fn as_constant(&self) -> Option<&str> {
        match self {
            Term::Constant(text) => Some(text),
            _ => None,
        }
    }

    fn quoting_needed(text: &str) -> bool {
        let mut chars = text.chars();
        let ident = match chars.next() {
            Some(c) if c.is_ascii_lowercase() => {
                chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            }
            _ => false,
        };
        ident || Self::is_number(text)
    }

    fn is_number(text: &str) -> bool {
        let mut parts = text.splitn(2, '.');
        let int = parts.next().unwrap_or("");
        let has_int = !int.is_empty() && int.bytes().all(|b| b.is_ascii_digit());
        match parts.next() {
            None => has_int,
            Some(frac) => {
                has_int && !frac.is_empty() && frac.bytes().all(|b| b.is_ascii_digit())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Wildcard => f.write_str("_"),
            Term::Variable(name) => f.write_str(name),
            Term::Constant(text) => {
                if Term::quoting_needed(text) {
                    f.write_str(text)
                } else {
                    write!(f, "'{}'", text.replace('\'', "''"))
                }
            }
        }
    }
}

/// A predicate applied to terms. Identity is the (name, arity) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom { predicate: predicate.into(), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Predicate identity: two atoms unify only when their keys match.
    pub fn key(&self) -> (&str, usize) {
        (&self.predicate, self.args.len())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

/// A fact (empty body) or a rule, with optional `%# desc:` / `%# risk:` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
    /// Human-readable description from a `%# desc:` directive.
    pub label: Option<String>,
    /// Success probability in [0,1] from a `%# risk:` directive.
    pub risk: Option<f64>,
    /// Position among clauses of the same kind in the source, starting at 0.
    pub ordinal: usize,
}

impl Clause {
    pub fn fact(head: Atom) -> Clause {
        Clause { head, body: Vec::new(), label: None, risk: None, ordinal: 0 }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, atom) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :-\n    " } else { ",\n    " })?;
            write!(f, "{atom}")?;
        }
        f.write_str(".")
    }
}

/// A parsed program: input facts plus derivation rules.
///
/// Fact predicates and rule-head predicates are disjoint; [`Program::new`]
/// rejects overlap so that every atom is unambiguously matched against either
/// the fact base or the derived goals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub facts: Vec<Clause>,
    pub rules: Vec<Clause>,
}

impl Program {
    /// Builds a program, renumbering ordinals and checking that no rule-head
    /// predicate also occurs as a fact predicate.
    pub fn new(facts: Vec<Clause>, rules: Vec<Clause>) -> Result<Program, ParseError> {
        let mut program = Program { facts, rules };
        for (i, fact) in program.facts.iter_mut().enumerate() {
            fact.ordinal = i;
        }
        for (i, rule) in program.rules.iter_mut().enumerate() {
            rule.ordinal = i;
        }
        let heads = program.head_predicates();
        for fact in &program.facts {
            let key = (fact.head.predicate.clone(), fact.head.arity());
            if heads.contains(&key) {
                return Err(ParseError::PredicateOverlap { predicate: key.0, arity: key.1 });
            }
        }
        Ok(program)
    }

    /// Concatenates programs in order, renumbering ordinals.
    pub fn merge(parts: impl IntoIterator<Item = Program>) -> Result<Program, ParseError> {
        let mut facts = Vec::new();
        let mut rules = Vec::new();
        for part in parts {
            facts.extend(part.facts);
            rules.extend(part.rules);
        }
        Program::new(facts, rules)
    }

    /// (name, arity) pairs of every rule head.
    pub fn head_predicates(&self) -> BTreeSet<(String, usize)> {
        self.rules
            .iter()
            .map(|rule| (rule.head.predicate.clone(), rule.head.arity()))
            .collect()
    }

    /// Canonical source text; parsing it back yields an equal program.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for fact in &self.facts {
            Self::push_directives(&mut out, fact);
            out.push_str(&fact.to_string());
            out.push('\n');
        }
        for rule in &self.rules {
            if !out.is_empty() {
                out.push('\n');
            }
            Self::push_directives(&mut out, rule);
            out.push_str(&rule.to_string());
            out.push('\n');
        }
        out
    }

    fn push_directives(out: &mut String, clause: &Clause) {
        if let Some(label) = &clause.label {
            out.push_str("%# desc: ");
            out.push_str(label);
            out.push('\n');
        }
        if let Some(risk) = clause.risk {
            out.push_str(&format!("%# risk: {risk}\n"));
        }
    }
}

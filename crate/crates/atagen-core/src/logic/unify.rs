//! Unification over flat atoms: variables bind to constants or to each other,
//! bare wildcards match anything without binding.

use super::{Atom, Term};
use std::collections::BTreeMap;

/// Accumulated variable bindings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    /// Follows variable chains until a constant, a wildcard, or an unbound
    /// variable remains.
    pub fn resolve(&self, term: &Term) -> Term {
        let mut current = term;
        while let Term::Variable(name) = current {
            match self.bindings.get(name) {
                Some(next) => current = next,
                None => break,
            }
        }
        current.clone()
    }

    /// Resolved value of a variable, if it resolves to a constant.
    pub fn constant_for(&self, name: &str) -> Option<String> {
        match self.resolve(&Term::variable(name)) {
            Term::Constant(text) => Some(text),
            _ => None,
        }
    }

    /// Applies the bindings to every argument. Resolution chases chains fully,
    /// so a second application returns the same atom.
    pub fn apply(&self, atom: &Atom) -> Atom {
        Atom::new(
            atom.predicate.clone(),
            atom.args.iter().map(|arg| self.resolve(arg)).collect(),
        )
    }

    /// Applies the bindings and blanks whatever is left unbound, yielding the
    /// canonical stored form of a derived atom.
    pub fn instantiate(&self, atom: &Atom) -> Atom {
        let mut out = self.apply(atom);
        for arg in &mut out.args {
            if matches!(arg, Term::Variable(_)) {
                *arg = Term::Wildcard;
            }
        }
        out
    }

    fn bind(&mut self, name: String, term: Term) {
        self.bindings.insert(name, term);
    }
}

/// Unifies two atoms under an existing substitution.
///
/// Returns an extension of `s` under which both atoms agree, or `None` if the
/// predicates differ or some argument pair conflicts. Wildcards on either side
/// match without constraining anything.
pub fn unify(a: &Atom, b: &Atom, s: &Substitution) -> Option<Substitution> {
    if a.key() != b.key() {
        return None;
    }
    let mut out = s.clone();
    for (arg_a, arg_b) in a.args.iter().zip(&b.args) {
        let left = out.resolve(arg_a);
        let right = out.resolve(arg_b);
        match (left, right) {
            (Term::Wildcard, _) | (_, Term::Wildcard) => {}
            (Term::Constant(x), Term::Constant(y)) => {
                if x != y {
                    return None;
                }
            }
            (Term::Variable(name), term @ Term::Constant(_))
            | (term @ Term::Constant(_), Term::Variable(name)) => out.bind(name, term),
            (Term::Variable(x), Term::Variable(y)) => {
                if x != y {
                    out.bind(x, Term::Variable(y));
                }
            }
        }
    }
    Some(out)
}

//! Bottom-up least-fixpoint evaluation with derivation provenance.
//!
//! Rules fire against the fact base and previously derived goals until
//! nothing new appears. Evaluation is semi-naive: after the first round a
//! rule is only re-joined through combinations touching the latest round's
//! goals, which yields the same index a naive fixpoint would.

use super::{unify, Atom, Clause, Program, Substitution, Term};
use std::collections::{BTreeMap, BTreeSet};

/// One matched body position of a derivation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BodyRef {
    /// Body atom matched against an input fact, instantiated under the final
    /// substitution of the rule firing; unbound positions stay `_`.
    Fact(Atom),
    /// Derived goal the body atom matched, in its stored form.
    Goal(Atom),
}

impl BodyRef {
    pub fn atom(&self) -> &Atom {
        match self {
            BodyRef::Fact(atom) | BodyRef::Goal(atom) => atom,
        }
    }
}

/// One way a goal was derived: which rule fired and what every body atom
/// matched, in body order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Derivation {
    pub rule_ordinal: usize,
    pub body: Vec<BodyRef>,
}

/// All derived goals, each with every distinct derivation of it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DerivationIndex {
    goals: BTreeMap<Atom, BTreeSet<Derivation>>,
}

impl DerivationIndex {
    pub fn goals(&self) -> impl Iterator<Item = &Atom> {
        self.goals.keys()
    }

    pub fn derivations(&self, goal: &Atom) -> impl Iterator<Item = &Derivation> {
        self.goals.get(goal).into_iter().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, &BTreeSet<Derivation>)> {
        self.goals.iter()
    }

    pub fn contains(&self, goal: &Atom) -> bool {
        self.goals.contains_key(goal)
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    fn insert(&mut self, goal: Atom, derivation: Derivation) {
        self.goals.entry(goal).or_default().insert(derivation);
    }
}

/// Which goal pool a goal-matching body position may draw from this round.
#[derive(Clone, Copy, PartialEq)]
enum Pool {
    Old,
    Delta,
    All,
}

enum Slot {
    Fact(Atom),
    Goal(Atom),
}

struct MatchCtx<'a> {
    facts: &'a BTreeMap<(String, usize), Vec<&'a Atom>>,
    old: &'a BTreeMap<(String, usize), Vec<Atom>>,
    delta: &'a BTreeMap<(String, usize), Vec<Atom>>,
    head_preds: &'a BTreeSet<(String, usize)>,
    fresh: usize,
}

impl<'a> MatchCtx<'a> {
    fn is_goal_atom(&self, atom: &Atom) -> bool {
        self.head_preds.contains(&(atom.predicate.clone(), atom.arity()))
    }

    /// Renames the fact's variables into a scope no parsed clause can collide
    /// with; each match attempt gets a fresh renaming.
    fn standardized(&mut self, fact: &Atom) -> Atom {
        self.fresh += 1;
        let n = self.fresh;
        let args = fact
            .args
            .iter()
            .map(|arg| match arg {
                Term::Variable(name) => Term::Variable(format!("{name}#{n}")),
                other => other.clone(),
            })
            .collect();
        Atom::new(fact.predicate.clone(), args)
    }

    /// Depth-first join over the rule body. `delta_pos` selects which
    /// goal-matching position must hit this round's delta; positions before it
    /// are restricted to older goals so each combination is enumerated once.
    fn join(
        &mut self,
        rule: &Clause,
        pos: usize,
        goal_seen: usize,
        delta_pos: Option<usize>,
        s: Substitution,
        slots: &mut Vec<Slot>,
        out: &mut Vec<(Atom, Derivation)>,
    ) {
        if pos == rule.body.len() {
            let head = s.instantiate(&rule.head);
            let body = slots
                .iter()
                .map(|slot| match slot {
                    Slot::Fact(fact) => BodyRef::Fact(s.instantiate(fact)),
                    Slot::Goal(goal) => BodyRef::Goal(goal.clone()),
                })
                .collect();
            out.push((head, Derivation { rule_ordinal: rule.ordinal, body }));
            return;
        }
        let atom = &rule.body[pos];
        let key = (atom.predicate.clone(), atom.arity());
        if self.is_goal_atom(atom) {
            let pool = match delta_pos {
                Some(j) if goal_seen < j => Pool::Old,
                Some(j) if goal_seen == j => Pool::Delta,
                _ => Pool::All,
            };
            let old = self.old.get(&key).map(Vec::as_slice).unwrap_or_default();
            let delta = self.delta.get(&key).map(Vec::as_slice).unwrap_or_default();
            let candidates: Vec<Atom> = match pool {
                Pool::Old => old.to_vec(),
                Pool::Delta => delta.to_vec(),
                Pool::All => old.iter().chain(delta).cloned().collect(),
            };
            for goal in candidates {
                if let Some(next) = unify(atom, &goal, &s) {
                    slots.push(Slot::Goal(goal));
                    self.join(rule, pos + 1, goal_seen + 1, delta_pos, next, slots, out);
                    slots.pop();
                }
            }
        } else {
            let candidates: Vec<&Atom> =
                self.facts.get(&key).map(|v| v.to_vec()).unwrap_or_default();
            for fact in candidates {
                let renamed = self.standardized(fact);
                if let Some(next) = unify(atom, &renamed, &s) {
                    slots.push(Slot::Fact(renamed));
                    self.join(rule, pos + 1, goal_seen, delta_pos, next, slots, out);
                    slots.pop();
                }
            }
        }
    }
}

fn goal_atom_count(rule: &Clause, head_preds: &BTreeSet<(String, usize)>) -> usize {
    rule.body
        .iter()
        .filter(|atom| head_preds.contains(&(atom.predicate.clone(), atom.arity())))
        .count()
}

/// Computes the least fixpoint of the program and records every distinct
/// derivation of every goal.
///
/// Facts may contain variables; they match anything at those positions but
/// never instantiate a goal beyond what body matching forces, so goals keep
/// `_` wherever nothing bound the position.
pub fn evaluate(program: &Program) -> DerivationIndex {
    let head_preds = program.head_predicates();
    let mut facts: BTreeMap<(String, usize), Vec<&Atom>> = BTreeMap::new();
    for fact in &program.facts {
        let key = (fact.head.predicate.clone(), fact.head.arity());
        facts.entry(key).or_default().push(&fact.head);
    }

    let mut index = DerivationIndex::default();
    let mut known: BTreeSet<Atom> = BTreeSet::new();
    let mut old: BTreeMap<(String, usize), Vec<Atom>> = BTreeMap::new();
    let mut delta: BTreeMap<(String, usize), Vec<Atom>> = BTreeMap::new();
    let mut fresh = 0;

    let round = |old: &BTreeMap<(String, usize), Vec<Atom>>,
                     delta: &BTreeMap<(String, usize), Vec<Atom>>,
                     first: bool,
                     fresh: &mut usize| {
        let mut pending = Vec::new();
        let mut ctx = MatchCtx { facts: &facts, old, delta, head_preds: &head_preds, fresh: *fresh };
        for rule in &program.rules {
            let goals_in_body = goal_atom_count(rule, &head_preds);
            if first {
                if goals_in_body == 0 {
                    ctx.join(rule, 0, 0, None, Substitution::new(), &mut Vec::new(), &mut pending);
                }
            } else {
                for j in 0..goals_in_body {
                    ctx.join(rule, 0, 0, Some(j), Substitution::new(), &mut Vec::new(), &mut pending);
                }
            }
        }
        *fresh = ctx.fresh;
        pending
    };

    let seed = round(&old, &delta, true, &mut fresh);
    for (goal, derivation) in seed {
        if known.insert(goal.clone()) {
            let key = (goal.predicate.clone(), goal.arity());
            delta.entry(key).or_default().push(goal.clone());
        }
        index.insert(goal, derivation);
    }

    while !delta.is_empty() {
        let pending = round(&old, &delta, false, &mut fresh);
        for (key, goals) in std::mem::take(&mut delta) {
            old.entry(key).or_default().extend(goals);
        }
        for (goal, derivation) in pending {
            if known.insert(goal.clone()) {
                let key = (goal.predicate.clone(), goal.arity());
                delta.entry(key).or_default().push(goal.clone());
            }
            index.insert(goal, derivation);
        }
    }
    index
}

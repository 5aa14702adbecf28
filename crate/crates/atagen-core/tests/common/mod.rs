//! Shared test support: a naive reference evaluator, an exhaustive path
//! enumerator, and seeded random program generators. The reference
//! implementations share only the parsed data types with the crate; all
//! matching and traversal logic here is written from scratch so the two
//! sides can disagree.

#![allow(dead_code)]

use atagen_core::graph::{AttackGraph, NodeKind};
use atagen_core::logic::{parse_program, BodyRef, Clause, DerivationIndex, Program, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

/// Absolute path of a file under the workspace fixtures directory.
pub fn fixture_path(relative: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(relative)
}

pub fn read_fixture(relative: &str) -> String {
    let path = fixture_path(relative);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|err| panic!("cannot read {}: {err}", path.display()))
}

/// Parses and merges an example application's fact and rule files.
pub fn load_application(app: &str) -> Program {
    let parts = ["topology.P", "vulnerabilities.P", "rules.P"]
        .iter()
        .map(|file| {
            let source = read_fixture(&format!("{app}/{file}"));
            parse_program(&source).unwrap_or_else(|err| panic!("{app}/{file}: {err}"))
        })
        .collect::<Vec<_>>();
    Program::merge(parts).expect("fixture programs merge")
}

/// A derivation in comparable form: rule ordinal plus body references,
/// each tagged 'f' (fact) or 'g' (goal) with the atom rendered canonically.
pub type FlatDerivation = (usize, Vec<(char, String)>);

/// Goal atoms rendered canonically, each with its full derivation set.
pub type FlatIndex = BTreeMap<String, BTreeSet<FlatDerivation>>;

/// Flattens the crate's evaluation result for comparison against the oracle.
pub fn flatten_index(index: &DerivationIndex) -> FlatIndex {
    index
        .iter()
        .map(|(goal, derivations)| {
            let flat = derivations
                .iter()
                .map(|derivation| {
                    let body = derivation
                        .body
                        .iter()
                        .map(|body_ref| match body_ref {
                            BodyRef::Fact(atom) => ('f', atom.to_string()),
                            BodyRef::Goal(atom) => ('g', atom.to_string()),
                        })
                        .collect();
                    (derivation.rule_ordinal, body)
                })
                .collect();
            (goal.to_string(), flat)
        })
        .collect()
}

/// A term during oracle matching. Variables are keyed by (scope, name):
/// scope 0 is the rule's own variables, scope i+1 the variables of whatever
/// fact matched body position i.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum OTerm {
    Const(String),
    Var(usize, String),
    Any,
}

type OSubst = BTreeMap<(usize, String), OTerm>;

fn scoped(term: &Term, scope: usize) -> OTerm {
    match term {
        Term::Wildcard => OTerm::Any,
        Term::Variable(name) => OTerm::Var(scope, name.clone()),
        Term::Constant(text) => OTerm::Const(text.clone()),
    }
}

fn walk(term: &OTerm, subst: &OSubst) -> OTerm {
    let mut current = term.clone();
    while let OTerm::Var(scope, name) = &current {
        match subst.get(&(*scope, name.clone())) {
            Some(next) => current = next.clone(),
            None => break,
        }
    }
    current
}

fn meet(a: &OTerm, b: &OTerm, subst: &mut OSubst) -> bool {
    let a = walk(a, subst);
    let b = walk(b, subst);
    match (a, b) {
        (OTerm::Any, _) | (_, OTerm::Any) => true,
        (OTerm::Const(x), OTerm::Const(y)) => x == y,
        (OTerm::Var(scope, name), other) | (other, OTerm::Var(scope, name)) => {
            subst.insert((scope, name), other);
            true
        }
    }
}

/// Renders an oracle atom; constants must be bare-safe (lowercase
/// alphanumeric), which the generators below guarantee.
fn render(name: &str, args: &[OTerm]) -> String {
    if args.is_empty() {
        return name.to_string();
    }
    let rendered: Vec<String> = args
        .iter()
        .map(|arg| match arg {
            OTerm::Const(text) => text.clone(),
            _ => "_".to_string(),
        })
        .collect();
    format!("{}({})", name, rendered.join(","))
}

fn ground(term: OTerm) -> OTerm {
    match term {
        OTerm::Const(text) => OTerm::Const(text),
        _ => OTerm::Any,
    }
}

#[derive(Clone)]
enum Picked {
    Fact(usize),
    Goal(String),
}

type GoalKey = (String, Vec<OTerm>);

struct Oracle<'a> {
    program: &'a Program,
    derived: BTreeSet<(String, usize)>,
    goals: BTreeMap<GoalKey, BTreeSet<FlatDerivation>>,
}

impl<'a> Oracle<'a> {
    fn new(program: &'a Program) -> Oracle<'a> {
        let derived = program
            .rules
            .iter()
            .map(|rule| (rule.head.predicate.clone(), rule.head.args.len()))
            .collect();
        Oracle { program, derived, goals: BTreeMap::new() }
    }

    fn match_rule(
        &self,
        rule: &Clause,
        position: usize,
        subst: &OSubst,
        trail: &mut Vec<Picked>,
        pending: &mut Vec<(GoalKey, FlatDerivation)>,
    ) {
        if position == rule.body.len() {
            let head_args: Vec<OTerm> = rule
                .head
                .args
                .iter()
                .map(|arg| ground(walk(&scoped(arg, 0), subst)))
                .collect();
            let body = trail
                .iter()
                .enumerate()
                .map(|(i, picked)| match picked {
                    Picked::Fact(index) => {
                        let fact = &self.program.facts[*index].head;
                        let args: Vec<OTerm> = fact
                            .args
                            .iter()
                            .map(|arg| walk(&scoped(arg, i + 1), subst))
                            .collect();
                        ('f', render(&fact.predicate, &args))
                    }
                    Picked::Goal(text) => ('g', text.clone()),
                })
                .collect();
            let key = (rule.head.predicate.clone(), head_args);
            pending.push((key, (rule.ordinal, body)));
            return;
        }

        let atom = &rule.body[position];
        let arity = atom.args.len();
        if self.derived.contains(&(atom.predicate.clone(), arity)) {
            for (name, args) in self.goals.keys() {
                if *name != atom.predicate || args.len() != arity {
                    continue;
                }
                let mut next = subst.clone();
                let ok = atom
                    .args
                    .iter()
                    .zip(args)
                    .all(|(pattern, value)| meet(&scoped(pattern, 0), value, &mut next));
                if ok {
                    trail.push(Picked::Goal(render(name, args)));
                    self.match_rule(rule, position + 1, &next, trail, pending);
                    trail.pop();
                }
            }
        } else {
            for (index, fact) in self.program.facts.iter().enumerate() {
                if fact.head.predicate != atom.predicate || fact.head.args.len() != arity {
                    continue;
                }
                let mut next = subst.clone();
                let ok = atom.args.iter().zip(&fact.head.args).all(|(pattern, value)| {
                    meet(&scoped(pattern, 0), &scoped(value, position + 1), &mut next)
                });
                if ok {
                    trail.push(Picked::Fact(index));
                    self.match_rule(rule, position + 1, &next, trail, pending);
                    trail.pop();
                }
            }
        }
    }

    fn saturate(&mut self) {
        loop {
            let mut pending = Vec::new();
            for rule in &self.program.rules {
                let mut trail = Vec::new();
                self.match_rule(rule, 0, &OSubst::new(), &mut trail, &mut pending);
            }
            let mut changed = false;
            for (key, derivation) in pending {
                if self.goals.entry(key).or_default().insert(derivation) {
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }
}

/// Naive bottom-up reference evaluation: every rule is re-matched against
/// all facts and all goals derived so far, round after round, until a full
/// round adds nothing.
pub fn naive_evaluate(program: &Program) -> FlatIndex {
    let mut oracle = Oracle::new(program);
    oracle.saturate();
    oracle
        .goals
        .into_iter()
        .map(|((name, args), derivations)| (render(&name, &args), derivations))
        .collect()
}

/// Exhaustively enumerates terminal attack paths by plain recursion:
/// start at every rule fed only by facts, follow goal-to-rule edges,
/// refuse to revisit a goal, and keep a path only when its last goal
/// feeds no further rule.
pub fn exhaustive_paths(graph: &AttackGraph) -> BTreeSet<Vec<(usize, usize)>> {
    let nodes = graph.nodes();
    let id = |index: usize| nodes[index].id.expect("graph must be numbered");
    let goal_of = |rule: usize| {
        graph
            .edges()
            .iter()
            .find(|(from, _)| *from == rule)
            .map(|&(_, to)| to)
            .expect("every rule node derives a goal")
    };

    let mut out = BTreeSet::new();
    for (index, node) in nodes.iter().enumerate() {
        if node.kind != NodeKind::Rule {
            continue;
        }
        let first_layer = graph
            .edges()
            .iter()
            .filter(|(_, to)| *to == index)
            .all(|&(from, _)| nodes[from].kind == NodeKind::Fact);
        if first_layer {
            let goal = goal_of(index);
            extend(graph, vec![(index, goal)], &mut out);
        }
    }

    return out
        .into_iter()
        .map(|path| path.into_iter().map(|(rule, goal)| (id(rule), id(goal))).collect())
        .collect();

    fn extend(
        graph: &AttackGraph,
        path: Vec<(usize, usize)>,
        out: &mut BTreeSet<Vec<(usize, usize)>>,
    ) {
        let last_goal = path.last().unwrap().1;
        let successors: Vec<usize> = graph
            .edges()
            .iter()
            .filter(|(from, _)| *from == last_goal)
            .map(|&(_, to)| to)
            .collect();
        if successors.is_empty() {
            out.insert(path);
            return;
        }
        for rule in successors {
            let goal = graph
                .edges()
                .iter()
                .find(|(from, _)| *from == rule)
                .map(|&(_, to)| to)
                .unwrap();
            if path.iter().any(|&(_, seen)| seen == goal) {
                continue;
            }
            let mut longer = path.clone();
            longer.push((rule, goal));
            extend(graph, longer, out);
        }
    }
}

const CONSTANTS: [&str; 6] = ["c0", "c1", "c2", "c3", "c4", "c5"];
const VARIABLES: [&str; 3] = ["X", "Y", "Z"];

fn fact_term(rng: &mut ChaCha8Rng, constants: usize) -> String {
    match rng.gen_range(0..10) {
        0 => "_".to_string(),
        1 => VARIABLES[rng.gen_range(0..2)].to_string(),
        _ => CONSTANTS[rng.gen_range(0..constants)].to_string(),
    }
}

fn body_term(rng: &mut ChaCha8Rng, constants: usize) -> String {
    match rng.gen_range(0..10) {
        0 | 1 => "_".to_string(),
        2..=4 => CONSTANTS[rng.gen_range(0..constants)].to_string(),
        _ => VARIABLES[rng.gen_range(0..VARIABLES.len())].to_string(),
    }
}

fn head_term(rng: &mut ChaCha8Rng, constants: usize) -> String {
    if rng.gen_bool(0.7) {
        VARIABLES[rng.gen_range(0..VARIABLES.len())].to_string()
    } else {
        CONSTANTS[rng.gen_range(0..constants)].to_string()
    }
}

fn atom_source(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{}({})", name, args.join(","))
    }
}

/// Generates a small random program: at most 5 rules and 6 constants, a
/// disjoint base/derived predicate split, occasional non-ground facts and
/// wildcards, and recursion allowed among derived predicates.
pub fn random_program(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constants = rng.gen_range(1..=CONSTANTS.len());
    let predicates = rng.gen_range(2..=4);
    let arities: Vec<usize> = (0..predicates).map(|_| rng.gen_range(0..=2)).collect();
    let derived = rng.gen_range(1..predicates);

    let name_of = |index: usize| {
        if index < derived {
            format!("d{index}")
        } else {
            format!("b{}", index - derived)
        }
    };

    let mut source = String::new();
    for base in derived..predicates {
        for _ in 0..rng.gen_range(1..=4) {
            let args: Vec<String> =
                (0..arities[base]).map(|_| fact_term(&mut rng, constants)).collect();
            source.push_str(&atom_source(&name_of(base), &args));
            source.push_str(".\n");
        }
    }
    for index in 0..rng.gen_range(1..=5) {
        if rng.gen_bool(0.3) {
            source.push_str(&format!("%# desc: rule {index}\n"));
        }
        if rng.gen_bool(0.4) {
            source.push_str(&format!("%# risk: {:.2}\n", rng.gen_range(0.0..=1.0)));
        }
        let head = rng.gen_range(0..derived);
        let head_args: Vec<String> =
            (0..arities[head]).map(|_| head_term(&mut rng, constants)).collect();
        let mut body = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let pick = rng.gen_range(0..predicates);
            let args: Vec<String> =
                (0..arities[pick]).map(|_| body_term(&mut rng, constants)).collect();
            body.push(atom_source(&name_of(pick), &args));
        }
        source.push_str(&format!(
            "{} :- {}.\n",
            atom_source(&name_of(head), &head_args),
            body.join(", ")
        ));
    }
    source
}

/// Generates a propositional program whose goal dependencies form a DAG:
/// every rule body draws only on strictly earlier predicates, so each
/// derived predicate is reachable and no goal cycle can occur.
pub fn random_dag_program(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut source = String::new();
    let mut lower: Vec<String> = (0..rng.gen_range(2..=4)).map(|i| format!("b{i}")).collect();
    for fact in &lower {
        source.push_str(fact);
        source.push_str(".\n");
    }
    let mut next_goal = 0;
    for _ in 0..rng.gen_range(1..=3) {
        let mut current = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let name = format!("g{next_goal}");
            next_goal += 1;
            for _ in 0..rng.gen_range(1..=2) {
                if rng.gen_bool(0.5) {
                    source.push_str(&format!("%# risk: {:.2}\n", rng.gen_range(0.0..=1.0)));
                }
                let len = rng.gen_range(1..=3.min(lower.len()));
                let body: Vec<String> = (0..len)
                    .map(|_| lower[rng.gen_range(0..lower.len())].clone())
                    .collect();
                source.push_str(&format!("{} :- {}.\n", name, body.join(", ")));
            }
            current.push(name);
        }
        lower.extend(current);
    }
    source
}

//! Logical attack graph: fact, rule, and goal nodes wired by derivation
//! edges, with deterministic node numbering.

use crate::diag::Diagnostic;
use crate::logic::{Atom, BodyRef, DerivationIndex, Program};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Fact,
    Rule,
    Goal,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Fact => "fact",
            NodeKind::Rule => "rule",
            NodeKind::Goal => "goal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgNode {
    /// Assigned by `number_nodes`; contiguous from 1.
    pub id: Option<usize>,
    pub kind: NodeKind,
    pub label: String,
    /// Present iff kind is Rule.
    pub rule_ordinal: Option<usize>,
    /// The underlying atom for fact and goal nodes.
    pub atom: Option<Atom>,
}

/// The attack graph. Edges run fact→rule, goal→rule, and rule→goal only;
/// each rule node stands for one distinct derivation and keeps its matched
/// body in rule-body order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackGraph {
    nodes: Vec<AgNode>,
    edges: Vec<(usize, usize)>,
    rule_inputs: Vec<Vec<usize>>,
    rule_output: Vec<Option<usize>>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl AttackGraph {
    fn add_node(&mut self, node: AgNode) -> usize {
        self.nodes.push(node);
        self.rule_inputs.push(Vec::new());
        self.rule_output.push(None);
        self.incoming.push(Vec::new());
        self.outgoing.push(Vec::new());
        self.nodes.len() - 1
    }

    fn set_edges(&mut self, edges: BTreeSet<(usize, usize)>) {
        self.edges = edges.into_iter().collect();
        for &(from, to) in &self.edges {
            self.outgoing[from].push(to);
            self.incoming[to].push(from);
        }
    }

    pub fn nodes(&self) -> &[AgNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &AgNode {
        &self.nodes[index]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as (from, to) node indexes.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn incoming(&self, index: usize) -> &[usize] {
        &self.incoming[index]
    }

    pub fn outgoing(&self, index: usize) -> &[usize] {
        &self.outgoing[index]
    }

    /// A rule node's matched body, in rule-body order (may repeat a node).
    pub fn rule_inputs(&self, index: usize) -> &[usize] {
        &self.rule_inputs[index]
    }

    /// The goal a rule node derives.
    pub fn rule_goal(&self, index: usize) -> Option<usize> {
        self.rule_output[index]
    }

    /// Goal nodes nothing depends on: the attack's end states.
    pub fn final_goals(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].kind == NodeKind::Goal && self.outgoing[i].is_empty())
            .collect()
    }

    pub fn is_numbered(&self) -> bool {
        self.nodes.iter().all(|node| node.id.is_some())
    }

    pub fn index_of_id(&self, id: usize) -> Option<usize> {
        self.nodes.iter().position(|node| node.id == Some(id))
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn rule_label(ordinal: usize, description: Option<&str>) -> String {
    match description {
        Some(text) => format!("RULE {ordinal} ({text})"),
        None => format!("RULE {ordinal}"),
    }
}

/// Assembles the graph from evaluation provenance. With a goal filter, only
/// goals of the named predicates and their backward closure are kept; a name
/// that matched nothing produces a warning, and if nothing matched at all the
/// graph is empty.
pub fn build_attack_graph(
    program: &Program,
    index: &DerivationIndex,
    goal_filter: Option<&[String]>,
) -> (AttackGraph, Vec<Diagnostic>) {
    let mut warnings = Vec::new();
    let included: BTreeSet<Atom> = match goal_filter {
        None => index.goals().cloned().collect(),
        Some(names) => {
            let mut seeds = Vec::new();
            for name in names {
                let matching: Vec<Atom> =
                    index.goals().filter(|goal| goal.predicate == *name).cloned().collect();
                if matching.is_empty() {
                    warnings.push(Diagnostic::warning(
                        "goal-not-derived",
                        format!("no derived goal matches predicate '{name}'"),
                    ));
                }
                seeds.extend(matching);
            }
            let mut closure = BTreeSet::new();
            while let Some(goal) = seeds.pop() {
                if !closure.insert(goal.clone()) {
                    continue;
                }
                for derivation in index.derivations(&goal) {
                    for body_ref in &derivation.body {
                        if let BodyRef::Goal(inner) = body_ref {
                            if !closure.contains(inner) {
                                seeds.push(inner.clone());
                            }
                        }
                    }
                }
            }
            closure
        }
    };

    let descriptions: BTreeMap<usize, Option<&str>> =
        program.rules.iter().map(|rule| (rule.ordinal, rule.label.as_deref())).collect();

    let mut graph = AttackGraph::default();
    let mut goal_index: BTreeMap<&Atom, usize> = BTreeMap::new();
    for goal in &included {
        let idx = graph.add_node(AgNode {
            id: None,
            kind: NodeKind::Goal,
            label: goal.to_string(),
            rule_ordinal: None,
            atom: Some(goal.clone()),
        });
        goal_index.insert(goal, idx);
    }

    let mut fact_index: BTreeMap<Atom, usize> = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for goal in &included {
        for derivation in index.derivations(goal) {
            let ordinal = derivation.rule_ordinal;
            let label = rule_label(ordinal, descriptions.get(&ordinal).copied().flatten());
            let rule_idx = graph.add_node(AgNode {
                id: None,
                kind: NodeKind::Rule,
                label,
                rule_ordinal: Some(ordinal),
                atom: None,
            });
            let mut inputs = Vec::with_capacity(derivation.body.len());
            for body_ref in &derivation.body {
                let input = match body_ref {
                    BodyRef::Fact(atom) => *fact_index.entry(atom.clone()).or_insert_with(|| {
                        graph.add_node(AgNode {
                            id: None,
                            kind: NodeKind::Fact,
                            label: atom.to_string(),
                            rule_ordinal: None,
                            atom: Some(atom.clone()),
                        })
                    }),
                    BodyRef::Goal(atom) => goal_index[atom],
                };
                edges.insert((input, rule_idx));
                inputs.push(input);
            }
            let goal_idx = goal_index[goal];
            edges.insert((rule_idx, goal_idx));
            graph.rule_inputs[rule_idx] = inputs;
            graph.rule_output[rule_idx] = Some(goal_idx);
        }
    }
    graph.set_edges(edges);
    (graph, warnings)
}

fn visit_goal(
    nodes: &mut [AgNode],
    rules_for_goal: &BTreeMap<usize, Vec<usize>>,
    inputs: &[Vec<usize>],
    next: &mut usize,
    goal: usize,
) {
    if nodes[goal].id.is_some() {
        return;
    }
    nodes[goal].id = Some(*next);
    *next += 1;
    for &rule in rules_for_goal.get(&goal).map(Vec::as_slice).unwrap_or_default() {
        if nodes[rule].id.is_some() {
            continue;
        }
        nodes[rule].id = Some(*next);
        *next += 1;
        for &input in inputs[rule].iter().rev() {
            if nodes[input].kind == NodeKind::Goal {
                visit_goal(nodes, rules_for_goal, inputs, next, input);
            } else if nodes[input].id.is_none() {
                nodes[input].id = Some(*next);
                *next += 1;
            }
        }
    }
}

/// Assigns ids depth-first from the final goals (ordered by label). Each
/// goal's incoming rules are taken in (ordinal, matched-body) order, and a
/// rule's matched body is walked last-precondition-first, descending into
/// goal preconditions as they are met. Already-numbered graphs pass through
/// untouched.
pub fn number_nodes(mut graph: AttackGraph) -> AttackGraph {
    if graph.is_numbered() {
        return graph;
    }
    for node in &mut graph.nodes {
        node.id = None;
    }
    let mut rules_for_goal: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (rule, goal) in graph.rule_output.iter().enumerate() {
        if let Some(goal) = goal {
            rules_for_goal.entry(*goal).or_default().push(rule);
        }
    }
    let sort_key = |rule: &usize| {
        let labels: Vec<&str> =
            graph.rule_inputs[*rule].iter().map(|&i| graph.nodes[i].label.as_str()).collect();
        (graph.nodes[*rule].rule_ordinal, labels.join("\u{1f}"))
    };
    for rules in rules_for_goal.values_mut() {
        rules.sort_by_key(sort_key);
    }

    let mut roots = graph.final_goals();
    roots.sort_by(|&a, &b| graph.nodes[a].label.cmp(&graph.nodes[b].label));
    let mut next = 1;
    let inputs = graph.rule_inputs.clone();
    for root in roots {
        visit_goal(&mut graph.nodes, &rules_for_goal, &inputs, &mut next, root);
    }
    let mut leftover: Vec<usize> = (0..graph.nodes.len())
        .filter(|&i| graph.nodes[i].kind == NodeKind::Goal && graph.nodes[i].id.is_none())
        .collect();
    leftover.sort_by(|&a, &b| graph.nodes[a].label.cmp(&graph.nodes[b].label));
    for goal in leftover {
        visit_goal(&mut graph.nodes, &rules_for_goal, &inputs, &mut next, goal);
    }
    graph
}

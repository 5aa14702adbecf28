//! End-to-end checks of the parse, evaluate, build, number, and render
//! pipeline against the two bundled example applications, plus structural
//! properties that must hold for any generated program.

mod common;

use atagen_core::graph::{build_attack_graph, number_nodes, AttackGraph, NodeKind};
use atagen_core::logic::{evaluate, parse_program, unify, Program, Substitution};
use atagen_core::render::{render_dot, render_interpretation, render_json};
use common::{load_application, random_program, read_fixture};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn numbered_graph(program: &Program) -> AttackGraph {
    let index = evaluate(program);
    let (graph, warnings) = build_attack_graph(program, &index, None);
    assert!(warnings.is_empty(), "unexpected warnings: {warnings:?}");
    number_nodes(graph)
}

fn kind_counts(graph: &AttackGraph) -> (usize, usize, usize) {
    let count = |kind: NodeKind| graph.nodes().iter().filter(|n| n.kind == kind).count();
    (count(NodeKind::Goal), count(NodeKind::Rule), count(NodeKind::Fact))
}

fn id_edges(graph: &AttackGraph) -> BTreeSet<(usize, usize)> {
    graph
        .edges()
        .iter()
        .map(|&(from, to)| {
            (graph.node(from).id.unwrap(), graph.node(to).id.unwrap())
        })
        .collect()
}

#[test]
fn trip_planner_graph_has_the_published_shape() {
    let program = load_application("trip_planner");
    let graph = numbered_graph(&program);
    assert_eq!(graph.node_count(), 18);
    assert_eq!(kind_counts(&graph), (3, 3, 12));

    let expected: BTreeSet<(usize, usize)> = [
        (14, 13),
        (15, 13),
        (16, 13),
        (17, 13),
        (13, 12),
        (8, 7),
        (9, 7),
        (10, 7),
        (11, 7),
        (12, 7),
        (7, 6),
        (3, 2),
        (4, 2),
        (5, 2),
        (6, 2),
        (18, 2),
        (2, 1),
    ]
    .into_iter()
    .collect();
    assert_eq!(id_edges(&graph), expected);
}

#[test]
fn trip_planner_interpretation_matches_the_golden_file() {
    let program = load_application("trip_planner");
    let graph = numbered_graph(&program);
    let rendered = render_interpretation(&graph).unwrap();
    assert_eq!(rendered, read_fixture("golden/trip_planner_ag.txt"));
}

#[test]
fn email_responder_graph_has_the_published_shape() {
    let program = load_application("email_responder");
    let graph = numbered_graph(&program);
    assert_eq!(graph.node_count(), 30);
    assert_eq!(kind_counts(&graph), (6, 6, 18));

    let goals: BTreeSet<String> = graph
        .nodes()
        .iter()
        .filter(|node| node.kind == NodeKind::Goal)
        .map(|node| node.label.clone())
        .collect();
    let expected: BTreeSet<String> = [
        "vulnerableToPromptInjection(orchestrator)",
        "vulnerableToMaliciousMailFetch(fetcher)",
        "vulnerableToStressfulManipulation(categorizer)",
        "vulnerableToMiscategorization(categorizer)",
        "vulnerableToInstructionLeakage(drafter)",
        "vulnerableToDataLeakage(drafter)",
    ]
    .into_iter()
    .map(str::to_string)
    .collect();
    assert_eq!(goals, expected);

    let final_label = |index: usize| graph.node(index).label.as_str();
    let finals: Vec<&str> = graph.final_goals().into_iter().map(final_label).collect();
    assert_eq!(finals, ["vulnerableToDataLeakage(drafter)"]);
}

#[test]
fn email_responder_interpretation_matches_the_golden_file() {
    let program = load_application("email_responder");
    let graph = numbered_graph(&program);
    let rendered = render_interpretation(&graph).unwrap();
    assert_eq!(rendered, read_fixture("golden/email_responder_ag.txt"));
}

#[test]
fn goal_filter_keeps_only_the_backward_closure() {
    let program = load_application("email_responder");
    let index = evaluate(&program);
    let filter = ["vulnerableToPromptInjection".to_string()];
    let (graph, warnings) = build_attack_graph(&program, &index, Some(&filter));
    assert!(warnings.is_empty());
    let graph = number_nodes(graph);

    let (goals, rules, _) = kind_counts(&graph);
    assert_eq!(goals, 1);
    assert_eq!(rules, 1);
    for node in graph.nodes() {
        if node.kind == NodeKind::Goal {
            assert_eq!(node.label, "vulnerableToPromptInjection(orchestrator)");
        }
    }
    let ids: BTreeSet<usize> = graph.nodes().iter().map(|n| n.id.unwrap()).collect();
    assert_eq!(ids, (1..=graph.node_count()).collect::<BTreeSet<_>>());
}

#[test]
fn goal_filter_with_no_match_warns_and_yields_an_empty_graph() {
    let program = load_application("trip_planner");
    let index = evaluate(&program);
    let filter = ["noSuchPredicate".to_string()];
    let (graph, warnings) = build_attack_graph(&program, &index, Some(&filter));
    assert!(graph.is_empty());
    assert_eq!(warnings.len(), 1);
    assert_eq!(warnings[0].code, "goal-not-derived");
}

/// Every rule node's recorded inputs must still unify, position by
/// position under one substitution, with the body of the rule the node
/// claims to instantiate.
#[test]
fn rule_nodes_reunify_with_their_rules() {
    for app in ["trip_planner", "email_responder"] {
        let program = load_application(app);
        let graph = numbered_graph(&program);
        for (index, node) in graph.nodes().iter().enumerate() {
            if node.kind != NodeKind::Rule {
                continue;
            }
            let ordinal = node.rule_ordinal.expect("rule nodes carry their ordinal");
            let rule = program
                .rules
                .iter()
                .find(|rule| rule.ordinal == ordinal)
                .expect("ordinal resolves to a rule");
            let inputs = graph.rule_inputs(index);
            assert_eq!(inputs.len(), rule.body.len(), "{app}: rule {ordinal} arity");

            let mut subst = Substitution::new();
            for (body_atom, &input) in rule.body.iter().zip(inputs) {
                let matched = graph.node(input).atom.as_ref().unwrap();
                subst = unify(body_atom, matched, &subst)
                    .unwrap_or_else(|| panic!("{app}: rule {ordinal} does not re-unify"));
            }
        }
    }
}

#[test]
fn renderers_are_pure_functions_of_the_graph() {
    let program = load_application("trip_planner");
    let graph = numbered_graph(&program);
    assert_eq!(render_interpretation(&graph).unwrap(), render_interpretation(&graph).unwrap());
    assert_eq!(render_dot(&graph).unwrap(), render_dot(&graph).unwrap());
    assert_eq!(render_json(&graph).unwrap(), render_json(&graph).unwrap());

    let rebuilt = numbered_graph(&program);
    assert_eq!(render_interpretation(&rebuilt).unwrap(), render_interpretation(&graph).unwrap());
}

proptest! {
    /// Printing any constant and parsing it back must preserve it exactly,
    /// whatever quoting the printer had to apply.
    #[test]
    fn constants_survive_print_and_reparse(text in "[ !-~αβё中🦀]{0,10}") {
        use atagen_core::logic::{Atom, Term};
        let atom = Atom::new("p", vec![Term::constant(text)]);
        let source = format!("{atom}.\n");
        let parsed = parse_program(&source).unwrap();
        prop_assert_eq!(&parsed.facts[0].head, &atom);
    }

    /// A generated program re-emitted from its parse must parse back to the
    /// identical program, directives included.
    #[test]
    fn generated_programs_survive_reemission(seed in any::<u64>()) {
        let source = random_program(seed);
        let first = parse_program(&source).unwrap();
        let second = parse_program(&first.to_source()).unwrap();
        prop_assert_eq!(&first, &second);
    }
}

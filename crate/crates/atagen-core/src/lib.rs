//! Logic-based attack-graph generation and risk analysis for multi-agent LLM
//! applications.
//!
//! The pipeline runs in stages: parse Datalog-style facts and rules
//! ([`logic`]), evaluate them to a least fixpoint with full derivation
//! provenance, assemble and number the logical attack graph ([`graph`]),
//! render it ([`render`]), and score agents and attack paths ([`analyzer`],
//! [`report`]). Topology facts are interpreted by [`model`], and known LLM
//! vulnerabilities come from the CSV database handled by [`lvd`].
//!
//! ```
//! use atagen_core::graph::{build_attack_graph, number_nodes};
//! use atagen_core::logic::{evaluate, parse_program};
//! use atagen_core::render::render_interpretation;
//!
//! let source = "reachable(web).\n%# desc: lateral move\ncompromised(H) :- reachable(H).";
//! let program = parse_program(source).unwrap();
//! let index = evaluate(&program);
//! let (graph, warnings) = build_attack_graph(&program, &index, None);
//! assert!(warnings.is_empty());
//! let text = render_interpretation(&number_nodes(graph)).unwrap();
//! assert_eq!(text, "<1>:compromised(web)\n(2):RULE 0 (lateral move)\n[3]:reachable(web)\n");
//! ```

pub mod analyzer;
pub mod diag;
pub mod graph;
pub mod logic;
pub mod lvd;
pub mod model;
pub mod render;
pub mod report;

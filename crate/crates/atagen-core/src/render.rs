//! Byte-stable attack graph renderers: DOT, JSON, and interpretation text.

use crate::graph::{AgNode, AttackGraph, NodeKind};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("attack graph is not numbered")]
    Unnumbered,
    #[error("node id {0} is not in the graph")]
    UnknownNode(usize),
}

fn nodes_by_id(graph: &AttackGraph) -> Result<Vec<&AgNode>, RenderError> {
    let mut nodes = Vec::with_capacity(graph.node_count());
    for node in graph.nodes() {
        if node.id.is_none() {
            return Err(RenderError::Unnumbered);
        }
        nodes.push(node);
    }
    nodes.sort_by_key(|node| node.id);
    Ok(nodes)
}

fn edges_by_id(graph: &AttackGraph) -> Result<Vec<(usize, usize)>, RenderError> {
    let mut edges = Vec::with_capacity(graph.edge_count());
    for &(from, to) in graph.edges() {
        let from = graph.node(from).id.ok_or(RenderError::Unnumbered)?;
        let to = graph.node(to).id.ok_or(RenderError::Unnumbered)?;
        edges.push((from, to));
    }
    edges.sort_unstable();
    Ok(edges)
}

/// One line per node in id order: `<n>:` goals, `(n):` rules, `[n]:` facts.
pub fn render_interpretation(graph: &AttackGraph) -> Result<String, RenderError> {
    let mut out = String::new();
    for node in nodes_by_id(graph)? {
        let id = node.id.expect("checked by nodes_by_id");
        match node.kind {
            NodeKind::Goal => out.push_str(&format!("<{id}>:{}\n", node.label)),
            NodeKind::Rule => out.push_str(&format!("({id}):{}\n", node.label)),
            NodeKind::Fact => out.push_str(&format!("[{id}]:{}\n", node.label)),
        }
    }
    Ok(out)
}

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph: facts as boxes, rules as ellipses, goals as diamonds.
pub fn render_dot(graph: &AttackGraph) -> Result<String, RenderError> {
    let mut out = String::from("digraph attack_graph {\n");
    for node in nodes_by_id(graph)? {
        let id = node.id.expect("checked by nodes_by_id");
        let shape = match node.kind {
            NodeKind::Fact => "box",
            NodeKind::Rule => "ellipse",
            NodeKind::Goal => "diamond",
        };
        let label = dot_escape(&format!("{id}:{}", node.label));
        out.push_str(&format!("    \"{id}\" [shape={shape}, label=\"{label}\"];\n"));
    }
    for (from, to) in edges_by_id(graph)? {
        out.push_str(&format!("    \"{from}\" -> \"{to}\";\n"));
    }
    out.push_str("}\n");
    Ok(out)
}

#[derive(Serialize)]
struct JsonNode<'a> {
    id: usize,
    kind: &'static str,
    label: &'a str,
}

#[derive(Serialize)]
struct JsonEdge {
    from: usize,
    to: usize,
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<JsonEdge>,
}

/// Compact JSON with fixed key order and a trailing newline.
pub fn render_json(graph: &AttackGraph) -> Result<String, RenderError> {
    let nodes = nodes_by_id(graph)?
        .into_iter()
        .map(|node| JsonNode {
            id: node.id.expect("checked by nodes_by_id"),
            kind: node.kind.as_str(),
            label: &node.label,
        })
        .collect();
    let edges = edges_by_id(graph)?
        .into_iter()
        .map(|(from, to)| JsonEdge { from, to })
        .collect();
    let doc = JsonGraph { nodes, edges };
    let mut text = serde_json::to_string(&doc).expect("in-memory serialization");
    text.push('\n');
    Ok(text)
}

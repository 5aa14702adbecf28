//! Analysis reports: per-agent risk table plus ranked attack paths, rendered
//! as stable JSON and plain text.

use crate::analyzer::{AgentRisk, AttackPath};
use crate::graph::AttackGraph;
use crate::lvd::format_number;
use crate::render::RenderError;
use serde::Serialize;

fn label_of(graph: &AttackGraph, id: usize) -> Result<&str, RenderError> {
    graph
        .index_of_id(id)
        .map(|index| graph.node(index).label.as_str())
        .ok_or(RenderError::UnknownNode(id))
}

#[derive(Serialize)]
struct JsonStep<'a> {
    rule: usize,
    goal: usize,
    rule_label: &'a str,
    goal_label: &'a str,
    ir_risk: f64,
    goal_risk: f64,
}

#[derive(Serialize)]
struct JsonPath<'a> {
    rank: usize,
    risk: f64,
    terminal_goal: &'a str,
    steps: Vec<JsonStep<'a>>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    agents: &'a [AgentRisk],
    paths: Vec<JsonPath<'a>>,
}

/// Compact JSON report with fixed key order and a trailing newline. Paths are
/// reported in the order given (rank them first).
pub fn render_report_json(
    graph: &AttackGraph,
    agents: &[AgentRisk],
    paths: &[AttackPath],
) -> Result<String, RenderError> {
    let mut json_paths = Vec::with_capacity(paths.len());
    for (i, path) in paths.iter().enumerate() {
        let mut steps = Vec::with_capacity(path.steps.len());
        for step in &path.steps {
            steps.push(JsonStep {
                rule: step.rule_node,
                goal: step.goal_node,
                rule_label: label_of(graph, step.rule_node)?,
                goal_label: label_of(graph, step.goal_node)?,
                ir_risk: step.ir_risk,
                goal_risk: step.goal_risk,
            });
        }
        let terminal_goal = match path.steps.last() {
            Some(last) => label_of(graph, last.goal_node)?,
            None => "",
        };
        json_paths.push(JsonPath { rank: i + 1, risk: path.risk, terminal_goal, steps });
    }
    let report = JsonReport { agents, paths: json_paths };
    let mut text = serde_json::to_string(&report).expect("in-memory serialization");
    text.push('\n');
    Ok(text)
}

/// Human-readable report mirroring the JSON content.
pub fn render_report_text(
    graph: &AttackGraph,
    agents: &[AgentRisk],
    paths: &[AttackPath],
) -> Result<String, RenderError> {
    let mut out = String::from("agent risks:\n");
    if agents.is_empty() {
        out.push_str("  none\n");
    }
    for agent in agents {
        out.push_str(&format!(
            "  {}: impact {}, likelihood {}, risk {}\n",
            agent.agent,
            agent.impact,
            format_number(agent.likelihood),
            format_number(agent.risk)
        ));
    }
    out.push_str("attack paths:\n");
    if paths.is_empty() {
        out.push_str("  none\n");
    }
    for (i, path) in paths.iter().enumerate() {
        let terminal_goal = match path.steps.last() {
            Some(last) => label_of(graph, last.goal_node)?,
            None => "",
        };
        out.push_str(&format!(
            "  {}. risk {}, {} step{}, ends at {}\n",
            i + 1,
            format_number(path.risk),
            path.steps.len(),
            if path.steps.len() == 1 { "" } else { "s" },
            terminal_goal
        ));
        for step in &path.steps {
            out.push_str(&format!(
                "     ({}) {} -> <{}> {}\n",
                step.rule_node,
                label_of(graph, step.rule_node)?,
                step.goal_node,
                label_of(graph, step.goal_node)?
            ));
        }
    }
    Ok(out)
}

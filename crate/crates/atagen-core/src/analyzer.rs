//! Risk analysis over the attack graph: per-agent risk scores, step and goal
//! risk propagation, and attack-path enumeration.

use crate::diag::Diagnostic;
use crate::graph::{AttackGraph, NodeKind};
use crate::logic::{Clause, Program};
use crate::lvd::LvdDatabase;
use crate::model::{ModelError, TopologyModel};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyzerError {
    #[error("attack graph is not numbered")]
    Unnumbered,
    #[error("risk propagation hit a cycle at goal '{0}'")]
    CyclicGoals(String),
}

/// An agent's risk: how connected it is times how likely its engine is to be
/// successfully attacked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentRisk {
    pub agent: String,
    pub impact: usize,
    pub likelihood: f64,
    pub risk: f64,
}

/// Computes one agent's risk score. The impact is the agent's interaction
/// count; the likelihood is the highest success rate among the vulExists
/// facts naming the agent's engine, falling back to `default_asr`.
pub fn agent_risk(
    model: &TopologyModel,
    facts: &[Clause],
    db: Option<&LvdDatabase>,
    default_asr: f64,
    agent: &str,
) -> Result<(AgentRisk, Vec<Diagnostic>), ModelError> {
    let impact = model.interaction_count(agent)?;
    let engine = model
        .engines
        .get(agent)
        .ok_or_else(|| ModelError::MissingEngine(agent.to_string()))?;
    let mut warnings = Vec::new();
    let mut likelihood: Option<f64> = None;
    for fact in facts {
        let head = &fact.head;
        if head.predicate != "vulExists" || head.arity() != 5 {
            continue;
        }
        if head.args[0].as_constant() != Some(engine.as_str()) {
            continue;
        }
        let value = match (db, head.args[1].as_constant(), head.args[2].as_constant()) {
            (Some(db), Some(procedure), Some(technique)) => {
                let (value, warning) =
                    db.lookup_likelihood(engine, procedure, technique, default_asr);
                warnings.extend(warning);
                value
            }
            _ => default_asr,
        };
        likelihood = Some(likelihood.map_or(value, |prev| prev.max(value)));
    }
    let likelihood = likelihood.unwrap_or_else(|| {
        warnings.push(Diagnostic::warning(
            "no-vulnerability-facts",
            format!(
                "agent '{agent}' has no vulExists facts for engine '{engine}'; \
                 using the default likelihood"
            ),
        ));
        default_asr
    });
    let risk = AgentRisk {
        agent: agent.to_string(),
        impact,
        likelihood,
        risk: impact as f64 * likelihood,
    };
    Ok((risk, warnings))
}

/// Risk scores for every agent in the model, in name order.
pub fn all_agent_risks(
    model: &TopologyModel,
    facts: &[Clause],
    db: Option<&LvdDatabase>,
    default_asr: f64,
) -> Result<(Vec<AgentRisk>, Vec<Diagnostic>), ModelError> {
    let mut risks = Vec::new();
    let mut warnings = Vec::new();
    for agent in &model.agents {
        let (risk, agent_warnings) = agent_risk(model, facts, db, default_asr, agent)?;
        risks.push(risk);
        warnings.extend(agent_warnings);
    }
    Ok((risks, warnings))
}

/// Success probabilities for the graph's vulExists fact nodes, keyed by node
/// id. With a database, each fact's (LLM, procedure, technique) is looked up;
/// without one every vulnerability gets the default.
pub fn vulnerability_likelihoods(
    graph: &AttackGraph,
    db: Option<&LvdDatabase>,
    default_asr: f64,
) -> Result<(BTreeMap<usize, f64>, Vec<Diagnostic>), AnalyzerError> {
    if !graph.is_numbered() {
        return Err(AnalyzerError::Unnumbered);
    }
    let mut likelihoods = BTreeMap::new();
    let mut warnings = Vec::new();
    for node in graph.nodes() {
        if node.kind != NodeKind::Fact {
            continue;
        }
        let Some(atom) = &node.atom else { continue };
        if atom.predicate != "vulExists" || atom.arity() != 5 {
            continue;
        }
        let value = match (
            db,
            atom.args[0].as_constant(),
            atom.args[1].as_constant(),
            atom.args[2].as_constant(),
        ) {
            (Some(db), Some(llm), Some(procedure), Some(technique)) => {
                let (value, warning) =
                    db.lookup_likelihood(llm, procedure, technique, default_asr);
                warnings.extend(warning);
                value
            }
            _ => default_asr,
        };
        likelihoods.insert(node.id.expect("numbered graph"), value);
    }
    Ok((likelihoods, warnings))
}

/// Per-rule success probabilities declared by `%# risk:` directives, keyed by
/// rule ordinal. Rules without one default to 1.0 downstream.
pub fn rule_risk_map(program: &Program) -> BTreeMap<usize, f64> {
    program.rules.iter().filter_map(|rule| rule.risk.map(|v| (rule.ordinal, v))).collect()
}

/// Memoized risk values for every rule and goal node, keyed by node id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskAnalysis {
    ir: BTreeMap<usize, f64>,
    goal: BTreeMap<usize, f64>,
}

impl RiskAnalysis {
    /// Product of a rule node's predecessor risks.
    pub fn ir_risk(&self, rule_id: usize) -> Option<f64> {
        self.ir.get(&rule_id).copied()
    }

    /// Highest (incoming risk × rule risk) among the goal's derivations.
    pub fn goal_risk(&self, goal_id: usize) -> Option<f64> {
        self.goal.get(&goal_id).copied()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    Visiting,
    Done,
}

struct RiskComputer<'a> {
    graph: &'a AttackGraph,
    fact_likelihoods: &'a BTreeMap<usize, f64>,
    rule_risks: &'a BTreeMap<usize, f64>,
    marks: BTreeMap<usize, Mark>,
    ir: BTreeMap<usize, f64>,
    goal: BTreeMap<usize, f64>,
}

impl RiskComputer<'_> {
    fn rule_risk(&self, rule: usize) -> f64 {
        self.graph
            .node(rule)
            .rule_ordinal
            .and_then(|ordinal| self.rule_risks.get(&ordinal))
            .copied()
            .unwrap_or(1.0)
    }

    fn goal_risk(&mut self, goal: usize) -> Result<f64, AnalyzerError> {
        if let Some(&value) = self.goal.get(&goal) {
            return Ok(value);
        }
        if matches!(self.marks.get(&goal), Some(Mark::Visiting)) {
            return Err(AnalyzerError::CyclicGoals(self.graph.node(goal).label.clone()));
        }
        self.marks.insert(goal, Mark::Visiting);
        let mut best: Option<f64> = None;
        for &rule in self.graph.incoming(goal) {
            let candidate = self.ir_risk(rule)? * self.rule_risk(rule);
            best = Some(best.map_or(candidate, |b| b.max(candidate)));
        }
        let value = best.unwrap_or(0.0);
        self.marks.insert(goal, Mark::Done);
        self.goal.insert(goal, value);
        Ok(value)
    }

    fn ir_risk(&mut self, rule: usize) -> Result<f64, AnalyzerError> {
        if let Some(&value) = self.ir.get(&rule) {
            return Ok(value);
        }
        let mut product = 1.0;
        for &pred in self.graph.incoming(rule) {
            let node = self.graph.node(pred);
            product *= match node.kind {
                NodeKind::Goal => self.goal_risk(pred)?,
                _ => node
                    .id
                    .and_then(|id| self.fact_likelihoods.get(&id))
                    .copied()
                    .unwrap_or(1.0),
            };
        }
        self.ir.insert(rule, product);
        Ok(product)
    }
}

/// Propagates risks bottom-up through the whole graph. Fails on a cycle among
/// goal risks, since a goal's risk would then depend on itself.
pub fn analyze_risks(
    graph: &AttackGraph,
    fact_likelihoods: &BTreeMap<usize, f64>,
    rule_risks: &BTreeMap<usize, f64>,
) -> Result<RiskAnalysis, AnalyzerError> {
    if !graph.is_numbered() {
        return Err(AnalyzerError::Unnumbered);
    }
    let mut computer = RiskComputer {
        graph,
        fact_likelihoods,
        rule_risks,
        marks: BTreeMap::new(),
        ir: BTreeMap::new(),
        goal: BTreeMap::new(),
    };
    for index in 0..graph.node_count() {
        if graph.node(index).kind == NodeKind::Goal {
            computer.goal_risk(index)?;
        }
    }
    let to_ids = |values: BTreeMap<usize, f64>| {
        values
            .into_iter()
            .map(|(index, value)| (graph.node(index).id.expect("numbered graph"), value))
            .collect()
    };
    Ok(RiskAnalysis { ir: to_ids(computer.ir), goal: to_ids(computer.goal) })
}

/// One step of an attack: a rule node firing and the goal it derives.
/// Node references are graph ids.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackStep {
    pub rule_node: usize,
    pub goal_node: usize,
    pub ir_risk: f64,
    pub goal_risk: f64,
}

/// A chain of attack steps; terminal once its last goal feeds no further rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPath {
    pub steps: Vec<AttackStep>,
    pub terminal: bool,
    /// The last step's goal risk.
    pub risk: f64,
}

impl AttackPath {
    pub fn step_ids(&self) -> Vec<(usize, usize)> {
        self.steps.iter().map(|step| (step.rule_node, step.goal_node)).collect()
    }

    fn contains_goal(&self, goal_id: usize) -> bool {
        self.steps.iter().any(|step| step.goal_node == goal_id)
    }
}

fn make_step(graph: &AttackGraph, risks: &RiskAnalysis, rule: usize) -> AttackStep {
    let rule_id = graph.node(rule).id.expect("numbered graph");
    let goal = graph.rule_goal(rule).expect("rule nodes derive a goal");
    let goal_id = graph.node(goal).id.expect("numbered graph");
    AttackStep {
        rule_node: rule_id,
        goal_node: goal_id,
        ir_risk: risks.ir_risk(rule_id).unwrap_or(1.0),
        goal_risk: risks.goal_risk(goal_id).unwrap_or(0.0),
    }
}

/// Extends a path by one step in every possible direction, appending the
/// results to the accumulator. A path whose last goal feeds no rule is
/// re-emitted marked terminal. Returns false only for already-terminal paths.
pub fn find_successive_steps(
    path: &AttackPath,
    graph: &AttackGraph,
    risks: &RiskAnalysis,
    accumulator: &mut Vec<AttackPath>,
) -> bool {
    if path.terminal {
        return false;
    }
    let Some(last) = path.steps.last() else {
        return false;
    };
    let Some(goal_index) = graph.index_of_id(last.goal_node) else {
        return false;
    };
    let mut successors: Vec<usize> = graph
        .outgoing(goal_index)
        .iter()
        .copied()
        .filter(|&next| graph.node(next).kind == NodeKind::Rule)
        .collect();
    if successors.is_empty() {
        accumulator.push(AttackPath { steps: path.steps.clone(), terminal: true, risk: path.risk });
        return true;
    }
    successors.sort_by_key(|&rule| graph.node(rule).id);
    for rule in successors {
        let step = make_step(graph, risks, rule);
        if path.contains_goal(step.goal_node) {
            continue;
        }
        let mut steps = path.steps.clone();
        let risk = step.goal_risk;
        steps.push(step);
        accumulator.push(AttackPath { steps, terminal: false, risk });
    }
    true
}

/// Enumerates every attack path: seed one single-step path per rule node
/// whose preconditions are all facts, then extend until every surviving path
/// is terminal. A goal never repeats within a path.
pub fn find_attack_paths(
    graph: &AttackGraph,
    fact_likelihoods: &BTreeMap<usize, f64>,
    rule_risks: &BTreeMap<usize, f64>,
) -> Result<Vec<AttackPath>, AnalyzerError> {
    let risks = analyze_risks(graph, fact_likelihoods, rule_risks)?;
    let mut first_layer: Vec<usize> = (0..graph.node_count())
        .filter(|&index| {
            graph.node(index).kind == NodeKind::Rule
                && graph
                    .incoming(index)
                    .iter()
                    .all(|&pred| graph.node(pred).kind == NodeKind::Fact)
        })
        .collect();
    first_layer.sort_by_key(|&rule| graph.node(rule).id);

    let mut paths: Vec<AttackPath> = first_layer
        .into_iter()
        .map(|rule| {
            let step = make_step(graph, &risks, rule);
            let risk = step.goal_risk;
            AttackPath { steps: vec![step], terminal: false, risk }
        })
        .collect();

    while paths.iter().any(|path| !path.terminal) {
        let mut next = Vec::with_capacity(paths.len());
        for path in &paths {
            if !find_successive_steps(path, graph, &risks, &mut next) {
                next.push(path.clone());
            }
        }
        paths = next;
    }
    Ok(paths)
}

/// Orders paths by descending risk; ties go to the shorter path, then to the
/// lexicographically smaller step-id sequence.
pub fn rank_paths(mut paths: Vec<AttackPath>) -> Vec<AttackPath> {
    paths.sort_by(|a, b| {
        b.risk
            .total_cmp(&a.risk)
            .then_with(|| a.steps.len().cmp(&b.steps.len()))
            .then_with(|| a.step_ids().cmp(&b.step_ids()))
    });
    paths
}

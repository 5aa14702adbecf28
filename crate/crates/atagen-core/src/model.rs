//! Application topology derived from base facts: agents, channels, engines,
//! tools, and the model checks run before analysis.

use crate::diag::Diagnostic;
use crate::logic::{Clause, Term};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Channel kinds agents may communicate over.
pub const CHANNEL_KINDS: [&str; 3] = ["shortTermMemory", "longTermMemory", "output2Input"];

/// Pseudo-endpoint for traffic leaving the application.
pub const INTERNET: &str = "internet";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown agent '{0}'")]
    UnknownAgent(String),
    #[error("agent '{0}' has no llmEngine fact")]
    MissingEngine(String),
}

/// A communication edge between two agents. Positions left unconstrained by
/// the fact (variables or `_`) are stored as `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub source: Option<String>,
    pub destination: Option<String>,
    pub data_type: Option<String>,
    pub channel: Option<String>,
}

impl Channel {
    pub fn touches(&self, agent: &str) -> bool {
        self.source.as_deref() == Some(agent) || self.destination.as_deref() == Some(agent)
    }
}

/// A data exchange crossing the application boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalInteraction {
    pub source: Option<String>,
    pub destination: Option<String>,
    pub service: Option<String>,
    pub data_type: Option<String>,
}

/// The agent application model assembled from topology facts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopologyModel {
    pub agents: BTreeSet<String>,
    pub input_agents: BTreeSet<String>,
    /// Output agents with the kind of output they produce.
    pub output_agents: BTreeMap<String, Option<String>>,
    pub direct_channels: Vec<Channel>,
    pub indirect_flows: Vec<Channel>,
    pub external_interactions: Vec<ExternalInteraction>,
    pub tools: BTreeMap<String, BTreeSet<String>>,
    pub engines: BTreeMap<String, String>,
    pub missing_guardrails: BTreeMap<String, BTreeSet<String>>,
    /// Agents named by some fact other than a channel edge; used to flag
    /// channel endpoints that nothing else ever mentions.
    pub declared_agents: BTreeSet<String>,
}

impl TopologyModel {
    /// Number of direct channels plus indirect flows the agent takes part in.
    /// External interactions and tool bindings are not counted.
    pub fn interaction_count(&self, agent: &str) -> Result<usize, ModelError> {
        if !self.agents.contains(agent) {
            return Err(ModelError::UnknownAgent(agent.to_string()));
        }
        Ok(self
            .direct_channels
            .iter()
            .chain(&self.indirect_flows)
            .filter(|channel| channel.touches(agent))
            .count())
    }

    fn note_agent(&mut self, term: &Term, declares: bool) {
        if let Some(name) = term.as_constant() {
            if name != INTERNET {
                self.agents.insert(name.to_string());
                if declares {
                    self.declared_agents.insert(name.to_string());
                }
            }
        }
    }
}

fn constant(term: &Term) -> Option<String> {
    term.as_constant().map(str::to_string)
}

fn arity_error(predicate: &str, expected: usize, found: usize, fact: &Clause) -> Diagnostic {
    Diagnostic::error(
        "bad-arity",
        format!("{predicate} expects {expected} arguments, found {found}"),
    )
    .about(fact.head.to_string())
}

/// Builds the topology model from parsed facts. Facts whose predicate the
/// model does not recognize are left alone; only a recognized predicate used
/// at the wrong arity produces an error diagnostic.
pub fn build_topology(facts: &[Clause]) -> (TopologyModel, Vec<Diagnostic>) {
    let mut model = TopologyModel::default();
    let mut diagnostics = Vec::new();
    let expected_arity: BTreeMap<&str, usize> = [
        ("inputAgent", 1),
        ("outputAgent", 2),
        ("hacl", 4),
        ("dataFlow", 4),
        ("externalInteraction", 4),
        ("execCode", 2),
        ("llmEngine", 2),
        ("missingGuardrail", 2),
        ("vulExists", 5),
    ]
    .into_iter()
    .collect();

    for fact in facts {
        let head = &fact.head;
        let args = &head.args;
        if let Some(&expected) = expected_arity.get(head.predicate.as_str()) {
            if head.arity() != expected {
                diagnostics.push(arity_error(&head.predicate, expected, head.arity(), fact));
                continue;
            }
        }
        match head.predicate.as_str() {
            "inputAgent" => {
                model.note_agent(&args[0], true);
                if let Some(name) = constant(&args[0]) {
                    model.input_agents.insert(name);
                }
            }
            "outputAgent" => {
                model.note_agent(&args[0], true);
                if let Some(name) = constant(&args[0]) {
                    model.output_agents.insert(name, constant(&args[1]));
                }
            }
            "hacl" | "dataFlow" => {
                model.note_agent(&args[0], false);
                model.note_agent(&args[1], false);
                let channel = Channel {
                    source: constant(&args[0]),
                    destination: constant(&args[1]),
                    data_type: constant(&args[2]),
                    channel: constant(&args[3]),
                };
                if head.predicate == "hacl" {
                    model.direct_channels.push(channel);
                } else {
                    model.indirect_flows.push(channel);
                }
            }
            "externalInteraction" => {
                model.note_agent(&args[0], true);
                model.note_agent(&args[1], true);
                model.external_interactions.push(ExternalInteraction {
                    source: constant(&args[0]),
                    destination: constant(&args[1]),
                    service: constant(&args[2]),
                    data_type: constant(&args[3]),
                });
            }
            "execCode" => {
                model.note_agent(&args[0], true);
                if let (Some(agent), Some(tool)) = (constant(&args[0]), constant(&args[1])) {
                    model.tools.entry(agent).or_default().insert(tool);
                }
            }
            "llmEngine" => {
                model.note_agent(&args[0], true);
                if let (Some(agent), Some(engine)) = (constant(&args[0]), constant(&args[1])) {
                    model.engines.entry(agent).or_insert(engine);
                }
            }
            "missingGuardrail" => {
                model.note_agent(&args[0], true);
                if let (Some(agent), Some(guard)) = (constant(&args[0]), constant(&args[1])) {
                    model.missing_guardrails.entry(agent).or_default().insert(guard);
                }
            }
            _ => {}
        }
    }
    (model, diagnostics)
}

/// Checks the assembled model for structural problems. Everything reported
/// here is a warning; analysis may still proceed.
pub fn validate_model(model: &TopologyModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if model.input_agents.is_empty() {
        out.push(Diagnostic::warning("no-input-agent", "no agent is marked as an input agent"));
    }
    if model.output_agents.is_empty() {
        out.push(Diagnostic::warning("no-output-agent", "no agent is marked as an output agent"));
    }
    for (agent, engine) in &model.engines {
        let connected = model
            .direct_channels
            .iter()
            .chain(&model.indirect_flows)
            .any(|channel| channel.touches(agent));
        if !connected {
            out.push(
                Diagnostic::warning(
                    "engine-without-channel",
                    format!("agent '{agent}' runs on '{engine}' but has no communication channel"),
                )
                .about(agent.clone()),
            );
        }
    }
    let mut undeclared = BTreeSet::new();
    for channel in model.direct_channels.iter().chain(&model.indirect_flows) {
        for endpoint in [&channel.source, &channel.destination].into_iter().flatten() {
            if endpoint != INTERNET && !model.declared_agents.contains(endpoint) {
                undeclared.insert(endpoint.clone());
            }
        }
    }
    for endpoint in undeclared {
        out.push(
            Diagnostic::warning(
                "undeclared-endpoint",
                format!("channel endpoint '{endpoint}' is not declared by any other fact"),
            )
            .about(endpoint),
        );
    }
    for channel in model.direct_channels.iter().chain(&model.indirect_flows) {
        if let Some(kind) = &channel.channel {
            if !CHANNEL_KINDS.contains(&kind.as_str()) {
                out.push(
                    Diagnostic::warning(
                        "unknown-channel",
                        format!("'{kind}' is not a known communication channel"),
                    )
                    .about(kind.clone()),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_program;

    fn build(source: &str) -> (TopologyModel, Vec<Diagnostic>) {
        let program = parse_program(source).unwrap();
        build_topology(&program.facts)
    }

    const TRIP: &str = "\
        inputAgent(citySelection).\n\
        outputAgent(itineraryGeneration,'text').\n\
        hacl(citySelection,travelResearch,'string','output2Input').\n\
        hacl(travelResearch,itineraryGeneration,'json','output2Input').\n\
        externalInteraction(travelResearch,'internet',_Target,'string').\n\
        externalInteraction('internet',travelResearch,_Target,'json').\n\
        llmEngine(citySelection,'GPT4o-mini').\n\
        llmEngine(travelResearch,'GPT4o-mini').\n\
        llmEngine(itineraryGeneration,'GPT4o-mini').\n\
        missingGuardrail(citySelection,'inputSanitization').\n";

    #[test]
    fn trip_shaped_facts_populate_the_model() {
        let (model, diagnostics) = build(TRIP);
        assert!(diagnostics.is_empty());
        let agents: Vec<&str> = model.agents.iter().map(String::as_str).collect();
        assert_eq!(agents, ["citySelection", "itineraryGeneration", "travelResearch"]);
        assert_eq!(model.direct_channels.len(), 2);
        assert!(model.indirect_flows.is_empty());
        assert_eq!(model.external_interactions.len(), 2);
        assert!(model.input_agents.contains("citySelection"));
        assert_eq!(
            model.output_agents.get("itineraryGeneration"),
            Some(&Some("text".to_string()))
        );
        assert!(validate_model(&model).is_empty());
    }

    #[test]
    fn internet_is_not_an_agent() {
        let (model, _) = build(TRIP);
        assert!(!model.agents.contains(INTERNET));
    }

    #[test]
    fn interaction_count_covers_both_directions() {
        let (model, _) = build(TRIP);
        assert_eq!(model.interaction_count("travelResearch"), Ok(2));
        assert_eq!(model.interaction_count("citySelection"), Ok(1));
        assert_eq!(
            model.interaction_count("mailRoom"),
            Err(ModelError::UnknownAgent("mailRoom".to_string()))
        );
    }

    #[test]
    fn interaction_counts_sum_to_twice_the_agent_edges() {
        let (model, _) = build(TRIP);
        let total: usize =
            model.agents.iter().map(|a| model.interaction_count(a).unwrap()).sum();
        let agent_edges = model
            .direct_channels
            .iter()
            .chain(&model.indirect_flows)
            .filter(|c| {
                c.source.as_deref().is_some_and(|s| model.agents.contains(s))
                    && c.destination.as_deref().is_some_and(|d| model.agents.contains(d))
            })
            .count();
        assert_eq!(total, 2 * agent_edges);
    }

    #[test]
    fn wrong_arity_is_an_error() {
        let (_, diagnostics) = build("hacl(a,b,'json').");
        assert_eq!(diagnostics.len(), 1);
        assert_eq!(diagnostics[0].code, "bad-arity");
        assert!(diagnostics[0].message.contains("expects 4 arguments, found 3"));
    }

    #[test]
    fn unrecognized_predicates_are_ignored() {
        let (model, diagnostics) = build("somethingElse(a,b,c).");
        assert!(diagnostics.is_empty());
        assert!(model.agents.is_empty());
    }

    #[test]
    fn missing_input_and_output_agents_warn() {
        let (model, _) = build("");
        let warnings = validate_model(&model);
        let codes: Vec<&str> = warnings.iter().map(|d| d.code).collect();
        assert_eq!(codes, ["no-input-agent", "no-output-agent"]);
    }

    #[test]
    fn unknown_channel_kind_warns() {
        let (model, _) = build("inputAgent(a).\noutputAgent(b,'text').\nhacl(a,b,'json','carrierPigeon').");
        let warnings = validate_model(&model);
        assert!(warnings.iter().any(|d| d.code == "unknown-channel"));
    }

    #[test]
    fn wildcard_channel_kind_is_permitted() {
        let (model, _) = build("inputAgent(a).\noutputAgent(b,'text').\nhacl(a,b,_DataType,_Channel).");
        let warnings = validate_model(&model);
        assert!(warnings.iter().all(|d| d.code != "unknown-channel"));
    }

    #[test]
    fn engine_without_any_channel_warns() {
        let (model, _) = build("inputAgent(a).\noutputAgent(a,'text').\nllmEngine(a,'GPT4o-mini').");
        let warnings = validate_model(&model);
        assert!(warnings.iter().any(|d| d.code == "engine-without-channel"));
    }

    #[test]
    fn endpoints_named_only_by_channels_warn() {
        let (model, _) = build("inputAgent(a).\noutputAgent(a,'text').\nhacl(a,b,'json','output2Input').");
        let warnings = validate_model(&model);
        let undeclared: Vec<&Diagnostic> =
            warnings.iter().filter(|d| d.code == "undeclared-endpoint").collect();
        assert_eq!(undeclared.len(), 1);
        assert_eq!(undeclared[0].subject.as_deref(), Some("b"));
    }

    #[test]
    fn exec_code_binds_tools_without_counting_as_interaction() {
        let source = "inputAgent(a).\noutputAgent(a,'text').\nexecCode(a,'browser').\nexecCode(a,'calculator').";
        let (model, diagnostics) = build(source);
        assert!(diagnostics.is_empty());
        assert_eq!(model.tools["a"].len(), 2);
        assert_eq!(model.interaction_count("a"), Ok(0));
    }

    #[test]
    fn rebuilding_from_canonical_source_is_identical() {
        let program = parse_program(TRIP).unwrap();
        let (model, _) = build_topology(&program.facts);
        let reparsed = parse_program(&program.to_source()).unwrap();
        let (again, _) = build_topology(&reparsed.facts);
        assert_eq!(model, again);
    }
}

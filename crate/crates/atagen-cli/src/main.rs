//! Command-line threat assessment: validate agent models, map known
//! vulnerabilities onto them, generate logical attack graphs, and rank
//! attack paths by risk.

use atagen_core::analyzer::{
    all_agent_risks, find_attack_paths, rank_paths, rule_risk_map, vulnerability_likelihoods,
};
use atagen_core::diag::{Diagnostic, Severity};
use atagen_core::graph::{build_attack_graph, number_nodes, AttackGraph};
use atagen_core::logic::{evaluate, parse_program, Atom, Clause, Program, Term};
use atagen_core::lvd::load_lvd;
use atagen_core::model::{build_topology, validate_model, TopologyModel};
use atagen_core::render::{render_dot, render_interpretation, render_json};
use atagen_core::report::{render_report_json, render_report_text};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "atagen", version, about = "Threat assessment for multi-agent LLM applications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse fact files, build the agent model, and report problems.
    Validate(ValidateArgs),
    /// Map LLM engines to database vulnerabilities and emit fact files.
    Vulnmap(VulnmapArgs),
    /// Generate the logical attack graph and render it.
    Generate(GenerateArgs),
    /// Enumerate attack paths and score agent risks.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Fact file (repeat for several).
    #[arg(long = "facts", required = true)]
    facts: Vec<PathBuf>,
    /// Rule file to check alongside the facts.
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args)]
struct VulnmapArgs {
    /// Fact file with llmEngine facts (repeat for several).
    #[arg(long = "facts", required = true)]
    facts: Vec<PathBuf>,
    /// Vulnerability database CSV.
    #[arg(long)]
    lvd: PathBuf,
    /// Missing-guardrail configuration file.
    #[arg(long)]
    guardrails: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Fact file (repeat for several).
    #[arg(long = "facts", required = true)]
    facts: Vec<PathBuf>,
    /// Interaction rule file.
    #[arg(long)]
    rules: PathBuf,
    /// Keep only this goal predicate and everything it depends on (repeatable).
    #[arg(long = "goal")]
    goals: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Renderings to write.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [GraphFormat::Dot, GraphFormat::Json, GraphFormat::Interp])]
    format: Vec<GraphFormat>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Fact file (repeat for several).
    #[arg(long = "facts", required = true)]
    facts: Vec<PathBuf>,
    /// Interaction rule file.
    #[arg(long)]
    rules: PathBuf,
    /// Vulnerability database CSV for ASR lookups.
    #[arg(long)]
    lvd: Option<PathBuf>,
    /// Likelihood used when no ASR is recorded.
    #[arg(long, default_value_t = 0.5, value_parser = parse_probability)]
    default_asr: f64,
    /// Keep only this goal predicate and everything it depends on (repeatable).
    #[arg(long = "goal")]
    goals: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
    Interp,
}

fn parse_probability(text: &str) -> Result<f64, String> {
    let value: f64 = text.parse().map_err(|_| format!("'{text}' is not a number"))?;
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(format!("{value} is outside [0,1]"))
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn model(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Style {
        let color =
            std::io::stdout().is_terminal() && std::env::var_os("ATAGEN_NO_COLOR").is_none();
        Style { color }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn print_diagnostics<'a>(
        &self,
        diagnostics: impl IntoIterator<Item = &'a Diagnostic>,
    ) -> bool {
        let mut has_errors = false;
        for diagnostic in diagnostics {
            let text = match diagnostic.severity {
                Severity::Error => {
                    has_errors = true;
                    self.paint("31", &diagnostic.to_string())
                }
                Severity::Warning => self.paint("33", &diagnostic.to_string()),
            };
            println!("{text}");
        }
        has_errors
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|err| Failure::io(format!("cannot read {}: {err}", path.display())))
}

fn parse_file(path: &Path) -> Result<Program, Failure> {
    let source = read_file(path)?;
    parse_program(&source).map_err(|err| Failure::io(format!("{}:{err}", path.display())))
}

fn load_programs(facts: &[PathBuf], rules: Option<&Path>) -> Result<Program, Failure> {
    let mut parts = Vec::new();
    for path in facts {
        parts.push(parse_file(path)?);
    }
    if let Some(path) = rules {
        parts.push(parse_file(path)?);
    }
    Program::merge(parts).map_err(|err| Failure::io(err.to_string()))
}

/// Builds and validates the model; error diagnostics abort the run.
fn checked_model(style: &Style, facts: &[Clause]) -> Result<TopologyModel, Failure> {
    let (model, build_diagnostics) = build_topology(facts);
    let warnings = validate_model(&model);
    if style.print_diagnostics(build_diagnostics.iter().chain(&warnings)) {
        return Err(Failure::model("the agent model has errors"));
    }
    Ok(model)
}

fn write_artifact(out_dir: &Path, name: &str, content: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(out_dir)
        .map_err(|err| Failure::io(format!("cannot create {}: {err}", out_dir.display())))?;
    let path = out_dir.join(name);
    std::fs::write(&path, content)
        .map_err(|err| Failure::io(format!("cannot write {}: {err}", path.display())))?;
    Ok(path)
}

fn channel_count(model: &TopologyModel) -> usize {
    model.direct_channels.len() + model.indirect_flows.len()
}

fn cmd_validate(style: &Style, args: &ValidateArgs) -> Result<(), Failure> {
    let program = load_programs(&args.facts, args.rules.as_deref())?;
    let model = checked_model(style, &program.facts)?;
    println!(
        "model: {} agents, {} channels, {} external interactions",
        model.agents.len(),
        channel_count(&model),
        model.external_interactions.len()
    );
    if !program.rules.is_empty() {
        println!("rules: {} parsed", program.rules.len());
    }
    Ok(())
}

/// Parses `agent: guardrail, guardrail` lines; `#` starts a comment and
/// brackets around the list are optional.
fn parse_guardrails(text: &str) -> Result<Vec<(String, Vec<String>)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (agent, rest) = line
            .split_once(':')
            .ok_or_else(|| format!("line {}: expected 'agent: guardrail, ...'", i + 1))?;
        let agent = agent.trim();
        if agent.is_empty() {
            return Err(format!("line {}: missing agent name", i + 1));
        }
        let rest = rest.trim();
        let rest = rest
            .strip_prefix('[')
            .map(|inner| inner.strip_suffix(']').unwrap_or(inner))
            .unwrap_or(rest);
        let guardrails: Vec<String> = rest
            .split(',')
            .map(str::trim)
            .filter(|part| !part.is_empty())
            .map(str::to_string)
            .collect();
        if guardrails.is_empty() {
            return Err(format!("line {}: no guardrails listed for '{agent}'", i + 1));
        }
        out.push((agent.to_string(), guardrails));
    }
    Ok(out)
}

fn cmd_vulnmap(style: &Style, args: &VulnmapArgs) -> Result<(), Failure> {
    let program = load_programs(&args.facts, None)?;
    let (model, build_diagnostics) = build_topology(&program.facts);
    if style.print_diagnostics(&build_diagnostics) {
        return Err(Failure::model("the agent model has errors"));
    }
    let db = load_lvd(&args.lvd).map_err(|err| Failure::io(err.to_string()))?;
    if db.is_empty() {
        style.print_diagnostics(&[Diagnostic::warning(
            "empty-lvd",
            "the vulnerability database has no records",
        )]);
    }
    if model.engines.is_empty() {
        style.print_diagnostics(&[Diagnostic::warning(
            "no-engines",
            "no llmEngine facts found; nothing to map",
        )]);
    }
    let mut facts = db.map_vulnerabilities(&model.engines);
    if let Some(path) = &args.guardrails {
        let config = parse_guardrails(&read_file(path)?)
            .map_err(|err| Failure::io(format!("{}: {err}", path.display())))?;
        for (agent, guardrails) in config {
            for guardrail in guardrails {
                facts.push(Clause::fact(Atom::new(
                    "missingGuardrail",
                    vec![Term::constant(agent.clone()), Term::constant(guardrail)],
                )));
            }
        }
    }
    let count = facts.len();
    let mapped = Program::new(facts, Vec::new())
        .map_err(|err| Failure::model(err.to_string()))?;
    let path = write_artifact(&args.out, "vulnerabilities.P", &mapped.to_source())?;
    println!("wrote {count} facts to {}", path.display());
    Ok(())
}

fn build_graph(
    style: &Style,
    program: &Program,
    goals: &[String],
) -> Result<AttackGraph, Failure> {
    let index = evaluate(program);
    let filter = (!goals.is_empty()).then_some(goals);
    let (graph, warnings) = build_attack_graph(program, &index, filter);
    style.print_diagnostics(&warnings);
    if graph.is_empty() {
        style.print_diagnostics(&[Diagnostic::warning(
            "empty-graph",
            "the attack graph is empty; no goals were derived",
        )]);
    }
    Ok(number_nodes(graph))
}

fn cmd_generate(style: &Style, args: &GenerateArgs) -> Result<(), Failure> {
    let program = load_programs(&args.facts, Some(&args.rules))?;
    checked_model(style, &program.facts)?;
    let graph = build_graph(style, &program, &args.goals)?;
    println!("attack graph: {} nodes, {} edges", graph.node_count(), graph.edge_count());
    for format in &args.format {
        let (name, content) = match format {
            GraphFormat::Dot => ("ag.dot", render_dot(&graph)),
            GraphFormat::Json => ("ag.json", render_json(&graph)),
            GraphFormat::Interp => ("ag.txt", render_interpretation(&graph)),
        };
        let content = content.map_err(|err| Failure::model(err.to_string()))?;
        let path = write_artifact(&args.out, name, &content)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_analyze(style: &Style, args: &AnalyzeArgs) -> Result<(), Failure> {
    let program = load_programs(&args.facts, Some(&args.rules))?;
    let model = checked_model(style, &program.facts)?;
    let db = match &args.lvd {
        Some(path) => Some(load_lvd(path).map_err(|err| Failure::io(err.to_string()))?),
        None => None,
    };
    let graph = build_graph(style, &program, &args.goals)?;

    let (likelihoods, warnings) =
        vulnerability_likelihoods(&graph, db.as_ref(), args.default_asr)
            .map_err(|err| Failure::model(err.to_string()))?;
    style.print_diagnostics(&warnings);
    let paths = find_attack_paths(&graph, &likelihoods, &rule_risk_map(&program))
        .map_err(|err| Failure::model(err.to_string()))?;
    let ranked = rank_paths(paths);

    let (agents, warnings) =
        all_agent_risks(&model, &program.facts, db.as_ref(), args.default_asr)
            .map_err(|err| Failure::model(err.to_string()))?;
    style.print_diagnostics(&warnings);

    let json = render_report_json(&graph, &agents, &ranked)
        .map_err(|err| Failure::model(err.to_string()))?;
    let text = render_report_text(&graph, &agents, &ranked)
        .map_err(|err| Failure::model(err.to_string()))?;
    let json_path = write_artifact(&args.out, "report.json", &json)?;
    let text_path = write_artifact(&args.out, "report.txt", &text)?;
    print!("{text}");
    println!("wrote {}", json_path.display());
    println!("wrote {}", text_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::detect();
    let result = match &cli.command {
        Command::Validate(args) => cmd_validate(&style, args),
        Command::Vulnmap(args) => cmd_vulnmap(&style, args),
        Command::Generate(args) => cmd_generate(&style, args),
        Command::Analyze(args) => cmd_analyze(&style, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

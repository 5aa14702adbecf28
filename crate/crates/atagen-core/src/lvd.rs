//! LLM vulnerability database: CSV ingestion, likelihood lookup, and
//! emission of vulnerability facts for a concrete application.

use crate::diag::Diagnostic;
use crate::logic::{Atom, Clause, Term};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Column names the database file must carry, in order.
pub const LVD_COLUMNS: [&str; 13] = [
    "Id",
    "Attack Procedure",
    "Description",
    "LLM Version",
    "Vulnerability Category",
    "Tactic",
    "Technique",
    "Tool Type",
    "Tool Permissions",
    "Impact",
    "ASR",
    "Severity",
    "Source",
];

#[derive(Debug, Error)]
pub enum LvdError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid LVD header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("duplicate primary key ({procedure}, {llm}, {technique})")]
    DuplicateKey { procedure: String, llm: String, technique: String },
}

/// Closed set of tool categories a record may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ToolCategory {
    CodeExecution,
    ApiExternal,
    ApiInternal,
    HumanInteraction,
    ComputationalAnalytical,
    SensorActuator,
    NoToolLlmCore,
}

impl ToolCategory {
    pub const ALL: [ToolCategory; 7] = [
        ToolCategory::CodeExecution,
        ToolCategory::ApiExternal,
        ToolCategory::ApiInternal,
        ToolCategory::HumanInteraction,
        ToolCategory::ComputationalAnalytical,
        ToolCategory::SensorActuator,
        ToolCategory::NoToolLlmCore,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolCategory::CodeExecution => "Code Execution",
            ToolCategory::ApiExternal => "API Interaction (External)",
            ToolCategory::ApiInternal => "API Interaction (Internal)",
            ToolCategory::HumanInteraction => "Human Interaction",
            ToolCategory::ComputationalAnalytical => "Computational/Analytical",
            ToolCategory::SensorActuator => "Sensor/Actuator",
            ToolCategory::NoToolLlmCore => "No Tool/LLM Core",
        }
    }

    pub fn parse(text: &str) -> Option<ToolCategory> {
        Self::ALL.into_iter().find(|category| category.as_str() == text)
    }
}

impl fmt::Display for ToolCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Part of the CIA triad a record impacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ImpactFacet {
    Confidentiality,
    Integrity,
    Availability,
}

impl ImpactFacet {
    pub fn letter(self) -> char {
        match self {
            ImpactFacet::Confidentiality => 'C',
            ImpactFacet::Integrity => 'I',
            ImpactFacet::Availability => 'A',
        }
    }

    pub fn from_letter(letter: char) -> Option<ImpactFacet> {
        match letter {
            'C' => Some(ImpactFacet::Confidentiality),
            'I' => Some(ImpactFacet::Integrity),
            'A' => Some(ImpactFacet::Availability),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Permission {
    Read,
    Write,
}

impl Permission {
    pub fn as_str(self) -> &'static str {
        match self {
            Permission::Read => "Read",
            Permission::Write => "Write",
        }
    }
}

/// One database row.
#[derive(Debug, Clone, PartialEq)]
pub struct LvdRecord {
    pub id: u32,
    pub attack_procedure: String,
    pub description: String,
    pub llm_version: String,
    pub vulnerability_category: String,
    pub tactics: Vec<String>,
    pub technique: String,
    pub tool_types: BTreeSet<ToolCategory>,
    pub tool_permissions: BTreeSet<Permission>,
    pub impact: BTreeSet<ImpactFacet>,
    /// Attack success rate as a percentage in [0,100]; absent when unreported.
    pub asr: Option<f64>,
    pub severity_label: String,
    pub severity_score: Option<f64>,
    pub source: String,
}

impl LvdRecord {
    /// Primary key: (attack procedure, LLM version, technique).
    pub fn key(&self) -> (String, String, String) {
        (self.attack_procedure.clone(), self.llm_version.clone(), self.technique.clone())
    }

    /// Impact letters in C, I, A order, e.g. "CIA" or "C".
    pub fn impact_letters(&self) -> String {
        self.impact.iter().map(|facet| facet.letter()).collect()
    }
}

/// The loaded database with its lookup indexes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LvdDatabase {
    records: Vec<LvdRecord>,
    by_key: BTreeMap<(String, String, String), usize>,
    by_llm: BTreeMap<String, Vec<usize>>,
}

impl LvdDatabase {
    pub fn from_records(records: Vec<LvdRecord>) -> Result<LvdDatabase, LvdError> {
        let mut db = LvdDatabase { records, ..LvdDatabase::default() };
        for (i, record) in db.records.iter().enumerate() {
            if db.by_key.insert(record.key(), i).is_some() {
                return Err(LvdError::DuplicateKey {
                    procedure: record.attack_procedure.clone(),
                    llm: record.llm_version.clone(),
                    technique: record.technique.clone(),
                });
            }
            db.by_llm.entry(record.llm_version.clone()).or_default().push(i);
        }
        Ok(db)
    }

    pub fn records(&self) -> &[LvdRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, llm: &str, procedure: &str, technique: &str) -> Option<&LvdRecord> {
        let key = (procedure.to_string(), llm.to_string(), technique.to_string());
        self.by_key.get(&key).map(|&i| &self.records[i])
    }

    /// Records for one LLM version, in database order.
    pub fn records_for_llm(&self, llm: &str) -> Vec<&LvdRecord> {
        self.by_llm
            .get(llm)
            .map(|indexes| indexes.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// Success probability for one vulnerability key. A recorded ASR is
    /// returned as a probability; a record without one falls back to the
    /// default silently; a missing record falls back with a warning.
    pub fn lookup_likelihood(
        &self,
        llm: &str,
        procedure: &str,
        technique: &str,
        default_asr: f64,
    ) -> (f64, Option<Diagnostic>) {
        match self.get(llm, procedure, technique) {
            Some(record) => match record.asr {
                Some(percent) => (percent / 100.0, None),
                None => (default_asr, None),
            },
            None => {
                let warning = Diagnostic::warning(
                    "no-lvd-record",
                    format!(
                        "no database record for ({procedure}, {llm}, {technique}); \
                         using the default likelihood"
                    ),
                );
                (default_asr, Some(warning))
            }
        }
    }

    /// Emits `vulExists` facts for every LLM an agent runs on, plus one
    /// `llmEngine` fact per agent. Guardrail facts are deployment knowledge
    /// and are never produced here.
    pub fn map_vulnerabilities(&self, engines: &BTreeMap<String, String>) -> Vec<Clause> {
        let mut facts = Vec::new();
        let llms: BTreeSet<&String> = engines.values().collect();
        for llm in llms {
            for record in self.records_for_llm(llm) {
                let impact = if record.impact.is_empty() {
                    Term::Wildcard
                } else {
                    Term::constant(record.impact_letters())
                };
                let severity = match record.severity_score {
                    Some(score) => Term::constant(format_number(score)),
                    None => Term::Wildcard,
                };
                facts.push(Clause::fact(Atom::new(
                    "vulExists",
                    vec![
                        Term::constant(llm.clone()),
                        Term::constant(record.attack_procedure.clone()),
                        Term::constant(record.technique.clone()),
                        impact,
                        severity,
                    ],
                )));
            }
        }
        for (agent, llm) in engines {
            facts.push(Clause::fact(Atom::new(
                "llmEngine",
                vec![Term::constant(agent.clone()), Term::constant(llm.clone())],
            )));
        }
        facts
    }

    /// Canonical CSV text; loading it back yields an equal database.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(LVD_COLUMNS).expect("in-memory write");
        for record in &self.records {
            let tool_types: Vec<&str> =
                record.tool_types.iter().map(|t| t.as_str()).collect();
            let permissions: Vec<&str> =
                record.tool_permissions.iter().map(|p| p.as_str()).collect();
            let severity = match record.severity_score {
                Some(score) => format!("{} ({})", record.severity_label, format_score(score)),
                None => record.severity_label.clone(),
            };
            writer
                .write_record([
                    record.id.to_string(),
                    record.attack_procedure.clone(),
                    record.description.clone(),
                    record.llm_version.clone(),
                    record.vulnerability_category.clone(),
                    record.tactics.join(", "),
                    record.technique.clone(),
                    tool_types.join(", "),
                    permissions.join(", "),
                    record.impact_letters(),
                    record.asr.map(format_number).unwrap_or_else(|| "NA".to_string()),
                    severity,
                    record.source.clone(),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Renders a non-negative number without float noise: ten decimal places,
/// trailing zeros trimmed.
pub fn format_number(value: f64) -> String {
    let mut text = format!("{value:.10}");
    while text.ends_with('0') {
        text.pop();
    }
    if text.ends_with('.') {
        text.pop();
    }
    text
}

fn format_score(value: f64) -> String {
    let mut text = format_number(value);
    if !text.contains('.') {
        text.push_str(".0");
    }
    text
}

fn split_multi(cell: &str) -> Vec<String> {
    cell.split(',').map(str::trim).filter(|part| !part.is_empty()).map(str::to_string).collect()
}

fn parse_severity(cell: &str) -> Result<(String, Option<f64>), String> {
    let cell = cell.trim();
    if let Some(open) = cell.rfind('(') {
        if let Some(inner) = cell[open + 1..].strip_suffix(')') {
            let score: f64 = inner
                .trim()
                .parse()
                .map_err(|_| format!("severity score '{}' is not a number", inner.trim()))?;
            if !(0.0..=10.0).contains(&score) {
                return Err(format!("severity score {score} is outside [0,10]"));
            }
            return Ok((cell[..open].trim().to_string(), Some(score)));
        }
    }
    Ok((cell.to_string(), None))
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<LvdRecord, LvdError> {
    let row_error = |message: String| LvdError::Row { line, message };
    let cell = |i: usize| record.get(i).unwrap_or_default().trim();

    let id: u32 = cell(0)
        .parse()
        .ok()
        .filter(|&id| id > 0)
        .ok_or_else(|| row_error(format!("Id '{}' is not a positive integer", cell(0))))?;

    let mut tool_types = BTreeSet::new();
    for text in split_multi(cell(7)) {
        let category = ToolCategory::parse(&text)
            .ok_or_else(|| row_error(format!("unknown tool category '{text}'")))?;
        tool_types.insert(category);
    }

    let mut tool_permissions = BTreeSet::new();
    for text in split_multi(cell(8)) {
        let permission = match text.as_str() {
            "Read" => Permission::Read,
            "Write" => Permission::Write,
            other => return Err(row_error(format!("unknown tool permission '{other}'"))),
        };
        tool_permissions.insert(permission);
    }

    let mut impact = BTreeSet::new();
    for letter in cell(9).chars().filter(|c| !c.is_whitespace()) {
        let facet = ImpactFacet::from_letter(letter)
            .ok_or_else(|| row_error(format!("impact letter '{letter}' is not one of C, I, A")))?;
        impact.insert(facet);
    }

    let asr = match cell(10) {
        "" | "NA" => None,
        text => {
            let value: f64 = text
                .parse()
                .map_err(|_| row_error(format!("ASR '{text}' is not a number")))?;
            if !(0.0..=100.0).contains(&value) {
                return Err(row_error(format!("ASR {value} is outside [0,100]")));
            }
            Some(value)
        }
    };

    let (severity_label, severity_score) = parse_severity(cell(11)).map_err(row_error)?;

    Ok(LvdRecord {
        id,
        attack_procedure: cell(1).to_string(),
        description: record.get(2).unwrap_or_default().to_string(),
        llm_version: cell(3).to_string(),
        vulnerability_category: cell(4).to_string(),
        tactics: split_multi(cell(5)),
        technique: cell(6).to_string(),
        tool_types,
        tool_permissions,
        impact,
        asr,
        severity_label,
        severity_score,
        source: record.get(12).unwrap_or_default().trim().to_string(),
    })
}

/// Parses database CSV text. The header row must carry exactly the Table
/// column names in order.
pub fn parse_lvd(text: &str) -> Result<LvdDatabase, LvdError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() != LVD_COLUMNS.len() {
        return Err(LvdError::Header(format!(
            "expected {} columns, found {}",
            LVD_COLUMNS.len(),
            headers.len()
        )));
    }
    for (i, expected) in LVD_COLUMNS.iter().enumerate() {
        let found = headers.get(i).unwrap_or_default();
        if found != *expected {
            return Err(LvdError::Header(format!(
                "column {} should be '{expected}', found '{found}'",
                i + 1
            )));
        }
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or_default();
        records.push(parse_row(&row, line)?);
    }
    LvdDatabase::from_records(records)
}

/// Loads the database from a CSV file.
pub fn load_lvd(path: &Path) -> Result<LvdDatabase, LvdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| LvdError::Io { path: path.display().to_string(), source })?;
    parse_lvd(&text)
}

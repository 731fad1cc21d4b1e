//! Positive and negative practical rules over a question space.
//!
//! Negative rules prune combinations (status `excluded`) and always win over
//! positive ones. Positive rules assert a verdict; two of them asserting
//! different verdicts on one question is a conflict.

mod classify;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{parse_formula, Formula, ParseError};
use crate::space::{Question, QuestionSpace, SpaceError};

pub use classify::{
    classify_space, classify_space_sequential, classify_space_with, gap_report, verify_compression,
    ClassifyOptions, CoverageReport, Expected, Mismatch, Sample, StatusCounts, DEFAULT_QUESTION_CAP,
    SAMPLE_LIMIT,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("malformed rulebase: {0}")]
    Malformed(String),
    #[error("rule `{rule}`: {source}")]
    Condition { rule: String, source: ParseError },
    #[error("rule `{rule}`: {source}")]
    Atom { rule: String, source: SpaceError },
    #[error("rule `{rule}`: condition mentions don't-care attribute `{attribute}`")]
    ConditionUsesDontCare { rule: String, attribute: String },
    #[error("rule `{rule}`: unknown don't-care attribute `{attribute}`")]
    UnknownDontCare { rule: String, attribute: String },
    #[error("duplicate rule id `{0}`")]
    DuplicateRule(String),
    #[error("duplicate verdict id `{0}`")]
    DuplicateVerdict(String),
    #[error("rule `{0}` has no reason")]
    MissingReason(String),
    #[error("rule `{rule}`: verdict `{verdict}` is not declared")]
    UnknownVerdict { rule: String, verdict: String },
    #[error("rulebase is for space `{expected}`, got `{found}`")]
    SpaceMismatch { expected: String, found: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictDecl {
    pub id: String,
    pub label: String,
}

/// The five classical categories, used when a file declares none.
pub fn default_verdicts() -> Vec<VerdictDecl> {
    [
        ("wajib", "required (wajib)"),
        ("mandub", "recommended (mandub)"),
        ("mubah", "permitted (mubah)"),
        ("makruh", "disliked (makruh)"),
        ("haram", "forbidden (haram)"),
    ]
    .into_iter()
    .map(|(id, label)| VerdictDecl { id: id.into(), label: label.into() })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub id: String,
    pub polarity: Polarity,
    pub condition: String,
    #[serde(default)]
    pub dont_care: Vec<String>,
    pub verdict: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_rule: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleBaseFile {
    id: String,
    space: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    verdicts: Option<Vec<VerdictDecl>>,
    rules: Vec<RuleSpec>,
}

/// Condition compiled against attribute/value indices.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Cond {
    Is(usize, usize),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Implies(Box<Cond>, Box<Cond>),
    Iff(Box<Cond>, Box<Cond>),
}

impl Cond {
    fn compile(f: &Formula, space: &QuestionSpace) -> Result<Cond, SpaceError> {
        let pair = |l: &Formula, r: &Formula| -> Result<(Box<Cond>, Box<Cond>), SpaceError> {
            Ok((Box::new(Cond::compile(l, space)?), Box::new(Cond::compile(r, space)?)))
        };
        Ok(match f {
            // Conditions are parsed without declared variables, so every
            // leaf is an atom.
            Formula::Atom(name) | Formula::Var(name) => {
                let (a, v) = space.resolve_atom(name)?;
                Cond::Is(a, v)
            }
            Formula::Not(inner) => Cond::Not(Box::new(Cond::compile(inner, space)?)),
            Formula::And(l, r) => {
                let (l, r) = pair(l, r)?;
                Cond::And(l, r)
            }
            Formula::Or(l, r) => {
                let (l, r) = pair(l, r)?;
                Cond::Or(l, r)
            }
            Formula::Implies(l, r) => {
                let (l, r) = pair(l, r)?;
                Cond::Implies(l, r)
            }
            Formula::Iff(l, r) => {
                let (l, r) = pair(l, r)?;
                Cond::Iff(l, r)
            }
        })
    }

    fn eval(&self, choice: &[usize]) -> bool {
        match self {
            Cond::Is(a, v) => choice[*a] == *v,
            Cond::Not(c) => !c.eval(choice),
            Cond::And(l, r) => l.eval(choice) && r.eval(choice),
            Cond::Or(l, r) => l.eval(choice) || r.eval(choice),
            Cond::Implies(l, r) => !l.eval(choice) || r.eval(choice),
            Cond::Iff(l, r) => l.eval(choice) == r.eval(choice),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub polarity: Polarity,
    pub condition: Formula,
    pub dont_care: BTreeSet<String>,
    pub verdict: String,
    pub reason: String,
    pub primary_rule: Option<String>,
    compiled: Cond,
}

impl Rule {
    pub fn fires(&self, q: &Question) -> bool {
        self.compiled.eval(q.choices())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBase {
    id: String,
    label: Option<String>,
    space_id: String,
    verdicts: Vec<VerdictDecl>,
    rules: Vec<Rule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ruled,
    Excluded,
    Uncovered,
    Conflicting,
}

impl Status {
    pub const ALL: [Status; 4] = [Status::Ruled, Status::Excluded, Status::Uncovered, Status::Conflicting];

    pub fn name(self) -> &'static str {
        match self {
            Status::Ruled => "ruled",
            Status::Excluded => "excluded",
            Status::Uncovered => "uncovered",
            Status::Conflicting => "conflicting",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of matching one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    /// Verdict id of the deciding rule, absent for uncovered and
    /// conflicting questions.
    pub verdict: Option<String>,
    pub label: Option<String>,
    pub matched_rules: Vec<String>,
    pub explanation: Vec<String>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(label) => write!(f, "{}: {}", self.status, label)?,
            None => write!(f, "{}", self.status)?,
        }
        if !self.matched_rules.is_empty() {
            write!(f, " [{}]", self.matched_rules.join(", "))?;
        }
        writeln!(f)?;
        for line in &self.explanation {
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl RuleBase {
    pub fn from_json(text: &str, space: &QuestionSpace) -> Result<Self, RuleError> {
        let file: RuleBaseFile =
            serde_json::from_str(text).map_err(|e| RuleError::Malformed(e.to_string()))?;
        if file.space != space.id() {
            return Err(RuleError::SpaceMismatch { expected: file.space, found: space.id().into() });
        }
        Self::new(file.id, file.label, file.verdicts.unwrap_or_else(default_verdicts), file.rules, space)
    }

    pub fn load(path: impl AsRef<Path>, space: &QuestionSpace) -> Result<Self, RuleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RuleError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, space)
    }

    /// Reads only the `space` field, so callers can pick the right space
    /// before a full load.
    pub fn space_of(text: &str) -> Result<String, RuleError> {
        #[derive(Deserialize)]
        struct Head {
            space: String,
        }
        let head: Head = serde_json::from_str(text).map_err(|e| RuleError::Malformed(e.to_string()))?;
        Ok(head.space)
    }

    pub fn new(
        id: String,
        label: Option<String>,
        verdicts: Vec<VerdictDecl>,
        specs: Vec<RuleSpec>,
        space: &QuestionSpace,
    ) -> Result<Self, RuleError> {
        let mut verdict_ids = BTreeSet::new();
        for v in &verdicts {
            if !verdict_ids.insert(v.id.as_str()) {
                return Err(RuleError::DuplicateVerdict(v.id.clone()));
            }
        }
        let mut ids = BTreeSet::new();
        let mut rules = Vec::with_capacity(specs.len());
        for spec in specs {
            if !ids.insert(spec.id.clone()) {
                return Err(RuleError::DuplicateRule(spec.id));
            }
            if spec.reason.trim().is_empty() {
                return Err(RuleError::MissingReason(spec.id));
            }
            if !verdict_ids.contains(spec.verdict.as_str()) {
                return Err(RuleError::UnknownVerdict { rule: spec.id, verdict: spec.verdict });
            }
            let condition = parse_formula(&spec.condition)
                .map_err(|source| RuleError::Condition { rule: spec.id.clone(), source })?;
            let compiled = Cond::compile(&condition, space)
                .map_err(|source| RuleError::Atom { rule: spec.id.clone(), source })?;
            let mentioned: BTreeSet<usize> = condition
                .atoms()
                .iter()
                .filter_map(|a| space.resolve_atom(a).ok())
                .map(|(a, _)| a)
                .collect();
            let mut dont_care = BTreeSet::new();
            for attr in spec.dont_care {
                let Some(a) = space.attribute_index(&attr) else {
                    return Err(RuleError::UnknownDontCare { rule: spec.id, attribute: attr });
                };
                if mentioned.contains(&a) {
                    return Err(RuleError::ConditionUsesDontCare { rule: spec.id, attribute: attr });
                }
                dont_care.insert(attr);
            }
            rules.push(Rule {
                id: spec.id,
                polarity: spec.polarity,
                condition,
                dont_care,
                verdict: spec.verdict,
                reason: spec.reason,
                primary_rule: spec.primary_rule,
                compiled,
            });
        }
        Ok(Self { id, label, space_id: space.id().into(), verdicts, rules })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn space_id(&self) -> &str {
        &self.space_id
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn verdicts(&self) -> &[VerdictDecl] {
        &self.verdicts
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn verdict_label(&self, id: &str) -> Option<&str> {
        self.verdicts.iter().find(|v| v.id == id).map(|v| v.label.as_str())
    }

    /// A copy with one more rule appended.
    pub fn with_rule(&self, spec: RuleSpec, space: &QuestionSpace) -> Result<Self, RuleError> {
        let mut specs: Vec<RuleSpec> = self.rules.iter().map(Rule::to_spec).collect();
        specs.push(spec);
        Self::new(self.id.clone(), self.label.clone(), self.verdicts.clone(), specs, space)
    }

    fn check_space(&self, space: &QuestionSpace) -> Result<(), RuleError> {
        if space.id() != self.space_id {
            return Err(RuleError::SpaceMismatch { expected: self.space_id.clone(), found: space.id().into() });
        }
        Ok(())
    }

    /// Status and fired rules without building the explanation.
    pub(crate) fn decide(&self, q: &Question) -> (Status, Vec<&Rule>) {
        let fired: Vec<&Rule> = self.rules.iter().filter(|r| r.fires(q)).collect();
        let negatives: Vec<&Rule> = fired.iter().copied().filter(|r| r.polarity == Polarity::Negative).collect();
        if !negatives.is_empty() {
            return (Status::Excluded, negatives);
        }
        let verdicts: BTreeSet<&str> = fired.iter().map(|r| r.verdict.as_str()).collect();
        let status = match verdicts.len() {
            0 => Status::Uncovered,
            1 => Status::Ruled,
            _ => Status::Conflicting,
        };
        (status, fired)
    }

    pub fn match_question(&self, space: &QuestionSpace, q: &Question) -> Result<Verdict, RuleError> {
        self.check_space(space)?;
        let (status, deciding) = self.decide(q);
        let mut explanation = Vec::new();
        for rule in &deciding {
            explanation.push(format!("rule {} ({}) applies: {}", rule.id, rule.polarity, rule.condition));
            explanation.push(format!("reason: {}", rule.reason));
            if let Some(primary) = &rule.primary_rule {
                explanation.push(format!("primary rule: {primary}"));
            }
            if !rule.dont_care.is_empty() {
                let ignored: Vec<&str> = rule.dont_care.iter().map(String::as_str).collect();
                explanation.push(format!("irrelevant to this rule: {}", ignored.join(", ")));
            }
        }
        match status {
            Status::Excluded => {
                for rule in self.rules.iter().filter(|r| r.polarity == Polarity::Positive && r.fires(q)) {
                    explanation.push(format!("rule {} (positive) is overridden by the negative rule", rule.id));
                }
            }
            Status::Conflicting => {
                let parts: Vec<String> = deciding
                    .iter()
                    .map(|r| format!("{} gives {}", r.id, self.verdict_label(&r.verdict).unwrap_or(&r.verdict)))
                    .collect();
                explanation.push(format!("conflict: {}", parts.join("; ")));
            }
            Status::Uncovered => explanation.push("no rule covers this question".into()),
            Status::Ruled => {}
        }
        let verdict = match status {
            Status::Ruled | Status::Excluded => Some(deciding[0].verdict.clone()),
            Status::Uncovered | Status::Conflicting => None,
        };
        let label = verdict.as_deref().and_then(|v| self.verdict_label(v)).map(str::to_string);
        Ok(Verdict {
            status,
            verdict,
            label,
            matched_rules: deciding.iter().map(|r| r.id.clone()).collect(),
            explanation,
        })
    }
}

impl Rule {
    pub fn to_spec(&self) -> RuleSpec {
        RuleSpec {
            id: self.id.clone(),
            polarity: self.polarity,
            condition: self.condition.to_string(),
            dont_care: self.dont_care.iter().cloned().collect(),
            verdict: self.verdict.clone(),
            reason: self.reason.clone(),
            primary_rule: self.primary_rule.clone(),
        }
    }
}

//! Command-line front end and HTTP session service over `fiqh-core`.
//!
//! Both front ends render answers through the functions here, so a question
//! asked on the command line and over HTTP produces the same text.

pub mod catalog;
pub mod cli;
pub mod service;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use fiqh_core::automaton::{Advice, Automaton, SessionState, SessionStatus};
use fiqh_core::rulebase::{RuleBase, Verdict};
use fiqh_core::space::QuestionSpace;
use serde::Serialize;

/// A problem with one field of a request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryResponse {
    pub space: String,
    pub rulebase: String,
    pub question: Vec<String>,
    pub verdict: Verdict,
    /// The verdict as printed by `fiqh ask`.
    pub text: String,
}

pub fn render_verdict(v: &Verdict) -> String {
    v.to_string()
}

/// Matches one fully bound question. Every attribute of the space must be
/// bound exactly once.
pub fn answer_query(
    space: &QuestionSpace,
    rb: &RuleBase,
    bindings: &[(String, String)],
) -> Result<QueryResponse, Vec<FieldError>> {
    let mut errors = Vec::new();
    let mut seen = BTreeSet::new();
    for (attr, value) in bindings {
        let field = format!("bindings.{attr}");
        if !seen.insert(attr.as_str()) {
            errors.push(FieldError::new(field, "bound more than once"));
            continue;
        }
        match space.attribute_index(attr) {
            None => errors.push(FieldError::new(field, "unknown attribute")),
            Some(i) if space.attribute(i).value_index(value).is_none() => {
                let known: Vec<&str> = space.attribute(i).values.iter().map(|v| v.id.as_str()).collect();
                errors.push(FieldError::new(
                    field,
                    format!("unknown value `{value}` (expected one of {})", known.join(", ")),
                ));
            }
            Some(_) => {}
        }
    }
    for attr in space.attributes() {
        if !seen.contains(attr.name.as_str()) {
            errors.push(FieldError::new(format!("bindings.{}", attr.name), "missing"));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let q = space
        .question(bindings.iter().map(|(a, v)| (a.as_str(), v.as_str())))
        .map_err(|e| vec![FieldError::new("bindings", e.to_string())])?;
    let verdict = rb
        .match_question(space, &q)
        .map_err(|e| vec![FieldError::new("rulebase", e.to_string())])?;
    Ok(QueryResponse {
        space: space.id().to_string(),
        rulebase: rb.id().to_string(),
        question: space.describe(&q),
        text: render_verdict(&verdict),
        verdict,
    })
}

/// Final report on a session, shared by `fiqh fsm replay` and the service.
#[derive(Debug, Clone, Serialize)]
pub struct SessionReport {
    pub automaton: String,
    pub status: SessionStatus,
    pub missing: Vec<String>,
    pub trace: Vec<String>,
    pub advice: Option<Advice>,
    pub step_count: usize,
    pub text: String,
}

pub fn session_report(a: &Automaton, state: &SessionState) -> SessionReport {
    let verdict = a.verdict(state);
    let mut text = verdict.to_string();
    if let Some(advice) = &state.advice {
        let _ = writeln!(text, "  advice: {}", advice.message);
    }
    SessionReport {
        automaton: a.id.clone(),
        status: verdict.status,
        missing: verdict.missing,
        trace: verdict.trace,
        advice: state.advice.clone(),
        step_count: state.step_count(),
        text,
    }
}

//! Whole-space classification and the completeness/consistency decision.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RuleBase, RuleError, Status};
use crate::space::{Question, QuestionSpace};

pub const DEFAULT_QUESTION_CAP: u128 = 10_000_000;
pub const SAMPLE_LIMIT: usize = 10;

/// Questions per parallel work unit.
const CHUNK: u128 = 4096;

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Questions beyond this are not examined and the report is undecided.
    pub cap: u128,
    /// Treat a fired rule without a primary-rule citation as a consistency
    /// breach.
    pub require_primary_rule: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_QUESTION_CAP, require_primary_rule: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub ruled: u128,
    pub excluded: u128,
    pub uncovered: u128,
    pub conflicting: u128,
}

impl StatusCounts {
    pub fn get(&self, s: Status) -> u128 {
        match s {
            Status::Ruled => self.ruled,
            Status::Excluded => self.excluded,
            Status::Uncovered => self.uncovered,
            Status::Conflicting => self.conflicting,
        }
    }

    fn bump(&mut self, s: Status) {
        match s {
            Status::Ruled => self.ruled += 1,
            Status::Excluded => self.excluded += 1,
            Status::Uncovered => self.uncovered += 1,
            Status::Conflicting => self.conflicting += 1,
        }
    }

    pub fn sum(&self) -> u128 {
        self.ruled + self.excluded + self.uncovered + self.conflicting
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    /// `attr=value` atoms in declaration order.
    pub question: Vec<String>,
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub space: String,
    pub rulebase: String,
    pub total: u128,
    pub examined: u128,
    /// False when the cap stopped classification early.
    pub decided: bool,
    pub counts: StatusCounts,
    /// `None` while undecided and not yet refuted.
    pub complete: Option<bool>,
    pub consistent: Option<bool>,
    pub require_primary_rule: bool,
    /// Rules that fired on some examined question without citing a
    /// primary rule.
    pub rules_without_primary_rule: Vec<String>,
    pub uncovered_sample: Vec<Sample>,
    pub conflicting_sample: Vec<Sample>,
}

impl CoverageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Partial result over a contiguous range of questions. Merging is
/// associative, and samples keep enumeration order.
#[derive(Debug, Default)]
struct Tally {
    counts: StatusCounts,
    uncovered: Vec<Sample>,
    conflicting: Vec<Sample>,
    unsupported: BTreeSet<usize>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.counts.ruled += other.counts.ruled;
        self.counts.excluded += other.counts.excluded;
        self.counts.uncovered += other.counts.uncovered;
        self.counts.conflicting += other.counts.conflicting;
        self.uncovered.extend(other.uncovered);
        self.uncovered.truncate(SAMPLE_LIMIT);
        self.conflicting.extend(other.conflicting);
        self.conflicting.truncate(SAMPLE_LIMIT);
        self.unsupported.extend(other.unsupported);
        self
    }
}

fn tally(rb: &RuleBase, space: &QuestionSpace, questions: impl Iterator<Item = Question>) -> Tally {
    let mut t = Tally::default();
    for q in questions {
        let (status, deciding) = rb.decide(&q);
        t.counts.bump(status);
        for rule in &deciding {
            if rule.primary_rule.is_none() {
                let idx = rb.rules.iter().position(|r| r.id == rule.id).expect("rule from this base");
                t.unsupported.insert(idx);
            }
        }
        let sample = |rules: Vec<String>| Sample { question: space.describe(&q), rules };
        match status {
            Status::Uncovered if t.uncovered.len() < SAMPLE_LIMIT => t.uncovered.push(sample(vec![])),
            Status::Conflicting if t.conflicting.len() < SAMPLE_LIMIT => {
                t.conflicting.push(sample(deciding.iter().map(|r| r.id.clone()).collect()))
            }
            _ => {}
        }
    }
    t
}

fn report(rb: &RuleBase, space: &QuestionSpace, options: ClassifyOptions, examined: u128, t: Tally) -> CoverageReport {
    let total = space.question_count();
    let decided = examined == total;
    let settle = |refuted: bool| if refuted { Some(false) } else if decided { Some(true) } else { None };
    let rules_without_primary_rule: Vec<String> =
        t.unsupported.iter().map(|&i| rb.rules[i].id.clone()).collect();
    let breach = t.counts.conflicting > 0 || (options.require_primary_rule && !rules_without_primary_rule.is_empty());
    CoverageReport {
        space: space.id().into(),
        rulebase: rb.id.clone(),
        total,
        examined,
        decided,
        counts: t.counts,
        complete: settle(t.counts.uncovered > 0),
        consistent: settle(breach),
        require_primary_rule: options.require_primary_rule,
        rules_without_primary_rule,
        uncovered_sample: t.uncovered,
        conflicting_sample: t.conflicting,
    }
}

pub fn classify_space(rb: &RuleBase, space: &QuestionSpace) -> Result<CoverageReport, RuleError> {
    classify_space_with(rb, space, ClassifyOptions::default())
}

/// Parallel classification; identical to the sequential result.
pub fn classify_space_with(
    rb: &RuleBase,
    space: &QuestionSpace,
    options: ClassifyOptions,
) -> Result<CoverageReport, RuleError> {
    rb.check_space(space)?;
    let examined = space.question_count().min(options.cap);
    let chunks = usize::try_from(examined.div_ceil(CHUNK)).expect("capped question count");
    let parts: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| c as u128)
        .map(|c| tally(rb, space, space.enumerate_range(c * CHUNK, CHUNK.min(examined - c * CHUNK))))
        .collect();
    let t = parts.into_iter().fold(Tally::default(), Tally::merge);
    Ok(report(rb, space, options, examined, t))
}

pub fn classify_space_sequential(
    rb: &RuleBase,
    space: &QuestionSpace,
    options: ClassifyOptions,
) -> Result<CoverageReport, RuleError> {
    rb.check_space(space)?;
    let examined = space.question_count().min(options.cap);
    let t = tally(rb, space, space.enumerate_range(0, examined));
    Ok(report(rb, space, options, examined, t))
}

/// Expected outcome of one truth-table row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub status: Status,
    #[serde(default)]
    pub verdict: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub row: usize,
    pub question: Vec<String>,
    pub expected: Expected,
    pub actual: Expected,
}

/// Rows of `table` the rulebase does not reproduce.
pub fn verify_compression(
    rb: &RuleBase,
    space: &QuestionSpace,
    table: &[(Question, Expected)],
) -> Result<Vec<Mismatch>, RuleError> {
    let mut out = Vec::new();
    for (row, (q, expected)) in table.iter().enumerate() {
        let v = rb.match_question(space, q)?;
        let actual = Expected { status: v.status, verdict: v.verdict };
        if &actual != expected {
            out.push(Mismatch { row, question: space.describe(q), expected: expected.clone(), actual });
        }
    }
    Ok(out)
}

fn yes_no(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "yes",
        Some(false) => "no",
        None => "undecided",
    }
}

/// Attributes on which every sample agrees, and those on which they differ.
fn shared_and_varying(samples: &[Sample]) -> (Vec<String>, Vec<String>) {
    let Some(first) = samples.first() else {
        return (vec![], vec![]);
    };
    let mut shared = Vec::new();
    let mut varying = Vec::new();
    for (i, atom) in first.question.iter().enumerate() {
        if samples.iter().all(|s| s.question.get(i) == Some(atom)) {
            shared.push(atom.clone());
        } else {
            varying.push(atom.split('=').next().unwrap_or(atom).to_string());
        }
    }
    (shared, varying)
}

fn sample_section(out: &mut String, title: &str, count: u128, samples: &[Sample]) {
    if count == 0 {
        return;
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{title} questions (showing {} of {count}):", samples.len());
    for (i, s) in samples.iter().enumerate() {
        let _ = write!(out, "  {}. {}", i + 1, s.question.join(", "));
        if !s.rules.is_empty() {
            let _ = write!(out, " [rules: {}]", s.rules.join(", "));
        }
        let _ = writeln!(out);
    }
    if samples.len() > 1 {
        let (shared, varying) = shared_and_varying(samples);
        let none = || "(none)".to_string();
        let shared = if shared.is_empty() { none() } else { shared.join(", ") };
        let varying = if varying.is_empty() { none() } else { varying.join(", ") };
        let _ = writeln!(out, "  common to all shown: {shared}");
        let _ = writeln!(out, "  differing among shown: {varying}");
    }
}

/// Plain-text listing of the gaps in a coverage report.
pub fn gap_report(report: &CoverageReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rulebase {} over space {}", report.rulebase, report.space);
    let _ = writeln!(out, "questions: {} (examined {})", report.total, report.examined);
    for s in Status::ALL {
        let _ = writeln!(out, "{}: {}", s, report.counts.get(s));
    }
    let _ = writeln!(out, "complete: {}", yes_no(report.complete));
    let _ = writeln!(out, "consistent: {}", yes_no(report.consistent));
    if !report.decided {
        let _ = writeln!(out, "undecided at this budget: {} questions not examined", report.total - report.examined);
    }
    if report.complete == Some(true) && report.consistent == Some(true) {
        let _ = writeln!(out, "no gaps: every question is ruled or excluded and no rules conflict");
        return out;
    }
    sample_section(&mut out, "uncovered", report.counts.uncovered, &report.uncovered_sample);
    sample_section(&mut out, "conflicting", report.counts.conflicting, &report.conflicting_sample);
    if report.require_primary_rule && !report.rules_without_primary_rule.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "rules applied without a primary rule: {}", report.rules_without_primary_rule.join(", "));
    }
    out
}

//! Action-sequence questions as a finite-state machine.
//!
//! A session credits obligatory actions as they are performed. In ordered
//! mode only the next expected action is credited; an early action is
//! recorded with advice but not credited, so the user can still recover.
//! Invalidation events reset all progress.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FsmError {
    #[error("malformed automaton: {0}")]
    Malformed(String),
    #[error("unknown mode `{0}` (expected deterministic-ordered or unordered)")]
    UnknownMode(String),
    #[error("unknown invalidation policy `{0}` (expected reset-to-initial)")]
    UnknownPolicy(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("automaton has no obligatory actions")]
    NoActions,
    #[error("actions `{0}` and `{1}` share an order position")]
    AmbiguousOrder(String, String),
    #[error("unknown action or event `{0}`")]
    UnknownEvent(String),
    #[error("event log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FsmMode {
    DeterministicOrdered,
    Unordered,
}

impl FsmMode {
    fn parse(s: &str) -> Result<Self, FsmError> {
        match s {
            "deterministic-ordered" => Ok(FsmMode::DeterministicOrdered),
            "unordered" => Ok(FsmMode::Unordered),
            other => Err(FsmError::UnknownMode(other.into())),
        }
    }
}

impl fmt::Display for FsmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FsmMode::DeterministicOrdered => "deterministic-ordered",
            FsmMode::Unordered => "unordered",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    ResetToInitial,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default = "default_true")]
    pub obligatory: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvalidationEvent {
    pub id: String,
    pub label: String,
    pub policy: Policy,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    id: String,
    label: String,
    #[serde(default)]
    policy: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomatonFile {
    id: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    aliases: Vec<String>,
    mode: String,
    actions: Vec<Action>,
    #[serde(default)]
    invalidation_events: Vec<EventFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Automaton {
    pub id: String,
    pub label: String,
    pub aliases: Vec<String>,
    pub mode: FsmMode,
    pub actions: Vec<Action>,
    pub invalidation_events: Vec<InvalidationEvent>,
    /// Indices into `actions` of the obligatory ones, in required order.
    #[serde(skip)]
    sequence: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Action,
    Recommended,
    Invalidation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub seq: u64,
    pub ordinal: u64,
    pub event: String,
    pub kind: EntryKind,
    pub credited: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    InProgress,
    Valid,
    Invalid,
    Invalidated,
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionStatus::InProgress => "in-progress",
            SessionStatus::Valid => "valid",
            SessionStatus::Invalid => "invalid",
            SessionStatus::Invalidated => "invalidated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdviceKind {
    MissingStep,
    OutOfOrder,
    Invalidated,
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advice {
    pub kind: AdviceKind,
    pub offending_action: Option<String>,
    pub expected_action: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub automaton: String,
    /// Append-only history.
    pub performed: Vec<Entry>,
    /// Credit per obligatory action, in required order.
    pub credited: Vec<bool>,
    pub status: SessionStatus,
    pub advice: Option<Advice>,
}

impl SessionState {
    pub fn last_ordinal(&self) -> Option<u64> {
        self.performed.last().map(|e| e.ordinal)
    }

    pub fn step_count(&self) -> usize {
        self.performed.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionVerdict {
    pub status: SessionStatus,
    pub missing: Vec<String>,
    pub trace: Vec<String>,
}

impl fmt::Display for SessionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.status)?;
        if !self.missing.is_empty() {
            writeln!(f, "  missing: {}", self.missing.join(", "))?;
        }
        for line in &self.trace {
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

/// One line of an exported event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub seq: u64,
    pub ordinal: u64,
    pub event: String,
}

enum Target {
    Action(usize),
    Event,
}

impl Automaton {
    pub fn from_json(text: &str) -> Result<Self, FsmError> {
        let file: AutomatonFile = serde_json::from_str(text).map_err(|e| FsmError::Malformed(e.to_string()))?;
        let mode = FsmMode::parse(&file.mode)?;
        let invalidation_events = file
            .invalidation_events
            .into_iter()
            .map(|e| {
                let policy = match e.policy.as_deref() {
                    None | Some("reset-to-initial") => Policy::ResetToInitial,
                    Some(other) => return Err(FsmError::UnknownPolicy(other.into())),
                };
                Ok(InvalidationEvent { id: e.id, label: e.label, policy })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(file.id, file.label, file.aliases, mode, file.actions, invalidation_events)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FsmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FsmError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn new(
        id: String,
        label: Option<String>,
        aliases: Vec<String>,
        mode: FsmMode,
        actions: Vec<Action>,
        invalidation_events: Vec<InvalidationEvent>,
    ) -> Result<Self, FsmError> {
        let mut ids = BTreeSet::new();
        for name in actions.iter().map(|a| &a.id).chain(invalidation_events.iter().map(|e| &e.id)) {
            if !ids.insert(name.clone()) {
                return Err(FsmError::DuplicateId(name.clone()));
            }
        }
        let mut sequence: Vec<usize> = (0..actions.len()).filter(|&i| actions[i].obligatory).collect();
        if sequence.is_empty() {
            return Err(FsmError::NoActions);
        }
        // Stable: actions without an explicit order keep declaration order
        // after the ordered ones.
        sequence.sort_by_key(|&i| actions[i].order.unwrap_or(u32::MAX));
        if mode == FsmMode::DeterministicOrdered {
            for w in sequence.windows(2) {
                let (a, b) = (&actions[w[0]], &actions[w[1]]);
                if a.order.is_some() && a.order == b.order {
                    return Err(FsmError::AmbiguousOrder(a.id.clone(), b.id.clone()));
                }
            }
        }
        let label = label.unwrap_or_else(|| id.clone());
        Ok(Self { id, label, aliases, mode, actions, invalidation_events, sequence })
    }

    /// Whether `name` is this automaton's id or one of its aliases.
    pub fn answers_to(&self, name: &str) -> bool {
        self.id == name || self.aliases.iter().any(|a| a == name)
    }

    /// Obligatory actions in required order.
    pub fn obligatory(&self) -> impl Iterator<Item = &Action> {
        self.sequence.iter().map(|&i| &self.actions[i])
    }

    fn label_of(&self, id: &str) -> String {
        self.actions
            .iter()
            .map(|a| (&a.id, &a.label))
            .chain(self.invalidation_events.iter().map(|e| (&e.id, &e.label)))
            .find(|(i, _)| *i == id)
            .map(|(_, l)| l.clone())
            .unwrap_or_else(|| id.to_string())
    }

    /// Resolves an action or event by id, or failing that by exact label.
    pub fn canonical_id<'a>(&'a self, name: &str) -> Result<&'a str, FsmError> {
        let pairs = || {
            self.actions
                .iter()
                .map(|a| (&a.id, &a.label))
                .chain(self.invalidation_events.iter().map(|e| (&e.id, &e.label)))
        };
        pairs()
            .find(|(id, _)| *id == name)
            .or_else(|| pairs().find(|(_, label)| *label == name))
            .map(|(id, _)| id.as_str())
            .ok_or_else(|| FsmError::UnknownEvent(name.into()))
    }

    fn resolve(&self, id: &str) -> Target {
        match self.actions.iter().position(|a| a.id == id) {
            Some(i) => Target::Action(i),
            None => Target::Event,
        }
    }

    pub fn init_session(&self) -> SessionState {
        SessionState {
            automaton: self.id.clone(),
            performed: Vec::new(),
            credited: vec![false; self.sequence.len()],
            status: SessionStatus::InProgress,
            advice: None,
        }
    }

    /// Position in the required order of the next uncredited action.
    fn expected(&self, credited: &[bool]) -> Option<usize> {
        credited.iter().position(|c| !c)
    }

    /// Actions whose performance would be credited from `credited`.
    pub fn enabled(&self, credited: &[bool]) -> Vec<&Action> {
        match self.mode {
            FsmMode::DeterministicOrdered => {
                self.expected(credited).map(|k| &self.actions[self.sequence[k]]).into_iter().collect()
            }
            FsmMode::Unordered => self
                .sequence
                .iter()
                .zip(credited)
                .filter(|(_, c)| !**c)
                .map(|(&i, _)| &self.actions[i])
                .collect(),
        }
    }

    pub fn step(&self, state: &SessionState, event: &str) -> Result<SessionState, FsmError> {
        let ordinal = state.last_ordinal().map_or(1, |o| o + 1);
        self.step_at(state, event, ordinal)
    }

    /// Steps with an explicit logical ordinal for the log.
    pub fn step_at(&self, state: &SessionState, event: &str, ordinal: u64) -> Result<SessionState, FsmError> {
        let event = self.canonical_id(event)?;
        let target = self.resolve(event);
        let mut next = state.clone();
        let mut entry = Entry {
            seq: state.performed.len() as u64 + 1,
            ordinal,
            event: event.to_string(),
            kind: EntryKind::Action,
            credited: false,
            note: None,
        };
        match target {
            Target::Event => {
                entry.kind = EntryKind::Invalidation;
                next.credited.iter_mut().for_each(|c| *c = false);
                next.status = SessionStatus::Invalidated;
                let first = &self.actions[self.sequence[0]];
                next.advice = Some(Advice {
                    kind: AdviceKind::Invalidated,
                    offending_action: Some(event.to_string()),
                    expected_action: Some(first.id.clone()),
                    message: format!(
                        "{} invalidates {}; start again with {}",
                        self.label_of(event),
                        self.label,
                        first.label
                    ),
                });
                entry.note = Some("progress reset".into());
            }
            Target::Action(i) if !self.actions[i].obligatory => {
                entry.kind = EntryKind::Recommended;
                entry.note = Some("recommended, no effect on validity".into());
                next.advice = None;
            }
            Target::Action(i) => {
                let k = self.sequence.iter().position(|&s| s == i).expect("obligatory action");
                let expected = self.expected(&next.credited);
                if next.credited[k] {
                    entry.note = Some("already performed".into());
                    next.advice = Some(Advice {
                        kind: AdviceKind::Redundant,
                        offending_action: Some(event.to_string()),
                        expected_action: expected.map(|e| self.actions[self.sequence[e]].id.clone()),
                        message: format!("{} was already performed", self.actions[i].label),
                    });
                } else if self.mode == FsmMode::DeterministicOrdered && expected != Some(k) {
                    let e = &self.actions[self.sequence[expected.expect("uncredited action exists")]];
                    entry.note = Some(format!("out of order, expected {}", e.id));
                    next.advice = Some(Advice {
                        kind: AdviceKind::OutOfOrder,
                        offending_action: Some(event.to_string()),
                        expected_action: Some(e.id.clone()),
                        message: format!(
                            "out-of-order, expected: {}; {} was performed too early",
                            e.label, self.actions[i].label
                        ),
                    });
                } else {
                    next.credited[k] = true;
                    entry.credited = true;
                    next.advice = None;
                }
                next.status = if next.credited.iter().all(|c| *c) {
                    SessionStatus::Valid
                } else {
                    SessionStatus::InProgress
                };
            }
        }
        next.performed.push(entry);
        Ok(next)
    }

    /// Treats the sequence as finished: an incomplete session becomes
    /// invalid with advice naming the first missing step.
    pub fn close(&self, state: &SessionState) -> SessionState {
        let mut out = state.clone();
        if matches!(out.status, SessionStatus::InProgress | SessionStatus::Invalidated) {
            out.status = SessionStatus::Invalid;
            if let Some(k) = self.expected(&out.credited) {
                let a = &self.actions[self.sequence[k]];
                out.advice = Some(Advice {
                    kind: AdviceKind::MissingStep,
                    offending_action: None,
                    expected_action: Some(a.id.clone()),
                    message: format!("missing step: {}", a.label),
                });
            }
        }
        out
    }

    pub fn verdict(&self, state: &SessionState) -> SessionVerdict {
        let missing = self
            .sequence
            .iter()
            .zip(&state.credited)
            .filter(|(_, c)| !**c)
            .map(|(&i, _)| self.actions[i].id.clone())
            .collect();
        let trace = state
            .performed
            .iter()
            .map(|e| {
                let mark = match (e.kind, e.credited) {
                    (EntryKind::Invalidation, _) => "invalidation",
                    (EntryKind::Recommended, _) => "recommended",
                    (_, true) => "credited",
                    (_, false) => "not credited",
                };
                let mut line = format!("{}. {} ({mark})", e.seq, self.label_of(&e.event));
                if let Some(note) = &e.note {
                    line.push_str(&format!(": {note}"));
                }
                line
            })
            .collect();
        SessionVerdict { status: state.status, missing, trace }
    }

    /// True iff every reachable progress state has at most one action that
    /// would be credited.
    pub fn check_deterministic(&self) -> bool {
        let start = vec![false; self.sequence.len()];
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start]);
        while let Some(credited) = queue.pop_front() {
            let enabled = self.enabled(&credited);
            if enabled.len() > 1 {
                return false;
            }
            for action in enabled {
                let k = self.sequence.iter().position(|&i| self.actions[i].id == action.id).expect("obligatory");
                let mut next = credited.clone();
                next[k] = true;
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        true
    }

    pub fn replay(&self, log: &[LogEntry]) -> Result<SessionState, FsmError> {
        let mut state = self.init_session();
        for e in log {
            state = self.step_at(&state, &e.event, e.ordinal)?;
        }
        Ok(state)
    }
}

/// `<seq> <ordinal> <event-id>` per line.
pub fn export_log(state: &SessionState) -> String {
    state.performed.iter().map(|e| format!("{} {} {}\n", e.seq, e.ordinal, e.event)).collect()
}

/// Reads an event log. Blank lines and `#` comments are skipped; sequence
/// numbers must run 1, 2, 3, ...
pub fn parse_log(text: &str) -> Result<Vec<LogEntry>, FsmError> {
    let mut out: Vec<LogEntry> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| FsmError::Log { line: n + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [seq, ordinal, event] = fields[..] else {
            return Err(err(format!("expected `<seq> <ordinal> <event-id>`, got `{line}`")));
        };
        let seq: u64 = seq.parse().map_err(|_| err(format!("bad sequence number `{seq}`")))?;
        let ordinal: u64 = ordinal.parse().map_err(|_| err(format!("bad ordinal `{ordinal}`")))?;
        if seq != out.len() as u64 + 1 {
            return Err(err(format!("sequence number {seq}, expected {}", out.len() + 1)));
        }
        if out.last().is_some_and(|prev| ordinal <= prev.ordinal) {
            return Err(err(format!("ordinal {ordinal} does not increase")));
        }
        out.push(LogEntry { seq, ordinal, event: event.to_string() });
    }
    Ok(out)
}

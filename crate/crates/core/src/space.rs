//! Terminology trees and the space of simple questions they span.
//!
//! A question picks one value for every attribute. Questions are numbered
//! in mixed radix over the attribute declaration order (last attribute
//! varying fastest) and streamed by an odometer, so no space is ever
//! materialized.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::Assignment;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("malformed question space: {0}")]
    Malformed(String),
    #[error("missing element `{0}`")]
    MissingElement(Element),
    #[error("element `{0}` has no attributes")]
    EmptyElement(Element),
    #[error("attribute `{0}` has no values")]
    EmptyAttribute(String),
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("duplicate value `{value}` in attribute `{attribute}`")]
    DuplicateValue { attribute: String, value: String },
    #[error("`{0}` is not a valid id (letters, digits and `_`, not starting with a digit)")]
    InvalidId(String),
    #[error("question count overflows 128 bits")]
    Overflow,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown value `{value}` for attribute `{attribute}`")]
    UnknownValue { attribute: String, value: String },
    #[error("no value given for attribute `{0}`")]
    MissingBinding(String),
    #[error("assignment is not one-hot for attribute `{0}`")]
    NotOneHot(String),
    #[error("question index {index} out of range (space has {count})")]
    IndexOutOfRange { index: u128, count: u128 },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Subject,
    Tool,
    Reason,
    Method,
}

impl Element {
    pub const ALL: [Element; 4] = [Element::Subject, Element::Tool, Element::Reason, Element::Method];

    pub fn name(self) -> &'static str {
        match self {
            Element::Subject => "subject",
            Element::Tool => "tool",
            Element::Reason => "reason",
            Element::Method => "method",
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Value {
    pub id: String,
    /// Display text, any script.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attribute {
    #[serde(rename = "attribute")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub values: Vec<Value>,
}

impl Attribute {
    pub fn value_index(&self, id: &str) -> Option<usize> {
        self.values.iter().position(|v| v.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermTree {
    pub element: Element,
    pub attributes: Vec<Attribute>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    label: Option<String>,
    subject: Option<Vec<Attribute>>,
    tool: Option<Vec<Attribute>>,
    reason: Option<Vec<Attribute>>,
    method: Option<Vec<Attribute>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionSpace {
    id: String,
    label: Option<String>,
    trees: Vec<TermTree>,
    /// Flattened attributes with the element each belongs to.
    attributes: Vec<(Element, Attribute)>,
    index: BTreeMap<String, usize>,
    count: u128,
}

/// One value index per attribute, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Question {
    choice: Vec<usize>,
}

impl Question {
    pub fn choices(&self) -> &[usize] {
        &self.choice
    }
}

/// Ids must be usable inside `attr=value` atoms.
fn valid_id(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl QuestionSpace {
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let file: SpaceFile =
            serde_json::from_str(text).map_err(|e| SpaceError::Malformed(e.to_string()))?;
        let mut trees = Vec::new();
        for (element, attrs) in Element::ALL.into_iter().zip([file.subject, file.tool, file.reason, file.method]) {
            let attributes = attrs.ok_or(SpaceError::MissingElement(element))?;
            trees.push(TermTree { element, attributes });
        }
        Self::new(file.id.unwrap_or_else(|| "space".into()), file.label, trees)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SpaceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn new(id: String, label: Option<String>, trees: Vec<TermTree>) -> Result<Self, SpaceError> {
        if !valid_id(&id) && !id.split(['-', '.']).all(valid_id) {
            return Err(SpaceError::InvalidId(id));
        }
        let mut seen_elements = BTreeSet::new();
        let mut attributes = Vec::new();
        let mut index = BTreeMap::new();
        let mut count: u128 = 1;
        for tree in &trees {
            if !seen_elements.insert(tree.element) {
                return Err(SpaceError::Malformed(format!("element `{}` given twice", tree.element)));
            }
            if tree.attributes.is_empty() {
                return Err(SpaceError::EmptyElement(tree.element));
            }
            for attr in &tree.attributes {
                if !valid_id(&attr.name) {
                    return Err(SpaceError::InvalidId(attr.name.clone()));
                }
                if attr.values.is_empty() {
                    return Err(SpaceError::EmptyAttribute(attr.name.clone()));
                }
                let mut ids = BTreeSet::new();
                for v in &attr.values {
                    if !valid_id(&v.id) {
                        return Err(SpaceError::InvalidId(v.id.clone()));
                    }
                    if !ids.insert(v.id.as_str()) {
                        return Err(SpaceError::DuplicateValue {
                            attribute: attr.name.clone(),
                            value: v.id.clone(),
                        });
                    }
                }
                if index.insert(attr.name.clone(), attributes.len()).is_some() {
                    return Err(SpaceError::DuplicateAttribute(attr.name.clone()));
                }
                count = count.checked_mul(attr.values.len() as u128).ok_or(SpaceError::Overflow)?;
                attributes.push((tree.element, attr.clone()));
            }
        }
        for element in Element::ALL {
            if !seen_elements.contains(&element) {
                return Err(SpaceError::MissingElement(element));
            }
        }
        // Canonical element order regardless of how trees were supplied.
        let mut trees = trees;
        trees.sort_by_key(|t| t.element);
        attributes.sort_by_key(|(e, _)| *e);
        let index = attributes.iter().enumerate().map(|(i, (_, a))| (a.name.clone(), i)).collect();
        Ok(Self { id, label, trees, attributes, index, count })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn trees(&self) -> &[TermTree] {
        &self.trees
    }

    pub fn attributes(&self) -> impl ExactSizeIterator<Item = &Attribute> {
        self.attributes.iter().map(|(_, a)| a)
    }

    pub fn attribute(&self, i: usize) -> &Attribute {
        &self.attributes[i].1
    }

    pub fn element_of(&self, i: usize) -> Element {
        self.attributes[i].0
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.attributes().map(|a| a.values.len()).collect()
    }

    pub fn question_count(&self) -> u128 {
        self.count
    }

    /// Atom naming value `v` of attribute `a`.
    pub fn atom(&self, a: usize, v: usize) -> String {
        let attr = self.attribute(a);
        format!("{}={}", attr.name, attr.values[v].id)
    }

    /// Every `attr=value` atom, in declaration order.
    pub fn atoms(&self) -> Vec<String> {
        (0..self.attribute_count())
            .flat_map(|a| (0..self.attribute(a).values.len()).map(move |v| (a, v)))
            .map(|(a, v)| self.atom(a, v))
            .collect()
    }

    /// Splits an `attr=value` atom into indices.
    pub fn resolve_atom(&self, atom: &str) -> Result<(usize, usize), SpaceError> {
        let (attr, value) = atom
            .split_once('=')
            .ok_or_else(|| SpaceError::UnknownAttribute(atom.to_string()))?;
        let a = self.attribute_index(attr).ok_or_else(|| SpaceError::UnknownAttribute(attr.into()))?;
        let v = self.attribute(a).value_index(value).ok_or_else(|| SpaceError::UnknownValue {
            attribute: attr.into(),
            value: value.into(),
        })?;
        Ok((a, v))
    }

    pub fn enumerate(&self) -> Questions<'_> {
        Questions { space: self, next: Some(vec![0; self.attribute_count()]), remaining: self.count }
    }

    /// Streams `len` questions starting at `start` (clamped to the space).
    pub fn enumerate_range(&self, start: u128, len: u128) -> Questions<'_> {
        if start >= self.count {
            return Questions { space: self, next: None, remaining: 0 };
        }
        let remaining = len.min(self.count - start);
        let first = self.question_at(start).expect("start checked against count");
        Questions { space: self, next: Some(first.choice), remaining }
    }

    pub fn question_at(&self, index: u128) -> Result<Question, SpaceError> {
        if index >= self.count {
            return Err(SpaceError::IndexOutOfRange { index, count: self.count });
        }
        let mut choice = vec![0; self.attribute_count()];
        let mut rest = index;
        for (i, (_, attr)) in self.attributes.iter().enumerate().rev() {
            let radix = attr.values.len() as u128;
            choice[i] = (rest % radix) as usize;
            rest /= radix;
        }
        Ok(Question { choice })
    }

    pub fn index_of(&self, q: &Question) -> u128 {
        q.choice
            .iter()
            .zip(self.attributes())
            .fold(0u128, |acc, (&c, attr)| acc * attr.values.len() as u128 + c as u128)
    }

    /// Builds a question from `attribute -> value id` bindings covering every
    /// attribute.
    pub fn question<'a, I>(&self, bindings: I) -> Result<Question, SpaceError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut choice: Vec<Option<usize>> = vec![None; self.attribute_count()];
        for (attr, value) in bindings {
            let a = self.attribute_index(attr).ok_or_else(|| SpaceError::UnknownAttribute(attr.into()))?;
            let v = self.attribute(a).value_index(value).ok_or_else(|| SpaceError::UnknownValue {
                attribute: attr.into(),
                value: value.into(),
            })?;
            choice[a] = Some(v);
        }
        let choice = choice
            .into_iter()
            .enumerate()
            .map(|(a, c)| c.ok_or_else(|| SpaceError::MissingBinding(self.attribute(a).name.clone())))
            .collect::<Result<_, _>>()?;
        Ok(Question { choice })
    }

    /// `(attribute, value)` pairs of `q` in declaration order.
    pub fn bindings<'s>(&'s self, q: &'s Question) -> impl Iterator<Item = (&'s Attribute, &'s Value)> + 's {
        self.attributes().zip(&q.choice).map(|(attr, &v)| (attr, &attr.values[v]))
    }

    /// `attr=value` atoms of `q` in declaration order.
    pub fn describe(&self, q: &Question) -> Vec<String> {
        self.bindings(q).map(|(a, v)| format!("{}={}", a.name, v.id)).collect()
    }

    /// One-hot encoding: `attr=value` is true exactly for the chosen value.
    pub fn encode(&self, q: &Question) -> Assignment {
        let mut out = Assignment::new();
        for (a, &chosen) in q.choice.iter().enumerate() {
            for v in 0..self.attribute(a).values.len() {
                out.set(self.atom(a, v), v == chosen);
            }
        }
        out
    }

    pub fn decode(&self, assignment: &Assignment) -> Result<Question, SpaceError> {
        let mut choice = Vec::with_capacity(self.attribute_count());
        for a in 0..self.attribute_count() {
            let on: Vec<usize> = (0..self.attribute(a).values.len())
                .filter(|&v| assignment.get(&self.atom(a, v)) == Some(true))
                .collect();
            match on[..] {
                [v] => choice.push(v),
                _ => return Err(SpaceError::NotOneHot(self.attribute(a).name.clone())),
            }
        }
        Ok(Question { choice })
    }
}

/// Mixed-radix odometer over a question space.
#[derive(Debug, Clone)]
pub struct Questions<'a> {
    space: &'a QuestionSpace,
    next: Option<Vec<usize>>,
    remaining: u128,
}

impl Iterator for Questions<'_> {
    type Item = Question;

    fn next(&mut self) -> Option<Question> {
        if self.remaining == 0 {
            return None;
        }
        let current = self.next.take()?;
        self.remaining -= 1;
        let mut advanced = current.clone();
        let mut carried_out = true;
        for i in (0..advanced.len()).rev() {
            advanced[i] += 1;
            if advanced[i] < self.space.attribute(i).values.len() {
                carried_out = false;
                break;
            }
            advanced[i] = 0;
        }
        if !carried_out {
            self.next = Some(advanced);
        }
        Some(Question { choice: current })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, usize::try_from(self.remaining).ok())
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A propositional sentence over named atoms.
///
/// `Var` nodes are schema variables that must be replaced by atoms (see
/// [`substitute`](crate::logic::substitute)) before the sentence has a truth
/// value. A formula without any `Var` is *detailed*; otherwise it is
/// *general*.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    Var(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Formula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    /// Right-nested conjunction of `parts`; `None` when `parts` is empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        let mut acc = parts.pop()?;
        while let Some(next) = parts.pop() {
            acc = Formula::and(next, acc);
        }
        Some(acc)
    }

    /// Negation that cancels an outer `Not` instead of stacking a second one.
    pub fn negated(&self) -> Formula {
        match self {
            Formula::Not(inner) => (**inner).clone(),
            other => Formula::not(other.clone()),
        }
    }

    /// Atom names occurring in the formula, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let Formula::Atom(name) = node {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Variable names occurring in the formula, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let Formula::Var(name) = node {
                out.insert(name.clone());
            }
        });
        out
    }

    pub fn is_detailed(&self) -> bool {
        let mut detailed = true;
        self.visit(&mut |node| {
            if matches!(node, Formula::Var(_)) {
                detailed = false;
            }
        });
        detailed
    }

    pub fn is_general(&self) -> bool {
        !self.is_detailed()
    }

    /// First variable in pre-order, if any.
    pub fn first_var(&self) -> Option<&str> {
        match self {
            Formula::Atom(_) => None,
            Formula::Var(name) => Some(name),
            Formula::Not(inner) => inner.first_var(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.first_var().or_else(|| r.first_var())
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Var(_) => 1,
            Formula::Not(inner) => 1 + inner.depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                1 + l.depth().max(r.depth())
            }
        }
    }

    /// Pre-order traversal.
    pub fn visit<F: FnMut(&Formula)>(&self, f: &mut F) {
        f(self);
        match self {
            Formula::Atom(_) | Formula::Var(_) => {}
            Formula::Not(inner) => inner.visit(f),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.visit(f);
                r.visit(f);
            }
        }
    }

    /// Rebuilds the formula bottom-up, replacing leaves through `leaf`.
    pub fn map_leaves<E>(
        &self,
        leaf: &mut impl FnMut(&Formula) -> Result<Formula, E>,
    ) -> Result<Formula, E> {
        Ok(match self {
            Formula::Atom(_) | Formula::Var(_) => leaf(self)?,
            Formula::Not(inner) => Formula::not(inner.map_leaves(leaf)?),
            Formula::And(l, r) => Formula::and(l.map_leaves(leaf)?, r.map_leaves(leaf)?),
            Formula::Or(l, r) => Formula::or(l.map_leaves(leaf)?, r.map_leaves(leaf)?),
            Formula::Implies(l, r) => Formula::implies(l.map_leaves(leaf)?, r.map_leaves(leaf)?),
            Formula::Iff(l, r) => Formula::iff(l.map_leaves(leaf)?, r.map_leaves(leaf)?),
        })
    }

    /// Replaces every atom named in `renaming` with the mapped formula.
    pub fn rename_atoms(&self, renaming: &BTreeMap<String, Formula>) -> Formula {
        self.map_leaves::<std::convert::Infallible>(&mut |leaf| {
            Ok(match leaf {
                Formula::Atom(name) => renaming.get(name).cloned().unwrap_or_else(|| leaf.clone()),
                other => other.clone(),
            })
        })
        .unwrap_or_else(|never| match never {})
    }
}

/// Truth values for atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, atom: impl Into<String>, value: bool) {
        self.0.insert(atom.into(), value);
    }

    pub fn with(mut self, atom: impl Into<String>, value: bool) -> Self {
        self.set(atom, value);
        self
    }

    pub fn get(&self, atom: &str) -> Option<bool> {
        self.0.get(atom).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Names bound to `true`, sorted.
    pub fn true_atoms(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter(|(_, v)| **v).map(|(k, _)| k.as_str())
    }

    /// Restriction to `atoms`; atoms missing from `self` stay unbound.
    pub fn restricted_to<'a>(&self, atoms: impl IntoIterator<Item = &'a String>) -> Assignment {
        let mut out = Assignment::new();
        for a in atoms {
            if let Some(v) = self.get(a) {
                out.set(a.clone(), v);
            }
        }
        out
    }
}

impl FromIterator<(String, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, bool)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<(&'a str, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (&'a str, bool)>>(iter: T) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        f.write_str("}")
    }
}

/// Variable → atom bindings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Substitution(BTreeMap<String, String>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: impl Into<String>, atom: impl Into<String>) {
        self.0.insert(var.into(), atom.into());
    }

    pub fn with(mut self, var: impl Into<String>, atom: impl Into<String>) -> Self {
        self.bind(var, atom);
        self
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl FromIterator<(String, String)> for Substitution {
    fn from_iter<T: IntoIterator<Item = (String, String)>>(iter: T) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("(none)");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}:={v}")?;
        }
        Ok(())
    }
}

/// Serialized as its canonical text.
impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A formula with a caller-chosen identifier, used wherever rules are cited.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct NamedFormula {
    pub id: String,
    pub formula: Formula,
}

impl NamedFormula {
    pub fn new(id: impl Into<String>, formula: Formula) -> Self {
        Self { id: id.into(), formula }
    }

    /// Names each formula `rule1`, `rule2`, … in order.
    pub fn numbered(formulas: impl IntoIterator<Item = Formula>) -> Vec<NamedFormula> {
        formulas
            .into_iter()
            .enumerate()
            .map(|(i, f)| NamedFormula::new(format!("rule{}", i + 1), f))
            .collect()
    }
}

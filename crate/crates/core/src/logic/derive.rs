//! Deduction of detailed sentences from a rule set that may contain
//! general (variable-bearing) rules.
//!
//! Every variable of every general rule is tried against every atom of the
//! query. The instantiated rules plus the detailed rules form the premise
//! set; the query is derived when that set entails it. The premise set is
//! then shrunk greedily so the trace cites only instances that are needed.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::entail::entails;
use super::error::{LogicError, LogicResult};
use super::eval::substitute;
use super::formula::{Assignment, Formula, NamedFormula, Substitution};

pub const DEFAULT_INSTANTIATION_CAP: u64 = 1_000_000;

/// Premise sets larger than this are reported without shrinking.
const MINIMIZE_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// A detailed rule used as-is.
    Premise,
    /// A general rule with its variables replaced.
    Instantiate,
    /// The conclusion follows from every preceding step.
    Entail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeductionStep {
    pub kind: StepKind,
    /// Id of the rule used; `entailment` for the closing step.
    pub rule: String,
    pub substitution: Substitution,
    pub formula: Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeductionStatus {
    Derived,
    NotDerivable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeductionTrace {
    pub conclusion: Formula,
    pub steps: Vec<DeductionStep>,
    pub status: DeductionStatus,
    /// For `NotDerivable`: an assignment satisfying every instance but not
    /// the conclusion.
    pub countermodel: Option<Assignment>,
}

#[derive(Debug, Clone)]
pub struct DeriveOptions {
    pub instantiation_cap: u64,
    pub minimize: bool,
    /// Atoms tried for variables in addition to those of the query.
    pub extra_domain: BTreeSet<String>,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self { instantiation_cap: DEFAULT_INSTANTIATION_CAP, minimize: true, extra_domain: BTreeSet::new() }
    }
}

impl DeductionTrace {
    pub fn is_derived(&self) -> bool {
        self.status == DeductionStatus::Derived
    }

    /// Substitutions applied by the trace, in step order.
    pub fn substitutions(&self) -> impl Iterator<Item = (&str, &Substitution)> {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::Instantiate)
            .map(|s| (s.rule.as_str(), &s.substitution))
    }

    /// Formulas produced before the closing entailment step.
    pub fn premises(&self) -> Vec<Formula> {
        self.steps
            .iter()
            .filter(|s| s.kind != StepKind::Entail)
            .map(|s| s.formula.clone())
            .collect()
    }

    /// Re-executes every step against `rules` and checks that the trace
    /// reproduces its conclusion.
    pub fn replay(&self, rules: &[NamedFormula]) -> LogicResult<bool> {
        if self.status == DeductionStatus::NotDerivable {
            return Ok(self.steps.is_empty());
        }
        let Some((last, body)) = self.steps.split_last() else {
            return Ok(false);
        };
        if last.kind != StepKind::Entail || last.formula != self.conclusion {
            return Ok(false);
        }
        for step in body {
            let Some(rule) = rules.iter().find(|r| r.id == step.rule) else {
                return Ok(false);
            };
            let produced = match step.kind {
                StepKind::Premise if rule.formula.is_detailed() => rule.formula.clone(),
                StepKind::Instantiate => substitute(&rule.formula, &step.substitution)?,
                _ => return Ok(false),
            };
            if produced != step.formula {
                return Ok(false);
            }
        }
        Ok(entails(&self.premises(), &self.conclusion)?.holds)
    }
}

impl fmt::Display for DeductionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.status {
            DeductionStatus::Derived => writeln!(f, "derived: {}", self.conclusion)?,
            DeductionStatus::NotDerivable => writeln!(f, "not derivable: {}", self.conclusion)?,
        }
        for (i, step) in self.steps.iter().enumerate() {
            match step.kind {
                StepKind::Premise => writeln!(f, "  {}. premise {}: {}", i + 1, step.rule, step.formula)?,
                StepKind::Instantiate => writeln!(
                    f,
                    "  {}. instantiate {} with {}: {}",
                    i + 1,
                    step.rule,
                    step.substitution,
                    step.formula
                )?,
                StepKind::Entail => {
                    writeln!(f, "  {}. steps 1-{} entail {}", i + 1, i, step.formula)?
                }
            }
        }
        if let Some(cm) = &self.countermodel {
            writeln!(f, "  countermodel: {cm}")?;
        }
        Ok(())
    }
}

/// Every total map from `vars` to `domain`, in lexicographic order.
fn substitutions(vars: &[String], domain: &[String]) -> Vec<Substitution> {
    let mut out = vec![Substitution::new()];
    for var in vars {
        out = out
            .into_iter()
            .flat_map(|s| domain.iter().map(move |atom| s.clone().with(var.clone(), atom.clone())))
            .collect();
    }
    out
}

/// Counts instantiations without building them.
pub fn instantiation_count(rules: &[NamedFormula], domain_size: usize) -> u128 {
    rules
        .iter()
        .map(|r| {
            let k = r.formula.vars().len() as u32;
            if k == 0 {
                1
            } else {
                (domain_size as u128).saturating_pow(k)
            }
        })
        .fold(0u128, |acc, n| acc.saturating_add(n))
}

/// Detailed rules as premise steps and every instance of the general rules
/// over `domain`, in rule order.
pub fn instantiate_all(
    rules: &[NamedFormula],
    domain: &BTreeSet<String>,
    cap: u64,
) -> LogicResult<Vec<DeductionStep>> {
    let needed = instantiation_count(rules, domain.len());
    if needed > u128::from(cap) {
        return Err(LogicError::InstantiationBudget { cap, needed });
    }
    let domain: Vec<String> = domain.iter().cloned().collect();
    let mut steps = Vec::new();
    for rule in rules {
        let vars: Vec<String> = rule.formula.vars().into_iter().collect();
        if vars.is_empty() {
            steps.push(DeductionStep {
                kind: StepKind::Premise,
                rule: rule.id.clone(),
                substitution: Substitution::new(),
                formula: rule.formula.clone(),
            });
            continue;
        }
        for s in substitutions(&vars, &domain) {
            let formula = substitute(&rule.formula, &s)?;
            steps.push(DeductionStep {
                kind: StepKind::Instantiate,
                rule: rule.id.clone(),
                substitution: s,
                formula,
            });
        }
    }
    Ok(steps)
}

pub fn derive_detailed(rules: &[NamedFormula], query: &Formula) -> LogicResult<DeductionTrace> {
    derive_detailed_with(rules, query, DeriveOptions::default())
}

pub fn derive_detailed_with(
    rules: &[NamedFormula],
    query: &Formula,
    options: DeriveOptions,
) -> LogicResult<DeductionTrace> {
    if let Some(var) = query.first_var() {
        return Err(LogicError::GeneralFormula(var.to_string()));
    }
    let mut domain = query.atoms();
    domain.extend(options.extra_domain.iter().cloned());
    let mut steps = instantiate_all(rules, &domain, options.instantiation_cap)?;
    let formulas = |steps: &[DeductionStep]| -> Vec<Formula> {
        steps.iter().map(|s| s.formula.clone()).collect()
    };

    let check = entails(&formulas(&steps), query)?;
    if !check.holds {
        return Ok(DeductionTrace {
            conclusion: query.clone(),
            steps: Vec::new(),
            status: DeductionStatus::NotDerivable,
            countermodel: check.countermodel,
        });
    }

    if options.minimize && steps.len() <= MINIMIZE_LIMIT {
        let mut i = 0;
        // A trace from a non-empty rule set always cites at least one rule,
        // even when the query is valid on its own.
        while i < steps.len() && steps.len() > 1 {
            let mut without = steps.clone();
            without.remove(i);
            if entails(&formulas(&without), query)?.holds {
                steps = without;
            } else {
                i += 1;
            }
        }
    }

    steps.push(DeductionStep {
        kind: StepKind::Entail,
        rule: "entailment".into(),
        substitution: Substitution::new(),
        formula: query.clone(),
    });
    Ok(DeductionTrace {
        conclusion: query.clone(),
        steps,
        status: DeductionStatus::Derived,
        countermodel: None,
    })
}

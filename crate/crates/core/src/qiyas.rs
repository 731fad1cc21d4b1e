//! Analogy: carrying a solved case's verdict over to a new case.
//!
//! Direct analogy transfers the verdict when the new case has the same
//! reason up to renaming. Inverse analogy applies when the new case has the
//! opposite reason and yields the opposite verdict. Either way the candidate
//! comes with a deduction trace, and `validate_analogy` checks that the
//! reason is both necessary and sufficient for the verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{
    derive_detailed_with, entails, inconsistent, instantiate_all, parse_formula_with_vars, substitute,
    Assignment, DeductionTrace, DeriveOptions, Formula, LogicError, NamedFormula, Substitution,
    DEFAULT_INSTANTIATION_CAP,
};

/// Renaming searches beyond this many unshared atoms are refused.
const MAX_RENAMED_ATOMS: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QiyasError {
    #[error("the primary case has no established verdict")]
    MissingVerdict,
    #[error("no substitution turns the primary reason into the secondary reason")]
    NoUnifier,
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("the candidate verdict does not follow from the analogy rules")]
    Unjustified,
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("malformed case: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Primary,
    Secondary,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Primary => "primary",
            Role::Secondary => "secondary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Direct,
    Inverse,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Direct => "direct",
            Mode::Inverse => "inverse",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyCase {
    pub reason: Formula,
    pub verdict: Option<Formula>,
    pub role: Role,
}

impl AnalogyCase {
    pub fn primary(reason: Formula, verdict: Formula) -> Self {
        Self { reason, verdict: Some(verdict), role: Role::Primary }
    }

    pub fn secondary(reason: Formula) -> Self {
        Self { reason, verdict: None, role: Role::Secondary }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateRule {
    pub derived: Formula,
    pub mode: Mode,
    pub justification: DeductionTrace,
    /// Rules the justification replays against.
    pub premises: Vec<NamedFormula>,
    /// Unifying map from primary atoms (or variables) to secondary atoms.
    pub unifier: Substitution,
    pub primary_reason: Formula,
    pub primary_verdict: Formula,
    pub secondary_reason: Formula,
}

impl CandidateRule {
    /// Whether the justification reproduces `derived` from `premises`.
    pub fn replays(&self) -> Result<bool, LogicError> {
        Ok(self.justification.conclusion == self.derived && self.justification.replay(&self.premises)?)
    }
}

impl fmt::Display for CandidateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} analogy: {}", self.mode, self.derived)?;
        writeln!(f, "  primary: {} gives {}", self.primary_reason, self.primary_verdict)?;
        writeln!(f, "  secondary reason: {}", self.secondary_reason)?;
        writeln!(f, "  unifier: {}", self.unifier)?;
        for p in &self.premises {
            writeln!(f, "  rule {}: {}", p.id, p.formula)?;
        }
        write!(f, "{}", self.justification)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// reason -> verdict
    Sufficient,
    /// verdict -> reason
    Necessary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub case: Role,
    /// `None` when the rule set itself is contradictory for this case.
    pub direction: Option<Direction>,
    pub countermodel: Option<Assignment>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "validity", rename_all = "lowercase")]
pub enum Validity {
    Valid,
    Invalid { failures: Vec<Failure> },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validity::Valid => writeln!(f, "valid: the reason is necessary and sufficient in both cases"),
            Validity::Invalid { failures } => {
                writeln!(f, "invalid")?;
                for failure in failures {
                    writeln!(f, "  {}", failure.message)?;
                    if let Some(cm) = &failure.countermodel {
                        writeln!(f, "    countermodel: {cm}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Structural match of `pattern` against `target`, binding variables to
/// atoms consistently.
fn unify(pattern: &Formula, target: &Formula, s: &mut Substitution) -> bool {
    match (pattern, target) {
        (Formula::Var(v), Formula::Atom(a)) => match s.get(v) {
            Some(bound) => bound == a,
            None => {
                s.bind(v.clone(), a.clone());
                true
            }
        },
        (Formula::Atom(x), Formula::Atom(y)) => x == y,
        (Formula::Not(p), Formula::Not(t)) => unify(p, t, s),
        (Formula::And(pl, pr), Formula::And(tl, tr))
        | (Formula::Or(pl, pr), Formula::Or(tl, tr))
        | (Formula::Implies(pl, pr), Formula::Implies(tl, tr))
        | (Formula::Iff(pl, pr), Formula::Iff(tl, tr)) => unify(pl, tl, s) && unify(pr, tr, s),
        _ => false,
    }
}

fn equivalent(a: &Formula, b: &Formula) -> Result<bool, LogicError> {
    Ok(entails(std::slice::from_ref(a), b)?.holds && entails(std::slice::from_ref(b), a)?.holds)
}

fn rename(f: &Formula, s: &Substitution) -> Formula {
    let map: BTreeMap<String, Formula> = s.iter().map(|(k, v)| (k.to_string(), Formula::atom(v))).collect();
    f.rename_atoms(&map)
}

/// Injective maps from `from` into `to`, in lexicographic order.
fn injections(from: &[String], to: &[String]) -> Vec<Substitution> {
    fn go(from: &[String], to: &[String], used: &mut Vec<bool>, cur: Substitution, out: &mut Vec<Substitution>) {
        let Some((head, rest)) = from.split_first() else {
            out.push(cur);
            return;
        };
        for (i, target) in to.iter().enumerate() {
            if !used[i] {
                used[i] = true;
                go(rest, to, used, cur.clone().with(head.clone(), target.clone()), out);
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(from, to, &mut vec![false; to.len()], Substitution::new(), &mut out);
    out
}

/// First atom renaming of the primary reason's unshared atoms that makes
/// `accept` hold.
fn find_renaming(
    primary: &Formula,
    secondary: &Formula,
    mut accept: impl FnMut(&Substitution) -> Result<bool, LogicError>,
) -> Result<Option<Substitution>, QiyasError> {
    let p = primary.atoms();
    let s = secondary.atoms();
    if p.is_disjoint(&s) {
        return Ok(None);
    }
    let from: Vec<String> = p.difference(&s).cloned().collect();
    let to: Vec<String> = s.difference(&p).cloned().collect();
    if from.len() > to.len() || from.len() > MAX_RENAMED_ATOMS {
        return Ok(None);
    }
    for sigma in injections(&from, &to) {
        if accept(&sigma)? {
            return Ok(Some(sigma));
        }
    }
    Ok(None)
}

/// Replaces the atoms renamed by `sigma` with fresh variables.
fn generalize(f: &Formula, sigma: &Substitution, taken: &BTreeSet<String>) -> (Formula, BTreeMap<String, String>) {
    let mut names = BTreeMap::new();
    let mut n = 0;
    for (atom, _) in sigma.iter() {
        let var = loop {
            n += 1;
            let candidate = format!("X{n}");
            if !taken.contains(&candidate) {
                break candidate;
            }
        };
        names.insert(atom.to_string(), var);
    }
    let map: BTreeMap<String, Formula> = names.iter().map(|(a, v)| (a.clone(), Formula::var(v.clone()))).collect();
    (f.rename_atoms(&map), names)
}

fn justify(
    premises: Vec<NamedFormula>,
    derived: &Formula,
    secondary: &Formula,
) -> Result<DeductionTrace, QiyasError> {
    let options = DeriveOptions { extra_domain: secondary.atoms(), ..Default::default() };
    let trace = derive_detailed_with(&premises, derived, options)?;
    if !trace.is_derived() {
        return Err(QiyasError::Unjustified);
    }
    Ok(trace)
}

pub fn direct_analogy(primary: &AnalogyCase, secondary_reason: &Formula) -> Result<CandidateRule, QiyasError> {
    direct_analogy_under(primary, secondary_reason, &[])
}

/// Direct analogy justified by `rules` instead of a generated schema when
/// `rules` is non-empty.
pub fn direct_analogy_under(
    primary: &AnalogyCase,
    secondary_reason: &Formula,
    rules: &[NamedFormula],
) -> Result<CandidateRule, QiyasError> {
    let verdict = primary.verdict.as_ref().ok_or(QiyasError::MissingVerdict)?;
    if secondary_reason.is_general() {
        return Err(QiyasError::PreconditionUnmet("the secondary reason must be detailed".into()));
    }
    let (derived, unifier, schema) = if primary.reason.is_general() {
        let mut s = Substitution::new();
        if !unify(&primary.reason, secondary_reason, &mut s) {
            return Err(QiyasError::NoUnifier);
        }
        let derived = substitute(verdict, &s).map_err(|_| QiyasError::NoUnifier)?;
        (derived, s, Formula::implies(primary.reason.clone(), verdict.clone()))
    } else {
        let sigma = find_renaming(&primary.reason, secondary_reason, |s| {
            equivalent(&rename(&primary.reason, s), secondary_reason)
        })?
        .ok_or(QiyasError::NoUnifier)?;
        let mut taken = primary.reason.atoms();
        taken.extend(verdict.atoms());
        taken.extend(secondary_reason.atoms());
        let (schema, _) = generalize(&Formula::implies(primary.reason.clone(), verdict.clone()), &sigma, &taken);
        (rename(verdict, &sigma), sigma, schema)
    };
    let mut premises = if rules.is_empty() {
        vec![NamedFormula::new("primary", schema)]
    } else {
        rules.to_vec()
    };
    premises.push(NamedFormula::new("secondary", secondary_reason.clone()));
    let justification = justify(premises.clone(), &derived, secondary_reason)?;
    Ok(CandidateRule {
        derived,
        mode: Mode::Direct,
        justification,
        premises,
        unifier,
        primary_reason: primary.reason.clone(),
        primary_verdict: verdict.clone(),
        secondary_reason: secondary_reason.clone(),
    })
}

pub fn inverse_analogy(primary: &AnalogyCase, secondary: &AnalogyCase) -> Result<CandidateRule, QiyasError> {
    inverse_analogy_under(primary, secondary, &[])
}

/// Inverse analogy justified by `rules` instead of generated schemas when
/// `rules` is non-empty.
pub fn inverse_analogy_under(
    primary: &AnalogyCase,
    secondary: &AnalogyCase,
    rules: &[NamedFormula],
) -> Result<CandidateRule, QiyasError> {
    let verdict = primary.verdict.as_ref().ok_or(QiyasError::MissingVerdict)?;
    if primary.reason.is_general() || secondary.reason.is_general() {
        return Err(QiyasError::PreconditionUnmet("inverse analogy needs detailed reasons".into()));
    }
    let sigma = find_renaming(&primary.reason, &secondary.reason, |s| {
        equivalent(&rename(&primary.reason, s).negated(), &secondary.reason)
    })?
    .ok_or_else(|| {
        QiyasError::PreconditionUnmet("the secondary reason is not the inverse of the primary reason".into())
    })?;
    let derived = rename(verdict, &sigma).negated();

    let mut premises = if rules.is_empty() {
        let mut taken = primary.reason.atoms();
        taken.extend(verdict.atoms());
        taken.extend(secondary.reason.atoms());
        let (reason, _) = generalize(&primary.reason, &sigma, &taken);
        let (ruling, _) = generalize(verdict, &sigma, &taken);
        vec![
            NamedFormula::new("primary", Formula::iff(reason.clone(), ruling.clone())),
            NamedFormula::new("inverse", Formula::iff(reason.negated(), ruling.negated())),
        ]
    } else {
        rules.to_vec()
    };
    premises.push(NamedFormula::new("secondary", secondary.reason.clone()));
    let justification = justify(premises.clone(), &derived, &secondary.reason)?;
    Ok(CandidateRule {
        derived,
        mode: Mode::Inverse,
        justification,
        premises,
        unifier: sigma,
        primary_reason: primary.reason.clone(),
        primary_verdict: verdict.clone(),
        secondary_reason: secondary.reason.clone(),
    })
}

/// Checks that, under `rules`, each case's reason is equivalent to its
/// verdict. General rules are instantiated over the atoms of each case.
pub fn validate_analogy(c: &CandidateRule, rules: &[NamedFormula]) -> Result<Validity, QiyasError> {
    let mut failures = Vec::new();
    let cases = [
        (Role::Primary, &c.primary_reason, &c.primary_verdict),
        (Role::Secondary, &c.secondary_reason, &c.derived),
    ];
    for (role, reason, verdict) in cases {
        if reason.is_general() {
            // A general primary reason is checked through its instance.
            continue;
        }
        let mut domain = reason.atoms();
        domain.extend(verdict.atoms());
        let premises: Vec<Formula> = instantiate_all(rules, &domain, DEFAULT_INSTANTIATION_CAP)?
            .into_iter()
            .map(|s| s.formula)
            .collect();
        if inconsistent(&premises)? {
            failures.push(Failure {
                case: role,
                direction: None,
                countermodel: None,
                message: format!("{role} case: the rules contradict each other"),
            });
            continue;
        }
        let checks = [
            (Direction::Sufficient, Formula::implies(reason.clone(), verdict.clone()), "sufficient"),
            (Direction::Necessary, Formula::implies(verdict.clone(), reason.clone()), "necessary"),
        ];
        for (direction, goal, word) in checks {
            let e = entails(&premises, &goal)?;
            if !e.holds {
                failures.push(Failure {
                    case: role,
                    direction: Some(direction),
                    countermodel: e.countermodel,
                    message: format!("{role} case: the reason {reason} is not {word} for {verdict} ({goal} does not follow)"),
                });
            }
        }
    }
    Ok(if failures.is_empty() { Validity::Valid } else { Validity::Invalid { failures } })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseSide {
    reason: String,
    #[serde(default)]
    verdict: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    #[serde(default)]
    id: Option<String>,
    mode: Mode,
    #[serde(default)]
    vars: Vec<String>,
    primary: CaseSide,
    secondary: CaseSide,
    /// Free-text note on how certain the reason is; not used in checks.
    #[serde(default)]
    certainty: Option<String>,
}

/// An analogy question read from a case file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseDoc {
    pub id: String,
    pub mode: Mode,
    pub primary: AnalogyCase,
    pub secondary: AnalogyCase,
    pub certainty: Option<String>,
}

impl CaseDoc {
    pub fn from_json(text: &str) -> Result<Self, QiyasError> {
        let file: CaseFile = serde_json::from_str(text).map_err(|e| QiyasError::Malformed(e.to_string()))?;
        let vars: BTreeSet<String> = file.vars.into_iter().collect();
        let parse = |s: &str| parse_formula_with_vars(s, &vars).map_err(|e| QiyasError::Logic(e.into()));
        let verdict = file.primary.verdict.as_deref().ok_or(QiyasError::MissingVerdict)?;
        if file.secondary.verdict.is_some() {
            return Err(QiyasError::Malformed("the secondary case must not carry a verdict".into()));
        }
        Ok(Self {
            id: file.id.unwrap_or_else(|| "case".into()),
            mode: file.mode,
            primary: AnalogyCase::primary(parse(&file.primary.reason)?, parse(verdict)?),
            secondary: AnalogyCase::secondary(parse(&file.secondary.reason)?),
            certainty: file.certainty,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QiyasError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| QiyasError::Malformed(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn run(&self, rules: &[NamedFormula]) -> Result<CandidateRule, QiyasError> {
        match self.mode {
            Mode::Direct => direct_analogy_under(&self.primary, &self.secondary.reason, rules),
            Mode::Inverse => inverse_analogy_under(&self.primary, &self.secondary, rules),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{evaluate, nth_assignment, parse_document, parse_formula};

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    const SEN: &str = "\
vars: X
Sen1: (inverse(Fs & Pgv -> X) & inverse(Fs & inverse(Pgv) -> X)) <-> inverse(Fs -> X)
Sen2: ((Fs & Pgv -> X) | (Fs & inverse(Pgv) -> X)) <-> (Fs -> X)
";

    const BOOK: &str = "\
book1: (Fs & Pgv -> Fv) -> (Fs -> Fv)
book2: inverse(Fs & Pgv -> Prv) -> inverse(Fs -> Prv)
";

    fn itikaf() -> (AnalogyCase, AnalogyCase) {
        (
            AnalogyCase::primary(
                p("inverse(Fs & Pgv -> Prv) & inverse(Fs & inverse(Pgv) -> Prv)"),
                p("inverse(Fs -> Prv)"),
            ),
            AnalogyCase::secondary(p("(Fs & Pgv -> Fv) | (Fs & inverse(Pgv) -> Fv)")),
        )
    }

    #[test]
    fn itikaf_inverse_analogy() {
        let (primary, secondary) = itikaf();
        let c = inverse_analogy(&primary, &secondary).unwrap();
        assert_eq!(c.derived, p("Fs -> Fv"));
        assert_eq!(c.unifier.to_string(), "Prv:=Fv");
        assert!(c.replays().unwrap());

        let rules = parse_document(SEN).unwrap().formulas;
        let c = inverse_analogy_under(&primary, &secondary, &rules).unwrap();
        assert_eq!(c.derived, p("Fs -> Fv"));
        let subs: Vec<String> = c.justification.substitutions().map(|(_, s)| s.to_string()).collect();
        assert_eq!(subs, vec!["X:=Fv"]);
        assert!(c.replays().unwrap());
        assert!(validate_analogy(&c, &rules).unwrap().is_valid());
    }

    #[test]
    fn truncated_reason_is_invalid() {
        let primary = AnalogyCase::primary(p("inverse(Fs & Pgv -> Prv)"), p("inverse(Fs -> Prv)"));
        let secondary = AnalogyCase::secondary(p("Fs & Pgv -> Fv"));
        let c = inverse_analogy(&primary, &secondary).unwrap();
        assert_eq!(c.derived, p("Fs -> Fv"));
        let rules = parse_document(BOOK).unwrap().formulas;
        let Validity::Invalid { failures } = validate_analogy(&c, &rules).unwrap() else {
            panic!("truncated reason accepted");
        };
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].case, Role::Primary);
        assert_eq!(failures[0].direction, Some(Direction::Necessary));
        let cm = failures[0].countermodel.as_ref().unwrap();
        assert_eq!((cm.get("Fs"), cm.get("Pgv"), cm.get("Prv")), (Some(true), Some(false), Some(false)));
    }

    #[test]
    fn non_inverted_secondary_is_rejected() {
        let (primary, _) = itikaf();
        let same = AnalogyCase::secondary(p("inverse(Fs & Pgv -> Fv) & inverse(Fs & inverse(Pgv) -> Fv)"));
        assert!(matches!(inverse_analogy(&primary, &same), Err(QiyasError::PreconditionUnmet(_))));
    }

    #[test]
    fn direct_analogy_transfers_the_verdict() {
        let primary = AnalogyCase::primary(p("SayUgh -> Hurts"), p("SayUgh -> Forbidden"));
        let c = direct_analogy(&primary, &p("Beating -> Hurts")).unwrap();
        assert_eq!(c.derived, p("Beating -> Forbidden"));
        assert_eq!(c.unifier.to_string(), "SayUgh:=Beating");
        assert!(c.replays().unwrap());

        let same = direct_analogy(&primary, &p("SayUgh -> Hurts")).unwrap();
        assert_eq!(same.derived, p("SayUgh -> Forbidden"));

        assert_eq!(direct_analogy(&primary, &p("Rain -> Wet")).unwrap_err(), QiyasError::NoUnifier);
        let missing = AnalogyCase::secondary(p("A"));
        assert_eq!(direct_analogy(&missing, &p("A")).unwrap_err(), QiyasError::MissingVerdict);
    }

    #[test]
    fn general_primary_reason_unifies_structurally() {
        let vars: BTreeSet<String> = ["X".to_string()].into();
        let primary = AnalogyCase::primary(
            parse_formula_with_vars("X -> Hurts", &vars).unwrap(),
            parse_formula_with_vars("X -> Forbidden", &vars).unwrap(),
        );
        let c = direct_analogy(&primary, &p("Beating -> Hurts")).unwrap();
        assert_eq!(c.derived, p("Beating -> Forbidden"));
        assert!(c.replays().unwrap());
        assert_eq!(direct_analogy(&primary, &p("Beating & Hurts")).unwrap_err(), QiyasError::NoUnifier);
    }

    #[test]
    fn biconditional_rule_set_validates() {
        let primary = AnalogyCase::primary(p("R"), p("V"));
        let c = direct_analogy(&primary, &p("R")).unwrap();
        let rules = parse_document("R <-> V").unwrap().formulas;
        assert!(validate_analogy(&c, &rules).unwrap().is_valid());
        let one_way = parse_document("R -> V").unwrap().formulas;
        assert!(!validate_analogy(&c, &one_way).unwrap().is_valid());
    }

    #[test]
    fn toy_inverse_case_matches_truth_table() {
        let primary = AnalogyCase::primary(p("inverse(A -> P)"), p("inverse(B -> P)"));
        let secondary = AnalogyCase::secondary(p("A -> Q"));
        let c = inverse_analogy(&primary, &secondary).unwrap();
        assert_eq!(c.derived, p("B -> Q"));
        // Oracle: over the 16 rows of {A, B, P, Q}, every row satisfying the
        // instantiated schemas and the secondary reason satisfies B -> Q.
        let all = Formula::conjunction(c.justification.premises()).unwrap();
        let atoms: Vec<String> = ["A", "B", "P", "Q"].map(String::from).to_vec();
        let mut satisfying = 0;
        for row in 0..16 {
            let a = nth_assignment(&atoms, row);
            if evaluate(&all, &a).unwrap() {
                satisfying += 1;
                assert!(evaluate(&p("B -> Q"), &a).unwrap());
            }
        }
        assert!(satisfying > 0);
    }
}

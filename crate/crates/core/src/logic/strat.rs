//! Circularity check over the atom dependency graph of a rule set.
//!
//! Each implication adds edges from the atoms of its antecedent to the atoms
//! of its consequent; a biconditional adds both directions. An edge is
//! negative when either endpoint occurs under an odd number of negations
//! inside its side. A cycle through a negative edge is an error (the rule
//! set defines something in terms of its own denial); a cycle without one is
//! only a warning.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use super::formula::{Formula, NamedFormula};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cycle {
    /// All atoms of the strongly connected component, sorted.
    pub atoms: Vec<String>,
    /// A witness cycle, first element repeated at the end.
    pub path: Vec<String>,
    pub through_negation: bool,
    /// Rules contributing at least one edge inside the component.
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StratificationReport {
    pub cycles: Vec<Cycle>,
}

impl StratificationReport {
    pub fn is_stratified(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Cycle> {
        self.cycles.iter().filter(|c| c.through_negation)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Cycle> {
        self.cycles.iter().filter(|c| !c.through_negation)
    }
}

/// Leaf names (atoms and variables) with their negation parity. An edge is
/// negative when its endpoints have opposite parity.
fn leaves(f: &Formula, negated: bool, out: &mut Vec<(String, bool)>) {
    match f {
        Formula::Atom(n) | Formula::Var(n) => out.push((n.clone(), negated)),
        Formula::Not(inner) => leaves(inner, !negated, out),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
            leaves(l, negated, out);
            leaves(r, negated, out);
        }
    }
}

type Edge = (String, String, bool);

fn collect_edges(f: &Formula, out: &mut BTreeSet<Edge>) {
    let link = |from: &Formula, to: &Formula, out: &mut BTreeSet<Edge>| {
        let (mut src, mut dst) = (Vec::new(), Vec::new());
        leaves(from, false, &mut src);
        leaves(to, false, &mut dst);
        for (s, sn) in &src {
            for (d, dn) in &dst {
                out.insert((s.clone(), d.clone(), sn != dn));
            }
        }
    };
    match f {
        Formula::Atom(_) | Formula::Var(_) => {}
        Formula::Not(inner) => collect_edges(inner, out),
        Formula::And(l, r) | Formula::Or(l, r) => {
            collect_edges(l, out);
            collect_edges(r, out);
        }
        Formula::Implies(l, r) => {
            link(l, r, out);
            collect_edges(l, out);
            collect_edges(r, out);
        }
        Formula::Iff(l, r) => {
            link(l, r, out);
            link(r, l, out);
            collect_edges(l, out);
            collect_edges(r, out);
        }
    }
}

pub fn check_stratification(rules: &[NamedFormula]) -> StratificationReport {
    let mut graph: DiGraph<String, bool> = DiGraph::new();
    let mut index: BTreeMap<String, NodeIndex> = BTreeMap::new();
    let mut edge_rules: BTreeMap<(NodeIndex, NodeIndex), BTreeSet<String>> = BTreeMap::new();

    for rule in rules {
        let mut edges = BTreeSet::new();
        collect_edges(&rule.formula, &mut edges);
        for (s, d, negative) in edges {
            let mut node = |name: &String| {
                *index.entry(name.clone()).or_insert_with(|| graph.add_node(name.clone()))
            };
            let (si, di) = (node(&s), node(&d));
            graph.add_edge(si, di, negative);
            edge_rules.entry((si, di)).or_default().insert(rule.id.clone());
        }
    }

    let mut cycles = Vec::new();
    for component in tarjan_scc(&graph) {
        let members: BTreeSet<NodeIndex> = component.iter().copied().collect();
        let inner: Vec<_> = graph
            .edge_indices()
            .filter_map(|e| {
                let (s, d) = graph.edge_endpoints(e)?;
                (members.contains(&s) && members.contains(&d)).then_some((s, d, graph[e]))
            })
            .collect();
        if inner.is_empty() {
            continue;
        }
        let through_negation = inner.iter().any(|(_, _, neg)| *neg);
        let &(from, to, _) = inner
            .iter()
            .find(|(_, _, neg)| *neg == through_negation)
            .expect("component has an inner edge");
        let mut path = vec![graph[from].clone()];
        path.extend(shortest_path(&graph, &members, to, from).into_iter().map(|n| graph[n].clone()));
        let mut atoms: Vec<String> = members.iter().map(|n| graph[*n].clone()).collect();
        atoms.sort();
        let rules: BTreeSet<String> = inner
            .iter()
            .flat_map(|(s, d, _)| edge_rules.get(&(*s, *d)).into_iter().flatten().cloned())
            .collect();
        cycles.push(Cycle { atoms, path, through_negation, rules: rules.into_iter().collect() });
    }
    cycles.sort_by(|a, b| a.atoms.cmp(&b.atoms));
    StratificationReport { cycles }
}

/// Nodes from `start` to `goal` inclusive, staying inside `members`.
fn shortest_path(
    graph: &DiGraph<String, bool>,
    members: &BTreeSet<NodeIndex>,
    start: NodeIndex,
    goal: NodeIndex,
) -> Vec<NodeIndex> {
    let mut prev: BTreeMap<NodeIndex, NodeIndex> = BTreeMap::new();
    let mut queue = VecDeque::from([start]);
    let mut seen = BTreeSet::from([start]);
    while let Some(n) = queue.pop_front() {
        if n == goal {
            break;
        }
        for next in graph.neighbors(n) {
            if members.contains(&next) && seen.insert(next) {
                prev.insert(next, n);
                queue.push_back(next);
            }
        }
    }
    let mut path = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::parse_formula;

    fn rules(texts: &[&str]) -> Vec<NamedFormula> {
        NamedFormula::numbered(texts.iter().map(|t| parse_formula(t).unwrap()))
    }

    #[test]
    fn chain_is_stratified() {
        let report = check_stratification(&rules(&["A -> B", "B -> C"]));
        assert!(report.cycles.is_empty());
        assert!(report.is_stratified());
    }

    #[test]
    fn self_denial_is_a_negative_cycle() {
        let report = check_stratification(&rules(&["A -> inverse(A)"]));
        assert_eq!(report.cycles.len(), 1);
        let c = &report.cycles[0];
        assert!(c.through_negation);
        assert_eq!(c.path, vec!["A", "A"]);
        assert!(!report.is_stratified());
    }

    #[test]
    fn positive_loop_only_warns() {
        let report = check_stratification(&rules(&["A -> B", "B -> A"]));
        assert_eq!(report.cycles.len(), 1);
        assert!(!report.cycles[0].through_negation);
        assert_eq!(report.cycles[0].atoms, vec!["A", "B"]);
        assert_eq!(report.cycles[0].rules, vec!["rule1", "rule2"]);
        assert!(report.is_stratified());
        assert_eq!(report.warnings().count(), 1);
    }

    #[test]
    fn negation_deeper_in_a_longer_cycle() {
        let report = check_stratification(&rules(&["A -> B", "B -> C", "C -> inverse(A)", "D -> A"]));
        assert_eq!(report.cycles.len(), 1);
        let c = &report.cycles[0];
        assert!(c.through_negation);
        assert_eq!(c.atoms, vec!["A", "B", "C"]);
        assert_eq!(c.path.first(), c.path.last());
        assert_eq!(c.path.len(), 4);
    }

    #[test]
    fn biconditional_links_both_ways() {
        let report = check_stratification(&rules(&["A <-> B"]));
        assert_eq!(report.cycles.len(), 1);
        assert!(!report.cycles[0].through_negation);
    }

    #[test]
    fn contrapositive_loop_is_benign() {
        let report = check_stratification(&rules(&["inverse(A) -> inverse(B)", "inverse(B) -> inverse(A)"]));
        assert_eq!(report.cycles.len(), 1);
        assert!(report.is_stratified());
    }
}

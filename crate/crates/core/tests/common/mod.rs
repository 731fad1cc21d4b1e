//! Seeded generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::path::PathBuf;

use fiqh_core::logic::{Formula, NamedFormula};
use fiqh_core::space::{Attribute, Element, QuestionSpace, TermTree, Value};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn atom_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// Random formula over `atoms` with depth at most `depth`.
pub fn random_formula(rng: &mut impl Rng, atoms: &[String], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::atom(atoms.choose(rng).unwrap().clone());
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => Formula::not(random_formula(rng, atoms, d)),
        1 => Formula::and(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        2 => Formula::or(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        3 => Formula::implies(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        4 => Formula::iff(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        _ => Formula::not(Formula::and(random_formula(rng, atoms, d), random_formula(rng, atoms, d))),
    }
}

/// Like `random_formula` but leaves may also be one of `vars`.
pub fn random_general(rng: &mut impl Rng, atoms: &[String], vars: &[String], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return if !vars.is_empty() && rng.gen_bool(0.4) {
            Formula::var(vars.choose(rng).unwrap().clone())
        } else {
            Formula::atom(atoms.choose(rng).unwrap().clone())
        };
    }
    let d = depth - 1;
    let mut sub = || random_general(rng, atoms, vars, d);
    let (l, r) = (sub(), sub());
    match rng.gen_range(0..5) {
        0 => Formula::not(l),
        1 => Formula::and(l, r),
        2 => Formula::or(l, r),
        3 => Formula::implies(l, r),
        _ => Formula::iff(l, r),
    }
}

/// Random 3-CNF with `clauses` clauses over `atoms`.
pub fn random_3cnf(rng: &mut impl Rng, atoms: &[String], clauses: usize) -> Formula {
    let mut conj = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        let mut lits = Vec::with_capacity(3);
        for _ in 0..3 {
            let a = Formula::atom(atoms.choose(rng).unwrap().clone());
            lits.push(if rng.gen_bool(0.5) { Formula::not(a) } else { a });
        }
        conj.push(lits.into_iter().reduce(Formula::or).unwrap());
    }
    conj.into_iter().reduce(Formula::and).unwrap()
}

/// Rule set with at most one variable `X`, plus a detailed query. A quarter
/// of the queries are instances of a rule, so some always follow.
pub fn random_derivation_problem(rng: &mut impl Rng) -> (Vec<NamedFormula>, Formula) {
    let atoms = atom_names(rng.gen_range(2..=4));
    let vars = vec!["X".to_string()];
    let n = rng.gen_range(1..=3);
    let rules: Vec<Formula> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                random_general(rng, &atoms, &vars, 3)
            } else {
                random_formula(rng, &atoms, 3)
            }
        })
        .collect();
    let query = match rng.gen_range(0..4) {
        0 | 1 => random_formula(rng, &atoms, 2),
        // An instance of one rule.
        2 => {
            let rule = rules.choose(rng).unwrap();
            let a = atoms.choose(rng).unwrap().clone();
            rule.map_leaves(&mut |leaf| -> Result<Formula, ()> {
                Ok(match leaf {
                    Formula::Var(_) => Formula::atom(a.clone()),
                    other => other.clone(),
                })
            })
            .unwrap()
        }
        _ => random_formula(rng, &atoms, 3),
    };
    // Sometimes weakened by a disjunct.
    let query = if rng.gen_bool(0.3) { Formula::or(query, random_formula(rng, &atoms, 1)) } else { query };
    (NamedFormula::numbered(rules), query)
}

/// Byte-level mutation of a formula string: deletions, duplications and
/// insertions of grammar-relevant characters.
pub fn mutate(rng: &mut impl Rng, text: &str) -> String {
    const PIECES: [&str; 14] = ["(", ")", "&", "|", "->", "<->", "~", "inverse", "inverse(", "#", " ", "=", "-", "\u{e9}"];
    let mut s: Vec<char> = text.chars().collect();
    for _ in 0..rng.gen_range(1..=4) {
        match rng.gen_range(0..3) {
            0 if !s.is_empty() => {
                let i = rng.gen_range(0..s.len());
                s.remove(i);
            }
            1 if !s.is_empty() => {
                let i = rng.gen_range(0..s.len());
                let j = rng.gen_range(i..s.len().min(i + 6) + 1).min(s.len());
                let chunk: Vec<char> = s[i..j].to_vec();
                s.splice(i..i, chunk);
            }
            _ => {
                let i = rng.gen_range(0..=s.len());
                let piece = PIECES.choose(rng).unwrap();
                s.splice(i..i, piece.chars());
            }
        }
    }
    s.into_iter().collect()
}

/// Space with attributes `a0..` of the given sizes spread over the four
/// elements; elements left without attributes get a one-value filler.
pub fn space_with_sizes(id: &str, sizes: &[usize]) -> QuestionSpace {
    let mut trees: Vec<TermTree> =
        Element::ALL.iter().map(|&element| TermTree { element, attributes: Vec::new() }).collect();
    for (i, &n) in sizes.iter().enumerate() {
        trees[i % 4].attributes.push(Attribute {
            name: format!("a{i}"),
            label: None,
            values: (0..n).map(|v| Value { id: format!("v{v}"), label: format!("value {v}") }).collect(),
        });
    }
    for (k, tree) in trees.iter_mut().enumerate() {
        if tree.attributes.is_empty() {
            tree.attributes.push(Attribute {
                name: format!("pad{k}"),
                label: None,
                values: vec![Value { id: "any".into(), label: "any".into() }],
            });
        }
    }
    QuestionSpace::new(id.into(), None, trees).unwrap()
}

pub fn arb_formula(atoms: usize, depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = (0..atoms).prop_map(|i| Formula::atom(format!("p{i}")));
    leaf.prop_recursive(depth, 256, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::iff(l, r)),
        ]
    })
}

pub fn arb_sizes(max_attrs: usize, max_values: usize, max_count: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_values, 1..=max_attrs)
        .prop_filter("space too large", move |s| s.iter().product::<usize>() <= max_count)
}

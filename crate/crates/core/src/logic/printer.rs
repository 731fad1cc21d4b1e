//! Canonical text form of formulas.
//!
//! Precedence-based minimal parentheses, with two extra rules that keep the
//! output readable: every compound operand of `<->` is parenthesized, and an
//! implication or biconditional nested directly under `->` is parenthesized
//! on either side. Negation always prints as `inverse(...)`.

use std::fmt;

use super::formula::Formula;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Not(_) | Formula::Atom(_) | Formula::Var(_) => 5,
    }
}

fn write_operand(out: &mut String, child: &Formula, parens: bool) {
    if parens {
        out.push('(');
        write_formula(out, child);
        out.push(')');
    } else {
        write_formula(out, child);
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    let (l, r, op) = match f {
        Formula::Atom(name) | Formula::Var(name) => {
            out.push_str(name);
            return;
        }
        Formula::Not(inner) => {
            out.push_str("inverse(");
            write_formula(out, inner);
            out.push(')');
            return;
        }
        Formula::And(l, r) => (l, r, " & "),
        Formula::Or(l, r) => (l, r, " | "),
        Formula::Implies(l, r) => (l, r, " -> "),
        Formula::Iff(l, r) => (l, r, " <-> "),
    };
    let p = precedence(f);
    let (pl, pr) = (precedence(l), precedence(r));
    let (left_parens, right_parens) = match f {
        Formula::Iff(..) => (pl < 5, pr < 5),
        Formula::Implies(..) => (pl <= 2, pr <= 2),
        _ => (pl <= p, pr < p),
    };
    write_operand(out, l, left_parens);
    out.push_str(op);
    write_operand(out, r, right_parens);
}

pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parser::parse_formula;

    fn a(name: &str) -> Formula {
        Formula::atom(name)
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(print_formula(&Formula::implies(a("Fs"), a("Fv"))), "Fs -> Fv");
        assert_eq!(print_formula(&Formula::and(a("A"), Formula::or(a("B"), a("C")))), "A & (B | C)");
        assert_eq!(print_formula(&Formula::not(a("A"))), "inverse(A)");
    }

    #[test]
    fn left_nested_same_operator_keeps_parens() {
        let f = Formula::and(Formula::and(a("A"), a("B")), a("C"));
        assert_eq!(print_formula(&f), "(A & B) & C");
        assert_eq!(parse_formula(&print_formula(&f)).unwrap(), f);
        let g = Formula::and(a("A"), Formula::and(a("B"), a("C")));
        assert_eq!(print_formula(&g), "A & B & C");
    }

    #[test]
    fn biconditional_operands_are_parenthesized() {
        let text = "((Fs & Pgv -> Fv) | (Fs & inverse(Pgv) -> Fv)) <-> (Fs -> Fv)";
        let f = parse_formula(text).unwrap();
        assert_eq!(print_formula(&f), text);
    }

    #[test]
    fn implication_chains() {
        let f = parse_formula("A -> B -> C").unwrap();
        assert_eq!(print_formula(&f), "A -> (B -> C)");
        let g = parse_formula("(A -> B) -> C").unwrap();
        assert_eq!(print_formula(&g), "(A -> B) -> C");
    }
}

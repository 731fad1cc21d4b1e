mod common;

use common::*;
use fiqh_core::automaton::{parse_log, Automaton, FsmMode, SessionStatus};
use fiqh_core::logic::{check_stratification, derive_detailed, parse_document, parse_formula};
use fiqh_core::qiyas::{validate_analogy, CaseDoc, Mode};
use fiqh_core::rulebase::{classify_space, Polarity, RuleBase, Status};
use fiqh_core::space::QuestionSpace;

fn space() -> QuestionSpace {
    QuestionSpace::load(data_dir().join("spaces/taymammum.space.json")).unwrap()
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(data_dir().join(rel)).unwrap()
}

#[test]
fn taymammum_space_shape() {
    let s = space();
    assert_eq!(s.sizes(), vec![3, 2, 2, 2, 3, 2, 2, 2, 2, 2, 3]);
    assert_eq!(s.question_count(), 6912);
}

#[test]
fn tahara_rulebase_loads_with_twelve_rules() {
    let s = space();
    let rb = RuleBase::load(data_dir().join("rules/tahara.rules.json"), &s).unwrap();
    assert_eq!(rb.rules().len(), 12);
    assert_eq!(rb.rules().iter().filter(|r| r.polarity == Polarity::Negative).count(), 8);
    let unsupported: Vec<&str> =
        rb.rules().iter().filter(|r| r.primary_rule.is_none()).map(|r| r.id.as_str()).collect();
    assert_eq!(unsupported, vec!["N4", "N6", "N8"]);
}

#[test]
fn basic_rules_on_the_sample_space() {
    let s = space();
    let rb = RuleBase::load(data_dir().join("rules/tayammum-basic.rules.json"), &s).unwrap();
    let ask = |pairs: &[(&str, &str)]| {
        let mut all: Vec<(String, String)> = (0..s.attribute_count())
            .map(|i| (s.attribute(i).name.clone(), s.attribute(i).values[0].id.clone()))
            .collect();
        for (a, v) in pairs {
            all.iter_mut().find(|(n, _)| n == a).unwrap().1 = v.to_string();
        }
        let q = s.question(all.iter().map(|(a, v)| (a.as_str(), v.as_str()))).unwrap();
        rb.match_question(&s, &q).unwrap()
    };
    let v = ask(&[("gender", "child"), ("travel", "traveling")]);
    assert_eq!(v.status, Status::Excluded);
    assert_eq!(v.label.as_deref(), Some("combination not valid"));
    assert_eq!(v.matched_rules, vec!["child-travel"]);
    let v = ask(&[("tool", "impure"), ("gender", "man"), ("health", "not_sick")]);
    assert_eq!(v.status, Status::Ruled);
    assert_eq!(v.label.as_deref(), Some("use prohibited"));
    for travel in ["traveling", "not_traveling"] {
        let v = ask(&[("gender", "man"), ("health", "sick"), ("travel", travel), ("method", "tayammum")]);
        assert_eq!(v.matched_rules, vec!["sick-tayammum"]);
        assert!(v.explanation.iter().any(|l| l == "irrelevant to this rule: travel"));
    }
    assert!(classify_space(&rb, &s).unwrap().total == 6912);
}

#[test]
fn itikaf_formulas() {
    let doc = parse_document(&read("formulas/itikaf.formulas")).unwrap();
    assert_eq!(doc.formulas.len(), 3);
    let trace = derive_detailed(&doc.formulas, &parse_formula("Fs -> Fv").unwrap()).unwrap();
    assert!(trace.is_derived());
    assert!(trace.substitutions().any(|(_, s)| s.to_string() == "X:=Fv"));
    // Pgv occurs both plain and inverted in the schemas, which the checker
    // reports; Sen3 alone is a plain chain.
    let report = check_stratification(&doc.formulas);
    assert!(report.errors().all(|c| c.atoms.contains(&"Pgv".to_string())));
    assert!(check_stratification(&doc.formulas[2..]).cycles.is_empty());
}

#[test]
fn shipped_cases() {
    let sen = parse_document(&read("formulas/itikaf.formulas")).unwrap().formulas;
    let book = parse_document(&read("formulas/itikaf-book.formulas")).unwrap().formulas;

    let full = CaseDoc::load(data_dir().join("cases/itikaf.case.json")).unwrap();
    assert_eq!(full.mode, Mode::Inverse);
    let c = full.run(&sen).unwrap();
    assert_eq!(c.derived, parse_formula("Fs -> Fv").unwrap());
    assert!(validate_analogy(&c, &sen).unwrap().is_valid());

    let truncated = CaseDoc::load(data_dir().join("cases/itikaf-book.case.json")).unwrap();
    let c = truncated.run(&[]).unwrap();
    assert!(!validate_analogy(&c, &book).unwrap().is_valid());

    let ugh = CaseDoc::load(data_dir().join("cases/ugh.case.json")).unwrap();
    let c = ugh.run(&[]).unwrap();
    assert_eq!(c.derived, parse_formula("Beating -> Forbidden").unwrap());
}

#[test]
fn shipped_automata_and_logs() {
    let shafii = Automaton::load(data_dir().join("automata/wudu-shafii.automaton.json")).unwrap();
    let hanafi = Automaton::load(data_dir().join("automata/wudu-hanafi.automaton.json")).unwrap();
    assert_eq!(shafii.mode, FsmMode::DeterministicOrdered);
    assert_eq!(hanafi.mode, FsmMode::Unordered);
    assert_eq!(shafii.obligatory().count(), 5);
    let ids = |a: &Automaton| a.obligatory().map(|x| x.id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&shafii), ids(&hanafi));
    assert!(shafii.answers_to("wudu"));
    assert!(shafii.check_deterministic());
    assert!(!hanafi.check_deterministic());

    let replay = |a: &Automaton, log: &str| a.replay(&parse_log(&read(&format!("logs/{log}"))).unwrap()).unwrap();
    assert_eq!(replay(&shafii, "ordered.log").status, SessionStatus::Valid);
    assert_eq!(replay(&shafii, "out-of-order.log").status, SessionStatus::InProgress);
    assert_eq!(replay(&shafii, "recovered.log").status, SessionStatus::Valid);
    assert_eq!(replay(&shafii, "invalidated.log").status, SessionStatus::Invalidated);
    assert_eq!(replay(&hanafi, "out-of-order.log").status, SessionStatus::InProgress);
}

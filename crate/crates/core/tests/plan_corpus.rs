use cram_core::data::{validate_with_library, PLAN_CORPUS, PLAN_LIBRARY, SCENARIOS};
use cram_core::plan_lang::{parse_plan, unparse_plan};

fn all_plans() -> Vec<(String, &'static str)> {
    let mut v: Vec<(String, &'static str)> = PLAN_CORPUS.iter().map(|(n, t)| (n.to_string(), *t)).collect();
    v.extend(SCENARIOS.iter().map(|s| (format!("scenario {}", s.name), s.plan)));
    v.push(("library".into(), PLAN_LIBRARY));
    v
}

#[test]
fn corpus_is_large_enough() {
    assert!(all_plans().len() >= 20);
}

#[test]
fn every_plan_round_trips() {
    for (name, text) in all_plans() {
        let ast = parse_plan(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = unparse_plan(&ast);
        let again = parse_plan(&printed).unwrap_or_else(|e| panic!("{name} reprint: {e}\n{printed}"));
        assert_eq!(ast, again, "{name}");
        assert_eq!(printed, unparse_plan(&again), "{name}: printing is not a fixed point");
    }
}

#[test]
fn every_plan_validates() {
    for (name, text) in all_plans() {
        let diags = validate_with_library(&parse_plan(text).unwrap());
        assert!(diags.is_empty(), "{name}: {diags:?}");
    }
}

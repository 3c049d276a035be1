use cram_core::data::{scenario, world, KITCHEN_WORLD, PLAN_CORPUS, SCENARIOS};
use cram_core::executive::{Interpreter, Labels};
use cram_core::knowledge::GenerativeModel;
use cram_core::neem::{export_neem, import_neem, replay_neem, NodeStatus};
use cram_core::plan_lang::parse_plan;
use cram_core::world::WorldState;

#[test]
fn corpus_plans_run_and_replay() {
    let interp = Interpreter::kitchen();
    let w = WorldState::load_str(KITCHEN_WORLD).unwrap();
    for (name, text) in PLAN_CORPUS {
        let ast = parse_plan(text).unwrap();
        let out = interp.run(&ast, &w, &GenerativeModel::Epl, 5, &Labels::default());
        assert!(out.status.is_terminal(), "{name}");
        let text = export_neem(&out.neem);
        let neem = import_neem(&text).unwrap();
        let replayed = replay_neem(&neem).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(replayed.fingerprint(), out.world.fingerprint(), "{name}");
    }
}

#[test]
fn scenarios_succeed_on_a_few_seeds() {
    let interp = Interpreter::kitchen();
    for s in SCENARIOS {
        let w = WorldState::load_str(world(s.world).unwrap()).unwrap();
        let ast = parse_plan(s.plan).unwrap();
        for seed in 0..3 {
            let out = interp.run(&ast, &w, &GenerativeModel::Epl, seed, &Labels::default());
            assert!(out.success(), "{} seed {seed}: {:?}", s.name, out.status);
            assert!(!out.goals.is_empty());
        }
    }
}

#[test]
fn milk_from_fridge_needs_repositions() {
    let s = scenario("milk-from-fridge").unwrap();
    let w = WorldState::load_str(world(s.world).unwrap()).unwrap();
    let ast = parse_plan(s.plan).unwrap();
    let interp = Interpreter::kitchen();
    let total: u32 = (0..20).map(|seed| interp.run(&ast, &w, &GenerativeModel::Epl, seed, &Labels::default()).metrics.repositions).sum();
    assert!(total > 0);
}

#[test]
fn uninformed_fails_where_epl_succeeds() {
    let s = scenario("milk-from-fridge").unwrap();
    let w = WorldState::load_str(world(s.world).unwrap()).unwrap();
    let ast = parse_plan(s.plan).unwrap();
    let out = Interpreter::kitchen().run(&ast, &w, &GenerativeModel::Uninformed, 0, &Labels::default());
    assert_ne!(out.status, NodeStatus::Succeeded);
}

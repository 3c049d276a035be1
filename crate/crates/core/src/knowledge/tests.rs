use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::contextualizer::{formulate_parameter_query, instantiate_plan, ParamQuery};
use crate::data::{library, KITCHEN_WORLD};
use crate::failure::FailureKind;
use crate::geom::Pose;
use crate::neem::{Combo, ContextKey};
use crate::plan_lang::{Bindings, ControlNode, Value};
use crate::world::{ArmSel, Grasp, WorldState};

fn kitchen() -> WorldState {
    WorldState::load_str(KITCHEN_WORLD).unwrap()
}

fn goal(text: &str) -> Atom {
    parse_goal(text).unwrap()
}

fn answers(kb: &KnowledgeBase, w: &WorldState, g: &str, var: &str) -> Vec<String> {
    kb.query(&[goal(g)], w).solutions.iter().map(|s| s[var].to_string()).collect()
}

#[test]
fn likely_location_chains_facts() {
    let w = kitchen();
    let mut kb = KnowledgeBase::new();
    kb.load_str(
        "(rule (likely-location ?x ?l) (category ?x ?c) (stored-in ?c ?l))
         (fact (category spoon-1 spoon))
         (fact (stored-in spoon drawer-3))",
    )
    .unwrap();
    assert_eq!(answers(&kb, &w, "(likely-location spoon-1 ?l)", "l"), ["drawer-3"]);
    assert!(kb.query(&[goal("(nothing-here ?x)")], &w).solutions.is_empty());
}

#[test]
fn kitchen_knowledge_uses_computables() {
    let w = kitchen();
    let kb = KnowledgeBase::kitchen();
    assert_eq!(answers(&kb, &w, "(likely-location milk-1 ?l)", "l"), ["fridge"]);
    assert_eq!(answers(&kb, &w, "(inside ?o fridge)", "o"), ["milk-1", "juice-1"]);
    assert_eq!(answers(&kb, &w, "(on ?o sideboard-top)", "o"), ["mug-1", "tray-1"]);
}

#[test]
fn grasp_rules() {
    let w = kitchen();
    let kb = KnowledgeBase::kitchen();
    assert_eq!(epl_grasp(&kb, &w, "spoon-1"), Grasp::Top);
    assert_eq!(epl_grasp(&kb, &w, "tray-1"), Grasp::TwoHand);
    assert_eq!(epl_grasp(&kb, &w, "mug-1"), Grasp::Side);
    assert_eq!(epl_grasp(&kb, &w, "milk-1"), Grasp::Side);
}

#[test]
fn retract_is_idempotent_and_assert_is_set_like() {
    let w = kitchen();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut kb = KnowledgeBase::new();
    let mut model: BTreeSet<(u32, u32)> = BTreeSet::new();
    for _ in 0..2000 {
        let (a, b) = (rng.gen_range(0..4u32), rng.gen_range(0..4u32));
        let fact = Atom::new("r", vec![Term::sym(format!("c{a}")), Term::sym(format!("c{b}"))]);
        if rng.gen_bool(0.5) {
            kb.assert_fact(fact).unwrap();
            model.insert((a, b));
        } else {
            kb.retract_fact(&fact);
            model.remove(&(a, b));
        }
        assert_eq!(kb.query(&[goal("(r ?x ?y)")], &w).solutions.len(), model.len());
    }
}

#[test]
fn registration_errors() {
    let mut kb = KnowledgeBase::kitchen();
    let eval: Evaluator = std::sync::Arc::new(|_: &[Term], _: &WorldState| Vec::new());
    assert!(matches!(kb.register_computable("on", 2, eval.clone()), Err(KbError::DuplicateRegistration(_))));
    assert!(matches!(kb.register_computable("stored-in", 2, eval), Err(KbError::DuplicateRegistration(_))));
    assert!(matches!(kb.assert_fact(goal("(on a b)")), Err(KbError::ComputableHead(_))));
    assert!(matches!(kb.assert_fact(goal("(p ?x)")), Err(KbError::NotGround(_))));
}

#[test]
fn depth_limit_is_flagged() {
    let w = kitchen();
    let mut kb = KnowledgeBase::new();
    kb.load_str("(rule (loop ?x) (loop ?x)) (fact (loop a))").unwrap();
    let a = kb.query(&[goal("(loop ?x)")], &w);
    assert!(a.depth_exceeded);
    assert!(!a.solutions.is_empty());
}

#[test]
fn computables_pass_through_to_the_world() {
    let w = kitchen();
    let kb = KnowledgeBase::kitchen();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let p = Pose::new(rng.gen_range(0.0..6.0), rng.gen_range(0.0..5.0), 0.0, rng.gen_range(-3.1..3.1));
        let o = &w.objects[rng.gen_range(0..w.objects.len())].id;
        let visible = kb.query(&[Atom::new("visible-from", vec![Term::Pose(p), Term::sym(o)])], &w);
        assert_eq!(!visible.solutions.is_empty(), w.visible_from(&p, o).unwrap());
        let reach = kb.query(&[Atom::new("reachable-from", vec![Term::Pose(p), Term::sym(o), Term::sym("right")])], &w);
        let target = w.object(o).unwrap().pose;
        assert_eq!(!reach.solutions.is_empty(), w.reachable_from(&p, &target, ArmSel::Right));
    }
}

/// Least Herbrand model by naive forward chaining over non-recursive rules.
fn herbrand(facts: &[(usize, [usize; 2])], rules: &[Rule]) -> BTreeSet<(usize, [usize; 2])> {
    let mut model: BTreeSet<(usize, [usize; 2])> = facts.iter().copied().collect();
    loop {
        let mut added = false;
        for r in rules {
            let snapshot: Vec<_> = model.iter().copied().collect();
            for &(p1, a1) in &snapshot {
                for &(p2, a2) in &snapshot {
                    if p1 != r.body[0].0 || p2 != r.body[1].0 {
                        continue;
                    }
                    // Variables 0..3; body args name variables.
                    let mut env = [None; 4];
                    let ok = r.body[0].1.iter().zip(a1).chain(r.body[1].1.iter().zip(a2)).all(|(v, c)| {
                        match env[*v] {
                            Some(x) => x == c,
                            None => {
                                env[*v] = Some(c);
                                true
                            }
                        }
                    });
                    if ok {
                        let head = (r.head.0, [env[r.head.1[0]].unwrap(), env[r.head.1[1]].unwrap()]);
                        added |= model.insert(head);
                    }
                }
            }
        }
        if !added {
            return model;
        }
    }
}

struct Rule {
    head: (usize, [usize; 2]),
    body: [(usize, [usize; 2]); 2],
}

#[test]
fn sld_matches_herbrand_model() {
    let w = kitchen();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sym = |c: usize| Term::sym(format!("k{c}"));
    let var = |v: usize| Term::var(&format!("v{v}"));
    for _ in 0..300 {
        let mut kb = KnowledgeBase::new();
        let facts: Vec<(usize, [usize; 2])> =
            (0..rng.gen_range(0..=8)).map(|_| (rng.gen_range(0..2), [rng.gen_range(0..3), rng.gen_range(0..3)])).collect();
        for (p, a) in &facts {
            kb.assert_fact(Atom::new(&format!("p{p}"), vec![sym(a[0]), sym(a[1])])).unwrap();
        }
        // Heads are in a higher stratum than bodies, so resolution terminates.
        let rules: Vec<Rule> = (0..rng.gen_range(0..=4))
            .map(|i| {
                let head_pred = 2 + i;
                let mut body_pred = || rng.gen_range(0..head_pred);
                let b0 = (body_pred(), [rng.gen_range(0..4), rng.gen_range(0..4)]);
                let b1 = (rng.gen_range(0..head_pred), [rng.gen_range(0..4), rng.gen_range(0..4)]);
                let bound: Vec<usize> = b0.1.iter().chain(b1.1.iter()).copied().collect();
                let head = (head_pred, [bound[rng.gen_range(0..4)], bound[rng.gen_range(0..4)]]);
                Rule { head, body: [b0, b1] }
            })
            .collect();
        for r in &rules {
            let atom = |(p, a): (usize, [usize; 2])| Atom::new(&format!("p{p}"), vec![var(a[0]), var(a[1])]);
            kb.add_rule(atom(r.head), vec![atom(r.body[0]), atom(r.body[1])]).unwrap();
        }
        let model = herbrand(&facts, &rules);
        let pred = rng.gen_range(0..2 + rules.len());
        let got: BTreeSet<[String; 2]> = kb
            .query(&[Atom::new(&format!("p{pred}"), vec![var(0), var(1)])], &w)
            .solutions
            .iter()
            .map(|s| [s["v0"].to_string(), s["v1"].to_string()])
            .collect();
        let want: BTreeSet<[String; 2]> =
            model.iter().filter(|(p, _)| *p == pred).map(|(_, a)| [format!("k{}", a[0]), format!("k{}", a[1])]).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn experience_rate_formula() {
    let mut m = ExperienceModel::new(0.5);
    let key = TrialKey {
        action: "picking-up".into(),
        context: ContextKey { category: "spoon".into(), source: "drawer".into(), destination: "table".into() },
        combo: Combo { arm: ArmSel::Right, grasp: Some(Grasp::Top), ring: 0, heading: 3 },
    };
    assert_eq!(m.rate(&key), 0.5);
    m.record(key.clone(), true);
    assert!((m.rate(&key) - 1.5 / 2.0).abs() < 1e-12);
    let json = serde_json::to_string(&m).unwrap();
    assert_eq!(serde_json::from_str::<ExperienceModel>(&json).unwrap(), m);
}

fn spoon_query(w: &WorldState) -> ParamQuery {
    let args = Bindings::new()
        .with("object-to-be-fetched", Value::symbol("spoon-1"))
        .with("destination", Value::pose(Pose::new(2.3, 1.9, 0.75, 0.0)));
    let _ = w;
    formulate_parameter_query(&instantiate_plan(&library(), "fetch&place", &args).unwrap())
}

#[test]
fn roles_of_fetch_and_place() {
    let w = kitchen();
    let q = spoon_query(&w);
    let roles = infer_roles(&q, &w);
    assert!(roles.unknown.is_empty());
    assert_eq!(roles.locations.len(), 2);
    let fetch = &roles.locations[0];
    assert_eq!(fetch.var, "location-at-which-to-fetch");
    assert_eq!(fetch.targets[0].through.as_deref(), Some("drawer-3"));
    assert_eq!(fetch.targets[0].context, ContextKey { category: "spoon".into(), source: "drawer".into(), destination: "table".into() });
    assert_eq!(roles.arms.len(), 1);
    assert_eq!(roles.lifts, ["lift-pose-to-be-used"]);
}

fn resolve(gm: &GenerativeModel, seed: u64, projector: Option<&mut dyn Projector>) -> Result<Resolution, FailureKind> {
    let w = kitchen();
    let kb = KnowledgeBase::kitchen();
    let q = spoon_query(&w);
    resolve_designator_parameters(&q, gm, QueryContext { belief: &w, kb: &kb, seed, projector })
}

#[test]
fn epl_answers_are_total_and_deterministic() {
    let q = spoon_query(&kitchen());
    let a = resolve(&GenerativeModel::Epl, 1, None).unwrap();
    assert!(q.is_total(&a.bindings));
    assert_eq!(a.bindings.get("grasp-pose").and_then(Value::as_symbol), Some("top"));
    assert_eq!(a, resolve(&GenerativeModel::Epl, 1, None).unwrap());
}

#[test]
fn uninformed_samples_within_budget() {
    let q = spoon_query(&kitchen());
    let a = resolve(&GenerativeModel::Uninformed, 9, None).unwrap();
    assert!(q.is_total(&a.bindings));
    assert!(a.samples >= 1 && a.samples <= UNINFORMED_SAMPLE_BUDGET);
}

struct Scripted(Vec<bool>, usize);

impl Projector for Scripted {
    fn project(&mut self, _: &[ControlNode], _: &WorldState) -> Result<(), FailureKind> {
        self.1 += 1;
        if self.0[self.1 - 1] {
            Ok(())
        } else {
            Err(FailureKind::Unreachable)
        }
    }
}

#[test]
fn prospective_returns_first_projected_success() {
    let gm = GenerativeModel::Prospective { budget: 5 };
    let mut p = Scripted(vec![false, false, true, true, true], 0);
    let a = resolve(&gm, 4, Some(&mut p)).unwrap();
    assert_eq!(a.projections, 3);
    let mut none = Scripted(vec![false; 5], 0);
    let fallback = resolve(&gm, 4, Some(&mut none)).unwrap();
    assert_eq!(fallback.projections, 5);
    assert_eq!(fallback.bindings, resolve(&GenerativeModel::Epl, 4, None).unwrap().bindings);
    assert_ne!(a.bindings, fallback.bindings);
}

#[test]
fn experience_prefers_successful_combos() {
    let w = kitchen();
    let kb = KnowledgeBase::kitchen();
    let q = spoon_query(&w);
    let epl = resolve(&GenerativeModel::Epl, 2, None).unwrap();
    let roles = infer_roles(&q, &w);
    // Penalize the stance epl would pick.
    let stance = |b: &Bindings| {
        b.get("location-at-which-to-fetch").and_then(Value::as_designator).and_then(|d| d.get("prefer")).and_then(Value::as_pose).unwrap()
    };
    let s = stance(&epl.bindings);
    let t = &roles.locations[0].targets[0];
    let (ring, heading) = crate::contextualizer::stance_combo(t.point.xy(), &s);
    let arm = proximity_arm(&w, "spoon-1", &s);
    let mut m = ExperienceModel::new(1.0);
    for _ in 0..5 {
        m.record(
            TrialKey { action: t.action.clone(), context: t.context.clone(), combo: Combo { arm, grasp: Some(Grasp::Top), ring, heading } },
            false,
        );
    }
    let gm = GenerativeModel::Experience(std::sync::Arc::new(m));
    let a = resolve_designator_parameters(&q, &gm, QueryContext { belief: &w, kb: &kb, seed: 2, projector: None }).unwrap();
    assert_ne!(stance(&a.bindings), s);
}

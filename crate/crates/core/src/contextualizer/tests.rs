use std::collections::BTreeSet;

use super::*;
use crate::data::{library, KITCHEN_WORLD};
use crate::failure::FailureKind;
use crate::geom::Pose;
use crate::plan_lang::{free_variables, parse_plan, parse_value, Value};
use crate::vocab::{MotionType, ATOMIC_ACTIONS, COMPOSITE_ACTIONS};
use crate::world::{to_local, Arm, ArmSel, WorldState};

fn kitchen() -> WorldState {
    WorldState::load_str(KITCHEN_WORLD).unwrap()
}

fn desig(text: &str) -> Designator {
    match parse_value(text).unwrap() {
        Value::Desig(d) => d,
        other => panic!("{other:?}"),
    }
}

fn names(vs: &[Variable]) -> Vec<String> {
    vs.iter().map(|v| v.name().to_string()).collect()
}

const QUERY_VARS: [&str; 6] = [
    "location-at-which-to-fetch",
    "arm-to-be-used",
    "grasp-pose",
    "lift-pose-to-be-used",
    "location-at-which-to-place",
    "lower-pose-to-be-used",
];

fn fetch_args() -> Bindings {
    Bindings::new()
        .with("object-to-be-fetched", Value::symbol("bowl-1"))
        .with("destination", Value::pose(Pose::new(2.55, 1.85, 0.75, 0.0)))
}

#[test]
fn instantiation_leaves_query_variables_free() {
    let lib = library();
    let plan = instantiate_plan(&lib, "fetch&place", &fetch_args()).unwrap();
    let q = formulate_parameter_query(&plan);
    assert_eq!(names(&q.variables), QUERY_VARS);
    assert_eq!(q.to_succeed, plan.body);
    // Oracle: free variables of the schema minus the bound formals.
    let def = lib.iter().find(|d| d.name == "fetch&place").unwrap();
    let schema_vars: BTreeSet<String> = names(&free_variables(&PlanAst::from_root(ControlNode::Seq(def.body.clone()))))
        .into_iter()
        .collect();
    let expected: BTreeSet<String> =
        schema_vars.into_iter().filter(|v| v != "object-to-be-fetched" && v != "destination").collect();
    assert_eq!(names(&q.variables).into_iter().collect::<BTreeSet<_>>(), expected);
    assert_eq!(names(&def.query_variables), QUERY_VARS);
}

#[test]
fn zero_formal_schema_is_unchanged() {
    let ast = parse_plan("(def-plan idle () (sleep 2))").unwrap();
    let plan = instantiate_plan(&ast.definitions, "idle", &Bindings::new()).unwrap();
    assert_eq!(plan.body, ast.definitions[0].body);
    assert!(formulate_parameter_query(&plan).variables.is_empty());
}

#[test]
fn instantiation_errors() {
    let lib = library();
    assert_eq!(
        instantiate_plan(&lib, "juggling", &Bindings::new()),
        Err(ContextError::UnknownSchema("juggling".into()))
    );
    let partial = Bindings::new().with("object-to-be-fetched", Value::symbol("bowl-1"));
    assert!(matches!(
        instantiate_plan(&lib, "fetch&place", &partial),
        Err(ContextError::MissingArgument { argument, .. }) if argument == "destination"
    ));
}

#[test]
fn ground_query_has_no_variables() {
    let lib = library();
    let plan = instantiate_plan(&lib, "fetch&place", &fetch_args()).unwrap();
    let q = formulate_parameter_query(&plan);
    let b: Bindings = QUERY_VARS
        .iter()
        .map(|v| {
            let value = match *v {
                "arm-to-be-used" => Value::symbol("right"),
                "grasp-pose" => Value::symbol("side"),
                "lift-pose-to-be-used" | "lower-pose-to-be-used" => Value::number(0.1),
                _ => Value::pose(Pose::new(2.0, 3.0, 0.0, 0.0)),
            };
            (*v, value)
        })
        .collect();
    assert!(q.is_total(&b));
    let grounded = InstantiatedPlan { schema: q.schema.clone(), body: q.ground(&b).unwrap() };
    assert!(formulate_parameter_query(&grounded).variables.is_empty());
}

#[test]
fn atomic_resolution_follows_the_table() {
    for (atomic, motion) in ATOMIC_ACTIONS {
        let d = Designator::action(atomic).with("arm", Value::symbol("left"));
        let m = resolve_atomic_to_motion(&d).unwrap();
        assert_eq!(m.type_name(), Some(motion.as_str()));
        assert_eq!(m.symbol("arm"), Some("left"));
    }
    assert!(matches!(
        resolve_atomic_to_motion(&Designator::action("teleporting")),
        Err(ContextError::UnknownAtomicAction(_))
    ));
}

#[test]
fn picking_up_expands_to_reach_grip_lift() {
    let h = ActionHierarchy::reference();
    let d = desig("(an action (type picking-up) (object spoon-1) (arm right) (grasp top))");
    let tree = expand_action_designator(&d, &h).unwrap();
    let leaves: Vec<&str> = tree.leaves().iter().map(|l| l.designator.type_name().unwrap()).collect();
    for t in ["reaching", "gripping", "lifting"] {
        assert!(leaves.contains(&t), "{leaves:?}");
    }
    for l in tree.leaves() {
        assert_eq!(l.designator.symbol("object"), Some("spoon-1"));
        assert_eq!(l.designator.symbol("arm"), Some("right"));
    }
    assert_eq!(tree.guards, vec![Guard::ObjectNotHeld]);
}

#[test]
fn atomic_designator_is_a_single_leaf() {
    let h = ActionHierarchy::reference();
    let d = desig("(an action (type looking) (target (pose 1 1 1 0)))");
    let tree = expand_action_designator(&d, &h).unwrap();
    assert!(tree.is_leaf());
    assert_eq!(tree.designator, d);
}

#[test]
fn every_expansion_ends_in_atomic_actions() {
    let h = ActionHierarchy::reference();
    let atomic: BTreeSet<&str> = ATOMIC_ACTIONS.iter().map(|(a, _)| *a).collect();
    let mut composite: Vec<&str> = h.composite_types();
    composite.sort();
    let mut shipped = COMPOSITE_ACTIONS.to_vec();
    shipped.sort();
    assert_eq!(composite, shipped);
    let mut reached = BTreeSet::new();
    for t in composite {
        let tree = expand_action_designator(&Designator::action(t), &h).unwrap();
        for l in tree.leaves() {
            let lt = l.designator.type_name().unwrap();
            assert!(atomic.contains(lt), "{t} -> {lt}");
            reached.insert(lt.to_string());
        }
    }
    assert!(reached.len() >= 12, "{reached:?}");
    assert!(matches!(
        expand_action_designator(&Designator::action("dancing"), &h),
        Err(HierarchyError::UnknownActionType(_))
    ));
}

#[test]
fn placing_keeps_destination_for_putting() {
    let h = ActionHierarchy::reference();
    let d = desig("(an action (type placing) (object spoon-1) (target (a location (pose 2.3 1.9 0.75 0))) (arm right))");
    let tree = expand_action_designator(&d, &h).unwrap();
    let putting = tree.leaves().into_iter().find(|l| l.designator.type_name() == Some("putting")).unwrap();
    assert_eq!(putting.designator.symbol("target"), Some("$destination"));
    assert_eq!(location_pose(putting.designator.get("destination").unwrap()), Some(Pose::new(2.3, 1.9, 0.75, 0.0)));
}

#[test]
fn cyclic_hierarchy_is_rejected() {
    let text = r#"
inherit = []
[[action]]
type = "a"
steps = [{ type = "b" }]
[[action]]
type = "b"
steps = [{ type = "a" }]
"#;
    assert!(matches!(ActionHierarchy::from_toml(text), Err(HierarchyError::Cycle(_))));
    let dangling = "inherit = []\n[[action]]\ntype = \"a\"\nsteps = [{ type = \"flying\" }]\n";
    assert!(matches!(ActionHierarchy::from_toml(dangling), Err(HierarchyError::Dangling { .. })));
}

#[test]
fn reachable_for_stream_yields_reachable_poses() {
    let w = kitchen().with_open("drawer-3");
    let d = Value::Desig(desig("(a location (reachable-for spoon-1))"));
    let stream = resolve_location_designator(&d, &w, 7).unwrap();
    let spoon = w.object("spoon-1").unwrap().pose;
    let poses: Vec<Pose> = stream.collect();
    assert!(!poses.is_empty());
    for p in poses {
        assert!(w.reachable_from(&p, &spoon, ArmSel::Right));
        assert!(w.standable(p.xy()));
    }
}

#[test]
fn closed_fridge_hides_milk() {
    let w = kitchen();
    let d = Value::Desig(desig("(a location (visible-for milk-1))"));
    assert_eq!(resolve_location_designator(&d, &w, 1).err(), Some(FailureKind::NoSolution));
    let through = Value::Desig(desig("(a location (visible-for milk-1) (through fridge))"));
    let open = w.with_open("fridge");
    let poses: Vec<Pose> = resolve_location_designator(&through, &w, 1).unwrap().collect();
    assert!(!poses.is_empty());
    for p in &poses {
        assert!(open.visible_from(p, "milk-1").unwrap());
        assert!(open.standable(p.xy()));
    }
}

#[test]
fn streams_are_seeded() {
    let w = kitchen();
    let d = Value::Desig(desig("(a location (visible-for cereal-1))"));
    let a: Vec<Pose> = resolve_location_designator(&d, &w, 3).unwrap().collect();
    let b: Vec<Pose> = resolve_location_designator(&d, &w, 3).unwrap().collect();
    let c: Vec<Pose> = resolve_location_designator(&d, &w, 4).unwrap().collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut sa: Vec<String> = a.iter().map(|p| format!("{p:?}")).collect();
    let mut sc: Vec<String> = c.iter().map(|p| format!("{p:?}")).collect();
    sa.sort();
    sc.sort();
    assert_eq!(sa, sc);
}

#[test]
fn preferred_pose_comes_first_and_satisfies() {
    let w = kitchen();
    let first = resolve_location_designator(&Value::Desig(desig("(a location (visible-for cereal-1))")), &w, 0)
        .unwrap()
        .next()
        .unwrap();
    let d = desig("(a location (visible-for cereal-1))").with("prefer", Value::pose(first));
    let mut s = resolve_location_designator(&Value::Desig(d), &w, 99).unwrap();
    assert!(s.satisfied_by(&first));
    assert_eq!(s.next(), Some(first));
    assert!(s.all(|p| p.xy().dist(first.xy()) > 1e-9));
}

#[test]
fn placement_stream_stays_on_surface() {
    let w = kitchen();
    let d = Value::Desig(desig("(a location (on table-top) (next-to mug-1))"));
    assert!(resolve_location_designator(&d, &w, 0).is_err());
    let d = Value::Desig(desig("(a location (on table-top))"));
    let table = w.support("table-top").unwrap();
    for p in resolve_location_designator(&d, &w, 0).unwrap().take(50) {
        assert!(table.polygon.contains(p.xy()));
        assert_eq!(p.z, table.z);
    }
}

#[test]
fn stance_combo_inverts_ring_generation() {
    let c = crate::geom::Vec2::new(1.0, 1.0);
    for (i, r) in RADII.iter().enumerate() {
        for h in 0..HEADINGS {
            let a = h as f64 * std::f64::consts::TAU / HEADINGS as f64;
            let base = Pose::new(c.x + r * a.cos(), c.y + r * a.sin(), 0.0, 0.0);
            assert_eq!(stance_combo(c, &base), (i, h));
        }
    }
}

#[test]
fn grounding_reaching_and_container_arm() {
    let mut w = kitchen().with_open("drawer-3");
    let h = ActionHierarchy::reference();
    let d = desig("(an action (type picking-up) (object (an object (type spoon-1))) (arm right) (grasp top))");
    let tree = expand_action_designator(&d, &h).unwrap();
    let leaves = tree.leaves();
    let reach = leaves
        .iter()
        .find(|l| l.designator.type_name() == Some("reaching") && l.designator.symbol("target") == Some("$object"))
        .unwrap();
    let cmd = ground_atomic(&reach.designator, &w).unwrap();
    let spoon = w.object("spoon-1").unwrap().pose;
    assert_eq!(cmd.motion, MotionType::MovingTcp);
    assert!((cmd.params.target.unwrap().z - (spoon.z + 0.05)).abs() < 1e-12);

    // With the right hand busy the drawer is closed by the left one.
    let base = w.robot.base;
    w.robot.arm_mut(Arm::Right).held = Some("spoon-1".into());
    w.robot.arm_mut(Arm::Right).tool = to_local(&base, &spoon);
    let close = leaves.iter().find(|l| l.designator.type_name() == Some("closing")).unwrap();
    assert!(close.guards.iter().all(|g| guard_holds(*g, &close.designator, &w)));
    let cmd = ground_atomic(&close.designator, &w).unwrap();
    assert_eq!(cmd.params.arm, Some(ArmSel::Left));
    assert_eq!(cmd.params.container.as_deref(), Some("drawer-3"));
    assert!(!guard_holds(Guard::ObjectNotHeld, &d, &w));
}

fn transport(obj: &str, x: f64) -> String {
    format!("(perform (an action (type fetch&place) (object-to-be-fetched {obj}) (destination (pose {x} 1.85 0.75 0))))")
}

#[test]
fn navigation_merge() {
    let src = "(with-robot-at-location (pose 1 1 0 0) (perform (an action (type looking) (target (pose 1 2 1 0)))))
               (with-robot-at-location (pose 1 1 0 0) (perform (an action (type detecting) (object cup))))
               (with-robot-at-location (pose 2 1 0 0) (sleep 1))";
    let ast = parse_plan(src).unwrap();
    let (out, applied) = apply_plan_transformations(&ast, &[TransformRule::MergeNavigation], &[], &kitchen());
    let ControlNode::Seq(items) = &out.root else { panic!() };
    assert_eq!(items.len(), 2);
    assert_eq!(applied.len(), 1);
    assert!(crate::plan_lang::validate_plan(&out).is_empty());
}

#[test]
fn batching_needs_shared_surfaces() {
    let mut w = kitchen();
    let counter = w.object("cereal-1").unwrap().pose;
    let bowl = w.object_mut("bowl-1").unwrap();
    bowl.pose = Pose::new(1.2, 4.6, counter.z, 0.0);
    bowl.support = Some("counter-top".into());
    let lib = library();
    let src = format!("{}\n{}\n{}", transport("bowl-1", 2.55), transport("cereal-1", 2.85), transport("mug-1", 2.7));
    let ast = parse_plan(&src).unwrap();
    let (out, applied) = apply_plan_transformations(&ast, &TransformRule::ALL, &lib, &w);
    assert_eq!(applied.len(), 1);
    let ControlNode::Seq(items) = &out.root else { panic!() };
    assert_eq!(items.len(), 2);
    let text = crate::plan_lang::print_control(&items[0]);
    assert!(text.contains("fetch&place-2"), "{text}");
    // Without the batch schema the rule does nothing.
    let (same, none) = apply_plan_transformations(&ast, &TransformRule::ALL, &[], &w);
    assert_eq!(same, ast);
    assert!(none.is_empty());
    // Different sources: no batching on the reference kitchen.
    let (_, none) = apply_plan_transformations(&ast, &TransformRule::ALL, &lib, &kitchen());
    assert!(none.is_empty());
}

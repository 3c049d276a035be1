use std::f64::consts::{FRAC_PI_2, PI};

use super::*;
use crate::data::KITCHEN_WORLD;

fn kitchen() -> WorldState {
    WorldState::load_str(KITCHEN_WORLD).unwrap()
}

fn cmd(motion: MotionType, f: impl FnOnce(&mut MotionParams)) -> MotionCommand {
    let mut c = MotionCommand::new(motion);
    f(&mut c.params);
    c
}

fn going(x: f64, y: f64, yaw: f64) -> MotionCommand {
    cmd(MotionType::Going, |p| p.target = Some(Pose::new(x, y, 0.0, yaw)))
}

fn tcp(arm: ArmSel, target: Pose) -> MotionCommand {
    cmd(MotionType::MovingTcp, |p| {
        p.arm = Some(arm);
        p.target = Some(target);
    })
}

fn open_container(id: &str) -> MotionCommand {
    cmd(MotionType::Opening, |p| {
        p.arm = Some(ArmSel::Right);
        p.container = Some(id.into());
    })
}

const DRAWER_STANCE: (f64, f64, f64) = (0.8, 3.65, FRAC_PI_2);

fn at_drawer() -> WorldState {
    let mut w = kitchen();
    let (x, y, yaw) = DRAWER_STANCE;
    let r = execute_motion(&mut w, None, &going(x, y, yaw), &MotionConfig::default());
    assert_eq!(r.result, Ok(()));
    w
}

#[test]
fn opening_drawer_reveals_spoon() {
    let mut w = at_drawer();
    let base = w.robot.base;
    assert!(!w.visible_from(&base, "spoon-1").unwrap());
    let r = execute_motion(&mut w, None, &open_container("drawer-3"), &MotionConfig::default());
    assert_eq!(r.result, Ok(()));
    let c = w.container("drawer-3").unwrap();
    assert_eq!(c.joint, c.range());
    assert!(r.events.iter().any(|e| e.kind.name() == "door-open"));
    assert!(w.visible_from(&base, "spoon-1").unwrap());
}

#[test]
fn moving_to_current_tool_pose_is_a_no_op() {
    let mut w = kitchen();
    let before = w.clone();
    let here = w.robot.tool_world(Arm::Right);
    let r = execute_motion(&mut w, None, &tcp(ArmSel::Right, here), &MotionConfig::default());
    assert_eq!(r.result, Ok(()));
    assert_eq!(r.events.len(), 1);
    assert_eq!(r.events[0].kind.name(), "pose-reached");
    assert_eq!(w.fingerprint(), before.fingerprint());
}

#[test]
fn going_through_the_table_collides_without_side_effects() {
    let mut w = kitchen();
    w.room.waypoints.clear();
    let before = w.fingerprint();
    let r = execute_motion(&mut w, None, &going(2.6, 0.8, 0.0), &MotionConfig::default());
    assert_eq!(r.result, Err(FailureKind::Collision));
    assert!(r.events.iter().any(|e| e.kind.name() == "collision"));
    assert_eq!(w.fingerprint(), before);
}

#[test]
fn going_routes_around_the_table() {
    let mut w = kitchen();
    let r = execute_motion(&mut w, None, &going(2.6, 0.8, 0.0), &MotionConfig::default());
    assert_eq!(r.result, Ok(()));
    assert_eq!(w.robot.base.xy(), crate::geom::Vec2::new(2.6, 0.8));
}

#[test]
fn going_onto_furniture_collides() {
    let mut w = kitchen();
    let before = w.fingerprint();
    let r = execute_motion(&mut w, None, &going(2.6, 1.6, 0.0), &MotionConfig::default());
    assert_eq!(r.result, Err(FailureKind::Collision));
    assert_eq!(w.fingerprint(), before);
}

#[test]
fn unreachable_target_leaves_world_unchanged() {
    let mut w = kitchen();
    let before = w.fingerprint();
    let far = Pose::new(5.0, 1.0, 0.9, 0.0);
    let r = execute_motion(&mut w, None, &tcp(ArmSel::Right, far), &MotionConfig::default());
    assert_eq!(r.result, Err(FailureKind::Unreachable));
    assert_eq!(w.fingerprint(), before);
}

#[test]
fn step_budget_exhaustion_times_out() {
    let mut w = kitchen();
    let before = w.fingerprint();
    let cfg = MotionConfig { step_budget: 2, ..Default::default() };
    let r = execute_motion(&mut w, None, &going(5.0, 3.2, 0.0), &cfg);
    assert_eq!(r.result, Err(FailureKind::Timeout));
    assert_eq!(w.fingerprint(), before);
}

fn spoon_plan() -> MotionPlan {
    let spoon = Pose::new(0.8, 4.2, 0.7, 0.0);
    let lifted = Pose::new(0.8, 4.2, 0.8, 0.0);
    let place = Pose::new(2.3, 1.9, 0.78, 0.0);
    let right = ArmSel::Right;
    let commands = vec![
        open_container("drawer-3"),
        tcp(right, spoon),
        cmd(MotionType::Gripping, |p| {
            p.arm = Some(right);
            p.grasp = Some(Grasp::Top);
        }),
        tcp(right, lifted),
        cmd(MotionType::MovingTcp, |p| {
            p.arm = Some(right);
            p.local = true;
            p.target = Some(park_pose(Arm::Right));
        }),
        going(2.3, 2.45, -FRAC_PI_2),
        tcp(right, place),
        cmd(MotionType::Opening, |p| p.arm = Some(right)),
    ];
    MotionPlan { phases: commands.into_iter().map(Phase::new).collect() }
}

#[test]
fn pick_and_place_phases_end_on_goal_events() {
    let mut w = at_drawer();
    let plan = spoon_plan();
    let out = execute_motion_plan(&mut w, None, &plan, &MotionConfig::default());
    assert_eq!(out.result, Ok(()), "{:?}", out.events);
    let spoon = w.object("spoon-1").unwrap();
    assert_eq!(spoon.support.as_deref(), Some("table-top"));
    assert!((spoon.pose.z - 0.75).abs() < 1e-9);
    assert!(!spoon.toppled);
    assert!(w.robot.arm(Arm::Right).held.is_none());

    // Boundary k is the step of the first goal event after boundary k-1.
    assert_eq!(out.boundaries.len(), plan.phases.len());
    let mut cursor = 0;
    for (phase, boundary) in plan.phases.iter().zip(&out.boundaries) {
        let idx = out.events[cursor..].iter().position(|e| e.kind.name() == phase.goal_event).unwrap() + cursor;
        assert_eq!(out.events[idx].step, *boundary);
        cursor = idx + 1;
    }
    assert!(out.events.windows(2).all(|p| p[0].step <= p[1].step));
}

#[test]
fn failing_phase_aborts_the_rest() {
    let mut w = kitchen();
    w.room.waypoints.clear();
    let mut plan = spoon_plan();
    plan.phases.insert(0, Phase::new(going(2.6, 0.8, 0.0)));
    let out = execute_motion_plan(&mut w, None, &plan, &MotionConfig::default());
    assert_eq!(out.result, Err(FailureKind::Collision));
    assert!(out.boundaries.is_empty());
    assert!(w.container("drawer-3").unwrap().is_closed());
}

#[test]
fn empty_plan_succeeds() {
    let mut w = kitchen();
    let out = execute_motion_plan(&mut w, None, &MotionPlan::default(), &MotionConfig::default());
    assert_eq!(out.result, Ok(()));
    assert!(out.events.is_empty());
}

#[test]
fn wrong_grasp_slips() {
    let mut w = at_drawer();
    let cfg = MotionConfig::default();
    execute_motion(&mut w, None, &open_container("drawer-3"), &cfg).result.unwrap();
    execute_motion(&mut w, None, &tcp(ArmSel::Right, Pose::new(0.8, 4.2, 0.7, 0.0)), &cfg).result.unwrap();
    let before = w.fingerprint();
    let side = cmd(MotionType::Gripping, |p| p.grasp = Some(Grasp::Side));
    assert_eq!(execute_motion(&mut w, None, &side, &cfg).result, Err(FailureKind::ObjectSlipped));
    let two = cmd(MotionType::Gripping, |p| p.grasp = Some(Grasp::TwoHand));
    assert_eq!(execute_motion(&mut w, None, &two, &cfg).result, Err(FailureKind::ObjectSlipped));
    assert_eq!(w.fingerprint(), before);
}

#[test]
fn gripping_nothing_slips() {
    let mut w = kitchen();
    let r = execute_motion(&mut w, None, &cmd(MotionType::Gripping, |_| {}), &MotionConfig::default());
    assert_eq!(r.result, Err(FailureKind::ObjectSlipped));
}

/// Puts `object` in the right hand at `tool` without going through motions.
fn holding(object: &str, tool: Pose) -> WorldState {
    let mut w = kitchen();
    let base = w.robot.base;
    let a = w.robot.arm_mut(Arm::Right);
    a.held = Some(object.into());
    a.gripper = Gripper::Closed;
    a.tool = to_local(&base, &tool);
    w.object_mut(object).unwrap().support = None;
    w.sync_held();
    w
}

fn release(w: &mut WorldState) -> MotionOutcome {
    let c = cmd(MotionType::MovingGripperJoint, |p| p.gripper = Some(Gripper::Open));
    execute_motion(w, None, &c, &MotionConfig::default())
}

#[test]
fn high_release_topples_round_objects() {
    let mut w = holding("bowl-1", Pose::new(2.6, 1.6, 0.9, 0.0));
    let r = release(&mut w);
    assert_eq!(r.result, Ok(()));
    let bowl = w.object("bowl-1").unwrap();
    assert!(bowl.toppled && !bowl.broken);
    assert_eq!(bowl.support.as_deref(), Some("table-top"));

    let mut w = holding("bowl-1", Pose::new(2.6, 1.6, 0.8, 0.0));
    release(&mut w).result.unwrap();
    let bowl = w.object("bowl-1").unwrap();
    assert!(!bowl.toppled);
}

#[test]
fn release_off_the_edge_breaks_breakables() {
    let mut w = holding("mug-1", Pose::new(1.0, 1.0, 0.8, 0.0));
    let r = release(&mut w);
    assert!(r.events.iter().any(|e| matches!(e.kind, EventKind::Toppled { broken: true, .. })));
    let mug = w.object("mug-1").unwrap();
    assert!(mug.broken && mug.toppled && mug.support.is_none());
    assert_eq!(mug.pose.z, 0.0);
}

#[test]
fn tray_cog_off_the_table_falls() {
    // The tray's COG sits 0.2 ahead of its grasp point.
    let mut w = holding("tray-1", Pose::new(3.1, 1.6, 0.76, 0.0));
    release(&mut w).result.unwrap();
    assert!(w.object("tray-1").unwrap().toppled);
    let mut w = holding("tray-1", Pose::new(2.3, 1.6, 0.76, 0.0));
    release(&mut w).result.unwrap();
    let tray = w.object("tray-1").unwrap();
    assert!(!tray.toppled);
    let mut w = holding("tray-1", Pose::new(2.1, 1.6, 0.76, PI));
    release(&mut w).result.unwrap();
    assert!(w.object("tray-1").unwrap().toppled);
}

/// Independent statement of the grasp rules.
fn expected_grasps(category: &str, purpose: Option<&str>) -> Vec<Grasp> {
    match (category, purpose) {
        ("tray", _) => vec![Grasp::TwoHand],
        ("spoon", _) => vec![Grasp::Top],
        ("mug", Some("pouring")) => vec![Grasp::Side],
        _ => Grasp::ALL.to_vec(),
    }
}

#[test]
fn grasp_rule_table() {
    let w = kitchen();
    let cfg = MotionConfig::default();
    for o in &w.objects {
        for purpose in [None, Some("pouring")] {
            let allowed = expected_grasps(&o.category, purpose);
            for g in Grasp::ALL {
                assert_eq!(
                    check_grasp_compatibility(o, g, purpose, &cfg),
                    allowed.contains(&g),
                    "{} {g} {purpose:?}",
                    o.id
                );
            }
        }
    }
    let spoon = w.object("spoon-1").unwrap();
    assert!(!check_grasp_compatibility(spoon, Grasp::Side, None, &cfg));
    let tray = w.object("tray-1").unwrap();
    assert!(check_grasp_compatibility(tray, Grasp::TwoHand, None, &cfg));
}

#[test]
fn designator_round_trip() {
    let text = "(a motion (type moving-tcp) (arm left) (grasp top) (target (pose 1 2 0.8 0)) (carry upright))";
    let d = match crate::plan_lang::parse_value(text).unwrap() {
        Value::Desig(d) => d,
        other => panic!("{other:?}"),
    };
    let c = MotionCommand::from_designator(&d).unwrap();
    assert_eq!(c.motion, MotionType::MovingTcp);
    assert_eq!(c.params.carry, Some(Carry::Upright));
    assert_eq!(MotionCommand::from_designator(&c.to_designator()).unwrap(), c);
    let json = serde_json::to_string(&c).unwrap();
    assert_eq!(serde_json::from_str::<MotionCommand>(&json).unwrap(), c);
}

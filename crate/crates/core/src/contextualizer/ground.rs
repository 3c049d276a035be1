//! Grounding of atomic action designators into executable motion commands
//! against the belief state.

use thiserror::Error;

use super::hierarchy::Guard;
use crate::failure::FailureKind;
use crate::geom::Pose;
use crate::motion_exec::{Carry, MotionCommand, MotionParams};
use crate::plan_lang::{print_value, Designator, DesignatorKind, Value};
use crate::vocab::{motion_for_atomic, MotionType};
use crate::world::{park_pose, resolve_object, Arm, ArmSel, Gripper, WorldState};

const DEFAULT_LIFT: f64 = 0.1;
const DEFAULT_LOWER: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    #[error("unknown atomic action `{0}`")]
    UnknownAtomicAction(String),
    #[error("cannot ground: {0}")]
    Failure(FailureKind),
}

impl From<FailureKind> for GroundError {
    fn from(k: FailureKind) -> Self {
        GroundError::Failure(k)
    }
}

/// Pose carried by a pose literal or a location designator.
pub fn location_pose(v: &Value) -> Option<Pose> {
    if let Some(p) = v.as_pose() {
        return Some(p);
    }
    let d = v.as_designator().filter(|d| d.kind == DesignatorKind::Location)?;
    ["pose", "prefer"].iter().find_map(|k| d.get(k).and_then(Value::as_pose))
}

/// Container whose fully open interior holds `pose` at the container's floor height.
pub fn target_container(belief: &WorldState, pose: &Pose) -> Option<String> {
    belief
        .containers
        .iter()
        .find(|c| (c.z - pose.z).abs() < 1e-6 && c.interior_at(c.range()).contains(pose.xy()))
        .map(|c| c.id.clone())
}

fn object_of(d: &Designator, belief: &WorldState) -> Option<String> {
    resolve_object(belief, d.get("object")?)
}

pub fn resolve_container(d: &Designator, belief: &WorldState) -> Option<String> {
    match d.symbol("container")? {
        "$source-container" => object_of(d, belief).and_then(|o| belief.container_of(&o).map(|c| c.id.clone())),
        "$target-container" => {
            let dest = ["destination", "target"].iter().find_map(|k| d.get(k).and_then(location_pose))?;
            target_container(belief, &dest)
        }
        id => belief.container(id).map(|c| c.id.clone()),
    }
}

/// Arm named by the designator; container work moves to a free arm when the
/// named one is busy.
pub fn effective_arm(d: &Designator, belief: &WorldState) -> ArmSel {
    let named: ArmSel = d.symbol("arm").and_then(|a| a.parse().ok()).unwrap_or(ArmSel::Right);
    if resolve_container(d, belief).is_none() {
        return named;
    }
    let busy = named.arms().iter().any(|a| belief.robot.arm(*a).held.is_some());
    match (busy, belief.robot.free_arms().first()) {
        (true, Some(free)) => ArmSel::from(*free),
        _ => named,
    }
}

pub fn guard_holds(g: Guard, d: &Designator, belief: &WorldState) -> bool {
    let container = || resolve_container(d, belief).and_then(|c| belief.container(&c).cloned());
    let held = || object_of(d, belief).is_some_and(|o| belief.robot.holding(&o).is_some());
    match g {
        Guard::ContainerClosed => container().is_some_and(|c| c.is_closed()),
        Guard::ContainerOpen => container().is_some_and(|c| !c.is_closed()),
        Guard::FreeArm => !belief.robot.free_arms().is_empty(),
        Guard::ObjectHeld => held(),
        Guard::ObjectNotHeld => !held(),
        Guard::HasLocation => d.get("location").is_some(),
    }
}

fn first_arm(sel: ArmSel) -> Arm {
    sel.arms()[0]
}

/// Resolves a `target` value to a pose; the flag marks base-frame poses.
fn resolve_target(d: &Designator, belief: &WorldState, arm: ArmSel) -> Result<(Pose, bool), FailureKind> {
    let v = d.get("target").ok_or(FailureKind::NoSolution)?;
    let reference = v.as_symbol();
    let pose = match reference {
        Some("$object") => {
            let id = object_of(d, belief).ok_or(FailureKind::PerceptionFailure)?;
            let p = belief.object(&id).ok_or(FailureKind::PerceptionFailure)?.pose;
            Pose::new(p.x, p.y, p.z + d.number("offset").unwrap_or(0.0), p.yaw)
        }
        Some("$handle") => {
            let c = resolve_container(d, belief).ok_or(FailureKind::NoSolution)?;
            belief.container(&c).ok_or(FailureKind::NoSolution)?.handle_now()
        }
        Some("$lift") => {
            let t = belief.robot.tool_world(first_arm(arm));
            Pose::new(t.x, t.y, t.z + d.number("lift-pose").unwrap_or(DEFAULT_LIFT), t.yaw)
        }
        Some("$park") => return Ok((park_pose(first_arm(arm)), true)),
        Some("$destination") => {
            let p = d.get("destination").and_then(location_pose).ok_or(FailureKind::NoSolution)?;
            Pose::new(p.x, p.y, p.z + d.number("lower-pose").unwrap_or(DEFAULT_LOWER), p.yaw)
        }
        Some("$location") => d.get("location").and_then(location_pose).ok_or(FailureKind::NoSolution)?,
        _ => location_pose(v).ok_or(FailureKind::NoSolution)?,
    };
    Ok((pose, false))
}

/// Turns an atomic action designator into a motion command.
pub fn ground_atomic(d: &Designator, belief: &WorldState) -> Result<MotionCommand, GroundError> {
    let t = d.type_name().unwrap_or_default();
    let motion = motion_for_atomic(t).ok_or_else(|| GroundError::UnknownAtomicAction(t.to_string()))?;
    let arm = effective_arm(d, belief);
    let object = object_of(d, belief);
    let mut p = MotionParams {
        arm: Some(arm),
        grasp: d.symbol("grasp").and_then(|g| g.parse().ok()),
        purpose: d.symbol("purpose").map(str::to_string),
        force: d.number("force"),
        ..Default::default()
    };
    match motion {
        MotionType::Going | MotionType::MovingTcp | MotionType::Looking => {
            let (pose, local) = resolve_target(d, belief, arm)?;
            p.target = Some(pose);
            p.local = local;
            if motion == MotionType::MovingTcp {
                let upright = object.as_deref().and_then(|o| belief.object(o)).is_some_and(|o| o.open_container);
                p.carry = Some(if upright { Carry::Upright } else { Carry::Free });
            }
            if motion == MotionType::Going {
                p.arm = None;
            }
        }
        MotionType::Detecting => {
            let query = match d.get("object") {
                Some(v @ Value::Desig(_)) => print_value(v),
                _ => {
                    let id = object.clone().ok_or(FailureKind::PerceptionFailure)?;
                    print_value(&Value::Desig(Designator::object_named(&id)))
                }
            };
            p.query = Some(query);
            p.arm = None;
        }
        MotionType::Gripping => p.object = object,
        MotionType::Opening | MotionType::Closing => {
            p.container = resolve_container(d, belief);
        }
        MotionType::MovingGripperJoint => {
            p.gripper = Some(if d.symbol("gripper") == Some("closed") { Gripper::Closed } else { Gripper::Open });
        }
        MotionType::MovingTorso | MotionType::MovingArmJoints => {}
    }
    Ok(MotionCommand { motion, params: p })
}

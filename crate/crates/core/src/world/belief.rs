use super::{Arm, EventKind, Frame, WorldState};

/// Mirrors one of the robot's own events into a belief state. Changes the
/// robot did not cause or observe are never mirrored.
pub fn update_belief_from_event(belief: &mut WorldState, event: &EventKind) {
    match event {
        EventKind::PoseReached { frame: Frame::Base, pose } => {
            belief.robot.base = *pose;
            belief.sync_held();
        }
        EventKind::PoseReached { frame: Frame::Tool(arm), pose } => {
            let local = super::to_local(&belief.robot.base, pose);
            belief.robot.arm_mut(*arm).tool = local;
            belief.sync_held();
        }
        EventKind::PoseReached { frame: Frame::Gaze, pose } => belief.robot.gaze = Some(pose.xy()),
        EventKind::PoseReached { frame: Frame::Torso, pose } => belief.robot.torso = pose.z,
        EventKind::Contact { arm, object } => {
            belief.robot.arm_mut(*arm).held = Some(object.clone());
            belief.robot.arm_mut(*arm).gripper = super::Gripper::Closed;
            if let Some(o) = belief.object_mut(object) {
                o.support = None;
            }
            belief.sync_held();
        }
        EventKind::Release { arm, .. } => {
            let a = belief.robot.arm_mut(*arm);
            a.held = None;
            a.gripper = super::Gripper::Open;
        }
        EventKind::Placed { object, pose, support } => {
            release_everywhere(belief, object);
            if let Some(o) = belief.object_mut(object) {
                o.pose = *pose;
                o.support = Some(support.clone());
            }
        }
        EventKind::Toppled { object, pose, support, broken } => {
            release_everywhere(belief, object);
            if let Some(o) = belief.object_mut(object) {
                o.pose = *pose;
                o.support = support.clone();
                o.toppled = true;
                o.broken |= *broken;
            }
        }
        EventKind::DoorOpen { container, joint } => belief.set_joint(container, *joint),
        EventKind::DoorClosed { container } => belief.set_joint(container, 0.0),
        EventKind::Gripper { arm, state } => belief.robot.arm_mut(*arm).gripper = *state,
        EventKind::Detected { object, pose } => {
            if let Some(o) = belief.object_mut(object) {
                o.pose = *pose;
            }
        }
        EventKind::Collision { .. } => {}
    }
}

fn release_everywhere(belief: &mut WorldState, object: &str) {
    for arm in Arm::BOTH {
        let a = belief.robot.arm_mut(arm);
        if a.held.as_deref() == Some(object) {
            a.held = None;
        }
    }
}

use serde::{Deserialize, Serialize};

use super::{Arm, Gripper};
use crate::geom::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Base,
    Tool(Arm),
    Gaze,
    Torso,
}

/// Simulator event; `step` is the world clock when it fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventKind {
    PoseReached { frame: Frame, pose: Pose },
    Contact { arm: Arm, object: String },
    Release { arm: Arm, object: String },
    Placed { object: String, pose: Pose, support: String },
    Toppled {
        object: String,
        pose: Pose,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<String>,
        broken: bool,
    },
    DoorOpen { container: String, joint: f64 },
    DoorClosed { container: String },
    Gripper { arm: Arm, state: Gripper },
    Detected { object: String, pose: Pose },
    Collision { with: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PoseReached { .. } => "pose-reached",
            EventKind::Contact { .. } => "contact",
            EventKind::Release { .. } => "release",
            EventKind::Placed { .. } => "placed",
            EventKind::Toppled { .. } => "toppled",
            EventKind::DoorOpen { .. } => "door-open",
            EventKind::DoorClosed { .. } => "door-closed",
            EventKind::Gripper { .. } => "gripper",
            EventKind::Detected { .. } => "detected",
            EventKind::Collision { .. } => "collision",
        }
    }

    /// Events that change the physical world (as opposed to gaze or perception).
    pub fn mutates_world(&self) -> bool {
        !matches!(
            self,
            EventKind::Detected { .. } | EventKind::Collision { .. } | EventKind::PoseReached { frame: super::Frame::Gaze, .. }
        )
    }
}

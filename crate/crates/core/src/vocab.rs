//! Closed vocabularies: atomic action types and the motion designators they
//! resolve to on the robot.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Motion designator types understood by the motion executor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionType {
    Going,
    Looking,
    Detecting,
    MovingTcp,
    Gripping,
    Opening,
    Closing,
    MovingTorso,
    MovingArmJoints,
    MovingGripperJoint,
}

impl MotionType {
    pub const ALL: [MotionType; 10] = [
        MotionType::Going,
        MotionType::Looking,
        MotionType::Detecting,
        MotionType::MovingTcp,
        MotionType::Gripping,
        MotionType::Opening,
        MotionType::Closing,
        MotionType::MovingTorso,
        MotionType::MovingArmJoints,
        MotionType::MovingGripperJoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MotionType::Going => "going",
            MotionType::Looking => "looking",
            MotionType::Detecting => "detecting",
            MotionType::MovingTcp => "moving-tcp",
            MotionType::Gripping => "gripping",
            MotionType::Opening => "opening",
            MotionType::Closing => "closing",
            MotionType::MovingTorso => "moving-torso",
            MotionType::MovingArmJoints => "moving-arm-joints",
            MotionType::MovingGripperJoint => "moving-gripper-joint",
        }
    }
}

impl fmt::Display for MotionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MotionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MotionType::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown motion type `{s}`"))
    }
}

/// Atomic action type → motion designator type. Two motion types
/// (`moving-torso`, `moving-arm-joints`) have no atomic action counterpart.
pub const ATOMIC_ACTIONS: [(&str, MotionType); 15] = [
    ("closing", MotionType::Closing),
    ("detecting", MotionType::Detecting),
    ("going", MotionType::Going),
    ("grasping", MotionType::MovingTcp),
    ("gripping", MotionType::Gripping),
    ("lifting", MotionType::MovingTcp),
    ("looking", MotionType::Looking),
    ("opening", MotionType::Opening),
    ("pulling", MotionType::MovingTcp),
    ("pushing", MotionType::MovingTcp),
    ("putting", MotionType::MovingTcp),
    ("reaching", MotionType::MovingTcp),
    ("releasing", MotionType::Opening),
    ("retracting", MotionType::MovingTcp),
    ("setting-gripper", MotionType::MovingGripperJoint),
];

pub fn motion_for_atomic(action_type: &str) -> Option<MotionType> {
    ATOMIC_ACTIONS
        .iter()
        .find(|(a, _)| *a == action_type)
        .map(|(_, m)| *m)
}

pub fn is_atomic(action_type: &str) -> bool {
    motion_for_atomic(action_type).is_some()
}

/// Composite action types of the shipped action hierarchy.
pub const COMPOSITE_ACTIONS: [&str; 9] = [
    "fetch&place",
    "fetching",
    "placing",
    "picking-up",
    "placing-down",
    "navigating",
    "searching",
    "opening-container",
    "closing-container",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_distinct_atomic_types() {
        let mut names: Vec<_> = ATOMIC_ACTIONS.iter().map(|(a, _)| *a).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 15);
    }

    #[test]
    fn motion_names_round_trip() {
        for m in MotionType::ALL {
            assert_eq!(m.as_str().parse::<MotionType>().unwrap(), m);
        }
    }
}

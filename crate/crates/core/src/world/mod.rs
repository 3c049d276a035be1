//! 2.5D kitchen digital twin: planar footprints with scalar heights,
//! articulated containers and a two-armed mobile robot.
//!
//! The same type serves as ground truth, belief state and projection
//! sandbox. Worlds are stored as TOML; see `data/worlds/kitchen.toml`.

mod belief;
mod event;
mod perception;
mod predicates;
mod snapshot;

pub use belief::update_belief_from_event;
pub use event::{Event, EventKind, Frame};
pub use perception::{examine, matching_objects, perceive_detect, resolve_object, DETECT_ATTRIBUTES};
pub use predicates::{segment_polygon, CONTACT_TOLERANCE, STABILITY_MARGIN};
pub use snapshot::{SnapshotStore, SnapshotToken};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geom::{Polygon, Pose, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("inconsistent world: {0}")]
    Inconsistent(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown snapshot token {0}")]
    UnknownToken(u64),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Left, Arm::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Left => "left",
            Arm::Right => "right",
        }
    }

    /// Lateral sign of the shoulder in the base frame.
    pub fn side(self) -> f64 {
        match self {
            Arm::Left => 1.0,
            Arm::Right => -1.0,
        }
    }
}

/// Arm selection carried by motion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmSel {
    Left,
    Right,
    Both,
}

impl ArmSel {
    pub const ALL: [ArmSel; 3] = [ArmSel::Left, ArmSel::Right, ArmSel::Both];

    pub fn arms(self) -> &'static [Arm] {
        match self {
            ArmSel::Left => &[Arm::Left],
            ArmSel::Right => &[Arm::Right],
            ArmSel::Both => &Arm::BOTH,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArmSel::Left => "left",
            ArmSel::Right => "right",
            ArmSel::Both => "both",
        }
    }
}

impl From<Arm> for ArmSel {
    fn from(a: Arm) -> Self {
        match a {
            Arm::Left => ArmSel::Left,
            Arm::Right => ArmSel::Right,
        }
    }
}

impl fmt::Display for ArmSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArmSel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "left" => Ok(ArmSel::Left),
            "right" => Ok(ArmSel::Right),
            "both" => Ok(ArmSel::Both),
            _ => Err(format!("unknown arm `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grasp {
    Top,
    Side,
    Handle,
    TwoHand,
}

impl Grasp {
    pub const ALL: [Grasp; 4] = [Grasp::Top, Grasp::Side, Grasp::Handle, Grasp::TwoHand];

    pub fn as_str(self) -> &'static str {
        match self {
            Grasp::Top => "top",
            Grasp::Side => "side",
            Grasp::Handle => "handle",
            Grasp::TwoHand => "two-hand",
        }
    }
}

impl fmt::Display for Grasp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Grasp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Grasp::ALL.into_iter().find(|g| g.as_str() == s).ok_or_else(|| format!("unknown grasp `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    /// Roadmap nodes for base paths that cannot go straight.
    pub waypoints: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Surface {
    pub id: String,
    pub polygon: Polygon,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Furniture {
    pub id: String,
    pub class: String,
    pub footprint: Polygon,
    pub height: f64,
    #[serde(default)]
    pub surfaces: Vec<Surface>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Articulation {
    /// Slides along `axis` (unit vector) by up to `range` meters.
    Prismatic { axis: Vec2, range: f64 },
    /// Door panel of length `panel` rotating about `hinge`; at joint 0 the
    /// panel points along `closed-angle`, opening turns it by `direction * joint`.
    #[serde(rename_all = "kebab-case")]
    Revolute { hinge: Vec2, panel: f64, closed_angle: f64, direction: f64, range: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Access {
    Top,
    Front,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Container {
    pub id: String,
    pub class: String,
    pub host: String,
    pub articulation: Articulation,
    pub joint: f64,
    /// Support polygon of the interior with the joint at zero.
    pub interior: Polygon,
    pub z: f64,
    pub access: Access,
    /// Handle position with the joint at zero.
    pub handle: Vec2,
    pub handle_z: f64,
    #[serde(default)]
    pub walls: Vec<Polygon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ObjectInstance {
    pub id: String,
    pub category: String,
    pub pose: Pose,
    /// Convex outline in the object frame.
    pub footprint: Polygon,
    pub height: f64,
    /// Center of gravity in the object frame.
    #[serde(default)]
    pub cog: Vec2,
    #[serde(default)]
    pub flat: bool,
    #[serde(default)]
    pub open_container: bool,
    #[serde(default)]
    pub breakable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    /// Surface or container id; `None` while held or lying on the floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<String>,
    #[serde(default)]
    pub toppled: bool,
    #[serde(default)]
    pub broken: bool,
}

impl ObjectInstance {
    pub fn world_footprint(&self) -> Polygon {
        self.footprint.placed(&self.pose)
    }

    pub fn cog_world(&self, pose: &Pose) -> Vec2 {
        pose.apply(self.cog)
    }

    pub fn cog_offset(&self) -> f64 {
        self.cog.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gripper {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmState {
    pub name: Arm,
    pub gripper: Gripper,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held: Option<String>,
    /// Tool pose in the base frame.
    pub tool: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RobotState {
    pub base: Pose,
    pub torso: f64,
    pub radius: f64,
    pub shoulder_offset: f64,
    pub reach_min: f64,
    pub reach_max: f64,
    pub height_min: f64,
    pub height_max: f64,
    pub camera_height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaze: Option<Vec2>,
    pub arms: Vec<ArmState>,
}

/// Tool pose of a parked arm, in the base frame.
pub fn park_pose(arm: Arm) -> Pose {
    Pose::new(0.2, 0.2 * arm.side(), 1.0, 0.0)
}

impl RobotState {
    pub fn arm(&self, arm: Arm) -> &ArmState {
        self.arms.iter().find(|a| a.name == arm).expect("robot has both arms")
    }

    pub fn arm_mut(&mut self, arm: Arm) -> &mut ArmState {
        self.arms.iter_mut().find(|a| a.name == arm).expect("robot has both arms")
    }

    pub fn shoulder_at(&self, base: &Pose, arm: Arm) -> Vec2 {
        base.apply(Vec2::new(0.0, self.shoulder_offset * arm.side()))
    }

    pub fn tool_world(&self, arm: Arm) -> Pose {
        to_world(&self.base, &self.arm(arm).tool)
    }

    pub fn holding(&self, object: &str) -> Option<ArmSel> {
        let holds = |a: Arm| self.arm(a).held.as_deref() == Some(object);
        match (holds(Arm::Left), holds(Arm::Right)) {
            (true, true) => Some(ArmSel::Both),
            (true, false) => Some(ArmSel::Left),
            (false, true) => Some(ArmSel::Right),
            (false, false) => None,
        }
    }

    pub fn free_arms(&self) -> Vec<Arm> {
        Arm::BOTH.into_iter().filter(|a| self.arm(*a).held.is_none()).collect()
    }
}

pub fn to_world(base: &Pose, local: &Pose) -> Pose {
    let p = base.apply(local.xy());
    Pose::new(p.x, p.y, local.z, crate::geom::normalize_angle(base.yaw + local.yaw))
}

pub fn to_local(base: &Pose, world: &Pose) -> Pose {
    let d = (world.xy() - base.xy()).rotate(-base.yaw);
    Pose::new(d.x, d.y, world.z, crate::geom::normalize_angle(world.yaw - base.yaw))
}

/// A place objects can rest on: a furniture top or a container interior.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportInfo {
    pub id: String,
    pub polygon: Polygon,
    pub z: f64,
    pub container: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldState {
    pub name: String,
    pub room: Room,
    #[serde(default)]
    pub clock: u64,
    pub robot: RobotState,
    #[serde(default)]
    pub furniture: Vec<Furniture>,
    #[serde(default)]
    pub containers: Vec<Container>,
    #[serde(default)]
    pub objects: Vec<ObjectInstance>,
}

impl Container {
    pub fn range(&self) -> f64 {
        match self.articulation {
            Articulation::Prismatic { range, .. } | Articulation::Revolute { range, .. } => range,
        }
    }

    pub fn open_fraction(&self) -> f64 {
        let r = self.range();
        if r <= 0.0 {
            1.0
        } else {
            self.joint / r
        }
    }

    /// Contents are accessible and visible from joint fraction 0.5 on.
    pub fn is_open(&self) -> bool {
        self.open_fraction() >= 0.5
    }

    pub fn is_closed(&self) -> bool {
        self.joint <= 1e-9
    }

    pub fn displacement_at(&self, joint: f64) -> Vec2 {
        match self.articulation {
            Articulation::Prismatic { axis, .. } => axis * joint,
            Articulation::Revolute { .. } => Vec2::default(),
        }
    }

    pub fn interior_at(&self, joint: f64) -> Polygon {
        self.interior.translated(self.displacement_at(joint))
    }

    pub fn interior_now(&self) -> Polygon {
        self.interior_at(self.joint)
    }

    /// Door panel end points for revolute containers.
    pub fn door_at(&self, joint: f64) -> Option<(Vec2, Vec2)> {
        match self.articulation {
            Articulation::Revolute { hinge, panel, closed_angle, direction, .. } => {
                Some((hinge, hinge + Vec2::from_angle(closed_angle + direction * joint) * panel))
            }
            Articulation::Prismatic { .. } => None,
        }
    }

    pub fn handle_at(&self, joint: f64) -> Pose {
        let p = match self.articulation {
            Articulation::Prismatic { axis, .. } => self.handle + axis * joint,
            Articulation::Revolute { hinge, closed_angle, direction, .. } => {
                let r = self.handle.dist(hinge);
                hinge + Vec2::from_angle(closed_angle + direction * joint) * r
            }
        };
        Pose::new(p.x, p.y, self.handle_z, 0.0)
    }

    pub fn handle_now(&self) -> Pose {
        self.handle_at(self.joint)
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), WorldError> {
    if cond {
        Ok(())
    } else {
        Err(WorldError::Inconsistent(msg()))
    }
}

impl WorldState {
    /// Parses a TOML world document; schema errors carry the offending path.
    pub fn load_str(text: &str) -> Result<WorldState, WorldError> {
        let de = toml::Deserializer::parse(text).map_err(|e| WorldError::Schema {
            path: String::new(),
            message: e.message().to_string(),
        })?;
        let world: WorldState = serde_path_to_error::deserialize(de).map_err(|e| WorldError::Schema {
            path: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
        world.check_consistency()?;
        Ok(world)
    }

    pub fn load_file(path: &std::path::Path) -> Result<WorldState, WorldError> {
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(format!("{}: {e}", path.display())))?;
        Self::load_str(&text)
    }

    /// Deterministic TOML serialization.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world serializes")
    }

    /// Content hash over the canonical serialization.
    pub fn fingerprint(&self) -> u64 {
        let json = serde_json::to_vec(self).expect("world serializes");
        let digest = Sha256::digest(&json);
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    pub fn check_consistency(&self) -> Result<(), WorldError> {
        let mut ids = std::collections::HashSet::new();
        let mut claim = |id: &str| check(ids.insert(id.to_string()), || format!("duplicate id `{id}`"));
        for f in &self.furniture {
            claim(&f.id)?;
            check(f.footprint.is_convex(), || format!("furniture `{}` footprint not convex", f.id))?;
            check(f.height > 0.0, || format!("furniture `{}` height must be positive", f.id))?;
            for s in &f.surfaces {
                claim(&s.id)?;
                check(s.polygon.is_convex(), || format!("surface `{}` not convex", s.id))?;
            }
        }
        for c in &self.containers {
            claim(&c.id)?;
            check(self.furniture(&c.host).is_some(), || format!("container `{}` has unknown host `{}`", c.id, c.host))?;
            check(c.joint >= -1e-9 && c.joint <= c.range() + 1e-9, || format!("container `{}` joint out of range", c.id))?;
            check(c.interior.is_convex(), || format!("container `{}` interior not convex", c.id))?;
        }
        for o in &self.objects {
            claim(&o.id)?;
            check(o.footprint.is_convex(), || format!("object `{}` footprint not convex", o.id))?;
            check(o.height > 0.0, || format!("object `{}` height must be positive", o.id))?;
            let held = self.robot.holding(&o.id).is_some();
            match (&o.support, held) {
                (Some(_), true) => return Err(WorldError::Inconsistent(format!("object `{}` both held and supported", o.id))),
                (Some(s), false) => {
                    check(self.support(s).is_some(), || format!("object `{}` rests on unknown support `{s}`", o.id))?
                }
                (None, _) => {}
            }
        }
        for a in &self.robot.arms {
            if let Some(h) = &a.held {
                check(self.object(h).is_some(), || format!("arm holds unknown object `{h}`"))?;
            }
        }
        let arms: Vec<Arm> = self.robot.arms.iter().map(|a| a.name).collect();
        check(arms.len() == 2 && arms.contains(&Arm::Left) && arms.contains(&Arm::Right), || {
            "robot needs a left and a right arm".into()
        })?;
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                if a.support.is_some() && a.support == b.support && a.world_footprint().overlaps(&b.world_footprint()) {
                    return Err(WorldError::Inconsistent(format!("objects `{}` and `{}` overlap", a.id, b.id)));
                }
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut ObjectInstance> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn try_object(&self, id: &str) -> Result<&ObjectInstance, WorldError> {
        self.object(id).ok_or_else(|| WorldError::UnknownObject(id.to_string()))
    }

    pub fn furniture(&self, id: &str) -> Option<&Furniture> {
        self.furniture.iter().find(|f| f.id == id)
    }

    pub fn container(&self, id: &str) -> Option<&Container> {
        self.containers.iter().find(|c| c.id == id)
    }

    pub fn container_mut(&mut self, id: &str) -> Option<&mut Container> {
        self.containers.iter_mut().find(|c| c.id == id)
    }

    pub fn supports(&self) -> Vec<SupportInfo> {
        let mut out = Vec::new();
        for f in &self.furniture {
            for s in &f.surfaces {
                out.push(SupportInfo { id: s.id.clone(), polygon: s.polygon.clone(), z: s.z, container: None });
            }
        }
        for c in &self.containers {
            out.push(SupportInfo { id: c.id.clone(), polygon: c.interior_now(), z: c.z, container: Some(c.id.clone()) });
        }
        out
    }

    pub fn support(&self, id: &str) -> Option<SupportInfo> {
        self.supports().into_iter().find(|s| s.id == id)
    }

    /// Container an object rests in, if any.
    pub fn container_of(&self, object: &str) -> Option<&Container> {
        let s = self.object(object)?.support.as_deref()?;
        self.container(s)
    }

    /// Class of the place an object currently rests on: container class,
    /// furniture class of the surface, `held` or `floor`.
    pub fn support_class(&self, object: &str) -> String {
        match self.object(object) {
            None => "unknown".into(),
            Some(o) => match &o.support {
                Some(s) => self.support_class_of(s),
                None if self.robot.holding(object).is_some() => "held".into(),
                None => "floor".into(),
            },
        }
    }

    pub fn support_class_of(&self, support: &str) -> String {
        if let Some(c) = self.container(support) {
            return c.class.clone();
        }
        self.furniture
            .iter()
            .find(|f| f.surfaces.iter().any(|s| s.id == support))
            .map(|f| f.class.clone())
            .unwrap_or_else(|| "unknown".into())
    }

    /// Highest support under `p` whose height does not exceed `z`.
    pub fn support_below(&self, p: Vec2, z: f64) -> Option<SupportInfo> {
        self.supports()
            .into_iter()
            .filter(|s| s.z <= z + 1e-9 && s.polygon.contains(p))
            .filter(|s| s.container.as_deref().and_then(|c| self.container(c)).is_none_or(|c| c.is_open() || z <= c.z + 1e-9))
            .max_by(|a, b| a.z.total_cmp(&b.z))
    }

    /// Recomputes poses of held objects from their arm's tool pose.
    pub fn sync_held(&mut self) {
        let held: Vec<(String, Pose)> = Arm::BOTH
            .iter()
            .rev()
            .filter_map(|a| self.robot.arm(*a).held.clone().map(|h| (h, self.robot.tool_world(*a))))
            .collect();
        for (id, pose) in held {
            if let Some(o) = self.object_mut(&id) {
                o.pose = pose;
            }
        }
    }

    /// Moves a container's joint and carries prismatic contents along.
    pub fn set_joint(&mut self, id: &str, joint: f64) {
        let Some(c) = self.container(id) else { return };
        let delta = c.displacement_at(joint) - c.displacement_at(c.joint);
        for o in self.objects.iter_mut().filter(|o| o.support.as_deref() == Some(id)) {
            o.pose = o.pose.with_xy(o.pose.xy() + delta);
        }
        if let Some(c) = self.container_mut(id) {
            c.joint = joint;
        }
    }

    pub fn in_room(&self, p: Vec2, margin: f64) -> bool {
        p.x >= margin && p.y >= margin && p.x <= self.room.width - margin && p.y <= self.room.depth - margin
    }
}

#[cfg(test)]
mod tests;

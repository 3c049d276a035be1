//! Kinematic motion execution: each motion is checked and applied on a
//! copy of the world and committed only on success.

use serde::{Deserialize, Serialize};

use crate::failure::FailureKind;
use crate::geom::{Pose, Vec2};
use crate::plan_lang::{Designator, Value};
use crate::vocab::MotionType;
use crate::world::{
    park_pose, perceive_detect, to_local, Arm, ArmSel, Event, EventKind, Frame, Grasp, Gripper, ObjectInstance,
    WorldState,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    /// Gripping attaches objects whose pose is within this distance of the tool.
    pub attach_radius: f64,
    /// COG offsets beyond this need a two-hand grasp.
    pub single_hand_cog: f64,
    /// Non-flat objects released from higher than this topple.
    pub max_release_height: f64,
    pub step_budget: u64,
    pub base_speed: f64,
    pub tool_speed: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            attach_radius: 0.05,
            single_hand_cog: 0.15,
            max_release_height: 0.06,
            step_budget: 1000,
            base_speed: 0.25,
            tool_speed: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Carry {
    Upright,
    Free,
}

/// Ground motion parameters; unused fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MotionParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<ArmSel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasp: Option<Grasp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Pose>,
    /// Target given in the base frame rather than the world frame.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub local: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carry: Option<Carry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gripper: Option<Gripper>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torso: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<String>,
    /// Recorded but inert: there is no force model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<f64>,
    /// Object description for `detecting`, in plan syntax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionCommand {
    pub motion: MotionType,
    #[serde(flatten)]
    pub params: MotionParams,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid motion designator: {0}")]
pub struct MotionSpecError(pub String);

fn sym<'a>(d: &'a Designator, key: &str) -> Result<Option<&'a str>, MotionSpecError> {
    match d.get(key) {
        None => Ok(None),
        Some(v) => v.as_symbol().map(Some).ok_or_else(|| MotionSpecError(format!("`{key}` must be a symbol"))),
    }
}

impl MotionCommand {
    pub fn new(motion: MotionType) -> Self {
        MotionCommand { motion, params: MotionParams::default() }
    }

    /// Reads a ground motion designator `(a motion (type ...) ...)`.
    pub fn from_designator(d: &Designator) -> Result<Self, MotionSpecError> {
        let t = d.type_name().ok_or_else(|| MotionSpecError("missing `type`".into()))?;
        let motion: MotionType = t.parse().map_err(|_| MotionSpecError(format!("unknown motion `{t}`")))?;
        let mut p = MotionParams::default();
        if let Some(a) = sym(d, "arm")? {
            p.arm = Some(a.parse().map_err(MotionSpecError)?);
        }
        if let Some(g) = sym(d, "grasp")? {
            p.grasp = Some(g.parse().map_err(MotionSpecError)?);
        }
        for key in ["target", "pose"] {
            if let Some(v) = d.get(key) {
                p.target = Some(v.as_pose().ok_or_else(|| MotionSpecError(format!("`{key}` must be a pose")))?);
            }
        }
        p.local = sym(d, "frame")? == Some("base");
        match d.get("object") {
            // A description to detect rather than a known object.
            Some(Value::Desig(o)) => p.query = Some(crate::plan_lang::print_designator(o)),
            _ => p.object = sym(d, "object")?.map(str::to_string),
        }
        p.container = sym(d, "container")?.map(str::to_string);
        p.carry = match sym(d, "carry")? {
            Some("upright") => Some(Carry::Upright),
            Some("free") => Some(Carry::Free),
            Some(other) => return Err(MotionSpecError(format!("unknown carry `{other}`"))),
            None => None,
        };
        p.gripper = match sym(d, "gripper")? {
            Some("open") => Some(Gripper::Open),
            Some("closed") => Some(Gripper::Closed),
            Some(other) => return Err(MotionSpecError(format!("unknown gripper state `{other}`"))),
            None => None,
        };
        p.torso = d.number("torso");
        p.force = d.number("force");
        p.purpose = sym(d, "purpose")?.map(str::to_string);
        if let Some(q) = d.get("query") {
            p.query = Some(crate::plan_lang::print_value(q));
        }
        Ok(MotionCommand { motion, params: p })
    }

    pub fn to_designator(&self) -> Designator {
        let p = &self.params;
        let mut d = Designator::motion(self.motion.as_str());
        if let Some(a) = p.arm {
            d.set("arm", Value::symbol(a.as_str()));
        }
        if let Some(g) = p.grasp {
            d.set("grasp", Value::symbol(g.as_str()));
        }
        if let Some(t) = p.target {
            d.set("target", Value::pose(t));
        }
        if p.local {
            d.set("frame", Value::symbol("base"));
        }
        if let Some(o) = &p.object {
            d.set("object", Value::symbol(o));
        }
        if let Some(c) = &p.container {
            d.set("container", Value::symbol(c));
        }
        if let Some(c) = p.carry {
            d.set("carry", Value::symbol(if c == Carry::Upright { "upright" } else { "free" }));
        }
        if let Some(g) = p.gripper {
            d.set("gripper", Value::symbol(if g == Gripper::Open { "open" } else { "closed" }));
        }
        if let Some(t) = p.torso {
            d.set("torso", Value::number(t));
        }
        if let Some(f) = p.force {
            d.set("force", Value::number(f));
        }
        if let Some(pp) = &p.purpose {
            d.set("purpose", Value::symbol(pp));
        }
        if let Some(q) = p.query.as_deref().and_then(|q| crate::plan_lang::parse_value(q).ok()) {
            d.set("query", q);
        }
        d
    }

    /// Event kind whose firing ends this motion's phase.
    pub fn goal_event(&self) -> &'static str {
        match self.motion {
            MotionType::Going | MotionType::Looking | MotionType::MovingTcp | MotionType::MovingTorso => "pose-reached",
            MotionType::MovingArmJoints => "pose-reached",
            MotionType::Detecting => "detected",
            MotionType::Gripping => "contact",
            MotionType::Opening if self.params.container.is_some() => "door-open",
            MotionType::Closing if self.params.container.is_some() => "door-closed",
            MotionType::Opening | MotionType::Closing | MotionType::MovingGripperJoint => "gripper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionOutcome {
    pub events: Vec<Event>,
    pub result: Result<(), FailureKind>,
}

/// Grasp rules: COG far from the grasp point needs two hands; flat objects
/// are taken from the top; mugs meant for pouring are taken from the side.
pub fn check_grasp_compatibility(o: &ObjectInstance, grasp: Grasp, purpose: Option<&str>, cfg: &MotionConfig) -> bool {
    if o.cog_offset() > cfg.single_hand_cog {
        grasp == Grasp::TwoHand
    } else if o.flat {
        grasp == Grasp::Top
    } else if o.category == "mug" && purpose == Some("pouring") {
        grasp == Grasp::Side
    } else {
        true
    }
}

struct Run<'a> {
    w: WorldState,
    cfg: &'a MotionConfig,
    events: Vec<Event>,
}

impl Run<'_> {
    fn emit(&mut self, kind: EventKind) {
        self.events.push(Event { step: self.w.clock, kind });
    }

    fn advance(&mut self, steps: u64) -> Result<(), FailureKind> {
        if steps > self.cfg.step_budget {
            return Err(FailureKind::Timeout);
        }
        self.w.clock += steps;
        Ok(())
    }

    fn collide(&mut self, with: &str) -> FailureKind {
        self.emit(EventKind::Collision { with: with.to_string() });
        FailureKind::Collision
    }

    fn arms(&self, p: &MotionParams) -> &'static [Arm] {
        p.arm.unwrap_or(ArmSel::Right).arms()
    }

    fn going(&mut self, p: &MotionParams) -> Result<(), FailureKind> {
        let goal = p.target.ok_or(FailureKind::NoSolution)?;
        let goal = Pose::new(goal.x, goal.y, 0.0, goal.yaw);
        let start = self.w.robot.base.xy();
        if !self.w.standable(goal.xy()) {
            return Err(self.collide("goal"));
        }
        let Some(length) = self.w.base_route(start, goal.xy()) else {
            return Err(self.collide("path"));
        };
        self.advance((length / self.cfg.base_speed).ceil() as u64)?;
        self.w.robot.base = goal;
        self.w.sync_held();
        self.emit(EventKind::PoseReached { frame: Frame::Base, pose: goal });
        Ok(())
    }

    fn carried_collision(&self, arm: Arm, target: &Pose) -> Option<String> {
        let held = self.w.robot.arm(arm).held.as_deref()?;
        let o = self.w.object(held)?;
        let fp = o.footprint.placed(target);
        self.w
            .objects
            .iter()
            .filter(|x| x.id != held && self.w.robot.holding(&x.id).is_none())
            .find(|x| {
                let z_overlap = x.pose.z < target.z + o.height && target.z < x.pose.z + x.height;
                z_overlap && fp.overlaps(&x.world_footprint())
            })
            .map(|x| x.id.clone())
    }

    fn moving_tcp(&mut self, p: &MotionParams) -> Result<(), FailureKind> {
        let target = p.target.ok_or(FailureKind::NoSolution)?;
        let base = self.w.robot.base;
        let world_target = if p.local { crate::world::to_world(&base, &target) } else { target };
        let mut longest: f64 = 0.0;
        for &arm in self.arms(p) {
            let current = self.w.robot.tool_world(arm);
            let d = current.xy().dist(world_target.xy()).hypot(current.z - world_target.z);
            longest = longest.max(d);
            if d < 1e-9 || p.local {
                continue;
            }
            if !self.w.reachable_from(&base, &world_target, arm.into()) {
                return Err(FailureKind::Unreachable);
            }
            if let Some(other) = self.carried_collision(arm, &world_target) {
                return Err(self.collide(&other));
            }
        }
        self.advance((longest / self.cfg.tool_speed).ceil() as u64)?;
        for &arm in self.arms(p) {
            if !self.w.robot.tool_world(arm).approx_eq(&world_target, 1e-9) {
                self.w.robot.arm_mut(arm).tool = to_local(&base, &world_target);
            }
        }
        self.w.sync_held();
        for &arm in self.arms(p) {
            self.emit(EventKind::PoseReached { frame: Frame::Tool(arm), pose: world_target });
        }
        Ok(())
    }

    fn gripping(&mut self, p: &MotionParams) -> Result<(), FailureKind> {
        let sel = p.arm.unwrap_or(ArmSel::Right);
        let grasp = p.grasp.unwrap_or(Grasp::Side);
        if (grasp == Grasp::TwoHand) != (sel == ArmSel::Both) {
            return Err(FailureKind::ObjectSlipped);
        }
        let tools: Vec<Pose> = sel.arms().iter().map(|a| self.w.robot.tool_world(*a)).collect();
        let near = |o: &ObjectInstance, t: &Pose| o.pose.xy().dist(t.xy()).hypot(o.pose.z - t.z);
        let candidate = self
            .w
            .objects
            .iter()
            .filter(|o| self.w.robot.holding(&o.id).is_none())
            .filter(|o| p.object.as_ref().is_none_or(|id| *id == o.id))
            .filter(|o| tools.iter().all(|t| near(o, t) <= self.cfg.attach_radius))
            .min_by(|a, b| near(a, &tools[0]).total_cmp(&near(b, &tools[0])))
            .cloned();
        let Some(o) = candidate else {
            return Err(FailureKind::ObjectSlipped);
        };
        if !check_grasp_compatibility(&o, grasp, p.purpose.as_deref(), self.cfg)
            || sel.arms().iter().any(|a| self.w.robot.arm(*a).held.is_some())
        {
            return Err(FailureKind::ObjectSlipped);
        }
        self.advance(1)?;
        for &arm in sel.arms() {
            let a = self.w.robot.arm_mut(arm);
            a.held = Some(o.id.clone());
            a.gripper = Gripper::Closed;
        }
        if let Some(obj) = self.w.object_mut(&o.id) {
            obj.support = None;
        }
        self.w.sync_held();
        for &arm in sel.arms() {
            self.emit(EventKind::Contact { arm, object: o.id.clone() });
        }
        Ok(())
    }

    fn release(&mut self, arms: &[Arm]) {
        let mut released: Vec<String> = Vec::new();
        for &arm in arms {
            let a = self.w.robot.arm_mut(arm);
            a.gripper = Gripper::Open;
            if let Some(h) = a.held.take() {
                self.emit(EventKind::Release { arm, object: h.clone() });
                if !released.contains(&h) {
                    released.push(h);
                }
            }
            self.emit(EventKind::Gripper { arm, state: Gripper::Open });
        }
        for id in released {
            if self.w.robot.holding(&id).is_some() {
                continue;
            }
            self.settle(&id);
        }
    }

    /// Places a just-released object on whatever is below it, or lets it fall.
    fn settle(&mut self, id: &str) {
        let Some(o) = self.w.object(id).cloned() else { return };
        let pose = o.pose;
        let support = self.w.support_below(pose.xy(), pose.z);
        let stable = support.as_ref().is_some_and(|s| s.polygon.eroded_contains(o.cog_world(&pose), crate::world::STABILITY_MARGIN));
        let obj = self.w.object_mut(id).unwrap();
        match support {
            Some(s) if stable => {
                let drop = pose.z - s.z;
                obj.pose = Pose::new(pose.x, pose.y, s.z, pose.yaw);
                obj.support = Some(s.id.clone());
                if drop > self.cfg.max_release_height && !obj.flat {
                    obj.toppled = true;
                    let at = obj.pose;
                    self.emit(EventKind::Toppled { object: id.to_string(), pose: at, support: Some(s.id), broken: false });
                } else {
                    let at = obj.pose;
                    self.emit(EventKind::Placed { object: id.to_string(), pose: at, support: s.id });
                }
            }
            _ => {
                obj.pose = Pose::new(pose.x, pose.y, 0.0, pose.yaw);
                obj.support = None;
                obj.toppled = true;
                obj.broken |= obj.breakable;
                let (at, broken) = (obj.pose, obj.broken);
                self.emit(EventKind::Toppled { object: id.to_string(), pose: at, support: None, broken });
            }
        }
    }

    fn articulate(&mut self, p: &MotionParams, open: bool) -> Result<(), FailureKind> {
        let id = p.container.clone().unwrap();
        let c = self.w.container(&id).cloned().ok_or(FailureKind::NoSolution)?;
        let arm = self.arms(p)[0];
        let base = self.w.robot.base;
        let handle = c.handle_now();
        if !self.w.reachable_from(&base, &handle, arm.into()) {
            return Err(FailureKind::Unreachable);
        }
        let joint = if open { c.range() } else { 0.0 };
        if open {
            let r = self.w.robot.radius;
            let blocked = match c.door_at(joint) {
                Some((a, b)) => crate::geom::segment_point_distance(a, b, base.xy()) < r,
                None => c.interior_at(joint).distance_to_point(base.xy()) < r,
            };
            if blocked {
                return Err(self.collide(&id));
            }
        }
        self.advance(((joint - c.joint).abs() / self.cfg.tool_speed).ceil().max(1.0) as u64)?;
        self.w.set_joint(&id, joint);
        let end = c.handle_at(joint);
        self.w.robot.arm_mut(arm).tool = to_local(&base, &end);
        self.emit(EventKind::PoseReached { frame: Frame::Tool(arm), pose: end });
        if open {
            self.emit(EventKind::DoorOpen { container: id, joint });
        } else {
            self.emit(EventKind::DoorClosed { container: id });
        }
        Ok(())
    }

    fn gripper(&mut self, p: &MotionParams, state: Gripper) -> Result<(), FailureKind> {
        self.advance(1)?;
        let arms = self.arms(p);
        match state {
            Gripper::Open => self.release(arms),
            Gripper::Closed => {
                for &arm in arms {
                    self.w.robot.arm_mut(arm).gripper = Gripper::Closed;
                    self.emit(EventKind::Gripper { arm, state: Gripper::Closed });
                }
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, cmd: &MotionCommand, belief: Option<&mut WorldState>) -> Result<(), FailureKind> {
        let p = &cmd.params;
        match cmd.motion {
            MotionType::Going => self.going(p),
            MotionType::Looking => {
                let at = match (&p.object, p.target) {
                    (_, Some(t)) => t,
                    (Some(o), None) => self.w.object(o).map(|o| o.pose).ok_or(FailureKind::PerceptionFailure)?,
                    (None, None) => return Err(FailureKind::NoSolution),
                };
                self.advance(1)?;
                self.w.robot.gaze = Some(at.xy());
                self.emit(EventKind::PoseReached { frame: Frame::Gaze, pose: at });
                Ok(())
            }
            MotionType::Detecting => {
                let query = match (&p.query, &p.object) {
                    (Some(q), _) => match crate::plan_lang::parse_value(q) {
                        Ok(Value::Desig(d)) => d,
                        _ => return Err(FailureKind::PerceptionFailure),
                    },
                    (None, Some(o)) => Designator::object_named(o),
                    (None, None) => return Err(FailureKind::PerceptionFailure),
                };
                let mut scratch;
                let belief = match belief {
                    Some(b) => b,
                    None => {
                        scratch = self.w.clone();
                        &mut scratch
                    }
                };
                let base = self.w.robot.base;
                let found = perceive_detect(&self.w, belief, &base, &query)?;
                self.advance(1)?;
                for d in found {
                    let id = d.symbol("name").unwrap_or_default().to_string();
                    let pose = d.get("pose").and_then(Value::as_pose).unwrap_or_default();
                    self.emit(EventKind::Detected { object: id, pose });
                }
                Ok(())
            }
            MotionType::MovingTcp => self.moving_tcp(p),
            MotionType::Gripping => self.gripping(p),
            MotionType::Opening if p.container.is_some() => self.articulate(p, true),
            MotionType::Closing if p.container.is_some() => self.articulate(p, false),
            MotionType::Opening => self.gripper(p, Gripper::Open),
            MotionType::Closing => self.gripper(p, Gripper::Closed),
            MotionType::MovingGripperJoint => self.gripper(p, p.gripper.unwrap_or(Gripper::Open)),
            MotionType::MovingTorso => {
                let t = p.torso.ok_or(FailureKind::NoSolution)?;
                self.advance(1)?;
                self.w.robot.torso = t;
                self.emit(EventKind::PoseReached { frame: Frame::Torso, pose: Pose::new(0.0, 0.0, t, 0.0) });
                Ok(())
            }
            MotionType::MovingArmJoints => {
                let mut park = MotionParams { arm: p.arm, local: true, ..Default::default() };
                let arm = self.arms(p)[0];
                park.target = Some(p.target.unwrap_or_else(|| park_pose(arm)));
                self.moving_tcp(&park)
            }
        }
    }
}

/// Runs one motion. On failure the world is left untouched.
pub fn execute_motion(
    world: &mut WorldState,
    belief: Option<&mut WorldState>,
    cmd: &MotionCommand,
    cfg: &MotionConfig,
) -> MotionOutcome {
    let mut run = Run { w: world.clone(), cfg, events: Vec::new() };
    let result = run.dispatch(cmd, belief);
    if result.is_ok() {
        *world = run.w;
    }
    MotionOutcome { events: run.events, result }
}

/// One phase of a motion plan: a motion and the event that ends it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub command: MotionCommand,
    pub goal_event: String,
}

impl Phase {
    pub fn new(command: MotionCommand) -> Self {
        let goal_event = command.goal_event().to_string();
        Phase { command, goal_event }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub events: Vec<Event>,
    /// Step at which each completed phase's goal event fired.
    pub boundaries: Vec<u64>,
    pub result: Result<(), FailureKind>,
}

pub fn execute_motion_plan(
    world: &mut WorldState,
    mut belief: Option<&mut WorldState>,
    plan: &MotionPlan,
    cfg: &MotionConfig,
) -> PlanOutcome {
    let mut out = PlanOutcome { events: Vec::new(), boundaries: Vec::new(), result: Ok(()) };
    for phase in &plan.phases {
        let r = execute_motion(world, belief.as_deref_mut(), &phase.command, cfg);
        let goal = r.events.iter().find(|e| e.kind.name() == phase.goal_event).map(|e| e.step);
        out.events.extend(r.events);
        if let Err(kind) = r.result {
            out.result = Err(kind);
            return out;
        }
        match goal {
            Some(step) => out.boundaries.push(step),
            None => {
                out.result = Err(FailureKind::Timeout);
                return out;
            }
        }
    }
    out
}

/// Planar distance helper shared by grounding code.
pub fn planar(a: &Pose, b: &Pose) -> f64 {
    Vec2::new(a.x - b.x, a.y - b.y).norm()
}

#[cfg(test)]
mod tests;

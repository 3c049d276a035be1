//! Generative models answering parameter queries.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::experience::{ExperienceModel, TrialKey};
use super::kb::{Atom, KnowledgeBase, Term};
use crate::contextualizer::{stance_combo, target_container, LocationSpec, LocationStream, ParamQuery, Target};
use crate::failure::FailureKind;
use crate::geom::{Pose, Vec2};
use crate::neem::{Combo, ContextKey};
use crate::plan_lang::{Bindings, ControlNode, Designator, DesignatorKind, Value};
use crate::world::{resolve_object, to_local, ArmSel, Grasp, WorldState};

pub const DEFAULT_PROSPECTIVE_BUDGET: usize = 5;
pub const UNINFORMED_SAMPLE_BUDGET: u32 = 500;
/// Stance candidates scored by the experience model per location variable.
pub const EXPERIENCE_CANDIDATES: usize = 48;
pub const DEFAULT_LIFT: f64 = 0.1;
pub const DEFAULT_LOWER: f64 = 0.02;

const UNINFORMED_GRID: f64 = 0.25;
const UNINFORMED_YAWS: usize = 8;
const UNINFORMED_LIFTS: [f64; 3] = [0.05, 0.1, 0.2];
const UNINFORMED_LOWERS: [f64; 3] = [0.02, 0.05, 0.1];

#[derive(Debug, Clone)]
pub enum GenerativeModel {
    Uninformed,
    Epl,
    Prospective { budget: usize },
    Experience(Arc<ExperienceModel>),
}

impl GenerativeModel {
    pub fn name(&self) -> &'static str {
        match self {
            GenerativeModel::Uninformed => "uninformed",
            GenerativeModel::Epl => "epl",
            GenerativeModel::Prospective { .. } => "prospective",
            GenerativeModel::Experience(_) => "experience",
        }
    }
}

/// Runs a grounded plan body on a copy of the belief and reports whether it
/// would succeed.
pub trait Projector {
    fn project(&mut self, body: &[ControlNode], belief: &WorldState) -> Result<(), FailureKind>;
}

pub struct QueryContext<'a, 'p> {
    pub belief: &'a WorldState,
    pub kb: &'a KnowledgeBase,
    pub seed: u64,
    pub projector: Option<&'p mut dyn Projector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub bindings: Bindings,
    pub samples: u32,
    pub projections: u32,
    /// Transport context of every object the query moves.
    pub contexts: Vec<(String, ContextKey)>,
}

/// One pick or place the robot performs from a location variable's stance.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleTarget {
    pub action: String,
    pub object: String,
    /// Object pose for picks, destination for places.
    pub point: Pose,
    pub through: Option<String>,
    pub context: ContextKey,
    pub arm: Option<Value>,
    pub grasp: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationRole {
    pub var: String,
    pub targets: Vec<RoleTarget>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Roles {
    pub locations: Vec<LocationRole>,
    /// (variable, object) for arm and grasp variables.
    pub arms: Vec<(String, String)>,
    pub grasps: Vec<(String, String)>,
    pub lifts: Vec<String>,
    pub lowers: Vec<String>,
    pub unknown: Vec<String>,
}

fn visit<'a>(nodes: &'a [ControlNode], wral: &mut dyn FnMut(&'a Value, &'a [ControlNode]), perf: &mut dyn FnMut(&'a Designator)) {
    for n in nodes {
        match n {
            ControlNode::Seq(cs)
            | ControlNode::Par(cs)
            | ControlNode::Pursue(cs)
            | ControlNode::TryInOrder(cs)
            | ControlNode::TryAll(cs) => visit(cs, wral, perf),
            ControlNode::WithRobotAtLocation { location, body } => {
                wral(location, body);
                visit(body, wral, perf);
            }
            ControlNode::Perform(Value::Desig(d)) => perf(d),
            ControlNode::HandleFailure { body, handlers, .. } => {
                visit(std::slice::from_ref(body), wral, perf);
                for h in handlers {
                    visit(&h.body, wral, perf);
                }
            }
            ControlNode::When { body, .. } => visit(body, wral, perf),
            _ => {}
        }
    }
}

fn performs(nodes: &[ControlNode]) -> Vec<&Designator> {
    let mut out = Vec::new();
    visit(nodes, &mut |_, _| {}, &mut |d| out.push(d));
    out
}

fn destination_of(d: &Designator) -> Option<Pose> {
    let t = d.get("target").or(d.get("destination"))?;
    t.as_pose().or_else(|| t.as_designator().and_then(|l| l.get("pose")).and_then(Value::as_pose))
}

fn designator_object(d: &Designator, belief: &WorldState) -> Option<String> {
    resolve_object(belief, d.get("object")?)
}

/// Transport context of moving `object` to `destination`.
pub fn context_key(belief: &WorldState, object: &str, destination: Option<&Pose>) -> ContextKey {
    let category = belief.object(object).map_or("unknown".to_string(), |o| o.category.clone());
    let destination = destination
        .and_then(|p| belief.support_below(p.xy(), p.z + 1e-6))
        .map_or("unknown".to_string(), |s| belief.support_class_of(&s.id));
    ContextKey { category, source: belief.support_class(object), destination }
}

fn var_name(v: &Value) -> Option<&str> {
    v.as_var().map(|v| v.name())
}

/// Infers what each query variable stands for from where it occurs.
pub fn infer_roles(q: &ParamQuery, belief: &WorldState) -> Roles {
    let all = performs(&q.to_succeed);
    let mut dest: Vec<(String, Pose)> = Vec::new();
    for d in &all {
        if let (Some(o), Some(p)) = (designator_object(d, belief), destination_of(d)) {
            dest.push((o, p));
        }
    }
    let dest_of = |o: &str| dest.iter().find(|(x, _)| x == o).map(|(_, p)| *p);

    let mut locations: Vec<LocationRole> = Vec::new();
    visit(
        &q.to_succeed,
        &mut |loc, body| {
            let Some(var) = var_name(loc) else { return };
            let mut targets = Vec::new();
            for d in performs(body) {
                let Some(object) = designator_object(d, belief) else { continue };
                let action = d.type_name().unwrap_or_default();
                let (point, through) = match action {
                    "picking-up" => match belief.object(&object) {
                        Some(o) => (o.pose, belief.container_of(&object).map(|c| c.id.clone())),
                        None => continue,
                    },
                    "placing" => match destination_of(d) {
                        Some(p) => (p, target_container(belief, &p)),
                        None => continue,
                    },
                    _ => continue,
                };
                let context = context_key(belief, &object, dest_of(&object).as_ref());
                targets.push(RoleTarget {
                    action: action.to_string(),
                    object,
                    point,
                    through,
                    context,
                    arm: d.get("arm").cloned(),
                    grasp: d.get("grasp").cloned(),
                });
            }
            if !locations.iter().any(|l| l.var == var) {
                locations.push(LocationRole { var: var.to_string(), targets });
            }
        },
        &mut |_| {},
    );

    let mut roles = Roles { locations, ..Default::default() };
    for v in &q.variables {
        let name = v.name();
        if roles.locations.iter().any(|l| l.var == name) {
            continue;
        }
        let mut found = false;
        for d in &all {
            for (key, val) in &d.props {
                if var_name(val) != Some(name) {
                    continue;
                }
                let object = designator_object(d, belief).unwrap_or_default();
                match key.as_str() {
                    "arm" => roles.arms.push((name.to_string(), object)),
                    "grasp" => roles.grasps.push((name.to_string(), object)),
                    "lift-pose" => roles.lifts.push(name.to_string()),
                    "lower-pose" => roles.lowers.push(name.to_string()),
                    _ => continue,
                }
                found = true;
                break;
            }
            if found {
                break;
            }
        }
        if !found {
            roles.unknown.push(name.to_string());
        }
    }
    roles
}

impl LocationRole {
    pub fn spec(&self) -> LocationSpec {
        let visible_for = match self.targets.as_slice() {
            [] => None,
            [t] if t.action == "picking-up" => Some(Target::Object(t.object.clone())),
            [t] => Some(Target::Point(t.point)),
            ts => {
                let n = ts.len() as f64;
                let c = ts.iter().fold(Vec2::new(0.0, 0.0), |a, t| a + t.point.xy()) * (1.0 / n);
                Some(Target::Point(Pose::new(c.x, c.y, ts[0].point.z, 0.0)))
            }
        };
        let through = self.targets.iter().find_map(|t| t.through.clone());
        LocationSpec { visible_for, through, ..Default::default() }
    }

    /// Location designator value the plan runs with.
    pub fn designator(&self, prefer: Option<Pose>) -> Value {
        let spec = self.spec();
        let mut d = Designator::location();
        match spec.visible_for {
            Some(Target::Object(o)) => d.set("visible-for", Value::symbol(o)),
            Some(Target::Point(p)) => d.set("visible-for", Value::pose(p)),
            None => {}
        }
        if let Some(c) = spec.through {
            d.set("through", Value::symbol(c));
        }
        if let Some(p) = prefer {
            d.set("prefer", Value::pose(p));
        }
        Value::Desig(d)
    }
}

fn sub_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Grasp selected by the `grasp-for` rules of the knowledge base.
pub fn epl_grasp(kb: &KnowledgeBase, belief: &WorldState, object: &str) -> Grasp {
    let goal = Atom::new("grasp-for", vec![Term::sym(object), Term::var("g")]);
    kb.query_first(&goal, belief)
        .and_then(|s| s.get("g").and_then(Term::as_sym).and_then(|g| g.parse().ok()))
        .unwrap_or(Grasp::Side)
}

/// Arm nearest to the object seen from `stance`; ties go right.
pub fn proximity_arm(belief: &WorldState, object: &str, stance: &Pose) -> ArmSel {
    match belief.object(object) {
        Some(o) if to_local(stance, &o.pose).y > 0.0 => ArmSel::Left,
        _ => ArmSel::Right,
    }
}

struct Planner<'a> {
    belief: &'a WorldState,
    kb: &'a KnowledgeBase,
    roles: &'a Roles,
}

impl Planner<'_> {
    fn grasp(&self, object: &str) -> Grasp {
        epl_grasp(self.kb, self.belief, object)
    }

    /// Arm for `object` given the stances chosen so far; `trial` overrides
    /// the stance of one location variable.
    fn arm(&self, object: &str, stances: &[Option<Pose>], trial: Option<(usize, Pose)>) -> ArmSel {
        if let Some(a) = self.belief.robot.holding(object) {
            return a;
        }
        if self.grasp(object) == Grasp::TwoHand {
            return ArmSel::Both;
        }
        let free = |a: ArmSel| match a {
            ArmSel::Left | ArmSel::Right => {
                let busy = a.arms().iter().any(|x| self.belief.robot.arm(*x).held.is_some());
                match self.belief.robot.free_arms().as_slice() {
                    [only] if busy => ArmSel::from(*only),
                    _ => a,
                }
            }
            ArmSel::Both => a,
        };
        for (i, l) in self.roles.locations.iter().enumerate() {
            if !l.targets.iter().any(|t| t.action == "picking-up" && t.object == object) {
                continue;
            }
            let stance = match trial {
                Some((j, p)) if j == i => Some(p),
                _ => stances[i],
            };
            if let Some(s) = stance {
                return free(proximity_arm(self.belief, object, &s));
            }
        }
        free(ArmSel::Right)
    }

    fn target_arm(&self, t: &RoleTarget, stances: &[Option<Pose>], trial: Option<(usize, Pose)>) -> ArmSel {
        match t.arm.as_ref().and_then(Value::as_symbol).and_then(|a| a.parse().ok()) {
            Some(a) => a,
            None => self.arm(&t.object, stances, trial),
        }
    }

    fn target_grasp(&self, t: &RoleTarget) -> Grasp {
        match t.grasp.as_ref().and_then(Value::as_symbol).and_then(|g| g.parse().ok()) {
            Some(g) => g,
            None => self.grasp(&t.object),
        }
    }

    fn combo(&self, t: &RoleTarget, stance: &Pose, arm: ArmSel) -> Combo {
        let (ring, heading) = stance_combo(t.point.xy(), stance);
        Combo { arm, grasp: Some(self.target_grasp(t)), ring, heading }
    }

    fn stream(&self, i: usize, seed: u64) -> LocationStream {
        LocationStream::new(self.roles.locations[i].spec(), self.belief, sub_seed(seed, i))
    }

    /// Full bindings once every location has a stance.
    fn bindings(&self, stances: &[Option<Pose>]) -> Bindings {
        let mut b = Bindings::new();
        for (l, s) in self.roles.locations.iter().zip(stances) {
            b.insert(&l.var, l.designator(*s));
        }
        for (var, object) in &self.roles.arms {
            b.insert(var, Value::symbol(self.arm(object, stances, None).as_str()));
        }
        for (var, object) in &self.roles.grasps {
            b.insert(var, Value::symbol(self.grasp(object).as_str()));
        }
        for var in &self.roles.lifts {
            b.insert(var, Value::number(DEFAULT_LIFT));
        }
        for var in &self.roles.lowers {
            b.insert(var, Value::number(DEFAULT_LOWER));
        }
        b
    }
}

fn contexts(roles: &Roles) -> Vec<(String, ContextKey)> {
    let mut out: Vec<(String, ContextKey)> = Vec::new();
    for t in roles.locations.iter().flat_map(|l| &l.targets) {
        if !out.iter().any(|(o, _)| *o == t.object) {
            out.push((t.object.clone(), t.context.clone()));
        }
    }
    out
}

/// Answers a parameter query with the given generative model.
pub fn resolve_designator_parameters(
    q: &ParamQuery,
    gm: &GenerativeModel,
    ctx: QueryContext<'_, '_>,
) -> Result<Resolution, FailureKind> {
    let roles = infer_roles(q, ctx.belief);
    if !roles.unknown.is_empty() {
        return Err(FailureKind::NoSolution);
    }
    if let GenerativeModel::Uninformed = gm {
        return uninformed(q, &roles, ctx.belief, ctx.seed);
    }
    let planner = Planner { belief: ctx.belief, kb: ctx.kb, roles: &roles };
    let n = roles.locations.len();
    let mut streams: Vec<LocationStream> = (0..n).map(|i| planner.stream(i, ctx.seed)).collect();
    let mut resolution = Resolution { bindings: Bindings::new(), samples: 0, projections: 0, contexts: contexts(&roles) };
    match gm {
        GenerativeModel::Uninformed => unreachable!(),
        GenerativeModel::Epl => {
            let stances: Vec<Option<Pose>> = streams.iter_mut().map(|s| s.next()).collect();
            if stances.iter().any(Option::is_none) {
                return Err(FailureKind::NoSolution);
            }
            resolution.samples = 1;
            resolution.bindings = planner.bindings(&stances);
        }
        GenerativeModel::Prospective { budget } => {
            let lists: Vec<Vec<Pose>> = streams.iter_mut().map(|s| s.take(*budget).collect()).collect();
            if lists.iter().any(Vec::is_empty) {
                return Err(FailureKind::NoSolution);
            }
            let k = lists.iter().map(Vec::len).min().unwrap_or(0).min(*budget);
            let candidate = |j: usize| -> Vec<Option<Pose>> { lists.iter().map(|l| Some(l[j])).collect() };
            let mut chosen = None;
            let mut projector = ctx.projector;
            for j in 0..k {
                let b = planner.bindings(&candidate(j));
                resolution.samples += 1;
                let Some(p) = projector.as_deref_mut() else { break };
                resolution.projections += 1;
                let body = q.ground(&b).map_err(|_| FailureKind::NoSolution)?;
                if p.project(&body, ctx.belief).is_ok() {
                    chosen = Some(b);
                    break;
                }
            }
            // No candidate projects to success: fall back to the first one.
            resolution.bindings = chosen.unwrap_or_else(|| planner.bindings(&candidate(0)));
        }
        GenerativeModel::Experience(model) => {
            let mut stances: Vec<Option<Pose>> = vec![None; n];
            for i in 0..n {
                let cands: Vec<Pose> = (&mut streams[i]).take(EXPERIENCE_CANDIDATES).collect();
                let mut best: Option<(f64, Pose)> = None;
                for c in cands {
                    resolution.samples += 1;
                    let score: f64 = roles.locations[i]
                        .targets
                        .iter()
                        .map(|t| {
                            let arm = planner.target_arm(t, &stances, Some((i, c)));
                            let key = TrialKey {
                                action: t.action.clone(),
                                context: t.context.clone(),
                                combo: planner.combo(t, &c, arm),
                            };
                            model.rate(&key)
                        })
                        .sum();
                    if best.is_none_or(|(s, _)| score > s + 1e-12) {
                        best = Some((score, c));
                    }
                }
                stances[i] = Some(best.ok_or(FailureKind::NoSolution)?.1);
            }
            resolution.bindings = planner.bindings(&stances);
        }
    }
    Ok(resolution)
}

fn uninformed(q: &ParamQuery, roles: &Roles, belief: &WorldState, seed: u64) -> Result<Resolution, FailureKind> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = (belief.room.width / UNINFORMED_GRID).floor() as i64;
    let ny = (belief.room.depth / UNINFORMED_GRID).floor() as i64;
    for sample in 1..=UNINFORMED_SAMPLE_BUDGET {
        let mut b = Bindings::new();
        let mut well_formed = true;
        for v in &q.variables {
            let name = v.name();
            let value = if roles.locations.iter().any(|l| l.var == name) {
                let x = rng.gen_range(0..=nx) as f64 * UNINFORMED_GRID;
                let y = rng.gen_range(0..=ny) as f64 * UNINFORMED_GRID;
                let yaw = rng.gen_range(0..UNINFORMED_YAWS) as f64 * std::f64::consts::TAU / UNINFORMED_YAWS as f64;
                let p = Pose::new(x, y, 0.0, crate::geom::normalize_angle(yaw));
                well_formed &= belief.standable(p.xy());
                Value::Desig(Designator::new(DesignatorKind::Location).with("pose", Value::pose(p)))
            } else if roles.arms.iter().any(|(v, _)| v == name) {
                Value::symbol(ArmSel::ALL.choose(&mut rng).unwrap().as_str())
            } else if roles.grasps.iter().any(|(v, _)| v == name) {
                Value::symbol(Grasp::ALL.choose(&mut rng).unwrap().as_str())
            } else if roles.lifts.iter().any(|v| v == name) {
                Value::number(*UNINFORMED_LIFTS.choose(&mut rng).unwrap())
            } else {
                Value::number(*UNINFORMED_LOWERS.choose(&mut rng).unwrap())
            };
            b.insert(name, value);
        }
        if well_formed {
            return Ok(Resolution { bindings: b, samples: sample, projections: 0, contexts: contexts(roles) });
        }
    }
    Err(FailureKind::NoSolution)
}

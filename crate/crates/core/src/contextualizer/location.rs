//! Lazy streams of candidate poses for location designators.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::failure::FailureKind;
use crate::geom::{Polygon, Pose, Vec2};
use crate::plan_lang::{Designator, DesignatorKind, Value};
use crate::world::{resolve_object, ArmSel, WorldState};

pub const RADII: [f64; 3] = [0.5, 0.7, 0.9];
pub const HEADINGS: usize = 16;
/// Candidate positions are snapped to this grid.
pub const GRID: f64 = 0.05;
const SAME_POSE_XY: f64 = 0.05;
const SAME_POSE_YAW: f64 = 0.1;
const PLACEMENT_INSET: f64 = 0.05;
const PLACEMENT_CLEARANCE: f64 = 0.1;
const NEXT_TO: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Object(String),
    Point(Pose),
}

/// Parsed location designator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocationSpec {
    pub pose: Option<Pose>,
    pub prefer: Option<Pose>,
    pub visible_for: Option<Target>,
    pub reachable_for: Option<(Target, ArmSel)>,
    pub through: Option<String>,
    pub on: Option<String>,
    pub inside: Option<String>,
    pub next_to: Option<String>,
}

fn target(v: &Value, belief: &WorldState) -> Result<Target, FailureKind> {
    if let Some(p) = v.as_pose() {
        return Ok(Target::Point(p));
    }
    if let Some(p) = v.as_designator().filter(|d| d.kind == DesignatorKind::Location).and_then(|d| d.get("pose")) {
        return p.as_pose().map(Target::Point).ok_or(FailureKind::NoSolution);
    }
    resolve_object(belief, v).map(Target::Object).ok_or(FailureKind::PerceptionFailure)
}

impl LocationSpec {
    pub fn from_designator(d: &Designator, belief: &WorldState) -> Result<Self, FailureKind> {
        let mut s = LocationSpec {
            pose: d.get("pose").and_then(Value::as_pose),
            prefer: d.get("prefer").and_then(Value::as_pose),
            through: d.symbol("through").map(str::to_string),
            on: d.symbol("on").map(str::to_string),
            inside: d.symbol("in").map(str::to_string),
            next_to: d.symbol("next-to").map(str::to_string),
            ..Default::default()
        };
        if let Some(v) = d.get("visible-for") {
            s.visible_for = Some(target(v, belief)?);
        }
        if let Some(v) = d.get("reachable-for") {
            let arm = d.symbol("arm").and_then(|a| a.parse().ok()).unwrap_or(ArmSel::Right);
            s.reachable_for = Some((target(v, belief)?, arm));
        }
        Ok(s)
    }

    pub fn from_value(v: &Value, belief: &WorldState) -> Result<Self, FailureKind> {
        match v {
            Value::Desig(d) if d.kind == DesignatorKind::Location => Self::from_designator(d, belief),
            _ => v.as_pose().map(|p| LocationSpec { pose: Some(p), ..Default::default() }).ok_or(FailureKind::NoSolution),
        }
    }

    fn is_placement(&self) -> bool {
        self.on.is_some() || self.inside.is_some()
    }

    /// World in which the predicates are evaluated.
    pub fn hypothetical(&self, belief: &WorldState) -> WorldState {
        match &self.through {
            Some(c) => belief.with_open(c),
            None => belief.clone(),
        }
    }
}

fn target_pose(w: &WorldState, t: &Target) -> Option<Pose> {
    match t {
        Target::Object(o) => w.object(o).map(|o| o.pose),
        Target::Point(p) => Some(*p),
    }
}

fn snap(v: f64) -> f64 {
    (v / GRID).round() * GRID
}

/// Base poses on rings around `center`, facing it, snapped to the grid,
/// in generation order (radius-major) without duplicates.
pub fn ring_candidates(center: Vec2) -> Vec<Pose> {
    let mut out: Vec<Pose> = Vec::new();
    for r in RADII {
        for h in 0..HEADINGS {
            let a = h as f64 * std::f64::consts::TAU / HEADINGS as f64;
            let p = Vec2::new(snap(center.x + r * a.cos()), snap(center.y + r * a.sin()));
            let yaw = (center - p).angle();
            if !out.iter().any(|q| q.xy().dist(p) < 1e-9) {
                out.push(Pose::new(p.x, p.y, 0.0, yaw));
            }
        }
    }
    out
}

/// Ring and heading indices of a base pose relative to its target.
pub fn stance_combo(target: Vec2, base: &Pose) -> (usize, usize) {
    let d = base.xy() - target;
    let r = d.norm();
    let ring = (0..RADII.len()).min_by(|a, b| (RADII[*a] - r).abs().total_cmp(&(RADII[*b] - r).abs())).unwrap();
    let step = std::f64::consts::TAU / HEADINGS as f64;
    let heading = ((d.angle() / step).round() as i64).rem_euclid(HEADINGS as i64) as usize;
    (ring, heading)
}

fn same_pose(a: &Pose, b: &Pose) -> bool {
    a.xy().dist(b.xy()) <= SAME_POSE_XY && crate::geom::angle_diff(a.yaw, b.yaw).abs() <= SAME_POSE_YAW
}

/// Lazily filtered candidate poses for one location designator.
#[derive(Debug, Clone)]
pub struct LocationStream {
    spec: LocationSpec,
    world: WorldState,
    candidates: Vec<Pose>,
    next: usize,
}

impl LocationStream {
    pub fn new(spec: LocationSpec, belief: &WorldState, seed: u64) -> Self {
        let world = spec.hypothetical(belief);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates: Vec<Pose> = Vec::new();
        if let Some(p) = spec.prefer {
            candidates.push(p);
        }
        if let Some(p) = spec.pose {
            candidates.push(p);
        } else if spec.is_placement() {
            let mut grid = placement_grid(&world, &spec);
            grid.shuffle(&mut rng);
            candidates.extend(grid);
        } else if let Some(center) = spec
            .visible_for
            .as_ref()
            .or(spec.reachable_for.as_ref().map(|(t, _)| t))
            .and_then(|t| target_pose(&world, t))
        {
            let mut ring = ring_candidates(center.xy());
            ring.shuffle(&mut rng);
            ring.retain(|c| spec.prefer.is_none_or(|p| !same_pose(&p, c)));
            candidates.extend(ring);
        }
        LocationStream { spec, world, candidates, next: 0 }
    }

    pub fn spec(&self) -> &LocationSpec {
        &self.spec
    }

    /// All candidates before filtering, in stream order.
    pub fn candidates(&self) -> &[Pose] {
        &self.candidates
    }

    pub fn feasible(&self, c: &Pose) -> bool {
        let w = &self.world;
        if self.spec.is_placement() {
            return placement_ok(w, &self.spec, c);
        }
        if !w.standable(c.xy()) {
            return false;
        }
        if let Some(t) = &self.spec.visible_for {
            let ok = match t {
                Target::Object(o) => w.visible_from(c, o).unwrap_or(false),
                Target::Point(p) => w.visible_point_from(c, p.xy()),
            };
            if !ok {
                return false;
            }
        }
        if let Some((t, arm)) = &self.spec.reachable_for {
            match target_pose(w, t) {
                Some(p) if w.reachable_from(c, &p, *arm) => {}
                _ => return false,
            }
        }
        true
    }

    /// Whether the robot standing at `base` already satisfies the designator.
    pub fn satisfied_by(&self, base: &Pose) -> bool {
        match self.spec.prefer.or(self.spec.pose) {
            Some(p) => same_pose(&p, base),
            None => self.feasible(base),
        }
    }
}

impl Iterator for LocationStream {
    type Item = Pose;

    fn next(&mut self) -> Option<Pose> {
        while self.next < self.candidates.len() {
            let c = self.candidates[self.next];
            self.next += 1;
            if self.feasible(&c) {
                return Some(c);
            }
        }
        None
    }
}

fn placement_region(w: &WorldState, spec: &LocationSpec) -> Option<(Polygon, f64, String)> {
    let id = spec.on.as_ref().or(spec.inside.as_ref())?;
    if let Some(c) = w.container(id) {
        return Some((c.interior_at(c.range()), c.z, c.id.clone()));
    }
    w.support(id).map(|s| (s.polygon, s.z, s.id))
}

fn placement_grid(w: &WorldState, spec: &LocationSpec) -> Vec<Pose> {
    let Some((poly, z, _)) = placement_region(w, spec) else { return Vec::new() };
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &poly.points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let mut out = Vec::new();
    let mut x = (x0 / GRID).ceil() * GRID;
    while x <= x1 + 1e-9 {
        let mut y = (y0 / GRID).ceil() * GRID;
        while y <= y1 + 1e-9 {
            out.push(Pose::new(snap(x), snap(y), z, 0.0));
            y += GRID;
        }
        x += GRID;
    }
    out
}

fn placement_ok(w: &WorldState, spec: &LocationSpec, c: &Pose) -> bool {
    let Some((poly, _, support)) = placement_region(w, spec) else { return false };
    if !poly.eroded_contains(c.xy(), PLACEMENT_INSET) {
        return false;
    }
    let crowded = w
        .objects
        .iter()
        .filter(|o| o.support.as_deref() == Some(support.as_str()))
        .any(|o| o.pose.xy().dist(c.xy()) < PLACEMENT_CLEARANCE);
    let near = spec
        .next_to
        .as_ref()
        .is_none_or(|n| w.object(n).is_some_and(|o| o.pose.xy().dist(c.xy()) <= NEXT_TO));
    !crowded && near
}

/// Stream for a location value; empty streams are `NoSolution`.
pub fn resolve_location_designator(v: &Value, belief: &WorldState, seed: u64) -> Result<LocationStream, FailureKind> {
    let spec = LocationSpec::from_value(v, belief)?;
    let stream = LocationStream::new(spec, belief, seed);
    if stream.clone().next().is_none() {
        return Err(FailureKind::NoSolution);
    }
    Ok(stream)
}

//! Perception as query resolution over the simulated scene.

use super::{ObjectInstance, WorldState};
use crate::failure::FailureKind;
use crate::geom::Pose;
use crate::plan_lang::{Designator, DesignatorKind, Value};

/// Object attributes a detect query may constrain.
pub const DETECT_ATTRIBUTES: [&str; 8] = ["category", "color", "shape", "location", "pose", "part-of", "name", "type"];

const POSE_TOLERANCE: f64 = 0.05;

fn host_of(world: &WorldState, o: &ObjectInstance) -> Option<String> {
    let s = o.support.as_deref()?;
    if let Some(c) = world.container(s) {
        return Some(c.host.clone());
    }
    world.furniture.iter().find(|f| f.surfaces.iter().any(|x| x.id == s)).map(|f| f.id.clone())
}

fn matches(world: &WorldState, o: &ObjectInstance, key: &str, value: &Value) -> bool {
    if matches!(value, Value::Var(_)) {
        return true;
    }
    let sym = value.as_symbol();
    match key {
        "name" => sym == Some(o.id.as_str()),
        "type" => sym == Some(o.id.as_str()) || sym == Some(o.category.as_str()),
        "category" => sym == Some(o.category.as_str()),
        "color" => sym.is_some() && sym == o.color.as_deref(),
        "shape" => sym.is_some() && sym == o.shape.as_deref(),
        "location" => match (sym, &o.support) {
            (Some(s), Some(sup)) => s == sup || world.support_class_of(sup) == s,
            _ => false,
        },
        "part-of" => match sym {
            Some(s) => o.support.as_deref() == Some(s) || host_of(world, o).as_deref() == Some(s),
            None => false,
        },
        "pose" => value.as_pose().is_some_and(|p| p.xy().dist(o.pose.xy()) <= POSE_TOLERANCE),
        _ => false,
    }
}

/// Objects of `world` satisfying every constraint of an object designator.
pub fn matching_objects<'a>(world: &'a WorldState, query: &Designator) -> Vec<&'a ObjectInstance> {
    world.objects.iter().filter(|o| query.props.iter().all(|(k, v)| matches(world, o, k, v))).collect()
}

/// Resolves an object designator or bare name against a world, without
/// checking visibility.
pub fn resolve_object(world: &WorldState, value: &Value) -> Option<String> {
    match value {
        Value::Desig(d) if d.kind == DesignatorKind::Object => matching_objects(world, d).first().map(|o| o.id.clone()),
        _ => {
            let s = value.as_symbol()?;
            world.object(s).map(|o| o.id.clone())
        }
    }
}

fn describe(o: &ObjectInstance) -> Designator {
    let mut d = Designator::object_named(&o.id)
        .with("category", Value::symbol(&o.category))
        .with("pose", Value::pose(o.pose));
    if let Some(c) = &o.color {
        d.set("color", Value::symbol(c));
    }
    if let Some(s) = &o.shape {
        d.set("shape", Value::symbol(s));
    }
    d
}

fn admit(belief: &mut WorldState, o: &ObjectInstance) {
    match belief.object_mut(&o.id) {
        Some(b) => {
            b.pose = o.pose;
            b.support = o.support.clone();
            b.toppled = o.toppled;
            b.broken = o.broken;
        }
        None => belief.objects.push(o.clone()),
    }
}

/// Detects ground-truth objects visible from `base` that satisfy `query`
/// and writes their state into `belief`.
pub fn perceive_detect(
    truth: &WorldState,
    belief: &mut WorldState,
    base: &Pose,
    query: &Designator,
) -> Result<Vec<Designator>, FailureKind> {
    let found: Vec<&ObjectInstance> = matching_objects(truth, query)
        .into_iter()
        .filter(|o| truth.visible_from(base, &o.id).unwrap_or(false))
        .collect();
    if found.is_empty() {
        return Err(FailureKind::PerceptionFailure);
    }
    for o in &found {
        admit(belief, o);
    }
    Ok(found.into_iter().map(describe).collect())
}

/// Reports the requested attributes of a known, visible object.
pub fn examine(
    truth: &WorldState,
    belief: &mut WorldState,
    base: &Pose,
    object: &str,
    attributes: &[&str],
) -> Result<Vec<(String, Value)>, FailureKind> {
    let o = truth.object(object).ok_or(FailureKind::PerceptionFailure)?;
    if !truth.visible_from(base, object).unwrap_or(false) {
        return Err(FailureKind::PerceptionFailure);
    }
    admit(belief, o);
    let full = describe(o);
    Ok(attributes
        .iter()
        .filter_map(|a| full.get(a).map(|v| (a.to_string(), v.clone())))
        .collect())
}

//! Plan transformations: merging redundant navigation and batching
//! transports that share source and destination surfaces.

use serde::{Deserialize, Serialize};

use super::ground::{location_pose, target_container};
use crate::motion_exec::MotionConfig;
use crate::plan_lang::{ControlNode, Designator, PlanAst, PlanDef, Value};
use crate::world::{resolve_object, WorldState};

pub const TRANSPORT_SCHEMA: &str = "fetch&place";
pub const BATCH_SCHEMA: &str = "fetch&place-2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformRule {
    /// Consecutive `with-robot-at-location` forms at the same location share one navigation.
    MergeNavigation,
    /// Two transports between the same surfaces become one two-armed transport.
    BatchTransport,
}

impl TransformRule {
    pub const ALL: [TransformRule; 2] = [TransformRule::MergeNavigation, TransformRule::BatchTransport];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedTransform {
    pub rule: TransformRule,
    pub path: String,
    pub detail: String,
}

struct Ctx<'a> {
    rules: &'a [TransformRule],
    belief: &'a WorldState,
    batch_available: bool,
    applied: Vec<AppliedTransform>,
}

pub fn apply_plan_transformations(
    plan: &PlanAst,
    rules: &[TransformRule],
    library: &[PlanDef],
    belief: &WorldState,
) -> (PlanAst, Vec<AppliedTransform>) {
    let batch_available = plan.definition(BATCH_SCHEMA).is_some() || library.iter().any(|d| d.name == BATCH_SCHEMA);
    let mut cx = Ctx { rules, belief, batch_available, applied: Vec::new() };
    let mut out = plan.clone();
    for def in &mut out.definitions {
        def.body = rewrite_list(&def.body, &def.name, &mut cx);
    }
    out.root = rewrite_node(&plan.root, "top", &mut cx);
    (out, cx.applied)
}

fn rewrite_node(n: &ControlNode, path: &str, cx: &mut Ctx) -> ControlNode {
    let list = |cs: &[ControlNode], cx: &mut Ctx| rewrite_list(cs, path, cx);
    match n {
        ControlNode::Seq(cs) => ControlNode::Seq(list(cs, cx)),
        ControlNode::Par(cs) => ControlNode::Par(cs.iter().enumerate().map(|(i, c)| rewrite_node(c, &format!("{path}/{i}"), cx)).collect()),
        ControlNode::Pursue(cs) => ControlNode::Pursue(cs.iter().enumerate().map(|(i, c)| rewrite_node(c, &format!("{path}/{i}"), cx)).collect()),
        ControlNode::TryInOrder(cs) => ControlNode::TryInOrder(cs.iter().enumerate().map(|(i, c)| rewrite_node(c, &format!("{path}/{i}"), cx)).collect()),
        ControlNode::TryAll(cs) => ControlNode::TryAll(cs.iter().enumerate().map(|(i, c)| rewrite_node(c, &format!("{path}/{i}"), cx)).collect()),
        ControlNode::WithRobotAtLocation { location, body } => {
            ControlNode::WithRobotAtLocation { location: location.clone(), body: list(body, cx) }
        }
        ControlNode::When { condition, body } => ControlNode::When { condition: condition.clone(), body: list(body, cx) },
        other => other.clone(),
    }
}

fn rewrite_list(nodes: &[ControlNode], path: &str, cx: &mut Ctx) -> Vec<ControlNode> {
    let mut out: Vec<ControlNode> =
        nodes.iter().enumerate().map(|(i, n)| rewrite_node(n, &format!("{path}/{i}"), cx)).collect();
    if cx.rules.contains(&TransformRule::BatchTransport) && cx.batch_available {
        out = batch(out, path, cx);
    }
    if cx.rules.contains(&TransformRule::MergeNavigation) {
        out = merge_navigation(out, path, cx);
    }
    out
}

fn merge_navigation(nodes: Vec<ControlNode>, path: &str, cx: &mut Ctx) -> Vec<ControlNode> {
    let mut out: Vec<ControlNode> = Vec::with_capacity(nodes.len());
    for (i, n) in nodes.into_iter().enumerate() {
        if let (
            Some(ControlNode::WithRobotAtLocation { location: prev, body: prev_body }),
            ControlNode::WithRobotAtLocation { location, body },
        ) = (out.last_mut(), &n)
        {
            if prev == location {
                prev_body.extend(body.iter().cloned());
                cx.applied.push(AppliedTransform {
                    rule: TransformRule::MergeNavigation,
                    path: format!("{path}/{i}"),
                    detail: "navigation elided".into(),
                });
                continue;
            }
        }
        out.push(n);
    }
    out
}

/// A transport call, possibly wrapped in one `handle-failure`.
struct Transport {
    object: Value,
    destination: Value,
    wrapper: Option<ControlNode>,
}

fn transport_call(d: &Designator) -> Option<(Value, Value)> {
    if d.type_name() != Some(TRANSPORT_SCHEMA) {
        return None;
    }
    Some((d.get("object-to-be-fetched")?.clone(), d.get("destination")?.clone()))
}

fn as_transport(n: &ControlNode) -> Option<Transport> {
    match n {
        ControlNode::Perform(Value::Desig(d)) => {
            let (object, destination) = transport_call(d)?;
            Some(Transport { object, destination, wrapper: None })
        }
        ControlNode::HandleFailure { body, .. } => {
            let ControlNode::Perform(Value::Desig(d)) = body.as_ref() else { return None };
            let (object, destination) = transport_call(d)?;
            Some(Transport { object, destination, wrapper: Some(n.clone()) })
        }
        _ => None,
    }
}

fn surfaces(t: &Transport, w: &WorldState) -> Option<(String, String)> {
    let id = resolve_object(w, &t.object)?;
    let o = w.object(&id)?;
    if o.cog_offset() > MotionConfig::default().single_hand_cog {
        return None;
    }
    let source = o.support.clone()?;
    let dest = location_pose(&t.destination)?;
    let target = target_container(w, &dest).or_else(|| w.support_below(dest.xy(), dest.z + 1e-6).map(|s| s.id))?;
    Some((source, target))
}

fn same_wrapper(a: &Option<ControlNode>, b: &Option<ControlNode>) -> bool {
    match (a, b) {
        (None, None) => true,
        (
            Some(ControlNode::HandleFailure { handlers: ha, max_retries: ra, .. }),
            Some(ControlNode::HandleFailure { handlers: hb, max_retries: rb, .. }),
        ) => ha == hb && ra == rb,
        _ => false,
    }
}

fn batch(nodes: Vec<ControlNode>, path: &str, cx: &mut Ctx) -> Vec<ControlNode> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut i = 0;
    while i < nodes.len() {
        if i + 1 < nodes.len() {
            if let (Some(a), Some(b)) = (as_transport(&nodes[i]), as_transport(&nodes[i + 1])) {
                let sa = surfaces(&a, cx.belief);
                if let Some((src, dst)) = sa.clone().filter(|_| sa == surfaces(&b, cx.belief) && same_wrapper(&a.wrapper, &b.wrapper)) {
                    let call = Designator::action(BATCH_SCHEMA)
                        .with("first-object", a.object.clone())
                        .with("first-destination", a.destination.clone())
                        .with("second-object", b.object.clone())
                        .with("second-destination", b.destination.clone());
                    let perform = ControlNode::Perform(Value::Desig(call));
                    let node = match a.wrapper {
                        Some(ControlNode::HandleFailure { handlers, max_retries, .. }) => {
                            ControlNode::HandleFailure { body: Box::new(perform), handlers, max_retries }
                        }
                        _ => perform,
                    };
                    cx.applied.push(AppliedTransform {
                        rule: TransformRule::BatchTransport,
                        path: format!("{path}/{i}"),
                        detail: format!("two transports {src} -> {dst}"),
                    });
                    out.push(node);
                    i += 2;
                    continue;
                }
            }
        }
        out.push(nodes[i].clone());
        i += 1;
    }
    out
}

//! Transport goals read off a plan, checked against the final world.

use serde::Serialize;

use crate::contextualizer::{location_pose, target_container};
use crate::geom::Pose;
use crate::plan_lang::{ControlNode, PlanAst, Value};
use crate::world::{resolve_object, WorldState};

pub const GOAL_XY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportGoal {
    pub object: String,
    pub destination: Pose,
    /// Support the destination lies on in the initial world; container
    /// destinations are given in the container's fully open frame.
    pub support: Option<String>,
}

const ROLES: [(&str, &str); 3] = [
    ("object-to-be-fetched", "destination"),
    ("first-object", "first-destination"),
    ("second-object", "second-destination"),
];

fn collect(n: &ControlNode, world: &WorldState, out: &mut Vec<TransportGoal>) {
    match n {
        ControlNode::Seq(cs)
        | ControlNode::Par(cs)
        | ControlNode::Pursue(cs)
        | ControlNode::TryInOrder(cs)
        | ControlNode::TryAll(cs) => cs.iter().for_each(|c| collect(c, world, out)),
        ControlNode::WithRobotAtLocation { body, .. } | ControlNode::When { body, .. } => {
            body.iter().for_each(|c| collect(c, world, out))
        }
        ControlNode::HandleFailure { body, .. } => collect(body, world, out),
        ControlNode::Perform(Value::Desig(d)) => {
            for (o, p) in ROLES {
                let (Some(o), Some(p)) = (d.get(o), d.get(p).and_then(location_pose)) else { continue };
                let Some(object) = resolve_object(world, o) else { continue };
                let support = target_container(world, &p).or_else(|| world.support_below(p.xy(), p.z + 1e-6).map(|s| s.id));
                out.push(TransportGoal { object, destination: p, support });
            }
        }
        _ => {}
    }
}

/// Goals of the top-level transports of a plan.
pub fn transport_goals(ast: &PlanAst, world: &WorldState) -> Vec<TransportGoal> {
    let mut out = Vec::new();
    collect(&ast.root, world, &mut out);
    out
}

/// Object rests upright and stable on the destination support; on fixed
/// surfaces it is also within tolerance of the destination.
pub fn check_goal(world: &WorldState, g: &TransportGoal) -> bool {
    let Some(o) = world.object(&g.object) else { return false };
    let Some(support) = &g.support else { return false };
    if o.support.as_deref() != Some(support.as_str()) || o.toppled || o.broken {
        return false;
    }
    if !world.stable_at(&o.id, &o.pose, support) {
        return false;
    }
    world.container(support).is_some() || o.pose.xy().dist(g.destination.xy()) <= GOAL_XY_TOLERANCE
}

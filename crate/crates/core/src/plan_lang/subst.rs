use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::PlanError;

/// Variable name (without `?`) to value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bindings(pub BTreeMap<String, Value>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, var: &str, value: Value) {
        self.0.insert(var.trim_start_matches('?').to_string(), value);
    }

    pub fn with(mut self, var: &str, value: Value) -> Self {
        self.insert(var, value);
        self
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var.trim_start_matches('?'))
    }

    pub fn contains(&self, var: &str) -> bool {
        self.get(var).is_some()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn extend(&mut self, other: &Bindings) {
        for (k, v) in other.iter() {
            self.0.insert(k.clone(), v.clone());
        }
    }
}

impl<'a> FromIterator<(&'a str, Value)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (&'a str, Value)>>(iter: I) -> Self {
        let mut b = Bindings::new();
        for (k, v) in iter {
            b.insert(k, v);
        }
        b
    }
}

fn collect_value(v: &Value, out: &mut Vec<Variable>) {
    match v {
        Value::Var(var) => {
            if !out.contains(var) {
                out.push(var.clone());
            }
        }
        Value::Desig(d) => d.props.iter().for_each(|(_, v)| collect_value(v, out)),
        Value::Lit(_) => {}
    }
}

fn collect_condition(c: &Condition, out: &mut Vec<Variable>) {
    match c {
        Condition::Goal { args, .. } => args.iter().for_each(|a| collect_value(a, out)),
        Condition::Fluent(_) => {}
        Condition::Not(inner) => collect_condition(inner, out),
        Condition::And(cs) => cs.iter().for_each(|c| collect_condition(c, out)),
    }
}

fn collect_node(n: &ControlNode, out: &mut Vec<Variable>) {
    match n {
        ControlNode::Seq(cs)
        | ControlNode::Par(cs)
        | ControlNode::Pursue(cs)
        | ControlNode::TryInOrder(cs)
        | ControlNode::TryAll(cs) => cs.iter().for_each(|c| collect_node(c, out)),
        ControlNode::WithRobotAtLocation { location, body } => {
            collect_value(location, out);
            body.iter().for_each(|c| collect_node(c, out));
        }
        ControlNode::Perform(v) => collect_value(v, out),
        ControlNode::HandleFailure { body, handlers, .. } => {
            collect_node(body, out);
            for h in handlers {
                h.body.iter().for_each(|c| collect_node(c, out));
            }
        }
        ControlNode::When { condition, body } => {
            collect_condition(condition, out);
            body.iter().for_each(|c| collect_node(c, out));
        }
        ControlNode::WaitFor { .. }
        | ControlNode::Pulse { .. }
        | ControlNode::Sleep(_)
        | ControlNode::Fail(_)
        | ControlNode::Atom(_) => {}
    }
}

/// Variables occurring in `nodes`, in order of first occurrence.
pub fn free_variables_in(nodes: &[ControlNode]) -> Vec<Variable> {
    let mut out = Vec::new();
    nodes.iter().for_each(|n| collect_node(n, &mut out));
    out
}

/// Variables occurring anywhere in the plan (definition bodies, then top-level forms).
pub fn free_variables(ast: &PlanAst) -> Vec<Variable> {
    let mut out = Vec::new();
    for def in &ast.definitions {
        def.body.iter().for_each(|n| collect_node(n, &mut out));
    }
    collect_node(&ast.root, &mut out);
    out
}

const ARMS: [&str; 3] = ["left", "right", "both"];
const GRASPS: [&str; 4] = ["top", "side", "handle", "two-hand"];

fn is_location(v: &Value) -> bool {
    v.as_pose().is_some() || v.as_designator().is_some_and(|d| d.kind == DesignatorKind::Location)
}

/// Checks the value class a designator key implies for a bound value.
fn check(key: &str, var: &Variable, v: &Value) -> Result<(), PlanError> {
    let expected = match key {
        "pose" if v.as_pose().is_none() => "pose",
        "arm" if !v.as_symbol().is_some_and(|s| ARMS.contains(&s)) => "arm (left, right or both)",
        "grasp" if !v.as_symbol().is_some_and(|s| GRASPS.contains(&s)) => "grasp (top, side, handle or two-hand)",
        "lift-pose" | "lower-pose" | "offset" if v.as_number().is_none() => "number",
        "object"
            if !(v.as_symbol().is_some()
                || v.as_designator().is_some_and(|d| d.kind == DesignatorKind::Object)) =>
        {
            "object designator or name"
        }
        "location" if !is_location(v) => "location designator or pose",
        _ => return Ok(()),
    };
    Err(PlanError::TypeMismatch { variable: var.0.clone(), key: key.to_string(), expected })
}

fn subst_value(v: &Value, key: Option<&str>, b: &Bindings) -> Result<Value, PlanError> {
    Ok(match v {
        Value::Var(var) => match b.get(&var.0) {
            Some(bound) => {
                if let Some(k) = key {
                    check(k, var, bound)?;
                }
                bound.clone()
            }
            None => v.clone(),
        },
        Value::Desig(d) => {
            let mut out = Designator::new(d.kind.clone());
            for (k, pv) in &d.props {
                out.props.push((k.clone(), subst_value(pv, Some(k), b)?));
            }
            Value::Desig(out)
        }
        Value::Lit(_) => v.clone(),
    })
}

fn subst_condition(c: &Condition, b: &Bindings) -> Result<Condition, PlanError> {
    Ok(match c {
        Condition::Goal { predicate, args } => Condition::Goal {
            predicate: predicate.clone(),
            args: args.iter().map(|a| subst_value(a, None, b)).collect::<Result<_, _>>()?,
        },
        Condition::Fluent(_) => c.clone(),
        Condition::Not(inner) => Condition::Not(Box::new(subst_condition(inner, b)?)),
        Condition::And(cs) => Condition::And(cs.iter().map(|c| subst_condition(c, b)).collect::<Result<_, _>>()?),
    })
}

fn subst_node(n: &ControlNode, b: &Bindings) -> Result<ControlNode, PlanError> {
    let many = |cs: &[ControlNode]| substitute_nodes(cs, b);
    Ok(match n {
        ControlNode::Seq(cs) => ControlNode::Seq(many(cs)?),
        ControlNode::Par(cs) => ControlNode::Par(many(cs)?),
        ControlNode::Pursue(cs) => ControlNode::Pursue(many(cs)?),
        ControlNode::TryInOrder(cs) => ControlNode::TryInOrder(many(cs)?),
        ControlNode::TryAll(cs) => ControlNode::TryAll(many(cs)?),
        ControlNode::WithRobotAtLocation { location, body } => ControlNode::WithRobotAtLocation {
            location: subst_value(location, Some("location"), b)?,
            body: many(body)?,
        },
        ControlNode::Perform(v) => ControlNode::Perform(subst_value(v, None, b)?),
        ControlNode::HandleFailure { body, handlers, max_retries } => ControlNode::HandleFailure {
            body: Box::new(subst_node(body, b)?),
            handlers: handlers
                .iter()
                .map(|h| Ok(Handler { kinds: h.kinds.clone(), body: many(&h.body)? }))
                .collect::<Result<_, PlanError>>()?,
            max_retries: *max_retries,
        },
        ControlNode::When { condition, body } => {
            ControlNode::When { condition: subst_condition(condition, b)?, body: many(body)? }
        }
        ControlNode::WaitFor { .. }
        | ControlNode::Pulse { .. }
        | ControlNode::Sleep(_)
        | ControlNode::Fail(_)
        | ControlNode::Atom(_) => n.clone(),
    })
}

/// Simultaneous substitution over a node list; bound values are not rescanned.
pub fn substitute_nodes(nodes: &[ControlNode], bindings: &Bindings) -> Result<Vec<ControlNode>, PlanError> {
    nodes.iter().map(|n| subst_node(n, bindings)).collect()
}

/// Replaces every bound variable occurrence in definition bodies and top-level forms.
pub fn substitute_bindings(ast: &PlanAst, bindings: &Bindings) -> Result<PlanAst, PlanError> {
    if bindings.is_empty() {
        return Ok(ast.clone());
    }
    let definitions = ast
        .definitions
        .iter()
        .map(|d| {
            Ok(PlanDef {
                name: d.name.clone(),
                formals: d.formals.clone(),
                query_variables: d.query_variables.clone(),
                body: substitute_nodes(&d.body, bindings)?,
            })
        })
        .collect::<Result<_, PlanError>>()?;
    Ok(PlanAst { definitions, fluents: ast.fluents.clone(), root: subst_node(&ast.root, bindings)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose;
    use crate::plan_lang::parse_plan;

    #[test]
    fn free_variables_in_first_occurrence_order() {
        let ast = parse_plan("(perform (an action (type t) (b ?y) (a ?x) (c ?y)))").unwrap();
        let names: Vec<_> = free_variables(&ast).into_iter().map(|v| v.0).collect();
        assert_eq!(names, ["y", "x"]);
    }

    #[test]
    fn type_mismatch_on_pose_key() {
        let ast = parse_plan("(perform (an action (type putting) (pose ?p)))").unwrap();
        let err = substitute_bindings(&ast, &Bindings::new().with("p", Value::number(1.0))).unwrap_err();
        assert!(matches!(err, PlanError::TypeMismatch { key, .. } if key == "pose"));
        let ok = substitute_bindings(&ast, &Bindings::new().with("p", Value::pose(Pose::new(1.0, 0.0, 0.7, 0.0))));
        assert!(free_variables(&ok.unwrap()).is_empty());
    }

    #[test]
    fn simultaneous_not_recursive() {
        let ast = parse_plan("(perform (an action (type t) (a ?x) (b ?y)))").unwrap();
        let b = Bindings::new().with("x", Value::var("y")).with("y", Value::symbol("k"));
        let out = substitute_bindings(&ast, &b).unwrap();
        let names: Vec<_> = free_variables(&out).into_iter().map(|v| v.0).collect();
        assert_eq!(names, ["y"]);
    }
}

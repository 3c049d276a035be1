//! Contextualization: plan instantiation, action expansion down to motions,
//! parameter queries, location streams and plan transformations.

mod ground;
mod hierarchy;
mod location;
mod transform;

pub use ground::{
    effective_arm, ground_atomic, guard_holds, location_pose, resolve_container, target_container, GroundError,
};
pub use hierarchy::{child_designator, expand_action_designator, ActionHierarchy, ExpansionNode, Guard, HierarchyError, Step};
pub use location::{
    resolve_location_designator, ring_candidates, stance_combo, LocationSpec, LocationStream, Target, HEADINGS,
    RADII,
};
pub use transform::{apply_plan_transformations, AppliedTransform, TransformRule};

use thiserror::Error;

use crate::plan_lang::{
    free_variables_in, substitute_nodes, Bindings, ControlNode, Designator, DesignatorKind, PlanAst, PlanDef, PlanError, Value,
    Variable,
};
use crate::vocab::{motion_for_atomic, MotionType};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContextError {
    #[error("unknown plan schema `{0}`")]
    UnknownSchema(String),
    #[error("missing argument ?{argument} for `{schema}`")]
    MissingArgument { schema: String, argument: String },
    #[error("unknown atomic action `{0}`")]
    UnknownAtomicAction(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// A schema with its arguments substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantiatedPlan {
    pub schema: String,
    pub body: Vec<ControlNode>,
}

impl InstantiatedPlan {
    pub fn to_ast(&self) -> PlanAst {
        PlanAst::from_root(ControlNode::Seq(self.body.clone()))
    }
}

/// Looks the schema up among `definitions` and substitutes `args` into its body.
pub fn instantiate_plan(
    definitions: &[PlanDef],
    schema: &str,
    args: &Bindings,
) -> Result<InstantiatedPlan, ContextError> {
    let def = definitions
        .iter()
        .find(|d| d.name == schema)
        .ok_or_else(|| ContextError::UnknownSchema(schema.to_string()))?;
    if let Some(missing) = def.formals.iter().find(|f| !args.contains(f.name())) {
        return Err(ContextError::MissingArgument { schema: schema.into(), argument: missing.name().into() });
    }
    let body = substitute_nodes(&def.body, args)?;
    Ok(InstantiatedPlan { schema: schema.to_string(), body })
}

/// Arguments for a schema call, read from an action designator whose keys
/// name the formals.
pub fn schema_arguments(def: &PlanDef, action: &Designator) -> Bindings {
    def.formals
        .iter()
        .filter_map(|f| action.get(f.name()).map(|v| (f.name(), bare_pose(v))))
        .collect()
}

/// `(a location (pose ...))` and the pose it names are the same argument.
fn bare_pose(v: &Value) -> Value {
    match v {
        Value::Desig(d) if d.kind == DesignatorKind::Location && d.props.len() == 1 => {
            d.get("pose").filter(|p| p.as_pose().is_some()).cloned().unwrap_or_else(|| v.clone())
        }
        _ => v.clone(),
    }
}

/// A parameter query: the open variables and the body that must succeed.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamQuery {
    pub schema: String,
    pub variables: Vec<Variable>,
    pub to_succeed: Vec<ControlNode>,
}

pub fn formulate_parameter_query(plan: &InstantiatedPlan) -> ParamQuery {
    ParamQuery {
        schema: plan.schema.clone(),
        variables: free_variables_in(&plan.body),
        to_succeed: plan.body.clone(),
    }
}

impl ParamQuery {
    /// True when `b` grounds every query variable.
    pub fn is_total(&self, b: &Bindings) -> bool {
        self.variables.iter().all(|v| b.contains(v.name()))
    }

    pub fn ground(&self, b: &Bindings) -> Result<Vec<ControlNode>, PlanError> {
        substitute_nodes(&self.to_succeed, b)
    }
}

/// Rewrites an atomic action designator into its motion designator; all
/// props other than `type` are forwarded.
pub fn resolve_atomic_to_motion(action: &Designator) -> Result<Designator, ContextError> {
    let t = action.type_name().unwrap_or_default();
    let motion: MotionType = motion_for_atomic(t).ok_or_else(|| ContextError::UnknownAtomicAction(t.into()))?;
    let mut d = Designator::motion(motion.as_str());
    for (k, v) in action.props.iter().filter(|(k, _)| k != "type") {
        d.props.push((k.clone(), v.clone()));
    }
    Ok(d)
}

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan_lang::{Designator, Value};
use crate::vocab::is_atomic;

pub const REFERENCE_HIERARCHY: &str = include_str!("../../data/hierarchy.toml");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HierarchyError {
    #[error("hierarchy document: {0}")]
    Schema(String),
    #[error("action `{0}` is part of a cycle")]
    Cycle(String),
    #[error("step `{step}` of `{parent}` is neither composite nor atomic")]
    Dangling { parent: String, step: String },
    #[error("unknown action type `{0}`")]
    UnknownActionType(String),
}

/// Execution-time preconditions of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Guard {
    ContainerClosed,
    ContainerOpen,
    FreeArm,
    ObjectHeld,
    ObjectNotHeld,
    HasLocation,
}

impl Guard {
    pub fn as_str(self) -> &'static str {
        match self {
            Guard::ContainerClosed => "container-closed",
            Guard::ContainerOpen => "container-open",
            Guard::FreeArm => "free-arm",
            Guard::ObjectHeld => "object-held",
            Guard::ObjectNotHeld => "object-not-held",
            Guard::HasLocation => "has-location",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "type")]
    pub action_type: String,
    #[serde(default)]
    pub when: Vec<Guard>,
    #[serde(default)]
    pub props: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ActionEntry {
    #[serde(rename = "type")]
    action_type: String,
    #[serde(default)]
    when: Vec<Guard>,
    steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Document {
    inherit: Vec<String>,
    action: Vec<ActionEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionHierarchy {
    inherit: Vec<String>,
    entries: Vec<ActionEntry>,
}

impl ActionHierarchy {
    pub fn reference() -> Self {
        Self::from_toml(REFERENCE_HIERARCHY).expect("shipped hierarchy is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, HierarchyError> {
        let doc: Document = toml::from_str(text).map_err(|e| HierarchyError::Schema(e.to_string()))?;
        let h = ActionHierarchy { inherit: doc.inherit, entries: doc.action };
        h.check()?;
        Ok(h)
    }

    fn entry(&self, t: &str) -> Option<&ActionEntry> {
        self.entries.iter().find(|e| e.action_type == t)
    }

    pub fn composite_types(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.action_type.as_str()).collect()
    }

    pub fn contains(&self, t: &str) -> bool {
        self.entry(t).is_some() || is_atomic(t)
    }

    pub fn steps(&self, t: &str) -> Option<&[Step]> {
        self.entry(t).map(|e| e.steps.as_slice())
    }

    /// Guards an action of type `t` carries wherever it appears.
    pub fn guards(&self, t: &str) -> &[Guard] {
        self.entry(t).map_or(&[], |e| e.when.as_slice())
    }

    fn check(&self) -> Result<(), HierarchyError> {
        // Depth-first walk with an explicit on-stack set.
        fn visit<'a>(h: &'a ActionHierarchy, t: &'a str, stack: &mut Vec<&'a str>) -> Result<(), HierarchyError> {
            if stack.contains(&t) {
                return Err(HierarchyError::Cycle(t.to_string()));
            }
            let Some(e) = h.entry(t) else { return Ok(()) };
            stack.push(t);
            for s in &e.steps {
                if h.entry(&s.action_type).is_none() && !is_atomic(&s.action_type) {
                    return Err(HierarchyError::Dangling { parent: t.into(), step: s.action_type.clone() });
                }
                visit(h, &s.action_type, stack)?;
            }
            stack.pop();
            Ok(())
        }
        for e in &self.entries {
            visit(self, &e.action_type, &mut Vec::new())?;
        }
        Ok(())
    }
}

/// One node of an expansion tree. Leaves carry atomic action designators.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionNode {
    pub designator: Designator,
    pub guards: Vec<Guard>,
    pub children: Vec<ExpansionNode>,
}

impl ExpansionNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaves(&self) -> Vec<&ExpansionNode> {
        if self.is_leaf() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }
}

fn toml_to_value(v: &toml::Value) -> Value {
    match v {
        toml::Value::Float(f) => Value::number(*f),
        toml::Value::Integer(i) => Value::number(*i as f64),
        toml::Value::Boolean(b) => Value::symbol(if *b { "true" } else { "false" }),
        other => Value::symbol(other.as_str().map_or_else(|| other.to_string(), str::to_string)),
    }
}

/// Step designator: inherited parent props, then the step's own props.
pub fn child_designator(h: &ActionHierarchy, parent: &Designator, step: &Step) -> Designator {
    let mut d = Designator::action(&step.action_type);
    for (k, v) in &parent.props {
        if h.inherit.iter().any(|i| i == k) {
            d.set(k, v.clone());
        }
    }
    for (k, v) in &step.props {
        let value = match v.as_str().and_then(|s| s.strip_prefix('^')) {
            Some(from) => match parent.get(from) {
                Some(pv) => pv.clone(),
                None => continue,
            },
            None => toml_to_value(v),
        };
        d.set(k, value);
    }
    d
}

/// Expands an action designator through the hierarchy down to atomic actions.
pub fn expand_action_designator(d: &Designator, h: &ActionHierarchy) -> Result<ExpansionNode, HierarchyError> {
    let t = d.type_name().unwrap_or_default();
    expand(d, h, h.guards(t).to_vec())
}

fn expand(d: &Designator, h: &ActionHierarchy, guards: Vec<Guard>) -> Result<ExpansionNode, HierarchyError> {
    let t = d.type_name().unwrap_or_default().to_string();
    if is_atomic(&t) {
        return Ok(ExpansionNode { designator: d.clone(), guards, children: Vec::new() });
    }
    let steps = h.steps(&t).ok_or(HierarchyError::UnknownActionType(t))?;
    let mut children = Vec::with_capacity(steps.len());
    for s in steps {
        let child = child_designator(h, d, s);
        let mut g = s.when.clone();
        g.extend(h.guards(&s.action_type).iter().copied());
        children.push(expand(&child, h, g)?);
    }
    Ok(ExpansionNode { designator: d.clone(), guards, children })
}

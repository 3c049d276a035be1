use std::fmt;

use serde::{Deserialize, Serialize};

use crate::failure::FailureKind;
use crate::geom::Pose;

/// A plan variable, stored without its leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into().trim_start_matches('?').to_string())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lit", content = "v", rename_all = "kebab-case")]
pub enum Literal {
    Symbol(String),
    Number(f64),
    Pose(Pose),
    Str(String),
}

impl Literal {
    pub fn symbol(s: impl Into<String>) -> Self {
        Literal::Symbol(s.into())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Literal::Symbol(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "value", content = "v", rename_all = "kebab-case")]
pub enum Value {
    Lit(Literal),
    Var(Variable),
    Desig(Designator),
}

impl Value {
    pub fn symbol(s: impl Into<String>) -> Self {
        Value::Lit(Literal::Symbol(s.into()))
    }

    pub fn number(n: f64) -> Self {
        Value::Lit(Literal::Number(n))
    }

    pub fn pose(p: Pose) -> Self {
        Value::Lit(Literal::Pose(p))
    }

    pub fn var(name: &str) -> Self {
        Value::Var(Variable::new(name))
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Value::Lit(Literal::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Lit(Literal::Number(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn as_pose(&self) -> Option<Pose> {
        match self {
            Value::Lit(Literal::Pose(p)) => Some(*p),
            _ => None,
        }
    }

    pub fn as_designator(&self) -> Option<&Designator> {
        match self {
            Value::Desig(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            Value::Var(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignatorKind {
    Action,
    Motion,
    Location,
    Object,
    Other(String),
}

impl DesignatorKind {
    pub fn from_word(word: &str) -> Self {
        match word {
            "action" => DesignatorKind::Action,
            "motion" => DesignatorKind::Motion,
            "location" => DesignatorKind::Location,
            "object" => DesignatorKind::Object,
            other => DesignatorKind::Other(other.to_string()),
        }
    }

    pub fn word(&self) -> &str {
        match self {
            DesignatorKind::Action => "action",
            DesignatorKind::Motion => "motion",
            DesignatorKind::Location => "location",
            DesignatorKind::Object => "object",
            DesignatorKind::Other(w) => w,
        }
    }

    pub fn article(&self) -> &'static str {
        match self.word().chars().next() {
            Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
            _ => "a",
        }
    }
}

/// Kind-tagged ordered key-value description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Designator {
    pub kind: DesignatorKind,
    pub props: Vec<(String, Value)>,
}

impl Designator {
    pub fn new(kind: DesignatorKind) -> Self {
        Designator { kind, props: Vec::new() }
    }

    pub fn action(action_type: &str) -> Self {
        Designator::new(DesignatorKind::Action).with("type", Value::symbol(action_type))
    }

    pub fn motion(motion_type: &str) -> Self {
        Designator::new(DesignatorKind::Motion).with("type", Value::symbol(motion_type))
    }

    pub fn location() -> Self {
        Designator::new(DesignatorKind::Location)
    }

    pub fn object_named(id: &str) -> Self {
        Designator::new(DesignatorKind::Object).with("name", Value::symbol(id))
    }

    /// Builder-style set; replaces an existing key in place.
    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: Value) {
        match self.props.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.props.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.props.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn remove(&mut self, key: &str) -> Option<Value> {
        let idx = self.props.iter().position(|(k, _)| k == key)?;
        Some(self.props.remove(idx).1)
    }

    pub fn type_name(&self) -> Option<&str> {
        self.get("type").and_then(Value::as_symbol)
    }

    pub fn symbol(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(Value::as_symbol)
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_number)
    }

    pub fn designator(&self, key: &str) -> Option<&Designator> {
        self.get(key).and_then(Value::as_designator)
    }
}

impl fmt::Display for Designator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print_designator(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaitMode {
    ValueAvailable,
    Pulsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BufferMode {
    Latest,
    All,
    None,
}

impl BufferMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BufferMode::Latest => "latest",
            BufferMode::All => "all",
            BufferMode::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handler {
    pub kinds: Vec<FailureKind>,
    pub body: Vec<ControlNode>,
}

/// Guard of a `when` form.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// Knowledge-base goal `(predicate arg...)`.
    Goal { predicate: String, args: Vec<Value> },
    /// True when the fluent holds a value other than `nil`/`false`.
    Fluent(String),
    Not(Box<Condition>),
    And(Vec<Condition>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlNode {
    Seq(Vec<ControlNode>),
    Par(Vec<ControlNode>),
    Pursue(Vec<ControlNode>),
    TryInOrder(Vec<ControlNode>),
    TryAll(Vec<ControlNode>),
    WithRobotAtLocation { location: Value, body: Vec<ControlNode> },
    Perform(Value),
    HandleFailure { body: Box<ControlNode>, handlers: Vec<Handler>, max_retries: u32 },
    When { condition: Condition, body: Vec<ControlNode> },
    WaitFor { fluent: String, mode: WaitMode },
    Pulse { fluent: String, value: Literal },
    Sleep(u32),
    Fail(FailureKind),
    Atom(Literal),
}

impl ControlNode {
    /// Wraps several forms into one node; a single form is returned as-is.
    pub fn block(mut nodes: Vec<ControlNode>) -> ControlNode {
        if nodes.len() == 1 {
            nodes.pop().unwrap()
        } else {
            ControlNode::Seq(nodes)
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            ControlNode::Seq(_) => "seq",
            ControlNode::Par(_) => "par",
            ControlNode::Pursue(_) => "pursue",
            ControlNode::TryInOrder(_) => "try-in-order",
            ControlNode::TryAll(_) => "try-all",
            ControlNode::WithRobotAtLocation { .. } => "with-robot-at-location",
            ControlNode::Perform(_) => "perform",
            ControlNode::HandleFailure { .. } => "handle-failure",
            ControlNode::When { .. } => "when",
            ControlNode::WaitFor { .. } => "wait-for",
            ControlNode::Pulse { .. } => "pulse",
            ControlNode::Sleep(_) => "sleep",
            ControlNode::Fail(_) => "fail",
            ControlNode::Atom(_) => "atom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanDef {
    pub name: String,
    pub formals: Vec<Variable>,
    /// Parameters left for the generative model to answer.
    pub query_variables: Vec<Variable>,
    pub body: Vec<ControlNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluentDecl {
    pub name: String,
    pub buffer: BufferMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanAst {
    pub definitions: Vec<PlanDef>,
    pub fluents: Vec<FluentDecl>,
    /// Top-level forms in source order, wrapped in a `seq`.
    pub root: ControlNode,
}

impl PlanAst {
    pub fn from_root(root: ControlNode) -> Self {
        PlanAst { definitions: Vec::new(), fluents: Vec::new(), root }
    }

    pub fn definition(&self, name: &str) -> Option<&PlanDef> {
        self.definitions.iter().find(|d| d.name == name)
    }
}

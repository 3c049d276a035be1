use std::fmt;

use super::ast::*;
use crate::vocab::{is_atomic, MotionType, COMPOSITE_ACTIONS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// One per occurrence; `path` names the definition and child indices.
    UnboundVariable { variable: String, path: String },
    UnknownDesignatorKind { kind: String, path: String },
    UnknownAtomicAction { action_type: String, path: String },
    HandleFailureWithoutHandlers { path: String },
    PerformWithoutAction { path: String },
}

impl Diagnostic {
    pub fn path(&self) -> &str {
        match self {
            Diagnostic::UnboundVariable { path, .. }
            | Diagnostic::UnknownDesignatorKind { path, .. }
            | Diagnostic::UnknownAtomicAction { path, .. }
            | Diagnostic::HandleFailureWithoutHandlers { path }
            | Diagnostic::PerformWithoutAction { path } => path,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnboundVariable { variable, path } => write!(f, "{path}: unbound variable ?{variable}"),
            Diagnostic::UnknownDesignatorKind { kind, path } => write!(f, "{path}: unknown designator kind `{kind}`"),
            Diagnostic::UnknownAtomicAction { action_type, path } => {
                write!(f, "{path}: action type `{action_type}` has no motion mapping")
            }
            Diagnostic::HandleFailureWithoutHandlers { path } => write!(f, "{path}: handle-failure without handlers"),
            Diagnostic::PerformWithoutAction { path } => {
                write!(f, "{path}: perform needs one action or motion designator")
            }
        }
    }
}

struct Checker<'a> {
    scope: Vec<Variable>,
    known_actions: &'a [String],
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn value(&mut self, v: &Value, path: &str) {
        match v {
            Value::Var(var) if !self.scope.contains(var) => {
                self.out.push(Diagnostic::UnboundVariable { variable: var.0.clone(), path: path.to_string() })
            }
            Value::Desig(d) => {
                if let DesignatorKind::Other(kind) = &d.kind {
                    self.out.push(Diagnostic::UnknownDesignatorKind { kind: kind.clone(), path: path.to_string() });
                }
                for (k, pv) in &d.props {
                    self.value(pv, &format!("{path}/{k}"));
                }
            }
            _ => {}
        }
    }

    fn condition(&mut self, c: &Condition, path: &str) {
        match c {
            Condition::Goal { args, .. } => args.iter().for_each(|a| self.value(a, path)),
            Condition::Fluent(_) => {}
            Condition::Not(inner) => self.condition(inner, path),
            Condition::And(cs) => cs.iter().for_each(|c| self.condition(c, path)),
        }
    }

    fn nodes(&mut self, ns: &[ControlNode], path: &str) {
        for (i, n) in ns.iter().enumerate() {
            self.node(n, &format!("{path}/{i}"));
        }
    }

    fn node(&mut self, n: &ControlNode, path: &str) {
        match n {
            ControlNode::Seq(cs)
            | ControlNode::Par(cs)
            | ControlNode::Pursue(cs)
            | ControlNode::TryInOrder(cs)
            | ControlNode::TryAll(cs) => self.nodes(cs, path),
            ControlNode::WithRobotAtLocation { location, body } => {
                self.value(location, &format!("{path}/location"));
                self.nodes(body, path);
            }
            ControlNode::Perform(v) => {
                match v {
                    Value::Var(_) => {}
                    Value::Desig(d) if d.kind == DesignatorKind::Action => match d.get("type") {
                        Some(Value::Lit(Literal::Symbol(t))) => {
                            if !is_atomic(t) && !self.known_actions.iter().any(|k| k == t) {
                                self.out.push(Diagnostic::UnknownAtomicAction {
                                    action_type: t.clone(),
                                    path: path.to_string(),
                                });
                            }
                        }
                        Some(Value::Var(_)) => {}
                        _ => self.out.push(Diagnostic::PerformWithoutAction { path: path.to_string() }),
                    },
                    // Motion designators run directly.
                    Value::Desig(d)
                        if d.kind == DesignatorKind::Motion
                            && d.type_name().is_some_and(|t| t.parse::<MotionType>().is_ok()) => {}
                    _ => self.out.push(Diagnostic::PerformWithoutAction { path: path.to_string() }),
                }
                self.value(v, path);
            }
            ControlNode::HandleFailure { body, handlers, .. } => {
                if handlers.is_empty() {
                    self.out.push(Diagnostic::HandleFailureWithoutHandlers { path: path.to_string() });
                }
                self.node(body, &format!("{path}/body"));
                for (i, h) in handlers.iter().enumerate() {
                    self.nodes(&h.body, &format!("{path}/on{i}"));
                }
            }
            ControlNode::When { condition, body } => {
                self.condition(condition, &format!("{path}/when"));
                self.nodes(body, path);
            }
            ControlNode::WaitFor { .. }
            | ControlNode::Pulse { .. }
            | ControlNode::Sleep(_)
            | ControlNode::Fail(_)
            | ControlNode::Atom(_) => {}
        }
    }
}

/// Validates against the built-in composite vocabulary plus the plan's own schemas.
pub fn validate_plan(ast: &PlanAst) -> Vec<Diagnostic> {
    let extra: Vec<String> = COMPOSITE_ACTIONS.iter().map(|s| s.to_string()).collect();
    validate_plan_with(ast, &extra)
}

/// `known_actions` lists non-atomic action types that may appear in `perform`.
pub fn validate_plan_with(ast: &PlanAst, known_actions: &[String]) -> Vec<Diagnostic> {
    let mut known: Vec<String> = known_actions.to_vec();
    known.extend(ast.definitions.iter().map(|d| d.name.clone()));
    let mut c = Checker { scope: Vec::new(), known_actions: &known, out: Vec::new() };
    for def in &ast.definitions {
        c.scope = def.formals.iter().chain(&def.query_variables).cloned().collect();
        c.nodes(&def.body, &def.name);
    }
    c.scope.clear();
    c.node(&ast.root, "top");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan_lang::parse_plan;

    #[test]
    fn table_one_types_pass_and_others_flagged() {
        assert!(validate_plan(&parse_plan("(perform (an action (type grasping)))").unwrap()).is_empty());
        let d = validate_plan(&parse_plan("(perform (an action (type teleporting)))").unwrap());
        assert!(matches!(d.as_slice(), [Diagnostic::UnknownAtomicAction { action_type, .. }] if action_type == "teleporting"));
    }

    #[test]
    fn structural_diagnostics() {
        let src = "(handle-failure (perform (a motion (type hovering))))
                   (perform (a gizmo (type x)))";
        let d = validate_plan(&parse_plan(src).unwrap());
        assert!(d.contains(&Diagnostic::HandleFailureWithoutHandlers { path: "top/0".into() }));
        assert!(d.iter().filter(|x| matches!(x, Diagnostic::PerformWithoutAction { .. })).count() == 2);
        assert!(d.iter().any(|x| matches!(x, Diagnostic::UnknownDesignatorKind { kind, .. } if kind == "gizmo")));
        assert!(validate_plan(&parse_plan("(perform (a motion (type going)))").unwrap()).is_empty());
    }

    #[test]
    fn formals_scope_lexically() {
        let src = "(def-plan p (?a) (perform (an action (type looking) (target ?a) (arm ?b))))
                   (perform (an action (type looking) (target ?a)))";
        let d = validate_plan(&parse_plan(src).unwrap());
        let vars: Vec<_> = d
            .iter()
            .filter_map(|x| match x {
                Diagnostic::UnboundVariable { variable, .. } => Some(variable.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(vars, ["b", "a"]);
    }
}

use std::str::FromStr;

use super::ast::*;
use super::sexpr::{read_all, Sexpr, SexprKind};
use super::PlanError;
use crate::failure::FailureKind;
use crate::geom::Pose;

const DEFAULT_RETRIES: u32 = 3;

/// Parses a plan file: `def-plan` and `fluent` forms plus top-level control forms.
pub fn parse_plan(text: &str) -> Result<PlanAst, PlanError> {
    let mut ast = PlanAst { definitions: Vec::new(), fluents: Vec::new(), root: ControlNode::Seq(Vec::new()) };
    let mut items = Vec::new();
    for form in read_all(text)? {
        match head(&form)? {
            Some("def-plan") => ast.definitions.push(parse_def(&form)?),
            Some("fluent") => ast.fluents.push(parse_fluent_decl(&form)?),
            _ => items.push(parse_control(&form)?),
        }
    }
    ast.root = ControlNode::Seq(items);
    Ok(ast)
}

/// Parses a single value expression (literal, variable, pose or designator).
pub fn parse_value(text: &str) -> Result<Value, PlanError> {
    let forms = read_all(text)?;
    match forms.as_slice() {
        [one] => value_from_sexpr(one),
        [] => Err(PlanError::Syntax { line: 1, column: 1, expected: "value".into() }),
        [_, extra, ..] => Err(extra.syntax("end of input")),
    }
}

fn head(form: &Sexpr) -> Result<Option<&str>, PlanError> {
    match &form.kind {
        SexprKind::List(items) if items.is_empty() => Err(form.syntax("non-empty form")),
        SexprKind::List(items) => Ok(items[0].as_symbol()),
        _ => Ok(None),
    }
}

fn variable(s: &Sexpr) -> Result<Variable, PlanError> {
    match s.as_symbol() {
        Some(sym) if sym.starts_with('?') && sym.len() > 1 => Ok(Variable::new(sym)),
        _ => Err(s.syntax("variable")),
    }
}

fn symbol(s: &Sexpr, what: &str) -> Result<String, PlanError> {
    match s.as_symbol() {
        Some(sym) if !sym.starts_with('?') => Ok(sym.to_string()),
        _ => Err(s.syntax(what)),
    }
}

fn count(s: &Sexpr, what: &str) -> Result<u32, PlanError> {
    match s.as_number() {
        Some(n) if n >= 0.0 && n.fract() == 0.0 && n <= u32::MAX as f64 => Ok(n as u32),
        _ => Err(s.syntax(what)),
    }
}

fn parse_def(form: &Sexpr) -> Result<PlanDef, PlanError> {
    let items = form.as_list().unwrap_or_default();
    if items.len() < 3 {
        return Err(form.syntax("(def-plan name (formals...) body...)"));
    }
    let name = symbol(&items[1], "plan name")?;
    let formals = items[2]
        .as_list()
        .ok_or_else(|| items[2].syntax("formal parameter list"))?
        .iter()
        .map(variable)
        .collect::<Result<Vec<_>, _>>()?;
    let mut rest = &items[3..];
    let mut query_variables = Vec::new();
    if let Some(first) = rest.first() {
        if first.as_list().and_then(|l| l.first()).and_then(Sexpr::as_symbol) == Some("query-variables") {
            query_variables = first.as_list().unwrap()[1..].iter().map(variable).collect::<Result<_, _>>()?;
            rest = &rest[1..];
        }
    }
    let body = rest.iter().map(parse_control).collect::<Result<Vec<_>, _>>()?;
    Ok(PlanDef { name, formals, query_variables, body })
}

fn parse_fluent_decl(form: &Sexpr) -> Result<FluentDecl, PlanError> {
    let items = form.as_list().unwrap_or_default();
    let (name, buffer) = match items {
        [_, name] => (name, BufferMode::Latest),
        [_, name, mode] => {
            let buffer = match mode.as_symbol() {
                Some("latest") => BufferMode::Latest,
                Some("all") => BufferMode::All,
                Some("none") => BufferMode::None,
                _ => return Err(mode.syntax("buffer mode latest|all|none")),
            };
            (name, buffer)
        }
        _ => return Err(form.syntax("(fluent name [latest|all|none])")),
    };
    Ok(FluentDecl { name: symbol(name, "fluent name")?, buffer })
}

fn children(items: &[Sexpr]) -> Result<Vec<ControlNode>, PlanError> {
    items.iter().map(parse_control).collect()
}

pub(crate) fn parse_control(form: &Sexpr) -> Result<ControlNode, PlanError> {
    let items = match &form.kind {
        SexprKind::List(items) => items,
        _ => return Ok(ControlNode::Atom(literal(form)?)),
    };
    let Some(first) = items.first() else {
        return Err(form.syntax("non-empty form"));
    };
    let Some(keyword) = first.as_symbol() else {
        return Err(first.syntax("construct name"));
    };
    let args = &items[1..];
    let node = match keyword {
        "seq" => ControlNode::Seq(children(args)?),
        "par" => ControlNode::Par(children(args)?),
        "pursue" => ControlNode::Pursue(children(args)?),
        "try-in-order" => ControlNode::TryInOrder(children(args)?),
        "try-all" => ControlNode::TryAll(children(args)?),
        "with-robot-at-location" => {
            let Some(loc) = args.first() else {
                return Err(form.syntax("location after with-robot-at-location"));
            };
            ControlNode::WithRobotAtLocation { location: location_value(loc)?, body: children(&args[1..])? }
        }
        "perform" => match args {
            [d] => ControlNode::Perform(value_from_sexpr(d)?),
            _ => return Err(form.syntax("exactly one designator after perform")),
        },
        "handle-failure" => parse_handle_failure(form, args)?,
        "when" => {
            let Some(cond) = args.first() else {
                return Err(form.syntax("condition after when"));
            };
            ControlNode::When { condition: parse_condition(cond)?, body: children(&args[1..])? }
        }
        "wait-for" => match args {
            [name] => ControlNode::WaitFor { fluent: symbol(name, "fluent name")?, mode: WaitMode::ValueAvailable },
            [m, name] if m.as_symbol() == Some("pulsed") => {
                ControlNode::WaitFor { fluent: symbol(name, "fluent name")?, mode: WaitMode::Pulsed }
            }
            _ => return Err(form.syntax("(wait-for [pulsed] fluent)")),
        },
        "pulse" => match args {
            [name, v] => ControlNode::Pulse { fluent: symbol(name, "fluent name")?, value: literal(v)? },
            _ => return Err(form.syntax("(pulse fluent value)")),
        },
        "sleep" => match args {
            [n] => ControlNode::Sleep(count(n, "step count")?),
            _ => return Err(form.syntax("(sleep steps)")),
        },
        "fail" => match args {
            [k] => ControlNode::Fail(failure_kind(k)?),
            _ => return Err(form.syntax("(fail kind)")),
        },
        "pose" => ControlNode::Atom(literal(form)?),
        other => return Err(first.unknown(other)),
    };
    Ok(node)
}

/// `(?var)` is accepted as a synonym for `?var` in location position.
fn location_value(s: &Sexpr) -> Result<Value, PlanError> {
    if let Some([inner]) = s.as_list() {
        if inner.as_symbol().is_some_and(|v| v.starts_with('?')) {
            return Ok(Value::Var(variable(inner)?));
        }
    }
    value_from_sexpr(s)
}

fn failure_kind(s: &Sexpr) -> Result<FailureKind, PlanError> {
    let sym = s.as_symbol().ok_or_else(|| s.syntax("failure kind"))?;
    FailureKind::from_str(sym).map_err(|_| s.unknown(sym))
}

fn parse_handle_failure(form: &Sexpr, args: &[Sexpr]) -> Result<ControlNode, PlanError> {
    let Some(body) = args.first() else {
        return Err(form.syntax("body after handle-failure"));
    };
    let body = Box::new(parse_control(body)?);
    let mut handlers = Vec::new();
    let mut max_retries = DEFAULT_RETRIES;
    for clause in &args[1..] {
        let items = clause.as_list().ok_or_else(|| clause.syntax("(on kind handler...) or (retries n)"))?;
        match items.first().and_then(Sexpr::as_symbol) {
            Some("on") if items.len() >= 2 => {
                let kinds = match &items[1].kind {
                    SexprKind::List(ks) if !ks.is_empty() => ks.iter().map(failure_kind).collect::<Result<_, _>>()?,
                    SexprKind::Symbol(_) => vec![failure_kind(&items[1])?],
                    _ => return Err(items[1].syntax("failure kind or list of kinds")),
                };
                handlers.push(Handler { kinds, body: children(&items[2..])? });
            }
            Some("retries") if items.len() == 2 => max_retries = count(&items[1], "retry count")?,
            _ => return Err(clause.syntax("(on kind handler...) or (retries n)")),
        }
    }
    Ok(ControlNode::HandleFailure { body, handlers, max_retries })
}

fn parse_condition(s: &Sexpr) -> Result<Condition, PlanError> {
    let items = s.as_list().ok_or_else(|| s.syntax("condition form"))?;
    let Some(first) = items.first() else {
        return Err(s.syntax("non-empty form"));
    };
    let pred = symbol(first, "predicate name")?;
    Ok(match (pred.as_str(), &items[1..]) {
        ("fluent", [name]) => Condition::Fluent(symbol(name, "fluent name")?),
        ("not", [c]) => Condition::Not(Box::new(parse_condition(c)?)),
        ("and", cs) => Condition::And(cs.iter().map(parse_condition).collect::<Result<_, _>>()?),
        (_, args) => Condition::Goal { predicate: pred, args: args.iter().map(value_from_sexpr).collect::<Result<_, _>>()? },
    })
}

fn literal(s: &Sexpr) -> Result<Literal, PlanError> {
    match value_from_sexpr(s)? {
        Value::Lit(l) => Ok(l),
        _ => Err(s.syntax("literal")),
    }
}

/// Converts one s-expression in value position.
pub fn value_from_sexpr(s: &Sexpr) -> Result<Value, PlanError> {
    match &s.kind {
        SexprKind::Number(n) => Ok(Value::number(*n)),
        SexprKind::Str(t) => Ok(Value::Lit(Literal::Str(t.clone()))),
        SexprKind::Symbol(sym) if sym.starts_with('?') => Ok(Value::Var(variable(s)?)),
        SexprKind::Symbol(sym) => Ok(Value::symbol(sym.clone())),
        SexprKind::List(items) => {
            let Some(first) = items.first() else {
                return Err(s.syntax("non-empty form"));
            };
            match first.as_symbol() {
                Some("pose") => {
                    let nums: Option<Vec<f64>> = items[1..].iter().map(Sexpr::as_number).collect();
                    match nums.as_deref() {
                        Some(&[x, y, z, yaw]) => Ok(Value::pose(Pose::new(x, y, z, yaw))),
                        _ => Err(s.syntax("(pose x y z yaw) with four numbers")),
                    }
                }
                Some("a" | "an") => parse_designator(s, items).map(Value::Desig),
                Some(other) => Err(first.unknown(other)),
                None => Err(first.syntax("designator or pose")),
            }
        }
    }
}

fn parse_designator(form: &Sexpr, items: &[Sexpr]) -> Result<Designator, PlanError> {
    let Some(kind) = items.get(1) else {
        return Err(form.syntax("designator kind"));
    };
    let kind = DesignatorKind::from_word(&symbol(kind, "designator kind")?);
    let mut d = Designator::new(kind);
    for prop in &items[2..] {
        match prop.as_list() {
            // `(pose x y z yaw)` as a property is short for `(pose (pose x y z yaw))`.
            Some([k, _, _, _, _]) if k.as_symbol() == Some("pose") => {
                if d.get("pose").is_some() {
                    return Err(PlanError::DuplicateKey { key: "pose".into(), line: k.line, column: k.column });
                }
                d.props.push(("pose".into(), value_from_sexpr(prop)?));
            }
            Some([k, v]) => {
                let key = symbol(k, "property key")?;
                if d.get(&key).is_some() {
                    return Err(PlanError::DuplicateKey { key, line: k.line, column: k.column });
                }
                d.props.push((key, value_from_sexpr(v)?));
            }
            _ => return Err(prop.syntax("(key value)")),
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_designator_keeps_key_order() {
        let v = parse_value("(an action (type picking-up) (arm ?arm))").unwrap();
        let d = v.as_designator().unwrap();
        assert_eq!(d.kind, DesignatorKind::Action);
        let keys: Vec<_> = d.props.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["type", "arm"]);
        assert_eq!(d.get("arm"), Some(&Value::var("arm")));
    }

    #[test]
    fn empty_form_is_syntax_error() {
        assert!(matches!(parse_plan("()"), Err(PlanError::Syntax { .. })));
        assert!(matches!(parse_plan("(seq ())"), Err(PlanError::Syntax { .. })));
    }

    #[test]
    fn unknown_construct_and_duplicate_key() {
        assert!(matches!(parse_plan("(frobnicate x)"), Err(PlanError::UnknownConstruct { token, .. }) if token == "frobnicate"));
        assert!(matches!(
            parse_value("(an object (type cup) (type mug))"),
            Err(PlanError::DuplicateKey { key, line: 1, column: 24 }) if key == "type"
        ));
    }

    #[test]
    fn def_plan_with_queries_and_handlers() {
        let src = "(def-plan p (?a) (query-variables ?b)
                     (handle-failure (perform (an action (type looking) (target ?a)))
                       (on (unreachable collision) (sleep 1))
                       (retries 2)))";
        let ast = parse_plan(src).unwrap();
        let def = &ast.definitions[0];
        assert_eq!(def.formals, vec![Variable::new("a")]);
        assert_eq!(def.query_variables, vec![Variable::new("b")]);
        match &def.body[0] {
            ControlNode::HandleFailure { handlers, max_retries, .. } => {
                assert_eq!(*max_retries, 2);
                assert_eq!(handlers[0].kinds, vec![FailureKind::Unreachable, FailureKind::Collision]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn literal_atoms_and_poses() {
        let ast = parse_plan("done 2.5 (pose 1 2 0.7 0)").unwrap();
        let ControlNode::Seq(items) = ast.root else { panic!() };
        assert_eq!(items[0], ControlNode::Atom(Literal::symbol("done")));
        assert_eq!(items[2], ControlNode::Atom(Literal::Pose(Pose::new(1.0, 2.0, 0.7, 0.0))));
    }
}

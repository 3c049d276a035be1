use super::ast::*;

fn number(n: f64) -> String {
    format!("{n}")
}

fn string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn print_literal(l: &Literal) -> String {
    match l {
        Literal::Symbol(s) => s.clone(),
        Literal::Number(n) => number(*n),
        Literal::Str(s) => string(s),
        Literal::Pose(p) => format!("(pose {} {} {} {})", number(p.x), number(p.y), number(p.z), number(p.yaw)),
    }
}

pub fn print_value(v: &Value) -> String {
    match v {
        Value::Lit(l) => print_literal(l),
        Value::Var(var) => var.to_string(),
        Value::Desig(d) => print_designator(d),
    }
}

pub fn print_designator(d: &Designator) -> String {
    let mut out = format!("({} {}", d.kind.article(), d.kind.word());
    for (k, v) in &d.props {
        out.push_str(&format!(" ({k} {})", print_value(v)));
    }
    out.push(')');
    out
}

fn print_condition(c: &Condition) -> String {
    match c {
        Condition::Fluent(name) => format!("(fluent {name})"),
        Condition::Not(inner) => format!("(not {})", print_condition(inner)),
        Condition::And(cs) => {
            let mut out = String::from("(and");
            for c in cs {
                out.push(' ');
                out.push_str(&print_condition(c));
            }
            out.push(')');
            out
        }
        Condition::Goal { predicate, args } => {
            let mut out = format!("({predicate}");
            for a in args {
                out.push(' ');
                out.push_str(&print_value(a));
            }
            out.push(')');
            out
        }
    }
}

fn block(out: &mut String, head: &str, body: &[ControlNode], indent: usize) {
    out.push('(');
    out.push_str(head);
    for child in body {
        out.push('\n');
        write_control(out, child, indent + 2);
    }
    out.push(')');
}

fn write_control(out: &mut String, node: &ControlNode, indent: usize) {
    out.push_str(&" ".repeat(indent));
    match node {
        ControlNode::Seq(cs)
        | ControlNode::Par(cs)
        | ControlNode::Pursue(cs)
        | ControlNode::TryInOrder(cs)
        | ControlNode::TryAll(cs) => block(out, node.keyword(), cs, indent),
        ControlNode::WithRobotAtLocation { location, body } => {
            block(out, &format!("with-robot-at-location {}", print_value(location)), body, indent)
        }
        ControlNode::Perform(v) => out.push_str(&format!("(perform {})", print_value(v))),
        ControlNode::HandleFailure { body, handlers, max_retries } => {
            out.push_str("(handle-failure\n");
            write_control(out, body, indent + 2);
            for h in handlers {
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
                let kinds: Vec<&str> = h.kinds.iter().map(|k| k.as_str()).collect();
                block(out, &format!("on ({})", kinds.join(" ")), &h.body, indent + 2);
            }
            out.push('\n');
            out.push_str(&format!("{}(retries {max_retries}))", " ".repeat(indent + 2)));
        }
        ControlNode::When { condition, body } => {
            block(out, &format!("when {}", print_condition(condition)), body, indent)
        }
        ControlNode::WaitFor { fluent, mode: WaitMode::ValueAvailable } => {
            out.push_str(&format!("(wait-for {fluent})"))
        }
        ControlNode::WaitFor { fluent, mode: WaitMode::Pulsed } => {
            out.push_str(&format!("(wait-for pulsed {fluent})"))
        }
        ControlNode::Pulse { fluent, value } => {
            out.push_str(&format!("(pulse {fluent} {})", print_literal(value)))
        }
        ControlNode::Sleep(n) => out.push_str(&format!("(sleep {n})")),
        ControlNode::Fail(k) => out.push_str(&format!("(fail {k})")),
        ControlNode::Atom(l) => out.push_str(&print_literal(l)),
    }
}

pub fn print_control(node: &ControlNode) -> String {
    let mut out = String::new();
    write_control(&mut out, node, 0);
    out
}

/// Canonical text: fluent declarations, then definitions, then top-level forms.
pub fn unparse_plan(ast: &PlanAst) -> String {
    let mut forms = Vec::new();
    for f in &ast.fluents {
        forms.push(format!("(fluent {} {})", f.name, f.buffer.as_str()));
    }
    for def in &ast.definitions {
        let formals: Vec<String> = def.formals.iter().map(ToString::to_string).collect();
        let mut out = format!("(def-plan {} ({})", def.name, formals.join(" "));
        if !def.query_variables.is_empty() {
            let qs: Vec<String> = def.query_variables.iter().map(ToString::to_string).collect();
            out.push_str(&format!("\n  (query-variables {})", qs.join(" ")));
        }
        for node in &def.body {
            out.push('\n');
            write_control(&mut out, node, 2);
        }
        out.push(')');
        forms.push(out);
    }
    match &ast.root {
        ControlNode::Seq(items) => forms.extend(items.iter().map(print_control)),
        other => forms.push(print_control(other)),
    }
    let mut text = forms.join("\n\n");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan_lang::parse_plan;

    #[test]
    fn single_literal_prints_its_token() {
        assert_eq!(print_control(&ControlNode::Atom(Literal::Number(0.25))), "0.25");
        assert_eq!(unparse_plan(&PlanAst::from_root(ControlNode::Atom(Literal::symbol("done")))), "done\n");
    }

    #[test]
    fn strings_escape_and_reparse() {
        let ast = parse_plan(r#"(pulse note "say \"hi\"\n")"#).unwrap();
        assert_eq!(parse_plan(&unparse_plan(&ast)).unwrap(), ast);
    }
}

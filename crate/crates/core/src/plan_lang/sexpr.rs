use super::PlanError;

#[derive(Debug, Clone, PartialEq)]
pub enum SexprKind {
    List(Vec<Sexpr>),
    Symbol(String),
    Number(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sexpr {
    pub kind: SexprKind,
    pub line: usize,
    pub column: usize,
}

impl Sexpr {
    pub fn as_symbol(&self) -> Option<&str> {
        match &self.kind {
            SexprKind::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match &self.kind {
            SexprKind::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self.kind {
            SexprKind::Number(n) => Some(n),
            _ => None,
        }
    }

    pub(crate) fn syntax(&self, expected: impl Into<String>) -> PlanError {
        PlanError::Syntax { line: self.line, column: self.column, expected: expected.into() }
    }

    pub(crate) fn unknown(&self, token: impl Into<String>) -> PlanError {
        PlanError::UnknownConstruct { token: token.into(), line: self.line, column: self.column }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn err(&self, expected: &str) -> PlanError {
        PlanError::Syntax { line: self.line, column: self.column, expected: expected.to_string() }
    }

    fn read(&mut self) -> Result<Sexpr, PlanError> {
        self.skip_trivia();
        let (line, column) = (self.line, self.column);
        let at = |kind| Sexpr { kind, line, column };
        match self.chars.peek().copied() {
            None => Err(self.err("expression")),
            Some(')') => Err(self.err("expression, found `)`")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(self.err("`)`")),
                        Some(')') => {
                            self.bump();
                            return Ok(at(SexprKind::List(items)));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err("closing `\"`")),
                        Some('"') => return Ok(at(SexprKind::Str(s))),
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err(self.err("escape sequence")),
                        },
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(_) => {
                let mut tok = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                        break;
                    }
                    tok.push(c);
                    self.bump();
                }
                Ok(at(classify(tok)))
            }
        }
    }
}

fn classify(tok: String) -> SexprKind {
    let numeric_start = tok
        .trim_start_matches(['-', '+'])
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '.');
    if numeric_start {
        if let Ok(n) = tok.parse::<f64>() {
            if n.is_finite() {
                return SexprKind::Number(n);
            }
        }
    }
    SexprKind::Symbol(tok)
}

/// Reads every top-level expression in `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexpr>, PlanError> {
    let mut r = Reader { chars: src.chars().peekable(), line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let forms = read_all("; header\n(a (b 1.5) \"s\")").unwrap();
        assert_eq!(forms.len(), 1);
        assert_eq!((forms[0].line, forms[0].column), (2, 1));
        let items = forms[0].as_list().unwrap();
        assert_eq!(items[0].as_symbol(), Some("a"));
        assert_eq!(items[1].as_list().unwrap()[1].as_number(), Some(1.5));
        assert_eq!(items[2].kind, SexprKind::Str("s".into()));
    }

    #[test]
    fn unbalanced_reports_position() {
        match read_all("(a (b)") {
            Err(PlanError::Syntax { expected, .. }) => assert_eq!(expected, "`)`"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_all(")"), Err(PlanError::Syntax { line: 1, column: 1, .. })));
    }

    #[test]
    fn symbols_that_look_numeric() {
        let forms = read_all("-0.5 - fetch&place ?x 1e3").unwrap();
        let kinds: Vec<_> = forms.into_iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            vec![
                SexprKind::Number(-0.5),
                SexprKind::Symbol("-".into()),
                SexprKind::Symbol("fetch&place".into()),
                SexprKind::Symbol("?x".into()),
                SexprKind::Number(1000.0),
            ]
        );
    }
}

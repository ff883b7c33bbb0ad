use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::ast::{BinOp, BoolOp, Builtin, CmpOp, Comprehension, Condition, Expr, UnaryOp};
use super::lexer::{tokenize, Tok, Token};
use super::DslError;

/// Deepest nesting accepted before giving up with a parse error.
pub const MAX_DEPTH: usize = 64;

const KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda",
    "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub(crate) struct Parser {
    toks: Vec<Token>,
    at: usize,
    depth: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Parser, DslError> {
        Ok(Parser { toks: tokenize(src)?, at: 0, depth: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub(crate) fn pos(&self) -> usize {
        self.toks[self.at].pos
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    pub(crate) fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    pub(crate) fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_op(&mut self, op: &str) -> Result<(), DslError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.unexpected(&alloc::format!("expected '{op}'")))
        }
    }

    pub(crate) fn unexpected(&self, what: &str) -> DslError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Int(n) => alloc::format!("{n}"),
            Tok::Str(_) => "string".to_string(),
            Tok::Name(n) => alloc::format!("'{n}'"),
            Tok::Op(o) => alloc::format!("'{o}'"),
        };
        DslError::parse(self.pos(), alloc::format!("{what}, found {found}"))
    }

    pub(crate) fn enter(&mut self) -> Result<(), DslError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(DslError::parse(self.pos(), "expression nested too deeply"));
        }
        Ok(())
    }

    pub(crate) fn leave(&mut self) {
        self.depth -= 1;
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                if n.starts_with("__") {
                    return Err(DslError::security(self.pos(), alloc::format!("identifier '{n}' is not allowed")));
                }
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("expected an identifier")),
        }
    }

    fn lambda(&mut self) -> Result<(String, Expr), DslError> {
        if !self.eat_kw("lambda") {
            return Err(self.unexpected("expected 'lambda'"));
        }
        let param = self.ident()?;
        self.expect_op(":")?;
        let body = self.test()?;
        if !matches!(self.peek(), Tok::End) {
            return Err(self.unexpected("expected end of expression"));
        }
        Ok((param, body))
    }

    /// `or_test ['if' or_test 'else' test]`
    fn test(&mut self) -> Result<Expr, DslError> {
        self.enter()?;
        if self.is_kw("lambda") {
            return Err(DslError::parse(self.pos(), "nested lambda is not allowed"));
        }
        let body = self.or_test()?;
        let out = if self.eat_kw("if") {
            let test = self.or_test()?;
            if !self.eat_kw("else") {
                return Err(self.unexpected("expected 'else'"));
            }
            let orelse = self.test()?;
            Expr::IfElse { body: Box::new(body), test: Box::new(test), orelse: Box::new(orelse) }
        } else {
            body
        };
        self.leave();
        Ok(out)
    }

    fn or_test(&mut self) -> Result<Expr, DslError> {
        let first = self.and_test()?;
        if !self.is_kw("or") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_kw("or") {
            items.push(self.and_test()?);
        }
        Ok(Expr::BoolOp(BoolOp::Or, items))
    }

    fn and_test(&mut self) -> Result<Expr, DslError> {
        let first = self.not_test()?;
        if !self.is_kw("and") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_kw("and") {
            items.push(self.not_test()?);
        }
        Ok(Expr::BoolOp(BoolOp::And, items))
    }

    fn not_test(&mut self) -> Result<Expr, DslError> {
        if self.eat_kw("not") {
            self.enter()?;
            let e = self.not_test()?;
            self.leave();
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(e)));
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        match self.peek() {
            Tok::Op("<") => Some(CmpOp::Lt),
            Tok::Op("<=") => Some(CmpOp::Le),
            Tok::Op("==") => Some(CmpOp::Eq),
            Tok::Op("!=") => Some(CmpOp::Ne),
            Tok::Op(">") => Some(CmpOp::Gt),
            Tok::Op(">=") => Some(CmpOp::Ge),
            _ => None,
        }
    }

    fn comparison(&mut self) -> Result<Expr, DslError> {
        let first = self.arith()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            self.bump();
            rest.push((op, self.arith()?));
        }
        if self.is_kw("in") || self.is_kw("is") || self.is_kw("not") {
            return Err(self.unexpected("unsupported operator"));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr::Compare(Box::new(first), rest))
        }
    }

    // Left-leaning chains nest one level per operator, so they count toward the
    // depth limit like parentheses do.
    fn arith(&mut self) -> Result<Expr, DslError> {
        let mut left = self.term()?;
        let mut chain = 0;
        loop {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.enter()?;
            chain += 1;
            let right = self.term()?;
            left = Expr::Binary(op, Box::new(left), Box::new(right));
        }
        self.depth -= chain;
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut left = self.factor()?;
        let mut chain = 0;
        loop {
            if self.eat_op("*") {
                self.enter()?;
                chain += 1;
                let right = self.factor()?;
                left = Expr::Binary(BinOp::Mul, Box::new(left), Box::new(right));
            } else if self.is_op("/") || self.is_op("//") || self.is_op("%") || self.is_op("**") {
                return Err(self.unexpected("unsupported operator"));
            } else {
                self.depth -= chain;
                return Ok(left);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, DslError> {
        let op = if self.eat_op("-") {
            UnaryOp::Neg
        } else if self.eat_op("+") {
            UnaryOp::Pos
        } else {
            return self.postfix();
        };
        self.enter()?;
        let e = self.factor()?;
        self.leave();
        Ok(Expr::Unary(op, Box::new(e)))
    }

    fn postfix(&mut self) -> Result<Expr, DslError> {
        let callee = match self.peek() {
            Tok::Name(name) if matches!(self.toks.get(self.at + 1).map(|t| &t.tok), Some(Tok::Op("("))) => {
                Some(name.clone())
            }
            _ => None,
        };
        let mut e = match callee {
            Some(name) => self.call(name)?,
            None => self.atom()?,
        };
        let mut chain = 0;
        loop {
            if self.eat_op("[") {
                self.enter()?;
                chain += 1;
                let first = self.test()?;
                let key = if self.is_op(",") {
                    let mut items = vec![first];
                    while self.eat_op(",") && !self.is_op("]") {
                        items.push(self.test()?);
                    }
                    Expr::Tuple(items)
                } else {
                    first
                };
                if self.is_op(":") {
                    return Err(self.unexpected("slices are not supported"));
                }
                self.expect_op("]")?;
                e = Expr::Subscript(Box::new(e), Box::new(key));
            } else if self.is_op(".") {
                return Err(DslError::security(self.pos(), "attribute access is not allowed"));
            } else if self.is_op("(") {
                return Err(DslError::security(self.pos(), "only sum, len, any and all may be called"));
            } else {
                self.depth -= chain;
                return Ok(e);
            }
        }
    }

    fn call(&mut self, name: String) -> Result<Expr, DslError> {
        let at = self.pos();
        let Some(builtin) = Builtin::from_name(&name) else {
            return Err(DslError::security(at, alloc::format!("call to '{name}' is not allowed")));
        };
        self.bump();
        self.expect_op("(")?;
        self.enter()?;
        if self.eat_op(")") {
            self.leave();
            return Ok(Expr::Call(builtin, Vec::new()));
        }
        let first = self.test()?;
        let out = if self.is_kw("for") {
            if builtin == Builtin::Len {
                return Err(DslError::parse(self.pos(), "len() does not take a generator"));
            }
            let comp = self.comprehension(first)?;
            self.expect_op(")")?;
            Expr::Generator(builtin, Box::new(comp))
        } else {
            let mut args = vec![first];
            while self.eat_op(",") && !self.is_op(")") {
                args.push(self.test()?);
            }
            self.expect_op(")")?;
            Expr::Call(builtin, args)
        };
        self.leave();
        Ok(out)
    }

    /// Parses `for <var> in <iter> [if <cond>]*` after the element.
    fn comprehension(&mut self, elt: Expr) -> Result<Comprehension, DslError> {
        self.bump();
        let var = self.ident()?;
        if !self.eat_kw("in") {
            return Err(self.unexpected("expected 'in'"));
        }
        let iter = self.or_test()?;
        let mut conds = Vec::new();
        while self.eat_kw("if") {
            conds.push(self.or_test()?);
        }
        if self.is_kw("for") {
            return Err(DslError::parse(self.pos(), "only one 'for' clause is supported"));
        }
        Ok(Comprehension { elt, var, iter, conds })
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let at = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Str(s) => {
                let mut s = s;
                while let Tok::Str(more) = self.peek().clone() {
                    self.bump();
                    s.push_str(&more);
                }
                Ok(Expr::Str(s))
            }
            Tok::Name(n) => match n.as_str() {
                "True" => Ok(Expr::Bool(true)),
                "False" => Ok(Expr::Bool(false)),
                _ if KEYWORDS.contains(&n.as_str()) => {
                    Err(DslError::parse(at, alloc::format!("unexpected keyword '{n}'")))
                }
                _ if n.starts_with("__") => {
                    Err(DslError::security(at, alloc::format!("identifier '{n}' is not allowed")))
                }
                _ => Ok(Expr::Name(n)),
            },
            Tok::Op("(") => {
                self.enter()?;
                if self.eat_op(")") {
                    self.leave();
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.test()?;
                if self.is_kw("for") {
                    return Err(DslError::parse(self.pos(), "generators are only allowed as the argument of sum, any or all"));
                }
                let out = if self.eat_op(",") {
                    let mut items = vec![first];
                    while !self.is_op(")") {
                        items.push(self.test()?);
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    Expr::Tuple(items)
                } else {
                    first
                };
                self.expect_op(")")?;
                self.leave();
                Ok(out)
            }
            Tok::Op("[") => {
                self.enter()?;
                let mut items = Vec::new();
                while !self.is_op("]") {
                    items.push(self.test()?);
                    if self.is_kw("for") {
                        return Err(DslError::parse(self.pos(), "list comprehensions are not supported"));
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                self.leave();
                Ok(Expr::List(items))
            }
            Tok::Op("{") => Err(DslError::parse(at, "dict and set displays are not supported")),
            Tok::End => Err(DslError::parse(at, "unexpected end of input")),
            Tok::Op(o) => Err(DslError::parse(at, alloc::format!("unexpected '{o}'"))),
        }
    }
}

/// Names used in `e` that are not bound by an enclosing comprehension.
fn free_names<'a>(e: &'a Expr, bound: &mut Vec<&'a str>, out: &mut Vec<&'a str>) {
    match e {
        Expr::Name(n) => {
            if !bound.contains(&n.as_str()) {
                out.push(n);
            }
        }
        Expr::Int(_) | Expr::Str(_) | Expr::Bool(_) => {}
        Expr::Tuple(v) | Expr::List(v) | Expr::BoolOp(_, v) | Expr::Call(_, v) => {
            v.iter().for_each(|x| free_names(x, bound, out))
        }
        Expr::Subscript(a, b) | Expr::Binary(_, a, b) => {
            free_names(a, bound, out);
            free_names(b, bound, out);
        }
        Expr::Unary(_, a) => free_names(a, bound, out),
        Expr::Compare(a, rest) => {
            free_names(a, bound, out);
            rest.iter().for_each(|(_, x)| free_names(x, bound, out));
        }
        Expr::IfElse { body, test, orelse } => {
            free_names(body, bound, out);
            free_names(test, bound, out);
            free_names(orelse, bound, out);
        }
        Expr::Generator(_, c) => {
            free_names(&c.iter, bound, out);
            bound.push(&c.var);
            free_names(&c.elt, bound, out);
            c.conds.iter().for_each(|x| free_names(x, bound, out));
            bound.pop();
        }
    }
}

/// Parses `lambda <param>: <expr>` in the restricted expression language.
pub fn parse_condition(src: &str) -> Result<Condition, DslError> {
    let mut p = Parser::new(src)?;
    let (param, body) = p.lambda()?;
    let mut bound = vec![param.as_str()];
    let mut free = Vec::new();
    free_names(&body, &mut bound, &mut free);
    if let Some(name) = free.first() {
        let at = src.find(*name).unwrap_or(0);
        return Err(DslError::security(at, alloc::format!("unknown name '{name}'")));
    }
    Ok(Condition { source: src.to_string(), param, body })
}

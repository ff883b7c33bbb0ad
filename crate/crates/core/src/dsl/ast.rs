use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::parser::parse_condition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Sum,
    Len,
    Any,
    All,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "sum" => Builtin::Sum,
            "len" => Builtin::Len,
            "any" => Builtin::Any,
            "all" => Builtin::All,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sum => "sum",
            Builtin::Len => "len",
            Builtin::Any => "any",
            Builtin::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comprehension {
    pub elt: Expr,
    pub var: String,
    pub iter: Expr,
    pub conds: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Str(String),
    Bool(bool),
    Name(String),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Subscript(Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Chained comparison `a < b <= c`.
    Compare(Box<Expr>, Vec<(CmpOp, Expr)>),
    BoolOp(BoolOp, Vec<Expr>),
    IfElse { body: Box<Expr>, test: Box<Expr>, orelse: Box<Expr> },
    Call(Builtin, Vec<Expr>),
    Generator(Builtin, Box<Comprehension>),
}

impl Expr {
    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Int(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Name(_) => 0,
            Expr::Tuple(v) | Expr::List(v) | Expr::BoolOp(_, v) | Expr::Call(_, v) => v.iter().map(Expr::size).sum(),
            Expr::Subscript(a, b) | Expr::Binary(_, a, b) => a.size() + b.size(),
            Expr::Unary(_, a) => a.size(),
            Expr::Compare(a, rest) => a.size() + rest.iter().map(|(_, e)| e.size()).sum::<usize>(),
            Expr::IfElse { body, test, orelse } => body.size() + test.size() + orelse.size(),
            Expr::Generator(_, c) => {
                c.elt.size() + c.iter.size() + c.conds.iter().map(Expr::size).sum::<usize>()
            }
        }
    }
}

pub(crate) fn write_str_literal(out: &mut impl Write, s: &str, quote: char) -> fmt::Result {
    out.write_char(quote)?;
    for ch in s.chars() {
        match ch {
            '\\' => out.write_str("\\\\")?,
            '\n' => out.write_str("\\n")?,
            '\t' => out.write_str("\\t")?,
            '\r' => out.write_str("\\r")?,
            c if c == quote => {
                out.write_char('\\')?;
                out.write_char(c)?;
            }
            c if (c as u32) < 0x20 => write!(out, "\\x{:02x}", c as u32)?,
            c => out.write_char(c)?,
        }
    }
    out.write_char(quote)
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

/// Canonical source form. Every compound node is parenthesized, so printing and
/// re-parsing gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Str(s) => write_str_literal(f, s, '\''),
            Expr::Bool(b) => f.write_str(if *b { "True" } else { "False" }),
            Expr::Name(n) => f.write_str(n),
            Expr::Tuple(items) => {
                f.write_char('(')?;
                write_list(f, items)?;
                if items.len() == 1 {
                    f.write_char(',')?;
                }
                f.write_char(')')
            }
            Expr::List(items) => {
                f.write_char('[')?;
                write_list(f, items)?;
                f.write_char(']')
            }
            Expr::Subscript(base, key) => write!(f, "{base}[{key}]"),
            Expr::Unary(op, e) => match op {
                UnaryOp::Neg => write!(f, "(-{e})"),
                UnaryOp::Pos => write!(f, "(+{e})"),
                UnaryOp::Not => write!(f, "(not {e})"),
            },
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Compare(first, rest) => {
                write!(f, "({first}")?;
                for (op, e) in rest {
                    write!(f, " {} {e}", op.symbol())?;
                }
                f.write_char(')')
            }
            Expr::BoolOp(op, items) => {
                let sym = match op {
                    BoolOp::And => " and ",
                    BoolOp::Or => " or ",
                };
                f.write_char('(')?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sym)?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_char(')')
            }
            Expr::IfElse { body, test, orelse } => write!(f, "({body} if {test} else {orelse})"),
            Expr::Call(b, args) => {
                write!(f, "{}(", b.name())?;
                write_list(f, args)?;
                f.write_char(')')
            }
            Expr::Generator(b, c) => {
                write!(f, "{}({} for {} in {}", b.name(), c.elt, c.var, c.iter)?;
                for cond in &c.conds {
                    write!(f, " if {cond}")?;
                }
                f.write_char(')')
            }
        }
    }
}

/// A parsed `lambda <param>: <body>` precondition.
///
/// Equality ignores the original text; serialization uses it.
#[derive(Debug, Clone)]
pub struct Condition {
    pub source: String,
    pub param: String,
    pub body: Expr,
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.param == other.param && self.body == other.body
    }
}

impl Eq for Condition {}

impl Condition {
    /// Canonical source, which re-parses to an equal condition.
    pub fn canonical(&self) -> String {
        alloc::format!("lambda {}: {}", self.param, self.body)
    }

    /// The always-true precondition attached to bare actions.
    pub fn always() -> Condition {
        parse_condition("lambda json_state: True").expect("constant condition parses")
    }
}

impl Serialize for Condition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        parse_condition(&src).map_err(serde::de::Error::custom)
    }
}

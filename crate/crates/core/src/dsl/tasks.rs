use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{write_str_literal, Condition};
use super::lexer::Tok;
use super::parser::{parse_condition, Parser};
use super::DslError;
use crate::action::{MacroAction, PassThing};
use crate::item::{Burger, Ingredient};

/// One entry of a task list produced by the slow loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssignedTask {
    /// Run `action` once, as soon as `condition` holds.
    Conditional { condition: Condition, action: MacroAction },
    /// Produce and serve this burger.
    OrderGoal { name: Burger },
}

impl AssignedTask {
    pub fn to_literal(&self) -> String {
        match self {
            AssignedTask::Conditional { condition, action } => {
                let mut out = String::from("(");
                let _ = write_str_literal(&mut out, &condition.source, '"');
                out.push_str(", ");
                out.push_str(&action.to_literal());
                out.push(')');
                out
            }
            AssignedTask::OrderGoal { name } => format!("\"{}\"", name.as_str()),
        }
    }
}

/// Why a task list was rejected. The whole list is refused on any error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("syntax error at {pos}{}: {message}", element.map(|i| format!(" in element {i}")).unwrap_or_default())]
    Syntax { pos: usize, element: Option<usize>, message: String },
    #[error("element {index}: bad precondition: {error}")]
    Condition { index: usize, error: DslError },
    #[error("element {index}: {message}")]
    Validation { index: usize, message: String },
}

/// Literal values accepted inside a task list.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Lit {
    Int(i64),
    Str(String),
    Bool(bool),
    None,
    Seq(Vec<Lit>),
    Dict(Vec<(Lit, Lit)>),
}

impl Lit {
    fn describe(&self) -> &'static str {
        match self {
            Lit::Int(_) => "an integer",
            Lit::Str(_) => "a string",
            Lit::Bool(_) => "a boolean",
            Lit::None => "None",
            Lit::Seq(_) => "a sequence",
            Lit::Dict(_) => "a mapping",
        }
    }
}

fn literal(p: &mut Parser) -> Result<Lit, DslError> {
    let at = p.pos();
    match p.bump() {
        Tok::Int(n) => Ok(Lit::Int(n)),
        Tok::Str(mut s) => {
            while let Tok::Str(more) = p.peek().clone() {
                p.bump();
                s.push_str(&more);
            }
            Ok(Lit::Str(s))
        }
        Tok::Op("-") => match p.bump() {
            Tok::Int(n) => Ok(Lit::Int(-n)),
            _ => Err(DslError::parse(at, "expected a number after '-'")),
        },
        Tok::Name(n) => match n.as_str() {
            "True" | "true" => Ok(Lit::Bool(true)),
            "False" | "false" => Ok(Lit::Bool(false)),
            "None" | "null" => Ok(Lit::None),
            _ => Err(DslError::parse(at, format!("unexpected name '{n}' in a literal"))),
        },
        Tok::Op(open @ ("(" | "[")) => {
            p.enter()?;
            let close = if open == "(" { ")" } else { "]" };
            let items = sequence(p, close, |p| literal(p))?;
            p.leave();
            Ok(Lit::Seq(items))
        }
        Tok::Op("{") => {
            p.enter()?;
            let items = sequence(p, "}", |p| {
                let k = literal(p)?;
                p.expect_op(":")?;
                Ok((k, literal(p)?))
            })?;
            p.leave();
            Ok(Lit::Dict(items))
        }
        Tok::End => Err(DslError::parse(at, "unexpected end of input")),
        Tok::Op(o) => Err(DslError::parse(at, format!("unexpected '{o}'"))),
    }
}

/// Comma-separated items up to `close`, trailing comma allowed.
fn sequence<T>(
    p: &mut Parser,
    close: &str,
    mut item: impl FnMut(&mut Parser) -> Result<T, DslError>,
) -> Result<Vec<T>, DslError> {
    let mut out = Vec::new();
    while !p.is_op(close) {
        out.push(item(p)?);
        if !p.eat_op(",") {
            break;
        }
    }
    p.expect_op(close)?;
    Ok(out)
}

fn as_str(l: &Lit) -> Option<&str> {
    match l {
        Lit::Str(s) => Some(s),
        _ => None,
    }
}

/// Checks an action name and its argument map against the macro catalog.
fn macro_action(name: &str, args: &[(Lit, Lit)]) -> Result<MacroAction, String> {
    let mut seen: Vec<&str> = Vec::new();
    for (k, _) in args {
        let k = as_str(k).ok_or_else(|| format!("argument names of '{name}' must be strings"))?;
        if seen.contains(&k) {
            return Err(format!("duplicate argument '{k}' for '{name}'"));
        }
        seen.push(k);
    }
    let allowed: &[&str] = match name {
        "prepare" => &["food", "plate"],
        "assemble" | "serve" => &["food"],
        "pass_on" => &["thing", "thing_status"],
        "putout_fire" | "clean_a_counter" => &[],
        _ => return Err(format!("unknown action '{name}'")),
    };
    if let Some(extra) = seen.iter().find(|k| !allowed.contains(k)) {
        return Err(format!("unknown argument '{extra}' for '{name}'"));
    }
    let get = |key: &str| args.iter().find(|(k, _)| as_str(k) == Some(key)).map(|(_, v)| v);
    let text = |key: &str| -> Result<&str, String> {
        let v = get(key).ok_or_else(|| format!("'{name}' needs a '{key}' argument"))?;
        as_str(v).ok_or_else(|| format!("'{key}' of '{name}' must be a string, got {}", v.describe()))
    };
    let burger = |key: &str| -> Result<Burger, String> {
        let s = text(key)?;
        Burger::parse(s).ok_or_else(|| format!("'{s}' is not a burger"))
    };
    Ok(match name {
        "prepare" => {
            let s = text("food")?;
            let food = Ingredient::parse(s).ok_or_else(|| format!("'{s}' is not an ingredient"))?;
            let plate = match get("plate") {
                None => false,
                Some(Lit::Bool(b)) => *b,
                Some(v) => return Err(format!("'plate' of 'prepare' must be a boolean, got {}", v.describe())),
            };
            MacroAction::Prepare { food, plate }
        }
        "assemble" => MacroAction::Assemble { food: burger("food")? },
        "serve" => MacroAction::Serve { food: burger("food")? },
        "pass_on" => {
            let thing = text("thing")?;
            let status = match get("thing_status") {
                None | Some(Lit::None) => None,
                Some(Lit::Str(s)) => Some(s.as_str()),
                Some(v) => return Err(format!("'thing_status' must be a string, got {}", v.describe())),
            };
            let t = PassThing::from_args(thing, status).ok_or_else(|| match status {
                Some(s) => format!("cannot pass on '{thing}' with status '{s}'"),
                None => format!("cannot pass on '{thing}'"),
            })?;
            MacroAction::PassOn { thing: t }
        }
        "putout_fire" => MacroAction::PutoutFire,
        _ => MacroAction::CleanACounter,
    })
}

fn action_of(l: &Lit) -> Result<MacroAction, String> {
    match l {
        Lit::Seq(parts) => match parts.as_slice() {
            [Lit::Str(name), Lit::Dict(args)] => macro_action(name, args),
            [Lit::Str(name)] => macro_action(name, &[]),
            _ => Err("an action must be (name, {arguments})".to_string()),
        },
        Lit::Str(name) => macro_action(name, &[]),
        other => Err(format!("an action must be (name, {{arguments}}), got {}", other.describe())),
    }
}

fn task_of(index: usize, l: &Lit) -> Result<AssignedTask, TaskError> {
    let invalid = |message: String| TaskError::Validation { index, message };
    match l {
        Lit::Str(s) => match Burger::parse(s) {
            Some(name) => Ok(AssignedTask::OrderGoal { name }),
            None => Err(invalid(format!("'{s}' is not a burger order"))),
        },
        Lit::Seq(parts) => match parts.as_slice() {
            [Lit::Str(src), action] if src.trim_start().starts_with("lambda") => {
                let condition = parse_condition(src).map_err(|error| TaskError::Condition { index, error })?;
                let action = action_of(action).map_err(invalid)?;
                Ok(AssignedTask::Conditional { condition, action })
            }
            // A bare action runs unconditionally.
            [Lit::Str(_), Lit::Dict(_)] => {
                Ok(AssignedTask::Conditional { condition: Condition::always(), action: action_of(l).map_err(invalid)? })
            }
            _ => Err(invalid("expected (\"lambda ...\", (action, {arguments})) or a burger name".to_string())),
        },
        other => Err(invalid(format!("expected a task, got {}", other.describe()))),
    }
}

/// Parses a task list written as a Python literal or as JSON.
///
/// Acceptance is all or nothing: the first bad element rejects the list.
pub fn parse_assigned_tasks(src: &str) -> Result<Vec<AssignedTask>, TaskError> {
    let syntax = |e: DslError, element| TaskError::Syntax { pos: e.pos(), element, message: dsl_message(e) };
    let mut p = Parser::new(src).map_err(|e| syntax(e, None))?;
    let open = if p.eat_op("[") {
        "]"
    } else if p.eat_op("(") {
        ")"
    } else {
        return Err(syntax(p.unexpected("expected a list of tasks"), None));
    };
    let mut elements = Vec::new();
    while !p.is_op(open) {
        let lit = literal(&mut p).map_err(|e| syntax(e, Some(elements.len())))?;
        elements.push(lit);
        if !p.eat_op(",") {
            break;
        }
    }
    let index = elements.len();
    p.expect_op(open).map_err(|e| syntax(e, Some(index)))?;
    if !matches!(p.peek(), Tok::End) {
        return Err(syntax(p.unexpected("expected end of input"), None));
    }
    elements.iter().enumerate().map(|(i, l)| task_of(i, l)).collect()
}

/// Parses one macro action such as `("serve", {"food": "BeefBurger"})`.
pub fn parse_action(src: &str) -> Result<MacroAction, TaskError> {
    let syntax = |e: DslError| TaskError::Syntax { pos: e.pos(), element: None, message: dsl_message(e) };
    let mut p = Parser::new(src).map_err(syntax)?;
    let lit = literal(&mut p).map_err(syntax)?;
    if !matches!(p.peek(), Tok::End) {
        return Err(syntax(p.unexpected("expected end of input")));
    }
    action_of(&lit).map_err(|message| TaskError::Validation { index: 0, message })
}

fn dsl_message(e: DslError) -> String {
    match e {
        DslError::Parse { message, .. } | DslError::Security { message, .. } => message,
    }
}

/// Pretty-prints a task list in the literal syntax accepted by `parse_assigned_tasks`.
pub fn tasks_to_literal(tasks: &[AssignedTask]) -> String {
    if tasks.is_empty() {
        return "[]".to_string();
    }
    let mut out = String::from("[\n");
    for t in tasks {
        out.push_str("    ");
        out.push_str(&t.to_literal());
        out.push_str(",\n");
    }
    out.push(']');
    out
}

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::ast::{BinOp, BoolOp, Builtin, CmpOp, Comprehension, Condition, Expr, UnaryOp};
use super::EvalError;
use crate::env::StateDocument;
use crate::item::{ObjectKey, CATALOG};

/// Node visits allowed per evaluation.
pub const EVAL_BUDGET: usize = 10_000;

const MAX_SEQ: usize = 10_000;

/// A view into the state document, resolved lazily.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DocRef {
    Root,
    Objects,
    Counters,
    Orders,
    Order(usize),
    Inventory,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    Tuple(Vec<Value>),
    List(Vec<Value>),
    Doc(DocRef),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Str(_) => "str",
            Value::Tuple(_) => "tuple",
            Value::List(_) | Value::Doc(DocRef::Orders) => "list",
            Value::Doc(_) => "dict",
        }
    }

    fn as_int(&self) -> Option<i64> {
        match *self {
            Value::Int(n) => Some(n),
            Value::Bool(b) => Some(b as i64),
            _ => None,
        }
    }
}

fn err(msg: impl Into<String>) -> EvalError {
    EvalError { message: msg.into() }
}

struct Eval<'a> {
    doc: &'a StateDocument,
    env: Vec<(&'a str, Value)>,
    visits: usize,
}

impl<'a> Eval<'a> {
    fn tick(&mut self) -> Result<(), EvalError> {
        self.visits += 1;
        if self.visits > EVAL_BUDGET {
            return Err(err("evaluation budget exceeded"));
        }
        Ok(())
    }

    fn eval(&mut self, e: &'a Expr) -> Result<Value, EvalError> {
        self.tick()?;
        Ok(match e {
            Expr::Int(n) => Value::Int(*n),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Name(n) => self
                .env
                .iter()
                .rev()
                .find(|(k, _)| *k == n)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| err(format!("name '{n}' is not defined")))?,
            Expr::Tuple(items) => Value::Tuple(items.iter().map(|i| self.eval(i)).collect::<Result<_, _>>()?),
            Expr::List(items) => Value::List(items.iter().map(|i| self.eval(i)).collect::<Result<_, _>>()?),
            Expr::Subscript(base, key) => {
                let b = self.eval(base)?;
                let k = self.eval(key)?;
                self.subscript(b, k)?
            }
            Expr::Unary(op, inner) => {
                let v = self.eval(inner)?;
                match op {
                    UnaryOp::Not => Value::Bool(!self.truthy(&v)),
                    UnaryOp::Neg => Value::Int(
                        v.as_int()
                            .ok_or_else(|| err(format!("bad operand type for unary -: '{}'", v.type_name())))?
                            .checked_neg()
                            .ok_or_else(|| err("integer overflow"))?,
                    ),
                    UnaryOp::Pos => Value::Int(
                        v.as_int().ok_or_else(|| err(format!("bad operand type for unary +: '{}'", v.type_name())))?,
                    ),
                }
            }
            Expr::Binary(op, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                binary(*op, a, b)?
            }
            Expr::Compare(first, rest) => {
                let mut left = self.eval(first)?;
                for (op, e) in rest {
                    let right = self.eval(e)?;
                    if !self.compare(*op, &left, &right)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Value::Bool(true)
            }
            Expr::BoolOp(op, items) => {
                let mut last = Value::Bool(*op == BoolOp::And);
                for item in items {
                    last = self.eval(item)?;
                    let t = self.truthy(&last);
                    if (*op == BoolOp::And && !t) || (*op == BoolOp::Or && t) {
                        return Ok(last);
                    }
                }
                last
            }
            Expr::IfElse { body, test, orelse } => {
                let t = self.eval(test)?;
                if self.truthy(&t) {
                    self.eval(body)?
                } else {
                    self.eval(orelse)?
                }
            }
            Expr::Call(b, args) => {
                if args.len() != 1 {
                    return Err(err(format!("{}() takes exactly one argument ({} given)", b.name(), args.len())));
                }
                let arg = self.eval(&args[0])?;
                let items = self.iterate(&arg)?;
                self.fold(*b, items.into_iter().map(Ok))?
            }
            Expr::Generator(b, comp) => self.generator(*b, comp)?,
        })
    }

    fn generator(&mut self, b: Builtin, comp: &'a Comprehension) -> Result<Value, EvalError> {
        let source = self.eval(&comp.iter)?;
        let items = self.iterate(&source)?;
        let mut produced = Vec::new();
        for item in items {
            self.env.push((comp.var.as_str(), item));
            let mut keep = true;
            for cond in &comp.conds {
                let c = self.eval(cond);
                match c {
                    Ok(v) if self.truthy(&v) => {}
                    Ok(_) => {
                        keep = false;
                        break;
                    }
                    Err(e) => {
                        self.env.pop();
                        return Err(e);
                    }
                }
            }
            let out = if keep { Some(self.eval(&comp.elt)) } else { None };
            self.env.pop();
            if let Some(v) = out {
                let v = v?;
                // any/all stop at the first deciding element.
                let t = self.truthy(&v);
                match b {
                    Builtin::Any if t => return Ok(Value::Bool(true)),
                    Builtin::All if !t => return Ok(Value::Bool(false)),
                    _ => produced.push(v),
                }
            }
        }
        self.fold(b, produced.into_iter().map(Ok))
    }

    fn fold(&mut self, b: Builtin, items: impl Iterator<Item = Result<Value, EvalError>>) -> Result<Value, EvalError> {
        match b {
            Builtin::Len => Ok(Value::Int(items.count() as i64)),
            Builtin::Sum => {
                let mut total: i64 = 0;
                for v in items {
                    let v = v?;
                    let n = v
                        .as_int()
                        .ok_or_else(|| err(format!("unsupported operand type(s) for +: 'int' and '{}'", v.type_name())))?;
                    total = total.checked_add(n).ok_or_else(|| err("integer overflow"))?;
                }
                Ok(Value::Int(total))
            }
            Builtin::Any => {
                for v in items {
                    if self.truthy(&v?) {
                        return Ok(Value::Bool(true));
                    }
                }
                Ok(Value::Bool(false))
            }
            Builtin::All => {
                for v in items {
                    if !self.truthy(&v?) {
                        return Ok(Value::Bool(false));
                    }
                }
                Ok(Value::Bool(true))
            }
        }
    }

    fn doc_len(&self, r: DocRef) -> usize {
        match r {
            DocRef::Root => 4,
            DocRef::Objects => CATALOG.len(),
            DocRef::Counters => 1,
            DocRef::Orders => self.doc.orders.len(),
            DocRef::Order(_) => 2,
            DocRef::Inventory => self.doc.inventory_other_player.len(),
        }
    }

    fn truthy(&self, v: &Value) -> bool {
        match v {
            Value::Int(n) => *n != 0,
            Value::Bool(b) => *b,
            Value::Str(s) => !s.is_empty(),
            Value::Tuple(items) | Value::List(items) => !items.is_empty(),
            Value::Doc(r) => self.doc_len(*r) > 0,
        }
    }

    fn iterate(&mut self, v: &Value) -> Result<Vec<Value>, EvalError> {
        let s = |x: &str| Value::Str(x.to_string());
        let items = match v {
            Value::Tuple(items) | Value::List(items) => items.clone(),
            Value::Str(text) => text.chars().map(|c| Value::Str(c.to_string())).collect(),
            Value::Doc(DocRef::Root) => ["objects", "counters", "orders", "inventory_other_player"].map(s).to_vec(),
            Value::Doc(DocRef::Objects) => CATALOG.iter().map(|k| key_tuple(*k)).collect(),
            Value::Doc(DocRef::Counters) => [s("Empty")].to_vec(),
            Value::Doc(DocRef::Orders) => (0..self.doc.orders.len()).map(|i| Value::Doc(DocRef::Order(i))).collect(),
            Value::Doc(DocRef::Order(_)) => [s("name"), s("remain_time")].to_vec(),
            Value::Doc(DocRef::Inventory) => {
                self.doc.inventory_other_player.iter().map(|(id, _)| Value::Str(id.clone())).collect()
            }
            Value::Int(_) | Value::Bool(_) => {
                return Err(err(format!("'{}' object is not iterable", v.type_name())));
            }
        };
        Ok(items)
    }

    fn subscript(&mut self, base: Value, key: Value) -> Result<Value, EvalError> {
        let key_error = |k: &Value| err(format!("KeyError: {}", show(k)));
        match base {
            Value::Doc(DocRef::Root) => match &key {
                Value::Str(k) => match k.as_str() {
                    "objects" => Ok(Value::Doc(DocRef::Objects)),
                    "counters" => Ok(Value::Doc(DocRef::Counters)),
                    "orders" => Ok(Value::Doc(DocRef::Orders)),
                    "inventory_other_player" => Ok(Value::Doc(DocRef::Inventory)),
                    _ => Err(key_error(&key)),
                },
                _ => Err(key_error(&key)),
            },
            Value::Doc(DocRef::Objects) => {
                let found = match &key {
                    Value::Tuple(parts) => match parts.as_slice() {
                        [Value::Str(name), Value::Str(status)] => ObjectKey::from_strs(name, status),
                        _ => None,
                    },
                    _ => None,
                };
                match found {
                    Some(k) => Ok(Value::Int(self.doc.objects.get(k) as i64)),
                    None => Err(key_error(&key)),
                }
            }
            Value::Doc(DocRef::Counters) => match &key {
                Value::Str(k) if k == "Empty" => Ok(Value::Int(self.doc.counters_empty as i64)),
                _ => Err(key_error(&key)),
            },
            Value::Doc(DocRef::Orders) => {
                let i = index(&key, self.doc.orders.len(), "list")?;
                Ok(Value::Doc(DocRef::Order(i)))
            }
            Value::Doc(DocRef::Order(i)) => {
                let order = &self.doc.orders[i];
                match &key {
                    Value::Str(k) if k == "name" => Ok(Value::Str(order.name.as_str().to_string())),
                    Value::Str(k) if k == "remain_time" => Ok(Value::Int(order.remain_time as i64)),
                    _ => Err(key_error(&key)),
                }
            }
            Value::Doc(DocRef::Inventory) => {
                let hit = match &key {
                    Value::Str(k) => self.doc.inventory_other_player.iter().find(|(id, _)| id == k),
                    _ => None,
                };
                hit.map(|(_, k)| key_tuple(*k)).ok_or_else(|| key_error(&key))
            }
            Value::Tuple(items) | Value::List(items) => {
                let i = index(&key, items.len(), "tuple")?;
                Ok(items[i].clone())
            }
            Value::Str(text) => {
                let chars: Vec<char> = text.chars().collect();
                let i = index(&key, chars.len(), "string")?;
                Ok(Value::Str(chars[i].to_string()))
            }
            other => Err(err(format!("'{}' object is not subscriptable", other.type_name()))),
        }
    }

    fn materialize(&self, v: &Value) -> Value {
        match v {
            Value::Doc(DocRef::Order(i)) => {
                let o = &self.doc.orders[*i];
                Value::List(alloc::vec![Value::Str(o.name.as_str().to_string()), Value::Int(o.remain_time as i64)])
            }
            other => other.clone(),
        }
    }

    fn equal(&self, a: &Value, b: &Value) -> bool {
        if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
            return x == y;
        }
        match (a, b) {
            (Value::Str(x), Value::Str(y)) => x == y,
            (Value::Tuple(x), Value::Tuple(y)) | (Value::List(x), Value::List(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| self.equal(p, q))
            }
            (Value::Doc(DocRef::Order(_)), Value::Doc(DocRef::Order(_))) => self.materialize(a) == self.materialize(b),
            (Value::Doc(x), Value::Doc(y)) => x == y,
            _ => false,
        }
    }

    fn order(&self, a: &Value, b: &Value) -> Result<Ordering, EvalError> {
        if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
            return Ok(x.cmp(&y));
        }
        match (a, b) {
            (Value::Str(x), Value::Str(y)) => Ok(x.cmp(y)),
            (Value::Tuple(x), Value::Tuple(y)) | (Value::List(x), Value::List(y)) => {
                for (p, q) in x.iter().zip(y) {
                    if !self.equal(p, q) {
                        return self.order(p, q);
                    }
                }
                Ok(x.len().cmp(&y.len()))
            }
            _ => Err(err(format!(
                "ordering not supported between instances of '{}' and '{}'",
                a.type_name(),
                b.type_name()
            ))),
        }
    }

    fn compare(&self, op: CmpOp, a: &Value, b: &Value) -> Result<bool, EvalError> {
        Ok(match op {
            CmpOp::Eq => self.equal(a, b),
            CmpOp::Ne => !self.equal(a, b),
            CmpOp::Lt => self.order(a, b)? == Ordering::Less,
            CmpOp::Le => self.order(a, b)? != Ordering::Greater,
            CmpOp::Gt => self.order(a, b)? == Ordering::Greater,
            CmpOp::Ge => self.order(a, b)? != Ordering::Less,
        })
    }
}

fn key_tuple(k: ObjectKey) -> Value {
    Value::Tuple(alloc::vec![Value::Str(k.name.as_str().to_string()), Value::Str(k.status.as_str().to_string())])
}

fn show(v: &Value) -> String {
    match v {
        Value::Int(n) => format!("{n}"),
        Value::Bool(b) => (if *b { "True" } else { "False" }).to_string(),
        Value::Str(s) => format!("'{s}'"),
        Value::Tuple(items) => {
            let inner: Vec<String> = items.iter().map(show).collect();
            format!("({})", inner.join(", "))
        }
        Value::List(items) => {
            let inner: Vec<String> = items.iter().map(show).collect();
            format!("[{}]", inner.join(", "))
        }
        Value::Doc(r) => format!("<{r:?}>"),
    }
}

fn index(key: &Value, len: usize, what: &str) -> Result<usize, EvalError> {
    let i = key.as_int().ok_or_else(|| err(format!("{what} indices must be integers, not {}", key.type_name())))?;
    let j = if i < 0 { i + len as i64 } else { i };
    if j < 0 || j >= len as i64 {
        return Err(err(format!("{what} index out of range")));
    }
    Ok(j as usize)
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
        let r = match op {
            BinOp::Add => x.checked_add(y),
            BinOp::Sub => x.checked_sub(y),
            BinOp::Mul => x.checked_mul(y),
        };
        return r.map(Value::Int).ok_or_else(|| err("integer overflow"));
    }
    let sym = match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
    };
    match (op, a, b) {
        (BinOp::Add, Value::Str(x), Value::Str(y)) if x.len() + y.len() <= MAX_SEQ => Ok(Value::Str(x + &y)),
        (BinOp::Add, Value::Tuple(mut x), Value::Tuple(y)) if x.len() + y.len() <= MAX_SEQ => {
            x.extend(y);
            Ok(Value::Tuple(x))
        }
        (BinOp::Add, Value::List(mut x), Value::List(y)) if x.len() + y.len() <= MAX_SEQ => {
            x.extend(y);
            Ok(Value::List(x))
        }
        (_, a, b) => Err(err(format!(
            "unsupported operand type(s) for {sym}: '{}' and '{}'",
            a.type_name(),
            b.type_name()
        ))),
    }
}

/// Evaluates a condition against a document; the result is the Python truthiness of
/// the lambda body.
pub fn eval_condition(cond: &Condition, doc: &StateDocument) -> Result<bool, EvalError> {
    let mut ev = Eval { doc, env: alloc::vec![(cond.param.as_str(), Value::Doc(DocRef::Root))], visits: 0 };
    let v = ev.eval(&cond.body)?;
    Ok(ev.truthy(&v))
}

/// Evaluates to an integer when the body produces one (used by tests and tooling).
pub fn eval_int(cond: &Condition, doc: &StateDocument) -> Result<i64, EvalError> {
    let mut ev = Eval { doc, env: alloc::vec![(cond.param.as_str(), Value::Doc(DocRef::Root))], visits: 0 };
    let v = ev.eval(&cond.body)?;
    v.as_int().ok_or_else(|| err(format!("expected an int, got {}", v.type_name())))
}

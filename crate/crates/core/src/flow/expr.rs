//! Closed-form vector-field expressions evaluated in interval arithmetic.
//!
//! JSON form: `{"op": "add", "args": [...]}` for `add`, `sub`, `mul`, `neg`,
//! `sin`, `cos`, `exp`; `{"op": "const", "value": 1.5}`;
//! `{"op": "var", "name": "x0"}`; `{"op": "ln2"}` and `{"op": "pi"}` for the
//! enclosed constants. A bare number or a bare `"x<i>"` string is accepted
//! as shorthand.

use serde_json::{json, Value};

use super::interval::Interval;
use super::FlowError;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Ln2,
    Pi,
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn add(args: Vec<Expr>) -> Expr {
        Expr::Add(args)
    }

    pub fn mul(args: Vec<Expr>) -> Expr {
        Expr::Mul(args)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn sin(e: Expr) -> Expr {
        Expr::Sin(Box::new(e))
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) | Expr::Ln2 | Expr::Pi => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(a) | Expr::Mul(a) => a.iter().filter_map(Expr::max_var).max(),
            Expr::Sub(a, b) => a.max_var().max(b.max_var()),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.max_var(),
        }
    }

    pub fn eval(&self, x: &[Interval], eps: f64) -> Interval {
        match self {
            Expr::Const(v) => Interval::point(*v),
            Expr::Var(i) => x[*i],
            Expr::Ln2 => Interval::ln2(),
            Expr::Pi => Interval::pi(),
            Expr::Add(a) => a
                .iter()
                .map(|e| e.eval(x, eps))
                .reduce(|s, t| s.add(&t, eps))
                .unwrap_or(Interval::point(0.0)),
            Expr::Mul(a) => a
                .iter()
                .map(|e| e.eval(x, eps))
                .reduce(|s, t| s.mul(&t, eps))
                .unwrap_or(Interval::point(1.0)),
            Expr::Sub(a, b) => a.eval(x, eps).sub(&b.eval(x, eps), eps),
            Expr::Neg(a) => a.eval(x, eps).neg(),
            Expr::Sin(a) => a.eval(x, eps).sin(eps),
            Expr::Cos(a) => a.eval(x, eps).cos(eps),
            Expr::Exp(a) => a.eval(x, eps).exp(eps),
        }
    }

    /// Plain floating-point evaluation, for sampling and tests.
    pub fn eval_point(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Ln2 => std::f64::consts::LN_2,
            Expr::Pi => std::f64::consts::PI,
            Expr::Add(a) => a.iter().map(|e| e.eval_point(x)).sum(),
            Expr::Mul(a) => a.iter().map(|e| e.eval_point(x)).product(),
            Expr::Sub(a, b) => a.eval_point(x) - b.eval_point(x),
            Expr::Neg(a) => -a.eval_point(x),
            Expr::Sin(a) => a.eval_point(x).sin(),
            Expr::Cos(a) => a.eval_point(x).cos(),
            Expr::Exp(a) => a.eval_point(x).exp(),
        }
    }

    pub fn to_json(&self) -> Value {
        let un = |op: &str, a: &Expr| json!({"op": op, "args": [a.to_json()]});
        match self {
            Expr::Const(v) => json!({"op": "const", "value": v}),
            Expr::Var(i) => json!({"op": "var", "name": format!("x{i}")}),
            Expr::Ln2 => json!({"op": "ln2"}),
            Expr::Pi => json!({"op": "pi"}),
            Expr::Add(a) => json!({"op": "add", "args": a.iter().map(Expr::to_json).collect::<Vec<_>>()}),
            Expr::Mul(a) => json!({"op": "mul", "args": a.iter().map(Expr::to_json).collect::<Vec<_>>()}),
            Expr::Sub(a, b) => json!({"op": "sub", "args": [a.to_json(), b.to_json()]}),
            Expr::Neg(a) => un("neg", a),
            Expr::Sin(a) => un("sin", a),
            Expr::Cos(a) => un("cos", a),
            Expr::Exp(a) => un("exp", a),
        }
    }

    pub fn from_json(v: &Value) -> Result<Expr, FlowError> {
        let bad = |msg: &str| FlowError::Expr(format!("{msg}: {v}"));
        match v {
            Value::Number(n) => return n.as_f64().map(Expr::Const).ok_or_else(|| bad("number")),
            Value::String(s) => return parse_var(s).ok_or_else(|| bad("unknown variable")),
            Value::Object(_) => {}
            _ => return Err(bad("expected object, number or variable name")),
        }
        let op = v
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing \"op\""))?;
        let args = || -> Result<Vec<Expr>, FlowError> {
            v.get("args")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("missing \"args\""))?
                .iter()
                .map(Expr::from_json)
                .collect()
        };
        let unary = |f: fn(Box<Expr>) -> Expr| -> Result<Expr, FlowError> {
            let mut a = args()?;
            if a.len() != 1 {
                return Err(bad("expected one argument"));
            }
            Ok(f(Box::new(a.remove(0))))
        };
        match op {
            "const" => v
                .get("value")
                .and_then(Value::as_f64)
                .map(Expr::Const)
                .ok_or_else(|| bad("const needs a numeric \"value\"")),
            "var" => v
                .get("name")
                .and_then(Value::as_str)
                .and_then(parse_var)
                .ok_or_else(|| bad("var needs \"name\": \"x<i>\"")),
            "ln2" => Ok(Expr::Ln2),
            "pi" => Ok(Expr::Pi),
            "add" => Ok(Expr::Add(args()?)),
            "mul" => Ok(Expr::Mul(args()?)),
            "sub" => {
                let mut a = args()?;
                if a.len() != 2 {
                    return Err(bad("sub expects two arguments"));
                }
                let b = a.pop().unwrap();
                Ok(Expr::Sub(Box::new(a.pop().unwrap()), Box::new(b)))
            }
            "neg" => unary(Expr::Neg),
            "sin" => unary(Expr::Sin),
            "cos" => unary(Expr::Cos),
            "exp" => unary(Expr::Exp),
            _ => Err(bad("unknown op")),
        }
    }
}

fn parse_var(s: &str) -> Option<Expr> {
    s.strip_prefix('x')?.parse().ok().map(Expr::Var)
}

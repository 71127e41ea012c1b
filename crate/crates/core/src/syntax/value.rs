use std::fmt;

use thiserror::Error;

use super::Name;

/// Payloads and conditional guards.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Unit,
    Bool(bool),
    Name(Name),
    Not(Box<Value>),
    And(Box<Value>, Box<Value>),
    Or(Box<Value>, Box<Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("expression mentions the free name `{0}`")]
    Open(Name),
    #[error("unit used as a boolean")]
    NotBoolean,
}

impl Value {
    pub fn is_expression(&self) -> bool {
        matches!(self, Value::Not(_) | Value::And(..) | Value::Or(..))
    }

    pub fn as_name(&self) -> Option<&Name> {
        match self {
            Value::Name(n) => Some(n),
            _ => None,
        }
    }

    pub(crate) fn names(&self, out: &mut Vec<Name>) {
        match self {
            Value::Unit | Value::Bool(_) => {}
            Value::Name(n) => out.push(n.clone()),
            Value::Not(v) => v.names(out),
            Value::And(a, b) | Value::Or(a, b) => {
                a.names(out);
                b.names(out);
            }
        }
    }

    pub(crate) fn map_names(&self, f: &mut impl FnMut(&Name) -> Value) -> Value {
        match self {
            Value::Unit => Value::Unit,
            Value::Bool(b) => Value::Bool(*b),
            Value::Name(n) => f(n),
            Value::Not(v) => Value::Not(Box::new(v.map_names(f))),
            Value::And(a, b) => Value::And(Box::new(a.map_names(f)), Box::new(b.map_names(f))),
            Value::Or(a, b) => Value::Or(Box::new(a.map_names(f)), Box::new(b.map_names(f))),
        }
    }
}

/// Evaluates a value to a literal: booleans, unit or a name.
pub fn eval_expr(v: &Value) -> Result<Value, EvalError> {
    fn truth(v: &Value) -> Result<bool, EvalError> {
        match v {
            Value::Bool(b) => Ok(*b),
            Value::Unit => Err(EvalError::NotBoolean),
            Value::Name(n) => Err(EvalError::Open(n.clone())),
            Value::Not(a) => Ok(!truth(a)?),
            Value::And(a, b) => Ok(truth(a)? & truth(b)?),
            Value::Or(a, b) => Ok(truth(a)? | truth(b)?),
        }
    }
    match v {
        Value::Unit | Value::Bool(_) | Value::Name(_) => Ok(v.clone()),
        _ => truth(v).map(Value::Bool),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // precedence: or 0, and 1, not/atoms 2
        fn go(v: &Value, ctx: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let (prec, open) = match v {
                Value::Or(..) => (0, ctx > 0),
                Value::And(..) => (1, ctx > 1),
                _ => (2, false),
            };
            if open {
                f.write_str("(")?;
            }
            match v {
                Value::Unit => f.write_str("()")?,
                Value::Bool(b) => write!(f, "{b}")?,
                Value::Name(n) => write!(f, "{n}")?,
                Value::Not(a) => {
                    f.write_str("not ")?;
                    go(a, 2, f)?;
                }
                Value::And(a, b) | Value::Or(a, b) => {
                    go(a, prec, f)?;
                    f.write_str(if prec == 0 { " or " } else { " and " })?;
                    go(b, prec + 1, f)?;
                }
            }
            if open {
                f.write_str(")")?;
            }
            Ok(())
        }
        go(self, 0, f)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: bool) -> Value {
        Value::Bool(x)
    }

    #[test]
    fn literals_evaluate_to_themselves() {
        assert_eq!(eval_expr(&b(true)), Ok(b(true)));
        assert_eq!(eval_expr(&Value::Unit), Ok(Value::Unit));
    }

    #[test]
    fn negation() {
        assert_eq!(eval_expr(&Value::Not(Box::new(b(false)))), Ok(b(true)));
    }

    #[test]
    fn matches_truth_table() {
        for x in [false, true] {
            for y in [false, true] {
                let and = Value::And(Box::new(b(x)), Box::new(Value::Not(Box::new(b(y)))));
                assert_eq!(eval_expr(&and), Ok(b(x && !y)));
                let or = Value::Or(Box::new(b(x)), Box::new(b(y)));
                assert_eq!(eval_expr(&or), Ok(b(x || y)));
            }
        }
        let e = Value::And(Box::new(b(true)), Box::new(Value::Not(Box::new(b(true)))));
        assert_eq!(eval_expr(&e), Ok(b(false)));
    }

    #[test]
    fn open_expressions_fail() {
        let e = Value::Not(Box::new(Value::Name(Name::new("z"))));
        assert_eq!(eval_expr(&e), Err(EvalError::Open(Name::new("z"))));
        assert_eq!(eval_expr(&Value::Not(Box::new(Value::Unit))), Err(EvalError::NotBoolean));
    }

    #[test]
    fn display_parenthesizes_by_precedence() {
        let e = Value::And(
            Box::new(Value::Or(Box::new(b(true)), Box::new(b(false)))),
            Box::new(Value::Not(Box::new(b(true)))),
        );
        assert_eq!(e.to_string(), "(true or false) and not true");
    }
}

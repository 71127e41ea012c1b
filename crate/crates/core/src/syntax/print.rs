use std::fmt::{self, Write};

use super::subst::occurs_free;
use super::{Binder, Endpoint, Payload, Prefix, Proc, Side, Value};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ctx {
    Top,
    ParItem,
    Seq,
}

fn needs_parens(p: &Proc, ctx: Ctx) -> bool {
    match (p, ctx) {
        (_, Ctx::Top) => false,
        (Proc::Par(_), _) | (Proc::New(..), _) => true,
        (Proc::Sum(ss), Ctx::Seq) => ss.len() > 1,
        _ => false,
    }
}

fn payload(v: &Value, f: &mut impl Write) -> fmt::Result {
    match v {
        Value::Unit => Ok(()),
        _ => write!(f, "({v})"),
    }
}

fn endpoint(e: &Endpoint, f: &mut impl Write) -> fmt::Result {
    write!(f, "{}", e.name)?;
    match e.side {
        None => Ok(()),
        Some(Side::Internal) => f.write_str(":int"),
        Some(Side::External) => f.write_str(":ext"),
    }
}

fn cont(k: &Proc, f: &mut impl Write) -> fmt::Result {
    if *k != Proc::Nil {
        f.write_char('.')?;
        go(k, Ctx::Seq, f)?;
    }
    Ok(())
}

fn go(p: &Proc, ctx: Ctx, f: &mut impl Write) -> fmt::Result {
    if needs_parens(p, ctx) {
        f.write_char('(')?;
        go(p, Ctx::Top, f)?;
        return f.write_char(')');
    }
    match p {
        Proc::Nil => f.write_char('0'),
        Proc::Par(ps) => {
            for (i, q) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(" | ")?;
                }
                go(q, Ctx::ParItem, f)?;
            }
            Ok(())
        }
        Proc::New(..) => {
            f.write_str("new")?;
            let mut cur = p;
            while let Proc::New(b, body) = cur {
                match b {
                    Binder::Single(x) => write!(f, " {x}")?,
                    Binder::Pair(a, b) => {
                        f.write_char(' ')?;
                        endpoint(a, f)?;
                        f.write_char(' ')?;
                        endpoint(b, f)?;
                    }
                }
                cur = body;
            }
            f.write_str(" in ")?;
            go(cur, Ctx::Top, f)
        }
        Proc::Rep(body) => {
            f.write_str("rep ")?;
            go(body, Ctx::Seq, f)
        }
        Proc::Sum(ss) => {
            if ss.is_empty() {
                return f.write_char('0');
            }
            for (i, s) in ss.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                match &s.prefix {
                    Prefix::Out(y, v) => {
                        write!(f, "{y}!")?;
                        payload(v, f)?;
                    }
                    Prefix::In(y, x) => {
                        write!(f, "{y}?")?;
                        if occurs_free(x, &s.cont) {
                            write!(f, "({x})")?;
                        }
                    }
                    Prefix::Tau => f.write_str("tau")?,
                }
                cont(&s.cont, f)?;
            }
            Ok(())
        }
        Proc::Choice(y, bs) => {
            write!(f, "{y} (")?;
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                write!(f, "{}", b.label)?;
                match &b.payload {
                    Payload::Send(v) => {
                        f.write_char('!')?;
                        payload(v, f)?;
                    }
                    Payload::Recv(x) => {
                        f.write_char('?')?;
                        if occurs_free(x, &b.cont) {
                            write!(f, "({x})")?;
                        }
                    }
                }
                cont(&b.cont, f)?;
            }
            f.write_char(')')
        }
        Proc::If(v, a, b) => {
            write!(f, "if {v} then ")?;
            go(a, Ctx::Seq, f)?;
            f.write_str(" else ")?;
            go(b, Ctx::Seq, f)
        }
        Proc::Send(y, v, k) => {
            write!(f, "{y}!")?;
            payload(v, f)?;
            cont(k, f)
        }
        Proc::Recv(y, x, k) => {
            write!(f, "{y}?")?;
            if occurs_free(x, k) {
                write!(f, "({x})")?;
            }
            cont(k, f)
        }
        Proc::Select(y, l, k) => {
            write!(f, "{y} sel {l}")?;
            cont(k, f)
        }
        Proc::Case(y, arms) => {
            write!(f, "{y} case {{ ")?;
            for (i, (l, k)) in arms.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}: ")?;
                go(k, Ctx::Top, f)?;
            }
            f.write_str(" }")
        }
    }
}

impl fmt::Display for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        go(self, Ctx::Top, f)
    }
}

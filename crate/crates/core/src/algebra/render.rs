use num_traits::One;

use super::{Expr, Relation, Sign, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Side,
    SumChild,
    ProductFirst,
    ProductRest,
    Numerator,
    Denominator,
    PowerBase,
}

/// Canonical text for a relation, e.g. `x<2/(-4)`. Parsing the output and
/// rendering again yields the same string.
pub fn render(r: &Relation) -> String {
    format!("{}{}{}", node(&r.lhs, Pos::Side), r.sense.symbol(), node(&r.rhs, Pos::Side))
}

pub fn render_expr(e: &Expr) -> String {
    node(e, Pos::Side)
}

fn paren(s: String) -> String {
    format!("({s})")
}

fn node(e: &Expr, pos: Pos) -> String {
    match e {
        Expr::Const(c) if c.is_integer() => {
            let s = c.to_integer().to_string();
            if c.numer() < &0 && matches!(pos, Pos::ProductRest | Pos::Denominator | Pos::PowerBase) {
                paren(s)
            } else {
                s
            }
        }
        Expr::Const(c) => {
            let q = Expr::quotient(Expr::int(*c.numer()), Expr::int(*c.denom()));
            node(&q, pos)
        }
        Expr::Var(v) => v.to_string(),
        Expr::Sum(ts) => {
            let body = sum(ts);
            if pos == Pos::Side {
                body
            } else {
                paren(body)
            }
        }
        Expr::Product(fs) => {
            let body = product(fs);
            if matches!(pos, Pos::ProductFirst | Pos::ProductRest | Pos::Denominator | Pos::PowerBase) {
                paren(body)
            } else {
                body
            }
        }
        Expr::Quotient(n, d) => {
            let body = format!("{}/{}", node(n, Pos::Numerator), node(d, Pos::Denominator));
            if matches!(pos, Pos::ProductRest | Pos::Denominator | Pos::PowerBase) {
                paren(body)
            } else {
                body
            }
        }
        Expr::Power(b, k) => {
            let body = format!("{}^{}", node(b, Pos::PowerBase), k);
            if pos == Pos::PowerBase {
                paren(body)
            } else {
                body
            }
        }
    }
}

fn sum(ts: &[Term]) -> String {
    let mut out = String::new();
    for (i, t) in ts.iter().enumerate() {
        if i == 0 {
            out.push_str(&node(&t.to_expr(), Pos::SumChild));
            continue;
        }
        let r = node(&t.expr, Pos::SumChild);
        match (t.sign, r.starts_with('-')) {
            (Sign::Plus, true) => out.push_str(&r),
            (Sign::Plus, false) => {
                out.push('+');
                out.push_str(&r);
            }
            (Sign::Minus, false) => {
                out.push('-');
                out.push_str(&r);
            }
            (Sign::Minus, true) => {
                let flipped = node(&t.expr.negated(), Pos::SumChild);
                if flipped.starts_with('-') {
                    out.push_str("-(");
                    out.push_str(&r);
                    out.push(')');
                } else {
                    out.push('+');
                    out.push_str(&flipped);
                }
            }
        }
    }
    out
}

fn product(fs: &[Expr]) -> String {
    if let (Some(Expr::Const(c)), true) = (fs.first(), fs.len() >= 2) {
        if *c == -super::Rational::one() {
            let rest = factors(&fs[1..]);
            let leads_badly = rest.starts_with('-')
                || rest.starts_with(|ch: char| ch.is_ascii_digit())
                || matches!(fs[1], Expr::Product(_));
            if !leads_badly {
                return format!("-{rest}");
            }
        }
    }
    factors(fs)
}

fn factors(fs: &[Expr]) -> String {
    let mut out = String::new();
    for (i, f) in fs.iter().enumerate() {
        if i == 0 {
            out.push_str(&node(f, Pos::ProductFirst));
            continue;
        }
        let r = node(f, Pos::ProductRest);
        if !r.starts_with(|ch: char| ch.is_ascii_alphabetic() || ch == '(') {
            out.push('*');
        }
        out.push_str(&r);
    }
    out
}

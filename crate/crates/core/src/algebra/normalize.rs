use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::{AlgebraError, Expr, Rational, Relation, Sign, Term};

/// Canonical form: constant subtrees folded with exact arithmetic, nested
/// sums and products flattened, children sorted, repeated factors merged
/// into powers and fractions reduced. Like terms are not combined.
pub fn normalize(e: &Expr) -> Result<Expr, AlgebraError> {
    if !e.contains_var() {
        return eval_const(e).map(Expr::Const);
    }
    match e {
        Expr::Const(_) | Expr::Var(_) => Ok(e.clone()),
        Expr::Sum(ts) => {
            let mut flat = Vec::new();
            for t in ts {
                let n = normalize(&t.expr)?;
                push_sum_child(&mut flat, t.sign, n);
            }
            Ok(build_sum(flat))
        }
        Expr::Product(fs) => {
            let normed = fs.iter().map(normalize).collect::<Result<Vec<_>, _>>()?;
            Ok(build_product(normed))
        }
        Expr::Quotient(n, d) => {
            let n = normalize(n)?;
            let d = normalize(d)?;
            match d {
                Expr::Const(c) if c.is_zero() => Err(AlgebraError::DivisionByZero),
                Expr::Const(c) => Ok(build_product(vec![Expr::Const(c.recip()), n])),
                d => {
                    // constant coefficients move in front of the fraction
                    let (cn, n) = split_coefficient(n);
                    let (cd, d) = split_coefficient(d);
                    if cd.is_zero() {
                        return Err(AlgebraError::DivisionByZero);
                    }
                    let q = Expr::quotient(n, d);
                    if (cn / cd).is_one() {
                        Ok(q)
                    } else {
                        Ok(build_product(vec![Expr::Const(cn / cd), q]))
                    }
                }
            }
        }
        Expr::Power(b, k) => {
            let b = normalize(b)?;
            Ok(build_power(b, *k))
        }
    }
}

pub fn normalize_relation(r: &Relation) -> Result<Relation, AlgebraError> {
    Ok(Relation { lhs: normalize(&r.lhs)?, rhs: normalize(&r.rhs)?, sense: r.sense })
}

/// Value of a variable-free expression.
pub fn eval_const(e: &Expr) -> Result<Rational, AlgebraError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Var(_) => Err(AlgebraError::Unsupported("variable in constant subtree".into())),
        Expr::Sum(ts) => ts.iter().try_fold(Rational::zero(), |acc, t| {
            let v = eval_const(&t.expr)?;
            Ok(if t.sign.is_minus() { acc - v } else { acc + v })
        }),
        Expr::Product(fs) => fs.iter().try_fold(Rational::one(), |acc, f| Ok(acc * eval_const(f)?)),
        Expr::Quotient(n, d) => {
            let d = eval_const(d)?;
            if d.is_zero() {
                return Err(AlgebraError::DivisionByZero);
            }
            Ok(eval_const(n)? / d)
        }
        Expr::Power(b, k) => Ok(pow(eval_const(b)?, *k)),
    }
}

fn pow(b: Rational, k: u32) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * b)
}

/// Split a normalized expression into (is_negative, magnitude expression).
fn split_sign(e: Expr) -> (bool, Expr) {
    match e {
        Expr::Const(c) if c.is_negative() => (true, Expr::Const(-c)),
        Expr::Product(mut fs) => match fs.first() {
            Some(Expr::Const(c)) if c.is_negative() => {
                let m = -*c;
                if m.is_one() {
                    fs.remove(0);
                } else {
                    fs[0] = Expr::Const(m);
                }
                (true, super::from_factors(fs))
            }
            _ => (false, Expr::Product(fs)),
        },
        e => (false, e),
    }
}

fn push_sum_child(out: &mut Vec<(Sign, Expr)>, sign: Sign, e: Expr) {
    match e {
        Expr::Sum(ts) => {
            for t in ts {
                let s = if sign.is_minus() { t.sign.flipped() } else { t.sign };
                out.push((s, t.expr));
            }
        }
        e => out.push((sign, e)),
    }
}

fn build_sum(children: Vec<(Sign, Expr)>) -> Expr {
    let mut constant = Rational::zero();
    let mut rest: Vec<Term> = Vec::new();
    let mut work: Vec<(Sign, Expr)> = children.into_iter().rev().collect();
    while let Some((sign, e)) = work.pop() {
        match e {
            Expr::Const(c) => {
                constant += if sign.is_minus() { -c } else { c };
            }
            e => {
                let (neg, mag) = split_sign(e);
                let mut sign = if neg { sign.flipped() } else { sign };
                if matches!(&mag, Expr::Product(fs) if fs[0].is_zero()) {
                    sign = Sign::Plus;
                }
                match mag {
                    Expr::Sum(ts) => {
                        for t in ts.into_iter().rev() {
                            let s = if sign.is_minus() { t.sign.flipped() } else { t.sign };
                            work.push((s, t.expr));
                        }
                    }
                    mag => rest.push(Term { sign, expr: mag }),
                }
            }
        }
    }
    rest.sort_by(|a, b| a.expr.cmp(&b.expr).then(a.sign.cmp(&b.sign)));
    if !constant.is_zero() {
        let sign = if constant.is_negative() { Sign::Minus } else { Sign::Plus };
        rest.push(Term { sign, expr: Expr::Const(constant.abs()) });
    }
    match rest.len() {
        0 => Expr::int(0),
        1 => {
            let t = rest.pop().unwrap();
            match t.sign {
                Sign::Plus => t.expr,
                Sign::Minus => negate_normalized(t.expr),
            }
        }
        _ => Expr::Sum(rest),
    }
}

fn negate_normalized(e: Expr) -> Expr {
    build_product(vec![Expr::int(-1), e])
}

fn build_product(factors: Vec<Expr>) -> Expr {
    let mut constant = Rational::one();
    let mut powers: BTreeMap<Expr, u32> = BTreeMap::new();
    let mut stack = factors;
    while let Some(f) = stack.pop() {
        match f {
            Expr::Const(c) => constant *= c,
            Expr::Product(inner) => stack.extend(inner),
            Expr::Power(b, k) if k > 0 => *powers.entry(*b).or_insert(0) += k,
            other => *powers.entry(other).or_insert(0) += 1,
        }
    }
    let mut out: Vec<Expr> = powers
        .into_iter()
        .filter(|(_, k)| *k > 0)
        .map(|(b, k)| if k == 1 { b } else { Expr::power(b, k) })
        .collect();
    out.sort();
    if constant.is_zero() {
        // keep factors whose denominators can vanish, so the domain survives
        let keep: Vec<Expr> = out.into_iter().filter(has_var_denominator).collect();
        if keep.is_empty() {
            return Expr::int(0);
        }
        return Expr::Product(std::iter::once(Expr::int(0)).chain(keep).collect());
    }
    if out.is_empty() {
        return Expr::Const(constant);
    }
    if !constant.is_one() {
        out.insert(0, Expr::Const(constant));
    }
    super::from_factors(out)
}

fn split_coefficient(e: Expr) -> (Rational, Expr) {
    match e {
        Expr::Const(c) => (c, Expr::int(1)),
        Expr::Product(mut fs) => match fs.first() {
            Some(Expr::Const(c)) => {
                let c = *c;
                fs.remove(0);
                (c, super::from_factors(fs))
            }
            _ => (Rational::one(), Expr::Product(fs)),
        },
        e => (Rational::one(), e),
    }
}

fn build_power(b: Expr, k: u32) -> Expr {
    match (b, k) {
        (b, 0) if has_var_denominator(&b) => Expr::power(b, 0),
        (_, 0) => Expr::int(1),
        (b, 1) => b,
        (Expr::Const(c), k) => Expr::Const(pow(c, k)),
        (Expr::Power(inner, j), k) => build_power(*inner, j * k),
        (Expr::Product(fs), k) => build_product(fs.into_iter().map(|f| build_power(f, k)).collect()),
        (b, k) => Expr::power(b, k),
    }
}

fn has_var_denominator(e: &Expr) -> bool {
    match e {
        Expr::Const(_) | Expr::Var(_) => false,
        Expr::Sum(ts) => ts.iter().any(|t| has_var_denominator(&t.expr)),
        Expr::Product(fs) => fs.iter().any(has_var_denominator),
        Expr::Quotient(n, d) => d.contains_var() || has_var_denominator(n),
        Expr::Power(b, _) => has_var_denominator(b),
    }
}

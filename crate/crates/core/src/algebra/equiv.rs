use std::cmp::Ordering;

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Zero};

use super::poly::{to_f64, Poly, Root};
use super::{AlgebraError, Expr, Rational, Relation, Sign};

pub const DEFAULT_DEGREE_BOUND: usize = 3;

/// Whether two relations in the same variable have the same solution set.
pub fn equivalent(a: &Relation, b: &Relation) -> Result<bool, AlgebraError> {
    equivalent_with_bound(a, b, DEFAULT_DEGREE_BOUND)
}

/// Same as [`equivalent`] with an explicit bound on numerator and
/// denominator degrees.
///
/// Both relations are reduced to `P(x)/Q(x) <sense> 0`. The truth value of
/// each relation can only change at a real root of some numerator or of
/// some denominator met along the way, so evaluating both relations at
/// every such root and at one point inside every gap between consecutive
/// roots decides equality of the solution sets.
pub fn equivalent_with_bound(a: &Relation, b: &Relation, bound: usize) -> Result<bool, AlgebraError> {
    if let (Some(va), Some(vb)) = (a.variable(), b.variable()) {
        if va != vb {
            return Err(AlgebraError::MismatchedVariables(va, vb));
        }
    }
    let mut critical = Vec::new();
    for r in [a, b] {
        let mut forbidden = Vec::new();
        let diff = ratfunc(&r.lhs, bound, &mut forbidden)?.sub(&ratfunc(&r.rhs, bound, &mut forbidden)?, bound)?;
        critical.push(diff.num);
        critical.push(diff.den);
        critical.extend(forbidden);
    }
    let mut roots: Vec<Root> = critical.iter().filter(|p| p.degree() >= 1).flat_map(Poly::real_roots).collect();
    roots.sort_by(|x, y| x.value().total_cmp(&y.value()));
    roots.dedup_by(|later, earlier| match (earlier, later) {
        (Root::Exact(p), Root::Exact(q)) => p == q,
        (e, l) => (e.value() - l.value()).abs() < 1e-12,
    });

    for point in sample_points(&roots) {
        if holds(a, &point) != holds(b, &point) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sample_points(roots: &[Root]) -> Vec<Root> {
    if roots.is_empty() {
        return vec![Root::Exact(Rational::zero())];
    }
    let mut out = Vec::with_capacity(2 * roots.len() + 1);
    out.push(shift(&roots[0], -1));
    for (i, r) in roots.iter().enumerate() {
        out.push(*r);
        if let Some(next) = roots.get(i + 1) {
            out.push(between(r, next));
        }
    }
    out.push(shift(&roots[roots.len() - 1], 1));
    out
}

fn shift(r: &Root, by: i128) -> Root {
    match r {
        Root::Exact(q) => Root::Exact(q + Rational::from_integer(by)),
        Root::Approx(v) => {
            let edge = if by < 0 { v.floor() } else { v.ceil() } + by as f64;
            Root::Exact(Rational::from_integer(edge as i128))
        }
    }
}

fn between(lo: &Root, hi: &Root) -> Root {
    if let (Root::Exact(a), Root::Exact(b)) = (lo, hi) {
        return Root::Exact((a + b) / Rational::from_integer(2));
    }
    let (a, b) = (lo.value(), hi.value());
    // smallest dyadic rational strictly inside the gap
    for bits in 0..40 {
        let scale = (1i128 << bits) as f64;
        let k = ((a + b) * 0.5 * scale).round();
        let q = Rational::new(k as i128, 1i128 << bits);
        let v = to_f64(&q);
        if v > a && v < b {
            return Root::Exact(q);
        }
    }
    Root::Approx(0.5 * (a + b))
}

fn holds(r: &Relation, at: &Root) -> bool {
    match at {
        Root::Exact(x) => match (checked_eval(&r.lhs, *x), checked_eval(&r.rhs, *x)) {
            (Ok(Some(l)), Ok(Some(rv))) => r.sense.holds(l.cmp(&rv)),
            (Ok(_), Ok(_)) => false,
            // i128 overflow: fall back to floating point
            _ => holds(r, &Root::Approx(to_f64(x))),
        },
        Root::Approx(x) => match (eval_approx(&r.lhs, *x), eval_approx(&r.rhs, *x)) {
            (Some(l), Some(rv)) => {
                let tol = 1e-9 * (1.0 + l.abs() + rv.abs());
                let ord = if (l - rv).abs() <= tol { Ordering::Equal } else { l.total_cmp(&rv) };
                r.sense.holds(ord)
            }
            _ => false,
        },
    }
}

struct Overflow;

fn checked_eval(e: &Expr, x: Rational) -> Result<Option<Rational>, Overflow> {
    let v = match e {
        Expr::Const(c) => *c,
        Expr::Var(_) => x,
        Expr::Sum(ts) => {
            let mut acc = Rational::zero();
            for t in ts {
                let Some(v) = checked_eval(&t.expr, x)? else { return Ok(None) };
                acc = if t.sign == Sign::Minus { acc.checked_sub(&v) } else { acc.checked_add(&v) }.ok_or(Overflow)?;
            }
            acc
        }
        Expr::Product(fs) => {
            let mut acc = Rational::one();
            for f in fs {
                let Some(v) = checked_eval(f, x)? else { return Ok(None) };
                acc = acc.checked_mul(&v).ok_or(Overflow)?;
            }
            acc
        }
        Expr::Quotient(n, d) => {
            let Some(d) = checked_eval(d, x)? else { return Ok(None) };
            let Some(n) = checked_eval(n, x)? else { return Ok(None) };
            if d.is_zero() {
                return Ok(None);
            }
            n.checked_div(&d).ok_or(Overflow)?
        }
        Expr::Power(b, k) => {
            let Some(b) = checked_eval(b, x)? else { return Ok(None) };
            let mut acc = Rational::one();
            for _ in 0..*k {
                acc = acc.checked_mul(&b).ok_or(Overflow)?;
            }
            acc
        }
    };
    Ok(Some(v))
}

fn eval_approx(e: &Expr, x: f64) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(to_f64(c)),
        Expr::Var(_) => Some(x),
        Expr::Sum(ts) => ts.iter().try_fold(0.0, |acc, t| {
            let v = eval_approx(&t.expr, x)?;
            Some(if t.sign == Sign::Minus { acc - v } else { acc + v })
        }),
        Expr::Product(fs) => fs.iter().try_fold(1.0, |acc, f| Some(acc * eval_approx(f, x)?)),
        Expr::Quotient(n, d) => {
            let d = eval_approx(d, x)?;
            let n = eval_approx(n, x)?;
            (d.abs() > 1e-9).then(|| n / d)
        }
        Expr::Power(b, k) => eval_approx(b, x).map(|v| v.powi(*k as i32)),
    }
}

struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    fn poly(p: Poly) -> RatFunc {
        RatFunc { num: p, den: Poly::constant(Rational::one()) }
    }

    fn reduced(num: Poly, den: Poly, bound: usize) -> Result<RatFunc, AlgebraError> {
        let g = num.gcd(&den);
        let (num, den) = if g.is_zero() || g.degree() == 0 {
            (num, den)
        } else {
            (num.divrem(&g).0, den.divrem(&g).0)
        };
        let k = den.lead().recip();
        let out = RatFunc { num: num.scale(k), den: den.scale(k) };
        if out.num.degree() > bound || out.den.degree() > bound {
            return Err(AlgebraError::Unsupported(format!("degree above {bound}")));
        }
        Ok(out)
    }

    fn add(&self, o: &RatFunc, bound: usize) -> Result<RatFunc, AlgebraError> {
        RatFunc::reduced(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den), bound)
    }

    fn sub(&self, o: &RatFunc, bound: usize) -> Result<RatFunc, AlgebraError> {
        RatFunc::reduced(self.num.mul(&o.den).sub(&o.num.mul(&self.den)), self.den.mul(&o.den), bound)
    }

    fn mul(&self, o: &RatFunc, bound: usize) -> Result<RatFunc, AlgebraError> {
        RatFunc::reduced(self.num.mul(&o.num), self.den.mul(&o.den), bound)
    }
}

fn ratfunc(e: &Expr, bound: usize, forbidden: &mut Vec<Poly>) -> Result<RatFunc, AlgebraError> {
    match e {
        Expr::Const(c) => Ok(RatFunc::poly(Poly::constant(*c))),
        Expr::Var(_) => Ok(RatFunc::poly(Poly::x())),
        Expr::Sum(ts) => {
            let mut acc = RatFunc::poly(Poly::zero());
            for t in ts {
                let v = ratfunc(&t.expr, bound, forbidden)?;
                acc = match t.sign {
                    Sign::Plus => acc.add(&v, bound)?,
                    Sign::Minus => acc.sub(&v, bound)?,
                };
            }
            Ok(acc)
        }
        Expr::Product(fs) => {
            let mut acc = RatFunc::poly(Poly::constant(Rational::one()));
            for f in fs {
                acc = acc.mul(&ratfunc(f, bound, forbidden)?, bound)?;
            }
            Ok(acc)
        }
        Expr::Quotient(n, d) => {
            let n = ratfunc(n, bound, forbidden)?;
            let d = ratfunc(d, bound, forbidden)?;
            if d.num.is_zero() {
                return Err(AlgebraError::DivisionByZero);
            }
            forbidden.push(d.num.clone());
            n.mul(&RatFunc { num: d.den, den: d.num }, bound)
        }
        Expr::Power(b, k) => {
            let b = ratfunc(b, bound, forbidden)?;
            if b.num.degree() * (*k as usize) > bound || b.den.degree() * (*k as usize) > bound {
                return Err(AlgebraError::Unsupported(format!("degree above {bound}")));
            }
            RatFunc::reduced(b.num.pow(*k), b.den.pow(*k), bound)
        }
    }
}

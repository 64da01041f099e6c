use num_traits::{One, Signed, Zero};

use super::dsl::{Action, Guard, Selector, SenseMode};
use crate::algebra::{eval_const, from_factors, side_terms, Expr, NodeRef, Rational, Relation, Side, Sign, Term};

/// A match site. `partner` is the first element of a pair selector.
#[derive(Debug, Clone)]
pub(super) struct Site {
    pub arg: NodeRef,
    pub partner: Option<NodeRef>,
}

const SIDES: [Side; 2] = [Side::Left, Side::Right];

pub(super) fn sites(rel: &Relation, selector: Selector) -> Vec<Site> {
    let mut out = Vec::new();
    let single = |arg: NodeRef| Site { arg, partner: None };
    match selector {
        Selector::SideTerm => {
            for side in SIDES {
                out.extend(rel.term_refs(side).into_iter().map(single));
            }
        }
        Selector::TermCoefficient => {
            for side in SIDES {
                for t in rel.term_refs(side) {
                    if let Some(Expr::Product(fs)) = rel.node(&t) {
                        if matches!(fs[0], Expr::Const(_)) && fs[1..].iter().any(Expr::contains_var) {
                            out.push(single(t.child(0)));
                        }
                    }
                }
            }
        }
        Selector::SideDivisor => {
            for side in SIDES {
                for t in rel.term_refs(side) {
                    if let Some(Expr::Quotient(..)) = rel.node(&t) {
                        out.push(single(t.child(1)));
                    }
                }
            }
        }
        Selector::ConstPair | Selector::LikePair => {
            for side in SIDES {
                let terms = rel.term_refs(side);
                for i in 0..terms.len() {
                    for j in i + 1..terms.len() {
                        let (a, b) = (rel.node(&terms[i]).unwrap(), rel.node(&terms[j]).unwrap());
                        let ok = if selector == Selector::ConstPair {
                            !a.contains_var() && !b.contains_var()
                        } else {
                            matches!((monomial(a), monomial(b)), (Some((_, ka)), Some((_, kb))) if ka == kb)
                        };
                        if ok {
                            out.push(Site { arg: terms[j].clone(), partner: Some(terms[i].clone()) });
                        }
                    }
                }
            }
        }
        Selector::ConstQuotient
        | Selector::ConstProduct
        | Selector::SquareOfSum
        | Selector::VarPower
        | Selector::ProductOverSum => {
            for side in SIDES {
                for path in rel.side(side).paths() {
                    let e = rel.side(side).at(&path).unwrap();
                    let hit = match (selector, e) {
                        (Selector::ConstQuotient, Expr::Quotient(n, d)) => {
                            matches!((&**n, &**d), (Expr::Const(_), Expr::Const(_)))
                        }
                        (Selector::ConstProduct, Expr::Product(fs)) => fs.iter().all(|f| matches!(f, Expr::Const(_))),
                        (Selector::SquareOfSum, Expr::Power(b, 2)) => matches!(&**b, Expr::Sum(ts) if ts.len() == 2),
                        (Selector::VarPower, Expr::Power(b, k)) => *k >= 2 && matches!(&**b, Expr::Var(_)),
                        (Selector::ProductOverSum, Expr::Product(fs)) => {
                            fs.len() == 2 && matches!(fs[0], Expr::Const(_)) && matches!(fs[1], Expr::Sum(_))
                        }
                        _ => false,
                    };
                    if hit {
                        out.push(single(NodeRef::new(side, path)));
                    }
                }
            }
        }
    }
    out
}

pub(super) fn guard_holds(rel: &Relation, site: &Site, guard: Guard) -> bool {
    let node = rel.node(&site.arg);
    match guard {
        Guard::Constant => node.is_some_and(|e| !e.contains_var()),
        Guard::Variable => node.is_some_and(Expr::contains_var),
        Guard::Negative => rel.is_negative_at(&site.arg),
        Guard::Positive => !rel.is_negative_at(&site.arg),
        Guard::Alone => rel.term_refs(site.arg.side).len() == 1,
        Guard::First => site.arg.path.first().copied().unwrap_or(0) == 0,
        Guard::Equation => rel.sense.is_equation(),
        Guard::Inequation => !rel.sense.is_equation(),
    }
}

/// `c * x^k` as (signed coefficient, degree); plain constants are excluded.
fn monomial(e: &Expr) -> Option<(Rational, u32)> {
    let power = |e: &Expr| match e {
        Expr::Var(_) => Some(1),
        Expr::Power(b, k) if matches!(&**b, Expr::Var(_)) && *k >= 1 => Some(*k),
        _ => None,
    };
    match e {
        Expr::Product(fs) if fs.len() == 2 => match &fs[0] {
            Expr::Const(c) => power(&fs[1]).map(|k| (*c, k)),
            _ => None,
        },
        e => power(e).map(|k| (Rational::one(), k)),
    }
}

fn signed_term(value: Rational, body: Option<Expr>) -> Term {
    let mag = value.abs();
    let expr = match body {
        None => Expr::Const(mag),
        Some(b) if mag.is_one() => b,
        Some(b) => Expr::Product(vec![Expr::Const(mag), b]),
    };
    if value.is_negative() {
        Term::minus(expr)
    } else {
        Term::plus(expr)
    }
}

fn term_at(rel: &Relation, t: &NodeRef) -> Term {
    match t.path.as_slice() {
        [] => Term::plus(rel.side(t.side).clone()),
        [i] => match rel.side(t.side) {
            Expr::Sum(ts) => ts[*i].clone(),
            _ => unreachable!("term path below a non-sum side"),
        },
        _ => unreachable!("term paths have length 0 or 1"),
    }
}

fn set_terms(rel: &mut Relation, side: Side, terms: Vec<Term>) {
    *rel.side_mut(side) = crate::algebra::from_terms(terms);
}

fn term_index(t: &NodeRef) -> usize {
    t.path.first().copied().unwrap_or(0)
}

/// Reference to term `i` of a side holding `n` terms.
fn term_ref(side: Side, i: usize, n: usize) -> NodeRef {
    if n == 1 {
        NodeRef::root(side)
    } else {
        NodeRef::new(side, vec![i])
    }
}

fn append(rel: &mut Relation, side: Side, t: Term) -> NodeRef {
    let mut terms = side_terms(rel.side(side));
    terms.push(t);
    let n = terms.len();
    set_terms(rel, side, terms);
    term_ref(side, n - 1, n)
}

fn remove(rel: &mut Relation, t: &NodeRef) -> Term {
    let mut terms = side_terms(rel.side(t.side));
    let removed = if t.path.is_empty() { terms.remove(0) } else { terms.remove(t.path[0]) };
    set_terms(rel, t.side, terms);
    removed
}

fn sense_after(rel: &Relation, mode: SenseMode, negative: bool) -> crate::algebra::Sense {
    match mode {
        SenseMode::Keep => rel.sense,
        SenseMode::Reverse => rel.sense.reversed(),
        SenseMode::Auto if negative => rel.sense.reversed(),
        SenseMode::Auto => rel.sense,
    }
}

/// Replace the node at `at` by a list of signed terms, splicing them into
/// the enclosing side sum when there is one.
fn replace_with_terms(rel: &mut Relation, at: &NodeRef, terms: Vec<Term>) -> NodeRef {
    let splice = at.path.is_empty() || (at.path.len() == 1 && matches!(rel.side(at.side), Expr::Sum(_)));
    if !splice {
        let e = crate::algebra::from_terms(terms);
        *rel.side_mut(at.side).at_mut(&at.path).unwrap() = e;
        return at.clone();
    }
    let mut all = side_terms(rel.side(at.side));
    let (idx, outer) = if at.path.is_empty() {
        all.clear();
        (0, Sign::Plus)
    } else {
        let i = at.path[0];
        (i, all.remove(i).sign)
    };
    for (k, t) in terms.into_iter().enumerate() {
        let sign = if outer.is_minus() { t.sign.flipped() } else { t.sign };
        all.insert(idx + k, Term { sign, expr: t.expr });
    }
    let n = all.len();
    set_terms(rel, at.side, all);
    term_ref(at.side, idx, n)
}

fn replace(rel: &mut Relation, at: &NodeRef, e: Expr) {
    *rel.side_mut(at.side).at_mut(&at.path).unwrap() = e;
}

pub(super) fn apply(state: &Relation, site: &Site, action: Action) -> Option<(Relation, NodeRef)> {
    let mut rel = state.clone();
    let arg = &site.arg;
    let side = arg.side;
    let other = side.other();
    match action {
        Action::Move { flip_sign, sense } => {
            let mut t = remove(&mut rel, arg);
            if flip_sign {
                t.sign = t.sign.flipped();
            }
            rel.sense = sense_after(state, sense, false);
            let out = append(&mut rel, other, t);
            Some((rel, out))
        }
        Action::Divide { sense, negate_divisor } => {
            let term = arg.parent()?;
            if !term.path.is_empty() {
                return None;
            }
            let Some(Expr::Product(fs)) = state.node(&term) else { return None };
            let c = *fs[0].as_const()?;
            if c.is_zero() {
                return None;
            }
            let divisor = if negate_divisor { -c } else { c };
            *rel.side_mut(side) = from_factors(fs[1..].to_vec());
            let rhs = rel.side(other).clone();
            *rel.side_mut(other) = Expr::quotient(rhs, Expr::Const(divisor));
            rel.sense = sense_after(state, sense, c.is_negative());
            Some((rel, NodeRef::new(other, vec![1])))
        }
        Action::DropCoefficient => {
            let term = arg.parent()?;
            let Some(Expr::Product(fs)) = state.node(&term) else { return None };
            let c = fs[0].as_const()?.abs();
            let negative = state.is_negative_at(arg);
            let rest = from_factors(fs[1..].to_vec());
            match term.path.as_slice() {
                [] => *rel.side_mut(side) = rest,
                [i] => {
                    if let Expr::Sum(ts) = rel.side_mut(side) {
                        ts[*i] = Term::plus(rest);
                    }
                }
                _ => return None,
            }
            let moved = signed_term(if negative { c } else { -c }, None);
            let out = append(&mut rel, other, moved);
            Some((rel, out))
        }
        Action::Multiply { sense } => {
            let term = arg.parent()?;
            if !term.path.is_empty() {
                return None;
            }
            let Some(Expr::Quotient(n, d)) = state.node(&term) else { return None };
            let negative = match d.as_const() {
                Some(c) if c.is_zero() => return None,
                Some(c) => c.is_negative(),
                None if state.sense.is_equation() || sense != SenseMode::Auto => false,
                None => return None,
            };
            *rel.side_mut(side) = (**n).clone();
            let rhs = rel.side(other).clone();
            *rel.side_mut(other) = Expr::Product(vec![rhs, (**d).clone()]);
            rel.sense = sense_after(state, sense, negative);
            Some((rel, NodeRef::new(other, vec![1])))
        }
        Action::DivideInstead => {
            let term = arg.parent()?;
            if !term.path.is_empty() {
                return None;
            }
            let Some(Expr::Quotient(n, d)) = state.node(&term) else { return None };
            *rel.side_mut(side) = (**n).clone();
            let rhs = rel.side(other).clone();
            *rel.side_mut(other) = Expr::quotient(rhs, (**d).clone());
            Some((rel, NodeRef::new(other, vec![1])))
        }
        Action::FoldFraction | Action::InvertFraction => {
            let Some(Expr::Quotient(n, d)) = state.node(arg) else { return None };
            let (n, d) = (*n.as_const()?, *d.as_const()?);
            let new = if action == Action::FoldFraction {
                if d.is_zero() {
                    return None;
                }
                Expr::Const(n / d)
            } else {
                if n.is_zero() {
                    return None;
                }
                Expr::quotient(Expr::Const(d), Expr::Const(n))
            };
            replace(&mut rel, arg, new);
            Some((rel, arg.clone()))
        }
        Action::Combine { ignore_second_sign } => {
            let first = site.partner.as_ref()?;
            let a = eval_const(&term_at(state, first).to_expr()).ok()?;
            let mut b = eval_const(&term_at(state, arg).to_expr()).ok()?;
            if ignore_second_sign {
                b = b.abs();
            }
            let out = combine_pair(&mut rel, first, arg, signed_term(a + b, None));
            Some((rel, out))
        }
        Action::MultiplyConstants => {
            let Some(Expr::Product(fs)) = state.node(arg) else { return None };
            let v = fs.iter().try_fold(Rational::one(), |acc, f| f.as_const().map(|c| acc * c))?;
            replace(&mut rel, arg, Expr::Const(v));
            Some((rel, arg.clone()))
        }
        Action::CombineLike { raise_power } => {
            let first = site.partner.as_ref()?;
            let (ta, tb) = (term_at(state, first), term_at(state, arg));
            let (ca, k) = monomial(&ta.expr)?;
            let (cb, _) = monomial(&tb.expr)?;
            let signed = |t: &Term, c: Rational| if t.sign.is_minus() { -c } else { c };
            let sum = signed(&ta, ca) + signed(&tb, cb);
            let var = state.variable()?;
            let k = if raise_power { 2 * k } else { k };
            let body = if k == 1 { Expr::Var(var) } else { Expr::power(Expr::Var(var), k) };
            let t = if sum.is_zero() { Term::plus(Expr::int(0)) } else { signed_term(sum, Some(body)) };
            let out = combine_pair(&mut rel, first, arg, t);
            Some((rel, out))
        }
        Action::ExpandSquare { keep_cross } => {
            let Some(Expr::Power(b, _)) = state.node(arg) else { return None };
            let Expr::Sum(ts) = &**b else { return None };
            let (a, c) = (&ts[0], &ts[1]);
            let mut terms = vec![Term::plus(Expr::power(a.expr.clone(), 2))];
            if keep_cross {
                let sign = if a.sign == c.sign { Sign::Plus } else { Sign::Minus };
                terms.push(Term { sign, expr: Expr::Product(vec![Expr::int(2), a.expr.clone(), c.expr.clone()]) });
            }
            terms.push(Term::plus(Expr::power(c.expr.clone(), 2)));
            let out = replace_with_terms(&mut rel, arg, terms);
            Some((rel, out))
        }
        Action::PowerToProduct => {
            let Some(Expr::Power(b, k)) = state.node(arg) else { return None };
            replace(&mut rel, arg, Expr::Product(vec![Expr::int(*k as i128), (**b).clone()]));
            Some((rel, arg.clone()))
        }
        Action::Distribute { first_only } => {
            let Some(Expr::Product(fs)) = state.node(arg) else { return None };
            let c = *fs[0].as_const()?;
            let Expr::Sum(ts) = &fs[1] else { return None };
            let terms = ts
                .iter()
                .enumerate()
                .map(|(i, t)| if i == 0 || !first_only { scale_term(t, c) } else { t.clone() })
                .collect();
            let out = replace_with_terms(&mut rel, arg, terms);
            Some((rel, out))
        }
    }
}

fn scale_term(t: &Term, c: Rational) -> Term {
    let signed = if t.sign.is_minus() { -c } else { c };
    match &t.expr {
        Expr::Const(k) => signed_term(signed * k, None),
        Expr::Product(fs) if matches!(fs[0], Expr::Const(_)) => {
            let k = *fs[0].as_const().unwrap();
            signed_term(signed * k, Some(from_factors(fs[1..].to_vec())))
        }
        e => signed_term(signed, Some(e.clone())),
    }
}

/// Replace the `first` term by `merged` and drop the `second` one.
fn combine_pair(rel: &mut Relation, first: &NodeRef, second: &NodeRef, merged: Term) -> NodeRef {
    let side = first.side;
    let mut terms = side_terms(rel.side(side));
    let (i, j) = (term_index(first), term_index(second));
    terms[i] = merged;
    terms.remove(j);
    let n = terms.len();
    set_terms(rel, side, terms);
    term_ref(side, i, n)
}

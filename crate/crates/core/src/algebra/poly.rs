//! Dense univariate polynomials with exact rational coefficients.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Poly(Vec<Rational>);

impl Poly {
    pub fn zero() -> Poly {
        Poly(Vec::new())
    }

    pub fn constant(c: Rational) -> Poly {
        Poly(vec![c]).trimmed()
    }

    pub fn x() -> Poly {
        Poly(vec![Rational::zero(), Rational::one()])
    }

    fn trimmed(mut self) -> Poly {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn lead(&self) -> Rational {
        self.0.last().copied().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let z = Rational::zero();
        Poly((0..n).map(|i| *self.0.get(i).unwrap_or(&z) + *o.0.get(i).unwrap_or(&z)).collect()).trimmed()
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: Rational) -> Poly {
        Poly(self.0.iter().map(|c| c * k).collect()).trimmed()
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trimmed()
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::constant(Rational::one()), |acc, _| acc.mul(self))
    }

    /// Euclidean division; `d` must be nonzero.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        let mut rem = self.clone();
        let mut quot = vec![Rational::zero(); self.0.len().saturating_sub(d.0.len()) + 1];
        let dl = d.lead();
        while !rem.is_zero() && rem.0.len() >= d.0.len() {
            let shift = rem.0.len() - d.0.len();
            let k = rem.lead() / dl;
            quot[shift] = k;
            for (i, c) in d.0.iter().enumerate() {
                rem.0[i + shift] -= c * k;
            }
            rem = rem.trimmed();
        }
        (Poly(quot).trimmed(), rem)
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(self.lead().recip())
    }

    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + to_f64(c))
    }

    fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(i as i128))
                .collect(),
        )
        .trimmed()
    }

    /// Real roots: exact where rational, floating point otherwise.
    pub fn real_roots(&self) -> Vec<Root> {
        let mut roots = Vec::new();
        if self.degree() == 0 {
            return roots;
        }
        let mut p = self.clone();
        // peel rational roots one at a time
        loop {
            if p.degree() == 0 {
                return roots;
            }
            match p.find_rational_root() {
                Some(r) => {
                    roots.push(Root::Exact(r));
                    let factor = Poly(vec![-r, Rational::one()]);
                    p = p.divrem(&factor).0;
                }
                None => break,
            }
        }
        roots.extend(p.float_roots().into_iter().map(Root::Approx));
        roots
    }

    fn find_rational_root(&self) -> Option<Rational> {
        if self.0[0].is_zero() {
            return Some(Rational::zero());
        }
        if self.degree() == 1 {
            return Some(-self.0[0] / self.0[1]);
        }
        let lcm = self.0.iter().fold(1i128, |acc, c| acc.lcm(c.denom()));
        let ints: Vec<i128> = self.0.iter().map(|c| (c * Rational::from_integer(lcm)).to_integer()).collect();
        let a0 = ints[0].abs();
        let an = ints.last().unwrap().abs();
        const LIMIT: i128 = 1_000_000_000_000;
        if a0 > LIMIT || an > LIMIT {
            return None;
        }
        let ps = divisors(a0);
        let qs = divisors(an);
        let mut cands: Vec<Rational> = Vec::new();
        for p in &ps {
            for q in &qs {
                let r = Rational::new(*p, *q);
                cands.push(r);
                cands.push(-r);
            }
        }
        cands.sort();
        cands.dedup();
        cands.into_iter().find(|r| self.eval(*r).is_zero())
    }

    /// Roots of a polynomial with no rational roots left (degree 2 or 3).
    fn float_roots(&self) -> Vec<f64> {
        let c: Vec<f64> = self.0.iter().map(to_f64).collect();
        match self.degree() {
            2 => {
                let (a, b, cc) = (c[2], c[1], c[0]);
                let disc = b * b - 4.0 * a * cc;
                if disc < 0.0 {
                    return Vec::new();
                }
                let s = disc.sqrt();
                let mut r = vec![(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)];
                r.sort_by(f64::total_cmp);
                r
            }
            _ => {
                // bracket between critical points, then bisect
                let bound = 1.0 + c.iter().rev().skip(1).map(|v| (v / c[c.len() - 1]).abs()).fold(0.0, f64::max);
                let mut marks = vec![-bound];
                let mut crit: Vec<f64> = self.derivative().float_roots_any();
                crit.sort_by(f64::total_cmp);
                marks.extend(crit.into_iter().filter(|v| v.abs() < bound));
                marks.push(bound);
                let mut out = Vec::new();
                for w in marks.windows(2) {
                    let (mut lo, mut hi) = (w[0], w[1]);
                    let (flo, fhi) = (self.eval_f64(lo), self.eval_f64(hi));
                    if flo == 0.0 {
                        out.push(lo);
                        continue;
                    }
                    if flo.signum() == fhi.signum() {
                        continue;
                    }
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if self.eval_f64(mid).signum() == flo.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    out.push(0.5 * (lo + hi));
                }
                out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                out
            }
        }
    }

    fn float_roots_any(&self) -> Vec<f64> {
        match self.degree() {
            0 => Vec::new(),
            1 => vec![to_f64(&(-self.0[0] / self.0[1]))],
            _ => self.float_roots(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Root {
    Exact(Rational),
    Approx(f64),
}

impl Root {
    pub fn value(&self) -> f64 {
        match self {
            Root::Exact(r) => to_f64(r),
            Root::Approx(v) => *v,
        }
    }
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

fn divisors(n: i128) -> Vec<i128> {
    if n == 0 {
        return vec![1];
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1i128;
    while i * i <= n {
        if n % i == 0 {
            small.push(i);
            if i * i != n {
                large.push(n / i);
            }
        }
        i += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

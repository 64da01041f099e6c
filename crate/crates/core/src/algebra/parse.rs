use thiserror::Error;

use super::{Expr, Rational, Relation, Sense, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("missing relation symbol")]
    MissingRelation,
    #[error("more than one relation symbol")]
    MultipleRelations,
    #[error("empty side")]
    EmptySide,
    #[error("more than one variable ({0} and {1})")]
    MultipleVariables(char, char),
    #[error("number too large")]
    NumberTooLarge,
    #[error("exponent must be a non-negative integer")]
    BadExponent,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(i128),
    Var(char),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Rel(Sense),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Var(v) => format!("variable {v}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Rel(s) => format!("relation {s}"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '0'..='9' => {
                let mut n: i128 = 0;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    let d = chars[i].to_digit(10).unwrap() as i128;
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d))
                        .ok_or(ParseError { position: start, kind: ParseErrorKind::NumberTooLarge })?;
                    i += 1;
                }
                out.push((start, Tok::Num(n)));
                continue;
            }
            c if c.is_ascii_alphabetic() => Tok::Var(c),
            '+' => Tok::Plus,
            '-' | '−' => Tok::Minus,
            '*' | '×' | '·' => Tok::Star,
            '/' | '÷' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '=' => Tok::Rel(Sense::Eq),
            '≤' => Tok::Rel(Sense::Le),
            '≥' => Tok::Rel(Sense::Ge),
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let s = match (c, eq) {
                    ('<', false) => Sense::Lt,
                    ('<', true) => Sense::Le,
                    ('>', false) => Sense::Gt,
                    _ => Sense::Ge,
                };
                i += if eq { 2 } else { 1 };
                out.push((start, Tok::Rel(s)));
                continue;
            }
            other => {
                return Err(ParseError { position: start, kind: ParseErrorKind::UnexpectedChar(other) })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    var: Option<char>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { position: self.offset(), kind }
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::UnexpectedToken(t.describe())),
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    // side := ['+'|'-'] term (('+'|'-') term)*
    fn side(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), None | Some(Tok::Rel(_)) | Some(Tok::RParen)) {
            return Err(self.err(ParseErrorKind::EmptySide));
        }
        let leading = match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                true
            }
            Some(Tok::Plus) => {
                self.bump();
                false
            }
            _ => false,
        };
        let first = self.term()?;
        let first = if leading { first.negated() } else { first };
        let mut terms = vec![Term::plus(first)];
        loop {
            let sign = match self.peek() {
                Some(Tok::Plus) => super::Sign::Plus,
                Some(Tok::Minus) => super::Sign::Minus,
                _ => break,
            };
            self.bump();
            let expr = self.term()?;
            terms.push(Term { sign, expr });
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap().expr } else { Expr::Sum(terms) })
    }

    // term := power (('*' | '/' | implicit) power)*
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.power()?];
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    factors.push(self.power()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let den = self.power()?;
                    let num = super::from_factors(std::mem::take(&mut factors));
                    factors.push(Expr::quotient(num, den));
                }
                Some(Tok::Var(_)) | Some(Tok::LParen) => factors.push(self.power()?),
                _ => break,
            }
        }
        Ok(super::from_factors(factors))
    }

    // power := atom ['^' integer]
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            match self.bump() {
                Some(Tok::Num(n)) if n <= u32::MAX as i128 => return Ok(Expr::power(base, n as u32)),
                _ => {
                    self.pos -= 1;
                    return Err(self.err(ParseErrorKind::BadExponent));
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.bump();
                Ok(Expr::Const(Rational::from_integer(n)))
            }
            Some(Tok::Var(v)) => {
                if let Some(prev) = self.var {
                    if prev != v {
                        return Err(self.err(ParseErrorKind::MultipleVariables(prev, v)));
                    }
                }
                self.var = Some(v);
                self.bump();
                Ok(Expr::Var(v))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.side()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        Err(self.unexpected())
                    }
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parse text such as `"7x-4=3"` or `"-4x<2"` into a [`Relation`].
pub fn parse_relation(text: &str) -> Result<Relation, ParseError> {
    let toks = lex(text)?;
    let rels: Vec<usize> = toks
        .iter()
        .filter(|(_, t)| matches!(t, Tok::Rel(_)))
        .map(|(p, _)| *p)
        .collect();
    match rels.len() {
        0 => {
            return Err(ParseError { position: text.chars().count(), kind: ParseErrorKind::MissingRelation })
        }
        1 => {}
        _ => return Err(ParseError { position: rels[1], kind: ParseErrorKind::MultipleRelations }),
    }
    let mut p = Parser { toks, pos: 0, end: text.chars().count(), var: None };
    let lhs = p.side()?;
    let sense = match p.bump() {
        Some(Tok::Rel(s)) => s,
        _ => {
            p.pos -= 1;
            return Err(p.unexpected());
        }
    };
    let rhs = p.side()?;
    if p.peek().is_some() {
        return Err(p.unexpected());
    }
    Ok(Relation { lhs, rhs, sense })
}

/// Parse a single expression (no relation symbol).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if let Some((p, _)) = toks.iter().find(|(_, t)| matches!(t, Tok::Rel(_))) {
        return Err(ParseError { position: *p, kind: ParseErrorKind::UnexpectedToken("relation".into()) });
    }
    let mut p = Parser { toks, pos: 0, end: text.chars().count(), var: None };
    let e = p.side()?;
    if p.peek().is_some() {
        return Err(p.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Sign;

    fn x() -> Expr {
        Expr::Var('x')
    }

    #[test]
    fn negative_coefficient_inequation() {
        let r = parse_relation("-4x < 2").unwrap();
        assert_eq!(r.lhs, Expr::Product(vec![Expr::int(-4), x()]));
        assert_eq!(r.rhs, Expr::int(2));
        assert_eq!(r.sense, Sense::Lt);
    }

    #[test]
    fn linear_equation() {
        let r = parse_relation("7x-4=3").unwrap();
        assert_eq!(
            r.lhs,
            Expr::Sum(vec![
                Term::plus(Expr::Product(vec![Expr::int(7), x()])),
                Term { sign: Sign::Minus, expr: Expr::int(4) },
            ])
        );
        assert_eq!(r.rhs, Expr::int(3));
        assert_eq!(r.sense, Sense::Eq);
    }

    #[test]
    fn lone_variable_side() {
        let r = parse_relation("x=0").unwrap();
        assert_eq!(r.lhs, x());
    }

    #[test]
    fn quotient_with_negative_denominator() {
        let r = parse_relation("x<2/(-4)").unwrap();
        assert_eq!(r.rhs, Expr::quotient(Expr::int(2), Expr::int(-4)));
    }

    #[test]
    fn precedence_and_implicit_multiplication() {
        let e = parse_expr("9x^2-10").unwrap();
        assert_eq!(
            e,
            Expr::Sum(vec![
                Term::plus(Expr::Product(vec![Expr::int(9), Expr::power(x(), 2)])),
                Term::minus(Expr::int(10)),
            ])
        );
        let e = parse_expr("3(x+1)").unwrap();
        assert!(matches!(e, Expr::Product(ref fs) if fs.len() == 2));
        let e = parse_expr("1/2x").unwrap();
        assert_eq!(e, Expr::Product(vec![Expr::quotient(Expr::int(1), Expr::int(2)), x()]));
    }

    #[test]
    fn relation_symbols() {
        assert_eq!(parse_relation("x<=1").unwrap().sense, Sense::Le);
        assert_eq!(parse_relation("x ≥ 1").unwrap().sense, Sense::Ge);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_relation("x+=1").unwrap_err();
        assert_eq!(e.position, 2);
        let e = parse_relation("x=1=2").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MultipleRelations);
        assert_eq!(e.position, 3);
        let e = parse_relation("=2").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::EmptySide);
        let e = parse_relation("x+1").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingRelation);
        let e = parse_relation("x=y").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MultipleVariables('x', 'y'));
        let e = parse_relation("x=2$").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('$'));
        let e = parse_relation("(x+1=2").unwrap_err();
        assert_eq!(e.position, 4);
    }
}

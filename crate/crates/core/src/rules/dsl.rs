//! Parser for the `match` and `action` strings of a rule file.
//!
//! Both use the same call syntax: `name` or `name(item, item, ...)`. In a
//! match, items are guard names, optionally prefixed with `!`. In an
//! action, items are `key=value` parameters.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("malformed call syntax in `{0}`")]
    Syntax(String),
    #[error("unknown selector `{0}`")]
    UnknownSelector(String),
    #[error("unknown guard `{0}`")]
    UnknownGuard(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("bad parameter `{key}={value}` for action `{action}`")]
    BadParam { action: String, key: String, value: String },
    #[error("action `{action}` cannot be used with selector `{selector}`")]
    Incompatible { action: String, selector: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// A signed top-level term of either side.
    SideTerm,
    /// The constant leading factor of a top-level product term.
    TermCoefficient,
    /// The denominator of a top-level quotient term.
    SideDivisor,
    /// A quotient of two constants, anywhere.
    ConstQuotient,
    /// Two constant terms of one side; the second is the argument.
    ConstPair,
    /// Two monomials of equal degree on one side; the second is the argument.
    LikePair,
    /// A product of constants, anywhere.
    ConstProduct,
    /// `(a+b)^2`, anywhere.
    SquareOfSum,
    /// `x^n` with `n >= 2`, anywhere.
    VarPower,
    /// `c(a+b+...)` with a constant `c`, anywhere.
    ProductOverSum,
}

impl Selector {
    fn from_name(s: &str) -> Option<Selector> {
        Some(match s {
            "side_term" => Selector::SideTerm,
            "term_coefficient" => Selector::TermCoefficient,
            "side_divisor" => Selector::SideDivisor,
            "const_quotient" => Selector::ConstQuotient,
            "const_pair" => Selector::ConstPair,
            "like_pair" => Selector::LikePair,
            "const_product" => Selector::ConstProduct,
            "square_of_sum" => Selector::SquareOfSum,
            "var_power" => Selector::VarPower,
            "product_over_sum" => Selector::ProductOverSum,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Selector::SideTerm => "side_term",
            Selector::TermCoefficient => "term_coefficient",
            Selector::SideDivisor => "side_divisor",
            Selector::ConstQuotient => "const_quotient",
            Selector::ConstPair => "const_pair",
            Selector::LikePair => "like_pair",
            Selector::ConstProduct => "const_product",
            Selector::SquareOfSum => "square_of_sum",
            Selector::VarPower => "var_power",
            Selector::ProductOverSum => "product_over_sum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    Constant,
    Variable,
    Negative,
    Positive,
    Alone,
    First,
    Equation,
    Inequation,
}

impl Guard {
    fn from_name(s: &str) -> Option<Guard> {
        Some(match s {
            "constant" => Guard::Constant,
            "variable" => Guard::Variable,
            "negative" => Guard::Negative,
            "positive" => Guard::Positive,
            "alone" => Guard::Alone,
            "first" => Guard::First,
            "equation" => Guard::Equation,
            "inequation" => Guard::Inequation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub selector: Selector,
    /// Guards with their polarity; `false` means the guard is negated.
    pub guards: Vec<(bool, Guard)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenseMode {
    Keep,
    Reverse,
    /// Reverse exactly when the factor involved is negative.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Move { flip_sign: bool, sense: SenseMode },
    Divide { sense: SenseMode, negate_divisor: bool },
    DropCoefficient,
    Multiply { sense: SenseMode },
    DivideInstead,
    FoldFraction,
    InvertFraction,
    Combine { ignore_second_sign: bool },
    MultiplyConstants,
    CombineLike { raise_power: bool },
    ExpandSquare { keep_cross: bool },
    PowerToProduct,
    Distribute { first_only: bool },
}

impl Action {
    /// The selector an action expects to be paired with.
    fn selectors(&self) -> &'static [Selector] {
        use Selector::*;
        match self {
            Action::Move { .. } => &[SideTerm],
            Action::Divide { .. } | Action::DropCoefficient => &[TermCoefficient],
            Action::Multiply { .. } | Action::DivideInstead => &[SideDivisor],
            Action::FoldFraction | Action::InvertFraction => &[ConstQuotient],
            Action::Combine { .. } => &[ConstPair],
            Action::MultiplyConstants => &[ConstProduct],
            Action::CombineLike { .. } => &[LikePair],
            Action::ExpandSquare { .. } => &[SquareOfSum],
            Action::PowerToProduct => &[VarPower],
            Action::Distribute { .. } => &[ProductOverSum],
        }
    }
}

fn split_call(src: &str) -> Result<(String, Vec<String>), DslError> {
    let src = src.trim();
    let err = || DslError::Syntax(src.to_string());
    let Some(open) = src.find('(') else {
        if src.is_empty() || !src.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err());
        }
        return Ok((src.to_string(), Vec::new()));
    };
    if !src.ends_with(')') {
        return Err(err());
    }
    let name = src[..open].trim().to_string();
    let inner = &src[open + 1..src.len() - 1];
    if inner.contains(['(', ')']) {
        return Err(err());
    }
    let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    Ok((name, items))
}

pub fn parse_pattern(src: &str) -> Result<Pattern, DslError> {
    let (name, items) = split_call(src)?;
    let selector = Selector::from_name(&name).ok_or(DslError::UnknownSelector(name))?;
    let mut guards = Vec::new();
    for item in items {
        let (positive, g) = match item.strip_prefix('!') {
            Some(rest) => (false, rest.trim()),
            None => (true, item.as_str()),
        };
        let guard = Guard::from_name(g).ok_or_else(|| DslError::UnknownGuard(g.to_string()))?;
        guards.push((positive, guard));
    }
    Ok(Pattern { selector, guards })
}

pub fn parse_action(src: &str, selector: Selector) -> Result<Action, DslError> {
    let (name, items) = split_call(src)?;
    let mut params = Vec::new();
    for item in &items {
        let (k, v) = item.split_once('=').ok_or_else(|| DslError::Syntax(src.to_string()))?;
        params.push((k.trim().to_string(), v.trim().to_string()));
    }
    let bad = |k: &str, v: &str| DslError::BadParam { action: name.clone(), key: k.to_string(), value: v.to_string() };
    let get = |key: &str, default: &str, allowed: &[&str]| -> Result<String, DslError> {
        let mut out = default.to_string();
        for (k, v) in &params {
            if k == key {
                if !allowed.contains(&v.as_str()) {
                    return Err(bad(k, v));
                }
                out = v.clone();
            }
        }
        Ok(out)
    };
    let known: &[&str] = match name.as_str() {
        "move" => &["sign", "sense"],
        "divide" => &["sense", "divisor"],
        "multiply" => &["sense"],
        "combine" => &["second"],
        "combine_like" => &["power"],
        "expand_square" => &["cross"],
        "distribute" => &["scope"],
        _ => &[],
    };
    if let Some((k, v)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(bad(k, v));
    }
    let sense = |default: &str| -> Result<SenseMode, DslError> {
        Ok(match get("sense", default, &["keep", "reverse", "auto"])?.as_str() {
            "keep" => SenseMode::Keep,
            "reverse" => SenseMode::Reverse,
            _ => SenseMode::Auto,
        })
    };
    let action = match name.as_str() {
        "move" => Action::Move {
            flip_sign: get("sign", "flip", &["flip", "keep"])? == "flip",
            sense: sense("keep")?,
        },
        "divide" => Action::Divide {
            sense: sense("auto")?,
            negate_divisor: get("divisor", "same", &["same", "negated"])? == "negated",
        },
        "drop_coefficient" => Action::DropCoefficient,
        "multiply" => Action::Multiply { sense: sense("auto")? },
        "divide_instead" => Action::DivideInstead,
        "fold_fraction" => Action::FoldFraction,
        "invert_fraction" => Action::InvertFraction,
        "combine" => Action::Combine {
            ignore_second_sign: get("second", "respect", &["respect", "ignore"])? == "ignore",
        },
        "multiply_constants" => Action::MultiplyConstants,
        "combine_like" => Action::CombineLike { raise_power: get("power", "keep", &["keep", "raise"])? == "raise" },
        "expand_square" => Action::ExpandSquare { keep_cross: get("cross", "keep", &["keep", "drop"])? == "keep" },
        "power_to_product" => Action::PowerToProduct,
        "distribute" => Action::Distribute { first_only: get("scope", "all", &["all", "first"])? == "first" },
        _ => return Err(DslError::UnknownAction(name)),
    };
    if !action.selectors().contains(&selector) {
        return Err(DslError::Incompatible { action: name, selector: selector.name().to_string() });
    }
    Ok(action)
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

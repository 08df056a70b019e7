use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use super::expansion::{CFExpansion, CfTail};
use super::rational::Rational;
use super::surd::{Exact, QuadraticIrrational};
use super::CfError;

impl fmt::Display for CFExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.a0())?;
        let mut items: Vec<String> = self.partials().iter().map(|a| a.to_string()).collect();
        if let CfTail::EventuallyPeriodic { period, .. } = self.tail() {
            let p: Vec<String> = period.iter().map(|a| a.to_string()).collect();
            items.push(format!("({})", p.join(",")));
        }
        if !items.is_empty() {
            write!(f, ";{}", items.join(","))?;
        }
        write!(f, "]")
    }
}

fn parse_int(s: &str) -> Result<BigInt, CfError> {
    s.trim().parse().map_err(|_| CfError::Parse(format!("bad integer {s:?}")))
}

impl FromStr for CFExpansion {
    type Err = CfError;

    /// Accepts `[a0]`, `[a0;a1,a2]` and `[a0;a1,(p1,p2)]`.
    fn from_str(s: &str) -> Result<Self, CfError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let s = compact.as_str();
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| CfError::Parse(format!("expected [a0;...]: {s:?}")))?;
        let (head, rest) = match inner.split_once(';') {
            Some((h, r)) => (h, Some(r)),
            None => (inner, None),
        };
        let a0 = parse_int(head)?;
        let Some(rest) = rest else {
            return CFExpansion::finite(a0, Vec::new());
        };
        let (pre, period) = match rest.find('(') {
            Some(i) => {
                let body = rest[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| CfError::Parse(format!("unclosed period in {s:?}")))?;
                (&rest[..i], Some(body))
            }
            None => (rest, None),
        };
        let pre: Vec<BigInt> =
            pre.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_int).collect::<Result<_, _>>()?;
        match period {
            None => CFExpansion::finite(a0, pre),
            Some(p) => {
                let per: Vec<BigInt> = p.split(',').map(parse_int).collect::<Result<_, _>>()?;
                CFExpansion::periodic(a0, pre, per)
            }
        }
    }
}

impl FromStr for QuadraticIrrational {
    type Err = CfError;

    /// Parses `(a+b*sqrt(d))/c`, also without the `/c` part.
    fn from_str(s: &str) -> Result<Self, CfError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || CfError::Parse(format!("expected (a+b*sqrt(d))/c: {s:?}"));
        let (body, c) = match t.rsplit_once(")/") {
            Some((b, c)) => (b.strip_prefix('(').ok_or_else(bad)?, parse_int(c)?),
            None => (t.strip_prefix('(').and_then(|b| b.strip_suffix(')')).unwrap_or(&t), BigInt::from(1)),
        };
        let at = body.find("*sqrt(").ok_or_else(bad)?;
        let d = parse_int(body[at + 6..].strip_suffix(')').ok_or_else(bad)?)?;
        let lin = &body[..at];
        // split a and b at the last sign that is not leading
        let split = lin.char_indices().skip(1).filter(|(_, ch)| *ch == '+' || *ch == '-').map(|(i, _)| i).last();
        let (a, b) = match split {
            Some(i) => (parse_int(&lin[..i])?, parse_int(lin[i..].trim_start_matches('+'))?),
            None => (BigInt::from(0), parse_int(lin.trim_start_matches('+'))?),
        };
        QuadraticIrrational::new(a, b, c, d)
    }
}

/// Parses any exact value: a continued fraction, a surd or a rational.
pub fn parse_exact(s: &str) -> Result<Exact, CfError> {
    let t = s.trim();
    if t.starts_with('[') {
        Ok(t.parse::<CFExpansion>()?.value())
    } else if t.contains("sqrt") {
        Ok(Exact::Quadratic(t.parse()?))
    } else {
        Ok(Exact::Rational(t.parse::<Rational>()?))
    }
}

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::CfError;

/// Exact rational, always in lowest terms with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: BigInt, den: BigInt) -> Result<Self, CfError> {
        if den.is_zero() {
            return Err(CfError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num, den)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn from_i64s(num: i64, den: i64) -> Result<Self, CfError> {
        Self::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn num(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn den(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn from_inner(r: BigRational) -> Self {
        Rational(r)
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn floor(&self) -> BigInt {
        self.num().div_floor(self.den())
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(self.num(), self.den())
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn signum(&self) -> Ordering {
        self.0.numer().sign().cmp(&num_bigint::Sign::NoSign)
    }

    pub fn recip(&self) -> Result<Self, CfError> {
        if self.0.is_zero() {
            return Err(CfError::ZeroDenominator);
        }
        Ok(Rational(self.0.recip()))
    }
}

impl std::ops::Add for &Rational {
    type Output = Rational;
    fn add(self, o: &Rational) -> Rational {
        Rational(&self.0 + &o.0)
    }
}

impl std::ops::Sub for &Rational {
    type Output = Rational;
    fn sub(self, o: &Rational) -> Rational {
        Rational(&self.0 - &o.0)
    }
}

impl std::ops::Mul for &Rational {
    type Output = Rational;
    fn mul(self, o: &Rational) -> Rational {
        Rational(&self.0 * &o.0)
    }
}

impl std::ops::Div for &Rational {
    type Output = Rational;
    fn div(self, o: &Rational) -> Rational {
        Rational(&self.0 / &o.0)
    }
}

impl std::ops::Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den().is_one() {
            write!(f, "{}", self.num())
        } else {
            write!(f, "{}/{}", self.num(), self.den())
        }
    }
}

impl FromStr for Rational {
    type Err = CfError;
    fn from_str(s: &str) -> Result<Self, CfError> {
        let s = s.trim();
        let bad = || CfError::Parse(format!("not a rational: {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                Rational::new(n, d)
            }
            None => Ok(Rational::from_integer(s.parse::<BigInt>().map_err(|_| bad())?)),
        }
    }
}

/// Splits a big integer into an f64 mantissa and a binary exponent so that
/// huge values do not overflow on conversion.
pub(crate) fn split_f64(x: &BigInt) -> (f64, i64) {
    use num_traits::ToPrimitive;
    let bits = x.bits() as i64;
    if bits <= 900 {
        (x.to_f64().unwrap_or(0.0), 0)
    } else {
        let shift = bits - 80;
        ((x >> (shift as usize)).to_f64().unwrap_or(0.0), shift)
    }
}

pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 900 {
        x *= 2f64.powi(900);
        e -= 900;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -900 {
        x *= 2f64.powi(-900);
        e += 900;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

pub(crate) fn ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    let (mn, en) = split_f64(n);
    let (md, ed) = split_f64(d);
    ldexp(mn / md, en - ed)
}

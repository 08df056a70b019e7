//! Parameter handles: exact values where available, plain floats otherwise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::cf::{cf_of_exact, parse_exact, CfError, Exact, RationalForm};
use crate::series::C64;

#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Exact(Exact),
    Real(f64),
}

impl Param {
    pub fn to_f64(&self) -> f64 {
        match self {
            Param::Exact(x) => x.to_f64(),
            Param::Real(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Exact> {
        match self {
            Param::Exact(x) => Some(x),
            Param::Real(_) => None,
        }
    }

    /// `n*alpha - round(n*alpha)`, exact before rounding to a float when possible.
    pub fn frac_times(&self, n: u64) -> f64 {
        match self {
            Param::Exact(x) => x.frac_times(&BigInt::from(n)),
            Param::Real(x) => {
                let y = *x * n as f64;
                y - y.round()
            }
        }
    }

    /// `exp(2 pi i n alpha)`.
    pub fn multiplier_pow(&self, n: u64) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * self.frac_times(n))
    }

    pub fn multiplier(&self) -> C64 {
        self.multiplier_pow(1)
    }

    /// `rho^n - rho` written as `rho * 2i sin(pi t) e^{i pi t}` with `t = (n-1) alpha mod 1`,
    /// which keeps full relative accuracy near resonances.
    pub fn small_divisor(&self, n: u64) -> C64 {
        let t = self.frac_times(n.saturating_sub(1));
        let half = C64::from_polar(1.0, PI * t);
        self.multiplier() * C64::new(0.0, 2.0 * (PI * t).sin()) * half
    }

    /// Exact resonance `rho^n = rho`: the denominator of a rational parameter divides `n - 1`.
    pub fn is_resonant(&self, n: u64) -> bool {
        if n < 2 {
            return false;
        }
        match self {
            Param::Exact(Exact::Rational(r)) => (BigInt::from(n - 1)).is_multiple_of(r.den()),
            Param::Exact(Exact::Quadratic(_)) => false,
            Param::Real(x) => {
                let y = *x * (n - 1) as f64;
                y == y.round()
            }
        }
    }

    /// Denominator for rational handles.
    pub fn denominator(&self) -> Option<BigInt> {
        match self {
            Param::Exact(Exact::Rational(r)) => Some(r.den().clone()),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        match self {
            Param::Exact(x) => x.is_rational(),
            Param::Real(x) => x.fract() == 0.0 && x.is_finite(),
        }
    }

    /// Exact text: CF notation for quadratic irrationals, `p/q` for rationals, a float otherwise.
    pub fn text(&self) -> String {
        match self {
            Param::Exact(x @ Exact::Quadratic(_)) => cf_of_exact(x, RationalForm::Short).to_string(),
            Param::Exact(x) => x.to_string(),
            Param::Real(x) => format!("{x:?}"),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

impl FromStr for Param {
    type Err = CfError;

    fn from_str(s: &str) -> Result<Self, CfError> {
        match parse_exact(s) {
            Ok(x) => Ok(Param::Exact(x)),
            Err(e) => s.trim().parse::<f64>().map(Param::Real).map_err(|_| e),
        }
    }
}

impl From<Exact> for Param {
    fn from(x: Exact) -> Self {
        Param::Exact(x)
    }
}

impl From<f64> for Param {
    fn from(x: f64) -> Self {
        Param::Real(x)
    }
}

/// `p/q` as a parameter handle.
pub fn rational_param(p: i64, q: i64) -> Param {
    Param::Exact(Exact::Rational(crate::cf::Rational::from_i64s(p, q).expect("nonzero denominator")))
}

/// `q | (n-1)` for `n > 1`: the exact resonance predicate for `alpha = p/q` in lowest terms.
pub fn resonant_index(q: &BigInt, n: u64) -> bool {
    n > 1 && (q.is_one() || (BigInt::from(n - 1) % q).is_zero())
}

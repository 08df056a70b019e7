use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::rational::Rational;
use super::surd::{Exact, QuadraticIrrational, Surd};
use super::CfError;

/// Which of the two expansions of a rational to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RationalForm {
    /// Ends in a partial quotient `>= 2`, or is a bare integer `[a0]`.
    Short,
    /// Ends in `..., a_s - 1, 1`.
    Long,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CfTail {
    Finite,
    EventuallyPeriodic { preperiod: Vec<BigInt>, period: Vec<BigInt> },
}

/// `[a0; a1, a2, ...]`. All `a_i` with `i >= 1` are positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CFExpansion {
    a0: BigInt,
    partials: Vec<BigInt>,
    tail: CfTail,
}

impl CFExpansion {
    pub fn finite(a0: BigInt, partials: Vec<BigInt>) -> Result<Self, CfError> {
        Self::new(a0, partials, CfTail::Finite)
    }

    pub fn periodic(a0: BigInt, partials: Vec<BigInt>, period: Vec<BigInt>) -> Result<Self, CfError> {
        Self::new(a0, partials, CfTail::EventuallyPeriodic { preperiod: Vec::new(), period })
    }

    pub fn new(a0: BigInt, partials: Vec<BigInt>, tail: CfTail) -> Result<Self, CfError> {
        let bad = |v: &BigInt| !v.is_positive();
        if partials.iter().any(bad) {
            return Err(CfError::InvalidExpansion("partial quotients must be positive".into()));
        }
        // fold the preperiod into the prefix so equal numbers compare equal
        let (partials, tail) = match tail {
            CfTail::Finite => (partials, CfTail::Finite),
            CfTail::EventuallyPeriodic { preperiod, period } => {
                if period.is_empty() {
                    return Err(CfError::InvalidExpansion("empty period".into()));
                }
                if preperiod.iter().chain(period.iter()).any(bad) {
                    return Err(CfError::InvalidExpansion("partial quotients must be positive".into()));
                }
                let mut p = partials;
                p.extend(preperiod);
                canonical_periodic(p, period)
            }
        };
        Ok(CFExpansion { a0, partials, tail })
    }

    /// Same expansion, built from small integers.
    pub fn from_i64(a0: i64, partials: &[i64], period: &[i64]) -> Result<Self, CfError> {
        let conv = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        if period.is_empty() {
            Self::finite(a0.into(), conv(partials))
        } else {
            Self::periodic(a0.into(), conv(partials), conv(period))
        }
    }

    /// `[1; 1, 1, ...]`.
    pub fn golden() -> Self {
        Self::from_i64(1, &[], &[1]).unwrap()
    }

    pub fn a0(&self) -> &BigInt {
        &self.a0
    }

    pub fn partials(&self) -> &[BigInt] {
        &self.partials
    }

    pub fn tail(&self) -> &CfTail {
        &self.tail
    }

    pub fn period(&self) -> Option<&[BigInt]> {
        match &self.tail {
            CfTail::Finite => None,
            CfTail::EventuallyPeriodic { period, .. } => Some(period),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.tail, CfTail::Finite)
    }

    /// Index of the last partial quotient of a finite expansion.
    pub fn last_index(&self) -> Option<usize> {
        self.is_rational().then_some(self.partials.len())
    }

    /// `a_i`, unrolling the period as needed. `None` past the end of a finite expansion.
    pub fn term(&self, i: usize) -> Option<BigInt> {
        if i == 0 {
            return Some(self.a0.clone());
        }
        let j = i - 1;
        if j < self.partials.len() {
            return Some(self.partials[j].clone());
        }
        match &self.tail {
            CfTail::Finite => None,
            CfTail::EventuallyPeriodic { period, .. } => {
                Some(period[(j - self.partials.len()) % period.len()].clone())
            }
        }
    }

    /// `[a_0, ..., a_n]`, or an error if the expansion is shorter.
    pub fn prefix(&self, n: usize) -> Result<Vec<BigInt>, CfError> {
        (0..=n).map(|i| self.term(i).ok_or(CfError::TooShort { wanted: n, have: self.partials.len() })).collect()
    }

    /// All terms of a finite expansion.
    pub fn terms(&self) -> Option<Vec<BigInt>> {
        self.last_index().map(|n| self.prefix(n).unwrap())
    }

    /// Exact value.
    pub fn value(&self) -> Exact {
        match &self.tail {
            CfTail::Finite => {
                let terms = self.terms().unwrap();
                let (p, q) = super::convergents::convergent_pair(&terms);
                Exact::Rational(Rational::new(p.0, q.0).unwrap())
            }
            CfTail::EventuallyPeriodic { period, .. } => {
                let y = purely_periodic_value(period);
                let mut prefix = vec![self.a0.clone()];
                prefix.extend(self.partials.iter().cloned());
                super::convergents::eval_cf_exact(&prefix, &Exact::Quadratic(y)).unwrap()
            }
        }
    }

    /// Appends the expansion of `x >= 1` after the last term of a finite prefix `terms`.
    pub fn concat(terms: &[BigInt], x: &CFExpansion) -> Result<Self, CfError> {
        let (a0, rest) = terms.split_first().ok_or(CfError::InvalidExpansion("empty prefix".into()))?;
        let mut partials: Vec<BigInt> = rest.to_vec();
        partials.push(x.a0.clone());
        partials.extend(x.partials.iter().cloned());
        let tail = match &x.tail {
            CfTail::Finite => CfTail::Finite,
            CfTail::EventuallyPeriodic { period, .. } => {
                CfTail::EventuallyPeriodic { preperiod: Vec::new(), period: period.clone() }
            }
        };
        Self::new(a0.clone(), partials, tail)
    }
}

/// Moves repeated trailing copies of the period out of the prefix and
/// reduces the period to its primitive root.
fn canonical_periodic(mut partials: Vec<BigInt>, mut period: Vec<BigInt>) -> (Vec<BigInt>, CfTail) {
    let n = period.len();
    for d in 1..=n {
        if n % d == 0 && (0..n).all(|i| period[i] == period[i % d]) {
            period.truncate(d);
            break;
        }
    }
    while let Some(last) = partials.last() {
        if *last == period[period.len() - 1] {
            partials.pop();
            period.rotate_right(1);
        } else {
            break;
        }
    }
    (partials, CfTail::EventuallyPeriodic { preperiod: Vec::new(), period })
}

/// Positive root of `y = [period; y]`.
fn purely_periodic_value(period: &[BigInt]) -> QuadraticIrrational {
    let (p, q) = super::convergents::convergent_pair(period);
    let (pn, pm) = p;
    let (qn, qm) = q;
    // y = (pn y + pm)/(qn y + qm)  =>  qn y^2 + (qm - pn) y - pm = 0
    let b = &qm - &pn;
    let disc = &b * &b + BigInt::from(4) * &qn * &pm;
    QuadraticIrrational::new(-b, BigInt::one(), BigInt::from(2) * qn, disc).expect("periodic value is irrational")
}

/// Euclidean expansion of a rational in the requested form.
pub fn cf_of_rational(r: &Rational, form: RationalForm) -> CFExpansion {
    let mut num = r.num().clone();
    let mut den = r.den().clone();
    let mut terms = Vec::new();
    loop {
        let (a, rem) = num.div_mod_floor(&den);
        terms.push(a);
        if rem.is_zero() {
            break;
        }
        num = den;
        den = rem;
    }
    if form == RationalForm::Long {
        let last = terms.pop().unwrap();
        terms.push(last - 1);
        terms.push(BigInt::one());
    }
    let a0 = terms.remove(0);
    CFExpansion { a0, partials: terms, tail: CfTail::Finite }
}

/// Periodic expansion of a quadratic irrational (Lagrange).
pub fn cf_of_quadratic_irrational(x: &QuadraticIrrational) -> CFExpansion {
    // bring x to (P + sqrt D)/Q with Q | D - P^2
    let s: &Surd = &x.0;
    let (a, b, c) = if s.b.is_negative() {
        (-&s.a, -&s.b, -&s.c)
    } else {
        (s.a.clone(), s.b.clone(), s.c.clone())
    };
    let mut p = &a * c.abs();
    let dd = &b * &b * &s.d * &c * &c;
    let mut q = &c * c.abs();
    let root = dd.sqrt();
    let floor_state = |p: &BigInt, q: &BigInt| -> BigInt {
        // floor((p + sqrt D)/q), sqrt D strictly between root and root+1
        if q.is_positive() {
            (p + &root).div_floor(q)
        } else {
            (-p - &root - BigInt::one()).div_floor(&-q)
        }
    };
    let mut terms: Vec<BigInt> = Vec::new();
    let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    loop {
        let i = terms.len();
        if i >= 1 {
            if let Some(&j) = seen.get(&(p.clone(), q.clone())) {
                let period = terms[j..].to_vec();
                let partials = terms[1..j].to_vec();
                let a0 = terms[0].clone();
                let (partials, tail) = canonical_periodic(partials, period);
                return CFExpansion { a0, partials, tail };
            }
            seen.insert((p.clone(), q.clone()), i);
        }
        let ai = floor_state(&p, &q);
        let np = &ai * &q - &p;
        let nq = (&dd - &np * &np) / &q;
        terms.push(ai);
        p = np;
        q = nq;
    }
}

/// First `n + 1` partial quotients of any exact value.
pub fn cf_prefix_of(x: &Exact, n: usize) -> Vec<BigInt> {
    match x {
        Exact::Rational(r) => {
            let cf = cf_of_rational(r, RationalForm::Short);
            let last = cf.last_index().unwrap().min(n);
            cf.prefix(last).unwrap()
        }
        Exact::Quadratic(q) => cf_of_quadratic_irrational(q).prefix(n).unwrap(),
    }
}

/// Expansion of an exact value; rationals use `form`.
pub fn cf_of_exact(x: &Exact, form: RationalForm) -> CFExpansion {
    match x {
        Exact::Rational(r) => cf_of_rational(r, form),
        Exact::Quadratic(q) => cf_of_quadratic_irrational(q),
    }
}

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::rational::{ldexp, split_f64, Rational};
use super::CfError;

/// `(a + b*sqrt(d))/c` in Q(sqrt d). `b` may vanish, in which case `d` is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Surd {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

/// Splits `d = k^2 * s` with `s` squarefree. Trial division runs up to 10^6,
/// which settles every radicand below 10^12 exactly.
pub(crate) fn squarefree_split(d: &BigInt) -> (BigInt, BigInt) {
    let mut k = BigInt::one();
    let mut s = d.clone();
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(1_000_000u32);
    while &p * &p <= s && p <= limit {
        let p2 = &p * &p;
        while (&s % &p2).is_zero() {
            s /= &p2;
            k *= &p;
        }
        p += 1u32;
    }
    let r = s.sqrt();
    if &r * &r == s {
        k *= r;
        s = BigInt::one();
    }
    (k, s)
}

fn floor_div(a: &BigInt, c: &BigInt) -> BigInt {
    a.div_floor(c)
}

/// Sign of `A + B sqrt(d)` for squarefree `d > 1` (or `B = 0`).
pub(crate) fn sign2(a: &BigInt, b: &BigInt, d: &BigInt) -> Ordering {
    let sa = a.sign();
    let sb = b.sign();
    if sb == Sign::NoSign {
        return sign_of(sa);
    }
    if sa == Sign::NoSign || sa == sb {
        return sign_of(sb);
    }
    let lhs = a * a;
    let rhs = b * b * d;
    if lhs > rhs {
        sign_of(sa)
    } else {
        sign_of(sb)
    }
}

/// Sign of `A + B sqrt(d1) + C sqrt(d2)` with distinct squarefree radicands.
pub(crate) fn sign3(a: &BigInt, b: &BigInt, d1: &BigInt, c: &BigInt, d2: &BigInt) -> Ordering {
    let s1 = sign2(a, b, d1);
    let s2 = sign_of(c.sign());
    if s1 == Ordering::Equal {
        return s2;
    }
    if s2 == Ordering::Equal || s1 == s2 {
        return s1;
    }
    // compare |A + B sqrt d1| with |C sqrt d2| through their squares
    let t = sign2(&(a * a + b * b * d1 - c * c * d2), &(BigInt::from(2) * a * b), d1);
    match t {
        Ordering::Less => s2,
        _ => s1,
    }
}

fn sign_of(s: Sign) -> Ordering {
    match s {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

impl Surd {
    pub fn rational(r: &Rational) -> Self {
        Surd { a: r.num().clone(), b: BigInt::zero(), c: r.den().clone(), d: BigInt::one() }
    }

    pub fn integer(n: BigInt) -> Self {
        Surd { a: n, b: BigInt::zero(), c: BigInt::one(), d: BigInt::one() }
    }

    /// Builds and normalizes; `d` must be positive.
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self, CfError> {
        if c.is_zero() {
            return Err(CfError::ZeroDenominator);
        }
        if !d.is_positive() {
            return Err(CfError::NotIrrational(format!("radicand {d} must be positive")));
        }
        let (k, s) = squarefree_split(&d);
        let mut out = Surd { a, b: b * k, c, d: s };
        out.normalize();
        Ok(out)
    }

    fn normalize(&mut self) {
        if self.d.is_one() {
            self.a = &self.a + &self.b;
            self.b = BigInt::zero();
        }
        if self.b.is_zero() {
            self.d = BigInt::one();
        }
        if self.c.is_negative() {
            self.a = -&self.a;
            self.b = -&self.b;
            self.c = -&self.c;
        }
        let g = self.a.gcd(&self.b).gcd(&self.c);
        if !g.is_zero() && !g.is_one() {
            self.a /= &g;
            self.b /= &g;
            self.c /= &g;
        }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn field(&self, o: &Surd) -> Result<BigInt, CfError> {
        match (self.is_rational(), o.is_rational()) {
            (true, true) => Ok(BigInt::one()),
            (false, true) => Ok(self.d.clone()),
            (true, false) => Ok(o.d.clone()),
            (false, false) if self.d == o.d => Ok(self.d.clone()),
            _ => Err(CfError::FieldMismatch(self.d.clone(), o.d.clone())),
        }
    }

    pub fn add(&self, o: &Surd) -> Result<Surd, CfError> {
        let d = self.field(o)?;
        let mut s = Surd {
            a: &self.a * &o.c + &o.a * &self.c,
            b: &self.b * &o.c + &o.b * &self.c,
            c: &self.c * &o.c,
            d,
        };
        s.normalize();
        Ok(s)
    }

    pub fn neg(&self) -> Surd {
        Surd { a: -&self.a, b: -&self.b, c: self.c.clone(), d: self.d.clone() }
    }

    pub fn sub(&self, o: &Surd) -> Result<Surd, CfError> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Surd) -> Result<Surd, CfError> {
        let d = self.field(o)?;
        let mut s = Surd {
            a: &self.a * &o.a + &self.b * &o.b * &d,
            b: &self.a * &o.b + &self.b * &o.a,
            c: &self.c * &o.c,
            d,
        };
        s.normalize();
        Ok(s)
    }

    pub fn recip(&self) -> Result<Surd, CfError> {
        // c/(a + b sqrt d) = c (a - b sqrt d)/(a^2 - b^2 d)
        let den = &self.a * &self.a - &self.b * &self.b * &self.d;
        if den.is_zero() {
            return Err(CfError::ZeroDenominator);
        }
        let mut s = Surd {
            a: &self.c * &self.a,
            b: -(&self.c * &self.b),
            c: den,
            d: self.d.clone(),
        };
        s.normalize();
        Ok(s)
    }

    pub fn div(&self, o: &Surd) -> Result<Surd, CfError> {
        self.mul(&o.recip()?)
    }

    pub fn scale(&self, n: &BigInt) -> Surd {
        let mut s = Surd { a: &self.a * n, b: &self.b * n, c: self.c.clone(), d: self.d.clone() };
        s.normalize();
        s
    }

    pub fn add_int(&self, n: &BigInt) -> Surd {
        let mut s = Surd { a: &self.a + n * &self.c, b: self.b.clone(), c: self.c.clone(), d: self.d.clone() };
        s.normalize();
        s
    }

    pub fn signum(&self) -> Ordering {
        sign2(&self.a, &self.b, &self.d)
    }

    pub fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return floor_div(&self.a, &self.c);
        }
        let s = (&self.b * &self.b * &self.d).sqrt();
        // b sqrt d lies strictly inside (s, s+1) or (-s-1, -s)
        let low = if self.b.is_positive() { s } else { -s - 1 };
        floor_div(&(&self.a + low), &self.c)
    }

    /// Nearest integer, ties rounded up.
    pub fn round(&self) -> BigInt {
        let two = BigInt::from(2);
        let doubled = Surd { a: &self.a * &two + &self.c, b: &self.b * &two, c: &self.c * &two, d: self.d.clone() };
        doubled.floor()
    }

    pub fn to_f64(&self) -> f64 {
        if self.b.is_zero() {
            return super::rational::ratio_to_f64(&self.a, &self.c);
        }
        let df = self.d.to_f64().unwrap_or(f64::INFINITY).sqrt();
        let (mc, ec) = split_f64(&self.c);
        if self.a.is_zero() || self.a.sign() == self.b.sign() {
            let shift = self.a.bits().max(self.b.bits()) as i64 - 900;
            let (ma, mb, e) = if shift > 0 {
                let sh = shift as usize;
                ((&self.a >> sh).to_f64().unwrap(), (&self.b >> sh).to_f64().unwrap(), shift)
            } else {
                (self.a.to_f64().unwrap(), self.b.to_f64().unwrap(), 0)
            };
            return ldexp((ma + mb * df) / mc, e - ec);
        }
        // cancellation: use (a^2 - b^2 d) / (c (a - b sqrt d))
        let n = &self.a * &self.a - &self.b * &self.b * &self.d;
        let (mn, en) = split_f64(&n);
        let shift = self.a.bits().max(self.b.bits()) as i64 - 900;
        let (ma, mb, e) = if shift > 0 {
            let sh = shift as usize;
            ((&self.a >> sh).to_f64().unwrap(), (&self.b >> sh).to_f64().unwrap(), shift)
        } else {
            (self.a.to_f64().unwrap(), self.b.to_f64().unwrap(), 0)
        };
        let t = ma - mb * df;
        ldexp(mn / (mc * t), en - ec - e)
    }

    /// Rational enclosure `[lo, hi]` of the value using `sqrt(d)` to `bits` bits.
    pub fn enclose(&self, bits: u32) -> (Rational, Rational) {
        if self.b.is_zero() {
            let r = Rational::new(self.a.clone(), self.c.clone()).unwrap();
            return (r.clone(), r);
        }
        let (slo, shi) = sqrt_bounds(&self.d, bits);
        let x1 = &(&Rational::from_integer(self.b.clone()) * &slo);
        let x2 = &(&Rational::from_integer(self.b.clone()) * &shi);
        let (blo, bhi) = if x1 <= x2 { (x1.clone(), x2.clone()) } else { (x2.clone(), x1.clone()) };
        let a = Rational::from_integer(self.a.clone());
        let c = Rational::from_integer(self.c.clone());
        (&(&a + &blo) / &c, &(&a + &bhi) / &c)
    }
}

/// `s/2^k <= sqrt(d) <= (s+1)/2^k`.
pub(crate) fn sqrt_bounds(d: &BigInt, bits: u32) -> (Rational, Rational) {
    let scale = BigInt::one() << (2 * bits as usize);
    let s = (d * &scale).sqrt();
    let den = BigInt::one() << bits as usize;
    let lo = Rational::new(s.clone(), den.clone()).unwrap();
    let hi = if &s * &s == d * &scale { lo.clone() } else { Rational::new(s + 1, den).unwrap() };
    (lo, hi)
}

/// Canonical quadratic irrational `(a + b*sqrt(d))/c`: `c > 0`, `b != 0`,
/// `d > 1` squarefree, `gcd(a, b, c) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticIrrational(pub(crate) Surd);

impl QuadraticIrrational {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self, CfError> {
        let s = Surd::new(a, b, c, d)?;
        if s.is_rational() {
            return Err(CfError::NotIrrational("value is rational".into()));
        }
        Ok(QuadraticIrrational(s))
    }

    pub fn from_i64s(a: i64, b: i64, c: i64, d: i64) -> Result<Self, CfError> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    /// The golden mean `(1 + sqrt 5)/2`.
    pub fn golden() -> Self {
        Self::from_i64s(1, 1, 2, 5).unwrap()
    }

    /// `1 + sqrt 2`, the default tail of the special sequences.
    pub fn silver() -> Self {
        Self::from_i64s(1, 1, 1, 2).unwrap()
    }

    pub fn a(&self) -> &BigInt {
        &self.0.a
    }
    pub fn b(&self) -> &BigInt {
        &self.0.b
    }
    pub fn c(&self) -> &BigInt {
        &self.0.c
    }
    pub fn d(&self) -> &BigInt {
        &self.0.d
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
}

impl fmt::Display for QuadraticIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.0;
        let sign = if s.b.is_negative() { '-' } else { '+' };
        write!(f, "({}{}{}*sqrt({}))/{}", s.a, sign, s.b.abs(), s.d, s.c)
    }
}

/// An exactly representable real: rational or quadratic irrational.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Exact {
    Rational(Rational),
    Quadratic(QuadraticIrrational),
}

impl Exact {
    pub(crate) fn from_surd(s: Surd) -> Exact {
        if s.is_rational() {
            Exact::Rational(Rational::new(s.a, s.c).unwrap())
        } else {
            Exact::Quadratic(QuadraticIrrational(s))
        }
    }

    pub(crate) fn to_surd(&self) -> Surd {
        match self {
            Exact::Rational(r) => Surd::rational(r),
            Exact::Quadratic(q) => q.0.clone(),
        }
    }

    pub fn integer(n: impl Into<BigInt>) -> Exact {
        Exact::Rational(Rational::from_integer(n))
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Exact::Rational(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exact::Rational(r) => r.to_f64(),
            Exact::Quadratic(q) => q.to_f64(),
        }
    }

    pub fn floor(&self) -> BigInt {
        match self {
            Exact::Rational(r) => r.floor(),
            Exact::Quadratic(q) => q.floor(),
        }
    }

    pub fn add(&self, o: &Exact) -> Result<Exact, CfError> {
        Ok(Exact::from_surd(self.to_surd().add(&o.to_surd())?))
    }
    pub fn sub(&self, o: &Exact) -> Result<Exact, CfError> {
        Ok(Exact::from_surd(self.to_surd().sub(&o.to_surd())?))
    }
    pub fn mul(&self, o: &Exact) -> Result<Exact, CfError> {
        Ok(Exact::from_surd(self.to_surd().mul(&o.to_surd())?))
    }
    pub fn div(&self, o: &Exact) -> Result<Exact, CfError> {
        Ok(Exact::from_surd(self.to_surd().div(&o.to_surd())?))
    }
    pub fn neg(&self) -> Exact {
        Exact::from_surd(self.to_surd().neg())
    }
    pub fn add_int(&self, n: &BigInt) -> Exact {
        Exact::from_surd(self.to_surd().add_int(n))
    }
    pub fn scale(&self, n: &BigInt) -> Exact {
        Exact::from_surd(self.to_surd().scale(n))
    }

    /// `n*x - round(n*x)` as a float in `[-1/2, 1/2)`, with full relative
    /// accuracy even when it is tiny.
    pub fn frac_times(&self, n: &BigInt) -> f64 {
        let s = self.to_surd().scale(n);
        let r = s.round();
        s.add_int(&-r).to_f64()
    }

    pub fn signum(&self) -> Ordering {
        self.to_surd().signum()
    }

    /// Exact comparison, also across different quadratic fields.
    pub fn cmp_exact(&self, o: &Exact) -> Ordering {
        let x = self.to_surd();
        let y = o.to_surd();
        if let Ok(diff) = x.sub(&y) {
            return diff.signum();
        }
        let a = &x.a * &y.c - &y.a * &x.c;
        let b = &x.b * &y.c;
        let c = -(&y.b * &x.c);
        sign3(&a, &b, &x.d, &c, &y.d)
    }

    /// Rational enclosure `[lo, hi]` of the value using `sqrt(d)` to `bits` bits.
    pub fn enclose(&self, bits: u32) -> (Rational, Rational) {
        self.to_surd().enclose(bits)
    }

    /// Rational enclosure of `|self - o|`, refined until its relative width is below `2^-rel_bits`.
    pub fn gap_enclosure(&self, o: &Exact, rel_bits: u32) -> (Rational, Rational) {
        let x = self.to_surd();
        let y = o.to_surd();
        let mut bits = 64u32;
        loop {
            let (xl, xh) = x.enclose(bits);
            let (yl, yh) = y.enclose(bits);
            let lo = &xl - &yh;
            let hi = &xh - &yl;
            // |x - y| lies in the absolute image of [lo, hi]
            let zero = Rational::from_integer(0);
            let (alo, ahi) = if lo >= zero {
                (lo, hi)
            } else if hi <= zero {
                (hi.abs(), lo.abs())
            } else {
                (zero.clone(), if lo.abs() > hi { lo.abs() } else { hi })
            };
            let width = &ahi - &alo;
            let tol = &alo * &Rational::new(BigInt::one(), BigInt::one() << rel_bits as usize).unwrap();
            if alo > zero && width <= tol {
                return (alo, ahi);
            }
            if x == y {
                return (zero.clone(), zero);
            }
            if bits > 1 << 16 {
                return (alo, ahi);
            }
            bits *= 2;
        }
    }
}

impl From<Rational> for Exact {
    fn from(r: Rational) -> Self {
        Exact::Rational(r)
    }
}

impl From<QuadraticIrrational> for Exact {
    fn from(q: QuadraticIrrational) -> Self {
        Exact::Quadratic(q)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exact::Rational(r) => r.fmt(f),
            Exact::Quadratic(q) => q.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64, c: i64, d: i64) -> QuadraticIrrational {
        QuadraticIrrational::from_i64s(a, b, c, d).unwrap()
    }

    #[test]
    fn canonical_form() {
        // (2 + 2 sqrt 8)/(-4) = (-1 - 2 sqrt 2)/2 after reduction
        let x = q(2, 2, -4, 8);
        assert_eq!((x.a(), x.b(), x.c(), x.d()), (&(-1).into(), &(-2).into(), &2.into(), &2.into()));
        assert!(QuadraticIrrational::from_i64s(1, 1, 1, 9).is_err());
        assert!(QuadraticIrrational::from_i64s(1, 0, 1, 2).is_err());
    }

    #[test]
    fn floor_matches_float() {
        for (a, b, c, d) in [(1, 1, 2, 5), (-7, 3, 5, 2), (3, -2, 7, 11), (-1, -1, 1, 3)] {
            let x = q(a, b, c, d);
            assert_eq!(x.floor().to_f64().unwrap(), x.to_f64().floor());
        }
    }

    #[test]
    fn cancellation_accuracy() {
        // 13 * golden - 21 is tiny; compare with the conjugate formula by hand
        let g = Exact::from(QuadraticIrrational::golden());
        let beta = g.scale(&13.into()).add_int(&(-21).into());
        let expect = 13.0 * 1.618_033_988_749_895 - 21.0;
        assert!((beta.to_f64() - expect).abs() < 1e-14);
        let deep = g.scale(&BigInt::from(1_134_903_170u64)).add_int(&BigInt::from(-1_836_311_903i64));
        let v = deep.to_f64();
        // |q_n phi - p_n| ~ 1/(sqrt5 q_n)
        assert!((v.abs() * 1_134_903_170.0 * 5f64.sqrt() - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn mixed_field_comparison() {
        let s2 = Exact::from(q(0, 1, 1, 2));
        let s3 = Exact::from(q(0, 1, 1, 3));
        assert_eq!(s2.cmp_exact(&s3), Ordering::Less);
        // 1 + sqrt 2 vs sqrt 3 + 1/2
        let lhs = Exact::from(q(1, 1, 1, 2));
        let rhs = Exact::from(q(1, 2, 2, 3));
        assert_eq!(lhs.cmp_exact(&rhs), (1.0 + 2f64.sqrt()).partial_cmp(&(0.5 + 3f64.sqrt())).unwrap());
    }

    #[test]
    fn field_ops() {
        let g = Surd::new(1.into(), 1.into(), 2.into(), 5.into()).unwrap();
        // g^2 = g + 1
        let lhs = g.mul(&g).unwrap();
        let rhs = g.add_int(&1.into());
        assert_eq!(lhs, rhs);
        let inv = g.recip().unwrap();
        assert_eq!(inv, g.add_int(&(-1).into()));
    }

    #[test]
    fn gap_enclosure_brackets() {
        let a = Exact::from(QuadraticIrrational::golden());
        let b = Exact::Rational(Rational::from_i64s(8, 5).unwrap());
        let (lo, hi) = a.gap_enclosure(&b, 30);
        let v = (1.618_033_988_749_895f64 - 1.6).abs();
        assert!(lo.to_f64() <= v + 1e-15 && hi.to_f64() >= v - 1e-15);
    }
}

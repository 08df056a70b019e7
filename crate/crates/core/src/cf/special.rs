use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::One;

use super::convergents::eval_cf_exact;
use super::expansion::{cf_of_exact, CFExpansion, RationalForm};
use super::rational::Rational;
use super::surd::{Exact, QuadraticIrrational};
use super::CfError;

/// One element of a special sequence, with its exact value and expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecialTerm {
    pub index: usize,
    pub value: Exact,
    pub cf: CFExpansion,
}

/// Default tail `1 + sqrt 2` appended after the modified prefix.
pub fn default_tail() -> Exact {
    Exact::Quadratic(QuadraticIrrational::silver())
}

fn shifted(x: &CFExpansion, n: &BigInt) -> CFExpansion {
    CFExpansion::new(x.a0() + n, x.partials().to_vec(), x.tail().clone()).unwrap()
}

/// Approximants of `alpha` through values sharing a long prefix with it.
///
/// Irrational `alpha`: `[a_0; ..., a_n, 1 + a_{n+1}, tail]`.
/// Rational `alpha = [a_0; ..., a_k]` (in the form it was expanded in):
/// `[a_0; ..., a_k, n + tail]`.
pub fn special_sequence_main(alpha: &CFExpansion, n: usize, tail: &Exact) -> Result<SpecialTerm, CfError> {
    if tail.cmp_exact(&Exact::integer(1)) != Ordering::Greater {
        return Err(CfError::InvalidTail(tail.to_string()));
    }
    let tail_cf = cf_of_exact(tail, RationalForm::Short);
    let (prefix, x, x_cf) = if alpha.is_rational() {
        let terms = alpha.terms().unwrap();
        let nb = BigInt::from(n);
        (terms, tail.add_int(&nb), shifted(&tail_cf, &nb))
    } else {
        let mut prefix = alpha.prefix(n)?;
        prefix.push(alpha.term(n + 1).unwrap() + BigInt::one());
        (prefix, tail.clone(), tail_cf)
    };
    let value = eval_cf_exact(&prefix, &x)?;
    let cf = CFExpansion::concat(&prefix, &x_cf)?;
    Ok(SpecialTerm { index: n, value, cf })
}

/// `[a_0; ..., a_n, 1 + a_{n+1}, 1, 1, 1, ...]` for irrational `alpha`.
pub fn theta_sequence(alpha: &CFExpansion, n: usize) -> Result<SpecialTerm, CfError> {
    if alpha.is_rational() {
        return Err(CfError::NotIrrational("theta sequence needs an infinite expansion".into()));
    }
    let mut prefix = alpha.prefix(n)?;
    prefix.push(alpha.term(n + 1).unwrap() + BigInt::one());
    let golden = Exact::Quadratic(QuadraticIrrational::golden());
    let value = eval_cf_exact(&prefix, &golden)?;
    let cf = CFExpansion::concat(&prefix, &CFExpansion::golden())?;
    Ok(SpecialTerm { index: n, value, cf })
}

/// Exact side of `beta` relative to `alpha` with a rational enclosure of `|beta - alpha|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideGap {
    /// Ordering of `beta` against `alpha`.
    pub side: Ordering,
    pub gap_lower: Rational,
    pub gap_upper: Rational,
}

pub fn side_and_gap(alpha: &Exact, beta: &Exact) -> SideGap {
    let side = beta.cmp_exact(alpha);
    let (gap_lower, gap_upper) = if side == Ordering::Equal {
        (Rational::from_integer(0), Rational::from_integer(0))
    } else {
        beta.gap_enclosure(alpha, 20)
    };
    SideGap { side, gap_lower, gap_upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::expansion::cf_of_rational;

    #[test]
    fn rational_zero_both_forms() {
        let z = Rational::from_integer(0);
        let t = default_tail();
        for n in 0..5usize {
            let short = special_sequence_main(&cf_of_rational(&z, RationalForm::Short), n, &t).unwrap();
            // 1/(n + 1 + sqrt 2)
            let expect = 1.0 / (n as f64 + 1.0 + 2f64.sqrt());
            assert!((short.value.to_f64() - expect).abs() < 1e-15);
            let long = special_sequence_main(&cf_of_rational(&z, RationalForm::Long), n, &t).unwrap();
            let expect = -1.0 / (n as f64 + 2.0 + 2f64.sqrt());
            assert!((long.value.to_f64() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn irrational_alternates() {
        let g = CFExpansion::golden();
        let alpha = g.value();
        for n in 0..12usize {
            let s = special_sequence_main(&g, n, &default_tail()).unwrap();
            let want = if n % 2 == 0 { Ordering::Less } else { Ordering::Greater };
            assert_eq!(s.value.cmp_exact(&alpha), want, "n = {n}");
            assert_eq!(s.cf.value(), s.value);
        }
    }

    #[test]
    fn theta_terms() {
        // sqrt 2 - 1 = [0; 2, 2, ...]; n = 1 gives [0; 2, 3, 1, 1, ...]
        let a = CFExpansion::from_i64(0, &[], &[2]).unwrap();
        let t = theta_sequence(&a, 1).unwrap();
        assert_eq!(t.cf, CFExpansion::from_i64(0, &[2, 3], &[1]).unwrap());
        let alpha = a.value();
        for n in 0..10usize {
            let t = theta_sequence(&a, n).unwrap();
            let want = if n % 2 == 0 { Ordering::Less } else { Ordering::Greater };
            assert_eq!(t.value.cmp_exact(&alpha), want);
        }
    }

    #[test]
    fn tail_must_exceed_one() {
        let g = CFExpansion::golden();
        assert!(special_sequence_main(&g, 0, &Exact::integer(1)).is_err());
    }

    #[test]
    fn gap_of_equal_values() {
        let g = Exact::Quadratic(QuadraticIrrational::golden());
        let sg = side_and_gap(&g, &g);
        assert_eq!(sg.side, Ordering::Equal);
    }
}

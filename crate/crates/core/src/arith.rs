//! Brjuno sums, bounded type, and the explicit constants `C`, `C'`, `C''`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::{CFExpansion, CfTail};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArithError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// Partial Brjuno sum `sum log(q_{n+1})/q_n` with its tail certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrjunoValue {
    /// Partial sum, or `+inf` for rationals.
    pub value: f64,
    pub depth_used: usize,
    /// Rigorous bound on the omitted tail, `+inf` when none is available.
    pub tail_bound: f64,
    pub converged: bool,
}

/// `ln x` for a positive big integer without overflow.
pub fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

fn big_f64(a: &BigInt) -> f64 {
    crate::cf::Rational::from_integer(a.clone()).to_f64()
}

/// Brjuno sum of an expansion; rationals give `+inf`.
pub fn brjuno_sum(alpha: &CFExpansion, depth: usize, tol: f64) -> BrjunoValue {
    let (pre_len, period) = match alpha.tail() {
        CfTail::Finite => {
            return BrjunoValue {
                value: f64::INFINITY,
                depth_used: alpha.partials().len(),
                tail_bound: f64::INFINITY,
                converged: false,
            }
        }
        CfTail::EventuallyPeriodic { period, .. } => (alpha.partials().len(), period.clone()),
    };
    let max_a = alpha.partials().iter().chain(period.iter()).max().cloned().unwrap_or_else(BigInt::one);
    let min_period = period.iter().min().cloned().unwrap();
    let log_a1 = big_ln(&(max_a + 1u32));
    // growth sums for q_{N+j} >= q_N m^j (m >= 2) or q_N 2^{floor(j/2)}
    let m = min_period.to_f64().unwrap_or(f64::INFINITY);
    let (s0, s1) = if m >= 2.0 { (m / (m - 1.0), (m / (m - 1.0)).powi(2)) } else { (4.0, 14.0) };

    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut sum = 0.0;
    let mut tail = f64::INFINITY;
    let mut n = 0;
    while n < depth {
        // q = q_n, next = q_{n+1}
        let a = alpha.term(n + 1).unwrap();
        let next = &a * &q + &q_prev;
        sum += big_ln(&next) / big_f64(&q);
        q_prev = std::mem::replace(&mut q, next);
        n += 1;
        if n > pre_len {
            let lq = big_ln(&q);
            tail = (lq * s0 + log_a1 * s1) / big_f64(&q);
            if tail < tol {
                break;
            }
        }
    }
    BrjunoValue { value: sum, depth_used: n, tail_bound: tail, converged: tail < tol }
}

/// Partial sums over a finite prefix regarded as the start of an irrational
/// expansion; no tail certificate exists, so `converged` is false.
pub fn brjuno_partial_sums(partials: &[BigInt]) -> Vec<f64> {
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(partials.len());
    for a in partials {
        let next = a * &q + &q_prev;
        sum += big_ln(&next) / big_f64(&q);
        out.push(sum);
        q_prev = std::mem::replace(&mut q, next);
    }
    out
}

/// True iff every partial quotient `a_i, i >= 1` (period included) is at most `bound`.
pub fn is_bounded_type(alpha: &CFExpansion, bound: &BigInt) -> bool {
    let period: &[BigInt] = alpha.period().unwrap_or(&[]);
    alpha.partials().iter().chain(period.iter()).all(|a| a <= bound)
}

/// Largest partial quotient of an eventually periodic or finite expansion.
pub fn partial_quotient_sup(alpha: &CFExpansion) -> BigInt {
    let period: &[BigInt] = alpha.period().unwrap_or(&[]);
    alpha.partials().iter().chain(period.iter()).max().cloned().unwrap_or_else(BigInt::zero)
}

/// The universal constants, all positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "C_sqrt2")]
    pub c_sqrt2: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C1_glue")]
    pub c1_glue: f64,
    /// `B(M) = B_slope (1 + M)`.
    #[serde(rename = "B_slope")]
    pub b_slope: f64,
}

impl Default for ConstantConfig {
    fn default() -> Self {
        let c3 = 1.0;
        // smallest values for which the C/C'' relation and the C' upper bound hold for all K, q >= 1
        let c1 = 3f64.ln() + 2.0 * PI * c3;
        let c2 = c1 + (256.0f64 / 3.0).ln();
        ConstantConfig { c1, c2, c3, c0: 1.0, d: 2.0, c_sqrt2: 1.0, a: 2.0, c1_glue: 1.0, b_slope: 2.0 }
    }
}

impl ConstantConfig {
    pub fn validate(&self) -> Result<(), ArithError> {
        let all = [self.c1, self.c2, self.c3, self.c0, self.d, self.c_sqrt2, self.a, self.c1_glue, self.b_slope];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ArithError::Domain("all constants must be positive and finite".into()));
        }
        if self.d <= 1.0 || self.a <= 1.0 {
            return Err(ArithError::Domain("D and A must exceed 1".into()));
        }
        Ok(())
    }

    pub fn b_of_m(&self, m: f64) -> f64 {
        self.b_slope * (1.0 + m.max(0.0))
    }

    /// `2 pi C''(2K+1, q) <= C(K, q)` for all `K, q >= 1` iff `c1 >= ln 3 + 2 pi c3`.
    pub fn relation_holds(&self) -> bool {
        self.c1 >= 3f64.ln() + 2.0 * PI * self.c3 - 1e-12
    }

    /// `C'(K,q) <= (4 ln q + ln K + c2)/q` for all `K, q >= 1` iff `c2 >= c1 + ln(256/3)`.
    pub fn cprime_bound_holds(&self) -> bool {
        self.c2 >= self.c1 + (256.0f64 / 3.0).ln() - 1e-12
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ArithError> {
        let slot = match key {
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "c3" => &mut self.c3,
            "C0" => &mut self.c0,
            "D" => &mut self.d,
            "C_sqrt2" => &mut self.c_sqrt2,
            "A" => &mut self.a,
            "C1_glue" => &mut self.c1_glue,
            "B_slope" => &mut self.b_slope,
            _ => return Err(ArithError::Domain(format!("unknown constant {key:?}"))),
        };
        *slot = value;
        Ok(())
    }
}

fn check_domain(k: f64, q: u64) -> Result<(), ArithError> {
    if !(k >= 1.0) || q < 1 {
        return Err(ArithError::Domain(format!("need K >= 1 and q >= 1, got K = {k}, q = {q}")));
    }
    Ok(())
}

/// `C(K,q) = (ln q + ln K + c1)/q`.
pub fn const_c(k: f64, q: u64, cfg: &ConstantConfig) -> Result<f64, ArithError> {
    check_domain(k, q)?;
    let qf = q as f64;
    Ok((qf.ln() + k.ln() + cfg.c1) / qf)
}

/// The objective `-ln(1-eps) + C(9K/eps^3, q)` minimized by `C'`.
pub fn cprime_objective(eps: f64, k: f64, q: u64, cfg: &ConstantConfig) -> f64 {
    let qf = q as f64;
    -(-eps).ln_1p() + (qf.ln() + (9.0 * k).ln() - 3.0 * eps.ln() + cfg.c1) / qf
}

/// Minimizer of [`cprime_objective`], `1/(1 + q/3)`.
pub fn cprime_argmin(q: u64) -> f64 {
    1.0 / (1.0 + q as f64 / 3.0)
}

/// `C'(K,q)` through the closed-form minimizer.
pub fn const_cprime(k: f64, q: u64, cfg: &ConstantConfig) -> Result<f64, ArithError> {
    check_domain(k, q)?;
    Ok(cprime_objective(cprime_argmin(q), k, q, cfg))
}

/// `C'(K,q)` by golden-section search over the logit of `eps`.
pub fn const_cprime_numeric(k: f64, q: u64, cfg: &ConstantConfig) -> Result<f64, ArithError> {
    check_domain(k, q)?;
    let f = |u: f64| {
        let eps = 1.0 / (1.0 + (-u).exp());
        cprime_objective(eps, k, q, cfg)
    };
    let (_, v) = golden_section_min(f, -60.0, 60.0, 1e-12);
    Ok(v)
}

/// Minimum of a unimodal function on `[lo, hi]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `C''(K,q) = ln(Kq)/(2 pi q) + c3/q`.
pub fn const_cdoubleprime(k: f64, q: u64, cfg: &ConstantConfig) -> Result<f64, ArithError> {
    check_domain(k, q)?;
    let qf = q as f64;
    Ok((k * qf).ln() / (2.0 * PI * qf) + cfg.c3 / qf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fib_brjuno(depth: usize) -> f64 {
        // direct summation: q_n = F_{n+1}
        let (mut a, mut b) = (1.0f64, 1.0f64);
        let mut s = 0.0;
        for _ in 0..depth {
            s += b.ln() / a;
            let c = a + b;
            a = b;
            b = c;
        }
        s
    }

    #[test]
    fn golden_brjuno_matches_direct_sum() {
        let v = brjuno_sum(&CFExpansion::golden(), 200, 1e-12);
        assert!(v.converged);
        assert!((v.value - fib_brjuno(60)).abs() < 1e-9, "{} vs {}", v.value, fib_brjuno(60));
    }

    #[test]
    fn rational_is_infinite() {
        let half = CFExpansion::from_i64(0, &[2], &[]).unwrap();
        let v = brjuno_sum(&half, 10, 1e-9);
        assert!(v.value.is_infinite() && !v.converged);
    }

    #[test]
    fn doubly_exponential_prefix_has_no_flag() {
        let partials: Vec<BigInt> = (1..8u32).map(|n| BigInt::one() << (1usize << n)).collect();
        let sums = brjuno_partial_sums(&partials);
        assert!(sums.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn non_brjuno_prefix_grows() {
        // a_{n+1} = 2^{q_n}: every term contributes at least ln 2
        let mut partials = Vec::new();
        let (mut qp, mut q) = (BigInt::zero(), BigInt::one());
        for _ in 0..4 {
            let a = BigInt::one() << q.to_usize().unwrap();
            let next = &a * &q + &qp;
            partials.push(a);
            qp = std::mem::replace(&mut q, next);
        }
        let sums = brjuno_partial_sums(&partials);
        for w in sums.windows(2) {
            assert!(w[1] - w[0] >= 2f64.ln() * 0.99);
        }
    }

    #[test]
    fn bounded_type_examples() {
        let silver = CFExpansion::from_i64(2, &[], &[2]).unwrap();
        assert!(is_bounded_type(&silver, &2.into()));
        assert!(!is_bounded_type(&silver, &1.into()));
        let growing = CFExpansion::from_i64(0, &[1, 2, 3, 4], &[]).unwrap();
        assert!(!is_bounded_type(&growing, &3.into()));
    }

    #[test]
    fn constant_examples() {
        let cfg = ConstantConfig::default();
        assert!((const_c(1.0, 1, &cfg).unwrap() - cfg.c1).abs() < 1e-15);
        assert!((const_cdoubleprime(1.0, 1, &cfg).unwrap() - cfg.c3).abs() < 1e-15);
        for k in [1.0, 5.0, 100.0] {
            assert!(const_c(k, 1_000_000, &cfg).unwrap() < 1e-4 * (k.ln() + cfg.c1 + 14.0));
        }
        let e = std::f64::consts::E;
        let direct = (3f64.ln() + e.ln() + cfg.c1) / 3.0;
        assert!((const_c(e, 3, &cfg).unwrap() - direct).abs() < 1e-15);
        assert!(const_c(0.5, 1, &cfg).is_err());
        assert!(const_cprime(1.0, 0, &cfg).is_err());
    }

    #[test]
    fn default_config_satisfies_relations() {
        let cfg = ConstantConfig::default();
        cfg.validate().unwrap();
        assert!(cfg.relation_holds() && cfg.cprime_bound_holds());
        for q in [1u64, 2, 3, 7, 100, 1 << 20] {
            for k in [1.0, 1.5, 10.0, 1e6] {
                let lhs = 2.0 * PI * const_cdoubleprime(2.0 * k + 1.0, q, &cfg).unwrap();
                assert!(lhs <= const_c(k, q, &cfg).unwrap() + 1e-12);
                let qf = q as f64;
                let bound = (4.0 * qf.ln() + k.ln() + cfg.c2) / qf;
                assert!(const_cprime(k, q, &cfg).unwrap() <= bound + 1e-12);
            }
        }
        let mut weak = cfg.clone();
        weak.c1 = 1.0;
        assert!(!weak.relation_holds());
    }

    #[test]
    fn closed_form_vs_search() {
        let cfg = ConstantConfig::default();
        for k in [1.0, 10.0, 100.0] {
            for q in [1u64, 2, 10, 100] {
                let a = const_cprime(k, q, &cfg).unwrap();
                let b = const_cprime_numeric(k, q, &cfg).unwrap();
                assert!((a - b).abs() < 1e-10, "K={k} q={q}: {a} vs {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn constants_nondecreasing_in_k(k in 1.0f64..1e4, dk in 0.0f64..10.0, q in 1u64..10_000) {
            let cfg = ConstantConfig::default();
            for f in [const_c, const_cprime, const_cdoubleprime] {
                prop_assert!(f(k + dk, q, &cfg).unwrap() >= f(k, q, &cfg).unwrap() - 1e-14);
            }
        }

        #[test]
        fn objective_is_convex(k in 1.0f64..100.0, q in 1u64..1000, e in 0.01f64..0.98) {
            let cfg = ConstantConfig::default();
            let h = 1e-3;
            let f = |x| cprime_objective(x, k, q, &cfg);
            prop_assert!(f(e - h) + f(e + h) - 2.0 * f(e) > 0.0);
        }

        #[test]
        fn brjuno_monotone_in_depth(period in proptest::collection::vec(1i64..6, 1..4), d in 1usize..40) {
            let cf = CFExpansion::from_i64(0, &[], &period).unwrap();
            let a = brjuno_sum(&cf, d, 0.0);
            let b = brjuno_sum(&cf, d + 1, 0.0);
            prop_assert!(b.value >= a.value);
            prop_assert!(a.value.is_finite());
        }
    }
}

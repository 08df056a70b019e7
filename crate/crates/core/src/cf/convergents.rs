use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::expansion::CFExpansion;
use super::surd::{Exact, Surd};
use super::CfError;

/// `p_n / q_n` with its index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub index: usize,
    pub p: BigInt,
    pub q: BigInt,
}

/// Returns `((p_n, p_{n-1}), (q_n, q_{n-1}))` for the full slice `terms = [a_0..a_n]`.
pub fn convergent_pair(terms: &[BigInt]) -> ((BigInt, BigInt), (BigInt, BigInt)) {
    let (mut p, mut pm) = (BigInt::one(), BigInt::zero());
    let (mut q, mut qm) = (BigInt::zero(), BigInt::one());
    for a in terms {
        let np = a * &p + &pm;
        let nq = a * &q + &qm;
        pm = std::mem::replace(&mut p, np);
        qm = std::mem::replace(&mut q, nq);
    }
    ((p, pm), (q, qm))
}

/// Convergents `p_0/q_0 .. p_n/q_n`.
pub fn convergents(cf: &CFExpansion, n: usize) -> Result<Vec<Convergent>, CfError> {
    let mut table = ConvergentTable::new(cf.clone());
    (0..=n).map(|i| table.get(i).map(|(p, q)| Convergent { index: i, p: p.clone(), q: q.clone() })).collect()
}

/// Lazily extended convergent cache for one expansion.
#[derive(Clone, Debug)]
pub struct ConvergentTable {
    cf: CFExpansion,
    p: Vec<BigInt>,
    q: Vec<BigInt>,
}

impl ConvergentTable {
    pub fn new(cf: CFExpansion) -> Self {
        // slots 0 and 1 hold the seeds p_{-2}/q_{-2} and p_{-1}/q_{-1}
        ConvergentTable { cf, p: vec![BigInt::zero(), BigInt::one()], q: vec![BigInt::one(), BigInt::zero()] }
    }

    pub fn expansion(&self) -> &CFExpansion {
        &self.cf
    }

    /// `(p_n, q_n)`.
    pub fn get(&mut self, n: usize) -> Result<(&BigInt, &BigInt), CfError> {
        while self.p.len() < n + 3 {
            let i = self.p.len() - 2;
            let a = self.cf.term(i).ok_or(CfError::TooShort { wanted: n, have: i.saturating_sub(1) })?;
            let np = &a * &self.p[i + 1] + &self.p[i];
            let nq = &a * &self.q[i + 1] + &self.q[i];
            self.p.push(np);
            self.q.push(nq);
        }
        Ok((&self.p[n + 2], &self.q[n + 2]))
    }

    /// `(p_{n-1}, q_{n-1})`, where index `-1` is allowed through `n = 0`.
    pub fn get_prev(&mut self, n: usize) -> Result<(BigInt, BigInt), CfError> {
        self.get(n)?;
        Ok((self.p[n + 1].clone(), self.q[n + 1].clone()))
    }
}

/// `[a_0; ..., a_n, x]` for an exact tail `x`.
pub fn eval_cf_exact(prefix: &[BigInt], x: &Exact) -> Result<Exact, CfError> {
    let ((p, pm), (q, qm)) = convergent_pair(prefix);
    let xs = x.to_surd();
    let num = xs.scale(&p).add(&Surd::integer(pm))?;
    let den = xs.scale(&q).add(&Surd::integer(qm))?;
    Ok(Exact::from_surd(num.div(&den)?))
}

/// `[a_0; ..., a_n, x]` in floating point.
pub fn eval_cf_f64(prefix: &[BigInt], x: f64) -> f64 {
    use num_traits::ToPrimitive;
    let ((p, pm), (q, qm)) = convergent_pair(prefix);
    let f = |v: &BigInt| v.to_f64().unwrap_or(f64::NAN);
    (f(&p) * x + f(&pm)) / (f(&q) * x + f(&qm))
}

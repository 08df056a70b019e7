//! Truncated complex power series `sum c_k z^k`, indexed from `k = 0`.

use num_complex::Complex64;

pub type C64 = Complex64;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Horner evaluation.
pub fn eval(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(zero(), |acc, &a| acc * z + a)
}

/// Value and first derivative.
pub fn eval_d1(c: &[C64], z: C64) -> (C64, C64) {
    let mut v = zero();
    let mut d = zero();
    for &a in c.iter().rev() {
        d = d * z + v;
        v = v * z + a;
    }
    (v, d)
}

/// `[f(z), f'(z), ..., f^{(order)}(z)]`.
pub fn eval_derivs(c: &[C64], z: C64, order: usize) -> Vec<C64> {
    // repeated synthetic division gives Taylor coefficients at z
    let mut work: Vec<C64> = c.to_vec();
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for j in 0..=order {
        if work.is_empty() {
            out.push(zero());
            continue;
        }
        let n = work.len();
        let mut acc = zero();
        let mut quotient = vec![zero(); n.saturating_sub(1)];
        for k in (0..n).rev() {
            acc = acc * z + work[k];
            if k > 0 {
                quotient[k - 1] = acc;
            }
        }
        if j > 0 {
            fact *= j as f64;
        }
        out.push(acc * fact);
        work = quotient;
    }
    out
}

pub fn derivative(c: &[C64]) -> Vec<C64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect()
}

/// Product truncated to degree `n`.
pub fn mul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![zero(); n + 1];
    for (i, &x) in a.iter().enumerate().take(n + 1) {
        if x == zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `f(g(z))` truncated to degree `n`; requires `g(0) = 0`.
pub fn compose(f: &[C64], g: &[C64], n: usize) -> Vec<C64> {
    let deg = f.iter().rposition(|&a| a != zero()).unwrap_or(0);
    let mut acc = vec![zero(); n + 1];
    for k in (0..=deg).rev() {
        acc = mul(&acc, g, n);
        acc[0] += f[k];
    }
    acc
}

/// `1/g` truncated to degree `n`; requires `g(0) != 0`.
pub fn reciprocal(g: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![zero(); n + 1];
    let inv0 = 1.0 / g[0];
    out[0] = inv0;
    for k in 1..=n {
        let mut s = zero();
        for j in 1..=k.min(g.len() - 1) {
            s += g[j] * out[k - j];
        }
        out[k] = -s * inv0;
    }
    out
}

/// Principal `log g` truncated to degree `n`; requires `g(0) = 1`.
pub fn log(g: &[C64], n: usize) -> Vec<C64> {
    let dg = derivative(g);
    let q = mul(&dg, &reciprocal(g, n), n.saturating_sub(1));
    let mut out = vec![zero(); n + 1];
    for k in 1..=n {
        out[k] = q[k - 1] / k as f64;
    }
    out
}

/// Compositional inverse of `psi` with `psi(0) = 0`, `psi'(0) = 1` (Lagrange inversion).
pub fn revert(psi: &[C64], n: usize) -> Vec<C64> {
    // u = z / psi(z)
    let shifted: Vec<C64> = psi.iter().skip(1).copied().collect();
    let u = reciprocal(&shifted, n);
    let mut out = vec![zero(); n + 1];
    let mut pow = vec![zero(); n + 1];
    pow[0] = C64::new(1.0, 0.0);
    for k in 1..=n {
        pow = mul(&pow, &u, n);
        out[k] = pow[k - 1] / k as f64;
    }
    out
}

/// Incrementally maintained coefficients `[z^n] phi^m`, `2 <= m <= max_power`,
/// for a series `phi = sum_{i>=1} a_i z^i` whose coefficients arrive in order.
#[derive(Clone, Debug)]
pub struct PowerTable {
    max_power: usize,
    order: usize,
    /// `pow[m][k]`; row 1 holds `phi` itself.
    pow: Vec<Vec<C64>>,
    next: usize,
    filled: bool,
}

impl PowerTable {
    pub fn new(max_power: usize, order: usize) -> Self {
        let pow = vec![vec![zero(); order + 1]; max_power.max(1) + 1];
        PowerTable { max_power: max_power.max(1), order, pow, next: 1, filled: false }
    }

    /// Index of the next coefficient expected by [`PowerTable::push`].
    pub fn next_index(&self) -> usize {
        self.next
    }

    fn fill_row(&mut self) {
        let n = self.next;
        for m in 2..=self.max_power.min(n) {
            let mut s = zero();
            for j in 1..=(n - m + 1) {
                s += self.pow[1][j] * self.pow[m - 1][n - j];
            }
            self.pow[m][n] = s;
        }
        self.filled = true;
    }

    /// `sum_{m=2}^{n} w_m [z^n] phi^m` for `n = next_index()`, using only
    /// already pushed coefficients. `w[m]` is the weight of the m-th power.
    pub fn weighted_coefficient(&mut self, w: &[C64]) -> C64 {
        if !self.filled {
            self.fill_row();
        }
        let n = self.next;
        (2..=self.max_power.min(n)).filter_map(|m| w.get(m).map(|&wm| wm * self.pow[m][n])).sum()
    }

    /// Stores `a_n` for `n = next_index()`.
    pub fn push(&mut self, a: C64) {
        assert!(self.next <= self.order, "power table order exceeded");
        if !self.filled {
            self.fill_row();
        }
        self.pow[1][self.next] = a;
        self.next += 1;
        self.filled = false;
    }

    pub fn coefficients(&self) -> Vec<C64> {
        let mut c = self.pow[1][..self.next].to_vec();
        c[0] = zero();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn log_of_one_plus_z() {
        let g = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let l = log(&g, 8);
        for k in 1..=8 {
            let expect = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            assert!((l[k] - c(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn reversion_of_moebius() {
        // psi = z/(1+z) has inverse z/(1-z)
        let n = 12;
        let psi: Vec<C64> = (0..=n).map(|k| if k == 0 { zero() } else { c(if k % 2 == 1 { 1.0 } else { -1.0 }, 0.0) }).collect();
        let inv = revert(&psi, n);
        let expect: Vec<C64> = (0..=n).map(|k| if k == 0 { zero() } else { c(1.0, 0.0) }).collect();
        assert!(close(&inv, &expect, 1e-12));
        let id = compose(&psi, &inv, n);
        assert!((id[1] - c(1.0, 0.0)).norm() < 1e-12 && id[2..].iter().all(|x| x.norm() < 1e-11));
    }

    #[test]
    fn derivatives_match_formula() {
        // f = z^3 at z = 2: 8, 12, 12, 6
        let f = vec![zero(), zero(), zero(), c(1.0, 0.0)];
        let d = eval_derivs(&f, c(2.0, 0.0), 4);
        let want = [8.0, 12.0, 12.0, 6.0, 0.0];
        for (x, w) in d.iter().zip(want) {
            assert!((x - c(w, 0.0)).norm() < 1e-12);
        }
        let (v, d1) = eval_d1(&f, c(2.0, 0.0));
        assert!((v - c(8.0, 0.0)).norm() < 1e-12 && (d1 - c(12.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn power_table_matches_direct_powers() {
        let n = 10;
        let a: Vec<C64> = (0..=n).map(|k| if k == 0 { zero() } else { c(1.0 / k as f64, 0.3 * k as f64) }).collect();
        let mut t = PowerTable::new(4, n);
        let w = vec![zero(), zero(), c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0)];
        for k in 1..=n {
            let got = t.weighted_coefficient(&w);
            let p2 = mul(&a[..k], &a[..k], k);
            let p3 = mul(&p2, &a[..k], k);
            let p4 = mul(&p3, &a[..k], k);
            let want = p2[k] + p3[k] * 0.5 + p4[k] * 0.25;
            assert!((got - want).norm() < 1e-12, "k = {k}");
            t.push(a[k]);
        }
        assert_eq!(t.coefficients(), a);
    }
}

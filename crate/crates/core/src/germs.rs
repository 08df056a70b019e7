//! Germs `f(z) = e^{2 pi i alpha} z + sum_{m>=2} b_m z^m` on the unit disk, their
//! families, and half-plane lifts `F(Z) = Z + alpha + h(e^{2 pi i Z})`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::param::Param;
use crate::series::{self, zero, PowerTable, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GermError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("factorization failed: |g - 1| reaches {max_dev:.6} on |w| = {radius}")]
    Factorization { max_dev: f64, radius: f64 },
    #[error("bad germ record: {0}")]
    Record(String),
}

pub const DEFAULT_ORDER: usize = 256;

fn two_pi_i() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

/// A truncated germ. `coeffs[m]` is the coefficient of `z^m`, so `coeffs[0] = 0`
/// and `coeffs[1]` is the multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct Germ {
    pub alpha: Param,
    coeffs: Vec<C64>,
    /// Bound on the omitted `sum_{m>N} |b_m|` (0 for polynomials).
    pub tail_bound: f64,
}

/// A value together with the truncation error bound that applies to it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GermValue {
    pub value: C64,
    pub abs_err: f64,
}

impl Germ {
    /// Builds `e^{2 pi i alpha} z + sum b_m z^m` from `higher = [b_2, b_3, ...]`.
    pub fn new(alpha: Param, higher: &[C64], tail_bound: f64) -> Germ {
        let mut coeffs = vec![zero(), alpha.multiplier()];
        coeffs.extend_from_slice(higher);
        let mut g = Germ { alpha, coeffs, tail_bound };
        g.trim_trailing(0.0);
        g
    }

    pub fn rotation(alpha: Param) -> Germ {
        Germ::new(alpha, &[], 0.0)
    }

    pub fn quadratic(alpha: Param, s: f64) -> Germ {
        Germ::new(alpha, &[C64::new(s, 0.0)], 0.0)
    }

    pub fn multiplier(&self) -> C64 {
        self.coeffs[1]
    }

    /// Coefficient of `z^m`.
    pub fn b(&self, m: usize) -> C64 {
        self.coeffs.get(m).copied().unwrap_or_else(zero)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `[b_2, ..., b_N]`.
    pub fn higher(&self) -> &[C64] {
        &self.coeffs[2..]
    }

    /// Index of the last stored coefficient (at least 1).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_rotation(&self) -> bool {
        self.degree() == 1
    }

    /// Drops trailing coefficients with modulus `<= tol`, adding them to the tail bound.
    pub fn trim_trailing(&mut self, tol: f64) {
        while self.coeffs.len() > 2 {
            let last = self.coeffs[self.coeffs.len() - 1].norm();
            if last > tol {
                break;
            }
            self.tail_bound += last;
            self.coeffs.pop();
        }
    }

    pub fn eval_unchecked(&self, z: C64) -> C64 {
        series::eval(&self.coeffs, z)
    }

    pub fn eval(&self, z: C64) -> Result<GermValue, GermError> {
        if z.norm() >= 1.0 {
            return Err(GermError::Domain(format!("|z| = {} is not < 1", z.norm())));
        }
        Ok(GermValue { value: self.eval_unchecked(z), abs_err: self.tail_bound })
    }

    pub fn eval_d1(&self, z: C64) -> (C64, C64) {
        series::eval_d1(&self.coeffs, z)
    }

    pub fn to_record(&self) -> GermRecord {
        GermRecord {
            alpha: self.alpha.text(),
            coeffs: self.higher().iter().map(|c| [c.re, c.im]).collect(),
            tail_bound: self.tail_bound,
        }
    }

    pub fn from_record(r: &GermRecord) -> Result<Germ, GermError> {
        let alpha: Param = r.alpha.parse().map_err(|e| GermError::Record(format!("{e}")))?;
        if !(r.tail_bound >= 0.0) {
            return Err(GermError::Record("tail_bound must be nonnegative".into()));
        }
        let higher: Vec<C64> = r.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect();
        Ok(Germ::new(alpha, &higher, r.tail_bound))
    }
}

/// Serialized germ: the parameter as exact text and `[b_2, ..., b_N]` as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GermRecord {
    pub alpha: String,
    pub coeffs: Vec<[f64; 2]>,
    pub tail_bound: f64,
}

/// `b_m(alpha) = constant + slope * alpha` for a custom polynomial family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyRule {
    pub power: usize,
    pub constant: [f64; 2],
    #[serde(default)]
    pub slope: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    Rotation,
    Quadratic,
    Polynomial(Vec<PolyRule>),
    /// Vector field `chi(z) = 2 pi i z + sum_{m>=2} chi[m-2] z^m`.
    Flow(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GermFamily {
    pub kind: FamilyKind,
    pub restriction_radius: f64,
    /// Truncation order for families that are not polynomial.
    pub order: usize,
}

impl GermFamily {
    pub fn new(kind: FamilyKind, restriction_radius: f64) -> Result<GermFamily, GermError> {
        if !(restriction_radius > 0.0 && restriction_radius <= 1.0) {
            return Err(GermError::Domain(format!("restriction radius {restriction_radius} not in (0,1]")));
        }
        if let FamilyKind::Polynomial(rules) = &kind {
            if rules.iter().any(|r| r.power < 2) {
                return Err(GermError::Domain("polynomial rules need power >= 2".into()));
            }
        }
        Ok(GermFamily { kind, restriction_radius, order: DEFAULT_ORDER })
    }

    pub fn rotation() -> GermFamily {
        GermFamily::new(FamilyKind::Rotation, 1.0).unwrap()
    }

    pub fn quadratic(s: f64) -> Result<GermFamily, GermError> {
        GermFamily::new(FamilyKind::Quadratic, s)
    }

    /// The flow of `2 pi i z + z^2`.
    pub fn riccati_flow() -> GermFamily {
        GermFamily::new(FamilyKind::Flow(vec![C64::new(1.0, 0.0)]), 1.0).unwrap()
    }

    pub fn with_order(mut self, order: usize) -> GermFamily {
        self.order = order.max(2);
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Rotation => "rotation",
            FamilyKind::Quadratic => "quadratic",
            FamilyKind::Polynomial(_) => "polynomial",
            FamilyKind::Flow(_) => "flow",
        }
    }

    /// The rescaled vector field `chi(s z)/s`, full coefficient vector.
    pub fn flow_field(&self) -> Option<Vec<C64>> {
        let FamilyKind::Flow(higher) = &self.kind else { return None };
        let s = self.restriction_radius;
        let mut chi = vec![zero(), two_pi_i()];
        chi.extend(higher.iter().enumerate().map(|(i, &c)| c * s.powi(i as i32 + 1)));
        Some(chi)
    }

    pub fn family_at(&self, alpha: &Param) -> Germ {
        let s = self.restriction_radius;
        match &self.kind {
            FamilyKind::Rotation => Germ::rotation(alpha.clone()),
            FamilyKind::Quadratic => Germ::quadratic(alpha.clone(), s),
            FamilyKind::Polynomial(rules) => {
                let deg = rules.iter().map(|r| r.power).max().unwrap_or(1);
                let mut higher = vec![zero(); deg.saturating_sub(1)];
                let a = alpha.to_f64();
                for r in rules {
                    let c = C64::new(r.constant[0], r.constant[1]) + C64::new(r.slope[0], r.slope[1]) * a;
                    higher[r.power - 2] += c * s.powi(r.power as i32 - 1);
                }
                Germ::new(alpha.clone(), &higher, 0.0)
            }
            FamilyKind::Flow(_) => flow_time_map(&self.flow_field().unwrap(), alpha, self.order),
        }
    }
}

/// Linearizing coordinate `psi` of the vector field: `psi' chi = 2 pi i psi`, `psi'(0) = 1`.
pub fn flow_linearizer(chi: &[C64], order: usize) -> Vec<C64> {
    let mut p = vec![zero(); order + 1];
    p[1] = C64::new(1.0, 0.0);
    for n in 2..=order {
        let mut s = zero();
        for m in 2..=n.min(chi.len() - 1) {
            s += p[n - m + 1] * (n - m + 1) as f64 * chi[m];
        }
        p[n] = -s / (two_pi_i() * (n - 1) as f64);
    }
    p
}

/// Time-`t` map of `dz/dt = chi(z)`, `chi = [0, 2 pi i, c_2, ...]`, to order `order`.
///
/// Solves `psi(f_t) = e^{2 pi i t} psi` term by term, so the multiplier is exact.
pub fn flow_time_map(chi: &[C64], t: &Param, order: usize) -> Germ {
    let psi = flow_linearizer(chi, order);
    let rho = t.multiplier();
    if psi.iter().skip(2).all(|c| *c == zero()) {
        return Germ::rotation(t.clone());
    }
    // terms of psi below this size do not affect the result at double precision
    let scale = psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let max_power = psi.iter().rposition(|c| c.norm() > 1e-20 * scale).unwrap_or(1).max(2);
    let mut table = PowerTable::new(max_power, order);
    table.push(rho);
    for n in 2..=order {
        let u = rho * psi[n] - table.weighted_coefficient(&psi);
        table.push(u);
    }
    let coeffs = table.coefficients();
    let tail = geometric_tail(&coeffs);
    let mut g = Germ::new(t.clone(), &coeffs[2..], tail);
    let scale = coeffs.iter().skip(2).map(|c| c.norm()).fold(0.0, f64::max);
    g.trim_trailing(1e-18 * scale);
    g
}

/// Extrapolated bound on `sum_{m>N} |c_m|` from the decay of the last coefficients.
pub fn geometric_tail(c: &[C64]) -> f64 {
    let n = c.len() - 1;
    let w = 16.min(n / 2);
    if w == 0 {
        return 0.0;
    }
    let last = c[n].norm().max(c[n - 1].norm());
    let earlier = c[n - w].norm().max(c[n - w - 1].norm());
    if last == 0.0 {
        return 0.0;
    }
    let ratio = (last / earlier).powf(1.0 / w as f64);
    if ratio < 1.0 {
        last * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

/// Empirical Lipschitz constant of `alpha -> f_alpha` on `|z| = 0.999`.
///
/// Samples `n_pairs` parameter pairs `(a, a + gap)` evenly in `interval` and
/// `n_circle` points on the circle. The result is a lower estimate.
pub fn lipschitz_estimate(fam: &GermFamily, interval: (f64, f64), n_pairs: usize, n_circle: usize) -> f64 {
    let (lo, hi) = interval;
    let gap = 1e-6 * (hi - lo).abs().max(1e-3);
    let circle: Vec<C64> =
        (0..n_circle).map(|j| C64::from_polar(0.999, 2.0 * PI * j as f64 / n_circle as f64)).collect();
    let mut best: f64 = 0.0;
    for i in 0..n_pairs {
        let a = lo + (hi - lo) * (i as f64 + 0.5) / n_pairs as f64;
        let f = fam.family_at(&Param::Real(a));
        let g = fam.family_at(&Param::Real(a + gap));
        for &z in &circle {
            let d = (f.eval_unchecked(z) - g.eval_unchecked(z)).norm() / gap;
            best = best.max(d);
        }
    }
    best
}

/// Radius on which the lift factorization is checked.
pub const LIFT_CHECK_RADIUS: f64 = 0.999;

/// `F(Z) = Z + alpha + h(e^{2 pi i Z})` with `h = log(g)/(2 pi i)`, `f(w) = e^{2 pi i alpha} w g(w)`.
#[derive(Clone, Debug)]
pub struct LiftMap {
    pub alpha: f64,
    /// Coefficients of `h`, `h(0) = 0`.
    pub h_coeffs: Vec<C64>,
    /// `g - 1 = u(w) = sum_{m>=2} b_m w^{m-1} / rho`, used for direct evaluation.
    u_coeffs: Vec<C64>,
    pub source: Option<Germ>,
    /// `sup |e^{2 pi i F(Z)} - f(e^{2 pi i Z})|` on the check grid.
    pub residual: f64,
    translation: bool,
}

fn log1p(u: C64) -> C64 {
    if u.norm() < 1e-4 {
        // enough terms for full precision at this size
        let mut s = zero();
        let mut p = u;
        for k in 1..=5 {
            s += if k % 2 == 1 { p } else { -p } / k as f64;
            p *= u;
        }
        s
    } else {
        (C64::new(1.0, 0.0) + u).ln()
    }
}

impl LiftMap {
    /// The translation `Z + alpha`.
    pub fn translation(alpha: f64) -> LiftMap {
        LiftMap { alpha, h_coeffs: vec![zero()], u_coeffs: vec![], source: None, residual: 0.0, translation: true }
    }

    /// A lift from explicit `h` coefficients.
    pub fn from_h(alpha: f64, h_coeffs: Vec<C64>) -> LiftMap {
        let translation = h_coeffs.iter().all(|c| *c == zero());
        LiftMap { alpha, h_coeffs, u_coeffs: vec![], source: None, residual: 0.0, translation }
    }

    pub fn is_translation(&self) -> bool {
        self.translation
    }

    fn h_and_dh(&self, w: C64) -> (C64, C64) {
        if !self.u_coeffs.is_empty() {
            // h = log(1+u)/(2 pi i), w h'(w) 2 pi i = w u'/(1+u)
            let (u, du) = series::eval_d1(&self.u_coeffs, w);
            let h = log1p(u) / two_pi_i();
            (h, w * du / (C64::new(1.0, 0.0) + u))
        } else {
            let (h, dh) = series::eval_d1(&self.h_coeffs, w);
            (h, dh * w * two_pi_i())
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        if self.is_translation() {
            return z + self.alpha;
        }
        let w = (two_pi_i() * z).exp();
        let h = if self.u_coeffs.is_empty() {
            series::eval(&self.h_coeffs, w)
        } else {
            log1p(series::eval(&self.u_coeffs, w)) / two_pi_i()
        };
        z + self.alpha + h
    }

    /// `(F(Z), F'(Z))`.
    pub fn eval_d1(&self, z: C64) -> (C64, C64) {
        if self.is_translation() {
            return (z + self.alpha, C64::new(1.0, 0.0));
        }
        let w = (two_pi_i() * z).exp();
        let (h, dh) = self.h_and_dh(w);
        (z + self.alpha + h, C64::new(1.0, 0.0) + dh)
    }

    /// Evaluation through the truncated series of `h` only.
    pub fn eval_series(&self, z: C64) -> C64 {
        let w = (two_pi_i() * z).exp();
        z + self.alpha + series::eval(&self.h_coeffs, w)
    }

    /// `sup |h|` on the circle `|w| = e^{-2 pi y}`, sampled.
    pub fn sup_h_at_height(&self, y: f64, samples: usize) -> f64 {
        (0..samples)
            .map(|j| {
                let z = C64::new(j as f64 / samples as f64, y);
                (self.eval(z) - z - self.alpha).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Lifts a germ to the upper half-plane. Fails when `g = f/(rho w)` is not within
/// distance 1 of 1 on `|w| = 0.999`.
pub fn lift_of_germ(g: &Germ, order: usize) -> Result<LiftMap, GermError> {
    let rho = g.multiplier();
    let u: Vec<C64> = g.coeffs()[1..].iter().enumerate().map(|(i, &c)| if i == 0 { zero() } else { c / rho }).collect();
    let samples = 512;
    let max_dev = (0..samples)
        .map(|j| series::eval(&u, C64::from_polar(LIFT_CHECK_RADIUS, 2.0 * PI * j as f64 / samples as f64)).norm())
        .fold(0.0, f64::max);
    if max_dev >= 1.0 {
        return Err(GermError::Factorization { max_dev, radius: LIFT_CHECK_RADIUS });
    }
    let mut gs = u.clone();
    gs[0] = C64::new(1.0, 0.0);
    let h: Vec<C64> = series::log(&gs, order).into_iter().map(|c| c / two_pi_i()).collect();
    let mut lift = LiftMap {
        alpha: g.alpha.to_f64(),
        h_coeffs: h,
        u_coeffs: u,
        source: Some(g.clone()),
        residual: 0.0,
        translation: false,
    };
    if g.is_rotation() {
        lift.u_coeffs.clear();
        lift.h_coeffs = vec![zero()];
        lift.translation = true;
    }
    lift.residual = lift_residual(&lift, g);
    Ok(lift)
}

/// `sup |E(F(Z)) - f(E(Z))|` over `Re Z in [0,1)`, `Im Z in [0.2, 2]`, using the series path.
pub fn lift_residual(lift: &LiftMap, g: &Germ) -> f64 {
    let mut worst: f64 = 0.0;
    for iy in 0..=18 {
        let y = 0.2 + 0.1 * iy as f64;
        for ix in 0..64 {
            let z = C64::new(ix as f64 / 64.0, y);
            let lhs = (two_pi_i() * lift.eval_series(z)).exp();
            let rhs = g.eval_unchecked((two_pi_i() * z).exp());
            worst = worst.max((lhs - rhs).norm());
        }
    }
    worst
}

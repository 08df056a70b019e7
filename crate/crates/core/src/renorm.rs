//! Lift dynamics in the upper half-plane, the height `h(F)`, and direct sector
//! renormalization by the pair `H = T^{-p_k} F^{q_k}`, `J = T^{-p_{k-1}} F^{q_{k-1}}`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::arith::ConstantConfig;
use crate::cf::{eval_cf_f64, CFExpansion, ConvergentTable, Exact};
use crate::germs::LiftMap;
use crate::linearize::ext_float;
use crate::series::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenormError {
    #[error("expansion too short for order k = {k}")]
    InsufficientDepth { k: usize },
    #[error("alpha equals its convergent p_k/q_k; beta = 0")]
    ZeroBeta,
    #[error("lift rotation number {lift} does not match the expansion value {cf}")]
    AlphaMismatch { lift: f64, cf: f64 },
    #[error("denominator q_k too large to iterate: {0}")]
    TooManyIterates(String),
    #[error("no admissible height below {ceiling}")]
    NoAdmissibleHeight { ceiling: f64 },
    #[error("height conditions never met below {ceiling}")]
    ConditionsNeverMet { ceiling: f64 },
    #[error("return map undefined: orbit dropped to height {height} <= y0 = {y0}")]
    Undefined { height: f64, y0: f64 },
    #[error("start point is not in the fundamental domain")]
    NotInDomain,
    #[error("hop budget {budget} exceeded")]
    BudgetExceeded { budget: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftOrbit {
    pub z_final: C64,
    pub escaped: bool,
    /// Number of steps taken (the escaping step included).
    pub steps: u64,
    pub trace: Option<Vec<C64>>,
}

/// Iterates `F` while the orbit stays in the upper half-plane.
pub fn iterate_lift(f: &LiftMap, z: C64, steps: u64, keep_trace: bool) -> LiftOrbit {
    let mut trace = keep_trace.then(|| vec![z]);
    let mut cur = z;
    for k in 0..steps {
        cur = f.eval(cur);
        if let Some(t) = trace.as_mut() {
            t.push(cur);
        }
        if !(cur.im > 0.0) {
            return LiftOrbit { z_final: cur, escaped: true, steps: k + 1, trace };
        }
    }
    LiftOrbit { z_final: cur, escaped: false, steps, trace }
}

/// Whether the orbit of `z` stays in the upper half-plane for `steps` steps,
/// reducing `Re` modulo 1 along the way.
fn stays_up(f: &LiftMap, z: C64, steps: u64) -> bool {
    let mut cur = z;
    for _ in 0..steps {
        cur = f.eval(cur);
        if !(cur.im > 0.0) {
            return false;
        }
        cur.re -= cur.re.floor();
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightParams {
    pub max_iter: u64,
    pub re_samples: usize,
    /// Final resolution of the height ladder.
    pub im_resolution: f64,
    pub ceiling: f64,
}

impl Default for HeightParams {
    fn default() -> Self {
        HeightParams { max_iter: 10_000, re_samples: 64, im_resolution: 1e-3, ceiling: 4.0 }
    }
}

/// Downward ladder scan: the lowest row `y` such that every row from `y` up to the
/// top of the bracket passes, refined level by level in steps of ten.
///
/// Refinement only looks below the first failing row of the coarser level, so a
/// stricter predicate can only raise the result.
fn ladder_scan(top: f64, resolution: f64, pass: impl Fn(f64) -> bool) -> Option<f64> {
    let mut step = 10f64.powf(top.log10().floor()).max(resolution);
    let mut hi = top;
    if !pass(hi) {
        return None;
    }
    loop {
        let mut lowest = hi;
        let mut k = 1;
        loop {
            let y = hi - k as f64 * step;
            if y <= 0.0 || !pass(y) {
                break;
            }
            lowest = y;
            k += 1;
        }
        if step <= resolution * (1.0 + 1e-9) {
            return Some(lowest);
        }
        hi = lowest;
        step /= 10.0;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightEstimate {
    pub h: f64,
    pub params: HeightParams,
}

/// Smallest sampled height whose whole row of orbits stays in the half-plane.
pub fn h_of_lift(f: &LiftMap, p: &HeightParams) -> Result<HeightEstimate, RenormError> {
    if f.is_translation() {
        return Ok(HeightEstimate { h: 0.0, params: *p });
    }
    let row_ok = |y: f64| {
        (0..p.re_samples).all(|j| stays_up(f, C64::new(j as f64 / p.re_samples as f64, y), p.max_iter))
    };
    let h = ladder_scan(p.ceiling, p.im_resolution, row_ok).ok_or(RenormError::NoAdmissibleHeight { ceiling: p.ceiling })?;
    Ok(HeightEstimate { h, params: *p })
}

/// The commuting pair `(H, J)` with exact rotation data.
#[derive(Clone, Debug)]
pub struct RenormSetup {
    pub lift: LiftMap,
    pub cf: CFExpansion,
    pub k: usize,
    pub p_k: BigInt,
    pub q_k: BigInt,
    pub p_km1: BigInt,
    pub q_km1: BigInt,
    /// `q_k alpha - p_k`.
    pub beta: f64,
    /// `q_{k-1} alpha - p_{k-1}`.
    pub beta_prime: f64,
    pub y0: f64,
    /// `q_{k+1} |beta|`, in `[1/2, 1]`.
    pub q_next_beta: f64,
    iter_h: u64,
    iter_j: u64,
    shift_h: f64,
    shift_j: f64,
}

/// Largest denominator iterated directly.
pub const MAX_ITERATES: u64 = 1_000_000;

pub fn build_hj(lift: LiftMap, cf: &CFExpansion, k: usize) -> Result<RenormSetup, RenormError> {
    let alpha: Exact = cf.value();
    if (alpha.to_f64() - lift.alpha).abs() > 1e-12 * alpha.to_f64().abs().max(1.0) {
        return Err(RenormError::AlphaMismatch { lift: lift.alpha, cf: alpha.to_f64() });
    }
    let mut table = ConvergentTable::new(cf.clone());
    let (p_k, q_k) = table.get(k).map(|(p, q)| (p.clone(), q.clone())).map_err(|_| RenormError::InsufficientDepth { k })?;
    let (p_km1, q_km1) = table.get_prev(k).map_err(|_| RenormError::InsufficientDepth { k })?;
    let beta_x = alpha.scale(&q_k).add_int(&-&p_k);
    let beta_px = alpha.scale(&q_km1).add_int(&-&p_km1);
    if beta_x.signum() == std::cmp::Ordering::Equal {
        return Err(RenormError::ZeroBeta);
    }
    let q_next_beta = match table.get(k + 1) {
        Ok((_, q)) => beta_x.scale(q).to_f64().abs(),
        Err(_) => f64::NAN,
    };
    let to_iter = |q: &BigInt| q.to_u64().filter(|&v| v <= MAX_ITERATES).ok_or_else(|| RenormError::TooManyIterates(q.to_string()));
    let iter_h = to_iter(&q_k)?;
    let iter_j = to_iter(&q_km1)?;
    let big = |x: &BigInt| crate::cf::Rational::from_integer(x.clone()).to_f64();
    Ok(RenormSetup {
        lift,
        cf: cf.clone(),
        k,
        beta: beta_x.to_f64(),
        beta_prime: beta_px.to_f64(),
        y0: 0.0,
        q_next_beta,
        iter_h,
        iter_j,
        shift_h: big(&p_k),
        shift_j: big(&p_km1),
        p_k,
        q_k,
        p_km1,
        q_km1,
    })
}

/// `(value, derivative)` of `T^{-shift} F^{n}` by the chain rule, or `None` when an
/// intermediate iterate leaves the half-plane.
fn iterate_translate(f: &LiftMap, z: C64, n: u64, shift: f64) -> Option<(C64, C64)> {
    let mut cur = z;
    let mut d = C64::new(1.0, 0.0);
    for _ in 0..n {
        let (v, dv) = f.eval_d1(cur);
        d *= dv;
        cur = v;
        if !(cur.im > 0.0) && !f.is_translation() {
            return None;
        }
    }
    Some((cur - shift, d))
}

impl RenormSetup {
    pub fn h_map(&self, z: C64) -> Option<(C64, C64)> {
        iterate_translate(&self.lift, z, self.iter_h, self.shift_h)
    }

    pub fn j_map(&self, z: C64) -> Option<(C64, C64)> {
        iterate_translate(&self.lift, z, self.iter_j, self.shift_j)
    }

    /// Number of `F` steps per `H` evaluation.
    pub fn iterates_per_h(&self) -> u64 {
        self.iter_h
    }

    pub fn with_y0(mut self, y0: f64) -> Self {
        self.y0 = y0;
        self
    }

    /// `lambda(Z)`: `(Z - i y0)/beta` for `beta > 0`, its conjugate version otherwise.
    pub fn lambda(&self, z: C64) -> C64 {
        let w = z - C64::new(0.0, self.y0);
        if self.beta > 0.0 {
            w / self.beta
        } else {
            w.conj() / self.beta
        }
    }

    pub fn lambda_inv(&self, w: C64) -> C64 {
        let z = if self.beta > 0.0 { w * self.beta } else { (w * self.beta).conj() };
        z + C64::new(0.0, self.y0)
    }

    /// `lambda H lambda^{-1}`.
    pub fn hop_lambda(&self, w: C64) -> Option<C64> {
        self.h_map(self.lambda_inv(w)).map(|(v, _)| self.lambda(v))
    }

    /// Budget of `H` hops per return: twice `3 (1 + |beta'/beta|)`.
    pub fn hop_budget(&self) -> usize {
        (6.0 * (1.0 + (self.beta_prime / self.beta).abs())).ceil() as usize
    }

    pub fn expected_alpha_prime(&self) -> f64 {
        self.beta_prime / self.beta
    }

    /// `-[a_{k+1}; a_{k+2}, ...]` evaluated from the expansion terms.
    pub fn cf_alpha_prime(&self) -> f64 {
        let terms: Vec<BigInt> = (self.k + 1..self.k + 60).map_while(|i| self.cf.term(i)).collect();
        if terms.is_empty() {
            return f64::NAN;
        }
        let (last, head) = terms.split_last().unwrap();
        -eval_cf_f64(head, crate::cf::Rational::from_integer(last.clone()).to_f64())
    }

    /// Point `i y'` of `ell` with `Im H(i y') = Im Z`, by fixed-point iteration.
    fn ell_partner(&self, im: f64) -> Option<C64> {
        let mut y = im;
        for _ in 0..60 {
            let (hz, _) = self.h_map(C64::new(0.0, y))?;
            let dy = im - hz.im;
            y += dy;
            if dy.abs() <= 1e-15 * im.abs().max(1.0) {
                break;
            }
        }
        self.h_map(C64::new(0.0, y)).map(|(v, _)| v)
    }

    /// Membership in `ell` union `U`: above `y0` and `0 <= Re lambda(Z) < Re lambda(H(i y'))`
    /// at the matching height (left side closed, right side open).
    pub fn in_domain(&self, z: C64) -> bool {
        if !(z.im > self.y0) {
            return false;
        }
        let x = z.re / self.beta;
        if x < 0.0 {
            return false;
        }
        match self.ell_partner(z.im) {
            Some(hz) => x < hz.re / self.beta,
            None => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Y0Params {
    pub re_samples: usize,
    pub resolution: f64,
    pub ceiling: f64,
}

impl Default for Y0Params {
    fn default() -> Self {
        Y0Params { re_samples: 128, resolution: 1e-3, ceiling: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Y0Report {
    pub y0: f64,
    /// `ln(10 M/|beta|)/(2 pi)` from `|F(Z) - Z - alpha| <= M e^{-2 pi Im Z}`, clipped at 0.
    pub y0_analytic: f64,
}

/// Checks the four near-translation conditions on the row `Im Z = y`.
pub fn row_conditions_hold(s: &RenormSetup, y: f64, re_samples: usize) -> bool {
    let b = s.beta.abs();
    (0..re_samples).all(|j| {
        let z = C64::new(j as f64 / re_samples as f64, y);
        let Some((h, dh)) = s.h_map(z) else { return false };
        let Some((jz, dj)) = s.j_map(z) else { return false };
        (h - z - s.beta).norm() <= b / 10.0
            && (dh - 1.0).norm() <= 0.1
            && (jz - z - s.beta_prime).norm() <= b / 10.0
            && (dj - 1.0).norm() <= 0.1
    })
}

/// Lowest ladder height from which the conditions hold on every higher row.
/// Rows suffice since the deviations are bounded holomorphic functions of `e^{2 pi i Z}`.
pub fn find_y0(s: &RenormSetup, p: &Y0Params) -> Result<Y0Report, RenormError> {
    let m = {
        let y = 0.25;
        s.lift.sup_h_at_height(y, 64) * (2.0 * std::f64::consts::PI * y).exp()
    };
    let y0_analytic = if m > 0.0 { ((10.0 * m / s.beta.abs()).ln() / (2.0 * std::f64::consts::PI)).max(0.0) } else { 0.0 };
    if s.lift.is_translation() {
        return Ok(Y0Report { y0: 0.0, y0_analytic });
    }
    let y0 = ladder_scan(p.ceiling, p.resolution, |y| row_conditions_hold(s, y, p.re_samples))
        .ok_or(RenormError::ConditionsNeverMet { ceiling: p.ceiling })?;
    Ok(Y0Report { y0, y0_analytic })
}

/// Linear interpolation `G(X + iY) = (1 - X) iY + X hop(iY)` on the strip `0 <= X <= 1`, `Y > 0`.
pub fn gluing_map_g(hop: impl Fn(C64) -> C64, w: C64) -> Result<C64, RenormError> {
    if !(0.0..=1.0).contains(&w.re) || !(w.im > 0.0) {
        return Err(RenormError::Domain(format!("{w} outside the strip")));
    }
    let iy = C64::new(0.0, w.im);
    Ok(iy * (1.0 - w.re) + hop(iy) * w.re)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub z: C64,
    pub hops: usize,
    pub rz: C64,
    pub path_min_im: f64,
    /// `J(Z), H(J(Z)), ..., R(Z)` followed by two further `H` steps.
    pub trace: Vec<C64>,
}

/// First return to `ell` union `U`: `J` once, then `H` until landing.
pub fn return_map(s: &RenormSetup, z: C64) -> Result<ReturnSample, RenormError> {
    if !s.in_domain(z) {
        return Err(RenormError::NotInDomain);
    }
    let budget = s.hop_budget();
    let (mut cur, _) = s.j_map(z).ok_or(RenormError::Undefined { height: 0.0, y0: s.y0 })?;
    let mut trace = vec![cur];
    let mut min_im = cur.im;
    let mut hops = 0;
    while !s.in_domain(cur) {
        if !(cur.im > s.y0) {
            return Err(RenormError::Undefined { height: cur.im, y0: s.y0 });
        }
        if hops >= budget {
            return Err(RenormError::BudgetExceeded { budget });
        }
        cur = s.h_map(cur).ok_or(RenormError::Undefined { height: 0.0, y0: s.y0 })?.0;
        hops += 1;
        min_im = min_im.min(cur.im);
        trace.push(cur);
    }
    let rz = cur;
    let mut extra = cur;
    for _ in 0..2 {
        match s.h_map(extra) {
            Some((v, _)) => {
                extra = v;
                trace.push(v);
            }
            None => break,
        }
    }
    Ok(ReturnSample { z, hops, rz, path_min_im: min_im, trace })
}

/// At most one visit to `ell` union `U` along the part of an `H`-trace that stays above `y0`.
pub fn verify_single_pass(s: &RenormSetup, trace: &[C64]) -> bool {
    trace.iter().take_while(|z| z.im > s.y0).filter(|&&z| s.in_domain(z)).count() <= 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormReport {
    pub k: usize,
    pub measured_alpha_prime: f64,
    pub expected_alpha_prime: f64,
    /// `-[a_{k+1}; a_{k+2}, ...]` from the expansion terms.
    pub cf_alpha_prime: f64,
    #[serde(with = "ext_float")]
    pub error: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub y0: f64,
    pub y1: f64,
    pub y2: f64,
    /// `(h' - y0)/|beta|` for the lowest sampled height `h'` above which sampled points
    /// of the fundamental domain are in the domain of the return map.
    pub h0_estimate: f64,
    pub height: f64,
    pub returns: usize,
    pub single_pass_violations: usize,
    pub budget_violations: usize,
    pub max_hops: usize,
    pub aborted: Option<String>,
}

/// Heights `y1`, `y2` from the cone angle `arcsin(1/10)` and the gluing constants.
pub fn heights_y1_y2(s: &RenormSetup, cfg: &ConstantConfig) -> (f64, f64) {
    let b = s.beta.abs();
    let tan = (0.1f64).asin().tan();
    let y1 = s.y0 + 2.0 * b / 10.0 + b * tan;
    let y2 = y1 + b * (0.1 + cfg.c1_glue + cfg.a * cfg.c1_glue.max(cfg.c_sqrt2));
    (y1, y2)
}

/// Sampled estimate of the height from which the fundamental domain lies in the domain of `R`.
pub fn h0_estimate(s: &RenormSetup) -> f64 {
    let b = s.beta.abs();
    let top = s.y0 + 4.0 * b;
    let row_ok = |y: f64| {
        (0..16).all(|j| {
            let z = C64::new(s.beta * j as f64 / 16.0, y);
            !s.in_domain(z) || return_map(s, z).is_ok()
        })
    };
    let rows = 80;
    let mut lowest = top;
    for i in (0..rows).rev() {
        let y = s.y0 + (top - s.y0) * i as f64 / rows as f64;
        if y <= s.y0 || !row_ok(y) {
            break;
        }
        lowest = y;
    }
    (lowest - s.y0) / b
}

/// Mean return displacement in `lambda` coordinates, `Re lambda(R Z) - Re lambda(Z) - m`.
pub fn renormalized_rotation_number(s: &RenormSetup, height: f64, n_returns: usize, cfg: &ConstantConfig) -> RenormReport {
    let (y1, y2) = heights_y1_y2(s, cfg);
    let mut report = RenormReport {
        k: s.k,
        measured_alpha_prime: f64::NAN,
        expected_alpha_prime: s.expected_alpha_prime(),
        cf_alpha_prime: s.cf_alpha_prime(),
        error: f64::NAN,
        beta: s.beta,
        beta_prime: s.beta_prime,
        y0: s.y0,
        y1,
        y2,
        h0_estimate: h0_estimate(s),
        height,
        returns: 0,
        single_pass_violations: 0,
        budget_violations: 0,
        max_hops: 0,
        aborted: None,
    };
    let mut z = C64::new(0.0, height);
    let mut sum = 0.0;
    for _ in 0..n_returns {
        match return_map(s, z) {
            Ok(r) => {
                sum += (r.rz.re - z.re) / s.beta - r.hops as f64;
                if !verify_single_pass(s, &r.trace) {
                    report.single_pass_violations += 1;
                }
                report.max_hops = report.max_hops.max(r.hops);
                report.returns += 1;
                z = r.rz;
            }
            Err(e) => {
                if matches!(e, RenormError::BudgetExceeded { .. }) {
                    report.budget_violations += 1;
                }
                report.aborted = Some(e.to_string());
                break;
            }
        }
    }
    if report.returns > 0 {
        report.measured_alpha_prime = sum / report.returns as f64;
        report.error = (report.measured_alpha_prime - report.expected_alpha_prime).abs();
    }
    report
}

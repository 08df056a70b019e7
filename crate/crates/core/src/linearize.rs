//! Formal linearization `phi(z) = z + sum a_n z^n` solving `phi(rho z) = f(phi(z))`,
//! and two estimators for the radius of the linearization domain.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::germs::{Germ, GermFamily};
use crate::param::{rational_param, Param};
use crate::series::{self, zero, PowerTable, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinError {
    #[error("small divisor blowup at n = {index}: |rho^n - rho| = {divisor:e}, |P| = {numerator:e}")]
    SmallDivisorBlowup { index: usize, divisor: f64, numerator: f64 },
    #[error("overflow guard at n = {index}: |a_n| = {magnitude:e}")]
    OverflowGuard { index: usize, magnitude: f64 },
    #[error("degenerate window: all window coefficients vanish")]
    DegenerateWindow,
    #[error("window {window} invalid for truncation order {order}")]
    BadWindow { window: usize, order: usize },
    #[error("radius {rho} is not below the convergence indicator {limit}")]
    RadiusTooLarge { rho: f64, limit: f64 },
    #[error("no valid radius at tolerance")]
    NoValidRadius,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinParams {
    /// For float parameters `|rho^n - rho|` below this counts as an exact zero; at a
    /// resonance a numerator below it counts as cancelled.
    pub divisor_floor: f64,
    pub magnitude_cap: f64,
}

impl Default for LinParams {
    fn default() -> Self {
        LinParams { divisor_floor: 1e-13, magnitude_cap: 1e300 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizationSeries {
    pub alpha: Param,
    /// `a[n]` for `0 <= n <= N`; `a[0] = 0`, `a[1] = 1`.
    pub a: Vec<C64>,
    /// `log |rho^n - rho|` by index (`-inf` at exact resonances; entries 0 and 1 unused).
    pub small_divisor_log: Vec<f64>,
    /// `|P_{b,n}|` by index.
    pub numerators: Vec<f64>,
    /// Set when the recursion stopped at a genuine pole at this index.
    pub pole_at: Option<usize>,
}

impl LinearizationSeries {
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C64) -> C64 {
        series::eval(&self.a, z)
    }
}

/// Runs the recursion `(rho^n - rho) a_n = P_{b,n}(a_2, ..., a_{n-1})`.
///
/// With `stop_at_pole` a genuine pole ends the series instead of failing.
fn recursion(g: &Germ, order: usize, params: &LinParams, stop_at_pole: bool) -> Result<LinearizationSeries, LinError> {
    let deg = g.degree();
    let weights = g.coeffs();
    let mut table = PowerTable::new(deg.max(2), order.max(1));
    let mut sd_log = vec![f64::NAN; 2];
    let mut numerators = vec![0.0; 2];
    let mut pole_at = None;
    table.push(C64::new(1.0, 0.0));
    for n in 2..=order {
        let p = if deg >= 2 { table.weighted_coefficient(weights) } else { zero() };
        let div = g.alpha.small_divisor(n as u64);
        let dn = div.norm();
        sd_log.push(dn.ln());
        numerators.push(p.norm());
        // exact parameters carry an exact resonance predicate; floats fall back to the floor
        let resonant = match &g.alpha {
            Param::Exact(_) => g.alpha.is_resonant(n as u64),
            Param::Real(_) => dn < params.divisor_floor,
        };
        let an = if resonant {
            if p.norm() < params.divisor_floor {
                // free coefficient at a cancelled resonance
                zero()
            } else if stop_at_pole {
                sd_log.pop();
                numerators.pop();
                pole_at = Some(n);
                break;
            } else {
                return Err(LinError::SmallDivisorBlowup { index: n, divisor: dn, numerator: p.norm() });
            }
        } else {
            p / div
        };
        if !(an.norm() <= params.magnitude_cap) {
            return Err(LinError::OverflowGuard { index: n, magnitude: an.norm() });
        }
        table.push(an);
    }
    let mut a = table.coefficients();
    a[1] = C64::new(1.0, 0.0);
    Ok(LinearizationSeries { alpha: g.alpha.clone(), a, small_divisor_log: sd_log, numerators, pole_at })
}

pub fn linearization_coeffs(g: &Germ, order: usize) -> Result<LinearizationSeries, LinError> {
    linearization_coeffs_with(g, order, &LinParams::default())
}

pub fn linearization_coeffs_with(g: &Germ, order: usize, params: &LinParams) -> Result<LinearizationSeries, LinError> {
    recursion(g, order, params, false)
}

/// Like [`linearization_coeffs`] but truncates at the first genuine pole (rational parameters).
pub fn partial_linearization(g: &Germ, order: usize, params: &LinParams) -> Result<LinearizationSeries, LinError> {
    recursion(g, order, params, true)
}

/// `max_{n<=N} |[z^n] (phi(rho z) - f(phi(z)))|`.
pub fn compose_check(g: &Germ, phi: &LinearizationSeries, order: usize) -> f64 {
    let n = order.min(phi.order());
    let a = &phi.a[..=n];
    let rhs = series::compose(g.coeffs(), a, n);
    (1..=n)
        .map(|k| (a[k] * g.alpha.multiplier_pow(k as u64) - rhs[k]).norm())
        .fold(0.0, f64::max)
}

/// Whether `compose_check` meets `1e-10 * max(1, max |a_n|)`.
pub fn compose_check_passes(g: &Germ, phi: &LinearizationSeries) -> bool {
    compose_check(g, phi, phi.order()) <= 1e-10 * phi.max_abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusMethod {
    Hadamard,
    Escape,
}

impl RadiusMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            RadiusMethod::Hadamard => "hadamard",
            RadiusMethod::Escape => "escape",
        }
    }
}

/// Serializes non-finite floats as strings so JSON stays valid.
pub mod ext_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub alpha: String,
    pub lower: f64,
    #[serde(with = "ext_float")]
    pub upper: f64,
    pub method: RadiusMethod,
    pub params: BTreeMap<String, f64>,
    pub diagnostics: String,
    /// Orbit steps spent by the estimator.
    pub iterations: u64,
}

/// Cauchy-Hadamard indicator: least-squares slope of `log |a_n|` over the last `window`
/// indices. The value is reported as `upper`; `lower` is 0.
pub fn hadamard_radius(phi: &LinearizationSeries, window: usize) -> Result<RadiusEstimate, LinError> {
    let order = phi.order();
    if window < 16 || window > order {
        return Err(LinError::BadWindow { window, order });
    }
    let pts: Vec<(f64, f64)> = ((order - window + 1)..=order)
        .filter(|&n| phi.a[n].norm() > 0.0)
        .map(|n| (n as f64, phi.a[n].norm().ln()))
        .collect();
    let mut params = BTreeMap::new();
    params.insert("window".to_string(), window as f64);
    params.insert("order".to_string(), order as f64);
    let base = RadiusEstimate {
        alpha: phi.alpha.text(),
        lower: 0.0,
        upper: f64::INFINITY,
        method: RadiusMethod::Hadamard,
        params,
        diagnostics: String::new(),
        iterations: 0,
    };
    if pts.len() < 2 {
        return Ok(RadiusEstimate { diagnostics: "degenerate window: coefficients vanish".into(), ..base });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(RadiusEstimate {
        upper: (-slope).exp(),
        diagnostics: format!("slope {slope:.6e} over {} nonzero coefficients", pts.len()),
        ..base
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeParams {
    pub max_iter: u64,
    pub circle_samples: usize,
    pub bisect_tol: f64,
    pub residual_tol: f64,
}

impl Default for EscapeParams {
    fn default() -> Self {
        EscapeParams { max_iter: 10_000, circle_samples: 64, bisect_tol: 1e-3, residual_tol: 1e-8 }
    }
}

impl EscapeParams {
    fn to_map(self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("max_iter".to_string(), self.max_iter as f64),
            ("circle_samples".to_string(), self.circle_samples as f64),
            ("bisect_tol".to_string(), self.bisect_tol),
            ("residual_tol".to_string(), self.residual_tol),
        ])
    }
}

/// Number of steps before the orbit of `w` under `g` leaves the unit disk, capped at `max_iter`.
pub fn escape_time(g: &Germ, mut w: C64, max_iter: u64) -> u64 {
    if w.norm_sqr() >= 1.0 {
        return 0;
    }
    for k in 0..max_iter {
        w = g.eval_unchecked(w);
        if !(w.norm_sqr() < 1.0) {
            return k + 1;
        }
    }
    max_iter
}

struct Probe {
    valid: bool,
    residual: f64,
    steps: u64,
}

fn probe_radius(g: &Germ, phi: &LinearizationSeries, r: f64, p: &EscapeParams) -> Probe {
    let rho = g.alpha.multiplier();
    let results: Vec<(f64, bool, u64)> = (0..p.circle_samples)
        .into_par_iter()
        .map(|j| {
            let z = C64::from_polar(r, 2.0 * PI * j as f64 / p.circle_samples as f64);
            let w = phi.eval(z);
            let res = (phi.eval(rho * z) - g.eval_unchecked(w)).norm();
            if !(res < p.residual_tol) {
                return (res, false, 0);
            }
            let t = escape_time(g, w, p.max_iter);
            (res, t >= p.max_iter && w.norm_sqr() < 1.0, t)
        })
        .collect();
    Probe {
        valid: results.iter().all(|x| x.1),
        residual: results.iter().map(|x| x.0).fold(0.0, f64::max),
        steps: results.iter().map(|x| x.2).sum(),
    }
}

/// Bisection over the radius for the predicate "residual below tolerance and every
/// sampled orbit of `phi(radius * e^{i theta})` stays in the disk".
pub fn escape_radius(g: &Germ, phi: &LinearizationSeries, p: &EscapeParams) -> RadiusEstimate {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut steps = 0;
    let mut last_invalid_residual = f64::NAN;
    while hi - lo > p.bisect_tol {
        let mid = 0.5 * (lo + hi);
        let probe = probe_radius(g, phi, mid, p);
        steps += probe.steps;
        if probe.valid {
            lo = mid;
        } else {
            hi = mid;
            last_invalid_residual = probe.residual;
        }
    }
    let mut diagnostics = format!("series order {}", phi.order());
    if let Some(n) = phi.pole_at {
        diagnostics.push_str(&format!("; series truncated at pole n = {n}"));
    }
    if lo == 0.0 {
        diagnostics.push_str("; no valid radius at tolerance");
    }
    if last_invalid_residual >= p.residual_tol {
        diagnostics.push_str("; upper set by residual");
    }
    RadiusEstimate {
        alpha: g.alpha.text(),
        lower: lo,
        upper: hi,
        method: RadiusMethod::Escape,
        params: p.to_map(),
        diagnostics,
        iterations: steps,
    }
}

/// [`partial_linearization`], rebuilt at half the index whenever the overflow guard trips.
pub fn robust_linearization(g: &Germ, order: usize) -> Result<LinearizationSeries, LinError> {
    let mut order = order;
    loop {
        match partial_linearization(g, order, &LinParams::default()) {
            Err(LinError::OverflowGuard { index, .. }) if index / 2 >= 16 => order = index / 2,
            other => return other,
        }
    }
}

/// Linearizes (truncating at a pole when the parameter is resonant) and runs the escape estimator.
pub fn estimate_radius(g: &Germ, order: usize, p: &EscapeParams) -> Result<RadiusEstimate, LinError> {
    let phi = robust_linearization(g, order)?;
    Ok(escape_radius(g, &phi, p))
}

/// `sup_{|z| = rho} |phi^{(j)}(z)|` for `j = 0..=order`, on 512 samples.
pub fn boundary_derivative_norms(phi: &LinearizationSeries, rho: f64, order: usize) -> Result<Vec<f64>, LinError> {
    check_radius(phi, rho)?;
    Ok(derivative_sup_norms(&phi.a, rho, order))
}

fn check_radius(phi: &LinearizationSeries, rho: f64) -> Result<(), LinError> {
    if phi.order() >= 32 {
        let h = hadamard_radius(phi, (phi.order() / 4).max(16))?;
        if rho >= h.upper {
            return Err(LinError::RadiusTooLarge { rho, limit: h.upper });
        }
    }
    Ok(())
}

/// Sup norms of the derivatives of the series `c` on the circle of radius `rho`.
pub fn derivative_sup_norms(c: &[C64], rho: f64, order: usize) -> Vec<f64> {
    const SAMPLES: usize = 512;
    let mut out = vec![0.0; order + 1];
    for k in 0..SAMPLES {
        let z = C64::from_polar(rho, 2.0 * PI * k as f64 / SAMPLES as f64);
        for (j, d) in series::eval_derivs(c, z, order).iter().enumerate() {
            out[j] = f64::max(out[j], d.norm());
        }
    }
    out
}

/// Sup norms of the derivatives of `phi_1 - phi_2` on the circle of radius `rho`.
pub fn derivative_gap_norms(
    phi1: &LinearizationSeries,
    phi2: &LinearizationSeries,
    rho: f64,
    order: usize,
) -> Result<Vec<f64>, LinError> {
    check_radius(phi1, rho)?;
    check_radius(phi2, rho)?;
    let n = phi1.a.len().max(phi2.a.len());
    let diff: Vec<C64> = (0..n)
        .map(|k| phi1.a.get(k).copied().unwrap_or_else(zero) - phi2.a.get(k).copied().unwrap_or_else(zero))
        .collect();
    Ok(derivative_sup_norms(&diff, rho, order))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleSample {
    pub offset: f64,
    pub alpha: f64,
    pub numerator: f64,
    pub divisor: f64,
    pub coefficient: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleVerdict {
    Cancellation,
    Pole,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleProbeReport {
    pub p: i64,
    pub q: i64,
    pub n: usize,
    pub samples: Vec<PoleSample>,
    /// Fitted exponent `s` in `|P| ~ offset^s`.
    pub exponent: f64,
    pub verdict: PoleVerdict,
}

/// `|P_{b,n}|` along `alpha = p/q + offset` for each offset.
pub fn pole_cancellation_probe(fam: &GermFamily, p: i64, q: i64, n: usize, offsets: &[f64]) -> PoleProbeReport {
    assert!(n >= 2 && q >= 1 && (n - 1) % q as usize == 0, "need q | n - 1");
    let base = rational_param(p, q).to_f64();
    let params = LinParams { divisor_floor: 0.0, magnitude_cap: f64::INFINITY };
    let samples: Vec<PoleSample> = offsets
        .iter()
        .map(|&e| {
            let alpha = Param::Real(base + e);
            let g = fam.family_at(&alpha);
            let phi = linearization_coeffs_with(&g, n, &params).expect("no floor");
            PoleSample {
                offset: e,
                alpha: base + e,
                numerator: phi.numerators[n],
                divisor: phi.small_divisor_log[n].exp(),
                coefficient: phi.a[n].norm(),
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.numerator > 0.0).map(|s| (s.offset.abs().ln(), s.numerator.ln())).collect();
    let (exponent, verdict) = if samples.iter().all(|s| s.numerator == 0.0) {
        (f64::INFINITY, PoleVerdict::Cancellation)
    } else if pts.len() < 2 {
        (f64::NAN, PoleVerdict::Inconclusive)
    } else {
        let (x0, y0) = pts[0];
        let (x1, y1) = pts[pts.len() - 1];
        let s = (y1 - y0) / (x1 - x0);
        let v = if s > 0.5 {
            PoleVerdict::Cancellation
        } else if s.abs() < 0.1 {
            PoleVerdict::Pole
        } else {
            PoleVerdict::Inconclusive
        };
        (s, v)
    };
    PoleProbeReport { p, q, n, samples, exponent, verdict }
}

//! Parameter-space experiments: radius scans, searches near Brjuno points,
//! probes along special sequences, and the staged smooth-disk construction.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{const_c, const_cprime, is_bounded_type, partial_quotient_sup, ArithError, ConstantConfig};
use crate::cf::{
    cf_of_exact, cf_of_rational, convergent_pair, default_tail, parse_exact, special_sequence_main, CFExpansion,
    CfError, Exact, Rational, RationalForm,
};
use crate::germs::{lipschitz_estimate, GermFamily};
use crate::linearize::{
    derivative_gap_norms, escape_radius, estimate_radius, ext_float, hadamard_radius, robust_linearization,
    EscapeParams, LinError, LinearizationSeries, RadiusEstimate,
};
use crate::param::Param;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CombError {
    #[error("target radius {rho} is not below the estimated radius {r_lower}")]
    TargetAboveRadius { rho: f64, r_lower: f64 },
    #[error("stage {stage} failed: {diagnostics}")]
    StageFailed { stage: usize, diagnostics: String },
    #[error("family unsuitable: {0}")]
    FamilyUnsuitable(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// One line of a radius scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha_text: String,
    pub alpha_float: f64,
    pub r_lower: f64,
    #[serde(with = "ext_float")]
    pub r_upper: f64,
    /// Estimator tag, or `error:<tag>` when the row failed.
    pub method: String,
    pub iterations: u64,
    pub wall_time_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimators {
    Escape,
    Hadamard,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub order: usize,
    pub escape: EscapeParams,
    pub estimators: Estimators,
    pub hadamard_window: usize,
    /// Off by default so that scan output is reproducible byte for byte.
    pub record_time: bool,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            order: 512,
            escape: EscapeParams::default(),
            estimators: Estimators::Escape,
            hadamard_window: 128,
            record_time: false,
        }
    }
}

fn error_row(alpha: &Param, e: &LinError) -> ScanRow {
    ScanRow {
        alpha_text: alpha.text(),
        alpha_float: alpha.to_f64(),
        r_lower: 0.0,
        r_upper: f64::INFINITY,
        method: format!("error:{}", e.tag()),
        iterations: 0,
        wall_time_ms: 0,
    }
}

fn estimate_row(est: &RadiusEstimate, alpha: &Param, ms: u64) -> ScanRow {
    ScanRow {
        alpha_text: alpha.text(),
        alpha_float: alpha.to_f64(),
        r_lower: est.lower,
        r_upper: est.upper,
        method: est.method.tag().to_string(),
        iterations: est.iterations,
        wall_time_ms: ms,
    }
}

fn scan_one(fam: &GermFamily, alpha: &Param, p: &ScanParams) -> Vec<ScanRow> {
    let g = fam.family_at(alpha);
    let start = Instant::now();
    let elapsed = |t: &Instant| if p.record_time { t.elapsed().as_millis() as u64 } else { 0 };
    let phi = match robust_linearization(&g, p.order) {
        Ok(phi) => phi,
        Err(e) => {
            let n = if p.estimators == Estimators::Both { 2 } else { 1 };
            return vec![error_row(alpha, &e); n];
        }
    };
    let mut rows = Vec::new();
    if p.estimators != Estimators::Hadamard {
        let est = escape_radius(&g, &phi, &p.escape);
        rows.push(estimate_row(&est, alpha, elapsed(&start)));
    }
    if p.estimators != Estimators::Escape {
        let t = Instant::now();
        match hadamard_radius(&phi, p.hadamard_window) {
            Ok(est) => rows.push(estimate_row(&est, alpha, elapsed(&t))),
            Err(e) => rows.push(error_row(alpha, &e)),
        }
    }
    rows
}

/// Radius estimates for every parameter, in input order, computed on `workers` threads.
pub fn scan_r(fam: &GermFamily, alphas: &[Param], p: &ScanParams, workers: usize) -> Result<Vec<ScanRow>, CombError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CombError::Pool(e.to_string()))?;
    let rows: Vec<Vec<ScanRow>> = pool.install(|| alphas.par_iter().map(|a| scan_one(fam, a, p)).collect());
    Ok(rows.into_iter().flatten().collect())
}

/// The Farey sequence of order `q_max` on `[0, 1]`, increasing.
pub fn farey_grid(q_max: u64) -> Vec<Exact> {
    let n = q_max.max(1);
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, n);
    let mut out = vec![Exact::Rational(Rational::from_integer(0))];
    while c <= n {
        let k = (n + b) / d;
        let next = (c, d, k * c - a, k * d - b);
        (a, b, c, d) = next;
        out.push(Exact::Rational(Rational::new(a.into(), b.into()).unwrap()));
    }
    out
}

/// A radius estimate attached to an exact parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSample {
    pub alpha_text: String,
    pub alpha_float: f64,
    pub r_lower: f64,
    #[serde(with = "ext_float")]
    pub r_upper: f64,
}

impl RadiusSample {
    fn from_estimate(x: &Param, e: &RadiusEstimate) -> Self {
        RadiusSample { alpha_text: x.text(), alpha_float: x.to_f64(), r_lower: e.lower, r_upper: e.upper }
    }
}

fn sample_at(fam: &GermFamily, x: &Exact, order: usize, esc: &EscapeParams) -> Result<RadiusSample, CombError> {
    let p = Param::Exact(x.clone());
    let e = estimate_radius(&fam.family_at(&p), order, esc)?;
    Ok(RadiusSample::from_estimate(&p, &e))
}

fn bounded_type_exact(cf: &CFExpansion) -> bool {
    !cf.is_rational() && is_bounded_type(cf, &partial_quotient_sup(cf))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondBddParams {
    /// Largest denominator allowed for the rational end point `b`.
    pub q_max: u64,
    pub grid_points: usize,
    pub refine_steps: usize,
    /// Number of emitted special-sequence values below `c`.
    pub n_terms: usize,
    pub order: usize,
    pub escape: EscapeParams,
    pub lipschitz_pairs: usize,
    /// Slack used when deciding whether the emitted radii approach the band.
    pub band_tol: f64,
    pub constants: ConstantConfig,
}

impl Default for CondBddParams {
    fn default() -> Self {
        CondBddParams {
            q_max: 8,
            grid_points: 16,
            refine_steps: 6,
            n_terms: 5,
            order: 512,
            escape: EscapeParams::default(),
            lipschitz_pairs: 8,
            band_tol: 0.02,
            constants: ConstantConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CondBddOutcome {
    Found,
    /// The rational end point already reaches the target radius.
    FamilyLooksDegenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSample {
    pub index: usize,
    pub sample: RadiusSample,
    pub bounded_type: bool,
    pub below_c: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondBddReport {
    pub outcome: CondBddOutcome,
    pub rho: f64,
    pub alpha: RadiusSample,
    pub b: RadiusSample,
    pub grid: Vec<RadiusSample>,
    pub c: Option<RadiusSample>,
    /// Closest probed point left of `c`; its radius is below `rho`.
    pub c_left: Option<RadiusSample>,
    pub sequence: Vec<SequenceSample>,
    pub lipschitz: f64,
    /// Denominator of `c` when it is rational.
    pub c_denominator: Option<u64>,
    /// `[rho, rho / exp(C')]` as printed in the dichotomy.
    pub band_as_written: (f64, f64),
    /// `[rho exp(-C'), rho]`.
    pub band_reoriented: (f64, f64),
    pub approaches_band: bool,
}

/// Largest fraction below `alpha` with denominator at most `q_max`.
pub fn nearest_lower_fraction(alpha: &Exact, q_max: u64) -> Rational {
    let mut best: Option<Rational> = None;
    for q in 1..=q_max.max(1) {
        let qb = BigInt::from(q);
        let mut p = alpha.scale(&qb).floor();
        let cand = Rational::new(p.clone(), qb.clone()).unwrap();
        if Exact::Rational(cand.clone()).cmp_exact(alpha) != std::cmp::Ordering::Less {
            p -= 1;
        }
        let cand = Rational::new(p, qb).unwrap();
        if best.as_ref().is_none_or(|b| cand > *b) {
            best = Some(cand);
        }
    }
    best.unwrap()
}

fn midpoint(x: &Exact, y: &Exact) -> Result<Exact, CfError> {
    x.add(y)?.div(&Exact::integer(2))
}

/// Locates, on a grid over `[b, alpha]`, the first point whose estimated radius
/// reaches `rho`, refines it by bisection, and emits special-sequence values below it.
pub fn condition_bdd_search(
    fam: &GermFamily,
    alpha: &Exact,
    rho: f64,
    p: &CondBddParams,
) -> Result<CondBddReport, CombError> {
    if alpha.is_rational() {
        return Err(CombError::Input("the base point must be irrational".into()));
    }
    let est = |x: &Exact| sample_at(fam, x, p.order, &p.escape);
    let r_alpha = est(alpha)?;
    if !(rho > 0.0 && rho < r_alpha.r_lower) {
        return Err(CombError::TargetAboveRadius { rho, r_lower: r_alpha.r_lower });
    }
    let b = Exact::Rational(nearest_lower_fraction(alpha, p.q_max));
    let r_b = est(&b)?;
    let mut report = CondBddReport {
        outcome: CondBddOutcome::Found,
        rho,
        alpha: r_alpha,
        b: r_b.clone(),
        grid: Vec::new(),
        c: None,
        c_left: None,
        sequence: Vec::new(),
        lipschitz: 0.0,
        c_denominator: None,
        band_as_written: (rho, rho),
        band_reoriented: (rho, rho),
        approaches_band: false,
    };
    if r_b.r_lower >= rho {
        report.outcome = CondBddOutcome::FamilyLooksDegenerate;
        return Ok(report);
    }

    let m = p.grid_points.max(1);
    let mb = BigInt::from(m);
    let point = |j: usize| -> Result<Exact, CfError> {
        let left = b.scale(&BigInt::from(m - j));
        let right = alpha.scale(&BigInt::from(j));
        left.add(&right)?.div(&Exact::integer(mb.clone()))
    };
    let mut left = b.clone();
    let mut right = alpha.clone();
    let mut right_sample = report.alpha.clone();
    let mut left_sample = r_b;
    for j in 1..=m {
        let x = if j == m { alpha.clone() } else { point(j)? };
        let s = if j == m { report.alpha.clone() } else { est(&x)? };
        report.grid.push(s.clone());
        if s.r_lower >= rho {
            right = x;
            right_sample = s;
            break;
        }
        left = x;
        left_sample = s;
    }
    for _ in 0..p.refine_steps {
        let mid = midpoint(&left, &right)?;
        let s = est(&mid)?;
        if s.r_lower >= rho {
            right = mid;
            right_sample = s;
        } else {
            left = mid;
            left_sample = s;
        }
    }
    report.c = Some(right_sample);
    report.c_left = Some(left_sample);

    let c = right;
    let c_cf = cf_of_exact(&c, RationalForm::Short);
    let tail = default_tail();
    for i in 1..=p.n_terms {
        let n = if c.is_rational() { i } else { 2 * i };
        let t = special_sequence_main(&c_cf, n, &tail)?;
        let sample = est(&t.value)?;
        report.sequence.push(SequenceSample {
            index: n,
            sample,
            bounded_type: bounded_type_exact(&t.cf),
            below_c: t.value.cmp_exact(&c) == std::cmp::Ordering::Less,
        });
    }

    let (lo, hi) = (b.to_f64(), alpha.to_f64());
    report.lipschitz = lipschitz_estimate(fam, (lo.min(hi), lo.max(hi)), p.lipschitz_pairs, 64);
    if let Exact::Rational(r) = &c {
        let q = r.den().to_u64().unwrap_or(u64::MAX);
        let cp = const_cprime(report.lipschitz.max(1.0), q, &p.constants)?;
        report.c_denominator = Some(q);
        report.band_as_written = (rho, rho / cp.exp());
        report.band_reoriented = (rho * (-cp).exp(), rho);
    }
    if let Some(last) = report.sequence.last() {
        let lo = report.band_reoriented.0.min(report.band_as_written.1);
        let hi = report.band_reoriented.1.max(report.band_as_written.0);
        report.approaches_band = last.sample.r_lower >= lo - p.band_tol && last.sample.r_lower <= hi + p.band_tol;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainLemmaParams {
    pub n_terms: usize,
    /// Number of final terms forming the tail window.
    pub tail_window: usize,
    pub order: usize,
    pub escape: EscapeParams,
    pub constants: ConstantConfig,
}

impl Default for MainLemmaParams {
    fn default() -> Self {
        MainLemmaParams {
            n_terms: 12,
            tail_window: 6,
            order: 512,
            escape: EscapeParams::default(),
            constants: ConstantConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainLemmaReport {
    pub alpha_text: String,
    pub q: u64,
    pub variant: RationalForm,
    pub lipschitz: f64,
    pub samples: Vec<RadiusSample>,
    pub tail_min: f64,
    pub bound_c: f64,
    pub bound_cprime: f64,
    pub above_c: bool,
    pub above_cprime: bool,
}

/// Radius estimates along the special sequence of `p/q` (in the chosen expansion),
/// with the tail minimum compared against `exp(-C)` and `exp(-C')`.
pub fn main_lemma_probe(
    fam: &GermFamily,
    alpha: &Rational,
    variant: RationalForm,
    lipschitz: f64,
    p: &MainLemmaParams,
) -> Result<MainLemmaReport, CombError> {
    let cf = cf_of_rational(alpha, variant);
    let tail = default_tail();
    let terms: Vec<Exact> =
        (1..=p.n_terms).map(|n| special_sequence_main(&cf, n, &tail).map(|t| t.value)).collect::<Result<_, _>>()?;
    let samples: Vec<RadiusSample> =
        terms.par_iter().map(|x| sample_at(fam, x, p.order, &p.escape)).collect::<Result<_, _>>()?;
    let window = p.tail_window.clamp(1, samples.len().max(1));
    let tail_min = samples.iter().rev().take(window).map(|s| s.r_lower).fold(f64::INFINITY, f64::min);
    let q = alpha.den().to_u64().ok_or_else(|| CombError::Input("denominator too large".into()))?;
    let k = lipschitz.max(1.0);
    let bound_c = (-const_c(k, q, &p.constants)?).exp();
    let bound_cprime = (-const_cprime(k, q, &p.constants)?).exp();
    Ok(MainLemmaReport {
        alpha_text: alpha.to_string(),
        q,
        variant,
        lipschitz,
        samples,
        tail_min,
        bound_c,
        bound_cprime,
        above_c: tail_min >= bound_c,
        above_cprime: tail_min >= bound_cprime,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateReport {
    pub samples: Vec<RadiusSample>,
    pub mean: f64,
    /// `(max - min) / mean` of the lower radius estimates.
    pub spread: f64,
    pub looks_degenerate: bool,
}

/// Relative spread of the radius estimates over the given parameters; below 5%
/// the radius behaves as if it did not depend on the parameter.
pub fn degenerate_probe(
    fam: &GermFamily,
    ts: &[Exact],
    order: usize,
    esc: &EscapeParams,
) -> Result<DegenerateReport, CombError> {
    if ts.is_empty() {
        return Err(CombError::Input("no parameters to probe".into()));
    }
    let samples: Vec<RadiusSample> = ts.par_iter().map(|x| sample_at(fam, x, order, esc)).collect::<Result<_, _>>()?;
    let lows: Vec<f64> = samples.iter().map(|s| s.r_lower).collect();
    let mean = lows.iter().sum::<f64>() / lows.len() as f64;
    let max = lows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = lows.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if mean > 0.0 { (max - min) / mean } else { f64::INFINITY };
    Ok(DegenerateReport { samples, mean, spread, looks_degenerate: spread < 0.05 })
}

/// What was checked for one construction stage, recomputed from the stored data.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificates {
    pub nested: bool,
    pub length: bool,
    pub contains_theta: bool,
    pub interior_of_previous: bool,
    pub lattice_distance: bool,
    pub derivative_ladder: bool,
    pub rho_decreasing: bool,
    pub rho_tracking: bool,
    pub bounded_type: bool,
}

impl Certificates {
    pub fn all(&self) -> bool {
        self.nested
            && self.length
            && self.contains_theta
            && self.interior_of_previous
            && self.lattice_distance
            && self.derivative_ladder
            && self.rho_decreasing
            && self.rho_tracking
            && self.bounded_type
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub stage: usize,
    /// Exact value in continued fraction notation.
    pub theta_text: String,
    pub theta_float: f64,
    pub rho_n: f64,
    pub r_lower: f64,
    #[serde(with = "ext_float")]
    pub r_upper: f64,
    /// Open interval with exact rational end points.
    pub interval: (String, String),
    /// Sup norms on the target disk of the derivatives `0..=stage` of the change of linearizer.
    pub deriv_gaps: Vec<f64>,
    /// Convergent depth and the integer `M` of the candidate `[a_0; ..., a_k, M + tail]`.
    pub depth: usize,
    pub multiplier: String,
    pub certificates: Certificates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    pub order: usize,
    pub escape: EscapeParams,
    /// `rho_n = rho + (rho_0 - rho) * ladder_ratio^n`.
    pub ladder_ratio: f64,
    pub min_depth: usize,
    pub max_depth: usize,
    /// Candidates use `M` up to `2^max_exponent`.
    pub max_exponent: u32,
}

impl Default for DriverParams {
    fn default() -> Self {
        DriverParams {
            order: 600,
            escape: EscapeParams::default(),
            ladder_ratio: 0.95,
            min_depth: 10,
            max_depth: 16,
            max_exponent: 60,
        }
    }
}

fn two_pow_neg(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k).unwrap()
}

fn dyadic_floor(x: &Rational, bits: usize) -> Rational {
    let scale = Rational::from_integer(BigInt::one() << bits);
    Rational::new((x * &scale).floor(), BigInt::one() << bits).unwrap()
}

fn dyadic_ceil(x: &Rational, bits: usize) -> Rational {
    let scale = Rational::from_integer(BigInt::one() << bits);
    let y = x * &scale;
    let f = y.floor();
    let c = if Rational::from_integer(f.clone()) == y { f } else { f + 1 };
    Rational::new(c, BigInt::one() << bits).unwrap()
}

fn rational_lt_exact(r: &Rational, x: &Exact) -> bool {
    Exact::Rational(r.clone()).cmp_exact(x) == std::cmp::Ordering::Less
}

/// `[lo, hi]` contains no point of `(1/n) Z`.
fn avoids_lattice(lo: &Rational, hi: &Rational, n: usize) -> bool {
    let nr = Rational::from_integer(n);
    let a = lo * &nr;
    let b = hi * &nr;
    !a.is_integer() && !b.is_integer() && a.floor() == b.floor()
}

/// Recomputes the certificates of `state` from its stored exact data.
pub fn verify_state(state: &ConstructionState, prev: Option<&ConstructionState>, rho: f64) -> Result<Certificates, CombError> {
    let n = state.stage;
    let theta = parse_exact(&state.theta_text)?;
    let lo: Rational = state.interval.0.parse()?;
    let hi: Rational = state.interval.1.parse()?;
    let mut c = Certificates {
        length: &hi - &lo <= two_pow_neg(n) && lo < hi,
        contains_theta: rational_lt_exact(&lo, &theta) && Exact::Rational(hi.clone()).cmp_exact(&theta).is_gt(),
        bounded_type: bounded_type_exact(&cf_of_exact(&theta, RationalForm::Short)),
        ..Certificates::default()
    };
    let width = (state.r_upper - state.r_lower).abs();
    c.rho_tracking = n == 0 || (state.rho_n >= state.r_lower - width && state.rho_n <= state.r_upper + width);
    match prev {
        None => {
            c.nested = true;
            c.interior_of_previous = true;
            c.lattice_distance = n == 0;
            c.rho_decreasing = state.rho_n > rho;
            c.derivative_ladder = n == 0;
        }
        Some(pr) => {
            let plo: Rational = pr.interval.0.parse()?;
            let phi: Rational = pr.interval.1.parse()?;
            c.nested = plo <= lo && hi <= phi;
            c.interior_of_previous =
                n < 2 || (rational_lt_exact(&plo, &theta) && Exact::Rational(phi.clone()).cmp_exact(&theta).is_gt());
            c.lattice_distance = n == 0 || avoids_lattice(&lo, &hi, n);
            c.rho_decreasing = state.rho_n < pr.rho_n && state.rho_n > rho;
            c.derivative_ladder = state.deriv_gaps.len() == n + 1
                && state.deriv_gaps.iter().enumerate().all(|(j, g)| *g <= 0.5f64.powi((n + j) as i32));
        }
    }
    Ok(c)
}

/// Open interval around `theta` of length at most `2^-n`, inside `prev`, whose
/// closure avoids `(1/n) Z`.
fn choose_interval(theta: &Exact, n: usize, prev: &(Rational, Rational)) -> Option<(Rational, Rational)> {
    let (elo, ehi) = theta.enclose(192);
    for s in (n + 2)..(n + 80) {
        let w = two_pow_neg(s);
        let lo = dyadic_floor(&(&elo - &w), s + 4);
        let hi = dyadic_ceil(&(&ehi + &w), s + 4);
        let ok = &hi - &lo <= two_pow_neg(n)
            && prev.0 <= lo
            && hi <= prev.1
            && rational_lt_exact(&lo, theta)
            && Exact::Rational(hi.clone()).cmp_exact(theta).is_gt()
            && (n == 0 || avoids_lattice(&lo, &hi, n));
        if ok {
            return Some((lo, hi));
        }
    }
    None
}

struct Candidate {
    value: Exact,
    estimate: RadiusEstimate,
}

struct StageSearch<'a> {
    fam: &'a GermFamily,
    p: &'a DriverParams,
    target: f64,
    /// Set once some candidate's radius differs from the previous stage's.
    moved: bool,
    base_r: f64,
}

impl StageSearch<'_> {
    fn tracks(&self, e: &RadiusEstimate) -> bool {
        let w = (e.upper - e.lower).abs();
        self.target >= e.lower - w && self.target <= e.upper + w
    }

    fn evaluate(&mut self, b: &CFExpansion, m: u64) -> Result<Candidate, CombError> {
        let t = special_sequence_main(b, m as usize, &default_tail())?;
        let g = self.fam.family_at(&Param::Exact(t.value.clone()));
        let estimate = estimate_radius(&g, self.p.order, &self.p.escape)?;
        if (estimate.lower - self.base_r).abs() > (estimate.upper - estimate.lower).abs() {
            self.moved = true;
        }
        Ok(Candidate { value: t.value, estimate })
    }

    /// Searches `M` along `[a_0; ..., a_k, M + tail]` for a radius matching the target.
    fn search_depth(&mut self, b: &CFExpansion) -> Result<Option<(u64, Candidate)>, CombError> {
        let mid = |c: &Candidate| 0.5 * (c.estimate.lower + c.estimate.upper);
        let first = self.evaluate(b, 1)?;
        if self.tracks(&first.estimate) {
            return Ok(Some((1, first)));
        }
        if mid(&first) < self.target {
            return Ok(None);
        }
        // exponential search for a multiplier with radius below the target
        let mut lo = 1u64;
        let mut hi = None;
        let mut e = 4;
        while e <= self.p.max_exponent.min(62) {
            let m = 1u64 << e;
            let c = self.evaluate(b, m)?;
            if self.tracks(&c.estimate) {
                return Ok(Some((m, c)));
            }
            if mid(&c) < self.target {
                hi = Some(m);
                break;
            }
            lo = m;
            e += 4;
        }
        let Some(mut hi) = hi else { return Ok(None) };
        while hi - lo > 1 {
            let m = ((lo as f64) * (hi as f64)).sqrt().round() as u64;
            let m = m.clamp(lo + 1, hi - 1);
            let c = self.evaluate(b, m)?;
            if self.tracks(&c.estimate) {
                return Ok(Some((m, c)));
            }
            if mid(&c) < self.target {
                hi = m;
            } else {
                lo = m;
            }
        }
        Ok(None)
    }
}

/// Runs `stages` steps of the nested-interval construction starting at `theta0`,
/// with estimated radii standing in for exact ones. The returned list starts with stage 0.
pub fn smooth_disk_driver(
    fam: &GermFamily,
    theta0: &Exact,
    rho: f64,
    stages: usize,
    p: &DriverParams,
) -> Result<Vec<ConstructionState>, CombError> {
    if theta0.is_rational() {
        return Err(CombError::Input("the starting parameter must be irrational".into()));
    }
    if !(p.ladder_ratio > 0.0 && p.ladder_ratio < 1.0) {
        return Err(CombError::Input(format!("ladder ratio {} not in (0,1)", p.ladder_ratio)));
    }
    let g0 = fam.family_at(&Param::Exact(theta0.clone()));
    let est0 = estimate_radius(&g0, p.order, &p.escape)?;
    if !(rho > 0.0 && rho < est0.lower) {
        return Err(CombError::TargetAboveRadius { rho, r_lower: est0.lower });
    }
    let rho0 = est0.lower;
    let floor0 = theta0.floor();
    let mut interval = (Rational::from_integer(floor0.clone()), Rational::from_integer(floor0 + 1));
    let mut phi_prev: LinearizationSeries = robust_linearization(&g0, p.order)?;
    let mut theta = theta0.clone();
    let mut r_prev = est0.lower;
    let mut states = vec![ConstructionState {
        stage: 0,
        theta_text: Param::Exact(theta0.clone()).text(),
        theta_float: theta0.to_f64(),
        rho_n: rho0,
        r_lower: est0.lower,
        r_upper: est0.upper,
        interval: (interval.0.to_string(), interval.1.to_string()),
        deriv_gaps: Vec::new(),
        depth: 0,
        multiplier: "0".into(),
        certificates: Certificates::default(),
    }];
    states[0].certificates = verify_state(&states[0], None, rho)?;

    for n in 1..=stages {
        let target = rho + (rho0 - rho) * p.ladder_ratio.powi(n as i32);
        let cf_prev = cf_of_exact(&theta, RationalForm::Short);
        let mut search = StageSearch { fam, p, target, moved: false, base_r: r_prev };
        let mut notes = Vec::new();
        let mut accepted = None;
        for k in p.min_depth..=p.max_depth {
            let prefix = cf_prev.prefix(k)?;
            let (_, (q_k, _)) = convergent_pair(&prefix);
            if q_k >= BigInt::from(p.order) {
                notes.push(format!("depth {k}: denominator {q_k} beyond series order"));
                break;
            }
            let b = CFExpansion::finite(prefix[0].clone(), prefix[1..].to_vec())?;
            let Some((m, cand)) = search.search_depth(&b)? else {
                notes.push(format!("depth {k}: no multiplier tracks {target:.4}"));
                continue;
            };
            let g = fam.family_at(&Param::Exact(cand.value.clone()));
            let phi = robust_linearization(&g, p.order)?;
            let gaps = match derivative_gap_norms(&phi, &phi_prev, rho, n) {
                Ok(v) => v,
                Err(e) => {
                    notes.push(format!("depth {k}, M {m}: {e}"));
                    continue;
                }
            };
            if let Some(j) = (0..=n).find(|&j| gaps[j] > 0.5f64.powi((n + j) as i32)) {
                notes.push(format!("depth {k}, M {m}: derivative {j} gap {:.3e} above ladder", gaps[j]));
                continue;
            }
            let Some(iv) = choose_interval(&cand.value, n, &interval) else {
                notes.push(format!("depth {k}, M {m}: no admissible interval"));
                continue;
            };
            accepted = Some((k, m, cand, phi, gaps, iv));
            break;
        }
        let Some((k, m, cand, phi, gaps, iv)) = accepted else {
            if !search.moved {
                return Err(CombError::FamilyUnsuitable(format!(
                    "stage {n}: no candidate radius moved away from {r_prev:.4}; the family looks degenerate"
                )));
            }
            return Err(CombError::StageFailed { stage: n, diagnostics: notes.join("; ") });
        };
        let mut state = ConstructionState {
            stage: n,
            theta_text: Param::Exact(cand.value.clone()).text(),
            theta_float: cand.value.to_f64(),
            rho_n: target,
            r_lower: cand.estimate.lower,
            r_upper: cand.estimate.upper,
            interval: (iv.0.to_string(), iv.1.to_string()),
            deriv_gaps: gaps,
            depth: k,
            multiplier: m.to_string(),
            certificates: Certificates::default(),
        };
        state.certificates = verify_state(&state, states.last(), rho)?;
        theta = cand.value;
        phi_prev = phi;
        r_prev = cand.estimate.lower;
        interval = iv;
        states.push(state);
    }
    Ok(states)
}

/// `(alpha_float, r_lower)` pairs for plotting, one per line.
pub fn plot_pairs(rows: &[ScanRow]) -> String {
    let mut out = String::new();
    for r in rows.iter().filter(|r| !r.method.starts_with("error")) {
        out.push_str(&format!("{} {}\n", r.alpha_float, r.r_lower));
    }
    out
}

/// Lower and upper counts of a scan restricted to a window, used for the comb probe.
pub fn teeth_and_gaps(rows: &[ScanRow], small: f64, large: f64) -> (usize, usize) {
    let gaps = rows.iter().filter(|r| r.r_upper < small).count();
    let teeth = rows.iter().filter(|r| r.r_lower > large).count();
    (teeth, gaps)
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

use std::cmp::Ordering;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siegel_core::arith::{
    const_c, const_cdoubleprime, const_cprime, const_cprime_numeric, cprime_objective, is_bounded_type,
    partial_quotient_sup, ConstantConfig,
};
use siegel_core::cf::{
    cf_of_exact, cf_of_rational, convergents, default_tail, side_and_gap, special_sequence_main, CFExpansion, Exact,
    QuadraticIrrational, Rational, RationalForm,
};
use siegel_core::comb::{
    degenerate_probe, main_lemma_probe, scan_r, farey_grid, smooth_disk_driver, verify_state, DriverParams,
    MainLemmaParams, ScanParams,
};
use siegel_core::germs::{lift_of_germ, lipschitz_estimate, FamilyKind, Germ, GermFamily, LiftMap};
use siegel_core::io::emit_scan_csv;
use siegel_core::linearize::{
    compose_check, estimate_radius, hadamard_radius, linearization_coeffs, pole_cancellation_probe,
    robust_linearization, EscapeParams, PoleVerdict,
};
use siegel_core::param::{rational_param, Param};
use siegel_core::renorm::{build_hj, find_y0, h_of_lift, renormalized_rotation_number, HeightParams, Y0Params};
use siegel_core::series::C64;

/// Outcome of one criterion: the failed checks (empty on success) and a summary.
struct Report {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Report { failures: Vec::new(), notes: Vec::new() }
    }
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn big_below(rng: &mut ChaCha8Rng, bound: &BigInt) -> BigInt {
    let hi: u128 = rng.gen();
    let lo: u128 = rng.gen();
    ((BigInt::from(hi) << 128) + BigInt::from(lo)) % bound
}

// Euclidean algorithm on `num/den`: partial quotients with complete quotients `u/v`,
// independent of the library expansion code.
fn euclid_terms(num: &BigInt, den: &BigInt) -> Vec<(BigInt, BigInt, BigInt)> {
    let mut out = Vec::new();
    let (mut u, mut v) = (num.clone(), den.clone());
    while !v.is_zero() {
        let a = u.div_floor(&v);
        let rem = &u - &a * &v;
        out.push((a, u, v.clone()));
        u = v;
        v = rem;
    }
    out
}

fn sign(n: usize) -> BigInt {
    if n % 2 == 0 {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}

fn criterion_1(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let den_cap = BigInt::from(10).pow(40);
    let mut identities = 0usize;
    for _ in 0..10_000 {
        let den: BigInt = big_below(&mut rng, &den_cap) + 1;
        let num: BigInt = big_below(&mut rng, &(&den * 6)) - &den * 3;
        let alpha = format!("{num}/{den}");
        let terms = euclid_terms(&num, &den);
        let cf = cf_of_rational(&Rational::new(num.clone(), den.clone()).unwrap(), RationalForm::Short);
        let last = terms.len() - 1;
        let conv = convergents(&cf, last).unwrap();
        for (n, (a, _, _)) in terms.iter().enumerate() {
            if cf.term(n).as_ref() != Some(a) {
                r.check(false, format!("term {n} of {alpha} differs from the Euclidean quotient"));
                return;
            }
        }
        for n in 0..=last {
            let (p, q) = (&conv[n].p, &conv[n].q);
            let (pm, qm) = if n == 0 { (BigInt::one(), BigInt::zero()) } else { (conv[n - 1].p.clone(), conv[n - 1].q.clone()) };
            r.check(&pm * q - p * &qm == sign(n), format!("determinant identity at n = {n} for {alpha}"));
            // q_n alpha - p_n = err / den
            let err = q * &num - p * &den;
            if n < last {
                // x_{n+1} = u / v, so the identity reads err (q_n u + q_{n-1} v) = (-1)^n den v
                let (_, u, v) = &terms[n + 1];
                r.check(&err * (q * u + &qm * v) == sign(n) * &den * v, format!("error identity at n = {n} for {alpha}"));
                r.check(err.abs() * &conv[n + 1].q <= den, format!("error bound at n = {n} for {alpha}"));
            } else {
                r.check(err.is_zero(), format!("last convergent of {alpha} is not exact"));
            }
            identities += 3;
        }
        if r.failures.len() > 5 {
            return;
        }
    }

    let one = Exact::integer(1);
    let mut quadratics = 0;
    while quadratics < 1000 {
        let d: i64 = rng.gen_range(2..60);
        let root = (d as f64).sqrt().round() as i64;
        if root * root == d {
            continue;
        }
        let a: i64 = rng.gen_range(-50..50);
        let b: i64 = rng.gen_range(1..20) * if rng.gen::<bool>() { 1 } else { -1 };
        let c: i64 = rng.gen_range(1..30);
        let Ok(x) = QuadraticIrrational::from_i64s(a, b, c, d) else { continue };
        quadratics += 1;
        let alpha = Exact::Quadratic(x);
        let cf = cf_of_exact(&alpha, RationalForm::Short);
        let depth = 30;
        let conv = convergents(&cf, depth + 1).unwrap();
        let mut xk = alpha.clone();
        for n in 0..=depth {
            let an = xk.floor();
            if cf.term(n).as_ref() != Some(&an) {
                r.check(false, format!("term {n} of {alpha} differs from the complete-quotient floor"));
                return;
            }
            let x_next = one.div(&xk.sub(&Exact::integer(an)).unwrap()).unwrap();
            let (p, q) = (&conv[n].p, &conv[n].q);
            let (pm, qm) = if n == 0 { (BigInt::one(), BigInt::zero()) } else { (conv[n - 1].p.clone(), conv[n - 1].q.clone()) };
            r.check(&pm * q - p * &qm == sign(n), format!("determinant identity at n = {n} for {alpha}"));
            let err = alpha.scale(q).add_int(&-p);
            let rhs = Exact::integer(sign(n)).div(&x_next.scale(q).add_int(&qm)).unwrap();
            r.check(err.cmp_exact(&rhs) == Ordering::Equal, format!("error identity at n = {n} for {alpha}"));
            let bound = Exact::Rational(Rational::new(BigInt::one(), conv[n + 1].q.clone()).unwrap());
            let abs_err = if err.signum() == Ordering::Less { err.neg() } else { err };
            r.check(abs_err.cmp_exact(&bound) != Ordering::Greater, format!("error bound at n = {n} for {alpha}"));
            identities += 3;
            xk = x_next;
        }
        if r.failures.len() > 5 {
            return;
        }
    }
    r.note(format!("{identities} exact identities checked"));
}

fn criterion_2(r: &mut Report) {
    let tail = default_tail();
    let irrationals = [
        CFExpansion::golden(),
        CFExpansion::from_i64(0, &[], &[2]).unwrap(),
        CFExpansion::from_i64(0, &[3], &[1, 4]).unwrap(),
        CFExpansion::from_i64(2, &[], &[1, 1, 3]).unwrap(),
    ];
    let golden = CFExpansion::golden();
    let at_40 = special_sequence_main(&golden, 40, &tail).unwrap();
    let gap = side_and_gap(&golden.value(), &at_40.value);
    let threshold = Rational::new(BigInt::one(), BigInt::from(10).pow(30)).unwrap();
    let gap_ok = gap.gap_upper < threshold;
    r.check(gap_ok, format!("golden gap at depth 40 is {:.3e}, not below 1e-30", gap.gap_upper.to_f64()));
    let first = (0..200)
        .find(|&n| {
            let t = special_sequence_main(&golden, n, &tail).unwrap();
            side_and_gap(&golden.value(), &t.value).gap_upper < threshold
        })
        .unwrap();
    r.note(format!("gap first below 1e-30 at depth {first}"));

    let mut outputs = 0;
    for cf in &irrationals {
        let alpha = cf.value();
        let bound = (partial_quotient_sup(cf) + BigInt::one()).max(BigInt::from(2));
        for n in 0..=40 {
            let t = special_sequence_main(cf, n, &tail).unwrap();
            let want = if n % 2 == 0 { Ordering::Less } else { Ordering::Greater };
            r.check(t.value.cmp_exact(&alpha) == want, format!("side at n = {n} for {cf}"));
            r.check(t.cf.value() == t.value, format!("expansion and value disagree at n = {n} for {cf}"));
            r.check(
                t.cf.period().is_some() && is_bounded_type(&t.cf, &bound),
                format!("output {n} for {cf} not of type bounded by {bound}"),
            );
            outputs += 1;
        }
    }
    for (p, q) in [(1, 2), (2, 5), (5, 13)] {
        let rat = Rational::from_i64s(p, q).unwrap();
        for form in [RationalForm::Short, RationalForm::Long] {
            let cf = cf_of_rational(&rat, form);
            for n in 0..=40usize {
                let t = special_sequence_main(&cf, n, &tail).unwrap();
                let bound = partial_quotient_sup(&cf) + BigInt::from(n + 2);
                r.check(
                    t.cf.period().is_some() && is_bounded_type(&t.cf, &bound),
                    format!("output {n} for {p}/{q} not of bounded type"),
                );
                outputs += 1;
            }
        }
    }
    r.note(format!("{outputs} outputs checked for side and type"));
}

// Brute-force undetermined coefficients: [z^n] of g(phi) by explicit power convolution.
fn brute_force_linearizer(alpha: f64, higher: &[C64], order: usize) -> Vec<C64> {
    let rho = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * alpha);
    let mut a = vec![C64::new(0.0, 0.0); order + 1];
    a[1] = C64::new(1.0, 0.0);
    for n in 2..=order {
        let mut rhs = C64::new(0.0, 0.0);
        let mut power = a.clone();
        for b in higher {
            let mut next = vec![C64::new(0.0, 0.0); order + 1];
            for i in 0..=order {
                for j in 0..=order - i {
                    next[i + j] += power[i] * a[j];
                }
            }
            power = next;
            rhs += b * power[n];
        }
        let frac = (n as f64 * alpha).fract();
        let rho_n = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * frac);
        a[n] = rhs / (rho_n - rho);
    }
    a
}

fn criterion_3(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rel: f64 = 0.0;
    let mut worst_compose: f64 = 0.0;
    for case in 0..50 {
        let period: Vec<i64> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..6)).collect();
        let cf = CFExpansion::from_i64(0, &[], &period).unwrap();
        let alpha = Param::Exact(cf.value());
        let degree = rng.gen_range(2..7);
        let higher: Vec<C64> =
            (2..=degree).map(|_| C64::from_polar(rng.gen_range(0.0..0.6), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
        let order = rng.gen_range(5..=30);
        let g = Germ::new(alpha.clone(), &higher, 0.0);
        let phi = linearization_coeffs(&g, order).unwrap();
        let oracle = brute_force_linearizer(alpha.to_f64(), &higher, order);
        for n in 0..=order {
            let rel = (phi.a[n] - oracle[n]).norm() / oracle[n].norm().max(1e-300);
            let rel = if oracle[n].norm() == 0.0 { phi.a[n].norm() } else { rel };
            worst_rel = worst_rel.max(rel);
            r.check(rel <= 1e-12, format!("case {case}: a_{n} relative error {rel:.2e}"));
        }
        let scale = phi.max_abs().max(1.0);
        let res = compose_check(&g, &phi, order) / scale;
        worst_compose = worst_compose.max(res);
        r.check(res <= 1e-10, format!("case {case}: compose residual {res:.2e} of scale"));
    }
    r.note(format!("max relative error {worst_rel:.2e}, max scaled residual {worst_compose:.2e}"));
}

fn criterion_4(r: &mut Report) {
    let fam = GermFamily::quadratic(1.0).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for j in 1..=7 {
        let den = 10i64.pow(j);
        let alpha = rational_param(1, den);
        let phi = linearization_coeffs(&fam.family_at(&alpha), 2).unwrap();
        let got = phi.a[2].norm();
        let closed = 1.0 / (2.0 * (std::f64::consts::PI / den as f64).sin());
        r.check((got / closed - 1.0).abs() < 0.01, format!("|a_2| at 1e-{j} is {got}, closed form {closed}"));
        if let Some((pg, pc)) = prev {
            let ratio = got / pg;
            let want = closed / pc;
            r.check((ratio / want - 1.0).abs() < 0.01, format!("ratio at 1e-{j}: {ratio} vs {want}"));
        }
        prev = Some((got, closed));
    }
    r.note(format!("|a_2| at 1e-7: {:.3e}", prev.unwrap().0));

    let offsets: Vec<f64> = (3..=7).map(|j| 10f64.powi(-j)).collect();
    for q in [2usize, 3, 4, 5] {
        let mut higher = vec![C64::new(0.0, 0.0); q];
        higher[q - 1] = C64::new(1.0, 0.0);
        let flow = GermFamily::new(FamilyKind::Flow(higher), 0.5).unwrap();
        let n = q + 1;
        let rep = pole_cancellation_probe(&flow, 1, q as i64, n, &offsets);
        let nums: Vec<f64> = rep.samples.iter().map(|s| s.numerator).collect();
        let shrinking = nums.windows(2).all(|w| w[1] < w[0]);
        r.check(
            rep.verdict == PoleVerdict::Cancellation && shrinking,
            format!("flow q = {q}: numerators {nums:?} verdict {:?}", rep.verdict),
        );
        r.note(format!("q = {q}: |P| ~ offset^{:.2}", rep.exponent));
    }
}

fn criterion_5(r: &mut Report) {
    let golden = Param::Exact(CFExpansion::golden().value());
    let esc = EscapeParams::default();
    let rot = estimate_radius(&GermFamily::rotation().family_at(&golden), 512, &esc).unwrap();
    r.check(rot.lower >= 0.999, format!("rotation lower {}", rot.lower));
    let quad = GermFamily::quadratic(1.0).unwrap();
    let esc_long = EscapeParams { max_iter: 100_000, ..EscapeParams::default() };
    for (p, q) in [(0, 1), (1, 2), (1, 3)] {
        let est = estimate_radius(&quad.family_at(&rational_param(p, q)), 512, &esc_long).unwrap();
        r.check(est.upper <= 1e-2, format!("quadratic at {p}/{q}: upper {}", est.upper));
        r.note(format!("{p}/{q}: upper {:.4}", est.upper));
    }
    let g = quad.family_at(&golden);
    let est = estimate_radius(&g, 512, &esc).unwrap();
    let width = (est.upper - est.lower) / est.upper;
    r.check(width <= 0.1, format!("golden bracket relative width {width}"));
    let phi = robust_linearization(&g, 512).unwrap();
    let had = hadamard_radius(&phi, 128).unwrap();
    let mid = 0.5 * (est.lower + est.upper);
    let rel = (had.upper - mid).abs() / mid;
    r.check(rel <= 0.1, format!("Hadamard {} vs escape midpoint {mid}", had.upper));
    r.note(format!("golden escape [{:.4}, {:.4}], Hadamard {:.4}", est.lower, est.upper, had.upper));
}

fn criterion_6(r: &mut Report) {
    let golden = Param::Exact(CFExpansion::golden().value());
    let silver = Param::Exact(CFExpansion::from_i64(0, &[], &[2]).unwrap().value());
    let benchmarks = [
        ("rotation golden", GermFamily::rotation().family_at(&golden)),
        ("quadratic golden", GermFamily::quadratic(1.0).unwrap().family_at(&golden)),
        ("quadratic silver", GermFamily::quadratic(1.0).unwrap().family_at(&silver)),
        ("quadratic golden s=1/2", GermFamily::quadratic(0.5).unwrap().family_at(&golden)),
        ("flow golden", GermFamily::riccati_flow().family_at(&golden)),
    ];
    for (name, g) in benchmarks {
        let est = estimate_radius(&g, 512, &EscapeParams::default()).unwrap();
        let lift = lift_of_germ(&g, 256).unwrap();
        let h = h_of_lift(&lift, &HeightParams::default()).unwrap().h;
        let bound = (-2.0 * std::f64::consts::PI * h).exp();
        r.check(est.upper >= bound - 1e-2, format!("{name}: r {} below exp(-2 pi h) = {bound}", est.upper));
        r.note(format!("{name}: r {:.4} vs {:.4}", est.upper, bound));
    }
}

fn criterion_7(r: &mut Report) {
    let cfg = ConstantConfig::default();
    let exps = [
        CFExpansion::golden(),
        CFExpansion::from_i64(0, &[], &[2]).unwrap(),
        CFExpansion::from_i64(0, &[3], &[1, 4]).unwrap(),
    ];
    for cf in &exps {
        let alpha = cf.value().to_f64();
        for k in 1..=3 {
            let s = build_hj(LiftMap::translation(alpha), cf, k).unwrap();
            let y0 = find_y0(&s, &Y0Params::default()).unwrap().y0;
            let s = s.with_y0(y0);
            let height = s.y0 + 20.0 * s.beta.abs();
            let rep = renormalized_rotation_number(&s, height, 1000, &cfg);
            r.check(
                rep.aborted.is_none() && rep.error < 1e-12,
                format!("translation {cf} k = {k}: error {:.2e} ({:?})", rep.error, rep.aborted),
            );
        }
    }
    let golden = CFExpansion::from_i64(0, &[], &[1]).unwrap();
    let g = GermFamily::quadratic(1.0).unwrap().family_at(&Param::Exact(golden.value()));
    let lift = lift_of_germ(&g, 256).unwrap();
    for k in 1..=3 {
        let s = build_hj(lift.clone(), &golden, k).unwrap();
        let y0 = find_y0(&s, &Y0Params::default()).unwrap().y0;
        let s = s.with_y0(y0);
        let height = s.y0 + 20.0 * s.beta.abs();
        let rep = renormalized_rotation_number(&s, height, 1000, &cfg);
        r.check(
            rep.aborted.is_none()
                && rep.error < 1e-3
                && rep.single_pass_violations == 0
                && rep.budget_violations == 0,
            format!(
                "quadratic golden k = {k}: error {:.2e}, violations {}/{}, aborted {:?}",
                rep.error, rep.single_pass_violations, rep.budget_violations, rep.aborted
            ),
        );
        r.note(format!("k = {k}: error {:.1e}", rep.error));
    }
}

fn lipschitz_near(fam: &GermFamily, v: f64) -> f64 {
    lipschitz_estimate(fam, (v - 0.05, v + 0.05), 8, 64)
}

fn criterion_8(r: &mut Report) {
    let fam = GermFamily::quadratic(1.0).unwrap();
    let params = MainLemmaParams { n_terms: 12, ..MainLemmaParams::default() };
    let mut mins = Vec::new();
    for (p, q) in [(1, 2), (1, 3), (2, 5), (3, 8), (5, 13)] {
        let rat = Rational::from_i64s(p, q).unwrap();
        let k = lipschitz_near(&fam, rat.to_f64());
        let rep = main_lemma_probe(&fam, &rat, RationalForm::Short, k, &params).unwrap();
        r.check(rep.tail_min > 0.0, format!("{p}/{q}: tail minimum {}", rep.tail_min));
        mins.push((q, rep.tail_min));
    }
    for w in mins.windows(2) {
        r.check(w[1].1 >= w[0].1 - 0.05, format!("tail minimum drops from q = {} to q = {}", w[0].0, w[1].0));
    }
    r.note(format!("tail minima {:?}", mins.iter().map(|m| (m.0, (m.1 * 1e4).round() / 1e4)).collect::<Vec<_>>()));
}

fn criterion_9(r: &mut Report) {
    let fam = GermFamily::riccati_flow();
    let ts = [
        CFExpansion::golden().value(),
        CFExpansion::from_i64(0, &[], &[2]).unwrap().value(),
        CFExpansion::from_i64(0, &[3], &[3]).unwrap().value(),
    ];
    let esc = EscapeParams::default();
    let rep = degenerate_probe(&fam, &ts, 512, &esc).unwrap();
    r.check(rep.spread < 0.05, format!("spread {}", rep.spread));
    let r_flow = rep.samples.iter().map(|s| s.r_upper).fold(0.0, f64::max);
    let delta = 1.0 - r_flow;
    let width = rep.samples.iter().map(|s| s.r_upper - s.r_lower).fold(0.0, f64::max);
    let params = MainLemmaParams { n_terms: 12, ..MainLemmaParams::default() };
    for (p, q) in [(1, 2), (1, 3)] {
        let rat = Rational::from_i64s(p, q).unwrap();
        let k = lipschitz_near(&fam, rat.to_f64());
        let ml = main_lemma_probe(&fam, &rat, RationalForm::Short, k, &params).unwrap();
        r.check(
            ml.tail_min <= 1.0 - delta + width,
            format!("{p}/{q}: tail minimum {} exceeds 1 - delta = {}", ml.tail_min, 1.0 - delta),
        );
        r.note(format!("{p}/{q}: tail minimum {:.4}", ml.tail_min));
    }
    r.note(format!("spread {:.2e}, delta {:.4}", rep.spread, delta));
}

fn criterion_10(r: &mut Report) {
    let cfg = ConstantConfig::default();
    let mut worst: f64 = 0.0;
    for k in [1.0, 2.0, 10.0, 1000.0] {
        for q in [1u64, 7, 100] {
            let closed = const_cprime(k, q, &cfg).unwrap();
            let numeric = const_cprime_numeric(k, q, &cfg).unwrap();
            let diff = (closed - numeric).abs();
            worst = worst.max(diff);
            r.check(diff <= 1e-10, format!("C'({k},{q}): closed {closed} numeric {numeric}"));
            let h = 1e-3;
            for i in 1..999 {
                let e = i as f64 * 1e-3;
                let f = |x: f64| cprime_objective(x, k, q, &cfg);
                let second = f(e + h) - 2.0 * f(e) + f(e - h).min(f64::MAX);
                if e - h > 0.0 && e + h < 1.0 {
                    r.check(second > 0.0, format!("second difference at eps = {e}, K = {k}, q = {q}"));
                }
            }
        }
    }
    for k in [1.0, 10.0] {
        let values: Vec<[f64; 3]> = (1..=30)
            .map(|j| {
                let q = 1u64 << j;
                [
                    const_c(k, q, &cfg).unwrap(),
                    const_cprime(k, q, &cfg).unwrap(),
                    const_cdoubleprime(k, q, &cfg).unwrap(),
                ]
            })
            .collect();
        for i in 0..3 {
            let decreasing = values.windows(2).all(|w| w[1][i] < w[0][i]);
            r.check(decreasing, format!("constant {i} not decreasing along q = 2^j for K = {k}"));
            r.check(values[29][i] < 1e-6, format!("constant {i} at q = 2^30 is {}", values[29][i]));
        }
    }
    r.note(format!("max |C' closed - numeric| = {worst:.1e}"));
}

fn criterion_11(r: &mut Report) {
    let fam = GermFamily::quadratic(1.0).unwrap();
    let theta0 = CFExpansion::golden().value();
    let params = DriverParams::default();
    let r0 = estimate_radius(&fam.family_at(&Param::Exact(theta0.clone())), params.order, &params.escape).unwrap();
    let rho = 0.5 * r0.lower;
    let states = match smooth_disk_driver(&fam, &theta0, rho, 3, &params) {
        Ok(s) => s,
        Err(e) => {
            r.check(false, format!("driver failed: {e}"));
            return;
        }
    };
    r.check(states.len() == 4, format!("expected stages 0..=3, got {}", states.len()));
    for (i, s) in states.iter().enumerate() {
        r.check(s.certificates.all(), format!("stage {}: {:?}", s.stage, s.certificates));
        let prev = if i == 0 { None } else { Some(&states[i - 1]) };
        match verify_state(s, prev, rho) {
            Ok(c) => r.check(c.all(), format!("stage {} fails independent verification: {c:?}", s.stage)),
            Err(e) => r.check(false, format!("stage {}: {e}", s.stage)),
        }
    }
    let last = states.last().unwrap();
    r.note(format!(
        "rho = {rho:.4}; stage {} rho_n {:.5} in [{:.4}, {:.4}]",
        last.stage, last.rho_n, last.r_lower, last.r_upper
    ));
}

fn criterion_12(r: &mut Report) {
    let fam = GermFamily::quadratic(1.0).unwrap();
    let grid: Vec<Param> = farey_grid(64).into_iter().map(Param::Exact).collect();
    let p = ScanParams::default();
    let one = emit_scan_csv(&scan_r(&fam, &grid, &p, 1).unwrap(), None).unwrap();
    let eight = emit_scan_csv(&scan_r(&fam, &grid, &p, 8).unwrap(), None).unwrap();
    r.check(one == eight, "CSV differs between 1 and 8 workers");
    r.note(format!("{} rows, {} bytes", grid.len(), one.len()));
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn(&mut Report),
    /// Known to fail; the reason is documented in the README.
    known_red: bool,
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "cf exactness", budget: secs(30), run: criterion_1, known_red: false },
        Criterion { id: 2, name: "special sequence", budget: secs(10), run: criterion_2, known_red: true },
        Criterion { id: 3, name: "linearization oracle", budget: secs(60), run: criterion_3, known_red: false },
        Criterion { id: 4, name: "pole dichotomy", budget: secs(60), run: criterion_4, known_red: false },
        Criterion { id: 5, name: "radius sanity", budget: secs(300), run: criterion_5, known_red: false },
        Criterion { id: 6, name: "r-h consistency", budget: secs(300), run: criterion_6, known_red: false },
        Criterion { id: 7, name: "renormalized rotation number", budget: secs(300), run: criterion_7, known_red: false },
        Criterion { id: 8, name: "main lemma trend", budget: secs(600), run: criterion_8, known_red: false },
        Criterion { id: 9, name: "degenerate family", budget: secs(300), run: criterion_9, known_red: false },
        Criterion { id: 10, name: "constants", budget: secs(5), run: criterion_10, known_red: false },
        Criterion { id: 11, name: "construction driver", budget: secs(900), run: criterion_11, known_red: false },
        Criterion { id: 12, name: "determinism", budget: secs(600), run: criterion_12, known_red: false },
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    let mut failed = Vec::new();
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let mut report = Report::new();
        let outcome = catch_unwind(AssertUnwindSafe(|| (c.run)(&mut report)));
        let elapsed = start.elapsed();
        if outcome.is_err() {
            report.failures.push("panicked".into());
        }
        if elapsed > c.budget {
            report.failures.push(format!("took {:.1}s, budget {}s", elapsed.as_secs_f64(), c.budget.as_secs()));
        }
        let pass = report.failures.is_empty();
        let status = if pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {:<30} {status} ({:.1}s)", c.id, c.name, elapsed.as_secs_f64());
        for n in &report.notes {
            println!("    {n}");
        }
        for f in report.failures.iter().take(5) {
            println!("    failed: {f}");
        }
        if !pass {
            failed.push(c.id);
            if !c.known_red {
                unexpected += 1;
            }
        }
    }
    println!("acceptance: {} failed {failed:?}, {unexpected} unexpected", failed.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}

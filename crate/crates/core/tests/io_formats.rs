use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siegel_core::arith::ConstantConfig;
use siegel_core::cf::CFExpansion;
use siegel_core::comb::{Certificates, ConstructionState, ScanRow};
use siegel_core::germs::{lift_of_germ, Germ, GermFamily, GermRecord};
use siegel_core::io::{emit_json, emit_scan_csv, load_json, load_scan_csv, IoError, SCAN_HEADER};
use siegel_core::param::Param;
use siegel_core::renorm::{build_hj, find_y0, renormalized_rotation_number, RenormReport, Y0Params};
use siegel_core::series::C64;

fn random_row(rng: &mut ChaCha8Rng) -> ScanRow {
    let p: u32 = rng.gen_range(0..1000);
    let q: u32 = rng.gen_range(1..1000);
    let lower: f64 = rng.gen_range(0.0..1.0);
    let upper = if rng.gen_bool(0.1) { f64::INFINITY } else { lower + rng.gen_range(0.0..0.01) };
    let method = ["escape", "hadamard", "error:lin.overflow_guard"][rng.gen_range(0..3)];
    ScanRow {
        alpha_text: if rng.gen_bool(0.5) { format!("{p}/{q}") } else { format!("[0;{p},({q})]") },
        alpha_float: p as f64 / q as f64,
        r_lower: lower,
        r_upper: upper,
        method: method.to_string(),
        iterations: rng.gen(),
        wall_time_ms: rng.gen_range(0..100_000),
    }
}

#[test]
fn hundred_random_rows_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let rows: Vec<ScanRow> = (0..100).map(|_| random_row(&mut rng)).collect();
    let text = emit_scan_csv(&rows, Some("abc123")).unwrap();
    assert_eq!(load_scan_csv(&text).unwrap(), rows);
    assert_eq!(text.lines().nth(1), Some(SCAN_HEADER));
}

#[test]
fn malformed_header_is_a_schema_mismatch() {
    let text = emit_scan_csv(&[], None).unwrap();
    let broken = text.replace("r_lower", "r_low");
    assert!(matches!(load_scan_csv(&broken), Err(IoError::SchemaMismatch { .. })));
    let wrong_schema = text.replace("scan_row", "germ");
    assert!(matches!(load_scan_csv(&wrong_schema), Err(IoError::SchemaMismatch { .. })));
    assert!(matches!(load_scan_csv("alpha_text\n"), Err(IoError::SchemaMismatch { .. })));
}

#[test]
fn version_bump_needs_migration() {
    let text = emit_scan_csv(&[], None).unwrap().replace(" v1", " v2");
    match load_scan_csv(&text) {
        Err(IoError::UnsupportedVersion { found: 2, supported: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
    let json = emit_json("germ", &1.5f64, None).unwrap().replace("\"version\": 1", "\"version\": 7");
    assert!(matches!(load_json::<f64>("germ", &json), Err(IoError::UnsupportedVersion { found: 7, .. })));
}

#[test]
fn germ_record_round_trip() {
    let g = Germ::new(Param::Real(0.25), &[C64::new(0.5, -0.25), C64::new(0.0, 1.0)], 0.0);
    let text = emit_json("germ", &g.to_record(), Some("d")).unwrap();
    let back = Germ::from_record(&load_json::<GermRecord>("germ", &text).unwrap()).unwrap();
    assert_eq!(back.coeffs(), g.coeffs());
    assert!(matches!(load_json::<GermRecord>("scan_row", &text), Err(IoError::SchemaMismatch { .. })));
}

#[test]
fn renorm_report_round_trip() {
    let cf = CFExpansion::from_i64(0, &[], &[1]).unwrap();
    let g = GermFamily::quadratic(1.0).unwrap().family_at(&Param::Exact(cf.value()));
    let s = build_hj(lift_of_germ(&g, 128).unwrap(), &cf, 2).unwrap();
    let y0 = find_y0(&s, &Y0Params::default()).unwrap().y0;
    let s = s.with_y0(y0);
    let rep = renormalized_rotation_number(&s, y0 + 20.0 * s.beta.abs(), 50, &ConstantConfig::default());
    let text = emit_json("renorm_report", &rep, None).unwrap();
    assert_eq!(load_json::<RenormReport>("renorm_report", &text).unwrap(), rep);
}

#[test]
fn construction_state_round_trip() {
    let state = ConstructionState {
        stage: 2,
        theta_text: "[1;1,1,4,(2)]".into(),
        theta_float: 1.7,
        rho_n: 0.3,
        r_lower: 0.29,
        r_upper: f64::INFINITY,
        interval: ("13/8".into(), "7/4".into()),
        deriv_gaps: vec![1e-3, 2e-4, 5e-6],
        depth: 3,
        multiplier: "12".into(),
        certificates: Certificates { nested: true, length: true, ..Certificates::default() },
    };
    let text = emit_json("construction", &vec![state.clone()], Some("r")).unwrap();
    assert_eq!(load_json::<Vec<ConstructionState>>("construction", &text).unwrap(), vec![state]);
}

proptest! {
    // Any edit to the schema line is either accepted unchanged or rejected with a typed error.
    #[test]
    fn header_fuzz(line in "[# a-z0-9=_]{0,40}") {
        let text = format!("{line}\n{SCAN_HEADER}\n");
        match load_scan_csv(&text) {
            Ok(rows) => {
                prop_assert!(rows.is_empty());
                prop_assert!(line.starts_with("# siegel scan_row v1"));
            }
            Err(IoError::SchemaMismatch { .. }) | Err(IoError::UnsupportedVersion { .. }) => {}
            Err(e) => prop_assert!(false, "untyped failure {e:?}"),
        }
    }

    #[test]
    fn csv_row_round_trip(seed in any::<u64>(), n in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<ScanRow> = (0..n).map(|_| random_row(&mut rng)).collect();
        let text = emit_scan_csv(&rows, None).unwrap();
        prop_assert_eq!(load_scan_csv(&text).unwrap(), rows);
    }
}
